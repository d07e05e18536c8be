//! Difficulty-aware dataset splits over planning-difficulty buckets.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::DifficultyError;

/// Two-stage difficulty-aware test split.
///
/// Stage 1 takes one object from every non-empty planning-difficulty bucket
/// (highest-frequency buckets first when the quota cannot reach them all).
/// Stage 2 allocates the remaining quota across buckets proportionally to
/// their frequencies by largest remainder, capped by availability.
///
/// Returns (test indices, train indices) into the input slice, both sorted.
pub fn stratified_test_split(
    planning_views: &[usize],
    quota: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DifficultyError> {
    let pool = planning_views.len();
    if quota == 0 || quota > pool {
        return Err(DifficultyError::BadQuota { quota, pool });
    }

    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &d) in planning_views.iter().enumerate() {
        buckets.entry(d).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in buckets.values_mut() {
        members.shuffle(&mut rng);
    }

    let sizes: BTreeMap<usize, usize> =
        buckets.iter().map(|(&k, v)| (k, v.len())).collect();

    // Stage 1: one per bucket, highest-frequency first.
    let mut order: Vec<usize> = buckets.keys().copied().collect();
    order.sort_by_key(|k| (usize::MAX - sizes[k], *k));
    let mut taken: BTreeMap<usize, usize> = buckets.keys().map(|&k| (k, 0)).collect();
    let mut remaining = quota;
    for k in &order {
        if remaining == 0 {
            break;
        }
        taken.insert(*k, 1);
        remaining -= 1;
    }

    // Stage 2: largest-remainder apportionment of the rest, weighted by
    // full bucket frequencies and capped by what is left in each bucket.
    while remaining > 0 {
        let spare: Vec<usize> = order
            .iter()
            .copied()
            .filter(|k| taken[k] < sizes[k])
            .collect();
        debug_assert!(!spare.is_empty(), "quota <= pool guarantees capacity");
        let weight_total: f64 = spare.iter().map(|k| sizes[k] as f64).sum();
        let mut gave = 0;
        let mut fractional: Vec<(f64, usize)> = Vec::new();
        for &k in &spare {
            let ideal = remaining as f64 * sizes[&k] as f64 / weight_total;
            let capacity = sizes[&k] - taken[&k];
            let base = (ideal.floor() as usize).min(capacity);
            *taken.get_mut(&k).unwrap() += base;
            gave += base;
            if taken[&k] < sizes[&k] {
                fractional.push((ideal - ideal.floor(), k));
            }
        }
        let mut left = remaining - gave;
        // Largest remainders first; ties to the bigger bucket, then the
        // smaller difficulty key.
        fractional.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| sizes[&b.1].cmp(&sizes[&a.1]))
                .then_with(|| a.1.cmp(&b.1))
        });
        for (_, k) in fractional {
            if left == 0 {
                break;
            }
            if taken[&k] < sizes[&k] {
                *taken.get_mut(&k).unwrap() += 1;
                left -= 1;
            }
        }
        remaining = left;
    }

    let mut test: Vec<usize> = Vec::with_capacity(quota);
    for (k, members) in &buckets {
        test.extend_from_slice(&members[..taken[k]]);
    }
    test.sort_unstable();
    let in_test: std::collections::HashSet<usize> = test.iter().copied().collect();
    let train: Vec<usize> = (0..pool).filter(|i| !in_test.contains(i)).collect();
    Ok((test, train))
}

/// Bucket-balanced sample: equal quotas over the given planning-difficulty
/// bucket edges, backfilled from the buckets with the most remaining
/// objects when one underflows. Returns sorted indices.
///
/// `bucket_edges` are the lower edges of each bucket beyond the first, so
/// edges `[4, 8]` produce buckets `<4`, `4..8`, `>=8`.
pub fn balanced_train_sample(
    planning_views: &[usize],
    size: usize,
    bucket_edges: &[usize],
    seed: u64,
) -> Result<Vec<usize>, DifficultyError> {
    let pool = planning_views.len();
    if size == 0 || size > pool {
        return Err(DifficultyError::BadQuota { quota: size, pool });
    }

    let bucket_of = |d: usize| bucket_edges.iter().filter(|&&e| d >= e).count();
    let n_buckets = bucket_edges.len() + 1;
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n_buckets];
    for (i, &d) in planning_views.iter().enumerate() {
        buckets[bucket_of(d)].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in buckets.iter_mut() {
        members.shuffle(&mut rng);
    }

    let nonempty = buckets.iter().filter(|b| !b.is_empty()).count();
    let quota = size / nonempty.max(1);
    let mut taken: Vec<usize> = buckets.iter().map(|b| b.len().min(quota)).collect();
    let mut assigned: usize = taken.iter().sum();
    // Trim if equal quotas overshoot (size not divisible by bucket count).
    while assigned > size {
        let i = (0..n_buckets).max_by_key(|&i| (taken[i], n_buckets - i)).unwrap();
        taken[i] -= 1;
        assigned -= 1;
    }
    // Backfill underflow from the buckets with most remaining objects.
    while assigned < size {
        let i = (0..n_buckets)
            .filter(|&i| taken[i] < buckets[i].len())
            .max_by_key(|&i| (buckets[i].len() - taken[i], n_buckets - i))
            .expect("size <= pool guarantees spare capacity");
        taken[i] += 1;
        assigned += 1;
    }

    let mut out: Vec<usize> = Vec::with_capacity(size);
    for (b, members) in buckets.iter().enumerate() {
        out.extend_from_slice(&members[..taken[b]]);
    }
    out.sort_unstable();
    Ok(out)
}
