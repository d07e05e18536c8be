//! Difficulty-aware dataset splits on a synthetic long-tailed pool:
//! the stratified test split covers every planning-difficulty bucket, and
//! balanced sampling flattens the training histogram.
//!
//! ```bash
//! cargo run --release --example difficulty_splits
//! ```

use viewbench::difficulty::{balanced_train_sample, stratified_test_split};

fn main() -> anyhow::Result<()> {
    // A long-tailed pool of planning difficulties: geometric bucket sizes.
    let mut pool: Vec<usize> = Vec::new();
    for d in 1..=8usize {
        pool.extend(std::iter::repeat_n(d, 1 << (9 - d)));
    }
    println!("pool: {} objects across 8 difficulty buckets", pool.len());

    let quota = pool.len() / 10;
    let (test, train) = stratified_test_split(&pool, quota, 7)?;
    let histogram = |ids: &[usize]| {
        let mut h = vec![0usize; 9];
        for &i in ids {
            h[pool[i]] += 1;
        }
        h
    };
    println!("\nstratified test split ({quota} objects):");
    println!("{:>10} {:>6} {:>6}", "difficulty", "pool", "test");
    let test_h = histogram(&test);
    for d in 1..=8 {
        println!("{:>10} {:>6} {:>6}", d, 1 << (9 - d), test_h[d]);
    }
    println!("train keeps the remaining {} objects", train.len());

    let sample = balanced_train_sample(&pool, 64, &[3, 5, 7], 7)?;
    let mut buckets = [0usize; 4];
    for &i in &sample {
        buckets[[3, 5, 7].iter().filter(|&&e| pool[i] >= e).count()] += 1;
    }
    println!("\nbalanced 64-object training sample over edges [3, 5, 7]:");
    println!("bucket counts: {buckets:?} (raw sampling would follow the long tail)");
    Ok(())
}
