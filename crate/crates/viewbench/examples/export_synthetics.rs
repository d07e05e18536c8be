//! Builds the synthetic test shapes and exports them as OBJ files.
//!
//! ```bash
//! cargo run --release --example export_synthetics -- out/objects
//! ```

use viewbench::geometry::{make_synthetic, save_obj, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/objects".to_string());
    std::fs::create_dir_all(&dir)?;

    let shapes = [
        ("sphere", SyntheticSpec::Sphere { level: 3 }),
        ("cube", SyntheticSpec::Cube { level: 4 }),
        (
            "torus",
            SyntheticSpec::Torus {
                major: 0.7,
                minor: 0.3,
                level: 4,
            },
        ),
        (
            "open-box",
            SyntheticSpec::OpenBox {
                wall: 0.3,
                opening: 0.6,
            },
        ),
    ];
    for (name, spec) in shapes {
        let mesh = make_synthetic(&spec)?;
        let path = format!("{dir}/{name}.obj");
        save_obj(&mesh, &path)?;
        println!(
            "{path}: {} vertices, {} triangles",
            mesh.vertices().len(),
            mesh.triangle_count()
        );
    }
    Ok(())
}
