//! Gromov-Hausdorff collapse of a shrinking-fiber torus onto its base circle,
//! and a few optimal bounds between small spaces.
//!
//! cargo run --release --example gh_collapse

use krflab::ghmetric::{self, gh_upper_bound};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ts: Vec<f64> = (0..=10).map(f64::from).collect();
    let series = ghmetric::collapse_series(&ts, 8, 8)?;
    for p in &series.points {
        println!("t = {:>4}  epsilon = {:.6e}", p.t, p.epsilon);
    }
    println!("fit: epsilon ≈ {:.4}·e^(-t/2) + {:.2e}/N_b", series.c1, series.c2);

    let spaces = ghmetric::catalogue();
    for (a, x) in &spaces {
        for (b, y) in &spaces {
            if a < b && x.len() * y.len() <= 16 {
                let bound = gh_upper_bound(x, y);
                println!("{a:>9} vs {b:<9} epsilon = {:.4} ({})", bound.epsilon, bound.flag());
            }
        }
    }
    Ok(())
}
