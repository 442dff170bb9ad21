//! Samples Hermitian matrices near the identity and checks the gap and trace
//! inequalities.
//!
//! cargo run --release --example matrix_lemma

use krflab::maflow::{self, gap_constant};
use nalgebra::DMatrix;
use num::complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, ev: &[f64]) -> DMatrix<Complex64> {
    let n = ev.len();
    let u = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).qr().q();
    let a = &u * maflow::diag(ev) * u.adjoint();
    (&a + a.adjoint()).scale(0.5)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=3 {
        let mut worst: f64 = 0.0;
        for _ in 0..20_000 {
            let ev: Vec<f64> = (0..n).map(|_| 1.0 + rng.gen_range(-0.2..0.2)).collect();
            let eps = (ev.iter().sum::<f64>() - n as f64).max(1.0 - ev.iter().product::<f64>()).max(1e-14);
            if eps >= 1.0 {
                continue;
            }
            let check = maflow::matrix_gap_check(&random_hermitian(&mut rng, &ev), eps)?;
            assert!(check.pass);
            worst = worst.max(check.lhs / check.bound);
        }
        println!("n = {n}: C(n) = {}, worst ‖A-I‖²/(C ε) = {worst:.3}", gap_constant(n));
    }
    let a = random_hermitian(&mut rng, &[0.5, 2.0, 3.0]);
    let b = random_hermitian(&mut rng, &[1.0, 1.5, 0.7]);
    let t = maflow::trace_inequalities_check(&a, &b)?;
    println!(
        "tr_B A = {:.4} <= {:.4}; min eig {:.4} >= {:.4}",
        t.trace, t.trace_bound, t.min_eig, t.min_eig_bound
    );
    Ok(())
}
