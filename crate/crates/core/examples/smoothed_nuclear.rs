//! The smoothed nuclear norm against the exact one, and singular value
//! shrinkage as the low-rank denoiser behind the graph-only baseline.

use dyngraph::linalg::{
    nuclear_norm, numerical_rank, shrink, singular_values, smoothed_nuclear, smoothed_nuclear_grad, Matrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dyngraph::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 30;

    // rank-3 signal plus small dense noise
    let u = Matrix::from_fn(n, 3, |_, _| rng.random::<f64>());
    let signal = &u * u.transpose();
    let noise = Matrix::from_fn(n, n, |_, _| 0.05 * (rng.random::<f64>() - 0.5));
    let a = &signal + 0.5 * (&noise + noise.transpose());

    let exact = nuclear_norm(&a);
    println!("|A|_* = {exact:.6}");
    for eta in [1e-3, 1e-2, 1e-1, 1.0] {
        let g = smoothed_nuclear(&a, eta)?;
        let grad = smoothed_nuclear_grad(&a, eta)?;
        let spectral = singular_values(&grad)[0];
        println!(
            "eta {eta:<6} g = {g:.6}  gap = {:.3e}  bound n*eta/2 = {:.3e}  |grad|_2 = {spectral:.4}",
            exact - g,
            n as f64 * eta / 2.0
        );
    }

    println!("\nrank after shrinkage:");
    for mu in [0.0, 0.05, 0.2, 1.0] {
        let s = shrink(&a, mu)?;
        println!(
            "mu {mu:<5} rank {:2}  |S - signal|_F / |signal|_F = {:.4}",
            numerical_rank(&singular_values(&s)),
            (&s - &signal).norm() / signal.norm()
        );
    }
    Ok(())
}
