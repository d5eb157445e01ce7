//! Gauss rules by the Golub–Welsch eigenvalue method.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights for ∫ e^{−z²} p(z) dz, exact for polynomials of degree < 2n.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(n, std::f64::consts::PI.sqrt(), |k| (k as f64 / 2.0).sqrt())
}

/// Nodes and weights on [−1, 1] with unit weight.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    golub_welsch(n, 2.0, |k| {
        let k = k as f64;
        k / (4.0 * k * k - 1.0).sqrt()
    })
}

fn golub_welsch(n: usize, mu0: f64, offdiag: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = offdiag(k);
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss–Legendre integral of `f` over [a, b] split into `panels`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (z, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            z.iter()
                .zip(&w)
                .map(|(zi, wi)| wi * f(mid + 0.5 * h * zi))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}
