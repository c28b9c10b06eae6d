//! Dense linear-algebra helpers shared by the evolution and asymptotic modules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

/// Spectral norm (largest singular value); infinity for non-finite input.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    if m.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    m.singular_values().max()
}

/// Largest eigenvalue of the symmetric part `(M + Mᵀ)/2`. This is the
/// numerical abscissa: the sharpest constant `ω` with `(Mu, u) <= ω ||u||²`.
pub fn symmetric_part_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.max()
}

/// Reproducible skew-symmetric matrix with unit spectral norm (zero for n = 1).
pub fn seeded_unit_skew(n: usize, seed: u64) -> DMatrix<f64> {
    if n <= 1 {
        return DMatrix::zeros(n, n);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let skew = (&raw - raw.transpose()) * 0.5;
    let norm = spectral_norm(&skew);
    if norm == 0.0 {
        skew
    } else {
        skew / norm
    }
}

/// Reproducible orthogonal matrix (QR factor of a seeded random matrix).
pub fn seeded_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let qr = raw.qr();
        let q = qr.q();
        // A degenerate draw could produce a rank-deficient factor; redraw.
        let residual: DMatrix<f64> = q.transpose() * &q - DMatrix::identity(n, n);
        if q.iter().all(|&v: &f64| v.is_finite()) && residual.iter().all(|&v: &f64| v.abs() < 1e-10)
        {
            return q;
        }
    }
}

/// Reproducible unit vector.
pub fn seeded_unit_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}
