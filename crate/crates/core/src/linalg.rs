//! Dense eigenvalue helpers and spectrum matching.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 100_000;

/// All eigenvalues of a real, generally non-symmetric matrix.
pub fn eigenvalues_real(m: &DMatrix<f64>) -> Vec<Complex64> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues_hermitian(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// All eigenvalues of a complex matrix, read off the diagonal of its Schur form.
pub fn eigenvalues_complex(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::numeric("complex Schur iteration did not converge", f64::NAN))?;
    let (_, t) = schur.unpack();
    Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
}

/// Largest distance between two spectra after greedy nearest matching.
///
/// Both slices must have the same length. Eigenvalues of `a` are visited in
/// order of decreasing real part and each is paired with the closest
/// still-unmatched eigenvalue of `b`.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spectra of different sizes");
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| a[j].re.total_cmp(&a[i].re).then(a[j].im.total_cmp(&a[i].im)));
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for i in order {
        let (best, dist) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, z)| (j, (z - a[i]).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("spectra of equal size");
        used[best] = true;
        worst = worst.max(dist);
    }
    worst
}

/// Solves `m x = 0` for a one-dimensional kernel by fixing `x[pin] = 1`,
/// followed by a few steps of iterative refinement.
pub fn kernel_vector(m: &DMatrix<f64>, pin: usize) -> Result<DVector<f64>> {
    let n = m.nrows();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    // replace row `pin` by the normalisation condition
    let mut a = m.clone();
    for j in 0..n {
        a[(pin, j)] = if j == pin { 1.0 } else { 0.0 };
    }
    let mut rhs = DVector::zeros(n);
    rhs[pin] = 1.0;
    let lu = a.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::numeric("singular system in kernel solve", f64::NAN))?;
    for _ in 0..3 {
        let r = &rhs - &a * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
    }
    Ok(x)
}
