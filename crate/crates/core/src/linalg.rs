//! Dense symmetric helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues in ascending order.
pub fn eigvalsh(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Eigenpairs with eigenvalues ascending; column k of the matrix belongs to
/// value k. Each column is sign-fixed so its largest-magnitude entry is positive.
pub fn eigh(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = m.nrows();
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[j]);
        let mut col = eig.eigenvectors.column(j).into_owned();
        fix_sign(&mut col);
        vecs.set_column(k, &col);
    }
    (vals, vecs)
}

pub fn fix_sign(v: &mut DVector<f64>) {
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v.neg_mut();
    }
}

/// dist(E, spectrum) for sorted or unsorted eigenvalues.
pub fn spectral_distance(values: &[f64], e: f64) -> f64 {
    values
        .iter()
        .map(|l| (l - e).abs())
        .fold(f64::INFINITY, f64::min)
}

/// Index of the eigenvalue nearest `e`.
pub fn nearest_index(values: &[f64], e: f64) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - e).abs().total_cmp(&(b.1 - e).abs()))
        .map(|(i, _)| i)
}

/// max |A(i,j)|
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// (H − E)^{-1} by LU, with ‖(H − E)G − I‖_max checked against `tol`.
pub fn shifted_inverse(h: &DMatrix<f64>, e: f64, tol: f64) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] -= e;
    }
    let lu = a.clone().lu();
    let g = lu
        .try_inverse()
        .ok_or(Error::NearSingular { energy: e, distance: 0.0 })?;
    let residual = max_abs(&(&a * &g - DMatrix::identity(n, n)));
    if !(residual <= tol) {
        return Err(Error::SolveResidual { residual });
    }
    Ok(g)
}

/// One or two steps of shifted inverse iteration. Dense eigensolvers return
/// tails at the 1e-16 noise floor; this recovers the exponentially small
/// entries of a localized eigenvector.
pub fn refine_eigenvector(h: &DMatrix<f64>, lambda: f64, guess: &DVector<f64>) -> DVector<f64> {
    let n = h.nrows();
    let scale = h.amax().max(1.0);
    let shift = lambda + 1e-12 * scale;
    let mut a = h.clone();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = a.lu();
    let mut x = guess.clone();
    for _ in 0..2 {
        match lu.solve(&x) {
            Some(y) if y.iter().all(|t| t.is_finite()) => {
                let nrm = y.norm();
                x = y / nrm;
            }
            _ => break,
        }
    }
    if x.dot(guess) < 0.0 {
        x.neg_mut();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_eigh_reconstructs() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let (vals, vecs) = eigh(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let recon = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals.clone())) * vecs.transpose();
        assert!(max_abs(&(recon - &m)) < 1e-12);
        assert_eq!(eigvalsh(&m).len(), 3);
        assert!((eigvalsh(&m)[0] - vals[0]).abs() < 1e-12);
    }

    #[test]
    fn inverse_2x2() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.0]);
        let g = shifted_inverse(&h, 2.0, 1e-12).unwrap();
        // H − 2 = [[−1, 0.5], [0.5, −2]], det = 1.75
        let expect = DMatrix::from_row_slice(2, 2, &[-2.0, -0.5, -0.5, -1.0]) / 1.75;
        assert!(max_abs(&(g - expect)) < 1e-14);
    }

    #[test]
    fn refinement_recovers_small_tail() {
        // tridiagonal with tiny hopping: the ground state tail is ~ t^k
        let n = 12;
        let t = 1e-4;
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = i as f64;
            if i + 1 < n {
                h[(i, i + 1)] = t;
                h[(i + 1, i)] = t;
            }
        }
        let (vals, vecs) = eigh(&h);
        let psi = refine_eigenvector(&h, vals[0], &vecs.column(0).into_owned());
        // perturbatively ψ(k) ≈ t^k / k!
        let mut fact = 1.0;
        for k in 1..8 {
            fact *= k as f64;
            let expect = t.powi(k as i32) / fact;
            let rel = (psi[k].abs() - expect).abs() / expect;
            assert!(rel < 1e-3, "k = {k}: {} vs {expect}", psi[k]);
        }
    }
}
