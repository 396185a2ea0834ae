//! Finite-volume Green's functions G_Λ(θ;E) = (H_Λ(θ) − E)^{-1} and the
//! numerical checks of their norm and off-diagonal decay.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{boundary_coupling, LatticeRegion};
use crate::linalg::{eigvalsh, shifted_inverse, spectral_distance};
use crate::operator::OperatorSlice;

/// Relative distance to the spectrum below which a solve is refused.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Entries below this magnitude are excluded from decay fits.
pub const FIT_FLOOR: f64 = 1e-300;

/// G_Λ(θ;E) with the residual ‖(H − E)G − I‖_max ≤ 1e-9 checked.
pub fn green(op: &OperatorSlice, e: f64) -> Result<DMatrix<f64>> {
    let values = eigvalsh(&op.matrix);
    green_with_spectrum(op, e, &values)
}

fn green_with_spectrum(op: &OperatorSlice, e: f64, values: &[f64]) -> Result<DMatrix<f64>> {
    let distance = spectral_distance(values, e);
    let scale = op.matrix.amax().max(1.0);
    if distance < SINGULAR_THRESHOLD * scale {
        return Err(Error::NearSingular { energy: e, distance });
    }
    shifted_inverse(&op.matrix, e, RESIDUAL_TOLERANCE)
}

/// Least-squares slope of −log|G(x,y)| against ‖x − y‖₁ over pairs with
/// distance ≥ cutoff and |G| above the floor. Returns (slope, rms residual, pairs).
pub fn fit_green_decay(g: &DMatrix<f64>, region: &LatticeRegion, cutoff: i64) -> (f64, f64, usize) {
    let mut pts = Vec::new();
    for i in 0..region.len() {
        for j in (i + 1)..region.len() {
            let d = region.site(i).l1_dist(region.site(j));
            let val = g[(i, j)].abs();
            if d >= cutoff.max(1) && val > FIT_FLOOR {
                pts.push((d as f64, -val.ln()));
            }
        }
    }
    let (slope, _, rms) = linear_fit(&pts);
    (slope, rms, pts.len())
}

/// Ordinary least squares y ≈ a·x + b; returns (a, b, rms). Degenerate inputs
/// give a slope of NaN.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (f64::NAN, my, f64::NAN);
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenFunctionReport {
    pub energy: f64,
    pub theta: f64,
    pub sites: usize,
    /// ‖G‖ = 1/dist(σ(H), E)
    pub op_norm: f64,
    pub norm_bound: f64,
    pub norm_ok: bool,
    /// the claimed decay rate γ
    pub claimed_gamma: f64,
    /// pairs with ‖x − y‖₁ ≥ cutoff are held to |G(x,y)| ≤ e^{−γ‖x−y‖₁}
    pub cutoff: i64,
    /// max over checked pairs of |G(x,y)|·e^{γ‖x−y‖₁}; ≤ 1 means the bound holds
    pub max_violation: f64,
    pub decay_violations: usize,
    pub decay_ok: bool,
    /// fitted rate over the same pairs; NaN when fewer than two pairs qualify
    pub gamma_hat: f64,
    pub fit_residual: f64,
    pub fit_pairs: usize,
    /// sup_x Σ_y |G(x,y)|
    pub schur_sum: f64,
}

impl GreenFunctionReport {
    pub fn passed(&self) -> bool {
        self.norm_ok && self.decay_ok
    }
}

/// Checks ‖G‖ ≤ norm_bound and |G(x,y)| ≤ e^{−γ‖x−y‖₁} for ‖x−y‖₁ ≥ cutoff.
pub fn check_green_bounds(
    op: &OperatorSlice,
    e: f64,
    norm_bound: f64,
    gamma: f64,
    cutoff: i64,
) -> Result<GreenFunctionReport> {
    let values = eigvalsh(&op.matrix);
    let g = green_with_spectrum(op, e, &values)?;
    let op_norm = 1.0 / spectral_distance(&values, e);
    let region = &op.region;
    let n = region.len();
    let mut log_violation = f64::NEG_INFINITY;
    let mut violations = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = region.site(i).l1_dist(region.site(j));
            if d < cutoff.max(1) {
                continue;
            }
            let val = g[(i, j)].abs();
            if val == 0.0 {
                continue;
            }
            // log(|G| e^{γd}); γ = ∞ (ε = 0) demands G(x,y) = 0 exactly
            let lv = if gamma.is_infinite() {
                f64::INFINITY
            } else {
                val.ln() + gamma * d as f64
            };
            if lv > 0.0 {
                violations += 1;
            }
            log_violation = log_violation.max(lv);
        }
    }
    let schur_sum = (0..n)
        .map(|i| g.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (gamma_hat, fit_residual, fit_pairs) = fit_green_decay(&g, region, cutoff);
    Ok(GreenFunctionReport {
        energy: e,
        theta: op.theta.value(),
        sites: n,
        op_norm,
        norm_bound,
        norm_ok: op_norm <= norm_bound,
        claimed_gamma: gamma,
        cutoff,
        max_violation: log_violation.exp(),
        decay_violations: violations,
        decay_ok: violations == 0,
        gamma_hat,
        fit_residual,
        fit_pairs,
        schur_sum,
    })
}

/// γ₀ = |log ε|/2, infinite at ε = 0.
pub fn gamma0(epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        f64::INFINITY
    } else {
        epsilon.ln().abs() / 2.0
    }
}

/// Bounds for a 0-good region at energy E: ‖G‖ ≤ 10/δ₀ and
/// |G(x,y)| ≤ e^{−γ₀‖x−y‖₁} for all x ≠ y. The caller is responsible for
/// |v(θ + x·ω) − E*| ≥ δ₀ on Λ and for E, θ lying in the admissible window.
pub fn check_zero_good_bounds(op: &OperatorSlice, e: f64, delta0: f64) -> Result<GreenFunctionReport> {
    check_green_bounds(op, e, 10.0 / delta0, gamma0(op.epsilon), 1)
}

/// Decay cutoff ⌈l^{5/6}⌉.
pub fn decay_cutoff(length: i64) -> i64 {
    ((length as f64).powf(5.0 / 6.0) - 1e-12).ceil().max(1.0) as i64
}

/// Bounds for an n-good region: ‖G‖ ≤ 10/δ_n and decay at rate γ_n beyond
/// ‖x − y‖₁ ≥ l_n^{5/6}. At n = 0 this is [`check_zero_good_bounds`].
pub fn check_n_good_bounds(
    op: &OperatorSlice,
    stage: usize,
    length: i64,
    delta: f64,
    gamma: f64,
    e: f64,
) -> Result<GreenFunctionReport> {
    if stage == 0 {
        return check_zero_good_bounds(op, e, delta);
    }
    check_green_bounds(op, e, 10.0 / delta, gamma, decay_cutoff(length))
}

/// Max over x ∈ sub, y ∈ outer of
/// |G_outer(x,y) − G_sub(x,y)χ_sub(y) − Σ_{(z,z')} G_sub(x,z)·Γ(z,z')·G_outer(z',y)|
/// where Γ = −ε on the crossing bonds, the coupling removed by restricting.
pub fn check_resolvent_identity(op_outer: &OperatorSlice, sub: &LatticeRegion, e: f64) -> Result<f64> {
    let outer = &op_outer.region;
    let gamma = boundary_coupling(sub, outer)?;
    let op_sub = op_outer.restrict(sub)?;
    let g_out = green(op_outer, e)?;
    let g_sub = green(&op_sub, e)?;
    let eps = op_outer.epsilon;
    let pairs: Vec<(usize, usize)> = gamma
        .pairs
        .iter()
        .map(|(z, zp)| (sub.index_of(z).unwrap(), outer.index_of(zp).unwrap()))
        .collect();
    let mut worst = 0.0f64;
    for (xs, x) in sub.iter().enumerate() {
        let xo = outer.index_of(x).unwrap();
        for (yo, y) in outer.iter().enumerate() {
            let mut rhs = match sub.index_of(y) {
                Some(ys) => g_sub[(xs, ys)],
                None => 0.0,
            };
            for &(z, zp) in &pairs {
                rhs -= g_sub[(xs, z)] * eps * g_out[(zp, yo)];
            }
            worst = worst.max((g_out[(xo, yo)] - rhs).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::FrequencyVector;
    use crate::lattice::Site;
    use crate::linalg::max_abs;
    use crate::operator::assemble;
    use crate::potential::PotentialProfile;
    use crate::torus::TorusPhase;

    fn op_1d(n: i64, theta: f64, eps: f64) -> OperatorSlice {
        assemble(
            &LatticeRegion::cuboid(&[0], &[n - 1]),
            TorusPhase::new(theta),
            eps,
            &PotentialProfile::cosine(),
            &FrequencyVector::golden(),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_closed_form() {
        let op = op_1d(30, 0.31, 0.0);
        let e = 0.123;
        let g = green(&op, e).unwrap();
        for i in 0..30 {
            for j in 0..30 {
                let expect = if i == j { 1.0 / (op.matrix[(i, i)] - e) } else { 0.0 };
                assert!((g[(i, j)] - expect).abs() <= 1e-12 * expect.abs().max(1.0));
            }
        }
        let r = check_zero_good_bounds(&op, e, 0.01).unwrap();
        assert!(r.decay_ok && r.max_violation == 0.0);
    }

    #[test]
    fn two_by_two_and_singular() {
        let op = assemble(
            &LatticeRegion::cuboid(&[0], &[1]),
            TorusPhase::new(0.0),
            0.5,
            &PotentialProfile::cosine(),
            &FrequencyVector::new(vec![0.25], 2.0, 1e-3).unwrap(),
        )
        .unwrap();
        let g = green(&op, 2.0).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[-2.0, -0.5, -0.5, -1.0]) / 1.75;
        assert!(max_abs(&(g - expect)) < 1e-14);
        let lam = eigvalsh(&op.matrix)[0];
        assert!(matches!(green(&op, lam), Err(Error::NearSingular { .. })));
    }

    #[test]
    fn norm_is_inverse_distance_and_symmetric() {
        let op = op_1d(25, 0.2, 0.3);
        let e = 0.05;
        let g = green(&op, e).unwrap();
        assert!(max_abs(&(&g - g.transpose())) < 1e-10);
        let gn = eigvalsh(&g).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let r = check_green_bounds(&op, e, f64::INFINITY, 0.0, 1).unwrap();
        assert!((gn - r.op_norm).abs() <= 1e-9 * gn);
    }

    #[test]
    fn resolvent_identity_trivial_cases() {
        let op = op_1d(12, 0.4, 0.2);
        assert!(check_resolvent_identity(&op, &op.region, 0.3).unwrap() < 1e-14);
        let op0 = op_1d(12, 0.4, 0.0);
        let sub = LatticeRegion::cuboid(&[3], &[7]);
        assert_eq!(check_resolvent_identity(&op0, &sub, 0.3).unwrap(), 0.0);
        let bad = LatticeRegion::from_sites(1, vec![Site::new(vec![40])]).unwrap();
        assert!(check_resolvent_identity(&op, &bad, 0.3).is_err());
    }

    #[test]
    fn resolvent_identity_2d() {
        let op = assemble(
            &LatticeRegion::centered_box(2, 5),
            TorusPhase::new(0.37),
            0.1,
            &PotentialProfile::cosine(),
            &FrequencyVector::sqrt23(),
        )
        .unwrap();
        let sub = LatticeRegion::centered_box(2, 3);
        assert!(check_resolvent_identity(&op, &sub, 0.21).unwrap() <= 1e-8);
    }

    #[test]
    fn fit_recovers_synthetic_rate() {
        let region = LatticeRegion::cuboid(&[0], &[19]);
        let g = DMatrix::from_fn(20, 20, |i, j| (-(0.7) * (i as f64 - j as f64).abs()).exp());
        let (rate, rms, _) = fit_green_decay(&g, &region, 1);
        assert!((rate - 0.7).abs() < 1e-10 && rms < 1e-10);
        assert_eq!(decay_cutoff(1), 1);
        assert_eq!(decay_cutoff(36), 20);
    }
}
