//! Spectral statistics of finite-volume operators: eigenvalue counts, IDS
//! window increments, dynamical moments, the arithmetic phase condition,
//! eigenvector decay fits and the trial-function lemma.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::eigencurve::CheckStatus;
use crate::error::{Error, Result};
use crate::frequency::for_each_lattice_vector;
use crate::green::linear_fit;
use crate::lattice::{LatticeRegion, Site};
use crate::linalg::{eigh, eigvalsh, spectral_distance};
use crate::operator::{assemble, OperatorSlice};
use crate::torus::torus_norm;

/// #{λ ∈ σ(M) : |λ − E*| ≤ η}.
pub fn count_in_window(values: &[f64], e_star: f64, eta: f64) -> usize {
    values.iter().filter(|l| (*l - e_star).abs() <= eta).count()
}

pub fn count_eigenvalues_window(op: &OperatorSlice, e_star: f64, eta: f64) -> usize {
    count_in_window(&eigvalsh(&op.matrix), e_star, eta)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingReport {
    pub status: CheckStatus,
    pub eta: f64,
    /// ‖G_{Λ'}(E*)‖
    pub resolvent_norm: f64,
    /// #(Λ∖Λ') + #(Λ'∖Λ)
    pub m: usize,
    pub count: usize,
}

/// If ‖G_{Λ'}(E*)‖ ≤ (2η)⁻¹ then H_Λ has at most 3M eigenvalues in
/// [E* − η, E* + η], M being the size of the symmetric difference.
pub fn check_counting_lemma(
    op: &OperatorSlice,
    lambda_prime: &LatticeRegion,
    e_star: f64,
    eta: f64,
) -> Result<CountingReport> {
    let prime = assemble(lambda_prime, op.theta, op.epsilon, &op.potential, &op.frequency)?;
    let dist = spectral_distance(&eigvalsh(&prime.matrix), e_star);
    let resolvent_norm = 1.0 / dist;
    let m = op.region.difference(lambda_prime).len() + lambda_prime.difference(&op.region).len();
    let count = count_eigenvalues_window(op, e_star, eta);
    let status = if !(resolvent_norm <= 1.0 / (2.0 * eta)) {
        CheckStatus::Inapplicable
    } else if count <= 3 * m {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    };
    Ok(CountingReport {
        status,
        eta,
        resolvent_norm,
        m,
        count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdsReport {
    pub sites: usize,
    pub theta: f64,
    pub e_star: f64,
    pub etas: Vec<f64>,
    /// 𝒩_Λ(E* + η) − 𝒩_Λ(E* − η)
    pub increments: Vec<f64>,
    pub counts: Vec<usize>,
    /// 𝒩_Λ on the energy grid E* ± η
    pub energy_grid: Vec<f64>,
    pub ids: Vec<f64>,
    pub slope: f64,
    pub fit_points: usize,
    pub fit_residual: f64,
    /// rms of log(increment) about the best-fitting C·η^{1/2}·max(1, |log η|^{8d})
    pub log_corrected_residual: f64,
}

/// Windows holding fewer eigenvalues are left out of the slope fit.
pub const MIN_WINDOW_COUNT: usize = 5;

/// 𝒩_Λ(E) = #{λ ≤ E}/#Λ for sorted eigenvalues.
pub fn ids_at(sorted: &[f64], e: f64) -> f64 {
    sorted.partition_point(|&l| l <= e) as f64 / sorted.len() as f64
}

pub fn ids_window_scan(op: &OperatorSlice, e_star: f64, etas: &[f64]) -> IdsReport {
    let vals = eigvalsh(&op.matrix);
    ids_from_spectrum(&vals, op.region.len(), op.region.dim(), op.theta.value(), e_star, etas)
}

/// The scan on a precomputed sorted spectrum.
pub fn ids_from_spectrum(
    sorted: &[f64],
    sites: usize,
    dim: usize,
    theta: f64,
    e_star: f64,
    etas: &[f64],
) -> IdsReport {
    let counts: Vec<usize> = etas.iter().map(|&h| count_in_window(sorted, e_star, h)).collect();
    let increments: Vec<f64> = etas
        .iter()
        .map(|&h| ids_at(sorted, e_star + h) - ids_at(sorted, e_star - h))
        .collect();
    let mut energy_grid: Vec<f64> = etas.iter().flat_map(|&h| [e_star - h, e_star + h]).collect();
    energy_grid.sort_by(f64::total_cmp);
    let ids = energy_grid.iter().map(|&e| ids_at(sorted, e)).collect();
    let pts: Vec<(f64, f64)> = etas
        .iter()
        .zip(&increments)
        .zip(&counts)
        .filter(|(_, &c)| c >= MIN_WINDOW_COUNT)
        .map(|((&h, &inc), _)| (h.ln(), inc.ln()))
        .collect();
    let (slope, _, fit_residual) = linear_fit(&pts);
    let model = |lh: f64| 0.5 * lh + 8.0 * dim as f64 * lh.abs().ln().max(0.0);
    let shifts: Vec<f64> = pts.iter().map(|&(lh, li)| li - model(lh)).collect();
    let log_corrected_residual = if shifts.is_empty() {
        f64::NAN
    } else {
        let mean = shifts.iter().sum::<f64>() / shifts.len() as f64;
        (shifts.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / shifts.len() as f64).sqrt()
    };
    IdsReport {
        sites,
        theta,
        e_star,
        etas: etas.to_vec(),
        increments,
        counts,
        energy_grid,
        ids,
        slope,
        fit_points: pts.len(),
        fit_residual,
        log_corrected_residual,
    }
}

/// n values from `hi` down to `lo`, evenly spaced in log.
pub fn log_spaced(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub q: f64,
    pub theta: f64,
    pub arithmetic_a: Option<f64>,
    pub ts: Vec<f64>,
    /// Σ_x (1 + ‖x‖₁)^q |⟨e^{itH}e₀, e_x⟩| per t
    pub moments: Vec<f64>,
    /// |Σ_x |⟨e^{itH}e₀, e_x⟩|² − 1| per t
    pub unitarity_defects: Vec<f64>,
    /// Σ_α (Σ_x (1 + ‖x‖₁)^q |φ_α(x)|) |φ_α(0)|, bounding every t
    pub proxy: f64,
    pub sup_sampled: f64,
}

impl MomentReport {
    pub fn proxy_dominates(&self) -> bool {
        self.proxy.is_finite() && self.moments.iter().all(|&m| m <= self.proxy * (1.0 + 1e-12))
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.unitarity_defects.iter().copied().fold(0.0, f64::max)
    }
}

/// {0} ∪ {2^k : k = −10..20}.
pub fn default_time_grid() -> Vec<f64> {
    std::iter::once(0.0).chain((-10..=20).map(|k| 2f64.powi(k))).collect()
}

/// Moments of e^{itH}e₀ from the full spectral decomposition of H_Λ(θ).
pub fn moment_sum(op: &OperatorSlice, q: f64, ts: &[f64]) -> Result<MomentReport> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("q = {q} must be positive")));
    }
    let origin = op
        .region
        .index_of(&Site::origin(op.region.dim()))
        .ok_or_else(|| Error::InvalidParameter("region does not contain the origin".into()))?;
    let (vals, phi) = eigh(&op.matrix);
    let weights = DVector::from_iterator(
        op.region.len(),
        op.region.iter().map(|x| (1.0 + x.l1_norm() as f64).powf(q)),
    );
    let at0 = phi.row(origin).transpose();
    let proxy: f64 = (0..vals.len())
        .map(|a| {
            let col = phi.column(a);
            col.iter().zip(weights.iter()).map(|(p, w)| w * p.abs()).sum::<f64>() * at0[a].abs()
        })
        .sum();
    use rayon::prelude::*;
    let per_t: Vec<(f64, f64)> = ts
        .par_iter()
        .map(|&t| {
            let re = DVector::from_iterator(vals.len(), (0..vals.len()).map(|a| (t * vals[a]).cos() * at0[a]));
            let im = DVector::from_iterator(vals.len(), (0..vals.len()).map(|a| (t * vals[a]).sin() * at0[a]));
            let (ar, ai) = (&phi * re, &phi * im);
            let mut moment = 0.0;
            let mut mass = 0.0;
            for x in 0..ar.len() {
                let sq = ar[x] * ar[x] + ai[x] * ai[x];
                mass += sq;
                moment += weights[x] * sq.sqrt();
            }
            (moment, (mass - 1.0).abs())
        })
        .collect();
    let moments: Vec<f64> = per_t.iter().map(|p| p.0).collect();
    Ok(MomentReport {
        q,
        theta: op.theta.value(),
        arithmetic_a: None,
        ts: ts.to_vec(),
        sup_sampled: moments.iter().copied().fold(0.0, f64::max),
        moments,
        unitarity_defects: per_t.iter().map(|p| p.1).collect(),
        proxy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArithmeticReport {
    pub a: f64,
    pub exponent: u32,
    pub radius: u64,
    pub member: bool,
    /// x minimizing ‖2θ + x·ω‖·‖x‖₁^exponent
    pub worst_x: Option<Vec<i64>>,
    pub worst_scaled: f64,
    /// x with ‖2θ + x·ω‖ ≤ A/‖x‖₁^exponent
    pub violations: usize,
}

/// Exhaustive test of ‖2θ + x·ω‖ > A/‖x‖₁^exponent over 0 < ‖x‖₁ ≤ radius.
/// The phase set Θ_A uses exponent d + 1; the complement relation of
/// the localization theorem uses exponent d + 2 with A = 1.
pub fn arithmetic_set_membership(theta: f64, omega: &[f64], a: f64, exponent: u32, radius: u64) -> Result<ArithmeticReport> {
    if radius < 1 {
        return Err(Error::InvalidParameter("radius must be ≥ 1".into()));
    }
    let mut report = ArithmeticReport {
        a,
        exponent,
        radius,
        member: true,
        worst_x: None,
        worst_scaled: f64::INFINITY,
        violations: 0,
    };
    for_each_lattice_vector(omega.len(), radius, |x, n| {
        let phase: f64 = 2.0 * theta + x.iter().zip(omega).map(|(&k, w)| k as f64 * w).sum::<f64>();
        let dist = torus_norm(phase);
        let scaled = dist * (n as f64).powi(exponent as i32);
        if scaled < report.worst_scaled {
            report.worst_scaled = scaled;
            report.worst_x = Some(x.to_vec());
        }
        if !(scaled > a) {
            report.violations += 1;
        }
    });
    report.member = report.violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub center: Site,
    /// slope of −log|ψ(x)| against ‖x − center‖₁; +∞ for a single support point
    pub rate: f64,
    pub residual: f64,
    pub points: usize,
}

/// Below this |ψ(x)| is treated as zero.
pub const DECAY_FLOOR: f64 = 1e-280;

/// Fits the exponential decay of a normalized vector about its peak.
pub fn decay_fit(psi: &DVector<f64>, region: &LatticeRegion) -> Result<DecayFit> {
    decay_fit_above(psi, region, DECAY_FLOOR)
}

/// As [`decay_fit`], ignoring entries with |ψ(x)| ≤ `floor`. Vectors refined
/// by a dense LU are only accurate to about 1e-16 in norm, so their tails
/// should be cut well above that.
pub fn decay_fit_above(psi: &DVector<f64>, region: &LatticeRegion, floor: f64) -> Result<DecayFit> {
    if psi.len() != region.len() || psi.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: region.len(),
            got: psi.len(),
        });
    }
    let center = region.site(psi.iamax()).clone();
    let pts: Vec<(f64, f64)> = region
        .iter()
        .zip(psi.iter())
        .filter(|(_, p)| p.abs() > floor)
        .map(|(x, p)| (x.l1_dist(&center) as f64, -p.abs().ln()))
        .collect();
    let spread = pts.iter().any(|p| p.0 > 0.0);
    let (rate, residual) = if spread {
        let (a, _, r) = linear_fit(&pts);
        (a, r)
    } else {
        (f64::INFINITY, 0.0)
    };
    Ok(DecayFit {
        center,
        rate,
        residual,
        points: pts.len(),
    })
}

/// (site, log|ψ|) rows for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub site: String,
    pub log_abs_psi: f64,
}

pub fn decay_profile(psi: &DVector<f64>, region: &LatticeRegion) -> Vec<ProfileRow> {
    region
        .iter()
        .zip(psi.iter())
        .map(|(x, p)| ProfileRow {
            site: x.coords().iter().map(i64::to_string).collect::<Vec<_>>().join(" "),
            log_abs_psi: p.abs().ln(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub status: CheckStatus,
    pub m: usize,
    pub delta: f64,
    /// the m eigenvalues nearest E*
    pub nearest: Vec<f64>,
    pub sum_sq: f64,
    pub bound: f64,
    /// |E − E*| ≤ δ for m = 1, both within √2·δ for m = 2
    pub corollary_ok: Option<bool>,
}

/// For orthonormal ψ₁..ψ_m with ‖(H − E*)ψ_k‖ ≤ δ, the m eigenvalues nearest
/// E* satisfy Σ(E_k − E*)² ≤ mδ².
pub fn check_trial_function_lemma(h: &DMatrix<f64>, trials: &[DVector<f64>], e_star: f64, delta: f64) -> Result<TrialReport> {
    let m = trials.len();
    if m == 0 || m > h.nrows() {
        return Err(Error::InvalidParameter(format!("need 1..={} trial functions", h.nrows())));
    }
    if trials.iter().any(|t| t.len() != h.nrows()) {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: trials[0].len(),
        });
    }
    let mut applicable = true;
    for i in 0..m {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            if (trials[i].dot(&trials[j]) - target).abs() > 1e-10 {
                applicable = false;
            }
        }
        let r = (h * &trials[i] - &trials[i] * e_star).norm();
        if r > delta * (1.0 + 1e-12) + 1e-15 {
            applicable = false;
        }
    }
    let mut near = eigvalsh(h);
    near.sort_by(|a, b| (a - e_star).abs().total_cmp(&(b - e_star).abs()));
    near.truncate(m);
    let sum_sq: f64 = near.iter().map(|e| (e - e_star).powi(2)).sum();
    let bound = m as f64 * delta * delta;
    let slack = 1e-12 * (1.0 + bound) + 1e-24;
    let corollary_ok = match m {
        1 => Some((near[0] - e_star).abs() <= delta + 1e-12),
        2 => Some(near.iter().all(|e| (e - e_star).abs() <= 2f64.sqrt() * delta + 1e-12)),
        _ => None,
    };
    let status = if !applicable {
        CheckStatus::Inapplicable
    } else if sum_sq <= bound + slack && corollary_ok != Some(false) {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    };
    Ok(TrialReport {
        status,
        m,
        delta,
        nearest: near,
        sum_sq,
        bound,
        corollary_ok,
    })
}
