//! Eigenvalue curves θ ↦ E(θ) of parametric block operators: branch tracing,
//! perturbation-formula derivatives, Kato's derivative group at crossings,
//! reflection parity splits and the Morse and separation checks.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Center, LatticeRegion};
use crate::linalg::{eigh, eigvalsh, max_abs};
use crate::msa::ClassTag;
use crate::operator::{reflection_matrix, ParametricOperator};

/// Minimum overlap between consecutive matched eigenvectors.
pub const MATCH_OVERLAP: f64 = 0.9;
/// Relative gap below which a pair counts as crossing.
pub const CROSSING_THRESHOLD: f64 = 1e-10;
/// Gap under which an eigenvalue is treated as degenerate by the derivative formulas.
pub const SIMPLE_GAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSample {
    pub theta: f64,
    pub energy: f64,
    pub psi: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingKind {
    Touch,
    Transversal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub theta: f64,
    pub kind: CrossingKind,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBranch {
    pub samples: Vec<BranchSample>,
    pub class: ClassTag,
    /// index of the partner branch in the same trace
    pub partner: Option<usize>,
    pub symmetry_point: Option<f64>,
    pub crossing: Option<Crossing>,
}

impl EigenBranch {
    pub fn thetas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.energy).collect()
    }
}

/// Sampling policy for [`trace_branches`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePolicy {
    pub base_points: usize,
    pub min_step: f64,
    pub max_points: usize,
    pub symmetry_point: Option<f64>,
}

impl Default for TracePolicy {
    fn default() -> Self {
        TracePolicy {
            base_points: 512,
            min_step: 1e-12,
            max_points: 200_000,
            symmetry_point: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub branches: Vec<EigenBranch>,
    /// smallest distance from a window eigenvalue to the rest of the spectrum
    pub isolation_gap: f64,
    /// smallest |E − 𝓔| over the refined grid (infinite for one branch)
    pub min_pair_gap: f64,
}

struct Slice {
    theta: f64,
    values: Vec<f64>,
    vectors: Vec<DVector<f64>>,
    isolation: f64,
}

fn solve_slice(op: &dyn ParametricOperator, theta: f64, window: (f64, f64)) -> Result<Slice> {
    let (vals, vecs) = eigh(&op.matrix(theta));
    let inside: Vec<usize> = (0..vals.len())
        .filter(|&k| vals[k] >= window.0 && vals[k] <= window.1)
        .collect();
    if inside.len() > 2 {
        // the intruder is the window eigenvalue farthest from the window middle
        let mid = 0.5 * (window.0 + window.1);
        let intruder = inside
            .iter()
            .map(|&k| vals[k])
            .max_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
            .unwrap();
        return Err(Error::WindowOverfull {
            count: inside.len(),
            theta,
            intruder,
        });
    }
    let vals_ref = &vals;
    let isolation = (0..vals.len())
        .filter(|k| !inside.contains(k))
        .flat_map(|k| inside.iter().map(move |&j| (vals_ref[k] - vals_ref[j]).abs()))
        .fold(f64::INFINITY, f64::min);
    Ok(Slice {
        theta,
        values: inside.iter().map(|&k| vals[k]).collect(),
        vectors: inside.iter().map(|&k| vecs.column(k).into_owned()).collect(),
        isolation,
    })
}

fn pair_gap(s: &Slice) -> f64 {
    if s.values.len() == 2 {
        (s.values[1] - s.values[0]).abs()
    } else {
        f64::INFINITY
    }
}

/// Orders `next` so slot k continues `prev` slot k, with signs aligned.
/// Returns the smallest matched overlap.
fn match_to(prev: &[DVector<f64>], next: &mut Slice, degenerate: bool) -> f64 {
    if degenerate && next.vectors.len() == 2 {
        // the eigenspace is two-dimensional; follow the previous vectors into it
        let basis = [next.vectors[0].clone(), next.vectors[1].clone()];
        let proj = |v: &DVector<f64>| &basis[0] * basis[0].dot(v) + &basis[1] * basis[1].dot(v);
        let a = proj(&prev[0]).normalize();
        let mut b = proj(&prev[1]);
        b -= &a * a.dot(&b);
        let b = b.normalize();
        let mean = 0.5 * (next.values[0] + next.values[1]);
        next.values = vec![mean, mean];
        next.vectors = vec![a, b];
    } else if next.vectors.len() == 2 {
        let o = |i: usize, j: usize| prev[i].dot(&next.vectors[j]).abs();
        if o(0, 1) + o(1, 0) > o(0, 0) + o(1, 1) {
            next.vectors.swap(0, 1);
            next.values.swap(0, 1);
        }
    }
    let mut worst = f64::INFINITY;
    for (p, v) in prev.iter().zip(next.vectors.iter_mut()) {
        let d = p.dot(v);
        if d < 0.0 {
            v.neg_mut();
        }
        worst = worst.min(d.abs());
    }
    worst
}

/// Follows the (at most two) eigenvalues of A(θ) inside `window` across
/// `interval`. Eigenvectors are matched by overlap; steps are bisected where
/// the overlap drops below 0.9 or the pair gap falls under ten times the
/// local energy step.
pub fn trace_branches(
    op: &dyn ParametricOperator,
    interval: (f64, f64),
    window: (f64, f64),
    policy: &TracePolicy,
) -> Result<Trace> {
    let (a, b) = interval;
    if !(b > a) || policy.base_points < 2 {
        return Err(Error::InvalidParameter(format!(
            "bad interval [{a}, {b}] or grid of {} points",
            policy.base_points
        )));
    }
    let n = policy.base_points;
    let thetas: Vec<f64> = (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect();
    use rayon::prelude::*;
    let slices: Vec<Slice> = thetas
        .par_iter()
        .map(|&t| solve_slice(op, t, window))
        .collect::<Result<_>>()?;
    let count = slices[0].values.len();
    if count == 0 {
        return Err(Error::InvalidParameter("energy window holds no eigenvalue".into()));
    }
    if let Some(s) = slices.iter().find(|s| s.values.len() != count) {
        return Err(Error::InvalidParameter(format!(
            "window count changes from {count} to {} at θ = {}",
            s.values.len(),
            s.theta
        )));
    }
    let scale = op.matrix(a).amax().max(1.0);
    let degenerate = |s: &Slice| pair_gap(s) < CROSSING_THRESHOLD * scale;

    // sequential matching with on-demand bisection
    let mut pending: Vec<Slice> = slices.into_iter().rev().collect();
    let mut first = pending.pop().unwrap();
    if degenerate(&first) {
        // no history to follow: any orthonormal basis of the pair will do
        first.values = vec![first.values[0]; 2];
    }
    let mut done: Vec<Slice> = vec![first];
    let mut total = n;
    while let Some(next) = pending.pop() {
        let prev = done.last().unwrap();
        let step = next.theta - prev.theta;
        let prev_vecs = prev.vectors.clone();
        let mut trial = Slice {
            theta: next.theta,
            values: next.values.clone(),
            vectors: next.vectors.clone(),
            isolation: next.isolation,
        };
        let deg = degenerate(&trial);
        let overlap = match_to(&prev_vecs, &mut trial, deg);
        // energy step along the matched branches
        let de = prev
            .values
            .iter()
            .zip(&trial.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let close = count == 2 && pair_gap(&trial).min(pair_gap(prev)) < 10.0 * de;
        let needs_split = (overlap < MATCH_OVERLAP || (close && !deg))
            && step > policy.min_step
            && total < policy.max_points;
        if needs_split {
            let mid = solve_slice(op, prev.theta + 0.5 * step, window)?;
            if mid.values.len() != count {
                return Err(Error::InvalidParameter(format!(
                    "window count changes at θ = {}",
                    mid.theta
                )));
            }
            total += 1;
            pending.push(next);
            pending.push(mid);
            continue;
        }
        done.push(trial);
    }

    let isolation_gap = done.iter().map(|s| s.isolation).fold(f64::INFINITY, f64::min);
    let (gap_idx, min_pair_gap) = done
        .iter()
        .enumerate()
        .map(|(i, s)| (i, pair_gap(s)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();

    let crossing = if count == 2 && min_pair_gap < CROSSING_THRESHOLD * scale {
        let diff = |s: &Slice| s.values[0] - s.values[1];
        let before = done[..gap_idx].iter().rev().map(diff).find(|d| d.abs() > 0.0);
        let after = done[gap_idx + 1..].iter().map(diff).find(|d| d.abs() > 0.0);
        let kind = match (before, after) {
            (Some(x), Some(y)) if x.signum() != y.signum() => CrossingKind::Transversal,
            _ => CrossingKind::Touch,
        };
        Some(Crossing {
            theta: done[gap_idx].theta,
            kind,
            gap: min_pair_gap,
        })
    } else {
        None
    };

    let class = if count == 1 { ClassTag::A } else { ClassTag::B };
    let branches = (0..count)
        .map(|k| EigenBranch {
            samples: done
                .iter()
                .map(|s| BranchSample {
                    theta: s.theta,
                    energy: s.values[k],
                    psi: s.vectors[k].clone(),
                })
                .collect(),
            class,
            partner: (count == 2).then_some(1 - k),
            symmetry_point: policy.symmetry_point,
            crossing,
        })
        .collect();
    Ok(Trace {
        branches,
        isolation_gap,
        min_pair_gap,
    })
}

/// Distance from `energy` to the nearest other eigenvalue of `values`
/// (the nearest one itself is taken to be `energy`).
fn simple_gap(values: &[f64], energy: f64) -> f64 {
    let k = crate::linalg::nearest_index(values, energy).unwrap();
    values
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, v)| (v - energy).abs())
        .fold(f64::INFINITY, f64::min)
}

fn ensure_simple(op: &dyn ParametricOperator, theta: f64, energy: f64) -> Result<()> {
    let gap = simple_gap(&eigvalsh(&op.matrix(theta)), energy);
    if gap <= SIMPLE_GAP {
        return Err(Error::Degenerate { energy, gap });
    }
    Ok(())
}

/// dE/dθ = ⟨ψ, A'(θ)ψ⟩ at a simple eigenvalue.
pub fn derivative_first(op: &dyn ParametricOperator, sample: &BranchSample) -> Result<f64> {
    ensure_simple(op, sample.theta, sample.energy)?;
    let d = op.derivative(sample.theta);
    Ok(sample.psi.dot(&(&d * &sample.psi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondDerivativeMode {
    Full,
    TwoLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondDerivative {
    pub value: f64,
    /// ⟨ψ, A''ψ⟩
    pub curvature: f64,
    /// −2⟨A'ψ, G^⊥(E) A'ψ⟩
    pub coupling: f64,
    /// 2⟨ψ, A'Ψ⟩²/(E − 𝓔), two-level mode only
    pub crossing_term: Option<f64>,
    /// −2⟨A'ψ, G^⊥⊥(E) A'ψ⟩, two-level mode only
    pub remainder: Option<f64>,
    pub residual: f64,
}

/// Solves (A − E)x = w on the orthogonal complement of `deflate`, whose
/// vectors are orthonormal eigenvectors. Returns x and the residual.
fn deflated_solve(
    a: &DMatrix<f64>,
    energy: f64,
    deflate: &[&DVector<f64>],
    w: &DVector<f64>,
) -> Result<(DVector<f64>, f64)> {
    let n = a.nrows();
    let mut w = w.clone();
    for q in deflate {
        w -= *q * q.dot(&w);
    }
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= energy;
    }
    let shift = 1.0 + a.amax();
    for q in deflate {
        m += (*q * q.transpose()) * shift;
    }
    let x = m
        .clone()
        .lu()
        .solve(&w)
        .ok_or(Error::NearSingular { energy, distance: 0.0 })?;
    let mut r = a * &x - &x * energy - &w;
    for q in deflate {
        r -= *q * q.dot(&r);
    }
    let residual = r.amax() / w.amax().max(f64::MIN_POSITIVE);
    if !(residual <= 1e-8) {
        return Err(Error::SolveResidual { residual });
    }
    Ok((x, residual))
}

/// d²E/dθ² = ⟨ψ,A''ψ⟩ − 2⟨A'ψ, G^⊥(E)A'ψ⟩. In two-level mode the partner
/// eigenpair (𝓔, Ψ) is split out of the resolvent term.
pub fn derivative_second(
    op: &dyn ParametricOperator,
    sample: &BranchSample,
    mode: SecondDerivativeMode,
    partner: Option<(f64, &DVector<f64>)>,
) -> Result<SecondDerivative> {
    ensure_simple(op, sample.theta, sample.energy)?;
    let a = op.matrix(sample.theta);
    let d1 = op.derivative(sample.theta);
    let d2 = op.second_derivative(sample.theta);
    let psi = &sample.psi;
    let e = sample.energy;
    let w = &d1 * psi;
    let curvature = psi.dot(&(&d2 * psi));
    let (x, res_full) = deflated_solve(&a, e, &[psi], &w)?;
    let coupling = -2.0 * w.dot(&x);
    let mut out = SecondDerivative {
        value: curvature + coupling,
        curvature,
        coupling,
        crossing_term: None,
        remainder: None,
        residual: res_full,
    };
    if mode == SecondDerivativeMode::TwoLevel {
        let (pe, pv) = partner.ok_or(Error::MissingPartner)?;
        if (pe - e).abs() <= SIMPLE_GAP {
            return Err(Error::Degenerate {
                energy: e,
                gap: (pe - e).abs(),
            });
        }
        let overlap = pv.dot(&w);
        let cross = 2.0 * overlap * overlap / (e - pe);
        let rem = if a.nrows() > 2 {
            let (y, res) = deflated_solve(&a, e, &[psi, pv], &w)?;
            out.residual = out.residual.max(res);
            -2.0 * w.dot(&y)
        } else {
            0.0
        };
        out.crossing_term = Some(cross);
        out.remainder = Some(rem);
    }
    Ok(out)
}

/// Eigenvalues of P A'(θ_c) P on the two-dimensional eigenspace of A(θ_c)
/// nearest `energy`: the one-sided derivatives of the two curves through the
/// double point.
pub fn crossing_derivative_group(
    op: &dyn ParametricOperator,
    theta_c: f64,
    energy: f64,
    tolerance: f64,
) -> Result<(f64, f64)> {
    let (vals, vecs) = eigh(&op.matrix(theta_c));
    let k = crate::linalg::nearest_index(&vals, energy)
        .ok_or(Error::DegeneracyDimension(0))?;
    let cluster: Vec<usize> = (0..vals.len())
        .filter(|&j| (vals[j] - vals[k]).abs() <= tolerance)
        .collect();
    if cluster.len() != 2 {
        return Err(Error::DegeneracyDimension(cluster.len()));
    }
    let u = DMatrix::from_columns(&[vecs.column(cluster[0]), vecs.column(cluster[1])]);
    let g = u.transpose() * op.derivative(theta_c) * &u;
    let ev = eigvalsh(&g);
    Ok((ev[0], ev[1]))
}

/// Splits a two-dimensional eigenspace of a reflection-symmetric block into
/// one symmetric and one antisymmetric unit vector under ψ ↦ ψ(2c − ·).
pub fn symmetric_antisymmetric_split(
    region: &LatticeRegion,
    center: &Center,
    h: &DMatrix<f64>,
    basis: &DMatrix<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if basis.ncols() != 2 || basis.nrows() != region.len() {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: basis.ncols(),
        });
    }
    let r = reflection_matrix(region, center)?;
    let comm = max_abs(&(&r * h - h * &r));
    if comm > 1e-8 {
        return Err(Error::NotReflectionSymmetric(comm));
    }
    let q = basis.clone().qr().q();
    let rr = q.transpose() * &r * &q;
    let rr = (&rr + rr.transpose()) * 0.5;
    let (vals, vecs) = eigh(&rr);
    // parities are ±1; a pure space has both of one sign
    if vals[0] > 0.0 || vals[1] < 0.0 {
        return Err(Error::ParityPure);
    }
    let mut anti = &q * vecs.column(0);
    let mut sym = &q * vecs.column(1);
    crate::linalg::fix_sign(&mut sym);
    crate::linalg::fix_sign(&mut anti);
    Ok((sym, anti))
}

/// ψ = Aφ + Bφ̃ + remainder with A² + B² = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelDecomposition {
    pub a: f64,
    pub b: f64,
    pub base_pair: (DVector<f64>, DVector<f64>),
    pub residual: f64,
}

pub fn two_level_decomposition(
    psi: &DVector<f64>,
    inner: &DVector<f64>,
    inner_tilde: &DVector<f64>,
) -> Result<TwoLevelDecomposition> {
    if psi.len() != inner.len() || psi.len() != inner_tilde.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.len(),
            got: inner.len(),
        });
    }
    let a = psi.dot(inner);
    let b = psi.dot(inner_tilde);
    let norm = a.hypot(b);
    if norm == 0.0 {
        return Err(Error::InvalidParameter("ψ is orthogonal to the base pair".into()));
    }
    let (a, b) = (a / norm, b / norm);
    let residual = (psi - inner * a - inner_tilde * b).norm();
    Ok(TwoLevelDecomposition {
        a,
        b,
        base_pair: (inner.clone(), inner_tilde.clone()),
        residual,
    })
}

/// Largest |{E(θ_s + t), 𝓔(θ_s + t)} − {E(θ_s − t), 𝓔(θ_s − t)}| over `ts`,
/// comparing the sorted window eigenvalues directly.
pub fn union_symmetry_defect(
    op: &dyn ParametricOperator,
    theta_s: f64,
    window: (f64, f64),
    ts: &[f64],
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in ts {
        let plus = solve_slice(op, theta_s + t, window)?.values;
        let minus = solve_slice(op, theta_s - t, window)?.values;
        if plus.len() != minus.len() {
            return Ok(f64::INFINITY);
        }
        for (p, m) in plus.iter().zip(&minus) {
            worst = worst.max((p - m).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Passed,
    Failed,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MorseReport {
    pub status: CheckStatus,
    pub delta: f64,
    pub theta_s: f64,
    /// sign of E'' where |E'| ≤ δ, if consistent
    pub curvature_sign: Option<f64>,
    pub hypothesis_failures: usize,
    pub symmetry_defect: f64,
    pub pairs_checked: usize,
    pub pair_violations: usize,
    pub slope_violations: usize,
    /// min over checked pairs of |E(θ₂) − E(θ₁)| / (M²/2)
    pub worst_pair_ratio: f64,
}

/// Finite-difference E' and E'' on a possibly nonuniform grid (interior points).
fn fd_derivatives(t: &[f64], e: &[f64]) -> Vec<(usize, f64, f64)> {
    (1..t.len() - 1)
        .map(|k| {
            let h0 = t[k] - t[k - 1];
            let h1 = t[k + 1] - t[k];
            let d1 = (e[k + 1] - e[k]) / h1 * h0 / (h0 + h1) + (e[k] - e[k - 1]) / h0 * h1 / (h0 + h1);
            let d2 = 2.0 * ((e[k + 1] - e[k]) / h1 - (e[k] - e[k - 1]) / h0) / (h0 + h1);
            (k, d1, d2)
        })
        .collect()
}

/// Checks the Morse-type lemma on a sampled curve: if |E'| ≤ δ forces
/// |E''| ≥ 2 with one sign, then |E(θ₂) − E(θ₁)| ≥ M²/2 whenever M ≤ δ, with
/// M = min(|θ₂ − θ₁|, |θ₂ + θ₁ − 2θ_s|), and |E'| ≥ min(δ, |θ − θ_s|).
pub fn check_morse_property(thetas: &[f64], values: &[f64], theta_s: f64, delta: f64) -> Result<MorseReport> {
    if thetas.len() != values.len() || thetas.len() < 3 {
        return Err(Error::DimensionMismatch {
            expected: thetas.len(),
            got: values.len(),
        });
    }
    let max_step = thetas.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if thetas.windows(2).any(|w| w[1] <= w[0]) || max_step > delta / 100.0 * (1.0 + 1e-9) {
        return Err(Error::InvalidParameter(format!(
            "grid must be increasing with step ≤ δ/100 (max step {max_step:e})"
        )));
    }
    let fd = fd_derivatives(thetas, values);
    let mut sign = None;
    let mut hypothesis_failures = 0;
    for &(_, d1, d2) in &fd {
        if d1.abs() <= delta {
            if d2.abs() < 2.0 {
                hypothesis_failures += 1;
                continue;
            }
            match sign {
                None => sign = Some(d2.signum()),
                Some(s) if s != d2.signum() => hypothesis_failures += 1,
                _ => {}
            }
        }
    }
    // symmetry about θ_s, by linear interpolation of the reflected point
    let interp = |x: f64| -> Option<f64> {
        let k = thetas.partition_point(|&t| t < x);
        if k == 0 || k == thetas.len() {
            return (k == 0 && (x - thetas[0]).abs() < 1e-15).then(|| values[0]);
        }
        let (t0, t1) = (thetas[k - 1], thetas[k]);
        Some(values[k - 1] + (values[k] - values[k - 1]) * (x - t0) / (t1 - t0))
    };
    let symmetry_defect = thetas
        .iter()
        .zip(values)
        .filter_map(|(&t, &e)| interp(2.0 * theta_s - t).map(|r| (r - e).abs()))
        .fold(0.0, f64::max);

    let mut report = MorseReport {
        status: CheckStatus::Inapplicable,
        delta,
        theta_s,
        curvature_sign: sign,
        hypothesis_failures,
        symmetry_defect,
        pairs_checked: 0,
        pair_violations: 0,
        slope_violations: 0,
        worst_pair_ratio: f64::INFINITY,
    };
    if hypothesis_failures > 0 {
        return Ok(report);
    }
    for i in 0..thetas.len() {
        for j in (i + 1)..thetas.len() {
            let m = (thetas[j] - thetas[i]).abs().min((thetas[j] + thetas[i] - 2.0 * theta_s).abs());
            if m > delta || m == 0.0 {
                continue;
            }
            report.pairs_checked += 1;
            let ratio = (values[j] - values[i]).abs() / (0.5 * m * m);
            report.worst_pair_ratio = report.worst_pair_ratio.min(ratio);
            if ratio < 1.0 - 1e-9 {
                report.pair_violations += 1;
            }
        }
    }
    for &(k, d1, _) in &fd {
        let need = delta.min((thetas[k] - theta_s).abs());
        if d1.abs() < need * (1.0 - 1e-6) {
            report.slope_violations += 1;
        }
    }
    report.status = if report.pair_violations == 0 && report.slope_violations == 0 {
        CheckStatus::Passed
    } else {
        CheckStatus::Failed
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationReport {
    pub theta_s: f64,
    pub delta_prev: f64,
    pub samples: usize,
    pub violations: usize,
    /// min over θ ≠ θ_s of |E − 𝓔| / (δ_prev²|θ − θ_s|)
    pub worst_ratio: f64,
    pub worst_theta: Option<f64>,
}

impl SeparationReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// |E(θ) − 𝓔(θ)| ≥ δ_prev²·|θ − θ_s| on every common sample, up to roundoff.
pub fn check_separation_growth(
    first: &EigenBranch,
    second: &EigenBranch,
    theta_s: f64,
    delta_prev: f64,
) -> Result<SeparationReport> {
    if first.samples.len() != second.samples.len()
        || first
            .samples
            .iter()
            .zip(&second.samples)
            .any(|(a, b)| a.theta != b.theta)
    {
        return Err(Error::DimensionMismatch {
            expected: first.samples.len(),
            got: second.samples.len(),
        });
    }
    let mut report = SeparationReport {
        theta_s,
        delta_prev,
        samples: first.samples.len(),
        violations: 0,
        worst_ratio: f64::INFINITY,
        worst_theta: None,
    };
    let d2 = delta_prev * delta_prev;
    for (a, b) in first.samples.iter().zip(&second.samples) {
        let dist = (a.theta - theta_s).abs();
        let gap = (a.energy - b.energy).abs();
        // eigenvalue gaps below roundoff cannot witness a violation
        let floor = 64.0 * f64::EPSILON * a.energy.abs().max(b.energy.abs()).max(1.0);
        if gap + floor < d2 * dist {
            report.violations += 1;
        }
        if d2 * dist > floor {
            let ratio = gap / (d2 * dist);
            if ratio < report.worst_ratio {
                report.worst_ratio = ratio;
                report.worst_theta = Some(a.theta);
            }
        }
    }
    Ok(report)
}

/// Samples of a Class-B branch where |dE/dθ| < min(δ_prev², |θ − θ_n|).
pub fn slope_lower_bound_violations(
    op: &dyn ParametricOperator,
    branch: &EigenBranch,
    theta_n: f64,
    delta_prev: f64,
) -> Result<usize> {
    let mut bad = 0;
    for s in &branch.samples {
        let slope = match derivative_first(op, s) {
            Ok(x) => x,
            Err(Error::Degenerate { .. }) => continue,
            Err(e) => return Err(e),
        };
        if slope.abs() < (delta_prev * delta_prev).min((s.theta - theta_n).abs()) {
            bad += 1;
        }
    }
    Ok(bad)
}

/// One CSV row per branch sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub branch: usize,
    pub theta: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "dE_formula")]
    pub de_formula: Option<f64>,
    #[serde(rename = "dE_fd")]
    pub de_fd: f64,
    pub gap: f64,
    pub class: String,
}

/// Evaluates formula and central-difference slopes along every branch.
pub fn branch_rows(op: &dyn ParametricOperator, branches: &[EigenBranch], fd_step: f64) -> Vec<BranchRow> {
    let near = |theta: f64, e: f64| {
        let vals = eigvalsh(&op.matrix(theta));
        vals[crate::linalg::nearest_index(&vals, e).unwrap()]
    };
    let mut rows = Vec::new();
    for (k, b) in branches.iter().enumerate() {
        for s in &b.samples {
            let vals = eigvalsh(&op.matrix(s.theta));
            let slope_guess = derivative_first(op, s).ok();
            let guess = slope_guess.unwrap_or(0.0) * fd_step;
            let fd = (near(s.theta + fd_step, s.energy + guess) - near(s.theta - fd_step, s.energy - guess))
                / (2.0 * fd_step);
            rows.push(BranchRow {
                branch: k,
                theta: s.theta,
                energy: s.energy,
                de_formula: slope_guess,
                de_fd: fd,
                gap: simple_gap(&vals, s.energy),
                class: format!("{:?}", b.class),
            });
        }
    }
    rows
}
