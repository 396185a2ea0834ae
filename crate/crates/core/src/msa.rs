//! The scale induction: singular sets Q_n, the Case 1 / Case 2 split, block
//! families, Class A/B tags and the Center Theorem checks.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frequency::FrequencyVector;
use crate::geometry::{build_block_family, mirror_image, BlockFamily, MirrorImage};
use crate::lattice::{Center, LatticeRegion, Site};
use crate::linalg::{eigvalsh, nearest_index};
use crate::operator::assemble;
use crate::potential::PotentialProfile;
use crate::torus::{torus_norm, TorusPhase};

/// Relative band around δ_n inside which the Subcase test is called ambiguous.
pub const CLASS_TOLERANCE: f64 = 1e-6;

/// Everything fixed for one run.
#[derive(Debug, Clone)]
pub struct MsaContext {
    pub ambient: LatticeRegion,
    pub theta_star: f64,
    pub e_star: f64,
    pub epsilon: f64,
    pub potential: PotentialProfile,
    pub omega: FrequencyVector,
}

/// The eigenvalue of H_Λ(θ*) nearest v(θ*).
pub fn reference_energy(
    region: &LatticeRegion,
    theta_star: f64,
    epsilon: f64,
    v: &PotentialProfile,
    omega: &FrequencyVector,
) -> Result<f64> {
    let op = assemble(region, TorusPhase::new(theta_star), epsilon, v, omega)?;
    let values = eigvalsh(&op.matrix);
    let target = v.eval(theta_star);
    Ok(values[nearest_index(&values, target).ok_or(Error::EmptyRegion)?])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSchedule {
    pub epsilon0: f64,
    /// δ₀ = ε₀^{1/20}
    pub delta0: f64,
    /// the first scale; stage 0 splits at 10·l1 and starts l_1 at l1 or l1²
    pub l1: i64,
    /// upper bound on any l_n; the ambient region imposes its own bound too
    pub max_length: Option<i64>,
    /// δ_n for n ≥ 1 (index n − 1); missing entries use e^{−l_n^{2/3}}
    pub delta_overrides: Vec<f64>,
    /// γ₀ = |log ε|/2 of the operator
    pub gamma0: f64,
}

impl ScaleSchedule {
    /// Schedule from δ₀; ε₀ = δ₀^20.
    pub fn from_delta0(delta0: f64, l1: i64, epsilon: f64) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(Error::InvalidParameter(format!("δ₀ = {delta0} must lie in (0,1)")));
        }
        if l1 < 1 {
            return Err(Error::InvalidParameter("l1 must be ≥ 1".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter("the induction needs ε > 0".into()));
        }
        Ok(ScaleSchedule {
            epsilon0: delta0.powi(20),
            delta0,
            l1,
            max_length: None,
            delta_overrides: Vec::new(),
            gamma0: epsilon.ln().abs() / 2.0,
        })
    }

    pub fn from_epsilon0(epsilon0: f64, l1: i64, epsilon: f64) -> Result<Self> {
        let mut s = Self::from_delta0(epsilon0.powf(0.05), l1, epsilon)?;
        s.epsilon0 = epsilon0;
        Ok(s)
    }

    pub fn with_max_length(mut self, max: i64) -> Self {
        self.max_length = Some(max);
        self
    }

    pub fn with_delta_overrides(mut self, deltas: Vec<f64>) -> Self {
        self.delta_overrides = deltas;
        self
    }

    pub fn delta(&self, stage: usize, length: i64) -> f64 {
        if stage == 0 {
            return self.delta0;
        }
        self.delta_overrides
            .get(stage - 1)
            .copied()
            .unwrap_or_else(|| (-(length as f64).powf(2.0 / 3.0)).exp())
    }

    /// γ_n = γ₀(1/2 + 2^{−(n+1)}): γ₀ at n = 0, decreasing to γ₀/2.
    pub fn gamma(&self, stage: usize) -> f64 {
        self.gamma0 * (0.5 + 0.5f64.powi(stage as i32 + 1))
    }

    /// Case 1 iff s_n ≥ this threshold.
    pub fn case_threshold(&self, stage: usize, length: i64) -> f64 {
        if stage == 0 {
            10.0 * self.l1 as f64
        } else {
            10.0 * (length as f64).powi(2)
        }
    }

    /// l_{n+1} before capping.
    pub fn next_length(&self, stage: usize, length: i64, branch: Branch) -> i64 {
        let base = if stage == 0 { self.l1 } else { length };
        match branch {
            Branch::Case1 if stage == 0 => base,
            Branch::Case2 if stage == 0 => base.saturating_mul(base),
            Branch::Case2 => base.saturating_pow(4),
            _ => base.saturating_mul(base),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Initial,
    Case1,
    Case2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassTag {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassInfo {
    pub center: Center,
    pub tag: ClassTag,
    /// the Subcase test landed within the tolerance band
    pub ambiguous: bool,
    /// distances of the two eigenvalues nearest E*
    pub nearest: f64,
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorRecord {
    pub center: Center,
    pub mirror: MirrorImage,
    pub midpoint: Center,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageData {
    pub stage: usize,
    /// how P_n was formed
    pub branch: Branch,
    pub length: i64,
    pub length_capped: bool,
    pub delta: f64,
    pub gamma: f64,
    /// P_n
    pub centers: Vec<Center>,
    /// Q_n ⊆ P_n
    pub singular: Vec<Center>,
    /// dist(σ(H_{B_n}(θ*)), E*) per center of P_n
    pub block_distances: Vec<f64>,
    pub family: Option<BlockFamily>,
    /// s_n; `None` stands for ∞
    pub separation: Option<i64>,
    pub classes: Vec<ClassInfo>,
    pub mu: Option<f64>,
    pub mirrors: Vec<MirrorRecord>,
    /// every stage-(n−1) singular block lies in Λ_{√L}(c) of one stage-n block
    pub kernel_contained: Option<bool>,
    /// candidate centers dropped because their blocks would leave the ambient region
    pub truncated: Vec<Center>,
    /// δ_n < δ_{n−1}/10 and |log δ_n| ≥ 20|log δ_{n−1}|
    pub delta_ratio_ok: Option<bool>,
    pub terminated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleState {
    pub schedule: ScaleSchedule,
    pub stages: Vec<StageData>,
}

impl ScaleState {
    pub fn current(&self) -> &StageData {
        self.stages.last().expect("a state always holds stage 0")
    }

    pub fn stage(&self) -> usize {
        self.current().stage
    }

    pub fn families(&self) -> Vec<BlockFamily> {
        self.stages.iter().filter_map(|s| s.family.clone()).collect()
    }
}

/// Q₀ = {x ∈ Λ : |v(θ* + x·ω) − E*| < δ₀}
pub fn initial_singular_set(
    ambient: &LatticeRegion,
    theta_star: f64,
    e_star: f64,
    v: &PotentialProfile,
    omega: &FrequencyVector,
    delta0: f64,
) -> Vec<Site> {
    ambient
        .iter()
        .filter(|x| {
            let t = TorusPhase::new(theta_star + x.dot(omega.as_slice())).value();
            (v.eval(t) - e_star).abs() < delta0
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResonanceBranch {
    Difference,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceDistance {
    pub value: f64,
    pub argmin_branch: ResonanceBranch,
    pub difference: f64,
    pub sum: f64,
}

/// m(x,y) = min(‖(x − y)·ω‖, ‖2θ* + (x + y)·ω‖)
pub fn resonance_distance(x: &Center, y: &Center, theta_star: f64, omega: &[f64]) -> ResonanceDistance {
    let (xw, yw) = (x.dot(omega), y.dot(omega));
    let difference = torus_norm(xw - yw);
    let sum = torus_norm(2.0 * theta_star + xw + yw);
    let (value, argmin_branch) = if difference <= sum {
        (difference, ResonanceBranch::Difference)
    } else {
        (sum, ResonanceBranch::Sum)
    };
    ResonanceDistance {
        value,
        argmin_branch,
        difference,
        sum,
    }
}

/// Minimal pairwise ℓ¹ distance and the lexicographically first minimizing pair.
fn min_separation(centers: &[Center]) -> Option<(i64, usize, usize)> {
    let mut best: Option<(i64, usize, usize)> = None;
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let d = centers[i].l1_dist_doubled(&centers[j]) / 2;
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, i, j));
            }
        }
    }
    best
}

pub fn initial_state(ctx: &MsaContext, schedule: ScaleSchedule) -> ScaleState {
    let q0 = initial_singular_set(
        &ctx.ambient,
        ctx.theta_star,
        ctx.e_star,
        &ctx.potential,
        &ctx.omega,
        schedule.delta0,
    );
    let centers: Vec<Center> = q0.iter().map(Center::from_site).collect();
    let block_distances = q0
        .iter()
        .map(|x| {
            let t = TorusPhase::new(ctx.theta_star + x.dot(ctx.omega.as_slice())).value();
            (ctx.potential.eval(t) - ctx.e_star).abs()
        })
        .collect();
    let stage0 = StageData {
        stage: 0,
        branch: Branch::Initial,
        length: 1,
        length_capped: false,
        delta: schedule.delta0,
        gamma: schedule.gamma(0),
        separation: min_separation(&centers).map(|s| s.0),
        singular: centers.clone(),
        centers,
        block_distances,
        family: None,
        classes: Vec::new(),
        mu: None,
        mirrors: Vec::new(),
        kernel_contained: None,
        truncated: Vec::new(),
        delta_ratio_ok: None,
        terminated: false,
    };
    ScaleState {
        schedule,
        stages: vec![stage0],
    }
}

/// Largest r with Λ_r(c) ⊆ region for every c.
fn fitting_radius(region: &LatticeRegion, centers: &[Center]) -> i64 {
    let outside: BTreeSet<Site> = region
        .iter()
        .flat_map(|s| s.neighbors().collect::<Vec<_>>())
        .filter(|n| !region.contains(n))
        .collect();
    centers
        .iter()
        .map(|c| {
            let d = outside
                .iter()
                .map(|y| c.l1_dist_doubled_site(y))
                .min()
                .unwrap_or(i64::MAX);
            if contains_center(region, c) { (d - 1) / 2 } else { -1 }
        })
        .min()
        .unwrap_or(i64::MAX)
}

/// A half-integer center counts as inside when its rounded-down lattice point is.
fn contains_center(region: &LatticeRegion, c: &Center) -> bool {
    region.contains(&Site(c.doubled().iter().map(|x| x.div_euclid(2)).collect()))
}

fn block_spectrum_distances(ctx: &MsaContext, family: &BlockFamily) -> Result<Vec<(f64, f64)>> {
    family
        .blocks
        .par_iter()
        .map(|b| {
            let op = assemble(
                &b.sites,
                TorusPhase::new(ctx.theta_star),
                ctx.epsilon,
                &ctx.potential,
                &ctx.omega,
            )?;
            let mut d: Vec<f64> = eigvalsh(&op.matrix)
                .iter()
                .map(|l| (l - ctx.e_star).abs())
                .collect();
            d.sort_by(f64::total_cmp);
            Ok((d[0], d.get(1).copied().unwrap_or(f64::INFINITY)))
        })
        .collect()
}

/// One induction step n → n + 1.
pub fn advance_stage(state: &ScaleState, ctx: &MsaContext) -> Result<ScaleState> {
    let cur = state.current();
    let sched = &state.schedule;
    let n = cur.stage;
    let mut next = StageData {
        stage: n + 1,
        branch: Branch::Case1,
        length: cur.length,
        length_capped: false,
        delta: cur.delta,
        gamma: sched.gamma(n + 1),
        centers: Vec::new(),
        singular: Vec::new(),
        block_distances: Vec::new(),
        family: None,
        separation: None,
        classes: Vec::new(),
        mu: None,
        mirrors: Vec::new(),
        kernel_contained: None,
        truncated: Vec::new(),
        delta_ratio_ok: None,
        terminated: true,
    };
    if cur.singular.is_empty() || cur.terminated {
        let mut out = state.clone();
        out.stages.push(next);
        return Ok(out);
    }

    let s_n = cur.separation;
    let threshold = sched.case_threshold(n, cur.length);
    let branch = match s_n {
        Some(s) if (s as f64) < threshold => Branch::Case2,
        _ => Branch::Case1,
    };
    if branch == Branch::Case2 && cur.branch == Branch::Case2 {
        return Err(Error::ConsecutiveCase2 { stage: n, next: n + 1 });
    }
    next.branch = branch;

    let centers: Vec<Center> = match branch {
        Branch::Case1 => cur.singular.clone(),
        _ => {
            let (_, i, j) = min_separation(&cur.singular).expect("Case 2 needs two centers");
            let (ci, cj) = (&cur.singular[i], &cur.singular[j]);
            let mut mids = BTreeSet::new();
            for c in &cur.singular {
                let m = mirror_image(c, (ci, cj), ctx.theta_star, ctx.omega.as_slice(), cur.delta)?;
                let midpoint = Center::midpoint(c, &m.image);
                mids.insert(midpoint.clone());
                next.mirrors.push(MirrorRecord {
                    center: c.clone(),
                    mirror: m,
                    midpoint,
                });
            }
            mids.into_iter().collect()
        }
    };

    // Blocks must fit in the ambient window. The length is capped at the
    // largest radius that fits some center; centers too close to the edge for
    // that radius are set aside as truncated.
    let natural = sched.next_length(n, cur.length, branch);
    let radii: Vec<i64> = centers
        .iter()
        .map(|c| fitting_radius(&ctx.ambient, std::slice::from_ref(c)))
        .collect();
    let mut length = natural.min(radii.iter().copied().max().unwrap_or(0));
    if let Some(m) = sched.max_length {
        length = length.min(m);
    }
    if length < 1 {
        return Err(Error::InvalidParameter(format!(
            "ambient region cannot hold the stage-{} blocks",
            n + 1
        )));
    }
    let (centers, truncated): (Vec<_>, Vec<_>) =
        centers.into_iter().zip(radii).partition(|(_, r)| *r >= length);
    let centers: Vec<Center> = centers.into_iter().map(|(c, _)| c).collect();
    next.truncated = truncated.into_iter().map(|(c, _)| c).collect();
    next.length = length;
    next.length_capped = natural > length;
    next.delta = sched.delta(n + 1, next.length);
    next.delta_ratio_ok =
        Some(next.delta < cur.delta / 10.0 && next.delta.ln().abs() >= 20.0 * cur.delta.ln().abs());

    let priors = state.families();
    let pad = if n == 0 { 0 } else { cur.length };
    let family = build_block_family(&centers, &priors, next.length, pad)?;
    if let Some(b) = family.blocks.iter().find(|b| !b.sites.is_subset_of(&ctx.ambient)) {
        return Err(Error::InvalidParameter(format!(
            "block at {:?} leaves the ambient region",
            b.center
        )));
    }

    let dists = block_spectrum_distances(ctx, &family)?;
    for (c, (d1, d2)) in centers.iter().zip(&dists) {
        next.block_distances.push(*d1);
        if *d1 < next.delta {
            next.singular.push(c.clone());
            let (tag, ambiguous) = if branch == Branch::Case2 {
                (ClassTag::B, false)
            } else if *d2 > next.delta * (1.0 + CLASS_TOLERANCE) {
                (ClassTag::A, false)
            } else {
                (ClassTag::B, *d2 >= next.delta * (1.0 - CLASS_TOLERANCE))
            };
            next.classes.push(ClassInfo {
                center: c.clone(),
                tag,
                ambiguous,
                nearest: *d1,
                second: *d2,
            });
        }
    }

    next.mu = common_mu(&next.classes, ctx, cur.delta)?;
    next.kernel_contained = Some(kernel_contained(cur, &family));
    next.separation = min_separation(&next.singular).map(|s| s.0);
    next.centers = centers;
    next.family = Some(family);
    next.terminated = false;

    let mut out = state.clone();
    out.stages.push(next);
    Ok(out)
}

/// μ ∈ {0, 1/2} with ‖θ* + c·ω + μ‖ ≤ 3δ^{1/2} for every Class-B center.
fn common_mu(classes: &[ClassInfo], ctx: &MsaContext, delta_prev: f64) -> Result<Option<f64>> {
    let b: Vec<&ClassInfo> = classes.iter().filter(|c| c.tag == ClassTag::B).collect();
    if b.is_empty() {
        return Ok(None);
    }
    let bound = 3.0 * delta_prev.sqrt();
    let worst = |mu: f64| {
        b.iter()
            .map(|c| torus_norm(ctx.theta_star + c.center.dot(ctx.omega.as_slice()) + mu))
            .fold(0.0, f64::max)
    };
    let (w0, w1) = (worst(0.0), worst(0.5));
    match (w0 <= bound, w1 <= bound) {
        (false, false) => Err(Error::InconsistentMu { bound }),
        (true, false) => Ok(Some(0.0)),
        (false, true) => Ok(Some(0.5)),
        (true, true) => Ok(Some(if w0 <= w1 { 0.0 } else { 0.5 })),
    }
}

fn kernel_contained(prev: &StageData, family: &BlockFamily) -> bool {
    let radius2 = 2.0 * (family.length as f64).sqrt();
    prev.singular.iter().all(|c| {
        let sites: Vec<Site> = match prev.family.as_ref().and_then(|f| f.block_at(c)) {
            Some(b) => b.sites.sites().to_vec(),
            None => c.to_site().into_iter().collect(),
        };
        let hosts = family
            .blocks
            .iter()
            .filter(|b| {
                !sites.is_empty()
                    && sites
                        .iter()
                        .all(|s| b.center.l1_dist_doubled_site(s) as f64 <= radius2)
            })
            .count();
        hosts == 1
    })
}

/// Runs the induction for up to `stages` steps past stage 0.
pub fn run_msa(ctx: &MsaContext, schedule: ScaleSchedule, stages: usize) -> Result<ScaleState> {
    let mut state = initial_state(ctx, schedule);
    for _ in 0..stages {
        state = advance_stage(&state, ctx)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterPairCheck {
    pub a: Center,
    pub b: Center,
    pub m: f64,
    pub bound: f64,
    pub branch: ResonanceBranch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterTheoremReport {
    pub stage: usize,
    pub pairs: usize,
    pub bound: f64,
    /// the pair with the largest m/bound
    pub worst: Option<CenterPairCheck>,
    pub worst_margin: f64,
    /// stage 0 only: m ≤ 2|E_0^i − E_0^j|^{1/2}
    pub sharper_violations: usize,
    pub passed: bool,
}

/// Checks m(c_i, c_j) ≤ 2δ_n^{1/2} for all pairs in Q_n of the given stage.
pub fn verify_center_theorem(state: &ScaleState, stage: usize, ctx: &MsaContext) -> CenterTheoremReport {
    let data = &state.stages[stage];
    let q = &data.singular;
    let bound = 2.0 * data.delta.sqrt();
    let w = ctx.omega.as_slice();
    let mut worst: Option<CenterPairCheck> = None;
    let mut worst_margin = 0.0f64;
    let mut pairs = 0;
    let mut sharper_violations = 0;
    let level = |c: &Center| ctx.potential.eval(TorusPhase::new(ctx.theta_star + c.dot(w)).value());
    for i in 0..q.len() {
        for j in (i + 1)..q.len() {
            pairs += 1;
            let r = resonance_distance(&q[i], &q[j], ctx.theta_star, w);
            let margin = r.value / bound;
            if margin >= worst_margin {
                worst_margin = margin;
                worst = Some(CenterPairCheck {
                    a: q[i].clone(),
                    b: q[j].clone(),
                    m: r.value,
                    bound,
                    branch: r.argmin_branch,
                });
            }
            if stage == 0 {
                let gap = (level(&q[i]) - level(&q[j])).abs();
                if r.value > 2.0 * gap.sqrt() + 1e-15 {
                    sharper_violations += 1;
                }
            }
        }
    }
    CenterTheoremReport {
        stage,
        pairs,
        bound,
        worst,
        worst_margin,
        sharper_violations,
        passed: worst_margin <= 1.0 && sharper_violations == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessCertificate {
    pub good: bool,
    /// (0-singular point, stage, center of the covering regular block)
    pub covering: Vec<(Site, usize, Center)>,
    pub first_uncovered: Option<Site>,
}

/// Λ is n-good when every point of Λ ∩ Q₀ lies in an m-regular block
/// B_m ⊆ Λ for some 1 ≤ m ≤ n.
pub fn is_n_good(lambda: &LatticeRegion, state: &ScaleState) -> GoodnessCertificate {
    let q0: Vec<Site> = state.stages[0]
        .singular
        .iter()
        .filter_map(Center::to_site)
        .filter(|s| lambda.contains(s))
        .collect();
    let mut covering = Vec::new();
    for x in q0 {
        let mut found = None;
        for data in state.stages.iter().skip(1) {
            let Some(fam) = &data.family else { continue };
            for b in &fam.blocks {
                if !data.singular.contains(&b.center)
                    && b.sites.contains(&x)
                    && b.sites.is_subset_of(lambda)
                {
                    found = Some((data.stage, b.center.clone()));
                    break;
                }
            }
            if found.is_some() {
                break;
            }
        }
        match found {
            Some((m, c)) => covering.push((x, m, c)),
            None => {
                return GoodnessCertificate {
                    good: false,
                    covering,
                    first_uncovered: Some(x),
                }
            }
        }
    }
    GoodnessCertificate {
        good: true,
        covering,
        first_uncovered: None,
    }
}
