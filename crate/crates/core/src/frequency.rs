//! Frequency vectors and exhaustive Diophantine checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::torus_norm;

/// ω ∈ [0,1)^d together with the Diophantine constants it has been checked
/// against: ‖x·ω‖ ≥ γ/‖x‖₁^τ for all 0 < ‖x‖₁ ≤ `verified_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    pub components: Vec<f64>,
    pub tau: f64,
    pub gamma: f64,
    pub verified_radius: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub passed: bool,
    pub radius: u64,
    /// min over the scanned x of ‖x·ω‖·‖x‖₁^τ
    pub worst_ratio: f64,
    pub worst_x: Vec<i64>,
    /// First x (by ‖x‖₁, then lexicographic) with ratio < γ.
    pub first_violation: Option<Vec<i64>>,
}

impl FrequencyVector {
    /// Unverified frequency; `verified_radius` starts at 0.
    pub fn new(components: Vec<f64>, tau: f64, gamma: f64) -> Result<Self> {
        let d = components.len();
        if d == 0 {
            return Err(Error::InvalidParameter("frequency needs d ≥ 1".into()));
        }
        if components.iter().any(|w| !(0.0..1.0).contains(w)) {
            return Err(Error::InvalidParameter(
                "frequency components must lie in [0,1)".into(),
            ));
        }
        if tau <= d as f64 {
            return Err(Error::InvalidParameter(format!("τ = {tau} must exceed d = {d}")));
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidParameter("γ must be positive".into()));
        }
        Ok(FrequencyVector {
            components,
            tau,
            gamma,
            verified_radius: 0,
        })
    }

    /// Sets γ to `safety` × the worst observed ratio over `radius` and
    /// certifies the result.
    pub fn calibrated(components: Vec<f64>, tau: f64, radius: u64, safety: f64) -> Result<Self> {
        let probe = FrequencyVector::new(components, tau, 1.0)?;
        let report = verify_diophantine(&probe, radius)?;
        if report.worst_ratio <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "ω is resonant at x = {:?}",
                report.worst_x
            )));
        }
        let calibrated = FrequencyVector {
            gamma: safety * report.worst_ratio,
            ..probe
        };
        calibrated.certified(radius)
    }

    /// (√5 − 1)/2 with τ = 2.5.
    pub fn golden() -> Self {
        Self::calibrated(vec![(5f64.sqrt() - 1.0) / 2.0], 2.5, 1000, 0.9)
            .expect("golden mean is Diophantine")
    }

    /// (√2 − 1, √3 − 1) with τ = 3.5.
    pub fn sqrt23() -> Self {
        Self::calibrated(vec![2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], 3.5, 60, 0.9)
            .expect("(√2−1, √3−1) is Diophantine")
    }

    /// The default frequency in dimension d (1 or 2).
    pub fn default_for_dim(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::golden()),
            2 => Ok(Self::sqrt23()),
            _ => Err(Error::InvalidParameter(format!(
                "no default frequency for d = {d}; supply components"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.components
    }

    /// Returns a copy with `verified_radius` raised to `radius`, or an error
    /// naming the first violating x.
    pub fn certified(&self, radius: u64) -> Result<Self> {
        let report = verify_diophantine(self, radius)?;
        match report.first_violation {
            None => Ok(FrequencyVector {
                verified_radius: self.verified_radius.max(radius),
                ..self.clone()
            }),
            Some(x) => Err(Error::InvalidParameter(format!(
                "Diophantine bound fails at x = {x:?}"
            ))),
        }
    }
}

/// Visits every nonzero x ∈ Z^d with ‖x‖₁ ≤ radius, ordered by ‖x‖₁ and then
/// lexicographically.
pub fn for_each_lattice_vector(d: usize, radius: u64, mut f: impl FnMut(&[i64], u64)) {
    fn rec(k: usize, budget: i64, exact: bool, cur: &mut Vec<i64>, f: &mut dyn FnMut(&[i64])) {
        if k + 1 == cur.len() {
            if exact {
                if budget == 0 {
                    cur[k] = 0;
                    f(cur);
                } else {
                    cur[k] = -budget;
                    f(cur);
                    cur[k] = budget;
                    f(cur);
                }
            }
            return;
        }
        for x in -budget..=budget {
            cur[k] = x;
            rec(k + 1, budget - x.abs(), exact, cur, f);
        }
    }
    let mut cur = vec![0i64; d];
    for n in 1..=radius {
        let mut g = |x: &[i64]| f(x, n);
        rec(0, n as i64, true, &mut cur, &mut g);
    }
}

/// Exhaustively checks ‖x·ω‖ ≥ γ/‖x‖₁^τ over 0 < ‖x‖₁ ≤ radius.
pub fn verify_diophantine(omega: &FrequencyVector, radius: u64) -> Result<DiophantineReport> {
    if radius == 0 {
        return Err(Error::InvalidParameter("radius must be ≥ 1".into()));
    }
    let w = omega.as_slice();
    let mut worst = f64::INFINITY;
    let mut worst_x = Vec::new();
    let mut first_violation = None;
    for_each_lattice_vector(omega.dim(), radius, |x, n| {
        let dot: f64 = x.iter().zip(w).map(|(&a, &b)| a as f64 * b).sum();
        let ratio = torus_norm(dot) * (n as f64).powf(omega.tau);
        if ratio < worst {
            worst = ratio;
            worst_x = x.to_vec();
        }
        if first_violation.is_none() && ratio < omega.gamma {
            first_violation = Some(x.to_vec());
        }
    });
    Ok(DiophantineReport {
        passed: first_violation.is_none(),
        radius,
        worst_ratio: worst,
        worst_x,
        first_violation,
    })
}
