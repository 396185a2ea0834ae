//! Even, 1-periodic C² potentials with the Morse-type shape bounds the
//! induction needs: |v''| > 3 near the extrema at 0 and 1/2, |v'| > 3 elsewhere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::torus_norm;

pub const GRID_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    /// cos 2πθ
    Cosine,
    /// cos 2πθ + amplitude·cos 4πθ
    PerturbedCosine { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    pub kind: PotentialKind,
    /// sup of |v|, |v'|, |v''|
    pub m1: f64,
    /// radius of the critical neighbourhoods of 0 and 1/2
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeReport {
    pub evenness_error: f64,
    /// min |v''| over grid points within `a` of 0 or 1/2
    pub min_curvature_near_critical: f64,
    /// min |v'| over the remaining grid points
    pub min_slope_elsewhere: f64,
    pub grid_sup: f64,
}

impl PotentialProfile {
    pub fn cosine() -> Self {
        Self::new(PotentialKind::Cosine, 0.09).expect("cosine satisfies the shape bounds")
    }

    pub fn perturbed_cosine() -> Self {
        Self::new(PotentialKind::PerturbedCosine { amplitude: 0.05 }, 0.099)
            .expect("default perturbation satisfies the shape bounds")
    }

    /// Builds the profile and validates every shape bound on the grid.
    pub fn new(kind: PotentialKind, a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 0.1) {
            return Err(Error::InvalidParameter(format!("a = {a} must lie in (0, 1/10)")));
        }
        let m1 = match kind {
            PotentialKind::Cosine => 4.0 * PI * PI,
            PotentialKind::PerturbedCosine { amplitude } => {
                let b = amplitude.abs();
                (1.0 + b).max(2.0 * PI * (1.0 + 2.0 * b)).max(4.0 * PI * PI * (1.0 + 4.0 * b))
            }
        };
        let p = PotentialProfile { kind, m1, a };
        let r = p.shape_report();
        if r.evenness_error > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "potential is not even (error {:e})",
                r.evenness_error
            )));
        }
        if r.min_curvature_near_critical <= 3.0 {
            return Err(Error::InvalidParameter(format!(
                "|v''| = {} ≤ 3 within a = {a} of a critical point",
                r.min_curvature_near_critical
            )));
        }
        if r.min_slope_elsewhere <= 3.0 {
            return Err(Error::InvalidParameter(format!(
                "|v'| = {} ≤ 3 outside the critical neighbourhoods",
                r.min_slope_elsewhere
            )));
        }
        if r.grid_sup > m1 {
            return Err(Error::InvalidParameter("M1 below the grid supremum".into()));
        }
        Ok(p)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let x = 2.0 * PI * t;
        match self.kind {
            PotentialKind::Cosine => x.cos(),
            PotentialKind::PerturbedCosine { amplitude } => x.cos() + amplitude * (2.0 * x).cos(),
        }
    }

    pub fn eval_d1(&self, t: f64) -> f64 {
        let x = 2.0 * PI * t;
        match self.kind {
            PotentialKind::Cosine => -2.0 * PI * x.sin(),
            PotentialKind::PerturbedCosine { amplitude } => {
                -2.0 * PI * x.sin() - 4.0 * PI * amplitude * (2.0 * x).sin()
            }
        }
    }

    pub fn eval_d2(&self, t: f64) -> f64 {
        let x = 2.0 * PI * t;
        let w2 = 4.0 * PI * PI;
        match self.kind {
            PotentialKind::Cosine => -w2 * x.cos(),
            PotentialKind::PerturbedCosine { amplitude } => {
                -w2 * x.cos() - 4.0 * w2 * amplitude * (2.0 * x).cos()
            }
        }
    }

    /// Evaluates the shape bounds on θ_k = k/1000.
    pub fn shape_report(&self) -> ShapeReport {
        let mut r = ShapeReport {
            evenness_error: 0.0,
            min_curvature_near_critical: f64::INFINITY,
            min_slope_elsewhere: f64::INFINITY,
            grid_sup: 0.0,
        };
        for k in 0..GRID_POINTS {
            let t = k as f64 / GRID_POINTS as f64;
            let (v, d1, d2) = (self.eval(t), self.eval_d1(t), self.eval_d2(t));
            r.evenness_error = r.evenness_error.max((v - self.eval(-t)).abs());
            r.grid_sup = r.grid_sup.max(v.abs()).max(d1.abs()).max(d2.abs());
            if torus_norm(t) < self.a || torus_norm(t - 0.5) < self.a {
                r.min_curvature_near_critical = r.min_curvature_near_critical.min(d2.abs());
            } else {
                r.min_slope_elsewhere = r.min_slope_elsewhere.min(d1.abs());
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_validate() {
        let c = PotentialProfile::cosine();
        assert!((c.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((c.eval(0.5) + 1.0).abs() < 1e-15);
        let p = PotentialProfile::perturbed_cosine();
        assert!((p.eval(0.0) - 1.05).abs() < 1e-15);
        assert!(p.shape_report().min_slope_elsewhere > 3.0);
    }

    #[test]
    fn shape_bounds_reject_bad_radius() {
        // |v'| drops below 3 just outside 0.079 for the cosine
        assert!(PotentialProfile::new(PotentialKind::Cosine, 0.07).is_err());
        assert!(PotentialProfile::new(PotentialKind::Cosine, 0.1).is_err());
        // a large perturbation spoils the slope bound near θ = 1/2
        assert!(PotentialProfile::new(PotentialKind::PerturbedCosine { amplitude: 0.3 }, 0.099).is_err());
    }

    proptest! {
        #[test]
        fn derivatives_match_finite_differences(t in 0.0f64..1.0) {
            for p in [PotentialProfile::cosine(), PotentialProfile::perturbed_cosine()] {
                let h = 1e-5;
                let fd1 = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
                let fd2 = (p.eval_d1(t + h) - p.eval_d1(t - h)) / (2.0 * h);
                prop_assert!((fd1 - p.eval_d1(t)).abs() < 1e-6);
                prop_assert!((fd2 - p.eval_d2(t)).abs() < 1e-5);
                prop_assert!((p.eval(t) - p.eval(t + 3.0)).abs() < 1e-12);
                prop_assert!(p.eval_d2(t).abs() <= p.m1);
            }
        }

        #[test]
        fn distance_lemma_holds(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            // |v(a) − v(b)| ≥ min(‖a − b‖, ‖a + b‖)²
            for p in [PotentialProfile::cosine(), PotentialProfile::perturbed_cosine()] {
                let m = torus_norm(a - b).min(torus_norm(a + b));
                prop_assert!((p.eval(a) - p.eval(b)).abs() >= m * m - 1e-12);
            }
        }
    }
}
