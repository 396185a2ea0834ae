//! Phases on the circle T = R/Z and the distance to the nearest integer.

use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// ‖t‖ = min over integers l of |t − l|.
pub fn torus_norm(t: f64) -> f64 {
    (t - t.round()).abs()
}

/// A phase θ, stored reduced into [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPhase(f64);

impl TorusPhase {
    pub fn new(t: f64) -> Self {
        let r = t.rem_euclid(1.0);
        // rem_euclid can round up to exactly 1.0 for tiny negative inputs
        TorusPhase(if r >= 1.0 { 0.0 } else { r })
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn norm(self) -> f64 {
        torus_norm(self.0)
    }

    /// Signed representative of self − other in [−1/2, 1/2).
    pub fn signed_diff(self, other: TorusPhase) -> f64 {
        let d = self.0 - other.0;
        d - d.round()
    }
}

impl Add<f64> for TorusPhase {
    type Output = TorusPhase;
    fn add(self, rhs: f64) -> TorusPhase {
        TorusPhase::new(self.0 + rhs)
    }
}

impl Add for TorusPhase {
    type Output = TorusPhase;
    fn add(self, rhs: TorusPhase) -> TorusPhase {
        TorusPhase::new(self.0 + rhs.0)
    }
}

impl Sub for TorusPhase {
    type Output = TorusPhase;
    fn sub(self, rhs: TorusPhase) -> TorusPhase {
        TorusPhase::new(self.0 - rhs.0)
    }
}

impl Neg for TorusPhase {
    type Output = TorusPhase;
    fn neg(self) -> TorusPhase {
        TorusPhase::new(-self.0)
    }
}
