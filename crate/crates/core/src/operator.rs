//! Finite-volume operators H_Λ(θ) = εΔ + v(θ + x·ω)δ_{x,y} and θ-families.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::frequency::FrequencyVector;
use crate::lattice::{Center, LatticeRegion};
use crate::potential::PotentialProfile;
use crate::torus::TorusPhase;

#[derive(Debug, Clone)]
pub struct OperatorSlice {
    pub matrix: DMatrix<f64>,
    pub region: LatticeRegion,
    pub theta: TorusPhase,
    pub epsilon: f64,
    pub potential: PotentialProfile,
    pub frequency: FrequencyVector,
}

impl OperatorSlice {
    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    /// The same model restricted to another region at the same phase.
    pub fn restrict(&self, region: &LatticeRegion) -> Result<OperatorSlice> {
        assemble(region, self.theta, self.epsilon, &self.potential, &self.frequency)
    }

    pub fn family(&self) -> QpFamily {
        QpFamily {
            region: self.region.clone(),
            epsilon: self.epsilon,
            potential: self.potential.clone(),
            frequency: self.frequency.clone(),
        }
    }
}

pub fn assemble(
    region: &LatticeRegion,
    theta: TorusPhase,
    epsilon: f64,
    v: &PotentialProfile,
    omega: &FrequencyVector,
) -> Result<OperatorSlice> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!("ε = {epsilon} must be ≥ 0")));
    }
    if region.dim() != omega.dim() {
        return Err(Error::DimensionMismatch {
            expected: omega.dim(),
            got: region.dim(),
        });
    }
    let matrix = qp_matrix(region, theta.value(), epsilon, v, omega.as_slice());
    Ok(OperatorSlice {
        matrix,
        region: region.clone(),
        theta,
        epsilon,
        potential: v.clone(),
        frequency: omega.clone(),
    })
}

fn phase_at(theta: f64, region: &LatticeRegion, i: usize, omega: &[f64]) -> f64 {
    TorusPhase::new(theta + region.site(i).dot(omega)).value()
}

fn qp_matrix(
    region: &LatticeRegion,
    theta: f64,
    epsilon: f64,
    v: &PotentialProfile,
    omega: &[f64],
) -> DMatrix<f64> {
    let n = region.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = v.eval(phase_at(theta, region, i, omega));
    }
    if epsilon != 0.0 {
        for (i, j) in region.neighbor_pairs() {
            m[(i, j)] = epsilon;
            m[(j, i)] = epsilon;
        }
    }
    m
}

/// The permutation matrix of ψ ↦ ψ(2c − ·); errors if the region is not
/// symmetric about c.
pub fn reflection_matrix(region: &LatticeRegion, c: &Center) -> Result<DMatrix<f64>> {
    let n = region.len();
    let mut r = DMatrix::zeros(n, n);
    for (i, s) in region.iter().enumerate() {
        let j = region
            .index_of(&c.reflect(s))
            .ok_or_else(|| Error::InvalidParameter(format!("region not symmetric about {c:?}")))?;
        r[(i, j)] = 1.0;
    }
    Ok(r)
}

/// A smooth one-parameter family of symmetric matrices A(θ).
pub trait ParametricOperator: Sync {
    fn dim(&self) -> usize;
    fn matrix(&self, theta: f64) -> DMatrix<f64>;
    fn derivative(&self, theta: f64) -> DMatrix<f64>;
    fn second_derivative(&self, theta: f64) -> DMatrix<f64>;
}

/// θ ↦ H_Λ(θ) for fixed Λ, ε, v, ω. θ is treated as a real parameter.
#[derive(Debug, Clone)]
pub struct QpFamily {
    pub region: LatticeRegion,
    pub epsilon: f64,
    pub potential: PotentialProfile,
    pub frequency: FrequencyVector,
}

impl QpFamily {
    pub fn new(
        region: LatticeRegion,
        epsilon: f64,
        potential: PotentialProfile,
        frequency: FrequencyVector,
    ) -> Result<Self> {
        // validate once through assemble
        assemble(&region, TorusPhase::new(0.0), epsilon, &potential, &frequency)?;
        Ok(QpFamily {
            region,
            epsilon,
            potential,
            frequency,
        })
    }

    pub fn slice(&self, theta: f64) -> OperatorSlice {
        OperatorSlice {
            matrix: self.matrix(theta),
            region: self.region.clone(),
            theta: TorusPhase::new(theta),
            epsilon: self.epsilon,
            potential: self.potential.clone(),
            frequency: self.frequency.clone(),
        }
    }

    fn diagonal(&self, theta: f64, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.region.len();
        let w = self.frequency.as_slice();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                f(phase_at(theta, &self.region, i, w))
            } else {
                0.0
            }
        })
    }
}

impl ParametricOperator for QpFamily {
    fn dim(&self) -> usize {
        self.region.len()
    }

    fn matrix(&self, theta: f64) -> DMatrix<f64> {
        qp_matrix(
            &self.region,
            theta,
            self.epsilon,
            &self.potential,
            self.frequency.as_slice(),
        )
    }

    fn derivative(&self, theta: f64) -> DMatrix<f64> {
        self.diagonal(theta, |t| self.potential.eval_d1(t))
    }

    fn second_derivative(&self, theta: f64) -> DMatrix<f64> {
        self.diagonal(theta, |t| self.potential.eval_d2(t))
    }
}

/// A(θ) = A₀ + θ·A₁.
#[derive(Debug, Clone)]
pub struct AffineFamily {
    pub a0: DMatrix<f64>,
    pub a1: DMatrix<f64>,
}

impl AffineFamily {
    pub fn new(a0: DMatrix<f64>, a1: DMatrix<f64>) -> Result<Self> {
        if a0.shape() != a1.shape() || a0.nrows() != a0.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a0.nrows(),
                got: a1.nrows(),
            });
        }
        Ok(AffineFamily { a0, a1 })
    }
}

impl ParametricOperator for AffineFamily {
    fn dim(&self) -> usize {
        self.a0.nrows()
    }

    fn matrix(&self, theta: f64) -> DMatrix<f64> {
        &self.a0 + &self.a1 * theta
    }

    fn derivative(&self, _theta: f64) -> DMatrix<f64> {
        self.a1.clone()
    }

    fn second_derivative(&self, _theta: f64) -> DMatrix<f64> {
        DMatrix::zeros(self.dim(), self.dim())
    }
}
