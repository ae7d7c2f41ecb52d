//! Classical fourth-order Runge–Kutta shared by every field solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::{ComplexField, MatrixField};

/// State that supports `self + a * other`.
pub trait LinearState: Sized {
    fn add_scaled(&self, other: &Self, a: f64) -> Self;
}

impl LinearState for ComplexField {
    fn add_scaled(&self, other: &Self, a: f64) -> Self {
        ComplexField::add_scaled(self, other, a)
    }
}

impl LinearState for MatrixField {
    fn add_scaled(&self, other: &Self, a: f64) -> Self {
        MatrixField::add_scaled(self, other, a)
    }
}

impl LinearState for Vec<f64> {
    fn add_scaled(&self, other: &Self, a: f64) -> Self {
        self.iter().zip(other).map(|(x, y)| x + a * y).collect()
    }
}

pub fn rk4_step<S: LinearState>(
    y: &S,
    dt: f64,
    mut rhs: impl FnMut(&S) -> Result<S>,
) -> Result<S> {
    let k1 = rhs(y)?;
    let k2 = rhs(&y.add_scaled(&k1, 0.5 * dt))?;
    let k3 = rhs(&y.add_scaled(&k2, 0.5 * dt))?;
    let k4 = rhs(&y.add_scaled(&k3, dt))?;
    Ok(y
        .add_scaled(&k1, dt / 6.0)
        .add_scaled(&k2, dt / 3.0)
        .add_scaled(&k3, dt / 3.0)
        .add_scaled(&k4, dt / 6.0))
}

/// What to do when a step exceeds the advective stability bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CflPolicy {
    #[default]
    Warn,
    Abort,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub cfl: f64,
    pub policy: CflPolicy,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            cfl: 0.5,
            policy: CflPolicy::Warn,
        }
    }
}

impl StepOptions {
    pub fn abort() -> Self {
        StepOptions {
            policy: CflPolicy::Abort,
            ..Default::default()
        }
    }

    /// Applies the policy to a step of size `dt` against `limit`.
    pub fn check(&self, dt: f64, limit: f64) -> Result<()> {
        if dt.abs() <= limit {
            return Ok(());
        }
        match self.policy {
            CflPolicy::Warn => {
                log::warn!("time step {dt} exceeds CFL limit {limit}");
                Ok(())
            }
            CflPolicy::Abort => Err(Error::CflViolation { dt, limit }),
        }
    }
}
