//! Closed-form initial states.
//!
//! Each profile can be evaluated at arbitrary points, which is what the exact
//! characteristics path needs, and sampled on a grid for the time steppers.

use std::f64::consts::PI;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::wavefunction::HybridWavefunction;
use crate::error::{Error, Result};
use crate::phasespace::{ComplexField, PhaseSpaceGrid};

/// Scalar phase-space wavefunction profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KoopmanProfile {
    /// `√(G) e^{i (k_q q + k_p p)}` with `G` the normalized Gaussian of width `sigma`
    /// centred at `(q0, p0)`: `G = exp(−|z − z0|²/σ²)/(π σ²)`.
    Gaussian {
        q0: f64,
        p0: f64,
        sigma: f64,
        #[serde(default)]
        k_q: f64,
        #[serde(default)]
        k_p: f64,
    },
    /// Real positive root `√(e^{−(q²+p²)}/π)`.
    Figure1Real,
    /// Amplitude and phase chosen so that the Liouville density of the state is
    /// `e^{−(q²+p²)}/π` inside radius `r0`; the amplitude is smoothly cut off
    /// between `r0` and `r1` and renormalized.
    Figure1Matched { r0: f64, r1: f64 },
}

/// Radial amplitude `D(u)`, `u = r²`, solving `2D + u D' = e^{−u}/π`.
pub fn matched_amplitude(u: f64) -> f64 {
    if u < 1e-2 {
        // (1 − (1 + u) e^{−u}) / u² = Σ_k (−1)^k (k+1) u^k / (k+2)!
        let mut s = 0.0;
        let mut fact = 2.0; // (k+2)!
        let mut pow = 1.0;
        for k in 0..8 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * (k as f64 + 1.0) * pow / fact;
            pow *= u;
            fact *= k as f64 + 3.0;
        }
        s / PI
    } else {
        (1.0 - (1.0 + u) * (-u).exp()) / (PI * u * u)
    }
}

/// `C^∞` step equal to 1 for `r ≤ r0` and 0 for `r ≥ r1`.
pub fn smooth_cutoff(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        return 1.0;
    }
    if r >= r1 {
        return 0.0;
    }
    let x = (r - r0) / (r1 - r0);
    let f = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let a = f(1.0 - x);
    a / (a + f(x))
}

impl KoopmanProfile {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KoopmanProfile::Gaussian { sigma, .. } if !(sigma > 0.0) => Err(Error::InvalidArgument(
                format!("gaussian width must be positive, got {sigma}"),
            )),
            KoopmanProfile::Figure1Matched { r0, r1 } if !(r0 > 0.0 && r1 > r0) => {
                Err(Error::InvalidArgument(format!(
                    "cutoff radii must satisfy 0 < r0 < r1, got {r0}, {r1}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Closed-form evaluator, including any normalization constant.
    pub fn evaluator(&self, hbar: f64) -> Result<impl Fn(f64, f64) -> Complex64 + Clone> {
        self.validate()?;
        let profile = *self;
        let scale = match profile {
            KoopmanProfile::Figure1Matched { r0, r1 } => 1.0 / matched_norm(r0, r1).sqrt(),
            _ => 1.0,
        };
        Ok(move |q: f64, p: f64| match profile {
            KoopmanProfile::Gaussian {
                q0,
                p0,
                sigma,
                k_q,
                k_p,
            } => {
                let s2 = sigma * sigma;
                let g = (-((q - q0).powi(2) + (p - p0).powi(2)) / s2).exp() / (PI * s2);
                Complex64::from_polar(g.sqrt(), k_q * q + k_p * p)
            }
            KoopmanProfile::Figure1Real => {
                Complex64::new(((-(q * q + p * p)).exp() / PI).sqrt(), 0.0)
            }
            KoopmanProfile::Figure1Matched { r0, r1 } => {
                let u = q * q + p * p;
                let amp = (matched_amplitude(u) * smooth_cutoff(u.sqrt(), r0, r1)).sqrt();
                Complex64::from_polar(amp * scale, q * p / (2.0 * hbar))
            }
        })
    }

    pub fn sample(&self, grid: &Arc<PhaseSpaceGrid>) -> Result<ComplexField> {
        let f = self.evaluator(grid.hbar())?;
        ComplexField::new(grid.clone(), grid.nodes().map(|(q, p)| f(q, p)).collect())
    }
}

/// Mass of the cut-off matched amplitude before renormalization:
/// `∫ D(r²) c(r) dq dp = π ∫₀^{r1²} D(u) c(√u) du`.
pub fn matched_norm(r0: f64, r1: f64) -> f64 {
    let rule = GaussLegendre::new(64).expect("64-point rule");
    let panels = (r1 * r1).ceil() as usize;
    let width = r1 * r1 / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = k as f64 * width;
        total += rule.integrate(a, a + width, |u| {
            matched_amplitude(u) * smooth_cutoff(u.sqrt(), r0, r1)
        });
    }
    PI * total
}

/// `χ(q, p) · spinor` for a closed-form profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HybridInitialState {
    pub profile: KoopmanProfile,
    /// Quantum amplitudes, normalized on use.
    pub spinor: Vec<[f64; 2]>,
}

impl HybridInitialState {
    /// `χ · (1, 1)/√2`, whose Bloch vector is `(1, 0, 0)`.
    pub fn figure1(profile: KoopmanProfile) -> Self {
        HybridInitialState {
            profile,
            spinor: vec![[1.0, 0.0], [1.0, 0.0]],
        }
    }

    pub fn spinor(&self) -> Result<Vec<Complex64>> {
        let v: Vec<Complex64> = self.spinor.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if v.is_empty() || !(norm > 0.0) {
            return Err(Error::InvalidArgument("spinor must be nonzero".into()));
        }
        Ok(v.into_iter().map(|z| z / norm).collect())
    }

    pub fn dim(&self) -> usize {
        self.spinor.len()
    }

    pub fn evaluator(&self, hbar: f64) -> Result<impl Fn(f64, f64) -> Vec<Complex64> + Clone> {
        let chi = self.profile.evaluator(hbar)?;
        let spinor = self.spinor()?;
        Ok(move |q: f64, p: f64| {
            let c = chi(q, p);
            spinor.iter().map(|s| s * c).collect()
        })
    }

    pub fn sample(&self, grid: &Arc<PhaseSpaceGrid>) -> Result<HybridWavefunction> {
        Ok(HybridWavefunction::product(&self.profile.sample(grid)?, &self.spinor()?))
    }
}
