use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::koopman::{ClassicalDensityField, DensityProvenance};
use crate::phasespace::{PhaseSpaceGrid, RealField};

/// Levels with population below this fraction of the trace are ignored by the
/// resolution check.
pub const POPULATED: f64 = 1e-10;

/// Phase-space quasi-density of an oscillator-basis state.
#[derive(Clone, Debug)]
pub struct WignerField {
    pub density: RealField,
    /// `Tr ρ` of the source.
    pub trace: f64,
}

impl WignerField {
    pub fn as_classical(&self) -> ClassicalDensityField {
        ClassicalDensityField {
            density: self.density.clone(),
            provenance: DensityProvenance::LiouvilleReference,
        }
    }
}

/// Largest grid spacing that resolves the Wigner kernels up to `level`.
pub fn max_spacing(level: usize, hbar: f64) -> f64 {
    PI * hbar.sqrt() / (2.0 * (2.0 * level as f64 + 1.0).sqrt())
}

/// `W = Σ_{m,m'} ρ_{mm'} W_{mm'}` with closed-form number-state kernels:
/// for `m ≥ n`, `W_{mn} = (−1)ⁿ/(πħ) √(n!/m!) (√(2/ħ)(q − ip))^{m−n} e^{−r²/ħ} L_n^{(m−n)}(2r²/ħ)`.
pub fn wigner_transform(
    rho: &[Complex64],
    n_osc: usize,
    grid: &Arc<PhaseSpaceGrid>,
) -> Result<WignerField> {
    if rho.len() != n_osc * n_osc {
        return Err(Error::DimensionMismatch {
            expected: n_osc * n_osc,
            found: rho.len(),
        });
    }
    let hbar = grid.hbar();
    let trace: f64 = (0..n_osc).map(|m| rho[m * n_osc + m].re).sum();
    let top = (0..n_osc)
        .rev()
        .find(|&m| rho[m * n_osc + m].re > POPULATED * trace.abs())
        .unwrap_or(0);
    let limit = max_spacing(top, hbar);
    let spacing = grid.dq().max(grid.dp());
    if spacing > limit {
        return Err(Error::GridTooCoarse {
            level: top,
            spacing,
            max_spacing: limit,
        });
    }
    let used = top + 1;
    // √(n!/m!) for d = m − n is Π_{k=n+1}^{m} 1/√k
    let data = grid
        .nodes()
        .map(|(q, p)| {
            let r2 = (q * q + p * p) / hbar;
            let x = 2.0 * r2;
            let z = Complex64::new(q, -p) * (2.0 / hbar).sqrt();
            let gauss = (-r2).exp() / (PI * hbar);
            let mut w = 0.0;
            let mut zd = Complex64::new(1.0, 0.0);
            for d in 0..used {
                // L_n^{(d)}(x) by the three-term recurrence in n
                let mut l_prev = 0.0;
                let mut l = 1.0;
                let mut ratio = 1.0 / (1..=d).map(|k| k as f64).product::<f64>().sqrt();
                for n in 0..used - d {
                    let m = n + d;
                    let c = rho[m * n_osc + n];
                    if c != Complex64::default() {
                        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                        let k = zd * (sign * ratio * l);
                        let term = (c * k).re;
                        w += if d == 0 { term } else { 2.0 * term };
                    }
                    let next = ((2 * n + 1 + d) as f64 - x) * l - (n + d) as f64 * l_prev;
                    l_prev = l;
                    l = next / (n + 1) as f64;
                    ratio *= ((n + 1) as f64 / (n + 1 + d) as f64).sqrt();
                }
                zd *= z;
            }
            w * gauss
        })
        .collect();
    Ok(WignerField {
        density: RealField::new(grid.clone(), data)?,
        trace,
    })
}

/// Number-state wavefunctions `ψ_0..ψ_{n−1}` at `x` for the unit-frequency oscillator.
pub fn number_states(n: usize, x: f64, hbar: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let y = x / hbar.sqrt();
    let mut prev = 0.0;
    let mut cur = (PI * hbar).powf(-0.25) * (-0.5 * y * y).exp();
    for m in 0..n {
        out.push(cur);
        let next = (2.0 / (m + 1) as f64).sqrt() * y * cur - (m as f64 / (m + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    out
}

/// `⟨x|ρ|x⟩` from the basis expansion.
pub fn position_density(rho: &[Complex64], n_osc: usize, x: f64, hbar: f64) -> f64 {
    let psi = number_states(n_osc, x, hbar);
    let mut acc = Complex64::default();
    for m in 0..n_osc {
        for n in 0..n_osc {
            acc += rho[m * n_osc + n] * psi[m] * psi[n];
        }
    }
    acc.re
}
