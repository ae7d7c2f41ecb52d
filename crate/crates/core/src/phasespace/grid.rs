use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How partial derivatives are evaluated on the periodic grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeScheme {
    Spectral,
    Central4,
}

/// Plain-data description of a grid, used by configs and snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nq: usize,
    pub np: usize,
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub hbar: f64,
    pub scheme: DerivativeScheme,
}

impl GridSpec {
    pub fn square(n: usize, half_width: f64, hbar: f64) -> Self {
        GridSpec {
            nq: n,
            np: n,
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            hbar,
            scheme: DerivativeScheme::Spectral,
        }
    }

    pub fn build(&self) -> Result<Arc<PhaseSpaceGrid>> {
        make_grid(
            self.nq,
            self.np,
            [self.q_min, self.q_max],
            [self.p_min, self.p_max],
            self.hbar,
            self.scheme,
        )
    }
}

struct AxisTransforms {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid over phase space `(q, p)`.
///
/// Nodes sit at `q_i = q_min + i dq`, `p_j = p_min + j dp`; field data is stored
/// row-major with `q` as the outer index. The symplectic potential convention is
/// `theta = p dq`.
pub struct PhaseSpaceGrid {
    spec: GridSpec,
    dq: f64,
    dp: f64,
    /// Angular wavenumbers with the Nyquist mode zeroed (first derivatives).
    kq: Vec<f64>,
    kp: Vec<f64>,
    /// Signed angular wavenumbers including Nyquist (translations).
    kq_full: Vec<f64>,
    kp_full: Vec<f64>,
    q_fft: AxisTransforms,
    p_fft: AxisTransforms,
}

impl fmt::Debug for PhaseSpaceGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseSpaceGrid")
            .field("spec", &self.spec)
            .field("dq", &self.dq)
            .field("dp", &self.dp)
            .finish()
    }
}

impl PartialEq for PhaseSpaceGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

fn wavenumbers(n: usize, length: f64) -> (Vec<f64>, Vec<f64>) {
    let full: Vec<f64> = (0..n)
        .map(|i| {
            let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            2.0 * PI * m / length
        })
        .collect();
    let mut deriv = full.clone();
    deriv[n / 2] = 0.0;
    // Nyquist carries the sign of the aliased negative frequency for shifts.
    let mut shift = full;
    shift[n / 2] = -PI * n as f64 / length;
    (deriv, shift)
}

/// Validates the parameters and precomputes wavenumbers and FFT plans.
pub fn make_grid(
    nq: usize,
    np: usize,
    q_extent: [f64; 2],
    p_extent: [f64; 2],
    hbar: f64,
    scheme: DerivativeScheme,
) -> Result<Arc<PhaseSpaceGrid>> {
    if nq % 2 != 0 || np % 2 != 0 {
        return Err(Error::OddSize { nq, np });
    }
    if nq < 8 || np < 8 {
        return Err(Error::GridTooSmall { nq, np });
    }
    for (axis, [lo, hi]) in [("q", q_extent), ("p", p_extent)] {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvertedExtents {
                axis,
                min: lo,
                max: hi,
            });
        }
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::NonPositiveHbar(hbar));
    }
    let lq = q_extent[1] - q_extent[0];
    let lp = p_extent[1] - p_extent[0];
    let (kq, kq_full) = wavenumbers(nq, lq);
    let (kp, kp_full) = wavenumbers(np, lp);
    let mut planner = FftPlanner::new();
    let q_fft = AxisTransforms {
        forward: planner.plan_fft_forward(nq),
        inverse: planner.plan_fft_inverse(nq),
    };
    let p_fft = AxisTransforms {
        forward: planner.plan_fft_forward(np),
        inverse: planner.plan_fft_inverse(np),
    };
    Ok(Arc::new(PhaseSpaceGrid {
        spec: GridSpec {
            nq,
            np,
            q_min: q_extent[0],
            q_max: q_extent[1],
            p_min: p_extent[0],
            p_max: p_extent[1],
            hbar,
            scheme,
        },
        dq: lq / nq as f64,
        dp: lp / np as f64,
        kq,
        kp,
        kq_full,
        kp_full,
        q_fft,
        p_fft,
    }))
}

#[derive(Clone, Copy)]
enum Axis {
    Q,
    P,
}

impl PhaseSpaceGrid {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn nq(&self) -> usize {
        self.spec.nq
    }
    pub fn np(&self) -> usize {
        self.spec.np
    }
    pub fn len(&self) -> usize {
        self.spec.nq * self.spec.np
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dq(&self) -> f64 {
        self.dq
    }
    pub fn dp(&self) -> f64 {
        self.dp
    }
    pub fn hbar(&self) -> f64 {
        self.spec.hbar
    }
    pub fn scheme(&self) -> DerivativeScheme {
        self.spec.scheme
    }
    /// Quadrature weight of a single node.
    pub fn cell_area(&self) -> f64 {
        self.dq * self.dp
    }
    pub fn q_length(&self) -> f64 {
        self.spec.q_max - self.spec.q_min
    }
    pub fn p_length(&self) -> f64 {
        self.spec.p_max - self.spec.p_min
    }
    pub fn q(&self, i: usize) -> f64 {
        self.spec.q_min + i as f64 * self.dq
    }
    pub fn p(&self, j: usize) -> f64 {
        self.spec.p_min + j as f64 * self.dp
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.spec.np + j
    }
    /// Coordinates of the node with flat index `k`.
    #[inline]
    pub fn coords(&self, k: usize) -> (f64, f64) {
        (self.q(k / self.spec.np), self.p(k % self.spec.np))
    }
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |k| self.coords(k))
    }
    pub fn q_wavenumbers(&self) -> &[f64] {
        &self.kq
    }
    pub fn p_wavenumbers(&self) -> &[f64] {
        &self.kp
    }

    /// `d/dq` of raw node data with the configured scheme.
    pub fn derivative_q(&self, data: &[Complex64]) -> Vec<Complex64> {
        match self.spec.scheme {
            DerivativeScheme::Spectral => self.spectral_derivative(data, Axis::Q),
            DerivativeScheme::Central4 => self.central4(data, Axis::Q),
        }
    }

    /// `d/dp` of raw node data with the configured scheme.
    pub fn derivative_p(&self, data: &[Complex64]) -> Vec<Complex64> {
        match self.spec.scheme {
            DerivativeScheme::Spectral => self.spectral_derivative(data, Axis::P),
            DerivativeScheme::Central4 => self.central4(data, Axis::P),
        }
    }

    pub fn derivative_q_real(&self, data: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.derivative_q(&c).into_iter().map(|z| z.re).collect()
    }

    pub fn derivative_p_real(&self, data: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.derivative_p(&c).into_iter().map(|z| z.re).collect()
    }

    /// Forward transform, per-mode multiplier, inverse transform along one axis.
    fn axis_filter(&self, data: &[Complex64], axis: Axis, mut mult: impl FnMut(usize, usize) -> Complex64) -> Vec<Complex64> {
        let (nq, np) = (self.spec.nq, self.spec.np);
        debug_assert_eq!(data.len(), nq * np);
        match axis {
            Axis::P => {
                let mut buf = data.to_vec();
                let mut scratch =
                    vec![Complex64::default(); self.p_fft.forward.get_inplace_scratch_len()];
                self.p_fft.forward.process_with_scratch(&mut buf, &mut scratch);
                let norm = 1.0 / np as f64;
                for i in 0..nq {
                    let row = &mut buf[i * np..(i + 1) * np];
                    for (j, z) in row.iter_mut().enumerate() {
                        *z *= mult(i, j) * norm;
                    }
                }
                self.p_fft.inverse.process_with_scratch(&mut buf, &mut scratch);
                buf
            }
            Axis::Q => {
                let mut buf = vec![Complex64::default(); nq * np];
                for i in 0..nq {
                    for j in 0..np {
                        buf[j * nq + i] = data[i * np + j];
                    }
                }
                let mut scratch =
                    vec![Complex64::default(); self.q_fft.forward.get_inplace_scratch_len()];
                self.q_fft.forward.process_with_scratch(&mut buf, &mut scratch);
                let norm = 1.0 / nq as f64;
                for j in 0..np {
                    let col = &mut buf[j * nq..(j + 1) * nq];
                    for (i, z) in col.iter_mut().enumerate() {
                        *z *= mult(i, j) * norm;
                    }
                }
                self.q_fft.inverse.process_with_scratch(&mut buf, &mut scratch);
                let mut out = vec![Complex64::default(); nq * np];
                for j in 0..np {
                    for i in 0..nq {
                        out[i * np + j] = buf[j * nq + i];
                    }
                }
                out
            }
        }
    }

    fn spectral_derivative(&self, data: &[Complex64], axis: Axis) -> Vec<Complex64> {
        match axis {
            Axis::Q => self.axis_filter(data, axis, |i, _| Complex64::new(0.0, self.kq[i])),
            Axis::P => self.axis_filter(data, axis, |_, j| Complex64::new(0.0, self.kp[j])),
        }
    }

    fn central4(&self, data: &[Complex64], axis: Axis) -> Vec<Complex64> {
        let (nq, np) = (self.spec.nq, self.spec.np);
        let mut out = vec![Complex64::default(); nq * np];
        match axis {
            Axis::Q => {
                let c = 1.0 / (12.0 * self.dq);
                for i in 0..nq {
                    let im1 = (i + nq - 1) % nq;
                    let im2 = (i + nq - 2) % nq;
                    let ip1 = (i + 1) % nq;
                    let ip2 = (i + 2) % nq;
                    for j in 0..np {
                        out[i * np + j] = (data[im2 * np + j] - data[ip2 * np + j]
                            + (data[ip1 * np + j] - data[im1 * np + j]) * 8.0)
                            * c;
                    }
                }
            }
            Axis::P => {
                let c = 1.0 / (12.0 * self.dp);
                for i in 0..nq {
                    let row = &data[i * np..(i + 1) * np];
                    for j in 0..np {
                        let jm1 = (j + np - 1) % np;
                        let jm2 = (j + np - 2) % np;
                        let jp1 = (j + 1) % np;
                        let jp2 = (j + 2) % np;
                        out[i * np + j] =
                            (row[jm2] - row[jp2] + (row[jp1] - row[jm1]) * 8.0) * c;
                    }
                }
            }
        }
        out
    }

    /// Band-limited periodic translation `f(q - a, p - b)`.
    pub fn translate(&self, data: &[Complex64], a: f64, b: f64) -> Vec<Complex64> {
        let mut out = data.to_vec();
        if a != 0.0 {
            out = self.axis_filter(&out, Axis::Q, |i, _| {
                Complex64::from_polar(1.0, -self.kq_full[i] * a)
            });
        }
        if b != 0.0 {
            out = self.axis_filter(&out, Axis::P, |_, j| {
                Complex64::from_polar(1.0, -self.kp_full[j] * b)
            });
        }
        out
    }

    /// `f(q - s p, p)`: each fixed-`p` line is translated in `q` by `s p`.
    pub fn shear_q(&self, data: &[Complex64], s: f64) -> Vec<Complex64> {
        self.axis_filter(data, Axis::Q, |i, j| {
            Complex64::from_polar(1.0, -self.kq_full[i] * s * self.p(j))
        })
    }

    /// `f(q, p - s q)`: each fixed-`q` line is translated in `p` by `s q`.
    pub fn shear_p(&self, data: &[Complex64], s: f64) -> Vec<Complex64> {
        self.axis_filter(data, Axis::P, |i, j| {
            Complex64::from_polar(1.0, -self.kp_full[j] * s * self.q(i))
        })
    }

    /// Spectral derivative regardless of the configured scheme.
    pub fn spectral_derivative_q(&self, data: &[Complex64]) -> Vec<Complex64> {
        self.spectral_derivative(data, Axis::Q)
    }

    pub fn spectral_derivative_p(&self, data: &[Complex64]) -> Vec<Complex64> {
        self.spectral_derivative(data, Axis::P)
    }

    /// Forward then inverse transform along both axes (no filtering).
    pub fn spectral_round_trip(&self, data: &[Complex64]) -> Vec<Complex64> {
        let once = self.axis_filter(data, Axis::Q, |_, _| Complex64::new(1.0, 0.0));
        self.axis_filter(&once, Axis::P, |_, _| Complex64::new(1.0, 0.0))
    }
}

pub(crate) fn same_grid(a: &Arc<PhaseSpaceGrid>, b: &Arc<PhaseSpaceGrid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}
