use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasespace::{PhaseSpaceGrid, RealField};

/// `qq q² + pp p² + qp q p + q q + p p + c`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub qq: f64,
    pub pp: f64,
    pub qp: f64,
    pub q: f64,
    pub p: f64,
    pub c: f64,
}

impl QuadraticForm {
    pub const fn new(qq: f64, pp: f64, qp: f64, q: f64, p: f64, c: f64) -> Self {
        QuadraticForm { qq, pp, qp, q, p, c }
    }

    pub fn constant(c: f64) -> Self {
        QuadraticForm { c, ..Default::default() }
    }

    /// `(p² + q²)/2`.
    pub fn oscillator() -> Self {
        QuadraticForm::new(0.5, 0.5, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn from_coefficients(c: [f64; 6]) -> Self {
        QuadraticForm::new(c[0], c[1], c[2], c[3], c[4], c[5])
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.qq, self.pp, self.qp, self.q, self.p, self.c]
    }

    #[inline]
    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.qq * q * q + self.pp * p * p + self.qp * q * p + self.q * q + self.p * p + self.c
    }

    #[inline]
    pub fn d_q(&self, q: f64, p: f64) -> f64 {
        2.0 * self.qq * q + self.qp * p + self.q
    }

    #[inline]
    pub fn d_p(&self, q: f64, p: f64) -> f64 {
        2.0 * self.pp * p + self.qp * q + self.p
    }

    /// `p ∂_p H − H`.
    #[inline]
    pub fn lagrangian(&self, q: f64, p: f64) -> f64 {
        p * self.d_p(q, p) - self.eval(q, p)
    }

    pub fn add(&self, o: &QuadraticForm) -> QuadraticForm {
        QuadraticForm::new(
            self.qq + o.qq,
            self.pp + o.pp,
            self.qp + o.qp,
            self.q + o.q,
            self.p + o.p,
            self.c + o.c,
        )
    }

    pub fn scale(&self, s: f64) -> QuadraticForm {
        QuadraticForm::new(
            self.qq * s,
            self.pp * s,
            self.qp * s,
            self.q * s,
            self.p * s,
            self.c * s,
        )
    }

    /// `self ∘ (z ↦ m z + t)`.
    pub fn compose_affine(&self, m: [[f64; 2]; 2], t: [f64; 2]) -> QuadraticForm {
        // q' = a q + b p + t0, p' = c q + d p + t1
        let [[a, b], [c, d]] = m;
        let (t0, t1) = (t[0], t[1]);
        let s = self;
        QuadraticForm {
            qq: s.qq * a * a + s.pp * c * c + s.qp * a * c,
            pp: s.qq * b * b + s.pp * d * d + s.qp * b * d,
            qp: 2.0 * s.qq * a * b + 2.0 * s.pp * c * d + s.qp * (a * d + b * c),
            q: 2.0 * s.qq * a * t0 + 2.0 * s.pp * c * t1 + s.qp * (a * t1 + c * t0) + s.q * a + s.p * c,
            p: 2.0 * s.qq * b * t0 + 2.0 * s.pp * d * t1 + s.qp * (b * t1 + d * t0) + s.q * b + s.p * d,
            c: s.eval(t0, t1),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients().iter().all(|&x| x == 0.0)
    }
}

/// A real phase-space function used as a Hamiltonian or Lie-algebra element.
#[derive(Clone, Debug)]
pub enum HamiltonianFunction {
    Quadratic(QuadraticForm),
    /// Node values; derivatives are taken with the grid's scheme.
    Sampled(RealField),
}

impl HamiltonianFunction {
    pub fn quadratic(f: QuadraticForm) -> Self {
        HamiltonianFunction::Quadratic(f)
    }

    pub fn sampled(field: RealField) -> Result<Self> {
        if field.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("sampled Hamiltonian"));
        }
        Ok(HamiltonianFunction::Sampled(field))
    }

    pub fn from_fn(grid: Arc<PhaseSpaceGrid>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        HamiltonianFunction::sampled(RealField::from_fn(grid, f))
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticForm> {
        match self {
            HamiltonianFunction::Quadratic(f) => Some(f),
            HamiltonianFunction::Sampled(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            HamiltonianFunction::Quadratic(f) => f.is_zero(),
            HamiltonianFunction::Sampled(s) => s.data().iter().all(|&x| x == 0.0),
        }
    }

    pub fn on_grid(&self, grid: &Arc<PhaseSpaceGrid>) -> Result<HamiltonianFields> {
        HamiltonianFields::new(self, grid)
    }
}

impl From<QuadraticForm> for HamiltonianFunction {
    fn from(f: QuadraticForm) -> Self {
        HamiltonianFunction::Quadratic(f)
    }
}

/// Node values of `H`, `∂_q H`, `∂_p H` and the phase term `p ∂_p H − H`.
#[derive(Clone, Debug)]
pub struct HamiltonianFields {
    pub grid: Arc<PhaseSpaceGrid>,
    pub value: Vec<f64>,
    pub d_q: Vec<f64>,
    pub d_p: Vec<f64>,
    pub lagrangian: Vec<f64>,
    speed: f64,
}

impl HamiltonianFields {
    pub fn new(h: &HamiltonianFunction, grid: &Arc<PhaseSpaceGrid>) -> Result<Self> {
        let (value, d_q, d_p) = match h {
            HamiltonianFunction::Quadratic(f) => {
                let mut v = Vec::with_capacity(grid.len());
                let mut dq = Vec::with_capacity(grid.len());
                let mut dp = Vec::with_capacity(grid.len());
                for (q, p) in grid.nodes() {
                    v.push(f.eval(q, p));
                    dq.push(f.d_q(q, p));
                    dp.push(f.d_p(q, p));
                }
                (v, dq, dp)
            }
            HamiltonianFunction::Sampled(s) => {
                crate::phasespace::grid::same_grid(s.grid(), grid)?;
                let v = s.data().to_vec();
                let dq = grid.derivative_q_real(&v);
                let dp = grid.derivative_p_real(&v);
                (v, dq, dp)
            }
        };
        let lagrangian = grid
            .nodes()
            .enumerate()
            .map(|(k, (_, p))| p * d_p[k] - value[k])
            .collect();
        let speed = d_q
            .iter()
            .zip(&d_p)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max);
        Ok(HamiltonianFields {
            grid: grid.clone(),
            value,
            d_q,
            d_p,
            lagrangian,
            speed,
        })
    }

    /// Largest `|X_H| = |(∂_p H, −∂_q H)|` over the nodes.
    pub fn max_speed(&self) -> f64 {
        self.speed
    }
}

/// `dt ≤ cfl · min(dq, dp) / max|X_H|`; infinite when the flow is at rest.
pub fn cfl_limit(grid: &PhaseSpaceGrid, max_speed: f64, cfl: f64) -> f64 {
    if max_speed > 0.0 {
        cfl * grid.dq().min(grid.dp()) / max_speed
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::GridSpec;

    #[test]
    fn affine_composition_matches_pointwise() {
        let f = QuadraticForm::new(0.3, -1.2, 0.7, 0.4, -2.0, 1.5);
        let m = [[1.1, 0.4], [-0.3, 0.8]];
        let t = [0.25, -0.6];
        let g = f.compose_affine(m, t);
        for &(q, p) in &[(0.0, 0.0), (1.0, -2.0), (-0.7, 0.3), (3.0, 1.0)] {
            let qq = m[0][0] * q + m[0][1] * p + t[0];
            let pp = m[1][0] * q + m[1][1] * p + t[1];
            assert!((g.eval(q, p) - f.eval(qq, pp)).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_fields_are_exact() {
        let g = GridSpec::square(16, 3.0, 1.0).build().unwrap();
        let f = QuadraticForm::new(0.5, 0.5, 0.0, 0.0, 0.0, 0.0);
        let h = HamiltonianFunction::from(f).on_grid(&g).unwrap();
        for (k, (q, p)) in g.nodes().enumerate() {
            assert_eq!(h.value[k], 0.5 * (q * q + p * p));
            assert_eq!(h.d_q[k], q);
            assert_eq!(h.d_p[k], p);
            assert!((h.lagrangian[k] - 0.5 * (p * p - q * q)).abs() < 1e-14);
        }
    }

    #[test]
    fn sampled_rejects_nan() {
        let g = GridSpec::square(8, 1.0, 1.0).build().unwrap();
        let f = RealField::from_fn(g, |q, _| if q > 0.5 { f64::NAN } else { 0.0 });
        assert!(HamiltonianFunction::sampled(f).is_err());
    }
}
