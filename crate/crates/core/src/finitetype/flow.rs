//! Integration of `dξ = [ξ, α]` along straight segments with classical RK4.

use super::{lax_project, FiniteTypeError, KillingField};
use crate::algebra::{AlgebraElement, C};
use crate::verify::{Domain, ExtendedForm};
use nalgebra::Matrix5;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Default step `h = diam / DEFAULT_STEP_DIVISIONS`.
pub const DEFAULT_STEP_DIVISIONS: usize = 2048;

/// Number of `λ` samples used for the spectral invariants.
const SPECTRAL_SAMPLES: usize = 8;

/// `dξ/dt` along the direction `v`: `[ξ, A v + B v̄]` coefficientwise.
pub fn lax_rhs(xi: &KillingField, v: C) -> Vec<AlgebraElement> {
    let alpha = lax_project(xi).along(v);
    let d = xi.degree() as i32;
    (-d..=d)
        .map(|n| {
            (-2..=2).fold(AlgebraElement::zero(), |acc, j| {
                let x = xi.coeff(n - j);
                if x == AlgebraElement::zero() {
                    acc
                } else {
                    acc + x.bracket(&alpha[(j + 2) as usize])
                }
            })
        })
        .collect()
}

fn axpy(x: &[AlgebraElement], s: f64, y: &[AlgebraElement]) -> Vec<AlgebraElement> {
    x.iter().zip(y).map(|(a, b)| *a + *b * s).collect()
}

/// One RK4 step of length `h` along the unit-speed direction `v`.
pub fn lax_step(xi: &KillingField, v: C, h: f64) -> KillingField {
    let k1 = lax_rhs(xi, v);
    let x2 = xi.with_coeffs(axpy(xi.coeffs(), h / 2.0, &k1));
    let k2 = lax_rhs(&x2, v);
    let x3 = xi.with_coeffs(axpy(xi.coeffs(), h / 2.0, &k2));
    let k3 = lax_rhs(&x3, v);
    let x4 = xi.with_coeffs(axpy(xi.coeffs(), h, &k3));
    let k4 = lax_rhs(&x4, v);
    let out = (0..k1.len()).map(|i| xi.coeffs()[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0)).collect();
    xi.with_coeffs(out)
}

/// Fixed-step RK4 integrator with a step-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxIntegrator {
    /// Maximal step length.
    pub h: f64,
}

impl LaxIntegrator {
    pub fn for_domain(domain: &Domain) -> Self {
        Self { h: domain.diameter() / DEFAULT_STEP_DIVISIONS as f64 }
    }

    fn steps(&self, length: f64) -> Result<usize, FiniteTypeError> {
        if !(self.h.is_finite() && self.h > 0.0) || length / self.h > 1e8 {
            return Err(FiniteTypeError::StepSizeUnderflow { h: self.h, length });
        }
        Ok(((length / self.h).ceil() as usize).max(1))
    }

    /// `ξ(z1)` from `ξ(z0)` in `n` equal steps.
    pub fn integrate_steps(&self, xi: &KillingField, z0: C, z1: C, n: usize) -> KillingField {
        let length = (z1 - z0).norm();
        if length == 0.0 {
            return xi.clone();
        }
        let v = (z1 - z0) / length;
        let h = length / n as f64;
        (0..n).fold(xi.clone(), |acc, _| lax_step(&acc, v, h))
    }

    pub fn integrate(&self, xi: &KillingField, z0: C, z1: C) -> Result<KillingField, FiniteTypeError> {
        let n = self.steps((z1 - z0).norm())?;
        Ok(self.integrate_steps(xi, z0, z1, n))
    }

    /// `(ξ(z1), ‖ξ_h − ξ_{h/2}‖)`.
    pub fn integrate_with_error(
        &self,
        xi: &KillingField,
        z0: C,
        z1: C,
    ) -> Result<(KillingField, f64), FiniteTypeError> {
        let n = self.steps((z1 - z0).norm())?;
        let coarse = self.integrate_steps(xi, z0, z1, n);
        let fine = self.integrate_steps(xi, z0, z1, 2 * n);
        Ok((fine.clone(), coarse.max_diff(&fine) / 15.0))
    }
}

/// `ξ(z)` for the flow started at `ξ(z0) = ξ0`, along the segment `[z0, z]`.
pub fn lax_integrate(xi0: &KillingField, z0: C, z: C, h: f64) -> Result<KillingField, FiniteTypeError> {
    LaxIntegrator { h }.integrate(xi0, z0, z)
}

/// The flow on `domain.grid(n)`, started at the domain origin. Each row is
/// reached along the first column, then swept along the row.
pub fn lax_grid(
    xi0: &KillingField,
    domain: &Domain,
    grid_n: usize,
    h: f64,
) -> Result<Vec<Vec<KillingField>>, FiniteTypeError> {
    let grid = domain.grid(grid_n);
    let integ = LaxIntegrator { h };
    let origin = grid[0][0];
    let mut starts = Vec::with_capacity(grid.len());
    let mut cur = integ.integrate(xi0, origin, origin)?;
    let mut prev = origin;
    for row in &grid {
        cur = integ.integrate(&cur, prev, row[0])?;
        prev = row[0];
        starts.push(cur.clone());
    }
    grid.par_iter()
        .zip(starts.into_par_iter())
        .map(|(row, start)| {
            let mut out = Vec::with_capacity(row.len());
            let mut cur = start;
            out.push(cur.clone());
            for w in row.windows(2) {
                cur = integ.integrate(&cur, w[0], w[1])?;
                out.push(cur.clone());
            }
            Ok(out)
        })
        .collect()
}

/// Characteristic polynomial coefficients of a 5×5 matrix (Faddeev–LeVerrier),
/// `det(tI − M) = t⁵ + c₁t⁴ + … + c₅`.
pub fn char_poly(m: &Matrix5<C>) -> [C; 5] {
    let mut out = [C::new(0.0, 0.0); 5];
    let mut mk = Matrix5::<C>::identity();
    for k in 1..=5 {
        let am = m * mk;
        let c = -am.trace() / k as f64;
        out[k - 1] = c;
        mk = am + Matrix5::identity() * c;
    }
    out
}

/// Characteristic-polynomial coefficients of `ξ_λ` at the sample points
/// `λ = e^{2iπj/8}`: conjugation invariants of the Lax flow.
pub fn spectral_signature(xi: &KillingField) -> Vec<C> {
    (0..SPECTRAL_SAMPLES)
        .flat_map(|j| {
            let l = C::from_polar(1.0, 2.0 * PI * j as f64 / SPECTRAL_SAMPLES as f64);
            char_poly(&xi.eval(l).to_matrix5())
        })
        .collect()
}

/// Flow invariants over a grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaxReport {
    pub degree: usize,
    pub grid_n: usize,
    pub step: f64,
    /// `max |ξ̂_{−d}(z) − ξ̂_{−d}(z₀)|`.
    pub top_drift: f64,
    /// Drift of all even-exponent coefficients.
    pub even_drift: f64,
    /// Drift of the spectral signature.
    pub spectral_drift: f64,
    pub reality: f64,
    pub twist: f64,
    /// Largest coefficient with exponent `≡ 0 (mod 4)`.
    pub mod4: f64,
    /// `min |ξ̂_{−d+1}|` (regularity of the immersion).
    pub min_regular: f64,
    /// Step-halving error estimate along the domain diagonal.
    pub step_error: f64,
}

impl LaxReport {
    pub fn run(xi0: &KillingField, domain: &Domain, grid_n: usize, h: f64) -> Result<Self, FiniteTypeError> {
        let fields = lax_grid(xi0, domain, grid_n, h)?;
        let d = xi0.degree() as i32;
        let sig0 = spectral_signature(xi0);
        let mut r = LaxReport {
            degree: xi0.degree(),
            grid_n,
            step: h,
            top_drift: 0.0,
            even_drift: 0.0,
            spectral_drift: 0.0,
            reality: 0.0,
            twist: 0.0,
            mod4: 0.0,
            min_regular: f64::INFINITY,
            step_error: 0.0,
        };
        for xi in fields.iter().flatten() {
            r.top_drift = r.top_drift.max((xi.top() - xi0.top()).norm());
            for n in (-d..=d).filter(|n| n % 2 == 0) {
                r.even_drift = r.even_drift.max((xi.coeff(n) - xi0.coeff(n)).norm());
            }
            let sig = spectral_signature(xi);
            let scale = sig0.iter().map(|c| c.norm()).fold(1.0, f64::max);
            let drift = sig.iter().zip(&sig0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            r.spectral_drift = r.spectral_drift.max(drift / scale);
            r.reality = r.reality.max(xi.reality_defect());
            r.twist = r.twist.max(xi.twist_defect());
            r.mod4 = r.mod4.max(xi.mod4_defect());
            r.min_regular = r.min_regular.min(xi.coeff(-d + 1).norm());
        }
        let grid = domain.grid(grid_n);
        let far = *grid.last().and_then(|row| row.last()).unwrap_or(&grid[0][0]);
        r.step_error = LaxIntegrator { h }.integrate_with_error(xi0, grid[0][0], far)?.1;
        Ok(r)
    }
}

/// The projected 1-form of the flow, evaluated by integrating from a base
/// point in a fixed number of steps so that it depends smoothly on `z`.
#[derive(Debug, Clone)]
pub struct FlowForm {
    pub seed: KillingField,
    pub base: C,
    pub steps: usize,
}

impl FlowForm {
    pub fn new(seed: KillingField, base: C, steps: usize) -> Self {
        Self { seed, base, steps: steps.max(1) }
    }

    pub fn field(&self, z: C) -> KillingField {
        LaxIntegrator { h: 1.0 }.integrate_steps(&self.seed, self.base, z, self.steps)
    }
}

impl ExtendedForm for FlowForm {
    fn a(&self, z: C, lambda: C) -> AlgebraElement {
        lax_project(&self.field(z)).a(lambda)
    }

    fn b(&self, z: C, lambda: C) -> AlgebraElement {
        lax_project(&self.field(z)).b(lambda)
    }
}
