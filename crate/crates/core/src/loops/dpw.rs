//! Holomorphic potentials `μ_λ = (λ⁻²/4 w′ L_i, λ⁻¹(aε + bL_iε̄))dz` and the
//! two directions of the correspondence with extended lifts.
//!
//! Reconstruction: `F_λ = e^{½β_λL_i}` with `β_λ = Re(λ⁻²w)` and
//! `X_λ = F_λ P(F_λ⁻¹ ∫ e^{(λ⁻²/4)wL_i} λ⁻¹(aε + bL_iε̄) dv)`.
//!
//! Extraction: `w` is twice the `λ⁻²` coefficient of `β_λ`, and
//! `aε + bL_iε̄ = ∂_z` of the `λ⁻¹` coefficient of `e^{−(λ⁻²/4)wL_i}X_λ`.

use super::{sample_lambda, to_coeffs, vec_coeffs, LoopError, VectorLoop};
use crate::algebra::{
    complexify, epsilon, exp_li, li, li_epsilon_bar, spinor_coords, CVec4, GroupElement, Mat4, C, I,
};
use crate::construct::{AssociatedFamily, TorusSpec};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Tolerance of the adaptive path quadrature.
pub const PATH_TOL: f64 = 1e-10;

/// Entire function `Σ poly[n] zⁿ + Σ c·e^{r z}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Holo {
    #[serde(default)]
    pub poly: Vec<C>,
    /// Pairs `(c, r)`.
    #[serde(default)]
    pub exp: Vec<(C, C)>,
}

impl Holo {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn taylor(poly: Vec<C>) -> Self {
        Self { poly, exp: vec![] }
    }

    pub fn exp_sum(exp: Vec<(C, C)>) -> Self {
        Self { poly: vec![], exp }
    }

    pub fn eval(&self, z: C) -> C {
        let p = self.poly.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c);
        p + self.exp.iter().map(|(c, r)| c * (r * z).exp()).sum::<C>()
    }

    pub fn derivative(&self) -> Self {
        let poly = self.poly.iter().enumerate().skip(1).map(|(n, c)| c * n as f64).collect();
        Self { poly, exp: self.exp.iter().map(|(c, r)| (c * r, *r)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().chain(self.exp.iter().map(|(c, _)| c)).all(|c| c.norm() == 0.0)
    }
}

/// Potential data `(w, a, b)` with `w = β + iβ*` holomorphic, `c = w′/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolomorphicPotential {
    pub w: Holo,
    pub a: Holo,
    pub b: Holo,
    #[serde(default)]
    pub base: C,
}

impl HolomorphicPotential {
    /// Affine angle `β = 2π⟨β₀, z⟩`.
    pub fn with_slope(beta0: C, a: Holo, b: Holo) -> Self {
        let w = Holo::taylor(vec![C::new(0.0, 0.0), beta0.conj() * (2.0 * PI)]);
        Self { w, a, b, base: C::new(0.0, 0.0) }
    }

    /// `c = ½ ∂β/∂z`.
    pub fn c(&self, z: C) -> C {
        self.w.derivative().eval(z) / 4.0
    }

    /// `β(z) = Re w(z)`.
    pub fn beta(&self, z: C) -> f64 {
        self.w.eval(z).re
    }
}

/// The potential of a torus spec: `w = 2πβ̄₀z`,
/// `a = Σ â_γ e^{iπγ̄z}`, `b = Σ (2iγ̄/β₀) conj(â_γ) e^{−iπγ̄z}`.
pub fn toric_potential(spec: &TorusSpec) -> HolomorphicPotential {
    let beta0 = spec.beta0();
    let a = spec.coeffs().iter().map(|&(g, c)| (c, I * PI * g.conj())).collect();
    let b = spec
        .coeffs()
        .iter()
        .map(|&(g, c)| ((I * 2.0 * g.conj() / beta0) * c.conj(), -I * PI * g.conj()))
        .collect();
    HolomorphicPotential::with_slope(beta0, Holo::exp_sum(a), Holo::exp_sum(b))
}

/// Evaluator of an extended lift `(F_λ, X_λ)` for `|λ| = 1`.
pub trait ExtendedLift: Sync {
    fn frame(&self, z: C, lambda: C) -> Result<GroupElement, LoopError>;

    fn frames(&self, z: C, lambdas: &[C]) -> Result<Vec<GroupElement>, LoopError> {
        lambdas.iter().map(|&l| self.frame(z, l)).collect()
    }
}

impl ExtendedLift for TorusSpec {
    fn frame(&self, z: C, lambda: C) -> Result<GroupElement, LoopError> {
        AssociatedFamily::new(self, lambda).map(|f| f.lift(z)).map_err(|_| LoopError::LambdaOffCircle { lambda })
    }
}

/// Extended lift given by reconstruction from a potential.
#[derive(Debug, Clone)]
pub struct DpwLift {
    pub potential: HolomorphicPotential,
}

impl ExtendedLift for DpwLift {
    fn frame(&self, z: C, lambda: C) -> Result<GroupElement, LoopError> {
        Ok(dpw_reconstruct(&self.potential, z, &[lambda])?.remove(0))
    }

    fn frames(&self, z: C, lambdas: &[C]) -> Result<Vec<GroupElement>, LoopError> {
        dpw_reconstruct(&self.potential, z, lambdas)
    }
}

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 16;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, t);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
                let dt = p1 / dp;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = t;
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        (x, w)
    })
}

fn gl_panel(f: &impl Fn(f64) -> Vec<CVec4>, a: f64, b: f64) -> Vec<CVec4> {
    let (x, w) = gauss_legendre();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc: Vec<CVec4> = Vec::new();
    for (xi, wi) in x.iter().zip(w) {
        let v = f(mid + half * xi);
        if acc.is_empty() {
            acc = vec![CVec4::zeros(); v.len()];
        }
        for (s, t) in acc.iter_mut().zip(&v) {
            *s += t * C::new(wi * half, 0.0);
        }
    }
    acc
}

fn max_diff(a: &[CVec4], b: &[CVec4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn adaptive(f: &impl Fn(f64) -> Vec<CVec4>, a: f64, b: f64, whole: Vec<CVec4>, scale: f64, depth: u32) -> Option<Vec<CVec4>> {
    let m = 0.5 * (a + b);
    let (l, r) = (gl_panel(f, a, m), gl_panel(f, m, b));
    let sum: Vec<CVec4> = l.iter().zip(&r).map(|(x, y)| x + y).collect();
    if max_diff(&sum, &whole) <= PATH_TOL * scale * (b - a).max(1e-3) {
        return Some(sum);
    }
    if depth == 0 {
        return None;
    }
    let left = adaptive(f, a, m, l, scale, depth - 1)?;
    let right = adaptive(f, m, b, r, scale, depth - 1)?;
    Some(left.iter().zip(&right).map(|(x, y)| x + y).collect())
}

/// Sample count resolving `e^{½Re(λ⁻²w)}`-type factors with `|w| ≤ wmax`.
fn lambda_samples(wmax: f64) -> usize {
    let x = 0.5 * wmax;
    let (mut n, mut term) = (0usize, 1.0f64);
    while term >= 1e-17 || (n as f64) < x {
        n += 1;
        term *= x / n as f64;
    }
    (4 * n + 16).next_power_of_two().max(64)
}

/// Extended lift at `z` for each `λ` on the unit circle, integrating along
/// the segment from the base point.
pub fn dpw_reconstruct(pot: &HolomorphicPotential, z: C, lambdas: &[C]) -> Result<Vec<GroupElement>, LoopError> {
    if let Some(&lambda) = lambdas.iter().find(|l| (l.norm() - 1.0).abs() > 1e-12) {
        return Err(LoopError::LambdaOffCircle { lambda });
    }
    let z0 = pot.base;
    let dz = z - z0;
    let wz = pot.w.eval(z);
    let wmax = (0..=8).map(|k| pot.w.eval(z0 + dz * (k as f64 / 8.0)).norm()).fold(0.0, f64::max);
    let m = lambda_samples(wmax);
    let lam: Vec<C> = (0..m).map(|j| sample_lambda(j, m)).collect();
    let (eps, feps) = (epsilon(), li_epsilon_bar());
    let l = complexify(&li());
    let integrand = |t: f64| -> Vec<CVec4> {
        let v = z0 + dz * t;
        let e = (eps * pot.a.eval(v) + feps * pot.b.eval(v)) * dz;
        let le = l * e;
        let wv = pot.w.eval(v) / 4.0;
        lam.iter()
            .map(|&lj| {
                let li2 = (lj * lj).inv();
                let th = li2 * wv;
                (e * th.cos() + le * th.sin()) * lj.inv()
            })
            .collect()
    };
    let first = gl_panel(&integrand, 0.0, 1.0);
    let scale = 1.0 + first.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let integral = adaptive(&integrand, 0.0, 1.0, first, scale, 30).ok_or(LoopError::PathIntegrationFailure { z })?;
    let frame = |lj: C| -> Mat4 { exp_li(0.5 * ((lj * lj).inv() * wz).re) };
    let v: Vec<CVec4> = lam.iter().zip(&integral).map(|(&lj, iv)| complexify(&frame(lj).transpose()) * iv).collect();
    let pv = VectorLoop::from_samples(v)?.p();
    let coeffs = pv.coeffs();
    Ok(lambdas
        .iter()
        .map(|&lj| {
            let p: CVec4 = coeffs.iter().map(|(k, c)| c * lj.powi(*k)).sum();
            let f = frame(lj);
            GroupElement::new(f, f * p.map(|x| x.re))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    /// Radius of the Cauchy circle about the origin; the potential is
    /// accurate on smaller disks.
    pub radius: f64,
    /// Points on the Cauchy circle (a power of two).
    pub nodes: usize,
    /// Relative size of the highest `λ`-modes accepted.
    pub tail_tol: f64,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { radius: 2.0, nodes: 256, tail_tol: 1e-14 }
    }
}

/// A recovered potential and its consistency defects.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub potential: HolomorphicPotential,
    /// Relative size of the negative Cauchy modes.
    pub holomorphy_defect: f64,
    /// Relative distance of `∂_z Ẑ₋₁` from `span(ε, L_iε̄)`.
    pub span_defect: f64,
}

/// `(w, Ẑ₋₁)` at one point, growing the `λ`-sample count until converged.
fn point_data<L: ExtendedLift + ?Sized>(lift: &L, z: C, tail_tol: f64) -> Result<(C, CVec4), LoopError> {
    let l = complexify(&li());
    let mut m = 64;
    loop {
        let lam: Vec<C> = (0..m).map(|j| sample_lambda(j, m)).collect();
        let frames = lift.frames(z, &lam)?;
        let mut half: Vec<f64> = Vec::with_capacity(m);
        for f in &frames {
            let mut t = f.rotation[(1, 0)].atan2(f.rotation[(0, 0)]);
            if let Some(prev) = half.last() {
                t += 2.0 * PI * ((prev - t) / (2.0 * PI)).round();
            }
            half.push(t);
        }
        let beta: Vec<C> = half.iter().map(|t| C::new(2.0 * t, 0.0)).collect();
        let bc = to_coeffs(&beta);
        let w = bc[m - 2] * 2.0;
        let zs: Vec<CVec4> = lam
            .iter()
            .zip(&frames)
            .map(|(&lj, f)| {
                let th = -(lj * lj).inv() * w / 4.0;
                let x = f.translation.map(|v| C::new(v, 0.0));
                x * th.cos() + l * x * th.sin()
            })
            .collect();
        let zc = vec_coeffs(&zs);
        let peak = zc.iter().map(|v| v.norm()).fold(0.0, f64::max).max(bc.iter().map(|c| c.norm()).fold(0.0, f64::max));
        let tail = (m / 4..3 * m / 4)
            .map(|i| zc[i].norm().max(bc[i].norm()))
            .fold(0.0, f64::max);
        if tail <= tail_tol * (1.0 + peak) {
            return Ok((w, zc[m - 1]));
        }
        if m >= 1 << 14 {
            return Err(LoopError::ExtractionFailure { reason: "λ-series does not converge".into(), defect: tail });
        }
        m *= 2;
    }
}

/// Recovers `(w, a, b)` from an extended lift as Taylor series about 0.
pub fn potential_extract<L: ExtendedLift + ?Sized>(lift: &L, opts: &ExtractOptions) -> Result<Extraction, LoopError> {
    let k = opts.nodes;
    if k < 8 || !k.is_power_of_two() {
        return Err(LoopError::BadSampleCount(k));
    }
    let r = opts.radius;
    let data: Vec<(C, CVec4)> = {
        use rayon::prelude::*;
        (0..k)
            .into_par_iter()
            .map(|j| point_data(lift, sample_lambda(j, k) * r, opts.tail_tol))
            .collect::<Result<_, _>>()?
    };
    let wc = to_coeffs(&data.iter().map(|d| d.0).collect::<Vec<_>>());
    let zc = vec_coeffs(&data.iter().map(|d| d.1).collect::<Vec<_>>());
    let half = k / 2;
    let peak = zc.iter().map(|v| v.norm()).fold(0.0, f64::max).max(wc.iter().map(|c| c.norm()).fold(0.0, f64::max));
    let negative = (half..k).map(|i| zc[i].norm().max(wc[i].norm())).fold(0.0, f64::max);
    let rn = |n: usize| r.powi(n as i32);
    let w_poly: Vec<C> = (0..half).map(|n| wc[n] / rn(n)).collect();
    let mut a_poly = Vec::with_capacity(half - 1);
    let mut b_poly = Vec::with_capacity(half - 1);
    let mut span: f64 = 0.0;
    let (eps, feps) = (epsilon(), li_epsilon_bar());
    for n in 0..half - 1 {
        let d = zc[n + 1] * C::new((n + 1) as f64 / rn(n + 1), 0.0);
        let (a, b) = spinor_coords(&d);
        span = span.max((d - eps * a - feps * b).norm() * rn(n));
        a_poly.push(a);
        b_poly.push(b);
    }
    Ok(Extraction {
        potential: HolomorphicPotential {
            w: Holo::taylor(w_poly),
            a: Holo::taylor(a_poly),
            b: Holo::taylor(b_poly),
            base: C::new(0.0, 0.0),
        },
        holomorphy_defect: negative / (1e-300 + peak),
        span_defect: span / (1e-300 + peak),
    })
}
