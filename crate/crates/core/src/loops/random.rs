//! Random twisted loops of bounded degree for property tests.

use super::split::{g0_from_rho, pi_matrix, CMat2};
use super::{twisted_component, LoopError, TwistedLoop};
use crate::algebra::{complexify, li, CGroupElement, CMat4, CVec4, C};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomLoopOptions {
    /// Size of the random parameters.
    pub scale: f64,
    /// Multiply by `π_λ` (the second branch).
    pub with_pi: bool,
    pub translation: bool,
    /// Include the non-polynomial factor `exp(s L_i)`. Without it the loop is
    /// a Laurent polynomial of degree at most 8.
    pub exp_factor: bool,
}

impl Default for RandomLoopOptions {
    fn default() -> Self {
        Self { scale: 0.5, with_pi: false, translation: true, exp_factor: true }
    }
}

fn rc<R: Rng + ?Sized>(rng: &mut R, s: f64) -> C {
    C::new(rng.random_range(-s..s), rng.random_range(-s..s))
}

fn upper(x: C) -> CMat2 {
    CMat2::new(C::new(1.0, 0.0), x, C::new(0.0, 0.0), C::new(1.0, 0.0))
}

fn lower(x: C) -> CMat2 {
    CMat2::new(C::new(1.0, 0.0), C::new(0.0, 0.0), x, C::new(1.0, 0.0))
}

fn exp_li_c(s: C) -> CMat4 {
    CMat4::identity() * s.cos() + complexify(&li()) * s.sin()
}

/// Random twisted vector loop with modes in `ks`.
fn translation<R: Rng + ?Sized>(rng: &mut R, ks: &[i32], scale: f64) -> Vec<(i32, CVec4)> {
    ks.iter().map(|&k| (k, twisted_component(CVec4::from_fn(|_, _| rc(rng, scale)), k))).collect()
}

fn eval_translation(t: &[(i32, CVec4)], lambda: C) -> CVec4 {
    t.iter().map(|(k, v)| v * lambda.powi(*k)).sum()
}

/// Random loop in the complexified `SU(2)`, a Laurent polynomial in `μ = λ⁴`
/// with modes `μ⁻²..μ²`.
pub fn random_g0_loop<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64) -> Result<TwistedLoop, LoopError> {
    random_g0_loop_with(rng, m, scale, false)
}

fn random_g0_loop_with<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64, short: bool) -> Result<TwistedLoop, LoopError> {
    let (x, y) = (rc(rng, scale), rc(rng, scale));
    let d = C::from_polar(1.0 + rng.random_range(-scale..scale) * 0.5, rng.random_range(-3.0..3.0));
    let g0 = upper(x) * lower(y) * CMat2::new(d, C::new(0.0, 0.0), C::new(0.0, 0.0), d.inv());
    let (a, b, c) = (rc(rng, scale), rc(rng, scale), rc(rng, scale));
    TwistedLoop::from_fn(m, |l| {
        let mu = l.powi(4);
        let last = if short { CMat2::identity() } else { upper(c / mu) };
        let r = g0 * upper(a * mu) * lower(b / mu) * last;
        CGroupElement::new(g0_from_rho(&r), CVec4::zeros())
    })
}

/// Random twisted loop: an `SU(2)^C` factor, an optional factor `exp(s L_i)`
/// with `s` on modes `±2, ±6`, an optional `π_λ`, and a translation on odd
/// modes `|k| ≤ 7`. With `exp_factor` off the result has degree at most 8.
pub fn random_twisted_loop<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    opts: &RandomLoopOptions,
) -> Result<TwistedLoop, LoopError> {
    let g0 = random_g0_loop_with(rng, m, opts.scale, opts.with_pi && !opts.exp_factor)?;
    let sc: Vec<(i32, C)> = if opts.exp_factor {
        [-6, -2, 2, 6].iter().map(|&k| (k, rc(rng, 0.6 * opts.scale))).collect()
    } else {
        vec![]
    };
    let t = if opts.translation { translation(rng, &[-7, -5, -3, -1, 1, 3, 5, 7], opts.scale) } else { vec![] };
    let samples = g0
        .samples()
        .iter()
        .enumerate()
        .map(|(j, g)| {
            let l = g0.lambda(j);
            let s: C = sc.iter().map(|(k, c)| c * l.powi(*k)).sum();
            let mut rot = exp_li_c(s) * g.rotation;
            if opts.with_pi {
                rot = pi_matrix(l) * rot;
            }
            CGroupElement::new(rot, eval_translation(&t, l))
        })
        .collect();
    TwistedLoop::from_samples(samples)
}

/// Random loop extending holomorphically to the unit disk.
pub fn random_positive_loop<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64) -> Result<TwistedLoop, LoopError> {
    let (x, y) = (rc(rng, scale), rc(rng, scale));
    let g0 = upper(x) * lower(y);
    let (a, b) = (rc(rng, scale), rc(rng, scale));
    let sc: Vec<(i32, C)> = [2, 6].iter().map(|&k| (k, rc(rng, 0.6 * scale))).collect();
    let t = translation(rng, &[1, 3, 5, 7], scale);
    TwistedLoop::from_fn(m, |l| {
        let mu = l.powi(4);
        let r = g0 * upper(a * mu) * lower(b * mu);
        let s: C = sc.iter().map(|(k, c)| c * l.powi(*k)).sum();
        CGroupElement::new(exp_li_c(s) * g0_from_rho(&r), eval_translation(&t, l))
    })
}

/// Random loop extending holomorphically to `|λ| > 1` with value `Id` at ∞.
pub fn random_negative_loop<R: Rng + ?Sized>(rng: &mut R, m: usize, scale: f64) -> Result<TwistedLoop, LoopError> {
    let (a, b) = (rc(rng, scale), rc(rng, scale));
    let sc: Vec<(i32, C)> = [-2, -6].iter().map(|&k| (k, rc(rng, 0.6 * scale))).collect();
    let t = translation(rng, &[-1, -3, -5, -7], scale);
    TwistedLoop::from_fn(m, |l| {
        let mu = l.powi(4);
        let r = lower(a / mu) * upper(b / mu);
        let s: C = sc.iter().map(|(k, c)| c * l.powi(*k)).sum();
        CGroupElement::new(exp_li_c(s) * g0_from_rho(&r), eval_translation(&t, l))
    })
}
