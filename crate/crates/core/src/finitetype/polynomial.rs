//! The Fourier recurrence along a Killing field and the resulting polynomial
//! condition on the frequencies.

use crate::algebra::C;
use nalgebra::DMatrix;
use serde::Serialize;

/// Closure tolerance relative to the size of the chain.
const CLOSURE_TOL: f64 = 1e-9;

/// `â_{γ,−p}, …, â_{γ,p}` and the closure condition `γâ_{γ,−p} = −γ̄â_{γ,p}`.
#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceChain {
    pub gamma: C,
    pub chain: Vec<C>,
    /// `|γâ_{γ,−p} + γ̄â_{γ,p}|`, relative to the chain size.
    pub closure: f64,
    pub closes: bool,
}

/// Runs `â_{γ,q+1} = c_q â_{γ,−p} + (2γ̄/β̄₀)² â_{γ,q}` for `q = −p, …, p−1`,
/// where `c` holds `c_{−p}, …, c_{p−1}`.
pub fn fourier_recurrence(beta0: C, c: &[C], gamma: C, a_start: C) -> RecurrenceChain {
    let x = (gamma.conj() * 2.0 / beta0.conj()).powi(2);
    let mut chain = vec![a_start];
    for &cq in c {
        let last = *chain.last().expect("chain is nonempty");
        chain.push(cq * a_start + x * last);
    }
    let end = *chain.last().expect("chain is nonempty");
    let scale = chain.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE) * gamma.norm().max(1.0);
    let closure = (gamma * a_start + gamma.conj() * end).norm() / scale;
    RecurrenceChain { gamma, chain, closure, closes: closure <= CLOSURE_TOL }
}

/// Polynomial `γ^{4p+2} + (β̄₀/2)(β₀/2)^{4p+1} Σ_{q=0}^{2p} c_{q−p−1}(2γ/β₀)^{2q}`
/// with its roots.
#[derive(Debug, Clone, Serialize)]
pub struct PolynomialCondition {
    pub p: usize,
    /// Coefficients in increasing degree; the last is 1.
    pub coeffs: Vec<C>,
    pub roots: Vec<C>,
}

impl PolynomialCondition {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: C) -> C {
        self.coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c)
    }
}

/// Per-frequency outcome of the polynomial test.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrequencyCondition {
    pub gamma: C,
    pub residual: f64,
    pub is_root: bool,
}

impl PolynomialCondition {
    /// Relative residual `|P(γ)| / Σ|c_k||γ|^k` at each frequency.
    pub fn check(&self, frequencies: &[C], tol: f64) -> Vec<FrequencyCondition> {
        frequencies
            .iter()
            .map(|&g| {
                let scale: f64 = self.coeffs.iter().enumerate().map(|(k, c)| c.norm() * g.norm().powi(k as i32)).sum();
                let residual = self.eval(g).norm() / scale.max(f64::MIN_POSITIVE);
                FrequencyCondition { gamma: g, residual, is_root: residual <= tol }
            })
            .collect()
    }
}

/// `c` holds `c_{−p}, …, c_{p−1}` (the convention `c_{−p−1} = 1` is implicit).
pub fn polynomial_condition(beta0: C, c: &[C], p: usize) -> PolynomialCondition {
    assert_eq!(c.len(), 2 * p, "expected c_{{−p}}, …, c_{{p−1}}");
    let d = 4 * p + 2;
    let h = beta0 / 2.0;
    let lead = h.conj() * h.powi(d as i32 - 1);
    let mut coeffs = vec![C::new(0.0, 0.0); d + 1];
    coeffs[d] = C::new(1.0, 0.0);
    for q in 0..=2 * p {
        // c_{q−p−1}: index q−1 into c, with c_{−p−1} = 1 at q = 0.
        let cq = if q == 0 { C::new(1.0, 0.0) } else { c[q - 1] };
        coeffs[2 * q] += lead * cq / h.powi(2 * q as i32);
    }
    let roots = polish(&coeffs, companion_roots(&coeffs));
    PolynomialCondition { p, coeffs, roots }
}

fn companion_roots(coeffs: &[C]) -> Vec<C> {
    let n = coeffs.len() - 1;
    let mut m = DMatrix::<C>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = C::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i] / coeffs[n];
    }
    m.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

fn polish(coeffs: &[C], roots: Vec<C>) -> Vec<C> {
    let deriv: Vec<C> = coeffs.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    let eval = |cs: &[C], z: C| cs.iter().rev().fold(C::new(0.0, 0.0), |acc, c| acc * z + c);
    roots
        .into_iter()
        .map(|mut z| {
            for _ in 0..50 {
                let dp = eval(&deriv, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = eval(coeffs, z) / dp;
                z -= step;
                if step.norm() <= 1e-16 * z.norm().max(1.0) {
                    break;
                }
            }
            z
        })
        .collect()
}
