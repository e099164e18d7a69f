//! Closed-form Weierstrass-type construction of Hamiltonian stationary
//! Lagrangian tori from lattice data.
//!
//! A spinor `u = Σ_γ [â_γ e^{2iπ⟨γ,z⟩} ε + (2iγ̄/β₀) conj(â_γ) e^{−2iπ⟨γ,z⟩} L_iε̄]`
//! gives `dX = e^{βL_i/2}(u dz + ū dz̄)` with `β = 2π⟨β₀, z⟩`. Every form
//! involved is a finite sum of plane waves, integrated exactly.

use crate::algebra::{
    complexify, epsilon, exp_li, li, li_epsilon_bar, CVec4, GroupElement, Vec4, C, I,
};
use crate::lattice::{
    enumerate_frequencies, frequency_order, inner, periodicity_class, FrequencySet, Lattice, LatticeError,
    Periodicity, LATTICE_TOL,
};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("frequency {gamma} is not in the admissible set for slope {beta0}")]
    FrequencyNotAllowed { gamma: C, beta0: C },
    #[error("frequency {gamma} is resonant (γ² = (β₀/2)²)")]
    ResonantFrequency { gamma: C },
    #[error("spectral parameter {lambda} is not on the unit circle")]
    LambdaOffCircle { lambda: C },
    #[error("associated family at λ = {lambda} has period defect {defect:.3e}")]
    MonodromyWarning { lambda: C, defect: f64 },
}

/// Lattice, slope `β₀ ∈ Γ*` and coefficients `γ ↦ â_γ` on `Γ*_{β₀}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSpec {
    lattice: Lattice,
    beta0: C,
    coeffs: Vec<(C, C)>,
    frequencies: FrequencySet,
}

impl TorusSpec {
    /// Validates that every key lies in `Γ*_{β₀}`; repeated keys are summed and
    /// the map is stored in frequency order.
    pub fn new(lattice: Lattice, beta0: C, coeffs: impl IntoIterator<Item = (C, C)>) -> Result<Self, ConstructError> {
        let frequencies = enumerate_frequencies(&lattice, beta0)?;
        let mut merged: Vec<(C, C)> = Vec::new();
        for (gamma, a) in coeffs {
            let tol = LATTICE_TOL * (1.0 + gamma.norm());
            let Some(&g) = frequencies.points.iter().find(|p| (*p - gamma).norm() <= tol) else {
                return Err(ConstructError::FrequencyNotAllowed { gamma, beta0 });
            };
            match merged.iter_mut().find(|(k, _)| *k == g) {
                Some(entry) => entry.1 += a,
                None => merged.push((g, a)),
            }
        }
        merged.sort_by(|x, y| frequency_order(&x.0, &y.0));
        Ok(Self { lattice, beta0, coeffs: merged, frequencies })
    }

    pub fn zero(lattice: Lattice, beta0: C) -> Result<Self, ConstructError> {
        Self::new(lattice, beta0, std::iter::empty())
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn beta0(&self) -> C {
        self.beta0
    }

    pub fn coeffs(&self) -> &[(C, C)] {
        &self.coeffs
    }

    pub fn frequency_set(&self) -> &FrequencySet {
        &self.frequencies
    }

    pub fn coeff(&self, gamma: C) -> C {
        let tol = LATTICE_TOL * (1.0 + gamma.norm());
        self.coeffs.iter().find(|(g, _)| (g - gamma).norm() <= tol).map_or(C::new(0.0, 0.0), |(_, a)| *a)
    }

    pub fn active_frequencies(&self) -> Vec<C> {
        self.coeffs.iter().filter(|(_, a)| a.norm() > 0.0).map(|(g, _)| *g).collect()
    }

    pub fn periodicity(&self) -> Periodicity {
        periodicity_class(&self.lattice, self.beta0).expect("validated slope")
    }

    /// Lattice on which the spinor and the phase `e^{βL_i/2}` are periodic:
    /// Γ itself, or the cover 2Γ in the anti-periodic case.
    pub fn spinor_lattice(&self) -> Lattice {
        match self.periodicity() {
            Periodicity::TrulyPeriodic => self.lattice,
            Periodicity::AntiPeriodic => self.lattice.scaled(2.0),
        }
    }

    /// `c = ½ ∂β/∂z = π β̄₀ / 2`.
    pub fn c(&self) -> C {
        self.beta0.conj() * (PI / 2.0)
    }

    /// Same immersion in the coordinate `w` with `z = e^{iθ} w`.
    pub fn rotate_domain(&self, theta: f64) -> Result<TorusSpec, ConstructError> {
        let r = C::from_polar(1.0, theta);
        let rinv = r.conj();
        TorusSpec::new(
            self.lattice.rotated(-theta),
            self.beta0 * rinv,
            self.coeffs.iter().map(|(g, a)| (g * rinv, a * r)),
        )
    }

    /// R-linear combination `s·self + t·other` (same lattice and slope).
    pub fn combine(&self, s: f64, other: &TorusSpec, t: f64) -> Result<TorusSpec, ConstructError> {
        let iter = self.coeffs.iter().map(|(g, a)| (*g, a * s)).chain(other.coeffs.iter().map(|(g, a)| (*g, a * t)));
        TorusSpec::new(self.lattice, self.beta0, iter)
    }
}

/// `β(z) = 2π⟨β₀, z⟩`.
pub fn beta_eval(spec: &TorusSpec, z: C) -> f64 {
    2.0 * PI * inner(spec.beta0, z)
}

/// Harmonic conjugate of β vanishing at 0: `Im(2π β̄₀ z)`.
pub fn harmonic_conjugate(spec: &TorusSpec, z: C) -> f64 {
    (spec.beta0.conj() * z * (2.0 * PI)).im
}

/// `e^{iy}` for real `y`.
#[inline]
fn cis(y: f64) -> C {
    C::new(y.cos(), y.sin())
}

/// `φ(iy) = (e^{iy} − 1)/(iy)`, evaluated without cancellation.
#[inline]
fn phi_imag(y: f64) -> C {
    let h = 0.5 * y;
    let sinc = if h.abs() < 1e-4 { 1.0 - h * h / 6.0 } else { h.sin() / h };
    cis(h) * sinc
}

/// One frequency of a closed R⁴-valued 1-form `e^{2iπ⟨κ,z⟩}(p dz + q dz̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub kappa: C,
    pub p: CVec4,
    pub q: CVec4,
}

/// The real closed 1-form `Σ_κ e^{2iπ⟨κ,z⟩}(p_κ dz + q_κ dz̄)` with
/// `q_κ = conj(p_{−κ})`, and its primitive vanishing at the origin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierPrimitive {
    terms: Vec<FourierTerm>,
}

impl FourierPrimitive {
    /// Build from the `dz` part `Σ e^{2iπ⟨κ,z⟩} p_κ dz`; the `dz̄` part is its
    /// conjugate.
    pub fn from_dz_part(parts: impl IntoIterator<Item = (C, CVec4)>) -> Self {
        let mut merged: Vec<(C, CVec4)> = Vec::new();
        for (k, p) in parts {
            let tol = 1e-12 * (1.0 + k.norm());
            match merged.iter_mut().find(|(kk, _)| (*kk - k).norm() <= tol) {
                Some(e) => e.1 += p,
                None => merged.push((k, p)),
            }
        }
        let mut terms: Vec<FourierTerm> =
            merged.iter().map(|&(kappa, p)| FourierTerm { kappa, p, q: CVec4::zeros() }).collect();
        for (k, p) in &merged {
            let tol = 1e-12 * (1.0 + k.norm());
            match terms.iter_mut().find(|t| (t.kappa + k).norm() <= tol) {
                Some(t) => t.q += p.map(|z| z.conj()),
                None => terms.push(FourierTerm { kappa: -k, p: CVec4::zeros(), q: p.map(|z| z.conj()) }),
            }
        }
        Self { terms }
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    /// Largest violation of the per-frequency closedness `κ p = κ̄ q`.
    pub fn closedness_defect(&self) -> f64 {
        self.terms.iter().map(|t| (t.p * t.kappa - t.q * t.kappa.conj()).norm()).fold(0.0, f64::max)
    }

    /// `X(z) = Re Σ φ(2iπ⟨κ,z⟩)(p z + q z̄)`.
    pub fn eval(&self, z: C) -> Vec4 {
        let mut acc = CVec4::zeros();
        for t in &self.terms {
            let f = phi_imag(2.0 * PI * inner(t.kappa, z));
            acc += (t.p * z + t.q * z.conj()) * f;
        }
        acc.map(|x| x.re)
    }

    /// `∂X/∂z`.
    pub fn dz(&self, z: C) -> CVec4 {
        let mut acc = CVec4::zeros();
        for t in &self.terms {
            acc += t.p * cis(2.0 * PI * inner(t.kappa, z));
        }
        acc
    }
}

/// The pairs `(k, v)` with `u = Σ e^{2iπ⟨k,z⟩} v`.
pub fn spinor_modes(spec: &TorusSpec) -> Vec<(C, CVec4)> {
    let (e, f) = (epsilon(), li_epsilon_bar());
    let mut out = Vec::with_capacity(2 * spec.coeffs.len());
    for &(g, a) in &spec.coeffs {
        let b = (I * 2.0 * g.conj() / spec.beta0) * a.conj();
        out.push((g, e * a));
        out.push((-g, f * b));
    }
    out
}

/// `u(z)`.
pub fn spinor_u(spec: &TorusSpec, z: C) -> CVec4 {
    spinor_modes(spec).iter().map(|(k, v)| v * cis(2.0 * PI * inner(*k, z))).sum()
}

/// Holomorphic coefficients `(a, b)` with `u = aε + bL_iε̄`.
pub fn spinor_components(spec: &TorusSpec, z: C) -> (C, C) {
    let mut a = C::new(0.0, 0.0);
    let mut b = C::new(0.0, 0.0);
    for &(g, coef) in &spec.coeffs {
        let e = cis(2.0 * PI * inner(g, z));
        a += coef * e;
        b += (I * 2.0 * g.conj() / spec.beta0) * coef.conj() * e.conj();
    }
    (a, b)
}

fn family_primitive(spec: &TorusSpec, lambda: C) -> FourierPrimitive {
    let l = complexify(&li());
    let pp = (nalgebra::Matrix4::identity() - l * I) * C::new(0.5, 0.0);
    let pm = (nalgebra::Matrix4::identity() + l * I) * C::new(0.5, 0.0);
    let shift = lambda * lambda * spec.beta0 / 2.0;
    let linv = lambda.inv();
    let mut parts = Vec::new();
    for (k, v) in spinor_modes(spec) {
        parts.push((k + shift, pp * v * linv));
        parts.push((k - shift, pm * v * linv));
    }
    FourierPrimitive::from_dz_part(parts)
}

/// `X(z)` normalized by `X(0) = 0`.
pub fn immerse(spec: &TorusSpec, z: C) -> Vec4 {
    family_primitive(spec, C::new(1.0, 0.0)).eval(z)
}

/// Cached evaluator for `immerse`.
#[derive(Debug, Clone)]
pub struct Immersion {
    primitive: FourierPrimitive,
}

impl Immersion {
    pub fn new(spec: &TorusSpec) -> Self {
        Self { primitive: family_primitive(spec, C::new(1.0, 0.0)) }
    }

    pub fn eval(&self, z: C) -> Vec4 {
        self.primitive.eval(z)
    }

    pub fn primitive(&self) -> &FourierPrimitive {
        &self.primitive
    }
}

fn basis_vector(gamma: C, beta0: C, z: C) -> Result<CVec4, ConstructError> {
    let den = beta0 * beta0 - gamma * gamma * 4.0;
    if den.norm() < 1e-12 * (1.0 + beta0.norm_sqr()) {
        return Err(ConstructError::ResonantFrequency { gamma });
    }
    let v = CVec4::new(-I * gamma, -beta0 / 2.0, gamma, -I * beta0 / 2.0);
    Ok(v * (cis(-2.0 * PI * inner(gamma, z)) / den))
}

/// Closed-form basis immersion `A_γ` (unnormalized, `A_γ(0) ≠ 0`).
pub fn basis_a(gamma: C, beta0: C, z: C) -> Result<Vec4, ConstructError> {
    let v = basis_vector(gamma, beta0, z)?;
    Ok(exp_li(PI * inner(beta0, z)) * v.map(|x| x.re) * (4.0 / PI))
}

/// Closed-form basis immersion `B_γ`, the partner of `A_γ` for `iâ_γ`.
pub fn basis_b(gamma: C, beta0: C, z: C) -> Result<Vec4, ConstructError> {
    let v = basis_vector(gamma, beta0, z)?;
    Ok(exp_li(PI * inner(beta0, z)) * v.map(|x| x.im) * (4.0 / PI))
}

/// `Σ Re(â_γ) A_γ + Im(â_γ) B_γ`, equal to `immerse` plus a constant.
pub fn immerse_primitive(spec: &TorusSpec, z: C) -> Vec4 {
    spec.coeffs
        .iter()
        .map(|&(g, a)| {
            basis_a(g, spec.beta0, z).expect("admissible frequency") * a.re
                + basis_b(g, spec.beta0, z).expect("admissible frequency") * a.im
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub min_norm: f64,
    pub argmin: C,
    pub max_norm: f64,
    /// 1 when scanned on Γ, 2 on the cover 2Γ.
    pub cover: u32,
}

/// Minimum of `|u|` on a `grid_n × grid_n` grid of the spinor fundamental
/// domain. Advisory: a positive minimum at scan resolution is not a proof.
pub fn regularity_scan(spec: &TorusSpec, grid_n: usize) -> RegularityReport {
    let n = grid_n.max(2);
    let lat = spec.spinor_lattice();
    let (g1, g2) = lat.generators();
    let modes = spinor_modes(spec);
    let eval = |z: C| -> f64 { modes.iter().map(|(k, v)| v * cis(2.0 * PI * inner(*k, z))).sum::<CVec4>().norm() };
    let rows: Vec<(f64, C, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, C::new(0.0, 0.0), 0.0f64);
            for j in 0..n {
                let z = g1 * (i as f64 / n as f64) + g2 * (j as f64 / n as f64);
                let v = eval(z);
                if v < best.0 {
                    best.0 = v;
                    best.1 = z;
                }
                best.2 = best.2.max(v);
            }
            best
        })
        .collect();
    let mut report = RegularityReport { min_norm: f64::INFINITY, argmin: C::new(0.0, 0.0), max_norm: 0.0, cover: 1 };
    for (m, z, mx) in rows {
        if m < report.min_norm {
            report.min_norm = m;
            report.argmin = z;
        }
        report.max_norm = report.max_norm.max(mx);
    }
    report.cover = if spec.periodicity() == Periodicity::TrulyPeriodic { 1 } else { 2 };
    report
}

/// Period defect of the associated family along one lattice generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodDefect {
    pub generator: C,
    /// `X_λ(g) − X_λ(0)`.
    pub translation: [f64; 4],
    /// `β_λ(g)` reduced mod 4π to `(−2π, 2π]`; zero when the phase closes.
    pub phase: f64,
}

impl PeriodDefect {
    pub fn magnitude(&self) -> f64 {
        let t = self.translation.iter().map(|x| x * x).sum::<f64>().sqrt();
        let p = self.phase.abs();
        t.max(p)
    }
}

/// The member `X_λ` of the associated family, `dX_λ = e^{β_λL_i/2}(λ⁻¹u dz + λū dz̄)`.
#[derive(Debug, Clone)]
pub struct AssociatedFamily {
    lambda: C,
    beta0: C,
    lattice: Lattice,
    primitive: FourierPrimitive,
}

impl AssociatedFamily {
    pub fn new(spec: &TorusSpec, lambda: C) -> Result<Self, ConstructError> {
        if (lambda.norm() - 1.0).abs() > 1e-12 {
            return Err(ConstructError::LambdaOffCircle { lambda });
        }
        Ok(Self { lambda, beta0: spec.beta0, lattice: spec.lattice, primitive: family_primitive(spec, lambda) })
    }

    pub fn lambda(&self) -> C {
        self.lambda
    }

    pub fn eval(&self, z: C) -> Vec4 {
        self.primitive.eval(z)
    }

    /// `β_λ(z) = 2π⟨λ²β₀, z⟩`.
    pub fn beta_lambda(&self, z: C) -> f64 {
        2.0 * PI * inner(self.lambda * self.lambda * self.beta0, z)
    }

    /// Extended lift `(e^{β_λL_i/2}, X_λ)`.
    pub fn lift(&self, z: C) -> GroupElement {
        GroupElement::new(exp_li(0.5 * self.beta_lambda(z)), self.eval(z))
    }

    /// `dX_λ` evaluated on the tangent vector `v` at `z`.
    pub fn differential(&self, z: C, v: C) -> Vec4 {
        let d = self.primitive.dz(z) * v;
        d.map(|x| 2.0 * x.re)
    }

    pub fn primitive(&self) -> &FourierPrimitive {
        &self.primitive
    }

    pub fn period_defects(&self) -> [PeriodDefect; 2] {
        let (g1, g2) = self.lattice.generators();
        [g1, g2].map(|g| {
            let x = self.eval(g) - self.eval(C::new(0.0, 0.0));
            let four_pi = 4.0 * PI;
            let mut phase = self.beta_lambda(g).rem_euclid(four_pi);
            if phase > 2.0 * PI {
                phase -= four_pi;
            }
            // Sign flips of the phase (odd multiples of 2π) only act on the spinor.
            let reduced = phase.abs().min((phase.abs() - 2.0 * PI).abs());
            PeriodDefect { generator: g, translation: [x[0], x[1], x[2], x[3]], phase: reduced }
        })
    }

    /// Fails with `MonodromyWarning` when `X_λ` does not close on Γ.
    pub fn check_periods(&self, tol: f64) -> Result<(), ConstructError> {
        let defect = self.period_defects().iter().map(|d| d.magnitude()).fold(0.0, f64::max);
        if defect > tol {
            return Err(ConstructError::MonodromyWarning { lambda: self.lambda, defect });
        }
        Ok(())
    }
}

/// `X_λ(z)` for a single point.
pub fn associated_family(spec: &TorusSpec, lambda: C, z: C) -> Result<Vec4, ConstructError> {
    Ok(AssociatedFamily::new(spec, lambda)?.eval(z))
}

/// Rank data of the solution space for fixed `(Γ, β₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolutionSpace {
    pub card: usize,
    /// Numerical rank of `{A_γ, B_γ} ∪ {constant translations}`.
    pub vector_rank: usize,
    /// `vector_rank + 1`, adding the rotation of the Lagrangian angle.
    pub dimension: usize,
}

pub fn solution_space(lattice: &Lattice, beta0: C) -> Result<SolutionSpace, ConstructError> {
    let freqs = enumerate_frequencies(lattice, beta0)?;
    let card = freqs.card();
    let nfun = 2 * card + 4;
    let samples = nfun + 8;
    let (g1, g2) = lattice.generators();
    let golden = [0.754_877_666_246_692_7, 0.569_840_290_998_053_3];
    let points: Vec<C> = (1..=samples)
        .map(|k| {
            let (s, t) = ((k as f64 * golden[0]).fract(), (k as f64 * golden[1]).fract());
            g1 * s + g2 * t
        })
        .collect();
    let mut m = DMatrix::<f64>::zeros(nfun, 4 * samples);
    for (row, g) in freqs.points.iter().enumerate() {
        for (col, &z) in points.iter().enumerate() {
            let a = basis_a(*g, beta0, z)?;
            let b = basis_b(*g, beta0, z)?;
            for r in 0..4 {
                m[(2 * row, 4 * col + r)] = a[r];
                m[(2 * row + 1, 4 * col + r)] = b[r];
            }
        }
    }
    for r in 0..4 {
        for col in 0..samples {
            m[(2 * card + r, 4 * col + r)] = 1.0;
        }
    }
    let sv = m.singular_values();
    let smax = sv.max();
    let vector_rank = sv.iter().filter(|s| **s > 1e-9 * smax).count();
    Ok(SolutionSpace { card, vector_rank, dimension: vector_rank + 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{lagrangian_angle, normalize_angle, omega};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn square_spec() -> TorusSpec {
        let b0 = c(1.0, 1.0);
        TorusSpec::new(Lattice::square(), b0, [(b0.conj() / 2.0, c(PI, 0.0)), (-b0.conj() / 2.0, c(PI, 0.0))]).unwrap()
    }

    fn rhombic_spec() -> TorusSpec {
        let w = C::from_polar(1.0, PI / 3.0);
        let lat = Lattice::new(c(1.0, 0.0), w).unwrap().dual();
        TorusSpec::new(lat, c(2.0, 0.0), [(w, c(1.0, 0.0)), (w * w, c(1.0, 0.0))]).unwrap()
    }

    fn generic_spec() -> TorusSpec {
        let w = C::from_polar(1.0, PI / 3.0);
        let lat = Lattice::new(c(1.0, 0.0), w).unwrap().dual();
        TorusSpec::new(lat, c(2.0, 0.0), [(w, c(0.3, 0.7)), (w * w, c(-0.2, 0.1)), (-w, c(1.1, 0.0)), (-w * w, c(0.0, -0.4))])
            .unwrap()
    }

    fn fd_x(spec: &TorusSpec, z: C, h: f64) -> (Vec4, Vec4) {
        let f = |z| immerse(spec, z);
        let d = |dir: C| (f(z + dir * h) - f(z - dir * h)) * (2.0 / 3.0 / h) - (f(z + dir * 2.0 * h) - f(z - dir * 2.0 * h)) * (1.0 / 12.0 / h);
        (d(c(1.0, 0.0)), d(c(0.0, 1.0)))
    }

    #[test]
    fn beta_examples() {
        let spec = square_spec();
        assert_eq!(beta_eval(&spec, c(0.0, 0.0)), 0.0);
        assert!((beta_eval(&spec, c(1.0, 0.0)) - 2.0 * PI).abs() < 1e-15);
        assert!((beta_eval(&spec, c(0.5, 0.5)) - 2.0 * PI).abs() < 1e-15);
        // ½(β + iγ) is holomorphic and vanishes at 0.
        let w = |z| C::new(beta_eval(&spec, z), harmonic_conjugate(&spec, z));
        let z = c(0.3, -0.2);
        let h = 1e-6;
        let dzbar = (w(z + h) - w(z - h)) / (2.0 * h) + I * (w(z + I * h) - w(z - I * h)) / (2.0 * h);
        assert!(dzbar.norm() < 1e-8);
        assert_eq!(w(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn basis_a_example_and_resonance() {
        let b0 = c(1.0, 1.0);
        let g = c(0.5, -0.5);
        assert!(((b0 * b0 - g * g * 4.0) - c(0.0, 4.0)).norm() < 1e-15);
        let a0 = basis_a(g, b0, c(0.0, 0.0)).unwrap();
        // (4/π) Re[(−iγ, −β₀/2, γ, −iβ₀/2)/(4i)] computed by hand.
        let v = [-I * g, -b0 / 2.0, g, -I * b0 / 2.0].map(|x| (x / c(0.0, 4.0)).re * 4.0 / PI);
        for k in 0..4 {
            assert!((a0[k] - v[k]).abs() < 1e-15);
        }
        assert!(matches!(basis_a(b0 / 2.0, b0, c(0.1, 0.0)), Err(ConstructError::ResonantFrequency { .. })));
    }

    #[test]
    fn basis_periodicity_and_differential() {
        let spec = generic_spec();
        let (g1, g2) = spec.lattice().generators();
        for &(g, _) in spec.coeffs() {
            for z in [c(0.1, 0.2), c(-0.4, 0.35)] {
                for d in [g1, g2] {
                    let a = basis_a(g, spec.beta0(), z + d).unwrap() - basis_a(g, spec.beta0(), z).unwrap();
                    let b = basis_b(g, spec.beta0(), z + d).unwrap() - basis_b(g, spec.beta0(), z).unwrap();
                    assert!(a.amax() < 1e-12 && b.amax() < 1e-12);
                }
                // dA_γ = e^{βL_i/2}(v dz + v̄ dz̄).
                let h = 1e-4;
                let f = |z| basis_a(g, spec.beta0(), z).unwrap();
                let ax = (f(z + h) - f(z - h)) * (2.0 / 3.0 / h) - (f(z + 2.0 * h) - f(z - 2.0 * h)) * (1.0 / 12.0 / h);
                let one = TorusSpec::new(*spec.lattice(), spec.beta0(), [(g, c(1.0, 0.0))]).unwrap();
                let v = spinor_u(&one, z);
                let expect = exp_li(0.5 * beta_eval(&spec, z)) * v.map(|x| 2.0 * x.re);
                assert!((ax - expect).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn immerse_matches_normalized_primitive() {
        for spec in [square_spec(), rhombic_spec(), generic_spec()] {
            let p0 = immerse_primitive(&spec, c(0.0, 0.0));
            for z in [c(0.13, 0.71), c(-0.4, 0.2), c(1.7, -2.3)] {
                let d = immerse(&spec, z) - (immerse_primitive(&spec, z) - p0);
                assert!(d.amax() < 1e-12, "{d}");
            }
            assert_eq!(immerse(&spec, c(0.0, 0.0)), Vec4::zeros());
        }
        let p0 = immerse_primitive(&rhombic_spec(), c(0.0, 0.0));
        let expect = Vec4::new(2.0 / (PI * 3f64.sqrt()), -1.0 / PI, 0.0, 0.0);
        assert!((p0 - expect).amax() < 1e-14);
    }

    #[test]
    fn zero_spec_is_constant() {
        let spec = TorusSpec::zero(Lattice::square(), c(1.0, 1.0)).unwrap();
        assert_eq!(immerse(&spec, c(0.3, 0.4)), Vec4::zeros());
        assert_eq!(regularity_scan(&spec, 8).min_norm, 0.0);
    }

    #[test]
    fn spinor_is_the_twisted_derivative() {
        for spec in [square_spec(), generic_spec()] {
            for z in [c(0.2, 0.1), c(-0.3, 0.45)] {
                let (xx, xy) = fd_x(&spec, z, 1e-4);
                let dz = (xx.map(|v| C::new(v, 0.0)) - xy.map(|v| C::new(v, 0.0)) * I) * C::new(0.5, 0.0);
                let u = complexify(&exp_li(-0.5 * beta_eval(&spec, z))) * dz;
                assert!((u - spinor_u(&spec, z)).norm() < 1e-8);
            }
        }
        let w = C::from_polar(1.0, PI / 3.0);
        let spec = rhombic_spec();
        let one = TorusSpec::new(*spec.lattice(), spec.beta0(), [(w, c(1.0, 0.0))]).unwrap();
        let z = c(0.3, 0.2);
        let v = epsilon() * cis(2.0 * PI * inner(w, z))
            + li_epsilon_bar() * (I * 2.0 * w.conj() / spec.beta0()) * cis(-2.0 * PI * inner(w, z));
        assert!((spinor_u(&one, z) - v).norm() < 1e-15);
        assert!(spinor_u(&square_spec(), c(0.0, 0.0)).norm() > 1.0);
    }

    #[test]
    fn lin2_and_eigenvalue_equation() {
        let spec = generic_spec();
        let cz = spec.c();
        let h = 1e-4;
        for z in [c(0.1, 0.3), c(0.7, -0.2)] {
            let f = |z| spinor_u(&spec, z);
            let ux = (f(z + h) - f(z - h)) / C::new(2.0 * h, 0.0);
            let uy = (f(z + I * h) - f(z - I * h)) / C::new(2.0 * h, 0.0);
            let dzbar = (ux + uy * I) * C::new(0.5, 0.0);
            let rhs = complexify(&li()) * f(z).map(|x| x.conj()) * cz;
            assert!((dzbar - rhs).norm() < 1e-6);
            // Δψ + π²|β₀|²ψ = 0 for the components.
            let g = |z| spinor_components(&spec, z);
            let lap = |k: usize| {
                let v = |z| if k == 0 { g(z).0 } else { g(z).1 };
                (v(z + h) + v(z - h) + v(z + I * h) + v(z - I * h) - v(z) * 4.0) / (h * h)
            };
            for k in 0..2 {
                let psi = if k == 0 { g(z).0 } else { g(z).1 };
                assert!((lap(k) + psi * PI * PI * spec.beta0().norm_sqr()).norm() < 1e-4);
            }
        }
    }

    #[test]
    fn conjugate_pair_property() {
        let spec = rhombic_spec();
        let w = C::from_polar(1.0, PI / 3.0);
        let z = c(0.21, -0.37);
        let with_i = TorusSpec::new(*spec.lattice(), spec.beta0(), [(w, I)]).unwrap();
        let b = basis_b(w, spec.beta0(), z).unwrap() - basis_b(w, spec.beta0(), c(0.0, 0.0)).unwrap();
        assert!((immerse(&with_i, z) - b).amax() < 1e-12);
    }

    #[test]
    fn geometry_of_immersion() {
        for spec in [square_spec(), generic_spec()] {
            for z in [c(0.11, 0.23), c(-0.31, 0.17), c(0.4, 0.4)] {
                let (xx, xy) = fd_x(&spec, z, 1e-4);
                let scale = xx.norm_squared();
                assert!(xx.dot(&xy).abs() < 1e-7 * scale);
                assert!((xx.norm_squared() - xy.norm_squared()).abs() < 1e-7 * scale);
                assert!(omega(&xx, &xy).abs() < 1e-7 * scale);
                let theta = lagrangian_angle(&xx.normalize(), &xy.normalize()).unwrap();
                assert!(normalize_angle(theta - beta_eval(&spec, z)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn regularity_examples() {
        let r = regularity_scan(&square_spec(), 16);
        assert!((r.min_norm - PI * 2f64.sqrt()).abs() < 1e-12);
        assert!((r.max_norm - PI * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.cover, 2);
        // Coefficients chosen so that u vanishes at a grid point z*.
        let base = generic_spec();
        let lat = *base.lattice();
        let zs = lat.generators().0 * 0.25 + lat.generators().1 * 0.5;
        let freqs = base.frequency_set().points.clone();
        let mut m = DMatrix::<f64>::zeros(4, 2 * freqs.len());
        for (j, g) in freqs.iter().enumerate() {
            for (k, a) in [c(1.0, 0.0), I].into_iter().enumerate() {
                let one = TorusSpec::new(lat, base.beta0(), [(*g, a)]).unwrap();
                let (p, q) = spinor_components(&one, zs);
                let col = 2 * j + k;
                m[(0, col)] = p.re;
                m[(1, col)] = p.im;
                m[(2, col)] = q.re;
                m[(3, col)] = q.im;
            }
        }
        let eig = (m.transpose() * &m).symmetric_eigen();
        let null = eig.eigenvectors.column(eig.eigenvalues.imin());
        let coeffs: Vec<(C, C)> = freqs.iter().enumerate().map(|(j, g)| (*g, c(null[2 * j], null[2 * j + 1]))).collect();
        let spec = TorusSpec::new(lat, base.beta0(), coeffs).unwrap();
        assert!(spinor_u(&spec, zs).norm() < 1e-12);
        let r = regularity_scan(&spec, 8);
        assert!(r.min_norm < 1e-12 && r.max_norm > 0.1);
    }

    #[test]
    fn associated_family_limits() {
        let spec = generic_spec();
        for z in [c(0.2, 0.3), c(-0.7, 0.1)] {
            let x = immerse(&spec, z);
            assert!((associated_family(&spec, c(1.0, 0.0), z).unwrap() - x).amax() < 1e-14);
            assert!((associated_family(&spec, c(-1.0, 0.0), z).unwrap() + x).amax() < 1e-13);
        }
        assert!(AssociatedFamily::new(&spec, c(1.0, 0.0)).unwrap().check_periods(1e-10).is_ok());
        assert!(AssociatedFamily::new(&spec, c(0.5, 0.0)).is_err());
    }

    /// Composite Simpson integration of `dX_λ` along the segment `[0, z]`.
    fn path_integral(fam: &AssociatedFamily, u: impl Fn(C) -> CVec4, z: C) -> Vec4 {
        let n = 2000;
        let lam = fam.lambda();
        let integrand = |t: f64| {
            let p = z * t;
            let rot = exp_li(0.5 * fam.beta_lambda(p));
            let d = u(p) * (z / lam);
            rot * d.map(|x| 2.0 * x.re)
        };
        let h = 1.0 / n as f64;
        let mut acc = integrand(0.0) + integrand(1.0);
        for k in 1..n {
            acc += integrand(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (h / 3.0)
    }

    #[test]
    fn associated_family_against_path_integration() {
        let spec = generic_spec();
        for lam in [C::from_polar(1.0, 0.3), C::from_polar(1.0, PI / 4.0), c(-1.0, 0.0)] {
            let fam = AssociatedFamily::new(&spec, lam).unwrap();
            assert!(fam.primitive().closedness_defect() < 1e-12);
            for z in [c(0.37, 0.21), c(-0.5, 0.8)] {
                let oracle = path_integral(&fam, |p| spinor_u(&spec, p), z);
                assert!((fam.eval(z) - oracle).amax() < 1e-9);
            }
        }
        // λ = e^{iπ/4}: the family does not close on Γ; the reported defects
        // agree with numerical period integrals.
        let fam = AssociatedFamily::new(&spec, C::from_polar(1.0, PI / 4.0)).unwrap();
        let defects = fam.period_defects();
        let (g1, _) = spec.lattice().generators();
        let oracle = path_integral(&fam, |p| spinor_u(&spec, p), g1);
        for k in 0..4 {
            assert!((defects[0].translation[k] - oracle[k]).abs() < 1e-9);
        }
        assert!(matches!(fam.check_periods(1e-8), Err(ConstructError::MonodromyWarning { .. })));
    }

    #[test]
    fn solution_space_dimension() {
        let s = solution_space(&Lattice::square(), c(1.0, 1.0)).unwrap();
        assert_eq!((s.card, s.vector_rank, s.dimension), (2, 8, 9));
        let w = C::from_polar(1.0, PI / 3.0);
        let lat = Lattice::new(c(1.0, 0.0), w).unwrap().dual();
        let s = solution_space(&lat, c(2.0, 0.0)).unwrap();
        assert_eq!(s.dimension, 2 * s.card + 5);
        let s = solution_space(&Lattice::square(), c(6.0, 8.0)).unwrap();
        assert_eq!((s.card, s.dimension), (10, 25));
    }

    #[test]
    fn rotated_domain_is_a_reparametrization() {
        let spec = square_spec();
        let theta = PI / 4.0;
        let rot = spec.rotate_domain(theta).unwrap();
        assert!((rot.beta0() - c(2f64.sqrt(), 0.0)).norm() < 1e-14);
        for w in [c(0.3, 0.1), c(-0.2, 0.6)] {
            let z = w * C::from_polar(1.0, theta);
            assert!((immerse(&rot, w) - immerse(&spec, z)).amax() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn immerse_is_real_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, x in -1.0..1.0f64, y in -1.0..1.0f64) {
            let s1 = generic_spec();
            let s2 = rhombic_spec();
            let comb = s1.combine(a, &s2, b).unwrap();
            let z = c(x, y);
            let lhs = immerse(&comb, z);
            let rhs = immerse(&s1, z) * a + immerse(&s2, z) * b;
            prop_assert!((lhs - rhs).amax() < 1e-12);
        }

        #[test]
        fn immersion_is_periodic(x in -1.0..1.0f64, y in -1.0..1.0f64) {
            for spec in [square_spec(), generic_spec()] {
                let (g1, g2) = spec.lattice().generators();
                let z = c(x, y);
                let x0 = immerse(&spec, z);
                prop_assert!((immerse(&spec, z + g1) - x0).amax() < 1e-11);
                prop_assert!((immerse(&spec, z + g2) - x0).amax() < 1e-11);
            }
        }
    }
}
