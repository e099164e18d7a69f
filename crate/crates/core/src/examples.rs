//! Golden examples: rectangular product tori, the rhombic torus and the
//! Castro–Urbano lattices.

use crate::algebra::{Vec4, C};
use crate::construct::{ConstructError, TorusSpec};
use crate::lattice::{enumerate_frequencies, FrequencySet, Lattice, LatticeError, LATTICE_TOL};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExampleError {
    #[error("periods must be positive, got ({0}, {1})")]
    NonPositivePeriod(f64, f64),
    #[error("ratios p/q = {pq}, r/s = {rs} admit no angles with 0 ≤ α < β < π/2")]
    NoRealSolution { pq: f64, rs: f64 },
    #[error("integers must be positive")]
    NonPositiveInteger,
    #[error(transparent)]
    Construct(#[from] ConstructError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// `S¹(ω₁/2π) × S¹(ω₂/2π)` on `ω₁Z ⊕ iω₂Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardTorus {
    pub omega1: f64,
    pub omega2: f64,
    pub spec: TorusSpec,
}

impl StandardTorus {
    /// `(ω₁ sin(2πx/ω₁), −ω₁ cos(2πx/ω₁), ω₂ sin(2πy/ω₂), −ω₂ cos(2πy/ω₂))`.
    pub fn closed_form(&self, z: C) -> Vec4 {
        let (a, b) = (2.0 * PI * z.re / self.omega1, 2.0 * PI * z.im / self.omega2);
        Vec4::new(self.omega1 * a.sin(), -self.omega1 * a.cos(), self.omega2 * b.sin(), -self.omega2 * b.cos())
    }
}

pub fn standard_torus(omega1: f64, omega2: f64) -> Result<StandardTorus, ExampleError> {
    if !(omega1 > 0.0 && omega2 > 0.0) {
        return Err(ExampleError::NonPositivePeriod(omega1, omega2));
    }
    let lattice = Lattice::rectangular(omega1, omega2)?;
    let beta0 = C::new(1.0 / omega1, 1.0 / omega2);
    let half = beta0.conj() / 2.0;
    let spec = TorusSpec::new(lattice, beta0, [(half, C::new(PI, 0.0)), (-half, C::new(PI, 0.0))])?;
    Ok(StandardTorus { omega1, omega2, spec })
}

/// The truly periodic torus with `Γ* = Z ⊕ ωZ`, `ω = e^{iπ/3}`, `β₀ = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RhombicTorus {
    pub spec: TorusSpec,
}

impl RhombicTorus {
    /// `A_ω + A_{ω²}` written out in trigonometric form.
    pub fn closed_form(&self, z: C) -> Vec4 {
        let (x, y) = (z.re, z.im);
        let s3 = 3f64.sqrt();
        let (c2, s2) = ((2.0 * PI * x).cos(), (2.0 * PI * x).sin());
        let f = c2 * (PI * x).cos() + s2 * (PI * x + PI / 3.0).sin();
        let g = s2 * (PI * x).cos() - c2 * (PI * x + PI / 3.0).sin();
        let (cy, sy) = ((PI * y * s3).cos(), (PI * y * s3).sin());
        Vec4::new(cy * f, cy * g, sy * f, sy * g) * (2.0 / (PI * s3))
    }
}

pub fn rhombic_torus() -> RhombicTorus {
    let w = C::from_polar(1.0, PI / 3.0);
    let dual = Lattice::new(C::new(1.0, 0.0), w).expect("independent generators");
    let spec = TorusSpec::new(dual.dual(), C::new(2.0, 0.0), [(w, C::new(1.0, 0.0)), (w * w, C::new(1.0, 0.0))])
        .expect("admissible frequencies");
    RhombicTorus { spec }
}

/// A point of the circle `|γ| = 1/(2π)` together with its lattice status.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CirclePoint {
    pub point: C,
    /// Coordinates of `2γ` in the basis of Γ*, when integral.
    pub dual_coords: Option<(i64, i64)>,
    /// Whether `γ ∈ φ₀/2 + Γ*`.
    pub in_coset: bool,
}

/// Lattice data attached to Castro–Urbano parameters `(p, q, r, s)` with
/// `sin α / sin β = r/s` and `cos α / cos β = p/q`.
#[derive(Debug, Clone, PartialEq)]
pub struct CastroUrbanoFamily {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub s: u32,
    pub alpha: f64,
    pub beta: f64,
    /// `(qπ/cos β)Z ⊕ i(sπ/sin β)Z`.
    pub lattice: Lattice,
    /// `e^{iα}/π`.
    pub phi0: C,
    /// `Γ*`-points on the circle of radius `1/π`.
    pub circle: Vec<C>,
    /// `±e^{±iβ}/(2π)` and `±e^{±iα}/(2π)` with coset membership.
    pub half_points: Vec<CirclePoint>,
    /// Lattice carrying the spec: Γ when every `±e^{±iβ}/(2π)` lies in the
    /// coset `φ₀/2 + Γ*`, otherwise the cover 2Γ.
    pub spec_lattice: Lattice,
    /// `Γ*_{φ₀}` computed on `spec_lattice`.
    pub frequencies: FrequencySet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CastroUrbano {
    Family(Box<CastroUrbanoFamily>),
    /// `α = β`: the rectangular product tori.
    Degenerate(StandardTorus),
}

impl CastroUrbanoFamily {
    /// `γ = e^{iβ}/(2π)`.
    pub fn gamma(&self) -> C {
        C::from_polar(0.5 / PI, self.beta)
    }

    /// Coefficients at `γ, −γ, γ̄, −γ̄` subject to
    /// `â_{−γ} = −e^{−i(β+α)} conj(â_γ)` and `â_{−γ̄} = e^{i(β−α)} conj(â_γ̄)`.
    pub fn constrained_coeffs(&self, a_gamma: C, a_gamma_bar: C) -> [(C, C); 4] {
        let g = self.gamma();
        let (a, b) = (self.alpha, self.beta);
        [
            (g, a_gamma),
            (-g, -C::from_polar(1.0, -(b + a)) * a_gamma.conj()),
            (g.conj(), a_gamma_bar),
            (-g.conj(), C::from_polar(1.0, b - a) * a_gamma_bar.conj()),
        ]
    }

    /// Residual of the two coefficient constraints on `spec`.
    pub fn constraint_defect(&self, spec: &TorusSpec) -> f64 {
        let g = self.gamma();
        let expected = self.constrained_coeffs(spec.coeff(g), spec.coeff(g.conj()));
        expected.iter().map(|(k, v)| (spec.coeff(*k) - v).norm()).fold(0.0, f64::max)
    }

    /// Spec with slope φ₀ and the constrained coefficients, on `spec_lattice`.
    pub fn spec(&self, a_gamma: C, a_gamma_bar: C) -> Result<TorusSpec, ExampleError> {
        Ok(TorusSpec::new(self.spec_lattice, self.phi0, self.constrained_coeffs(a_gamma, a_gamma_bar))?)
    }
}

fn solve_angles(p: u32, q: u32, r: u32, s: u32) -> Result<(f64, f64), ExampleError> {
    let pq = p as f64 / q as f64;
    let rs = r as f64 / s as f64;
    let err = ExampleError::NoRealSolution { pq, rs };
    let den = rs * rs - pq * pq;
    if den.abs() < 1e-14 {
        return Err(err);
    }
    let sin2 = (1.0 - pq * pq) / den;
    if !(sin2 > 0.0 && sin2 < 1.0) {
        return Err(err);
    }
    let beta = sin2.sqrt().asin();
    let alpha = (rs * beta.sin()).atan2(pq * beta.cos());
    if !(alpha >= 0.0 && alpha < beta - 1e-12 && beta < PI / 2.0) {
        return Err(err);
    }
    Ok((alpha, beta))
}

pub fn castro_urbano(p: u32, q: u32, r: u32, s: u32) -> Result<CastroUrbano, ExampleError> {
    if q == 0 || s == 0 || p == 0 {
        return Err(ExampleError::NonPositiveInteger);
    }
    if p == q && r == s {
        // Every β solves the ratio equations; β = π/4 gives the square lattice.
        return Ok(CastroUrbano::Degenerate(standard_torus(PI * 2f64.sqrt(), PI * 2f64.sqrt())?));
    }
    let (alpha, beta) = solve_angles(p, q, r, s)?;
    let lattice = Lattice::rectangular(q as f64 * PI / beta.cos(), s as f64 * PI / beta.sin())?;
    let dual = lattice.dual();
    let phi0 = C::from_polar(1.0 / PI, alpha);
    let circle: Vec<C> = dual
        .coset_points_in_disk(C::new(0.0, 0.0), 1.0 / PI, LATTICE_TOL)
        .into_iter()
        .filter(|z| (z.norm() - 1.0 / PI).abs() <= LATTICE_TOL)
        .collect();
    let mut half_points = Vec::new();
    for angle in [beta, -beta, alpha, -alpha] {
        for sign in [1.0, -1.0] {
            let point = C::from_polar(sign * 0.5 / PI, angle);
            if half_points.iter().any(|h: &CirclePoint| (h.point - point).norm() < 1e-12) {
                continue;
            }
            let dual_coords = dual.integer_coords(point * 2.0, LATTICE_TOL);
            let in_coset = dual.contains(point - phi0 / 2.0, LATTICE_TOL);
            half_points.push(CirclePoint { point, dual_coords, in_coset });
        }
    }
    let beta_points_in_coset = half_points
        .iter()
        .filter(|h| (h.point.norm() > 0.0) && ((h.point.arg().abs() - beta).abs() < 1e-9 || ((PI - h.point.arg().abs()) - beta).abs() < 1e-9))
        .all(|h| h.in_coset);
    let spec_lattice = if beta_points_in_coset { lattice } else { lattice.scaled(2.0) };
    let frequencies = enumerate_frequencies(&spec_lattice, phi0)?;
    Ok(CastroUrbano::Family(Box::new(CastroUrbanoFamily {
        p,
        q,
        r,
        s,
        alpha,
        beta,
        lattice,
        phi0,
        circle,
        half_points,
        spec_lattice,
        frequencies,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{immerse, immerse_primitive};
    use crate::lattice::{periodicity_class, period_lattice, Periodicity};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn same_set(a: &[C], b: &[C]) -> bool {
        a.len() == b.len() && a.iter().all(|x| b.iter().any(|y| (x - y).norm() < 1e-9))
    }

    #[test]
    fn standard_torus_examples() {
        let t = standard_torus(1.0, 1.0).unwrap();
        assert_eq!(t.closed_form(C::new(0.0, 0.0)), Vec4::new(0.0, -1.0, 0.0, -1.0));
        assert_eq!(t.spec.periodicity(), Periodicity::AntiPeriodic);
        let t = standard_torus(1.3, 0.6).unwrap();
        assert_eq!(t.closed_form(C::new(0.0, 0.0)), Vec4::new(0.0, -1.3, 0.0, -0.6));
        let x0 = t.closed_form(C::new(0.0, 0.0));
        for z in [C::new(0.3, 0.1), C::new(-0.8, 0.45), C::new(2.0, -1.1)] {
            assert!((immerse(&t.spec, z) - (t.closed_form(z) - x0)).amax() < 1e-12);
        }
        assert!(standard_torus(0.0, 1.0).is_err());
    }

    #[test]
    fn rhombic_examples() {
        let t = rhombic_torus();
        let x0 = t.closed_form(C::new(0.0, 0.0));
        let expect = Vec4::new(2.0 / (PI * 3f64.sqrt()), -1.0 / PI, 0.0, 0.0);
        assert!((x0 - expect).amax() < 1e-15);
        assert_eq!(t.spec.periodicity(), Periodicity::TrulyPeriodic);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let z = C::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            assert!((immerse_primitive(&t.spec, z) - t.closed_form(z)).amax() < 1e-10);
            assert!((immerse(&t.spec, z) - (t.closed_form(z) - x0)).amax() < 1e-10);
        }
        // 1 and ω lie in Δ*, so Δ is not a proper sublattice cover.
        let delta = period_lattice(&t.spec).unwrap();
        let w = C::from_polar(1.0, PI / 3.0);
        assert!(delta.dual().contains(C::new(1.0, 0.0), LATTICE_TOL) && delta.dual().contains(w, LATTICE_TOL));
        assert!(delta.same_as(t.spec.lattice()));
    }

    fn family(p: u32, q: u32, r: u32, s: u32) -> CastroUrbanoFamily {
        match castro_urbano(p, q, r, s).unwrap() {
            CastroUrbano::Family(f) => *f,
            CastroUrbano::Degenerate(_) => panic!("unexpected degenerate case"),
        }
    }

    #[test]
    fn castro_urbano_tan_two() {
        let f = family(2, 1, 1, 2);
        assert!((f.beta.tan() - 2.0).abs() < 1e-12);
        assert!((f.alpha - (PI / 2.0 - f.beta)).abs() < 1e-12);
        let k = 1.0 / (5f64.sqrt() * PI);
        assert!(f.lattice.dual().same_as(&Lattice::rectangular(k, k).unwrap()));
        assert_eq!(f.lattice.dual().integer_coords(f.phi0, LATTICE_TOL), Some((2, 1)));
        let expected: Vec<C> = [f.alpha, -f.alpha, f.beta, -f.beta]
            .iter()
            .flat_map(|a| [C::from_polar(1.0 / PI, *a), -C::from_polar(1.0 / PI, *a)])
            .collect();
        assert_eq!(f.circle.len(), 8);
        assert!(same_set(&f.circle, &expected));
        // e^{iβ}/(2π) has Γ*-coordinates (1/2, 1): outside φ₀/2 + Γ*.
        assert!(f.half_points.iter().all(|h| h.dual_coords.is_some()));
        assert!(f.half_points.iter().filter(|h| (h.point.arg().abs() - f.beta).abs() < 1e-9).all(|h| !h.in_coset));
        assert!(f.spec_lattice.same_as(&f.lattice.scaled(2.0)));
        let g = f.gamma();
        let six = [g, -g, g.conj(), -g.conj(), f.phi0.conj() / 2.0, -f.phi0.conj() / 2.0];
        assert!(same_set(&f.frequencies.points, &six));
    }

    #[test]
    fn castro_urbano_spec_satisfies_constraints() {
        let f = family(2, 1, 1, 2);
        let spec = f.spec(C::new(0.7, -0.2), C::new(0.1, 0.4)).unwrap();
        assert!(f.constraint_defect(&spec) < 1e-15);
        assert_eq!(spec.active_frequencies().len(), 4);
        assert_eq!(periodicity_class(spec.lattice(), f.phi0).unwrap(), Periodicity::TrulyPeriodic);
        let (g1, g2) = spec.lattice().generators();
        let z = C::new(0.4, 1.3);
        let x = immerse(&spec, z);
        assert!((immerse(&spec, z + g1) - x).amax() < 1e-10);
        assert!((immerse(&spec, z + g2) - x).amax() < 1e-10);
    }

    #[test]
    fn castro_urbano_alpha_zero() {
        // r = 0 gives α = 0.
        let (alpha, beta) = solve_angles(3, 1, 0, 1).unwrap();
        assert_eq!(alpha, 0.0);
        assert!((beta.cos() - 1.0 / 3.0).abs() < 1e-12);
        let f = castro_urbano_unchecked(3, 1, 0, 1);
        let g = f.gamma();
        assert!(same_set(&f.frequencies.points, &[g, -g, g.conj(), -g.conj()]));
    }

    fn castro_urbano_unchecked(p: u32, q: u32, r: u32, s: u32) -> CastroUrbanoFamily {
        match castro_urbano(p, q, r, s) {
            Ok(CastroUrbano::Family(f)) => *f,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn castro_urbano_degenerate_and_invalid() {
        match castro_urbano(3, 3, 2, 2).unwrap() {
            CastroUrbano::Degenerate(t) => {
                assert!(t.spec.lattice().same_as(&Lattice::rectangular(PI * 2f64.sqrt(), PI * 2f64.sqrt()).unwrap()));
                assert!((t.spec.beta0() - C::from_polar(1.0 / PI, PI / 4.0)).norm() < 1e-14);
            }
            CastroUrbano::Family(_) => panic!("expected degenerate"),
        }
        assert!(matches!(castro_urbano(1, 2, 1, 2), Err(ExampleError::NoRealSolution { .. })));
        assert!(matches!(castro_urbano(1, 2, 2, 1), Err(ExampleError::NoRealSolution { .. })));
        assert!(matches!(castro_urbano(0, 1, 1, 1), Err(ExampleError::NonPositiveInteger)));
    }

    #[test]
    fn castro_urbano_more_parameters() {
        // tan β = 3, α = π/2 − β: sin α/sin β = 1/3, cos α/cos β = 3.
        let f = family(3, 1, 1, 3);
        assert!((f.beta.tan() - 3.0).abs() < 1e-12);
        assert_eq!(f.circle.len(), 8);
        // p ≡ q and r ≡ s (mod 2): the frequencies live on Γ itself.
        assert!(f.spec_lattice.same_as(&f.lattice));
        let g = f.gamma();
        let six = [g, -g, g.conj(), -g.conj(), f.phi0.conj() / 2.0, -f.phi0.conj() / 2.0];
        assert!(same_set(&f.frequencies.points, &six));
    }
}
