//! Lattices in C, dual lattices and the frequency sets `Γ*_{β₀}`.

use crate::algebra::C;
use crate::construct::TorusSpec;
use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Membership tolerance on lattice coordinates.
pub const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("lattice generators {g1} and {g2} are not R-independent")]
    DegenerateLattice { g1: C, g2: C },
    #[error("slope {beta0} is not a nonzero point of the dual lattice")]
    SlopeNotInDualLattice { beta0: C },
    #[error("frequency {gamma} is not in the dual lattice")]
    NotInDualLattice { gamma: C },
    #[error("no nonzero coefficient: the period lattice is undefined")]
    EmptySpectrum,
    #[error("frequency differences span a rank-{rank} group, not a lattice")]
    RankDeficient { rank: usize },
}

/// Euclidean inner product of R² ≅ C: `⟨a, b⟩ = Re(a b̄)`.
#[inline]
pub fn inner(a: C, b: C) -> f64 {
    a.re * b.re + a.im * b.im
}

/// A lattice `g1 Z ⊕ g2 Z` in C.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    g1: C,
    g2: C,
}

impl Lattice {
    pub fn new(g1: C, g2: C) -> Result<Self, LatticeError> {
        let area = (g1.conj() * g2).im;
        if !(area.abs() > 1e-12 * g1.norm() * g2.norm()) {
            return Err(LatticeError::DegenerateLattice { g1, g2 });
        }
        Ok(Self { g1, g2 })
    }

    /// `Z ⊕ iZ`.
    pub fn square() -> Self {
        Self { g1: C::new(1.0, 0.0), g2: C::new(0.0, 1.0) }
    }

    /// `ω₁Z ⊕ iω₂Z`.
    pub fn rectangular(w1: f64, w2: f64) -> Result<Self, LatticeError> {
        Self::new(C::new(w1, 0.0), C::new(0.0, w2))
    }

    pub fn generators(&self) -> (C, C) {
        (self.g1, self.g2)
    }

    pub fn point(&self, m: i64, n: i64) -> C {
        self.g1 * m as f64 + self.g2 * n as f64
    }

    /// Real 2x2 matrix whose columns are the generators.
    fn basis_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.g1.re, self.g2.re, self.g1.im, self.g2.im)
    }

    /// Coordinates `(x, y)` with `z = x g1 + y g2`.
    pub fn coords(&self, z: C) -> (f64, f64) {
        let inv = self.basis_matrix().try_inverse().expect("validated lattice");
        let v = inv * nalgebra::Vector2::new(z.re, z.im);
        (v[0], v[1])
    }

    /// Integer coordinates of `z` if it lies on the lattice.
    pub fn integer_coords(&self, z: C, tol: f64) -> Option<(i64, i64)> {
        let (x, y) = self.coords(z);
        let (m, n) = (x.round(), y.round());
        ((x - m).abs() <= tol && (y - n).abs() <= tol).then_some((m as i64, n as i64))
    }

    pub fn contains(&self, z: C, tol: f64) -> bool {
        self.integer_coords(z, tol).is_some()
    }

    /// Whether `other ⊆ self`.
    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        self.contains(other.g1, LATTICE_TOL) && self.contains(other.g2, LATTICE_TOL)
    }

    pub fn same_as(&self, other: &Lattice) -> bool {
        self.contains_lattice(other) && other.contains_lattice(self)
    }

    /// Generators `g*` with `⟨g*_i, g_j⟩ = δ_ij`.
    pub fn dual(&self) -> Lattice {
        let d = self.basis_matrix().try_inverse().expect("validated lattice").transpose();
        Lattice { g1: C::new(d[(0, 0)], d[(1, 0)]), g2: C::new(d[(0, 1)], d[(1, 1)]) }
    }

    pub fn scaled(&self, s: f64) -> Lattice {
        Lattice { g1: self.g1 * s, g2: self.g2 * s }
    }

    /// Lattice rotated by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Lattice {
        let r = C::from_polar(1.0, theta);
        Lattice { g1: self.g1 * r, g2: self.g2 * r }
    }

    pub fn covolume(&self) -> f64 {
        (self.g1.conj() * self.g2).im.abs()
    }

    /// `|g1| + |g2|`, the length scale used for finite-difference steps.
    pub fn diameter(&self) -> f64 {
        self.g1.norm() + self.g2.norm()
    }

    /// Index `[self : sub]` of a sublattice.
    pub fn index_of(&self, sub: &Lattice) -> f64 {
        sub.covolume() / self.covolume()
    }

    /// Lagrange-Gauss reduced basis.
    pub fn reduced(&self) -> Lattice {
        let (mut a, mut b) = (self.g1, self.g2);
        if a.norm_sqr() > b.norm_sqr() {
            std::mem::swap(&mut a, &mut b);
        }
        loop {
            let mu = (inner(a, b) / a.norm_sqr()).round();
            b -= a * mu;
            if b.norm_sqr() >= a.norm_sqr() {
                break;
            }
            std::mem::swap(&mut a, &mut b);
        }
        Lattice { g1: a, g2: b }
    }

    /// All points `center + v`, `v ∈ self`, inside the closed disk of radius
    /// `radius + tol` around the origin.
    pub fn coset_points_in_disk(&self, center: C, radius: f64, tol: f64) -> Vec<C> {
        // Coordinates w.r.t. (g1, g2) are ⟨p, g_j*⟩ and |⟨p, g_j*⟩| ≤ |p| |g_j*|.
        let dual = self.dual();
        let (c1, c2) = self.coords(center);
        let r = radius + tol;
        let range = |c: f64, g: C| {
            let bound = r * g.norm();
            ((-bound - c).floor() as i64 - 1, (bound - c).ceil() as i64 + 1)
        };
        let (m0, m1) = range(c1, dual.g1);
        let (n0, n1) = range(c2, dual.g2);
        let mut out = Vec::new();
        for m in m0..=m1 {
            for n in n0..=n1 {
                let p = center + self.point(m, n);
                if p.norm() <= r {
                    out.push(p);
                }
            }
        }
        out
    }
}

/// The set `Γ*_{β₀}` with its slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySet {
    pub beta0: C,
    pub points: Vec<C>,
}

impl FrequencySet {
    pub fn card(&self) -> usize {
        self.points.len()
    }

    pub fn contains(&self, gamma: C, tol: f64) -> bool {
        self.points.iter().any(|p| (p - gamma).norm() <= tol * (1.0 + gamma.norm()))
    }
}

/// Deterministic ordering: by argument in `(−π, π]`, then by modulus.
pub fn frequency_order(a: &C, b: &C) -> Ordering {
    let key = |z: &C| {
        let arg = if z.norm() == 0.0 { 0.0 } else { crate::algebra::normalize_angle(z.arg()) };
        (arg, z.norm())
    };
    let (ka, kb) = (key(a), key(b));
    ka.0.partial_cmp(&kb.0).unwrap_or(Ordering::Equal).then(ka.1.partial_cmp(&kb.1).unwrap_or(Ordering::Equal))
}

pub fn dual(lattice: &Lattice) -> Lattice {
    lattice.dual()
}

fn check_slope(lattice: &Lattice, beta0: C) -> Result<Lattice, LatticeError> {
    let dual = lattice.dual();
    if beta0.norm() <= LATTICE_TOL || !dual.contains(beta0, LATTICE_TOL) {
        return Err(LatticeError::SlopeNotInDualLattice { beta0 });
    }
    Ok(dual)
}

/// `Γ*_{β₀}`: points of `β₀/2 + Γ*` on the circle of radius `|β₀/2|`, without
/// `±β₀/2`.
pub fn enumerate_frequencies(lattice: &Lattice, beta0: C) -> Result<FrequencySet, LatticeError> {
    let dual = check_slope(lattice, beta0)?;
    let half = beta0 / 2.0;
    let r = half.norm();
    let tol = LATTICE_TOL * r.max(1.0);
    let mut points: Vec<C> = dual
        .coset_points_in_disk(half, r, tol)
        .into_iter()
        .filter(|g| (g.norm() - r).abs() <= tol && (g * g - half * half).norm() > tol * r)
        .collect();
    points.sort_by(frequency_order);
    Ok(FrequencySet { beta0, points })
}

/// Whether `e^{βL_i/2}` is Γ-periodic or only 2Γ-periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Periodicity {
    TrulyPeriodic,
    AntiPeriodic,
}

pub fn periodicity_class(lattice: &Lattice, beta0: C) -> Result<Periodicity, LatticeError> {
    let dual = check_slope(lattice, beta0)?;
    Ok(if dual.contains(beta0 / 2.0, LATTICE_TOL) { Periodicity::TrulyPeriodic } else { Periodicity::AntiPeriodic })
}

/// Dimension `2 Card(Γ*_{β₀}) + 5` of the space of solutions.
pub fn moduli_dimension(card: usize) -> usize {
    2 * card + 5
}

/// Z-span of integer vectors in Hermite normal form: rows `(a, b)`, `(0, d)`
/// with `a, d ≥ 0`. Returns the rank and the basis.
pub fn integer_span(vectors: &[(i64, i64)]) -> (usize, [(i64, i64); 2]) {
    fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
        if b == 0 {
            (a.abs(), a.signum(), 0)
        } else {
            let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
            (g, y, x - a.div_euclid(b) * y)
        }
    }
    let (mut a, mut b, mut d) = (0i64, 0i64, 0i64);
    for &(x, y) in vectors {
        let (g, s, t) = ext_gcd(a, x);
        let (na, nb) = if g == 0 { (0, 0) } else { (g, s * b + t * y) };
        // Remainder with zero first coordinate.
        let rem = if g == 0 { y } else { (x / g) * b - (a / g) * y };
        let (g2, _, _) = ext_gcd(d, rem);
        a = na;
        b = nb;
        d = g2;
        if d != 0 {
            b = b.rem_euclid(d);
        }
    }
    if a == 0 {
        // Everything lies on the second axis.
        let rank = usize::from(d != 0);
        return (rank, [(0, d), (0, 0)]);
    }
    let rank = if d == 0 { 1 } else { 2 };
    (rank, [(a, b), (0, d)])
}

/// Lattice `Δ` of periods of the immersion: the dual of the lattice generated by
/// `γ ± β₀/2` over the active frequencies.
pub fn period_lattice_of(lattice: &Lattice, beta0: C, active: &[C]) -> Result<Lattice, LatticeError> {
    if active.is_empty() {
        return Err(LatticeError::EmptySpectrum);
    }
    let dual = lattice.dual();
    let mut vecs = Vec::new();
    for &g in active {
        for k in [g - beta0 / 2.0, g + beta0 / 2.0] {
            let v = dual.integer_coords(k, LATTICE_TOL).ok_or(LatticeError::NotInDualLattice { gamma: g })?;
            vecs.push(v);
        }
    }
    let (rank, [(a, b), (_, d)]) = integer_span(&vecs);
    if rank < 2 {
        return Err(LatticeError::RankDeficient { rank });
    }
    let (h1, h2) = dual.generators();
    let span = Lattice::new(h1 * a as f64 + h2 * b as f64, h2 * d as f64)?;
    Ok(span.dual().reduced())
}

pub fn period_lattice(spec: &TorusSpec) -> Result<Lattice, LatticeError> {
    let active: Vec<C> = spec.coeffs().iter().filter(|(_, a)| a.norm() > 0.0).map(|(g, _)| *g).collect();
    period_lattice_of(spec.lattice(), spec.beta0(), &active)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    /// Independent oracle: scan a large box of dual-lattice coordinates.
    fn brute_force(lattice: &Lattice, beta0: C, k: i64) -> Vec<C> {
        let dual = lattice.dual();
        let half = beta0 / 2.0;
        let mut out = Vec::new();
        for m in -k..=k {
            for n in -k..=k {
                let g = half + dual.point(m, n);
                if (g.norm() - half.norm()).abs() < 1e-9 && (g - half).norm() > 1e-9 && (g + half).norm() > 1e-9 {
                    out.push(g);
                }
            }
        }
        out.sort_by(frequency_order);
        out
    }

    fn same_set(a: &[C], b: &[C]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-9)
    }

    #[test]
    fn dual_examples() {
        let sq = Lattice::square();
        assert!(sq.dual().same_as(&sq));
        let rect = Lattice::rectangular(2.0, 0.5).unwrap();
        assert!(rect.dual().same_as(&Lattice::rectangular(0.5, 2.0).unwrap()));
        let w = C::from_polar(1.0, PI / 3.0);
        let hex = Lattice::new(c(1.0, 0.0), w).unwrap();
        let d = hex.dual();
        let (d1, d2) = d.generators();
        assert!((inner(d1, c(1.0, 0.0)) - 1.0).abs() < 1e-12 && inner(d1, w).abs() < 1e-12);
        assert!(inner(d2, c(1.0, 0.0)).abs() < 1e-12 && (inner(d2, w) - 1.0).abs() < 1e-12);
        assert!(d.dual().same_as(&hex));
        assert!(Lattice::new(c(1.0, 1.0), c(2.0, 2.0)).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let sq = Lattice::square();
        let f = enumerate_frequencies(&sq, c(1.0, 1.0)).unwrap();
        assert!(same_set(&f.points, &[c(0.5, -0.5), c(-0.5, 0.5)]));
        let f = enumerate_frequencies(&sq, c(6.0, 8.0)).unwrap();
        assert_eq!(f.card(), 10);
        assert!(same_set(&f.points, &brute_force(&sq, c(6.0, 8.0), 12)));
        let f = enumerate_frequencies(&sq, c(2.0, 0.0)).unwrap();
        assert!(same_set(&f.points, &[c(0.0, -1.0), c(0.0, 1.0)]));
        assert!(matches!(enumerate_frequencies(&sq, c(0.5, 0.0)), Err(LatticeError::SlopeNotInDualLattice { .. })));
    }

    #[test]
    fn periodicity_examples() {
        let sq = Lattice::square();
        assert_eq!(periodicity_class(&sq, c(2.0, 0.0)).unwrap(), Periodicity::TrulyPeriodic);
        let rect = Lattice::rectangular(1.5, 0.7).unwrap();
        assert_eq!(periodicity_class(&rect, c(1.0 / 1.5, 1.0 / 0.7)).unwrap(), Periodicity::AntiPeriodic);
        let hex = Lattice::new(c(1.0, 0.0), C::from_polar(1.0, PI / 3.0)).unwrap();
        assert_eq!(periodicity_class(&hex.dual(), c(2.0, 0.0)).unwrap(), Periodicity::TrulyPeriodic);
        assert_eq!(periodicity_class(&hex, c(2.0, 0.0)).unwrap(), Periodicity::AntiPeriodic);
    }

    #[test]
    fn integer_span_hnf() {
        assert_eq!(integer_span(&[(2, 0), (0, 2), (1, 1)]), (2, [(1, 1), (0, 2)]));
        assert_eq!(integer_span(&[(1, 0), (0, 1)]).0, 2);
        assert_eq!(integer_span(&[(2, 4), (1, 2)]).0, 1);
        assert_eq!(integer_span(&[(0, 3), (0, 6)]), (1, [(0, 3), (0, 0)]));
        assert_eq!(integer_span(&[]).0, 0);
        assert_eq!(integer_span(&[(4, 6), (6, 9), (0, 5)]), (2, [(2, 3), (0, 5)]));
        assert_eq!(integer_span(&[(-3, 1), (5, -2)]), (2, [(1, 0), (0, 1)]));
    }

    #[test]
    fn period_lattice_square_torus() {
        let sq = Lattice::square();
        let beta0 = c(1.0, 1.0);
        let d = period_lattice_of(&sq, beta0, &[c(0.5, -0.5), c(-0.5, 0.5)]).unwrap();
        assert!(d.same_as(&sq));
        assert_eq!(period_lattice_of(&sq, beta0, &[]), Err(LatticeError::EmptySpectrum));
    }

    #[test]
    fn reduction_preserves_lattice() {
        let l = Lattice::new(c(1.0, 0.2), c(7.0, 1.5)).unwrap();
        let r = l.reduced();
        assert!(r.same_as(&l));
        let (a, b) = r.generators();
        assert!(a.norm() <= b.norm() && 2.0 * inner(a, b).abs() <= a.norm_sqr() + 1e-12);
    }

    proptest! {
        #[test]
        fn enumeration_matches_disk_scan(
            g2re in -0.4..0.4f64, g2im in 0.6..1.6f64, s in 0.6..1.4f64,
            m in -4i64..=4, n in -4i64..=4,
        ) {
            prop_assume!(m != 0 || n != 0);
            let l = Lattice::new(c(s, 0.0), c(g2re, g2im)).unwrap();
            let beta0 = l.dual().point(m, n);
            let f = enumerate_frequencies(&l, beta0).unwrap();
            prop_assert!(same_set(&f.points, &brute_force(&l, beta0, 40)));
            prop_assert_eq!(f.card() % 2, 0);
            for p in &f.points {
                prop_assert!(f.contains(-p, 1e-9));
            }
        }

        #[test]
        fn square_truly_periodic_parity(p0 in -4i64..=4, q0 in -4i64..=4) {
            prop_assume!(p0 != 0 || q0 != 0);
            let beta0 = c(2.0 * p0 as f64, 2.0 * q0 as f64);
            let f = enumerate_frequencies(&Lattice::square(), beta0).unwrap();
            for g in f.points {
                let (p, q) = (g.re.round() as i64, g.im.round() as i64);
                prop_assert_eq!((p - p0 - (q - q0)).rem_euclid(2), 0);
            }
        }
    }
}
