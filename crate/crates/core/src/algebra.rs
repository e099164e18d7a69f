//! Quaternionic 4x4 matrices, the group `U(2) ⋉ R⁴` and its Lie algebra,
//! the order-four automorphism `tau` and the Lagrangian angle.
//!
//! R⁴ is identified with the quaternions; `L_*` are left multiplications and
//! `R_*` are right multiplications by the conjugate. The complex structure is
//! `J = L_i` and the symplectic form is `ω(u, v) = ⟨L_i u, v⟩`.

use nalgebra::{Matrix4, Matrix5, Vector4};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

pub type C = Complex64;
pub type Mat4 = Matrix4<f64>;
pub type CMat4 = Matrix4<C>;
pub type Vec4 = Vector4<f64>;
pub type CVec4 = Vector4<C>;

/// Default tolerance for membership tests.
pub const DEFAULT_TOL: f64 = 1e-9;

pub const I: C = C::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("frame is not an oriented orthonormal Lagrangian frame (defect {defect:.3e})")]
    FrameNotLagrangian { defect: f64 },
    #[error("matrix is not in U(2) ⊂ SO(4) (defect {defect:.3e})")]
    NotInGroup { defect: f64 },
}

#[rustfmt::skip]
pub fn li() -> Mat4 {
    Mat4::new(0.0, -1.0, 0.0, 0.0,
              1.0, 0.0, 0.0, 0.0,
              0.0, 0.0, 0.0, -1.0,
              0.0, 0.0, 1.0, 0.0)
}

#[rustfmt::skip]
pub fn lj() -> Mat4 {
    Mat4::new(0.0, 0.0, -1.0, 0.0,
              0.0, 0.0, 0.0, 1.0,
              1.0, 0.0, 0.0, 0.0,
              0.0, -1.0, 0.0, 0.0)
}

#[rustfmt::skip]
pub fn lk() -> Mat4 {
    Mat4::new(0.0, 0.0, 0.0, -1.0,
              0.0, 0.0, -1.0, 0.0,
              0.0, 1.0, 0.0, 0.0,
              1.0, 0.0, 0.0, 0.0)
}

#[rustfmt::skip]
pub fn ri() -> Mat4 {
    Mat4::new(0.0, -1.0, 0.0, 0.0,
              1.0, 0.0, 0.0, 0.0,
              0.0, 0.0, 0.0, 1.0,
              0.0, 0.0, -1.0, 0.0)
}

#[rustfmt::skip]
pub fn rj() -> Mat4 {
    Mat4::new(0.0, 0.0, -1.0, 0.0,
              0.0, 0.0, 0.0, -1.0,
              1.0, 0.0, 0.0, 0.0,
              0.0, 1.0, 0.0, 0.0)
}

#[rustfmt::skip]
pub fn rk() -> Mat4 {
    Mat4::new(0.0, 0.0, 0.0, -1.0,
              0.0, 0.0, 1.0, 0.0,
              0.0, -1.0, 0.0, 0.0,
              1.0, 0.0, 0.0, 0.0)
}

/// `[R_i, R_j, R_k]`.
pub fn r_basis() -> [Mat4; 3] {
    [ri(), rj(), rk()]
}

pub fn complexify(m: &Mat4) -> CMat4 {
    m.map(|x| C::new(x, 0.0))
}

pub fn complexify_vec(v: &Vec4) -> CVec4 {
    v.map(|x| C::new(x, 0.0))
}

/// `ε = ½(1, 0, −i, 0)`.
pub fn epsilon() -> CVec4 {
    CVec4::new(C::new(0.5, 0.0), C::new(0.0, 0.0), C::new(0.0, -0.5), C::new(0.0, 0.0))
}

/// `ε̄ = ½(1, 0, i, 0)`.
pub fn epsilon_bar() -> CVec4 {
    epsilon().map(|z| z.conj())
}

/// `L_i ε = ½(0, 1, 0, −i)`.
pub fn li_epsilon() -> CVec4 {
    complexify(&li()) * epsilon()
}

/// `L_i ε̄ = ½(0, 1, 0, i)`.
pub fn li_epsilon_bar() -> CVec4 {
    complexify(&li()) * epsilon_bar()
}

/// Coordinates of `v` in the orthogonal pair `(ε, L_iε̄)`; exact when
/// `v ∈ Cε ⊕ CL_iε̄`.
pub fn spinor_coords(v: &CVec4) -> (C, C) {
    let e = epsilon();
    let f = li_epsilon_bar();
    (e.dotc(v) * 2.0, f.dotc(v) * 2.0)
}

/// `e^{θ L_i} = cos θ + sin θ L_i`.
pub fn exp_li(theta: f64) -> Mat4 {
    Mat4::identity() * theta.cos() + li() * theta.sin()
}

/// `e^{θ L_i}` for complex `θ`.
pub fn exp_li_c(theta: C) -> CMat4 {
    CMat4::identity() * theta.cos() + complexify(&li()) * theta.sin()
}

/// `ω(u, v) = ⟨L_i u, v⟩`.
pub fn omega(u: &Vec4, v: &Vec4) -> f64 {
    (li() * u).dot(v)
}

/// The complex 2-form `(dx¹ + i dx²) ∧ (dx³ + i dx⁴)` evaluated on `(e1, e3)`.
pub fn volume_form(e1: &Vec4, e3: &Vec4) -> C {
    let a = C::new(e1[0], e1[1]) * C::new(e3[2], e3[3]);
    let b = C::new(e1[2], e1[3]) * C::new(e3[0], e3[1]);
    a - b
}

/// Lagrangian angle of an oriented orthonormal Lagrangian frame, in `(−π, π]`.
pub fn lagrangian_angle(e1: &Vec4, e3: &Vec4) -> Result<f64, AlgebraError> {
    lagrangian_angle_tol(e1, e3, DEFAULT_TOL)
}

pub fn lagrangian_angle_tol(e1: &Vec4, e3: &Vec4, tol: f64) -> Result<f64, AlgebraError> {
    let defect = (e1.norm_squared() - 1.0)
        .abs()
        .max((e3.norm_squared() - 1.0).abs())
        .max(e1.dot(e3).abs())
        .max(omega(e1, e3).abs());
    if !(defect <= tol) {
        return Err(AlgebraError::FrameNotLagrangian { defect });
    }
    Ok(normalize_angle(volume_form(e1, e3).arg()))
}

/// Largest modulus among complex entries.
pub fn cmax<'a>(entries: impl IntoIterator<Item = &'a C>) -> f64 {
    entries.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Map an angle to `(−π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// An element `(G, T)` of `U(2) ⋉ R⁴`, acting by `x ↦ Gx + T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub rotation: Mat4,
    pub translation: Vec4,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self { rotation: Mat4::identity(), translation: Vec4::zeros() }
    }

    pub fn new(rotation: Mat4, translation: Vec4) -> Self {
        Self { rotation, translation }
    }

    /// Checked constructor: the rotation must be orthogonal, of determinant one
    /// and commute with `L_i`.
    pub fn try_new(rotation: Mat4, translation: Vec4, tol: f64) -> Result<Self, AlgebraError> {
        let g = Self { rotation, translation };
        let defect = g.membership_defect();
        if defect > tol {
            return Err(AlgebraError::NotInGroup { defect });
        }
        Ok(g)
    }

    pub fn membership_defect(&self) -> f64 {
        let g = &self.rotation;
        let orth = (g * g.transpose() - Mat4::identity()).amax();
        let comm = (g * li() - li() * g).amax();
        let det = (g.determinant() - 1.0).abs();
        orth.max(comm).max(det)
    }

    pub fn inverse(&self) -> Self {
        let gt = self.rotation.transpose();
        Self { rotation: gt, translation: -(gt * self.translation) }
    }

    pub fn act(&self, x: &Vec4) -> Vec4 {
        self.rotation * x + self.translation
    }

    /// Conjugation by `(−L_j, 0)`.
    pub fn tau(&self) -> Self {
        let m = -lj();
        let minv = lj();
        Self { rotation: m * self.rotation * minv, translation: m * self.translation }
    }

    pub fn to_matrix5(&self) -> Matrix5<f64> {
        let mut out = Matrix5::identity();
        out.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.rotation);
        out.fixed_view_mut::<4, 1>(0, 4).copy_from(&self.translation);
        out
    }

    pub fn from_matrix5(m: &Matrix5<f64>) -> Self {
        Self { rotation: m.fixed_view::<4, 4>(0, 0).into_owned(), translation: m.fixed_view::<4, 1>(0, 4).into_owned() }
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

/// Complexified group element `(G, T)` with `G` in the complexification of
/// `U(2)`; used for loop-group samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CGroupElement {
    pub rotation: CMat4,
    pub translation: CVec4,
}

impl CGroupElement {
    pub fn identity() -> Self {
        Self { rotation: CMat4::identity(), translation: CVec4::zeros() }
    }

    pub fn new(rotation: CMat4, translation: CVec4) -> Self {
        Self { rotation, translation }
    }

    pub fn from_real(g: &GroupElement) -> Self {
        Self { rotation: complexify(&g.rotation), translation: complexify_vec(&g.translation) }
    }

    pub fn inverse(&self) -> Option<Self> {
        let ginv = self.rotation.try_inverse()?;
        Some(Self { rotation: ginv, translation: -(ginv * self.translation) })
    }

    pub fn tau(&self) -> Self {
        let m = complexify(&-lj());
        let minv = complexify(&lj());
        Self { rotation: m * self.rotation * minv, translation: m * self.translation }
    }

    pub fn conj(&self) -> Self {
        Self { rotation: self.rotation.map(|z| z.conj()), translation: self.translation.map(|z| z.conj()) }
    }

    /// Largest imaginary part among all entries.
    pub fn imaginary_defect(&self) -> f64 {
        let r = self.rotation.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        let t = self.translation.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        r.max(t)
    }

    pub fn real_part(&self) -> GroupElement {
        GroupElement { rotation: self.rotation.map(|z| z.re), translation: self.translation.map(|z| z.re) }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        cmax((self.rotation - other.rotation).iter()).max(cmax((self.translation - other.translation).iter()))
    }

    pub fn to_matrix5(&self) -> Matrix5<C> {
        let mut out = Matrix5::identity();
        out.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.rotation);
        out.fixed_view_mut::<4, 1>(0, 4).copy_from(&self.translation);
        out
    }
}

impl Mul for CGroupElement {
    type Output = CGroupElement;
    fn mul(self, rhs: CGroupElement) -> CGroupElement {
        CGroupElement {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }
}

/// Element of the complexified Lie algebra: rotation `a L_i + b·R` and a
/// translation vector `t`. Real elements have real coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraElement {
    pub a: C,
    pub b: [C; 3],
    pub t: CVec4,
}

impl Default for AlgebraElement {
    fn default() -> Self {
        Self::zero()
    }
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self { a: C::new(0.0, 0.0), b: [C::new(0.0, 0.0); 3], t: CVec4::zeros() }
    }

    pub fn li(a: C) -> Self {
        Self { a, ..Self::zero() }
    }

    pub fn rotation_r(b: [C; 3]) -> Self {
        Self { b, ..Self::zero() }
    }

    pub fn translation(t: CVec4) -> Self {
        Self { t, ..Self::zero() }
    }

    pub fn rotation_matrix(&self) -> CMat4 {
        let [r1, r2, r3] = r_basis().map(|m| complexify(&m));
        complexify(&li()) * self.a + r1 * self.b[0] + r2 * self.b[1] + r3 * self.b[2]
    }

    /// Decompose a matrix in `span(L_i, R_i, R_j, R_k)` using the trace pairing;
    /// components outside that span are discarded.
    pub fn from_rotation_matrix(m: &CMat4, t: CVec4) -> Self {
        let coef = |basis: &Mat4| -> C { -(complexify(basis) * m).trace() / 4.0 };
        let [r1, r2, r3] = r_basis();
        Self { a: coef(&li()), b: [coef(&r1), coef(&r2), coef(&r3)], t }
    }

    pub fn bracket(&self, other: &Self) -> Self {
        let (b, c) = (&self.b, &other.b);
        // [b·R, c·R] = −2 (b × c)·R; L_i commutes with every R.
        let cross = [b[1] * c[2] - b[2] * c[1], b[2] * c[0] - b[0] * c[2], b[0] * c[1] - b[1] * c[0]];
        let t = self.rotation_matrix() * other.t - other.rotation_matrix() * self.t;
        Self { a: C::new(0.0, 0.0), b: cross.map(|x| x * -2.0), t }
    }

    /// Conjugation by `(−L_j, 0)`.
    pub fn tau(&self) -> Self {
        Self { a: -self.a, b: self.b, t: complexify(&-lj()) * self.t }
    }

    /// Component in the `i^k` eigenspace of `tau`; `k` is taken mod 4.
    pub fn eigen_project(&self, k: i32) -> Self {
        let m = complexify(&-lj());
        let id = CMat4::identity();
        match k.rem_euclid(4) {
            0 => Self::rotation_r(self.b),
            2 => Self::li(self.a),
            1 => Self::translation((id - m * I) * self.t * C::new(0.5, 0.0)),
            _ => Self::translation((id + m * I) * self.t * C::new(0.5, 0.0)),
        }
    }

    pub fn conj(&self) -> Self {
        Self { a: self.a.conj(), b: self.b.map(|z| z.conj()), t: self.t.map(|z| z.conj()) }
    }

    pub fn scale(&self, s: C) -> Self {
        Self { a: self.a * s, b: self.b.map(|x| x * s), t: self.t * s }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        let r: f64 = self.a.norm_sqr() + self.b.iter().map(|z| z.norm_sqr()).sum::<f64>();
        (r + self.t.norm_squared()).sqrt()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        (*self - self.conj()).norm() <= tol
    }

    pub fn to_matrix5(&self) -> Matrix5<C> {
        let mut out = Matrix5::zeros();
        out.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.rotation_matrix());
        out.fixed_view_mut::<4, 1>(0, 4).copy_from(&self.t);
        out
    }
}

impl Add for AlgebraElement {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { a: self.a + o.a, b: [self.b[0] + o.b[0], self.b[1] + o.b[1], self.b[2] + o.b[2]], t: self.t + o.t }
    }
}

impl Sub for AlgebraElement {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for AlgebraElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self { a: -self.a, b: self.b.map(|x| -x), t: -self.t }
    }
}

impl Mul<C> for AlgebraElement {
    type Output = Self;
    fn mul(self, s: C) -> Self {
        self.scale(s)
    }
}

impl Mul<f64> for AlgebraElement {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(C::new(s, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: &Mat4, b: &Mat4) -> bool {
        (a - b).amax() < 1e-15
    }

    #[test]
    fn quaternion_table() {
        let id = Mat4::identity();
        let ls = [id, li(), lj(), lk()];
        let rs = [id, ri(), rj(), rk()];
        for m in ls.iter().skip(1).chain(rs.iter().skip(1)) {
            assert!(close(&(m * m), &-id));
        }
        assert!(close(&(li() * lj()), &lk()));
        assert!(close(&(lj() * lk()), &li()));
        assert!(close(&(lk() * li()), &lj()));
        assert!(close(&(ri() * rj()), &-rk()));
        assert!(close(&(rj() * rk()), &-ri()));
        assert!(close(&(rk() * ri()), &-rj()));
        // All 36 products L_p R_q: they commute and give 16 independent matrices.
        let mut products = Vec::new();
        for l in &ls {
            for r in &rs {
                assert!(close(&(l * r), &(r * l)));
                products.push(l * r);
            }
        }
        for (x, p) in products.iter().enumerate() {
            for (y, q) in products.iter().enumerate() {
                let ip = (p.transpose() * q).trace() / 4.0;
                assert!((ip - if x == y { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn distinguished_vectors() {
        let e = epsilon();
        assert!((li_epsilon() - CVec4::new(C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(0.0, 0.0), C::new(0.0, -0.5))).norm() < 1e-15);
        assert!((li_epsilon_bar() - CVec4::new(C::new(0.0, 0.0), C::new(0.5, 0.0), C::new(0.0, 0.0), C::new(0.0, 0.5))).norm() < 1e-15);
        // −L_j ε = −iε.
        assert!((complexify(&-lj()) * e + e * I).norm() < 1e-15);
        let (p, q) = spinor_coords(&(e * C::new(2.0, 1.0) + li_epsilon_bar() * C::new(-1.0, 3.0)));
        assert!((p - C::new(2.0, 1.0)).norm() < 1e-15 && (q - C::new(-1.0, 3.0)).norm() < 1e-15);
    }

    #[test]
    fn tau_examples() {
        let g = GroupElement::identity().tau();
        assert_eq!(g, GroupElement::identity());
        let x = AlgebraElement::li(C::new(1.0, 0.0)).tau();
        assert!((x.a + 1.0).norm() < 1e-15);
        let x = AlgebraElement::translation(epsilon()).tau();
        assert!((x.t - epsilon() * -I).norm() < 1e-15);
        // Matrix form of tau agrees with the coefficient form.
        let m = complexify(&-lj());
        let y = AlgebraElement { a: C::new(0.3, 0.1), b: [C::new(1.0, 0.0), C::new(0.0, 2.0), C::new(-1.0, 0.5)], t: CVec4::zeros() };
        let direct = m * y.rotation_matrix() * complexify(&lj());
        assert!(cmax((direct - y.tau().rotation_matrix()).iter()) < 1e-14);
    }

    #[test]
    fn eigen_project_examples() {
        let x = AlgebraElement::li(C::new(1.0, 0.0));
        assert_eq!(x.eigen_project(2), x);
        let e = AlgebraElement::translation(epsilon());
        assert!((e.eigen_project(-1).t - epsilon()).norm() < 1e-15);
        let r = AlgebraElement::rotation_r([C::new(0.0, 0.0), C::new(1.0, 0.0), C::new(0.0, 0.0)]);
        assert!(r.eigen_project(1).norm() < 1e-15);
    }

    #[test]
    fn lagrangian_angle_examples() {
        let e1 = Vec4::new(1.0, 0.0, 0.0, 0.0);
        let e3 = Vec4::new(0.0, 0.0, 1.0, 0.0);
        assert_eq!(lagrangian_angle(&e1, &e3).unwrap(), 0.0);
        assert!(lagrangian_angle(&e3, &-e1).unwrap().abs() < 1e-15);
        for k in 0..12 {
            let theta = -3.0 + 0.5 * k as f64;
            let g = exp_li(theta);
            let got = lagrangian_angle(&(g * e1), &(g * e3)).unwrap();
            assert!((normalize_angle(got - 2.0 * theta)).abs() < 1e-12);
        }
        let bad = Vec4::new(0.0, 1.0, 0.0, 0.0);
        assert!(matches!(lagrangian_angle(&e1, &bad), Err(AlgebraError::FrameNotLagrangian { .. })));
        let pi_frame = lagrangian_angle(&(exp_li(PI / 2.0) * e1), &(exp_li(PI / 2.0) * e3)).unwrap();
        assert!((pi_frame - PI).abs() < 1e-12);
    }

    #[test]
    fn matrix5_embedding_is_a_homomorphism() {
        let g = GroupElement::new(exp_li(0.4) * (Mat4::identity() * 0.6_f64.cos() + ri() * 0.6_f64.sin()), Vec4::new(1.0, 2.0, 3.0, 4.0));
        let h = GroupElement::new(exp_li(-1.1), Vec4::new(0.0, -1.0, 0.5, 2.0));
        assert!((g.to_matrix5() * h.to_matrix5() - (g * h).to_matrix5()).amax() < 1e-14);
        assert_eq!(GroupElement::from_matrix5(&g.to_matrix5()), g);
        assert!(g.membership_defect() < 1e-14);
    }

    fn arb_c() -> impl Strategy<Value = C> {
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C::new(a, b))
    }

    fn arb_elem() -> impl Strategy<Value = AlgebraElement> {
        (arb_c(), [arb_c(), arb_c(), arb_c()], [arb_c(), arb_c(), arb_c(), arb_c()])
            .prop_map(|(a, b, t)| AlgebraElement { a, b, t: CVec4::new(t[0], t[1], t[2], t[3]) })
    }

    fn arb_group() -> impl Strategy<Value = GroupElement> {
        (-3.0..3.0f64, [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64], [-2.0..2.0f64, -2.0..2.0, -2.0..2.0, -2.0..2.0]).prop_map(
            |(th, b, t)| {
                let n = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt().max(1e-9);
                let r = (ri() * b[0] + rj() * b[1] + rk() * b[2]) / n;
                let q = Mat4::identity() * n.cos() + r * n.sin();
                GroupElement::new(exp_li(th) * q, Vec4::new(t[0], t[1], t[2], t[3]))
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn eigen_projections_decompose(x in arb_elem()) {
            let parts: Vec<_> = (-1..=2).map(|k| x.eigen_project(k)).collect();
            let sum = parts.iter().fold(AlgebraElement::zero(), |acc, p| acc + *p);
            prop_assert!((sum - x).norm() <= 1e-12);
            for (idx, k) in (-1..=2).enumerate() {
                let ik = I.powi(k);
                prop_assert!((parts[idx].tau() - parts[idx] * ik).norm() <= 1e-12);
            }
            let mut y = x;
            for _ in 0..4 { y = y.tau(); }
            prop_assert!((y - x).norm() <= 1e-12);
        }

        #[test]
        fn bracket_antisymmetric_and_jacobi(x in arb_elem(), y in arb_elem(), z in arb_elem()) {
            prop_assert!((x.bracket(&y) + y.bracket(&x)).norm() <= 1e-12);
            let j = x.bracket(&y.bracket(&z)) + y.bracket(&z.bracket(&x)) + z.bracket(&x.bracket(&y));
            prop_assert!(j.norm() <= 1e-11);
            // Agrees with the commutator of 5x5 matrices.
            let (mx, my) = (x.to_matrix5(), y.to_matrix5());
            prop_assert!(cmax((mx * my - my * mx - x.bracket(&y).to_matrix5()).iter()) <= 1e-12);
        }

        #[test]
        fn group_law(g in arb_group(), h in arb_group(), k in arb_group()) {
            let lhs = (g * h) * k;
            let rhs = g * (h * k);
            prop_assert!((lhs.rotation - rhs.rotation).amax() <= 1e-12);
            prop_assert!((lhs.translation - rhs.translation).amax() <= 1e-12);
            let e = g * g.inverse();
            prop_assert!((e.rotation - Mat4::identity()).amax() <= 1e-12 && e.translation.amax() <= 1e-12);
            prop_assert!(g.membership_defect() <= 1e-12);
            let t = g.tau().tau().tau().tau();
            prop_assert!((t.rotation - g.rotation).amax() <= 1e-12);
        }

        #[test]
        fn angle_invariant_under_g0(g in arb_group(), b in [-2.0..2.0f64, -2.0..2.0, -2.0..2.0]) {
            let n = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt().max(1e-9);
            let kk = Mat4::identity() * n.cos() + (ri() * b[0] + rj() * b[1] + rk() * b[2]) * (n.sin() / n);
            let e1 = Vec4::new(1.0, 0.0, 0.0, 0.0);
            let e3 = Vec4::new(0.0, 0.0, 1.0, 0.0);
            let g = g.rotation;
            let a = lagrangian_angle(&(g * e1), &(g * e3)).unwrap();
            let c = lagrangian_angle(&(g * kk * e1), &(g * kk * e3)).unwrap();
            prop_assert!(normalize_angle(a - c).abs() <= 1e-10);
        }
    }
}
