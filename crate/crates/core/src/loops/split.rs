//! Pointwise structure of the rotation group: the `SU(2)` representation on
//! `span(ε, L_iε̄)`, its Iwasawa splitting, and the factorization
//! `G = K·M` into `exp(C L_i)` and complexified `SU(2)` parts.

use super::{LoopError, TwistedLoop};
use crate::algebra::{
    cmax, complexify, epsilon, li, li_epsilon_bar, ri, rj, rk, spinor_coords, CGroupElement, CMat4, Mat4, C, I,
};
use nalgebra::Matrix2;
use serde::Serialize;
use std::f64::consts::PI;

pub type CMat2 = Matrix2<C>;

fn r_units() -> [CMat4; 4] {
    [CMat4::identity(), complexify(&ri()), complexify(&rj()), complexify(&rk())]
}

/// Action of a complexified `R`-rotation on `span(ε, L_iε̄)` in that basis.
pub fn rho(m: &CMat4) -> CMat2 {
    let (a, b) = spinor_coords(&(m * epsilon()));
    let (c, d) = spinor_coords(&(m * li_epsilon_bar()));
    CMat2::new(a, c, b, d)
}

/// Inverse of [`rho`] on `span_C(1, R_i, R_j, R_k)`.
pub fn g0_from_rho(a: &CMat2) -> CMat4 {
    r_units().iter().map(|u| u * ((rho(u).adjoint() * a).trace() / 2.0)).sum()
}

/// Distance of `m` from `span_C(1, R_i, R_j, R_k)`, relative to `|m|`.
fn g0_defect(m: &CMat4) -> f64 {
    cmax((m - g0_from_rho(&rho(m))).iter()) / (1.0 + cmax(m.iter()))
}

/// `g = K·B` with `K ∈ SU(2)` real and `B` fixing the ray `R₊ε`.
///
/// Scalar multiples `r·Id` with `r > 0` split as `(Id, r·Id)`.
pub fn su2_iwasawa(g: &CMat4) -> Result<(Mat4, CMat4), LoopError> {
    let defect = g0_defect(g);
    if defect > 1e-9 {
        return Err(LoopError::NotInGroup { defect });
    }
    let a = rho(g);
    let scale = cmax(a.iter());
    if scale == 0.0 || a.determinant().norm() <= 1e-24 * scale * scale {
        return Err(LoopError::SingularInput);
    }
    let (c0, c1) = (a.column(0), a.column(1));
    let r11 = c0.norm();
    let q1 = c0 / C::new(r11, 0.0);
    let r12 = q1.dotc(&c1);
    let w = c1 - q1 * r12;
    let r22 = w.norm();
    let q2 = w / C::new(r22, 0.0);
    let q = CMat2::new(q1[0], q2[0], q1[1], q2[1]);
    let r = CMat2::new(C::new(r11, 0.0), r12, C::new(0.0, 0.0), C::new(r22, 0.0));
    let k = g0_from_rho(&q);
    let defect = k.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if defect > 1e-9 {
        // A unitary factor outside SU(2): the determinant was not positive.
        return Err(LoopError::NotInGroup { defect });
    }
    Ok((k.map(|z| z.re), g0_from_rho(&r)))
}

/// Which form the factorization takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `G = K·M`.
    I,
    /// `G = π_λ·K·M`.
    II,
}

/// Factors of a twisted rotation loop.
#[derive(Debug, Clone)]
pub struct RotationSplit {
    pub branch: Branch,
    /// `p₁ + p₂L_i` with `p₁² + p₂² = 1`.
    pub k: TwistedLoop,
    /// Complexified `SU(2)` part, a function of `λ⁴`.
    pub m: TwistedLoop,
}

impl RotationSplit {
    /// Rotation of `[π_λ]·K·M` at sample `j`.
    pub fn product(&self, j: usize) -> CMat4 {
        let km = self.k.sample(j).rotation * self.m.sample(j).rotation;
        match self.branch {
            Branch::I => km,
            Branch::II => pi_matrix(self.k.lambda(j)) * km,
        }
    }
}

/// `π_λ = L_i(½(λ² + λ⁻²) + (1/2i)(λ² − λ⁻²)R_i)`.
pub fn pi_matrix(lambda: C) -> CMat4 {
    let (l2, lm2) = (lambda * lambda, (lambda * lambda).inv());
    let inner = CMat4::identity() * ((l2 + lm2) * 0.5) + complexify(&ri()) * ((l2 - lm2) / (I * 2.0));
    complexify(&li()) * inner
}

/// The loop `λ ↦ (π_λ, 0)`.
pub fn pi_loop(m: usize) -> Result<TwistedLoop, LoopError> {
    TwistedLoop::from_fn(m, |l| CGroupElement::new(pi_matrix(l), Default::default()))
}

/// Coordinates in `(1, R_i, R_j, R_k, L_i, L_iR_i, L_iR_j, L_iR_k)`.
fn coords8(g: &CMat4) -> ([C; 4], [C; 4]) {
    let l = complexify(&li());
    let units = r_units();
    let c = |e: &CMat4| (e.transpose() * g).trace() / 4.0;
    let mut plain = [C::new(0.0, 0.0); 4];
    let mut twisted = [C::new(0.0, 0.0); 4];
    for (n, u) in units.iter().enumerate() {
        plain[n] = c(u);
        twisted[n] = c(&(l * u));
    }
    (plain, twisted)
}

fn g2_matrix(p1: C, p2: C) -> CMat4 {
    CMat4::identity() * p1 + complexify(&li()) * p2
}

fn g0_matrix(q: &[C; 4]) -> CMat4 {
    r_units().iter().zip(q).map(|(u, c)| u * *c).sum()
}

/// Splits the rotation part of a twisted loop as `K·M` (branch i) or
/// `π_λ·K·M` (branch ii), with `K` in `exp(C L_i)` and `M` in the
/// complexified `SU(2)`, both twisted. Unique up to a common sign.
pub fn rotation_factor_split(g: &TwistedLoop) -> Result<RotationSplit, LoopError> {
    let m = g.sample_count();
    let mut ps: Vec<(C, C)> = Vec::with_capacity(m);
    let mut qs: Vec<[C; 4]> = Vec::with_capacity(m);
    for (j, s) in g.samples().iter().enumerate() {
        let (cb, cl) = coords8(&s.rotation);
        let sq = |x: &[C; 4], y: &[C; 4]| x.iter().zip(y).map(|(a, b)| a * b).sum::<C>();
        let (p11, p12, p22) = (sq(&cb, &cb), sq(&cb, &cl), sq(&cl, &cl));
        let (mut p1, mut p2) = if p11.norm() >= p22.norm() {
            let p1 = p11.sqrt();
            (p1, p12 / p1)
        } else {
            let p2 = p22.sqrt();
            (p12 / p2, p2)
        };
        if !p1.is_finite() || !p2.is_finite() || p1.norm() + p2.norm() == 0.0 {
            return Err(LoopError::Singular(j));
        }
        if let Some(&(a, b)) = ps.last() {
            if (p1 - a).norm() + (p2 - b).norm() > (p1 + a).norm() + (p2 + b).norm() {
                p1 = -p1;
                p2 = -p2;
            }
        }
        let q: [C; 4] = std::array::from_fn(|n| p1 * cb[n] + p2 * cl[n]);
        let defect = cmax((g2_matrix(p1, p2) * g0_matrix(&q) - s.rotation).iter());
        if defect > 1e-8 * (1.0 + cmax(s.rotation.iter())) {
            return Err(LoopError::NotInGroup { defect });
        }
        ps.push((p1, p2));
        qs.push(q);
    }
    let (first, last) = (ps[0], ps[m - 1]);
    if (first.0 - last.0).norm() + (first.1 - last.1).norm() > (first.0 + last.0).norm() + (first.1 + last.1).norm() {
        return Err(LoopError::BranchDetectionFailure { reason: "sign monodromy around the circle".into() });
    }
    let quarter = m / 4;
    let mut sign = None;
    for j in 0..m {
        let (a, b) = (g0_matrix(&qs[(j + quarter) % m]), g0_matrix(&qs[j]));
        let (dp, dm) = (cmax((a - b).iter()), cmax((a + b).iter()));
        let s = dp <= dm;
        if dp.min(dm) > 1e-8 * (1.0 + cmax(b.iter())) || sign.is_some_and(|t| t != s) {
            return Err(LoopError::BranchDetectionFailure { reason: format!("inconsistent quarter-turn sign at sample {j}") });
        }
        sign = Some(s);
    }
    let branch = if sign == Some(true) { Branch::I } else { Branch::II };
    let l = complexify(&li());
    let mut k_samples = Vec::with_capacity(m);
    let mut m_samples = Vec::with_capacity(m);
    for j in 0..m {
        let (p1, p2) = ps[j];
        let (mut kk, mut mm) = (g2_matrix(p1, p2), g0_matrix(&qs[j]));
        if branch == Branch::II {
            let theta = 2.0 * PI * j as f64 / m as f64;
            let e = complexify(&(Mat4::identity() * (2.0 * theta).cos() - ri() * (2.0 * theta).sin()));
            kk = -(l * kk);
            mm = e * mm;
        }
        k_samples.push(CGroupElement::new(kk, Default::default()));
        m_samples.push(CGroupElement::new(mm, Default::default()));
    }
    Ok(RotationSplit {
        branch,
        k: TwistedLoop::from_samples(k_samples)?,
        m: TwistedLoop::from_samples(m_samples)?,
    })
}

/// Scalar `κ = p₁ + i p₂` of a rotation `p₁ + p₂L_i`.
pub(crate) fn g2_scalar(k: &CMat4) -> C {
    let (cb, cl) = coords8(k);
    cb[0] + I * cl[0]
}

/// `p₁ + p₂L_i` with `p₁ + ip₂ = κ` and `p₁ − ip₂ = 1/κ`.
pub(crate) fn g2_from_scalar(kappa: C) -> CMat4 {
    let inv = kappa.inv();
    g2_matrix((kappa + inv) * 0.5, (kappa - inv) / (I * 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{exp_li, Vec4};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_c(rng: &mut ChaCha8Rng) -> C {
        C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn unit_quaternion(rng: &mut ChaCha8Rng) -> Mat4 {
        let q = Vec4::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
        let [a, b, c] = [ri(), rj(), rk()];
        Mat4::identity() * q[0] + a * q[1] + b * q[2] + c * q[3]
    }

    #[test]
    fn rho_is_a_faithful_representation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = unit_quaternion(&mut rng);
        let r = rho(&complexify(&u));
        assert!((r.adjoint() * r - CMat2::identity()).norm() < 1e-13);
        assert!((r.determinant() - 1.0).norm() < 1e-13);
        let a = CMat2::from_fn(|_, _| rand_c(&mut rng));
        let b = CMat2::from_fn(|_, _| rand_c(&mut rng));
        let (ga, gb) = (g0_from_rho(&a), g0_from_rho(&b));
        assert!((rho(&(ga * gb)) - a * b).norm() < 1e-13);
        assert!(g0_defect(&complexify(&li())) > 0.1);
    }

    #[test]
    fn su2_iwasawa_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = unit_quaternion(&mut rng);
        let (k, b) = su2_iwasawa(&complexify(&u)).unwrap();
        assert!((k - u).norm() < 1e-13);
        assert!(cmax((b - CMat4::identity()).iter()) < 1e-13);
        let (k, b) = su2_iwasawa(&(CMat4::identity() * C::new(2.5, 0.0))).unwrap();
        assert!((k - Mat4::identity()).norm() < 1e-13);
        assert!(cmax((b - CMat4::identity() * C::new(2.5, 0.0)).iter()) < 1e-13);
        for _ in 0..50 {
            let mut a = CMat2::from_fn(|_, _| rand_c(&mut rng));
            a /= a.determinant().sqrt();
            let g = g0_from_rho(&a);
            let (k, b) = su2_iwasawa(&g).unwrap();
            assert!(cmax((complexify(&k) * b - g).iter()) < 1e-12);
            assert!((k.transpose() * k - Mat4::identity()).norm() < 1e-12);
            let e = b * epsilon();
            let (x, y) = spinor_coords(&e);
            assert!(y.norm() < 1e-12 && x.im.abs() < 1e-12 && x.re > 0.0);
        }
        assert_eq!(su2_iwasawa(&CMat4::zeros()), Err(LoopError::SingularInput));
    }

    #[test]
    fn constant_split_is_branch_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = complexify(&unit_quaternion(&mut rng));
        let g = TwistedLoop::constant(16, CGroupElement::new(u, Default::default())).unwrap();
        let s = rotation_factor_split(&g).unwrap();
        assert_eq!(s.branch, Branch::I);
        for j in 0..16 {
            assert!(cmax((s.product(j) - u).iter()) < 1e-13);
            assert!(cmax((s.k.sample(j).rotation - s.k.sample(0).rotation).iter()) < 1e-13);
        }
        // exp(θL_i) with θ = π is central and twisted.
        let c = TwistedLoop::constant(16, CGroupElement::new(complexify(&exp_li(PI)), Default::default())).unwrap();
        assert_eq!(rotation_factor_split(&c).unwrap().branch, Branch::I);
    }

    #[test]
    fn pi_is_branch_two() {
        let p = pi_loop(32).unwrap();
        assert!(p.twist_defect() < 1e-13);
        assert!(p.reality_defect() < 1e-13);
        let s = rotation_factor_split(&p).unwrap();
        assert_eq!(s.branch, Branch::II);
        for j in 0..32 {
            let (kk, mm) = (s.k.sample(j).rotation, s.m.sample(j).rotation);
            // Identity up to the common sign.
            let sgn = if kk[(0, 0)].re > 0.0 { 1.0 } else { -1.0 };
            assert!(cmax((kk * C::new(sgn, 0.0) - CMat4::identity()).iter()) < 1e-12);
            assert!(cmax((mm * C::new(sgn, 0.0) - CMat4::identity()).iter()) < 1e-12);
            assert!(cmax((s.product(j) - p.sample(j).rotation).iter()) < 1e-12);
        }
    }

    #[test]
    fn scalar_round_trip() {
        let k = C::new(0.7, -1.3);
        assert!((g2_scalar(&g2_from_scalar(k)) - k).norm() < 1e-14);
    }
}
