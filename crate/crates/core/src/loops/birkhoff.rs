//! `G = G⁻·G⁺` on the big cell.
//!
//! With `Y = (G⁻)⁻¹ = Id + Σ_{j≥2} Y_j λ^{−j}` (even `j`), the product `Y·G`
//! has no negative modes: `Σ_j Y_j Ĝ_{k+j} = −Ĝ_k` for `k = −2, …, −2n`.

use super::{mat_coeffs, mode_index, LoopError, TwistedLoop, VectorLoop};
use crate::algebra::{CGroupElement, CMat4, CVec4, C};
use nalgebra::DMatrix;

/// Condition number above which a loop is reported outside the big cell.
pub const BIG_CELL_COND: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct BirkhoffFactors {
    /// Extends holomorphically to `|λ| > 1` with value `Id` at `∞`.
    pub minus: TwistedLoop,
    /// Extends holomorphically to `|λ| < 1`.
    pub plus: TwistedLoop,
    /// 1-norm condition number of the truncated splitting system.
    pub cond: f64,
}

type Lu = nalgebra::linalg::LU<C, nalgebra::Dyn, nalgebra::Dyn>;

fn norm1(a: &DMatrix<C>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `PT = LU` with the transposed factors kept for solves with `Tᵀ`.
struct Factored {
    lu: Lu,
    lt: DMatrix<C>,
    ut: DMatrix<C>,
}

impl Factored {
    fn new(t: DMatrix<C>) -> Self {
        let lu = t.lu();
        let (lt, ut) = (lu.l().transpose(), lu.u().transpose());
        Self { lu, lt, ut }
    }

    fn singular(&self) -> bool {
        self.ut.diagonal().iter().any(|d| d.norm() == 0.0)
    }

    fn solve(&self, b: &DMatrix<C>) -> DMatrix<C> {
        self.lu.solve(b).expect("nonzero pivots")
    }

    /// `T⁻ᵀ b`.
    fn solve_transpose(&self, b: &DMatrix<C>) -> DMatrix<C> {
        let w = self.ut.solve_lower_triangular(b).expect("nonzero pivots");
        let mut x = self.lt.solve_upper_triangular(&w).expect("unit diagonal");
        self.lu.p().inv_permute_rows(&mut x);
        x
    }

    /// Hager's lower estimate of `‖T⁻¹‖₁`, usually within a small factor.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.lt.nrows();
        let solve_adjoint = |x: &DMatrix<C>| self.solve_transpose(&x.map(|v| v.conj())).map(|v| v.conj());
        let col_norm = |y: &DMatrix<C>| y.iter().map(|v| v.norm()).sum::<f64>();
        let mut x = DMatrix::<C>::from_element(n, 1, C::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = col_norm(&y);
            let xi = y.map(|v| if v.norm() > 0.0 { v / v.norm() } else { C::new(1.0, 0.0) });
            let z = solve_adjoint(&xi);
            let (j, zj) =
                z.iter().enumerate().map(|(i, v)| (i, v.norm())).fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            if zj <= zx || j == last {
                break;
            }
            last = j;
            x = DMatrix::zeros(n, 1);
            x[(j, 0)] = C::new(1.0, 0.0);
        }
        let alt = DMatrix::<C>::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        });
        est.max(2.0 * col_norm(&self.solve(&alt)) / (3.0 * n as f64))
    }
}

pub fn birkhoff(g: &TwistedLoop) -> Result<BirkhoffFactors, LoopError> {
    let m = g.sample_count();
    let rot: Vec<CMat4> = g.samples().iter().map(|s| s.rotation).collect();
    let coeffs = mat_coeffs(&rot);
    let gh = |k: i32| coeffs[mode_index(k, m)];
    let n = m / 4;
    let dim = 4 * n;
    let mut t = DMatrix::<C>::zeros(dim, dim);
    let mut r = DMatrix::<C>::zeros(4, dim);
    for jb in 0..n {
        let j = 2 * (jb as i32 + 1);
        for kb in 0..n {
            let k = -2 * (kb as i32 + 1);
            t.view_mut((4 * jb, 4 * kb), (4, 4)).copy_from(&gh(k + j));
        }
    }
    for kb in 0..n {
        let k = -2 * (kb as i32 + 1);
        r.view_mut((0, 4 * kb), (4, 4)).copy_from(&(-gh(k)));
    }
    let tnorm = norm1(&t);
    let f = Factored::new(t);
    if f.singular() {
        return Err(LoopError::OutsideBigCell { cond: f64::INFINITY });
    }
    let cond = tnorm * f.inverse_norm1_estimate();
    if !(cond <= BIG_CELL_COND) {
        return Err(LoopError::OutsideBigCell { cond });
    }
    let yt = f.solve_transpose(&r.transpose());
    let y_blocks: Vec<CMat4> = (0..n).map(|jb| CMat4::from_fn(|a, b| yt[(4 * jb + b, a)])).collect();
    let mut minus = Vec::with_capacity(m);
    let mut plus = Vec::with_capacity(m);
    let mut z = Vec::with_capacity(m);
    for (idx, s) in g.samples().iter().enumerate() {
        let linv = g.lambda(idx).inv();
        let mut y = CMat4::identity();
        for (jb, yj) in y_blocks.iter().enumerate() {
            y += yj * linv.powi(2 * (jb as i32 + 1));
        }
        let ginv = y.try_inverse().ok_or(LoopError::Singular(idx))?;
        minus.push(ginv);
        plus.push(y * s.rotation);
        z.push(y * s.translation);
    }
    let z = VectorLoop::from_samples(z)?;
    let (zm, zp) = (z.q_minus(), z.q_plus());
    let minus_samples: Vec<CGroupElement> =
        minus.iter().zip(zm.samples()).map(|(gm, v)| CGroupElement::new(*gm, gm * v)).collect();
    let plus_samples: Vec<CGroupElement> =
        plus.iter().zip(zp.samples()).map(|(gp, v): (&CMat4, &CVec4)| CGroupElement::new(*gp, *v)).collect();
    Ok(BirkhoffFactors {
        minus: TwistedLoop::from_samples(minus_samples)?,
        plus: TwistedLoop::from_samples(plus_samples)?,
        cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{complexify, ri};
    use crate::loops::{random_negative_loop, random_positive_loop, random_twisted_loop, RandomLoopOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let gm = random_negative_loop(&mut rng, 256, 0.5).unwrap();
            let gp = random_positive_loop(&mut rng, 256, 0.5).unwrap();
            let f = birkhoff(&(&gm * &gp)).unwrap();
            assert!(f.minus.max_diff(&gm).unwrap() < 1e-10);
            assert!(f.plus.max_diff(&gp).unwrap() < 1e-10);
        }
    }

    #[test]
    fn positive_loop_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let gp = random_positive_loop(&mut rng, 256, 0.5).unwrap();
        let f = birkhoff(&gp).unwrap();
        assert!(f.minus.max_diff(&TwistedLoop::identity(256).unwrap()).unwrap() < 1e-12);
        assert!(f.plus.max_diff(&gp).unwrap() < 1e-12);
    }

    #[test]
    fn generic_split() {
        // A rotation with a λ⁻⁴ term, not positive.
        let g = TwistedLoop::from_fn(256, |l| {
            let rot = CMat4::identity() + complexify(&ri()) * (l.powi(-4) * 0.4 + l.powi(4) * 0.3);
            CGroupElement::new(rot, CVec4::zeros())
        })
        .unwrap();
        let f = birkhoff(&g).unwrap();
        assert!((&f.minus * &f.plus).max_diff(&g).unwrap() < 1e-10);
        assert!(f.plus.mode_norm(|k| k < 0) < 1e-10);
        assert!(f.minus.mode_norm(|k| k > 0) < 1e-10);
        let c = f.minus.coeffs();
        let c0 = c.iter().find(|c| c.k == 0).unwrap();
        assert!(crate::algebra::cmax((c0.rotation - CMat4::identity()).iter()) < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_twisted_loop(&mut rng, 256, &RandomLoopOptions::default()).unwrap();
        let f = birkhoff(&h).unwrap();
        assert!((&f.minus * &f.plus).max_diff(&h).unwrap() < 1e-10);
        assert!(f.minus.twist_defect() < 1e-10 && f.plus.twist_defect() < 1e-10);
    }

    #[test]
    fn outside_big_cell() {
        // λ⁴ → the negative part of the splitting problem is singular.
        let g = TwistedLoop::from_fn(32, |l| {
            let mu = l.powi(4);
            let r = super::super::split::CMat2::new(mu.inv(), C::new(0.0, 0.0), C::new(0.0, 0.0), mu);
            CGroupElement::new(super::super::g0_from_rho(&r), CVec4::zeros())
        })
        .unwrap();
        assert!(matches!(birkhoff(&g), Err(LoopError::OutsideBigCell { .. })));
    }
}
