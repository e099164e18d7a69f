//! `ΛG^C_τ = ΛG_τ · Λ⁺_{B₀}G^C_τ`.
//!
//! The `exp(C L_i)` factor is split through its logarithm. The `SU(2)^C`
//! factor is a loop in `μ = λ⁴`; its unitary factor is found by spectral
//! factorization of `W = ρ(M)ᴴρ(M) = BᴴB` through the block Toeplitz system
//! for `B⁻¹`. The translation is then split with the projector `P`.

use super::split::{g0_from_rho, g2_from_scalar, g2_scalar, pi_matrix, rho, CMat2};
use super::{
    index_mode, map_entries, mode_index, rotation_factor_split, to_coeffs, to_samples, Branch, LoopError, TwistedLoop,
    VectorLoop,
};
use crate::algebra::{cmax, CGroupElement, CMat4, CVec4, C};
use nalgebra::DMatrix;
use serde::Serialize;
use std::f64::consts::PI;

/// Minimum number of `μ` samples for the `SU(2)^C` factor.
const MIN_MU_SAMPLES: usize = 256;

/// `H = U·B`.
#[derive(Debug, Clone)]
pub struct IwasawaFactors {
    /// Real twisted factor.
    pub u: TwistedLoop,
    /// Positive twisted factor with `B₀`-valued constant term.
    pub b: TwistedLoop,
    pub branch: Branch,
}

/// Membership diagnostics of an Iwasawa splitting.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IwasawaDefects {
    pub residual: f64,
    pub u_reality: f64,
    pub u_twist: f64,
    pub b_twist: f64,
    /// Largest negative-mode coefficient of `B`.
    pub b_negative: f64,
    /// Distance of `B̂₀`'s rotation from the stabilizer of `R₊ε`.
    pub b0: f64,
}

impl IwasawaFactors {
    pub fn defects(&self, h: &TwistedLoop) -> IwasawaDefects {
        let prod = &self.u * &self.b;
        let coeffs = self.b.coeffs();
        let b0 = coeffs.iter().find(|c| c.k == 0).map(|c| c.rotation).unwrap_or_else(CMat4::zeros);
        IwasawaDefects {
            residual: prod.max_diff(h).unwrap_or(f64::INFINITY),
            u_reality: self.u.reality_defect(),
            u_twist: self.u.twist_defect(),
            b_twist: self.b.twist_defect(),
            b_negative: coeffs.iter().filter(|c| c.k < 0).map(|c| cmax(c.rotation.iter()).max(cmax(c.translation.iter()))).fold(0.0, f64::max),
            b0: b0_defect(&b0),
        }
    }
}

/// Zero iff `b` is a complexified `R`-rotation mapping `ε` into `R₊ε`.
pub fn b0_defect(b: &CMat4) -> f64 {
    let r = rho(b);
    let outside = cmax((b - g0_from_rho(&r)).iter());
    let lower = r[(1, 0)].norm();
    let diag = r[(0, 0)].im.abs() + (-r[(0, 0)].re).max(0.0);
    outside.max(lower).max(diag)
}

fn unwrap_log(kappa: &[C]) -> Result<Vec<C>, LoopError> {
    let mut out: Vec<C> = Vec::with_capacity(kappa.len());
    for &k in kappa {
        let mut s = k.ln();
        if let Some(prev) = out.last() {
            s.im += 2.0 * PI * ((prev.im - s.im) / (2.0 * PI)).round();
        }
        out.push(s);
    }
    let close = kappa[0].ln().im + 2.0 * PI * ((out[out.len() - 1].im - kappa[0].ln().im) / (2.0 * PI)).round();
    if (close - out[0].im).abs() > 1e-9 {
        return Err(LoopError::ConvergenceFailure { defect: (close - out[0].im).abs() });
    }
    Ok(out)
}

/// `M = φ·β` for a twisted loop in the complexified `SU(2)`, with `φ` real
/// and `β` positive with constant term fixing `R₊ε`.
pub fn g0_iwasawa(m_loop: &TwistedLoop) -> Result<(TwistedLoop, TwistedLoop), LoopError> {
    let m = m_loop.sample_count();
    let rho_samples: Vec<[C; 4]> = m_loop
        .samples()
        .iter()
        .map(|g| {
            let r = rho(&g.rotation);
            [r[(0, 0)], r[(1, 0)], r[(0, 1)], r[(1, 1)]]
        })
        .collect();
    let lam_coeffs = map_entries(&rho_samples, to_coeffs);
    // Resample in μ = λ⁴ on a finer grid.
    let nmu = m / 4;
    let s = m.max(MIN_MU_SAMPLES);
    let mut mu_coeffs = vec![[C::new(0.0, 0.0); 4]; s];
    for l in -(nmu as i32 / 2)..(nmu as i32 / 2) {
        mu_coeffs[mode_index(l, s)] = lam_coeffs[mode_index(4 * l, m)];
    }
    let fine = map_entries(&mu_coeffs, to_samples);
    let w_samples: Vec<[C; 4]> = fine
        .iter()
        .map(|x| {
            let r = CMat2::new(x[0], x[2], x[1], x[3]);
            let w = r.adjoint() * r;
            [w[(0, 0)], w[(1, 0)], w[(0, 1)], w[(1, 1)]]
        })
        .collect();
    let w_coeffs = map_entries(&w_samples, to_coeffs);
    let w_hat = |k: i32| -> CMat2 {
        let x = w_coeffs[mode_index(k, s)];
        CMat2::new(x[0], x[2], x[1], x[3])
    };
    // Σ_j W_{k−j} Y_j = δ_{k0} I for 0 ≤ j, k ≤ n.
    let n = s / 4;
    let dim = 2 * (n + 1);
    let mut a = DMatrix::<C>::zeros(dim, dim);
    for k in 0..=n {
        for j in 0..=n {
            let blk = w_hat(k as i32 - j as i32);
            a.view_mut((2 * k, 2 * j), (2, 2)).copy_from(&blk);
        }
    }
    let mut rhs = DMatrix::<C>::zeros(dim, 2);
    rhs[(0, 0)] = C::new(1.0, 0.0);
    rhs[(1, 1)] = C::new(1.0, 0.0);
    let y = a.lu().solve(&rhs).ok_or(LoopError::SingularInput)?;
    let block = |j: usize| -> CMat2 { CMat2::from_fn(|r, c| y[(2 * j + r, c)]) };
    let y0 = block(0);
    let y0 = (y0 + y0.adjoint()) * C::new(0.5, 0.0);
    let y0inv = y0.try_inverse().ok_or(LoopError::SingularInput)?;
    let chol = y0inv.cholesky().ok_or(LoopError::ConvergenceFailure { defect: f64::NAN })?;
    let l = chol.l();
    let v: Vec<CMat2> = (0..=n).map(|j| block(j) * l).collect();
    let mut phi_samples = Vec::with_capacity(m);
    let mut beta_samples = Vec::with_capacity(m);
    let mut defect: f64 = 0.0;
    for (j, g) in m_loop.samples().iter().enumerate() {
        let mu = super::sample_lambda(j, m).powi(4);
        let mut vm = CMat2::zeros();
        let mut p = C::new(1.0, 0.0);
        for vj in &v {
            vm += vj * p;
            p *= mu;
        }
        let beta = vm.try_inverse().ok_or(LoopError::Singular(j))?;
        let phi = rho(&g.rotation) * vm;
        defect = defect.max((phi.adjoint() * phi - CMat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max));
        phi_samples.push(CGroupElement::new(g0_from_rho(&phi), CVec4::zeros()));
        beta_samples.push(CGroupElement::new(g0_from_rho(&beta), CVec4::zeros()));
    }
    if !(defect <= 1e-9) {
        return Err(LoopError::ConvergenceFailure { defect });
    }
    Ok((TwistedLoop::from_samples(phi_samples)?, TwistedLoop::from_samples(beta_samples)?))
}

/// Iwasawa factorization `H = U·B` of a twisted loop.
pub fn iwasawa(h: &TwistedLoop) -> Result<IwasawaFactors, LoopError> {
    let m = h.sample_count();
    let split = rotation_factor_split(h)?;
    let kappa: Vec<C> = split.k.samples().iter().map(|g| g2_scalar(&g.rotation)).collect();
    let mut s = unwrap_log(&kappa)?;
    // Normalize so that s(iλ) = −s(λ); an odd multiple of iπ flips both factors.
    let q = m / 4;
    let c = s[q] + s[0];
    let turns = (c.im / (2.0 * PI)).round();
    let shift = C::new(0.0, PI * turns);
    s.iter_mut().for_each(|x| *x -= shift);
    let flip = turns.rem_euclid(2.0) == 1.0;
    let twist_err = (0..m - q).map(|j| (s[j + q] + s[j]).norm()).fold(0.0, f64::max);
    if twist_err > 1e-8 {
        return Err(LoopError::ConvergenceFailure { defect: twist_err });
    }
    let sc = to_coeffs(&s);
    let mut hc = vec![C::new(0.0, 0.0); m];
    for (idx, slot) in hc.iter_mut().enumerate() {
        let k = index_mode(idx, m);
        if k > 0 && k < m as i32 / 2 {
            *slot = sc[idx] + sc[mode_index(-k, m)].conj();
        }
    }
    let hs = to_samples(&hc);
    let m_loop = if flip {
        TwistedLoop::from_samples(split.m.samples().iter().map(|g| CGroupElement::new(-g.rotation, g.translation)).collect())?
    } else {
        split.m.clone()
    };
    let (phi, beta) = g0_iwasawa(&m_loop)?;
    let mut u_rot = Vec::with_capacity(m);
    let mut b_rot = Vec::with_capacity(m);
    for j in 0..m {
        let psi = g2_from_scalar((s[j] - hs[j]).exp());
        let gamma = g2_from_scalar(hs[j].exp());
        let mut u = psi * phi.sample(j).rotation;
        if split.branch == Branch::II {
            u = pi_matrix(h.lambda(j)) * u;
        }
        u_rot.push(u);
        b_rot.push(gamma * beta.sample(j).rotation);
    }
    let v: Vec<CVec4> = (0..m)
        .map(|j| u_rot[j].try_inverse().map(|ui| ui * h.sample(j).translation).ok_or(LoopError::Singular(j)))
        .collect::<Result<_, _>>()?;
    let v = VectorLoop::from_samples(v)?;
    let pv = v.p();
    let u_samples =
        (0..m).map(|j| CGroupElement::new(u_rot[j], u_rot[j] * pv.samples()[j])).collect::<Vec<_>>();
    let b_samples = (0..m)
        .map(|j| CGroupElement::new(b_rot[j], v.samples()[j] - pv.samples()[j]))
        .collect::<Vec<_>>();
    Ok(IwasawaFactors {
        u: TwistedLoop::from_samples(u_samples)?,
        b: TwistedLoop::from_samples(b_samples)?,
        branch: split.branch,
    })
}
