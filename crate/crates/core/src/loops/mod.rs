//! Truncated twisted loops in the complexified group, their Iwasawa and
//! Birkhoff factorizations, and the holomorphic-potential correspondence.
//!
//! A loop is stored by its values at `λ_j = e^{2iπj/M}` with `M` a power of
//! two; Fourier coefficients are obtained by FFT. Sample `j + M/4` is `iλ_j`,
//! so the twist `G_{iλ} = τ(G_λ)` is checked exactly on the grid.

mod birkhoff;
mod dpw;
mod iwasawa;
mod random;
mod split;

pub use birkhoff::{birkhoff, BirkhoffFactors, BIG_CELL_COND};
pub use dpw::{
    dpw_reconstruct, potential_extract, toric_potential, DpwLift, ExtendedLift, ExtractOptions, Extraction, Holo,
    HolomorphicPotential,
};
pub use iwasawa::{g0_iwasawa, iwasawa, IwasawaFactors};
pub use random::{random_g0_loop, random_negative_loop, random_positive_loop, random_twisted_loop, RandomLoopOptions};
pub use split::{
    g0_from_rho, pi_loop, rho, rotation_factor_split, su2_iwasawa, Branch, RotationSplit,
};

use crate::algebra::{complexify, lj, CGroupElement, CMat4, CVec4, C, I};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Default truncation degree.
pub const DEFAULT_DEGREE: usize = 16;
/// Default sample count `4N`.
pub const DEFAULT_SAMPLES: usize = 4 * DEFAULT_DEGREE;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error("sample count {0} must be a power of two and at least 8")]
    BadSampleCount(usize),
    #[error("sample counts differ ({0} vs {1})")]
    SampleMismatch(usize, usize),
    #[error("loop value is singular at sample {0}")]
    Singular(usize),
    #[error("input is singular")]
    SingularInput,
    #[error("element is not in the expected group (defect {defect:.3e})")]
    NotInGroup { defect: f64 },
    #[error("no continuous sign assignment for the rotation factors ({reason})")]
    BranchDetectionFailure { reason: String },
    #[error("Iwasawa factorization did not converge (defect {defect:.3e})")]
    ConvergenceFailure { defect: f64 },
    #[error("loop is outside the big cell (condition number {cond:.3e})")]
    OutsideBigCell { cond: f64 },
    #[error("path integral to {z} did not reach tolerance")]
    PathIntegrationFailure { z: C },
    #[error("spectral parameter {lambda} is not on the unit circle")]
    LambdaOffCircle { lambda: C },
    #[error("potential extraction failed: {reason} (defect {defect:.3e})")]
    ExtractionFailure { reason: String, defect: f64 },
}

/// Index of mode `k` in an FFT buffer of length `m`.
pub(crate) fn mode_index(k: i32, m: usize) -> usize {
    k.rem_euclid(m as i32) as usize
}

/// Mode represented by buffer index `idx`, in `[−m/2, m/2)`.
pub(crate) fn index_mode(idx: usize, m: usize) -> i32 {
    if idx < m / 2 {
        idx as i32
    } else {
        idx as i32 - m as i32
    }
}

/// Fourier coefficients `ĝ_k` (index `k mod m`) of samples `g(λ_j)`.
pub(crate) fn to_coeffs(samples: &[C]) -> Vec<C> {
    let m = samples.len();
    let mut buf = samples.to_vec();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let s = 1.0 / m as f64;
    buf.iter_mut().for_each(|x| *x *= s);
    buf
}

/// Samples `Σ ĝ_k λ_j^k` from coefficients stored by `k mod m`.
pub(crate) fn to_samples(coeffs: &[C]) -> Vec<C> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// Applies a scalar coefficient-space transform to each entry of a
/// fixed-size array-valued sequence.
pub(crate) fn map_entries<const N: usize>(data: &[[C; N]], f: impl Fn(&[C]) -> Vec<C>) -> Vec<[C; N]> {
    let mut out = vec![[C::new(0.0, 0.0); N]; data.len()];
    let mut col = vec![C::new(0.0, 0.0); data.len()];
    for e in 0..N {
        for (c, d) in col.iter_mut().zip(data) {
            *c = d[e];
        }
        for (o, v) in out.iter_mut().zip(f(&col)) {
            o[e] = v;
        }
    }
    out
}

fn flatten(g: &CGroupElement) -> [C; 20] {
    let mut out = [C::new(0.0, 0.0); 20];
    out[..16].copy_from_slice(g.rotation.as_slice());
    out[16..].copy_from_slice(g.translation.as_slice());
    out
}

fn unflatten(x: &[C; 20]) -> CGroupElement {
    CGroupElement::new(CMat4::from_column_slice(&x[..16]), CVec4::from_column_slice(&x[16..]))
}

pub(crate) fn vec_coeffs(samples: &[CVec4]) -> Vec<CVec4> {
    let flat: Vec<[C; 4]> = samples.iter().map(|v| [v[0], v[1], v[2], v[3]]).collect();
    map_entries(&flat, to_coeffs).into_iter().map(|a| CVec4::from_column_slice(&a)).collect()
}

pub(crate) fn vec_samples(coeffs: &[CVec4]) -> Vec<CVec4> {
    let flat: Vec<[C; 4]> = coeffs.iter().map(|v| [v[0], v[1], v[2], v[3]]).collect();
    map_entries(&flat, to_samples).into_iter().map(|a| CVec4::from_column_slice(&a)).collect()
}

pub(crate) fn mat_coeffs(samples: &[CMat4]) -> Vec<CMat4> {
    let flat: Vec<[C; 16]> = samples
        .iter()
        .map(|m| {
            let mut a = [C::new(0.0, 0.0); 16];
            a.copy_from_slice(m.as_slice());
            a
        })
        .collect();
    map_entries(&flat, to_coeffs).into_iter().map(|a| CMat4::from_column_slice(&a)).collect()
}

fn check_count(m: usize) -> Result<(), LoopError> {
    if m < 8 || !m.is_power_of_two() {
        return Err(LoopError::BadSampleCount(m));
    }
    Ok(())
}

/// `λ_j = e^{2iπj/m}`.
pub fn sample_lambda(j: usize, m: usize) -> C {
    C::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)
}

/// One Fourier coefficient of a group-valued loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopCoeff {
    pub k: i32,
    pub rotation: CMat4,
    pub translation: CVec4,
}

/// Serialized form of a [`LoopCoeff`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub k: i32,
    /// Row-major rotation coefficient.
    pub rotation: [[C; 4]; 4],
    pub translation: [C; 4],
}

impl From<&LoopCoeff> for LoopRecord {
    fn from(c: &LoopCoeff) -> Self {
        let mut rotation = [[C::new(0.0, 0.0); 4]; 4];
        for (r, row) in rotation.iter_mut().enumerate() {
            for (s, x) in row.iter_mut().enumerate() {
                *x = c.rotation[(r, s)];
            }
        }
        let t = &c.translation;
        LoopRecord { k: c.k, rotation, translation: [t[0], t[1], t[2], t[3]] }
    }
}

impl From<&LoopRecord> for LoopCoeff {
    fn from(r: &LoopRecord) -> Self {
        LoopCoeff {
            k: r.k,
            rotation: CMat4::from_fn(|i, j| r.rotation[i][j]),
            translation: CVec4::from_column_slice(&r.translation),
        }
    }
}

/// A loop `λ ↦ (G_λ, T_λ)` in the complexified group, sampled on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedLoop {
    samples: Vec<CGroupElement>,
}

impl TwistedLoop {
    pub fn from_samples(samples: Vec<CGroupElement>) -> Result<Self, LoopError> {
        check_count(samples.len())?;
        Ok(Self { samples })
    }

    pub fn from_fn(m: usize, f: impl Fn(C) -> CGroupElement) -> Result<Self, LoopError> {
        check_count(m)?;
        Ok(Self { samples: (0..m).map(|j| f(sample_lambda(j, m))).collect() })
    }

    pub fn constant(m: usize, g: CGroupElement) -> Result<Self, LoopError> {
        Self::from_fn(m, |_| g)
    }

    pub fn identity(m: usize) -> Result<Self, LoopError> {
        Self::constant(m, CGroupElement::identity())
    }

    /// Coefficients with `|k| ≥ m/2` are dropped; repeated `k` are summed.
    pub fn from_coeffs(m: usize, coeffs: &[LoopCoeff]) -> Result<Self, LoopError> {
        Self::from_fn(m, |l| eval_coeffs(coeffs.iter().filter(|c| c.k.unsigned_abs() < m as u32 / 2), l))
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[CGroupElement] {
        &self.samples
    }

    pub fn sample(&self, j: usize) -> &CGroupElement {
        &self.samples[j % self.samples.len()]
    }

    pub fn lambda(&self, j: usize) -> C {
        sample_lambda(j, self.samples.len())
    }

    /// Rotation-only copy.
    pub fn rotation_part(&self) -> Self {
        Self { samples: self.samples.iter().map(|g| CGroupElement::new(g.rotation, CVec4::zeros())).collect() }
    }

    pub fn translations(&self) -> Vec<CVec4> {
        self.samples.iter().map(|g| g.translation).collect()
    }

    pub fn with_translations(&self, t: &[CVec4]) -> Self {
        let samples = self.samples.iter().zip(t).map(|(g, v)| CGroupElement::new(g.rotation, *v)).collect();
        Self { samples }
    }

    /// Coefficients for `k ∈ [−m/2, m/2)` in increasing order.
    pub fn coeffs(&self) -> Vec<LoopCoeff> {
        let m = self.samples.len();
        let flat: Vec<[C; 20]> = self.samples.iter().map(flatten).collect();
        let raw = map_entries(&flat, to_coeffs);
        let mut out: Vec<LoopCoeff> = raw
            .iter()
            .enumerate()
            .map(|(idx, x)| {
                let g = unflatten(x);
                LoopCoeff { k: index_mode(idx, m), rotation: g.rotation, translation: g.translation }
            })
            .collect();
        out.sort_by_key(|c| c.k);
        out
    }

    /// Coefficients larger than `tol`, for serialization.
    pub fn to_records(&self, tol: f64) -> Vec<LoopRecord> {
        self.coeffs()
            .iter()
            .filter(|c| coeff_norm(c) > tol)
            .map(LoopRecord::from)
            .collect()
    }

    pub fn from_records(m: usize, records: &[LoopRecord]) -> Result<Self, LoopError> {
        let coeffs: Vec<LoopCoeff> = records.iter().map(LoopCoeff::from).collect();
        Self::from_coeffs(m, &coeffs)
    }

    /// Laurent evaluation of the truncated series at any `λ ≠ 0`.
    pub fn eval(&self, lambda: C) -> CGroupElement {
        eval_coeffs(self.coeffs().iter(), lambda)
    }

    /// Smallest and largest mode with coefficient above `tol`.
    pub fn degree_bounds(&self, tol: f64) -> Option<(i32, i32)> {
        let ks: Vec<i32> = self.coeffs().iter().filter(|c| coeff_norm(c) > tol).map(|c| c.k).collect();
        Some((*ks.iter().min()?, *ks.iter().max()?))
    }

    /// Largest coefficient among modes selected by `pred`.
    pub fn mode_norm(&self, pred: impl Fn(i32) -> bool) -> f64 {
        self.coeffs().iter().filter(|c| pred(c.k)).map(coeff_norm).fold(0.0, f64::max)
    }

    /// `max_j |G(iλ_j) − τ(G(λ_j))|`.
    pub fn twist_defect(&self) -> f64 {
        let q = self.samples.len() / 4;
        (0..self.samples.len())
            .map(|j| self.sample(j + q).max_abs_diff(&self.samples[j].tau()))
            .fold(0.0, f64::max)
    }

    /// Largest imaginary part of any sample.
    pub fn reality_defect(&self) -> f64 {
        self.samples.iter().map(|g| g.imaginary_defect()).fold(0.0, f64::max)
    }

    pub fn is_twisted(&self, tol: f64) -> bool {
        self.twist_defect() <= tol
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_defect() <= tol
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, LoopError> {
        if self.samples.len() != other.samples.len() {
            return Err(LoopError::SampleMismatch(self.samples.len(), other.samples.len()));
        }
        Ok(Self { samples: self.samples.iter().zip(&other.samples).map(|(a, b)| *a * *b).collect() })
    }

    pub fn inverse(&self) -> Result<Self, LoopError> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, g)| g.inverse().ok_or(LoopError::Singular(j)))
            .collect::<Result<_, _>>()?;
        Ok(Self { samples })
    }

    /// Trigonometric interpolation onto `m` samples.
    pub fn resample(&self, m: usize) -> Result<Self, LoopError> {
        Self::from_coeffs(m, &self.coeffs())
    }

    /// Largest difference at the common sample points; one count must divide
    /// the other.
    pub fn max_diff(&self, other: &Self) -> Result<f64, LoopError> {
        let (a, b) = if self.samples.len() <= other.samples.len() { (self, other) } else { (other, self) };
        let (ma, mb) = (a.samples.len(), b.samples.len());
        if mb % ma != 0 {
            return Err(LoopError::SampleMismatch(ma, mb));
        }
        let step = mb / ma;
        Ok((0..ma).map(|j| a.samples[j].max_abs_diff(&b.samples[j * step])).fold(0.0, f64::max))
    }
}

impl std::ops::Mul for &TwistedLoop {
    type Output = TwistedLoop;
    fn mul(self, rhs: &TwistedLoop) -> TwistedLoop {
        self.try_mul(rhs).expect("loops with equal sample counts")
    }
}

fn coeff_norm(c: &LoopCoeff) -> f64 {
    crate::algebra::cmax(c.rotation.iter()).max(crate::algebra::cmax(c.translation.iter()))
}

fn eval_coeffs<'a>(coeffs: impl Iterator<Item = &'a LoopCoeff>, lambda: C) -> CGroupElement {
    let mut g = CGroupElement::new(CMat4::zeros(), CVec4::zeros());
    for c in coeffs {
        let p = lambda.powi(c.k);
        g.rotation += c.rotation * p;
        g.translation += c.translation * p;
    }
    g
}

/// A `C⁴`-valued loop sampled on the circle; the translation parts of
/// twisted loops have odd modes only.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorLoop {
    samples: Vec<CVec4>,
}

impl VectorLoop {
    pub fn from_samples(samples: Vec<CVec4>) -> Result<Self, LoopError> {
        check_count(samples.len())?;
        Ok(Self { samples })
    }

    pub fn from_coeffs(m: usize, coeffs: &[(i32, CVec4)]) -> Result<Self, LoopError> {
        check_count(m)?;
        let mut buf = vec![CVec4::zeros(); m];
        for &(k, v) in coeffs {
            if k.unsigned_abs() < m as u32 / 2 {
                buf[mode_index(k, m)] += v;
            }
        }
        Ok(Self { samples: vec_samples(&buf) })
    }

    pub fn samples(&self) -> &[CVec4] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<CVec4> {
        self.samples
    }

    /// Coefficients for `k ∈ [−m/2, m/2)` in increasing order.
    pub fn coeffs(&self) -> Vec<(i32, CVec4)> {
        let m = self.samples.len();
        let mut out: Vec<(i32, CVec4)> =
            vec_coeffs(&self.samples).into_iter().enumerate().map(|(i, v)| (index_mode(i, m), v)).collect();
        out.sort_by_key(|c| c.0);
        out
    }

    pub fn coeff(&self, k: i32) -> CVec4 {
        let m = self.samples.len();
        vec_coeffs(&self.samples)[mode_index(k, m)]
    }

    fn map_modes(&self, f: impl Fn(i32, &[CVec4]) -> CVec4) -> Self {
        let m = self.samples.len();
        let c = vec_coeffs(&self.samples);
        let out: Vec<CVec4> = (0..m).map(|idx| f(index_mode(idx, m), &c)).collect();
        Self { samples: vec_samples(&out) }
    }

    /// Projection onto real twisted loops along the positive ones: negative
    /// modes are kept and mode `k > 0` becomes `conj(v̂_{−k})`.
    pub fn p(&self) -> Self {
        let m = self.samples.len();
        self.map_modes(|k, c| match k {
            k if k < 0 => c[mode_index(k, m)],
            k if k > 0 && k < m as i32 / 2 => c[mode_index(-k, m)].map(|z| z.conj()),
            _ => CVec4::zeros(),
        })
    }

    /// Negative-mode part.
    pub fn q_minus(&self) -> Self {
        let m = self.samples.len();
        self.map_modes(|k, c| if k < 0 { c[mode_index(k, m)] } else { CVec4::zeros() })
    }

    /// Non-negative-mode part.
    pub fn q_plus(&self) -> Self {
        let m = self.samples.len();
        self.map_modes(|k, c| if k >= 0 { c[mode_index(k, m)] } else { CVec4::zeros() })
    }

    /// `max_j |V(iλ_j) + L_j V(λ_j)|`.
    pub fn twist_defect(&self) -> f64 {
        let m = self.samples.len();
        let ml = complexify(&-lj());
        (0..m)
            .map(|j| crate::algebra::cmax((self.samples[(j + m / 4) % m] - ml * self.samples[j]).iter()))
            .fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| crate::algebra::cmax((a - b).iter()))
            .fold(0.0, f64::max)
    }
}

/// Component of `v` in the `i^k` eigenspace of `−L_j`.
pub fn twisted_component(v: CVec4, k: i32) -> CVec4 {
    let ml = complexify(&-lj());
    let id = CMat4::identity();
    let half = C::new(0.5, 0.0);
    match k.rem_euclid(4) {
        1 => (id - ml * I) * v * half,
        3 => (id + ml * I) * v * half,
        _ => CVec4::zeros(),
    }
}
