//! Polynomial Killing fields: the Lax flow `dξ = [ξ, α]` with `α` the
//! projection of `λ^{d−2}ξ dz`, formal Killing fields, and the frequency
//! conditions satisfied by finite-type tori.

mod flow;
mod formal;
mod polynomial;
mod seed;

pub use flow::{
    char_poly, lax_grid, lax_integrate, lax_rhs, lax_step, spectral_signature, FlowForm, LaxIntegrator, LaxReport,
    DEFAULT_STEP_DIVISIONS,
};
pub use formal::{elliptic_residual, formal_killing, FormalKilling, SpinorField, DEFAULT_FORMAL_TERMS};
pub use polynomial::{fourier_recurrence, polynomial_condition, FrequencyCondition, PolynomialCondition, RecurrenceChain};
pub use seed::{genus_zero_seed, standard_torus_fixture, GenusZeroFixture};

use crate::algebra::{complexify, epsilon, r_basis, AlgebraElement, CMat4, CVec4, C, I};
use crate::verify::ExtendedForm;
use nalgebra::{Matrix6, SMatrix, SVector};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FiniteTypeError {
    #[error("degree {0} is not of the form 4p + 2")]
    BadDegree(usize),
    #[error("expected {expected} coefficients, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("coefficient {n} violates the twist condition (defect {defect:.3e})")]
    NotTwisted { n: i32, defect: f64 },
    #[error("coefficients are not conjugate-symmetric (defect {defect:.3e})")]
    NotReal { defect: f64 },
    #[error("top coefficient vanishes")]
    ZeroTop,
    #[error("step size {h} is too small for a path of length {length}")]
    StepSizeUnderflow { h: f64, length: f64 },
    #[error("spec is not of genus zero: {0}")]
    NotGenusZero(String),
    #[error(transparent)]
    Construct(#[from] crate::construct::ConstructError),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
}

/// Tolerance for the structural checks on a Killing field.
pub const KILLING_TOL: f64 = 1e-9;

/// A real twisted polynomial loop `ξ_λ = Σ_{|n|≤d} ξ̂_n λⁿ` in the Lie
/// algebra, with `d ≡ 2 (mod 4)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingField {
    degree: usize,
    coeffs: Vec<AlgebraElement>,
}

/// One coefficient of a serialized Killing field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KillingRecord {
    pub n: i32,
    pub li: C,
    pub r: [C; 3],
    pub t: [C; 4],
}

impl KillingField {
    /// Validates degree, twist and reality; `coeffs[j]` is `ξ̂_{j−d}`.
    pub fn new(degree: usize, coeffs: Vec<AlgebraElement>) -> Result<Self, FiniteTypeError> {
        let f = Self::new_unchecked(degree, coeffs)?;
        for n in f.modes() {
            let defect = (f.coeff(n) - f.coeff(n).eigen_project(n)).norm();
            if defect > KILLING_TOL {
                return Err(FiniteTypeError::NotTwisted { n, defect });
            }
        }
        let defect = f.reality_defect();
        if defect > KILLING_TOL {
            return Err(FiniteTypeError::NotReal { defect });
        }
        if f.top().a.norm() == 0.0 {
            return Err(FiniteTypeError::ZeroTop);
        }
        Ok(f)
    }

    fn new_unchecked(degree: usize, coeffs: Vec<AlgebraElement>) -> Result<Self, FiniteTypeError> {
        if degree % 4 != 2 {
            return Err(FiniteTypeError::BadDegree(degree));
        }
        if coeffs.len() != 2 * degree + 1 {
            return Err(FiniteTypeError::BadLength { expected: 2 * degree + 1, got: coeffs.len() });
        }
        Ok(Self { degree, coeffs })
    }

    /// Builds the field from its non-positive coefficients `ξ̂_{−d}, …, ξ̂_0`;
    /// the others follow by reality. Each is projected onto its twist class.
    pub fn from_lower(degree: usize, lower: &[AlgebraElement]) -> Result<Self, FiniteTypeError> {
        if lower.len() != degree + 1 {
            return Err(FiniteTypeError::BadLength { expected: degree + 1, got: lower.len() });
        }
        let d = degree as i32;
        let mut coeffs = vec![AlgebraElement::zero(); 2 * degree + 1];
        for (j, x) in lower.iter().enumerate() {
            let n = j as i32 - d;
            let x = x.eigen_project(n);
            coeffs[j] = if n == 0 { (x + x.conj()) * 0.5 } else { x };
            coeffs[(d - n) as usize] = coeffs[j].conj();
        }
        Self::new(degree, coeffs)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modes(&self) -> impl Iterator<Item = i32> {
        let d = self.degree as i32;
        -d..=d
    }

    /// `ξ̂_n`, zero outside `[−d, d]`.
    pub fn coeff(&self, n: i32) -> AlgebraElement {
        let j = n + self.degree as i32;
        if j < 0 || j as usize >= self.coeffs.len() {
            AlgebraElement::zero()
        } else {
            self.coeffs[j as usize]
        }
    }

    pub fn coeffs(&self) -> &[AlgebraElement] {
        &self.coeffs
    }

    /// `ξ̂_{−d}`.
    pub fn top(&self) -> AlgebraElement {
        self.coeffs[0]
    }

    pub fn eval(&self, lambda: C) -> AlgebraElement {
        let d = self.degree as i32;
        self.coeffs.iter().enumerate().fold(AlgebraElement::zero(), |acc, (j, x)| acc + *x * lambda.powi(j as i32 - d))
    }

    /// `max_n |ξ̂_n − π_{n mod 4}(ξ̂_n)|`.
    pub fn twist_defect(&self) -> f64 {
        self.modes().map(|n| (self.coeff(n) - self.coeff(n).eigen_project(n)).norm()).fold(0.0, f64::max)
    }

    /// `max_n |conj(ξ̂_n) − ξ̂_{−n}|`.
    pub fn reality_defect(&self) -> f64 {
        self.modes().map(|n| (self.coeff(n).conj() - self.coeff(-n)).norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient with exponent `≡ 0 (mod 4)`.
    pub fn mod4_defect(&self) -> f64 {
        self.modes().filter(|n| n.rem_euclid(4) == 0).map(|n| self.coeff(n).norm()).fold(0.0, f64::max)
    }

    /// Multiplies by the real polynomial `Σ_k p_k (λ^{4k} + λ^{−4k})` (with
    /// `p_0` counted once), raising the degree by `4·(len − 1)`.
    pub fn times_mu_polynomial(&self, p: &[f64]) -> Result<Self, FiniteTypeError> {
        let shift = 4 * (p.len().max(1) - 1);
        let degree = self.degree + shift;
        let d = degree as i32;
        let mut coeffs = vec![AlgebraElement::zero(); 2 * degree + 1];
        for n in self.modes() {
            for (k, &pk) in p.iter().enumerate() {
                let k = 4 * k as i32;
                let targets: &[i32] = if k == 0 { &[0] } else { &[k, -k] };
                for &s in targets {
                    coeffs[(n + s + d) as usize] = coeffs[(n + s + d) as usize] + self.coeff(n) * pk;
                }
            }
        }
        Self::new(degree, coeffs)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        let d = self.degree.max(other.degree) as i32;
        (-d..=d).map(|n| (self.coeff(n) - other.coeff(n)).norm()).fold(0.0, f64::max)
    }

    pub fn to_records(&self) -> Vec<KillingRecord> {
        self.modes()
            .map(|n| {
                let x = self.coeff(n);
                KillingRecord { n, li: x.a, r: x.b, t: [x.t[0], x.t[1], x.t[2], x.t[3]] }
            })
            .collect()
    }

    pub fn from_records(records: &[KillingRecord]) -> Result<Self, FiniteTypeError> {
        let d = records.iter().map(|r| r.n.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![AlgebraElement::zero(); 2 * d + 1];
        for r in records {
            coeffs[(r.n + d as i32) as usize] =
                AlgebraElement { a: r.li, b: r.r, t: CVec4::new(r.t[0], r.t[1], r.t[2], r.t[3]) };
        }
        Self::new(d, coeffs)
    }

    pub(crate) fn with_coeffs(&self, coeffs: Vec<AlgebraElement>) -> Self {
        Self { degree: self.degree, coeffs }
    }
}

/// `(g₀-basis | b₀-basis)⁻¹` in the real coordinates `(Re z, Im z)` of
/// `ζ = Σ z_k R_k`.
fn g0_splitting() -> &'static Matrix6<f64> {
    static SPLIT: OnceLock<Matrix6<f64>> = OnceLock::new();
    SPLIT.get_or_init(|| {
        let b0 = b0_basis();
        let mut m = Matrix6::<f64>::zeros();
        for k in 0..3 {
            m[(k, k)] = 1.0;
            m.set_column(k + 3, &b0[k]);
        }
        m.try_inverse().expect("g₀ and b₀ are complementary")
    })
}

fn g0_matrix(x: &SVector<f64, 6>) -> CMat4 {
    let r = r_basis().map(|m| complexify(&m));
    (0..3).fold(CMat4::zeros(), |acc, k| acc + r[k] * C::new(x[k], x[k + 3]))
}

/// Real basis of `b₀ = {ζ ∈ g₀^C : ζε ∈ Rε}`, obtained as the null space of
/// the linear stabilizer condition.
pub fn b0_basis() -> [SVector<f64, 6>; 3] {
    static BASIS: OnceLock<[SVector<f64, 6>; 3]> = OnceLock::new();
    *BASIS.get_or_init(|| {
        let e = epsilon();
        let ee = e.dotc(&e);
        // Rows: Re/Im of the component of ζε orthogonal to ε, and Im⟨ε, ζε⟩.
        let mut a = SMatrix::<f64, 9, 6>::zeros();
        for col in 0..6 {
            let mut x = SVector::<f64, 6>::zeros();
            x[col] = 1.0;
            let w = g0_matrix(&x) * e;
            let perp = w - e * (e.dotc(&w) / ee);
            for r in 0..4 {
                a[(r, col)] = perp[r].re;
                a[(r + 4, col)] = perp[r].im;
            }
            a[(8, col)] = e.dotc(&w).im;
        }
        let eig = (a.transpose() * a).symmetric_eigen();
        let mut idx: Vec<usize> = (0..6).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        [0, 1, 2].map(|k| eig.eigenvectors.column(idx[k]).into_owned())
    })
}

/// Projection `π_{g₀}` of `g₀^C = g₀ ⊕ b₀` onto the compact factor. The
/// `L_i` and translation parts of `ζ` are ignored.
pub fn project_g0(zeta: &AlgebraElement) -> AlgebraElement {
    let x = SVector::<f64, 6>::from_fn(|k, _| if k < 3 { zeta.b[k].re } else { zeta.b[k - 3].im });
    let c = g0_splitting() * x;
    AlgebraElement::rotation_r([0, 1, 2].map(|k| C::new(c[k], 0.0)))
}

/// `r(ζ) = (π_{g₀}(ζ) − iπ_{g₀}(iζ))/2`, so that
/// `π_{g₀}(ζ dz) = r(ζ)dz + conj(r(ζ))dz̄`.
pub fn r_op(zeta: &AlgebraElement) -> AlgebraElement {
    let z0 = AlgebraElement::rotation_r(zeta.b);
    (project_g0(&z0) - project_g0(&(z0 * I)) * I) * 0.5
}

/// The 1-form `α_λ = A dz + B dz̄` obtained by projecting `λ^{d−2}ξ_λ dz`:
/// `A = λ⁻²ξ̂_{−d} + λ⁻¹ξ̂_{−d+1} + r(ξ̂_{−d+2})`, `B = conj` with `λ ↦ λ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxForm {
    pub minus2: AlgebraElement,
    pub minus1: AlgebraElement,
    pub zero: AlgebraElement,
}

impl LaxForm {
    /// `A(λ)`, the `dz` part.
    pub fn a(&self, lambda: C) -> AlgebraElement {
        let l = lambda.inv();
        self.minus2 * (l * l) + self.minus1 * l + self.zero
    }

    /// `B(λ)`, the `dz̄` part.
    pub fn b(&self, lambda: C) -> AlgebraElement {
        self.minus2.conj() * (lambda * lambda) + self.minus1.conj() * lambda + self.zero.conj()
    }

    /// `α(v) = A v + B v̄` as a polynomial in `λ`: coefficients of `λ^{−2..2}`.
    pub fn along(&self, v: C) -> [AlgebraElement; 5] {
        let w = v.conj();
        [
            self.minus2 * v,
            self.minus1 * v,
            self.zero * v + self.zero.conj() * w,
            self.minus1.conj() * w,
            self.minus2.conj() * w,
        ]
    }
}

pub fn lax_project(xi: &KillingField) -> LaxForm {
    let d = xi.degree as i32;
    LaxForm { minus2: xi.coeff(-d), minus1: xi.coeff(-d + 1), zero: r_op(&xi.coeff(-d + 2)) }
}

impl ExtendedForm for LaxForm {
    fn a(&self, _z: C, lambda: C) -> AlgebraElement {
        LaxForm::a(self, lambda)
    }

    fn b(&self, _z: C, lambda: C) -> AlgebraElement {
        LaxForm::b(self, lambda)
    }
}
