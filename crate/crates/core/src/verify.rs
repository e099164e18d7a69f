//! Sampled numerical checks of the geometric identities satisfied by a
//! Hamiltonian stationary Lagrangian conformal immersion.
//!
//! Every check accepts any `z ↦ R⁴` evaluator through [`Surface`].

use crate::algebra::{complexify, li, normalize_angle, omega, volume_form, AlgebraElement, CVec4, Vec4, C, I};
use crate::construct::{spinor_u, TorusSpec};
use crate::lattice::Lattice;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

pub const CONFORMAL_TOL: f64 = 1e-8;
pub const LAGRANGIAN_TOL: f64 = 1e-8;
pub const HARMONIC_TOL: f64 = 1e-6;
pub const SLOPE_TOL: f64 = 1e-8;
pub const MEAN_CURVATURE_TOL: f64 = 1e-5;
pub const FLATNESS_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("angle unwrapping failed at {at}: {reason}")]
    AngleUnwrapFailure { at: C, reason: String },
    #[error("degenerate metric e^(2f) = {metric:.3e} at {at}")]
    DegenerateMetric { at: C, metric: f64 },
    #[error("grid size must be at least 2")]
    GridTooSmall,
}

/// A map from the parameter plane to R⁴.
pub trait Surface: Sync {
    fn eval(&self, z: C) -> Vec4;
}

impl<F: Fn(C) -> Vec4 + Sync> Surface for F {
    fn eval(&self, z: C) -> Vec4 {
        self(z)
    }
}

/// The parallelogram `origin + [0,1)e1 + [0,1)e2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domain {
    pub origin: C,
    pub e1: C,
    pub e2: C,
}

impl Domain {
    pub fn new(origin: C, e1: C, e2: C) -> Self {
        Self { origin, e1, e2 }
    }

    pub fn fundamental(lattice: &Lattice) -> Self {
        let (e1, e2) = lattice.generators();
        Self { origin: C::new(0.0, 0.0), e1, e2 }
    }

    pub fn square(side: f64) -> Self {
        Self { origin: C::new(0.0, 0.0), e1: C::new(side, 0.0), e2: C::new(0.0, side) }
    }

    pub fn diameter(&self) -> f64 {
        (self.e1 + self.e2).norm().max((self.e1 - self.e2).norm())
    }

    /// `grid_n²` sample points, row by row.
    pub fn grid(&self, grid_n: usize) -> Vec<Vec<C>> {
        let n = grid_n as f64;
        (0..grid_n)
            .map(|j| (0..grid_n).map(|i| self.origin + self.e1 * (i as f64 / n) + self.e2 * (j as f64 / n)).collect())
            .collect()
    }

    /// Axis-aligned bounding box `(x_min, y_min, x_max, y_max)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        let pts = [self.origin, self.origin + self.e1, self.origin + self.e2, self.origin + self.e1 + self.e2];
        let xs = pts.iter().map(|p| p.re);
        let ys = pts.iter().map(|p| p.im);
        (
            xs.clone().fold(f64::INFINITY, f64::min),
            ys.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
            ys.fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Finite-difference rule for derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Richardson-extrapolated central differences with steps
    /// `1e-5·diam` (first derivatives) and `1e-3·diam` (second derivatives).
    Precise,
    /// Plain central differences with step equal to the grid spacing.
    GridCentral,
}

/// JSON-serializable outcome of a check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub grid_n: usize,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Report {
    pub fn new(check: &str, grid_n: usize, residual: f64, threshold: f64) -> Self {
        Self { check: check.to_string(), grid_n, residual, threshold, pass: residual <= threshold }
    }

    pub fn failure(check: &str, grid_n: usize, threshold: f64) -> Self {
        Self { check: check.to_string(), grid_n, residual: f64::INFINITY, threshold, pass: false }
    }
}

/// A surface together with its sampling domain and difference scheme.
pub struct Checker<'a, S: Surface + ?Sized> {
    surface: &'a S,
    domain: Domain,
    scheme: Scheme,
}

fn central<T>(f: impl Fn(f64) -> T, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (f(h) - f(-h)) * (0.5 / h)
}

fn richardson<T>(f: impl Fn(f64) -> T + Copy, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    central(f, 0.5 * h) * (4.0 / 3.0) + central(f, h) * (-1.0 / 3.0)
}

fn richardson_c(f: impl Fn(f64) -> CVec4 + Copy, h: f64) -> CVec4 {
    let d = |h: f64| (f(h) - f(-h)) * C::new(0.5 / h, 0.0);
    d(0.5 * h) * C::new(4.0 / 3.0, 0.0) - d(h) * C::new(1.0 / 3.0, 0.0)
}

impl<'a, S: Surface + ?Sized> Checker<'a, S> {
    pub fn new(surface: &'a S, domain: Domain) -> Self {
        Self { surface, domain, scheme: Scheme::Precise }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn steps(&self, grid_n: usize) -> (f64, f64) {
        let diam = self.domain.diameter();
        match self.scheme {
            Scheme::Precise => (1e-5 * diam, 1e-3 * diam),
            Scheme::GridCentral => {
                let h = diam / grid_n as f64;
                (h, h)
            }
        }
    }

    fn derivative<T>(&self, f: impl Fn(f64) -> T + Copy, h: f64) -> T
    where
        T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        match self.scheme {
            Scheme::Precise => richardson(f, h),
            Scheme::GridCentral => central(f, h),
        }
    }

    /// `(X_x, X_y)` at `z`.
    pub fn frame(&self, z: C, h: f64) -> (Vec4, Vec4) {
        let s = self.surface;
        let xx = self.derivative(|t| s.eval(z + t), h);
        let xy = self.derivative(|t| s.eval(z + I * t), h);
        (xx, xy)
    }

    fn grid_map<T: Send>(&self, grid_n: usize, f: impl Fn(C) -> T + Sync) -> Vec<T> {
        self.domain.grid(grid_n).into_par_iter().flat_map_iter(|row| row.into_iter().map(&f).collect::<Vec<_>>()).collect()
    }

    /// `max (|⟨X_x,X_y⟩| + ||X_x|²−|X_y|²|) / mean |X_x|²`.
    pub fn conformal(&self, grid_n: usize) -> f64 {
        let (h, _) = self.steps(grid_n);
        let vals = self.grid_map(grid_n, |z| {
            let (xx, xy) = self.frame(z, h);
            (xx.dot(&xy).abs() + (xx.norm_squared() - xy.norm_squared()).abs(), xx.norm_squared())
        });
        let mean = vals.iter().map(|v| v.1).sum::<f64>() / vals.len() as f64;
        let worst = vals.iter().map(|v| v.0).fold(0.0, f64::max);
        if mean > 0.0 { worst / mean } else { worst }
    }

    /// `max |ω(X_x,X_y)| / mean |X_x|²`.
    pub fn lagrangian(&self, grid_n: usize) -> f64 {
        let (h, _) = self.steps(grid_n);
        let vals = self.grid_map(grid_n, |z| {
            let (xx, xy) = self.frame(z, h);
            (omega(&xx, &xy).abs(), xx.norm_squared())
        });
        let mean = vals.iter().map(|v| v.1).sum::<f64>() / vals.len() as f64;
        let worst = vals.iter().map(|v| v.0).fold(0.0, f64::max);
        if mean > 0.0 { worst / mean } else { worst }
    }

    /// Phase of the volume form on the normalized frame, and its modulus.
    fn angle_sample(&self, z: C, h: f64) -> Result<(f64, f64), VerifyError> {
        let (xx, xy) = self.frame(z, h);
        let (nx, ny) = (xx.norm(), xy.norm());
        let scale = self.domain.diameter().max(1e-300);
        if nx * ny < 1e-12 * scale * scale {
            return Err(VerifyError::DegenerateMetric { at: z, metric: 0.5 * (nx * nx + ny * ny) });
        }
        let v = volume_form(&(xx / nx), &(xy / ny));
        Ok((v.arg(), v.norm()))
    }

    /// Lagrangian angle sampled on a Cartesian grid over the bounding box,
    /// unwrapped row by row; returns the 5-point Laplacian residual and the
    /// least-squares slope.
    pub fn harmonic_angle(&self, grid_n: usize) -> Result<AngleFit, VerifyError> {
        if grid_n < 3 {
            return Err(VerifyError::GridTooSmall);
        }
        let (h, _) = self.steps(grid_n);
        let (x0, y0, x1, y1) = self.domain.bounding_box();
        let n = grid_n;
        let (dx, dy) = ((x1 - x0) / (n - 1) as f64, (y1 - y0) / (n - 1) as f64);
        let point = |i: usize, j: usize| C::new(x0 + i as f64 * dx, y0 + j as f64 * dy);
        let rows: Vec<Vec<(f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|j| (0..n).map(|i| self.angle_sample(point(i, j), h)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let mut beta = vec![vec![0.0; n]; n];
        let step = |prev: f64, raw: f64, at: C| -> Result<f64, VerifyError> {
            let inc = normalize_angle(raw - prev);
            if inc.abs() > PI / 2.0 {
                return Err(VerifyError::AngleUnwrapFailure { at, reason: format!("increment {inc:.3} exceeds π/2") });
            }
            Ok(prev + inc)
        };
        for j in 0..n {
            for i in 0..n {
                let (raw, modulus) = rows[j][i];
                let at = point(i, j);
                if modulus < 0.5 {
                    return Err(VerifyError::AngleUnwrapFailure {
                        at,
                        reason: format!("volume form modulus {modulus:.3} below 0.5"),
                    });
                }
                beta[j][i] = match (i, j) {
                    (0, 0) => raw,
                    (0, _) => step(beta[j - 1][0], raw, at)?,
                    _ => step(beta[j][i - 1], raw, at)?,
                };
            }
        }
        let mut lap = 0.0f64;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let l = (beta[j][i + 1] - 2.0 * beta[j][i] + beta[j][i - 1]) / (dx * dx)
                    + (beta[j + 1][i] - 2.0 * beta[j][i] + beta[j - 1][i]) / (dy * dy);
                lap = lap.max(l.abs());
            }
        }
        // Least squares β ≈ c + b_x x + b_y y on centered coordinates.
        let (mut sx, mut sy, mut sb, mut sxx, mut syy, mut sxb, mut syb) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let m = (n * n) as f64;
        for j in 0..n {
            for i in 0..n {
                let p = point(i, j);
                sx += p.re;
                sy += p.im;
                sb += beta[j][i];
            }
        }
        let (mx, my, mb) = (sx / m, sy / m, sb / m);
        for j in 0..n {
            for i in 0..n {
                let p = point(i, j);
                let (x, y, b) = (p.re - mx, p.im - my, beta[j][i] - mb);
                sxx += x * x;
                syy += y * y;
                sxb += x * b;
                syb += y * b;
            }
        }
        // The grid is a tensor product, so the centered x and y columns are orthogonal.
        let (bx, by) = (sxb / sxx, syb / syy);
        let mut fit_residual = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let p = point(i, j);
                let r = beta[j][i] - (mb + bx * (p.re - mx) + by * (p.im - my));
                fit_residual = fit_residual.max(r.abs());
            }
        }
        Ok(AngleFit { laplacian: lap, beta0: C::new(bx, by) / (2.0 * PI), fit_residual })
    }

    fn angle_at(&self, z: C, h: f64) -> f64 {
        let (xx, xy) = self.frame(z, h);
        volume_form(&xx.normalize(), &xy.normalize()).arg()
    }

    /// `max |e^{−2f}(ΔX)^⊥ − L_i ∇β|`, with `∇β = e^{−2f}(β_x X_x + β_y X_y)`
    /// and β read off the frame.
    pub fn mean_curvature(&self, grid_n: usize) -> Result<f64, VerifyError> {
        let (h, outer) = self.steps(grid_n);
        let l = li();
        let vals: Vec<Result<f64, VerifyError>> = self.grid_map(grid_n, |z| {
            let (xx, xy) = self.frame(z, h);
            let metric = 0.5 * (xx.norm_squared() + xy.norm_squared());
            let diam = self.domain.diameter();
            if metric < 1e-12 * diam * diam {
                return Err(VerifyError::DegenerateMetric { at: z, metric });
            }
            let xxx = self.derivative(|t| self.frame(z + t, h).0, outer);
            let xyy = self.derivative(|t| self.frame(z + I * t, h).1, outer);
            let e1 = xx.normalize();
            let e2 = (xy - e1 * e1.dot(&xy)).normalize();
            let lap = xxx + xyy;
            let normal = lap - e1 * e1.dot(&lap) - e2 * e2.dot(&lap);
            let hvec = normal / metric;
            let base = self.angle_at(z, h);
            let rel = |w: C| normalize_angle(self.angle_at(w, h) - base);
            let bx = self.derivative(|t| rel(z + t), outer);
            let by = self.derivative(|t| rel(z + I * t), outer);
            let grad = (xx * bx + xy * by) / metric;
            Ok((hvec - l * grad).norm())
        });
        vals.into_iter().try_fold(0.0f64, |acc, v| v.map(|r| acc.max(r)))
    }
}

/// Outcome of the harmonic-angle check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AngleFit {
    /// `max |Δβ|` over interior grid points.
    pub laplacian: f64,
    /// Slope recovered from `β ≈ const + 2π⟨β₀, z⟩`.
    pub beta0: C,
    /// Largest deviation from the affine fit.
    pub fit_residual: f64,
}

pub fn check_conformal<S: Surface + ?Sized>(x: &S, domain: &Domain, grid_n: usize) -> f64 {
    Checker::new(x, *domain).conformal(grid_n)
}

pub fn check_lagrangian<S: Surface + ?Sized>(x: &S, domain: &Domain, grid_n: usize) -> f64 {
    Checker::new(x, *domain).lagrangian(grid_n)
}

pub fn check_harmonic_angle<S: Surface + ?Sized>(x: &S, domain: &Domain, grid_n: usize) -> Result<AngleFit, VerifyError> {
    Checker::new(x, *domain).harmonic_angle(grid_n)
}

pub fn check_mean_curvature<S: Surface + ?Sized>(x: &S, domain: &Domain, grid_n: usize) -> Result<f64, VerifyError> {
    Checker::new(x, *domain).mean_curvature(grid_n)
}

/// Runs the four pointwise checks; `beta0`, when given, is compared with the
/// recovered slope.
pub fn verify_surface<S: Surface + ?Sized>(x: &S, domain: &Domain, grid_n: usize, beta0: Option<C>) -> Vec<Report> {
    let checker = Checker::new(x, *domain);
    let mut out = vec![
        Report::new("conformal", grid_n, checker.conformal(grid_n), CONFORMAL_TOL),
        Report::new("lagrangian", grid_n, checker.lagrangian(grid_n), LAGRANGIAN_TOL),
    ];
    match checker.harmonic_angle(grid_n) {
        Ok(fit) => {
            out.push(Report::new("harmonic_angle", grid_n, fit.laplacian, HARMONIC_TOL));
            if let Some(b) = beta0 {
                out.push(Report::new("angle_slope", grid_n, (fit.beta0 - b).norm(), SLOPE_TOL));
            }
        }
        Err(_) => {
            out.push(Report::failure("harmonic_angle", grid_n, HARMONIC_TOL));
            if beta0.is_some() {
                out.push(Report::failure("angle_slope", grid_n, SLOPE_TOL));
            }
        }
    }
    match checker.mean_curvature(grid_n) {
        Ok(r) => out.push(Report::new("mean_curvature", grid_n, r, MEAN_CURVATURE_TOL)),
        Err(_) => out.push(Report::failure("mean_curvature", grid_n, MEAN_CURVATURE_TOL)),
    }
    out
}

/// A connection form `A dz + B dz̄` with values in the complexified Lie algebra,
/// depending on a spectral parameter.
pub trait ExtendedForm: Sync {
    fn a(&self, z: C, lambda: C) -> AlgebraElement;
    fn b(&self, z: C, lambda: C) -> AlgebraElement;
}

/// `α_λ = (λ⁻²cL_i, λ⁻¹u)dz + (λ²c̄L_i, λū)dz̄` built from the spinor of a spec.
#[derive(Debug, Clone)]
pub struct SpinorForm<'a> {
    pub spec: &'a TorusSpec,
}

impl ExtendedForm for SpinorForm<'_> {
    fn a(&self, z: C, lambda: C) -> AlgebraElement {
        let u = spinor_u(self.spec, z);
        let linv = lambda.inv();
        AlgebraElement { a: linv * linv * self.spec.c(), b: [C::new(0.0, 0.0); 3], t: u * linv }
    }

    fn b(&self, z: C, lambda: C) -> AlgebraElement {
        let u = spinor_u(self.spec, z).map(|x| x.conj());
        AlgebraElement { a: lambda * lambda * self.spec.c().conj(), b: [C::new(0.0, 0.0); 3], t: u * lambda }
    }
}

/// The rotation part of `α_λ` for the non-harmonic angle `β = κ|z|²`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticAngleProbe {
    pub kappa: f64,
}

impl ExtendedForm for QuadraticAngleProbe {
    fn a(&self, z: C, lambda: C) -> AlgebraElement {
        // c = ½ ∂β/∂z = ½ κ z̄.
        let c = z.conj() * (0.5 * self.kappa);
        AlgebraElement::li(c / (lambda * lambda))
    }

    fn b(&self, z: C, lambda: C) -> AlgebraElement {
        let c = z * (0.5 * self.kappa);
        AlgebraElement::li(c * lambda * lambda)
    }
}

/// `∂_z B − ∂_z̄ A + [A, B]` at `z`.
pub fn curvature<F: ExtendedForm + ?Sized>(form: &F, z: C, lambda: C, h: f64) -> AlgebraElement {
    let ax = richardson(|t| form.a(z + t, lambda), h);
    let ay = richardson(|t| form.a(z + I * t, lambda), h);
    let bx = richardson(|t| form.b(z + t, lambda), h);
    let by = richardson(|t| form.b(z + I * t, lambda), h);
    let half = C::new(0.5, 0.0);
    let dz_b = (bx - by * I) * half;
    let dzbar_a = (ax + ay * I) * half;
    dz_b - dzbar_a + form.a(z, lambda).bracket(&form.b(z, lambda))
}

/// `max |dα_λ + α_λ∧α_λ|` over the grid.
pub fn check_flatness<F: ExtendedForm + ?Sized>(form: &F, lambda: C, domain: &Domain, grid_n: usize) -> f64 {
    let h = 1e-5 * domain.diameter();
    domain
        .grid(grid_n)
        .into_par_iter()
        .map(|row| row.into_iter().map(|z| curvature(form, z, lambda, h).norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

/// Flatness of the spinor form of `spec` on its spinor fundamental domain.
pub fn check_spec_flatness(spec: &TorusSpec, lambda: C, grid_n: usize) -> f64 {
    check_flatness(&SpinorForm { spec }, lambda, &Domain::fundamental(&spec.spinor_lattice()), grid_n)
}

/// `max |∂u/∂z̄ − c L_i ū|` by finite differences.
pub fn check_spinor_equation(spec: &TorusSpec, grid_n: usize) -> f64 {
    let domain = Domain::fundamental(&spec.spinor_lattice());
    let h = 1e-5 * domain.diameter();
    let l = complexify(&li());
    let c = spec.c();
    domain
        .grid(grid_n)
        .into_par_iter()
        .map(|row| {
            row.into_iter()
                .map(|z| {
                    let ux = richardson_c(|t| spinor_u(spec, z + t), h);
                    let uy = richardson_c(|t| spinor_u(spec, z + I * t), h);
                    let dzbar = (ux + uy * I) * C::new(0.5, 0.0);
                    (dzbar - l * spinor_u(spec, z).map(|x| x.conj()) * c).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
