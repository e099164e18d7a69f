//! Formal Killing fields `ζ_λ = (aL_i, Σ_{n≥0} λ^{2n+1} a⁻ⁿL_iⁿ ∂ⁿu/∂zⁿ)`.

use super::FiniteTypeError;
use crate::algebra::{complexify, li, CMat4, CVec4, C, I};
use crate::lattice::inner;
use std::f64::consts::PI;

/// Default number of formal coefficients.
pub const DEFAULT_FORMAL_TERMS: usize = 24;

/// A vector field `Σ_k v_k e^{2iπ⟨k,z⟩}` given by Fourier data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpinorField {
    pub modes: Vec<(C, CVec4)>,
}

impl SpinorField {
    pub fn new(modes: Vec<(C, CVec4)>) -> Self {
        Self { modes }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn eval(&self, z: C) -> CVec4 {
        self.modes.iter().map(|(k, v)| v * C::from_polar(1.0, 2.0 * PI * inner(*k, z))).sum()
    }

    /// `∂/∂z`: each mode is multiplied by `iπk̄`.
    pub fn dz(&self) -> Self {
        Self { modes: self.modes.iter().map(|(k, v)| (*k, v * (I * PI * k.conj()))).collect() }
    }

    /// `∂/∂z̄`: each mode is multiplied by `iπk`.
    pub fn dzbar(&self) -> Self {
        Self { modes: self.modes.iter().map(|(k, v)| (*k, v * (I * PI * k))).collect() }
    }

    pub fn apply(&self, m: &CMat4) -> Self {
        Self { modes: self.modes.iter().map(|(k, v)| (*k, m * v)).collect() }
    }

    pub fn scale(&self, s: C) -> Self {
        Self { modes: self.modes.iter().map(|(k, v)| (*k, v * s)).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { modes: self.modes.iter().map(|(k, v)| (-k, v.map(|x| x.conj()))).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { modes: self.modes.iter().chain(&other.modes).copied().collect() }
    }

    /// Largest mode amplitude.
    pub fn amplitude(&self) -> f64 {
        self.modes.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }

    /// Largest amplitude after merging equal frequencies.
    pub fn merged_amplitude(&self, tol: f64) -> f64 {
        let mut merged: Vec<(C, CVec4)> = Vec::new();
        for (k, v) in &self.modes {
            match merged.iter_mut().find(|(q, _)| (q - k).norm() <= tol) {
                Some((_, w)) => *w += v,
                None => merged.push((*k, *v)),
            }
        }
        merged.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }
}

/// The adapted formal Killing field of `(aL_i, u)` and the gauge series
/// `w_λ = Σ λⁿ ŵ_n`.
#[derive(Debug, Clone)]
pub struct FormalKilling {
    pub a: C,
    /// `ŵ_0, ŵ_1, …`.
    pub w: Vec<SpinorField>,
    /// Translation parts of `ζ̂_1, ζ̂_2, …`; `ζ̂_0 = (aL_i, 0)`.
    pub zeta: Vec<SpinorField>,
}

impl FormalKilling {
    /// Translation part of `ζ̂_n` (`n ≥ 1`).
    pub fn zeta_t(&self, n: usize) -> &SpinorField {
        &self.zeta[n - 1]
    }
}

/// `ŵ_0 = a⁻¹L_iu`, `ŵ_1 = −a⁻¹L_iu`, `ŵ_2 = a⁻¹L_i∂ŵ_0 + a⁻²∂u`,
/// `ŵ_n = a⁻¹L_i∂ŵ_{n−2}`, and `ζ̂ = (aL_i, u + aL_i w)`.
pub fn formal_killing(u: &SpinorField, a: C, terms: usize) -> Result<FormalKilling, FiniteTypeError> {
    if a.norm() == 0.0 {
        return Err(FiniteTypeError::ZeroTop);
    }
    let l = complexify(&li());
    let ainv = a.inv();
    let op = |f: &SpinorField| f.dz().apply(&l).scale(ainv);
    let mut w: Vec<SpinorField> = Vec::with_capacity(terms + 1);
    for n in 0..=terms {
        let next = match n {
            0 => u.apply(&l).scale(ainv),
            1 => u.apply(&l).scale(-ainv),
            // Same operation order as `op(ŵ_0)` so that the two terms cancel exactly.
            2 => op(&w[0]).add(&u.scale(ainv).dz().scale(ainv)),
            _ => op(&w[n - 2]),
        };
        w.push(next);
    }
    // ζ̂_0 = (aL_i, u + aL_iŵ_0) has vanishing translation; ζ̂_n = (0, aL_iŵ_n).
    let zeta = w[1..].iter().map(|f| f.apply(&l).scale(a)).collect();
    w.truncate(terms);
    Ok(FormalKilling { a, w, zeta })
}

/// `max |(∂²/∂z∂z̄ + |a|²) f|` over `points`, with a fourth-order
/// finite-difference Laplacian of step `h` applied to the evaluated field.
pub fn elliptic_residual(f: &SpinorField, a: C, points: &[C], h: f64) -> f64 {
    let a2 = a.norm_sqr();
    points
        .iter()
        .map(|&z| {
            let w = |x: f64| C::new(x, 0.0);
            let d2 = |e: C| {
                (f.eval(z + e * 2.0) * w(-1.0) + f.eval(z + e) * w(16.0) - f.eval(z) * w(30.0)
                    + f.eval(z - e) * w(16.0)
                    - f.eval(z - e * 2.0))
                    * w(1.0 / (12.0 * h * h))
            };
            let lap = d2(w(h)) + d2(C::new(0.0, h));
            (lap * w(0.25) + f.eval(z) * w(a2)).norm()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraElement;
    use crate::construct::spinor_modes;
    use crate::examples::standard_torus;
    use crate::verify::Domain;

    fn setup() -> (SpinorField, C, Vec<C>) {
        let st = standard_torus(1.0, 1.0).unwrap();
        let u = SpinorField::new(spinor_modes(&st.spec));
        let pts: Vec<C> = Domain::fundamental(st.spec.lattice()).grid(5).into_iter().flatten().collect();
        (u, st.spec.c(), pts)
    }

    #[test]
    fn w2_vanishes_and_zeta_shape() {
        let (u, a, pts) = setup();
        let f = formal_killing(&u, a, 24).unwrap();
        assert_eq!(f.w.len(), 24);
        assert_eq!(f.w[2].merged_amplitude(1e-12), 0.0);
        for n in (2..24).step_by(2) {
            assert!(f.w[n].merged_amplitude(1e-12) < 1e-12, "{n}");
            assert!(f.zeta_t(n).merged_amplitude(1e-12) < 1e-12);
        }
        // ζ̂_1 = (0, u).
        for &z in &pts {
            assert!((f.zeta_t(1).eval(z) - u.eval(z)).norm() < 1e-12);
        }
        assert!(matches!(formal_killing(&u, C::new(0.0, 0.0), 4), Err(FiniteTypeError::ZeroTop)));
    }

    #[test]
    fn zeta_closed_form() {
        // ζ̂_{2n+1} = (0, a⁻ⁿ L_iⁿ ∂ⁿu).
        let (u, a, pts) = setup();
        let f = formal_killing(&u, a, 24).unwrap();
        let l = complexify(&li());
        let mut g = u.clone();
        for n in 0..11 {
            for &z in &pts {
                assert!((f.zeta_t(2 * n + 1).eval(z) - g.eval(z)).norm() < 1e-10);
            }
            g = g.dz().apply(&l).scale(a.inv());
        }
    }

    #[test]
    fn elliptic_equation() {
        let (u, a, pts) = setup();
        let f = formal_killing(&u, a, 24).unwrap();
        for n in 0..24 {
            assert!(elliptic_residual(&f.w[n], a, &pts, 2e-3) < 1e-6, "w {n}");
            assert!(elliptic_residual(f.zeta_t(n + 1), a, &pts, 2e-3) < 1e-6, "zeta {n}");
        }
    }

    #[test]
    fn killing_equations_coefficientwise() {
        // ∂ζ̂_n/∂z̄ = [ζ̂_{n−2}, (āL_i, 0)] + [ζ̂_{n−1}, (0, ū)] and
        // ∂ζ̂_n/∂z = [ζ̂_{n+2}, (aL_i, 0)] + [ζ̂_{n+1}, (0, u)].
        let (u, a, pts) = setup();
        let terms = 16;
        let f = formal_killing(&u, a, terms + 2).unwrap();
        let zeta = |n: i64, z: C| -> AlgebraElement {
            match n {
                0 => AlgebraElement::li(a),
                n if n < 0 => AlgebraElement::zero(),
                n => AlgebraElement::translation(f.zeta_t(n as usize).eval(z)),
            }
        };
        let ubar = u.conj();
        for &z in &pts {
            let top_bar = AlgebraElement::li(a.conj());
            let top = AlgebraElement::li(a);
            let ub = AlgebraElement::translation(ubar.eval(z));
            let uu = AlgebraElement::translation(u.eval(z));
            for n in 1..terms as i64 {
                let dzb = f.zeta_t(n as usize).dzbar().eval(z);
                let rhs = zeta(n - 2, z).bracket(&top_bar) + zeta(n - 1, z).bracket(&ub);
                assert!((dzb - rhs.t).norm() < 1e-10, "(0,1) n={n}");
                let dz = f.zeta_t(n as usize).dz().eval(z);
                let rhs = zeta(n + 2, z).bracket(&top) + zeta(n + 1, z).bracket(&uu);
                assert!((dz - rhs.t).norm() < 1e-10, "(1,0) n={n}");
            }
        }
    }
}
