//! Genus-zero initial data `η_λ` for the Lax flow.

use super::{FiniteTypeError, KillingField};
use crate::algebra::{AlgebraElement, C};
use crate::construct::{spinor_u, TorusSpec};
use crate::examples::{standard_torus, StandardTorus};
use std::f64::consts::FRAC_PI_2;

/// Relative tolerance for `γ = ±i|β₀/2|`.
const GENUS_ZERO_TOL: f64 = 1e-9;

/// `ξ = λ⁻²(cL_i, 0) + λ⁻¹(0, u(z₀)) + λ(0, ū(z₀)) + λ²(c̄L_i, 0)`, whose flow
/// projects onto the spinor form of `spec`. Requires every active frequency
/// to be `±i|β₀/2|`.
pub fn genus_zero_seed(spec: &TorusSpec, base: C) -> Result<KillingField, FiniteTypeError> {
    let r = spec.beta0().norm() / 2.0;
    for g in spec.active_frequencies() {
        if g.re.abs() > GENUS_ZERO_TOL * r {
            return Err(FiniteTypeError::NotGenusZero(format!("frequency {g} is not ±i|β₀/2|")));
        }
    }
    let top = AlgebraElement::li(spec.c());
    let u = AlgebraElement::translation(spinor_u(spec, base));
    let coeffs = vec![top, u, AlgebraElement::zero(), u.conj(), top.conj()];
    KillingField::new(2, coeffs)
}

/// A standard torus in the coordinate where its frequencies are imaginary,
/// together with its genus-zero seed at the origin.
#[derive(Debug, Clone)]
pub struct GenusZeroFixture {
    pub torus: StandardTorus,
    /// Rotation `z = e^{iθ}w` of the coordinate.
    pub theta: f64,
    pub spec: TorusSpec,
    pub seed: KillingField,
}

impl GenusZeroFixture {
    /// The original closed form in the rotated coordinate.
    pub fn closed_form(&self, w: C) -> crate::algebra::Vec4 {
        self.torus.closed_form(C::from_polar(1.0, self.theta) * w)
    }
}

pub fn standard_torus_fixture(omega1: f64, omega2: f64) -> Result<GenusZeroFixture, FiniteTypeError> {
    let torus = standard_torus(omega1, omega2).map_err(|e| FiniteTypeError::NotGenusZero(e.to_string()))?;
    let gamma = torus.spec.beta0().conj() / 2.0;
    let theta = gamma.arg() + FRAC_PI_2;
    let spec = torus.spec.rotate_domain(theta)?;
    let seed = genus_zero_seed(&spec, C::new(0.0, 0.0))?;
    Ok(GenusZeroFixture { torus, theta, spec, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finitetype::{lax_integrate, lax_project, FlowForm, LaxReport, DEFAULT_STEP_DIVISIONS};
    use crate::verify::{check_flatness, Domain, SpinorForm, ExtendedForm};

    #[test]
    fn unrotated_square_torus_is_rejected() {
        let st = standard_torus(1.0, 1.0).unwrap();
        assert!(matches!(genus_zero_seed(&st.spec, C::new(0.0, 0.0)), Err(FiniteTypeError::NotGenusZero(_))));
    }

    #[test]
    fn flow_reproduces_spinor_form() {
        let fx = standard_torus_fixture(1.0, 1.0).unwrap();
        let domain = Domain::fundamental(fx.spec.lattice());
        let h = domain.diameter() / DEFAULT_STEP_DIVISIONS as f64;
        let form = SpinorForm { spec: &fx.spec };
        for z in [C::new(0.3, 0.1), C::new(-0.4, 0.8), C::new(0.9, -0.2)] {
            let xi = lax_integrate(&fx.seed, C::new(0.0, 0.0), z, h).unwrap();
            let p = lax_project(&xi);
            for l in [C::new(1.0, 0.0), C::from_polar(1.0, 0.9)] {
                assert!((p.a(l) - form.a(z, l)).norm() < 1e-10);
                assert!((p.b(l) - form.b(z, l)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn flow_invariants() {
        let fx = standard_torus_fixture(1.0, 1.0).unwrap();
        let domain = Domain::fundamental(fx.spec.lattice());
        let h = domain.diameter() / DEFAULT_STEP_DIVISIONS as f64;
        let r = LaxReport::run(&fx.seed, &domain, 8, h).unwrap();
        assert!(r.top_drift < 1e-12, "{r:?}");
        assert!(r.even_drift < 1e-10 && r.spectral_drift < 1e-8, "{r:?}");
        assert!(r.reality < 1e-12 && r.twist < 1e-12 && r.mod4 < 1e-12, "{r:?}");
        assert!(r.min_regular > 0.1);
        // The degree-six field (λ⁴ + 2 + λ⁻⁴)ξ has the same projection.
        let six = fx.seed.times_mu_polynomial(&[2.0, 1.0]).unwrap();
        assert_eq!(six.degree(), 6);
        let z = C::new(0.4, 0.7);
        let a = lax_integrate(&six, C::new(0.0, 0.0), z, h).unwrap();
        let b = lax_integrate(&fx.seed, C::new(0.0, 0.0), z, h).unwrap().times_mu_polynomial(&[2.0, 1.0]).unwrap();
        assert!(a.max_diff(&b) < 1e-10);
        let r6 = LaxReport::run(&six, &domain, 4, h).unwrap();
        assert!(r6.top_drift < 1e-12 && r6.even_drift < 1e-10 && r6.mod4 < 1e-12, "{r6:?}");
    }

    #[test]
    fn projected_form_is_flat() {
        let fx = standard_torus_fixture(1.0, 1.0).unwrap();
        let domain = Domain::fundamental(fx.spec.lattice());
        let form = FlowForm::new(fx.seed.clone(), C::new(0.0, 0.0), 256);
        for l in [C::new(1.0, 0.0), C::from_polar(1.0, 1.1)] {
            let k = check_flatness(&form, l, &domain, 3);
            assert!(k < 1e-6, "{k}");
        }
    }
}
