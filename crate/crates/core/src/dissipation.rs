//! Photon loss acting on a prepared cat.
//!
//! At zero temperature the two coherent components shrink to βu and β′u
//! with u = exp(−ωτ/2Q), and the cross term picks up the coefficient
//!
//! ```text
//! C = e^{iθ} exp{|α|²(1 − e^{−iφ})(u² − 1)}
//! ```
//!
//! so that ρ± = [|βu⟩⟨βu| + |β′u⟩⟨β′u| ± C|β′u⟩⟨βu| ± C*|βu⟩⟨β′u|]/N±².
//! C⟨βu|β′u⟩ does not depend on u, which keeps the trace at one.

use crate::error::{invalid, Error, Result};
use crate::fock::{coherent_state, FockOperator};
use crate::params::SystemParams;
use crate::protocol::CatSpec;
use crate::C64;

/// Eigenvalues below this fail the positivity check.
pub const POSITIVITY_FLOOR: f64 = -1e-8;

/// u = exp(−ωτ/2Q).
pub fn damping_factor(tau: f64, params: &SystemParams) -> Result<f64> {
    let q = params.quality.ok_or_else(|| invalid("q_factor", "required for damping"))?;
    damping_factor_for(tau, params.omega, q)
}

pub fn damping_factor_for(tau: f64, omega: f64, q: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(invalid("tau", format!("must be nonnegative, got {tau}")));
    }
    if !(q > 0.0) {
        return Err(invalid("q_factor", format!("must be positive, got {q}")));
    }
    Ok((-omega * tau / (2.0 * q)).exp())
}

/// Cross-term coefficient C at damping factor u.
pub fn cross_coefficient(spec: &CatSpec, u: f64) -> C64 {
    let one_minus = C64::new(1.0, 0.0) - C64::from_polar(1.0, -spec.phi);
    let exponent = one_minus * (spec.alpha_abs2 * (u * u - 1.0));
    C64::from_polar(1.0, spec.theta) * exponent.exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedCat {
    /// `spec.u` holds the damping factor; `spec.beta` stays undamped.
    pub spec: CatSpec,
    pub cross_coeff: C64,
}

impl DampedCat {
    pub fn u(&self) -> f64 {
        self.spec.u
    }

    pub fn beta_u(&self) -> C64 {
        self.spec.beta * self.spec.u
    }

    pub fn beta_prime_u(&self) -> C64 {
        self.spec.beta_prime() * self.spec.u
    }

    /// C⟨βu|β′u⟩, the cross-term contribution to the trace (before the sign).
    pub fn cross_trace(&self) -> C64 {
        let a = self.beta_u();
        let b = self.beta_prime_u();
        let overlap = (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp();
        self.cross_coeff * overlap
    }

    /// Analytic trace; equals one up to rounding.
    pub fn trace(&self) -> f64 {
        (2.0 + 2.0 * self.spec.sign.value() * self.cross_trace().re) / self.spec.norm_sq()
    }
}

pub fn damped_cat_at(spec: &CatSpec, u: f64) -> Result<DampedCat> {
    if spec.u != 1.0 {
        return Err(invalid("u", "input cat must be pure"));
    }
    if !(0.0..=1.0).contains(&u) {
        return Err(invalid("u", format!("damping factor must lie in [0, 1], got {u}")));
    }
    Ok(DampedCat { spec: CatSpec { u, ..*spec }, cross_coeff: cross_coefficient(spec, u) })
}

/// Damps a pure cat for a time τ.
pub fn damped_cat(spec: &CatSpec, tau: f64, params: &SystemParams) -> Result<DampedCat> {
    damped_cat_at(spec, damping_factor(tau, params)?)
}

/// Density matrix of the damped cat, checked for positivity.
pub fn realize_density(dc: &DampedCat, nmax: usize) -> Result<FockOperator> {
    let a = coherent_state(dc.beta_u(), nmax)?;
    let b = coherent_state(dc.beta_prime_u(), nmax)?;
    let s = dc.spec.sign.value();
    let n2 = dc.spec.norm_sq();
    let va = a.amplitudes();
    let vb = b.amplitudes();
    let c = dc.cross_coeff * s;
    let m = (va * va.adjoint() + vb * vb.adjoint() + vb * va.adjoint() * c + va * vb.adjoint() * c.conj())
        / C64::new(n2, 0.0);
    let rho = FockOperator::from_matrix(m);
    let min = rho.hermitian_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    if min < POSITIVITY_FLOOR {
        return Err(Error::NotPositive(min));
    }
    Ok(rho)
}

/// The cat with its cross terms removed, (|βu⟩⟨βu| + |β′u⟩⟨β′u|)/N±².
///
/// Keeps the 1/N±² weight of the cat, so the trace is 2/N±² rather than one.
pub fn realize_mixture(dc: &DampedCat, nmax: usize) -> Result<FockOperator> {
    let a = coherent_state(dc.beta_u(), nmax)?;
    let b = coherent_state(dc.beta_prime_u(), nmax)?;
    let va = a.amplitudes();
    let vb = b.amplitudes();
    let m = (va * va.adjoint() + vb * vb.adjoint()) / C64::new(dc.spec.norm_sq(), 0.0);
    Ok(FockOperator::from_matrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ghz_to_rad_s;
    use crate::protocol::{cat_to_fock, CatSign};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cat(abs2: f64, phi: f64, theta: f64, sign: CatSign) -> CatSpec {
        CatSpec::new(C64::from_polar(abs2.sqrt(), 0.2), phi, theta, sign).unwrap()
    }

    #[test]
    fn damping_factor_examples() {
        let p = SystemParams::reference_device();
        assert_eq!(damping_factor(0.0, &p).unwrap(), 1.0);
        let u = damping_factor_for(0.1e-6, ghz_to_rad_s(40.0), 5e5).unwrap();
        assert!((u - 0.97518).abs() < 1e-5, "{u}");
        assert!((u.ln() + 0.025132741228718346).abs() < 1e-15);
        assert!(damping_factor_for(1.0, ghz_to_rad_s(40.0), 5e5).unwrap() < 1e-300);
        assert!(damping_factor(-1.0, &p).is_err());
        assert!(damping_factor(1e-7, &p.lossless()).is_err());
    }

    #[test]
    fn pure_limit() {
        let spec = cat(4.0, PI, 0.996, CatSign::Plus);
        let dc = damped_cat_at(&spec, 1.0).unwrap();
        assert!((dc.cross_coeff - C64::from_polar(1.0, 0.996)).norm() < 1e-15);
        let rho = realize_density(&dc, 40).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-8);
        let psi = cat_to_fock(&spec, 40).unwrap();
        assert!(rho.sub(&psi.projector()).max_abs() < 1e-12);
    }

    #[test]
    fn vacuum_limit() {
        let spec = cat(4.0, 2.0, 0.3, CatSign::Minus);
        let dc = damped_cat_at(&spec, 0.0).unwrap();
        let gamma = spec.overlap_exponent();
        assert!((dc.cross_coeff.norm() - (-gamma).exp()).abs() < 1e-15);
        let rho = realize_density(&dc, 10).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!((rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fringe_reduction_at_reference_damping() {
        let u = damping_factor_for(0.1e-6, ghz_to_rad_s(40.0), 5e5).unwrap();
        let spec = CatSpec::new(C64::new(4.0, 0.0), PI, 0.996, CatSign::Plus).unwrap();
        let c = cross_coefficient(&spec, u);
        assert!((c.norm() - (-32.0 * (1.0 - u * u)).exp()).abs() < 1e-14);
        assert!((c.norm() - 0.208).abs() < 1e-3);
    }

    #[test]
    fn realized_states_are_physical() {
        for (abs2, nmax) in [(1.0, 30), (4.0, 40), (16.0, 60)] {
            for u in [1.0, 0.975, 0.7, 0.3] {
                for sign in [CatSign::Plus, CatSign::Minus] {
                    let dc = damped_cat_at(&cat(abs2, PI, 0.996, sign), u).unwrap();
                    let rho = realize_density(&dc, nmax).unwrap();
                    assert!((rho.trace().re - 1.0).abs() < 1e-10);
                    assert!(rho.is_hermitian(1e-12));
                    let min = rho.hermitian_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
                    assert!(min >= -1e-10, "{min}");
                }
            }
        }
    }

    #[test]
    fn mixture_trace_is_two_over_norm() {
        let spec = cat(2.0, 1.3, 0.5, CatSign::Minus);
        let dc = damped_cat_at(&spec, 0.8).unwrap();
        let rho = realize_mixture(&dc, 40).unwrap();
        assert!((rho.trace().re - 2.0 / spec.norm_sq()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cross_trace_independent_of_u(abs2 in 0.1..20.0f64, phi in 0.1..6.2f64, theta in 0.0..6.2f64, u in 0.0..1.0f64) {
            let spec = CatSpec { beta: C64::new(abs2.sqrt(), 0.0), phi, theta, sign: CatSign::Plus, u: 1.0, alpha_abs2: abs2 };
            let at_u = damped_cat_at(&spec, u).unwrap().cross_trace();
            let at_one = damped_cat_at(&spec, 1.0).unwrap().cross_trace();
            prop_assert!((at_u - at_one).norm() < 1e-12);
        }

        #[test]
        fn fringe_magnitude_monotone(abs2 in 0.1..20.0f64, phi in 0.0..6.2f64, u1 in 0.0..1.0f64, u2 in 0.0..1.0f64) {
            let spec = CatSpec { beta: C64::new(abs2.sqrt(), 0.0), phi, theta: 0.0, sign: CatSign::Plus, u: 1.0, alpha_abs2: abs2 };
            let (hi, lo) = if u1 > u2 { (u1, u2) } else { (u2, u1) };
            // Smaller u means a later time.
            prop_assert!(cross_coefficient(&spec, lo).norm() <= cross_coefficient(&spec, hi).norm() * (1.0 + 1e-14));
            let expected = -abs2 * (1.0 - phi.cos()) * (1.0 - hi * hi);
            prop_assert!((cross_coefficient(&spec, hi).norm().ln() - expected).abs() < 1e-10);
        }
    }
}
