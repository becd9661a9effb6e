//! Invariant suite run by `cavityq validate`.
//!
//! Each check recomputes an identity the model must satisfy and compares it
//! with a fixed tolerance. A named perturbation corrupts one intermediate
//! quantity so the suite can be shown to fail when the physics is broken.

use std::f64::consts::PI;
use std::fmt;

use crate::dissipation::{cross_coefficient, damped_cat_at, damping_factor_for, realize_density, DampedCat};
use crate::error::{invalid, Result};
use crate::fock::{auto_nmax, expm, trace_distance, FockOperator};
use crate::hamiltonians::{build, dispersive_propagator, HamiltonianKind, HamiltonianSpec};
use crate::oracle::{lindblad_evolve, LindbladProblem};
use crate::params::{ghz_to_rad_s, SystemParams};
use crate::protocol::{cat_to_fock, prepare, CatSign, CatSpec, Outcome, ProtocolOptions};
use crate::readout::{closed_form_at, probability_numeric, ReadoutConfig};
use crate::wigner::{cat_wigner, GridSpec, Normalization};
use crate::C64;

/// Names accepted by [`run_suite`] as perturbations.
pub const PERTURBATIONS: [&str; 5] = ["cross_coeff", "damping", "wigner_scale", "propagator", "readout_phase"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Perturb {
    None,
    /// C scaled by 1.001.
    CrossCoeff,
    /// Fringe coefficient taken at 1.05u in the positivity check.
    Damping,
    /// Wigner values scaled by 1.001.
    WignerScale,
    /// Dispersive propagator scaled by 1 + 1e-6.
    Propagator,
    /// e^{iΘ} phase in the numeric readout off by 1e-3.
    ReadoutPhase,
}

impl Perturb {
    fn parse(name: Option<&str>) -> Result<Self> {
        Ok(match name {
            None => Perturb::None,
            Some("cross_coeff") => Perturb::CrossCoeff,
            Some("damping") => Perturb::Damping,
            Some("wigner_scale") => Perturb::WignerScale,
            Some("propagator") => Perturb::Propagator,
            Some("readout_phase") => Perturb::ReadoutPhase,
            Some(other) => {
                return Err(invalid(
                    "perturb",
                    format!("unknown perturbation {other:?}; known: {}", PERTURBATIONS.join(", ")),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub description: &'static str,
    /// Worst observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<24} {:.3e} (tol {:.1e})  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            self.description
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub perturbation: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &'static str, description: &'static str, value: f64, tolerance: f64) -> Check {
    Check { name, description, value, tolerance, passed: value.is_finite() && value <= tolerance }
}

fn reference_params() -> SystemParams {
    SystemParams::reference_device()
}

fn cats() -> Vec<CatSpec> {
    let mut v = Vec::new();
    for abs2 in [1.0, 4.0, 16.0] {
        for sign in [CatSign::Plus, CatSign::Minus] {
            v.push(CatSpec::new(C64::from_polar(f64::sqrt(abs2), 0.4), PI, 0.996, sign).unwrap());
        }
    }
    v.push(CatSpec::new(C64::new(1.2, -0.3), 1.7, 2.2, CatSign::Minus).unwrap());
    v
}

fn damped(spec: &CatSpec, u: f64, p: Perturb) -> Result<DampedCat> {
    let mut dc = damped_cat_at(spec, u)?;
    if p == Perturb::CrossCoeff {
        dc.cross_coeff *= 1.001;
    }
    Ok(dc)
}

fn trace_check(p: Perturb) -> Result<Check> {
    let mut worst = 0.0f64;
    for spec in cats() {
        for u in [1.0, 0.975, 0.5, 0.1] {
            let rho = raw_density(&damped(&spec, u, p)?, auto_nmax(spec.beta.norm()))?;
            worst = worst.max((rho.trace().re - 1.0).abs());
        }
    }
    Ok(check("trace", "damped cat density matrices have unit trace", worst, 1e-10))
}

fn positivity_check(p: Perturb) -> Result<Check> {
    let mut worst = 0.0f64;
    for spec in cats() {
        for u in [1.0, 0.975, 0.5] {
            let mut dc = damped(&spec, u, Perturb::None)?;
            if p == Perturb::Damping {
                // Fringe coefficient evaluated past u = 1, where |C| > 1.
                dc.cross_coeff = cross_coefficient(&spec, 1.05 * u);
            }
            let rho = FockOperator::from_matrix(raw_density(&dc, auto_nmax(spec.beta.norm()))?);
            let min = rho.hermitian_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
            worst = worst.max(-min).max(rho.hermiticity_error());
        }
    }
    Ok(check("positivity", "density matrices are Hermitian and positive semidefinite", worst, 1e-10))
}

/// Like `realize_density` but without the positivity guard, so the check can
/// report the value itself.
fn raw_density(dc: &DampedCat, nmax: usize) -> Result<nalgebra::DMatrix<C64>> {
    let a = crate::fock::coherent_state(dc.beta_u(), nmax)?;
    let b = crate::fock::coherent_state(dc.beta_prime_u(), nmax)?;
    let (va, vb) = (a.amplitudes(), b.amplitudes());
    let c = dc.cross_coeff * dc.spec.sign.value();
    Ok((va * va.adjoint() + vb * vb.adjoint() + vb * va.adjoint() * c + va * vb.adjoint() * c.conj())
        / C64::new(dc.spec.norm_sq(), 0.0))
}

fn outcome_sum_check() -> Result<Check> {
    let p = reference_params();
    let tau2 = crate::protocol::default_tau2(&p)?;
    let mut worst = 0.0f64;
    for abs2 in [0.25, 1.0, 4.0, 16.0] {
        let alpha = C64::from_polar(f64::sqrt(abs2), 0.3);
        let g = prepare(alpha, &p, tau2, Outcome::G, &ProtocolOptions::default())?;
        let e = prepare(alpha, &p, tau2, Outcome::E, &ProtocolOptions::default())?;
        worst = worst.max((g.probability + e.probability - 1.0).abs());
        worst = worst.max((g.spec.outcome_probability() + e.spec.outcome_probability() - 1.0).abs());
    }
    Ok(check("outcome_sum", "preparation outcome probabilities sum to one", worst, 1e-12))
}

fn readout_checks(p: Perturb) -> Result<[Check; 2]> {
    let params = reference_params();
    let mut sum = 0.0f64;
    let mut agree = 0.0f64;
    for spec in cats() {
        for u in [1.0, 0.975, 0.5] {
            for phi_prime in [PI / 4.0, PI / 2.0] {
                let big_theta = 2.1;
                let closed = closed_form_at(&spec, u, phi_prime, big_theta);
                let cfg = ReadoutConfig::new(&params, spec.sign, phi_prime / params.chi())?;
                let shift = if p == Perturb::ReadoutPhase { 1e-3 } else { 0.0 };
                let cfg = cfg.with_phase_override(Some(big_theta + shift));
                let rho = realize_density(&damped_cat_at(&spec, u)?, auto_nmax(spec.beta.norm()))?;
                let num = probability_numeric(&cfg, &params, &rho)?;
                sum = sum.max((closed.p_g + closed.p_e - 1.0).abs()).max((num.p_g + num.p_e - 1.0).abs());
                agree = agree.max((closed.p_g - num.p_g).abs());
            }
        }
    }
    Ok([
        check("readout_sum", "P_g + P_e = 1 for closed form and numeric trace", sum, 1e-12),
        check("readout_agreement", "closed-form readout equals the numeric trace", agree, 1e-8),
    ])
}

fn unitarity_check(p: Perturb) -> Result<Check> {
    let params = reference_params();
    let mut worst = 0.0f64;
    for t in [1e-9, 3.7e-7, 8.8e-7] {
        let mut u = dispersive_propagator(&params, t, 40)?.joint();
        if p == Perturb::Propagator {
            u = u.scaled(C64::new(1.0 + 1e-6, 0.0));
        }
        worst = worst.max(u.unitarity_error(0));
    }
    let slow = SystemParams::new(1.0e9, 2.0e9, 0.55, 1.0e8, C64::new(1.0e-3, 0.0))?;
    for kind in [HamiltonianKind::Linearized, HamiltonianKind::Free, HamiltonianKind::FullCosine] {
        let h = build(&HamiltonianSpec::new(kind, slow, true), 20)?;
        let u = expm(&h, 2.3e-8)?;
        worst = worst.max(u.unitarity_error(0));
    }
    Ok(check("unitarity", "propagators satisfy U†U = 1", worst, 1e-10))
}

fn wigner_check(p: Perturb) -> Result<Check> {
    let mut worst = 0.0f64;
    let grid = GridSpec::default();
    for sign in [CatSign::Plus, CatSign::Minus] {
        let spec = CatSpec::new(C64::new(4.0, 0.0), PI, 0.996, sign)?;
        for u in [1.0, 0.975] {
            let mut w = cat_wigner(&damped_cat_at(&spec, u)?, &grid, Normalization::UnitIntegral)?;
            if p == Perturb::WignerScale {
                w.values *= 1.001;
            }
            worst = worst.max((w.integral() - 1.0).abs());
        }
    }
    Ok(check("wigner_integral", "closed-form Wigner grids integrate to one", worst, 1e-4))
}

fn lindblad_check() -> Result<Check> {
    let params = reference_params();
    let spec = CatSpec::new(C64::new(2.0, 0.0), PI, 0.996, CatSign::Plus)?;
    let nmax = 30;
    let init = cat_to_fock(&spec, nmax)?.projector();
    let gamma = params.gamma().unwrap_or(params.omega / 5e5);
    let tau = 2e-7;
    let r = lindblad_evolve(&LindbladProblem {
        hamiltonian: None,
        frame_rate: 0.0,
        decay_rate: gamma,
        initial: init,
        t_final: tau,
        dt: None,
    })?;
    let u = damping_factor_for(tau, params.omega, params.omega / gamma)?;
    let closed = realize_density(&damped_cat_at(&spec, u)?, nmax)?;
    let dist = trace_distance(&r.rho, &closed);
    Ok(check(
        "lindblad_agreement",
        "master-equation decay matches the closed-form damped cat",
        dist.max(r.trace_drift),
        1e-3,
    ))
}

fn damping_check() -> Result<Check> {
    let u = damping_factor_for(0.1e-6, ghz_to_rad_s(40.0), 5e5)?;
    Ok(check("damping_reference", "u(0.1 us, Q = 5e5, 40 GHz) = 0.9752", (u - 0.9752).abs(), 1e-4))
}

/// Runs every check. `perturbation` names an entry of [`PERTURBATIONS`].
pub fn run_suite(perturbation: Option<&str>) -> Result<SuiteReport> {
    let p = Perturb::parse(perturbation)?;
    let mut checks = vec![trace_check(p)?, positivity_check(p)?, outcome_sum_check()?];
    checks.extend(readout_checks(p)?);
    checks.push(unitarity_check(p)?);
    checks.push(wigner_check(p)?);
    checks.push(lindblad_check()?);
    checks.push(damping_check()?);
    Ok(SuiteReport { checks, perturbation: perturbation.map(str::to_string) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suite_passes() {
        let r = run_suite(None).unwrap();
        for c in &r.checks {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn each_perturbation_fails_something() {
        for name in PERTURBATIONS {
            let r = run_suite(Some(name)).unwrap();
            assert!(!r.passed(), "{name} went unnoticed");
        }
    }

    #[test]
    fn unknown_perturbation_rejected() {
        assert!(run_suite(Some("nope")).is_err());
    }
}
