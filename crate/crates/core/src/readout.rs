//! Second measurement that turns the cat's coherence into a qubit probability.
//!
//! After the cat has decayed for τ, the qubit (left in |g⟩ for the "−" cat or
//! |e⟩ for the "+" cat) gets a π/2 pulse, interacts dispersively for τ₄, gets
//! a second π/2 pulse and is measured. With φ′ = χτ₄ and Θ = Ω₋τ₄,
//!
//! ```text
//! P_g = ½(Tr ρ ∓ X),  X = Re[e^{−iΘ} Tr(e^{2iφ′a†a} ρ)]
//! ```
//!
//! (− for the "−" cat). For the damped cat X has the three-term closed form
//! evaluated by [`closed_form_at`]; [`probability_numeric`] runs the same
//! sequence on a density matrix as the independent path.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use sha2::{Digest, Sha256};

use crate::dissipation::damping_factor;
use crate::error::{invalid, Result};
use crate::fock::{number_phase_propagator, FockOperator};
use crate::hamiltonians::{kron_qubit, pi_half_rotation, PROJ_E, PROJ_G, QUBIT_IDENTITY};
use crate::params::SystemParams;
use crate::phase;
use crate::protocol::{CatSign, CatSpec};
use crate::C64;

/// |sin φ′| below this means the probability carries no Q information.
pub const NO_ENCODING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutConfig {
    pub prepared_sign: CatSign,
    /// Re-interaction time τ₄.
    pub tau4: f64,
    /// χτ₄ unless set by hand.
    pub phi_prime: f64,
    /// Replaces Ω₋τ₄ mod 2π.
    pub omega_minus_tau4_mod: Option<f64>,
    /// π/2 pulse duration added to every dissipation interval.
    pub pulse_time: f64,
}

impl ReadoutConfig {
    pub fn new(params: &SystemParams, prepared_sign: CatSign, tau4: f64) -> Result<Self> {
        params.require_dispersive()?;
        if !(tau4 >= 0.0) {
            return Err(invalid("tau4", format!("must be nonnegative, got {tau4}")));
        }
        Ok(Self {
            prepared_sign,
            tau4,
            phi_prime: params.chi() * tau4,
            omega_minus_tau4_mod: None,
            pulse_time: params.tau1(),
        })
    }

    /// τ₄ = (π/2)Δ/|g|², i.e. φ′ = π/2.
    pub fn standard(params: &SystemParams, prepared_sign: CatSign) -> Result<Self> {
        params.require_dispersive()?;
        Self::new(params, prepared_sign, std::f64::consts::FRAC_PI_2 / params.chi())
    }

    pub fn with_phase_override(mut self, omega_minus_tau4_mod: Option<f64>) -> Self {
        self.omega_minus_tau4_mod = omega_minus_tau4_mod;
        self
    }

    /// Ω₋τ₄ reduced to [0, 2π).
    pub fn omega_minus_tau4(&self, params: &SystemParams) -> f64 {
        match self.omega_minus_tau4_mod {
            Some(v) => phase::reduce(v),
            None => phase::reduce_product(params.qubit_freq_minus(), self.tau4),
        }
    }

    pub fn encodes_q(&self) -> bool {
        self.phi_prime.sin().abs() > NO_ENCODING_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities {
    pub p_g: f64,
    pub p_e: f64,
}

/// The three terms of X·N±², before the cat sign is applied to the last two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutTerms {
    pub diagonal: f64,
    pub minus: f64,
    pub plus: f64,
}

/// With A = |αu|², Γ = 2|α|²sin²(φ/2), G± = 2A sin φ′ sin(φ ± φ′) and
/// θ± = 2A cos(φ ± φ′) sin φ′:
///
/// ```text
/// diagonal = 2 e^{−2A sin²φ′} cos(Θ − A sin 2φ′)
/// minus    = e^{G₋−Γ} cos(θ₋ − |α|² sin φ + θ − Θ)
/// plus     = e^{−G₊−Γ} cos(θ₊ + |α|² sin φ − θ − Θ)
/// ```
pub fn readout_terms(cat: &CatSpec, u: f64, phi_prime: f64, big_theta: f64) -> ReadoutTerms {
    let a2 = cat.alpha_abs2;
    let a = a2 * u * u;
    let phi = cat.phi;
    let gamma = cat.overlap_exponent();
    let (sp, cp) = phi_prime.sin_cos();
    let g_minus = 2.0 * a * sp * (phi - phi_prime).sin();
    let g_plus = 2.0 * a * sp * (phi + phi_prime).sin();
    let t_minus = 2.0 * a * (phi - phi_prime).cos() * sp;
    let t_plus = 2.0 * a * (phi + phi_prime).cos() * sp;
    let a_sin_phi = a2 * phi.sin();
    ReadoutTerms {
        diagonal: 2.0 * (-2.0 * a * sp * sp).exp() * (big_theta - 2.0 * a * sp * cp).cos(),
        minus: (g_minus - gamma).exp() * (t_minus - a_sin_phi + cat.theta - big_theta).cos(),
        plus: (-g_plus - gamma).exp() * (t_plus + a_sin_phi - cat.theta - big_theta).cos(),
    }
}

fn from_x(sign: CatSign, trace: f64, x: f64) -> Probabilities {
    let s = sign.value();
    Probabilities { p_g: 0.5 * (trace + s * x), p_e: 0.5 * (trace - s * x) }
}

/// Closed-form probabilities for the cat damped to u.
pub fn closed_form_at(cat: &CatSpec, u: f64, phi_prime: f64, big_theta: f64) -> Probabilities {
    let t = readout_terms(cat, u, phi_prime, big_theta);
    let s = cat.sign.value();
    let x = (t.diagonal + s * (t.minus + t.plus)) / cat.norm_sq();
    from_x(cat.sign, 1.0, x)
}

/// Cross terms dropped: P = ½(2/N± ² ± diagonal/N±²). The two values sum to
/// 2/N±², which is one up to the cat overlap.
pub fn classical_mixture_probability(cat: &CatSpec, u: f64, phi_prime: f64, big_theta: f64) -> Probabilities {
    let n2 = cat.norm_sq();
    let t = readout_terms(cat, u, phi_prime, big_theta);
    from_x(cat.sign, 2.0 / n2, t.diagonal / n2)
}

/// Closed form at total dissipation interval τ (pulse time included by the caller).
pub fn probability_closed_form(
    cfg: &ReadoutConfig,
    params: &SystemParams,
    cat: &CatSpec,
    tau: f64,
) -> Result<Probabilities> {
    if cat.sign != cfg.prepared_sign {
        return Err(invalid("prepared_sign", "cat sign differs from the readout configuration"));
    }
    if !cfg.encodes_q() {
        log::warn!("sin(phi') = {:.3e}: the readout probability does not depend on Q", cfg.phi_prime.sin());
    }
    let u = damping_factor(tau, params)?;
    Ok(closed_form_at(cat, u, cfg.phi_prime, cfg.omega_minus_tau4(params)))
}

/// Runs pulse, dispersive step, pulse and projection on ρ numerically.
///
/// ρ need not have unit trace; the two probabilities then sum to Tr ρ.
pub fn probability_numeric(cfg: &ReadoutConfig, params: &SystemParams, rho: &FockOperator) -> Result<Probabilities> {
    params.require_dispersive()?;
    let nmax = rho.dim() - 1;
    let u1 = number_phase_propagator(params.omega_minus(), cfg.tau4, nmax);
    // U₂ = U₁ e^{−2iφ′n}: keeps the small relative phase out of the rounded rate.
    let u2 = u1.mul(&number_phase_propagator(2.0 * cfg.phi_prime, 1.0, nmax));
    let theta = cfg.omega_minus_tau4(params);
    let u2 = u2.scaled(C64::from_polar(1.0, theta));
    Ok(numeric_sequence(cfg.prepared_sign, &u1, &u2, rho))
}

/// P_g, P_e for initial qubit |g⟩ ("−" cat) or |e⟩ ("+" cat), with the
/// branch propagators `ug` and `ue` already holding their relative phase.
pub fn numeric_sequence(sign: CatSign, ug: &FockOperator, ue: &FockOperator, rho: &FockOperator) -> Probabilities {
    let d = rho.dim();
    let q0 = match sign {
        CatSign::Minus => PROJ_G,
        CatSign::Plus => PROJ_E,
    };
    let joint = kron_qubit(&q0, rho);
    let id = FockOperator::identity(d);
    let r = kron_qubit(&pi_half_rotation(), &id);
    let u = kron_qubit(&PROJ_G, ug).add(&kron_qubit(&PROJ_E, ue));
    let w = r.mul(&u).mul(&r);
    let out = joint.conjugate_by(&w);
    let p_g = kron_qubit(&PROJ_G, &id).mul(&out).trace().re;
    let p_e = kron_qubit(&PROJ_E, &id).mul(&out).trace().re;
    debug_assert!((p_g + p_e - kron_qubit(&QUBIT_IDENTITY, &id).mul(&out).trace().re).abs() < 1e-12);
    Probabilities { p_g, p_e }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoise {
    pub shots: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutSample {
    /// Total dissipation interval τ₃′ + T.
    pub tau: f64,
    pub p_g: f64,
    pub p_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutCurve {
    pub samples: Vec<ReadoutSample>,
    pub config: ReadoutConfig,
    /// SHA-256 of the parameter set, hex.
    pub params_digest: String,
}

pub fn params_digest(params: &SystemParams) -> String {
    let digest = Sha256::digest(params.canonical_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Closed-form curve over waiting times τ₃′; the pulse time is added to each.
pub fn curve(
    cfg: &ReadoutConfig,
    params: &SystemParams,
    cat: &CatSpec,
    waits: &[f64],
    noise: Option<ShotNoise>,
) -> Result<ReadoutCurve> {
    if waits.iter().any(|t| !(*t >= 0.0)) {
        return Err(invalid("taus", "waiting times must be nonnegative"));
    }
    if waits.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("taus", "waiting times must be ascending"));
    }
    let mut rng = noise.map(|n| ChaCha8Rng::seed_from_u64(n.seed));
    let mut samples = Vec::with_capacity(waits.len());
    for &wait in waits {
        let tau = wait + cfg.pulse_time;
        let p = probability_closed_form(cfg, params, cat, tau)?;
        let (p_g, p_e) = match (noise, rng.as_mut()) {
            (Some(n), Some(r)) => {
                let k = sample_binomial(n.shots, p.p_g, r)?;
                let p_g = k as f64 / n.shots as f64;
                (p_g, 1.0 - p_g)
            }
            _ => (p.p_g, p.p_e),
        };
        samples.push(ReadoutSample { tau, p_g, p_e });
    }
    Ok(ReadoutCurve { samples, config: *cfg, params_digest: params_digest(params) })
}

fn sample_binomial(shots: u64, p: f64, rng: &mut ChaCha8Rng) -> Result<u64> {
    if shots == 0 {
        return Err(invalid("shots", "must be positive"));
    }
    let b = Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| invalid("p_g", e.to_string()))?;
    Ok(b.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissipation::{damped_cat_at, realize_density, realize_mixture};
    use crate::fock::auto_nmax;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn params() -> SystemParams {
        SystemParams::reference_device()
    }

    fn cat(abs2: f64, phi: f64, theta: f64, sign: CatSign) -> CatSpec {
        CatSpec::new(C64::from_polar(abs2.sqrt(), 0.7), phi, theta, sign).unwrap()
    }

    fn cfg_for(sign: CatSign, phi_prime: f64, big_theta: f64) -> ReadoutConfig {
        let p = params();
        ReadoutConfig::new(&p, sign, phi_prime / p.chi()).unwrap().with_phase_override(Some(big_theta))
    }

    #[test]
    fn closed_form_matches_numeric_trace() {
        let p = params();
        let mut worst = 0.0f64;
        for abs2 in [1.0, 4.0, 16.0] {
            for phi in [FRAC_PI_2, PI] {
                for phi_prime in [FRAC_PI_4, FRAC_PI_2] {
                    for u in [1.0, 0.975, 0.5] {
                        for sign in [CatSign::Plus, CatSign::Minus] {
                            let c = cat(abs2, phi, 0.996, sign);
                            let dc = damped_cat_at(&c, u).unwrap();
                            let rho = realize_density(&dc, auto_nmax(abs2.sqrt())).unwrap();
                            let cfg = cfg_for(sign, phi_prime, 2.1);
                            let num = probability_numeric(&cfg, &p, &rho).unwrap();
                            let closed = closed_form_at(&c, u, phi_prime, 2.1);
                            worst = worst.max((num.p_g - closed.p_g).abs());
                            assert!((num.p_g + num.p_e - 1.0).abs() < 1e-10);
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn zero_interaction_is_deterministic() {
        let p = params();
        for sign in [CatSign::Plus, CatSign::Minus] {
            let c = cat(4.0, PI, 0.3, sign);
            let rho = realize_density(&damped_cat_at(&c, 0.9).unwrap(), 40).unwrap();
            let cfg = ReadoutConfig::new(&p, sign, 0.0).unwrap();
            let num = probability_numeric(&cfg, &p, &rho).unwrap();
            // R² = iσ_x flips the qubit.
            let (expect_g, expect_e) = match sign {
                CatSign::Minus => (0.0, 1.0),
                CatSign::Plus => (1.0, 0.0),
            };
            assert!((num.p_g - expect_g).abs() < 1e-12 && (num.p_e - expect_e).abs() < 1e-12);
            let closed = closed_form_at(&c, 0.9, 0.0, 0.0);
            assert!((closed.p_g - expect_g).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_matches_numeric() {
        let p = params();
        for u in [1.0, 0.7] {
            let c = cat(4.0, PI, 0.996, CatSign::Minus);
            let dc = damped_cat_at(&c, u).unwrap();
            let rho = realize_mixture(&dc, 40).unwrap();
            let cfg = cfg_for(CatSign::Minus, FRAC_PI_2, 0.996);
            let num = probability_numeric(&cfg, &p, &rho).unwrap();
            let closed = classical_mixture_probability(&c, u, FRAC_PI_2, 0.996);
            assert!((num.p_g - closed.p_g).abs() < 1e-10);
            assert!((num.p_e - closed.p_e).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_tends_to_half_for_large_amplitude() {
        let c = cat(100.0, PI, 0.996, CatSign::Minus);
        for u in [1.0, 0.9, 0.78] {
            let m = classical_mixture_probability(&c, u, FRAC_PI_2, 0.996);
            assert!((m.p_g - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn fig2_closed_form_reduces_to_two_exponentials() {
        let abs2 = 16.0;
        let theta = 0.996;
        let c = CatSpec::new(C64::new(4.0, 0.0), PI, theta, CatSign::Minus).unwrap();
        for u in [1.0, 0.9, 0.6] {
            let got = closed_form_at(&c, u, FRAC_PI_2, theta).p_g;
            let expect = 0.5
                - theta.cos() * ((-2.0 * abs2 * u * u).exp() - theta.cos() * (-2.0 * abs2 * (1.0 - u * u)).exp())
                    / c.norm_sq();
            assert!((got - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn no_encoding_at_phi_prime_pi() {
        let c = cat(16.0, PI, 0.996, CatSign::Minus);
        let h = 1e-4;
        for u in [0.9, 0.7, 0.4] {
            let d = (closed_form_at(&c, u + h, PI, 1.3).p_g - closed_form_at(&c, u - h, PI, 1.3).p_g) / (2.0 * h);
            assert!(d.abs() < 1e-10, "{d}");
        }
        assert!(!cfg_for(CatSign::Minus, PI, 0.0).encodes_q());
    }

    #[test]
    fn curve_determinism_and_noise() {
        let p = params();
        let c = cat(16.0, PI, 0.996, CatSign::Minus);
        let cfg = ReadoutConfig::standard(&p, CatSign::Minus).unwrap();
        let waits: Vec<f64> = (0..20).map(|i| i as f64 * 5e-8).collect();
        let a = curve(&cfg, &p, &c, &waits, None).unwrap();
        let b = curve(&cfg, &p, &c, &waits, None).unwrap();
        assert_eq!(a, b);
        for s in &a.samples {
            assert!((s.p_g + s.p_e - 1.0).abs() < 1e-12);
        }
        let noise = Some(ShotNoise { shots: 10_000, seed: 7 });
        let n1 = curve(&cfg, &p, &c, &waits, noise).unwrap();
        let n2 = curve(&cfg, &p, &c, &waits, noise).unwrap();
        assert_eq!(n1, n2);
        for (s, t) in n1.samples.iter().zip(&a.samples) {
            assert!((s.p_g - t.p_g).abs() < 0.03);
        }
        assert!((a.samples[0].tau - p.tau1()).abs() < 1e-25);
    }

    #[test]
    fn curve_rejects_bad_waits() {
        let p = params();
        let c = cat(4.0, PI, 0.996, CatSign::Minus);
        let cfg = ReadoutConfig::standard(&p, CatSign::Minus).unwrap();
        assert!(curve(&cfg, &p, &c, &[1e-7, 0.0], None).is_err());
        assert!(curve(&cfg, &p, &c, &[-1e-7], None).is_err());
        let plus = ReadoutConfig::standard(&p, CatSign::Plus).unwrap();
        assert!(curve(&plus, &p, &c, &[0.0], None).is_err());
    }

    #[test]
    fn standard_tau4_gives_quarter_turn() {
        let p = params();
        let cfg = ReadoutConfig::standard(&p, CatSign::Minus).unwrap();
        assert!((cfg.phi_prime - FRAC_PI_2).abs() < 1e-15);
    }
}
