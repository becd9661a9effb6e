//! Cat-state preparation: π/2 pulse, dispersive interaction, π/2 pulse and
//! a charge measurement that selects the cat parity.
//!
//! Every step returns the numeric two-branch state together with the
//! analytic description, so the two can be compared directly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, Error, Result};
use crate::fock::{auto_nmax, coherent_state, FockState, QubitFieldState};
use crate::hamiltonians::{dispersive_propagator, pi_half_rotation, product_state};
use crate::params::SystemParams;
use crate::phase;
use crate::C64;

/// Branch probabilities below this are treated as unreachable.
pub const MIN_BRANCH_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatSign {
    Plus,
    Minus,
}

impl CatSign {
    pub fn value(self) -> f64 {
        match self {
            CatSign::Plus => 1.0,
            CatSign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            CatSign::Plus => '+',
            CatSign::Minus => '-',
        }
    }
}

/// Result of the charge measurement after the second pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    G,
    E,
}

impl Outcome {
    /// |e⟩ leaves the "+" cat, |g⟩ the "−" cat.
    pub fn sign(self) -> CatSign {
        match self {
            Outcome::E => CatSign::Plus,
            Outcome::G => CatSign::Minus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::G => 'g',
            Outcome::E => 'e',
        }
    }
}

impl std::str::FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "g" | "G" => Ok(Outcome::G),
            "e" | "E" => Ok(Outcome::E),
            _ => Err(invalid("outcome", format!("expected g or e, got {s:?}"))),
        }
    }
}

/// (|β⟩ ± e^{iθ}|βe^{−iφ}⟩)/N±, optionally damped to amplitudes βu, β′u.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatSpec {
    pub beta: C64,
    pub phi: f64,
    pub theta: f64,
    pub sign: CatSign,
    /// 1 for the pure cat.
    pub u: f64,
    pub alpha_abs2: f64,
}

impl CatSpec {
    /// Pure cat. Fails if N±² is too small for the state to exist.
    pub fn new(beta: C64, phi: f64, theta: f64, sign: CatSign) -> Result<Self> {
        let spec = Self { beta, phi, theta, sign, u: 1.0, alpha_abs2: beta.norm_sqr() };
        let n2 = spec.norm_sq();
        if n2 / 4.0 < MIN_BRANCH_PROBABILITY {
            return Err(Error::DegenerateBranch { outcome: spec.outcome().symbol(), probability: n2 / 4.0 });
        }
        Ok(spec)
    }

    pub fn outcome(&self) -> Outcome {
        match self.sign {
            CatSign::Plus => Outcome::E,
            CatSign::Minus => Outcome::G,
        }
    }

    pub fn with_sign(&self, sign: CatSign) -> Result<Self> {
        Self::new(self.beta, self.phi, self.theta, sign)
    }

    pub fn beta_prime(&self) -> C64 {
        self.beta * C64::from_polar(1.0, -self.phi)
    }

    /// θ′ = |α|² sin φ − θ.
    pub fn theta_prime(&self) -> f64 {
        self.alpha_abs2 * self.phi.sin() - self.theta
    }

    /// Γ = 2|α|² sin²(φ/2) = −ln|⟨β|β′⟩|.
    pub fn overlap_exponent(&self) -> f64 {
        2.0 * self.alpha_abs2 * (0.5 * self.phi).sin().powi(2)
    }

    /// N±² = 2 ± 2 cos θ′ e^{−Γ}.
    pub fn norm_sq(&self) -> f64 {
        2.0 + 2.0 * self.sign.value() * self.theta_prime().cos() * (-self.overlap_exponent()).exp()
    }

    /// Born probability N±²/4 of the outcome that heralds this cat.
    pub fn outcome_probability(&self) -> f64 {
        0.25 * self.norm_sq()
    }

    /// ⟨a†a⟩ of the pure cat.
    pub fn mean_photon_number(&self) -> f64 {
        let a2 = self.alpha_abs2;
        let overlap = C64::from_polar((-self.overlap_exponent()).exp(), -a2 * self.phi.sin());
        let cross = C64::from_polar(a2, self.theta - self.phi) * overlap;
        (2.0 * a2 + 2.0 * self.sign.value() * cross.re) / self.norm_sq()
    }
}

/// |β − β′| = 2|α| sin(φ/2).
pub fn separation(alpha_abs: f64, phi: f64) -> f64 {
    2.0 * alpha_abs * (0.5 * phi).sin().abs()
}

/// Interaction time giving the phase shift φ = 2χτ₂.
pub fn tau2_for_phi(phi: f64, params: &SystemParams) -> Result<f64> {
    params.require_dispersive()?;
    Ok(phi / (2.0 * params.chi()))
}

/// Shortest τ₂ that separates the two components by at least one unit:
/// (Δ/|g|²) arcsin(1/(2|α|)).
pub fn min_tau2(alpha_abs: f64, params: &SystemParams) -> Result<f64> {
    if !(alpha_abs >= 0.5) {
        return Err(Error::AlphaTooSmall(alpha_abs));
    }
    params.require_dispersive()?;
    Ok((0.5 / alpha_abs).asin() / params.chi())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProtocolOptions {
    /// Keep the e^{−iωτ₁} field phase of the first pulse.
    pub keep_free_phase: bool,
    /// Replaces the computed θ mod 2π.
    pub theta_override: Option<f64>,
    pub nmax: Option<usize>,
}

impl ProtocolOptions {
    pub fn nmax_for(&self, alpha_abs: f64) -> usize {
        self.nmax.unwrap_or_else(|| auto_nmax(alpha_abs))
    }
}

/// (|g⟩ + i|e⟩)|α⟩/√2 after the first pulse.
pub fn step1_superpose(alpha: C64, params: &SystemParams, opts: &ProtocolOptions) -> Result<QubitFieldState> {
    let nmax = opts.nmax_for(alpha.norm());
    let alpha = if opts.keep_free_phase {
        alpha * C64::from_polar(1.0, -phase::reduce_product(params.omega, params.tau1()))
    } else {
        alpha
    };
    let field = coherent_state(alpha, nmax)?;
    let r = pi_half_rotation();
    Ok(product_state([r[0][0], r[1][0]], &field))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispersed {
    pub state: QubitFieldState,
    pub beta: C64,
    pub phi: f64,
    pub theta: f64,
    pub tau2: f64,
}

impl Dispersed {
    pub fn beta_prime(&self) -> C64 {
        self.beta * C64::from_polar(1.0, -self.phi)
    }
}

/// Dispersive interaction for τ₂: |g⟩|β⟩ + i e^{iθ}|e⟩|β′⟩ (over √2).
///
/// `alpha` is the amplitude that entered the interaction, i.e. the one the
/// state was built from.
pub fn step2_disperse(
    state: &QubitFieldState,
    alpha: C64,
    params: &SystemParams,
    tau2: f64,
    opts: &ProtocolOptions,
) -> Result<Dispersed> {
    if !(tau2 >= 0.0) {
        return Err(invalid("tau2", format!("must be nonnegative, got {tau2}")));
    }
    let u = dispersive_propagator(params, tau2, state.nmax())?.strip_global_phase();
    let mut out = u.apply(state);
    let phi = 2.0 * params.chi() * tau2;
    let computed = phase::reduce_product(params.qubit_freq_minus(), tau2);
    let theta = match opts.theta_override {
        Some(t) => {
            out.e = out.e.scaled(C64::from_polar(1.0, t - computed));
            phase::reduce(t)
        }
        None => computed,
    };
    let sep = separation(alpha.norm(), phi);
    if sep < 1.0 {
        log::warn!("component separation {sep:.3} < 1 at tau2 = {tau2:e} s; the cat components overlap");
    }
    let beta = alpha * C64::from_polar(1.0, -phase::reduce_product(params.omega_minus(), tau2));
    Ok(Dispersed { state: out, beta, phi, theta, tau2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub spec: CatSpec,
    /// Numeric Born probability of the outcome.
    pub probability: f64,
    /// Normalized conditional field state.
    pub field: FockState,
}

/// Second π/2 pulse and projection of the qubit onto `outcome`.
pub fn step3_rotate_and_project(d: &Dispersed, outcome: Outcome) -> Result<Projected> {
    let rotated = d.state.apply_qubit(&pi_half_rotation());
    let branch = match outcome {
        Outcome::G => rotated.g,
        Outcome::E => rotated.e,
    };
    let probability = branch.norm_sqr();
    if probability < MIN_BRANCH_PROBABILITY {
        return Err(Error::DegenerateBranch { outcome: outcome.symbol(), probability });
    }
    let spec = CatSpec::new(d.beta, d.phi, d.theta, outcome.sign())?;
    Ok(Projected { spec, probability, field: branch.normalized() })
}

/// Runs the three steps from |g⟩|α⟩.
pub fn prepare(
    alpha: C64,
    params: &SystemParams,
    tau2: f64,
    outcome: Outcome,
    opts: &ProtocolOptions,
) -> Result<Projected> {
    let s1 = step1_superpose(alpha, params, opts)?;
    let entered = if opts.keep_free_phase {
        alpha * C64::from_polar(1.0, -phase::reduce_product(params.omega, params.tau1()))
    } else {
        alpha
    };
    let d = step2_disperse(&s1, entered, params, tau2, opts)?;
    step3_rotate_and_project(&d, outcome)
}

/// Fock vector of a pure cat, normalized with the analytic N±.
pub fn cat_to_fock(spec: &CatSpec, nmax: usize) -> Result<FockState> {
    if spec.u != 1.0 {
        return Err(invalid("u", "cat_to_fock needs a pure cat (u = 1)"));
    }
    let a = coherent_state(spec.beta, nmax)?;
    let b = coherent_state(spec.beta_prime(), nmax)?;
    let coeff = C64::from_polar(spec.sign.value(), spec.theta);
    let n = spec.norm_sq().sqrt();
    Ok(a.add(&b.scaled(coeff)).scaled(C64::new(1.0 / n, 0.0)))
}

/// φ = π default used by the figure configurations.
pub fn default_tau2(params: &SystemParams) -> Result<f64> {
    tau2_for_phi(PI, params)
}

/// Two-branch state |q⟩|ψ⟩ with equal weights, mainly for tests.
pub fn equal_superposition(field: &FockState) -> QubitFieldState {
    product_state([C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)], field)
}
