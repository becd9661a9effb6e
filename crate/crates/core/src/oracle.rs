//! Brute-force references for the closed-form results.
//!
//! [`lindblad_evolve`] integrates the zero-temperature photon-loss master
//! equation with fixed-step RK4. [`dispersive_vs_full`] propagates a
//! qubit–field state under the Jaynes–Cummings Hamiltonian and under its
//! dispersive approximation and compares the results.
//!
//! The comparison uses its own self-contained convention: Z = |e⟩⟨e| − |g⟩⟨g|
//! with |e⟩ the upper level, σ₋ = |g⟩⟨e|, and
//!
//! ```text
//! H_JC  = ω a†a + ½ΩZ + g(a†σ₋ + aσ₊)
//! H_eff = ω a†a + ½ΩZ + χ(|e⟩⟨e| a a† − |g⟩⟨g| a†a),   χ = g²/Δ
//! ```

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::fock::{expm, number_phase_propagator, FockOperator, QubitFieldState};
use crate::hamiltonians::{kron_qubit, QubitMatrix, PROJ_E, PROJ_G};
use crate::params::SystemParams;
use crate::C64;

/// Largest γ·dt accepted.
pub const MAX_GAMMA_DT: f64 = 1e-3;
/// Largest ‖H‖·dt accepted (H after removing the rotating frame).
pub const MAX_H_DT: f64 = 1e-2;
/// Trace drift that aborts an integration.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladProblem {
    /// H/ħ; `None` for pure decay.
    pub hamiltonian: Option<FockOperator>,
    /// Rate of the frame e^{−i·rate·a†a·t} split off from H and applied
    /// exactly at the end. Photon loss commutes with it.
    pub frame_rate: f64,
    pub decay_rate: f64,
    pub initial: FockOperator,
    pub t_final: f64,
    /// Step; `None` picks the largest one allowed by the guards.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladResult {
    pub rho: FockOperator,
    pub steps: usize,
    pub dt: f64,
    pub trace_drift: f64,
    pub hermiticity_error: f64,
}

/// Upper bound on the spectral norm: largest absolute row sum.
fn norm_bound(m: &DMatrix<C64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|c| c.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn residual_hamiltonian(p: &LindbladProblem) -> Option<DMatrix<C64>> {
    let h = p.hamiltonian.as_ref()?;
    let mut m = h.matrix().clone();
    for n in 0..m.nrows() {
        m[(n, n)] -= C64::new(p.frame_rate * n as f64, 0.0);
    }
    if m.iter().all(|c| c.norm() == 0.0) {
        None
    } else {
        Some(m)
    }
}

/// −i[H, ρ] + γ(aρa† − ½{a†a, ρ}), with the dissipator in index form.
fn generator(h: Option<&DMatrix<C64>>, gamma: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let d = rho.nrows();
    let mut out = match h {
        Some(h) => (h * rho - rho * h) * C64::new(0.0, -1.0),
        None => DMatrix::zeros(d, d),
    };
    if gamma != 0.0 {
        for m in 0..d {
            for n in 0..d {
                let mut v = rho[(m, n)] * (-0.5 * (m + n) as f64);
                if m + 1 < d && n + 1 < d {
                    v += rho[(m + 1, n + 1)] * (((m + 1) * (n + 1)) as f64).sqrt();
                }
                out[(m, n)] += v * gamma;
            }
        }
    }
    out
}

pub fn lindblad_evolve(p: &LindbladProblem) -> Result<LindbladResult> {
    if !(p.t_final >= 0.0) {
        return Err(invalid("t_final", format!("must be nonnegative, got {}", p.t_final)));
    }
    if !(p.decay_rate >= 0.0) {
        return Err(invalid("decay_rate", format!("must be nonnegative, got {}", p.decay_rate)));
    }
    let d = p.initial.dim();
    if let Some(h) = &p.hamiltonian {
        if h.dim() != d {
            return Err(Error::Dimension { expected: d, got: h.dim() });
        }
        h.require_hermitian()?;
    }
    let h_res = residual_hamiltonian(p);
    let h_norm = h_res.as_ref().map_or(0.0, norm_bound);
    let limit = [MAX_GAMMA_DT / p.decay_rate, MAX_H_DT / h_norm]
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(f64::INFINITY, f64::min);
    let (steps, dt) = match p.dt {
        Some(dt) => {
            if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
                return Err(Error::StepSize(format!(
                    "dt = {dt:e} s violates the guards (gamma*dt <= {MAX_GAMMA_DT}, |H|*dt <= {MAX_H_DT}; limit {limit:e} s)"
                )));
            }
            let steps = (p.t_final / dt).round() as usize;
            if (steps as f64 * dt - p.t_final).abs() > 1e-9 * p.t_final.max(dt) {
                return Err(Error::StepSize(format!("t_final = {:e} s is not a multiple of dt = {dt:e} s", p.t_final)));
            }
            (steps, dt)
        }
        None if p.t_final == 0.0 => (0, 0.0),
        None if limit.is_infinite() => (1, p.t_final),
        None => {
            let steps = (p.t_final / limit).ceil().max(1.0) as usize;
            (steps, p.t_final / steps as f64)
        }
    };

    let trace0 = p.initial.trace().re;
    let mut rho = p.initial.matrix().clone();
    let h = h_res.as_ref();
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    for step in 0..steps {
        let k1 = generator(h, p.decay_rate, &rho);
        let k2 = generator(h, p.decay_rate, &(&rho + &k1 * half));
        let k3 = generator(h, p.decay_rate, &(&rho + &k2 * half));
        let k4 = generator(h, p.decay_rate, &(&rho + &k3 * full));
        rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
        let drift = (rho.trace().re - trace0).abs();
        if drift > MAX_TRACE_DRIFT {
            return Err(Error::TraceDrift { drift, t: (step + 1) as f64 * dt, step: step + 1 });
        }
    }
    let mut out = FockOperator::from_matrix(rho);
    if p.frame_rate != 0.0 {
        let u = number_phase_propagator(p.frame_rate, p.t_final, d - 1);
        out = out.conjugate_by(&u);
    }
    let trace_drift = (out.trace().re - trace0).abs();
    let hermiticity_error = out.hermiticity_error();
    Ok(LindbladResult { rho: out, steps, dt, trace_drift, hermiticity_error })
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
/// |g⟩⟨e| with |g⟩ first.
const LOWER: QubitMatrix = [[ZERO, ONE], [ZERO, ZERO]];
/// |e⟩⟨g|.
const RAISE: QubitMatrix = [[ZERO, ZERO], [ONE, ZERO]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveComparison {
    pub delta_over_g: f64,
    /// |⟨ψ_eff|ψ_JC⟩|, the pure-state (Uhlmann–Jozsa root) fidelity.
    pub fidelity: f64,
    /// |⟨ψ_eff|ψ_JC⟩|².
    pub overlap_sq: f64,
    /// Trace distance √(1 − |⟨ψ_eff|ψ_JC⟩|²); scales as (g/Δ)².
    pub error: f64,
    /// ‖H_Dyson − χ(|e⟩⟨e|aa† − |g⟩⟨g|a†a)‖ / ‖χ(…)‖ on the kept levels.
    pub dyson_residual: f64,
}

/// JC and effective Hamiltonians with ω(a†a + |e⟩⟨e|) removed; both conserve
/// that quantity, so fidelities are unchanged.
pub fn comparison_hamiltonians(delta: f64, g: f64, nmax: usize) -> (FockOperator, FockOperator) {
    let d = nmax + 1;
    let a = FockOperator::annihilation(nmax);
    let id = FockOperator::identity(d);
    let z = kron_qubit(&PROJ_E, &id).sub(&kron_qubit(&PROJ_G, &id));
    let base = z.scaled(C64::new(0.5 * delta, 0.0));
    let jc = base.add(&kron_qubit(&LOWER, &a.dagger()).add(&kron_qubit(&RAISE, &a)).scaled(C64::new(g, 0.0)));
    let chi = if g == 0.0 { 0.0 } else { g * g / delta };
    let eff = base.add(&dispersive_shift(nmax).scaled(C64::new(chi, 0.0)));
    (jc, eff)
}

/// |e⟩⟨e| a a† − |g⟩⟨g| a†a with truncated ladder operators.
pub fn dispersive_shift(nmax: usize) -> FockOperator {
    let a = FockOperator::annihilation(nmax);
    let ad = a.dagger();
    kron_qubit(&PROJ_E, &a.mul(&ad)).sub(&kron_qubit(&PROJ_G, &ad.mul(&a)))
}

/// Second-order Dyson generator −(i/T)∫₀ᵀdt₁∫₀^{t₁}dt₂ V(t₁)V(t₂) for
/// V(t) = g(a†σ₋e^{−iΔt} + aσ₊e^{iΔt}), by cumulative trapezoid sums over
/// `periods` periods of 2π/Δ.
pub fn dyson_generator(delta: f64, g: f64, nmax: usize, periods: usize, per_period: usize) -> FockOperator {
    let a = FockOperator::annihilation(nmax);
    let down = kron_qubit(&LOWER, &a.dagger()).scaled(C64::new(g, 0.0));
    let up = kron_qubit(&RAISE, &a).scaled(C64::new(g, 0.0));
    let n = periods * per_period;
    let t_total = periods as f64 * std::f64::consts::TAU / delta;
    let h = t_total / n as f64;
    let v = |k: usize| {
        let ph = C64::from_polar(1.0, -delta * h * k as f64);
        down.scaled(ph).add(&up.scaled(ph.conj()))
    };
    let dim = down.dim();
    let mut inner = FockOperator::zeros(dim);
    let mut outer = FockOperator::zeros(dim);
    let mut prev_v = v(0);
    let mut prev_integrand = FockOperator::zeros(dim);
    for k in 1..=n {
        let vk = v(k);
        inner = inner.add(&prev_v.add(&vk).scaled(C64::new(0.5 * h, 0.0)));
        let integrand = vk.mul(&inner);
        outer = outer.add(&prev_integrand.add(&integrand).scaled(C64::new(0.5 * h, 0.0)));
        prev_v = vk;
        prev_integrand = integrand;
    }
    outer.scaled(C64::new(0.0, -1.0 / t_total))
}

/// Propagates `initial` for time t under both Hamiltonians.
///
/// Uses Δ and |g| from `params`; the cavity and qubit frequencies only enter
/// through Δ because the comparison runs in the frame that removes
/// ω(a†a + |e⟩⟨e|).
pub fn dispersive_vs_full(params: &SystemParams, initial: &QubitFieldState, t: f64) -> Result<DispersiveComparison> {
    let delta = params.require_dispersive()?;
    compare_at(delta, params.g_abs(), initial, t)
}

pub fn compare_at(delta: f64, g: f64, initial: &QubitFieldState, t: f64) -> Result<DispersiveComparison> {
    let nmax = initial.nmax();
    let (jc, eff) = comparison_hamiltonians(delta, g, nmax);
    let psi0 = initial.to_joint();
    let norm0 = psi0.norm();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(invalid("initial", format!("state norm {norm0} differs from one")));
    }
    let full = expm(&jc, t)?.matrix() * &psi0;
    let approx = expm(&eff, t)?.matrix() * &psi0;
    let overlap_sq = approx.dotc(&full).norm_sqr();
    let dyson_residual = if g == 0.0 {
        0.0
    } else {
        let num = dyson_generator(delta, g, nmax, 4, 64);
        let expected = dispersive_shift(nmax).scaled(C64::new(g * g / delta, 0.0));
        num.sub(&expected).max_abs() / expected.max_abs()
    };
    Ok(DispersiveComparison {
        delta_over_g: if g == 0.0 { f64::INFINITY } else { delta / g },
        fidelity: overlap_sq.sqrt(),
        overlap_sq,
        error: (1.0 - overlap_sq).max(0.0).sqrt(),
        dyson_residual,
    })
}
