//! Qubit–cavity Hamiltonians and the dispersive propagator.
//!
//! Joint operators act on qubit ⊗ field with the |g⟩ block first
//! (index = q·(nmax+1) + n). The qubit basis is the charge basis with
//! |g⟩ = |↑⟩ and |e⟩ = |↓⟩, so σ_z = |g⟩⟨g| − |e⟩⟨e| and σ₊ = |g⟩⟨e|.
//! In this basis the dispersive Hamiltonian
//!
//! ```text
//! H/ħ = ω₋ a†a + ½Ω σ_z + χ(1 + 2a†a)|e⟩⟨e|
//! ```
//!
//! gives the |e⟩ branch the relative phase e^{i(Ω−χ)t} used by the cat
//! preparation and readout formulas.
//!
//! All matrices are in rad/s (H/ħ).

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::fock::{FockOperator, FockState, QubitFieldState};
use crate::params::SystemParams;
use crate::phase;
use crate::C64;

pub type QubitMatrix = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub const SIGMA_X: QubitMatrix = [[ZERO, ONE], [ONE, ZERO]];
pub const SIGMA_Z: QubitMatrix = [[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]];
/// σ₊ = |g⟩⟨e|.
pub const SIGMA_PLUS: QubitMatrix = [[ZERO, ONE], [ZERO, ZERO]];
/// σ₋ = |e⟩⟨g|.
pub const SIGMA_MINUS: QubitMatrix = [[ZERO, ZERO], [ONE, ZERO]];
pub const QUBIT_IDENTITY: QubitMatrix = [[ONE, ZERO], [ZERO, ONE]];
pub const PROJ_G: QubitMatrix = [[ONE, ZERO], [ZERO, ZERO]];
pub const PROJ_E: QubitMatrix = [[ZERO, ZERO], [ZERO, ONE]];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamiltonianKind {
    /// −E_Jσ_x cos[(π/Φ₀)(Φ_c + ηa + η*a†)] evaluated without expansion.
    FullCosine,
    /// First order in πη/Φ₀ with the rotating-wave coupling.
    Linearized,
    /// Flux off: ħωa†a + E_zσ_z − E_Jσ_x.
    Free,
    /// Large-detuning effective Hamiltonian.
    Dispersive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub params: SystemParams,
    /// Φ_c = Φ₀/2 when on, 0 when off. Only two settings are modelled.
    pub flux_on: bool,
}

impl HamiltonianSpec {
    pub fn new(kind: HamiltonianKind, params: SystemParams, flux_on: bool) -> Self {
        Self { kind, params, flux_on }
    }

    /// πΦ_c/Φ₀.
    fn flux_phase(&self) -> f64 {
        if self.flux_on {
            FRAC_PI_2
        } else {
            0.0
        }
    }
}

/// q ⊗ f on the joint space.
pub fn kron_qubit(q: &QubitMatrix, f: &FockOperator) -> FockOperator {
    let d = f.dim();
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    for (qi, row) in q.iter().enumerate() {
        for (qj, &c) in row.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            m.view_mut((qi * d, qj * d), (d, d)).copy_from(&(f.matrix() * c));
        }
    }
    FockOperator::from_matrix(m)
}

fn field_identity(nmax: usize) -> FockOperator {
    FockOperator::identity(nmax + 1)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// ε a + ε* a† with ε = πη/Φ₀.
fn coupling_quadrature(params: &SystemParams, nmax: usize) -> FockOperator {
    let a = FockOperator::annihilation(nmax);
    let eps = params.eta_ratio;
    a.scaled(eps).add(&a.dagger().scaled(eps.conj()))
}

/// ħωa†a + E_zσ_z.
fn bare_part(params: &SystemParams, nmax: usize) -> FockOperator {
    let n = FockOperator::number(nmax).scaled(real(params.omega));
    kron_qubit(&QUBIT_IDENTITY, &n)
        .add(&kron_qubit(&SIGMA_Z, &field_identity(nmax).scaled(real(params.charging_energy()))))
}

/// Builds the joint 2(nmax+1)-dimensional Hamiltonian.
pub fn build(spec: &HamiltonianSpec, nmax: usize) -> Result<FockOperator> {
    let p = &spec.params;
    let c = spec.flux_phase();
    let h = match spec.kind {
        HamiltonianKind::Free => {
            bare_part(p, nmax).sub(&kron_qubit(&SIGMA_X, &field_identity(nmax).scaled(real(p.ej))))
        }
        HamiltonianKind::FullCosine => {
            let cos_arg = coupling_quadrature(p, nmax).hermitian_function(|x| real((c + x).cos()))?;
            bare_part(p, nmax).sub(&kron_qubit(&SIGMA_X, &cos_arg.scaled(real(p.ej))))
        }
        HamiltonianKind::Linearized => {
            let a = FockOperator::annihilation(nmax);
            let eps = p.eta_ratio;
            let amp = p.ej * c.sin();
            let coupling = kron_qubit(&SIGMA_PLUS, &a.scaled(eps * amp))
                .add(&kron_qubit(&SIGMA_MINUS, &a.dagger().scaled(eps.conj() * amp)));
            bare_part(p, nmax)
                .sub(&kron_qubit(&SIGMA_X, &field_identity(nmax).scaled(real(p.ej * c.cos()))))
                .add(&coupling)
        }
        HamiltonianKind::Dispersive => {
            let (g, e) = dispersive_diagonals(p, nmax)?;
            let d: Vec<C64> = g.into_iter().chain(e).map(real).collect();
            FockOperator::from_diagonal(&d)
        }
    };
    Ok(h)
}

/// First-order expansion of the cosine without the rotating-wave step:
/// ħωa†a + E_zσ_z − E_J cos(c)σ_x + E_J sin(c) σ_x ⊗ (εa + ε*a†).
pub fn first_order_expansion(spec: &HamiltonianSpec, nmax: usize) -> FockOperator {
    let p = &spec.params;
    let c = spec.flux_phase();
    bare_part(p, nmax)
        .sub(&kron_qubit(&SIGMA_X, &field_identity(nmax).scaled(real(p.ej * c.cos()))))
        .add(&kron_qubit(&SIGMA_X, &coupling_quadrature(p, nmax).scaled(real(p.ej * c.sin()))))
}

/// Diagonal energies of the dispersive Hamiltonian on the |g,n⟩ and |e,n⟩ ladders.
pub fn dispersive_diagonals(params: &SystemParams, nmax: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    params.require_dispersive()?;
    let wm = params.omega_minus();
    let half = 0.5 * params.qubit_freq();
    let chi = params.chi();
    let g = (0..=nmax).map(|n| wm * n as f64 + half).collect();
    let e = (0..=nmax).map(|n| wm * n as f64 - half + chi * (1.0 + 2.0 * n as f64)).collect();
    Ok((g, e))
}

/// exp(−iHt) of the dispersive Hamiltonian, split into branch factors.
///
/// The field factors are exp(−iω₋a†a t) on |g⟩ and exp(−i(ω₋a†a + F(a†a))t)
/// on |e⟩ with F = χ(1 + 2a†a). The qubit phases ∓Ωt/2 are kept apart, in
/// `[0, 2π)`, so they can be dropped or compared on their own.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersivePropagator {
    pub g: FockOperator,
    pub e: FockOperator,
    pub qubit_phase_g: f64,
    pub qubit_phase_e: f64,
}

impl DispersivePropagator {
    /// Removes the common phase so the |g⟩ branch carries none.
    pub fn strip_global_phase(mut self) -> Self {
        self.qubit_phase_e = phase::reduce(self.qubit_phase_e - self.qubit_phase_g);
        self.qubit_phase_g = 0.0;
        self
    }

    pub fn apply(&self, s: &QubitFieldState) -> QubitFieldState {
        QubitFieldState::new(
            self.g.apply(&s.g).scaled(C64::from_polar(1.0, self.qubit_phase_g)),
            self.e.apply(&s.e).scaled(C64::from_polar(1.0, self.qubit_phase_e)),
        )
    }

    /// Joint block-diagonal matrix including the qubit phases.
    pub fn joint(&self) -> FockOperator {
        kron_qubit(&PROJ_G, &self.g.scaled(C64::from_polar(1.0, self.qubit_phase_g)))
            .add(&kron_qubit(&PROJ_E, &self.e.scaled(C64::from_polar(1.0, self.qubit_phase_e))))
    }
}

pub fn dispersive_propagator(params: &SystemParams, t: f64, nmax: usize) -> Result<DispersivePropagator> {
    params.require_dispersive()?;
    let chi = params.chi();
    let g_step = phase::reduce_product(params.omega_minus(), t);
    let e_step = phase::reduce_product(params.omega_minus() + 2.0 * chi, t);
    let chi_t = phase::reduce_product(chi, t);
    let diag = |step: f64, offset: f64| -> FockOperator {
        let d: Vec<C64> = (0..=nmax).map(|n| C64::from_polar(1.0, -phase::reduce(step * n as f64 + offset))).collect();
        FockOperator::from_diagonal(&d)
    };
    let half_omega = 0.5 * params.qubit_freq();
    Ok(DispersivePropagator {
        g: diag(g_step, 0.0),
        e: diag(e_step, chi_t),
        qubit_phase_g: phase::reduce(-phase::reduce_product(half_omega, t)),
        qubit_phase_e: phase::reduce_product(half_omega, t),
    })
}

/// exp(+i·ej·t·σ_x): free qubit evolution under −E_Jσ_x at n_g = 1/2.
pub fn qubit_rotation(ej: f64, t: f64) -> QubitMatrix {
    let a = phase::reduce_product(ej, t);
    let (s, c) = a.sin_cos();
    [[real(c), C64::new(0.0, s)], [C64::new(0.0, s), real(c)]]
}

/// The π/2 rotation |g⟩ → (|g⟩ + i|e⟩)/√2, |e⟩ → (i|g⟩ + |e⟩)/√2.
pub fn pi_half_rotation() -> QubitMatrix {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [[real(r), C64::new(0.0, r)], [C64::new(0.0, r), real(r)]]
}

/// Joint product state |q⟩ ⊗ |ψ⟩ as a two-branch state.
pub fn product_state(qubit: [C64; 2], field: &FockState) -> QubitFieldState {
    QubitFieldState::new(field.scaled(qubit[0]), field.scaled(qubit[1]))
}
