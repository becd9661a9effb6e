//! Device parameters and the quantities derived from them.
//!
//! Energies are stored as angular frequencies (E/ħ in rad/s). Constructors
//! that take ordinary frequencies in GHz apply the 2π explicitly.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Superconducting flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = 2.067_833_848e-15;

/// Default advisory threshold on |g|/Δ.
pub const DISPERSIVE_THRESHOLD: f64 = 0.5;

/// Converts an ordinary frequency in GHz to rad/s.
pub fn ghz_to_rad_s(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e9
}

/// Converts rad/s to an ordinary frequency in GHz.
pub fn rad_s_to_ghz(w: f64) -> f64 {
    w / (2.0 * PI * 1e9)
}

/// Physical constants of the qubit–cavity device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Josephson energy E_J/ħ (rad/s).
    pub ej: f64,
    /// Single-electron charging energy E_ch/ħ (rad/s).
    pub ech: f64,
    /// Dimensionless gate charge.
    pub ng: f64,
    /// Cavity mode angular frequency ω (rad/s).
    pub omega: f64,
    /// πη/Φ₀. Complex values are accepted; only |g| enters the dispersive formulas.
    pub eta_ratio: C64,
    /// Cavity quality factor; `None` means lossless.
    pub quality: Option<f64>,
}

/// Quantities that follow from [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// Ω = 4(E_ch/ħ)(2n_g − 1).
    pub qubit_freq: f64,
    /// Δ = Ω − ω.
    pub detuning: f64,
    /// χ = |g|²/Δ.
    pub chi: f64,
    /// γ = ω/Q, absent for a lossless cavity.
    pub gamma: Option<f64>,
}

/// Result of [`SystemParams::check_dispersive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersiveReport {
    pub delta_over_g: f64,
    pub g_over_delta: f64,
    pub threshold: f64,
    pub acceptable: bool,
}

impl SystemParams {
    /// Builds and validates a parameter set. All energies in rad/s.
    pub fn new(ej: f64, ech: f64, ng: f64, omega: f64, eta_ratio: C64) -> Result<Self> {
        let p = Self { ej, ech, ng, omega, eta_ratio, quality: None };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`SystemParams::new`] but from ordinary frequencies:
    /// `ej_ghz` = E_J/h and `ech4_ghz` = 4E_ch/h, both in GHz.
    pub fn from_ghz(ej_ghz: f64, ech4_ghz: f64, ng: f64, omega_ghz: f64, eta_ratio: f64) -> Result<Self> {
        Self::new(
            ghz_to_rad_s(ej_ghz),
            ghz_to_rad_s(ech4_ghz) / 4.0,
            ng,
            ghz_to_rad_s(omega_ghz),
            C64::new(eta_ratio, 0.0),
        )
    }

    /// The reference device: 4E_ch/h = 149 GHz, 2E_J/h = 13 GHz, n_g = 0.634233,
    /// a 40 GHz mode, |g| = 4×10⁶ rad/s and Q = 5×10⁵.
    pub fn reference_device() -> Self {
        let ej = ghz_to_rad_s(6.5);
        Self::from_ghz(6.5, 149.0, 0.634_233, 40.0, 4.0e6 / ej)
            .and_then(|p| p.with_quality(5.0e5))
            .expect("reference parameters are valid")
    }

    /// Sets the coupling from |g| in rad/s, keeping E_J fixed.
    pub fn with_coupling(mut self, g_rad_s: f64) -> Result<Self> {
        self.eta_ratio = C64::new(g_rad_s / self.ej, 0.0);
        self.validate()?;
        Ok(self)
    }

    pub fn with_quality(mut self, q: f64) -> Result<Self> {
        self.quality = Some(q);
        self.validate()?;
        Ok(self)
    }

    pub fn lossless(mut self) -> Self {
        self.quality = None;
        self
    }

    pub fn with_gate_charge(mut self, ng: f64) -> Result<Self> {
        self.ng = ng;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.omega) {
            return Err(invalid("omega", format!("must be > 0, got {}", self.omega)));
        }
        if !finite_pos(self.ej) {
            return Err(invalid("ej", format!("must be > 0, got {}", self.ej)));
        }
        if !finite_pos(self.ech) {
            return Err(invalid("ech", format!("must be > 0, got {}", self.ech)));
        }
        if !self.ng.is_finite() {
            return Err(invalid("ng", "must be finite"));
        }
        let eta = self.eta_ratio.norm();
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid("eta_ratio", format!("|pi eta / Phi0| must lie in (0, 1), got {eta}")));
        }
        if let Some(q) = self.quality {
            if !finite_pos(q) {
                return Err(invalid("q_factor", format!("must be > 0, got {q}")));
            }
        }
        Ok(())
    }

    /// E_z/ħ = −2(E_ch/ħ)(1 − 2n_g).
    pub fn charging_energy(&self) -> f64 {
        -2.0 * self.ech * (1.0 - 2.0 * self.ng)
    }

    /// Ω = 2E_z/ħ.
    pub fn qubit_freq(&self) -> f64 {
        2.0 * self.charging_energy()
    }

    pub fn detuning(&self) -> f64 {
        self.qubit_freq() - self.omega
    }

    /// g = (πη/Φ₀)·E_J/ħ.
    pub fn g(&self) -> C64 {
        self.eta_ratio * self.ej
    }

    pub fn g_abs(&self) -> f64 {
        self.g().norm()
    }

    /// χ = |g|²/Δ. Does not check the sign of Δ.
    pub fn chi(&self) -> f64 {
        self.g().norm_sqr() / self.detuning()
    }

    /// ω₋ = ω − χ.
    pub fn omega_minus(&self) -> f64 {
        self.omega - self.chi()
    }

    /// ω₊ = ω + χ.
    pub fn omega_plus(&self) -> f64 {
        self.omega + self.chi()
    }

    /// Ω₋ = Ω − χ.
    pub fn qubit_freq_minus(&self) -> f64 {
        self.qubit_freq() - self.chi()
    }

    pub fn gamma(&self) -> Option<f64> {
        self.quality.map(|q| self.omega / q)
    }

    /// Duration of a π/2 rotation under −E_Jσ_x: τ₁ = π/(4 E_J/ħ).
    pub fn tau1(&self) -> f64 {
        PI / (4.0 * self.ej)
    }

    pub fn derived(&self) -> DerivedQuantities {
        DerivedQuantities {
            qubit_freq: self.qubit_freq(),
            detuning: self.detuning(),
            chi: self.chi(),
            gamma: self.gamma(),
        }
    }

    /// Errors unless Δ > 0.
    pub fn require_dispersive(&self) -> Result<f64> {
        let delta = self.detuning();
        if delta > 0.0 {
            Ok(delta)
        } else {
            Err(Error::NonPositiveDetuning(delta))
        }
    }

    pub fn check_dispersive(&self) -> Result<DispersiveReport> {
        self.check_dispersive_with(DISPERSIVE_THRESHOLD)
    }

    /// Reports Δ/|g| and flags |g|/Δ below `threshold`. The flag is advisory.
    pub fn check_dispersive_with(&self, threshold: f64) -> Result<DispersiveReport> {
        let delta = self.require_dispersive()?;
        let g = self.g_abs();
        let g_over_delta = g / delta;
        Ok(DispersiveReport { delta_over_g: delta / g, g_over_delta, threshold, acceptable: g_over_delta < threshold })
    }

    /// Stable textual form of every field, used for digests.
    pub fn canonical_string(&self) -> String {
        format!(
            "ej={:.17e};ech={:.17e};ng={:.17e};omega={:.17e};eta_re={:.17e};eta_im={:.17e};q={}",
            self.ej,
            self.ech,
            self.ng,
            self.omega,
            self.eta_ratio.re,
            self.eta_ratio.im,
            self.quality.map_or("none".to_string(), |q| format!("{q:.17e}")),
        )
    }
}

/// Order-of-magnitude πη/Φ₀ for a square SQUID loop of side `squid_side` (m)
/// at the antinode of a full-wave cavity mode, with mode volume λ³.
pub fn coupling_estimate(omega: f64, squid_side: f64) -> f64 {
    let wavelength = 2.0 * PI * SPEED_OF_LIGHT / omega;
    let volume = wavelength.powi(3);
    let field = (HBAR * omega / (EPSILON_0 * volume * SPEED_OF_LIGHT * SPEED_OF_LIGHT)).sqrt();
    PI * field * squid_side * squid_side / FLUX_QUANTUM
}

/// Interval of [`coupling_estimate`] over a band of mode frequencies.
/// The estimate grows as ω², so the endpoints bound the band.
pub fn estimate_coupling_range(omega_low: f64, omega_high: f64, squid_side: f64) -> Result<(f64, f64)> {
    if !(omega_low > 0.0 && omega_low < omega_high) {
        return Err(invalid("omega_low", format!("need 0 < omega_low < omega_high, got [{omega_low}, {omega_high}]")));
    }
    if squid_side < 0.0 {
        return Err(invalid("squid_side", "must be non-negative"));
    }
    Ok((coupling_estimate(omega_low, squid_side), coupling_estimate(omega_high, squid_side)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> SystemParams {
        SystemParams::reference_device()
    }

    #[test]
    fn symmetry_point_has_zero_splitting() {
        let p = reference().with_gate_charge(0.5).unwrap();
        assert_eq!(p.charging_energy(), 0.0);
        assert_eq!(p.qubit_freq(), 0.0);
    }

    #[test]
    fn zero_gate_charge() {
        let p = reference().with_gate_charge(0.0).unwrap();
        assert_eq!(p.charging_energy(), -2.0 * p.ech);
    }

    #[test]
    fn reference_detuning() {
        let p = reference();
        let f = rad_s_to_ghz(p.qubit_freq());
        assert!((f - 40.0014).abs() < 1e-4, "Ω/2π = {f} GHz");
        let d = p.detuning();
        assert!((8.8e6..=9.2e6).contains(&d), "Δ = {d}");
        assert!((p.g_abs() - 4.0e6).abs() < 1e-6);
    }

    #[test]
    fn dispersive_flags() {
        let p = reference();
        let r = p.check_dispersive().unwrap();
        assert!((r.delta_over_g - 2.25).abs() < 0.01);
        assert!(r.acceptable);

        let delta = p.detuning();
        let at_resonance = p.with_coupling(delta).unwrap();
        assert!(!at_resonance.check_dispersive().unwrap().acceptable);
        let deep = p.with_coupling(delta / 100.0).unwrap();
        assert!(deep.check_dispersive().unwrap().acceptable);
    }

    #[test]
    fn negative_detuning_rejected() {
        let p = reference().with_gate_charge(0.6).unwrap();
        assert!(p.detuning() < 0.0);
        assert!(matches!(p.check_dispersive(), Err(Error::NonPositiveDetuning(_))));
    }

    #[test]
    fn identities() {
        let p = reference();
        assert!((p.chi() * p.detuning() - p.g_abs().powi(2)).abs() <= 1e-15 * p.g_abs().powi(2));
        let gamma = p.gamma().unwrap();
        assert!((gamma * p.quality.unwrap() - p.omega).abs() <= 1e-15 * p.omega);
    }

    #[test]
    fn tau1_from_formula() {
        // π/(4·2π·6.5 GHz) = 1.923e-11 s.
        let t = reference().tau1();
        assert!((t - 1.923_076_923e-11).abs() < 1e-19);
    }

    #[test]
    fn invalid_inputs() {
        let ok = reference();
        assert!(SystemParams::new(-1.0, ok.ech, ok.ng, ok.omega, ok.eta_ratio).is_err());
        assert!(SystemParams::new(ok.ej, ok.ech, ok.ng, 0.0, ok.eta_ratio).is_err());
        assert!(SystemParams::new(ok.ej, ok.ech, ok.ng, ok.omega, C64::new(1.5, 0.0)).is_err());
        assert!(ok.with_quality(-3.0).is_err());
    }

    #[test]
    fn complex_eta_enters_through_modulus() {
        let p = reference();
        let mut q = p;
        q.eta_ratio = C64::from_polar(p.eta_ratio.norm(), 0.7);
        assert!((q.chi() - p.chi()).abs() < 1e-9 * p.chi());
    }

    #[test]
    fn coupling_range_covers_microwave_band() {
        let side = 50e-6;
        let (lo, hi) = estimate_coupling_range(ghz_to_rad_s(20.0), ghz_to_rad_s(300.0), side).unwrap();
        assert!(lo / 8.55e-6 > 0.1 && lo / 8.55e-6 < 10.0, "lo = {lo}");
        assert!(hi / 1.9e-3 > 0.1 && hi / 1.9e-3 < 10.0, "hi = {hi}");
    }

    #[test]
    fn coupling_scales_with_area() {
        let w = ghz_to_rad_s(40.0);
        assert_eq!(coupling_estimate(w, 0.0), 0.0);
        let a = coupling_estimate(w, 50e-6);
        let b = coupling_estimate(w, 100e-6);
        assert!((b / a - 4.0).abs() < 1e-12);
    }
}
