//! Least-squares recovery of the cavity Q from a readout curve.
//!
//! The forward model is the closed-form readout probability with
//! u(τ) = exp(−ωτ/2Q); every other parameter is taken as known. The fit
//! scans a 64-point log grid and refines with golden-section search in ln Q.

use std::f64::consts::PI;

use crate::dissipation::damping_factor_for;
use crate::error::{invalid, Error, Result};
use crate::params::SystemParams;
use crate::protocol::CatSpec;
use crate::readout::{closed_form_at, ReadoutConfig, ReadoutSample};

pub const GRID_POINTS: usize = 64;
pub const REL_TOL: f64 = 1e-4;
pub const MIN_SAMPLES: usize = 5;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub q_hat: f64,
    /// Σ(P_g^model − P_g^obs)² at q_hat.
    pub residual: f64,
    pub iterations: usize,
    /// ±1σ interval in Q from the curvature of the objective, if positive.
    pub ci_68: Option<(f64, f64)>,
    /// Fitted offset added to Ω₋τ₄ (joint fits only).
    pub phase_offset: Option<f64>,
}

/// Everything the forward model needs besides Q.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub cfg: &'a ReadoutConfig,
    pub params: &'a SystemParams,
    pub cat: &'a CatSpec,
}

impl Model<'_> {
    fn objective(&self, samples: &[ReadoutSample], q: f64, offset: f64) -> f64 {
        let theta = self.cfg.omega_minus_tau4(self.params) + offset;
        samples
            .iter()
            .map(|s| {
                let u = damping_factor_for(s.tau, self.params.omega, q).unwrap_or(0.0);
                let m = closed_form_at(self.cat, u, self.cfg.phi_prime, theta).p_g;
                (m - s.p_g).powi(2)
            })
            .sum()
    }
}

fn check_inputs(samples: &[ReadoutSample], bracket: (f64, f64)) -> Result<()> {
    if samples.len() < MIN_SAMPLES {
        return Err(invalid("data", format!("need at least {MIN_SAMPLES} samples, got {}", samples.len())));
    }
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0 && bracket.1.is_finite()) {
        return Err(invalid("bracket", format!("need 0 < q_lo < q_hi, got {bracket:?}")));
    }
    Ok(())
}

/// Golden-section minimum of `f` on [a, b] to width `tol`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, usize) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut it = 0;
    while b - a > tol {
        it += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x), it)
}

fn fit_with_offset(model: &Model, samples: &[ReadoutSample], bracket: (f64, f64), offset: f64) -> Result<FitResult> {
    let (lo, hi) = (bracket.0.ln(), bracket.1.ln());
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let obj = |x: f64| model.objective(samples, x.exp(), offset);
    let values: Vec<f64> = (0..GRID_POINTS).map(|i| obj(lo + step * i as f64)).collect();
    let (best, min) =
        values.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max - min <= 1e-12 * samples.len() as f64 {
        return Err(Error::NonIdentifiable);
    }
    if best == 0 || best == GRID_POINTS - 1 {
        return Err(Error::BracketEdge((lo + step * best as f64).exp()));
    }
    let a = lo + step * (best - 1) as f64;
    let b = lo + step * (best + 1) as f64;
    let (x, residual, iterations) = golden(obj, a, b, REL_TOL);
    let q_hat = x.exp();
    Ok(FitResult {
        q_hat,
        residual,
        iterations: iterations + GRID_POINTS,
        ci_68: curvature_interval(&obj, x, residual, samples.len()),
        phase_offset: None,
    })
}

/// ±1σ from f'' in ln Q with σ² = residual/(n − 1).
fn curvature_interval(obj: &impl Fn(f64) -> f64, x: f64, residual: f64, n: usize) -> Option<(f64, f64)> {
    let h = 1e-3;
    let f2 = (obj(x + h) - 2.0 * obj(x) + obj(x - h)) / (h * h);
    if !(f2 > 0.0) || n < 2 {
        return None;
    }
    let sigma2 = residual / (n - 1) as f64;
    let s = (2.0 * sigma2 / f2).sqrt();
    Some(((x - s).exp(), (x + s).exp()))
}

/// One-parameter fit of Q in `bracket`.
pub fn fit_q(samples: &[ReadoutSample], model: &Model, bracket: (f64, f64)) -> Result<FitResult> {
    check_inputs(samples, bracket)?;
    fit_with_offset(model, samples, bracket, 0.0)
}

/// Fits Q together with an offset of Ω₋τ₄ in (−π, π].
pub fn fit_q_joint(samples: &[ReadoutSample], model: &Model, bracket: (f64, f64)) -> Result<FitResult> {
    check_inputs(samples, bracket)?;
    let offsets = 72;
    let mut best: Option<(f64, FitResult)> = None;
    let mut iterations = 0;
    let mut last_err = None;
    for k in 0..offsets {
        let off = -PI + 2.0 * PI * (k as f64 + 0.5) / offsets as f64;
        match fit_with_offset(model, samples, bracket, off) {
            Ok(r) => {
                iterations += r.iterations;
                if best.as_ref().is_none_or(|b| r.residual < b.1.residual) {
                    best = Some((off, r));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((off0, _)) = best else {
        return Err(last_err.unwrap_or(Error::NonIdentifiable));
    };
    let width = 2.0 * PI / offsets as f64;
    let profile = |off: f64| fit_with_offset(model, samples, bracket, off).map_or(f64::INFINITY, |r| r.residual);
    let (off, _, it) = golden(profile, off0 - width, off0 + width, 1e-6);
    let mut r = fit_with_offset(model, samples, bracket, off)?;
    r.iterations += iterations + it;
    r.phase_offset = Some(crate::phase::centered(off));
    Ok(r)
}
