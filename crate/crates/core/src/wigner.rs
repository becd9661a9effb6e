//! Wigner functions on a rectangular (x, p) grid.
//!
//! Quadratures are x = (a + a†)/√2 and p = (a − a†)/(i√2), so the vacuum is
//! W = e^{−x²−p²}/π and |β⟩ is centred at (√2 Re β, √2 Im β).
//!
//! [`cat_wigner`] evaluates the closed form of a damped cat. [`numeric_wigner`]
//! works from the definition
//!
//! ```text
//! W(x, p) = (1/π) ∫ ⟨x + y|ρ|x − y⟩ e^{−2ipy} dy
//! ```
//!
//! with Hermite-function wavefunctions and a trapezoid rule in y, and serves
//! as the independent check of the closed form.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dissipation::DampedCat;
use crate::error::{invalid, Error, Result};
use crate::fock::FockOperator;
use crate::C64;

/// Relative agreement demanded between the h and 2h trapezoid sums.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub x_points: usize,
    pub p_points: usize,
}

impl Default for GridSpec {
    /// [−10, 10]² at spacing 1/16.
    fn default() -> Self {
        Self::square(10.0, 321)
    }
}

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            x_points: points,
            p_points: points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_points < 2 || self.p_points < 2 {
            return Err(invalid("grid_points", "need at least 2 points per axis"));
        }
        if !(self.x_max > self.x_min) || !(self.p_max > self.p_min) {
            return Err(invalid("grid", "axis maximum must exceed minimum"));
        }
        if ![self.x_min, self.x_max, self.p_min, self.p_max].iter().all(|v| v.is_finite()) {
            return Err(invalid("grid", "bounds must be finite"));
        }
        Ok(())
    }

    pub fn x_axis(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.x_points)
    }

    pub fn p_axis(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.p_points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.x_points - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.p_points - 1) as f64
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// ∫W dx dp = 1.
    UnitIntegral,
    /// W·πN±²: coherent lobes of height one, central fringe 2cos θ.
    Scaled,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" | "unit_integral" => Ok(Normalization::UnitIntegral),
            "scaled" => Ok(Normalization::Scaled),
            _ => Err(invalid("mode", format!("expected unit or scaled, got {s:?}"))),
        }
    }
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::UnitIntegral => "unit",
            Normalization::Scaled => "scaled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// values[(i, j)] = W(x[i], p[j]).
    pub values: DMatrix<f64>,
    pub normalization: Normalization,
    /// Largest imaginary part discarded while assembling the values.
    pub max_imag: f64,
}

impl WignerGrid {
    /// Riemann sum Σ W dx dp.
    pub fn integral(&self) -> f64 {
        let dx = (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64;
        let dp = (self.p[self.p.len() - 1] - self.p[0]) / (self.p.len() - 1) as f64;
        self.values.sum() * dx * dp
    }

    pub fn max_abs_diff(&self, other: &WignerGrid) -> f64 {
        assert_eq!(self.values.shape(), other.values.shape());
        self.values.iter().zip(other.values.iter()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Value at the grid node nearest to (x, p).
    pub fn nearest(&self, x: f64, p: f64) -> f64 {
        self.values[(nearest_index(&self.x, x), nearest_index(&self.p, p))]
    }

    /// Largest value among the nodes accepted by `keep`, with its location.
    pub fn argmax_where(&self, keep: impl Fn(f64, f64) -> bool) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (i, &x) in self.x.iter().enumerate() {
            for (j, &p) in self.p.iter().enumerate() {
                let w = self.values[(i, j)];
                if keep(x, p) && best.is_none_or(|b| w > b.2) {
                    best = Some((x, p, w));
                }
            }
        }
        best
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }

    /// Rows of (x, p, w) with x outermost.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.x
            .iter()
            .enumerate()
            .flat_map(move |(i, &x)| self.p.iter().enumerate().map(move |(j, &p)| (x, p, self.values[(i, j)])))
    }
}

fn nearest_index(axis: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (i, a) in axis.iter().enumerate() {
        if (a - v).abs() < (axis[best] - v).abs() {
            best = i;
        }
    }
    best
}

/// Wigner function of the dyad |α⟩⟨β|:
/// (1/π) exp{−½(|α|² + |β|² − 2αβ*)} exp{−(x − q₁)² − (p + iq₂)²}
/// with q₁ = (α + β*)/√2 and q₂ = (α − β*)/√2.
pub fn coherent_overlap_wigner(alpha: C64, beta: C64, x: f64, p: f64) -> C64 {
    let ln_pref = -0.5 * (alpha.norm_sqr() + beta.norm_sqr()) + alpha * beta.conj();
    dyad_wigner(ln_pref, alpha, beta, x, p)
}

fn dyad_wigner(ln_pref: C64, a: C64, b: C64, x: f64, p: f64) -> C64 {
    let q1 = (a + b.conj()) * FRAC_1_SQRT_2;
    let q2 = (a - b.conj()) * FRAC_1_SQRT_2;
    let dx = C64::new(x, 0.0) - q1;
    let dp = C64::new(p, 0.0) + C64::i() * q2;
    (ln_pref - dx * dx - dp * dp).exp() / PI
}

/// Closed-form Wigner function of a (possibly damped) cat.
pub fn cat_wigner(dc: &DampedCat, grid: &GridSpec, mode: Normalization) -> Result<WignerGrid> {
    grid.validate()?;
    let spec = &dc.spec;
    let a = dc.beta_u();
    let b = dc.beta_prime_u();
    let s = spec.sign.value();
    let n2 = spec.norm_sq();
    // The cross-dyad prefactors C*⟨βu|β′u⟩-type terms combine into
    // P = e^{−iθ} exp[−|α|²(1 − e^{iφ})], independent of u. Adding ln P to the
    // Gaussian exponent avoids overflow of the two factors separately.
    let ln_p = C64::new(0.0, -spec.theta) - (C64::new(1.0, 0.0) - C64::from_polar(1.0, spec.phi)) * spec.alpha_abs2;
    let scale = match mode {
        Normalization::UnitIntegral => 1.0 / n2,
        Normalization::Scaled => PI,
    };
    let xs = grid.x_axis();
    let ps = grid.p_axis();
    let cols: Vec<(Vec<f64>, f64)> = xs
        .par_iter()
        .map(|&x| {
            let mut col = Vec::with_capacity(ps.len());
            let mut imag = 0.0f64;
            for &p in &ps {
                let diag = coherent_overlap_wigner(a, a, x, p) + coherent_overlap_wigner(b, b, x, p);
                let ab = dyad_wigner(ln_p, a, b, x, p);
                let ba = dyad_wigner(ln_p.conj(), b, a, x, p);
                let w = diag + (ab + ba) * s;
                imag = imag.max(w.im.abs());
                col.push(w.re * scale);
            }
            (col, imag)
        })
        .collect();
    assemble(xs, ps, cols, mode)
}

fn assemble(xs: Vec<f64>, ps: Vec<f64>, cols: Vec<(Vec<f64>, f64)>, mode: Normalization) -> Result<WignerGrid> {
    let max_imag = cols.iter().fold(0.0f64, |m, c| m.max(c.1));
    let values = DMatrix::from_fn(xs.len(), ps.len(), |i, j| cols[i].0[j]);
    Ok(WignerGrid { x: xs, p: ps, values, normalization: mode, max_imag })
}

/// Hermite functions ψ₀..ψ_nmax at x, by the stable upward recurrence.
pub fn hermite_functions(x: f64, nmax: usize) -> DVector<f64> {
    let mut psi = DVector::zeros(nmax + 1);
    psi[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if nmax >= 1 {
        psi[1] = 2f64.sqrt() * x * psi[0];
    }
    for n in 1..nmax {
        let nf = n as f64;
        psi[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
    }
    psi
}

/// Wigner function of a density matrix from its definition.
///
/// `scale` multiplies the result (use πN±² to compare with the scaled mode).
pub fn numeric_wigner(rho: &FockOperator, grid: &GridSpec, mode: Normalization, scale: f64) -> Result<WignerGrid> {
    grid.validate()?;
    let d = rho.dim();
    let nmax = d - 1;
    let reach = (2.0 * nmax as f64 + 1.0).sqrt() + 7.0;
    let p_extent = grid.p_min.abs().max(grid.p_max.abs());
    let h = PI / (p_extent + reach + 12.0);
    let half = (reach / h).ceil() as i64;
    // Even count on each side so every other node forms the 2h rule.
    let half = half + (half & 1);
    let ys: Vec<f64> = (-half..=half).map(|k| k as f64 * h).collect();
    let rho_re = rho.matrix().map(|c| c.re);
    let rho_im = rho.matrix().map(|c| c.im);
    let xs = grid.x_axis();
    let ps = grid.p_axis();
    let phases: Vec<Vec<C64>> =
        ps.iter().map(|&p| ys.iter().map(|&y| C64::from_polar(1.0, -2.0 * p * y)).collect()).collect();

    let rows: Vec<(Vec<f64>, f64, f64)> = xs
        .par_iter()
        .map(|&x| {
            let mut a = DMatrix::<f64>::zeros(ys.len(), d);
            let mut b = DMatrix::<f64>::zeros(ys.len(), d);
            for (k, &y) in ys.iter().enumerate() {
                a.row_mut(k).copy_from(&hermite_functions(x + y, nmax).transpose());
                b.row_mut(k).copy_from(&hermite_functions(x - y, nmax).transpose());
            }
            let mr = &a * &rho_re;
            let mi = &a * &rho_im;
            let f: Vec<C64> =
                (0..ys.len()).map(|k| C64::new(mr.row(k).dot(&b.row(k)), mi.row(k).dot(&b.row(k)))).collect();
            let mut col = Vec::with_capacity(ps.len());
            let mut imag = 0.0f64;
            let mut halving = 0.0f64;
            for ph in &phases {
                let mut fine = C64::new(0.0, 0.0);
                let mut coarse = C64::new(0.0, 0.0);
                for (k, (fk, e)) in f.iter().zip(ph).enumerate() {
                    let t = fk * e;
                    fine += t;
                    if k % 2 == 0 {
                        coarse += t;
                    }
                }
                let w_fine = fine * (h / PI);
                let w_coarse = coarse * (2.0 * h / PI);
                imag = imag.max(w_fine.im.abs());
                halving = halving.max((w_fine - w_coarse).norm());
                col.push(w_fine.re * scale);
            }
            (col, imag, halving)
        })
        .collect();

    let halving = rows.iter().fold(0.0f64, |m, r| m.max(r.2));
    let peak =
        rows.iter().flat_map(|r| r.0.iter()).fold(0.0f64, |m, v| m.max(v.abs())) / scale.abs().max(f64::MIN_POSITIVE);
    if halving > QUADRATURE_TOL * peak.max(1.0 / PI) {
        return Err(Error::Quadrature(halving));
    }
    assemble(xs, ps, rows.into_iter().map(|r| (r.0, r.1)).collect(), mode)
}
