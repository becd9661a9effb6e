//! Flat `key = value` run configuration.
//!
//! Values come from three layers, highest first: command-line flags
//! (including `--set key=value`), the config file or manifest, and built-in
//! defaults for the optional keys.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use cavityq::fock::auto_nmax;
use cavityq::params::SystemParams;
use cavityq::protocol::{tau2_for_phi, Outcome, ProtocolOptions};
use cavityq::wigner::GridSpec;
use cavityq::C64;

use crate::error::{CliError, CliResult};

pub const KEYS: [&str; 22] = [
    "ej_ghz",
    "ech4_ghz",
    "ng",
    "omega_ghz",
    "eta_ratio",
    "g_rad_s",
    "q_factor",
    "alpha",
    "phi",
    "theta_override",
    "tau2_s",
    "tau3_s",
    "tau4_s",
    "fock_nmax",
    "omega_minus_tau4_mod",
    "outcome",
    "grid_x_min",
    "grid_x_max",
    "grid_p_min",
    "grid_p_max",
    "grid_x_points",
    "grid_p_points",
];

pub const REQUIRED: [&str; 5] = ["ej_ghz", "ech4_ghz", "ng", "omega_ghz", "alpha"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Line(usize),
    Manifest,
    Flag,
}

impl Source {
    fn line(self) -> Option<usize> {
        match self {
            Source::Line(n) => Some(n),
            _ => None,
        }
    }
}

/// Unresolved entries with where each one came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Source)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| CliError::config(Some(n), format!("expected 'key = value', found {body:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            check_key(key, Some(n))?;
            if value.is_empty() {
                return Err(CliError::config(Some(n), format!("empty value for '{key}'")));
            }
            if let Some((_, Source::Line(first))) = raw.entries.get(key) {
                return Err(CliError::config(Some(n), format!("duplicate key '{key}' (first set on line {first})")));
            }
            raw.entries.insert(key.to_string(), (value.to_string(), Source::Line(n)));
        }
        Ok(raw)
    }

    pub fn from_map(map: &BTreeMap<String, String>, source: Source) -> CliResult<Self> {
        let mut raw = RawConfig::default();
        for (k, v) in map {
            check_key(k, None)?;
            raw.entries.insert(k.clone(), (v.clone(), source));
        }
        Ok(raw)
    }

    /// Overrides (or adds) a key; flags win over the file.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> CliResult<()> {
        check_key(key, None)?;
        self.entries.insert(key.to_string(), (value.into(), Source::Flag));
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> CliResult<()> {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {pair:?}")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key).map(|e| e.0)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> CliResult<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, src)) => parse(v)
                .map(Some)
                .ok_or_else(|| CliError::config(src.line(), format!("invalid value for '{key}': {v:?}"))),
        }
    }

    fn number(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key, |v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
    }

    fn angle(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key, parse_angle)
    }

    fn require(&self, key: &str) -> CliResult<f64> {
        self.number(key)?.ok_or_else(|| CliError::config(None, format!("missing required key '{key}'")))
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        for key in REQUIRED {
            if !self.contains(key) {
                return Err(CliError::config(None, format!("missing required key '{key}'")));
            }
        }
        let coupling = match (self.number("eta_ratio")?, self.number("g_rad_s")?) {
            (Some(e), None) => Coupling::EtaRatio(e),
            (None, Some(g)) => Coupling::GRadS(g),
            (None, None) => return Err(CliError::config(None, "missing required key 'eta_ratio' or 'g_rad_s'")),
            (Some(_), Some(_)) => return Err(CliError::config(None, "set only one of 'eta_ratio' and 'g_rad_s'")),
        };
        let phi = self.angle("phi")?;
        let tau2_s = self.number("tau2_s")?;
        if phi.is_some() && tau2_s.is_some() {
            return Err(CliError::config(None, "set only one of 'phi' and 'tau2_s'"));
        }
        let alpha = self.get("alpha", |v| C64::from_str(v).ok().filter(|c| c.re.is_finite() && c.im.is_finite()))?;
        let d = GridSpec::default();
        let points = |key: &str, default: usize| -> CliResult<usize> {
            Ok(self.get(key, |v| v.parse::<usize>().ok())?.unwrap_or(default))
        };
        Ok(RunConfig {
            ej_ghz: self.require("ej_ghz")?,
            ech4_ghz: self.require("ech4_ghz")?,
            ng: self.require("ng")?,
            omega_ghz: self.require("omega_ghz")?,
            coupling,
            q_factor: self.number("q_factor")?,
            alpha: alpha.unwrap_or_default(),
            phi,
            tau2_s,
            theta_override: self.angle("theta_override")?,
            tau3_s: self.number("tau3_s")?.unwrap_or(0.0),
            tau4_s: self.number("tau4_s")?,
            fock_nmax: self.get("fock_nmax", |v| v.parse::<usize>().ok())?,
            omega_minus_tau4_mod: self.angle("omega_minus_tau4_mod")?,
            outcome: self.get("outcome", |v| Outcome::from_str(v).ok())?.unwrap_or(Outcome::G),
            grid: GridSpec {
                x_min: self.number("grid_x_min")?.unwrap_or(d.x_min),
                x_max: self.number("grid_x_max")?.unwrap_or(d.x_max),
                p_min: self.number("grid_p_min")?.unwrap_or(d.p_min),
                p_max: self.number("grid_p_max")?.unwrap_or(d.p_max),
                x_points: points("grid_x_points", d.x_points)?,
                p_points: points("grid_p_points", d.p_points)?,
            },
        })
    }
}

fn check_key(key: &str, line: Option<usize>) -> CliResult<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(CliError::config(line, format!("unknown key '{key}'")))
    }
}

/// A number, or a multiple of pi such as `pi`, `-pi/2`, `3pi/4`, `0.5*pi`.
pub fn parse_angle(s: &str) -> Option<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if let Ok(v) = t.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a, b.parse::<f64>().ok().filter(|d| *d != 0.0)?),
        None => (t.as_str(), 1.0),
    };
    let coef = num.strip_suffix("pi")?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().ok()?,
    };
    Some(c * PI / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    EtaRatio(f64),
    GRadS(f64),
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub ej_ghz: f64,
    pub ech4_ghz: f64,
    pub ng: f64,
    pub omega_ghz: f64,
    pub coupling: Coupling,
    pub q_factor: Option<f64>,
    pub alpha: C64,
    pub phi: Option<f64>,
    pub tau2_s: Option<f64>,
    pub theta_override: Option<f64>,
    pub tau3_s: f64,
    pub tau4_s: Option<f64>,
    pub fock_nmax: Option<usize>,
    pub omega_minus_tau4_mod: Option<f64>,
    pub outcome: Outcome,
    pub grid: GridSpec,
}

impl RunConfig {
    pub fn params(&self) -> CliResult<SystemParams> {
        let p = match self.coupling {
            Coupling::EtaRatio(e) => SystemParams::from_ghz(self.ej_ghz, self.ech4_ghz, self.ng, self.omega_ghz, e)?,
            Coupling::GRadS(g) => {
                SystemParams::from_ghz(self.ej_ghz, self.ech4_ghz, self.ng, self.omega_ghz, 0.5)?.with_coupling(g)?
            }
        };
        Ok(match self.q_factor {
            Some(q) => p.with_quality(q)?,
            None => p,
        })
    }

    /// τ₂ from `tau2_s`, else from `phi` (default π).
    pub fn tau2(&self, params: &SystemParams) -> CliResult<f64> {
        match self.tau2_s {
            Some(t) => Ok(t),
            None => Ok(tau2_for_phi(self.phi.unwrap_or(PI), params)?),
        }
    }

    /// τ₄ from `tau4_s`, else (π/2)Δ/|g|².
    pub fn tau4(&self, params: &SystemParams) -> CliResult<f64> {
        match self.tau4_s {
            Some(t) => Ok(t),
            None => Ok(0.5 * PI / params.require_dispersive().map(|_| params.chi())?),
        }
    }

    pub fn nmax(&self) -> usize {
        self.fock_nmax.unwrap_or_else(|| auto_nmax(self.alpha.norm()))
    }

    pub fn protocol_options(&self) -> ProtocolOptions {
        ProtocolOptions { keep_free_phase: false, theta_override: self.theta_override, nmax: Some(self.nmax()) }
    }

    /// Every key with defaults expanded, in a form [`RawConfig::from_map`]
    /// reads back to the same values. `phi` is stored as the `tau2_s` it implies.
    pub fn resolved(&self) -> CliResult<BTreeMap<String, String>> {
        let params = self.params()?;
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("ej_ghz", fmt(self.ej_ghz));
        put("ech4_ghz", fmt(self.ech4_ghz));
        put("ng", fmt(self.ng));
        put("omega_ghz", fmt(self.omega_ghz));
        match self.coupling {
            Coupling::EtaRatio(e) => put("eta_ratio", fmt(e)),
            Coupling::GRadS(g) => put("g_rad_s", fmt(g)),
        }
        if let Some(q) = self.q_factor {
            put("q_factor", fmt(q));
        }
        put("alpha", fmt_complex(self.alpha));
        put("tau2_s", fmt(self.tau2(&params)?));
        if let Some(t) = self.theta_override {
            put("theta_override", fmt(t));
        }
        put("tau3_s", fmt(self.tau3_s));
        if params.require_dispersive().is_ok() {
            put("tau4_s", fmt(self.tau4(&params)?));
        }
        put("fock_nmax", self.nmax().to_string());
        if let Some(t) = self.omega_minus_tau4_mod {
            put("omega_minus_tau4_mod", fmt(t));
        }
        put("outcome", self.outcome.symbol().to_string());
        put("grid_x_min", fmt(self.grid.x_min));
        put("grid_x_max", fmt(self.grid.x_max));
        put("grid_p_min", fmt(self.grid.p_min));
        put("grid_p_max", fmt(self.grid.p_max));
        put("grid_x_points", self.grid.x_points.to_string());
        put("grid_p_points", self.grid.p_points.to_string());
        Ok(m)
    }
}

/// Shortest text that parses back to the same f64.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_complex(c: C64) -> String {
    if c.im.is_sign_negative() {
        format!("{:?}-{:?}i", c.re, -c.im)
    } else {
        format!("{:?}+{:?}i", c.re, c.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = "\
# reference device
ej_ghz = 6.5
ech4_ghz = 149
ng = 0.634233
omega_ghz = 40
g_rad_s = 4e6   # coupling
q_factor = 5e5
alpha = 4
phi = pi
";

    #[test]
    fn parses_reference_file() {
        let c = RawConfig::parse(PAPER).unwrap().resolve().unwrap();
        assert_eq!(c.phi, Some(PI));
        assert_eq!(c.alpha, C64::new(4.0, 0.0));
        let p = c.params().unwrap();
        assert!((p.g_abs() - 4e6).abs() < 1e-6);
        assert!((p.detuning() - 9.0e6).abs() < 0.2e6);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RawConfig::parse("ng = 0.6\nfoo = 1\n").unwrap_err();
        assert_eq!(err.to_string(), "line 2: unknown key 'foo'");
        let err = RawConfig::parse("ng = 0.6\nng = 0.7\n").unwrap_err();
        assert!(err.to_string().contains("line 2") && err.to_string().contains("line 1"), "{err}");
        let err = RawConfig::parse("ng 0.6\n").unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
        let err = RawConfig::parse(&PAPER.replace("ng = 0.634233", "ng = abc")).unwrap().resolve().unwrap_err();
        assert!(err.to_string().starts_with("line 4:") && err.to_string().contains("ng"), "{err}");
    }

    #[test]
    fn missing_key_is_named() {
        let err = RawConfig::parse(&PAPER.replace("alpha = 4\n", "")).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("'alpha'"), "{err}");
        let err = RawConfig::parse(&PAPER.replace("g_rad_s = 4e6   # coupling\n", "")).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("eta_ratio"), "{err}");
    }

    #[test]
    fn flags_override_file() {
        let mut raw = RawConfig::parse(PAPER).unwrap();
        raw.set_pair("q_factor=1e6").unwrap();
        raw.set("tau3_s", "1e-7").unwrap();
        let c = raw.resolve().unwrap();
        assert_eq!(c.q_factor, Some(1e6));
        assert_eq!(c.tau3_s, 1e-7);
        assert!(raw.set("bogus", "1").is_err());
    }

    #[test]
    fn angles() {
        assert_eq!(parse_angle("pi"), Some(PI));
        assert_eq!(parse_angle("-pi/2"), Some(-PI / 2.0));
        assert_eq!(parse_angle("3pi/4"), Some(3.0 * PI / 4.0));
        assert_eq!(parse_angle("0.5 * pi"), Some(0.5 * PI));
        assert_eq!(parse_angle("0.996"), Some(0.996));
        assert_eq!(parse_angle("pie"), None);
        assert_eq!(parse_angle("pi/0"), None);
    }

    #[test]
    fn resolved_round_trips() {
        let mut raw = RawConfig::parse(PAPER).unwrap();
        raw.set("alpha", "1.5e-3-2.25i").unwrap();
        raw.set("theta_override", "pi/3").unwrap();
        let c = raw.resolve().unwrap();
        let map = c.resolved().unwrap();
        let again = RawConfig::from_map(&map, Source::Manifest).unwrap().resolve().unwrap();
        assert_eq!(again.alpha, c.alpha);
        assert_eq!(again.theta_override, c.theta_override);
        let p = c.params().unwrap();
        assert_eq!(again.tau2(&p).unwrap(), c.tau2(&p).unwrap());
        assert_eq!(again.resolved().unwrap(), map);
    }
}
