use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cavityq::csvio::{read_readout_file, write_readout_file, write_wigner_file};
use cavityq::dissipation::{damped_cat, damped_cat_at, realize_density};
use cavityq::params::SystemParams;
use cavityq::phase;
use cavityq::protocol::{prepare as run_protocol, separation, CatSpec, Projected};
use cavityq::qestimate::{fit_q, fit_q_joint, Model};
use cavityq::readout::{curve, ReadoutConfig, ShotNoise};
use cavityq::validate::{run_suite, PERTURBATIONS};
use cavityq::wigner::{cat_wigner, numeric_wigner, Normalization};
use cavityq::C64;

use crate::config::{fmt, fmt_complex, RawConfig, RunConfig, Source};
use crate::error::{CliError, CliResult};
use crate::manifest::{file_digest, Manifest};
use crate::{ConfigArgs, EstimateArgs, PrepareArgs, ReadoutArgs, ValidateArgs, WignerArgs};

struct Loaded {
    raw: RawConfig,
    /// Present when `--config` named a manifest of the same subcommand.
    manifest: Option<Manifest>,
    path: PathBuf,
}

fn load(args: &ConfigArgs, subcommand: &str) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let (mut raw, manifest) = if text.trim_start().starts_with('{') {
        let m = Manifest::parse(&text)?;
        let raw = RawConfig::from_map(&m.config, Source::Manifest)?;
        if m.subcommand == subcommand {
            (raw, Some(m))
        } else {
            log::warn!("manifest is from '{}'; using its config only", m.subcommand);
            (raw, None)
        }
    } else {
        (RawConfig::parse(&text)?, None)
    };
    for pair in &args.set {
        raw.set_pair(pair)?;
    }
    Ok(Loaded { raw, manifest, path: args.config.clone() })
}

impl Loaded {
    /// Flag, else the manifest option, else `None`.
    fn option<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.manifest.as_ref().and_then(|m| m.options.get(key)) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("manifest option '{key}' has invalid value {v:?}"))),
        }
    }

    fn flag(&self, flag: bool, key: &str) -> bool {
        flag || self.manifest.as_ref().and_then(|m| m.options.get(key)).is_some_and(|v| v == "true")
    }

    fn set_outcome(&mut self, outcome: &Option<String>) -> CliResult<()> {
        if let Some(o) = outcome {
            if !matches!(o.as_str(), "g" | "e") {
                return Err(CliError::Usage(format!("--outcome expects g or e, got {o:?}")));
            }
            self.raw.set("outcome", o.as_str())?;
        }
        Ok(())
    }

    fn manifest(&self, subcommand: &str, cfg: &RunConfig) -> CliResult<Manifest> {
        let mut m = Manifest::new(subcommand, cfg.resolved()?);
        m.input(&self.path)?;
        Ok(m)
    }
}

fn prepared(cfg: &RunConfig) -> CliResult<(SystemParams, f64, Projected)> {
    let params = cfg.params()?;
    let tau2 = cfg.tau2(&params)?;
    let p = run_protocol(cfg.alpha, &params, tau2, cfg.outcome, &cfg.protocol_options())?;
    Ok((params, tau2, p))
}

pub fn prepare(args: &PrepareArgs) -> CliResult<u8> {
    let mut loaded = load(&args.config, "prepare")?;
    loaded.set_outcome(&args.outcome)?;
    let cfg = loaded.raw.resolve()?;
    let (params, tau2, p) = prepared(&cfg)?;
    let spec = &p.spec;
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    line("outcome", cfg.outcome.symbol().to_string());
    line("cat", spec.sign.symbol().to_string());
    line("beta", fmt_complex(spec.beta));
    line("beta_prime", fmt_complex(spec.beta_prime()));
    line("phi", fmt(spec.phi));
    line("theta", fmt(spec.theta));
    line("norm_sq", fmt(spec.norm_sq()));
    line("probability", fmt(p.probability));
    line("probability_closed_form", fmt(spec.outcome_probability()));
    line("mean_photon_number", fmt(spec.mean_photon_number()));
    line("separation", fmt(separation(cfg.alpha.norm(), spec.phi)));
    line("tau1_s", fmt(params.tau1()));
    line("tau2_s", fmt(tau2));
    line("detuning_rad_s", fmt(params.detuning()));
    line("delta_over_g", fmt(params.detuning() / params.g_abs()));
    line("chi_rad_s", fmt(params.chi()));
    line("fock_nmax", p.field.nmax().to_string());
    print!("{out}");

    if let Some(path) = &args.dump {
        let mut text = String::from("n,re,im\n");
        for (n, a) in p.field.amplitudes().iter().enumerate() {
            let _ = writeln!(text, "{n},{:.16e},{:.16e}", a.re, a.im);
        }
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
        loaded.manifest("prepare", &cfg)?.write_for(path)?;
    }
    Ok(0)
}

pub fn wigner(args: &WignerArgs) -> CliResult<u8> {
    let mut loaded = load(&args.config, "wigner")?;
    loaded.set_outcome(&args.outcome)?;
    if let Some(t) = args.tau3 {
        loaded.raw.set("tau3_s", fmt(t))?;
    }
    let cfg = loaded.raw.resolve()?;
    let mode: Normalization =
        loaded.option(args.mode.clone(), "mode")?.unwrap_or_else(|| "unit".to_string()).parse()?;
    let frame = loaded.option(args.frame.clone(), "frame")?.unwrap_or_else(|| "aligned".to_string());
    let numeric = loaded.flag(args.numeric, "numeric");

    let (params, _, p) = prepared(&cfg)?;
    let beta = match frame.as_str() {
        "aligned" => C64::new(p.spec.beta.norm(), 0.0),
        "lab" => p.spec.beta * C64::from_polar(1.0, -phase::reduce_product(params.omega, cfg.tau3_s)),
        other => return Err(CliError::Usage(format!("--frame expects aligned or lab, got {other:?}"))),
    };
    let spec = CatSpec::new(beta, p.spec.phi, p.spec.theta, p.spec.sign)?;
    let dc = if cfg.tau3_s > 0.0 {
        if params.quality.is_none() {
            return Err(CliError::config(None, "missing required key 'q_factor' (tau3_s > 0)"));
        }
        damped_cat(&spec, cfg.tau3_s, &params)?
    } else {
        damped_cat_at(&spec, 1.0)?
    };
    let grid = if numeric {
        let scale = match mode {
            Normalization::UnitIntegral => 1.0,
            Normalization::Scaled => std::f64::consts::PI * spec.norm_sq(),
        };
        numeric_wigner(&realize_density(&dc, cfg.nmax())?, &cfg.grid, mode, scale)?
    } else {
        cat_wigner(&dc, &cfg.grid, mode)?
    };
    write_wigner_file(&args.out, &grid)?;
    let mut m = loaded.manifest("wigner", &cfg)?;
    m.option("mode", mode.name());
    m.option("frame", &frame);
    m.option("numeric", numeric);
    m.write_for(&args.out)?;
    println!(
        "wrote {} ({}x{} points, u = {}, integral = {:.6}, min = {:.6e})",
        args.out.display(),
        grid.x.len(),
        grid.p.len(),
        fmt(dc.u()),
        grid.integral()
            * if mode == Normalization::Scaled { 1.0 / (std::f64::consts::PI * spec.norm_sq()) } else { 1.0 },
        grid.min_value()
    );
    Ok(0)
}

/// `start:stop:count` or `a,b,c`.
pub fn parse_taus(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("--taus expects start:stop:count or a comma list, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let taus = if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        match n {
            0 => return Err(bad()),
            1 => vec![a],
            _ => (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect(),
        }
    } else if parts.len() == 1 {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<CliResult<_>>()?
    } else {
        return Err(bad());
    };
    Ok(taus)
}

fn readout_config(cfg: &RunConfig, params: &SystemParams, spec: &CatSpec) -> CliResult<ReadoutConfig> {
    Ok(ReadoutConfig::new(params, spec.sign, cfg.tau4(params)?)?.with_phase_override(cfg.omega_minus_tau4_mod))
}

pub fn readout(args: &ReadoutArgs) -> CliResult<u8> {
    let mut loaded = load(&args.config, "readout")?;
    loaded.set_outcome(&args.outcome)?;
    let cfg = loaded.raw.resolve()?;
    let taus_text = loaded.option(args.taus.clone(), "taus")?.unwrap_or_else(|| "0:1e-6:101".to_string());
    let taus = parse_taus(&taus_text)?;
    let shots = loaded.option(args.shots, "shots")?;
    let seed = loaded.option(args.seed, "seed")?.unwrap_or(0);

    let (params, _, p) = prepared(&cfg)?;
    if params.quality.is_none() {
        return Err(CliError::config(None, "missing required key 'q_factor'"));
    }
    let rc = readout_config(&cfg, &params, &p.spec)?;
    let noise = shots.map(|shots| ShotNoise { shots, seed });
    let c = curve(&rc, &params, &p.spec, &taus, noise)?;
    write_readout_file(&args.out, &c.samples)?;
    let mut m = loaded.manifest("readout", &cfg)?;
    m.option("taus", &taus_text);
    if let Some(s) = shots {
        m.option("shots", s);
    }
    m.option("seed", seed);
    m.option("params_digest", &c.params_digest);
    m.write_for(&args.out)?;
    println!(
        "wrote {} ({} samples, phi' = {}, cat {})",
        args.out.display(),
        c.samples.len(),
        fmt(rc.phi_prime),
        p.spec.sign.symbol()
    );
    Ok(0)
}

fn parse_bracket(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("--bracket expects q_lo:q_hi, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn estimate(args: &EstimateArgs) -> CliResult<u8> {
    let mut loaded = load(&args.config, "estimate")?;
    loaded.set_outcome(&args.outcome)?;
    if loaded.raw.remove("q_factor").is_some() {
        log::warn!("ignoring q_factor from the config; Q is what is being estimated");
    }
    let cfg = loaded.raw.resolve()?;
    let bracket_text = loaded.option(args.bracket.clone(), "bracket")?.unwrap_or_else(|| "1e3:1e9".to_string());
    let bracket = parse_bracket(&bracket_text)?;
    let joint = loaded.flag(args.joint, "joint");

    let samples = read_readout_file(&args.data)?;
    let (params, _, p) = prepared(&cfg)?;
    let rc = readout_config(&cfg, &params, &p.spec)?;
    let model = Model { cfg: &rc, params: &params, cat: &p.spec };
    let fit = if joint { fit_q_joint(&samples, &model, bracket) } else { fit_q(&samples, &model, bracket) };
    let fit = fit.map_err(CliError::Fit)?;

    let mut report = String::new();
    let _ = writeln!(report, "q_hat = {}", fmt(fit.q_hat));
    let _ = writeln!(report, "residual = {}", fmt(fit.residual));
    let _ = writeln!(report, "samples = {}", samples.len());
    let _ = writeln!(report, "iterations = {}", fit.iterations);
    if let Some((lo, hi)) = fit.ci_68 {
        let _ = writeln!(report, "ci68_low = {}", fmt(lo));
        let _ = writeln!(report, "ci68_high = {}", fmt(hi));
    }
    if let Some(off) = fit.phase_offset {
        let _ = writeln!(report, "phase_offset = {}", fmt(off));
    }
    let _ = writeln!(report, "data_sha256 = {}", file_digest(&args.data)?);
    print!("{report}");
    if let Some(out) = &args.out {
        std::fs::write(out, &report).map_err(|e| CliError::io(out, e))?;
        let mut m = loaded.manifest("estimate", &cfg)?;
        m.input(&args.data)?;
        m.option("bracket", &bracket_text);
        m.option("joint", joint);
        m.write_for(out)?;
    }
    Ok(0)
}

pub fn validate(args: &ValidateArgs) -> CliResult<u8> {
    if let Some(p) = &args.perturb {
        if !PERTURBATIONS.contains(&p.as_str()) {
            return Err(CliError::Usage(format!(
                "unknown perturbation {p:?}; expected one of {}",
                PERTURBATIONS.join(", ")
            )));
        }
    }
    let report = run_suite(args.perturb.as_deref())?;
    for c in &report.checks {
        println!("{c}");
    }
    let passed = report.passed();
    println!("{}", if passed { "all checks passed" } else { "validation FAILED" });
    if let Some(path) = &args.summary {
        let checks: Vec<serde_json::Value> = report
            .checks
            .iter()
            .map(|c| {
                serde_json::json!({
                    "name": c.name,
                    "description": c.description,
                    "value": c.value,
                    "tolerance": c.tolerance,
                    "passed": c.passed,
                })
            })
            .collect();
        let summary = serde_json::json!({
            "passed": passed,
            "perturbation": report.perturbation,
            "version": env!("CARGO_PKG_VERSION"),
            "checks": checks,
        });
        let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Usage(e.to_string()))? + "\n";
        write_or_stdout(path, &text)?;
    }
    Ok(if passed { 0 } else { 1 })
}

fn write_or_stdout(path: &Path, text: &str) -> CliResult<()> {
    if path == Path::new("-") {
        print!("{text}");
        Ok(())
    } else {
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
