//! Subcommands as pure functions from a resolved config to report text.
//! Every report carries the seed and the full parameter set.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::lower_bound;
use crate::coefficients::{alpha_linear_part, eps_ceiling, Coefficients, Params};
use crate::config::Config;
use crate::dynamics::{euler_maruyama, strong_error_experiment, Embedding, OdeCfg};
use crate::error::{Error, Result};
use crate::psi::{PsiSpec, Window};
use crate::quadrature::QuadratureCfg;
use crate::schedule::{build_frequency_schedule, scaling_constant};
use crate::sequence::ErrorSequence;
use crate::verify::{bound_chain, run_suite, ChainConfig, VerifyOptions, SUITES};

pub const COMMANDS: &[&str] =
    &["params", "coeffs", "alpha", "bound", "schedule", "simulate", "optimal-error", "verify"];

/// Keys accepted by every command.
const PARAM_KEYS: &[&str] = &["T", "tau", "eps_frac", "tau2_frac", "quad_tol", "seed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    /// False only when `verify` saw a failing assertion.
    pub passed: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, passed: true }
    }
}

pub fn run(command: &str, cfg: &Config, seed: u64, format: Format) -> Result<Output> {
    match command {
        "params" => cmd_params(cfg, seed, format).map(Output::ok),
        "coeffs" => cmd_coeffs(cfg, seed, format).map(Output::ok),
        "alpha" => cmd_alpha(cfg, seed, format).map(Output::ok),
        "bound" => cmd_bound(cfg, seed, format).map(Output::ok),
        "schedule" => cmd_schedule(cfg, seed, format).map(Output::ok),
        "simulate" => cmd_simulate(cfg, seed, format).map(Output::ok),
        "optimal-error" => cmd_optimal_error(cfg, seed, format).map(Output::ok),
        "verify" => cmd_verify(cfg, seed, format),
        other => Err(Error::Config(format!("unknown command {other:?}"))),
    }
}

fn allow(cfg: &Config, command: &str, extra: &[&str]) -> Result<()> {
    let keys: Vec<&str> = PARAM_KEYS.iter().chain(extra).copied().collect();
    cfg.check_keys(command, &keys)
}

pub fn quadrature_cfg(cfg: &Config) -> Result<QuadratureCfg> {
    let q = match cfg.get::<f64>("quad_tol")? {
        Some(tol) => QuadratureCfg::with_tol(tol),
        None => QuadratureCfg::default(),
    };
    q.validate()?;
    Ok(q)
}

pub fn coefficients(cfg: &Config) -> Result<Coefficients> {
    Coefficients::build(
        cfg.get_or("T", 1.5)?,
        cfg.get_or("tau", 0.75)?,
        cfg.get_or("eps_frac", 0.8)?,
        cfg.get_or("tau2_frac", 0.8)?,
        &quadrature_cfg(cfg)?,
    )
}

/// 17 significant digits, enough to round-trip any double.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_header(command: &str, seed: u64, p: &Params, cfg: &Config) -> String {
    let mut s = format!("# command={command}\n# seed={seed}\n");
    let pv = serde_json::to_value(p).expect("params serialize");
    if let Value::Object(map) = pv {
        for (k, v) in map {
            let _ = writeln!(s, "# param.{k}={v}");
        }
    }
    for (k, v) in cfg.iter() {
        let _ = writeln!(s, "# config.{k}={v}");
    }
    s
}

fn json_report(command: &str, seed: u64, p: &Params, cfg: &Config, body: Value) -> String {
    let config: serde_json::Map<String, Value> =
        cfg.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect();
    let mut report = json!({
        "command": command,
        "seed": seed,
        "params": p,
        "config": config,
    });
    if let (Value::Object(out), Value::Object(extra)) = (&mut report, body) {
        out.extend(extra);
    }
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn cmd_params(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    allow(cfg, "params", &[])?;
    let m = coefficients(cfg)?;
    let p = *m.params();
    let derived = [
        ("eps_ceiling", eps_ceiling(p.tau)),
        ("alpha_floor", p.alpha_floor()),
        ("log10_mu_norm", p.ln_mu_norm / std::f64::consts::LN_10),
    ];
    Ok(match format {
        Format::Json => {
            let body: serde_json::Map<String, Value> =
                derived.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            json_report("params", seed, &p, cfg, Value::Object(body))
        }
        Format::Csv => {
            let mut s = csv_header("params", seed, &p, cfg);
            s.push_str("name,value\n");
            for (k, v) in derived {
                let _ = writeln!(s, "{k},{}", num(v));
            }
            s
        }
    })
}

pub fn cmd_coeffs(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    allow(cfg, "coeffs", &["x_lo", "x_hi", "points"])?;
    let m = coefficients(cfg)?;
    let p = *m.params();
    let lo: f64 = cfg.get_or("x_lo", -0.85)?;
    let hi: f64 = cfg.get_or("x_hi", 1.6)?;
    let n: usize = cfg.get_or("points", 1000)?;
    if n < 2 {
        return Err(Error::Precondition("points must be >= 2".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Precondition(format!("invalid range [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    let rows = (0..n)
        .map(|i| {
            let x = if i == n - 1 { hi } else { lo + i as f64 * step };
            Ok((x, m.f(x)?, m.g(x)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match format {
        Format::Csv => {
            let mut s = csv_header("coeffs", seed, &p, cfg);
            s.push_str("x,f,g\n");
            for (x, f, g) in rows {
                let _ = writeln!(s, "{},{},{}", num(x), num(f), num(g));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows.iter().map(|(x, f, g)| json!({"x": x, "f": f, "g": g})).collect();
            json_report("coeffs", seed, &p, cfg, json!({ "rows": rows }))
        }
    })
}

pub fn cmd_alpha(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    allow(cfg, "alpha", &["refine_tol"])?;
    let m = coefficients(cfg)?;
    let p = *m.params();
    let base = *m.quadrature();
    let refine_tol: f64 = cfg.get_or("refine_tol", base.tol * 1e-2)?;
    let refined_cfg =
        QuadratureCfg { node_count: 2 * base.node_count, ..QuadratureCfg::with_tol(refine_tol) };
    let refined = m.compute_alpha_with(&refined_cfg)?;
    let linear = alpha_linear_part(p.tau, p.eps);
    let fields = [
        ("alpha", p.alpha),
        ("alpha_linear_part", linear),
        ("alpha_quadrature_part", p.alpha - linear),
        ("alpha_refined", refined),
        ("refinement_change", (refined - p.alpha).abs()),
        ("alpha_floor", p.alpha_floor()),
    ];
    Ok(match format {
        Format::Json => {
            let body: serde_json::Map<String, Value> =
                fields.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            json_report("alpha", seed, &p, cfg, Value::Object(body))
        }
        Format::Csv => {
            let mut s = csv_header("alpha", seed, &p, cfg);
            s.push_str("name,value\n");
            for (k, v) in fields {
                let _ = writeln!(s, "{k},{}", num(v));
            }
            s
        }
    })
}

pub fn cmd_bound(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    allow(cfg, "bound", &["n", "n_max"])?;
    let m = coefficients(cfg)?;
    let p = *m.params();
    let q = quadrature_cfg(cfg)?;
    let ns: Vec<u64> = match cfg.get::<u64>("n_max")? {
        Some(n_max) => (1..=n_max).collect(),
        None => vec![cfg.get_or("n", 1)?],
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::Precondition("n must be >= 1".into()));
    }
    let reports = ns
        .iter()
        .map(|&n| lower_bound(&p, 5.0 * n as f64, &q).map(|r| (n, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(match format {
        Format::Json => {
            let rows: Vec<Value> = reports
                .iter()
                .map(|(n, r)| {
                    let mut v = to_value(r);
                    v["n"] = json!(n);
                    v
                })
                .collect();
            json_report("bound", seed, &p, cfg, json!({ "reports": rows }))
        }
        Format::Csv => {
            let mut s = csv_header("bound", seed, &p, cfg);
            s.push_str(
                "n,c_center,log10_bound,log_bound,log_prefactor,log10_gauss_window,sin_weight,bound\n",
            );
            for (n, r) in &reports {
                let _ = writeln!(
                    s,
                    "{n},{},{},{},{},{},{},{}",
                    num(r.c_center),
                    num(r.log10_bound),
                    num(r.log_bound),
                    num(r.log_prefactor),
                    num(r.log10_gauss_window),
                    num(r.sin_weight),
                    r.bound.map_or(String::new(), num),
                );
            }
            s
        }
    })
}

/// Read an `ErrorSequence` from keys `{prefix}_kind`, `_values`, `_file`,
/// `_kappa`, `_p`, `_horizon`.
pub fn sequence_from(cfg: &Config, prefix: &str, default_kind: &str) -> Result<ErrorSequence> {
    let key = |s: &str| format!("{prefix}_{s}");
    let kind = cfg.raw(&key("kind")).unwrap_or(default_kind);
    let horizon: Option<u64> = cfg.get(&key("horizon"))?;
    match kind {
        "explicit" => {
            let values = if let Some(v) = cfg.list::<f64>(&key("values"))? {
                v
            } else if let Some(path) = cfg.raw(&key("file")) {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{path}: {e}")))?;
                text.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().map_err(|_| Error::Config(format!("{path}: bad value {t:?}"))))
                    .collect::<Result<Vec<f64>>>()?
            } else {
                return Err(Error::Config(format!("{} or {} required", key("values"), key("file"))));
            };
            ErrorSequence::explicit(values)
        }
        "power_law" => ErrorSequence::power_law(
            cfg.get(&key("kappa"))?.ok_or_else(|| Error::Config(format!("{} required", key("kappa"))))?,
            cfg.get(&key("p"))?.ok_or_else(|| Error::Config(format!("{} required", key("p"))))?,
            horizon,
        ),
        "log_decay" => ErrorSequence::log_decay(horizon),
        other => Err(Error::Config(format!("{}: unknown kind {other:?}", key("kind")))),
    }
}

const SEQ_KEYS: &[&str] = &[
    "eps_kind",
    "eps_values",
    "eps_file",
    "eps_kappa",
    "eps_p",
    "eps_horizon",
    "delta_kind",
    "delta_values",
    "delta_file",
    "delta_kappa",
    "delta_p",
    "delta_horizon",
];

pub fn cmd_schedule(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    let mut keys = SEQ_KEYS.to_vec();
    keys.extend(["m_max", "transforms", "adjust_evals", "n0"]);
    allow(cfg, "schedule", &keys)?;
    let m = coefficients(cfg)?;
    let p = *m.params();
    let q = quadrature_cfg(cfg)?;
    let mut eps = if cfg.contains("eps_kind") || cfg.contains("eps_values") || cfg.contains("eps_file") {
        sequence_from(cfg, "eps", "explicit")?
    } else {
        ErrorSequence::power_law(p.eps, 0.0, None)?
    };
    let mut delta = sequence_from(cfg, "delta", "log_decay")?;
    if cfg.get_or("adjust_evals", false)? {
        eps = eps.adjust_for_evaluations();
    }
    if cfg.get_or("transforms", true)? {
        eps = eps.prefix_min()?;
        delta = delta.tail_sup()?;
    }
    let m_max: usize = cfg.get_or("m_max", 2)?;
    let sched = build_frequency_schedule(&eps, &delta, &p, m_max, &q)?;
    let log10_scaling = match cfg.get::<u64>("n0")? {
        Some(n0) => Some(
            scaling_constant(&delta, n0, |n| crate::bounds::log_window_bound(&p, n, &q))?
                / std::f64::consts::LN_10,
        ),
        None => None,
    };
    let ln10 = std::f64::consts::LN_10;
    Ok(match format {
        Format::Json => {
            let windows: Vec<Value> = (0..m_max)
                .map(|i| {
                    json!({
                        "m": i + 1,
                        "n": sched.n_of_m[i],
                        "n_display": sched.n_of_m[i].to_string(),
                        "log10_n": sched.n_of_m[i].log10(),
                        "log10_bound": sched.log_bounds[i] / ln10,
                        "log10_delta": sched.log_delta[i] / ln10,
                        "margin_ln": sched.margins[i],
                        "center": sched.spec.windows[i].center,
                        "log10_freq": sched.spec.windows[i].log_freq / ln10,
                    })
                })
                .collect();
            json_report(
                "schedule",
                seed,
                &p,
                cfg,
                json!({
                    "eps": eps,
                    "delta": delta,
                    "windows": windows,
                    "n_next": sched.n_next,
                    "psi": sched.spec,
                    "log10_scaling_constant": log10_scaling,
                }),
            )
        }
        Format::Csv => {
            let mut s = csv_header("schedule", seed, &p, cfg);
            if let Some(c) = log10_scaling {
                let _ = writeln!(s, "# log10_scaling_constant={}", num(c));
            }
            let _ = writeln!(s, "# n_next={}", sched.n_next);
            s.push_str("m,n,log10_n,log10_bound,log10_delta,margin_ln,center,log10_freq\n");
            for i in 0..m_max {
                let w = &sched.spec.windows[i];
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    i + 1,
                    sched.n_of_m[i],
                    num(sched.n_of_m[i].log10()),
                    num(sched.log_bounds[i] / ln10),
                    num(sched.log_delta[i] / ln10),
                    num(sched.margins[i]),
                    num(w.center),
                    num(w.log_freq / ln10),
                );
            }
            s
        }
    })
}

/// `ψ` from keys `psi` (`zero` | `chirp`), `chirp_center`, `chirp_eps`,
/// `chirp_freq`.
pub fn psi_from(cfg: &Config, t_end: f64) -> Result<PsiSpec> {
    match cfg.raw("psi").unwrap_or("zero") {
        "zero" => Ok(PsiSpec::zero()),
        "chirp" => {
            let c: f64 = cfg.get_or("chirp_center", 2.0)?;
            match (cfg.get::<f64>("chirp_eps")?, cfg.get::<f64>("chirp_freq")?) {
                (Some(_), Some(_)) => Err(Error::Config("give chirp_eps or chirp_freq, not both".into())),
                (Some(eps), None) => PsiSpec::single_chirp(c, eps, t_end),
                (None, freq) => {
                    if !(c >= 2.0) {
                        return Err(Error::InvalidChirp(format!("center {c} must be >= 2")));
                    }
                    PsiSpec::new(vec![Window::with_freq(c, freq.unwrap_or(1e4))])
                }
            }
        }
        other => Err(Error::Config(format!("psi: unknown kind {other:?}"))),
    }
}

pub fn cmd_simulate(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    allow(
        cfg,
        "simulate",
        &[
            "steps",
            "samples",
            "psi",
            "chirp_center",
            "chirp_eps",
            "chirp_freq",
            "ode_steps",
            "mode",
            "scale_c",
            "xi",
            "m",
        ],
    )?;
    let coeffs = coefficients(cfg)?;
    let p = *coeffs.params();
    let spec = psi_from(cfg, p.t_end)?;
    let steps: Vec<usize> = cfg.list("steps")?.unwrap_or_else(|| vec![16, 64, 256, 1024, 4096]);
    let samples: usize = cfg.get_or("samples", 1000)?;
    let ode = OdeCfg { steps: cfg.get_or("ode_steps", OdeCfg::default().steps)? };
    ode.validate()?;
    match cfg.raw("mode").unwrap_or("table") {
        "table" => {
            let rows = strong_error_experiment(&coeffs, &spec, &steps, samples, seed, &ode)?;
            Ok(match format {
                Format::Csv => {
                    let mut s = csv_header("simulate", seed, &p, cfg);
                    s.push_str("steps,mean_error,std_error,samples\n");
                    for r in &rows {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}",
                            r.steps,
                            num(r.mean_error),
                            num(r.std_error),
                            r.samples
                        );
                    }
                    s
                }
                Format::Json => json_report("simulate", seed, &p, cfg, json!({ "psi": spec, "rows": rows })),
            })
        }
        "paths" => {
            let xi: Vec<f64> = cfg.list("xi")?.unwrap_or_else(|| vec![0.0, 0.0]);
            let emb = Embedding { scale_c: cfg.get_or("scale_c", 1.0)?, xi, m: cfg.get_or("m", 1)? };
            emb.validate()?;
            // One JSON object per (sample, steps) pair, sample-major.
            let lines: Vec<String> = (0..samples as u64)
                .into_par_iter()
                .map(|i| {
                    steps
                        .iter()
                        .map(|&n| {
                            let r = euler_maruyama(&coeffs, &spec, n, seed, i, &emb)?;
                            Ok(serde_json::to_string(&r).expect("result serializes"))
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            let mut s = String::new();
            for l in lines {
                s.push_str(&l);
                s.push('\n');
            }
            Ok(s)
        }
        other => Err(Error::Config(format!("mode: unknown value {other:?}"))),
    }
}

pub fn chain_config(cfg: &Config) -> Result<ChainConfig> {
    let d = ChainConfig::default();
    Ok(ChainConfig {
        chirp_center: cfg.get_or("chirp_center", d.chirp_center)?,
        chirp_eps: cfg.get_or("chirp_eps", d.chirp_eps)?,
        a: cfg.get_or("a", d.a)?,
        b: cfg.get_or("b", d.b)?,
        outer: cfg.get_or("outer", d.outer)?,
        inner: cfg.get_or("inner", d.inner)?,
        two_point_samples: cfg.get_or("two_point_samples", d.two_point_samples)?,
    })
}

const CHAIN_KEYS: &[&str] = &["chirp_center", "chirp_eps", "a", "b", "outer", "inner", "two_point_samples"];

pub fn cmd_optimal_error(cfg: &Config, seed: u64, format: Format) -> Result<String> {
    allow(cfg, "optimal-error", CHAIN_KEYS)?;
    let coeffs = coefficients(cfg)?;
    let p = *coeffs.params();
    let report = bound_chain(&coeffs, &chain_config(cfg)?, seed)?;
    Ok(match format {
        Format::Json => json_report("optimal-error", seed, &p, cfg, json!({ "chain": report })),
        Format::Csv => {
            let mut s = csv_header("optimal-error", seed, &p, cfg);
            s.push_str("name,value,std_error\n");
            let o = &report.optimal;
            let _ = writeln!(s, "optimal_inner,{},{}", num(o.at_inner.mean), num(o.at_inner.std_error));
            let _ =
                writeln!(s, "optimal,{},{}", num(o.at_double_inner.mean), num(o.at_double_inner.std_error));
            let _ =
                writeln!(s, "two_point,{},{}", num(report.two_point.mean), num(report.two_point.std_error));
            let _ = writeln!(s, "log10_lower_bound,{},", num(report.lower_bound.log10_bound));
            s
        }
    })
}

pub fn cmd_verify(cfg: &Config, seed: u64, format: Format) -> Result<Output> {
    let mut keys = vec!["suites", "grid_points", "bridge_samples", "sine_pairs", "sine_grid"];
    keys.extend(CHAIN_KEYS);
    allow(cfg, "verify", &keys)?;
    let coeffs = coefficients(cfg)?;
    let p = *coeffs.params();
    let d = VerifyOptions::default();
    let opts = VerifyOptions {
        seed,
        grid_points: cfg.get_or("grid_points", d.grid_points)?,
        bridge_samples: cfg.get_or("bridge_samples", d.bridge_samples)?,
        sine_pairs: cfg.get_or("sine_pairs", d.sine_pairs)?,
        sine_grid: cfg.get_or("sine_grid", d.sine_grid)?,
        chain: chain_config(cfg)?,
    };
    let suites: Vec<String> =
        cfg.list("suites")?.unwrap_or_else(|| SUITES.iter().map(|s| s.to_string()).collect());
    for s in &suites {
        if !SUITES.contains(&s.as_str()) {
            return Err(Error::UnknownSuite(s.clone()));
        }
    }
    let reports = suites.iter().map(|s| run_suite(s, &coeffs, &opts)).collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    let text = match format {
        Format::Json => json_report("verify", seed, &p, cfg, json!({ "passed": passed, "suites": reports })),
        Format::Csv => {
            let mut s = csv_header("verify", seed, &p, cfg);
            s.push_str("suite,assertion,passed,measured,threshold,margin\n");
            for r in &reports {
                for a in &r.assertions {
                    let _ = writeln!(
                        s,
                        "{},\"{}\",{},{},{},{}",
                        r.suite,
                        a.name,
                        a.passed,
                        num(a.measured),
                        num(a.threshold),
                        num(a.margin)
                    );
                }
            }
            s
        }
    };
    Ok(Output { text, passed })
}
