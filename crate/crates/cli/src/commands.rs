use std::fmt::Write as _;
use std::fmt;

use anyhow::Result;
use serde::Serialize;
use serde_json::json;

use sirlab::dynamics::{
    detect_period, find_cycle_births, linspace, lyapunov, scan, ScanOptions, DEFAULT_KEEP,
    DEFAULT_MAX_PERIOD, DEFAULT_TRANSIENT, MIN_LYAPUNOV_STEPS,
};
use sirlab::equilibria::{
    classify_boundary, disease_free, endemic, period2_branch, thresholds, BoundaryTag, Equilibrium,
    Tolerances,
};
use sirlab::map::{scale_params, step_full, FullState, ParamName, ESCAPE_BOUND};
use sirlab::normal_forms::{flip_coefficient, ns_coefficient, NormalFormData};
use sirlab::positivity::{applicable_region, invariance_probe};
use sirlab::{step, Error, ModelParams, State};

use crate::config::{ConfigError, RunConfig};

/// Divergence of a simulated orbit (exit code 3).
#[derive(Debug)]
pub struct Diverged(pub String);

impl fmt::Display for Diverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Diverged {}

/// Sorts library errors into the exit-code classes.
fn lift(e: Error) -> anyhow::Error {
    match e {
        Error::InvalidParameter(_) | Error::InvalidArgument(_) => ConfigError(e.to_string()).into(),
        Error::Escaped { .. } | Error::Pole { .. } => Diverged(e.to_string()).into(),
        other => other.into(),
    }
}

/// What a command produced: the primary artifact and an optional summary
/// for stderr.
pub struct Output {
    pub body: String,
    pub summary: Option<String>,
    pub diverged: Option<String>,
}

impl Output {
    fn plain(body: String) -> Self {
        Self { body, summary: None, diverged: None }
    }
}

/// Floats in CSV files: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_text(v: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn simulate(cfg: &RunConfig) -> Result<Output> {
    let transient: usize = cfg.get_or("transient", 0)?;
    let steps: usize = cfg.get_or("steps", 1000)?;
    if steps == 0 {
        return Err(ConfigError("steps must be positive".into()).into());
    }
    if cfg.is_unscaled() {
        return simulate_unscaled(cfg, transient, steps);
    }
    let p = cfg.params()?;
    let x0 = cfg.initial()?;

    let mut body = String::from("n,S,I\n");
    let mut kept = Vec::with_capacity(steps);
    let mut x = x0;
    let mut diverged = None;
    for n in 0..transient + steps {
        if n >= transient {
            writeln!(body, "{n},{},{}", num(x.s), num(x.i))?;
            kept.push(x);
        }
        if n + 1 == transient + steps {
            break;
        }
        match step(&p, x) {
            Ok(y) if y.l1_norm() <= ESCAPE_BOUND => x = y,
            Ok(y) => {
                diverged = Some(format!("orbit escaped at step {}: |x| = {:e}", n + 1, y.l1_norm()));
                break;
            }
            Err(e) => {
                diverged = Some(format!("orbit escaped at step {}: {e}", n + 1));
                break;
            }
        }
    }
    let summary = match &diverged {
        Some(msg) => json!({ "escaped": msg, "period": null, "lambda_max": null }),
        None => {
            let period = detect_period(&kept, DEFAULT_MAX_PERIOD);
            let lam = lyapunov(&p, kept[0], steps.max(MIN_LYAPUNOV_STEPS), 0).ok().map(|l| l[0]);
            json!({ "escaped": null, "period": period, "lambda_max": lam })
        }
    };
    Ok(Output { body, summary: Some(serde_json::to_string(&summary)?), diverged })
}

fn simulate_unscaled(cfg: &RunConfig, transient: usize, steps: usize) -> Result<Output> {
    let u = cfg.unscaled()?;
    let (p, alpha) = scale_params(&u).map_err(lift)?;
    let x0 = FullState::new(cfg.get_or("s0", 0.5)?, cfg.get_or("i0", 0.1)?, cfg.get_or("r0", 0.0)?);

    let mut body = String::from("n,S,I,R\n");
    let mut kept = Vec::with_capacity(steps);
    let mut x = x0;
    let mut diverged = None;
    for n in 0..transient + steps {
        if n >= transient {
            writeln!(body, "{n},{},{},{}", num(x.s), num(x.i), num(x.r))?;
            kept.push(State::new(x.s, x.i));
        }
        if n + 1 == transient + steps {
            break;
        }
        match step_full(&u, x) {
            Ok(y) if (y.s.abs() + y.i.abs()) / alpha <= ESCAPE_BOUND => x = y,
            _ => {
                diverged = Some(format!("orbit escaped at step {}", n + 1));
                break;
            }
        }
    }
    let summary = match &diverged {
        Some(msg) => json!({ "escaped": msg, "period": null, "lambda_max": null }),
        None => {
            let start = State::new(kept[0].s / alpha, kept[0].i / alpha);
            let period = detect_period(&kept, DEFAULT_MAX_PERIOD);
            let lam = lyapunov(&p, start, steps.max(MIN_LYAPUNOV_STEPS), 0).ok().map(|l| l[0]);
            json!({
                "escaped": null,
                "period": period,
                "lambda_max": lam,
                "scaled": { "r": p.r(), "beta": p.beta(), "a": p.a(), "K": p.k(), "alpha": alpha },
            })
        }
    };
    Ok(Output { body, summary: Some(serde_json::to_string(&summary)?), diverged })
}

#[derive(Serialize)]
struct CoefficientEntry {
    at: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<sirlab::normal_forms::CoefficientKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficient: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    emerging: Option<sirlab::normal_forms::Emerging>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl CoefficientEntry {
    fn new(at: &'static str, r: sirlab::Result<NormalFormData>) -> Self {
        match r {
            Ok(d) => Self {
                at,
                kind: Some(d.kind),
                coefficient: Some(d.coefficient),
                emerging: Some(d.emerging),
                error: None,
            },
            Err(e) => Self { at, kind: None, coefficient: None, emerging: None, error: Some(e.to_string()) },
        }
    }
}

pub fn analyze(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params()?;
    let curve_points: usize = cfg.get_or("curve_points", 0)?;
    let tol = Tolerances::default();
    let (r, a, k) = (p.r(), p.a(), p.k());

    let th = if r > 1.0 { Some(thresholds(r, a, k).map_err(lift)?) } else { None };
    let e0 = disease_free(&p, &tol).map_err(lift)?;
    let e1 = if r > 1.0 { endemic(&p, &tol).map_err(lift)? } else { None };
    let e0_tag = classify_boundary(&p, Equilibrium::E0, &tol).map_err(lift)?;
    let e1_tag = if e1.is_some() { classify_boundary(&p, Equilibrium::E1, &tol).map_err(lift)? } else { None };

    let mut coefficients = Vec::new();
    if matches!(e0_tag, Some(BoundaryTag::Flip)) {
        coefficients.push(CoefficientEntry::new("E0", flip_coefficient(&p, &e0, &tol)));
    }
    if let Some(e1) = &e1 {
        match e1_tag {
            Some(BoundaryTag::NeimarkSacker) => {
                coefficients.push(CoefficientEntry::new("E1", ns_coefficient(&p, &tol)));
            }
            Some(BoundaryTag::Flip) => {
                coefficients.push(CoefficientEntry::new("E1", flip_coefficient(&p, e1, &tol)));
            }
            _ => {}
        }
    }
    let branch = if r > 3.0 { period2_branch(&p, &tol).ok() } else { None };
    if let Some([b, _]) = &branch {
        if b.eigen.distance_to(-1.0) <= tol.hyperbolic {
            coefficients.push(CoefficientEntry::new("period2", flip_coefficient(&p, b, &tol)));
        }
    }

    let curves: Vec<_> = match (&th, curve_points) {
        (Some(t), n) if n > 0 => (1..=n)
            .map(|i| {
                let rr = 1.0 + (t.r_max - 1.0) * i as f64 / n as f64;
                let ti = thresholds(rr, a, k).map_err(lift)?;
                Ok(json!({ "r": rr, "beta0": ti.beta0, "beta1": ti.beta1, "beta2": ti.beta2 }))
            })
            .collect::<Result<_>>()?,
        (None, n) if n > 0 => {
            return Err(ConfigError("threshold curves need r > 1".into()).into());
        }
        _ => Vec::new(),
    };

    let report = json!({
        "parameters": { "r": r, "beta": p.beta(), "a": a, "K": k },
        "thresholds": th,
        "disease_free": { "report": e0, "boundary": e0_tag },
        "endemic": e1.map(|rep| json!({ "report": rep, "boundary": e1_tag })),
        "period2_branch": branch,
        "coefficients": coefficients,
        "curves": curves,
    });
    Ok(Output::plain(json_text(&report)?))
}

fn scan_axis(cfg: &RunConfig) -> Result<(ParamName, [f64; 2], usize)> {
    let name: ParamName = cfg
        .raw("param")
        .unwrap_or("r")
        .parse()
        .map_err(|e: Error| ConfigError(e.to_string()))?;
    let range = cfg.range(None)?;
    let points: usize = cfg.get_or("points", 200)?;
    if points < 2 {
        return Err(ConfigError("points must be at least 2".into()).into());
    }
    Ok((name, range, points))
}

pub fn scan_cmd(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params()?;
    let (name, range, points) = scan_axis(cfg)?;
    let opts = ScanOptions {
        transient: cfg.get_or("transient", DEFAULT_TRANSIENT)?,
        keep: cfg.get_or("steps", DEFAULT_KEEP)?,
    };
    if opts.keep == 0 {
        return Err(ConfigError("steps must be positive".into()).into());
    }
    let res = scan(&p, name, range, points, cfg.initial()?, &opts).map_err(lift)?;

    let k = opts.keep;
    let mut body = String::from("param");
    for j in 1..=k {
        write!(body, ",S_sample_{j}")?;
    }
    for j in 1..=k {
        write!(body, ",I_sample_{j}")?;
    }
    body.push_str(",lyap_max\n");
    for row in &res.rows {
        body.push_str(&num(row.value));
        for j in 0..k {
            write!(body, ",{}", num(row.samples.get(j).map_or(f64::NAN, |x| x.s)))?;
        }
        for j in 0..k {
            write!(body, ",{}", num(row.samples.get(j).map_or(f64::NAN, |x| x.i)))?;
        }
        writeln!(body, ",{}", num(row.lyapunov_max.unwrap_or(f64::NAN)))?;
    }
    let escaped = res.rows.iter().filter(|r| r.escaped.is_some()).count();
    let summary = json!({ "parameter": name, "rows": res.rows.len(), "escaped_rows": escaped });
    Ok(Output { body, summary: Some(serde_json::to_string(&summary)?), diverged: None })
}

pub fn cycles(cfg: &RunConfig) -> Result<Output> {
    let n: usize = cfg.require("n")?;
    let window = cfg.range(Some([3.0, 4.0]))?;
    let births = find_cycle_births(n, window).map_err(lift)?;
    let mut body = String::from("n,r,x\n");
    for (r, x) in births.r_values.iter().zip(&births.points) {
        writeln!(body, "{n},{},{}", num(*r), num(*x))?;
    }
    Ok(Output::plain(body))
}

pub fn regions(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params()?;
    let samples: usize = cfg.get_or("samples", 1000)?;
    let steps: usize = cfg.get_or("steps", 1000)?;
    let seed: u64 = cfg.get_or("seed", 0)?;
    let report = match applicable_region(&p) {
        None => json!({ "parameters": params_json(&p), "region": null }),
        Some(region) => {
            let probe = invariance_probe(&p, samples, steps, seed).map_err(lift)?;
            json!({
                "parameters": params_json(&p),
                "region": region,
                "vertices": region.vertices(),
                "probe": {
                    "samples": probe.samples,
                    "steps": probe.steps,
                    "seed": probe.seed,
                    "escapes": probe.escapes.len(),
                    "first_escapes": &probe.escapes[..probe.escapes.len().min(10)],
                },
            })
        }
    };
    Ok(Output::plain(json_text(&report)?))
}

fn params_json(p: &ModelParams) -> serde_json::Value {
    json!({ "r": p.r(), "beta": p.beta(), "a": p.a(), "K": p.k() })
}

/// Exponent table: one row per parameter value, or a single row when no
/// sweep range is configured.
pub fn lyapunov_cmd(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params()?;
    let x0 = cfg.initial()?;
    let transient: usize = cfg.get_or("transient", DEFAULT_TRANSIENT)?;
    let steps: usize = cfg.get_or("steps", 10_000)?;
    if steps == 0 {
        return Err(ConfigError("steps must be positive".into()).into());
    }
    let (name, values) = if cfg.raw("lo").is_some() || cfg.raw("hi").is_some() {
        let (name, range, points) = scan_axis(cfg)?;
        (name, linspace(range[0], range[1], points))
    } else {
        let name: ParamName = cfg.raw("param").unwrap_or("r").parse().map_err(lift)?;
        (name, vec![p.get(name)])
    };
    let mut body = String::from("param,lambda_max,lambda_min\n");
    for v in values {
        let q = p.with(name, v).map_err(lift)?;
        let l = match lyapunov(&q, x0, steps, transient) {
            Ok(l) => l,
            Err(Error::Escaped { .. } | Error::Pole { .. }) => [f64::NAN; 2],
            Err(e) => return Err(lift(e)),
        };
        writeln!(body, "{},{},{}", num(v), num(l[0]), num(l[1]))?;
    }
    Ok(Output::plain(body))
}
