//! Orbit diagnostics: Lyapunov exponents, period detection, parameter scans,
//! tangent births of cycles on the disease-free axis, the Sharkovskii order
//! and the reproduction-number candidates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{checked_step, iterate, jacobian, step, ModelParams, ParamName, State};

pub const DEFAULT_TRANSIENT: usize = 10_000;
pub const DEFAULT_KEEP: usize = 1_000;
pub const DEFAULT_MAX_PERIOD: usize = 64;
pub const CYCLE_TOL: f64 = 1e-7;

/// Minimum orbit length accepted by [`lyapunov`].
pub const MIN_LYAPUNOV_STEPS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub samples: Vec<State>,
    pub period: Option<usize>,
    /// `[lambda_max, lambda_min]`, absent when the orbit escaped.
    pub lyapunov: Option<[f64; 2]>,
    pub escaped: Option<usize>,
}

/// Iterates, detects the period and estimates both exponents over the kept
/// window. Escape is reported in the summary rather than as an error.
pub fn summarize(
    p: &ModelParams,
    x0: State,
    transient: usize,
    keep: usize,
    max_period: usize,
) -> Result<OrbitSummary> {
    match iterate(p, x0, transient, keep) {
        Ok(samples) => {
            let period = detect_period(&samples, max_period);
            let lyapunov = match samples.first() {
                Some(&start) => Some(lyapunov(p, start, keep.max(MIN_LYAPUNOV_STEPS), 0)?),
                None => None,
            };
            Ok(OrbitSummary { samples, period, lyapunov, escaped: None })
        }
        Err(Error::Escaped { step, .. }) => {
            Ok(OrbitSummary { samples: Vec::new(), period: None, lyapunov: None, escaped: Some(step) })
        }
        Err(e) => Err(e),
    }
}

/// Both Lyapunov exponents, `lambda_max` first, from Gram-Schmidt
/// re-orthonormalisation of the tangent map along `n` steps after `transient`.
pub fn lyapunov(p: &ModelParams, x0: State, n: usize, transient: usize) -> Result<[f64; 2]> {
    if n < MIN_LYAPUNOV_STEPS {
        return Err(Error::InvalidArgument(format!(
            "lyapunov needs at least {MIN_LYAPUNOV_STEPS} steps, got {n}"
        )));
    }
    let mut x = x0;
    for k in 1..=transient {
        x = checked_step(p, x, k)?;
    }
    let (mut e1, mut e2) = ([1.0, 0.0], [0.0, 1.0]);
    let (mut sum1, mut sum2) = (0.0, 0.0);
    for k in 1..=n {
        let j = jacobian(p, x)?;
        let v1 = j.apply(e1);
        let v2 = j.apply(e2);
        let r11 = v1[0].hypot(v1[1]);
        let u1 = [v1[0] / r11, v1[1] / r11];
        let proj = u1[0] * v2[0] + u1[1] * v2[1];
        let w = [v2[0] - proj * u1[0], v2[1] - proj * u1[1]];
        let r22 = w[0].hypot(w[1]);
        sum1 += r11.ln();
        sum2 += r22.ln();
        e1 = u1;
        e2 = [w[0] / r22, w[1] / r22];
        if !(r22 > 0.0) {
            // Rank collapse: keep a valid orthonormal frame.
            e2 = [-u1[1], u1[0]];
        }
        x = checked_step(p, x, transient + k)?;
    }
    let (l1, l2) = (sum1 / n as f64, sum2 / n as f64);
    Ok(if l1 >= l2 { [l1, l2] } else { [l2, l1] })
}

/// Smallest `p <= max_period` with `|x_k - x_{k+p}|_inf <= CYCLE_TOL` over the
/// whole window. Periods longer than a quarter of the window are not tested.
pub fn detect_period(orbit: &[State], max_period: usize) -> Option<usize> {
    detect_period_with_tol(orbit, max_period, CYCLE_TOL)
}

pub fn detect_period_with_tol(orbit: &[State], max_period: usize, tol: f64) -> Option<usize> {
    let max_p = max_period.min(orbit.len() / 4);
    (1..=max_p).find(|&per| {
        orbit
            .iter()
            .zip(&orbit[per..])
            .all(|(a, b)| a.dist_inf(b) <= tol)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub transient: usize,
    pub keep: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { transient: DEFAULT_TRANSIENT, keep: DEFAULT_KEEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub value: f64,
    pub samples: Vec<State>,
    pub lyapunov_max: Option<f64>,
    /// Escape step of the cold-start attempt, when both starts escaped.
    pub escaped: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub parameter: ParamName,
    pub rows: Vec<ScanRow>,
}

/// Evenly spaced values `lo..=hi` in `steps` points.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| if k + 1 == steps { hi } else { lo + (hi - lo) * k as f64 / (steps - 1) as f64 })
        .collect()
}

/// Bifurcation scan over one parameter. Each row starts from the last sample
/// of the previous row; `x0` is used for the first row, after an escape, and
/// whenever the carried state has lost its infected component.
pub fn scan(
    p: &ModelParams,
    parameter: ParamName,
    range: [f64; 2],
    steps: usize,
    x0: State,
    opts: &ScanOptions,
) -> Result<ScanResult> {
    let [lo, hi] = range;
    if steps < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "scan needs lo < hi and at least two steps, got [{lo}, {hi}] with {steps}"
        )));
    }
    if opts.keep == 0 {
        return Err(Error::InvalidArgument("scan needs keep >= 1".into()));
    }
    let values = linspace(lo, hi, steps);
    let params = values
        .iter()
        .map(|&v| p.with(parameter, v))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(steps);
    let mut warm: Option<State> = None;
    for (&value, q) in values.iter().zip(&params) {
        let attempt = match warm {
            Some(w) if !(w.i == 0.0 && x0.i != 0.0) => iterate(q, w, opts.transient, opts.keep),
            _ => iterate(q, x0, opts.transient, opts.keep),
        };
        let attempt = match attempt {
            Err(Error::Escaped { .. }) if warm.is_some() => iterate(q, x0, opts.transient, opts.keep),
            other => other,
        };
        match attempt {
            Ok(samples) => {
                warm = samples.last().copied();
                rows.push(ScanRow { value, samples, lyapunov_max: None, escaped: None });
            }
            Err(Error::Escaped { step, .. }) => {
                warm = None;
                rows.push(ScanRow { value, samples: Vec::new(), lyapunov_max: None, escaped: Some(step) });
            }
            Err(e) => return Err(e),
        }
    }

    let n = opts.keep.max(MIN_LYAPUNOV_STEPS);
    let exponents: Vec<Option<f64>> = rows
        .par_iter()
        .zip(params.par_iter())
        .map(|(row, q)| {
            row.samples
                .first()
                .and_then(|&start| lyapunov(q, start, n, 0).ok())
                .map(|l| l[0])
        })
        .collect();
    for (row, l) in rows.iter_mut().zip(exponents) {
        row.lyapunov_max = l;
    }
    Ok(ScanResult { parameter, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleBirth {
    pub n: usize,
    /// Sorted parameter values where a period-`n` orbit appears.
    pub r_values: Vec<f64>,
    /// One point of the newborn orbit for each entry of `r_values`.
    pub points: Vec<f64>,
}

/// Newton grid resolution per axis.
pub const CYCLE_SEED_GRID: usize = 400;
const CYCLE_RESIDUAL: f64 = 1e-10;
const CYCLE_MERGE: f64 = 1e-6;

/// `(phi^n(x) - x, (phi^n)'(x) - 1)` and its Jacobian in `(x, r)` for the
/// logistic map `phi(x) = r x (1 - x)`.
fn tangent_system(n: usize, x0: f64, r: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    // x: iterate, d: d/dx, e: d/dr, dd: d2/dx2, de: d2/dxdr
    let (mut x, mut d, mut e, mut dd, mut de) = (x0, 1.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let fx = r * (1.0 - 2.0 * x);
        let fr = x * (1.0 - x);
        let fxx = -2.0 * r;
        let fxr = 1.0 - 2.0 * x;
        let nd = fx * d;
        let ne = fx * e + fr;
        let ndd = fxx * d * d + fx * dd;
        let nde = (fxx * e + fxr) * d + fx * de;
        x = r * x * (1.0 - x);
        d = nd;
        e = ne;
        dd = ndd;
        de = nde;
    }
    ([x - x0, d - 1.0], [[d - 1.0, e], [dd, de]])
}

fn newton_tangent(n: usize, mut x: f64, mut r: f64, window: [f64; 2]) -> Option<(f64, f64)> {
    for _ in 0..60 {
        let (f, j) = tangent_system(n, x, r);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !det.is_finite() || det == 0.0 {
            return None;
        }
        let dx = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dr = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        x -= dx;
        r -= dr;
        if !(x.is_finite() && r.is_finite()) || !(0.0..=1.0).contains(&x) || !(0.0..=4.5).contains(&r) {
            return None;
        }
        if dx.abs() < 1e-15 && dr.abs() < 1e-15 {
            break;
        }
    }
    let (f, _) = tangent_system(n, x, r);
    let ok = f[0].abs().max(f[1].abs()) <= CYCLE_RESIDUAL
        && r >= window[0]
        && r <= window[1]
        && x > 0.0
        && x < 1.0;
    ok.then_some((x, r))
}

fn logistic_minimal_period(x: f64, r: f64, n: usize) -> usize {
    let mut y = x;
    for m in 1..=n {
        y = r * y * (1.0 - y);
        if n.is_multiple_of(m) && (y - x).abs() <= 1e-4 {
            return m;
        }
    }
    n
}

/// Parameter values in `window` where the logistic map on the `I = 0` axis
/// acquires a period-`n` orbit through a tangent bifurcation.
pub fn find_cycle_births(n: usize, window: [f64; 2]) -> Result<CycleBirth> {
    if !(3..=8).contains(&n) {
        return Err(Error::InvalidArgument(format!("cycle period must be in 3..=8, got {n}")));
    }
    let [lo, hi] = window;
    if !(lo >= 3.0 && lo < hi && hi <= 4.0) {
        return Err(Error::InvalidArgument(format!(
            "cycle window must satisfy 3 <= lo < hi <= 4, got [{lo}, {hi}]"
        )));
    }
    let g = CYCLE_SEED_GRID;
    let seeds: Vec<(f64, f64)> = (0..g)
        .flat_map(|ix| {
            (0..g).map(move |ir| {
                let x = (ix as f64 + 0.5) / g as f64;
                let r = lo + (hi - lo) * ir as f64 / (g - 1) as f64;
                (x, r)
            })
        })
        .collect();
    let mut roots: Vec<(f64, f64)> = seeds
        .par_iter()
        .filter_map(|&(x, r)| newton_tangent(n, x, r, window))
        .filter(|&(x, r)| logistic_minimal_period(x, r, n) == n)
        .collect();
    roots.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let mut r_values: Vec<f64> = Vec::new();
    let mut points = Vec::new();
    for (x, r) in roots {
        if r_values.last().is_none_or(|&last| r - last > CYCLE_MERGE) {
            r_values.push(r);
            points.push(x);
        }
    }
    Ok(CycleBirth { n, r_values, points })
}

/// Splits `k = 2^s q` with `q` odd.
fn two_adic(k: u64) -> (u32, u64) {
    let s = k.trailing_zeros();
    (s, k >> s)
}

/// True when `m` comes strictly before `n` in the Sharkovskii order
/// `3, 5, 7, ..., 2*3, 2*5, ..., 4*3, ..., 8, 4, 2, 1`.
pub fn sharkovskii_precedes(m: u64, n: u64) -> bool {
    if m == 0 || n == 0 || m == n {
        return false;
    }
    let (sm, qm) = two_adic(m);
    let (sn, qn) = two_adic(n);
    match (qm > 1, qn > 1) {
        (true, true) => sm < sn || (sm == sn && qm < qn),
        (true, false) => true,
        (false, true) => false,
        (false, false) => sm > sn,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproductionNumbers {
    /// `beta (r - 1) / (K (r + a (r - 1)))`; below one exactly when `beta < beta0`.
    pub r_a: f64,
    /// `beta / ((a + 1) K)`.
    pub r_b: f64,
}

pub fn reproduction_candidates(p: &ModelParams) -> Result<ReproductionNumbers> {
    p.require_r_above_one()?;
    let (r, beta, a, k) = (p.r(), p.beta(), p.a(), p.k());
    Ok(ReproductionNumbers {
        r_a: beta * (r - 1.0) / (k * (r + a * (r - 1.0))),
        r_b: beta / ((a + 1.0) * k),
    })
}

/// `h2(x) = beta x / (1 + a x) + 1 - K`, the growth factor bounding `I`.
pub fn h2(p: &ModelParams, x: f64) -> f64 {
    p.beta() * x / (1.0 + p.a() * x) + 1.0 - p.k()
}

/// Checks `0 < I_{k+1} < I_k` and `(1-K)^k I0 <= I_k <= gamma2^k I0` along
/// `n` steps, with `gamma2 = beta / (1 + a) + 1 - K`. Requires
/// `beta < (1 + a) K` and `0 < S0 < 1`.
pub fn decay_envelope_check(p: &ModelParams, x0: State, n: usize) -> Result<bool> {
    let (beta, a, k) = (p.beta(), p.a(), p.k());
    if !(beta < (1.0 + a) * k) {
        return Err(Error::InvalidArgument(format!(
            "decay envelope needs beta < (1 + a) K, got beta = {beta}"
        )));
    }
    if !(x0.s > 0.0 && x0.s < 1.0) {
        return Err(Error::InvalidArgument(format!("decay envelope needs 0 < S0 < 1, got {}", x0.s)));
    }
    if x0.i == 0.0 {
        return Ok(true);
    }
    let gamma1 = 1.0 - k;
    let gamma2 = h2(p, 1.0);
    let slack = 1e-12;
    let (mut lower, mut upper) = (x0.i, x0.i);
    let mut x = x0;
    for _ in 0..n {
        let y = step(p, x)?;
        lower *= gamma1;
        upper *= gamma2;
        let monotone = y.i > 0.0 && y.i < x.i;
        let inside = y.i >= lower * (1.0 - slack) && y.i <= upper * (1.0 + slack);
        if !(monotone && inside) {
            return Ok(false);
        }
        x = y;
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64, beta: f64, a: f64, k: f64) -> ModelParams {
        ModelParams::new(r, beta, a, k).unwrap()
    }

    #[test]
    fn constant_orbit_has_period_one() {
        let orbit = vec![State::new(0.2, 0.24); 40];
        assert_eq!(detect_period(&orbit, 10), Some(1));
    }

    #[test]
    fn period_is_minimal() {
        let cycle = [0.1, 0.5, 0.7, 0.3];
        let orbit: Vec<State> = (0..64).map(|k| State::new(cycle[k % 4], 0.0)).collect();
        assert_eq!(detect_period(&orbit, 16), Some(4));
        assert_eq!(detect_period(&orbit, 3), None);
    }

    #[test]
    fn logistic_exponent_at_four() {
        let l = lyapunov(&p(4.0, 0.5, 1.0, 0.5), State::new(0.3, 0.0), 200_000, 100).unwrap();
        assert!((l[0] - 2f64.ln()).abs() < 0.02, "{l:?}");
        assert!(l[0] >= l[1]);
    }

    #[test]
    fn lyapunov_rejects_short_runs() {
        assert!(lyapunov(&p(2.0, 1.0, 1.0, 0.5), State::new(0.3, 0.1), 10, 0).is_err());
    }

    #[test]
    fn tangent_system_residual_at_three_cycle() {
        let r = 1.0 + 8f64.sqrt();
        let births = find_cycle_births(3, [3.5, 4.0]).unwrap();
        assert_eq!(births.r_values.len(), 1);
        assert!((births.r_values[0] - r).abs() < 1e-9);
        let (f, _) = tangent_system(3, births.points[0], births.r_values[0]);
        assert!(f[0].abs() < 1e-10 && f[1].abs() < 1e-10);
    }

    #[test]
    fn cycle_birth_validation() {
        assert!(find_cycle_births(2, [3.5, 4.0]).is_err());
        assert!(find_cycle_births(9, [3.5, 4.0]).is_err());
        assert!(find_cycle_births(5, [2.5, 4.0]).is_err());
        assert!(find_cycle_births(5, [3.5, 4.1]).is_err());
    }

    #[test]
    fn sharkovskii_examples() {
        for k in 1..200 {
            assert_eq!(sharkovskii_precedes(3, k), k != 3);
        }
        assert!(!sharkovskii_precedes(7, 7));
        assert!(sharkovskii_precedes(2, 1));
        assert!(!sharkovskii_precedes(1, 2));
        assert!(sharkovskii_precedes(6, 10));
        assert!(sharkovskii_precedes(101, 6));
        assert!(sharkovskii_precedes(12, 64));
        assert!(sharkovskii_precedes(8, 4));
    }

    #[test]
    fn reproduction_examples() {
        let rn = reproduction_candidates(&p(1.25, 3.0, 1.0, 0.5)).unwrap();
        assert!((rn.r_a - 1.0).abs() < 1e-12);
        let rn = reproduction_candidates(&p(2.0, 0.9, 1.0, 0.5)).unwrap();
        assert!((rn.r_b - 0.9).abs() < 1e-12);
        assert!((rn.r_a - 0.6).abs() < 1e-12);
        let rn = reproduction_candidates(&p(2.0, 1.0, 1.0, 0.5)).unwrap();
        assert!((rn.r_b - 1.0).abs() < 1e-12);
        assert!(reproduction_candidates(&p(0.8, 1.0, 1.0, 0.5)).is_err());
    }

    #[test]
    fn decay_envelope_examples() {
        let q = p(2.0, 0.5, 1.0, 0.5);
        assert!(decay_envelope_check(&q, State::new(0.5, 0.3), 200).unwrap());
        assert!(decay_envelope_check(&q, State::new(0.5, 0.0), 200).unwrap());
        assert!(decay_envelope_check(&p(2.0, 1.5, 1.0, 0.5), State::new(0.5, 0.3), 10).is_err());
        assert!(decay_envelope_check(&q, State::new(1.5, 0.3), 10).is_err());
    }

    #[test]
    fn scan_rows_are_sorted_and_sized() {
        let q = p(2.0, 3.0, 1.0, 0.5);
        let opts = ScanOptions { transient: 500, keep: 20 };
        let res = scan(&q, ParamName::R, [1.05, 1.2], 4, State::new(0.5, 0.1), &opts).unwrap();
        assert_eq!(res.rows.len(), 4);
        assert!(res.rows.windows(2).all(|w| w[0].value < w[1].value));
        assert!(res.rows.iter().all(|r| r.samples.len() == 20 && r.lyapunov_max.is_some()));
        assert!(scan(&q, ParamName::R, [1.2, 1.05], 4, State::new(0.5, 0.1), &opts).is_err());
        assert!(scan(&q, ParamName::K, [0.5, 1.5], 4, State::new(0.5, 0.1), &opts).is_err());
    }

    #[test]
    fn scan_records_escapes() {
        let q = p(2.0, 1.0, 1.0, 0.5);
        let opts = ScanOptions { transient: 100, keep: 10 };
        let res = scan(&q, ParamName::R, [5.0, 6.0], 3, State::new(0.5, 0.1), &opts).unwrap();
        assert!(res.rows.iter().all(|r| r.escaped.is_some() && r.samples.is_empty()));
    }
}
