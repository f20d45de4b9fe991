//! Regions of the non-negative quadrant that are claimed to be forward
//! invariant, and a Monte Carlo probe of that claim.
//!
//! `u* = (r - 1 + K)^2 / (4 K r)` bounds `S + I` along orbits that start
//! below it. The regions are the triangle `x + y <= u*` (`Omega1`) and the
//! sets below both the line `x + y = u*` and the nullcline
//! `y = (r / beta)(1 - x)(1 + a x)` on `0 <= x <= 1` (`Omega2`, `Omega3`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{step, ModelParams, State};

/// Outward tolerance of the membership test.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    Omega1,
    Omega2,
    Omega3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: RegionKind,
    pub u_star: f64,
    /// `r / beta`, the nullcline scale.
    pub v: f64,
    pub a: f64,
    /// Where the line `x + y = u*` meets the nullcline: one point for
    /// `Omega2`, two for `Omega3`, none for `Omega1`.
    pub crossings: Vec<f64>,
}

pub fn u_star(r: f64, k: f64) -> f64 {
    (r - 1.0 + k).powi(2) / (4.0 * k * r)
}

/// `r S (1 - S) - beta S I / (1 + a S)`, the susceptible update.
pub fn f(p: &ModelParams, x: f64, y: f64) -> f64 {
    p.r() * x * (1.0 - x) - p.beta() * x * y / (1.0 + p.a() * x)
}

impl RegionSpec {
    pub fn nullcline(&self, x: f64) -> f64 {
        self.v * (1.0 - x) * (1.0 + self.a * x)
    }

    /// Corners and crossings of the boundary, listed counter-clockwise from
    /// the origin.
    pub fn vertices(&self) -> Vec<State> {
        match self.kind {
            RegionKind::Omega1 => vec![
                State::new(0.0, 0.0),
                State::new(self.u_star, 0.0),
                State::new(0.0, self.u_star),
            ],
            RegionKind::Omega2 | RegionKind::Omega3 => {
                let mut out = vec![State::new(0.0, 0.0), State::new(1.0, 0.0)];
                out.extend(
                    self.crossings.iter().rev().map(|&x| State::new(x, self.u_star - x)),
                );
                out.push(State::new(0.0, self.u_star.min(self.nullcline(0.0))));
                out
            }
        }
    }
}

/// The constraint a point violates, checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    NegativeS,
    NegativeI,
    SusceptibleAboveOne,
    AboveLine,
    AboveNullcline,
    NotFinite,
}

pub fn violated(region: &RegionSpec, x: State) -> Option<Constraint> {
    let t = BOUNDARY_TOL;
    if !(x.s.is_finite() && x.i.is_finite()) {
        return Some(Constraint::NotFinite);
    }
    if x.s < -t {
        return Some(Constraint::NegativeS);
    }
    if x.i < -t {
        return Some(Constraint::NegativeI);
    }
    if x.s + x.i > region.u_star + t {
        return Some(Constraint::AboveLine);
    }
    if region.kind != RegionKind::Omega1 {
        if x.s > 1.0 + t {
            return Some(Constraint::SusceptibleAboveOne);
        }
        if x.i > region.nullcline(x.s) + t {
            return Some(Constraint::AboveNullcline);
        }
    }
    None
}

pub fn contains(region: &RegionSpec, x: State) -> bool {
    violated(region, x).is_none()
}

/// Positive root of `v a x^2 - (1 + v (a - 1)) x + (u* - v) = 0`, i.e. where
/// `x + v (1 - x)(1 + a x) = u*`.
pub fn omega2_crossing(u_star: f64, v: f64, a: f64) -> Option<f64> {
    let (qa, qb, qc) = (v * a, -(1.0 + v * (a - 1.0)), u_star - v);
    if qa == 0.0 {
        return (qb != 0.0).then(|| -qc / qb).filter(|&x| x > 0.0);
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let t = -0.5 * (qb + qb.signum() * disc.sqrt());
    let mut roots = [t / qa, if t != 0.0 { qc / t } else { 0.0 }];
    roots.sort_by(f64::total_cmp);
    let positive: Vec<f64> = roots.into_iter().filter(|&x| x > 0.0).collect();
    match positive.as_slice() {
        [] => None,
        [x] => Some(*x),
        _ => positive.iter().copied().find(|x| *x <= 1.0).or(Some(positive[0])),
    }
}

/// Both crossings for `a = 1`: `(1 -+ sqrt(4 v^2 - 4 u* v + 1)) / (2 v)`.
pub fn omega3_crossings(u_star: f64, v: f64) -> Option<[f64; 2]> {
    let delta = 4.0 * v * v - 4.0 * u_star * v + 1.0;
    (delta >= 0.0).then(|| {
        let sd = delta.sqrt();
        [(1.0 - sd) / (2.0 * v), (1.0 + sd) / (2.0 * v)]
    })
}

/// `((sqrt(u* + 1) + sqrt(u* - 1)) / 2)^2`
pub fn v_plus(u_star: f64) -> f64 {
    (((u_star + 1.0).sqrt() + (u_star - 1.0).sqrt()) / 2.0).powi(2)
}

/// The first region whose sufficient conditions hold, cases tried in order.
pub fn applicable_region(p: &ModelParams) -> Option<RegionSpec> {
    let (r, beta, a, k) = (p.r(), p.beta(), p.a(), p.k());
    let us = u_star(r, k);
    let v = r / beta;
    let sk = k.sqrt();
    let lo = sk + 1.0;
    let hi = lo * lo;

    if lo <= r && r <= hi && (beta < r || (r < beta && beta < r / us)) {
        return Some(RegionSpec { kind: RegionKind::Omega1, u_star: us, v, a, crossings: vec![] });
    }
    if hi < r && r <= 4.0 && 2.0 * us - 1.0 > 0.0 && beta < r / (2.0 * us - 1.0) {
        let crossings = omega2_crossing(us, v, a).into_iter().collect();
        return Some(RegionSpec { kind: RegionKind::Omega2, u_star: us, v, a, crossings });
    }
    let case3 = (us >= 2.0 && beta < r) || (us > 1.25 && us < 2.0 && beta < r * v_plus(us));
    if a == 1.0 && case3 {
        let crossings = omega3_crossings(us, v).map(|c| c.to_vec()).unwrap_or_default();
        return Some(RegionSpec { kind: RegionKind::Omega3, u_star: us, v, a, crossings });
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeEvent {
    pub start: State,
    /// Number of map applications after which the orbit left the region.
    pub step: usize,
    pub state: State,
    pub constraint: Constraint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub region: RegionSpec,
    pub samples: usize,
    pub steps: usize,
    pub seed: u64,
    /// First exit of every escaping start, in sampling order.
    pub escapes: Vec<EscapeEvent>,
}

/// Draws `samples` points uniformly from the region by rejection sampling.
pub fn sample_region(region: &RegionSpec, samples: usize, seed: u64) -> Result<Vec<State>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_max = match region.kind {
        RegionKind::Omega1 => region.u_star,
        _ => 1.0,
    };
    let y_max = region.u_star.max(0.0);
    let budget = samples.saturating_mul(100_000).max(100_000);
    let mut out = Vec::with_capacity(samples);
    let mut tries = 0usize;
    while out.len() < samples {
        if tries >= budget {
            return Err(Error::InvalidArgument(
                "region too thin for rejection sampling".into(),
            ));
        }
        tries += 1;
        let x = State::new(rng.gen::<f64>() * x_max, rng.gen::<f64>() * y_max);
        if contains(region, x) {
            out.push(x);
        }
    }
    Ok(out)
}

fn first_exit(p: &ModelParams, region: &RegionSpec, start: State, steps: usize) -> Option<EscapeEvent> {
    let mut x = start;
    for k in 1..=steps {
        x = match step(p, x) {
            Ok(y) => y,
            Err(_) => State::new(f64::NAN, f64::NAN),
        };
        if let Some(constraint) = violated(region, x) {
            return Some(EscapeEvent { start, step: k, state: x, constraint });
        }
    }
    None
}

/// Iterates region-uniform starts and reports every start that leaves the
/// region. The result does not depend on the thread count.
pub fn invariance_probe(p: &ModelParams, samples: usize, steps: usize, seed: u64) -> Result<ProbeReport> {
    let region = applicable_region(p).ok_or(Error::NoApplicableRegion)?;
    probe_region(p, &region, samples, steps, seed)
}

pub fn probe_region(
    p: &ModelParams,
    region: &RegionSpec,
    samples: usize,
    steps: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let starts = sample_region(region, samples, seed)?;
    let escapes = starts
        .par_iter()
        .filter_map(|&x| first_exit(p, region, x, steps))
        .collect();
    Ok(ProbeReport { region: region.clone(), samples, steps, seed, escapes })
}
