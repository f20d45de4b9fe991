//! The scaled two-dimensional SIR map, the unscaled three-compartment model
//! and their Jacobians.
//!
//! The scaled system is
//!
//! ```text
//! S' = r S (1 - S) - beta S I / (1 + a S)
//! I' = (1 - K) I   + beta S I / (1 + a S)
//! ```
//!
//! and is obtained from the unscaled model by `S~ = alpha S`, `I~ = alpha I`
//! with `alpha = c (1 + rho) / rho`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet3;

/// Orbits with `|S| + |I|` above this bound are reported as escaped.
pub const ESCAPE_BOUND: f64 = 1e6;

/// Scaled parameters of the two-dimensional map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    r: f64,
    beta: f64,
    a: f64,
    #[serde(rename = "K")]
    k: f64,
}

/// Names of the four scaled parameters, used by scans and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamName {
    #[serde(rename = "r")]
    R,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "a")]
    A,
    #[serde(rename = "K")]
    K,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::R => "r",
            ParamName::Beta => "beta",
            ParamName::A => "a",
            ParamName::K => "K",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(ParamName::R),
            "beta" => Ok(ParamName::Beta),
            "a" => Ok(ParamName::A),
            "K" | "k" => Ok(ParamName::K),
            other => Err(Error::InvalidArgument(format!(
                "unknown parameter '{other}' (expected r, beta, a or K)"
            ))),
        }
    }
}

impl ModelParams {
    /// Builds a parameter set, rejecting `beta <= 0`, `a < 0`, `K` outside
    /// `(0, 1)` and `r <= 0`. Analyses that need `r > 1` check it themselves.
    pub fn new(r: f64, beta: f64, a: f64, k: f64) -> Result<Self> {
        let all = [r, beta, a, k];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "parameters must be finite (r={r}, beta={beta}, a={a}, K={k})"
            )));
        }
        if r <= 0.0 {
            return Err(Error::InvalidParameter(format!("r must be > 0, got {r}")));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if a < 0.0 {
            return Err(Error::InvalidParameter(format!("a must be >= 0, got {a}")));
        }
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::InvalidParameter(format!("K must lie in (0, 1), got {k}")));
        }
        Ok(Self { r, beta, a, k })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::R => self.r,
            ParamName::Beta => self.beta,
            ParamName::A => self.a,
            ParamName::K => self.k,
        }
    }

    /// Returns a copy with one parameter replaced (validated).
    pub fn with(&self, name: ParamName, value: f64) -> Result<Self> {
        let mut p = *self;
        match name {
            ParamName::R => p.r = value,
            ParamName::Beta => p.beta = value,
            ParamName::A => p.a = value,
            ParamName::K => p.k = value,
        }
        Self::new(p.r, p.beta, p.a, p.k)
    }

    pub(crate) fn require_r_above_one(&self) -> Result<()> {
        if self.r > 1.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("r must be > 1, got {}", self.r)))
        }
    }
}

/// Parameters of the original (unscaled) three-compartment model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnscaledParams {
    pub rho: f64,
    pub c: f64,
    pub beta_tilde: f64,
    pub a_tilde: f64,
    pub mu: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl UnscaledParams {
    pub fn validate(&self) -> Result<()> {
        let u = self;
        let all = [u.rho, u.c, u.beta_tilde, u.a_tilde, u.mu, u.gamma, u.lambda];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("unscaled parameters must be finite".into()));
        }
        if u.rho <= 0.0 {
            return Err(Error::InvalidParameter(format!("rho must be > 0, got {}", u.rho)));
        }
        if u.c <= 0.0 {
            return Err(Error::InvalidParameter(format!("c must be > 0, got {}", u.c)));
        }
        if u.beta_tilde <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta_tilde must be > 0, got {}",
                u.beta_tilde
            )));
        }
        if u.a_tilde < 0.0 || u.mu < 0.0 || u.gamma < 0.0 {
            return Err(Error::InvalidParameter(
                "a_tilde, mu and gamma must be >= 0".into(),
            ));
        }
        let k = u.mu + u.gamma;
        if !(k > 0.0 && k < 1.0) {
            return Err(Error::InvalidParameter(format!("mu + gamma must lie in (0, 1), got {k}")));
        }
        if !(u.lambda > 0.0 && u.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in (0, 1), got {}",
                u.lambda
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.mu + self.gamma
    }
}

/// A point of the scaled map. Negative coordinates are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "I")]
    pub i: f64,
}

impl State {
    pub const fn new(s: f64, i: f64) -> Self {
        Self { s, i }
    }

    pub fn l1_norm(&self) -> f64 {
        self.s.abs() + self.i.abs()
    }

    /// Sup-norm distance.
    pub fn dist_inf(&self, other: &State) -> f64 {
        (self.s - other.s).abs().max((self.i - other.i).abs())
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.s, self.i]
    }
}

/// A point of the unscaled three-compartment model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FullState {
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

impl FullState {
    pub const fn new(s: f64, i: f64, r: f64) -> Self {
        Self { s, i, r }
    }
}

/// A 2x2 real matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jacobian2(pub [[f64; 2]; 2]);

impl Jacobian2 {
    pub const IDENTITY: Jacobian2 = Jacobian2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn transpose(&self) -> Jacobian2 {
        let m = self.0;
        Jacobian2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn mul(&self, rhs: &Jacobian2) -> Jacobian2 {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Jacobian2(out)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

/// `1 + a S`, rejecting the pole of the incidence term.
fn incidence_denominator(a: f64, s: f64) -> Result<f64> {
    let d = 1.0 + a * s;
    if d == 0.0 {
        Err(Error::Pole { s })
    } else {
        Ok(d)
    }
}

/// Rescales the unscaled model. Returns the scaled parameters and
/// `alpha = c (1 + rho) / rho`.
pub fn scale_params(u: &UnscaledParams) -> Result<(ModelParams, f64)> {
    u.validate()?;
    let alpha = u.c * (1.0 + u.rho) / u.rho;
    let p = ModelParams::new(1.0 + u.rho, alpha * u.beta_tilde, alpha * u.a_tilde, u.k())?;
    Ok((p, alpha))
}

/// One application of the scaled map.
pub fn step(p: &ModelParams, x: State) -> Result<State> {
    let d = incidence_denominator(p.a, x.s)?;
    let infection = p.beta * x.s * x.i / d;
    Ok(State {
        s: p.r * x.s * (1.0 - x.s) - infection,
        i: (1.0 - p.k) * x.i + infection,
    })
}

/// One application of the unscaled three-compartment model.
pub fn step_full(u: &UnscaledParams, x: FullState) -> Result<FullState> {
    let d = incidence_denominator(u.a_tilde, x.s)?;
    let infection = u.beta_tilde * x.s * x.i / d;
    Ok(FullState {
        s: u.rho * x.s * (1.0 - x.s / u.c) - infection + x.s,
        i: infection + (1.0 - u.mu - u.gamma) * x.i,
        r: u.gamma * x.i + (1.0 - u.lambda) * x.r,
    })
}

/// Analytic Jacobian of the scaled map.
pub fn jacobian(p: &ModelParams, x: State) -> Result<Jacobian2> {
    let d = incidence_denominator(p.a, x.s)?;
    let di = p.beta * x.i / (d * d);
    let ds = p.beta * x.s / d;
    Ok(Jacobian2([
        [p.r - 2.0 * p.r * x.s - di, -ds],
        [di, 1.0 - p.k + ds],
    ]))
}

/// The map evaluated on Taylor jets; the caller must keep `1 + aS` away from zero.
pub fn step_jet(p: &ModelParams, s: Jet3, i: Jet3) -> (Jet3, Jet3) {
    let infection = s * i * (s * p.a + 1.0).recip() * p.beta;
    let logistic = s * (Jet3::constant(1.0) - s) * p.r;
    (logistic - infection, i * (1.0 - p.k) + infection)
}

/// Applies the map `n` times, failing on escape.
pub fn advance(p: &ModelParams, mut x: State, n: usize) -> Result<State> {
    for k in 1..=n {
        x = checked_step(p, x, k)?;
    }
    Ok(x)
}

/// One step followed by the divergence guard; `step_index` is reported on escape.
pub(crate) fn checked_step(p: &ModelParams, x: State, step_index: usize) -> Result<State> {
    let y = step(p, x)?;
    let norm = y.l1_norm();
    if !(norm <= ESCAPE_BOUND) {
        return Err(Error::Escaped { step: step_index, state: y, norm });
    }
    Ok(y)
}

/// Discards `n_transient` images of `x0` and returns the next `n_keep` states
/// (the first returned state is the image after the transient).
pub fn iterate(p: &ModelParams, x0: State, n_transient: usize, n_keep: usize) -> Result<Vec<State>> {
    let mut x = advance(p, x0, n_transient)?;
    let mut out = Vec::with_capacity(n_keep);
    for k in 0..n_keep {
        out.push(x);
        if k + 1 < n_keep {
            x = checked_step(p, x, n_transient + k + 1)?;
        }
    }
    Ok(out)
}
