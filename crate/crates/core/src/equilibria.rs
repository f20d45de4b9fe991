//! Fixed points, stability thresholds and boundary labelling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{jacobian, step, Jacobian2, ModelParams, State};

/// Tolerances for non-hyperbolicity and boundary matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `| |mu| - 1 |` below this counts as on the unit circle.
    pub hyperbolic: f64,
    /// Relative distance to a boundary value that counts as "on" it.
    pub boundary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { hyperbolic: 1e-9, boundary: 1e-9 }
    }
}

impl Tolerances {
    pub(crate) fn near(&self, x: f64, target: f64) -> bool {
        (x - target).abs() <= self.boundary * target.abs().max(1.0)
    }
}

/// Eigenvalues of a 2x2 Jacobian together with trace and determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub trace: f64,
    pub det: f64,
    /// Real part of a complex pair (`trace / 2`).
    pub sigma: f64,
    /// Imaginary part of `mu1`, zero for real eigenvalues.
    pub omega: f64,
    /// Argument of `mu1` when the pair lies on the unit circle.
    pub theta0: Option<f64>,
}

impl EigenData {
    /// Roots of `mu^2 - trace mu + det`. Real roots are ordered by
    /// decreasing modulus; a complex pair has `mu1 = sigma + i omega`, `omega > 0`.
    pub fn from_trace_det(trace: f64, det: f64, tol: &Tolerances) -> Self {
        let disc = trace * trace - 4.0 * det;
        let sigma = trace / 2.0;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let big = if trace >= 0.0 { (trace + sq) / 2.0 } else { (trace - sq) / 2.0 };
            let small = if big != 0.0 { det / big } else { 0.0 };
            let (m1, m2) = if big.abs() >= small.abs() { (big, small) } else { (small, big) };
            Self {
                mu1: Complex64::new(m1, 0.0),
                mu2: Complex64::new(m2, 0.0),
                trace,
                det,
                sigma,
                omega: 0.0,
                theta0: None,
            }
        } else {
            let omega = (-disc).sqrt() / 2.0;
            let theta0 = ((det - 1.0).abs() <= tol.hyperbolic)
                .then(|| sigma.clamp(-1.0, 1.0).acos());
            Self {
                mu1: Complex64::new(sigma, omega),
                mu2: Complex64::new(sigma, -omega),
                trace,
                det,
                sigma,
                omega,
                theta0,
            }
        }
    }

    /// Two real eigenvalues known in closed form, kept in the given order.
    pub fn from_real_pair(l1: f64, l2: f64) -> Self {
        Self {
            mu1: Complex64::new(l1, 0.0),
            mu2: Complex64::new(l2, 0.0),
            trace: l1 + l2,
            det: l1 * l2,
            sigma: (l1 + l2) / 2.0,
            omega: 0.0,
            theta0: None,
        }
    }

    pub fn is_complex(&self) -> bool {
        self.omega > 0.0
    }

    pub fn moduli(&self) -> [f64; 2] {
        [self.mu1.norm(), self.mu2.norm()]
    }

    /// Distance from the closest eigenvalue to the real number `target`.
    pub fn distance_to(&self, target: f64) -> f64 {
        let t = Complex64::new(target, 0.0);
        (self.mu1 - t).norm().min((self.mu2 - t).norm())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
    PeriodTwoBranch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityClass {
    StableNode,
    StableFocus,
    Saddle,
    UnstableNode,
    UnstableFocus,
    NonHyperbolic,
}

impl StabilityClass {
    pub fn is_stable(self) -> bool {
        matches!(self, StabilityClass::StableNode | StabilityClass::StableFocus)
    }
}

/// Codimension-1 and -2 events on the stability boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Fold,
    Flip,
    NeimarkSacker,
    FoldFlip,
    R1,
    R2,
    R3,
    R4,
    Chenciner,
    GeneralizedFlip,
    Cusp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub location: State,
    pub kind: EquilibriumKind,
    pub eigen: EigenData,
    pub class: StabilityClass,
    pub boundary_tag: Option<BoundaryTag>,
    /// Jacobian of the map this point is fixed under (the second iterate for
    /// the period-2 branch).
    pub jacobian: Jacobian2,
}

/// Stability thresholds for a fixed `(r, a, K)` slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub beta0: f64,
    /// Only defined for `3 < r < r_max`.
    pub beta1: Option<f64>,
    pub beta2: f64,
    pub r_max: f64,
    pub r_tilde: f64,
    pub r_bar: f64,
}

/// Classifies a fixed point from its eigenvalues.
pub fn classify(eigen: &EigenData, tol: &Tolerances) -> StabilityClass {
    let [m1, m2] = eigen.moduli();
    if (m1 - 1.0).abs() <= tol.hyperbolic || (m2 - 1.0).abs() <= tol.hyperbolic {
        return StabilityClass::NonHyperbolic;
    }
    let (tr, det) = (eigen.trace, eigen.det);
    let stable = tr.abs() < 1.0 + det && det.abs() < 1.0;
    match (stable, eigen.is_complex()) {
        (true, true) => StabilityClass::StableFocus,
        (true, false) => StabilityClass::StableNode,
        (false, true) => StabilityClass::UnstableFocus,
        (false, false) if m1 > 1.0 && m2 > 1.0 => StabilityClass::UnstableNode,
        (false, false) => StabilityClass::Saddle,
    }
}

/// Lower endemic threshold: `E1` is positive iff `beta > beta0`.
pub fn beta0(r: f64, a: f64, k: f64) -> f64 {
    k * (r + a * (r - 1.0)) / (r - 1.0)
}

/// Flip boundary of `E1`, evaluated without restricting `r`.
pub fn beta1_formula(r: f64, a: f64, k: f64) -> f64 {
    let den = 4.0 + k * (r - 1.0);
    let lin = k * (2.0 * a * (3.0 + k * (r - 1.0) - r) + (k + 2.0) * r) / den;
    let rad = k * k
        * ((k + 2.0).powi(2) * r * r
            + 4.0 * a * a * (r + 1.0).powi(2)
            + 4.0 * a * r * (14.0 - 5.0 * k - 2.0 * r + 3.0 * k * r))
        / (den * den);
    0.5 * (lin + rad.sqrt())
}

/// Neimark-Sacker boundary of `E1`.
pub fn beta2(r: f64, a: f64, k: f64) -> f64 {
    let q = r / (r - 1.0);
    let rad = a * a + 2.0 * a * (3.0 * k - 1.0) * q + (k + 1.0).powi(2) * q * q;
    0.5 * (a * (2.0 * k - 1.0) + (k + 1.0) * q + rad.sqrt())
}

/// The curve `R(x)` with `R(2) = r_bar`, `R(3) = r_tilde`, `R(4) = r_max`.
pub fn resonance_curve(x: f64, a: f64, k: f64) -> f64 {
    let m = a * x + k * (x + 1.0) + x;
    let rad = a * a * x * x + 2.0 * a * x * (k * (3.0 * x - 1.0) - x) + (k * (x + 1.0) + x).powi(2);
    m / (2.0 * k) + 0.5 * (rad / (k * k)).sqrt()
}

pub fn thresholds(r: f64, a: f64, k: f64) -> Result<Thresholds> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("r must be > 1, got {r}")));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidParameter(format!("K must lie in (0, 1), got {k}")));
    }
    if !(a >= 0.0) {
        return Err(Error::InvalidParameter(format!("a must be >= 0, got {a}")));
    }
    let r_max = resonance_curve(4.0, a, k);
    Ok(Thresholds {
        beta0: beta0(r, a, k),
        beta1: (r > 3.0 && r < r_max).then(|| beta1_formula(r, a, k)),
        beta2: beta2(r, a, k),
        r_max,
        r_tilde: resonance_curve(3.0, a, k),
        r_bar: resonance_curve(2.0, a, k),
    })
}

pub fn disease_free_location(p: &ModelParams) -> State {
    State::new((p.r() - 1.0) / p.r(), 0.0)
}

/// Second eigenvalue of the disease-free point.
pub fn disease_free_lambda2(p: &ModelParams) -> f64 {
    let (r, a) = (p.r(), p.a());
    1.0 - p.k() + p.beta() * (r - 1.0) / (r + a * (r - 1.0))
}

pub fn disease_free(p: &ModelParams, tol: &Tolerances) -> Result<FixedPointReport> {
    let location = disease_free_location(p);
    let eigen = EigenData::from_real_pair(2.0 - p.r(), disease_free_lambda2(p));
    Ok(FixedPointReport {
        location,
        kind: EquilibriumKind::DiseaseFree,
        eigen,
        class: classify(&eigen, tol),
        boundary_tag: classify_boundary(p, Equilibrium::E0, tol)?,
        jacobian: jacobian(p, location)?,
    })
}

/// Location of the endemic point (may be negative; `None` when `beta = aK`).
pub fn endemic_location(p: &ModelParams) -> Option<State> {
    let d = p.beta() - p.a() * p.k();
    if d == 0.0 {
        return None;
    }
    let (r, k) = (p.r(), p.k());
    Some(State::new(k / d, (r - 1.0) / d - r * k / (d * d)))
}

/// Closed-form Jacobian at the endemic point.
pub fn endemic_jacobian(p: &ModelParams) -> Jacobian2 {
    let (r, beta, a, k) = (p.r(), p.beta(), p.a(), p.k());
    let a11 = 2.0 * k * r / (a * k - beta) + k * (a * (r - 1.0) + r) / beta + 1.0;
    let a21 = r + k * (a - (a + 1.0) * r) / beta - 1.0;
    Jacobian2([[a11, -k], [a21, 1.0]])
}

/// The endemic point, present only when `beta > beta0`.
pub fn endemic(p: &ModelParams, tol: &Tolerances) -> Result<Option<FixedPointReport>> {
    p.require_r_above_one()?;
    if !(p.beta() > beta0(p.r(), p.a(), p.k())) {
        return Ok(None);
    }
    let location = endemic_location(p).expect("beta > beta0 implies beta > aK");
    let j = endemic_jacobian(p);
    let eigen = EigenData::from_trace_det(j.trace(), j.det(), tol);
    Ok(Some(FixedPointReport {
        location,
        kind: EquilibriumKind::Endemic,
        eigen,
        class: classify(&eigen, tol),
        boundary_tag: classify_boundary(p, Equilibrium::E1, tol)?,
        jacobian: j,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equilibrium {
    E0,
    E1,
}

/// Labels the boundary event the parameters sit on, if any.
pub fn classify_boundary(
    p: &ModelParams,
    which: Equilibrium,
    tol: &Tolerances,
) -> Result<Option<BoundaryTag>> {
    let (r, beta, a, k) = (p.r(), p.beta(), p.a(), p.k());
    match which {
        Equilibrium::E0 => {
            if tol.near(r, 1.0) {
                return Ok(Some(BoundaryTag::Fold));
            }
            if r < 1.0 {
                return Ok(None);
            }
            let b0 = beta0(r, a, k);
            if tol.near(r, 3.0) {
                if tol.near(beta, b0) {
                    return Ok(Some(BoundaryTag::FoldFlip));
                }
                return Ok((beta < b0).then_some(BoundaryTag::Flip));
            }
            Ok((r > 1.0 && r < 3.0 && tol.near(beta, b0)).then_some(BoundaryTag::Fold))
        }
        Equilibrium::E1 => {
            if !(r > 1.0) {
                return Ok(None);
            }
            let th = thresholds(r, a, k)?;
            if tol.near(r, 3.0) && tol.near(beta, th.beta0) {
                return Ok(Some(BoundaryTag::FoldFlip));
            }
            if tol.near(beta, th.beta2) {
                if tol.near(r, th.r_max) {
                    return Ok(Some(BoundaryTag::R2));
                }
                if tol.near(r, th.r_tilde) {
                    return Ok(Some(BoundaryTag::R3));
                }
                if tol.near(r, th.r_bar) {
                    return Ok(Some(BoundaryTag::R4));
                }
                if r < th.r_max {
                    return Ok(Some(BoundaryTag::NeimarkSacker));
                }
            }
            if r < 3.0 && tol.near(beta, th.beta0) {
                return Ok(Some(BoundaryTag::Fold));
            }
            if r > 3.0 && r < th.r_max && tol.near(beta, beta1_formula(r, a, k)) {
                return Ok(Some(BoundaryTag::Flip));
            }
            Ok(None)
        }
    }
}

/// The two points of the 2-cycle born from `E0` at `r = 3`, as fixed points
/// of the second iterate: `((1 + r -+ sqrt((r-3)(r+1))) / (2r), 0)`.
pub fn period2_points(r: f64) -> Result<[State; 2]> {
    if !(r >= 3.0) {
        return Err(Error::InvalidParameter(format!(
            "the period-2 branch needs r >= 3, got {r}"
        )));
    }
    let sq = ((r - 3.0) * (r + 1.0)).sqrt();
    Ok([
        State::new((1.0 + r - sq) / (2.0 * r), 0.0),
        State::new((1.0 + r + sq) / (2.0 * r), 0.0),
    ])
}

/// Reports for both period-2 points, minus root first.
pub fn period2_branch(p: &ModelParams, tol: &Tolerances) -> Result<[FixedPointReport; 2]> {
    let r = p.r();
    let pts = period2_points(r)?;
    let mu1 = 4.0 - r * (r - 2.0);
    let report = |x: State| -> Result<FixedPointReport> {
        let y = step(p, x)?;
        let j2 = jacobian(p, y)?.mul(&jacobian(p, x)?);
        let eigen = EigenData::from_real_pair(mu1, j2.0[1][1]);
        let tag = ((mu1 + 1.0).abs() <= tol.hyperbolic).then_some(BoundaryTag::Flip);
        Ok(FixedPointReport {
            location: x,
            kind: EquilibriumKind::PeriodTwoBranch,
            eigen,
            class: classify(&eigen, tol),
            boundary_tag: tag,
            jacobian: j2,
        })
    };
    Ok([report(pts[0])?, report(pts[1])?])
}
