//! Critical normal-form coefficients of the flip and Neimark-Sacker
//! bifurcations.
//!
//! Both coefficients use the invariant formulas built from the multilinear
//! forms `B` and `C` (second and third partials of the map shifted to the
//! fixed point), the critical eigenvector `q` and the adjoint eigenvector
//! `p` normalised so that `<p, q> = sum conj(p_i) q_i = 1`.
//!
//! Flip:
//! ```text
//! c = 1/6 <p, C(q,q,q)> - 1/2 <p, B(q, (A - I)^-1 B(q,q))>
//! ```
//! Neimark-Sacker:
//! ```text
//! d = 1/2 Re( e^{-i theta} [ <p, C(q,q,qbar)> + 2 <p, B(q, (I - A)^-1 B(q,qbar))>
//!                          + <p, B(qbar, (e^{2 i theta} I - A)^-1 B(q,q))> ] )
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibria::{
    disease_free_location, endemic_jacobian, endemic_location, thresholds, EquilibriumKind,
    FixedPointReport, Tolerances,
};
use crate::error::{Error, Result};
use crate::jet::Jet3;
use crate::map::{step, step_jet, Jacobian2, ModelParams, ParamName, State};

pub type CVec = [Complex64; 2];

/// Fixed-point residual accepted by [`shifted_forms`].
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Radius in `r` around the strong resonances where `d` is not computed.
pub const RESONANCE_RADIUS: f64 = 1e-6;

/// Second and third partial derivatives of a planar map at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultilinearForms {
    /// `d2[i][j][k] = d^2 F_i / dx_j dx_k`
    pub d2: [[[f64; 2]; 2]; 2],
    /// `d3[i][j][k][l] = d^3 F_i / dx_j dx_k dx_l`
    pub d3: [[[[f64; 2]; 2]; 2]; 2],
}

impl MultilinearForms {
    pub fn b(&self, x: &CVec, y: &CVec) -> CVec {
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..2 {
                for k in 0..2 {
                    *o += self.d2[i][j][k] * x[j] * y[k];
                }
            }
        }
        out
    }

    pub fn c(&self, x: &CVec, y: &CVec, z: &CVec) -> CVec {
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for (i, o) in out.iter_mut().enumerate() {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        *o += self.d3[i][j][k][l] * x[j] * y[k] * z[l];
                    }
                }
            }
        }
        out
    }

    /// Builds the forms from the jet components of the map.
    fn from_jets(f: &[Jet3; 2]) -> Self {
        let mut d2 = [[[0.0; 2]; 2]; 2];
        let mut d3 = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let ny = j + k;
                    d2[i][j][k] = f[i].derivative(2 - ny, ny);
                    for l in 0..2 {
                        let ny = j + k + l;
                        d3[i][j][k][l] = f[i].derivative(3 - ny, ny);
                    }
                }
            }
        }
        Self { d2, d3 }
    }

    /// Forms with `d2[i] / d3[i]` filled from the distinct partials
    /// `[xx, xy, yy]` and `[xxx, xxy, xyy, yyy]` of each component.
    fn from_partials(second: [[f64; 3]; 2], third: [[f64; 4]; 2]) -> Self {
        let mut d2 = [[[0.0; 2]; 2]; 2];
        let mut d3 = [[[[0.0; 2]; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    d2[i][j][k] = second[i][j + k];
                    for l in 0..2 {
                        d3[i][j][k][l] = third[i][j + k + l];
                    }
                }
            }
        }
        Self { d2, d3 }
    }

    /// Largest relative discrepancy to `other`, entries compared on the scale
    /// `max(1, |other|)`.
    pub fn max_relative_error(&self, other: &MultilinearForms) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let (a, b) = (self.d2[i][j][k], other.d2[i][j][k]);
                    worst = worst.max((a - b).abs() / b.abs().max(1.0));
                    for l in 0..2 {
                        let (a, b) = (self.d3[i][j][k][l], other.d3[i][j][k][l]);
                        worst = worst.max((a - b).abs() / b.abs().max(1.0));
                    }
                }
            }
        }
        worst
    }
}

fn jet_seed(x: State) -> (Jet3, Jet3) {
    (Jet3::variable(x.s, 0), Jet3::variable(x.i, 1))
}

fn jacobian_from_jets(f: &[Jet3; 2]) -> Jacobian2 {
    Jacobian2([
        [f[0].derivative(1, 0), f[0].derivative(0, 1)],
        [f[1].derivative(1, 0), f[1].derivative(0, 1)],
    ])
}

/// Exact forms of the map at any point via Taylor jets.
pub fn jet_forms(p: &ModelParams, x: State) -> Result<MultilinearForms> {
    step(p, x)?;
    let (s, i) = jet_seed(x);
    let (f1, f2) = step_jet(p, s, i);
    Ok(MultilinearForms::from_jets(&[f1, f2]))
}

/// Jacobian and exact forms of the second iterate at `x`.
pub fn second_iterate_forms(p: &ModelParams, x: State) -> Result<(Jacobian2, MultilinearForms)> {
    step(p, step(p, x)?)?;
    let (s, i) = jet_seed(x);
    let (f1, f2) = step_jet(p, s, i);
    let (g1, g2) = step_jet(p, f1, f2);
    let g = [g1, g2];
    Ok((jacobian_from_jets(&g), MultilinearForms::from_jets(&g)))
}

/// Forms of the `iterates`-fold map from central differences with one
/// Richardson level. Used as an independent check of the exact forms.
pub fn finite_difference_forms(p: &ModelParams, x: State, iterates: usize) -> Result<MultilinearForms> {
    let f = |y: [f64; 2]| -> Result<[f64; 2]> {
        let mut z = State::new(y[0], y[1]);
        for _ in 0..iterates {
            z = step(p, z)?;
        }
        Ok(z.as_array())
    };
    let base = x.as_array();
    let scale = [base[0].abs().max(1.0), base[1].abs().max(1.0)];
    // Mixed central difference along the listed directions.
    let stencil = |dirs: &[usize], h: f64| -> Result<[f64; 2]> {
        let n = dirs.len();
        let mut acc = [0.0; 2];
        for mask in 0..(1u32 << n) {
            let mut y = base;
            let mut sign = 1.0;
            for (m, &d) in dirs.iter().enumerate() {
                if mask & (1 << m) != 0 {
                    y[d] -= h * scale[d];
                    sign = -sign;
                } else {
                    y[d] += h * scale[d];
                }
            }
            let v = f(y)?;
            acc[0] += sign * v[0];
            acc[1] += sign * v[1];
        }
        let den: f64 = dirs.iter().map(|&d| 2.0 * h * scale[d]).product();
        Ok([acc[0] / den, acc[1] / den])
    };
    let richardson = |dirs: &[usize], h: f64| -> Result<[f64; 2]> {
        let coarse = stencil(dirs, h)?;
        let fine = stencil(dirs, h / 2.0)?;
        Ok([(4.0 * fine[0] - coarse[0]) / 3.0, (4.0 * fine[1] - coarse[1]) / 3.0])
    };
    let mut second = [[0.0; 3]; 2];
    for (ny, dirs) in [[0, 0], [0, 1], [1, 1]].iter().enumerate() {
        let v = richardson(dirs, 1e-3)?;
        second[0][ny] = v[0];
        second[1][ny] = v[1];
    }
    let mut third = [[0.0; 4]; 2];
    for (ny, dirs) in [[0, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1]].iter().enumerate() {
        let v = richardson(dirs, 5e-3)?;
        third[0][ny] = v[0];
        third[1][ny] = v[1];
    }
    Ok(MultilinearForms::from_partials(second, third))
}

fn close_to(x: State, y: State) -> bool {
    x.dist_inf(&y) <= 1e-12 * y.s.abs().max(y.i.abs()).max(1.0)
}

/// Forms of the map shifted to the fixed point `fp`. The disease-free and
/// endemic points use hand-derived partials; any other fixed point uses jets.
pub fn shifted_forms(p: &ModelParams, fp: State) -> Result<MultilinearForms> {
    let image = step(p, fp)?;
    let residual = image.dist_inf(&fp);
    if !(residual <= FIXED_POINT_TOL) {
        return Err(Error::NotFixedPoint { s: fp.s, i: fp.i, residual });
    }
    if close_to(fp, disease_free_location(p)) {
        return Ok(disease_free_forms(p));
    }
    if let Some(e1) = endemic_location(p) {
        if close_to(fp, e1) {
            return Ok(endemic_forms(p));
        }
    }
    jet_forms(p, fp)
}

fn disease_free_forms(p: &ModelParams) -> MultilinearForms {
    let (r, beta, a) = (p.r(), p.beta(), p.a());
    let w = 1.0 + a * (r - 1.0) / r;
    let bsi = beta / (w * w);
    let csi = 2.0 * a * beta / (w * w * w);
    MultilinearForms::from_partials(
        [[-2.0 * r, -bsi, 0.0], [0.0, bsi, 0.0]],
        [[0.0, csi, 0.0, 0.0], [0.0, -csi, 0.0, 0.0]],
    )
}

fn endemic_forms(p: &ModelParams) -> MultilinearForms {
    let (r, beta, a, k) = (p.r(), p.beta(), p.a(), p.k());
    let d = beta - a * k;
    let t = a * k * (r - 1.0) + beta + k * r - beta * r;
    let f11 = 2.0 * a * (a * k - beta) * t / (beta * beta) - 2.0 * r;
    let f12 = -d * d / beta;
    let f111 = 6.0 * a * a * d * d * t / beta.powi(3);
    let f112 = 2.0 * a * d.powi(3) / (beta * beta);
    MultilinearForms::from_partials(
        [[f11, f12, 0.0], [-(f11 + 2.0 * r), -f12, 0.0]],
        [[f111, f112, 0.0, 0.0], [-f111, -f112, 0.0, 0.0]],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoefficientKind {
    FlipC,
    NSd,
}

/// Stability of the object born at the bifurcation (2-cycle or invariant curve).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Emerging {
    Stable,
    Unstable,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFormData {
    pub q: CVec,
    pub p: CVec,
    /// Critical eigenvalue `mu` with `A q = mu q`.
    pub mu: Complex64,
    pub coefficient: f64,
    pub kind: CoefficientKind,
    pub emerging: Emerging,
    pub jacobian: Jacobian2,
    pub forms: MultilinearForms,
}

/// Hermitian product `sum conj(p_i) v_i`.
pub fn inner(p: &CVec, v: &CVec) -> Complex64 {
    p[0].conj() * v[0] + p[1].conj() * v[1]
}

fn to_complex(m: &Jacobian2) -> [[Complex64; 2]; 2] {
    m.0.map(|row| row.map(|v| Complex64::new(v, 0.0)))
}

/// A non-zero vector in the kernel of a (numerically) singular 2x2 matrix.
fn null_vector(m: &[[Complex64; 2]; 2]) -> CVec {
    let n0 = m[0][0].norm_sqr() + m[0][1].norm_sqr();
    let n1 = m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let one = Complex64::new(1.0, 0.0);
    if n0 == 0.0 && n1 == 0.0 {
        return [one, Complex64::new(0.0, 0.0)];
    }
    if n0 >= n1 {
        [-m[0][1], m[0][0]]
    } else {
        [-m[1][1], m[1][0]]
    }
}

fn shift(m: &[[Complex64; 2]; 2], mu: Complex64) -> [[Complex64; 2]; 2] {
    [[m[0][0] - mu, m[0][1]], [m[1][0], m[1][1] - mu]]
}

fn transpose(m: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

fn solve(m: &[[Complex64; 2]; 2], b: &CVec, what: &'static str) -> Result<CVec> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    if !(det.norm() > 1e-14 * scale * scale) {
        return Err(Error::Singular(what));
    }
    Ok([
        (m[1][1] * b[0] - m[0][1] * b[1]) / det,
        (m[0][0] * b[1] - m[1][0] * b[0]) / det,
    ])
}

/// Eigenvector pair for the eigenvalue `mu` of `a`: `q` scaled to `q_1 = 1`
/// (or `q_2 = 1` when the first component vanishes), and `p` solving
/// `A^T p = conj(mu) p` with `<p, q> = 1`.
pub fn eigenvector_pair(a: &Jacobian2, mu: Complex64) -> (CVec, CVec) {
    let m = to_complex(a);
    let mut q = null_vector(&shift(&m, mu));
    let pivot = if q[0].norm() > 1e-12 * q[1].norm() { q[0] } else { q[1] };
    q = [q[0] / pivot, q[1] / pivot];
    let mut p = null_vector(&shift(&transpose(&m), mu.conj()));
    let z = inner(&p, &q).conj();
    p = [p[0] / z, p[1] / z];
    (q, p)
}

fn verdict(value: f64, stable_when_positive: bool) -> Emerging {
    if value == 0.0 || !value.is_finite() {
        Emerging::Degenerate
    } else if (value > 0.0) == stable_when_positive {
        Emerging::Stable
    } else {
        Emerging::Unstable
    }
}

/// Flip coefficient at a fixed point (or period-2 point) with eigenvalue -1.
/// For the period-2 branch the second iterate is used.
pub fn flip_coefficient(
    p: &ModelParams,
    fp: &FixedPointReport,
    tol: &Tolerances,
) -> Result<NormalFormData> {
    let distance = fp.eigen.distance_to(-1.0);
    if !(distance <= tol.hyperbolic) {
        return Err(Error::NotCritical { expected: -1.0, distance });
    }
    let (a, forms) = match fp.kind {
        EquilibriumKind::PeriodTwoBranch => {
            let (j2, forms) = second_iterate_forms(p, fp.location)?;
            let residual = crate::map::advance(p, fp.location, 2)?.dist_inf(&fp.location);
            if !(residual <= FIXED_POINT_TOL) {
                return Err(Error::NotFixedPoint { s: fp.location.s, i: fp.location.i, residual });
            }
            (j2, forms)
        }
        _ => (fp.jacobian, shifted_forms(p, fp.location)?),
    };
    let mu = Complex64::new(-1.0, 0.0);
    let (q, pv) = eigenvector_pair(&a, mu);
    let m = shift(&to_complex(&a), Complex64::new(1.0, 0.0));
    let h = solve(&m, &forms.b(&q, &q), "A - I")?;
    let c = inner(&pv, &forms.c(&q, &q, &q)).re / 6.0 - inner(&pv, &forms.b(&q, &h)).re / 2.0;
    Ok(NormalFormData {
        q,
        p: pv,
        mu,
        coefficient: c,
        kind: CoefficientKind::FlipC,
        emerging: verdict(c, true),
        jacobian: a,
        forms,
    })
}

/// Neimark-Sacker coefficient `d` of the endemic point on `beta = beta2`.
pub fn ns_coefficient(p: &ModelParams, tol: &Tolerances) -> Result<NormalFormData> {
    p.require_r_above_one()?;
    let (r, beta, a_, k) = (p.r(), p.beta(), p.a(), p.k());
    let th = thresholds(r, a_, k)?;
    if !tol.near(beta, th.beta2) {
        return Err(Error::OffBoundary { beta, beta2: th.beta2 });
    }
    for (order, r_res) in [(2, th.r_max), (3, th.r_tilde), (4, th.r_bar)] {
        if (r - r_res).abs() <= RESONANCE_RADIUS {
            return Err(Error::Resonance { order, r_res, radius: RESONANCE_RADIUS });
        }
    }
    let a = endemic_jacobian(p);
    let det = a.det();
    if !((det - 1.0).abs() <= 1e-9) {
        return Err(Error::OffBoundary { beta, beta2: th.beta2 });
    }
    let sigma = (a.0[0][0] + 1.0) / 2.0;
    if !(sigma.abs() < 1.0) {
        return Err(Error::RealEigenvalues { beta });
    }
    let theta = sigma.acos();
    let mu = Complex64::from_polar(1.0, theta);
    let q = [Complex64::new(1.0, 0.0), (a.0[0][0] - mu) / k];
    let mc = to_complex(&a);
    let mut pv = null_vector(&shift(&transpose(&mc), mu.conj()));
    let z = inner(&pv, &q).conj();
    pv = [pv[0] / z, pv[1] / z];

    let e1 = endemic_location(p).expect("beta on the NS boundary exceeds aK");
    let forms = shifted_forms(p, e1)?;
    let qb = [q[0].conj(), q[1].conj()];
    let one = Complex64::new(1.0, 0.0);
    let neg = |m: [[Complex64; 2]; 2]| m.map(|row| row.map(|v| -v));
    let h11 = solve(&neg(shift(&mc, one)), &forms.b(&q, &qb), "I - A")?;
    let h20 = solve(&neg(shift(&mc, mu * mu)), &forms.b(&q, &q), "e^{2i theta} I - A")?;
    let bracket = inner(&pv, &forms.c(&q, &q, &qb))
        + 2.0 * inner(&pv, &forms.b(&q, &h11))
        + inner(&pv, &forms.b(&qb, &h20));
    let d = 0.5 * (mu.conj() * bracket).re;
    Ok(NormalFormData {
        q,
        p: pv,
        mu,
        coefficient: d,
        kind: CoefficientKind::NSd,
        emerging: verdict(d, false),
        jacobian: a,
        forms,
    })
}

/// Modulus of the complex eigenvalue pair of the endemic point.
pub fn rho(p: &ModelParams) -> Result<f64> {
    let a = endemic_jacobian(p);
    let disc = a.trace().powi(2) - 4.0 * a.det();
    if disc >= 0.0 || a.det() <= 0.0 {
        return Err(Error::RealEigenvalues { beta: p.beta() });
    }
    Ok(a.det().sqrt())
}

/// `d rho / d beta` at the current `beta`, from
/// `rho = sqrt(a11 + K a21)` with the `beta`-derivatives of the entries.
pub fn rho_prime(p: &ModelParams) -> Result<f64> {
    let rho = rho(p)?;
    let (r, beta, a, k) = (p.r(), p.beta(), p.a(), p.k());
    let a11p = 2.0 * k * r / (a * k - beta).powi(2) - k * (a * (r - 1.0) + r) / (beta * beta);
    let a21p = -k * (a - (a + 1.0) * r) / (beta * beta);
    Ok((a11p + k * a21p) / (2.0 * rho))
}

/// Transversality derivative at the Neimark-Sacker boundary `beta = beta2`.
pub fn rho_prime_at_ns(p: &ModelParams) -> Result<f64> {
    p.require_r_above_one()?;
    let b2 = thresholds(p.r(), p.a(), p.k())?.beta2;
    rho_prime(&p.with(ParamName::Beta, b2)?)
}
