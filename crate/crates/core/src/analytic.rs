//! Laplace transform of the aggregate jammer interference at a point `y`.
//!
//! For a jammer process obtained by thinning the legitimate PPP (all nodes in
//! the friendship circle, annulus nodes with probability `P(r)`), the
//! transform is `L(s) = exp(-λ (B + C))` with
//!
//! ```text
//! B = 2 ∫_0^{R1} ∫_0^π  s r / (s + d(r,θ)^α) dθ dr
//! C = 2 ∫_{R1}^{R2} ∫_0^π s r P(r) / (s + d(r,θ)^α) dθ dr
//! d(r,θ)² = r² + ‖y‖² − 2 r ‖y‖ cos θ
//! ```
//!
//! Closed forms exist for α = 2 and α = 4. Every annulus policy has the shape
//! `P(r) = u + v r^α`, so a single evaluator per exponent covers all three
//! (Policy E is `u = p, v = 0`). The general-α path integrates the definition
//! directly and doubles as the oracle for the closed forms.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::geometry::PolicyFn;
use crate::model::{JammingScheme, Policy};
use crate::quad::{integrate_with_breaks, QuadError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("no closed form for alpha = {0}; use laplace_numeric")]
    NoClosedForm(f64),
    #[error("invalid Laplace query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Which route evaluates the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Closed,
    Numeric,
}

/// A point at which to evaluate `L_{I(y)}(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceQuery {
    pub s: f64,
    /// Distance `‖y‖` of the observation point from the transmitter.
    pub y_norm: f64,
    pub lambda: f64,
    pub scheme: JammingScheme,
    pub alpha: f64,
}

impl LaplaceQuery {
    fn check(&self) -> Result<(), AnalyticError> {
        let bad = |msg: String| Err(AnalyticError::InvalidQuery(msg));
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return bad(format!("s must be finite and >= 0, got {}", self.s));
        }
        if !(self.y_norm >= 0.0 && self.y_norm.is_finite()) {
            return bad(format!(
                "y_norm must be finite and >= 0, got {}",
                self.y_norm
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            ));
        }
        if !(self.alpha >= 2.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be >= 2, got {}", self.alpha));
        }
        let (r1, r2) = (self.scheme.lfc_radius, self.scheme.lfa_outer);
        if !(r1 > 0.0 && r1 <= r2 && r2.is_finite()) {
            return bad(format!("need 0 < R1 <= R2, got R1 = {r1}, R2 = {r2}"));
        }
        if let Policy::Constant { p } = self.scheme.policy {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("p must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    fn is_trivial(&self) -> bool {
        self.s == 0.0 || self.lambda == 0.0
    }
}

/// `-ln L` split into its friendship-circle and annulus contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LogExponent {
    /// `λ B`
    pub lfc: f64,
    /// `λ C`
    pub lfa: f64,
}

impl LogExponent {
    pub fn total(&self) -> f64 {
        self.lfc + self.lfa
    }

    pub fn laplace(&self) -> f64 {
        (-self.total()).exp()
    }
}

/// Real solution of `(η − iψ)² = (r² − ‖y‖²)² − s − 2i√s (r² + ‖y‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaPsi {
    pub eta: f64,
    pub psi: f64,
    pub g: f64,
}

pub fn eval_eta_psi(r: f64, s: f64, y_norm: f64) -> Result<EtaPsi, AnalyticError> {
    if !(s > 0.0) {
        return Err(AnalyticError::InvalidQuery(format!(
            "eta/psi need s > 0, got {s}"
        )));
    }
    Ok(eta_psi(r, s, y_norm))
}

fn eta_psi(r: f64, s: f64, y: f64) -> EtaPsi {
    let diff = r * r - y * y;
    let sum = r * r + y * y;
    let g = diff * diff - s;
    let cross = 2.0 * s.sqrt() * sum;
    let root = g.hypot(cross);
    // (root + g)/2 cancels when g << 0; use the conjugate form there
    let eta_sq = if g >= 0.0 {
        0.5 * (root + g)
    } else {
        0.5 * cross * cross / (root - g)
    };
    let eta = eta_sq.sqrt();
    let psi = if eta > 0.0 {
        s.sqrt() * sum / eta
    } else {
        s.sqrt()
    };
    EtaPsi { eta, psi, g }
}

/// Coefficients of `P(r) = u + v r^α` on the annulus. A degenerate annulus
/// contributes nothing, signalled by `None`.
fn annulus_coefficients(scheme: &JammingScheme, alpha: f64) -> Option<(f64, f64)> {
    let lo = scheme.lfc_radius.powf(alpha);
    let hi = scheme.lfa_outer.powf(alpha);
    let span = hi - lo;
    if !(span > 0.0) {
        return None;
    }
    Some(match scheme.policy {
        Policy::Constant { p } => (p, 0.0),
        Policy::Increasing => (-lo / span, 1.0 / span),
        Policy::Decreasing => (hi / span, -1.0 / span),
    })
}

/// `ln(A + √(A² + 4 s y²))` with `A = s + r² − y²`; equals
/// `asinh(A / (2 y √s)) + ln(2 y √s)` but stays finite as `y → 0`.
fn log_asinh_kernel(r: f64, s: f64, y: f64) -> (f64, f64) {
    let a = s + r * r - y * y;
    let root = a.hypot(2.0 * y * s.sqrt());
    let k = if a >= 0.0 {
        (a + root).ln()
    } else {
        (4.0 * s * y * y / (root - a)).ln()
    };
    (k, root)
}

/// Worst-case relative rounding of the antiderivative terms (a few ulps).
const ROUNDING: f64 = 8.0 * f64::EPSILON;
/// Largest tolerated absolute rounding error in the annulus term before the
/// antiderivative difference is abandoned for the radial route.
const CANCELLATION_LIMIT: f64 = 1e-10;

/// Principal square root of `re + i im` for `re >= 0`.
fn csqrt(re: f64, im: f64) -> (f64, f64) {
    let t = (0.5 * (re.hypot(im) + re)).sqrt();
    if t == 0.0 {
        (0.0, 0.0)
    } else {
        (t, 0.5 * im / t)
    }
}

/// Exact angular integral `∫_0^{2π} s / (s + d^α) dθ` for a ring of radius
/// `r`, with `d` the distance to a point at radius `y`.
fn angular_kernel(r: f64, s: f64, y: f64, alpha: f64) -> f64 {
    let near = (r - y) * (r - y);
    let far = (r + y) * (r + y);
    if alpha == 2.0 {
        2.0 * PI * s / ((s + near) * (s + far)).sqrt()
    } else {
        // 2π √s Im(1/W), W = √(near − i√s) √(far − i√s)
        let rs = s.sqrt();
        let (a, b) = csqrt(near, -rs);
        let (c, d) = csqrt(far, -rs);
        let (wr, wi) = (a * c - b * d, a * d + b * c);
        let norm = wr * wr + wi * wi;
        if norm == 0.0 {
            return 2.0 * PI;
        }
        2.0 * PI * rs * (-wi / norm)
    }
}

/// Annulus term `∫_{R1}^{R2} (u + v r^α) A(r) r dr` with the exact angular
/// kernel; well conditioned where the antiderivative difference is not.
fn annulus_radial(q: &LaplaceQuery, u: f64, v: f64) -> Result<f64, AnalyticError> {
    let (s, y, alpha) = (q.s, q.y_norm, q.alpha);
    let (r1, r2) = (q.scheme.lfc_radius, q.scheme.lfa_outer);
    let mut breaks = vec![r1];
    if y > r1 && y < r2 {
        breaks.push(y);
    }
    breaks.push(r2);
    let f = |r: f64| (u + v * r.powf(alpha)).max(0.0) * angular_kernel(r, s, y, alpha) * r;
    let tol = Tolerance::new(1e-13, 1e-13).with_max_intervals(4000);
    Ok(integrate_with_breaks(f, &breaks, tol)?.value)
}

fn exponent_alpha2(q: &LaplaceQuery) -> Result<LogExponent, AnalyticError> {
    let (s, y) = (q.s, q.y_norm);
    let (r1, r2) = (q.scheme.lfc_radius, q.scheme.lfa_outer);
    let (k1, root1) = log_asinh_kernel(r1, s, y);
    let b = PI * s * (k1 - (2.0 * s).ln());
    let c = match annulus_coefficients(&q.scheme, 2.0) {
        None => 0.0,
        Some((u, v)) => {
            let (k2, root2) = log_asinh_kernel(r2, s, y);
            let lead = u - v * s + v * y * y;
            let scale = lead.abs() * k1.abs().max(k2.abs()) + v.abs() * root1.max(root2);
            if PI * s * scale * ROUNDING > CANCELLATION_LIMIT {
                annulus_radial(q, u, v)?
            } else {
                PI * s * (lead * (k2 - k1) + v * (root2 - root1))
            }
        }
    };
    Ok(LogExponent {
        lfc: (q.lambda * b).max(0.0),
        lfa: (q.lambda * c).max(0.0),
    })
}

/// `atan((√s + ψ) / (η + r² − ‖y‖²))` on the branch in `[0, π/2]`.
fn quarter_angle(r: f64, s: f64, y: f64, ep: &EtaPsi) -> f64 {
    (s.sqrt() + ep.psi).atan2(ep.eta + r * r - y * y)
}

fn exponent_alpha4(q: &LaplaceQuery) -> Result<LogExponent, AnalyticError> {
    let (s, y) = (q.s, q.y_norm);
    let rs = s.sqrt();
    let (r1, r2) = (q.scheme.lfc_radius, q.scheme.lfa_outer);
    let ep1 = eta_psi(r1, s, y);
    let t1 = quarter_angle(r1, s, y, &ep1);
    let b = PI * rs * (FRAC_PI_2 - t1);
    let c = match annulus_coefficients(&q.scheme, 4.0) {
        None => 0.0,
        Some((u, v)) => {
            let y2 = y * y;
            let w = u + v * y2 * y2 - v * s;
            // antiderivative value and the magnitude of its largest term
            let antiderivative = |r: f64, ep: &EtaPsi, t: f64| {
                let mut f = -w * t;
                let mut scale = (w * t).abs();
                if v != 0.0 {
                    let re = ep.eta + r * r - y2;
                    let im = rs + ep.psi;
                    let log_term = 2.0 * v * rs * y2 * (re * re + im * im).ln();
                    let poly = 0.5 * v * ((r * r + 3.0 * y2) * ep.psi - 3.0 * rs * ep.eta);
                    f += log_term - poly;
                    scale = scale
                        .max(log_term.abs())
                        .max(0.5 * v.abs() * (r * r + 3.0 * y2) * ep.psi);
                }
                (f, scale)
            };
            let ep2 = eta_psi(r2, s, y);
            let t2 = quarter_angle(r2, s, y, &ep2);
            let (f2, m2) = antiderivative(r2, &ep2, t2);
            let (f1, m1) = antiderivative(r1, &ep1, t1);
            if PI * rs * m1.max(m2) * ROUNDING > CANCELLATION_LIMIT {
                annulus_radial(q, u, v)?
            } else {
                PI * rs * (f2 - f1)
            }
        }
    };
    Ok(LogExponent {
        lfc: (q.lambda * b).max(0.0),
        lfa: (q.lambda * c).max(0.0),
    })
}

/// Closed-form `-ln L` for α ∈ {2, 4}.
pub fn log_exponent(q: &LaplaceQuery) -> Result<LogExponent, AnalyticError> {
    q.check()?;
    if q.alpha != 2.0 && q.alpha != 4.0 {
        return Err(AnalyticError::NoClosedForm(q.alpha));
    }
    if q.is_trivial() {
        return Ok(LogExponent::default());
    }
    if q.alpha == 2.0 {
        exponent_alpha2(q)
    } else {
        exponent_alpha4(q)
    }
}

/// Closed-form Laplace transform for α ∈ {2, 4}.
pub fn laplace_closed(q: &LaplaceQuery) -> Result<f64, AnalyticError> {
    log_exponent(q).map(|e| e.laplace())
}

/// `-ln L` by nested adaptive quadrature of the defining integrals. `tol`
/// bounds the absolute error of the exponent, hence the relative error of
/// `L`.
pub fn log_exponent_numeric(q: &LaplaceQuery, tol: f64) -> Result<LogExponent, AnalyticError> {
    q.check()?;
    if q.is_trivial() {
        return Ok(LogExponent::default());
    }
    let (s, y, alpha) = (q.s, q.y_norm, q.alpha);
    let (r1, r2) = (q.scheme.lfc_radius, q.scheme.lfa_outer);
    let policy = PolicyFn::new(&q.scheme, alpha);
    let half_alpha = 0.5 * alpha;

    // split the exponent budget between the two regions and the inner rule
    let outer_abs = tol / (4.0 * q.lambda);
    let inner_tol =
        Tolerance::new((outer_abs / (r2 * r2)).max(1e-15), 1e-14).with_max_intervals(4000);
    let outer_tol = |abs| Tolerance::new(abs, 1e-15).with_max_intervals(4000);

    let inner_failure: Cell<Option<QuadError>> = Cell::new(None);
    let angular = |r: f64| -> f64 {
        let ry4 = 4.0 * r * y;
        let dr = r - y;
        let f = |theta: f64| {
            let half = (0.5 * theta).sin();
            let d2 = dr * dr + ry4 * half * half;
            s / (s + d2.powf(half_alpha))
        };
        match integrate_with_breaks(f, &[0.0, PI], inner_tol) {
            Ok(res) => res.value,
            Err(e) => {
                if inner_failure.get().is_none() {
                    inner_failure.set(Some(e));
                }
                e.value
            }
        }
    };

    let breaks = |lo: f64, hi: f64| {
        let mut b = vec![lo];
        if y > lo && y < hi {
            b.push(y);
        }
        b.push(hi);
        b
    };

    let circle = integrate_with_breaks(
        |r| 2.0 * r * angular(r),
        &breaks(0.0, r1),
        outer_tol(outer_abs),
    )?;
    let annulus = if r2 > r1 {
        integrate_with_breaks(
            |r| {
                let p = policy.eval(r);
                if p == 0.0 {
                    0.0
                } else {
                    2.0 * r * p * angular(r)
                }
            },
            &breaks(r1, r2),
            outer_tol(outer_abs),
        )?
        .value
    } else {
        0.0
    };
    if let Some(e) = inner_failure.get() {
        return Err(e.into());
    }
    Ok(LogExponent {
        lfc: q.lambda * circle.value,
        lfa: q.lambda * annulus,
    })
}

/// Laplace transform for any α ≥ 2 by quadrature.
pub fn laplace_numeric(q: &LaplaceQuery, tol: f64) -> Result<f64, AnalyticError> {
    log_exponent_numeric(q, tol).map(|e| e.laplace())
}

/// Dispatches to the closed form or the quadrature route.
pub fn exponent_with(
    q: &LaplaceQuery,
    method: Method,
    tol: f64,
) -> Result<LogExponent, AnalyticError> {
    match method {
        Method::Closed => log_exponent(q),
        Method::Numeric => log_exponent_numeric(q, tol),
    }
}
