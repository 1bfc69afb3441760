//! Transmission outage probability and secrecy outage bounds.

use std::cell::RefCell;
use std::f64::consts::PI;

use thiserror::Error;

use crate::analytic::{exponent_with, AnalyticError, LaplaceQuery, Method};
use crate::geometry::nearest_eaves_pdf;
use crate::model::{validate, JammingScheme, ModelError, NetworkConfig, Policy};
use crate::quad::{integrate_with_breaks, QuadError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OutageError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("{0}")]
    Precondition(String),
}

impl From<QuadError> for OutageError {
    fn from(e: QuadError) -> Self {
        OutageError::Analytic(AnalyticError::Quadrature(e))
    }
}

impl OutageError {
    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, OutageError::Analytic(AnalyticError::Quadrature(_)))
    }
}

/// Analytic outage figures for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageReport {
    pub top: f64,
    pub sop_upper: f64,
    pub sop_lower: f64,
    pub method: Method,
    /// Largest error estimate carried by the secrecy-bound integrals,
    /// expressed on the probability scale.
    pub quadrature_error: f64,
}

/// Interference transform at a point of radius `y` for argument `s`.
fn exponent_at(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    s: f64,
    y: f64,
    method: Method,
    tol: f64,
) -> Result<f64, AnalyticError> {
    let q = LaplaceQuery {
        s,
        y_norm: y,
        lambda: config.legit_intensity,
        scheme: *scheme,
        alpha: config.path_loss_alpha,
    };
    exponent_with(&q, method, tol).map(|e| e.total())
}

/// `1 − L_{I(y₀)}(β l^α)` at the receiver.
pub fn transmission_outage(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<f64, OutageError> {
    validate(*config, *scheme)?;
    let l = config.tx_rx_distance;
    let s = config.rx_sir_threshold * l.powf(config.path_loss_alpha);
    let e = exponent_at(config, scheme, s, l, method, tol)?;
    Ok(-(-e).exp_m1())
}

/// Intercept probability of a single eavesdropper at radius `r`,
/// `L_{I(z)}(β_e r^α)` with `‖z‖ = r`.
pub fn intercept_probability(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    r: f64,
    method: Method,
    tol: f64,
) -> Result<f64, AnalyticError> {
    let s = config.eaves_sir_threshold * r.powf(config.path_loss_alpha);
    exponent_at(config, scheme, s, r, method, tol).map(|e| (-e).exp())
}

/// `∫ weight(r) L(β_e r^α) dr` over `[from, to]`.
fn radial_integral<W: Fn(f64) -> f64>(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    (from, to): (f64, f64),
    weight: W,
    method: Method,
    tol: f64,
) -> Result<(f64, f64), OutageError> {
    let mut breaks = vec![from];
    for b in [scheme.lfc_radius, scheme.lfa_outer] {
        if b > *breaks.last().unwrap() && b < to {
            breaks.push(b);
        }
    }
    breaks.push(to);
    // the integrand evaluates a transform per node; keep its error well below
    // the outer target
    let inner_tol = tol * 0.01;
    let failure: RefCell<Option<AnalyticError>> = RefCell::new(None);
    let res = integrate_with_breaks(
        |r| match intercept_probability(config, scheme, r, method, inner_tol) {
            Ok(v) => weight(r) * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        &breaks,
        Tolerance::new(tol * 1e-3, tol),
    );
    if let Some(e) = failure.into_inner() {
        return Err(e.into());
    }
    let res = res?;
    Ok((res.value, res.error))
}

fn sop_upper_with_error(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<(f64, f64), OutageError> {
    validate(*config, *scheme)?;
    let le = config.eaves_intensity;
    if le == 0.0 {
        return Ok((0.0, 0.0));
    }
    let range = (0.0, config.disk_radius);
    let (integral, err) = radial_integral(config, scheme, range, |r| r, method, tol)?;
    let exponent = 2.0 * PI * le * integral;
    let p = -(-exponent).exp_m1();
    Ok((p, 2.0 * PI * le * err * (-exponent).exp()))
}

/// Mean number of eavesdroppers that would intercept,
/// `2π λ_e ∫_0^D L(β_e r^α) r dr`. The upper bound is `1 − exp(−x)`; the
/// exponent keeps resolving growth after the bound has rounded to 1.
pub fn secrecy_exponent(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<f64, OutageError> {
    validate(*config, *scheme)?;
    let le = config.eaves_intensity;
    if le == 0.0 {
        return Ok(0.0);
    }
    let range = (0.0, config.disk_radius);
    let (integral, _) = radial_integral(config, scheme, range, |r| r, method, tol)?;
    Ok(2.0 * PI * le * integral)
}

/// Part of the lower bound contributed by nearest-eavesdropper distances in
/// `[from, to]`, a sub-band of `[0, D]`.
pub fn nearest_intercept_mass(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    (from, to): (f64, f64),
    method: Method,
    tol: f64,
) -> Result<f64, OutageError> {
    validate(*config, *scheme)?;
    let (le, d) = (config.eaves_intensity, config.disk_radius);
    if !(0.0 <= from && from <= to && to <= d) {
        return Err(OutageError::Precondition(format!(
            "band [{from}, {to}] must lie within [0, {d}]"
        )));
    }
    if le == 0.0 || from == to {
        return Ok(0.0);
    }
    radial_integral(
        config,
        scheme,
        (from, to),
        |r| nearest_eaves_pdf(r, le, d),
        method,
        tol,
    )
    .map(|(v, _)| v)
}

fn sop_lower_with_error(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<(f64, f64), OutageError> {
    validate(*config, *scheme)?;
    let (le, d) = (config.eaves_intensity, config.disk_radius);
    if le == 0.0 {
        return Ok((0.0, 0.0));
    }
    radial_integral(
        config,
        scheme,
        (0.0, d),
        |r| nearest_eaves_pdf(r, le, d),
        method,
        tol,
    )
}

/// Upper bound on the secrecy outage probability,
/// `1 − exp(−2π λ_e ∫_0^D L(β_e r^α)|_{‖z‖=r} r dr)`.
pub fn secrecy_outage_upper(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<f64, OutageError> {
    sop_upper_with_error(config, scheme, method, tol).map(|(p, _)| p)
}

/// Lower bound from the eavesdropper nearest to the transmitter. The
/// nearest-distance density is defective on the finite disk; the missing
/// mass (no eavesdropper at all) contributes no outage.
pub fn secrecy_outage_lower(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<f64, OutageError> {
    sop_lower_with_error(config, scheme, method, tol).map(|(p, _)| p)
}

/// Far-field intercept probability when every node within `R2` jams:
/// `exp(−λ π R2² β_e / (β_e + 1))`.
pub fn far_eaves_intercept_limit(
    scheme: &JammingScheme,
    lambda: f64,
    eaves_sir_threshold: f64,
) -> Result<f64, OutageError> {
    if scheme.policy != (Policy::Constant { p: 1.0 }) {
        return Err(OutageError::Precondition(format!(
            "far-field limit needs policy E(1), got {}",
            scheme.policy
        )));
    }
    let be = eaves_sir_threshold;
    let r2 = scheme.lfa_outer;
    Ok((-lambda * PI * r2 * r2 * be / (be + 1.0)).exp())
}

/// TOP plus both SOP bounds.
pub fn outage_report(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    method: Method,
    tol: f64,
) -> Result<OutageReport, OutageError> {
    let top = transmission_outage(config, scheme, method, tol)?;
    let (sop_upper, e_up) = sop_upper_with_error(config, scheme, method, tol)?;
    let (sop_lower, e_lo) = sop_lower_with_error(config, scheme, method, tol)?;
    Ok(OutageReport {
        top,
        sop_upper,
        sop_lower,
        method,
        quadrature_error: e_up.max(e_lo),
    })
}
