//! Network configuration, jamming scheme and the SIR primitives shared by the
//! analytic and simulation paths.
//!
//! The transmitter sits at the origin and the intended receiver at the fixed
//! point `(l, 0)`. All node locations are kept in polar form about the
//! transmitter.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Errors raised by configuration checks and the SIR primitive.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("transmitter distance must be positive, got {0}")]
    ZeroDistance(f64),
    #[error("unknown policy `{0}` (expected E, I or D)")]
    UnknownPolicy(String),
}

/// Physical parameters of the finite Poisson network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    /// Radius `D` of the network disk.
    pub disk_radius: f64,
    /// Intensity `λ` of legitimate nodes.
    pub legit_intensity: f64,
    /// Intensity `λ_e` of eavesdroppers.
    pub eaves_intensity: f64,
    /// Transmitter-receiver distance `l`.
    pub tx_rx_distance: f64,
    /// Path-loss exponent `α`.
    pub path_loss_alpha: f64,
    /// Receiver SIR threshold `β`.
    pub rx_sir_threshold: f64,
    /// Eavesdropper SIR threshold `β_e`.
    pub eaves_sir_threshold: f64,
}

impl NetworkConfig {
    /// Simulation-validation setting used throughout the examples and tests:
    /// D = 30, λ = 0.1, λ_e = 0.001, l = 1, α = 4, β = 0.5, β_e = 0.1.
    pub fn reference() -> Self {
        NetworkConfig {
            disk_radius: 30.0,
            legit_intensity: 0.1,
            eaves_intensity: 0.001,
            tx_rx_distance: 1.0,
            path_loss_alpha: 4.0,
            rx_sir_threshold: 0.5,
            eaves_sir_threshold: 0.1,
        }
    }

    /// Position of the intended receiver.
    pub fn receiver(&self) -> Point {
        Point::new(self.tx_rx_distance, 0.0)
    }

    fn violations(&self, out: &mut Vec<String>) {
        let finite_nonneg = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(v.is_finite() && v >= 0.0) {
                out.push(format!("{name} must be finite and >= 0, got {v}"));
            }
        };
        if !(self.disk_radius.is_finite() && self.disk_radius > 0.0) {
            out.push(format!("D must be positive, got {}", self.disk_radius));
        }
        finite_nonneg("lambda", self.legit_intensity, out);
        finite_nonneg("lambda_e", self.eaves_intensity, out);
        if !(self.tx_rx_distance.is_finite() && self.tx_rx_distance > 0.0) {
            out.push(format!("l must be positive, got {}", self.tx_rx_distance));
        } else if self.tx_rx_distance > self.disk_radius {
            out.push(format!(
                "l exceeds D ({} > {})",
                self.tx_rx_distance, self.disk_radius
            ));
        }
        if !(self.path_loss_alpha.is_finite() && self.path_loss_alpha >= 2.0) {
            out.push(format!("alpha must be >= 2, got {}", self.path_loss_alpha));
        }
        if !(self.rx_sir_threshold.is_finite() && self.rx_sir_threshold > 0.0) {
            out.push(format!(
                "beta must be positive, got {}",
                self.rx_sir_threshold
            ));
        }
        if !(self.eaves_sir_threshold.is_finite() && self.eaves_sir_threshold > 0.0) {
            out.push(format!(
                "beta_e must be positive, got {}",
                self.eaves_sir_threshold
            ));
        }
    }
}

/// Long-range jammer selection policy applied inside the friendship annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Policy E: every annulus node jams with the same probability `p`.
    Constant { p: f64 },
    /// Policy I: selection probability increasing with path loss.
    Increasing,
    /// Policy D: selection probability decreasing with path loss.
    Decreasing,
}

impl Policy {
    /// Single-letter tag used in config files and CSV output.
    pub fn tag(&self) -> &'static str {
        match self {
            Policy::Constant { .. } => "E",
            Policy::Increasing => "I",
            Policy::Decreasing => "D",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Constant { p } => write!(f, "E({p})"),
            other => f.write_str(other.tag()),
        }
    }
}

/// Parses `E(0.1)`, `I` or `D`. A bare `E` is rejected because it carries no
/// probability.
impl FromStr for Policy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s {
            "I" | "i" => return Ok(Policy::Increasing),
            "D" | "d" => return Ok(Policy::Decreasing),
            _ => {}
        }
        let inner = s
            .strip_prefix("E(")
            .or_else(|| s.strip_prefix("e("))
            .and_then(|rest| rest.strip_suffix(')'));
        match inner.map(|v| v.trim().parse::<f64>()) {
            Some(Ok(p)) => Ok(Policy::Constant { p }),
            _ => Err(ModelError::UnknownPolicy(s.to_string())),
        }
    }
}

/// Friendship circle / annulus geometry plus the annulus selection policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammingScheme {
    /// Radius `R1` of the local friendship circle.
    pub lfc_radius: f64,
    /// Outer radius `R2` of the long-range friendship annulus.
    pub lfa_outer: f64,
    pub policy: Policy,
}

impl JammingScheme {
    pub fn new(lfc_radius: f64, lfa_outer: f64, policy: Policy) -> Self {
        JammingScheme {
            lfc_radius,
            lfa_outer,
            policy,
        }
    }

    fn violations(&self, out: &mut Vec<String>) {
        let (r1, r2) = (self.lfc_radius, self.lfa_outer);
        if !(r1.is_finite() && r1 > 0.0) {
            out.push(format!("R1 must be positive, got {r1}"));
        }
        if !r2.is_finite() {
            out.push(format!("R2 must be finite, got {r2}"));
        }
        if r1 > r2 {
            out.push(format!("R1 exceeds R2 ({r1} > {r2})"));
        }
        if let Policy::Constant { p } = self.policy {
            if !(0.0..=1.0).contains(&p) {
                out.push(format!("p must lie in [0, 1], got {p}"));
            }
        }
    }
}

/// Checks every invariant of the pair, including the joint `R2 <= D` bound.
pub fn validate(
    config: NetworkConfig,
    scheme: JammingScheme,
) -> Result<(NetworkConfig, JammingScheme), ModelError> {
    let mut violations = Vec::new();
    config.violations(&mut violations);
    scheme.violations(&mut violations);
    if scheme.lfa_outer > config.disk_radius {
        violations.push(format!(
            "R2 exceeds D ({} > {})",
            scheme.lfa_outer, config.disk_radius
        ));
    }
    if violations.is_empty() {
        Ok((config, scheme))
    } else {
        Err(ModelError::Invalid(violations))
    }
}

/// A planar location in polar coordinates about the transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub r: f64,
    /// Angle in `[0, 2π)`.
    pub theta: f64,
}

impl Point {
    pub fn new(r: f64, theta: f64) -> Self {
        debug_assert!(r >= 0.0);
        let mut theta = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        if theta >= TAU {
            theta = 0.0;
        }
        Point { r, theta }
    }

    pub fn origin() -> Self {
        Point { r: 0.0, theta: 0.0 }
    }
}

/// A finite realization of a point process on a disk.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub region_radius: f64,
}

impl PointSet {
    pub fn new(points: Vec<Point>, region_radius: f64) -> Self {
        debug_assert!(points.iter().all(|p| p.r <= region_radius));
        PointSet {
            points,
            region_radius,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }
}

/// Euclidean distance between two polar points (law of cosines).
pub fn distance(a: Point, b: Point) -> f64 {
    let sq = a.r * a.r + b.r * b.r - 2.0 * a.r * b.r * (a.theta - b.theta).cos();
    sq.max(0.0).sqrt()
}

/// Signal-to-interference ratio for unit transmit power.
///
/// Zero interference yields `+inf`.
pub fn sir(
    signal_fade: f64,
    tx_distance: f64,
    alpha: f64,
    interference: f64,
) -> Result<f64, ModelError> {
    if !(tx_distance > 0.0) {
        return Err(ModelError::ZeroDistance(tx_distance));
    }
    if interference == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(signal_fade * tx_distance.powf(-alpha) / interference)
}
