//! Poisson point processes on the network disk, friendship-based thinning
//! and Rayleigh fading draws.

use std::f64::consts::{PI, TAU};

use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use thiserror::Error;

use crate::model::{JammingScheme, Point, PointSet, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("radius {r} outside the friendship annulus [{r1}, {r2}]")]
    OutsideAnnulus { r: f64, r1: f64, r2: f64 },
}

/// Deterministic random stream keyed by `(seed, index)`.
///
/// Backed by ChaCha8, a counter-based generator: the seed selects the key and
/// the index selects the 64-bit stream id, so streams for different indices
/// never overlap and can be consumed in any order.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        RngStream { seed, index, inner }
    }

    /// Independent stream for a named purpose within the same index.
    pub fn substream(&self, tag: u64) -> Self {
        let mixed = splitmix64(self.seed ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d)));
        Self::new(mixed, self.index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Annulus selection probability `P(r)` for a given scheme and path-loss
/// exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyFn {
    pub policy: Policy,
    pub r1: f64,
    pub r2: f64,
    pub alpha: f64,
}

impl PolicyFn {
    pub fn new(scheme: &JammingScheme, alpha: f64) -> Self {
        PolicyFn {
            policy: scheme.policy,
            r1: scheme.lfc_radius,
            r2: scheme.lfa_outer,
            alpha,
        }
    }

    /// `P(r)` without the domain check; callers guarantee `r1 <= r <= r2`.
    pub(crate) fn eval(&self, r: f64) -> f64 {
        let lo = self.r1.powf(self.alpha);
        let hi = self.r2.powf(self.alpha);
        let span = hi - lo;
        match self.policy {
            Policy::Constant { p } => p,
            // degenerate annulus: use the r = R1 endpoint values
            Policy::Increasing if span <= 0.0 => 0.0,
            Policy::Decreasing if span <= 0.0 => 1.0,
            Policy::Increasing => ((r.powf(self.alpha) - lo) / span).clamp(0.0, 1.0),
            Policy::Decreasing => ((hi - r.powf(self.alpha)) / span).clamp(0.0, 1.0),
        }
    }

    pub fn selection_probability(&self, r: f64) -> Result<f64, GeometryError> {
        if !(self.r1 <= r && r <= self.r2) {
            return Err(GeometryError::OutsideAnnulus {
                r,
                r1: self.r1,
                r2: self.r2,
            });
        }
        Ok(self.eval(r))
    }

    /// Expected number of annulus jammers per unit legitimate intensity,
    /// `∫_{R1}^{R2} 2π r P(r) dr`.
    pub fn expected_long_range_per_intensity(&self) -> f64 {
        let (r1, r2, a) = (self.r1, self.r2, self.alpha);
        let area = PI * (r2 * r2 - r1 * r1);
        let span = r2.powf(a) - r1.powf(a);
        let increasing = || {
            if span <= 0.0 {
                return 0.0;
            }
            TAU / span
                * ((r2.powf(a + 2.0) - r1.powf(a + 2.0)) / (a + 2.0)
                    - r1.powf(a) * (r2 * r2 - r1 * r1) / 2.0)
        };
        match self.policy {
            Policy::Constant { p } => p * area,
            Policy::Increasing => increasing(),
            Policy::Decreasing => area - increasing(),
        }
    }
}

/// Homogeneous PPP on the disk of radius `region_radius`: a Poisson count
/// followed by i.i.d. uniform placement.
pub fn sample_ppp(intensity: f64, region_radius: f64, rng: &mut RngStream) -> PointSet {
    let mean = intensity * PI * region_radius * region_radius;
    if !(mean > 0.0) {
        return PointSet::new(Vec::new(), region_radius);
    }
    let count = Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as usize;
    let points = (0..count)
        .map(|_| {
            let r = region_radius * rng.uniform().sqrt();
            let theta = TAU * rng.uniform();
            Point::new(r, theta)
        })
        .collect();
    PointSet::new(points, region_radius)
}

/// Jammer flag for every point of `legit`, in order.
///
/// LFC members (`r < R1`) always jam and consume no randomness. Every point
/// with `R1 <= r <= R2` consumes exactly one uniform draw regardless of the
/// policy, so two policies run on the same stream are coupled.
pub fn select_jammer_mask(legit: &PointSet, policy: &PolicyFn, rng: &mut RngStream) -> Vec<bool> {
    legit
        .iter()
        .map(|pt| {
            if pt.r < policy.r1 {
                true
            } else if pt.r <= policy.r2 {
                rng.uniform() < policy.eval(pt.r)
            } else {
                false
            }
        })
        .collect()
}

/// Thins `legit` into the jammer process.
pub fn select_jammers(legit: &PointSet, policy: &PolicyFn, rng: &mut RngStream) -> PointSet {
    let mask = select_jammer_mask(legit, policy, rng);
    let points = legit
        .iter()
        .zip(mask)
        .filter_map(|(pt, keep)| keep.then_some(*pt))
        .collect();
    PointSet::new(points, legit.region_radius)
}

/// Unit-mean exponential fading power (Rayleigh amplitude), strictly positive.
pub fn sample_fading(rng: &mut RngStream) -> f64 {
    let u: f64 = Open01.sample(rng);
    -u.ln()
}

/// Density of the nearest-eavesdropper distance on the finite disk. It is
/// defective: it integrates to `1 - exp(-λ_e π D²)`, the remaining mass being
/// the event of no eavesdropper at all.
pub fn nearest_eaves_pdf(r: f64, eaves_intensity: f64, disk_radius: f64) -> f64 {
    if !(0.0..=disk_radius).contains(&r) {
        return 0.0;
    }
    2.0 * eaves_intensity * PI * r * (-eaves_intensity * PI * r * r).exp()
}
