//! Trial-level simulation of the jammed network.
//!
//! Trial `i` of a run with seed `s` draws everything from `RngStream(s, i)`,
//! so any subset of trials can be replayed alone, and counters are summed with
//! integer addition. Aggregate results are therefore identical for sequential
//! and parallel execution.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::geometry::{sample_fading, sample_ppp, select_jammer_mask, PolicyFn, RngStream};
use crate::model::{
    distance, sir, validate, JammingScheme, ModelError, NetworkConfig, Point, PointSet,
};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

const STREAM_POSITIONS: u64 = 0;
const STREAM_THINNING: u64 = 1;
const STREAM_FADING: u64 = 2;

/// How trials are scheduled. Without the `parallel` feature both variants run
/// sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub transmission_outage: bool,
    pub secrecy_outage: bool,
    /// Outage caused by the eavesdropper nearest to the transmitter alone.
    pub nearest_secrecy_outage: bool,
    pub n_jammers: usize,
    pub n_eaves: usize,
    pub rx_sir: f64,
    pub max_eaves_sir: Option<f64>,
    pub nearest_eaves_sir: Option<f64>,
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> Interval {
    if n == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Interval {
        lo: (center - half).max(0.0).min(p),
        hi: (center + half).min(1.0).max(p),
    }
}

/// Binomial standard error `sqrt(p (1 − p) / n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// A rate with its 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub n_trials: u64,
    pub count: u64,
    pub rate: f64,
    pub ci: Interval,
}

impl RateEstimate {
    fn new(count: u64, n_trials: u64) -> Self {
        RateEstimate {
            n_trials,
            count,
            rate: count as f64 / n_trials as f64,
            ci: wilson_interval(count, n_trials, Z_95),
        }
    }

    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.rate, self.n_trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub n_trials: u64,
    pub top_hat: f64,
    pub top_ci: Interval,
    pub sop_hat: f64,
    pub sop_ci: Interval,
    pub seed: u64,
}

/// Integer outage counters; merging is commutative and associative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub trials: u64,
    pub transmission: u64,
    pub secrecy: u64,
    pub nearest_secrecy: u64,
}

impl Counts {
    fn from_outcome(o: &TrialOutcome) -> Self {
        Counts {
            trials: 1,
            transmission: o.transmission_outage as u64,
            secrecy: o.secrecy_outage as u64,
            nearest_secrecy: o.nearest_secrecy_outage as u64,
        }
    }

    pub fn merge(self, other: Counts) -> Counts {
        Counts {
            trials: self.trials + other.trials,
            transmission: self.transmission + other.transmission,
            secrecy: self.secrecy + other.secrecy,
            nearest_secrecy: self.nearest_secrecy + other.nearest_secrecy,
        }
    }

    pub fn estimates(&self, seed: u64) -> Estimates {
        let top = RateEstimate::new(self.transmission, self.trials);
        let sop = RateEstimate::new(self.secrecy, self.trials);
        Estimates {
            n_trials: self.trials,
            top_hat: top.rate,
            top_ci: top.ci,
            sop_hat: sop.rate,
            sop_ci: sop.ci,
            seed,
        }
    }

    pub fn transmission_rate(&self) -> RateEstimate {
        RateEstimate::new(self.transmission, self.trials)
    }

    pub fn secrecy_rate(&self) -> RateEstimate {
        RateEstimate::new(self.secrecy, self.trials)
    }

    pub fn nearest_secrecy_rate(&self) -> RateEstimate {
        RateEstimate::new(self.nearest_secrecy, self.trials)
    }
}

fn sample_eavesdroppers(intensity: f64, radius: f64, rng: &mut RngStream) -> PointSet {
    let mut set = sample_ppp(intensity, radius, rng);
    // an eavesdropper on top of the transmitter has no defined SIR
    for pt in set.points.iter_mut() {
        while pt.r == 0.0 {
            *pt = Point::new(
                radius * rng.uniform().sqrt(),
                std::f64::consts::TAU * rng.uniform(),
            );
        }
    }
    set
}

/// Simulates one block: node placement, jammer selection, fading and SIRs.
///
/// Fading is drawn per potential jammer (every legitimate node within `R2`)
/// whether or not it is selected, so changing only the policy keeps all
/// shared fades identical.
pub fn run_trial(config: &NetworkConfig, scheme: &JammingScheme, rng: &RngStream) -> TrialOutcome {
    let alpha = config.path_loss_alpha;
    let mut positions = rng.substream(STREAM_POSITIONS);
    let legit = sample_ppp(config.legit_intensity, config.disk_radius, &mut positions);
    let eaves = sample_eavesdroppers(config.eaves_intensity, config.disk_radius, &mut positions);

    let policy = PolicyFn::new(scheme, alpha);
    let mask = select_jammer_mask(&legit, &policy, &mut rng.substream(STREAM_THINNING));

    let mut fading = rng.substream(STREAM_FADING);
    let h_rx = sample_fading(&mut fading);
    let h_eaves: Vec<f64> = eaves.iter().map(|_| sample_fading(&mut fading)).collect();

    let receiver = config.receiver();
    let mut rx_interference = 0.0;
    let mut eaves_interference = vec![0.0; eaves.len()];
    let mut n_jammers = 0;
    for (x, &jams) in legit.iter().zip(&mask) {
        if x.r > scheme.lfa_outer {
            continue;
        }
        let g_rx = sample_fading(&mut fading);
        let g_eaves: Vec<f64> = eaves.iter().map(|_| sample_fading(&mut fading)).collect();
        if !jams {
            continue;
        }
        n_jammers += 1;
        rx_interference += g_rx * distance(*x, receiver).powf(-alpha);
        for ((acc, z), g) in eaves_interference.iter_mut().zip(eaves.iter()).zip(g_eaves) {
            *acc += g * distance(*x, *z).powf(-alpha);
        }
    }

    let rx_sir = sir(h_rx, config.tx_rx_distance, alpha, rx_interference)
        .expect("validated receiver distance is positive");
    let eaves_sirs: Vec<f64> = eaves
        .iter()
        .zip(&h_eaves)
        .zip(&eaves_interference)
        .map(|((z, &h), &i)| sir(h, z.r, alpha, i).expect("eavesdroppers are never at the origin"))
        .collect();
    let max_eaves_sir = eaves_sirs.iter().copied().reduce(f64::max);
    let nearest_eaves_sir = eaves
        .iter()
        .zip(&eaves_sirs)
        .min_by(|a, b| a.0.r.total_cmp(&b.0.r))
        .map(|(_, &s)| s);
    let beta_e = config.eaves_sir_threshold;
    TrialOutcome {
        transmission_outage: rx_sir < config.rx_sir_threshold,
        secrecy_outage: max_eaves_sir.is_some_and(|s| s > beta_e),
        nearest_secrecy_outage: nearest_eaves_sir.is_some_and(|s| s > beta_e),
        n_jammers,
        n_eaves: eaves.len(),
        rx_sir,
        max_eaves_sir,
        nearest_eaves_sir,
    }
}

/// Runs `n_trials` trials on streams `(seed, 0..n_trials)` and sums their
/// counters.
pub fn simulate(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    n_trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<Counts, ModelError> {
    validate(*config, *scheme)?;
    let one = |i: u64| Counts::from_outcome(&run_trial(config, scheme, &RngStream::new(seed, i)));
    let counts = match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n_trials)
            .into_par_iter()
            .map(one)
            .reduce(Counts::default, Counts::merge),
        _ => (0..n_trials)
            .map(one)
            .fold(Counts::default(), Counts::merge),
    };
    Ok(counts)
}

/// Transmission and secrecy outage rates with 95% Wilson intervals.
pub fn estimate(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    n_trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<Estimates, ModelError> {
    assert!(n_trials >= 1, "need at least one trial");
    simulate(config, scheme, n_trials, seed, execution).map(|c| c.estimates(seed))
}

/// Secrecy outage rate counting only the eavesdropper nearest to the
/// transmitter.
pub fn estimate_nearest_only(
    config: &NetworkConfig,
    scheme: &JammingScheme,
    n_trials: u64,
    seed: u64,
    execution: Execution,
) -> Result<RateEstimate, ModelError> {
    assert!(n_trials >= 1, "need at least one trial");
    simulate(config, scheme, n_trials, seed, execution).map(|c| c.nearest_secrecy_rate())
}
