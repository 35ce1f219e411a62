//! Monte Carlo simulation of jump-diffusion paths to first crossing.
//!
//! Paths follow Euler–Maruyama steps merged with exact exponential jump
//! clocks: each jump stream keeps its own next-arrival time, diffusion
//! increments are split at jump instants, and jumps land at their exact
//! times, so pure-jump presets are simulated without discretisation error.
//! Crossing times are interpolated linearly inside the crossing step and
//! the area is accumulated by the trapezoid rule up to the interpolated
//! time. The optional bridge correction declares a crossing inside a
//! non-crossing diffusive step with probability
//! `exp(-2 (S - X_k)(S - X_{k+1}) / (sigma^2(X_k) dt))`.
//!
//! Reproducibility: path `i` draws from the counter-based stream
//! `(seed, i)` of a ChaCha cipher RNG, so results are independent of
//! scheduling; aggregation reduces fixed-size chunks in fixed order, which
//! makes every estimate bit-identical for a given seed regardless of the
//! worker count.

use crate::closed_form::{self, CurveLabel, LaplaceCurve};
use crate::process::{Barrier, Preset, ProcessSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid Monte Carlo config: {0}")]
    InvalidConfig(&'static str),
    #[error("state diverged to a non-finite value at t = {0}")]
    StateDiverged(f64),
    #[error("no usable (uncensored) samples")]
    NoSamples,
    #[error("degenerate histogram range [{0}, {1}]")]
    DegenerateRange(f64, f64),
    #[error("histogram needs at least 2 samples and 1 bin")]
    TooFewSamples,
    #[error("no closed-form minimum law for this preset")]
    NoMinimumLaw,
    #[error(transparent)]
    ClosedForm(#[from] closed_form::ClosedFormError),
}

/// Simulation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    pub dt: f64,
    pub n_paths: usize,
    /// Censoring horizon: paths still below the barrier at `t_max` are
    /// reported censored, excluded from moment estimates, and counted in
    /// `censored_fraction`.
    pub t_max: f64,
    pub seed: u64,
    pub bridge_correction: bool,
}

impl MCConfig {
    pub fn new(
        dt: f64,
        n_paths: usize,
        t_max: f64,
        seed: u64,
        bridge_correction: bool,
    ) -> Result<Self, McError> {
        if !(dt > 0.0) {
            return Err(McError::InvalidConfig("dt must be positive"));
        }
        if t_max < 100.0 * dt {
            return Err(McError::InvalidConfig("t_max must be at least 100 dt"));
        }
        if n_paths == 0 {
            return Err(McError::InvalidConfig("n_paths must be at least 1"));
        }
        Ok(MCConfig {
            dt,
            n_paths,
            t_max,
            seed,
            bridge_correction,
        })
    }

    /// Default censoring horizon: 50 closed-form mean crossing times when a
    /// mean is available for the preset, else 50 time units.
    pub fn default_t_max(spec: &ProcessSpec, barrier: &Barrier) -> f64 {
        let mean = match spec.preset() {
            Some(Preset::BmDrift { mu }) if mu > 0.0 => {
                closed_form::bm_fpt_moments(barrier, mu).ok().map(|m| m.first)
            }
            Some(Preset::Poisson { theta }) => closed_form::poisson_fpt_law(barrier, theta)
                .ok()
                .map(|l| l.moments.first),
            Some(Preset::Ou { mu, sigma }) => {
                closed_form::ou_mean_fpt(barrier, mu, sigma).ok()
            }
            _ => None,
        };
        match mean {
            Some(m) if m > 0.0 => 50.0 * m,
            _ => 50.0,
        }
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSample {
    pub tau: f64,
    pub area: f64,
    pub minimum: f64,
    pub censored: bool,
}

/// Which sample field a statistic refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Tau,
    Area,
}

impl Field {
    fn get(self, s: &CrossingSample) -> f64 {
        match self {
            Field::Tau => s.tau,
            Field::Area => s.area,
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub value: f64,
    /// Sample standard deviation over sqrt(n).
    pub stderr: f64,
    pub n_effective: usize,
    pub censored_fraction: f64,
}

impl MomentEstimate {
    /// Signed distance to a reference value in standard errors.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference) / self.stderr
    }
}

/// First and second raw-moment estimates of one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub mean: MomentEstimate,
    pub second: MomentEstimate,
}

/// Aggregated crossing statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingStats {
    pub tau: FieldStats,
    pub area: FieldStats,
    pub n_paths: usize,
    pub n_censored: usize,
    pub censored_fraction: f64,
    /// Set when more than half the paths were censored; moment estimates
    /// are then dominated by the censoring bias.
    pub unreliable: bool,
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

const EXP_NEGLIGIBLE: f64 = -37.0; // e^{-37} < 1e-16: skip the bridge draw

struct StepOutcome {
    x_new: f64,
    crossed_at: Option<f64>, // absolute time of crossing
    area_inc: f64,
}

/// One Euler–Maruyama increment over `[t0, t1]` with node-crossing
/// interpolation and optional bridge correction.
#[inline]
fn diffuse_step(
    spec: &ProcessSpec,
    s: f64,
    x: f64,
    t0: f64,
    t1: f64,
    bridge: bool,
    rng: &mut ChaCha8Rng,
) -> StepOutcome {
    let dt = t1 - t0;
    let sigma = spec.diffusion(x);
    let drift = spec.drift(x);
    let mut x_new = if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        x + drift * dt + sigma * dt.sqrt() * z
    } else {
        x + drift * dt
    };
    let (lo, hi) = spec.state_interval();
    if lo.is_finite() && x_new < lo {
        x_new = lo;
    }
    if hi.is_finite() && x_new > hi {
        x_new = hi;
    }
    if x_new >= s {
        // linear interpolation of the crossing time inside the step
        let frac = if x_new > x { ((s - x) / (x_new - x)).clamp(0.0, 1.0) } else { 1.0 };
        let tau = t0 + frac * dt;
        return StepOutcome {
            x_new,
            crossed_at: Some(tau),
            area_inc: 0.5 * (x + s) * frac * dt,
        };
    }
    if bridge && sigma > 0.0 {
        let expo = -2.0 * (s - x) * (s - x_new) / (sigma * sigma * dt);
        if expo > EXP_NEGLIGIBLE {
            let u: f64 = rng.gen();
            if u < expo.exp() {
                // unobserved excursion reached the barrier inside the step;
                // charge half the step and the chord-to-barrier area
                let tau = t0 + 0.5 * dt;
                return StepOutcome {
                    x_new,
                    crossed_at: Some(tau),
                    area_inc: 0.5 * (x + s) * 0.5 * dt,
                };
            }
        }
    }
    StepOutcome {
        x_new,
        crossed_at: None,
        area_inc: 0.5 * (x + x_new) * dt,
    }
}

/// Simulate one path to first crossing or censoring.
pub fn simulate_path(
    spec: &ProcessSpec,
    barrier: &Barrier,
    cfg: &MCConfig,
    path_index: u64,
) -> Result<CrossingSample, McError> {
    let mut rng = path_rng(cfg.seed, path_index);
    let s = barrier.level;
    let mut x = barrier.start;
    let mut t = 0.0f64;
    let mut area = 0.0f64;
    let mut minimum = x;

    // exact exponential arrival clocks, one per stream
    let jumps = spec.jumps();
    let mut next_jump: Vec<f64> = jumps
        .iter()
        .map(|j| {
            if j.rate > 0.0 {
                rng.gen::<f64>().ln() / -j.rate
            } else {
                f64::INFINITY
            }
        })
        .collect();

    let diffusive = !matches!(spec.diffusion(x), v if v == 0.0)
        || spec.jumps().is_empty();

    while t < cfg.t_max {
        let t_node = (t + cfg.dt).min(cfg.t_max);

        // jumps due before the next node, in time order
        loop {
            let mut k_min = usize::MAX;
            let mut tj = t_node;
            for (k, &tk) in next_jump.iter().enumerate() {
                if tk <= tj {
                    tj = tk;
                    k_min = k;
                }
            }
            if k_min == usize::MAX {
                break;
            }
            // diffusion up to the jump instant
            if tj > t {
                let out = diffuse_step(spec, s, x, t, tj, cfg.bridge_correction, &mut rng);
                area += out.area_inc;
                if let Some(tau) = out.crossed_at {
                    return Ok(CrossingSample {
                        tau,
                        area,
                        minimum,
                        censored: false,
                    });
                }
                x = out.x_new;
                minimum = minimum.min(x);
            }
            t = tj;
            x += jumps[k_min].amplitude;
            let (lo, hi) = spec.state_interval();
            x = x.clamp(
                if lo.is_finite() { lo } else { f64::MIN },
                if hi.is_finite() { hi } else { f64::MAX },
            );
            minimum = minimum.min(x);
            next_jump[k_min] = t + rng.gen::<f64>().ln() / -jumps[k_min].rate;
            if x >= s {
                // jump overshoot: the crossing time is the jump time itself
                return Ok(CrossingSample {
                    tau: t,
                    area,
                    minimum,
                    censored: false,
                });
            }
        }

        // diffusion to the node
        if t_node > t {
            let out = diffuse_step(spec, s, x, t, t_node, cfg.bridge_correction, &mut rng);
            area += out.area_inc;
            if let Some(tau) = out.crossed_at {
                return Ok(CrossingSample {
                    tau,
                    area,
                    minimum,
                    censored: false,
                });
            }
            x = out.x_new;
            minimum = minimum.min(x);
        }
        if !x.is_finite() {
            return Err(McError::StateDiverged(t));
        }
        t = t_node;
        let _ = diffusive;
    }
    Ok(CrossingSample {
        tau: cfg.t_max,
        area,
        minimum,
        censored: true,
    })
}

/// Simulate all paths of the configuration, in path-index order.
///
/// Path generation parallelises over the global rayon pool; per-path RNG
/// streams make the result independent of the worker count.
pub fn simulate_paths(
    spec: &ProcessSpec,
    barrier: &Barrier,
    cfg: &MCConfig,
) -> Result<Vec<CrossingSample>, McError> {
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(spec, barrier, cfg, i))
        .collect()
}

/// As [`simulate_paths`], on a dedicated pool of `workers` threads.
pub fn simulate_paths_with_workers(
    spec: &ProcessSpec,
    barrier: &Barrier,
    cfg: &MCConfig,
    workers: usize,
) -> Result<Vec<CrossingSample>, McError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|_| McError::InvalidConfig("could not build worker pool"))?;
    pool.install(|| simulate_paths(spec, barrier, cfg))
}

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Default)]
struct Partial {
    n: usize,
    sum: [f64; 6], // tau, tau^2, tau^4, area, area^2, area^4
}

impl Partial {
    fn add(&mut self, s: &CrossingSample) {
        if s.censored {
            return;
        }
        self.n += 1;
        let (t, a) = (s.tau, s.area);
        self.sum[0] += t;
        self.sum[1] += t * t;
        self.sum[2] += (t * t) * (t * t);
        self.sum[3] += a;
        self.sum[4] += a * a;
        self.sum[5] += (a * a) * (a * a);
    }

    fn merge(&mut self, other: &Partial) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(other.sum.iter()) {
            *a += b;
        }
    }
}

fn estimate(sum: f64, sum_sq: f64, n: usize, censored_fraction: f64) -> MomentEstimate {
    let nf = n as f64;
    let value = sum / nf;
    let var = if n > 1 {
        ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    MomentEstimate {
        value,
        stderr: (var / nf).sqrt(),
        n_effective: n,
        censored_fraction,
    }
}

/// Aggregate samples into moment estimates.
///
/// Reduction contract: fixed chunks of 4096 samples accumulated in index
/// order, chunk partials merged in chunk order — associative, fixed-order,
/// bit-identical for a given sample vector however it was produced.
pub fn estimate_crossing_stats(samples: &[CrossingSample]) -> Result<CrossingStats, McError> {
    if samples.is_empty() {
        return Err(McError::NoSamples);
    }
    let partials: Vec<Partial> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut p = Partial::default();
            for s in chunk {
                p.add(s);
            }
            p
        })
        .collect();
    let mut total = Partial::default();
    for p in &partials {
        total.merge(&p.clone());
    }
    let n = total.n;
    if n == 0 {
        return Err(McError::NoSamples);
    }
    let n_censored = samples.len() - n;
    let censored_fraction = n_censored as f64 / samples.len() as f64;
    Ok(CrossingStats {
        tau: FieldStats {
            mean: estimate(total.sum[0], total.sum[1], n, censored_fraction),
            second: estimate(total.sum[1], total.sum[2], n, censored_fraction),
        },
        area: FieldStats {
            mean: estimate(total.sum[3], total.sum[4], n, censored_fraction),
            second: estimate(total.sum[4], total.sum[5], n, censored_fraction),
        },
        n_paths: samples.len(),
        n_censored,
        censored_fraction,
        unreliable: censored_fraction > 0.5,
    })
}

/// Empirical Laplace transform of a sample field on a lambda grid:
/// `value(lambda) = mean of exp(-lambda v)` over uncensored samples.
pub fn empirical_lt(
    samples: &[CrossingSample],
    field: Field,
    lambdas: &[f64],
) -> Result<LaplaceCurve, McError> {
    let values: Vec<f64> = samples
        .iter()
        .filter(|s| !s.censored)
        .map(|s| field.get(s))
        .collect();
    if values.is_empty() {
        return Err(McError::NoSamples);
    }
    let n = values.len() as f64;
    let curve = lambdas
        .iter()
        .map(|&l| values.iter().map(|v| (-l * v).exp()).sum::<f64>() / n)
        .collect();
    Ok(LaplaceCurve {
        lambdas: lambdas.to_vec(),
        values: curve,
        label: CurveLabel::Empirical,
    })
}

/// A normalized histogram: with censored paths present, the density
/// integrates to `1 - censored_fraction`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Mean of the binned density (mass-weighted bin centres).
    pub fn mean(&self) -> f64 {
        let w = self.bin_width();
        let mass: f64 = self.density.iter().sum::<f64>() * w;
        let m: f64 = self
            .density
            .iter()
            .enumerate()
            .map(|(i, d)| d * w * 0.5 * (self.edges[i] + self.edges[i + 1]))
            .sum();
        m / mass
    }

    pub fn peak(&self) -> f64 {
        self.density.iter().cloned().fold(f64::MIN, f64::max)
    }
}

/// Histogram of a sample field over `range` with equal-width bins,
/// normalized by the total path count (so censored mass is visible as a
/// deficit). Uncensored samples outside the range are dropped.
pub fn histogram(
    samples: &[CrossingSample],
    field: Field,
    bins: usize,
    range: (f64, f64),
) -> Result<Histogram, McError> {
    if samples.len() < 2 || bins == 0 {
        return Err(McError::TooFewSamples);
    }
    let (lo, hi) = range;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(McError::DegenerateRange(lo, hi));
    }
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for s in samples.iter().filter(|s| !s.censored) {
        let v = field.get(s);
        if v < lo || v > hi {
            continue;
        }
        let b = (((v - lo) / w) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let norm = samples.len() as f64 * w;
    Ok(Histogram {
        edges: (0..=bins).map(|i| lo + w * i as f64).collect(),
        density: counts.iter().map(|c| *c as f64 / norm).collect(),
    })
}

/// Two-sided Kolmogorov–Smirnov distance between the empirical law of
/// `values` and the distribution function `cdf`.
pub fn ks_statistic(values: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in values.iter().enumerate() {
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i as f64 + 1.0) / n - f).abs());
    }
    d
}

/// KS distance between the empirical pre-crossing-minimum law (uncensored
/// samples) and the preset's closed-form minimum distribution.
pub fn min_law_check(
    samples: &[CrossingSample],
    spec: &ProcessSpec,
    barrier: &Barrier,
) -> Result<f64, McError> {
    let mut minima: Vec<f64> = samples
        .iter()
        .filter(|s| !s.censored)
        .map(|s| s.minimum)
        .collect();
    if minima.is_empty() {
        return Err(McError::NoSamples);
    }
    match spec.preset() {
        Some(Preset::BmDrift { mu }) if mu >= 0.0 => {
            let cdf = |z: f64| closed_form::bm_min_cdf(z, barrier, mu).unwrap_or(f64::NAN);
            Ok(ks_statistic(&mut minima, cdf))
        }
        Some(Preset::Ou { mu, sigma }) => {
            let cdf =
                |z: f64| closed_form::ou_min_cdf(z, barrier, mu, sigma).unwrap_or(f64::NAN);
            Ok(ks_statistic(&mut minima, cdf))
        }
        _ => Err(McError::NoMinimumLaw),
    }
}
