//! Jump-diffusion process definitions: coefficients, finite-intensity jump
//! streams, the generator action, the worked presets, scale functions and
//! conjugation maps, and the mean-path crossing-finiteness certificate.
//!
//! The dynamics are
//! `dX = b(X) dt + sigma(X) dB + sum_i eps_i dN_i(t)` with independent
//! Poisson streams `N_i` of rates `theta_i`, so the generator is
//! `L f = (1/2) sigma^2 f'' + b f' + sum_i theta_i [f(x + eps_i) - f(x)]`.

use crate::quad;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("unknown preset tag `{0}`")]
    UnknownPreset(String),
    #[error("preset `{tag}` requires {what}, got {value}")]
    InvalidParameter {
        tag: String,
        what: &'static str,
        value: f64,
    },
    #[error("malformed preset string `{0}` (expected e.g. `bm:mu=1.0`)")]
    MalformedPreset(String),
    #[error("barrier start {start} must lie strictly below the level {level}")]
    StartNotBelowBarrier { start: f64, level: f64 },
    #[error("barrier level {level} outside the state interval [{lo}, {hi}]")]
    BarrierOutsideState { level: f64, lo: f64, hi: f64 },
    #[error("state {0} outside the state interval [{1}, {2}]")]
    StateOutsideInterval(f64, f64, f64),
    #[error("jump rate {0} must be non-negative and finite")]
    InvalidJumpRate(f64),
    #[error("no conjugation to driftless Brownian motion is known for `{0}`")]
    NoConjugation(String),
    #[error("scale functions need a jump-free diffusion with sigma > 0 along the path")]
    ScaleUnavailable,
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] quad::QuadError),
}

/// Preset processes with known closed forms, parsed from CLI strings such as
/// `bm:mu=1.0`, `ou:mu=1.0,sigma=1.0`, `poisson:theta=2.0`,
/// `levy:beta=0.5,theta=1.0`, `cir4`, `wf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// Brownian motion with drift: `dX = mu dt + dB`.
    BmDrift { mu: f64 },
    /// Ornstein–Uhlenbeck: `dX = -mu X dt + sigma dB`.
    Ou { mu: f64, sigma: f64 },
    /// Square-root diffusion `dX = (1/4) dt + sqrt(X v 0) dB`, conjugate to
    /// driftless BM via `u(x) = 2 sqrt(x)`.
    CirQuarter,
    /// Wright–Fisher-like `dX = (1/4 - X/2) dt + sqrt(X(1-X) v 0) dB` on
    /// [0,1], conjugate to driftless BM via `u(x) = 2 asin(sqrt(x))`.
    WfConj,
    /// Pure jump `X = x + N_t` with unit jumps at rate theta.
    Poisson { theta: f64 },
    /// `dX = beta dt + dB + dN_t` with unit jumps at rate theta.
    Levy { beta: f64, theta: f64 },
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::BmDrift { mu } => write!(f, "bm:mu={mu}"),
            Preset::Ou { mu, sigma } => write!(f, "ou:mu={mu},sigma={sigma}"),
            Preset::CirQuarter => write!(f, "cir4"),
            Preset::WfConj => write!(f, "wf"),
            Preset::Poisson { theta } => write!(f, "poisson:theta={theta}"),
            Preset::Levy { beta, theta } => write!(f, "levy:beta={beta},theta={theta}"),
        }
    }
}

fn parse_params(raw: &str, text: &str, keys: &[&str]) -> Result<Vec<f64>, ProcessError> {
    let mut out = vec![f64::NAN; keys.len()];
    for piece in text.split(',') {
        let (k, v) = piece
            .split_once('=')
            .ok_or_else(|| ProcessError::MalformedPreset(raw.to_string()))?;
        let idx = keys
            .iter()
            .position(|&key| key == k.trim())
            .ok_or_else(|| ProcessError::MalformedPreset(raw.to_string()))?;
        out[idx] = v
            .trim()
            .parse::<f64>()
            .map_err(|_| ProcessError::MalformedPreset(raw.to_string()))?;
    }
    if out.iter().any(|v| v.is_nan()) {
        return Err(ProcessError::MalformedPreset(raw.to_string()));
    }
    Ok(out)
}

impl FromStr for Preset {
    type Err = ProcessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, rest) = match s.split_once(':') {
            Some((t, r)) => (t.trim(), Some(r)),
            None => (s.trim(), None),
        };
        let preset = match (tag, rest) {
            ("bm", Some(r)) => {
                let p = parse_params(s, r, &["mu"])?;
                Preset::BmDrift { mu: p[0] }
            }
            ("ou", Some(r)) => {
                let p = parse_params(s, r, &["mu", "sigma"])?;
                Preset::Ou {
                    mu: p[0],
                    sigma: p[1],
                }
            }
            ("poisson", Some(r)) => {
                let p = parse_params(s, r, &["theta"])?;
                Preset::Poisson { theta: p[0] }
            }
            ("levy", Some(r)) => {
                let p = parse_params(s, r, &["beta", "theta"])?;
                Preset::Levy {
                    beta: p[0],
                    theta: p[1],
                }
            }
            ("cir4", None) => Preset::CirQuarter,
            ("wf", None) => Preset::WfConj,
            (other, _) => return Err(ProcessError::UnknownPreset(other.to_string())),
        };
        preset.validate()?;
        Ok(preset)
    }
}

impl Preset {
    fn validate(self) -> Result<(), ProcessError> {
        let bad = |tag: &Self, what, value| {
            Err(ProcessError::InvalidParameter {
                tag: tag.to_string(),
                what,
                value,
            })
        };
        match self {
            Preset::BmDrift { mu } => {
                if !mu.is_finite() {
                    return bad(&self, "finite mu", mu);
                }
            }
            Preset::Ou { mu, sigma } => {
                if !(mu > 0.0) {
                    return bad(&self, "mu > 0", mu);
                }
                if !(sigma > 0.0) {
                    return bad(&self, "sigma > 0", sigma);
                }
            }
            Preset::Poisson { theta } => {
                if !(theta > 0.0) {
                    return bad(&self, "theta > 0", theta);
                }
            }
            Preset::Levy { beta, theta } => {
                if !beta.is_finite() {
                    return bad(&self, "finite beta", beta);
                }
                if !(theta > 0.0) {
                    return bad(&self, "theta > 0", theta);
                }
            }
            Preset::CirQuarter | Preset::WfConj => {}
        }
        Ok(())
    }
}

/// A state-dependent coefficient. The closed small set of shapes keeps
/// path simulation branch-predictable; `Custom` covers everything else.
#[derive(Clone)]
pub enum Coefficient {
    Const(f64),
    /// `intercept + slope * x`
    Affine { intercept: f64, slope: f64 },
    /// `sqrt(x v 0)`
    SqrtClamped,
    /// `sqrt(x (1 - x) v 0)`
    SqrtLogisticClamped,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Const(c) => *c,
            Coefficient::Affine { intercept, slope } => intercept + slope * x,
            Coefficient::SqrtClamped => x.max(0.0).sqrt(),
            Coefficient::SqrtLogisticClamped => (x * (1.0 - x)).max(0.0).sqrt(),
            Coefficient::Custom(f) => f(x),
        }
    }

    /// Slope if the coefficient is affine in the state, else `None`.
    fn affine_slope(&self) -> Option<f64> {
        match self {
            Coefficient::Const(_) => Some(0.0),
            Coefficient::Affine { slope, .. } => Some(*slope),
            _ => None,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Const(c) => write!(f, "Const({c})"),
            Coefficient::Affine { intercept, slope } => {
                write!(f, "Affine({intercept} + {slope} x)")
            }
            Coefficient::SqrtClamped => write!(f, "SqrtClamped"),
            Coefficient::SqrtLogisticClamped => write!(f, "SqrtLogisticClamped"),
            Coefficient::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// One independent Poisson jump stream: fixed amplitude at exponential rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpStream {
    pub rate: f64,
    pub amplitude: f64,
}

/// Immutable description of a jump-diffusion; shared freely across threads.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    drift: Coefficient,
    diffusion: Coefficient,
    jumps: Vec<JumpStream>,
    state_interval: (f64, f64),
    preset: Option<Preset>,
}

impl ProcessSpec {
    /// Build the process a preset names, with its coefficients.
    pub fn from_preset(preset: Preset) -> Result<Self, ProcessError> {
        preset.validate()?;
        let spec = match preset {
            Preset::BmDrift { mu } => ProcessSpec {
                drift: Coefficient::Const(mu),
                diffusion: Coefficient::Const(1.0),
                jumps: vec![],
                state_interval: (f64::NEG_INFINITY, f64::INFINITY),
                preset: Some(preset),
            },
            Preset::Ou { mu, sigma } => ProcessSpec {
                drift: Coefficient::Affine {
                    intercept: 0.0,
                    slope: -mu,
                },
                diffusion: Coefficient::Const(sigma),
                jumps: vec![],
                state_interval: (f64::NEG_INFINITY, f64::INFINITY),
                preset: Some(preset),
            },
            Preset::CirQuarter => ProcessSpec {
                drift: Coefficient::Const(0.25),
                diffusion: Coefficient::SqrtClamped,
                jumps: vec![],
                state_interval: (0.0, f64::INFINITY),
                preset: Some(preset),
            },
            Preset::WfConj => ProcessSpec {
                drift: Coefficient::Affine {
                    intercept: 0.25,
                    slope: -0.5,
                },
                diffusion: Coefficient::SqrtLogisticClamped,
                jumps: vec![],
                state_interval: (0.0, 1.0),
                preset: Some(preset),
            },
            Preset::Poisson { theta } => ProcessSpec {
                drift: Coefficient::Const(0.0),
                diffusion: Coefficient::Const(0.0),
                jumps: vec![JumpStream {
                    rate: theta,
                    amplitude: 1.0,
                }],
                state_interval: (f64::NEG_INFINITY, f64::INFINITY),
                preset: Some(preset),
            },
            Preset::Levy { beta, theta } => ProcessSpec {
                drift: Coefficient::Const(beta),
                diffusion: Coefficient::Const(1.0),
                jumps: vec![JumpStream {
                    rate: theta,
                    amplitude: 1.0,
                }],
                state_interval: (f64::NEG_INFINITY, f64::INFINITY),
                preset: Some(preset),
            },
        };
        Ok(spec)
    }

    /// A process outside the preset catalogue. The caller warrants that the
    /// diffusion coefficient is non-negative on the state interval.
    pub fn custom(
        drift: Coefficient,
        diffusion: Coefficient,
        jumps: Vec<JumpStream>,
        state_interval: (f64, f64),
    ) -> Result<Self, ProcessError> {
        for j in &jumps {
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(ProcessError::InvalidJumpRate(j.rate));
            }
        }
        Ok(ProcessSpec {
            drift,
            diffusion,
            jumps,
            state_interval,
            preset: None,
        })
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }

    #[inline]
    pub fn diffusion(&self, x: f64) -> f64 {
        self.diffusion.eval(x)
    }

    pub fn jumps(&self) -> &[JumpStream] {
        &self.jumps
    }

    pub fn has_jumps(&self) -> bool {
        self.jumps.iter().any(|j| j.rate > 0.0)
    }

    /// Total jump intensity `Theta = sum_i theta_i`.
    pub fn total_jump_intensity(&self) -> f64 {
        self.jumps.iter().map(|j| j.rate).sum()
    }

    pub fn state_interval(&self) -> (f64, f64) {
        self.state_interval
    }

    pub fn preset(&self) -> Option<Preset> {
        self.preset
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.state_interval.0 && x <= self.state_interval.1
    }
}

/// Constant barrier `S` approached from a start strictly below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    pub level: f64,
    pub start: f64,
}

impl Barrier {
    pub fn new(level: f64, start: f64) -> Result<Self, ProcessError> {
        if !(start < level) {
            return Err(ProcessError::StartNotBelowBarrier { start, level });
        }
        Ok(Barrier { level, start })
    }

    /// Distance `S - x` from the start to the barrier.
    pub fn gap(&self) -> f64 {
        self.level - self.start
    }

    /// Additionally require barrier and start to sit inside the state
    /// interval (matters for the bounded Wright–Fisher-like preset).
    pub fn validate_for(&self, spec: &ProcessSpec) -> Result<(), ProcessError> {
        let (lo, hi) = spec.state_interval();
        if self.level < lo || self.level > hi {
            return Err(ProcessError::BarrierOutsideState {
                level: self.level,
                lo,
                hi,
            });
        }
        if !spec.contains(self.start) {
            return Err(ProcessError::StateOutsideInterval(self.start, lo, hi));
        }
        Ok(())
    }
}

/// A twice-differentiable test function for the generator. Analytic
/// derivatives are used when supplied; otherwise 4th-order central
/// differences with step `h = max(1e-5, 1e-5 |x|)`.
pub struct SmoothFn<'a> {
    value: &'a dyn Fn(f64) -> f64,
    first: Option<&'a dyn Fn(f64) -> f64>,
    second: Option<&'a dyn Fn(f64) -> f64>,
}

impl<'a> SmoothFn<'a> {
    pub fn new(value: &'a dyn Fn(f64) -> f64) -> Self {
        SmoothFn {
            value,
            first: None,
            second: None,
        }
    }

    pub fn with_derivatives(
        value: &'a dyn Fn(f64) -> f64,
        first: &'a dyn Fn(f64) -> f64,
        second: &'a dyn Fn(f64) -> f64,
    ) -> Self {
        SmoothFn {
            value,
            first: Some(first),
            second: Some(second),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn fd_step(x: f64) -> f64 {
        1e-5f64.max(1e-5 * x.abs())
    }

    fn d1(&self, x: f64) -> f64 {
        if let Some(d) = self.first {
            return d(x);
        }
        let h = Self::fd_step(x);
        let f = self.value;
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    fn d2(&self, x: f64) -> f64 {
        if let Some(d) = self.second {
            return d(x);
        }
        let h = Self::fd_step(x);
        let f = self.value;
        (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h)
            - f(x - 2.0 * h))
            / (12.0 * h * h)
    }
}

/// Generator action
/// `L f (x) = (1/2) sigma^2(x) f''(x) + b(x) f'(x) + sum_i theta_i [f(x+eps_i) - f(x)]`.
pub fn apply_generator(
    spec: &ProcessSpec,
    f: &SmoothFn<'_>,
    x: f64,
) -> Result<f64, ProcessError> {
    if !spec.contains(x) {
        let (lo, hi) = spec.state_interval();
        return Err(ProcessError::StateOutsideInterval(x, lo, hi));
    }
    let sigma = spec.diffusion(x);
    let diffusion_part = 0.5 * sigma * sigma * f.d2(x) + spec.drift(x) * f.d1(x);
    let fx = f.eval(x);
    let jump_part: f64 = spec
        .jumps
        .iter()
        .map(|j| j.rate * (f.eval(x + j.amplitude) - fx))
        .sum();
    Ok(diffusion_part + jump_part)
}

/// An increasing map `u` with `u(0) = 0` conjugating a diffusion to
/// driftless Brownian motion: `X(t) = u^{-1}(B_t + u(x0))`.
#[derive(Clone)]
pub struct ConjugationMap {
    forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    inverse: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl ConjugationMap {
    pub fn forward(&self, x: f64) -> f64 {
        (self.forward)(x)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        (self.inverse)(y)
    }
}

/// The conjugation map for the presets that have one; driftless BM maps to
/// itself by the identity.
pub fn conjugation_map(preset: Preset) -> Result<ConjugationMap, ProcessError> {
    match preset {
        Preset::CirQuarter => Ok(ConjugationMap {
            forward: Arc::new(|x: f64| 2.0 * x.max(0.0).sqrt()),
            inverse: Arc::new(|y: f64| 0.25 * y * y),
        }),
        Preset::WfConj => Ok(ConjugationMap {
            forward: Arc::new(|x: f64| 2.0 * x.clamp(0.0, 1.0).sqrt().asin()),
            inverse: Arc::new(|y: f64| {
                let s = (0.5 * y).sin();
                s * s
            }),
        }),
        Preset::BmDrift { mu: 0.0 } => Ok(ConjugationMap {
            forward: Arc::new(|x| x),
            inverse: Arc::new(|y| y),
        }),
        other => Err(ProcessError::NoConjugation(other.to_string())),
    }
}

/// Scale pair at `x` relative to the base point `c`:
/// `phi(x) = exp(-int_c^x 2 b / sigma^2)` and
/// `xi(x) = phi(x) int_c^x 2 / (sigma^2 phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePair {
    pub phi: f64,
    pub xi: f64,
}

/// Evaluate the scale functions by adaptive quadrature. `phi` is defined up
/// to a positive constant, fixed here by `phi(c) = 1`.
pub fn eval_scale_functions(
    spec: &ProcessSpec,
    c: f64,
    x: f64,
) -> Result<ScalePair, ProcessError> {
    if spec.has_jumps() {
        return Err(ProcessError::ScaleUnavailable);
    }
    if sigma_vanishes_between(spec, c.min(x), c.max(x)) {
        return Err(ProcessError::ScaleUnavailable);
    }
    let ratio = |s: f64| 2.0 * spec.drift(s) / spec.diffusion(s).powi(2);
    let phi = (-quad::integrate(ratio, c, x)?).exp();
    let xi_integral = quad::integrate(
        |s| {
            let log_phi = -quad::integrate(ratio, c, s).unwrap_or(f64::NAN);
            2.0 / (spec.diffusion(s).powi(2) * log_phi.exp())
        },
        c,
        x,
    )?;
    Ok(ScalePair {
        phi,
        xi: phi * xi_integral,
    })
}

fn sigma_vanishes_between(spec: &ProcessSpec, lo: f64, hi: f64) -> bool {
    // coarse screen; the quadrature also surfaces non-finite integrands
    let n = 64;
    (0..=n).any(|i| {
        let s = lo + (hi - lo) * f64::from(i) / f64::from(n);
        spec.diffusion(s) <= 0.0
    })
}

/// Whether the barrier is attainable in the scale sense: `xi` integrable in
/// a left neighbourhood of `S`.
///
/// `xi` is integrated over `[S - delta, S]` for `delta in {1e-2, 1e-3,
/// 1e-4}` by adaptive quadrature at relative tolerance 1e-6. The bisection
/// refines toward `S`, so the partial integrals converge exactly when the
/// improper integral exists; a non-integrable singularity keeps feeding
/// mass at every refinement level and trips the depth cap instead.
pub fn scale_attainability(
    spec: &ProcessSpec,
    c: f64,
    s: f64,
) -> Result<bool, ProcessError> {
    let xi = |t: f64| -> f64 {
        match eval_scale_functions(spec, c, t) {
            Ok(p) => p.xi,
            Err(_) => f64::NAN,
        }
    };
    for delta in [1e-2, 1e-3, 1e-4] {
        match quad::integrate_tol(xi, s - delta, s, 1e-6, 1e-13) {
            Ok(v) if v.is_finite() => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Outcome of the mean-path crossing-finiteness certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingCertificate {
    /// The mean path eventually stays above the barrier, so the crossing
    /// time is finite with probability one.
    Holds,
    /// The certificate does not apply; crossing may still be a.s. finite.
    Unknown,
}

/// Mean-path certificate for `P(tau < infinity) = 1`: when the diffusion
/// part has a state-free drift, the mean path is `x + (b + sum theta_i
/// eps_i) t`; a positive total slope makes it exceed any barrier from some
/// time on. Conservative: never returns `Holds` otherwise.
pub fn finite_crossing_check(
    spec: &ProcessSpec,
    barrier: &Barrier,
) -> CrossingCertificate {
    let Some(state_slope) = spec.drift.affine_slope() else {
        return CrossingCertificate::Unknown;
    };
    if state_slope != 0.0 {
        // mean path solves m' = b(m): not affine in t
        return CrossingCertificate::Unknown;
    }
    let jump_slope: f64 = spec.jumps.iter().map(|j| j.rate * j.amplitude).sum();
    let slope = spec.drift(barrier.start) + jump_slope;
    if slope > 0.0 {
        CrossingCertificate::Holds
    } else {
        CrossingCertificate::Unknown
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_parsing_round_trip() {
        let cases = [
            "bm:mu=1.0",
            "ou:mu=1.0,sigma=0.5",
            "poisson:theta=2.0",
            "levy:beta=0.5,theta=1.0",
            "cir4",
            "wf",
        ];
        for s in cases {
            let p: Preset = s.parse().unwrap();
            let back: Preset = p.to_string().parse().unwrap();
            assert_eq!(p, back, "{s}");
        }
    }

    #[test]
    fn preset_parsing_rejects_garbage() {
        assert!("bm".parse::<Preset>().is_err());
        assert!("bm:mu=abc".parse::<Preset>().is_err());
        assert!("gamma:mu=1".parse::<Preset>().is_err());
        assert!("ou:mu=1.0".parse::<Preset>().is_err());
        assert!("ou:mu=-1.0,sigma=1.0".parse::<Preset>().is_err());
        assert!("poisson:theta=0".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_coefficients_match_their_dynamics() {
        let bm = ProcessSpec::from_preset(Preset::BmDrift { mu: 1.0 }).unwrap();
        assert_eq!(bm.drift(3.7), 1.0);
        assert_eq!(bm.diffusion(-2.0), 1.0);
        assert!(bm.jumps().is_empty());

        let poisson = ProcessSpec::from_preset(Preset::Poisson { theta: 2.0 }).unwrap();
        assert_eq!(poisson.drift(0.0), 0.0);
        assert_eq!(poisson.diffusion(0.0), 0.0);
        assert_eq!(
            poisson.jumps(),
            &[JumpStream {
                rate: 2.0,
                amplitude: 1.0
            }]
        );
        assert_eq!(poisson.total_jump_intensity(), 2.0);

        let ou = ProcessSpec::from_preset(Preset::Ou { mu: 1.0, sigma: 1.0 }).unwrap();
        assert_eq!(ou.drift(2.0), -2.0);
        assert_eq!(ou.diffusion(9.0), 1.0);

        let wf = ProcessSpec::from_preset(Preset::WfConj).unwrap();
        assert_eq!(wf.state_interval(), (0.0, 1.0));
        assert_eq!(wf.drift(0.5), 0.0);
        assert!((wf.diffusion(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn barrier_requires_strict_gap() {
        assert!(Barrier::new(2.0, 1.0).is_ok());
        assert!(Barrier::new(1.0, 1.0).is_err());
        assert!(Barrier::new(1.0, 2.0).is_err());
        let wf = ProcessSpec::from_preset(Preset::WfConj).unwrap();
        assert!(Barrier::new(0.8, 0.2).unwrap().validate_for(&wf).is_ok());
        assert!(Barrier::new(1.5, 0.2).unwrap().validate_for(&wf).is_err());
    }

    #[test]
    fn generator_on_linear_test_function() {
        let bm = ProcessSpec::from_preset(Preset::BmDrift { mu: 1.0 }).unwrap();
        let id = |x: f64| x;
        let f = SmoothFn::new(&id);
        let v = apply_generator(&bm, &f, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "L x = b = 1, got {v}");

        let poisson = ProcessSpec::from_preset(Preset::Poisson { theta: 2.0 }).unwrap();
        let v = apply_generator(&poisson, &f, 0.0).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "L x = theta = 2, got {v}");
    }

    #[test]
    fn generator_kills_constants() {
        let specs = [
            ProcessSpec::from_preset(Preset::BmDrift { mu: 0.7 }).unwrap(),
            ProcessSpec::from_preset(Preset::Levy {
                beta: 0.3,
                theta: 1.5,
            })
            .unwrap(),
            ProcessSpec::from_preset(Preset::Ou { mu: 2.0, sigma: 0.4 }).unwrap(),
        ];
        let c = |_: f64| 4.2;
        let zero = |_: f64| 0.0;
        let f = SmoothFn::with_derivatives(&c, &zero, &zero);
        for spec in &specs {
            let v = apply_generator(spec, &f, 0.3).unwrap();
            assert!(v.abs() < 1e-9, "L const must vanish, got {v}");
        }
        // the finite-difference fallback carries ~eps/h^2 cancellation noise
        let fd = SmoothFn::new(&c);
        for spec in &specs {
            let v = apply_generator(spec, &fd, 0.3).unwrap();
            assert!(v.abs() < 1e-4, "L const via differences, got {v}");
        }
    }

    #[test]
    fn generator_uses_analytic_derivatives_when_given() {
        let ou = ProcessSpec::from_preset(Preset::Ou { mu: 1.0, sigma: 1.0 }).unwrap();
        let f = |x: f64| x * x;
        let d1 = |x: f64| 2.0 * x;
        let d2 = |_: f64| 2.0;
        let g = SmoothFn::with_derivatives(&f, &d1, &d2);
        // L x^2 = sigma^2 + 2 b(x) x = 1 - 2 x^2
        let v = apply_generator(&ou, &g, 1.5).unwrap();
        assert!((v - (1.0 - 2.0 * 2.25)).abs() < 1e-12);
    }

    #[test]
    fn generator_rejects_out_of_interval_state() {
        let wf = ProcessSpec::from_preset(Preset::WfConj).unwrap();
        let id = |x: f64| x;
        let f = SmoothFn::new(&id);
        assert!(apply_generator(&wf, &f, 1.5).is_err());
    }

    #[test]
    fn conjugation_maps_match_inverse() {
        let cir = conjugation_map(Preset::CirQuarter).unwrap();
        assert!((cir.forward(1.0) - 2.0).abs() < 1e-15);
        assert!((cir.inverse(2.0) - 1.0).abs() < 1e-15);

        let wf = conjugation_map(Preset::WfConj).unwrap();
        let want = std::f64::consts::FRAC_PI_2;
        assert!((wf.forward(0.5) - want).abs() < 1e-14);

        let bm = conjugation_map(Preset::BmDrift { mu: 0.0 }).unwrap();
        assert_eq!(bm.forward(0.3), 0.3);

        assert!(conjugation_map(Preset::BmDrift { mu: 1.0 }).is_err());

        // inverse . forward = identity to 1e-12 on a grid
        for i in 1..20 {
            let x = i as f64 / 20.0;
            assert!((cir.inverse(cir.forward(x)) - x).abs() < 1e-12);
            assert!((wf.inverse(wf.forward(x)) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugated_generator_reduces_to_half_laplacian() {
        // For X conjugated to BM via u: L (f . u) (x) = (1/2) f''(u(x)).
        for preset in [Preset::CirQuarter, Preset::WfConj] {
            let spec = ProcessSpec::from_preset(preset).unwrap();
            let map = conjugation_map(preset).unwrap();
            let u = map.clone();
            let comp = move |x: f64| {
                let y = u.forward(x);
                (2.0 * y).sin() + 0.25 * y * y
            };
            for &x in &[0.2, 0.4, 0.6] {
                let lhs = diffusion_generator_with_step(&spec, &comp, x, 1e-4);
                let y = map.forward(x);
                let rhs = 0.5 * (-4.0 * (2.0 * y).sin() + 0.5);
                assert!(
                    (lhs - rhs).abs() < 1e-6,
                    "{preset:?} at {x}: L(f.u) = {lhs}, (1/2)f''(u) = {rhs}"
                );
            }
        }
    }

    // central differences with a caller-pinned step h, for the conjugation
    // identity check
    fn diffusion_generator_with_step(
        spec: &ProcessSpec,
        f: &dyn Fn(f64) -> f64,
        x: f64,
        h: f64,
    ) -> f64 {
        let d1 = (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h))
            / (12.0 * h);
        let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h)
            - f(x - 2.0 * h))
            / (12.0 * h * h);
        0.5 * spec.diffusion(x).powi(2) * d2 + spec.drift(x) * d1
    }

    #[test]
    fn generator_linearity() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(
                    -2.0..2.0f64,
                    -3.0..3.0f64,
                    -3.0..3.0f64,
                    proptest::sample::select(vec![0usize, 1, 2]),
                ),
                |(x, a, b, which)| {
                    let spec = match which {
                        0 => ProcessSpec::from_preset(Preset::BmDrift { mu: 0.8 }),
                        1 => ProcessSpec::from_preset(Preset::Levy {
                            beta: -0.2,
                            theta: 1.0,
                        }),
                        _ => ProcessSpec::from_preset(Preset::Ou {
                            mu: 1.0,
                            sigma: 2.0,
                        }),
                    }
                    .unwrap();
                    let f1 = |t: f64| (0.5 * t).sin();
                    let d1f1 = |t: f64| 0.5 * (0.5 * t).cos();
                    let d2f1 = |t: f64| -0.25 * (0.5 * t).sin();
                    let f2 = |t: f64| t * t - t;
                    let d1f2 = |t: f64| 2.0 * t - 1.0;
                    let d2f2 = |_: f64| 2.0;
                    let combo = move |t: f64| a * f1(t) + b * f2(t);
                    let d1c = move |t: f64| a * d1f1(t) + b * d1f2(t);
                    let d2c = move |t: f64| a * d2f1(t) + b * d2f2(t);
                    let sf1 = SmoothFn::with_derivatives(&f1, &d1f1, &d2f1);
                    let sf2 = SmoothFn::with_derivatives(&f2, &d1f2, &d2f2);
                    let sfc = SmoothFn::with_derivatives(&combo, &d1c, &d2c);
                    let lhs = apply_generator(&spec, &sfc, x).unwrap();
                    let rhs = a * apply_generator(&spec, &sf1, x).unwrap()
                        + b * apply_generator(&spec, &sf2, x).unwrap();
                    prop_assert!(
                        (lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs().max(rhs.abs())),
                        "linearity violated: {} vs {}",
                        lhs,
                        rhs
                    );
                    Ok(())
                },
            )
            .unwrap();
    }

    #[test]
    fn scale_functions_bm_and_ou() {
        let bm = ProcessSpec::from_preset(Preset::BmDrift { mu: 0.7 }).unwrap();
        // phi(x) = e^{-2 mu x} with base point 0
        for x in [-1.0, 0.5, 2.0] {
            let p = eval_scale_functions(&bm, 0.0, x).unwrap();
            assert!(
                (p.phi - (-1.4 * x).exp()).abs() < 1e-9 * p.phi.max(1.0),
                "phi({x}) = {}",
                p.phi
            );
        }
        // OU: phi(x) proportional to exp(mu x^2 / sigma^2)
        let ou = ProcessSpec::from_preset(Preset::Ou { mu: 1.0, sigma: 1.0 }).unwrap();
        let p1 = eval_scale_functions(&ou, 0.0, 1.0).unwrap();
        assert!((p1.phi.ln() - 1.0).abs() < 1e-9, "ln phi(1) = {}", p1.phi.ln());
    }

    #[test]
    fn scale_phi_satisfies_its_ode() {
        // phi is the derivative of the harmonic scale map, so it obeys the
        // first-order identity (1/2) sigma^2 phi' + b phi = 0 for any
        // diffusion; for constant coefficients phi is exponential and the
        // second-order form (1/2) sigma^2 phi'' + b phi' = 0 holds as well.
        let h = 1e-4;
        let ou = ProcessSpec::from_preset(Preset::Ou { mu: 0.8, sigma: 1.2 }).unwrap();
        for i in 1..10 {
            let x = -0.5 + f64::from(i) * 0.1;
            let pm = eval_scale_functions(&ou, 0.0, x - h).unwrap().phi;
            let p0 = eval_scale_functions(&ou, 0.0, x).unwrap().phi;
            let pp = eval_scale_functions(&ou, 0.0, x + h).unwrap().phi;
            let d1 = (pp - pm) / (2.0 * h);
            let res = 0.5 * ou.diffusion(x).powi(2) * d1 + ou.drift(x) * p0;
            assert!(res.abs() < 1e-6 * p0.max(1.0), "first-order residual {res} at {x}");
        }
        let bm = ProcessSpec::from_preset(Preset::BmDrift { mu: 0.9 }).unwrap();
        let h = 1e-3;
        for i in 1..10 {
            let x = -0.5 + f64::from(i) * 0.1;
            let pm = eval_scale_functions(&bm, 0.0, x - h).unwrap().phi;
            let p0 = eval_scale_functions(&bm, 0.0, x).unwrap().phi;
            let pp = eval_scale_functions(&bm, 0.0, x + h).unwrap().phi;
            let d1 = (pp - pm) / (2.0 * h);
            let d2 = (pp - 2.0 * p0 + pm) / (h * h);
            let res = 0.5 * d2 + bm.drift(x) * d1;
            assert!(res.abs() < 1e-6 * p0.max(1.0), "second-order residual {res} at {x}");
        }
    }

    #[test]
    fn scale_rejects_jump_specs() {
        let levy = ProcessSpec::from_preset(Preset::Levy {
            beta: 0.1,
            theta: 1.0,
        })
        .unwrap();
        assert!(matches!(
            eval_scale_functions(&levy, 0.0, 1.0),
            Err(ProcessError::ScaleUnavailable)
        ));
    }

    #[test]
    fn ou_barrier_is_attainable() {
        let ou = ProcessSpec::from_preset(Preset::Ou { mu: 1.0, sigma: 1.0 }).unwrap();
        assert!(scale_attainability(&ou, 0.0, 1.0).unwrap());
    }

    #[test]
    fn vanishing_diffusion_barrier_is_not_attainable() {
        // dX = (S - X) dB never reaches S: xi ~ 2/(S - x) is non-integrable
        let s = 1.0;
        let spec = ProcessSpec::custom(
            Coefficient::Const(0.0),
            Coefficient::Custom(Arc::new(move |x: f64| (s - x).max(1e-300))),
            vec![],
            (f64::NEG_INFINITY, s),
        )
        .unwrap();
        assert!(!scale_attainability(&spec, 0.0, s).unwrap());
    }

    #[test]
    fn crossing_certificate_cases() {
        let b = Barrier::new(2.0, 1.0).unwrap();
        let bm = ProcessSpec::from_preset(Preset::BmDrift { mu: 1.0 }).unwrap();
        assert_eq!(finite_crossing_check(&bm, &b), CrossingCertificate::Holds);

        // mean slope beta + theta = 1.5 > 0
        let levy = ProcessSpec::from_preset(Preset::Levy {
            beta: -0.5,
            theta: 2.0,
        })
        .unwrap();
        assert_eq!(finite_crossing_check(&levy, &b), CrossingCertificate::Holds);

        // constant mean path: certificate inapplicable even though crossing
        // is a.s. finite
        let flat = ProcessSpec::from_preset(Preset::BmDrift { mu: 0.0 }).unwrap();
        assert_eq!(
            finite_crossing_check(&flat, &b),
            CrossingCertificate::Unknown
        );

        let ou = ProcessSpec::from_preset(Preset::Ou { mu: 1.0, sigma: 1.0 }).unwrap();
        assert_eq!(finite_crossing_check(&ou, &b), CrossingCertificate::Unknown);
    }

    #[test]
    fn crossing_certificate_never_holds_on_nonpositive_slope() {
        use proptest::prelude::*;
        let mut runner = proptest::test_runner::TestRunner::default();
        runner
            .run(
                &(-3.0..0.0f64, 0.01..3.0f64, 0.1..3.0f64),
                |(net_slope, theta, gap)| {
                    // choose beta so that beta + theta = net_slope <= 0
                    let beta = net_slope - theta;
                    let spec =
                        ProcessSpec::from_preset(Preset::Levy { beta, theta }).unwrap();
                    let b = Barrier::new(gap, 0.0).unwrap();
                    prop_assert_eq!(
                        finite_crossing_check(&spec, &b),
                        CrossingCertificate::Unknown
                    );
                    Ok(())
                },
            )
            .unwrap();
    }
}
