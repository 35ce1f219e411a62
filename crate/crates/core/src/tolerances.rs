//! Centralized tolerances and budgets for the verification suites.
//!
//! Every threshold used by the acceptance tests is pinned here with its
//! origin, so no test carries ad-hoc magic numbers.

/// Exact closed-form substitutions (pure arithmetic): f64 rounding only.
pub const CLOSED_FORM_EXACT: f64 = 1e-12;

/// Monte Carlo agreement against exact values, in standard errors.
pub const MC_Z_SCORE_MAX: f64 = 3.0;

/// Finite-difference solution vs closed form at spacing 1e-3 on a
/// 30-unit-wide truncated domain (second-order scheme, smooth solutions).
pub const BVP_VS_CLOSED_FORM: f64 = 1e-4;

/// Airy-route agreement: the transform solve at spacing 1e-3 against the
/// Airy closed form.
pub const AIRY_BVP_TOL: f64 = 1e-5;

/// Airy kernel vs the integral-representation quadrature oracle on [0, 6].
pub const AIRY_ORACLE_TOL: f64 = 1e-10;

/// Minimum-law Kolmogorov–Smirnov budget at dt = 1e-4 with 1e5 paths: the
/// node-sampled minimum carries an O(sqrt(dt)) upward bias (~6e-3 in state
/// units), the sampling noise floor is 1.36/sqrt(n) ~ 4.3e-3, and the
/// driftless run adds a censoring deficit held under ~1% by the horizon
/// chosen in the test.
pub const MIN_LAW_KS_MAX: f64 = 0.02;

/// Minimum-problem solve vs the drifted-Brownian closed form (spacing
/// 2e-5: second-order truncation lands near 1e-9).
pub const MIN_BVP_BM_TOL: f64 = 1e-8;

/// Minimum-problem solve vs the Ornstein–Uhlenbeck quadrature form.
pub const MIN_BVP_OU_TOL: f64 = 1e-6;

/// Series route vs finite differences for the OU mean crossing time.
pub const OU_SERIES_VS_BVP: f64 = 1e-4;

/// 95% Kolmogorov band coefficient: KS * sqrt(n) below 1.36.
pub const KS_95_BAND: f64 = 1.36;

/// Laplace-transform curve agreement at small lambda (figure-2 property).
pub const FIG2_SMALL_LAMBDA_TOL: f64 = 0.01;
/// Small-lambda region of the figure-2 comparison.
pub const FIG2_SMALL_LAMBDA_MAX: f64 = 0.5;
/// Tail region where the empirical transform must sit below the
/// moment-matched Gamma transform.
pub const FIG2_TAIL_LAMBDA_MIN: f64 = 5.0;

/// Acceptable observed-order window for the second-order scheme.
pub const ORDER_WINDOW: (f64, f64) = (1.8, 2.2);

/// Left-truncation robustness: doubling the buffer may move reported
/// values at most this much.
pub const TRUNCATION_ROBUSTNESS: f64 = 1e-7;
