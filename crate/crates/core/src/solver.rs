//! Finite-difference solvers for the boundary-value problems with outer
//! conditions attached to first-crossing functionals:
//!
//! * the Laplace-transform problem
//!   `(1/2) sigma^2 M'' + b M' = lambda U M`, `M(S) = 1`, `M -> 0` left;
//! * the recursive moment problems
//!   `(1/2) sigma^2 T_n'' + b T_n' = -n U T_{n-1}`, `T_n(S) = 0`;
//! * the pre-crossing-minimum problem `L w = 0`, `w(z) = 1`, `w(S) = 0`;
//! * the unit-jump differential-difference system
//!   `(1/2) sigma^2 f'' + beta f' + theta [f(x+1) - f(x)] = ...` whose
//!   shift term references the solution one unit to the right, with the
//!   outer value supplied for `y >= S`.
//!
//! Discretisation is second-order central differences on uniform grids with
//! a tridiagonal direct solve; the jump shift is folded in by sweeping the
//! shift term to the right-hand side until the full residual converges
//! (information flows strictly rightward, one unit interval per sweep).
//! The left end of the half-line `(-inf, S)` is truncated; the choice of
//! left condition is explicit and recorded on the solution.

use crate::process::{Preset, ProcessSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("grid needs x_min < x_max and at least 3 nodes (got [{0}, {1}], {2} nodes)")]
    GridInvalid(f64, f64, usize),
    #[error("grid spacing {h} must be an exact unit fraction 1/m for unit-jump problems")]
    GridNotUnitFraction { h: f64 },
    #[error("singular or near-singular system at row {0}")]
    SingularSystem(usize),
    #[error("solution left the admissible range [{lo}, {hi}] (value {value} at x = {x})")]
    SolutionOutOfBounds { lo: f64, hi: f64, value: f64, x: f64 },
    #[error("{op} requires a jump-free diffusion")]
    JumpsUnsupported { op: &'static str },
    #[error("polynomial-matched left condition is only available for Brownian-drift presets")]
    PolynomialMatchUnavailable,
    #[error("moment order {0} unsupported (only 1 and 2)")]
    BadMomentOrder(u32),
    #[error("order-2 moment solve needs the order-1 solution on the same grid")]
    PrevSolutionMismatch,
    #[error("shift iteration stalled (residual {residual:.3e} after {iters} sweeps)")]
    IterationStalled { residual: f64, iters: usize },
    #[error("query point {0} outside the grid [{1}, {2}]")]
    QueryOutsideGrid(f64, f64, f64),
    #[error("refinement study needs at least 3 levels")]
    TooFewLevels,
    #[error("positive drift scale required, got {0}")]
    BadDriftScale(f64),
}

/// Uniform grid whose last node is the barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_nodes: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_nodes: usize) -> Result<Self, SolverError> {
        if !(x_min < x_max) || n_nodes < 3 || !x_min.is_finite() || !x_max.is_finite() {
            return Err(SolverError::GridInvalid(x_min, x_max, n_nodes));
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n_nodes,
        })
    }

    /// Grid with spacing as close to `h_target` as a whole node count allows.
    pub fn with_spacing(x_min: f64, x_max: f64, h_target: f64) -> Result<Self, SolverError> {
        if !(h_target > 0.0) {
            return Err(SolverError::GridInvalid(x_min, x_max, 0));
        }
        let n = ((x_max - x_min) / h_target).round() as usize + 1;
        Grid1D::new(x_min, x_max, n.max(3))
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.x_max
        } else {
            self.x_min + self.h() * i as f64
        }
    }
}

/// Treatment of the truncated left end of `(-inf, S)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeftBc {
    /// Value 0 imposed at `x_min` (the `x -> -inf` outer limit).
    DirichletZero,
    /// Value of the polynomial particular-solution family imposed at
    /// `x_min`; this discards the `e^{-2 mu x}` homogeneous mode, the mode
    /// the vanishing-as-`mu -> inf` selection rule removes. Brownian-drift
    /// presets only.
    PolynomialMatch,
    /// Zero second difference at `x_min`.
    Natural,
}

impl std::fmt::Display for LeftBc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeftBc::DirichletZero => write!(f, "dirichlet-zero"),
            LeftBc::PolynomialMatch => write!(f, "polynomial-match"),
            LeftBc::Natural => write!(f, "natural"),
        }
    }
}

/// Weight function `U` in the integral functional `int U(X(t)) dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// `U = 1`: the functional is the crossing time itself.
    Unit,
    /// `U(x) = x`: the functional is the crossing area.
    State,
    /// `U(x) = S - x`: the gap swept between the path and the barrier.
    /// This is the weight whose driftless-BM transform has the Airy closed
    /// form (the crossing-area weight of the barrier-reflected path).
    BarrierGap,
}

impl Weight {
    pub fn eval(&self, x: f64, s: f64) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::State => x,
            Weight::BarrierGap => s - x,
        }
    }

    /// Coefficients (ascending powers) of the weight as a polynomial in x.
    fn poly(&self, s: f64) -> Vec<f64> {
        match self {
            Weight::Unit => vec![1.0],
            Weight::State => vec![0.0, 1.0],
            Weight::BarrierGap => vec![s, -1.0],
        }
    }
}

/// Nodal solution of one boundary-value problem.
#[derive(Debug, Clone)]
pub struct BvpSolution {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    /// Sup-norm of the discrete-operator residual over interior rows,
    /// relative to max(1, |values|_inf).
    pub residual_norm: f64,
    pub left_bc: LeftBc,
    /// Fraction of interior nodes with negative values (moment problems:
    /// a large fraction signals the moment may not exist).
    pub negative_fraction: f64,
    /// Interior nodes where the cell Peclet number |b| h / sigma^2 exceeded
    /// 1 and first-order upwinding replaced the central difference.
    pub upwinded_nodes: usize,
}

impl BvpSolution {
    /// Value at `x`: exact at nodes, linear interpolation in between.
    pub fn value_at(&self, x: f64) -> Result<f64, SolverError> {
        let (lo, hi) = (self.grid.x_min, self.grid.x_max);
        if x < lo - 1e-12 || x > hi + 1e-12 {
            return Err(SolverError::QueryOutsideGrid(x, lo, hi));
        }
        let h = self.grid.h();
        let pos = (x - lo) / h;
        let i = pos.floor().clamp(0.0, (self.grid.n_nodes - 2) as f64) as usize;
        let frac = pos - i as f64;
        if frac.abs() < 1e-9 {
            return Ok(self.values[i]);
        }
        if (1.0 - frac).abs() < 1e-9 {
            return Ok(self.values[i + 1]);
        }
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }

    pub fn moment_may_not_exist(&self) -> bool {
        self.negative_fraction > 0.01
    }
}

/// Thomas algorithm for a tridiagonal system; `sub` and `sup` have length
/// `n - 1`.
fn thomas(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>, SolverError> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 || !piv.is_finite() {
        return Err(SolverError::SingularSystem(0));
    }
    c[0] = sup.first().copied().unwrap_or(0.0) / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i - 1] * c[i - 1];
        if piv.abs() < 1e-300 || !piv.is_finite() {
            return Err(SolverError::SingularSystem(i));
        }
        if i < n - 1 {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}

/// Stencil of the operator `(1/2) sigma^2 v'' + b v' + q v` at one interior
/// node, central differences by default, first-order upwind when the cell
/// Peclet number exceeds 1. Returns (sub, diag, sup, upwinded).
fn stencil(sigma2: f64, b: f64, q: f64, h: f64) -> (f64, f64, f64, bool) {
    let diff = 0.5 * sigma2 / (h * h);
    let peclet = b.abs() * h / sigma2.max(1e-300);
    if peclet > 1.0 {
        // upwind: forward difference for positive drift, backward otherwise
        if b >= 0.0 {
            (diff, -2.0 * diff - b / h + q, diff + b / h, true)
        } else {
            (diff - b / h, -2.0 * diff + b / h + q, diff, true)
        }
    } else {
        let adv = 0.5 * b / h;
        (diff - adv, -2.0 * diff + q, diff + adv, false)
    }
}

struct AssembledProblem {
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    rhs: Vec<f64>,
    upwinded: usize,
}

enum LeftRow {
    Dirichlet(f64),
    Natural,
}

/// Assemble rows for `(1/2) sigma^2 v'' + b v' + q v = r` on the grid
/// interior with a Dirichlet right end and the requested left row. The
/// natural row `v_0 - 2 v_1 + v_2 = 0` is reduced to tridiagonal form by
/// substituting `v_0 = 2 v_1 - v_2` into row 1.
#[allow(clippy::too_many_arguments)]
fn assemble(
    grid: &Grid1D,
    sigma2: impl Fn(f64) -> f64,
    drift: impl Fn(f64) -> f64,
    q: impl Fn(f64) -> f64,
    r: impl Fn(f64) -> f64,
    left: &LeftRow,
    right_value: f64,
) -> AssembledProblem {
    let n = grid.n_nodes;
    let h = grid.h();
    let mut sub = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n];
    let mut upwinded = 0;

    for i in 1..n - 1 {
        let x = grid.node(i);
        let (a, d, c, up) = stencil(sigma2(x), drift(x), q(x), h);
        if up {
            upwinded += 1;
        }
        sub[i - 1] = a;
        diag[i] = d;
        sup[i] = c;
        rhs[i] = r(x);
    }
    diag[n - 1] = 1.0;
    sub[n - 2] = 0.0;
    rhs[n - 1] = right_value;

    match left {
        LeftRow::Dirichlet(v) => {
            diag[0] = 1.0;
            sup[0] = 0.0;
            rhs[0] = *v;
        }
        LeftRow::Natural => {
            // substitute v0 = 2 v1 - v2 into row 1; row 0 becomes the
            // reconstruction identity solved afterwards
            let x1 = grid.node(1);
            let (a, d, c, up) = stencil(sigma2(x1), drift(x1), q(x1), h);
            if up {
                // row 1 was already counted above
            }
            diag[1] = d + 2.0 * a;
            sup[1] = c - a;
            sub[0] = 0.0;
            // placeholder identity row, replaced after the solve
            diag[0] = 1.0;
            sup[0] = 0.0;
            rhs[0] = 0.0;
        }
    }
    AssembledProblem {
        sub,
        diag,
        sup,
        rhs,
        upwinded,
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_dirichlet_problem(
    grid: &Grid1D,
    sigma2: impl Fn(f64) -> f64 + Copy,
    drift: impl Fn(f64) -> f64 + Copy,
    q: impl Fn(f64) -> f64 + Copy,
    r: impl Fn(f64) -> f64 + Copy,
    left: LeftRow,
    right_value: f64,
) -> Result<(Vec<f64>, f64, usize), SolverError> {
    let natural = matches!(left, LeftRow::Natural);
    let asm = assemble(grid, sigma2, drift, q, r, &left, right_value);
    let mut values = thomas(&asm.sub, &asm.diag, &asm.sup, &asm.rhs)?;
    if natural {
        values[0] = 2.0 * values[1] - values[2];
    }
    // interior residual of the untouched central/upwind operator
    let n = grid.n_nodes;
    let h = grid.h();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut res: f64 = 0.0;
    for i in 1..n - 1 {
        let x = grid.node(i);
        let (a, d, c, _) = stencil(sigma2(x), drift(x), q(x), h);
        let lhs = a * values[i - 1] + d * values[i] + c * values[i + 1];
        res = res.max((lhs - r(x)).abs());
    }
    // operator rows scale like sigma^2/h^2; normalise the residual the way
    // the rows are scaled so it reflects solve accuracy, not h
    let row_scale = (0.5 * sigma2(grid.node(n / 2)).abs() / (h * h)).max(1.0);
    Ok((values, res / (scale * row_scale), asm.upwinded))
}

fn require_no_jumps(spec: &ProcessSpec, op: &'static str) -> Result<(), SolverError> {
    if spec.has_jumps() {
        Err(SolverError::JumpsUnsupported { op })
    } else {
        Ok(())
    }
}

fn negative_fraction(values: &[f64]) -> f64 {
    let neg = values.iter().filter(|v| **v < -1e-12).count();
    neg as f64 / values.len() as f64
}

/// Solve the Laplace-transform problem
/// `(1/2) sigma^2 M'' + b M' - lambda U M = 0` with `M(S) = 1` and the
/// Dirichlet-zero truncation of `M(-inf) = 0` at `x_min`. The solution is a
/// Laplace transform of a non-negative functional, so it must stay inside
/// `[0, 1]` up to 1e-10; leaving that band is an error.
pub fn solve_lt_bvp(
    spec: &ProcessSpec,
    weight: Weight,
    lambda: f64,
    grid: &Grid1D,
) -> Result<BvpSolution, SolverError> {
    require_no_jumps(spec, "solve_lt_bvp")?;
    let s = grid.x_max;
    let (values, residual_norm, upwinded) = solve_dirichlet_problem(
        grid,
        |x| {
            let sg = spec.diffusion(x);
            sg * sg
        },
        |x| spec.drift(x),
        |x| -lambda * weight.eval(x, s),
        |_| 0.0,
        LeftRow::Dirichlet(0.0),
        1.0,
    )?;
    for (i, v) in values.iter().enumerate() {
        if *v < -1e-10 || *v > 1.0 + 1e-10 {
            return Err(SolverError::SolutionOutOfBounds {
                lo: 0.0,
                hi: 1.0,
                value: *v,
                x: grid.node(i),
            });
        }
    }
    Ok(BvpSolution {
        grid: grid.clone(),
        values,
        residual_norm,
        left_bc: LeftBc::DirichletZero,
        negative_fraction: 0.0,
        upwinded_nodes: upwinded,
    })
}

// Polynomial helpers for the matched left condition (ascending coefficients).

fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Particular polynomial solution of `(1/2) p'' + mu p' = r` (unit
/// volatility): solve `(1/2) q' + mu q = r` for `q = p'` coefficientwise
/// from the top degree down, then integrate.
fn bm_polynomial_particular(r: &[f64], mu: f64) -> Vec<f64> {
    let deg = r.len();
    let mut q = vec![0.0; deg];
    for j in (0..deg).rev() {
        let upper = if j + 1 < deg {
            0.5 * (j as f64 + 1.0) * q[j + 1]
        } else {
            0.0
        };
        q[j] = (r[j] - upper) / mu;
    }
    let mut p = vec![0.0; deg + 1];
    for (j, qj) in q.iter().enumerate() {
        p[j + 1] = qj / (j as f64 + 1.0);
    }
    p
}

/// The exact polynomial moment solution `T_n = p_n(x) - p_n(S)` for
/// Brownian drift `mu`, built by the coefficient recursion at each order.
fn bm_moment_polynomial(weight: Weight, order: u32, mu: f64, s: f64) -> Vec<f64> {
    let mut t_prev = vec![1.0]; // T_0 = 1
    let mut t_cur = vec![0.0];
    for n in 1..=order {
        let mut rhs = poly_mul(&weight.poly(s), &t_prev);
        for c in rhs.iter_mut() {
            *c *= -(f64::from(n));
        }
        let p = bm_polynomial_particular(&rhs, mu);
        let shift = poly_eval(&p, s);
        t_cur = p;
        t_cur[0] -= shift;
        t_prev = t_cur.clone();
    }
    t_cur
}

/// Default left condition: polynomial-matched for Brownian-drift presets
/// with positive drift, natural otherwise.
pub fn default_left_bc(spec: &ProcessSpec) -> LeftBc {
    match spec.preset() {
        Some(Preset::BmDrift { mu }) if mu > 0.0 => LeftBc::PolynomialMatch,
        _ => LeftBc::Natural,
    }
}

/// Solve the order-`n` moment problem
/// `(1/2) sigma^2 T'' + b T' = -n U T_{n-1}` with `T(S) = 0`.
///
/// `prev` supplies the numerical `T_{n-1}` for `n = 2` (same grid);
/// `T_0 = 1` is implicit for `n = 1`. The second boundary condition is the
/// caller's `left_bc` (defaulting per preset via [`default_left_bc`]).
pub fn solve_moment_bvp(
    spec: &ProcessSpec,
    weight: Weight,
    order: u32,
    grid: &Grid1D,
    prev: Option<&BvpSolution>,
    left_bc: Option<LeftBc>,
) -> Result<BvpSolution, SolverError> {
    require_no_jumps(spec, "solve_moment_bvp")?;
    if order != 1 && order != 2 {
        return Err(SolverError::BadMomentOrder(order));
    }
    let left_bc = left_bc.unwrap_or_else(|| default_left_bc(spec));
    let s = grid.x_max;

    let prev_at = |i: usize| -> Result<f64, SolverError> {
        if order == 1 {
            Ok(1.0)
        } else {
            let p = prev.ok_or(SolverError::PrevSolutionMismatch)?;
            if p.grid != *grid {
                return Err(SolverError::PrevSolutionMismatch);
            }
            Ok(p.values[i])
        }
    };
    // materialise the right-hand side on the nodes
    let mut rhs_nodes = vec![0.0; grid.n_nodes];
    for (i, v) in rhs_nodes.iter_mut().enumerate() {
        let x = grid.node(i);
        *v = -f64::from(order) * weight.eval(x, s) * prev_at(i)?;
    }
    let rhs = |x: f64| {
        let pos = (x - grid.x_min) / grid.h();
        rhs_nodes[pos.round() as usize]
    };

    let left = match left_bc {
        LeftBc::DirichletZero => LeftRow::Dirichlet(0.0),
        LeftBc::Natural => LeftRow::Natural,
        LeftBc::PolynomialMatch => {
            let Some(Preset::BmDrift { mu }) = spec.preset() else {
                return Err(SolverError::PolynomialMatchUnavailable);
            };
            if !(mu > 0.0) {
                return Err(SolverError::PolynomialMatchUnavailable);
            }
            let poly = bm_moment_polynomial(weight, order, mu, s);
            LeftRow::Dirichlet(poly_eval(&poly, grid.x_min))
        }
    };

    let (values, residual_norm, upwinded) = solve_dirichlet_problem(
        grid,
        |x| {
            let sg = spec.diffusion(x);
            sg * sg
        },
        |x| spec.drift(x),
        |_| 0.0,
        rhs,
        left,
        0.0,
    )?;
    let negative_fraction = negative_fraction(&values);
    Ok(BvpSolution {
        grid: grid.clone(),
        values,
        residual_norm,
        left_bc,
        negative_fraction,
        upwinded_nodes: upwinded,
    })
}

/// Solve the pre-crossing-minimum problem `L w = 0` on `[z, S]` with
/// `w(z) = 1`, `w(S) = 0`; `w(x)` is the distribution function
/// `P(min <= z)` as a function of the start `x`. Both boundary values are
/// imposed exactly; the solution must be monotone in `x` (up to 1e-10).
pub fn solve_min_bvp(
    spec: &ProcessSpec,
    z: f64,
    s: f64,
    grid: &Grid1D,
) -> Result<BvpSolution, SolverError> {
    require_no_jumps(spec, "solve_min_bvp")?;
    if grid.x_min != z || grid.x_max != s {
        return Err(SolverError::GridInvalid(grid.x_min, grid.x_max, grid.n_nodes));
    }
    let (values, residual_norm, upwinded) = solve_dirichlet_problem(
        grid,
        |x| {
            let sg = spec.diffusion(x);
            sg * sg
        },
        |x| spec.drift(x),
        |_| 0.0,
        |_| 0.0,
        LeftRow::Dirichlet(1.0),
        0.0,
    )?;
    for w in values.windows(2) {
        if w[1] > w[0] + 1e-10 {
            return Err(SolverError::SolutionOutOfBounds {
                lo: 0.0,
                hi: 1.0,
                value: w[1],
                x: f64::NAN,
            });
        }
    }
    let negative_fraction = negative_fraction(&values);
    Ok(BvpSolution {
        grid: grid.clone(),
        values,
        residual_norm,
        left_bc: LeftBc::DirichletZero,
        negative_fraction,
        upwinded_nodes: upwinded,
    })
}

/// The unit-jump drift-diffusion of the differential-difference system:
/// `(1/2) sigma2 f'' + beta f' + theta [f(x+1) - f(x)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyPdde {
    pub beta: f64,
    pub theta: f64,
    /// Squared volatility; 1 for the Brownian-plus-Poisson process. A small
    /// positive floor (documented: 1e-6) stands in for a vanishing
    /// diffusion when recovering pure-jump limits.
    pub sigma2: f64,
}

impl LevyPdde {
    pub fn new(beta: f64, theta: f64) -> Self {
        LevyPdde {
            beta,
            theta,
            sigma2: 1.0,
        }
    }

    pub fn with_sigma2(mut self, sigma2: f64) -> Self {
        self.sigma2 = sigma2;
        self
    }
}

/// Problem selector for [`solve_pdde_levy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyProblem {
    /// Transform of the crossing time: `L f = lambda f`, outer value 1.
    FptLt { lambda: f64 },
    /// Transform of the crossing area: `L f = lambda x f`, outer value 1.
    AreaLt { lambda: f64 },
    /// Mean crossing time: `L f = -1`, outer value 0.
    MeanFpt,
    /// Mean crossing area: `L f = -x`, outer value 0.
    MeanArea,
}

impl LevyProblem {
    fn outer_value(&self) -> f64 {
        match self {
            LevyProblem::FptLt { .. } | LevyProblem::AreaLt { .. } => 1.0,
            LevyProblem::MeanFpt | LevyProblem::MeanArea => 0.0,
        }
    }

    fn lambda_weight(&self, x: f64) -> f64 {
        match self {
            LevyProblem::FptLt { lambda } => *lambda,
            LevyProblem::AreaLt { lambda } => lambda * x,
            _ => 0.0,
        }
    }

    fn rhs(&self, x: f64) -> f64 {
        match self {
            LevyProblem::MeanFpt => -1.0,
            LevyProblem::MeanArea => -x,
            _ => 0.0,
        }
    }

    fn left_row(&self) -> LeftRow {
        match self {
            // transforms vanish toward -inf; means grow at an asymptotically
            // linear rate, matched by a vanishing second difference
            LevyProblem::FptLt { .. } | LevyProblem::AreaLt { .. } => {
                LeftRow::Dirichlet(0.0)
            }
            LevyProblem::MeanFpt | LevyProblem::MeanArea => LeftRow::Natural,
        }
    }
}

const LEVY_MAX_SWEEPS: usize = 800;
const LEVY_SWEEP_TOL: f64 = 1e-13;

/// Solve the unit-jump differential-difference problem on a grid whose
/// spacing divides 1 exactly, so the shift `x + 1` lands on a node (`m`
/// nodes to the right) or, past the barrier, on the outer value.
///
/// The shift term is swept to the right-hand side and the tridiagonal core
/// re-solved until the full operator residual settles; the shift references
/// strictly rightward nodes, so each sweep propagates the outer data one
/// unit interval further left.
pub fn solve_pdde_levy(
    params: &LevyPdde,
    problem: LevyProblem,
    grid: &Grid1D,
) -> Result<BvpSolution, SolverError> {
    let h = grid.h();
    let m_f = 1.0 / h;
    let m = m_f.round() as usize;
    if m == 0 || (m_f - m as f64).abs() > 1e-9 * m as f64 {
        return Err(SolverError::GridNotUnitFraction { h });
    }
    let n = grid.n_nodes;
    let outer = problem.outer_value();
    let theta = params.theta;
    let left_bc = match problem.left_row() {
        LeftRow::Dirichlet(_) => LeftBc::DirichletZero,
        LeftRow::Natural => LeftBc::Natural,
    };

    let mut values = vec![outer; n];
    let mut last_residual = f64::INFINITY;
    let mut sweeps_used = 0;
    for sweep in 0..LEVY_MAX_SWEEPS {
        sweeps_used = sweep + 1;
        let shifted = |i: usize| -> f64 {
            if i + m < n {
                values[i + m]
            } else {
                outer
            }
        };
        // (1/2) s2 f'' + beta f' - (theta + lambda w) f = rhs - theta f(x+1)
        let mut rhs_nodes = vec![0.0; n];
        for (i, v) in rhs_nodes.iter_mut().enumerate() {
            let x = grid.node(i);
            *v = problem.rhs(x) - theta * shifted(i);
        }
        let rhs = |x: f64| {
            let pos = (x - grid.x_min) / h;
            rhs_nodes[pos.round() as usize]
        };
        let (new_values, _, _) = solve_dirichlet_problem(
            grid,
            |_| params.sigma2,
            |_| params.beta,
            |x| -(theta + problem.lambda_weight(x)),
            rhs,
            problem.left_row(),
            outer,
        )?;
        let delta = new_values
            .iter()
            .zip(values.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        values = new_values;
        let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        if delta <= LEVY_SWEEP_TOL * scale {
            last_residual = delta / scale;
            break;
        }
        last_residual = delta / scale;
    }
    if last_residual > 1e-10 {
        return Err(SolverError::IterationStalled {
            residual: last_residual,
            iters: sweeps_used,
        });
    }

    // residual of the full operator, shift included
    let mut res: f64 = 0.0;
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    for i in 1..n - 1 {
        let x = grid.node(i);
        let (a, d0, c, _) = stencil(
            params.sigma2,
            params.beta,
            -(theta + problem.lambda_weight(x)),
            h,
        );
        let shifted = if i + m < n { values[i + m] } else { outer };
        let lhs = a * values[i - 1] + d0 * values[i] + c * values[i + 1] + theta * shifted;
        res = res.max((lhs - problem.rhs(x)).abs());
    }
    let row_scale = (0.5 * params.sigma2 / (h * h)).max(1.0);

    Ok(BvpSolution {
        grid: grid.clone(),
        values,
        residual_norm: res / (scale * row_scale),
        left_bc,
        negative_fraction: 0.0,
        upwinded_nodes: 0,
    })
}

/// Default truncation point `x_min = S - max(30, 10 / drift_scale)`.
///
/// The drift scale per preset: `mu` for Brownian drift (1 when driftless —
/// transform decay then comes from the lambda term), `mu` for OU, `theta`
/// for the Poisson process, `beta + theta` for the unit-jump process.
pub fn default_x_min(spec: &ProcessSpec, s: f64) -> f64 {
    let scale = match spec.preset() {
        Some(Preset::BmDrift { mu }) => mu.abs(),
        Some(Preset::Ou { mu, .. }) => mu,
        Some(Preset::Poisson { theta }) => theta,
        Some(Preset::Levy { beta, theta }) => (beta + theta).abs(),
        _ => 1.0,
    };
    let scale = if scale > 1e-9 { scale } else { 1.0 };
    s - 30f64.max(10.0 / scale)
}

/// Re-solve with the left buffer doubled and report the change at the query
/// point; deltas above ~1e-7 mean the truncation is contaminating the
/// reported value.
pub fn truncation_robustness_delta(
    solve_at_xmin: impl Fn(f64) -> Result<f64, SolverError>,
    x_min: f64,
    s: f64,
) -> Result<f64, SolverError> {
    let v1 = solve_at_xmin(x_min)?;
    let v2 = solve_at_xmin(s - 2.0 * (s - x_min))?;
    Ok((v1 - v2).abs())
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementLevel {
    pub h: f64,
    pub value: f64,
    pub error: f64,
}

/// Result of a grid-refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<RefinementLevel>,
    /// Observed orders between consecutive levels.
    pub orders: Vec<f64>,
    /// Errors strictly decreasing across levels.
    pub monotone: bool,
    /// Mean observed order; absent when the errors are not monotone (no
    /// order is claimed then).
    pub order_estimate: Option<f64>,
}

/// Run `solve_at` across the given spacings and estimate the convergence
/// order, against `exact` when supplied, else from Richardson differences
/// of consecutive values.
pub fn grid_refine_study(
    solve_at: impl Fn(f64) -> Result<f64, SolverError>,
    hs: &[f64],
    exact: Option<f64>,
) -> Result<ConvergenceStudy, SolverError> {
    if hs.len() < 3 {
        return Err(SolverError::TooFewLevels);
    }
    let values: Vec<f64> = hs.iter().map(|&h| solve_at(h)).collect::<Result<_, _>>()?;
    let errors: Vec<f64> = match exact {
        Some(e) => values.iter().map(|v| (v - e).abs()).collect(),
        None => {
            // Richardson: |v_i - v_{i+1}| estimates the level-i error up to
            // a constant; the last level reuses the previous difference
            let mut e: Vec<f64> = values.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
            let last = *e.last().unwrap();
            e.push(last);
            e
        }
    };
    let n_order = if exact.is_some() {
        errors.len()
    } else {
        errors.len() - 1
    };
    let mut orders = Vec::new();
    for i in 0..n_order.saturating_sub(1) {
        let ratio_h = hs[i] / hs[i + 1];
        if errors[i + 1] > 0.0 && errors[i] > 0.0 && ratio_h > 1.0 {
            orders.push((errors[i] / errors[i + 1]).ln() / ratio_h.ln());
        } else {
            orders.push(f64::NAN);
        }
    }
    let monotone = errors[..n_order].windows(2).all(|w| w[1] < w[0]);
    let order_estimate = if monotone && orders.iter().all(|o| o.is_finite()) {
        Some(orders.iter().sum::<f64>() / orders.len() as f64)
    } else {
        None
    };
    Ok(ConvergenceStudy {
        levels: hs
            .iter()
            .zip(values.iter())
            .zip(errors.iter())
            .map(|((&h, &value), &error)| RefinementLevel { h, value, error })
            .collect(),
        orders,
        monotone,
        order_estimate,
    })
}
