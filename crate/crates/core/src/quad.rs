//! Adaptive Gauss–Kronrod quadrature.
//!
//! All quadratures in this crate use the (G7, K15) pair with recursive
//! bisection, relative tolerance 1e-10 and absolute floor 1e-14 unless a
//! caller overrides them.

use thiserror::Error;

/// Default relative tolerance for adaptive quadrature.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Absolute floor below which interval errors are always accepted.
pub const DEFAULT_ABS_FLOOR: f64 = 1e-14;

const MAX_DEPTH: u32 = 52;

#[derive(Debug, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err:.3e})")]
    NonConvergent { a: f64, b: f64, err: f64 },
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
    #[error("invalid integration bounds [{0}, {1}]")]
    BadBounds(f64, f64),
}

// 15-point Kronrod nodes (positive half) and weights, with the embedded
// 7-point Gauss weights on the shared nodes.
const XK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 15(7) panel: returns (K15 value, |K15 - G7| estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in XK.iter().zip(WK.iter()).enumerate() {
        let (xl, xr) = (c - h * x, c + h * x);
        let (fl, fr) = (f(xl), f(xr));
        if !fl.is_finite() {
            return Err(QuadError::NonFinite(xl));
        }
        if !fr.is_finite() {
            return Err(QuadError::NonFinite(xr));
        }
        let pair = if i == 7 { fl } else { fl + fr };
        kron += wk * pair;
        // Odd Kronrod indices (centre included) are the Gauss-7 nodes.
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Ok((kron * h, (kron - gauss).abs() * h.abs()))
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
    scale: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let (val, err) = gk15(f, a, b)?;
    if err <= abs_floor || err <= rel_tol * scale.max(val.abs()) {
        return Ok(val);
    }
    if depth >= MAX_DEPTH {
        return Err(QuadError::NonConvergent { a, b, err });
    }
    let c = 0.5 * (a + b);
    if c <= a || c >= b {
        // interval no longer bisectable in f64
        return Ok(val);
    }
    let left = adapt(f, a, c, rel_tol, abs_floor, scale, depth + 1)?;
    let right = adapt(f, c, b, rel_tol, abs_floor, scale, depth + 1)?;
    Ok(left + right)
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64, QuadError> {
    integrate_tol(f, a, b, DEFAULT_REL_TOL, DEFAULT_ABS_FLOOR)
}

/// Integrate with caller-chosen tolerances.
pub fn integrate_tol<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64, QuadError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(QuadError::BadBounds(a, b));
    }
    if a == b {
        return Ok(0.0);
    }
    let (val, _) = gk15(&f, a, b)?;
    adapt(&f, a, b, rel_tol, abs_floor, val.abs(), 0)
}

/// Integrate `f` over `[a, +inf)` through the substitution `x = a + t/(1-t)`.
///
/// The integrand must decay fast enough that the transformed integrand is
/// bounded near `t = 1` (exponential decay is more than enough).
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64) -> Result<f64, QuadError> {
    integrate_to_inf_tol(f, a, DEFAULT_REL_TOL, DEFAULT_ABS_FLOOR)
}

/// Semi-infinite integration with caller-chosen tolerances.
pub fn integrate_to_inf_tol<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> Result<f64, QuadError> {
    let g = |t: f64| {
        let omt = 1.0 - t;
        let x = a + t / omt;
        let jac = 1.0 / (omt * omt);
        let v = f(x) * jac;
        // decaying integrands underflow cleanly at the right endpoint
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate_tol(g, 0.0, 1.0 - 1e-15, rel_tol, abs_floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0).unwrap();
        assert!((v - 8.0).abs() < 1e-13, "got {v}");
    }

    #[test]
    fn gaussian_total_mass() {
        let v = integrate(
            |x| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            -12.0,
            12.0,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn semi_infinite_exponential() {
        let v = integrate_to_inf(|x| (-x).exp(), 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-11, "got {v}");
        let v2 = integrate_to_inf(|x| x * (-x).exp(), 1.0).unwrap();
        // integral of x e^{-x} over [1, inf) = 2/e
        assert!((v2 - 2.0 / std::f64::consts::E).abs() < 1e-11, "got {v2}");
    }

    #[test]
    fn sharp_peak_is_resolved() {
        // narrow Gaussian of width 1e-3 centred at 0.5
        let s = 1e-3;
        let v = integrate(
            |x: f64| (-0.5 * ((x - 0.5) / s).powi(2)).exp(),
            0.0,
            1.0,
        )
        .unwrap();
        let exact = s * (2.0 * std::f64::consts::PI).sqrt();
        assert!((v - exact).abs() < 1e-12 * exact.max(1.0), "got {v} want {exact}");
    }

    #[test]
    fn zero_length_interval() {
        assert_eq!(integrate(|x| x, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_finite_bounds() {
        assert!(matches!(
            integrate(|x| x, 0.0, f64::INFINITY),
            Err(QuadError::BadBounds(_, _))
        ));
    }
}
