//! Bracketed scalar root finding.
//!
//! Every nonlinear solve in this crate reduces to a strictly monotone scalar
//! residual on a known bracket, so a safeguarded Newton iteration that falls
//! back to bisection is sufficient and always converges.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum RootError {
    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("no convergence after {iterations} iterations, best bracket [{lo}, {hi}], residual {residual}")]
    NoConvergence { iterations: usize, lo: f64, hi: f64, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Accept when `|f(x)| <= f_abs`.
    pub f_abs: f64,
    /// Accept when the bracket shrinks below this width.
    pub x_abs: f64,
    pub max_newton: usize,
    pub max_bisect: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { f_abs: 1e-12, x_abs: 1e-15, max_newton: 50, max_bisect: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds a root of `f` on `[lo, hi]` starting from `guess`.
///
/// `f` returns the residual and its derivative. The residual must change sign
/// across the bracket. Newton steps that leave the current bracket are
/// replaced by bisection; after `max_newton` iterations only bisection is used.
pub fn newton_bisect<F>(f: F, lo: f64, hi: f64, guess: f64, tol: Tolerance) -> Result<Root, RootError>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa.abs() <= tol.f_abs {
        return Ok(Root { x: a, residual: fa, iterations: 0 });
    }
    if fb.abs() <= tol.f_abs {
        return Ok(Root { x: b, residual: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(RootError::NotBracketed { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }
    // Orient so that f(a) < 0 < f(b).
    let flip = fa > 0.0;
    let eval = |x: f64| {
        let (v, d) = f(x);
        if flip {
            (-v, -d)
        } else {
            (v, d)
        }
    };

    let mut x = if guess > a && guess < b { guess } else { 0.5 * (a + b) };
    let mut best = (x, f64::INFINITY);
    for it in 0..(tol.max_newton + tol.max_bisect) {
        let (fx, dfx) = eval(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= tol.f_abs {
            return Ok(Root { x, residual: if flip { -fx } else { fx }, iterations: it + 1 });
        }
        if fx < 0.0 {
            a = x;
        } else {
            b = x;
        }
        if b - a <= tol.x_abs {
            return Ok(Root { x, residual: if flip { -fx } else { fx }, iterations: it + 1 });
        }
        let newton = x - fx / dfx;
        x = if it < tol.max_newton && dfx.is_finite() && dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Err(RootError::NoConvergence {
        iterations: tol.max_newton + tol.max_bisect,
        lo: a,
        hi: b,
        residual: if flip { -best.1 } else { best.1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cube_root() {
        let r = newton_bisect(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 1.0, Tolerance::default()).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn bad_derivative_falls_back_to_bisection() {
        // Derivative deliberately wrong; bisection still converges.
        let r = newton_bisect(|x| (x - 0.3, 1e-9), -1.0, 1.0, 0.9, Tolerance::default()).unwrap();
        assert!((r.x - 0.3).abs() < 1e-12);
    }

    #[test]
    fn decreasing_residual() {
        let r = newton_bisect(|x| (1.0 - x, -1.0), -5.0, 5.0, 0.0, Tolerance::default()).unwrap();
        assert!((r.x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbracketed_is_reported() {
        let e = newton_bisect(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 0.0, Tolerance::default()).unwrap_err();
        assert!(matches!(e, RootError::NotBracketed { .. }));
    }
}
