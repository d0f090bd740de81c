//! Scalar root finding: bisection and Newton safeguarded by a bracket.

use crate::error::{Error, Result};

/// Bisect `f` on `[a, b]` until the bracket is narrower than `width`.
///
/// `f(a)` and `f(b)` must have opposite signs. Returns the final bracket.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, width: f64, cap: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok((a, a));
    }
    if fb == 0.0 {
        return Ok((b, b));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    for _ in 0..cap {
        if (b - a).abs() <= width {
            return Ok((a, b));
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok((m, m));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Err(Error::IterationCap { what: "bisection", cap })
}

/// Newton iteration kept inside the bracket `[lo, hi]`; steps that leave it
/// are replaced by bisection.
///
/// `fd` returns `(f(x), f'(x))`. Stops when `|Δx| ≤ xtol` or `|f| ≤ ftol`.
pub fn safeguarded_newton<F>(
    mut fd: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    xtol: f64,
    ftol: f64,
    cap: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let (flo, _) = fd(lo)?;
    let (fhi, _) = fd(hi)?;
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    let lo_sign = flo.signum();
    let mut x = x0.clamp(lo, hi);
    for _ in 0..cap {
        let (fx, dfx) = fd(x)?;
        if fx == 0.0 || fx.abs() <= ftol {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= xtol {
            return Ok(x);
        }
    }
    Err(Error::IterationCap { what: "safeguarded Newton", cap })
}

/// Plain Newton iterations, `steps` of them, without a bracket.
pub fn newton_steps<F>(mut fd: F, mut x: f64, steps: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    for _ in 0..steps {
        let (fx, dfx) = fd(x)?;
        if fx == 0.0 {
            break;
        }
        if dfx == 0.0 || !dfx.is_finite() {
            return Err(Error::DegenerateDerivative(format!("f'({x}) = {dfx}")));
        }
        x -= fx / dfx;
    }
    Ok(x)
}
