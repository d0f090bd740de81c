//! The zero curve `Re ε(x + iy) = 0` in the quadrant `x > 0, 0 ≤ y < γ/2`
//! and the behaviour of `ε` near the pole `iγ/2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{kernel_tail_bound, CutPlane};
use crate::error::{Error, Result};
use crate::kernels::{self, ModelParams};
use crate::quadrature;
use crate::roots;

/// Range of `γ/2 - y` used for the power-law fits near the pole.
pub const FIT_WINDOW: (f64, f64) = (1e-4, 1e-2);

/// One point of the zero curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub y: f64,
    pub x: f64,
    pub im_eps: f64,
    pub residual: f64,
}

/// Least-squares fit `v ≈ prefactor · η^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Prefactor with the exponent held at its leading-order value.
    pub prefactor_fixed: f64,
    pub points: usize,
}

/// The constant `c` of the pole expansion and the fits that test it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticData {
    /// `c` from its integral representation.
    pub c: f64,
    /// Constant Laurent coefficient of `ε` at `iγ/2`.
    pub c_laurent: Complex64,
    pub tail_bound: f64,
    pub cutoff: f64,
    pub x_fit: Option<PowerFit>,
    pub im_fit: Option<PowerFit>,
}

/// Heights for [`trace_curve`]: `count` Chebyshev-clustered values on
/// `[0, γ/2 - 1e-2]` followed by `fit_points` values with `γ/2 - y`
/// log-spaced over [`FIT_WINDOW`].
pub fn curve_samples(gamma: f64, count: usize, fit_points: usize) -> Vec<f64> {
    let top = 0.5 * gamma - FIT_WINDOW.1;
    let mut ys: Vec<f64> = (0..count)
        .map(|k| {
            if count == 1 {
                return 0.0;
            }
            top * (0.5 * PI * k as f64 / (count - 1) as f64).sin()
        })
        .collect();
    let (lo, hi) = (FIT_WINDOW.0.ln(), FIT_WINDOW.1.ln());
    for k in 0..fit_points {
        let t = if fit_points == 1 { 0.0 } else { k as f64 / (fit_points - 1) as f64 };
        let eta = (hi + t * (lo - hi)).exp();
        ys.push(0.5 * gamma - eta);
    }
    ys.sort_by(|a, b| a.total_cmp(b));
    ys.dedup();
    ys
}

/// Zero of `x ↦ Re ε(x + iy)` on `(0, X_max]` for every `y`, sorted by `y`.
///
/// The previous zero is the starting point for the next height. A height
/// is accepted as long as the resulting point clears the pole guard. A
/// zero is accepted when `|Re ε| < tol · max(1, |ε|)`.
pub fn trace_curve(plane: &CutPlane, ys: &[f64], tol: f64) -> Result<Vec<CurvePoint>> {
    let g = plane.gamma();
    let mut ys = ys.to_vec();
    ys.sort_by(|a, b| a.total_cmp(b));
    let hi = plane.x_max();
    let mut warm = plane.q_f();
    let mut out = Vec::with_capacity(ys.len());
    for y in ys {
        if !(0.0..0.5 * g).contains(&y) {
            return Err(Error::InvalidParameter(format!("height {y} outside [0, gamma/2)")));
        }
        let fd = |x: f64| -> Result<(f64, f64)> {
            let l = Complex64::new(x, y);
            Ok((plane.eps_raw(l)?.re, plane.eps_prime_raw(l)?.re))
        };
        let x = roots::safeguarded_newton(fd, 0.0, hi, warm, 1e-14, 0.1 * tol, 200).map_err(|e| match e {
            Error::Bracket(m) => Error::Bracket(format!("zero curve at y = {y}: {m}")),
            other => other,
        })?;
        let l = Complex64::new(x, y);
        let d = plane.pole_distance(l);
        if d < plane.pole_guard() {
            return Err(Error::PoleProximity {
                lambda: format!("{l}"),
                pole: format!("{}i", 0.5 * g),
                distance: d,
            });
        }
        let e = plane.eps_raw(l)?;
        // near the pole |ε| ~ 1/η and rounding alone exceeds an absolute tol
        if !(e.re.abs() < tol * e.norm().max(1.0)) {
            return Err(Error::NonConvergence(format!("|Re eps| = {:e} at {l}", e.re.abs())));
        }
        out.push(CurvePoint { y, x, im_eps: e.im, residual: e.re.abs() });
        warm = x;
    }
    Ok(out)
}

fn check_window(params: &ModelParams, y: f64) -> Result<f64> {
    let g = params.gamma();
    let eta = 0.5 * g - y;
    if !(eta > 0.0 && eta < 0.1 * g) {
        return Err(Error::InvalidParameter(format!(
            "gamma/2 - y = {eta} outside (0, 0.1 gamma)"
        )));
    }
    Ok(eta)
}

/// Leading-order `x(y) ≈ √(2J sin γ (γ/2 - y) / c)`.
pub fn asymptotic_x(params: &ModelParams, c: f64, y: f64) -> Result<f64> {
    let eta = check_window(params, y)?;
    Ok((2.0 * params.j() * params.gamma().sin() * eta / c).sqrt())
}

/// Leading-order `Im ε(x(y) + iy) ≈ √(2J sin γ c / (γ/2 - y))`.
pub fn asymptotic_im(params: &ModelParams, c: f64, y: f64) -> Result<f64> {
    let eta = check_window(params, y)?;
    Ok((2.0 * params.j() * params.gamma().sin() * c / eta).sqrt())
}

/// Log-log least squares through `(η, v)` pairs; `fixed` is the exponent
/// used for [`PowerFit::prefactor_fixed`].
pub fn fit_power(points: &[(f64, f64)], fixed: f64) -> Option<PowerFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(e, v)| *e > 0.0 && *v > 0.0)
        .map(|(e, v)| (e.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Some(PowerFit {
        exponent,
        prefactor: (my - exponent * mx).exp(),
        prefactor_fixed: (my - fixed * mx).exp(),
        points: pts.len(),
    })
}

/// `c = (h/2 + ∫_{Q_F}^∞ K(μ/s|γ') ε(μ) dμ) / s`, `s = 1 - γ/π`, with a
/// certified truncation, and the Laurent coefficient it should equal.
///
/// When `curve` is given, the points with `γ/2 - y` in [`FIT_WINDOW`] are
/// fitted against the leading-order laws.
pub fn asymptotic_constant(plane: &CutPlane, tol: f64, curve: Option<&[CurvePoint]>) -> Result<AsymptoticData> {
    let p = plane.params();
    let g = p.gamma();
    let s = p.scale();
    let gp = kernels::gamma_prime(g);
    let q = plane.q_f();
    let sup0 = p.h().max(p.h_c() - p.h());
    let sup_grid = plane.solution().eps().sup_norm();
    let mut length = 20.0 * s;
    let (mut cutoff, mut bound);
    loop {
        cutoff = q + length;
        let sup_far = sup0 + sup_grid * 2.0 * q * kernels::kernel_k_real(cutoff - q, g);
        // (1/s) ∫_T^∞ K(μ/s|γ') |ε| dμ ≤ sup|ε| ∫_{T/s}^∞ K(t|γ') dt
        bound = sup_far * kernel_tail_bound(gp, cutoff / s);
        if bound <= tol || length > 400.0 * s {
            break;
        }
        length *= 2.0;
    }
    if bound > tol {
        return Err(Error::TailBound { bound, tol });
    }
    let width = (0.5 * g).min(0.5);
    let panels = (length / width).ceil() as usize;
    let integral = quadrature::try_integrate_panels(q, cutoff, panels, |mu| -> Result<Complex64> {
        Ok(kernels::kernel_k_real(mu / s, gp) * plane.eps_raw(Complex64::new(mu, 0.0))?)
    })?;
    let c = (0.5 * p.h() + integral.re) / s;
    let c_laurent = plane.laurent_constant(1e-2)?;
    let (mut x_fit, mut im_fit) = (None, None);
    if let Some(curve) = curve {
        let window: Vec<&CurvePoint> = curve
            .iter()
            .filter(|pt| {
                let eta = 0.5 * g - pt.y;
                eta >= FIT_WINDOW.0 * (1.0 - 1e-9) && eta <= FIT_WINDOW.1 * (1.0 + 1e-9)
            })
            .collect();
        let xs: Vec<(f64, f64)> = window.iter().map(|pt| (0.5 * g - pt.y, pt.x)).collect();
        let ims: Vec<(f64, f64)> = window.iter().map(|pt| (0.5 * g - pt.y, pt.im_eps)).collect();
        x_fit = fit_power(&xs, 0.5);
        im_fit = fit_power(&ims, -0.5);
    }
    Ok(AsymptoticData { c, c_laurent, tail_bound: bound, cutoff, x_fit, im_fit })
}
