//! The Fermi rapidity `Q_F`, the unique positive zero of `Q ↦ ε(Q|Q)`,
//! and its field derivative.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dressed::{dressed_solution, DressedSolution, GridSpec};
use crate::error::{Error, Result};
use crate::kernels::ModelParams;
use crate::roots;

/// Lower bracket end used when `ε_u` has no zero.
pub const LOWER_BRACKET: f64 = 1e-8;
/// Bracket width at which bisection hands over to Newton.
const BISECTION_WIDTH: f64 = 1e-3;
/// Newton iterations on the fine grid.
const FINE_NEWTON_STEPS: usize = 3;

/// Fermi rapidity and the data that certify it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermiData {
    pub params: ModelParams,
    pub q_f: f64,
    pub q_0: f64,
    pub q_u: Option<f64>,
    /// `|ε(Q_F|Q_F)|` on the fine grid.
    pub g_residual: f64,
    pub dqf_dh: f64,
    /// `ε'(Q_F)`.
    pub eps_prime: f64,
    /// `Z(Q_F|Q_F)`.
    pub charge: f64,
    pub iterations: usize,
    pub bracket_width: f64,
    pub nodes: usize,
}

/// `Q_F` together with the dressed functions at `Q = Q_F` on the fine grid.
#[derive(Debug, Clone)]
pub struct FermiSolution {
    pub data: FermiData,
    pub solution: DressedSolution,
}

/// Zeros `(Q_u, Q₀)` of `ε_u` and `ε₀` on the positive axis.
///
/// `Q_u` is absent when `h ≥ 2πJ sin(γ)/γ`.
pub fn bracket_endpoints(params: &ModelParams) -> (Option<f64>, f64) {
    let (j, g, h) = (params.j(), params.gamma(), params.h());
    let q0 = (2.0 * j * g.sin().powi(2) / h - (0.5 * g).sin().powi(2)).sqrt().asinh();
    let ratio = 2.0 * PI * j * g.sin() / (g * h);
    let qu = if ratio > 1.0 { Some(g / PI * ratio.acosh()) } else { None };
    (qu.filter(|q| *q > 0.0), q0)
}

/// `g(Q) = ε(Q|Q)` from a fresh solve on `[-Q, Q]`.
pub fn boundary_function(params: &ModelParams, q: f64, spec: &GridSpec) -> Result<f64> {
    dressed_solution(*params, q, spec)?.boundary_value()
}

/// `dQ_F/dh = -Z(Q_F|Q_F) / ε'(Q_F)`; returns `(dQ_F/dh, Z, ε')`.
pub fn fermi_derivative(solution: &DressedSolution) -> Result<(f64, f64, f64)> {
    let q = Complex64::new(solution.q(), 0.0);
    let charge = solution.charge().evaluate(q)?.re;
    let slope = solution.eps_prime(q)?.re;
    if !(slope > 1e-10) {
        return Err(Error::DegenerateDerivative(format!("eps'(Q_F) = {slope}")));
    }
    Ok((-charge / slope, charge, slope))
}

/// Locate `Q_F` to `|ε(Q_F|Q_F)| < tol`.
///
/// Bisection on `(max(Q_u, 0), Q₀)` down to width `1e-3`, Newton with
/// `dε(Q|Q)/dQ` on the coarse grid, then Newton on the fine grid.
pub fn solve_fermi(params: &ModelParams, tol: f64, spec: &GridSpec) -> Result<FermiSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (q_u, q_0) = bracket_endpoints(params);
    let lo = q_u.unwrap_or(LOWER_BRACKET);
    let mut iterations = 0usize;
    let (a, b) = roots::bisect(
        |q| {
            iterations += 1;
            boundary_function(params, q, spec)
        },
        lo,
        q_0,
        BISECTION_WIDTH,
        200,
    )?;
    let with_slope = |q: f64, spec: &GridSpec| -> Result<(f64, f64)> {
        let s = dressed_solution(*params, q, spec)?;
        Ok((s.boundary_value()?, s.boundary_derivative()?))
    };
    let coarse = roots::safeguarded_newton(
        |q| {
            iterations += 1;
            with_slope(q, spec)
        },
        a,
        b,
        0.5 * (a + b),
        1e-13,
        0.0,
        100,
    )?;
    let fine = spec.fine();
    let mut q_f = coarse;
    let mut last_step = f64::INFINITY;
    for k in 0..FINE_NEWTON_STEPS + 10 {
        let (g, dg) = with_slope(q_f, &fine)?;
        iterations += 1;
        if dg <= 0.0 {
            return Err(Error::DegenerateDerivative(format!("dg/dQ = {dg} at Q = {q_f}")));
        }
        let step = g / dg;
        q_f -= step;
        last_step = step.abs();
        if k + 1 >= FINE_NEWTON_STEPS && (g.abs() < tol || last_step < 1e-15 * q_f) {
            break;
        }
    }
    if !(q_f > lo && q_f < q_0) {
        return Err(Error::Bracket(format!("Q_F = {q_f} left ({lo}, {q_0})")));
    }
    let solution = dressed_solution(*params, q_f, &fine)?;
    let g_residual = solution.boundary_value()?.abs();
    if !(g_residual < tol) {
        return Err(Error::NonConvergence(format!(
            "|eps(Q_F|Q_F)| = {g_residual:e} not below {tol:e}"
        )));
    }
    let (dqf_dh, charge, eps_prime) = fermi_derivative(&solution)?;
    let data = FermiData {
        params: *params,
        q_f,
        q_0,
        q_u,
        g_residual,
        dqf_dh,
        eps_prime,
        charge,
        iterations,
        bracket_width: last_step,
        nodes: fine.nodes_for(q_f),
    };
    Ok(FermiSolution { data, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels;

    #[test]
    fn bracket_closed_forms() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let (qu, q0) = bracket_endpoints(&p);
        assert!(kernels::bare_energy(Complex64::new(q0, 0.0), &p).unwrap().norm() < 1e-12);
        let qu = qu.unwrap();
        assert!(kernels::upper_energy(Complex64::new(qu, 0.0), &p).unwrap().norm() < 1e-12);
        let near = ModelParams::new(1.0, 1.3, p.h_c() * (1.0 - 1e-9)).unwrap();
        assert!(bracket_endpoints(&near).1 < 1e-4);
        let edge = 2.0 * PI * 1.3f64.sin() / 1.3;
        let p = ModelParams::new(1.0, 1.3, edge).unwrap();
        assert_eq!(bracket_endpoints(&p).0, None);
    }

    #[test]
    fn boundary_function_limits() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let spec = GridSpec::default();
        let g0 = boundary_function(&p, 1e-7, &spec).unwrap();
        assert!((g0 - (p.h() - p.h_c())).abs() < 1e-6);
        // the boundary value saturates at h / sqrt(2(1 - γ/π)), independently
        // confirmed with a numpy solve at Q = 10..30
        let far = boundary_function(&p, 50.0, &spec).unwrap();
        assert!(far > 0.0);
        assert!((far - p.h() / (2.0 * p.scale()).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn reference_fermi_point() {
        let p = ModelParams::new(1.0, 1.3, 2.535).unwrap();
        let f = solve_fermi(&p, 1e-12, &GridSpec::default()).unwrap();
        assert!((f.data.q_f - 0.5530770118680023).abs() < 1e-10);
        assert!(f.data.g_residual < 1e-12);
        assert!(f.data.dqf_dh < 0.0 && f.data.eps_prime > 0.0);
        let qu = f.data.q_u.unwrap();
        assert!(qu < f.data.q_f && f.data.q_f < f.data.q_0);
    }
}
