//! The dressed energy `ε = ε(·|Q_F)` on the cylinder `-π/2 ≤ Im λ < π/2`
//! with the cuts `[-Q_F, Q_F] ± iγ` removed.
//!
//! Besides evaluation this module checks the local structure of `ε`: the
//! simple pole at `iγ/2`, the jump across the cuts, the alternative
//! representation on the line `Im λ = π/2`, and the qualitative properties
//! (harmonicity, symmetry, monotonicity) of its real part.

mod bounds;
mod curve;

pub use bounds::{certify_bounds, BoundGrid, BoundReport, Region};
pub use curve::{
    asymptotic_constant, asymptotic_im, asymptotic_x, curve_samples, fit_power, trace_curve,
    AsymptoticData, CurvePoint, PowerFit, FIT_WINDOW,
};

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dressed::DressedSolution;
use crate::error::{Error, Result};
use crate::fermi::{FermiData, FermiSolution};
use crate::fredholm::{cut_distance, DensityVector};
use crate::kernels::{self, ModelParams};
use crate::quadrature;

/// Exclusion radius around the poles `±iγ/2`.
pub const POLE_GUARD: f64 = 1e-3;
/// Exclusion radius around the cuts.
pub const CUT_GUARD: f64 = 1e-3;
/// Guard used for internal evaluations that approach the cuts on purpose.
const INTERNAL_CUT_GUARD: f64 = 1e-8;

/// `ε` at the Fermi point together with the evaluation guards.
#[derive(Debug, Clone)]
pub struct CutPlane {
    data: FermiData,
    solution: DressedSolution,
    eps: DensityVector,
    pole_guard: f64,
    cut_guard: f64,
}

/// Estimate of the residue of `ε` at `iγ/2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResidueReport {
    pub estimate: Complex64,
    pub expected: Complex64,
    pub relative_error: f64,
    /// Change of the estimate between radii `1e-2` and `1e-3`.
    pub radius_sensitivity: f64,
}

/// Discrepancy `|ε₊ - ε₋ - ε(x)|` across the cut at `x + iγ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct JumpReport {
    pub x: f64,
    pub delta: f64,
    /// Discrepancy at offset `δ`.
    pub coarse: f64,
    /// Discrepancy at offset `δ/2`.
    pub fine: f64,
    /// Discrepancy of the Richardson combination `2J(δ/2) - J(δ)`.
    pub extrapolated: f64,
    /// `|ε(x)|`.
    pub scale: f64,
}

/// `ω(z)` and the truncation data of its integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OmegaValue {
    pub z: Complex64,
    pub value: Complex64,
    pub tail_bound: f64,
    pub cutoff: f64,
    /// Distance of `Im z` to the nearest kernel pole, `π/2 - γ - |Im z|`.
    pub margin: f64,
}

/// Outcome of a sampled property check.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub name: &'static str,
    pub samples: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Bound on `∫_{t₀}^∞ sup_y |K(t + iy|β)| dt` from `|K| ≤ 2|sin 2β| e^{-2t} / (π(1 - 2u - u²))`.
pub(crate) fn kernel_tail_bound(beta: f64, t0: f64) -> f64 {
    let u = (-2.0 * t0).exp();
    let den = 1.0 - 2.0 * u - u * u;
    if den <= 0.0 {
        return f64::INFINITY;
    }
    (2.0 * beta).sin().abs() * u / (PI * den)
}

impl CutPlane {
    pub fn new(fermi: &FermiSolution) -> Self {
        let eps = fermi.solution.eps().clone().with_guard(INTERNAL_CUT_GUARD);
        Self {
            data: fermi.data.clone(),
            solution: fermi.solution.clone(),
            eps,
            pole_guard: POLE_GUARD,
            cut_guard: CUT_GUARD,
        }
    }

    pub fn with_guards(mut self, pole_guard: f64, cut_guard: f64) -> Self {
        self.pole_guard = pole_guard;
        self.cut_guard = cut_guard;
        self
    }

    pub fn data(&self) -> &FermiData {
        &self.data
    }

    pub fn solution(&self) -> &DressedSolution {
        &self.solution
    }

    pub fn params(&self) -> &ModelParams {
        &self.data.params
    }

    pub fn q_f(&self) -> f64 {
        self.data.q_f
    }

    pub fn gamma(&self) -> f64 {
        self.data.params.gamma()
    }

    pub fn pole_guard(&self) -> f64 {
        self.pole_guard
    }

    pub fn cut_guard(&self) -> f64 {
        self.cut_guard
    }

    /// Right end of the search interval for zeros of `Re ε` along horizontal lines.
    pub fn x_max(&self) -> f64 {
        let p = self.params();
        5.0 * self.q_f().max(1.0) + (2.0 * p.j() * p.gamma().sin().powi(2) / p.h()).sqrt().asinh()
    }

    /// Shift `Im λ` into `[-π/2, π/2)`.
    pub fn normalize(lambda: Complex64) -> Complex64 {
        Complex64::new(lambda.re, (lambda.im + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2)
    }

    /// Distance to the poles `±iγ/2 (mod iπ)`.
    pub fn pole_distance(&self, lambda: Complex64) -> f64 {
        let g = self.gamma();
        kernels::periodic_pole_distance(lambda, 0.5 * g, PI)
            .min(kernels::periodic_pole_distance(lambda, -0.5 * g, PI))
    }

    /// Distance to the cuts `[-Q_F, Q_F] ± iγ (mod iπ)`.
    pub fn cut_distance(&self, lambda: Complex64) -> f64 {
        cut_distance(lambda, self.q_f(), self.gamma())
    }

    /// `ε(λ)` for `λ` clear of the guard neighbourhoods.
    pub fn eval_eps_complex(&self, lambda: Complex64) -> Result<Complex64> {
        let lambda = Self::normalize(lambda);
        let d = self.pole_distance(lambda);
        if d < self.pole_guard {
            return Err(Error::PoleProximity {
                lambda: format!("{lambda}"),
                pole: format!("±{}i", 0.5 * self.gamma()),
                distance: d,
            });
        }
        let d = self.cut_distance(lambda);
        if d < self.cut_guard {
            return Err(Error::CutProximity { lambda: format!("{lambda}"), distance: d, guard: self.cut_guard });
        }
        self.eps.evaluate(lambda)
    }

    /// `ε(λ)` with only the internal guards.
    pub(crate) fn eps_raw(&self, lambda: Complex64) -> Result<Complex64> {
        self.eps.evaluate(lambda)
    }

    /// `ε'(λ)` with only the internal guards.
    pub(crate) fn eps_prime_raw(&self, lambda: Complex64) -> Result<Complex64> {
        self.eps.evaluate_derivative(lambda)
    }

    /// `ε(λ) - h`, formed without cancellation where `ε ≈ h`.
    pub(crate) fn eps_minus_h(&self, lambda: Complex64) -> Result<Complex64> {
        let p = self.params();
        let bare = -4.0 * PI * p.j() * p.gamma().sin() * kernels::kernel_k(lambda, 0.5 * p.gamma())?;
        Ok(bare - self.eps.integral_term(lambda)?)
    }

    /// `ε(λ) - ε₀(λ)`.
    pub(crate) fn eps_minus_bare(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(-self.eps.integral_term(lambda)?)
    }

    fn circle_mean<F>(&self, radius: f64, points: usize, weight: F) -> Result<Complex64>
    where
        F: Fn(Complex64) -> Complex64,
    {
        let centre = Complex64::new(0.0, 0.5 * self.gamma());
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..points {
            let offset = Complex64::from_polar(radius, 2.0 * PI * k as f64 / points as f64);
            sum += weight(offset) * self.eps_raw(centre + offset)?;
        }
        Ok(sum / points as f64)
    }

    /// Mean of `(λ - iγ/2) ε(λ)` over a circle of radius `radius`.
    pub fn residue_estimate(&self, radius: f64) -> Result<Complex64> {
        self.circle_mean(radius, 64, |w| w)
    }

    /// Constant term of the Laurent expansion of `ε` at `iγ/2`.
    pub fn laurent_constant(&self, radius: f64) -> Result<Complex64> {
        self.circle_mean(radius, 64, |_| Complex64::new(1.0, 0.0))
    }

    /// Residue of `ε` at `iγ/2`, expected to be `2iJ sin γ`.
    pub fn residue_check(&self) -> Result<ResidueReport> {
        let p = self.params();
        let expected = Complex64::new(0.0, 2.0 * p.j() * p.gamma().sin());
        let coarse = self.residue_estimate(1e-2)?;
        let estimate = self.residue_estimate(1e-3)?;
        let radius_sensitivity = (coarse - estimate).norm();
        if !(estimate.is_finite() && radius_sensitivity < 1e-5 * expected.norm()) {
            return Err(Error::NonConvergence(format!(
                "residue estimate moved by {radius_sensitivity:e} between radii"
            )));
        }
        Ok(ResidueReport {
            estimate,
            expected,
            relative_error: (estimate - expected).norm() / expected.norm(),
            radius_sensitivity,
        })
    }

    /// Compare `ε(x + iγ + iδ) - ε(x + iγ - iδ)` with `ε(x)`.
    pub fn jump_check(&self, x: f64, delta: f64) -> Result<JumpReport> {
        let g = self.gamma();
        let room = self.q_f() - x.abs();
        if room < self.cut_guard {
            return Err(Error::CutProximity {
                lambda: format!("{x}+{g}i"),
                distance: room.max(0.0),
                guard: self.cut_guard,
            });
        }
        if !(delta > 0.0 && delta < 0.1 * g) {
            return Err(Error::InvalidParameter(format!("offset must lie in (0, 0.1 gamma), got {delta}")));
        }
        let target = self.eps_raw(Complex64::new(x, 0.0))?;
        let jump = |d: f64| -> Result<Complex64> {
            let above = self.eps_raw(Complex64::new(x, g + d))?;
            let below = self.eps_raw(Complex64::new(x, g - d))?;
            Ok(above - below - target)
        };
        let coarse = jump(delta)?;
        let fine = jump(0.5 * delta)?;
        Ok(JumpReport {
            x,
            delta,
            coarse: coarse.norm(),
            fine: fine.norm(),
            extrapolated: (2.0 * fine - coarse).norm(),
            scale: target.norm(),
        })
    }

    /// `ω(z) = h/s - (1/s) ∫_{|w|>Q_F} K((z - w)/s | π/2 - γ') ε(w) dw`, `s = 1 - γ/π`,
    /// which represents `ε(z + iπ/2)` for `|Im z| < π/2 - γ`.
    pub fn omega_eval(&self, z: Complex64, tol: f64) -> Result<OmegaValue> {
        let p = self.params();
        let g = p.gamma();
        let s = p.scale();
        let beta = FRAC_PI_2 - kernels::gamma_prime(g);
        let margin = FRAC_PI_2 - g - z.im.abs();
        if margin < self.cut_guard {
            return Err(Error::StripViolation { lambda: format!("{z}"), limit: FRAC_PI_2 - g });
        }
        let q = self.q_f();
        let mut length = 20.0 * s;
        let (mut cutoff, mut bound);
        loop {
            cutoff = q + z.re.abs() + length;
            // sup |ε| beyond the cutoff times ∫ |K| over both tails; the 1/s
            // prefactor cancels against dw = s dt
            let sup_far = p.h().max(p.h_c() - p.h())
                + self.eps.sup_norm() * 2.0 * q * kernels::kernel_k_real(cutoff - q, g);
            bound = sup_far
                * (kernel_tail_bound(beta, (cutoff - z.re) / s) + kernel_tail_bound(beta, (cutoff + z.re) / s));
            if bound <= tol || length > 400.0 * s {
                break;
            }
            length *= 2.0;
        }
        if bound > tol {
            return Err(Error::TailBound { bound, tol });
        }
        let width = margin.min(0.5);
        let panels = ((cutoff - q) / width).ceil() as usize;
        let integral = quadrature::try_integrate_panels(q, cutoff, panels, |w| -> Result<Complex64> {
            // ε is even on the real axis
            let e = self.eps_raw(Complex64::new(w, 0.0))?;
            let k = kernels::kernel_k_unchecked((z - w) / s, beta) + kernels::kernel_k_unchecked((z + w) / s, beta);
            Ok(k * e)
        })?;
        Ok(OmegaValue { z, value: (p.h() - integral) / s, tail_bound: bound, cutoff, margin })
    }

    fn clear_of_singularities(&self, lambda: Complex64, distance: f64) -> bool {
        self.pole_distance(lambda) > distance && self.cut_distance(lambda) > distance
    }

    /// Five-point Laplacian of `Re ε` at random points, relative to
    /// `|∂²ₓ Re ε| + |∂²ᵧ Re ε|`.
    pub fn harmonicity(&self, seed: u64, samples: usize) -> Result<PropertyReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = 1e-3;
        let xm = self.x_max();
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let l = Complex64::new(rng.random_range(-xm..xm), rng.random_range(-FRAC_PI_2..FRAC_PI_2));
            if !self.clear_of_singularities(l, 0.05) {
                continue;
            }
            let u = |d: Complex64| -> Result<f64> { Ok(self.eps_raw(l + d)?.re) };
            let c = u(Complex64::new(0.0, 0.0))?;
            let uxx = u(Complex64::new(step, 0.0))? - 2.0 * c + u(Complex64::new(-step, 0.0))?;
            let uyy = u(Complex64::new(0.0, step))? - 2.0 * c + u(Complex64::new(0.0, -step))?;
            let scale = uxx.abs() + uyy.abs();
            if scale > 0.0 {
                worst = worst.max((uxx + uyy).abs() / scale);
            }
            taken += 1;
        }
        Ok(PropertyReport { name: "harmonicity", samples, worst, tolerance: 1e-4, passed: worst < 1e-4 })
    }

    /// `Re ε` even and `Im ε` odd in `x` and in `y`, at random points.
    pub fn symmetry(&self, seed: u64, samples: usize) -> Result<PropertyReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xm = self.x_max();
        let mut worst: f64 = 0.0;
        let mut taken = 0;
        while taken < samples {
            let (x, y) = (rng.random_range(0.0..xm), rng.random_range(0.0..FRAC_PI_2));
            let l = Complex64::new(x, y);
            if !self.clear_of_singularities(l, 0.01) {
                continue;
            }
            let e = self.eps_raw(l)?;
            let mx = self.eps_raw(Complex64::new(-x, y))?;
            let my = self.eps_raw(Complex64::new(x, -y))?;
            let mxy = self.eps_raw(Complex64::new(-x, -y))?;
            let scale = e.norm().max(1.0);
            let defect = [
                (mx.re - e.re).abs(),
                (my.re - e.re).abs(),
                (mxy.re - e.re).abs(),
                (mx.im + e.im).abs(),
                (my.im + e.im).abs(),
                (mxy.im - e.im).abs(),
            ]
            .into_iter()
            .fold(0.0, f64::max);
            worst = worst.max(defect / scale);
            taken += 1;
        }
        Ok(PropertyReport { name: "symmetry", samples, worst, tolerance: 1e-10, passed: worst < 1e-10 })
    }

    /// `Re ε(x + iy)` strictly increasing in `x > 0` on an `nx × ny` grid of
    /// the strip `0 ≤ y < γ/2`. `worst` is the smallest increment seen.
    pub fn monotonicity(&self, nx: usize, ny: usize) -> Result<PropertyReport> {
        let g = self.gamma();
        let xm = self.x_max();
        let mut worst = f64::INFINITY;
        let mut samples = 0;
        for i in 0..ny {
            let y = (i as f64 + 0.5) * 0.5 * g / ny as f64;
            let mut prev: Option<f64> = None;
            for k in 1..=nx {
                let l = Complex64::new(k as f64 * xm / nx as f64, y);
                if self.pole_distance(l) < self.pole_guard {
                    prev = None;
                    continue;
                }
                let v = self.eps_raw(l)?.re;
                if let Some(p) = prev {
                    worst = worst.min(v - p);
                    samples += 1;
                }
                prev = Some(v);
            }
        }
        Ok(PropertyReport { name: "monotonicity", samples, worst, tolerance: 0.0, passed: worst > 0.0 })
    }

    /// `|Re ε(30 + iy) - h|` over the given heights.
    pub fn limit_at_infinity(&self, ys: &[f64]) -> Result<PropertyReport> {
        let mut worst: f64 = 0.0;
        for &y in ys {
            worst = worst.max(self.eps_minus_h(Complex64::new(30.0, y))?.re.abs());
        }
        Ok(PropertyReport { name: "limit", samples: ys.len(), worst, tolerance: 1e-6, passed: worst < 1e-6 })
    }
}

/// `γ ↦ γ'` increasing and mapping `(0, π/2)` into itself, on `samples` points.
pub fn gamma_prime_map(samples: usize) -> PropertyReport {
    let mut ok = true;
    let mut prev = 0.0;
    let mut worst = f64::INFINITY;
    for k in 1..=samples {
        let g = FRAC_PI_2 * k as f64 / (samples + 1) as f64;
        let gp = kernels::gamma_prime(g);
        ok &= gp > prev && gp < FRAC_PI_2;
        worst = worst.min(gp - prev).min(FRAC_PI_2 - gp);
        prev = gp;
    }
    PropertyReport { name: "gamma-prime map", samples, worst, tolerance: 0.0, passed: ok }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed::GridSpec;
    use crate::fermi::solve_fermi;
    use std::sync::OnceLock;

    pub(crate) fn plane() -> &'static CutPlane {
        static PLANE: OnceLock<CutPlane> = OnceLock::new();
        PLANE.get_or_init(|| {
            let p = ModelParams::new(1.0, 1.3, 2.535).unwrap();
            CutPlane::new(&solve_fermi(&p, 1e-12, &GridSpec::default()).unwrap())
        })
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reference_values() {
        let pl = plane();
        // numpy Nyström at n = 2048
        let v = pl.eval_eps_complex(c(0.5, 0.4)).unwrap();
        assert!((v - c(0.44592931186614715, 2.255699859391856)).norm() < 1e-10);
        let v = pl.eval_eps_complex(c(0.0, FRAC_PI_2)).unwrap();
        assert!((v - c(4.24718666447273, 0.0)).norm() < 1e-10);
        assert!(pl.eval_eps_complex(c(pl.q_f(), 0.0)).unwrap().norm() < 1e-11);
        assert!(matches!(pl.eval_eps_complex(c(0.0, 0.65)), Err(Error::PoleProximity { .. })));
        assert!(matches!(pl.eval_eps_complex(c(0.1, 1.3 + 1e-4)), Err(Error::CutProximity { .. })));
        let periodic = pl.eval_eps_complex(c(0.5, 0.4 + PI)).unwrap();
        assert!((periodic - pl.eval_eps_complex(c(0.5, 0.4)).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn residue_and_laurent() {
        let pl = plane();
        let r = pl.residue_check().unwrap();
        assert!(r.relative_error < 1e-6);
        assert!((r.expected.im - 2.0 * 1.3f64.sin()).abs() < 1e-15);
        let a0 = pl.laurent_constant(1e-2).unwrap();
        assert!(a0.im.abs() < 1e-10);
    }

    #[test]
    fn jump_across_cut() {
        let pl = plane();
        let r = pl.jump_check(0.0, 1e-4).unwrap();
        assert!(r.coarse < 1e-3 * r.scale);
        assert!(r.extrapolated < r.fine && r.fine < r.coarse);
        let ratio = r.coarse / r.fine;
        assert!(ratio > 1.6 && ratio < 2.4, "{ratio}");
        assert!(pl.jump_check(pl.q_f(), 1e-4).is_err());
    }

    #[test]
    fn omega_matches_shifted_energy() {
        let pl = plane();
        for &z in &[0.0, 0.37, -1.2, 4.0] {
            let w = pl.omega_eval(c(z, 0.0), 1e-12).unwrap();
            let e = pl.eval_eps_complex(c(z, FRAC_PI_2)).unwrap();
            assert!((w.value - e).norm() < 1e-8, "{z}: {} {}", w.value, e);
        }
        let far = pl.omega_eval(c(25.0, 0.0), 1e-12).unwrap();
        assert!((far.value.re - pl.params().h()).abs() < 1e-8);
        assert!(pl.omega_eval(c(0.0, 0.3), 1e-12).is_err());
    }

    #[test]
    fn property_suites() {
        let pl = plane();
        assert!(pl.harmonicity(7, 20).unwrap().passed);
        assert!(pl.symmetry(7, 20).unwrap().passed);
        assert!(pl.monotonicity(40, 10).unwrap().passed);
        assert!(pl.limit_at_infinity(&[0.0, 0.5, 1.0, 1.5]).unwrap().passed);
        assert!(gamma_prime_map(100).passed);
    }

    #[test]
    fn tail_bound_shape() {
        assert!(kernel_tail_bound(0.5, 0.1).is_infinite());
        assert!(kernel_tail_bound(0.5, 20.0) < 1e-17);
    }
}
