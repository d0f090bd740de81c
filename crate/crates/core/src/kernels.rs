//! Closed-form special functions: the XXZ kernel, its Fourier transform,
//! the driving terms and the solutions of the integral equation at `Q = ∞`.
//!
//! Every function accepts complex rapidities. Large real parts are handled
//! through `e^{-2|λ|}`-scaled forms, so nothing overflows for `|Re λ|` in
//! the hundreds.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Evaluations closer than this to a pole are rejected.
pub const POLE_GUARD: f64 = 1e-6;


/// Physical parameters of the chain: exchange `J`, anisotropy angle `γ`
/// (`Δ = cos γ`) and magnetic field `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    j: f64,
    gamma: f64,
    h: f64,
}

/// Upper critical field `h_c = 4J(1 + cos γ)`.
pub fn critical_field(j: f64, gamma: f64) -> f64 {
    4.0 * j * (1.0 + gamma.cos())
}

impl ModelParams {
    /// Validated constructor for the repulsive critical regime
    /// `0 < γ < π/2`, `J > 0`, `0 < h < h_c`.
    pub fn new(j: f64, gamma: f64, h: f64) -> Result<Self> {
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidParameter(format!("J must be positive, got {j}")));
        }
        if !(gamma > 0.0 && gamma < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, pi/2), got {gamma}"
            )));
        }
        let hc = critical_field(j, gamma);
        if !(h > 0.0 && h < hc) {
            return Err(Error::OutOfRegime(format!(
                "h = {h} outside (0, h_c) with h_c = {hc}"
            )));
        }
        Ok(Self { j, gamma, h })
    }

    /// Field given as a fraction of `h_c`.
    pub fn from_field_ratio(j: f64, gamma: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::OutOfRegime(format!("h/h_c = {ratio} outside (0, 1)")));
        }
        Self::new(j, gamma, ratio * critical_field(j, gamma))
    }

    pub fn with_field(&self, h: f64) -> Result<Self> {
        Self::new(self.j, self.gamma, h)
    }

    pub fn j(&self) -> f64 {
        self.j
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn delta(&self) -> f64 {
        self.gamma.cos()
    }

    pub fn h_c(&self) -> f64 {
        critical_field(self.j, self.gamma)
    }

    /// `h / h_c`.
    pub fn field_ratio(&self) -> f64 {
        self.h / self.h_c()
    }

    /// Rescaling factor `1 - γ/π` that appears throughout the `Q = ∞` formulas.
    pub fn scale(&self) -> f64 {
        1.0 - self.gamma / PI
    }
}

/// `γ' = (γ/2) / (1 - γ/π)`.
pub fn gamma_prime(gamma: f64) -> f64 {
    0.5 * gamma / (1.0 - gamma / PI)
}

/// Distance from `lambda` to the nearest point of `i·pole_im + i·period·ℤ`.
pub fn periodic_pole_distance(lambda: Complex64, pole_im: f64, period: f64) -> f64 {
    let dy = (lambda.im - pole_im).rem_euclid(period);
    lambda.re.hypot(dy.min(period - dy))
}

fn guard_poles(lambda: Complex64, poles_im: &[f64], period: f64) -> Result<()> {
    for &p in poles_im {
        let d = periodic_pole_distance(lambda, p, period);
        if d < POLE_GUARD {
            return Err(Error::PoleProximity {
                lambda: format!("{lambda}"),
                pole: format!("{p}i mod {period}i"),
                distance: d,
            });
        }
    }
    Ok(())
}

/// Kernel `K(λ|γ) = (coth(λ - iγ) - coth(λ + iγ)) / 2πi`, for `γ ∈ (0, π)`.
pub fn kernel_k(lambda: Complex64, gamma: f64) -> Result<Complex64> {
    if !(gamma > 0.0 && gamma < PI) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, pi), got {gamma}")));
    }
    guard_poles(lambda, &[gamma, -gamma], PI)?;
    Ok(kernel_k_unchecked(lambda, gamma))
}

/// [`kernel_k`] without the pole guard. Returns non-finite values on a pole.
///
/// Uses `K = 2 sin(2γ) u / (π (1 - 2 cos(2γ) u + u²))` with `u = e^{-2λ}`,
/// `Re λ ≥ 0`, and evenness otherwise.
#[inline]
pub fn kernel_k_unchecked(lambda: Complex64, gamma: f64) -> Complex64 {
    let z = if lambda.re >= 0.0 { lambda } else { -lambda };
    let u = (-2.0 * z).exp();
    let (s2, c2) = (2.0 * gamma).sin_cos();
    let den = 1.0 - 2.0 * c2 * u + u * u;
    u * (2.0 * s2 / PI) / den
}

/// Real-axis fast path of [`kernel_k_unchecked`].
#[inline]
pub fn kernel_k_real(x: f64, gamma: f64) -> f64 {
    let u = (-2.0 * x.abs()).exp();
    let (s2, c2) = (2.0 * gamma).sin_cos();
    2.0 * s2 * u / (PI * (1.0 - 2.0 * c2 * u + u * u))
}

/// `∂_λ K(λ|γ)` without pole guard.
#[inline]
pub fn kernel_k_prime_unchecked(lambda: Complex64, gamma: f64) -> Complex64 {
    let (z, sign) = if lambda.re >= 0.0 { (lambda, 1.0) } else { (-lambda, -1.0) };
    let u = (-2.0 * z).exp();
    let (s2, c2) = (2.0 * gamma).sin_cos();
    let den = 1.0 - 2.0 * c2 * u + u * u;
    -u * (1.0 - u * u) * (sign * 4.0 * s2 / PI) / (den * den)
}

/// `sinh(a k) / sinh(b k)` for `b > |a|`, stable for all real `k`.
fn sinh_ratio(a: f64, b: f64, k: f64) -> f64 {
    let k = k.abs();
    if k < 1e-4 {
        return (a / b) * (1.0 + (a * a - b * b) * k * k / 6.0);
    }
    let num = if (a * k).abs() <= 1.0 {
        2.0 * (-b * k).exp() * (a * k).sinh()
    } else {
        ((a - b) * k).exp() - ((-a - b) * k).exp()
    };
    num / -(-2.0 * b * k).exp_m1()
}

/// Fourier transform `∫ e^{ikλ} K(λ|γ) dλ = sinh((π/2 - γ)k) / sinh(πk/2)`.
pub fn kernel_fourier(k: f64, gamma: f64) -> f64 {
    sinh_ratio(FRAC_PI_2 - gamma, FRAC_PI_2, k)
}

/// `1/cosh(z)` without overflow.
pub fn sech(z: Complex64) -> Complex64 {
    let z = if z.re >= 0.0 { z } else { -z };
    let e = (-z).exp();
    2.0 * e / (1.0 + e * e)
}

/// `tanh(z)` without overflow.
pub fn tanh(z: Complex64) -> Complex64 {
    let (w, sign) = if z.re >= 0.0 { (z, 1.0) } else { (-z, -1.0) };
    let e = (-2.0 * w).exp();
    sign * (1.0 - e) / (1.0 + e)
}

/// Bare energy `ε₀(λ) = h - 4πJ sin(γ) K(λ|γ/2)`.
pub fn bare_energy(lambda: Complex64, params: &ModelParams) -> Result<Complex64> {
    let g = params.gamma;
    guard_poles(lambda, &[0.5 * g, -0.5 * g], PI)?;
    Ok(params.h - 4.0 * PI * params.j * g.sin() * kernel_k_unchecked(lambda, 0.5 * g))
}

/// `ε₀'(λ)`.
pub fn bare_energy_prime(lambda: Complex64, params: &ModelParams) -> Result<Complex64> {
    let g = params.gamma;
    guard_poles(lambda, &[0.5 * g, -0.5 * g], PI)?;
    Ok(-4.0 * PI * params.j * g.sin() * kernel_k_prime_unchecked(lambda, 0.5 * g))
}

fn sech_scaled(lambda: Complex64, gamma: f64) -> Result<Complex64> {
    // poles of 1/cosh(πλ/γ) sit at iγ/2 + iγℤ
    guard_poles(lambda, &[0.5 * gamma], gamma)?;
    Ok(sech(lambda * (PI / gamma)))
}

fn sech_amplitude(params: &ModelParams) -> f64 {
    2.0 * PI * params.j * params.gamma.sin() / params.gamma
}

/// Upper bound function `ε_u(λ) = h - 2πJ sin(γ) / (γ cosh(πλ/γ))`.
pub fn upper_energy(lambda: Complex64, params: &ModelParams) -> Result<Complex64> {
    Ok(params.h - sech_amplitude(params) * sech_scaled(lambda, params.gamma)?)
}

/// Dressed energy at `Q = ∞`: `h / (2(1 - γ/π)) - 2πJ sin(γ) / (γ cosh(πλ/γ))`.
pub fn eps_inf(lambda: Complex64, params: &ModelParams) -> Result<Complex64> {
    Ok(0.5 * params.h / params.scale() - sech_amplitude(params) * sech_scaled(lambda, params.gamma)?)
}

/// `ε_∞'(λ)`.
pub fn eps_inf_prime(lambda: Complex64, params: &ModelParams) -> Result<Complex64> {
    let g = params.gamma;
    let s = sech_scaled(lambda, g)?;
    Ok(sech_amplitude(params) * (PI / g) * s * tanh(lambda * (PI / g)))
}

/// Root density at `Q = ∞`: `1 / (2γ cosh(πλ/γ))`.
pub fn rho_inf(lambda: Complex64, gamma: f64) -> Result<Complex64> {
    Ok(sech_scaled(lambda, gamma)? / (2.0 * gamma))
}

/// Which integral representation of `R(λ|γ)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolventRoute {
    /// Inverse Fourier transform, valid for `|Im λ| < γ`.
    Fourier,
    /// Convolution of `K(·/(1-γ/π)|γ')` with `1/cosh(π·/γ)`, valid for `|Im λ| < γ/2`.
    Convolution,
}

/// Resolvent kernel `R(λ|γ)` of the integral equation on the whole line.
#[derive(Debug, Clone)]
pub struct InfiniteResolvent {
    gamma: f64,
    /// decay rate used by [`InfiniteResolvent::envelope`]
    decay: f64,
}

/// Integration stops where `e^{-(γ-|y|)k}` falls below `e^{-39.5} ≈ 7e-18`.
const FOURIER_CUTOFF_EXPONENT: f64 = 39.5;
/// Closest approach to the strip edge `|Im λ| = γ` accepted by the Fourier route.
const FOURIER_EDGE_MARGIN: f64 = 1e-2;

impl InfiniteResolvent {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "resolvent needs gamma in (0, pi/2), got {gamma}"
            )));
        }
        let kappa = (PI / gamma).min(2.0 * PI / (PI - gamma));
        Ok(Self { gamma, decay: 0.8 * kappa })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `F[R](k) = sinh((π/2-γ)k) / (2 cosh(γk/2) sinh((π-γ)k/2))`.
    pub fn fourier_transform(&self, k: f64) -> f64 {
        let g = self.gamma;
        0.5 * sinh_ratio(FRAC_PI_2 - g, 0.5 * (PI - g), k) / (0.5 * g * k).cosh()
    }

    /// `R(λ|γ)` by the default (Fourier) route.
    pub fn value(&self, lambda: Complex64) -> Result<Complex64> {
        self.value_by(lambda, ResolventRoute::Fourier)
    }

    pub fn value_by(&self, lambda: Complex64, route: ResolventRoute) -> Result<Complex64> {
        match route {
            ResolventRoute::Fourier => self.fourier_route(lambda),
            ResolventRoute::Convolution => self.convolution_route(lambda),
        }
    }

    fn fourier_route(&self, lambda: Complex64) -> Result<Complex64> {
        let g = self.gamma;
        let (x, y) = (lambda.re.abs(), lambda.im);
        let ay = y.abs();
        let gap = g - ay;
        if gap < FOURIER_EDGE_MARGIN {
            return Err(Error::StripViolation {
                lambda: format!("{lambda}"),
                limit: g - FOURIER_EDGE_MARGIN,
            });
        }
        // R is even, so only |x| enters together with the sign of y·x.
        let sy = if lambda.re < 0.0 { -y.signum() } else { y.signum() };
        let a = FRAC_PI_2 - g;
        let b = 0.5 * (PI - g);
        let kmax = FOURIER_CUTOFF_EXPONENT / gap;
        let width = if x > 0.0 { (3.0 / x).min(1.0) } else { 1.0 };
        let panels = (kmax / width).ceil() as usize;
        let integral = quadrature::integrate_panels(0.0, kmax, panels, |k| {
            // Φ(k)cosh(ky) and Φ(k)sinh(ky), Φ = sinh(ak)/(cosh(gk/2)sinh(bk)),
            // with all growing exponentials folded into e^{(|y|-g)k}.
            let s = if k < 1e-4 {
                (a / b) * (1.0 + (a * a - b * b) * k * k / 6.0)
            } else {
                (-2.0 * a * k).exp_m1() / (-2.0 * b * k).exp_m1()
            };
            let common = ((ay - g) * k).exp() * s / (1.0 + (-g * k).exp());
            let ch = common * (1.0 + (-2.0 * ay * k).exp());
            let sh = common * -(-2.0 * ay * k).exp_m1();
            let (sin_kx, cos_kx) = (k * x).sin_cos();
            Complex64::new(cos_kx * ch, -sy * sin_kx * sh)
        });
        Ok(integral / (2.0 * PI))
    }

    fn convolution_route(&self, lambda: Complex64) -> Result<Complex64> {
        let g = self.gamma;
        let y = lambda.im.abs();
        let gap = 0.5 * g - y;
        if gap <= 0.0 {
            return Err(Error::StripViolation {
                lambda: format!("{lambda}"),
                limit: 0.5 * g,
            });
        }
        let s = 1.0 - g / PI;
        let gp = gamma_prime(g);
        // K(μ/s|γ') ~ e^{-2|μ|/s} and sech((λ-μ)π/γ) ~ e^{-π|λ-μ|/γ}
        let reach = (20.0 * s).max(40.0 * g / PI);
        let lo = lambda.re.min(0.0) - reach;
        let hi = lambda.re.max(0.0) + reach;
        let width = gap.min(0.5);
        let panels = ((hi - lo) / width).ceil() as usize;
        let integral = quadrature::integrate_panels(lo, hi, panels, |mu| {
            kernel_k_real(mu / s, gp) * sech((lambda - mu) * (PI / g))
        });
        Ok(integral / (2.0 * g * s))
    }

    /// Bound `|R(x + iy|γ)| ≤ C(y) e^{-κ|x|}` with `κ` 80 % of the distance
    /// from the real axis to the nearest pole of `F[R]`.
    ///
    /// `C(y)` is obtained by integrating `|F[R]|` along the shifted contour
    /// `Im k = -κ`; returns `(C(y), κ)`.
    pub fn envelope(&self, y: f64) -> Result<(f64, f64)> {
        let g = self.gamma;
        let ay = y.abs();
        let gap = g - ay;
        if gap < FOURIER_EDGE_MARGIN {
            return Err(Error::StripViolation {
                lambda: format!("{}i", y),
                limit: g - FOURIER_EDGE_MARGIN,
            });
        }
        let kappa = self.decay;
        let a = FRAC_PI_2 - g;
        let b = 0.5 * (PI - g);
        let tmax = FOURIER_CUTOFF_EXPONENT / gap;
        let panels = (tmax / 0.5).ceil() as usize;
        let one = Complex64::new(1.0, 0.0);
        let integral = quadrature::integrate_panels(0.0, tmax, panels, |t| {
            let k = Complex64::new(t, -kappa);
            let ratio = (one - (-2.0 * a * k).exp()) / ((one - (-2.0 * b * k).exp()) * (one + (-g * k).exp()));
            let weight = ((ay - g) * t).exp() + (-(ay + g) * t).exp();
            Complex64::new(2.0 * ratio.norm() * weight, 0.0)
        });
        // ∫_ℝ |Φ(k - iκ)| e^{ky} dk / 4π with Φ = 2 F[R]
        Ok((integral.re / (4.0 * PI), kappa))
    }
}

/// `R(λ|γ)` by the Fourier route.
pub fn resolvent_inf(lambda: Complex64, gamma: f64) -> Result<Complex64> {
    InfiniteResolvent::new(gamma)?.value(lambda)
}

/// `∫_ℝ R(λ|γ) dλ = F[R](0) = (π - 2γ) / (2(π - γ))`.
pub fn resolvent_integral(gamma: f64) -> f64 {
    (PI - 2.0 * gamma) / (2.0 * (PI - gamma))
}

/// `∫_a^b K(λ - μ|γ) dμ` in closed form.
///
/// Principal logarithms are continuous along the horizontal segment because
/// `sinh(w)` keeps the sign of its imaginary part there; `λ` must stay off
/// the lines `Im λ ≡ ±γ (mod π)` and `|Re λ|` moderate (below ~300).
pub fn kernel_segment_integral(lambda: Complex64, a: f64, b: f64, gamma: f64) -> Complex64 {
    let ig = Complex64::new(0.0, gamma);
    let ln_sinh = |w: Complex64| w.sinh().ln();
    let upper = lambda - a; // μ = a
    let lower = lambda - b; // μ = b
    let theta = |z: Complex64| ln_sinh(z - ig) - ln_sinh(z + ig);
    (theta(upper) - theta(lower)) / Complex64::new(0.0, 2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kernel_at_origin() {
        let k = kernel_k(c(0.0, 0.0), PI / 4.0).unwrap();
        assert!((k.re - 1.0 / PI).abs() < 1e-15 && k.im == 0.0);
        let k = kernel_k(c(0.0, 0.0), 3.0 * PI / 4.0).unwrap();
        assert!((k.re + 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_multiprecision_value() {
        // mpmath, 40 digits, coth-difference form
        let k = kernel_k(c(1.0, 0.3), 1.3).unwrap();
        assert!((k.re - 0.032683955636165022695).abs() < 1e-15);
        assert!((k.im + 0.016893848594485457535).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_coth_definition() {
        let g = 0.9;
        for &(x, y) in &[(0.3, 0.2), (-1.2, 0.5), (2.0, -1.0), (0.0, 1.4)] {
            let l = c(x, y);
            let ig = c(0.0, g);
            let coth = |w: Complex64| w.cosh() / w.sinh();
            let direct = (coth(l - ig) - coth(l + ig)) / c(0.0, 2.0 * PI);
            assert!((kernel_k(l, g).unwrap() - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn kernel_pole_guard() {
        assert!(matches!(kernel_k(c(0.0, 1.3), 1.3), Err(Error::PoleProximity { .. })));
        assert!(matches!(kernel_k(c(1e-7, 1.3 - PI), 1.3), Err(Error::PoleProximity { .. })));
        assert!(kernel_k(c(1e-5, 1.3), 1.3).is_ok());
    }

    #[test]
    fn kernel_large_argument_is_finite() {
        let k = kernel_k(c(400.0, 0.2), 1.0).unwrap();
        assert!(k.is_finite() && k.norm() < 1e-300);
        assert_eq!(kernel_k_real(-800.0, 1.0), 0.0);
    }

    #[test]
    fn kernel_derivative_matches_difference_quotient() {
        let g = 1.1;
        for &(x, y) in &[(0.4, 0.1), (-0.7, 0.3), (3.0, -0.2)] {
            let l = c(x, y);
            let h = 1e-5;
            let fd = (kernel_k_unchecked(l + h, g) - kernel_k_unchecked(l - h, g)) / (2.0 * h);
            assert!((kernel_k_prime_unchecked(l, g) - fd).norm() < 1e-9);
        }
    }

    #[test]
    fn fourier_transform_limits() {
        assert!((kernel_fourier(0.0, PI / 4.0) - 0.5).abs() < 1e-15);
        assert!((kernel_fourier(0.0, 1.3) - (1.0 - 2.6 / PI)).abs() < 1e-15);
        assert!((kernel_fourier(2.0, 1.3) - 0.04922273912566455491).abs() < 1e-15);
        // continuity across the series branch
        let g = 0.7;
        let below = kernel_fourier(0.99e-4, g);
        let above = kernel_fourier(1.01e-4, g);
        assert!((below - above).abs() < 1e-9);
        assert!(kernel_fourier(1e4, 0.3).is_finite());
    }

    #[test]
    fn driving_terms() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let e0 = bare_energy(c(0.0, 0.0), &p).unwrap();
        assert!((e0.re - (2.0 - p.h_c())).abs() < 1e-14);
        assert!((bare_energy(c(10.0, 0.0), &p).unwrap().re - 2.0).abs() < 1e-6);
        let q = ModelParams::new(1.0, 1.3, 1.0).unwrap();
        let eu = upper_energy(c(0.0, 0.0), &q).unwrap();
        assert!((eu.re - (1.0 - 2.0 * PI * 1.3f64.sin() / 1.3)).abs() < 1e-14);
        let eu = upper_energy(c(0.5, 0.0), &p).unwrap();
        assert!((eu.re + 0.55427280390313149758).abs() < 1e-14);
        assert!((upper_energy(c(60.0, 0.0), &p).unwrap().re - 2.0).abs() < 1e-15);
        assert!(upper_energy(c(0.0, 0.65), &p).is_err());
        assert!(bare_energy(c(0.0, -0.65), &p).is_err());
    }

    #[test]
    fn critical_field_value() {
        let p = ModelParams::from_field_ratio(1.0, 1.3, 0.5).unwrap();
        assert!((p.h_c() - 4.0 * (1.0 + 1.3f64.cos())).abs() < 1e-15);
        assert!((p.delta() - 1.3f64.cos()).abs() < 1e-15);
        let p = ModelParams::new(1.0, 1.3, 5.07 - 1e-3).unwrap();
        assert!(bare_energy(c(0.0, 0.0), &p).unwrap().re.abs() < 2e-3);
    }

    #[test]
    fn params_validation() {
        assert!(matches!(ModelParams::new(1.0, 1.3, 6.0), Err(Error::OutOfRegime(_))));
        assert!(matches!(ModelParams::new(1.0, 1.3, 0.0), Err(Error::OutOfRegime(_))));
        assert!(matches!(ModelParams::new(-1.0, 1.3, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(ModelParams::new(1.0, 1.6, 1.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(ModelParams::from_field_ratio(1.0, 1.3, 1.1), Err(Error::OutOfRegime(_))));
    }

    #[test]
    fn q_infinity_closed_forms() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        assert!((rho_inf(c(0.0, 0.0), 1.3).unwrap().re - 1.0 / 2.6).abs() < 1e-15);
        let far = eps_inf(c(200.0, 0.0), &p).unwrap();
        assert!((far.re - 2.0 / (2.0 * (1.0 - 1.3 / PI))).abs() < 1e-14);
        assert!((far.re - 1.7055).abs() < 1e-3);
        let at0 = eps_inf(c(0.0, 0.0), &p).unwrap();
        let expected = 2.0 / (2.0 * (1.0 - 1.3 / PI)) - 2.0 * PI * 1.3f64.sin() / 1.3;
        assert!((at0.re - expected).abs() < 1e-14);
        let l = c(0.4, 0.2);
        let h = 1e-5;
        let fd = (eps_inf(l + h, &p).unwrap() - eps_inf(l - h, &p).unwrap()) / (2.0 * h);
        assert!((eps_inf_prime(l, &p).unwrap() - fd).norm() < 1e-8);
    }

    #[test]
    fn resolvent_reference_values() {
        let r = InfiniteResolvent::new(1.3).unwrap();
        // mpmath quadrature of the Fourier representation
        let r0 = r.value(c(0.0, 0.0)).unwrap();
        assert!((r0.re - 0.079473643684368810603).abs() < 1e-13 && r0.im.abs() < 1e-16);
        let r2 = r.value(c(2.0, 0.0)).unwrap();
        assert!((r2.re - 0.0039173438251255895075).abs() < 1e-13);
        assert!(r2.re > 0.0 && r2.re < r0.re);
        let rc = r.value(c(0.3, 0.5)).unwrap();
        assert!((rc - c(0.087699772328292669598, -0.033478556984288185712)).norm() < 1e-13);
        let r = InfiniteResolvent::new(0.4).unwrap();
        assert!((r.value(c(0.7, 0.0)).unwrap().re - 0.065607236789333312877).abs() < 1e-13);
    }

    #[test]
    fn resolvent_routes_agree() {
        for &g in &[0.4, 0.9, 1.3] {
            let r = InfiniteResolvent::new(g).unwrap();
            for &(x, yf) in &[(0.0, 0.0), (0.8, 0.5), (-1.5, -0.9), (3.0, 0.2)] {
                let y = yf * (0.5 * g - 0.05);
                let l = c(x, y);
                let a = r.value_by(l, ResolventRoute::Fourier).unwrap();
                let b = r.value_by(l, ResolventRoute::Convolution).unwrap();
                assert!((a - b).norm() < 1e-10, "g={g} l={l} {a} {b}");
            }
        }
    }

    #[test]
    fn resolvent_strip_errors() {
        let r = InfiniteResolvent::new(1.3).unwrap();
        assert!(matches!(r.value(c(0.0, 1.3)), Err(Error::StripViolation { .. })));
        assert!(matches!(
            r.value_by(c(0.0, 0.7), ResolventRoute::Convolution),
            Err(Error::StripViolation { .. })
        ));
        assert!(r.value(c(0.0, 0.7)).is_ok());
    }

    #[test]
    fn resolvent_envelope_bounds_values() {
        let r = InfiniteResolvent::new(1.3).unwrap();
        for &y in &[0.0, 0.4] {
            let (cst, kappa) = r.envelope(y).unwrap();
            for &x in &[0.0, 1.0, 3.0, 6.0, 10.0] {
                let v = r.value(c(x, y)).unwrap().norm();
                assert!(v <= cst * (-kappa * x).exp() * (1.0 + 1e-12) + 1e-17, "x={x} y={y}");
            }
        }
    }

    #[test]
    fn segment_integral_matches_quadrature() {
        let g = 1.3;
        for &(x, y) in &[(0.2, 0.0), (0.1, 1.2), (0.5, 1.35), (-0.3, -1.31), (2.0, 0.5)] {
            let l = c(x, y);
            let closed = kernel_segment_integral(l, -0.6, 0.6, g);
            let br = quadrature::graded_breakpoints(-0.6, 0.6, x, (y.abs() - g).abs().max(1e-3));
            let (nodes, weights) = quadrature::composite_rule(&br);
            let num: Complex64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&m, &w)| kernel_k_unchecked(l - m, g) * w)
                .sum();
            assert!((closed - num).norm() < 1e-10, "{l}: {closed} vs {num}");
        }
    }

    #[test]
    fn gamma_prime_is_bijection_of_quarter_period() {
        assert!((gamma_prime(FRAC_PI_2) - FRAC_PI_2).abs() < 1e-15);
        assert!(gamma_prime(1e-9) > 0.0);
    }
}
