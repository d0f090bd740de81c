//! Dressed energy `ε`, dressed charge `Z` and root density `ρ` at finite `Q`.
//!
//! All three solve the same integral equation with driving terms `ε₀`, `1`
//! and `K(·|γ/2)`, so one factorisation serves all of them and
//! `ε = hZ - 4πJ sin(γ) ρ` holds to solver precision.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fredholm::{build_grid, DensityVector, Driving, NystromOperator, QuadratureRule};
use crate::kernels::{self, ModelParams};
use crate::quadrature;

/// Node counts for the Nyström grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Nodes on `[-Q, Q]` for routine solves.
    pub n: usize,
    /// Nodes for final refinements.
    pub n_fine: usize,
    /// Lower bound on nodes per unit length of `Q`, for large `Q`.
    pub nodes_per_unit: f64,
    pub rule: QuadratureRule,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: 256, n_fine: 512, nodes_per_unit: 16.0, rule: QuadratureRule::GaussLegendre }
    }
}

impl GridSpec {
    pub fn with_nodes(n: usize) -> Self {
        Self { n, n_fine: 2 * n, ..Self::default() }
    }

    /// Node count actually used on `[-Q, Q]`.
    pub fn nodes_for(&self, q: f64) -> usize {
        let by_length = (self.nodes_per_unit * q).ceil() as usize;
        let n = self.n.max(by_length);
        n + n % 2
    }

    /// The same spec with `n` replaced by `n_fine`.
    pub fn fine(&self) -> Self {
        Self { n: self.n_fine, ..*self }
    }
}

/// `ε₀` as a driving term.
pub fn bare_driving(params: ModelParams) -> Driving {
    Driving::new("bare energy", move |l| kernels::bare_energy(l, &params))
        .with_derivative(move |l| kernels::bare_energy_prime(l, &params))
        .with_sup_bound(params.h().max(params.h_c() - params.h()))
}

/// `f₀ ≡ 1`, driving term of the dressed charge.
pub fn charge_driving() -> Driving {
    Driving::constant(1.0)
}

/// `K(λ|γ/2)`, driving term of the root density.
pub fn density_driving(gamma: f64) -> Driving {
    let half = 0.5 * gamma;
    Driving::new("bare density", move |l| kernels::kernel_k(l, half))
        .with_derivative(move |l| Ok(kernels::kernel_k_prime_unchecked(l, half)))
        .with_sup_bound(kernels::kernel_k_real(0.0, half))
}

/// The triple `(ε, Z, ρ)` on one grid.
#[derive(Debug, Clone)]
pub struct DressedSolution {
    params: ModelParams,
    operator: Arc<NystromOperator>,
    eps: DensityVector,
    charge: DensityVector,
    density: DensityVector,
}

/// Solve for `ε`, `Z` and `ρ` on `[-Q, Q]`.
pub fn dressed_solution(params: ModelParams, q: f64, spec: &GridSpec) -> Result<DressedSolution> {
    let grid = build_grid(q, spec.nodes_for(q), spec.rule)?;
    let operator = Arc::new(NystromOperator::new(Arc::new(grid), params.gamma())?);
    let eps = operator.solve_driving(bare_driving(params))?;
    let charge = operator.solve_driving(charge_driving())?;
    let density = operator.solve_driving(density_driving(params.gamma()))?;
    Ok(DressedSolution { params, operator, eps, charge, density })
}

/// Extreme values of the node-wise bounds, positive when the bound holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeBounds {
    /// `min (ε - ε₀)`; only meaningful for `Q ≤ Q₀`.
    pub lower: f64,
    /// `min (ε_u - ε)`.
    pub upper: f64,
    /// `min Z`.
    pub charge_min: f64,
    /// `min (1 - Z)`.
    pub charge_gap: f64,
    /// `min (ρ - ρ_∞)`.
    pub density: f64,
    /// `max |ε - hZ + 4πJ sin(γ) ρ|`.
    pub linear_relation: f64,
}

impl DressedSolution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn q(&self) -> f64 {
        self.operator.grid().q()
    }

    pub fn operator(&self) -> &Arc<NystromOperator> {
        &self.operator
    }

    pub fn eps(&self) -> &DensityVector {
        &self.eps
    }

    pub fn charge(&self) -> &DensityVector {
        &self.charge
    }

    pub fn density(&self) -> &DensityVector {
        &self.density
    }

    /// Replace the cut exclusion radius of all three functions.
    pub fn with_guard(mut self, guard: f64) -> Self {
        self.eps = self.eps.with_guard(guard);
        self.charge = self.charge.with_guard(guard);
        self.density = self.density.with_guard(guard);
        self
    }

    fn rho_coefficient(&self) -> f64 {
        4.0 * PI * self.params.j() * self.params.gamma().sin()
    }

    /// `|ε - hZ + 4πJ sin(γ) ρ|` at `λ`.
    pub fn linear_relation_defect(&self, lambda: Complex64) -> Result<f64> {
        let e = self.eps.evaluate(lambda)?;
        let z = self.charge.evaluate(lambda)?;
        let r = self.density.evaluate(lambda)?;
        Ok((e - self.params.h() * z + self.rho_coefficient() * r).norm())
    }

    /// Node-wise bound margins.
    pub fn node_bounds(&self) -> Result<NodeBounds> {
        let nodes = self.operator.grid().nodes();
        let mut b = NodeBounds {
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            charge_min: f64::INFINITY,
            charge_gap: f64::INFINITY,
            density: f64::INFINITY,
            linear_relation: 0.0,
        };
        for (i, &x) in nodes.iter().enumerate() {
            let l = Complex64::new(x, 0.0);
            let e = self.eps.values()[i].re;
            let z = self.charge.values()[i].re;
            let r = self.density.values()[i].re;
            b.lower = b.lower.min(e - kernels::bare_energy(l, &self.params)?.re);
            b.upper = b.upper.min(kernels::upper_energy(l, &self.params)?.re - e);
            b.charge_min = b.charge_min.min(z);
            b.charge_gap = b.charge_gap.min(1.0 - z);
            b.density = b.density.min(r - kernels::rho_inf(l, self.params.gamma())?.re);
            b.linear_relation = b
                .linear_relation
                .max((e - self.params.h() * z + self.rho_coefficient() * r).abs());
        }
        Ok(b)
    }

    /// `ε(Q|Q)`.
    pub fn boundary_value(&self) -> Result<f64> {
        Ok(self.eps.evaluate(Complex64::new(self.q(), 0.0))?.re)
    }

    fn tail_length(&self) -> f64 {
        // ε_∞' decays like e^{-πμ/γ}
        40.0 * self.params.gamma() / PI
    }

    /// `∫_Q^{Q+L} (R_Q(λ,μ) - R_Q(λ,-μ)) ε_∞'(μ) dμ` for a section `μ ↦ R_Q(μ, λ)`.
    fn tail_integral(&self, section: &DensityVector) -> Result<Complex64> {
        let q = self.q();
        let length = self.tail_length();
        let width = (0.5 * self.params.gamma()).min(0.5);
        let panels = (length / width).ceil() as usize;
        quadrature::try_integrate_panels(q, q + length, panels, |mu| -> Result<Complex64> {
            let plus = section.evaluate(Complex64::new(mu, 0.0))?;
            let minus = section.evaluate(Complex64::new(-mu, 0.0))?;
            Ok((plus - minus) * kernels::eps_inf_prime(Complex64::new(mu, 0.0), &self.params)?)
        })
    }

    fn check_strip(&self, lambda: Complex64) -> Result<()> {
        let limit = 0.5 * self.params.gamma();
        if lambda.im.abs() >= limit {
            return Err(Error::StripViolation { lambda: format!("{lambda}"), limit });
        }
        Ok(())
    }

    /// `ε'(λ|Q)` from the resolvent form of the integral equation,
    /// valid for `|Im λ| < γ/2`.
    pub fn eps_prime(&self, lambda: Complex64) -> Result<Complex64> {
        self.check_strip(lambda)?;
        let section = self.operator.resolvent_section(lambda)?;
        let q = Complex64::new(self.q(), 0.0);
        let g = self.boundary_value()?;
        let boundary = g * (section.evaluate(q)? - section.evaluate(-q)?);
        Ok(boundary + kernels::eps_inf_prime(lambda, &self.params)? + self.tail_integral(&section)?)
    }

    /// `ε'(λ|Q)` by differentiating the Nyström representation.
    pub fn eps_prime_direct(&self, lambda: Complex64) -> Result<Complex64> {
        self.eps.evaluate_derivative(lambda)
    }

    /// `∂_Q ε(λ|Q) = -ε(Q|Q) (R_Q(λ,Q) + R_Q(λ,-Q))`.
    pub fn q_derivative(&self, lambda: Complex64) -> Result<Complex64> {
        let section = self.operator.resolvent_section(lambda)?;
        let q = Complex64::new(self.q(), 0.0);
        Ok(-self.boundary_value()? * (section.evaluate(q)? + section.evaluate(-q)?))
    }

    /// `d ε(Q|Q) / dQ`.
    pub fn boundary_derivative(&self) -> Result<f64> {
        let q = self.q();
        let ql = Complex64::new(q, 0.0);
        let section = self.operator.resolvent_section(ql)?;
        let g = self.boundary_value()?;
        let value = -2.0 * g * section.evaluate(-ql)?
            + kernels::eps_inf_prime(ql, &self.params)?
            + self.tail_integral(&section)?;
        Ok(value.re)
    }
}
