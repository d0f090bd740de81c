//! Nyström discretisation of
//!
//! ```text
//! f(λ) + ∫_{-Q}^{Q} K(λ - μ|γ) f(μ) dμ = f₀(λ)
//! ```
//!
//! together with the resolvent kernel `R_Q`, off-grid evaluation in the
//! complex plane and the complementary (exterior) representation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, InfiniteResolvent};
use crate::quadrature;

/// Default number of Gauss–Legendre nodes on `[-Q, Q]`.
pub const DEFAULT_NODES: usize = 256;
/// Default exclusion radius around the cuts `[-Q, Q] ± iγ (mod iπ)`.
pub const DEFAULT_CUT_GUARD: f64 = 1e-4;
/// Relative residual accepted from the dense solve.
const SOLVE_RESIDUAL: f64 = 1e-12;

/// Quadrature family used on `[-Q, Q]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum QuadratureRule {
    #[default]
    GaussLegendre,
}

/// Nodes and weights of a symmetric rule on `[-Q, Q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    q: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: QuadratureRule,
}

impl QuadratureGrid {
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_j g(ν_j)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * g(x)).sum()
    }

    /// Index of the node `-ν_i`.
    pub fn mirror(&self, i: usize) -> usize {
        self.nodes.len() - 1 - i
    }
}

/// Symmetric `n`-point rule on `[-Q, Q]`; `n` must be even and at least 4.
pub fn build_grid(q: f64, n: usize, rule: QuadratureRule) -> Result<QuadratureGrid> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::InvalidParameter(format!("Q must be positive, got {q}")));
    }
    if n < 4 || n % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "node count must be even and at least 4, got {n}"
        )));
    }
    let (x, w) = match rule {
        QuadratureRule::GaussLegendre => quadrature::gauss_legendre(n),
    };
    Ok(QuadratureGrid {
        q,
        nodes: x.iter().map(|t| q * t).collect(),
        weights: w.iter().map(|t| q * t).collect(),
        rule,
    })
}

/// Boxed complex function of a rapidity.
pub type ComplexFn = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// Driving term `f₀` of the integral equation.
#[derive(Clone)]
pub struct Driving {
    name: String,
    value: ComplexFn,
    derivative: Option<ComplexFn>,
    sup_bound: Option<f64>,
}

impl fmt::Debug for Driving {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Driving")
            .field("name", &self.name)
            .field("derivative", &self.derivative.is_some())
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl Driving {
    pub fn new<F>(name: impl Into<String>, value: F) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        Self { name: name.into(), value: Arc::new(value), derivative: None, sup_bound: None }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    /// Records `sup_{x ∈ ℝ} |f₀(x)|`, needed for certified tail bounds.
    pub fn with_sup_bound(mut self, bound: f64) -> Self {
        self.sup_bound = Some(bound);
        self
    }

    /// Constant driving term, `f₀ ≡ c`.
    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant {c}"), move |_| Ok(Complex64::new(c, 0.0)))
            .with_derivative(|_| Ok(Complex64::new(0.0, 0.0)))
            .with_sup_bound(c.abs())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn value(&self, lambda: Complex64) -> Result<Complex64> {
        (self.value)(lambda)
    }

    pub fn derivative(&self, lambda: Complex64) -> Result<Complex64> {
        match &self.derivative {
            Some(d) => d(lambda),
            None => Err(Error::Unsupported(format!("driving term '{}' has no derivative", self.name))),
        }
    }
}

/// Dense LU factorisation of `A = I + K W`, `A_ij = δ_ij + K(ν_i - ν_j|γ) w_j`.
pub struct NystromOperator {
    grid: Arc<QuadratureGrid>,
    gamma: f64,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl fmt::Debug for NystromOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NystromOperator")
            .field("q", &self.grid.q)
            .field("n", &self.grid.len())
            .field("gamma", &self.gamma)
            .finish()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < std::f64::consts::FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must lie in (0, pi/2), got {gamma}")))
    }
}

fn kernel_matrix(grid: &QuadratureGrid, gamma: f64) -> DMatrix<f64> {
    let x = &grid.nodes;
    DMatrix::from_fn(x.len(), x.len(), |i, j| kernels::kernel_k_real(x[i] - x[j], gamma))
}

impl NystromOperator {
    pub fn new(grid: Arc<QuadratureGrid>, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let mut matrix = kernel_matrix(&grid, gamma);
        for (j, &w) in grid.weights.iter().enumerate() {
            matrix.column_mut(j).scale_mut(w);
        }
        for i in 0..grid.len() {
            matrix[(i, i)] += 1.0;
        }
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::LinearSolve("Nyström matrix is singular".into()));
        }
        Ok(Self { grid, gamma, matrix, lu })
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The matrix `I + K W`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn solve_vector(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        let x = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::LinearSolve("LU back-substitution failed".into()))?;
        let residual = (&self.matrix * &x - &rhs).amax();
        let scale = rhs.amax().max(x.amax()).max(f64::MIN_POSITIVE);
        if !(residual <= SOLVE_RESIDUAL * scale) {
            return Err(Error::LinearSolve(format!(
                "relative residual {:.3e} exceeds {SOLVE_RESIDUAL:e}",
                residual / scale
            )));
        }
        Ok(x)
    }

    /// Solves `A f = b` for a complex right-hand side.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        if rhs.len() != self.grid.len() {
            return Err(Error::InvalidParameter(format!(
                "right-hand side has {} entries, grid has {}",
                rhs.len(),
                self.grid.len()
            )));
        }
        let re = self.solve_vector(DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.re)))?;
        let im = if rhs.iter().any(|z| z.im != 0.0) {
            Some(self.solve_vector(DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.im)))?)
        } else {
            None
        };
        Ok((0..rhs.len())
            .map(|i| Complex64::new(re[i], im.as_ref().map_or(0.0, |v| v[i])))
            .collect())
    }

    /// Nyström solution for the driving term `f0`.
    pub fn solve_driving(self: &Arc<Self>, f0: Driving) -> Result<DensityVector> {
        let rhs = self
            .grid
            .nodes
            .iter()
            .map(|&x| f0.value(Complex64::new(x, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let values = self.solve(&rhs)?;
        Ok(DensityVector {
            operator: Arc::clone(self),
            values,
            driving: f0,
            guard: DEFAULT_CUT_GUARD,
        })
    }

    /// `R_Q` on the grid, `R = A⁻¹ K`.
    pub fn resolvent_table(&self) -> Result<ResolventTable> {
        let k = kernel_matrix(&self.grid, self.gamma);
        let entries = self
            .lu
            .solve(&k)
            .ok_or_else(|| Error::LinearSolve("LU back-substitution failed".into()))?;
        Ok(ResolventTable { grid: Arc::clone(&self.grid), gamma: self.gamma, entries })
    }

    /// The function `μ ↦ R_Q(μ, source)` for a fixed, possibly complex, source.
    pub fn resolvent_section(self: &Arc<Self>, source: Complex64) -> Result<DensityVector> {
        let gamma = self.gamma;
        let driving = Driving::new(format!("K(. - {source})"), move |l| {
            kernels::kernel_k(l - source, gamma)
        })
        .with_derivative(move |l| Ok(kernels::kernel_k_prime_unchecked(l - source, gamma)));
        self.solve_driving(driving)
    }
}

/// Nyström solution of the integral equation for a given driving term.
#[derive(Debug, Clone)]
pub struct DensityVector {
    operator: Arc<NystromOperator>,
    values: Vec<Complex64>,
    driving: Driving,
    guard: f64,
}

/// Solve `(I + K W) f = f₀` on `grid`.
pub fn solve_fredholm(f0: Driving, grid: &QuadratureGrid, gamma: f64) -> Result<DensityVector> {
    let op = Arc::new(NystromOperator::new(Arc::new(grid.clone()), gamma)?);
    op.solve_driving(f0)
}

/// Fixed-point iteration `f ← f₀ - K W f`, stopped when successive iterates
/// differ by less than `tol` in sup norm. Returns the solution and the
/// number of iterations.
pub fn neumann_oracle(
    f0: Driving,
    grid: &QuadratureGrid,
    gamma: f64,
    tol: f64,
) -> Result<(DensityVector, usize)> {
    check_gamma(gamma)?;
    let grid = Arc::new(grid.clone());
    let op = Arc::new(NystromOperator::new(Arc::clone(&grid), gamma)?);
    let rhs = grid
        .nodes
        .iter()
        .map(|&x| f0.value(Complex64::new(x, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    let mut kw = kernel_matrix(&grid, gamma);
    for (j, &w) in grid.weights.iter().enumerate() {
        kw.column_mut(j).scale_mut(w);
    }
    let n = grid.len();
    let b_re = DVector::from_iterator(n, rhs.iter().map(|z| z.re));
    let b_im = DVector::from_iterator(n, rhs.iter().map(|z| z.im));
    let mut re = DVector::zeros(n);
    let mut im = DVector::zeros(n);
    let rate = 1.0 - 2.0 * gamma / std::f64::consts::PI;
    let cap = ((tol.ln() / rate.ln()).abs().ceil() as usize).saturating_mul(2) + 200;
    for it in 1..=cap {
        let next_re = &b_re - &kw * &re;
        let next_im = &b_im - &kw * &im;
        let diff = (&next_re - &re).amax().max((&next_im - &im).amax());
        re = next_re;
        im = next_im;
        if diff < tol {
            let values = (0..n).map(|i| Complex64::new(re[i], im[i])).collect();
            return Ok((
                DensityVector { operator: op, values, driving: f0, guard: DEFAULT_CUT_GUARD },
                it,
            ));
        }
    }
    Err(Error::IterationCap { what: "Neumann iteration", cap })
}

/// Distance from `lambda` to the cuts `[-Q, Q] ± iγ (mod iπ)`.
pub fn cut_distance(lambda: Complex64, q: f64, gamma: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let y = (lambda.im + 0.5 * pi).rem_euclid(pi) - 0.5 * pi;
    let dy = [gamma, -gamma, gamma - pi, pi - gamma]
        .iter()
        .map(|c| (y - c).abs())
        .fold(f64::INFINITY, f64::min);
    (lambda.re.abs() - q).max(0.0).hypot(dy)
}

impl DensityVector {
    pub fn grid(&self) -> &QuadratureGrid {
        &self.operator.grid
    }

    pub fn operator(&self) -> &Arc<NystromOperator> {
        &self.operator
    }

    pub fn gamma(&self) -> f64 {
        self.operator.gamma
    }

    pub fn q(&self) -> f64 {
        self.operator.grid.q
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn driving(&self) -> &Driving {
        &self.driving
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Replace the cut exclusion radius.
    pub fn with_guard(mut self, guard: f64) -> Self {
        self.guard = guard;
        self
    }

    /// `max_i |f_i + Σ_j K(ν_i-ν_j) w_j f_j - f₀(ν_i)|`.
    pub fn residual(&self) -> Result<f64> {
        let g = self.grid();
        let mut worst: f64 = 0.0;
        for (i, &x) in g.nodes.iter().enumerate() {
            let mut s = self.values[i];
            for (j, &y) in g.nodes.iter().enumerate() {
                s += kernels::kernel_k_real(x - y, self.gamma()) * g.weights[j] * self.values[j];
            }
            worst = worst.max((s - self.driving.value(Complex64::new(x, 0.0))?).norm());
        }
        Ok(worst)
    }

    /// `max_i |f(ν_i) - f(-ν_i)|`.
    pub fn parity_defect(&self) -> f64 {
        (0..self.values.len())
            .map(|i| (self.values[i] - self.values[self.grid().mirror(i)]).norm())
            .fold(0.0, f64::max)
    }

    fn nystrom_sum<K>(&self, lambda: Complex64, kernel: K) -> Complex64
    where
        K: Fn(Complex64, f64) -> Complex64,
    {
        let g = self.grid();
        let gamma = self.gamma();
        let mut s = Complex64::new(0.0, 0.0);
        for ((&x, &w), &v) in g.nodes.iter().zip(&g.weights).zip(&self.values) {
            s += kernel(lambda - x, gamma) * (w * v);
        }
        s
    }

    /// The Nyström interpolant at a real point of `[-Q, Q]`.
    fn interpolant(&self, x: f64) -> Result<Complex64> {
        let l = Complex64::new(x, 0.0);
        Ok(self.driving.value(l)? - self.nystrom_sum(l, kernels::kernel_k_unchecked))
    }

    /// `∫_{-Q}^{Q} kernel(λ - μ) f(μ) dμ` on panels graded towards the cut.
    fn graded_integral<K>(&self, lambda: Complex64, distance: f64, kernel: K) -> Result<Complex64>
    where
        K: Fn(Complex64, f64) -> Complex64,
    {
        let q = self.q();
        let breaks = quadrature::graded_breakpoints(-q, q, lambda.re.clamp(-q, q), distance);
        let (nodes, weights) = quadrature::composite_rule(&breaks);
        let mut s = Complex64::new(0.0, 0.0);
        for (&m, &w) in nodes.iter().zip(&weights) {
            s += kernel(lambda - m, self.gamma()) * self.interpolant(m)? * w;
        }
        Ok(s)
    }

    /// Whether the plain node sum is accurate at this distance from the cut.
    fn needs_grading(&self, distance: f64) -> bool {
        distance < 20.0 * self.q() / self.values.len() as f64
    }

    fn check_cut(&self, lambda: Complex64) -> Result<f64> {
        let d = cut_distance(lambda, self.q(), self.gamma());
        if d < self.guard {
            return Err(Error::CutProximity { lambda: format!("{lambda}"), distance: d, guard: self.guard });
        }
        Ok(d)
    }

    /// `∫_{-Q}^{Q} K(λ - μ|γ) f(μ) dμ` anywhere off the cuts.
    pub fn integral_term(&self, lambda: Complex64) -> Result<Complex64> {
        let d = self.check_cut(lambda)?;
        if self.needs_grading(d) {
            self.graded_integral(lambda, d, kernels::kernel_k_unchecked)
        } else {
            Ok(self.nystrom_sum(lambda, kernels::kernel_k_unchecked))
        }
    }

    /// `f(λ) = f₀(λ) - ∫_{-Q}^{Q} K(λ - μ|γ) f(μ) dμ` anywhere off the cuts.
    pub fn evaluate(&self, lambda: Complex64) -> Result<Complex64> {
        let integral = self.integral_term(lambda)?;
        Ok(self.driving.value(lambda)? - integral)
    }

    /// `f'(λ)`, requires a driving term with a known derivative.
    pub fn evaluate_derivative(&self, lambda: Complex64) -> Result<Complex64> {
        let d = self.check_cut(lambda)?;
        let f0 = self.driving.derivative(lambda)?;
        let integral = if self.needs_grading(d) {
            self.graded_integral(lambda, d, kernels::kernel_k_prime_unchecked)?
        } else {
            self.nystrom_sum(lambda, kernels::kernel_k_prime_unchecked)
        };
        Ok(f0 - integral)
    }

    /// `sup |f|` over the nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// `R_Q(ν_i, ν_j)` on the grid.
#[derive(Debug, Clone)]
pub struct ResolventTable {
    grid: Arc<QuadratureGrid>,
    gamma: f64,
    entries: DMatrix<f64>,
}

/// Build the resolvent table on `grid`.
pub fn resolvent_table(grid: &QuadratureGrid, gamma: f64) -> Result<ResolventTable> {
    NystromOperator::new(Arc::new(grid.clone()), gamma)?.resolvent_table()
}

impl ResolventTable {
    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// `max |R_Q(ν_i, ν_j) - R_Q(ν_j, ν_i)|`.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.entries - self.entries.transpose()).amax()
    }

    /// `max |R_Q(ν_i, ν_j) - R_Q(-ν_i, -ν_j)|`.
    pub fn parity_defect(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let d = self.entries[(i, j)] - self.entries[(self.grid.mirror(i), self.grid.mirror(j))];
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Residuals of `R + K W R = K` and `R + R W K = K` at the nodes.
    pub fn commutation_defect(&self) -> f64 {
        let k = kernel_matrix(&self.grid, self.gamma);
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(&self.grid.weights));
        let left = &self.entries + &k * &w * &self.entries - &k;
        let right = &self.entries + &self.entries * &w * &k - &k;
        left.amax().max(right.amax())
    }

    /// `max_i |f₀(ν_i) - Σ_j w_j R_Q(ν_i, ν_j) f₀(ν_j) - f_i|`.
    pub fn representation_defect(&self, solution: &DensityVector) -> Result<f64> {
        let g = &self.grid;
        let f0 = g
            .nodes
            .iter()
            .map(|&x| solution.driving().value(Complex64::new(x, 0.0)))
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let mut s = f0[i];
            for j in 0..g.len() {
                s -= self.entries[(i, j)] * g.weights[j] * f0[j];
            }
            worst = worst.max((s - solution.values()[i]).norm());
        }
        Ok(worst)
    }
}

/// Truncation control for [`complementary_eval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSpec {
    /// Initial length `L` of the integration range beyond `±Q`.
    pub length: f64,
    /// Required bound on the discarded tails.
    pub tol: f64,
    /// How often `L` may be doubled before giving up.
    pub max_doublings: usize,
}

impl TailSpec {
    pub fn for_gamma(gamma: f64) -> Self {
        Self { length: 40.0 * gamma, tol: 1e-10, max_doublings: 4 }
    }
}

/// Value of the complementary representation and its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementaryValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// `f(λ) = f_∞(λ) + ∫_{ℝ∖[-Q,Q]} R(λ - μ|γ) f(μ) dμ`.
///
/// The integral runs over `Q < |μ| < T` with `T` chosen so that the
/// exponential envelope of `R` times a bound on `sup |f|` certifies the
/// discarded part to be below `tail.tol`.
pub fn complementary_eval<F>(
    solution: &DensityVector,
    f_inf: F,
    lambda: Complex64,
    tail: &TailSpec,
) -> Result<ComplementaryValue>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let q = solution.q();
    let gamma = solution.gamma();
    let resolvent = InfiniteResolvent::new(gamma)?;
    let (c, kappa) = resolvent.envelope(lambda.im)?;
    let sup0 = solution.driving().sup_bound().ok_or(Error::TailBound { bound: f64::INFINITY, tol: tail.tol })?;
    let x = lambda.re.abs();
    let mut length = tail.length;
    let mut bound = f64::INFINITY;
    let mut cutoff = q;
    for _ in 0..=tail.max_doublings {
        cutoff = q.max(x) + length;
        // |f(μ)| ≤ sup|f₀| + sup_grid|f| · 2Q · K(T - Q) for |μ| ≥ T
        let sup_f = sup0 + solution.sup_norm() * 2.0 * q * kernels::kernel_k_real(cutoff - q, gamma);
        bound = sup_f * c * ((-kappa * (cutoff - x)).exp() + (-kappa * (cutoff + x)).exp()) / kappa;
        if bound <= tail.tol {
            break;
        }
        length *= 2.0;
    }
    if bound > tail.tol {
        return Err(Error::TailBound { bound, tol: tail.tol });
    }
    let width = gamma.min(0.5);
    let panels = ((cutoff - q) / width).ceil() as usize;
    let integral = quadrature::try_integrate_panels(q, cutoff, panels, |mu| -> Result<Complex64> {
        let plus = resolvent.value(lambda - mu)? * solution.evaluate(Complex64::new(mu, 0.0))?;
        let minus = resolvent.value(lambda + mu)? * solution.evaluate(Complex64::new(-mu, 0.0))?;
        Ok(plus + minus)
    })?;
    Ok(ComplementaryValue { value: f_inf(lambda)? + integral, tail_bound: bound, cutoff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ModelParams;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bare(p: ModelParams) -> Driving {
        Driving::new("bare", move |l| kernels::bare_energy(l, &p))
            .with_derivative(move |l| kernels::bare_energy_prime(l, &p))
            .with_sup_bound(p.h().max(p.h_c() - p.h()))
    }

    #[test]
    fn grid_basics() {
        let g = build_grid(1.0, 4, QuadratureRule::GaussLegendre).unwrap();
        assert_eq!(g.len(), 4);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-15);
        let g = build_grid(2.0, 64, QuadratureRule::GaussLegendre).unwrap();
        let v = g.integrate(|x| x.sinh().powi(2));
        assert!((v - (4f64.sinh() / 2.0 - 2.0)).abs() < 1e-12);
        for i in 0..g.len() {
            assert_eq!(g.nodes()[i], -g.nodes()[g.mirror(i)]);
            assert_eq!(g.weights()[i], g.weights()[g.mirror(i)]);
        }
        assert!(build_grid(1.0, 5, QuadratureRule::GaussLegendre).is_err());
        assert!(build_grid(0.0, 8, QuadratureRule::GaussLegendre).is_err());
        assert!(build_grid(1.0, 2, QuadratureRule::GaussLegendre).is_err());
    }

    #[test]
    fn zero_driving_gives_zero() {
        let g = build_grid(1.0, 16, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(Driving::constant(0.0), &g, 1.0).unwrap();
        assert!(f.values().iter().all(|v| *v == c(0.0, 0.0)));
        let (f, it) = neumann_oracle(Driving::constant(0.0), &g, 1.0, 1e-12).unwrap();
        assert_eq!(it, 1);
        assert!(f.sup_norm() == 0.0);
    }

    #[test]
    fn constant_driving_bounds() {
        let gamma = 1.3;
        let g = build_grid(3.0, 256, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(Driving::constant(1.0), &g, gamma).unwrap();
        let lower = 1.0 / (2.0 * (1.0 - gamma / std::f64::consts::PI));
        for v in f.values() {
            assert!(v.re > lower && v.re < 1.0);
        }
        // Z(λ|Q) → π/(2(π-γ)) at the centre as Q grows
        let target = std::f64::consts::PI / (2.0 * (std::f64::consts::PI - gamma));
        let centre = f.evaluate(c(0.0, 0.0)).unwrap().re;
        let far = solve_fredholm(Driving::constant(1.0), &build_grid(8.0, 256, QuadratureRule::GaussLegendre).unwrap(), gamma)
            .unwrap()
            .evaluate(c(0.0, 0.0))
            .unwrap()
            .re;
        assert!((far - target).abs() < (centre - target).abs());
        assert!((far - target).abs() < 1e-3);
        assert!(f.residual().unwrap() < 1e-13);
    }

    #[test]
    fn backends_agree() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let g = build_grid(1.0, 128, QuadratureRule::GaussLegendre).unwrap();
        let direct = solve_fredholm(bare(p), &g, 1.3).unwrap();
        let (iter, count) = neumann_oracle(bare(p), &g, 1.3, 1e-10).unwrap();
        let dist = direct
            .values()
            .iter()
            .zip(iter.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(dist < 1e-9);
        let rate = 1.0 - 2.6 / std::f64::consts::PI;
        assert!((count as f64) <= (1e-10f64).ln() / rate.ln() + 10.0);
    }

    #[test]
    fn reference_dressed_values() {
        // independent numpy Nyström at n = 2048
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let g = build_grid(1.0, 256, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(bare(p), &g, 1.3).unwrap();
        assert!((f.evaluate(c(0.0, 0.0)).unwrap().re + 2.906290499829183).abs() < 1e-12);
        assert!((f.evaluate(c(0.7, 0.0)).unwrap().re - 0.12996919530166712).abs() < 1e-12);
    }

    #[test]
    fn evaluation_properties() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let g = build_grid(1.0, 64, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(bare(p), &g, 1.3).unwrap();
        for (i, &x) in g.nodes().iter().enumerate() {
            assert!((f.evaluate(c(x, 0.0)).unwrap() - f.values()[i]).norm() < 1e-12);
        }
        let l = c(0.3, 0.2);
        assert!((f.evaluate(l).unwrap() - f.evaluate(l.conj()).unwrap().conj()).norm() < 1e-12);
        let shifted = f.evaluate(c(0.4, std::f64::consts::PI)).unwrap();
        assert!((shifted - f.evaluate(c(0.4, 0.0)).unwrap()).norm() < 1e-12);
        assert!(f.parity_defect() < 1e-10);
        assert!(matches!(f.evaluate(c(0.2, 1.3 + 1e-5)), Err(Error::CutProximity { .. })));
    }

    #[test]
    fn graded_route_is_continuous() {
        // both routes at the switching distance agree
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let g = build_grid(1.0, 128, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(bare(p), &g, 1.3).unwrap();
        let d = 20.0 / 128.0;
        for &x in &[0.0, 0.5, 0.95] {
            let l = c(x, 1.3 - d * 1.01);
            let plain = f.driving().value(l).unwrap() - f.nystrom_sum(l, kernels::kernel_k_unchecked);
            let graded = f.driving().value(l).unwrap()
                - f.graded_integral(l, d, kernels::kernel_k_unchecked).unwrap();
            assert!((plain - graded).norm() < 1e-11, "{x}: {plain} {graded}");
        }
        // near the cut the graded value satisfies Schwarz reflection and is smooth
        let a = f.evaluate(c(0.3, 1.3 - 1e-3)).unwrap();
        let b = f.evaluate(c(0.3, -1.3 + 1e-3)).unwrap();
        assert!((a - b.conj()).norm() < 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let p = ModelParams::new(1.0, 1.3, 2.0).unwrap();
        let g = build_grid(1.0, 128, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(bare(p), &g, 1.3).unwrap();
        for &l in &[c(0.7, 0.0), c(0.2, 0.3), c(1.5, -0.4), c(0.4, 1.25)] {
            let h = 1e-4;
            let fd = (f.evaluate(l - 2.0 * h).unwrap() - 8.0 * f.evaluate(l - h).unwrap()
                + 8.0 * f.evaluate(l + h).unwrap()
                - f.evaluate(l + 2.0 * h).unwrap())
                / (12.0 * h);
            assert!((f.evaluate_derivative(l).unwrap() - fd).norm() < 1e-7, "{l}");
        }
    }

    #[test]
    fn resolvent_table_structure() {
        let gamma = 1.3;
        let g = build_grid(1.0, 64, QuadratureRule::GaussLegendre).unwrap();
        let t = resolvent_table(&g, gamma).unwrap();
        assert!(t.symmetry_defect() < 1e-10);
        assert!(t.parity_defect() < 1e-10);
        assert!(t.commutation_defect() < 1e-10);
        let r = InfiniteResolvent::new(gamma).unwrap();
        for i in (0..64).step_by(7) {
            for j in (0..64).step_by(5) {
                let rinf = r.value(c(g.nodes()[i] - g.nodes()[j], 0.0)).unwrap().re;
                assert!(t.get(i, j) > rinf);
            }
        }
        let p = ModelParams::new(1.0, gamma, 2.0).unwrap();
        let f = solve_fredholm(bare(p), &g, gamma).unwrap();
        assert!(t.representation_defect(&f).unwrap() < 1e-9);
    }

    #[test]
    fn resolvent_small_q_limit() {
        let gamma = 0.9;
        let g = build_grid(1e-4, 4, QuadratureRule::GaussLegendre).unwrap();
        let t = resolvent_table(&g, gamma).unwrap();
        let k = kernels::kernel_k_real(g.nodes()[0] - g.nodes()[3], gamma);
        assert!((t.get(0, 3) - k).abs() < 1e-3 * k);
    }

    #[test]
    fn resolvent_section_matches_table() {
        let gamma = 1.3;
        let g = Arc::new(build_grid(1.0, 64, QuadratureRule::GaussLegendre).unwrap());
        let op = Arc::new(NystromOperator::new(Arc::clone(&g), gamma).unwrap());
        let t = op.resolvent_table().unwrap();
        let s = op.resolvent_section(c(g.nodes()[10], 0.0)).unwrap();
        for i in 0..g.len() {
            assert!((s.values()[i].re - t.get(i, 10)).abs() < 1e-13);
        }
    }

    #[test]
    fn complementary_representation() {
        let p = ModelParams::new(1.0, 1.3, 2.535).unwrap();
        let g = build_grid(0.5530770118680023, 128, QuadratureRule::GaussLegendre).unwrap();
        let f = solve_fredholm(bare(p), &g, 1.3).unwrap();
        let tail = TailSpec::for_gamma(1.3);
        for &l in &[c(0.0, 0.0), c(1.5, 0.0), c(0.3, 0.4)] {
            let v = complementary_eval(&f, |z| kernels::eps_inf(z, &p), l, &tail).unwrap();
            assert!(v.tail_bound <= 1e-10);
            assert!((v.value - f.evaluate(l).unwrap()).norm() < 1e-6, "{l}");
        }
        for &x in &[0.8, 1.5, 3.0] {
            let v = f.evaluate(c(x, 0.0)).unwrap().re;
            assert!(v > kernels::eps_inf(c(x, 0.0), &p).unwrap().re);
        }
        let no_bound = Driving::new("unbounded", |_| Ok(c(1.0, 0.0)));
        let f = solve_fredholm(no_bound, &g, 1.3).unwrap();
        assert!(matches!(
            complementary_eval(&f, |_| Ok(c(0.0, 0.0)), c(0.0, 0.0), &tail),
            Err(Error::TailBound { .. })
        ));
    }

    #[test]
    fn cut_distance_geometry() {
        assert!((cut_distance(c(0.0, 1.0), 1.0, 1.3) - 0.3).abs() < 1e-15);
        assert!((cut_distance(c(2.0, 1.3), 1.0, 1.3) - 1.0).abs() < 1e-15);
        let pi = std::f64::consts::PI;
        assert!(cut_distance(c(0.5, 1.3 - pi), 1.0, 1.3) < 1e-14);
        assert!(cut_distance(c(0.5, pi - 1.3), 1.0, 1.3) < 1e-14);
    }
}
