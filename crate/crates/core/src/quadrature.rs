//! Gauss–Legendre rules and composite panel integration.

use std::sync::OnceLock;

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes in increasing order.
///
/// Roots are found by Newton iteration on the three-term recurrence, which
/// keeps the weights accurate to a few ulps even for `n` in the thousands.
/// The rule is symmetrised exactly: node `i` is the negation of node
/// `n - 1 - i` and the two carry bit-identical weights.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let half = n.div_ceil(2);
    for i in 0..half {
        // i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The fixed low-order rule used for composite panels.
pub const PANEL_ORDER: usize = 20;

pub(crate) fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Composite Gauss–Legendre integral of a complex integrand over `[a, b]`
/// split into `panels` equal panels.
pub fn integrate_panels<F>(a: f64, b: f64, panels: usize, mut f: F) -> Complex64
where
    F: FnMut(f64) -> Complex64,
{
    let (x, w) = panel_rule();
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        let mut part = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(w) {
            part += f(mid + 0.5 * width * xi) * *wi;
        }
        sum += part * (0.5 * width);
    }
    sum
}

/// Like [`integrate_panels`] but for integrands that may fail.
pub fn try_integrate_panels<F, E>(a: f64, b: f64, panels: usize, mut f: F) -> Result<Complex64, E>
where
    F: FnMut(f64) -> Result<Complex64, E>,
{
    let (x, w) = panel_rule();
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + width * p as f64;
        let mid = lo + 0.5 * width;
        let mut part = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(w) {
            part += f(mid + 0.5 * width * xi)? * *wi;
        }
        sum += part * (0.5 * width);
    }
    Ok(sum)
}

/// Breakpoints on `[a, b]` graded geometrically towards `centre`.
///
/// The innermost panel has half-width `inner`; each further panel doubles in
/// length until the interval end is reached. Used for near-singular
/// integrands whose singularity sits at distance `~inner` from `centre`.
pub fn graded_breakpoints(a: f64, b: f64, centre: f64, inner: f64) -> Vec<f64> {
    let c = centre.clamp(a, b);
    let inner = inner.max(1e-14 * (b - a));
    let mut left = vec![c];
    let mut step = inner;
    let mut pos = c;
    while pos > a {
        pos = (pos - step).max(a);
        left.push(pos);
        step *= 2.0;
    }
    let mut right = Vec::new();
    step = inner;
    pos = c;
    while pos < b {
        pos = (pos + step).min(b);
        right.push(pos);
        step *= 2.0;
    }
    left.reverse();
    left.extend(right);
    left.dedup();
    left
}

/// Gauss–Legendre nodes and weights mapped onto consecutive breakpoints.
pub fn composite_rule(breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = panel_rule();
    let mut nodes = Vec::with_capacity(breaks.len() * x.len());
    let mut weights = Vec::with_capacity(breaks.len() * x.len());
    for pair in breaks.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (xi, wi) in x.iter().zip(w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}
