//! Grid certification of the bounds on `Re ε` in the cut cylinder.
//!
//! `Re ε` is even in `x` and in `y`, so every region is sampled in the
//! quadrant `x > 0, y > 0` only.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use super::CutPlane;
use crate::error::{Error, Result};
use crate::kernels;

/// Horizontal strips of the cylinder with their claimed bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// `|y| < γ/2`: `Re ε₀ < Re ε < Re ε_u`.
    Strip,
    /// `γ/2 < y < γ`: `Re ε > min(h/2, hγ/(π - γ))`.
    Inner,
    /// `γ < y < π/2 - (π/2 - γ)/2`: `Re ε > h/2`.
    Middle,
    /// `π/2 - (π/2 - γ)/2 < y < π/2`: `Re ε > h`.
    Outer,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::Strip, Region::Inner, Region::Middle, Region::Outer];

    pub fn name(self) -> &'static str {
        match self {
            Region::Strip => "strip",
            Region::Inner => "inner",
            Region::Middle => "middle",
            Region::Outer => "outer",
        }
    }

    /// Open range of `y`.
    pub fn y_range(self, gamma: f64) -> (f64, f64) {
        let split = FRAC_PI_2 - 0.5 * (FRAC_PI_2 - gamma);
        match self {
            Region::Strip => (0.0, 0.5 * gamma),
            Region::Inner => (0.5 * gamma, gamma),
            Region::Middle => (gamma, split),
            Region::Outer => (split, FRAC_PI_2),
        }
    }

    /// Constant lower bound, absent for the sandwich strip.
    pub fn claimed_bound(self, h: f64, gamma: f64) -> Option<f64> {
        match self {
            Region::Strip => None,
            Region::Inner => Some((0.5 * h).min(h * gamma / (std::f64::consts::PI - gamma))),
            Region::Middle => Some(0.5 * h),
            Region::Outer => Some(h),
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Region::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown region '{s}'")))
    }
}

/// Sampling grid for [`certify_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundGrid {
    pub nx: usize,
    pub ny: usize,
    pub threads: usize,
}

impl Default for BoundGrid {
    fn default() -> Self {
        Self { nx: 200, ny: 200, threads: 1 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub region: Region,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub pole_guard: f64,
    pub cut_guard: f64,
    pub min_re_eps: f64,
    pub claimed_bound: Option<f64>,
    /// Smallest of the margins below; positive iff the bound held everywhere.
    pub margin: f64,
    /// `min (Re ε - Re ε₀)` or `min (Re ε - bound)`.
    pub lower_margin: f64,
    /// `min (Re ε_u - Re ε)`, strip only.
    pub upper_margin: Option<f64>,
    /// Point where `margin` was attained.
    pub worst: (f64, f64),
    /// Set when the first grid failed and a grid twice as fine was used.
    pub refined: bool,
    /// Distance of the `ω` strip boundary `π/2 - γ` from the real axis.
    pub omega_margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
struct Partial {
    evaluated: usize,
    skipped: usize,
    min_re_eps: f64,
    lower: (f64, f64, f64),
    upper: (f64, f64, f64),
}

impl Partial {
    fn empty() -> Self {
        let far = (f64::INFINITY, 0.0, 0.0);
        Self { evaluated: 0, skipped: 0, min_re_eps: f64::INFINITY, lower: far, upper: far }
    }

    fn merge(mut self, o: Partial) -> Self {
        self.evaluated += o.evaluated;
        self.skipped += o.skipped;
        self.min_re_eps = self.min_re_eps.min(o.min_re_eps);
        if o.lower.0 < self.lower.0 {
            self.lower = o.lower;
        }
        if o.upper.0 < self.upper.0 {
            self.upper = o.upper;
        }
        self
    }
}

fn scan_rows(plane: &CutPlane, region: Region, rows: &[f64], xs: &[f64]) -> Result<Partial> {
    let p = plane.params();
    let (h, g) = (p.h(), p.gamma());
    let bound = region.claimed_bound(h, g);
    let amplitude = 2.0 * std::f64::consts::PI * p.j() * g.sin() / g;
    let mut acc = Partial::empty();
    for &y in rows {
        for &x in xs {
            let l = Complex64::new(x, y);
            if plane.pole_distance(l) < plane.pole_guard() || plane.cut_distance(l) < plane.cut_guard() {
                acc.skipped += 1;
                continue;
            }
            let minus_h = plane.eps_minus_h(l)?.re;
            acc.min_re_eps = acc.min_re_eps.min(h + minus_h);
            let lower = match bound {
                Some(b) => minus_h + (h - b),
                None => plane.eps_minus_bare(l)?.re,
            };
            if lower < acc.lower.0 {
                acc.lower = (lower, x, y);
            }
            if bound.is_none() {
                // ε_u - ε = -A sech(πλ/γ) - (ε - h)
                let upper = (-amplitude * kernels::sech(l * (std::f64::consts::PI / g))).re - minus_h;
                if upper < acc.upper.0 {
                    acc.upper = (upper, x, y);
                }
            }
            acc.evaluated += 1;
        }
    }
    Ok(acc)
}

fn cell_centres(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * (k as f64 + 0.5) / n as f64).collect()
}

fn scan(plane: &CutPlane, region: Region, grid: BoundGrid) -> Result<Partial> {
    let (y0, y1) = region.y_range(plane.gamma());
    let xs = cell_centres(0.0, plane.x_max(), grid.nx);
    let ys = cell_centres(y0, y1, grid.ny);
    let threads = grid.threads.clamp(1, ys.len().max(1));
    if threads == 1 {
        return scan_rows(plane, region, &ys, &xs);
    }
    // rows next to a cut are much dearer than the rest, so deal them out
    // round-robin rather than in blocks
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let rows: Vec<f64> = ys.iter().copied().skip(t).step_by(threads).collect();
                let xs = &xs;
                scope.spawn(move || scan_rows(plane, region, &rows, xs))
            })
            .collect();
        handles.into_iter().try_fold(Partial::empty(), |acc, h| {
            let part = h.join().map_err(|_| Error::Unsupported("bound worker panicked".into()))??;
            Ok(acc.merge(part))
        })
    })
}

/// Evaluate `Re ε` on a cell-centred `nx × ny` grid of `region` with
/// `0 < x < X_max` and compare with the claimed bound. Points inside the
/// guard neighbourhoods are skipped. A failing grid is retried once at
/// twice the resolution in each direction.
pub fn certify_bounds(plane: &CutPlane, region: Region, grid: BoundGrid) -> Result<BoundReport> {
    if grid.nx == 0 || grid.ny == 0 {
        return Err(Error::InvalidParameter("bound grid must have nx, ny > 0".into()));
    }
    let g = plane.gamma();
    let (y0, y1) = region.y_range(g);
    let mut used = grid;
    let mut refined = false;
    let mut part = scan(plane, region, used)?;
    let margin_of = |p: &Partial| if region == Region::Strip { p.lower.0.min(p.upper.0) } else { p.lower.0 };
    if part.evaluated > 0 && !(margin_of(&part) > 0.0) {
        used = BoundGrid { nx: 2 * grid.nx, ny: 2 * grid.ny, ..grid };
        refined = true;
        part = scan(plane, region, used)?;
    }
    if part.evaluated == 0 {
        return Err(Error::EmptyRegion(format!(
            "{} region y in ({y0}, {y1}) has no points outside the guards",
            region.name()
        )));
    }
    let margin = margin_of(&part);
    let worst = if region == Region::Strip && part.upper.0 < part.lower.0 { part.upper } else { part.lower };
    Ok(BoundReport {
        region,
        x_range: (0.0, plane.x_max()),
        y_range: (y0, y1),
        nx: used.nx,
        ny: used.ny,
        evaluated: part.evaluated,
        skipped: part.skipped,
        pole_guard: plane.pole_guard(),
        cut_guard: plane.cut_guard(),
        min_re_eps: part.min_re_eps,
        claimed_bound: region.claimed_bound(plane.params().h(), g),
        margin,
        lower_margin: part.lower.0,
        upper_margin: (region == Region::Strip).then_some(part.upper.0),
        worst: (worst.1, worst.2),
        refined,
        omega_margin: FRAC_PI_2 - g,
        passed: margin > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::plane;
    use super::*;

    #[test]
    fn regions_tile_the_half_period() {
        let g = 1.3;
        let mut top = 0.0;
        for r in Region::ALL {
            let (a, b) = r.y_range(g);
            assert_eq!(a, top);
            assert!(b > a);
            top = b;
        }
        assert_eq!(top, FRAC_PI_2);
        assert_eq!("middle".parse::<Region>().unwrap(), Region::Middle);
        assert!("north".parse::<Region>().is_err());
        let inner = Region::Inner.claimed_bound(2.0, 0.3).unwrap();
        assert!((inner - 0.6 / (std::f64::consts::PI - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn all_regions_hold_on_coarse_grid() {
        let pl = plane();
        for r in Region::ALL {
            let grid = BoundGrid { nx: 40, ny: 20, threads: 2 };
            let rep = certify_bounds(pl, r, grid).unwrap();
            assert!(rep.passed, "{rep:?}");
            assert!(!rep.refined);
            assert_eq!(rep.evaluated + rep.skipped, 800);
            if let Some(b) = rep.claimed_bound {
                assert!(rep.min_re_eps > b);
            }
        }
    }

    #[test]
    fn threads_do_not_change_the_result() {
        let pl = plane();
        let a = certify_bounds(pl, Region::Inner, BoundGrid { nx: 30, ny: 10, threads: 1 }).unwrap();
        let b = certify_bounds(pl, Region::Inner, BoundGrid { nx: 30, ny: 10, threads: 3 }).unwrap();
        assert_eq!(a.margin, b.margin);
        assert_eq!(a.worst, b.worst);
    }

    #[test]
    fn guard_dominated_region_is_reported() {
        let pl = plane().clone().with_guards(1e-3, 10.0);
        assert!(matches!(
            certify_bounds(&pl, Region::Middle, BoundGrid { nx: 4, ny: 4, threads: 1 }),
            Err(Error::EmptyRegion(_))
        ));
    }
}
