use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use proptest::prelude::*;
use xxz_dressed::cli::num;
use xxz_dressed::complexplane::CutPlane;
use xxz_dressed::dressed::{bare_driving, dressed_solution, GridSpec};
use xxz_dressed::fermi::solve_fermi;
use xxz_dressed::fredholm::{build_grid, solve_fredholm, QuadratureRule};
use xxz_dressed::kernels::{self, ModelParams};
use xxz_dressed::Complex64;

fn plane() -> &'static CutPlane {
    static PLANE: OnceLock<CutPlane> = OnceLock::new();
    PLANE.get_or_init(|| {
        let p = ModelParams::from_field_ratio(1.0, 1.1, 0.4).unwrap();
        CutPlane::new(&solve_fermi(&p, 1e-12, &GridSpec::default()).unwrap())
    })
}

proptest! {
    #[test]
    fn kernel_even_positive_decreasing(g in 0.05f64..1.55, x in 0.0f64..8.0, dx in 1e-3f64..1.0) {
        let k = kernels::kernel_k_real(x, g);
        prop_assert!(k > 0.0);
        prop_assert_eq!(k, kernels::kernel_k_real(-x, g));
        prop_assert!(kernels::kernel_k_real(x + dx, g) < k);
    }

    #[test]
    fn complex_kernel_matches_real_axis(g in 0.05f64..1.55, x in -6.0f64..6.0) {
        let z = kernels::kernel_k(Complex64::new(x, 0.0), g).unwrap();
        prop_assert!((z.re - kernels::kernel_k_real(x, g)).abs() < 1e-15 * (1.0 + z.re.abs()));
        prop_assert!(z.im.abs() < 1e-16);
    }

    #[test]
    fn fourier_transform_peaks_at_zero(g in 0.05f64..1.55, k in 1e-3f64..20.0) {
        let f0 = kernels::kernel_fourier(0.0, g);
        prop_assert!((f0 - (1.0 - 2.0 * g / PI)).abs() < 1e-14);
        prop_assert!(kernels::kernel_fourier(k, g) < f0);
        prop_assert_eq!(kernels::kernel_fourier(k, g), kernels::kernel_fourier(-k, g));
    }

    #[test]
    fn gamma_prime_stays_in_range(a in 0.01f64..1.56, b in 0.01f64..1.56) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        prop_assert!(kernels::gamma_prime(lo) < kernels::gamma_prime(hi));
        prop_assert!(kernels::gamma_prime(hi) < FRAC_PI_2);
    }

    #[test]
    fn csv_numbers_round_trip(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        prop_assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nystrom_solution_even_and_consistent(q in 0.1f64..4.0, g in 0.3f64..1.5, ratio in 0.05f64..0.95) {
        let p = ModelParams::from_field_ratio(1.0, g, ratio).unwrap();
        let grid = build_grid(q, GridSpec::default().nodes_for(q), QuadratureRule::GaussLegendre).unwrap();
        let s = solve_fredholm(bare_driving(p), &grid, g).unwrap();
        prop_assert!(s.residual().unwrap() < 1e-12);
        prop_assert!(s.parity_defect() < 1e-12);
        // off-grid evaluation reproduces the nodal values
        let x = grid.nodes()[17];
        prop_assert!((s.evaluate(Complex64::new(x, 0.0)).unwrap() - s.values()[17]).norm() < 1e-10);
    }

    #[test]
    fn dressed_energy_between_bare_and_upper(q in 0.05f64..3.0, g in 0.3f64..1.5, ratio in 0.05f64..0.95) {
        let p = ModelParams::from_field_ratio(1.0, g, ratio).unwrap();
        let s = dressed_solution(p, q, &GridSpec::with_nodes(96)).unwrap();
        let b = s.node_bounds().unwrap();
        prop_assert!(b.upper > 0.0);
        prop_assert!(b.charge_min > 0.0 && b.charge_gap > 0.0);
        prop_assert!(b.linear_relation < 1e-10);
    }

    #[test]
    fn energy_symmetric_in_both_axes(x in 0.0f64..4.0, y in 0.0f64..FRAC_PI_2) {
        let pl = plane();
        let l = Complex64::new(x, y);
        prop_assume!(pl.pole_distance(l) > 0.01 && pl.cut_distance(l) > 0.01);
        let e = pl.eval_eps_complex(l).unwrap();
        let mx = pl.eval_eps_complex(Complex64::new(-x, y)).unwrap();
        let my = pl.eval_eps_complex(Complex64::new(x, -y)).unwrap();
        let tol = 1e-10 * e.norm().max(1.0);
        prop_assert!((mx - Complex64::new(e.re, -e.im)).norm() < tol);
        prop_assert!((my - Complex64::new(e.re, -e.im)).norm() < tol);
        let periodic = pl.eval_eps_complex(Complex64::new(x, y - PI)).unwrap();
        prop_assert!((periodic - e).norm() < tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fermi_point_bracketed(g in 0.3f64..1.5, ratio in 0.02f64..0.98) {
        let p = ModelParams::from_field_ratio(1.0, g, ratio).unwrap();
        let f = solve_fermi(&p, 1e-11, &GridSpec::default()).unwrap().data;
        prop_assert!(f.g_residual < 1e-11);
        prop_assert!(f.q_u.is_none_or(|u| u < f.q_f));
        prop_assert!(0.0 < f.q_f && f.q_f < f.q_0);
        prop_assert!(f.dqf_dh < 0.0);
    }
}
