//! Command-line driver.
//!
//! Every command resolves a [`RunConfig`] from built-in defaults, an optional
//! TOML file (`--config`) and the command-line flags, in that order of
//! increasing priority, and embeds the resolved config in its output.
//!
//! Exit codes: 0 success, 2 bad parameters, 3 solver failure, 4 a bound
//! failed on its grid.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::complexplane::{
    asymptotic_constant, certify_bounds, curve_samples, trace_curve, BoundGrid, BoundReport, CutPlane, Region,
};
use crate::dressed::{bare_driving, dressed_solution, GridSpec};
use crate::error::{Error, Result};
use crate::fermi::{bracket_endpoints, solve_fermi, FermiData, FermiSolution};
use crate::fredholm::{build_grid, neumann_oracle, resolvent_table, solve_fredholm, QuadratureRule};
use crate::kernels::{self, ModelParams};
use crate::quadrature;

/// Build identifier baked in at compile time.
pub const BUILD_ID: &str = match option_env!("XXZ_BUILD_ID") {
    Some(id) => id,
    None => "unknown",
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BAD_PARAMS: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_BOUND_FAILED: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "xxz-dressed", version = BUILD_ID, about = "Dressed energy of the critical XXZ chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with defaults for any of the flags below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub flags: Overlay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Fermi rapidity, its brackets and dQ_F/dh.
    Fermi,
    /// Zero curve Re ε = 0 in the first quadrant.
    Curve,
    /// Grid certification of the bounds on Re ε.
    Bounds,
    /// Invariant checks with a pass/fail line per item.
    Selftest,
    /// Q_F over a range of h/h_c.
    Sweep,
}

/// Settings shared by the flags and the config file. Unset fields fall
/// through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Overlay {
    #[arg(long = "J", global = true)]
    #[serde(rename = "J", alias = "j")]
    pub j: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Magnetic field.
    #[arg(long, global = true, conflicts_with = "h_ratio")]
    pub h: Option<f64>,
    /// Magnetic field in units of the critical field.
    #[arg(long = "h-ratio", global = true)]
    pub h_ratio: Option<f64>,
    /// Nyström nodes on [-Q, Q]; final refinements use twice as many.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long = "pole-guard", global = true)]
    pub pole_guard: Option<f64>,
    #[arg(long = "cut-guard", global = true)]
    pub cut_guard: Option<f64>,
    /// Tolerance for certified tail truncations.
    #[arg(long = "tail-tol", global = true)]
    pub tail_tol: Option<f64>,
    /// Bound grid columns.
    #[arg(long, global = true)]
    pub nx: Option<usize>,
    /// Bound grid rows.
    #[arg(long, global = true)]
    pub ny: Option<usize>,
    /// Curve heights on [0, γ/2 - 1e-2].
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Curve heights in the fit window near γ/2.
    #[arg(long = "fit-points", global = true)]
    pub fit_points: Option<usize>,
    /// First h/h_c of a sweep.
    #[arg(long, global = true)]
    pub from: Option<f64>,
    /// Last h/h_c of a sweep.
    #[arg(long, global = true)]
    pub to: Option<f64>,
    /// Number of sweep fields.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
}

impl Overlay {
    /// `other` wins wherever it is set. A field given in either form on
    /// the upper layer replaces both forms below it.
    fn overlay(self, other: Overlay) -> Overlay {
        let field_set = other.h.is_some() || other.h_ratio.is_some();
        Overlay {
            j: other.j.or(self.j),
            gamma: other.gamma.or(self.gamma),
            h: if field_set { other.h } else { self.h },
            h_ratio: if field_set { other.h_ratio } else { self.h_ratio },
            n: other.n.or(self.n),
            tol: other.tol.or(self.tol),
            out: other.out.or(self.out),
            format: other.format.or(self.format),
            seed: other.seed.or(self.seed),
            threads: other.threads.or(self.threads),
            pole_guard: other.pole_guard.or(self.pole_guard),
            cut_guard: other.cut_guard.or(self.cut_guard),
            tail_tol: other.tail_tol.or(self.tail_tol),
            nx: other.nx.or(self.nx),
            ny: other.ny.or(self.ny),
            points: other.points.or(self.points),
            fit_points: other.fit_points.or(self.fit_points),
            from: other.from.or(self.from),
            to: other.to.or(self.to),
            steps: other.steps.or(self.steps),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub params: ModelParams,
    pub h_ratio: f64,
    pub grid: GridSpec,
    pub tol: f64,
    pub tail_tol: f64,
    pub pole_guard: f64,
    pub cut_guard: f64,
    pub seed: u64,
    pub threads: usize,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub bound_grid: (usize, usize),
    pub curve_points: (usize, usize),
    pub sweep: (f64, f64, usize),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize> {
    if v >= min {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be at least {min}, got {v}")))
    }
}

impl RunConfig {
    pub fn resolve(command: Command, layers: Overlay) -> Result<Self> {
        let j = layers.j.unwrap_or(1.0);
        let gamma = layers.gamma.unwrap_or(1.3);
        let params = match (layers.h, layers.h_ratio) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter("give either h or h-ratio, not both".into()))
            }
            (Some(h), None) => ModelParams::new(j, gamma, h)?,
            (None, ratio) => {
                let r = ratio.unwrap_or(0.5);
                if !(r > 0.0 && r < 1.0) {
                    return Err(Error::OutOfRegime(format!("h/h_c = {r} outside (0, 1)")));
                }
                ModelParams::from_field_ratio(j, gamma, r)?
            }
        };
        let n = at_least("n", layers.n.unwrap_or(GridSpec::default().n), 2)?;
        let from = layers.from.unwrap_or(0.05);
        let to = layers.to.unwrap_or(0.95);
        for r in [from, to] {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::OutOfRegime(format!("sweep ratio {r} outside (0, 1)")));
            }
        }
        Ok(Self {
            command: match command {
                Command::Fermi => "fermi",
                Command::Curve => "curve",
                Command::Bounds => "bounds",
                Command::Selftest => "selftest",
                Command::Sweep => "sweep",
            },
            h_ratio: params.field_ratio(),
            params,
            grid: GridSpec::with_nodes(n),
            tol: positive("tol", layers.tol.unwrap_or(1e-12))?,
            tail_tol: positive("tail-tol", layers.tail_tol.unwrap_or(1e-12))?,
            pole_guard: positive("pole-guard", layers.pole_guard.unwrap_or(crate::complexplane::POLE_GUARD))?,
            cut_guard: positive("cut-guard", layers.cut_guard.unwrap_or(crate::complexplane::CUT_GUARD))?,
            seed: layers.seed.unwrap_or(0),
            threads: at_least("threads", layers.threads.unwrap_or(1), 1)?,
            format: layers.format,
            out: layers.out,
            bound_grid: (
                at_least("nx", layers.nx.unwrap_or(200), 1)?,
                at_least("ny", layers.ny.unwrap_or(200), 1)?,
            ),
            curve_points: (
                at_least("points", layers.points.unwrap_or(40), 2)?,
                layers.fit_points.unwrap_or(20),
            ),
            sweep: (from, to, at_least("steps", layers.steps.unwrap_or(19), 1)?),
        })
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn plane(&self, fermi: &FermiSolution) -> CutPlane {
        CutPlane::new(fermi).with_guards(self.pole_guard, self.cut_guard)
    }
}

/// Process exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) | Error::OutOfRegime(_) => EXIT_BAD_PARAMS,
        _ => EXIT_SOLVER,
    }
}

/// Text written by a command and the exit code it asks for.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

fn load_file(path: &PathBuf) -> Result<Overlay> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

/// Resolve the layered config for parsed arguments.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(p) => load_file(p)?,
        None => Overlay::default(),
    };
    RunConfig::resolve(cli.command, file.overlay(cli.flags.clone()))
}

/// Run the parsed command and render its output.
pub fn execute(cli: &Cli) -> Result<Output> {
    let cfg = resolve_config(cli)?;
    match cli.command {
        Command::Fermi => cmd_fermi(&cfg),
        Command::Curve => cmd_curve(&cfg),
        Command::Bounds => cmd_bounds(&cfg),
        Command::Selftest => cmd_selftest(&cfg),
        Command::Sweep => cmd_sweep(&cfg),
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_PARAMS } else { EXIT_OK };
        }
    };
    let out = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    let target = cli.flags.out.clone().or_else(|| resolve_config(&cli).ok().and_then(|c| c.out));
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &out.text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_SOLVER;
            }
        }
        None => print!("{}", out.text),
    }
    out.code
}

fn json<T: Serialize>(cfg: &RunConfig, key: &str, value: &T) -> Result<String> {
    let doc = serde_json::json!({ "build": BUILD_ID, "config": cfg, key: value });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Unsupported(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Round-trip exact rendering of a double.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv<R: AsRef<[String]>>(cfg: &RunConfig, notes: &[String], header: &[&str], rows: &[R]) -> Result<String> {
    let mut buf = String::new();
    let config = serde_json::to_string(cfg).map_err(|e| Error::Unsupported(e.to_string()))?;
    let _ = writeln!(buf, "# build: {BUILD_ID}");
    let _ = writeln!(buf, "# config: {config}");
    for n in notes {
        let _ = writeln!(buf, "# {n}");
    }
    let mut w = csv::Writer::from_writer(buf.into_bytes());
    let io = |e: csv::Error| Error::Unsupported(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r.as_ref()).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Unsupported(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Unsupported(e.to_string()))
}

fn fermi_row(d: &FermiData) -> Vec<String> {
    vec![
        num(d.params.field_ratio()),
        num(d.params.h()),
        num(d.q_f),
        opt(d.q_u),
        num(d.q_0),
        num(d.dqf_dh),
        num(d.eps_prime),
        num(d.charge),
        num(d.g_residual),
        d.nodes.to_string(),
    ]
}

const FERMI_HEADER: [&str; 10] =
    ["h_ratio", "h", "q_f", "q_u", "q_0", "dqf_dh", "eps_prime", "charge", "g_residual", "nodes"];

pub fn cmd_fermi(cfg: &RunConfig) -> Result<Output> {
    let f = solve_fermi(&cfg.params, cfg.tol, &cfg.grid)?;
    let text = match cfg.format_or(Format::Json) {
        Format::Json => json(cfg, "fermi", &f.data)?,
        Format::Csv => csv(cfg, &[], &FERMI_HEADER, &[fermi_row(&f.data)])?,
    };
    Ok(Output { text, code: EXIT_OK })
}

pub fn cmd_curve(cfg: &RunConfig) -> Result<Output> {
    let f = solve_fermi(&cfg.params, cfg.tol, &cfg.grid)?;
    let plane = cfg.plane(&f);
    let ys = curve_samples(cfg.params.gamma(), cfg.curve_points.0, cfg.curve_points.1);
    let curve = trace_curve(&plane, &ys, cfg.tol.max(1e-13))?;
    let asym = asymptotic_constant(&plane, cfg.tail_tol, Some(&curve))?;
    let text = match cfg.format_or(Format::Csv) {
        Format::Json => {
            let doc = serde_json::json!({ "fermi": f.data, "points": curve, "asymptotics": asym });
            json(cfg, "curve", &doc)?
        }
        Format::Csv => {
            let mut notes = vec![
                format!("q_f = {}", num(f.data.q_f)),
                format!("c = {}", num(asym.c)),
                "quarter curve; the full curve is (±x, ±y)".to_string(),
            ];
            if let Some(fit) = asym.x_fit {
                notes.push(format!("x fit: exponent {} prefactor {}", num(fit.exponent), num(fit.prefactor)));
            }
            if let Some(fit) = asym.im_fit {
                notes.push(format!("im fit: exponent {} prefactor {}", num(fit.exponent), num(fit.prefactor)));
            }
            let rows: Vec<Vec<String>> =
                curve.iter().map(|p| vec![num(p.y), num(p.x), num(p.im_eps), num(p.residual)]).collect();
            csv(cfg, &notes, &["y", "x", "im_eps", "residual"], &rows)?
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

/// Result for one region of the `bounds` command.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum BoundOutcome {
    Checked(BoundReport),
    Skipped { region: Region, reason: String },
}

pub fn bound_outcomes(cfg: &RunConfig, plane: &CutPlane) -> Result<Vec<BoundOutcome>> {
    let grid = BoundGrid { nx: cfg.bound_grid.0, ny: cfg.bound_grid.1, threads: cfg.threads };
    Region::ALL
        .into_iter()
        .map(|region| match certify_bounds(plane, region, grid) {
            Ok(rep) => Ok(BoundOutcome::Checked(rep)),
            Err(Error::EmptyRegion(reason)) => Ok(BoundOutcome::Skipped { region, reason }),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Output> {
    let f = solve_fermi(&cfg.params, cfg.tol, &cfg.grid)?;
    let plane = cfg.plane(&f);
    let outcomes = bound_outcomes(cfg, &plane)?;
    let failed = outcomes.iter().any(|o| matches!(o, BoundOutcome::Checked(r) if !r.passed));
    let text = match cfg.format_or(Format::Json) {
        Format::Json => json(cfg, "bounds", &outcomes)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = outcomes
                .iter()
                .map(|o| match o {
                    BoundOutcome::Checked(r) => vec![
                        r.region.name().to_string(),
                        if r.passed { "pass" } else { "fail" }.to_string(),
                        num(r.min_re_eps),
                        opt(r.claimed_bound),
                        num(r.margin),
                        r.evaluated.to_string(),
                        r.skipped.to_string(),
                    ],
                    BoundOutcome::Skipped { region, .. } => {
                        vec![region.name().to_string(), "skipped".to_string(), String::new(), String::new(), String::new(), "0".into(), String::new()]
                    }
                })
                .collect();
            let header = ["region", "status", "min_re_eps", "claimed_bound", "margin", "evaluated", "skipped"];
            csv(cfg, &[], &header, &rows)?
        }
    };
    Ok(Output { text, code: if failed { EXIT_BOUND_FAILED } else { EXIT_OK } })
}

/// One line of the self-test.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(f64, f64)>) -> CheckItem {
    match outcome {
        Ok((value, tol)) => CheckItem {
            name,
            passed: value < tol,
            detail: format!("{value:.3e} (tolerance {tol:.1e})"),
        },
        Err(e) => CheckItem { name, passed: false, detail: e.to_string() },
    }
}

/// The invariant suite behind `selftest`.
///
/// Items on a fixed interval `[-Q₀/2, Q₀/2]` are exact identities of the
/// discretised problem and hold at any node count; items at the Fermi
/// point depend on the grid being fine enough.
pub fn selftest_items(cfg: &RunConfig) -> Vec<CheckItem> {
    let p = cfg.params;
    let g = p.gamma();
    let mut items = Vec::new();
    items.push(check(
        "kernel normalisation",
        (|| {
            let v = quadrature::integrate_panels(-40.0, 40.0, 400, |x| {
                Complex64::new(kernels::kernel_k_real(x, g), 0.0)
            });
            Ok(((v.re - kernels::kernel_fourier(0.0, g)).abs(), 1e-10))
        })(),
    ));
    items.push(check(
        "kernel evenness",
        (|| {
            let mut worst: f64 = 0.0;
            for k in 0..20 {
                let l = Complex64::new(0.37 * k as f64 - 3.0, 0.1 * (k % 5) as f64);
                let a = kernels::kernel_k(l, g)?;
                worst = worst.max((a - kernels::kernel_k(-l, g)?).norm());
                worst = worst.max((a.conj() - kernels::kernel_k(l.conj(), g)?).norm());
            }
            Ok((worst, 1e-14))
        })(),
    ));
    let q_mid = 0.5 * bracket_endpoints(&p).1;
    let n_mid = cfg.grid.nodes_for(q_mid);
    items.push(check(
        "resolvent symmetry",
        (|| {
            let grid = build_grid(q_mid, n_mid, QuadratureRule::GaussLegendre)?;
            let t = resolvent_table(&grid, g)?;
            Ok((t.symmetry_defect().max(t.parity_defect()).max(t.commutation_defect()), 1e-11))
        })(),
    ));
    items.push(check(
        "backend equivalence",
        (|| {
            let grid = build_grid(q_mid, n_mid, QuadratureRule::GaussLegendre)?;
            let a = solve_fredholm(bare_driving(p), &grid, g)?;
            let (b, _) = neumann_oracle(bare_driving(p), &grid, g, 1e-14)?;
            let d = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            Ok((d, 1e-9))
        })(),
    ));
    items.push(check(
        "linear relation",
        (|| {
            let s = dressed_solution(p, q_mid, &cfg.grid)?;
            Ok((s.node_bounds()?.linear_relation, 1e-10))
        })(),
    ));
    let fermi = solve_fermi(&p, cfg.tol, &cfg.grid);
    let fermi = match fermi {
        Ok(f) => f,
        Err(e) => {
            items.push(CheckItem { name: "fermi point", passed: false, detail: e.to_string() });
            return items;
        }
    };
    let d = &fermi.data;
    let ordered = d.q_u.is_none_or(|u| u < d.q_f) && d.q_f < d.q_0 && d.dqf_dh < 0.0;
    items.push(CheckItem {
        name: "fermi point",
        passed: ordered && d.g_residual < cfg.tol,
        detail: format!("Q_F = {} residual {:.3e}", num(d.q_f), d.g_residual),
    });
    items.push(check(
        "grid convergence",
        (|| {
            let coarse = dressed_solution(p, d.q_f, &cfg.grid)?;
            let l = Complex64::new(0.5 * d.q_f, 0.25 * g);
            let a = coarse.eps().evaluate(l)?;
            let b = fermi.solution.eps().evaluate(l)?;
            Ok(((a - b).norm(), cfg.tol))
        })(),
    ));
    items.push(check(
        "node bounds",
        (|| {
            let b = fermi.solution.node_bounds()?;
            Ok((if b.lower > 0.0 && b.upper > 0.0 { 0.0 } else { 1.0 }, 0.5))
        })(),
    ));
    let plane = cfg.plane(&fermi);
    for rep in [plane.symmetry(cfg.seed, 100), plane.harmonicity(cfg.seed, 100)] {
        items.push(match rep {
            Ok(r) => CheckItem {
                name: r.name,
                passed: r.passed,
                detail: format!("{:.3e} (tolerance {:.1e})", r.worst, r.tolerance),
            },
            Err(e) => CheckItem { name: "property", passed: false, detail: e.to_string() },
        });
    }
    items.push(check("residue", plane.residue_check().map(|r| (r.relative_error, 1e-6))));
    items.push(check("jump", plane.jump_check(0.0, 1e-4).map(|r| (r.extrapolated / r.scale, 1e-3))));
    items.push(check(
        "omega representation",
        (|| {
            let mut worst: f64 = 0.0;
            for z in [0.0, 0.4, 1.5, 4.0] {
                let w = plane.omega_eval(Complex64::new(z, 0.0), cfg.tail_tol)?;
                let e = plane.eval_eps_complex(Complex64::new(z, std::f64::consts::FRAC_PI_2))?;
                worst = worst.max((w.value - e).norm());
            }
            Ok((worst, 1e-6))
        })(),
    ));
    items
}

pub fn cmd_selftest(cfg: &RunConfig) -> Result<Output> {
    let items = selftest_items(cfg);
    let failed = items.iter().any(|i| !i.passed);
    let text = match cfg.format {
        Some(Format::Json) => json(cfg, "selftest", &items)?,
        Some(Format::Csv) => {
            let rows: Vec<Vec<String>> =
                items.iter().map(|i| vec![i.name.to_string(), i.passed.to_string(), i.detail.clone()]).collect();
            csv(cfg, &[], &["item", "passed", "detail"], &rows)?
        }
        None => {
            let mut s = String::new();
            for i in &items {
                let _ = writeln!(s, "{} {}: {}", if i.passed { "PASS" } else { "FAIL" }, i.name, i.detail);
            }
            s
        }
    };
    Ok(Output { text, code: if failed { EXIT_SOLVER } else { EXIT_OK } })
}

/// Fields `h/h_c` of a sweep.
pub fn sweep_ratios(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![from];
    }
    (0..steps).map(|k| from + (to - from) * k as f64 / (steps - 1) as f64).collect()
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Output> {
    let (from, to, steps) = cfg.sweep;
    let ratios = sweep_ratios(from, to, steps);
    let solve = |r: f64| -> Result<FermiData> {
        let p = ModelParams::from_field_ratio(cfg.params.j(), cfg.params.gamma(), r)?;
        Ok(solve_fermi(&p, cfg.tol, &cfg.grid)?.data)
    };
    let chunk = ratios.len().div_ceil(cfg.threads);
    let results: Vec<Result<FermiData>> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            ratios.chunks(chunk).map(|rs| scope.spawn(move || rs.iter().map(|&r| solve(r)).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let data = results.into_iter().collect::<Result<Vec<_>>>()?;
    let text = match cfg.format_or(Format::Csv) {
        Format::Json => json(cfg, "sweep", &data)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = data.iter().map(fermi_row).collect();
            csv(cfg, &[], &FERMI_HEADER, &rows)?
        }
    };
    Ok(Output { text, code: EXIT_OK })
}
