//! Command-line front door: kernel generation, identity verification,
//! Monte Carlo experiments, Gaussian tails, bound tables and diagram
//! counts. Reports are CSV for grids and JSON for verdicts; payloads are
//! reproducible byte-for-byte for a fixed configuration and seed.
//!
//! Exit status: 0 when every asserted verdict holds, 1 on a verdict
//! failure (the failing instance is serialized to stderr), 2 on an
//! invalid configuration.

mod grid;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ustat_calculus::bounds::{
    self, arcones_gine_bound, bernstein_k1, calibrate_constant, gaussian_moment_bound,
    gaussian_moment_bound_stirling, theorem1_bound, theorem3_bound, ustat_moment_bound,
    Applicability, ExtensionReading, NamedConstant, Provenance,
};
use ustat_calculus::calculus::{expected_product_unnormalized, verify_product_identity};
use ustat_calculus::diagrams::{colored_multi, pairings, visit_closed_multi};
use ustat_calculus::gaussian::verify_lower_bound_17;
use ustat_calculus::gen::{random_kernel, KernelConstraints};
use ustat_calculus::io::KernelFile;
use ustat_calculus::scalar::Rational;
use ustat_calculus::ustat::{exact_expectation_unnormalized, mc_moment, mc_tail};
use ustat_calculus::{Kernel, Scalar, Space};

use grid::{parse_grid, parse_usize_list};
use report::{emit, fmt_f64, fmt_opt, Csv, VerifyReport};

#[derive(Parser)]
#[command(
    name = "ustat",
    version,
    about = "Diagram calculus for degenerate U-statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base RNG seed for anything randomized.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Arithmetic mode for identity checks.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Float)]
    mode: Mode,

    /// Float-mode tolerance for verdicts.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tolerance: f64,

    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format where both are meaningful.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rational,
    Float,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded random kernel file.
    GenKernel {
        /// Number of atoms of the base space.
        #[arg(long, default_value_t = 2)]
        atoms: usize,
        /// Integer weight parts, e.g. "1,3" for (1/4, 3/4); uniform when
        /// omitted.
        #[arg(long)]
        weights: Option<String>,
        /// Kernel order.
        #[arg(long)]
        k: usize,
        /// Project onto the canonical component.
        #[arg(long)]
        canonical: bool,
        /// Sup-norm bound to enforce.
        #[arg(long)]
        sup: Option<f64>,
        /// L2-norm bound to enforce.
        #[arg(long)]
        l2: Option<f64>,
    },
    /// Check the product rewriting identity pointwise on every sample
    /// assignment.
    VerifyProduct {
        /// Kernel files (repeat the flag); generated when omitted.
        #[arg(long = "kernel")]
        kernels: Vec<PathBuf>,
        /// Orders of generated kernels, e.g. "2,1" or "1,1,1".
        #[arg(long)]
        orders: Option<String>,
        /// First generated order (two-factor shorthand).
        #[arg(long)]
        k1: Option<usize>,
        /// Second generated order (two-factor shorthand).
        #[arg(long)]
        k2: Option<usize>,
        /// Atoms of the generated uniform space.
        #[arg(long, default_value_t = 2)]
        atoms: usize,
        /// Sample size.
        #[arg(long)]
        n: usize,
    },
    /// Check the expectation formula against the brute-force oracle.
    VerifyExpectation {
        #[arg(long = "kernel")]
        kernels: Vec<PathBuf>,
        #[arg(long)]
        orders: Option<String>,
        #[arg(long)]
        k1: Option<usize>,
        #[arg(long)]
        k2: Option<usize>,
        #[arg(long, default_value_t = 2)]
        atoms: usize,
        #[arg(long)]
        n: usize,
    },
    /// Monte Carlo and exact even moments with the moment bound.
    Moments {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        n: usize,
        /// Largest M; rows cover M = 1..=m_max.
        #[arg(long, default_value_t = 3)]
        m_max: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Moment-bound eta; defaults to kM/(n sigma^2) per row.
        #[arg(long)]
        eta: Option<f64>,
        /// Moment-bound A; calibrated on the table when omitted.
        #[arg(long)]
        a_const: Option<f64>,
    },
    /// Empirical tails with the tail bounds.
    Tails {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        n: usize,
        /// Threshold grid: "0:2:0.25" or "0.5,1,2".
        #[arg(long)]
        u_grid: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        /// Tail-bound A; calibrated on this run when omitted.
        #[arg(long)]
        a_const: Option<f64>,
        /// Tail-bound B.
        #[arg(long, default_value_t = 1.0)]
        b_const: f64,
        /// Order-k Bernstein constants (default 2, 1/2, 1/3 at k = 1).
        #[arg(long)]
        c1: Option<f64>,
        #[arg(long)]
        c2: Option<f64>,
        #[arg(long)]
        c3: Option<f64>,
    },
    /// Exact Gaussian chaos tails with the upper and lower envelopes.
    GaussianTails {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        u_grid: String,
    },
    /// Evaluate one named bound family on a grid.
    BoundsTable {
        /// One of 1.2, 1.6, 1.7, 1.8, 2.1, 2.3.
        #[arg(long)]
        which: String,
        /// Parameter JSON: {"k":..,"sigma":..,"n":..,"constants":{..}}.
        #[arg(long)]
        params: PathBuf,
        /// u grid (tail bounds) or M grid (moment bounds).
        #[arg(long)]
        grid: String,
    },
    /// Count diagram classes for the given row sizes.
    CountDiagrams {
        /// Row sizes, e.g. "1,1" or "2,2,2".
        #[arg(long)]
        rows: String,
    },
}

enum Failure {
    /// Invalid configuration: exit 2 with a one-line diagnostic.
    Config(String),
    /// A verdict failed: exit 1; the failing instance is on stderr.
    Verdict(String),
}

type RunResult = Result<(), Failure>;

fn config_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verdict(msg)) => {
            eprintln!("verdict failure: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> RunResult {
    match &cli.command {
        Command::GenKernel {
            atoms,
            weights,
            k,
            canonical,
            sup,
            l2,
        } => gen_kernel(cli, *atoms, weights.as_deref(), *k, *canonical, *sup, *l2),
        Command::VerifyProduct {
            kernels,
            orders,
            k1,
            k2,
            atoms,
            n,
        } => {
            let orders = resolve_orders(orders.as_deref(), *k1, *k2)?;
            match cli.mode {
                Mode::Rational => verify_product::<Rational>(cli, kernels, orders, *atoms, *n),
                Mode::Float => verify_product::<f64>(cli, kernels, orders, *atoms, *n),
            }
        }
        Command::VerifyExpectation {
            kernels,
            orders,
            k1,
            k2,
            atoms,
            n,
        } => {
            let orders = resolve_orders(orders.as_deref(), *k1, *k2)?;
            match cli.mode {
                Mode::Rational => verify_expectation::<Rational>(cli, kernels, orders, *atoms, *n),
                Mode::Float => verify_expectation::<f64>(cli, kernels, orders, *atoms, *n),
            }
        }
        Command::Moments {
            kernel,
            n,
            m_max,
            samples,
            eta,
            a_const,
        } => moments(cli, kernel, *n, *m_max, *samples, *eta, *a_const),
        Command::Tails {
            kernel,
            n,
            u_grid,
            samples,
            a_const,
            b_const,
            c1,
            c2,
            c3,
        } => tails(
            cli, kernel, *n, u_grid, *samples, *a_const, *b_const, *c1, *c2, *c3,
        ),
        Command::GaussianTails { k, sigma, u_grid } => gaussian_tails(cli, *k, *sigma, u_grid),
        Command::BoundsTable {
            which,
            params,
            grid,
        } => bounds_table(cli, which, params, grid),
        Command::CountDiagrams { rows } => count_diagrams(cli, rows),
    }
}

fn resolve_orders(
    orders: Option<&str>,
    k1: Option<usize>,
    k2: Option<usize>,
) -> Result<Option<Vec<usize>>, Failure> {
    if let Some(text) = orders {
        return Ok(Some(parse_usize_list(text).map_err(Failure::Config)?));
    }
    match (k1, k2) {
        (Some(a), Some(b)) => Ok(Some(vec![a, b])),
        (None, None) => Ok(None),
        _ => Err(Failure::Config(
            "supply both --k1 and --k2, or --orders".into(),
        )),
    }
}

fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Config(format!(
            "kernel file not found: {}",
            path.display()
        )))
    }
}

fn load_kernels<K: Scalar>(paths: &[PathBuf]) -> Result<Vec<Kernel<K>>, Failure> {
    paths
        .iter()
        .map(|p| {
            require_file(p)?;
            KernelFile::load(p)
                .and_then(|f| f.to_kernel())
                .map_err(config_err)
        })
        .collect()
}

/// Kernels for the verify subcommands: loaded from files, or seeded
/// canonical kernels on a uniform space with the requested orders.
fn obtain_kernels<K: Scalar>(
    cli: &Cli,
    paths: &[PathBuf],
    orders: Option<Vec<usize>>,
    atoms: usize,
) -> Result<Vec<Kernel<K>>, Failure> {
    if !paths.is_empty() {
        return load_kernels(paths);
    }
    let orders = orders.ok_or_else(|| {
        Failure::Config("supply --kernel files or generated orders (--orders / --k1 --k2)".into())
    })?;
    let space = Space::<K>::uniform(atoms).map_err(config_err)?;
    orders
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            random_kernel(
                &space,
                k,
                cli.seed.wrapping_add(i as u64),
                &KernelConstraints::canonical_only(),
            )
            .map_err(config_err)
        })
        .collect()
}

fn gen_kernel(
    cli: &Cli,
    atoms: usize,
    weights: Option<&str>,
    k: usize,
    canonical: bool,
    sup: Option<f64>,
    l2: Option<f64>,
) -> RunResult {
    let constraints = KernelConstraints {
        canonical,
        sup_bound: sup,
        l2_bound: l2,
    };
    let payload = match cli.mode {
        Mode::Rational => {
            let space = make_space::<Rational>(atoms, weights)?;
            let kernel = random_kernel(&space, k, cli.seed, &constraints).map_err(config_err)?;
            KernelFile::from_kernel(&kernel).to_json()
        }
        Mode::Float => {
            let space = make_space::<f64>(atoms, weights)?;
            let kernel = random_kernel(&space, k, cli.seed, &constraints).map_err(config_err)?;
            KernelFile::from_kernel(&kernel).to_json()
        }
    };
    emit(&cli.out, &payload).map_err(config_err)
}

fn make_space<K: Scalar>(
    atoms: usize,
    weights: Option<&str>,
) -> Result<std::sync::Arc<Space<K>>, Failure> {
    match weights {
        None => Space::uniform(atoms).map_err(config_err),
        Some(text) => {
            let parts: Vec<i64> = text
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<i64>()
                        .map_err(|_| Failure::Config(format!("bad weight part {p:?}")))
                })
                .collect::<Result<_, _>>()?;
            if parts.len() != atoms {
                return Err(Failure::Config(format!(
                    "{} weight parts for {atoms} atoms",
                    parts.len()
                )));
            }
            Space::from_parts(&parts).map_err(config_err)
        }
    }
}

fn verify_product<K: Scalar>(
    cli: &Cli,
    paths: &[PathBuf],
    orders: Option<Vec<usize>>,
    atoms: usize,
    n: usize,
) -> RunResult {
    let fs = obtain_kernels::<K>(cli, paths, orders, atoms)?;
    let r = verify_product_identity(&fs, n).map_err(config_err)?;
    let passed = if K::EXACT {
        r.exact
    } else {
        r.max_abs_error <= cli.tolerance
    };
    let report = VerifyReport {
        schema_version: report::SCHEMA_VERSION,
        command: "verify-product".into(),
        mode: cli.mode.name().into(),
        terms: r.terms,
        checked_assignments: r.checked_assignments,
        max_abs_error: r.max_abs_error,
        exact: r.exact,
        verdict: if passed { "holds" } else { "violated" }.into(),
    };
    emit(&cli.out, &report.to_json()).map_err(config_err)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verdict(report.to_json()))
    }
}

fn verify_expectation<K: Scalar>(
    cli: &Cli,
    paths: &[PathBuf],
    orders: Option<Vec<usize>>,
    atoms: usize,
    n: usize,
) -> RunResult {
    let fs = obtain_kernels::<K>(cli, paths, orders, atoms)?;
    let (diagram, closed_terms) = expected_product_unnormalized(&fs, n).map_err(config_err)?;
    let oracle = exact_expectation_unnormalized(&fs, n).map_err(config_err)?;
    let total_order: usize = fs.iter().map(|f| f.order()).sum();
    let diff = (diagram - oracle).abs();
    let exact = diff.is_zero();
    let max_abs_error = diff.to_f64() * (n as f64).powf(-(total_order as f64) / 2.0);
    let passed = if K::EXACT {
        exact
    } else {
        max_abs_error <= cli.tolerance
    };
    let base = fs[0].space().len();
    let report = VerifyReport {
        schema_version: report::SCHEMA_VERSION,
        command: "verify-expectation".into(),
        mode: cli.mode.name().into(),
        terms: closed_terms,
        checked_assignments: base.pow(n as u32),
        max_abs_error,
        exact,
        verdict: if passed { "holds" } else { "violated" }.into(),
    };
    emit(&cli.out, &report.to_json()).map_err(config_err)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verdict(report.to_json()))
    }
}

fn moments(
    cli: &Cli,
    kernel_path: &Path,
    n: usize,
    m_max: usize,
    samples: u64,
    eta: Option<f64>,
    a_const: Option<f64>,
) -> RunResult {
    require_file(kernel_path)?;
    let file = KernelFile::load(kernel_path).map_err(config_err)?;
    let f: Kernel<f64> = file.to_kernel().map_err(config_err)?;
    let k = f.order();
    let sigma = f.l2_norm();
    let mut rows = Vec::new();
    for m in 1..=m_max {
        let mc = mc_moment(&f, n, m, samples, cli.seed).map_err(config_err)?;
        let exact = match cli.mode {
            Mode::Rational => {
                let fr: Kernel<Rational> = file.to_kernel().map_err(config_err)?;
                let copies = vec![fr; 2 * m];
                let (raw, _) = expected_product_unnormalized(&copies, n).map_err(config_err)?;
                raw.to_f64() * (n as f64).powf(-((2 * m * k) as f64) / 2.0)
            }
            Mode::Float => {
                let copies = vec![f.clone(); 2 * m];
                ustat_calculus::calculus::expected_product(&copies, n).map_err(config_err)?
            }
        };
        rows.push((m, mc, exact));
    }
    // The default eta makes kM <= eta n sigma^2 hold with equality; the
    // nudge keeps the float comparison from dropping the boundary row.
    let eta_for =
        |m: usize| eta.unwrap_or((k * m) as f64 / (n as f64 * sigma * sigma) * (1.0 + 1e-12));
    let a = a_const.unwrap_or_else(|| {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|&(m, _, exact)| (m as f64, exact))
            .collect();
        calibrate_constant(&pts, |mf| {
            let m = mf as usize;
            match ustat_moment_bound(k, m, sigma, n, eta_for(m), 1.0, None) {
                Applicability::Applicable(v) => v,
                _ => f64::NAN,
            }
        })
        .max(1.0)
    });
    let mut csv = Csv::new(&["M", "mc", "exact", "bound_2_3"]);
    csv.comment("command", "moments");
    csv.comment("kernel", kernel_path.display());
    csv.comment("n", n);
    csv.comment("k", k);
    csv.comment("sigma", fmt_f64(sigma));
    csv.comment("samples", samples);
    csv.comment("seed", cli.seed);
    csv.comment("mode", cli.mode.name());
    csv.comment(
        "A",
        format!(
            "{} ({})",
            fmt_f64(a),
            if a_const.is_some() { "user" } else { "calibrated" }
        ),
    );
    csv.comment(
        "C",
        format!("{} (paper-given)", fmt_f64(bounds::PROP_B_DEFAULT_C)),
    );
    csv.comment(
        "eta",
        eta.map(fmt_f64)
            .unwrap_or_else(|| "kM/(n sigma^2) per row".into()),
    );
    let mut violation = None;
    for (m, mc, exact) in rows {
        let bound = ustat_moment_bound(k, m, sigma, n, eta_for(m), a, None);
        if let Applicability::Applicable(b) = bound {
            if exact > b * (1.0 + 1e-9) {
                violation = Some(format!("M={m}: exact {exact} above bound {b}"));
            }
        }
        csv.row(vec![
            m.to_string(),
            fmt_f64(mc.mean),
            fmt_f64(exact),
            fmt_opt(bound.value()),
        ]);
    }
    emit(&cli.out, &csv.render()).map_err(config_err)?;
    match violation {
        None => Ok(()),
        Some(msg) => Err(Failure::Verdict(msg)),
    }
}

#[allow(clippy::too_many_arguments)]
fn tails(
    cli: &Cli,
    kernel_path: &Path,
    n: usize,
    u_grid: &str,
    samples: u64,
    a_const: Option<f64>,
    b_const: f64,
    c1: Option<f64>,
    c2: Option<f64>,
    c3: Option<f64>,
) -> RunResult {
    require_file(kernel_path)?;
    let file = KernelFile::load(kernel_path).map_err(config_err)?;
    let f: Kernel<f64> = file.to_kernel().map_err(config_err)?;
    let k = f.order();
    let sigma = f.l2_norm();
    let grid = parse_grid(u_grid).map_err(Failure::Config)?;
    let estimates = mc_tail(&f, n, &grid, samples, cli.seed).map_err(config_err)?;
    let bound_at = |u: f64, a: f64| -> Option<f64> {
        theorem3_bound(u, k, sigma, n, a, b_const, ExtensionReading::OnePlusB)
            .ok()
            .and_then(|r| r.value())
    };
    // Calibrate A against the resolved upper CIs when not supplied.
    let a = a_const.unwrap_or_else(|| {
        let pts: Vec<(f64, f64)> = estimates
            .iter()
            .filter(|t| t.p_hat > 0.0)
            .map(|t| (t.u, t.upper95))
            .collect();
        calibrate_constant(&pts, |u| bound_at(u, 1.0).unwrap_or(f64::NAN)).max(1.0)
    });
    let classical = k == 1 && c1.is_none() && c2.is_none() && c3.is_none();
    let cs = if classical {
        Some((2.0, 0.5, 1.0 / 3.0))
    } else {
        match (c1, c2, c3) {
            (Some(a), Some(b), Some(c)) => Some((a, b, c)),
            (None, None, None) => None,
            _ => {
                return Err(Failure::Config(
                    "supply all of --c1 --c2 --c3 or none".into(),
                ))
            }
        }
    };
    let mut csv = Csv::new(&["u", "p_hat", "ci", "bound_1_8", "bound_1_2"]);
    csv.comment("command", "tails");
    csv.comment("kernel", kernel_path.display());
    csv.comment("n", n);
    csv.comment("k", k);
    csv.comment("sigma", fmt_f64(sigma));
    csv.comment("samples", samples);
    csv.comment("seed", cli.seed);
    csv.comment(
        "A",
        format!(
            "{} ({})",
            fmt_f64(a),
            if a_const.is_some() { "user" } else { "calibrated" }
        ),
    );
    csv.comment("B", format!("{} (user)", fmt_f64(b_const)));
    match (classical, cs) {
        (true, _) => csv.comment("c1,c2,c3", "2, 1/2, 1/3 (paper-given, k = 1)"),
        (false, Some((x, y, z))) => csv.comment(
            "c1,c2,c3",
            format!("{}, {}, {} (user)", fmt_f64(x), fmt_f64(y), fmt_f64(z)),
        ),
        (false, None) => csv.comment(
            "c1,c2,c3",
            "unspecified for k >= 2; bound_1_2 column left empty",
        ),
    }
    let mut violation = None;
    for t in &estimates {
        let b18 = bound_at(t.u, a);
        if let Some(b) = b18 {
            if t.p_hat > 0.0 && t.upper95 > b * (1.0 + 1e-9) {
                violation = Some(format!(
                    "u={}: empirical upper CI {} above bound {}",
                    t.u, t.upper95, b
                ));
            }
        }
        let b12 = if classical {
            Some(bernstein_k1(t.u, sigma, n))
        } else {
            cs.and_then(|c| arcones_gine_bound(t.u, k, sigma, n, Some(c)).ok())
        };
        csv.row(vec![
            fmt_f64(t.u),
            fmt_f64(t.p_hat),
            fmt_f64(t.ci_halfwidth),
            fmt_opt(b18),
            fmt_opt(b12),
        ]);
    }
    emit(&cli.out, &csv.render()).map_err(config_err)?;
    match violation {
        None => Ok(()),
        Some(msg) => Err(Failure::Verdict(msg)),
    }
}

fn gaussian_tails(cli: &Cli, k: usize, sigma: f64, u_grid: &str) -> RunResult {
    if k == 0 {
        return Err(Failure::Config("k must be >= 1".into()));
    }
    let grid = parse_grid(u_grid).map_err(Failure::Config)?;
    let lower = verify_lower_bound_17(k, sigma, &grid).map_err(config_err)?;
    if lower.c_bar <= 0.0 {
        return Err(Failure::Verdict(format!(
            "lower-bound constant collapsed to {}",
            lower.c_bar
        )));
    }
    // calibrate the upper-envelope constant on the same grid
    let tails: Vec<(f64, f64)> = lower.points.iter().map(|&(u, t, _)| (u, t)).collect();
    let c_upper = calibrate_constant(&tails, |u| theorem1_bound(u, k, sigma, 1.0));
    let mut csv = Csv::new(&["u", "exact_tail", "bound_1_6", "lower_1_7_with_reported_Cbar"]);
    csv.comment("command", "gaussian-tails");
    csv.comment("k", k);
    csv.comment("sigma", fmt_f64(sigma));
    csv.comment("C", format!("{} (calibrated)", fmt_f64(c_upper)));
    csv.comment("Cbar", format!("{} (calibrated)", fmt_f64(lower.c_bar)));
    let mut violation = None;
    for &(u, tail, low) in &lower.points {
        let upper = theorem1_bound(u, k, sigma, c_upper);
        if upper < tail * (1.0 - 1e-9) || low > tail * (1.0 + 1e-9) {
            violation = Some(format!("u={u}: sandwich broken ({low} / {tail} / {upper})"));
        }
        csv.row(vec![
            fmt_f64(u),
            fmt_f64(tail),
            fmt_f64(upper),
            fmt_f64(low),
        ]);
    }
    emit(&cli.out, &csv.render()).map_err(config_err)?;
    match violation {
        None => Ok(()),
        Some(msg) => Err(Failure::Verdict(msg)),
    }
}

#[derive(serde::Deserialize)]
struct ParamsFile {
    k: usize,
    sigma: f64,
    #[serde(default)]
    n: Option<usize>,
    #[serde(default)]
    eta: Option<f64>,
    #[serde(default)]
    constants: BTreeMap<String, NamedConstant>,
}

impl ParamsFile {
    fn constant(&self, name: &str) -> Option<NamedConstant> {
        self.constants.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<NamedConstant, Failure> {
        self.constant(name).ok_or_else(|| {
            Failure::Config(format!(
                "constant {name:?} missing from the params file (the bound leaves it unspecified)"
            ))
        })
    }

    fn require_n(&self) -> Result<usize, Failure> {
        self.n
            .ok_or_else(|| Failure::Config("params file needs \"n\"".into()))
    }
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::PaperGiven => "paper-given",
        Provenance::User => "user",
        Provenance::Calibrated => "calibrated",
    }
}

fn bounds_table(cli: &Cli, which: &str, params_path: &Path, grid_text: &str) -> RunResult {
    require_file(params_path)?;
    let text = std::fs::read_to_string(params_path).map_err(config_err)?;
    let params: ParamsFile = serde_json::from_str(&text).map_err(config_err)?;
    let grid = parse_grid(grid_text).map_err(Failure::Config)?;
    let mut csv = Csv::new(&["x", "bound", "verdict"]);
    csv.comment("command", "bounds-table");
    csv.comment("which", which);
    csv.comment("k", params.k);
    csv.comment("sigma", fmt_f64(params.sigma));
    if let Some(n) = params.n {
        csv.comment("n", n);
    }
    for (name, c) in &params.constants {
        csv.comment(
            name,
            format!("{} ({})", fmt_f64(c.value), provenance_name(c.provenance)),
        );
    }
    match which {
        "1.2" => {
            let c1 = params.require("c1")?.value;
            let c2 = params.require("c2")?.value;
            let c3 = params.require("c3")?.value;
            let n = params.require_n()?;
            for &u in &grid {
                let b = arcones_gine_bound(u, params.k, params.sigma, n, Some((c1, c2, c3)))
                    .map_err(config_err)?;
                csv.row(vec![fmt_f64(u), fmt_f64(b), "holds".into()]);
            }
        }
        "1.6" => {
            let c = params.require("C")?.value;
            for &u in &grid {
                csv.row(vec![
                    fmt_f64(u),
                    fmt_f64(theorem1_bound(u, params.k, params.sigma, c)),
                    "holds".into(),
                ]);
            }
        }
        "1.7" => {
            let c_bar = params.require("Cbar")?.value;
            for &u in &grid {
                let r = u / params.sigma;
                let v = c_bar / (r.powf(1.0 / params.k as f64) + 1.0)
                    * (-r.powf(2.0 / params.k as f64) / 2.0).exp();
                csv.row(vec![fmt_f64(u), fmt_f64(v), "holds".into()]);
            }
        }
        "1.8" => {
            let a = params.require("A")?.value;
            let b = params.require("B")?.value;
            let n = params.require_n()?;
            for &u in &grid {
                let r = theorem3_bound(
                    u,
                    params.k,
                    params.sigma,
                    n,
                    a,
                    b,
                    ExtensionReading::OnePlusB,
                )
                .map_err(config_err)?;
                let verdict = match r {
                    Applicability::Applicable(_) => "holds",
                    Applicability::ExtendedSigmaBar { .. } => "extended-sigma-bar",
                    Applicability::NotApplicable => "not-applicable",
                };
                csv.row(vec![fmt_f64(u), fmt_opt(r.value()), verdict.into()]);
            }
        }
        "2.1" => {
            let a = params.constant("A").map(|c| c.value).unwrap_or(1.5);
            for &mf in &grid {
                let m = mf as usize;
                let exact = gaussian_moment_bound(params.k, m, params.sigma);
                let stirling = gaussian_moment_bound_stirling(params.k, m, params.sigma, a);
                csv.row(vec![
                    m.to_string(),
                    fmt_f64(exact),
                    if stirling >= exact {
                        "stirling-dominates".into()
                    } else {
                        "stirling-below".into()
                    },
                ]);
            }
        }
        "2.3" => {
            let a = params.require("A")?.value;
            let c = params.constant("C").map(|c| c.value);
            let n = params.require_n()?;
            let eta = params
                .eta
                .ok_or_else(|| Failure::Config("params file needs \"eta\"".into()))?;
            for &mf in &grid {
                let m = mf as usize;
                let r = ustat_moment_bound(params.k, m, params.sigma, n, eta, a, c);
                let verdict = match r {
                    Applicability::Applicable(_) => "holds",
                    Applicability::NotApplicable => "not-applicable",
                    Applicability::ExtendedSigmaBar { .. } => unreachable!(),
                };
                csv.row(vec![m.to_string(), fmt_opt(r.value()), verdict.into()]);
            }
        }
        other => {
            return Err(Failure::Config(format!(
                "unknown bound family {other:?}; expected 1.2, 1.6, 1.7, 1.8, 2.1 or 2.3"
            )))
        }
    }
    emit(&cli.out, &csv.render()).map_err(config_err)
}

fn count_diagrams(cli: &Cli, rows_text: &str) -> RunResult {
    let rows = parse_usize_list(rows_text).map_err(Failure::Config)?;
    if rows.is_empty() || rows.iter().any(|&k| k == 0) {
        return Err(Failure::Config("row sizes must be positive".into()));
    }
    let colored = colored_multi(&rows).len();
    let mut closed = 0usize;
    let mut per_copies: BTreeMap<usize, usize> = BTreeMap::new();
    visit_closed_multi(&rows, |d| {
        closed += 1;
        *per_copies.entry(d.permissible_copies().len()).or_default() += 1;
    });
    let pairing_count = pairings(&rows).len();
    let mut csv = Csv::new(&["class", "count"]);
    csv.comment("command", "count-diagrams");
    csv.comment("rows", rows_text);
    csv.row(vec!["colored_total".into(), colored.to_string()]);
    csv.row(vec!["closed_total".into(), closed.to_string()]);
    for (copies, count) in per_copies {
        csv.row(vec![format!("closed_p={}", copies / 2), count.to_string()]);
    }
    csv.row(vec!["pairings".into(), pairing_count.to_string()]);
    emit(&cli.out, &csv.render()).map_err(config_err)
}
