//! Command line front end for the collapsekit library.
//!
//! Subcommands map onto the library layers: `example` writes gallery
//! systems to JSON, `collapse` searches a complex for a collapse
//! schedule, `compactify` samples an inverse-limit thread cloud, and
//! `check` runs the insulation, homotopy, and track verdicts.
//!
//! Machine-readable documents (JSON, CSV) go to stdout or to `--out`;
//! human summaries and error messages go to stderr. Exit codes keep
//! usage errors apart from mathematical verdicts:
//!
//! * 0: success, or a check that certified/passed
//! * 2: unknown names, malformed input, invalid parameters
//! * 3: a proven negative verdict or a concrete counterexample
//! * 4: inconclusive (budget exhausted, unproven, or not applicable)

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use collapsekit::complex::{
    apply_schedule, collapse_search, euler_characteristic, validate, CellComplex, CollapseStep,
    CollapseTarget, CubicalComplex, SearchOutcome, SearchStrategy, SimplicialComplex,
};
use collapsekit::gallery::{self, GallerySpec};
use collapsekit::geometry::{track_faithful_check, GeometryError, HomotopyEvaluator, Point};
use collapsekit::limitkit::{
    cloud_to_csv, fmt_sig, homotopy_negligibility_check, sample_limit, LimitError, SampleParams,
};
use collapsekit::system::{fully_insulated_check, InverseSystem, SystemVerdict};
use serde::Serialize;

const EXIT_USAGE: u8 = 2;
const EXIT_NEGATIVE: u8 = 3;
const EXIT_INCONCLUSIVE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "collapsekit",
    about = "Collapse schedules, retraction systems, and inverse-limit compactifications",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a gallery system by name and write it as JSON.
    Example {
        /// Gallery name, e.g. ray-endpoint, ray-bucket, tree-balls.
        name: String,
        /// Number of bonds to build (spaces run one deeper).
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Tree shape for the tree galleries: binary, path, star3.
        #[arg(long)]
        tree: Option<String>,
        /// Telescope preset: point, subdivision, doubling.
        #[arg(long)]
        preset: Option<String>,
        /// Ambient dimension where a gallery takes one.
        #[arg(long)]
        dim: Option<usize>,
        /// Write the system JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search a complex for a collapse schedule and verify it by replay.
    Collapse {
        /// Complex JSON file, simplicial or cubical.
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyArg::Exhaustive)]
        strategy: StrategyArg,
        /// "any-vertex" or a path to a complex JSON to stop at.
        #[arg(long, default_value = "any-vertex")]
        target: String,
        /// Seed for the greedy strategy's pair choices.
        #[arg(long)]
        seed: Option<u64>,
        /// Bound on schedule length for either strategy.
        #[arg(long)]
        step_limit: Option<usize>,
        /// Write the schedule JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the inverse limit of a system into a thread cloud.
    Compactify {
        /// Inverse system JSON file.
        input: PathBuf,
        /// Deepest level to descend from; defaults to the whole prefix.
        #[arg(long)]
        depth: Option<usize>,
        /// Grid spacing on the deepest level.
        #[arg(long, default_value_t = 0.125)]
        grid: f64,
        /// Stabilization window for the stable/candidate split.
        #[arg(long, default_value_t = 3)]
        window: usize,
        /// Coordinate tolerance for stabilization.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Stdout document when --out is absent: the remainder report
        /// or the cloud itself.
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Prefix for the output pair PREFIX.csv and PREFIX.remainder.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verdict-coded check over an inverse system.
    Check {
        /// Inverse system JSON file.
        input: PathBuf,
        #[arg(long, value_enum)]
        what: CheckKind,
        /// Depth to check to; defaults to the whole loaded prefix.
        #[arg(long)]
        depth: Option<usize>,
        /// Tolerance for the track comparison.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the report JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Greedy,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    /// Every sampled point sits in a stationary neighborhood.
    Insulation,
    /// The infinite-composite motion lands on stable threads.
    Homotopy,
    /// Each bond's own deformation is track-faithful.
    Tracks,
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Example {
            name,
            depth,
            tree,
            preset,
            dim,
            out,
        } => cmd_example(&name, depth, tree, preset, dim, out.as_deref()),
        Command::Collapse {
            input,
            strategy,
            target,
            seed,
            step_limit,
            out,
        } => cmd_collapse(&input, strategy, &target, seed, step_limit, out.as_deref()),
        Command::Compactify {
            input,
            depth,
            grid,
            window,
            tol,
            format,
            out,
        } => cmd_compactify(&input, depth, grid, window, tol, format, out.as_deref()),
        Command::Check {
            input,
            what,
            depth,
            tol,
            out,
        } => cmd_check(&input, what, depth, tol, out.as_deref()),
    };
    ExitCode::from(code)
}

/// Installs a bounded rayon pool when COLLAPSEKIT_THREADS is set.
fn configure_threads() {
    if let Ok(raw) = std::env::var("COLLAPSEKIT_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn fail(code: u8, message: impl Display) -> u8 {
    eprintln!("error: {message}");
    code
}

/// Writes `text` to `out` when given, otherwise to stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn cmd_example(
    name: &str,
    depth: usize,
    tree: Option<String>,
    preset: Option<String>,
    dim: Option<usize>,
    out: Option<&Path>,
) -> u8 {
    let spec = GallerySpec {
        name: name.to_string(),
        depth,
        dim,
        tree,
        preset,
    };
    let system = match gallery::build(&spec) {
        Ok(system) => system,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    eprintln!(
        "built {} with {} spaces and {} bonds",
        system.name,
        system.spaces.len(),
        system.bonds.len()
    );
    match emit(out, &to_pretty(&system)) {
        Ok(()) => 0,
        Err(e) => fail(EXIT_USAGE, e),
    }
}

/// A complex file is either kind; the two schemas share no required keys.
enum AnyComplex {
    Simplicial(SimplicialComplex),
    Cubical(CubicalComplex),
}

fn read_complex(path: &Path) -> Result<AnyComplex, String> {
    let raw = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    if let Ok(c) = serde_json::from_str::<SimplicialComplex>(&raw) {
        return Ok(AnyComplex::Simplicial(c));
    }
    match serde_json::from_str::<CubicalComplex>(&raw) {
        Ok(c) => Ok(AnyComplex::Cubical(c)),
        Err(e) => Err(format!(
            "{} is neither a simplicial nor a cubical complex: {e}",
            path.display()
        )),
    }
}

fn cmd_collapse(
    input: &Path,
    strategy: StrategyArg,
    target: &str,
    seed: Option<u64>,
    step_limit: Option<usize>,
    out: Option<&Path>,
) -> u8 {
    let complex = match read_complex(input) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    match complex {
        AnyComplex::Simplicial(c) => {
            let target = match parse_target(target, "simplicial", AnyComplex::into_simplicial) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, e),
            };
            run_collapse(&c, target, strategy, seed, step_limit, out)
        }
        AnyComplex::Cubical(c) => {
            let target = match parse_target(target, "cubical", AnyComplex::into_cubical) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, e),
            };
            run_collapse(&c, target, strategy, seed, step_limit, out)
        }
    }
}

impl AnyComplex {
    fn into_simplicial(self) -> Option<SimplicialComplex> {
        match self {
            AnyComplex::Simplicial(c) => Some(c),
            AnyComplex::Cubical(_) => None,
        }
    }

    fn into_cubical(self) -> Option<CubicalComplex> {
        match self {
            AnyComplex::Cubical(c) => Some(c),
            AnyComplex::Simplicial(_) => None,
        }
    }
}

fn parse_target<T: CellComplex>(
    target: &str,
    kind: &str,
    pick: fn(AnyComplex) -> Option<T>,
) -> Result<CollapseTarget<T>, String> {
    if target == "any-vertex" {
        return Ok(CollapseTarget::AnyVertex);
    }
    let loaded = read_complex(Path::new(target))?;
    match pick(loaded) {
        Some(t) => Ok(CollapseTarget::Subcomplex(t)),
        None => Err(format!(
            "target {target} is not a {kind} complex like the input"
        )),
    }
}

#[derive(Serialize)]
struct ReplaySummary {
    verified: bool,
    initial_cells: usize,
    final_cells: usize,
    euler: i64,
}

#[derive(Serialize)]
struct ScheduleDoc<C: Serialize> {
    found: bool,
    strategy: String,
    steps: Vec<CollapseStep<C>>,
    snapshots: Vec<usize>,
    replay: ReplaySummary,
}

#[derive(Serialize)]
struct NotFoundDoc {
    found: bool,
    proven: bool,
    strategy: String,
}

fn run_collapse<T>(
    complex: &T,
    target: CollapseTarget<T>,
    strategy: StrategyArg,
    seed: Option<u64>,
    step_limit: Option<usize>,
    out: Option<&Path>,
) -> u8
where
    T: CellComplex,
    T::Cell: Serialize + Display,
{
    let report = validate(complex);
    if !report.is_valid() {
        let first = &report.violations[0];
        return fail(
            EXIT_USAGE,
            format!(
                "input complex is not face-closed ({} violations; first: {first})",
                report.violations.len()
            ),
        );
    }
    let (strategy_name, strategy) = match strategy {
        StrategyArg::Greedy => ("greedy", SearchStrategy::Greedy),
        StrategyArg::Exhaustive => ("exhaustive", SearchStrategy::Exhaustive),
    };
    match collapse_search(complex, &target, strategy, seed, step_limit) {
        SearchOutcome::Found(schedule) => {
            let replayed = apply_schedule(complex, &schedule.steps);
            let (final_complex, _) = match replayed {
                Ok(pair) => pair,
                Err(e) => return fail(EXIT_USAGE, format!("replay failed: {e}")),
            };
            let euler_start = euler_characteristic(complex);
            let euler_end = euler_characteristic(&final_complex);
            let doc = ScheduleDoc {
                found: true,
                strategy: strategy_name.to_string(),
                snapshots: schedule.snapshots.clone(),
                replay: ReplaySummary {
                    verified: euler_start == euler_end,
                    initial_cells: complex.len(),
                    final_cells: final_complex.len(),
                    euler: euler_end,
                },
                steps: schedule.steps,
            };
            eprintln!(
                "collapsed in {} steps, {} cells down to {}, euler {}",
                doc.steps.len(),
                doc.replay.initial_cells,
                doc.replay.final_cells,
                doc.replay.euler
            );
            if !doc.replay.verified {
                return fail(
                    EXIT_USAGE,
                    format!(
                        "replay changed the euler characteristic from {euler_start} to {euler_end}"
                    ),
                );
            }
            match emit(out, &to_pretty(&doc)) {
                Ok(()) => 0,
                Err(e) => fail(EXIT_USAGE, e),
            }
        }
        SearchOutcome::NotFound { proven } => {
            let doc = NotFoundDoc {
                found: false,
                proven,
                strategy: strategy_name.to_string(),
            };
            if let Err(e) = emit(out, &to_pretty(&doc)) {
                return fail(EXIT_USAGE, e);
            }
            if proven {
                eprintln!("no collapse schedule exists for this target");
                EXIT_NEGATIVE
            } else {
                eprintln!("no schedule found, but the search was not exhaustive");
                EXIT_INCONCLUSIVE
            }
        }
    }
}

fn read_system(path: &Path) -> Result<InverseSystem, String> {
    let raw = fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let system: InverseSystem = serde_json::from_str(&raw)
        .map_err(|e| format!("{} is not an inverse system: {e}", path.display()))?;
    system
        .validate()
        .map_err(|e| format!("{} fails validation: {e}", path.display()))?;
    Ok(system)
}

fn cmd_compactify(
    input: &Path,
    depth: Option<usize>,
    grid: f64,
    window: usize,
    tol: f64,
    format: FormatArg,
    out: Option<&Path>,
) -> u8 {
    let system = match read_system(input) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    if grid <= 0.0 || tol <= 0.0 {
        return fail(EXIT_USAGE, "grid and tol must be positive");
    }
    let mut params = SampleParams::new(depth.unwrap_or_else(|| system.depth()), grid);
    params.window = window;
    params.tol = tol;
    let (cloud, report) = match sample_limit(&system, &params) {
        Ok(pair) => pair,
        Err(e) => return fail(EXIT_USAGE, e),
    };

    eprintln!(
        "{}: {} threads at depth {} (stable {}, remainder candidates {})",
        system.name,
        cloud.threads.len(),
        params.depth,
        report.stable.len(),
        report.candidates.len()
    );
    eprintln!("unstable regions: {}", report.components.len());
    let gap = |g: Option<f64>| g.map_or("n/a".to_string(), fmt_sig);
    eprintln!("density gap to stable set: {}", gap(report.gap_to_stable));
    eprintln!(
        "density gap to candidate set: {}",
        gap(report.gap_to_candidates)
    );
    eprintln!(
        "epsilon components (epsilon {}): {}",
        fmt_sig(report.epsilon),
        report.components.len()
    );

    let csv = cloud_to_csv(&system, &cloud, &report);
    let report_json = to_pretty(&report);
    match out {
        Some(prefix) => {
            let csv_path = prefix.with_extension("csv");
            let json_path = prefix.with_extension("remainder.json");
            if let Err(e) = emit(Some(&csv_path), &csv) {
                return fail(EXIT_USAGE, e);
            }
            match emit(Some(&json_path), &report_json) {
                Ok(()) => 0,
                Err(e) => fail(EXIT_USAGE, e),
            }
        }
        None => {
            match format {
                FormatArg::Csv => print!("{csv}"),
                FormatArg::Json => print!("{report_json}"),
            }
            0
        }
    }
}

#[derive(Serialize)]
struct TrackRow {
    bond: usize,
    passed: bool,
    worst: f64,
    samples_checked: usize,
    witness: Option<(Point, f64)>,
}

#[derive(Serialize)]
struct TracksDoc {
    depth: usize,
    tol: f64,
    passed: bool,
    bonds: Vec<TrackRow>,
}

fn cmd_check(
    input: &Path,
    what: CheckKind,
    depth: Option<usize>,
    tol: f64,
    out: Option<&Path>,
) -> u8 {
    let system = match read_system(input) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let depth = depth.unwrap_or_else(|| system.depth());
    if depth > system.depth() {
        return fail(
            EXIT_USAGE,
            format!("depth {depth} exceeds the loaded prefix {}", system.depth()),
        );
    }
    match what {
        CheckKind::Insulation => check_insulation(&system, depth, out),
        CheckKind::Homotopy => check_homotopy(&system, depth, out),
        CheckKind::Tracks => check_tracks(&system, depth, tol, out),
    }
}

fn check_insulation(system: &InverseSystem, depth: usize, out: Option<&Path>) -> u8 {
    let verdict = match fully_insulated_check(system, depth, 200) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let code = match &verdict {
        SystemVerdict::CertifiedToDepth {
            depth,
            points_checked,
            ..
        } => {
            eprintln!("certified to depth {depth} from {points_checked} sampled points");
            0
        }
        SystemVerdict::CounterexampleCandidate {
            witness, level, ..
        } => {
            eprintln!(
                "counterexample candidate at level {level}: {}",
                describe_point(witness)
            );
            EXIT_NEGATIVE
        }
        SystemVerdict::Inconclusive { reason } => {
            eprintln!("inconclusive: {reason}");
            EXIT_INCONCLUSIVE
        }
    };
    match emit(out, &to_pretty(&verdict)) {
        Ok(()) => code,
        Err(e) => fail(EXIT_USAGE, e),
    }
}

fn check_homotopy(system: &InverseSystem, depth: usize, out: Option<&Path>) -> u8 {
    let t_grid = [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0];
    let report = match homotopy_negligibility_check(system, depth, &t_grid, 40) {
        Ok(r) => r,
        Err(LimitError::MissingHomotopy { bond, detail }) => {
            eprintln!("inconclusive: bond {bond} carries no track structure ({detail})");
            return EXIT_INCONCLUSIVE;
        }
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let code = if report.passed {
        eprintln!(
            "homotopy contract holds over {} threads and {} times",
            report.threads_checked,
            report.t_grid.len()
        );
        0
    } else {
        if let Some(w) = &report.motion_lands_stable.witness {
            eprintln!(
                "motion fails to land stable (worst {}): {w}",
                fmt_sig(report.motion_lands_stable.worst)
            );
        }
        if let Some(w) = &report.bond_commutation.witness {
            eprintln!(
                "bond commutation fails (worst {}): {w}",
                fmt_sig(report.bond_commutation.worst)
            );
        }
        for b in report.bond_tracks.iter().filter(|b| !b.passed) {
            eprintln!(
                "bond {} tracks not faithful (worst {})",
                b.bond,
                fmt_sig(b.worst)
            );
        }
        EXIT_NEGATIVE
    };
    match emit(out, &to_pretty(&report)) {
        Ok(()) => code,
        Err(e) => fail(EXIT_USAGE, e),
    }
}

fn check_tracks(system: &InverseSystem, depth: usize, tol: f64, out: Option<&Path>) -> u8 {
    let ts = [0.125, 0.25, 0.5, 0.75, 0.875];
    let mut rows = Vec::new();
    for i in 1..=depth {
        let samples = strided(system.space(i).grid(0.125), 64);
        let h = HomotopyEvaluator::new(system.bonds[i - 1].clone());
        let report = match track_faithful_check(system.space(i - 1), &h, &samples, &ts, tol) {
            Ok(r) => r,
            Err(GeometryError::Unsupported { map, point }) => {
                eprintln!("inconclusive: bond {i} has no track structure ({map} at {point})");
                return EXIT_INCONCLUSIVE;
            }
            Err(e) => return fail(EXIT_USAGE, format!("bond {i}: {e}")),
        };
        rows.push(TrackRow {
            bond: i,
            passed: report.passed,
            worst: report.worst,
            samples_checked: report.samples_checked,
            witness: report.witness,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    let code = if passed {
        eprintln!("all {depth} bonds are track-faithful within {}", fmt_sig(tol));
        0
    } else {
        for row in rows.iter().filter(|r| !r.passed) {
            let place = row
                .witness
                .as_ref()
                .map(|(p, t)| format!(" at {} with t {}", describe_point(p), fmt_sig(*t)))
                .unwrap_or_default();
            eprintln!(
                "bond {} breaks track-faithfulness (worst {}){place}",
                row.bond,
                fmt_sig(row.worst)
            );
        }
        EXIT_NEGATIVE
    };
    let doc = TracksDoc {
        depth,
        tol,
        passed,
        bonds: rows,
    };
    match emit(out, &to_pretty(&doc)) {
        Ok(()) => code,
        Err(e) => fail(EXIT_USAGE, e),
    }
}

fn strided(points: Vec<Point>, budget: usize) -> Vec<Point> {
    if points.len() <= budget {
        return points;
    }
    let stride = points.len().div_ceil(budget);
    points.into_iter().step_by(stride).collect()
}

/// Short human rendering of a point for summary lines.
fn describe_point(p: &Point) -> String {
    match p {
        Point::Scalar { x } => format!("x = {}", fmt_sig(*x)),
        Point::Vector { coords } => {
            let parts: Vec<String> = coords.iter().map(|c| fmt_sig(*c)).collect();
            format!("({})", parts.join(", "))
        }
        other => format!("{other:?}"),
    }
}
