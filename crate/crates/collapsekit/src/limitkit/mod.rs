//! Truncated inverse-limit machinery: threads, the weighted product
//! metric, remainder sampling, Hausdorff distances between thread
//! clouds, and the staged homotopy that crushes a limit onto its base.
//!
//! Everything here works on a loaded prefix `C_0 ..= C_N`. A thread is
//! one coordinate per level; the deepest coordinate determines the rest
//! of a *descended* thread, while an *embedded* thread repeats a point
//! of some `C_k` upward and descends below it. Verdicts are stamped
//! with the depth they used.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    track_faithful_check, GeometryError, HomotopyEvaluator, MetricSpace, Point, RetractionMap,
};
use crate::system::{CachedMetric, InverseSystem, Space, SystemError};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("thread depths differ: {a} vs {b}")]
    DepthMismatch { a: usize, b: usize },
    #[error("bond {bond} carries no usable homotopy: {detail}")]
    MissingHomotopy { bond: usize, detail: String },
    #[error("empty thread cloud")]
    EmptyCloud,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One point per level of the loaded prefix; `coords[i]` lives in `C_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thread {
    pub coords: Vec<Point>,
}

impl Thread {
    /// Index of the deepest coordinate.
    pub fn depth(&self) -> usize {
        self.coords.len().saturating_sub(1)
    }

    pub fn top(&self) -> &Point {
        self.coords.last().expect("threads are never empty")
    }

    /// The prefix of the thread up to `depth`.
    pub fn truncated(&self, depth: usize) -> Thread {
        Thread {
            coords: self.coords[..=depth.min(self.depth())].to_vec(),
        }
    }
}

/// Largest gap in the matching conditions: the maximum over levels of
/// the distance between `r_i(x_i)` and `x_{i-1}`. Zero for threads
/// built by descending the bonds.
pub fn consistency_defect(system: &InverseSystem, thread: &Thread) -> Result<f64, LimitError> {
    let n = thread.depth();
    require_depth(system, n)?;
    let mut worst = 0.0_f64;
    for i in 1..=n {
        let down = system.bonds[i - 1].eval(&thread.coords[i])?;
        worst = worst.max(system.space(i - 1).dist(&down, &thread.coords[i - 1]));
    }
    Ok(worst)
}

/// Start index of the suffix of coordinates that has stopped moving:
/// the smallest `i` such that every consecutive pair from `i` up is
/// within `tol`.
pub fn stabilization_index(system: &InverseSystem, thread: &Thread, tol: f64) -> usize {
    let n = thread.depth();
    let mut idx = n;
    for i in (0..n).rev() {
        if system.space(i + 1).dist(&thread.coords[i], &thread.coords[i + 1]) <= tol {
            idx = i;
        } else {
            break;
        }
    }
    idx
}

/// Whether the top `window` coordinates agree within `tol`. Threads
/// shorter than the window never qualify.
pub fn is_stable(system: &InverseSystem, thread: &Thread, window: usize, tol: f64) -> bool {
    let n = thread.depth();
    if window <= 1 {
        return true;
    }
    if n + 1 < window {
        return false;
    }
    stabilization_index(system, thread, tol) <= n + 1 - window
}

/// The thread of a point `x` of some level: constant at `x` from its
/// level up, descended through the bonds below it.
pub fn embed_thread(system: &InverseSystem, x: &Point, depth: usize) -> Result<Thread, LimitError> {
    require_depth(system, depth)?;
    let level = system
        .level_of(x)
        .ok_or_else(|| SystemError::Mismatch("point lies in no loaded space".into()))?;
    if level > depth {
        return Err(SystemError::IndexOutOfRange {
            i: level,
            j: depth,
            depth: system.depth(),
        }
        .into());
    }
    let mut coords = vec![x.clone(); depth + 1];
    for i in (0..level).rev() {
        coords[i] = system.bonds[i].eval(&coords[i + 1])?;
    }
    Ok(Thread { coords })
}

/// The thread determined by a point of `C_depth`: that point on top,
/// bond images all the way down.
pub fn thread_from_top(
    system: &InverseSystem,
    top: &Point,
    depth: usize,
) -> Result<Thread, LimitError> {
    require_depth(system, depth)?;
    let mut coords = vec![top.clone()];
    for i in (0..depth).rev() {
        let down = system.bonds[i].eval(&coords[0])?;
        coords.insert(0, down);
    }
    Ok(Thread { coords })
}

/// Weighted product metric `sum_i 2^{-i} min(d_i, 1)` over the levels;
/// the cap makes the tail summable and truncation errors explicit.
pub fn product_metric(
    system: &InverseSystem,
    a: &Thread,
    b: &Thread,
) -> Result<f64, LimitError> {
    if a.depth() != b.depth() {
        return Err(LimitError::DepthMismatch {
            a: a.depth(),
            b: b.depth(),
        });
    }
    require_depth(system, a.depth())?;
    let levels = level_metrics(system, a.depth());
    Ok(product_dist(&levels, a, b))
}

fn level_metrics(system: &InverseSystem, depth: usize) -> Vec<CachedMetric<'_>> {
    (0..=depth).map(|i| CachedMetric::new(system.space(i))).collect()
}

fn product_dist(levels: &[CachedMetric<'_>], a: &Thread, b: &Thread) -> f64 {
    levels
        .iter()
        .zip(a.coords.iter().zip(&b.coords))
        .enumerate()
        .map(|(i, (metric, (x, y)))| 0.5f64.powi(i as i32) * metric.dist(x, y).min(1.0))
        .sum()
}

fn require_depth(system: &InverseSystem, depth: usize) -> Result<(), LimitError> {
    if depth > system.depth() {
        return Err(SystemError::IndexOutOfRange {
            i: depth,
            j: depth,
            depth: system.depth(),
        }
        .into());
    }
    Ok(())
}

/// Sampling controls for [`sample_limit`]: grid spacing on the deepest
/// level, the stabilization window, the coordinate tolerance, and the
/// chain spacing used to group remainder candidates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleParams {
    pub depth: usize,
    pub grid: f64,
    pub window: usize,
    pub tol: f64,
    pub epsilon: f64,
}

impl SampleParams {
    pub fn new(depth: usize, grid: f64) -> SampleParams {
        SampleParams {
            depth,
            grid,
            window: 3,
            tol: 1e-9,
            epsilon: 0.05,
        }
    }
}

/// A finite stand-in for the limit: descended threads over a grid of
/// the deepest loaded level.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThreadCloud {
    pub depth: usize,
    pub threads: Vec<Thread>,
    pub provenance: SampleParams,
}

/// Partition of a cloud into stable threads (they approximate embedded
/// points) and remainder candidates, with the summary numbers used by
/// the density and connectivity checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemainderReport {
    pub depth: usize,
    pub window: usize,
    pub tol: f64,
    pub epsilon: f64,
    /// Indices into the cloud, in grid order; the two lists partition it.
    pub stable: Vec<usize>,
    pub candidates: Vec<usize>,
    /// Per-thread start of the settled suffix, in grid order.
    pub stabilization: Vec<usize>,
    /// Greatest pairwise distance among candidates; zero below two.
    pub candidate_diameter: f64,
    /// Epsilon-chain components of the candidate set, each sorted, the
    /// list ordered by first member.
    pub components: Vec<Vec<usize>>,
    /// Greatest distance from any thread to the stable set; absent when
    /// the stable set is empty.
    pub gap_to_stable: Option<f64>,
    /// Greatest distance from any thread to the candidate set; absent
    /// when there are no candidates.
    pub gap_to_candidates: Option<f64>,
}

/// Descends a thread from every grid point of `C_depth` and splits the
/// cloud into stable threads and remainder candidates.
pub fn sample_limit(
    system: &InverseSystem,
    params: &SampleParams,
) -> Result<(ThreadCloud, RemainderReport), LimitError> {
    require_depth(system, params.depth)?;
    let tops = system.space(params.depth).grid(params.grid);
    let threads = tops
        .par_iter()
        .map(|top| thread_from_top(system, top, params.depth))
        .collect::<Result<Vec<Thread>, LimitError>>()?;

    let stabilization: Vec<usize> = threads
        .par_iter()
        .map(|t| stabilization_index(system, t, params.tol))
        .collect();
    let mut stable = Vec::new();
    let mut candidates = Vec::new();
    for (k, t) in threads.iter().enumerate() {
        let ok = t.depth() + 1 >= params.window
            && stabilization[k] + params.window <= t.depth() + 1;
        if ok {
            stable.push(k);
        } else {
            candidates.push(k);
        }
    }

    let levels = level_metrics(system, params.depth);
    let dist = |i: usize, j: usize| product_dist(&levels, &threads[i], &threads[j]);

    let candidate_diameter = max_pairwise(&candidates, &dist);
    let components = chain_components(&candidates, params.epsilon, &dist);
    let gap_to_stable = directed_gap(threads.len(), &stable, &dist);
    let gap_to_candidates = directed_gap(threads.len(), &candidates, &dist);

    let report = RemainderReport {
        depth: params.depth,
        window: params.window,
        tol: params.tol,
        epsilon: params.epsilon,
        stable,
        candidates,
        stabilization,
        candidate_diameter,
        components,
        gap_to_stable,
        gap_to_candidates,
    };
    let cloud = ThreadCloud {
        depth: params.depth,
        threads,
        provenance: params.clone(),
    };
    Ok((cloud, report))
}

fn max_pairwise(indices: &[usize], dist: &(impl Fn(usize, usize) -> f64 + Sync)) -> f64 {
    indices
        .par_iter()
        .enumerate()
        .map(|(a, &i)| {
            indices[a + 1..]
                .iter()
                .map(|&j| dist(i, j))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Greatest distance from any of the `total` threads to the target set.
fn directed_gap(
    total: usize,
    target: &[usize],
    dist: &(impl Fn(usize, usize) -> f64 + Sync),
) -> Option<f64> {
    if target.is_empty() {
        return None;
    }
    Some(
        (0..total)
            .into_par_iter()
            .map(|i| {
                target
                    .iter()
                    .map(|&j| dist(i, j))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max),
    )
}

/// Union-find grouping of the candidate indices with links at spacing
/// `epsilon` or less.
fn chain_components(
    indices: &[usize],
    epsilon: f64,
    dist: &(impl Fn(usize, usize) -> f64 + Sync),
) -> Vec<Vec<usize>> {
    let n = indices.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let links: Vec<(usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            (a + 1..n)
                .filter(|&b| dist(indices[a], indices[b]) <= epsilon)
                .map(move |b| (a, b))
                .collect::<Vec<_>>()
        })
        .collect();
    for (a, b) in links {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[rb.max(ra)] = rb.min(ra);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for a in 0..n {
        let root = find(&mut parent, a);
        groups.entry(root).or_default().push(indices[a]);
    }
    groups.into_values().collect()
}

/// Symmetric Hausdorff distance between two clouds under the product
/// metric, after truncating the deeper one.
pub fn hausdorff(
    system: &InverseSystem,
    a: &ThreadCloud,
    b: &ThreadCloud,
) -> Result<f64, LimitError> {
    if a.threads.is_empty() || b.threads.is_empty() {
        return Err(LimitError::EmptyCloud);
    }
    let depth = a.depth.min(b.depth);
    require_depth(system, depth)?;
    let left: Vec<Thread> = a.threads.iter().map(|t| t.truncated(depth)).collect();
    let right: Vec<Thread> = b.threads.iter().map(|t| t.truncated(depth)).collect();
    let levels = level_metrics(system, depth);
    let directed = |from: &[Thread], to: &[Thread]| {
        from.par_iter()
            .map(|x| {
                to.iter()
                    .map(|y| product_dist(&levels, x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max)
    };
    Ok(directed(&left, &right).max(directed(&right, &left)))
}

/// The staged crush of the limit onto its base: time is cut into bands
/// `[2^{-i}, 2^{-i+1}]`, the band `i` runs the homotopy of bond `i` on
/// coordinate `i` and flattens everything above it onto the moving
/// point, and times below the resolution of the prefix leave the thread
/// alone. At `t = 1` every thread has been pressed into a constant
/// thread over `C_0`.
pub fn limit_homotopy(
    system: &InverseSystem,
    thread: &Thread,
    t: f64,
) -> Result<Thread, LimitError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(GeometryError::OutsideDomain(format!("homotopy time {t} outside [0, 1]")).into());
    }
    let n = thread.depth();
    require_depth(system, n)?;
    if t == 0.0 {
        return Ok(thread.clone());
    }
    let mut band = 1usize;
    while 0.5f64.powi(band as i32) > t {
        band += 1;
    }
    if band > n {
        return Ok(thread.clone());
    }
    let s = (t * 2.0f64.powi(band as i32) - 1.0).clamp(0.0, 1.0);
    let bond = &system.bonds[band - 1];
    let moving = HomotopyEvaluator::new(bond.clone())
        .eval(&thread.coords[band], s)
        .map_err(|e| missing_homotopy(band, bond, e))?;
    let mut coords = Vec::with_capacity(n + 1);
    coords.extend_from_slice(&thread.coords[..band]);
    coords.resize(n + 1, moving);
    Ok(Thread { coords })
}

fn missing_homotopy(bond: usize, map: &RetractionMap, e: GeometryError) -> LimitError {
    match e {
        GeometryError::Unsupported { .. } => LimitError::MissingHomotopy {
            bond,
            detail: format!("{map:?} has no track through {e}"),
        },
        other => other.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub passed: bool,
    pub worst: f64,
    pub tol: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BondTrackOutcome {
    /// Bond index `i` of `r_i: C_i -> C_{i-1}`.
    pub bond: usize,
    pub passed: bool,
    pub worst: f64,
    pub witness: Option<(Point, f64)>,
}

/// Combined verdict of [`homotopy_negligibility_check`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NegligibilityReport {
    pub depth: usize,
    pub threads_checked: usize,
    /// Times actually exercised: the input grid filtered to the prefix
    /// resolution (a band needs room for the window above it).
    pub t_grid: Vec<f64>,
    /// Every sampled thread lands on a stable thread at every positive
    /// time on the grid.
    pub motion_lands_stable: CheckOutcome,
    /// Outputs of the motion stay consistent threads.
    pub bond_commutation: CheckOutcome,
    /// Track-faithfulness of each bond's own homotopy.
    pub bond_tracks: Vec<BondTrackOutcome>,
    pub passed: bool,
}

/// Samples threads and times and verifies the three negligibility
/// properties of the staged crush: outputs stabilize, outputs stay
/// consistent, and each bond's tracks replay onto their own endpoints.
pub fn homotopy_negligibility_check(
    system: &InverseSystem,
    depth: usize,
    t_grid: &[f64],
    budget: usize,
) -> Result<NegligibilityReport, LimitError> {
    require_depth(system, depth)?;
    let tol = 1e-8;
    let window = 3usize;

    let tops = strided(system.space(depth).grid(0.125), budget.max(1));
    let threads = tops
        .par_iter()
        .map(|top| thread_from_top(system, top, depth))
        .collect::<Result<Vec<Thread>, LimitError>>()?;

    // Times finer than the loaded prefix can resolve would move only the
    // very top coordinates, where no window fits above the band.
    let floor = 0.5f64.powi((depth + 1).saturating_sub(window) as i32);
    let ts: Vec<f64> = t_grid
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t >= floor && t <= 1.0)
        .collect();

    let mut stable_worst = 0.0_f64;
    let mut stable_witness = None;
    let mut defect_worst = 0.0_f64;
    let mut defect_witness = None;
    for (k, thread) in threads.iter().enumerate() {
        for &t in &ts {
            let moved = limit_homotopy(system, thread, t)?;
            let spread = window_spread(system, &moved, window);
            if spread > stable_worst {
                stable_worst = spread;
                stable_witness = Some(format!("thread {k} at t = {t}"));
            }
            let defect = consistency_defect(system, &moved)?;
            if defect > defect_worst {
                defect_worst = defect;
                defect_witness = Some(format!("thread {k} at t = {t}"));
            }
        }
    }
    let motion_lands_stable = CheckOutcome {
        passed: stable_worst <= tol,
        worst: stable_worst,
        tol,
        witness: if stable_worst <= tol { None } else { stable_witness },
    };
    let bond_commutation = CheckOutcome {
        passed: defect_worst <= tol,
        worst: defect_worst,
        tol,
        witness: if defect_worst <= tol { None } else { defect_witness },
    };

    let track_ts = [0.125, 0.25, 0.5, 0.75, 0.875];
    let mut bond_tracks = Vec::new();
    for i in 1..=depth {
        let samples = strided(system.space(i).grid(0.125), budget.max(1));
        let h = HomotopyEvaluator::new(system.bonds[i - 1].clone());
        let report = track_faithful_check(system.space(i - 1), &h, &samples, &track_ts, 1e-9)
            .map_err(|e| missing_homotopy(i, &system.bonds[i - 1], e))?;
        bond_tracks.push(BondTrackOutcome {
            bond: i,
            passed: report.passed,
            worst: report.worst,
            witness: report.witness,
        });
    }

    let passed = motion_lands_stable.passed
        && bond_commutation.passed
        && bond_tracks.iter().all(|b| b.passed);
    Ok(NegligibilityReport {
        depth,
        threads_checked: threads.len(),
        t_grid: ts,
        motion_lands_stable,
        bond_commutation,
        bond_tracks,
        passed,
    })
}

/// Greatest distance among the top `window` coordinates.
fn window_spread(system: &InverseSystem, thread: &Thread, window: usize) -> f64 {
    let n = thread.depth();
    let lo = (n + 1).saturating_sub(window);
    let mut worst = 0.0_f64;
    for i in lo..n {
        worst = worst.max(system.space(i + 1).dist(&thread.coords[i], &thread.coords[i + 1]));
    }
    worst
}

fn strided(points: Vec<Point>, budget: usize) -> Vec<Point> {
    if points.len() <= budget {
        return points;
    }
    let stride = points.len().div_ceil(budget);
    points.into_iter().step_by(stride).collect()
}

/// Twelve significant digits, fixed point, trailing zeros trimmed; the
/// shared float format of summaries and CSV exports.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// CSV view of a cloud: one row per thread with its grid index,
/// stability class, settled-suffix start, candidate component, and the
/// per-level coordinates flattened by the chart of each space. Numeric
/// charts become numeric columns; complex and telescope charts become a
/// single `v:w;v:w` weight list per level.
pub fn cloud_to_csv(
    system: &InverseSystem,
    cloud: &ThreadCloud,
    report: &RemainderReport,
) -> String {
    let mut header = vec![
        "thread".to_string(),
        "stable".to_string(),
        "stabilization".to_string(),
        "class".to_string(),
    ];
    for i in 0..=cloud.depth {
        header.extend(level_headers(system.space(i), i));
    }
    let mut class_of = vec![String::new(); cloud.threads.len()];
    for (c, members) in report.components.iter().enumerate() {
        for &k in members {
            class_of[k] = c.to_string();
        }
    }
    let stable_set: std::collections::BTreeSet<usize> = report.stable.iter().copied().collect();
    let mut out = header.join(",");
    out.push('\n');
    for (k, thread) in cloud.threads.iter().enumerate() {
        let mut row = vec![
            k.to_string(),
            if stable_set.contains(&k) { "1" } else { "0" }.to_string(),
            report.stabilization[k].to_string(),
            class_of[k].clone(),
        ];
        for (i, coord) in thread.coords.iter().enumerate() {
            row.extend(level_values(system.space(i), coord));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn level_headers(space: &Space, i: usize) -> Vec<String> {
    match space {
        Space::Interval { .. } => vec![format!("x{i}")],
        Space::Star { .. } => vec![format!("arm{i}"), format!("s{i}")],
        Space::Cube { dim } => (0..*dim).map(|a| format!("x{i}_{a}")).collect(),
        Space::Region { region } => (0..region_dim(region))
            .map(|a| format!("x{i}_{a}"))
            .collect(),
        Space::Complex { .. } => vec![format!("point{i}")],
        Space::Telescope { .. } => {
            vec![format!("level{i}"), format!("height{i}"), format!("base{i}")]
        }
    }
}

fn level_values(space: &Space, p: &Point) -> Vec<String> {
    match (space, p) {
        (Space::Interval { .. }, Point::Scalar { x }) => vec![fmt_sig(*x)],
        (Space::Star { .. }, Point::Arm { arm, s }) => vec![arm.to_string(), fmt_sig(*s)],
        (Space::Cube { dim }, Point::Vector { coords }) => (0..*dim)
            .map(|a| fmt_sig(coords.get(a).copied().unwrap_or(0.0)))
            .collect(),
        (Space::Region { region }, Point::Vector { coords }) => (0..region_dim(region))
            .map(|a| fmt_sig(coords.get(a).copied().unwrap_or(0.0)))
            .collect(),
        (Space::Complex { .. }, _) => vec![weight_list(p)],
        (Space::Telescope { .. }, Point::Cylinder { level, base, height }) => {
            vec![level.to_string(), fmt_sig(*height), weight_list(base)]
        }
        _ => vec![format!("?{p:?}")],
    }
}

fn region_dim(region: &crate::geometry::ConvexRegion) -> usize {
    match region {
        crate::geometry::ConvexRegion::Ball { center, .. } => center.len(),
        crate::geometry::ConvexRegion::Segment { a, .. } => a.len(),
        crate::geometry::ConvexRegion::Polytope { facets } => {
            facets.first().map(|f| f.normal.len()).unwrap_or(2)
        }
    }
}

fn weight_list(p: &Point) -> String {
    match p.reduce_carrier() {
        Point::Simplicial { carrier, coords } => carrier
            .vertices()
            .iter()
            .zip(&coords)
            .map(|(v, w)| format!("{v}:{}", fmt_sig(*w)))
            .collect::<Vec<_>>()
            .join(";"),
        other => format!("?{other:?}"),
    }
}
