//! Growth classification of ancient solutions and the stationarity verdict:
//! subexponential growth in space and time should leave only the zero atom,
//! and every nonzero atom should show up as exponential growth somewhere.

use alloc::format;
use alloc::vec::Vec;

use libm::{ceil, log};

use crate::eigenfunction::construct_positive_eigenfunction;
use crate::error::{Error, Result};
use crate::graph::{decompose_balls, generate_family, BallDecomposition, Family};
use crate::heat::{synthesize_ancient, AncientSolution, MeasureSupport, SpectralMeasure};
use crate::laplacian::assemble_dirichlet;
use crate::spectrum::dirichlet_bottom_eigenvalue;

pub const DEFAULT_T_STAR: f64 = -1.0;
pub const DEFAULT_RATE_TOL: f64 = 0.02;
pub const DEFAULT_VERDICT_TOL: f64 = 1e-8;
/// Number of most negative grid times used by the temporal fit.
pub const TEMPORAL_TAIL: usize = 4;
/// The temporal grid must reach at least this far back.
pub const EARLIEST_REQUIRED: f64 = -10.0;
/// Sweeps never grow a truncation beyond this many vertices.
pub const SWEEP_VERTEX_CAP: usize = 200_000;
/// Nor beyond this multiple of the requested radius.
pub const SWEEP_RADIUS_FACTOR: usize = 8;

/// `{−40, −35, …, −10}`
pub fn default_time_grid() -> Vec<f64> {
    (0..7).map(|k| -40.0 + 5.0 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthClassification {
    /// Slope of `n ↦ ln max_{∂B_n} u(·, t*)` over the tail window.
    pub spatial_rate: f64,
    /// Slope of `−t ↦ ln u(y₀, t)` over the earliest grid times.
    pub temporal_rate: f64,
    pub spatial_subexponential: bool,
    pub temporal_subexponential: bool,
    pub t_star: f64,
    pub y0: usize,
    pub rate_tol: f64,
    pub spatial_window: (usize, usize),
}

/// Least-squares slope; `None` for fewer than two distinct abscissae.
fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn classify_growth(
    sol: &AncientSolution<'_>,
    balls: &BallDecomposition,
    t_star: f64,
    time_grid: &[f64],
    rate_tol: f64,
) -> Result<GrowthClassification> {
    if !(t_star < sol.horizon) {
        return Err(Error::OutOfDomain(format!("t* = {t_star} is not below the horizon {}", sol.horizon)));
    }
    if let Some(&t) = time_grid.iter().find(|&&t| !(t < sol.horizon)) {
        return Err(Error::OutOfDomain(format!("grid time {t} is not below the horizon {}", sol.horizon)));
    }
    if !time_grid.iter().any(|&t| t <= EARLIEST_REQUIRED) {
        return Err(Error::InvalidParam(format!("time grid must reach t <= {EARLIEST_REQUIRED}")));
    }
    if !(rate_tol > 0.0) {
        return Err(Error::InvalidParam(format!("rate tolerance must be positive, got {rate_tol}")));
    }

    let radius = sol.graph().truncation_radius().unwrap_or(balls.max_radius);
    let start = ceil(0.5 * radius as f64) as usize;
    let end = radius.saturating_sub(2);
    let mut spatial = Vec::new();
    for n in start..=end {
        let m = balls
            .sphere(n)
            .iter()
            .map(|&x| sol.value(x, t_star))
            .fold(f64::NEG_INFINITY, f64::max);
        spatial.push((n as f64, log(m)));
    }
    if spatial.len() < 3 {
        return Err(Error::DegenerateWindow(spatial.len()));
    }
    let spatial_rate = slope(&spatial).ok_or(Error::DegenerateWindow(spatial.len()))?;

    let mut times = time_grid.to_vec();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let y0 = sol.root;
    let temporal: Vec<(f64, f64)> =
        times.iter().take(TEMPORAL_TAIL).map(|&t| (-t, log(sol.value(y0, t)))).collect();
    let temporal_rate = slope(&temporal).ok_or(Error::DegenerateWindow(temporal.len()))?;

    Ok(GrowthClassification {
        spatial_rate,
        temporal_rate,
        spatial_subexponential: spatial_rate <= rate_tol,
        temporal_subexponential: temporal_rate <= rate_tol,
        t_star,
        y0,
        rate_tol,
        spatial_window: (start, end),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleVerdict {
    pub classification: GrowthClassification,
    pub measure_support: MeasureSupport,
    pub stationary: bool,
    pub harmonic: bool,
    /// `max |u(x, t_min) − u(x, t*)| / max u(·, t*)` over the domain.
    pub stationarity_gap: f64,
    /// `max |Δu(·, t*)| / max u(·, t*)` over the domain.
    pub harmonic_defect: f64,
    pub consistent_with_theorem: bool,
}

/// The logical content of the verdict, separated for testing.
pub fn is_consistent(
    c: &GrowthClassification,
    support: MeasureSupport,
    stationary: bool,
    harmonic: bool,
) -> bool {
    let both_sub = c.spatial_subexponential && c.temporal_subexponential;
    let conclusion = support == MeasureSupport::OnlyZero && stationary && harmonic;
    (!both_sub || conclusion)
        && (!support.has_positive() || !c.spatial_subexponential)
        && (!support.has_negative() || !c.temporal_subexponential)
}

/// Stationarity compares `u(·, t*)` against `u(·, −40)`, the start of the
/// default time grid.
pub fn render_verdict(
    sol: &AncientSolution<'_>,
    classification: &GrowthClassification,
    tol: f64,
) -> LiouvilleVerdict {
    render_verdict_at(sol, classification, default_time_grid()[0], tol)
}

/// As [`render_verdict`], comparing `u(·, t*)` against `u(·, t_early)`.
pub fn render_verdict_at(
    sol: &AncientSolution<'_>,
    classification: &GrowthClassification,
    t_early: f64,
    tol: f64,
) -> LiouvilleVerdict {
    let t_star = classification.t_star;
    let scale = sol.domain.iter().map(|&x| sol.value(x, t_star)).fold(0.0, f64::max);
    let (mut gap, mut defect) = (0.0_f64, 0.0_f64);
    for &x in &sol.domain {
        gap = gap.max((sol.value(x, t_early) - sol.value(x, t_star)).abs());
        defect = defect.max(sol.laplacian(x, t_star).abs());
    }
    let (gap, defect) = if scale > 0.0 { (gap / scale, defect / scale) } else { (gap, defect) };
    let support = sol.support();
    let stationary = gap <= tol;
    let harmonic = defect <= tol;
    LiouvilleVerdict {
        consistent_with_theorem: is_consistent(classification, support, stationary, harmonic),
        classification: classification.clone(),
        measure_support: support,
        stationary,
        harmonic,
        stationarity_gap: gap,
        harmonic_defect: defect,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub family: Family,
    pub degree: Option<usize>,
    pub lambdas: Vec<f64>,
    pub radius: usize,
    pub seed: u64,
    pub t_star: f64,
    pub time_grid: Vec<f64>,
    pub rate_tol: f64,
    pub tol: f64,
    /// Allow the radius to grow for slowly growing `λ > 0` rows.
    pub auto_radius: bool,
}

impl SweepSpec {
    pub fn new(family: Family, degree: Option<usize>, lambdas: Vec<f64>, radius: usize, seed: u64) -> Self {
        SweepSpec {
            family,
            degree,
            lambdas,
            radius,
            seed,
            t_star: DEFAULT_T_STAR,
            time_grid: default_time_grid(),
            rate_tol: DEFAULT_RATE_TOL,
            tol: DEFAULT_VERDICT_TOL,
            auto_radius: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    /// Truncation radius the row was finally evaluated at.
    pub radius: usize,
    /// Dirichlet bottom of the truncation interior at that radius.
    pub lambda1_reference: f64,
    pub outcome: core::result::Result<LiouvilleVerdict, Error>,
}

impl SweepRow {
    pub fn consistent(&self) -> bool {
        self.outcome.as_ref().is_ok_and(|v| v.consistent_with_theorem)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows that produced a verdict all agree with the Liouville dichotomy.
    pub fn all_consistent(&self) -> bool {
        self.rows.iter().all(|r| r.outcome.as_ref().map_or(true, |v| v.consistent_with_theorem))
    }
}

struct Truncated {
    graph: crate::graph::WeightedGraph,
    balls: BallDecomposition,
    lambda1: f64,
}

fn truncate(family: Family, degree: Option<usize>, radius: usize) -> Result<Truncated> {
    if !family.is_infinite() {
        return Err(Error::InvalidParam(format!("{family} is finite; sweeps need an infinite family")));
    }
    let graph = generate_family(family, radius, degree)?;
    let root = graph.truncation().map_or(0, |t| t.root);
    let balls = decompose_balls(&graph, root)?;
    let lambda1 = dirichlet_bottom_eigenvalue(&assemble_dirichlet(&graph, &balls, radius)?)?.eigenvalue;
    Ok(Truncated { graph, balls, lambda1 })
}

fn ball_size(family: Family, degree: Option<usize>, radius: usize) -> usize {
    let r = radius as u128;
    let size = match family {
        Family::LatticeZ => 2 * r + 1,
        Family::LatticeZ2 => 2 * r * r + 2 * r + 1,
        Family::TreeRegular => {
            let d = degree.unwrap_or(3) as u128;
            let mut total = 1u128;
            let mut shell = d;
            for _ in 0..radius {
                total = total.saturating_add(shell);
                shell = shell.saturating_mul(d - 1);
            }
            total
        }
        Family::Path | Family::Cycle => r,
    };
    usize::try_from(size).unwrap_or(usize::MAX)
}

fn evaluate(t: &Truncated, lambda: f64, spec: &SweepSpec) -> Result<LiouvilleVerdict> {
    let w = construct_positive_eigenfunction(&t.graph, &t.balls, lambda)?;
    let sol = synthesize_ancient(&t.graph, SpectralMeasure::single(w, t.lambda1), 0.0)?;
    let c = classify_growth(&sol, &t.balls, spec.t_star, &spec.time_grid, spec.rate_tol)?;
    let early = spec.time_grid.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(render_verdict_at(&sol, &c, early, spec.tol))
}

/// One single-atom ancient solution per grid value. Row failures (for
/// instance an inadmissible `λ`) are recorded in the row.
///
/// For `λ > 0` rows whose spatial rate falls below `3·rate_tol` the radius is
/// doubled, up to [`SWEEP_RADIUS_FACTOR`] times the requested radius and
/// [`SWEEP_VERTEX_CAP`] vertices.
pub fn dichotomy_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    let base = truncate(spec.family, spec.degree, spec.radius)?;
    let mut rows = Vec::with_capacity(spec.lambdas.len());
    for &lambda in &spec.lambdas {
        let mut radius = spec.radius;
        let mut outcome = evaluate(&base, lambda, spec);
        let mut lambda1 = base.lambda1;
        let grow = spec.auto_radius && lambda > 0.0;
        loop {
            let slow = matches!(&outcome, Ok(v) if v.classification.spatial_rate < 3.0 * spec.rate_tol);
            let next = radius * 2;
            if !grow
                || !slow
                || next > SWEEP_RADIUS_FACTOR * spec.radius
                || ball_size(spec.family, spec.degree, next) > SWEEP_VERTEX_CAP
            {
                break;
            }
            let bigger = truncate(spec.family, spec.degree, next)?;
            radius = next;
            lambda1 = bigger.lambda1;
            outcome = evaluate(&bigger, lambda, spec);
        }
        rows.push(SweepRow { lambda, radius, lambda1_reference: lambda1, outcome });
    }
    Ok(SweepTable { spec: spec.clone(), rows })
}
