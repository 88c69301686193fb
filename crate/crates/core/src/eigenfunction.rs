//! Positive generalized eigenfunctions `Δw = λw` on ball truncations and
//! their growth along the balls `B_n(x₀)`.

use alloc::vec::Vec;

use libm::log;

use crate::error::{Error, Result};
use crate::graph::{BallDecomposition, GeometryCertificate, WeightedGraph};
use crate::laplacian::{assemble_dirichlet, laplacian_at, VertexFunction};
use crate::spectrum::dirichlet_bottom_eigenvalue;

/// Maximum residual `|Δw − λw| / max w` accepted from the boundary-value solve.
pub const DEFAULT_CONSTRUCTION_TOL: f64 = 1e-10;
/// Distance kept above `−λ₁^D` before a solve is attempted.
pub const ADMISSIBILITY_MARGIN: f64 = 1e-6;
/// Threshold on `max w / min w − 1` separating constant from non-constant.
pub const NON_CONSTANT_TOL: f64 = 1e-8;
/// Slack on the asymptotic rate comparisons.
pub const DEFAULT_RATE_SLACK: f64 = 0.05;
/// Local residual accepted by [`verify_zero_propagation`].
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    StrictlyPositive,
    IdenticallyZero,
    Indefinite,
}

impl Positivity {
    pub fn classify(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut all_zero, mut all_positive) = (true, true);
        for v in values {
            all_zero &= v == 0.0;
            all_positive &= v > 0.0;
        }
        if all_zero {
            Positivity::IdenticallyZero
        } else if all_positive {
            Positivity::StrictlyPositive
        } else {
            Positivity::Indefinite
        }
    }
}

/// A solution of `Δw = λw` on the interior of a truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    pub lambda: f64,
    /// Defined on every vertex; `w(root) = 1` for constructed eigenfunctions.
    pub values: VertexFunction,
    /// `max_interior |Δw − λw| / max w`.
    pub residual: f64,
    pub positivity: Positivity,
    pub root: usize,
    /// Vertices where the equation holds, in id order.
    pub interior: Vec<usize>,
}

impl Eigenfunction {
    /// Wraps a field as a candidate eigenfunction, measuring its residual.
    pub fn from_values(
        g: &WeightedGraph,
        lambda: f64,
        values: VertexFunction,
        root: usize,
        mut interior: Vec<usize>,
    ) -> Result<Self> {
        values.check_domain(g)?;
        if root >= g.vertex_count() {
            return Err(Error::UnknownVertex(root));
        }
        interior.sort_unstable();
        let residual = scaled_residual(g, lambda, values.values(), &interior);
        let positivity = Positivity::classify(interior.iter().map(|&x| values[x]));
        Ok(Eigenfunction { lambda, values, residual, positivity, root, interior })
    }

    pub fn value(&self, x: usize) -> f64 {
        self.values[x]
    }

    pub fn max_value(&self) -> f64 {
        self.values.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max w / min w` over the interior exceeds `1 + NON_CONSTANT_TOL`.
    pub fn is_non_constant(&self) -> bool {
        let (lo, hi) = self.interior.iter().map(|&x| self.values[x]).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        );
        lo > 0.0 && hi / lo > 1.0 + NON_CONSTANT_TOL
    }
}

fn scaled_residual(g: &WeightedGraph, lambda: f64, w: &[f64], interior: &[usize]) -> f64 {
    let scale = w.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    interior
        .iter()
        .map(|&x| (laplacian_at(g, w, x) - lambda * w[x]).abs())
        .fold(0.0, f64::max)
        / scale
}

/// `|Δw(x) − λw(x)|` relative to the magnitude of the terms that enter it,
/// maximized over the interior. Insensitive to the overall scale and to the
/// dynamic range of `w`.
pub fn local_residual(g: &WeightedGraph, lambda: f64, w: &[f64], interior: &[usize]) -> f64 {
    interior
        .iter()
        .map(|&x| {
            let m = g.measure(x);
            let mut magnitude = (g.weighted_degree(x) / m + lambda.abs()) * w[x].abs();
            for nb in g.neighbors(x) {
                magnitude += nb.weight / m * w[nb.vertex].abs();
            }
            let r = (laplacian_at(g, w, x) - lambda * w[x]).abs();
            if magnitude > 0.0 {
                r / magnitude
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

pub fn construct_positive_eigenfunction(
    g: &WeightedGraph,
    balls: &BallDecomposition,
    lambda: f64,
) -> Result<Eigenfunction> {
    construct_positive_eigenfunction_with(g, balls, lambda, DEFAULT_CONSTRUCTION_TOL)
}

/// Solves `Δw = λw` on `B_{N−1}(x₀)` with `w ≡ 1` on `∂B_N`, then rescales so
/// that `w(x₀) = 1`.
///
/// For `λ < 0` the Dirichlet bottom `λ₁^D(B_{N−1})` is computed first and
/// `λ ≥ −λ₁^D + ADMISSIBILITY_MARGIN` is required. A nonpositive pivot or a
/// nonpositive interior value is reported as [`Error::NotAdmissible`].
pub fn construct_positive_eigenfunction_with(
    g: &WeightedGraph,
    balls: &BallDecomposition,
    lambda: f64,
    tol: f64,
) -> Result<Eigenfunction> {
    let radius = match g.truncation_radius() {
        Some(r) if r >= 3 => r,
        _ => return Err(Error::RadiusTooSmall),
    };
    if !lambda.is_finite() {
        return Err(Error::InvalidParam("lambda must be finite".into()));
    }
    let op = assemble_dirichlet(g, balls, radius)?;
    let mut threshold = f64::NEG_INFINITY;
    if lambda < 0.0 {
        let bottom = dirichlet_bottom_eigenvalue(&op)?.eigenvalue;
        threshold = -bottom + ADMISSIBILITY_MARGIN;
        if lambda < threshold {
            return Err(Error::NotAdmissible { lambda, threshold });
        }
    }
    let factors =
        op.factor_shifted(lambda).map_err(|_| Error::NotAdmissible { lambda, threshold })?;
    // M(−Δ_D + λ) w = (weight into the boundary) · 1
    let interior_values = factors.solve(op.boundary_weight());

    let mut values = alloc::vec![1.0; g.vertex_count()];
    for (&x, &v) in op.interior().iter().zip(&interior_values) {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NotAdmissible { lambda, threshold });
        }
        values[x] = v;
    }
    let at_root = values[balls.root];
    for v in &mut values {
        *v /= at_root;
    }
    let w = Eigenfunction::from_values(
        g,
        lambda,
        VertexFunction::new(values),
        balls.root,
        op.interior().to_vec(),
    )?;
    if w.residual > tol {
        return Err(Error::SolveFailure(alloc::format!(
            "residual {:e} above tolerance {:e}",
            w.residual,
            tol
        )));
    }
    Ok(w)
}

/// Checks the zero/positive dichotomy for a nonnegative eigenfunction: if
/// some interior value is `≤ tol`, all of them must be.
///
/// Fields whose local residual (see [`local_residual`]) exceeds `tol` are
/// rejected with [`Error::NotAnEigenfunction`].
pub fn verify_zero_propagation(g: &WeightedGraph, w: &Eigenfunction) -> Result<bool> {
    verify_zero_propagation_with(g, w, DEFAULT_VERIFY_TOL)
}

pub fn verify_zero_propagation_with(g: &WeightedGraph, w: &Eigenfunction, tol: f64) -> Result<bool> {
    w.values.check_domain(g)?;
    let values = w.values.values();
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidParam("eigenfunction has negative values".into()));
    }
    let residual = local_residual(g, w.lambda, values, &w.interior);
    if residual > tol {
        return Err(Error::NotAnEigenfunction { residual, tol });
    }
    let some_zero = w.interior.iter().any(|&x| values[x] <= tol);
    let all_zero = w.interior.iter().all(|&x| values[x] <= tol);
    Ok(!some_zero || all_zero)
}

/// `M_n = max_{B_n(x₀)} w` and the growth rates over a tail window.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile {
    pub root: usize,
    /// `M_n` for `n = 0..=radius`.
    pub m: Vec<f64>,
    /// `M_{n+1}/M_n` for `n = 0..radius`.
    pub ratios: Vec<f64>,
    pub rate_upper: f64,
    pub rate_lower: f64,
    pub tail_start: usize,
    /// Last radius in the tail window (inclusive).
    pub tail_end: usize,
}

impl GrowthProfile {
    pub fn radius(&self) -> usize {
        self.m.len() - 1
    }

    /// `ln M_n / n` for `n` in the tail window.
    pub fn tail_rates(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.tail_start..=self.tail_end).map(|n| (n, log(self.m[n]) / n as f64))
    }
}

/// Exact ball maxima of `w` with rates over `[⌈tail_fraction·N⌉, N − 2]`.
pub fn growth_profile(
    w: &Eigenfunction,
    balls: &BallDecomposition,
    tail_fraction: f64,
) -> Result<GrowthProfile> {
    if balls.root != w.root {
        return Err(Error::InvalidParam("balls are not rooted at the eigenfunction root".into()));
    }
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidParam("tail_fraction must lie in (0, 1)".into()));
    }
    let radius = balls.max_radius;
    let mut m = Vec::with_capacity(radius + 1);
    let mut running = f64::NEG_INFINITY;
    for n in 0..=radius {
        for &x in balls.sphere(n) {
            running = running.max(w.value(x));
        }
        m.push(running);
    }
    let ratios: Vec<f64> = m.windows(2).map(|p| p[1] / p[0]).collect();

    let tail_start = libm::ceil(tail_fraction * radius as f64).max(1.0) as usize;
    let tail_end = radius.saturating_sub(2);
    if tail_start > tail_end {
        return Err(Error::DegenerateWindow(0));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in tail_start..=tail_end {
        let r = log(m[n]) / n as f64;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(GrowthProfile {
        root: w.root,
        m,
        ratios,
        rate_upper: hi,
        rate_lower: lo,
        tail_start,
        tail_end,
    })
}

/// Comparison of a growth profile with the lower ratio bound
/// `(c₀³ + λ)/c₀³` and the one-step upper bound `c₀²(λ + c₀³)`.
///
/// The upper constant is derived here from the eigen-equation: for
/// `w > 0`, `Σ_y (w_xy/m_x) w(y) = (λ + Σ_y w_xy/m_x) w(x) ≤ (λ + c₀³) w(x)`
/// and every term is at least `w(y)/c₀²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthBoundReport {
    pub lambda: f64,
    pub c0: f64,
    pub slack: f64,
    /// `(c₀³ + λ)/c₀³`, present when `λ > 0` and `w` is non-constant.
    pub lower_ratio_bound: Option<f64>,
    pub lower_bound: Option<f64>,
    /// `c₀²(λ + c₀³)`.
    pub upper_ratio_bound: f64,
    pub upper_bound: f64,
    pub lower_pass: Option<bool>,
    pub upper_pass: bool,
    /// Radii `n` with `M_{n+1}/M_n` outside the ratio bounds.
    pub ratio_violations: Vec<usize>,
}

impl GrowthBoundReport {
    pub fn passed(&self) -> bool {
        self.lower_pass.unwrap_or(true) && self.upper_pass && self.ratio_violations.is_empty()
    }

    /// Whether the single ratio `M_{n+1}/M_n` sits within the bounds.
    pub fn ratio_within(&self, ratio: f64) -> bool {
        ratio <= self.upper_ratio_bound && self.lower_ratio_bound.is_none_or(|lo| ratio >= lo)
    }
}

pub fn check_growth_bounds(
    profile: &GrowthProfile,
    lambda: f64,
    cert: &GeometryCertificate,
) -> Result<GrowthBoundReport> {
    check_growth_bounds_with(profile, lambda, cert, DEFAULT_RATE_SLACK)
}

pub fn check_growth_bounds_with(
    profile: &GrowthProfile,
    lambda: f64,
    cert: &GeometryCertificate,
    slack: f64,
) -> Result<GrowthBoundReport> {
    if !(lambda >= 0.0) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    let c0 = cert.c0;
    let c0_cubed = c0 * c0 * c0;
    let upper_ratio_bound = c0 * c0 * (lambda + c0_cubed);
    let upper_bound = log(upper_ratio_bound);

    let non_constant = match (profile.m.first(), profile.m.last()) {
        (Some(&a), Some(&b)) => b / a > 1.0 + NON_CONSTANT_TOL,
        _ => false,
    };
    let lower_ratio_bound = (lambda > 0.0 && non_constant).then(|| (c0_cubed + lambda) / c0_cubed);
    let lower_bound = lower_ratio_bound.map(log);

    let mut report = GrowthBoundReport {
        lambda,
        c0,
        slack,
        lower_ratio_bound,
        lower_bound,
        upper_ratio_bound,
        upper_bound,
        lower_pass: lower_bound.map(|lb| profile.rate_lower >= lb - slack),
        upper_pass: profile.rate_upper <= upper_bound + slack,
        ratio_violations: Vec::new(),
    };
    report.ratio_violations = profile
        .ratios
        .iter()
        .enumerate()
        .filter(|&(_, &r)| !report.ratio_within(r))
        .map(|(n, _)| n)
        .collect();
    Ok(report)
}

/// Largest `w(y)/w(x)` over edges with `x` interior, against `c₀²(λ + c₀³)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepReport {
    pub bound: f64,
    pub max_ratio: f64,
    pub edges_checked: usize,
    pub violations: Vec<(usize, usize, f64)>,
}

pub fn check_one_step_harnack(
    g: &WeightedGraph,
    w: &Eigenfunction,
    cert: &GeometryCertificate,
) -> OneStepReport {
    let c0 = cert.c0;
    let bound = c0 * c0 * (w.lambda + c0 * c0 * c0);
    let mut report = OneStepReport { bound, max_ratio: 0.0, edges_checked: 0, violations: Vec::new() };
    for &x in &w.interior {
        for nb in g.neighbors(x) {
            let ratio = w.value(nb.vertex) / w.value(x);
            report.edges_checked += 1;
            report.max_ratio = report.max_ratio.max(ratio);
            if !(ratio <= bound) {
                report.violations.push((x, nb.vertex, ratio));
            }
        }
    }
    report
}
