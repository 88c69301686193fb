//! Bottom of the spectrum of `−Δ` on `ℓ²(V, m)`, estimated from Dirichlet
//! eigenvalues of an exhaustion by balls.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;

use crate::dense::symmetric_eigen;
use crate::error::{Error, Result};
use crate::graph::{BallDecomposition, WeightedGraph};
use crate::laplacian::{assemble_dirichlet, DirichletOperator};

/// Residual tolerance for eigenpairs.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;
/// Convergence tolerance between successive exhaustion radii.
pub const DEFAULT_EXHAUSTION_TOL: f64 = 1e-4;
pub const DEFAULT_MAX_ITERATIONS: usize = 2000;
/// Above this many vertices the dense route is not used.
pub const DENSE_LIMIT: usize = 2000;

/// Smallest eigenpair of `−Δ_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletGroundState {
    pub eigenvalue: f64,
    /// Indexed by interior position; strictly positive with max-norm 1.
    pub eigenvector: Vec<f64>,
    /// `‖(−Δ_D)v − μv‖_m / ‖v‖_m` at exit.
    pub residual: f64,
    pub iterations: usize,
}

pub fn dirichlet_bottom_eigenvalue(op: &DirichletOperator) -> Result<DirichletGroundState> {
    dirichlet_bottom_eigenvalue_with(op, DEFAULT_EIGEN_TOL, DEFAULT_MAX_ITERATIONS)
}

/// Inverse iteration seeded with the all-ones vector.
///
/// With a nonempty boundary `−Δ_D` is a nonsingular M-matrix and is inverted
/// unshifted; each solve maps positive vectors to positive vectors, so every
/// iterate, and the returned Perron vector, is entrywise positive. Without a
/// boundary (the whole graph) the operator is singular and is shifted by one.
pub fn dirichlet_bottom_eigenvalue_with(
    op: &DirichletOperator,
    tol: f64,
    max_iterations: usize,
) -> Result<DirichletGroundState> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidParam("empty interior".into()));
    }
    let shift = if op.has_boundary() { 0.0 } else { 1.0 };
    let factors = op
        .factor_shifted(shift)
        .map_err(|p| Error::SolveFailure(format!("pivot {} at position {}", p.pivot, p.index)))?;
    let mass = op.mass();

    let mut v = vec![1.0; n];
    let mut residual = f64::INFINITY;
    for iteration in 1..=max_iterations {
        let rhs: Vec<f64> = v.iter().zip(mass).map(|(x, m)| x * m).collect();
        let mut next = factors.solve(&rhs);
        let scale = next.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::SolveFailure("inverse iteration produced a degenerate vector".into()));
        }
        for x in &mut next {
            *x /= scale;
        }
        v = next;

        let lap = op.apply(&v);
        let norm2: f64 = v.iter().zip(mass).map(|(x, m)| m * x * x).sum();
        let mu = -lap.iter().zip(&v).zip(mass).map(|((l, x), m)| m * l * x).sum::<f64>() / norm2;
        let res2: f64 = lap
            .iter()
            .zip(&v)
            .zip(mass)
            .map(|((l, x), m)| {
                let r = -l - mu * x;
                m * r * r
            })
            .sum();
        residual = sqrt(res2 / norm2);
        if residual <= tol {
            return Ok(DirichletGroundState {
                eigenvalue: mu.max(0.0),
                eigenvector: v,
                residual,
                iterations: iteration,
            });
        }
    }
    Err(Error::ConvergenceFailure { iterations: max_iterations, residual })
}

/// Dirichlet bottoms `λ₁^D(B_n)` along an exhaustion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEstimate {
    /// Last computed value; an upper bound for `λ₁(G)`.
    pub lambda1: f64,
    /// `(n, λ₁^D(B_n))`, `n = 2, ..., N − 1`.
    pub per_radius: Vec<(usize, f64)>,
    pub converged: bool,
    pub tol: f64,
    /// Limit of `a + b/(n + c)²` fitted through the last three values.
    /// A heuristic extrapolation, not a bound.
    pub extrapolated: Option<f64>,
}

impl SpectrumEstimate {
    /// Whether the per-radius sequence is nonincreasing up to `slack`
    /// (relative to the first value).
    pub fn is_monotone(&self, slack: f64) -> bool {
        let scale = self.per_radius.first().map_or(1.0, |&(_, v)| v.abs().max(f64::MIN_POSITIVE));
        self.per_radius.windows(2).all(|w| w[1].1 <= w[0].1 + slack * scale)
    }
}

/// `λ₁^D(B_n)` for `n = 2..N−1` where `N` is the truncation radius of `g`,
/// with `B_n` the interior and `∂B_{n+1}` the zero boundary.
pub fn estimate_lambda1_exhaustion(
    g: &WeightedGraph,
    balls: &BallDecomposition,
    tol: f64,
) -> Result<SpectrumEstimate> {
    estimate_lambda1_exhaustion_with(g, balls, tol, DEFAULT_EIGEN_TOL)
}

pub fn estimate_lambda1_exhaustion_with(
    g: &WeightedGraph,
    balls: &BallDecomposition,
    tol: f64,
    eigen_tol: f64,
) -> Result<SpectrumEstimate> {
    let radius = match g.truncation_radius() {
        Some(r) if r >= 3 => r,
        _ => return Err(Error::RadiusTooSmall),
    };
    if balls.max_radius < radius {
        return Err(Error::RadiusOutOfRange { radius, max: balls.max_radius });
    }
    let mut per_radius = Vec::with_capacity(radius - 2);
    for n in 2..radius {
        let op = assemble_dirichlet(g, balls, n + 1)?;
        let ground = dirichlet_bottom_eigenvalue_with(&op, eigen_tol, DEFAULT_MAX_ITERATIONS)?;
        per_radius.push((n, ground.eigenvalue));
    }
    let lambda1 = per_radius.last().map_or(0.0, |&(_, v)| v);
    let converged = match per_radius.as_slice() {
        [.., (_, a), (_, b)] => (a - b).abs() < tol,
        _ => false,
    };
    let extrapolated = extrapolate_inverse_square(&per_radius);
    Ok(SpectrumEstimate { lambda1, per_radius, converged, tol, extrapolated })
}

/// Fits `a + b/(n + c)²` through the last three points and returns `a`.
fn extrapolate_inverse_square(points: &[(usize, f64)]) -> Option<f64> {
    let [(n1, f1), (n2, f2), (n3, f3)] = points.get(points.len().checked_sub(3)?..)? else {
        return None;
    };
    let (n1, n2, n3) = (*n1 as f64, *n2 as f64, *n3 as f64);
    let d12 = f1 - f2;
    let d23 = f2 - f3;
    if !(d12 > 0.0 && d23 > 0.0) {
        return None;
    }
    let target = d12 / d23;
    let inv_sq = |n: f64, c: f64| 1.0 / ((n + c) * (n + c));
    let ratio = |c: f64| (inv_sq(n1, c) - inv_sq(n2, c)) / (inv_sq(n2, c) - inv_sq(n3, c));
    // ratio decreases in c, from +∞ at c = -n1 towards 1
    let mut lo = -n1 + 1e-9;
    let mut hi = 1e6;
    if !(ratio(hi) < target && ratio(lo) > target) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let b = d23 / (inv_sq(n2, c) - inv_sq(n3, c));
    Some(f3 - b * inv_sq(n3, c))
}

/// Smallest eigenvalue of `−Δ` on a finite graph (zero for every connected
/// graph, attained by constants).
pub fn bottom_of_spectrum_finite(g: &WeightedGraph) -> Result<f64> {
    let n = g.vertex_count();
    if n <= DENSE_LIMIT {
        // M^{1/2}(−Δ)M^{−1/2} is symmetric with the same spectrum
        let mut s = vec![0.0; n * n];
        for x in 0..n {
            s[x * n + x] = g.weighted_degree(x) / g.measure(x);
            for nb in g.neighbors(x) {
                s[x * n + nb.vertex] = -nb.weight / sqrt(g.measure(x) * g.measure(nb.vertex));
            }
        }
        let eig = symmetric_eigen(&s, n)?;
        return Ok(eig.values[0].max(0.0));
    }
    let op = DirichletOperator::with_interior(g, (0..n).collect())?;
    Ok(dirichlet_bottom_eigenvalue(&op)?.eigenvalue)
}
