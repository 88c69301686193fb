//! The weighted Laplacian `Δf(x) = Σ_{y∼x} (w_xy / m_x)(f(y) − f(x))`, its
//! Dirichlet restriction to a ball, and subharmonicity checks.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use crate::error::{Error, Result};
use crate::graph::{bfs_distances, BallDecomposition, WeightedGraph};
use crate::mmatrix::{self, Factorization, NonPositivePivot};

/// Absolute slack for sign checks, applied after scaling `max |f|` to 1.
pub const DEFAULT_TOL: f64 = 1e-10;

/// A real function on the vertices of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexFunction {
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        VertexFunction { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        VertexFunction { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `Σ_x m_x f(x)`.
    pub fn mass(&self, g: &WeightedGraph) -> f64 {
        self.values.iter().zip(g.measures()).map(|(v, m)| v * m).sum()
    }

    pub(crate) fn check_domain(&self, g: &WeightedGraph) -> Result<()> {
        if self.values.len() != g.vertex_count() {
            return Err(Error::DomainMismatch {
                expected: g.vertex_count(),
                found: self.values.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for VertexFunction {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.values[x]
    }
}

impl From<Vec<f64>> for VertexFunction {
    fn from(values: Vec<f64>) -> Self {
        VertexFunction { values }
    }
}

/// `Δf` at a single vertex.
pub fn laplacian_at(g: &WeightedGraph, f: &[f64], x: usize) -> f64 {
    let fx = f[x];
    let acc: f64 = g.neighbors(x).iter().map(|nb| nb.weight * (f[nb.vertex] - fx)).sum();
    acc / g.measure(x)
}

pub fn apply_laplacian(g: &WeightedGraph, f: &VertexFunction) -> Result<VertexFunction> {
    f.check_domain(g)?;
    Ok(VertexFunction::new(
        (0..g.vertex_count()).map(|x| laplacian_at(g, f.values(), x)).collect(),
    ))
}

/// `Δ` restricted to an interior vertex set with zero values outside it.
///
/// Internally kept in the symmetric form `K = M(−Δ_D)`: couplings `w_xy`
/// between interior neighbors plus, per vertex, the total weight to
/// non-interior neighbors (the diagonal-dominance margin).
#[derive(Debug, Clone)]
pub struct DirichletOperator {
    interior: Vec<usize>,
    local: Vec<Option<usize>>,
    mass: Vec<f64>,
    couplings: Vec<Vec<(usize, f64)>>,
    boundary_weight: Vec<f64>,
    order: Vec<usize>,
    root: Option<usize>,
    radius: Option<usize>,
}

impl DirichletOperator {
    /// Dirichlet restriction to an arbitrary nonempty vertex subset.
    pub fn with_interior(g: &WeightedGraph, interior: Vec<usize>) -> Result<Self> {
        let Some(&first) = interior.first() else {
            return Err(Error::InvalidParam("interior must be nonempty".into()));
        };
        let dist: Vec<usize> =
            bfs_distances(g, first).into_iter().map(|d| d.unwrap_or(0)).collect();
        Self::build(g, interior, &dist, None, None)
    }

    fn build(
        g: &WeightedGraph,
        interior: Vec<usize>,
        distance: &[usize],
        root: Option<usize>,
        radius: Option<usize>,
    ) -> Result<Self> {
        let mut local = vec![None; g.vertex_count()];
        for (i, &x) in interior.iter().enumerate() {
            if x >= g.vertex_count() {
                return Err(Error::UnknownVertex(x));
            }
            if local[x].is_some() {
                return Err(Error::DuplicateVertex(x));
            }
            local[x] = Some(i);
        }
        let mut couplings = Vec::with_capacity(interior.len());
        let mut boundary_weight = Vec::with_capacity(interior.len());
        for &x in &interior {
            let mut row = Vec::new();
            let mut outside = 0.0;
            for nb in g.neighbors(x) {
                match local[nb.vertex] {
                    Some(j) => row.push((j, nb.weight)),
                    None => outside += nb.weight,
                }
            }
            couplings.push(row);
            boundary_weight.push(outside);
        }
        let mass = interior.iter().map(|&x| g.measure(x)).collect();
        // outermost first keeps fill-in local on balls
        let mut order: Vec<usize> = (0..interior.len()).collect();
        order.sort_by_key(|&i| (core::cmp::Reverse(distance[interior[i]]), i));
        Ok(DirichletOperator {
            interior,
            local,
            mass,
            couplings,
            boundary_weight,
            order,
            root,
            radius,
        })
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn dim(&self) -> usize {
        self.interior.len()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn radius(&self) -> Option<usize> {
        self.radius
    }

    pub fn local_index(&self, x: usize) -> Option<usize> {
        self.local.get(x).copied().flatten()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Total edge weight from interior vertex `i` to vertices outside.
    pub fn boundary_weight(&self) -> &[f64] {
        &self.boundary_weight
    }

    pub fn has_boundary(&self) -> bool {
        self.boundary_weight.iter().any(|&w| w > 0.0)
    }

    /// Matrix entry of `Δ_D` between interior positions `i` and `j`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            let total: f64 =
                self.couplings[i].iter().map(|&(_, w)| w).sum::<f64>() + self.boundary_weight[i];
            -total / self.mass[i]
        } else {
            self.couplings[i]
                .iter()
                .find(|&&(k, _)| k == j)
                .map_or(0.0, |&(_, w)| w / self.mass[i])
        }
    }

    /// Interior neighbors of position `i` with their edge weights.
    pub fn couplings(&self, i: usize) -> &[(usize, f64)] {
        &self.couplings[i]
    }

    /// `Δ_D v` for `v` indexed by interior position.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        mmatrix::apply(&self.couplings, &self.boundary_weight, v)
            .into_iter()
            .zip(&self.mass)
            .map(|(k, m)| -k / m)
            .collect()
    }

    /// `Σ m_i v_i (Δ_D v)_i`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        let kv = mmatrix::apply(&self.couplings, &self.boundary_weight, v);
        -kv.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Factors `M(−Δ_D + shift)`; solve with right-hand side `M f`.
    pub(crate) fn factor_shifted(
        &self,
        shift: f64,
    ) -> core::result::Result<Factorization, NonPositivePivot> {
        let margins: Vec<f64> = self
            .boundary_weight
            .iter()
            .zip(&self.mass)
            .map(|(b, m)| b + shift * m)
            .collect();
        mmatrix::factor(&self.couplings, &margins, &self.order)
    }
}

/// `Δ` on `B_{radius−1}(root)` with zero values on `∂B_radius` and beyond.
pub fn assemble_dirichlet(
    g: &WeightedGraph,
    balls: &BallDecomposition,
    radius: usize,
) -> Result<DirichletOperator> {
    if radius < 1 || radius > balls.max_radius {
        return Err(Error::RadiusOutOfRange { radius, max: balls.max_radius });
    }
    let interior: Vec<usize> = balls.ball(radius - 1).collect();
    DirichletOperator::build(g, interior, &balls.distance, Some(balls.root), Some(radius))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubharmonicReport {
    pub holds: bool,
    /// `(vertex, Δf(x))` wherever `Δf(x) < −tol · max|f|`.
    pub violations: Vec<(usize, f64)>,
}

/// Checks `Δf ≥ 0` at the interior vertices of `g` (all vertices when `g`
/// carries no truncation).
pub fn is_subharmonic(g: &WeightedGraph, f: &VertexFunction) -> Result<SubharmonicReport> {
    is_subharmonic_on(g, f, &g.interior_vertices(), DEFAULT_TOL)
}

pub fn is_subharmonic_on(
    g: &WeightedGraph,
    f: &VertexFunction,
    vertices: &[usize],
    tol: f64,
) -> Result<SubharmonicReport> {
    f.check_domain(g)?;
    let scale = normalizer(f);
    let violations: Vec<(usize, f64)> = vertices
        .iter()
        .map(|&x| (x, laplacian_at(g, f.values(), x)))
        .filter(|&(_, lap)| lap / scale < -tol)
        .collect();
    Ok(SubharmonicReport { holds: violations.is_empty(), violations })
}

fn normalizer(f: &VertexFunction) -> f64 {
    let s = f.max_abs();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Whether `max_{∂B_n} f = max_{B_n} f`. Requires `f` to be subharmonic on
/// the interior part of `B_n`; a violation is reported as
/// [`Error::NotSubharmonic`].
pub fn check_maximum_principle(
    g: &WeightedGraph,
    balls: &BallDecomposition,
    f: &VertexFunction,
    n: usize,
) -> Result<bool> {
    f.check_domain(g)?;
    if let Some(r) = g.truncation_radius() {
        if n >= r {
            return Err(Error::RadiusOutOfRange { radius: n, max: r.saturating_sub(1) });
        }
    }
    if n > balls.max_radius {
        return Err(Error::RadiusOutOfRange { radius: n, max: balls.max_radius });
    }
    let interior = g.interior_mask();
    let checked: Vec<usize> = balls.ball(n).filter(|&x| interior[x]).collect();
    let report = is_subharmonic_on(g, f, &checked, DEFAULT_TOL)?;
    if let Some(&(first, _)) = report.violations.first() {
        return Err(Error::NotSubharmonic { count: report.violations.len(), first });
    }
    let max_ball = balls.ball(n).map(|x| f[x]).fold(f64::NEG_INFINITY, f64::max);
    let max_sphere = balls.sphere(n).iter().map(|&x| f[x]).fold(f64::NEG_INFINITY, f64::max);
    Ok(max_sphere >= max_ball - DEFAULT_TOL * normalizer(f))
}
