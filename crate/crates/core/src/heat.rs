//! The heat equation `∂_t u = Δu`: implicit Euler stepping, an exact
//! eigendecomposition solver for small graphs, and ancient solutions built in
//! closed form from finitely many spectral atoms `(λ_i, ν_i, w_i)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use libm::{exp, sqrt};

use crate::dense::symmetric_eigen;
use crate::eigenfunction::{construct_positive_eigenfunction_with, Eigenfunction, Positivity};
use crate::error::{Error, Result};
use crate::graph::{bfs_distances, BallDecomposition, WeightedGraph};
use crate::laplacian::{assemble_dirichlet, laplacian_at, VertexFunction};
use crate::mmatrix::{self, Factorization};
use crate::spectrum::{dirichlet_bottom_eigenvalue, DENSE_LIMIT};

/// Tolerance on `Σ ν_i = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Atoms with `|λ|` below this count as the zero atom.
pub const ZERO_ATOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HeatState {
    pub time: f64,
    pub values: VertexFunction,
}

impl HeatState {
    pub fn new(time: f64, values: VertexFunction) -> Self {
        HeatState { time, values }
    }
}

/// Factored `M + τL` for repeated implicit Euler steps of fixed size.
///
/// The matrix is an M-matrix with row margins `m_x > 0`, so each step is a
/// subtraction-free solve: nonnegative data stay nonnegative.
#[derive(Debug, Clone)]
pub struct ImplicitHeatStepper {
    tau: f64,
    factors: Factorization,
    mass: Vec<f64>,
}

impl ImplicitHeatStepper {
    pub fn new(g: &WeightedGraph, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParam(format!("time step must be positive, got {tau}")));
        }
        let couplings: Vec<Vec<(usize, f64)>> = (0..g.vertex_count())
            .map(|x| g.neighbors(x).iter().map(|nb| (nb.vertex, tau * nb.weight)).collect())
            .collect();
        let source = g.truncation().map_or(0, |t| t.root);
        let dist = bfs_distances(g, source);
        let mut order: Vec<usize> = (0..g.vertex_count()).collect();
        order.sort_by_key(|&x| (core::cmp::Reverse(dist[x]), x));
        let factors = mmatrix::factor(&couplings, g.measures(), &order)
            .map_err(|p| Error::SolveFailure(format!("pivot {} at vertex {}", p.pivot, p.index)))?;
        Ok(ImplicitHeatStepper { tau, factors, mass: g.measures().to_vec() })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Solves `(I − τΔ)u⁺ = u`.
    pub fn step(&self, state: &HeatState) -> Result<HeatState> {
        if state.values.len() != self.mass.len() {
            return Err(Error::DomainMismatch {
                expected: self.mass.len(),
                found: state.values.len(),
            });
        }
        let rhs: Vec<f64> =
            state.values.values().iter().zip(&self.mass).map(|(u, m)| u * m).collect();
        let next = self.factors.solve(&rhs);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolveFailure("non-finite value after implicit step".into()));
        }
        Ok(HeatState::new(state.time + self.tau, VertexFunction::new(next)))
    }
}

/// One implicit Euler step of size `tau`.
pub fn step_heat_implicit(g: &WeightedGraph, state: &HeatState, tau: f64) -> Result<HeatState> {
    ImplicitHeatStepper::new(g, tau)?.step(state)
}

/// Exact `u(t) = e^{tΔ} u0` through the m-orthonormal eigendecomposition of
/// `Δ`. Limited to graphs with at most [`DENSE_LIMIT`] vertices.
pub fn solve_heat_spectral(g: &WeightedGraph, u0: &VertexFunction, t: f64) -> Result<HeatState> {
    let n = g.vertex_count();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge(n, DENSE_LIMIT));
    }
    u0.check_domain(g)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParam(format!("time must be nonnegative, got {t}")));
    }
    let sqrt_m: Vec<f64> = g.measures().iter().map(|&m| sqrt(m)).collect();
    // S = M^{1/2} Δ M^{-1/2} is symmetric
    let mut s = vec![0.0; n * n];
    for x in 0..n {
        s[x * n + x] = -g.weighted_degree(x) / g.measure(x);
        for nb in g.neighbors(x) {
            s[x * n + nb.vertex] = nb.weight / (sqrt_m[x] * sqrt_m[nb.vertex]);
        }
    }
    let eig = symmetric_eigen(&s, n)?;
    let scaled: Vec<f64> = u0.values().iter().zip(&sqrt_m).map(|(u, r)| u * r).collect();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let coeff: f64 = (0..n).map(|i| eig.component(i, k) * scaled[i]).sum();
        let decay = exp(eig.values[k] * t) * coeff;
        for (i, o) in out.iter_mut().enumerate() {
            *o += decay * eig.component(i, k);
        }
    }
    for (o, r) in out.iter_mut().zip(&sqrt_m) {
        *o /= r;
    }
    Ok(HeatState::new(t, VertexFunction::new(out)))
}

/// One point mass `ν` at `λ` carrying the eigenfunction `w_λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub lambda: f64,
    pub weight: f64,
    pub eigenfunction: Eigenfunction,
}

/// Finitely supported probability measure over eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    pub atoms: Vec<Atom>,
    /// The `λ₁(G)` against which admissibility `λ ≥ −λ₁` is judged.
    pub lambda1_reference: f64,
}

/// Where the atoms of a measure sit relative to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureSupport {
    OnlyZero,
    HasPositiveAtom,
    HasNegativeAtom,
    /// Atoms on both sides of zero.
    Mixed,
}

impl MeasureSupport {
    pub fn has_positive(self) -> bool {
        matches!(self, MeasureSupport::HasPositiveAtom | MeasureSupport::Mixed)
    }

    pub fn has_negative(self) -> bool {
        matches!(self, MeasureSupport::HasNegativeAtom | MeasureSupport::Mixed)
    }

    pub fn label(self) -> &'static str {
        match self {
            MeasureSupport::OnlyZero => "only_zero",
            MeasureSupport::HasPositiveAtom => "has_positive_atom",
            MeasureSupport::HasNegativeAtom => "has_negative_atom",
            MeasureSupport::Mixed => "mixed",
        }
    }
}

impl SpectralMeasure {
    pub fn new(atoms: Vec<Atom>, lambda1_reference: f64) -> Self {
        SpectralMeasure { atoms, lambda1_reference }
    }

    /// A single atom of mass one.
    pub fn single(eigenfunction: Eigenfunction, lambda1_reference: f64) -> Self {
        let lambda = eigenfunction.lambda;
        Self::new(vec![Atom { lambda, weight: 1.0, eigenfunction }], lambda1_reference)
    }

    pub fn support(&self) -> MeasureSupport {
        let positive = self.atoms.iter().any(|a| a.lambda > ZERO_ATOM_TOL);
        let negative = self.atoms.iter().any(|a| a.lambda < -ZERO_ATOM_TOL);
        match (positive, negative) {
            (false, false) => MeasureSupport::OnlyZero,
            (true, false) => MeasureSupport::HasPositiveAtom,
            (false, true) => MeasureSupport::HasNegativeAtom,
            (true, true) => MeasureSupport::Mixed,
        }
    }
}

/// `u(x, t) = Σ ν_i e^{λ_i t} w_i(x)` for `t` below the horizon.
#[derive(Debug, Clone)]
pub struct AncientSolution<'g> {
    graph: &'g WeightedGraph,
    pub measure: SpectralMeasure,
    pub horizon: f64,
    /// Shared interior of the atoms, in id order.
    pub domain: Vec<usize>,
    pub root: usize,
    /// Atoms with `w ≡ 0` dropped during synthesis.
    pub excluded_atoms: usize,
}

/// Validates a measure and packages it as an evaluable ancient solution.
pub fn synthesize_ancient<'g>(
    g: &'g WeightedGraph,
    measure: SpectralMeasure,
    horizon: f64,
) -> Result<AncientSolution<'g>> {
    if measure.atoms.is_empty() {
        return Err(Error::MeasureNotNormalized(0.0));
    }
    if let Some(a) = measure.atoms.iter().find(|a| !(a.weight > 0.0)) {
        return Err(Error::InvalidParam(format!("atom weight {} is not positive", a.weight)));
    }
    let total: f64 = measure.atoms.iter().map(|a| a.weight).sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::MeasureNotNormalized(total));
    }
    let threshold = -measure.lambda1_reference;
    if let Some(a) = measure.atoms.iter().find(|a| a.lambda < threshold) {
        return Err(Error::AdmissibilityViolation { lambda: a.lambda, threshold });
    }
    let first = &measure.atoms[0].eigenfunction;
    let (root, domain) = (first.root, first.interior.clone());
    for atom in &measure.atoms {
        let w = &atom.eigenfunction;
        if w.values.len() != g.vertex_count() || w.root != root || w.interior != domain {
            return Err(Error::MixedDomains);
        }
        if w.lambda != atom.lambda {
            return Err(Error::InvalidParam(format!(
                "atom at λ = {} carries a {}-eigenfunction",
                atom.lambda, w.lambda
            )));
        }
        if w.positivity == Positivity::Indefinite {
            return Err(Error::InvalidParam(format!(
                "eigenfunction at λ = {} is neither positive nor zero",
                atom.lambda
            )));
        }
    }
    let mut measure = measure;
    let before = measure.atoms.len();
    measure.atoms.retain(|a| a.eigenfunction.positivity == Positivity::StrictlyPositive);
    let excluded_atoms = before - measure.atoms.len();
    Ok(AncientSolution { graph: g, measure, horizon, domain, root, excluded_atoms })
}

/// Builds the atoms `Σ ν_i e^{λ_i t} w_i` from eigenvalues alone.
///
/// The admissibility threshold is the Dirichlet bottom of the truncation, and
/// it is enforced before any eigenfunction is constructed, so an inadmissible
/// atom reports [`Error::AdmissibilityViolation`] rather than
/// [`Error::NotAdmissible`].
pub fn synthesize_from_eigenvalues<'g>(
    g: &'g WeightedGraph,
    balls: &BallDecomposition,
    lambdas: &[f64],
    weights: &[f64],
    horizon: f64,
    tol: f64,
) -> Result<AncientSolution<'g>> {
    if lambdas.len() != weights.len() {
        return Err(Error::InvalidParam(format!("{} weights for {} eigenvalues", weights.len(), lambdas.len())));
    }
    let radius = g.truncation_radius().ok_or(Error::RadiusTooSmall)?;
    let lambda1 = dirichlet_bottom_eigenvalue(&assemble_dirichlet(g, balls, radius)?)?.eigenvalue;
    if let Some(&lambda) = lambdas.iter().find(|&&l| l < -lambda1) {
        return Err(Error::AdmissibilityViolation { lambda, threshold: -lambda1 });
    }
    let mut atoms = Vec::with_capacity(lambdas.len());
    for (&lambda, &weight) in lambdas.iter().zip(weights) {
        let eigenfunction = construct_positive_eigenfunction_with(g, balls, lambda, tol)?;
        atoms.push(Atom { lambda, weight, eigenfunction });
    }
    synthesize_ancient(g, SpectralMeasure::new(atoms, lambda1), horizon)
}

impl<'g> AncientSolution<'g> {
    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn value(&self, x: usize, t: f64) -> f64 {
        self.measure
            .atoms
            .iter()
            .map(|a| a.weight * exp(a.lambda * t) * a.eigenfunction.value(x))
            .sum()
    }

    /// `∂_t u` from the closed form.
    pub fn time_derivative(&self, x: usize, t: f64) -> f64 {
        self.measure
            .atoms
            .iter()
            .map(|a| a.weight * a.lambda * exp(a.lambda * t) * a.eigenfunction.value(x))
            .sum()
    }

    pub fn laplacian(&self, x: usize, t: f64) -> f64 {
        self.measure
            .atoms
            .iter()
            .map(|a| {
                a.weight * exp(a.lambda * t) * laplacian_at(self.graph, a.eigenfunction.values.values(), x)
            })
            .sum()
    }

    pub fn in_domain(&self, x: usize) -> bool {
        self.domain.binary_search(&x).is_ok()
    }

    pub fn support(&self) -> MeasureSupport {
        self.measure.support()
    }
}

/// `max |Δu(x, t) − ∂_t u(x, t)|` over the sample grid.
pub fn heat_residual(sol: &AncientSolution<'_>, times: &[f64], vertices: &[usize]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        if !(t < sol.horizon) {
            return Err(Error::OutOfDomain(format!("t = {t} is not below the horizon {}", sol.horizon)));
        }
        for &x in vertices {
            if !sol.in_domain(x) {
                return Err(Error::OutOfDomain(format!("vertex {x} is not interior")));
            }
            worst = worst.max((sol.laplacian(x, t) - sol.time_derivative(x, t)).abs());
        }
    }
    Ok(worst)
}
