//! Weighted graphs `(V, E, w, m)`, canonical ball truncations of infinite
//! families, combinatorial balls and the bounded-geometry constant.
//!
//! Vertex ids are dense `0..n`. Infinite families (`lattice_Z`,
//! `lattice_Z2`, `tree_regular`) are realized as the ball `B_N` around a
//! distinguished root and carry a [`Truncation`] record; vertices at distance
//! `< N` from that root form the *interior*, the sphere `∂B_N` the boundary.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Canonical graph families produced by [`generate_family`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Path,
    Cycle,
    LatticeZ,
    LatticeZ2,
    TreeRegular,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::LatticeZ => "lattice_Z",
            Family::LatticeZ2 => "lattice_Z2",
            Family::TreeRegular => "tree_regular",
        }
    }

    /// Families whose generated graphs are balls of an infinite graph.
    pub fn is_infinite(self) -> bool {
        matches!(self, Family::LatticeZ | Family::LatticeZ2 | Family::TreeRegular)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Family::Path),
            "cycle" => Ok(Family::Cycle),
            "lattice_Z" | "lattice-Z" | "Z" => Ok(Family::LatticeZ),
            "lattice_Z2" | "lattice-Z2" | "Z2" => Ok(Family::LatticeZ2),
            "tree_regular" | "tree" => Ok(Family::TreeRegular),
            other => Err(Error::InvalidParam(format!("unknown family '{other}'"))),
        }
    }
}

/// The graph is the ball `B_radius(root)` of an infinite graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub root: usize,
    pub radius: usize,
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub weight: f64,
}

/// A finite, connected, simple weighted graph. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    measure: Vec<f64>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
    family: Option<Family>,
    degree_param: Option<usize>,
    truncation: Option<Truncation>,
}

impl WeightedGraph {
    /// Builds and validates a graph from vertex measures and an edge list.
    ///
    /// Rejects self-loops, duplicate edges (in either orientation),
    /// nonpositive or non-finite weights and measures, and disconnected input.
    pub fn new<I>(measure: Vec<f64>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let n = measure.len();
        if n == 0 {
            return Err(Error::InvalidParam("graph must have at least one vertex".into()));
        }
        for (x, &m) in measure.iter().enumerate() {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::NonpositiveMeasure(x, m));
            }
        }
        let mut seen = BTreeSet::new();
        let mut edge_list = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for (x, y, w) in edges {
            if x >= n {
                return Err(Error::UnknownVertex(x));
            }
            if y >= n {
                return Err(Error::UnknownVertex(y));
            }
            if x == y {
                return Err(Error::SelfLoop(x));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonpositiveWeight(x, y, w));
            }
            let (a, b) = if x < y { (x, y) } else { (y, x) };
            if !seen.insert((a, b)) {
                return Err(Error::DuplicateEdge(a, b));
            }
            edge_list.push(Edge { a, b, weight: w });
            adjacency[a].push(Neighbor { vertex: b, weight: w });
            adjacency[b].push(Neighbor { vertex: a, weight: w });
        }
        let graph = WeightedGraph {
            measure,
            edges: edge_list,
            adjacency,
            family: None,
            degree_param: None,
            truncation: None,
        };
        let reached = bfs_distances(&graph, 0).iter().filter(|d| d.is_some()).count();
        if reached != n {
            return Err(Error::Disconnected { reached, total: n });
        }
        Ok(graph)
    }

    /// Declares the graph to be `B_radius(root)` of some infinite graph.
    pub fn with_truncation(mut self, root: usize, radius: usize) -> Result<Self> {
        if root >= self.vertex_count() {
            return Err(Error::UnknownVertex(root));
        }
        self.truncation = Some(Truncation { root, radius });
        Ok(self)
    }

    pub fn vertex_count(&self) -> usize {
        self.measure.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn measure(&self, x: usize) -> f64 {
        self.measure[x]
    }

    pub fn measures(&self) -> &[f64] {
        &self.measure
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, x: usize) -> &[Neighbor] {
        &self.adjacency[x]
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    /// `Σ_{y∼x} w_xy`.
    pub fn weighted_degree(&self, x: usize) -> f64 {
        self.adjacency[x].iter().map(|n| n.weight).sum()
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    pub fn degree_param(&self) -> Option<usize> {
        self.degree_param
    }

    /// Label used in reports: the family name, or `custom`.
    pub fn family_label(&self) -> &'static str {
        self.family.map_or("custom", Family::name)
    }

    pub fn truncation(&self) -> Option<Truncation> {
        self.truncation
    }

    pub fn truncation_radius(&self) -> Option<usize> {
        self.truncation.map(|t| t.radius)
    }

    /// Vertices at distance `< radius` from the truncation root, in id order.
    /// Graphs without a truncation have every vertex interior.
    pub fn interior_vertices(&self) -> Vec<usize> {
        match self.truncation {
            None => (0..self.vertex_count()).collect(),
            Some(t) => bfs_distances(self, t.root)
                .iter()
                .enumerate()
                .filter(|(_, d)| matches!(d, Some(d) if *d < t.radius))
                .map(|(x, _)| x)
                .collect(),
        }
    }

    /// Interior membership mask, see [`WeightedGraph::interior_vertices`].
    pub fn interior_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertex_count()];
        for x in self.interior_vertices() {
            mask[x] = true;
        }
        mask
    }
}

/// Hop distances from `source`; `None` for unreachable vertices.
pub fn bfs_distances(g: &WeightedGraph, source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.vertex_count()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(x) = queue.pop_front() {
        let d = dist[x].unwrap_or(0);
        for nb in g.neighbors(x) {
            if dist[nb.vertex].is_none() {
                dist[nb.vertex] = Some(d + 1);
                queue.push_back(nb.vertex);
            }
        }
    }
    dist
}

/// Unit-weight, unit-measure realization of a canonical family.
///
/// `size_param` is the vertex count for `path`/`cycle` and the ball radius
/// `N` for the infinite families. `degree_param` is the tree degree.
pub fn generate_family(
    family: Family,
    size_param: usize,
    degree_param: Option<usize>,
) -> Result<WeightedGraph> {
    if size_param == 0 {
        return Err(Error::InvalidParam("size_param must be >= 1".into()));
    }
    let (n, edges, root) = match family {
        Family::Path => {
            let edges: Vec<_> = (1..size_param).map(|i| (i - 1, i)).collect();
            (size_param, edges, None)
        }
        Family::Cycle => {
            if size_param < 3 {
                return Err(Error::InvalidParam("a simple cycle needs >= 3 vertices".into()));
            }
            let edges: Vec<_> = (0..size_param).map(|i| (i, (i + 1) % size_param)).collect();
            (size_param, edges, None)
        }
        Family::LatticeZ => {
            // position p in -N..=N has id p + N
            let n = 2 * size_param + 1;
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            (n, edges, Some(size_param))
        }
        Family::LatticeZ2 => lattice_z2_ball(size_param),
        Family::TreeRegular => {
            let d = match degree_param {
                Some(d) if d >= 3 => d,
                Some(d) => {
                    return Err(Error::InvalidParam(format!(
                        "tree degree must be >= 3, got {d}"
                    )))
                }
                None => return Err(Error::InvalidParam("tree_regular needs a degree".into())),
            };
            regular_tree_ball(size_param, d)
        }
    };
    let mut g = WeightedGraph::new(vec![1.0; n], edges.into_iter().map(|(a, b)| (a, b, 1.0)))?;
    g.family = Some(family);
    if family == Family::TreeRegular {
        g.degree_param = degree_param;
    }
    if let Some(root) = root {
        g.truncation = Some(Truncation { root, radius: size_param });
    }
    Ok(g)
}

/// `{|x| + |y| <= radius}` labeled in lexicographic `(x, y)` order.
fn lattice_z2_ball(radius: usize) -> (usize, Vec<(usize, usize)>, Option<usize>) {
    let r = radius as i64;
    let mut ids = BTreeMap::new();
    for x in -r..=r {
        let span = r - x.abs();
        for y in -span..=span {
            let id = ids.len();
            ids.insert((x, y), id);
        }
    }
    let mut edges = Vec::new();
    for (&(x, y), &id) in &ids {
        for step in [(1, 0), (0, 1)] {
            if let Some(&other) = ids.get(&(x + step.0, y + step.1)) {
                edges.push((id, other));
            }
        }
    }
    edges.sort_unstable();
    let root = ids[&(0, 0)];
    (ids.len(), edges, Some(root))
}

/// `B_radius` of the `d`-regular tree, labeled in breadth-first order from 0.
fn regular_tree_ball(radius: usize, d: usize) -> (usize, Vec<(usize, usize)>, Option<usize>) {
    let mut edges = Vec::new();
    let mut layer = vec![0usize];
    let mut next_id = 1;
    for _ in 0..radius {
        let mut next = Vec::with_capacity(layer.len() * d);
        for &parent in &layer {
            let children = if parent == 0 { d } else { d - 1 };
            for _ in 0..children {
                edges.push((parent, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        layer = next;
    }
    (next_id, edges, Some(0))
}

/// The tight bounded-geometry constant `c0` with the vertices/edges that attain
/// each extreme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryCertificate {
    pub c0: f64,
    pub witness_edge_min: Option<usize>,
    pub witness_edge_max: Option<usize>,
    pub witness_measure_min: usize,
    pub witness_measure_max: usize,
    pub witness_degree_max: usize,
}

impl GeometryCertificate {
    /// Replaces `c0` by a looser constant, for sensitivity studies.
    pub fn with_override(mut self, c0: f64) -> Result<Self> {
        if !(c0 >= self.c0) {
            return Err(Error::InvalidParam(format!(
                "override c0 = {c0} is below the certified {}",
                self.c0
            )));
        }
        self.c0 = c0;
        Ok(self)
    }
}

/// Minimal `c0` with `1/c0 <= w_e <= c0`, `1/c0 <= m_x <= c0` and
/// `deg x <= c0` everywhere.
pub fn certify_bounded_geometry(g: &WeightedGraph) -> GeometryCertificate {
    let argext = |values: &mut dyn Iterator<Item = (usize, f64)>| {
        let mut min = (0, f64::INFINITY);
        let mut max = (0, f64::NEG_INFINITY);
        for (i, v) in values {
            if v < min.1 {
                min = (i, v);
            }
            if v > max.1 {
                max = (i, v);
            }
        }
        (min, max)
    };

    let mut c0: f64 = 1.0;
    let (mut edge_min, mut edge_max) = (None, None);
    if !g.edges().is_empty() {
        let (lo, hi) = argext(&mut g.edges().iter().map(|e| e.weight).enumerate());
        c0 = c0.max(hi.1).max(1.0 / lo.1);
        edge_min = Some(lo.0);
        edge_max = Some(hi.0);
    }
    let (m_lo, m_hi) = argext(&mut g.measures().iter().copied().enumerate());
    c0 = c0.max(m_hi.1).max(1.0 / m_lo.1);
    let (_, deg_hi) = argext(&mut (0..g.vertex_count()).map(|x| (x, g.degree(x) as f64)));
    c0 = c0.max(deg_hi.1);

    GeometryCertificate {
        c0,
        witness_edge_min: edge_min,
        witness_edge_max: edge_max,
        witness_measure_min: m_lo.0,
        witness_measure_max: m_hi.0,
        witness_degree_max: deg_hi.0,
    }
}

/// Breadth-first layering `∂B_0, ∂B_1, ...` around a root.
#[derive(Debug, Clone, PartialEq)]
pub struct BallDecomposition {
    pub root: usize,
    pub distance: Vec<usize>,
    pub spheres: Vec<Vec<usize>>,
    pub max_radius: usize,
}

impl BallDecomposition {
    pub fn sphere(&self, n: usize) -> &[usize] {
        self.spheres.get(n).map_or(&[], Vec::as_slice)
    }

    /// Vertices of `B_n(root)` in layer order.
    pub fn ball(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        self.spheres.iter().take(n + 1).flatten().copied()
    }

    pub fn ball_size(&self, n: usize) -> usize {
        self.spheres.iter().take(n + 1).map(Vec::len).sum()
    }
}

pub fn decompose_balls(g: &WeightedGraph, root: usize) -> Result<BallDecomposition> {
    if root >= g.vertex_count() {
        return Err(Error::UnknownVertex(root));
    }
    // graphs are connected, so every vertex is reached
    let distance: Vec<usize> = bfs_distances(g, root).into_iter().map(|d| d.unwrap_or(0)).collect();
    let max_radius = distance.iter().copied().max().unwrap_or(0);
    let mut spheres = vec![Vec::new(); max_radius + 1];
    for (x, &d) in distance.iter().enumerate() {
        spheres[d].push(x);
    }
    Ok(BallDecomposition { root, distance, spheres, max_radius })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_of_four() {
        let g = generate_family(Family::Cycle, 4, None).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 4);
        assert!(g.measures().iter().all(|&m| m == 1.0));
        assert!(g.edges().iter().all(|e| e.weight == 1.0));
        assert_eq!(g.truncation(), None);
    }

    #[test]
    fn lattice_z_ball_is_labeled_by_position() {
        let g = generate_family(Family::LatticeZ, 3, None).unwrap();
        assert_eq!(g.vertex_count(), 7);
        assert_eq!(g.truncation(), Some(Truncation { root: 3, radius: 3 }));
        // position -3 is id 0, position 3 is id 6
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(6), 1);
        assert_eq!(g.interior_vertices(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn tree_ball_counts() {
        // enumeration: 1 root + 3 children + 3*2 grandchildren
        let g = generate_family(Family::TreeRegular, 2, Some(3)).unwrap();
        assert_eq!(g.vertex_count(), 1 + 3 + 6);
        assert_eq!(g.edge_count(), 9);
        let balls = decompose_balls(&g, 0).unwrap();
        let sizes: Vec<_> = balls.spheres.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 3, 6]);
    }

    #[test]
    fn tree_needs_degree_three() {
        assert!(matches!(
            generate_family(Family::TreeRegular, 2, Some(2)),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            generate_family(Family::TreeRegular, 2, None),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(generate_family(Family::Path, 0, None), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn lattice_z2_ball_size() {
        // |B_N| in Z^2 with the l1 metric is 2N^2 + 2N + 1
        for n in 1..6 {
            let g = generate_family(Family::LatticeZ2, n, None).unwrap();
            assert_eq!(g.vertex_count(), 2 * n * n + 2 * n + 1);
            let t = g.truncation().unwrap();
            let balls = decompose_balls(&g, t.root).unwrap();
            assert_eq!(balls.max_radius, n);
            assert_eq!(balls.sphere(n).len(), 4 * n);
        }
    }

    #[test]
    fn certificate_examples() {
        let z2 = generate_family(Family::LatticeZ2, 4, None).unwrap();
        assert_eq!(certify_bounded_geometry(&z2).c0, 4.0);
        let z = generate_family(Family::LatticeZ, 4, None).unwrap();
        assert_eq!(certify_bounded_geometry(&z).c0, 2.0);

        let p = WeightedGraph::new(vec![1.0; 3], [(0, 1, 0.5), (1, 2, 1.0)]).unwrap();
        let cert = certify_bounded_geometry(&p);
        assert_eq!(cert.c0, 2.0);
        assert_eq!(cert.witness_edge_min, Some(0));
        assert_eq!(cert.witness_degree_max, 1);
    }

    #[test]
    fn certificate_override() {
        let z = generate_family(Family::LatticeZ, 4, None).unwrap();
        let cert = certify_bounded_geometry(&z);
        assert_eq!(cert.with_override(3.0).unwrap().c0, 3.0);
        assert!(cert.with_override(1.5).is_err());
    }

    #[test]
    fn certificate_is_truncation_stable() {
        for (family, degree) in [
            (Family::LatticeZ, None),
            (Family::LatticeZ2, None),
            (Family::TreeRegular, Some(3)),
            (Family::TreeRegular, Some(4)),
        ] {
            for n in 2..6 {
                let a = generate_family(family, n, degree).unwrap();
                let b = generate_family(family, n + 1, degree).unwrap();
                assert_eq!(certify_bounded_geometry(&a).c0, certify_bounded_geometry(&b).c0);
            }
        }
    }

    #[test]
    fn balls_on_small_graphs() {
        let c4 = generate_family(Family::Cycle, 4, None).unwrap();
        assert_eq!(decompose_balls(&c4, 0).unwrap().distance, vec![0, 1, 2, 1]);

        let z = generate_family(Family::LatticeZ, 3, None).unwrap();
        let balls = decompose_balls(&z, 3).unwrap();
        let sizes: Vec<_> = balls.spheres.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 2, 2, 2]);
        assert_eq!(balls.ball_size(2), 5);

        assert_eq!(decompose_balls(&z, 7), Err(Error::UnknownVertex(7)));
    }

    #[test]
    fn validation_errors() {
        assert_eq!(
            WeightedGraph::new(vec![1.0; 2], [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEdge(0, 1))
        );
        assert_eq!(
            WeightedGraph::new(vec![1.0; 4], [(0, 1, 1.0), (2, 3, 1.0)]),
            Err(Error::Disconnected { reached: 2, total: 4 })
        );
        assert_eq!(WeightedGraph::new(vec![1.0; 2], [(0, 0, 1.0)]), Err(Error::SelfLoop(0)));
        assert!(matches!(
            WeightedGraph::new(vec![1.0; 2], [(0, 1, 0.0)]),
            Err(Error::NonpositiveWeight(0, 1, _))
        ));
        assert!(matches!(
            WeightedGraph::new(vec![1.0, -1.0], [(0, 1, 1.0)]),
            Err(Error::NonpositiveMeasure(1, _))
        ));
        assert_eq!(WeightedGraph::new(vec![1.0; 2], [(0, 2, 1.0)]), Err(Error::UnknownVertex(2)));
    }

    #[test]
    fn family_names_round_trip() {
        for f in [
            Family::Path,
            Family::Cycle,
            Family::LatticeZ,
            Family::LatticeZ2,
            Family::TreeRegular,
        ] {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
    }
}
