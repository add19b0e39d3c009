//! Network topology, arc-indexed flows and the incidence operator.
//!
//! Nodes are 0-based inside the library. [`NetworkTopology::from_one_based`]
//! is the entry point for 1-based labels coming from files.
//!
//! Arcs are the ordered pairs `(i, j)` and `(j, i)` for every undirected
//! edge `{i, j}`, sorted lexicographically by `(source, destination)`. Every
//! arc-indexed vector in the crate ([`FlowVector`] in particular) binds to
//! that order.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::dsu::DisjointSet;
use crate::error::GraphError;

/// Default threshold above which an arc counts as carrying flow.
pub const FLOW_SUPPORT_TOL: f64 = 1e-9;

/// An undirected, connected, simple graph together with its arc set.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    arcs: Vec<(usize, usize)>,
    arc_index: HashMap<(usize, usize), usize>,
    neighbors: Vec<Vec<usize>>,
}

impl NetworkTopology {
    /// Builds a topology from 0-based edges.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if node_count < 2 {
            return Err(GraphError::TooFewNodes(node_count));
        }
        let mut seen = BTreeSet::new();
        for &(i, j) in edges {
            for v in [i, j] {
                if v >= node_count {
                    return Err(GraphError::LabelOutOfRange {
                        label: v + 1,
                        node_count,
                    });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i + 1));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(GraphError::DuplicateEdge(i + 1, j + 1));
            }
        }

        let mut components = DisjointSet::new(node_count);
        for &(i, j) in &seen {
            components.union(i, j);
        }
        if let Some(v) = (1..node_count).find(|&v| !components.same(0, v)) {
            return Err(GraphError::Disconnected(v + 1));
        }

        let edges: Vec<(usize, usize)> = seen.into_iter().collect();
        let mut arcs: Vec<(usize, usize)> = edges.iter().flat_map(|&(i, j)| [(i, j), (j, i)]).collect();
        arcs.sort_unstable();
        let arc_index = arcs.iter().enumerate().map(|(m, &a)| (a, m)).collect();
        let mut neighbors = vec![Vec::new(); node_count];
        for &(i, j) in &arcs {
            neighbors[i].push(j);
        }

        Ok(Self {
            node_count,
            edges,
            arcs,
            arc_index,
            neighbors,
        })
    }

    /// Builds a topology from 1-based node labels, as used in scenario files.
    pub fn from_one_based(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut zero_based = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            for v in [i, j] {
                if v == 0 || v > node_count {
                    return Err(GraphError::LabelOutOfRange { label: v, node_count });
                }
            }
            zero_based.push((i - 1, j - 1));
        }
        Self::new(node_count, &zero_based)
    }

    pub fn path(node_count: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..node_count).map(|i| (i - 1, i)).collect();
        Self::new(node_count, &edges)
    }

    pub fn cycle(node_count: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..node_count).map(|i| (i, (i + 1) % node_count)).collect();
        Self::new(node_count, &edges)
    }

    pub fn complete(node_count: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..node_count)
            .flat_map(|i| (i + 1..node_count).map(move |j| (i, j)))
            .collect();
        Self::new(node_count, &edges)
    }

    pub fn star(node_count: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..node_count).map(|j| (0, j)).collect();
        Self::new(node_count, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Undirected edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc_index(&self, from: usize, to: usize) -> Option<usize> {
        self.arc_index.get(&(from, to)).copied()
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.arc_index.contains_key(&(from, to))
    }

    /// Sorted neighbors of `i`, excluding `i` itself.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `i` together with its neighbors, sorted ascending.
    pub fn closed_neighborhood(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.degree(i) + 1);
        let mut inserted = false;
        for &j in &self.neighbors[i] {
            if !inserted && j > i {
                out.push(i);
                inserted = true;
            }
            out.push(j);
        }
        if !inserted {
            out.push(i);
        }
        out
    }

    /// Dense `N x 2M` incidence matrix; column `m` has `-1` at the source
    /// and `+1` at the destination of arc `m`.
    pub fn incidence_matrix(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.arcs.len()]; self.node_count];
        for (m, &(i, j)) in self.arcs.iter().enumerate() {
            a[i][m] = -1.0;
            a[j][m] = 1.0;
        }
        a
    }

    /// Net inflow per node, `A * delta`.
    pub fn apply_incidence(&self, delta: &FlowVector) -> Result<Vec<f64>, GraphError> {
        if delta.len() != self.arcs.len() {
            return Err(GraphError::LengthMismatch {
                expected: self.arcs.len(),
                got: delta.len(),
            });
        }
        let mut out = vec![0.0; self.node_count];
        for (&(i, j), &d) in self.arcs.iter().zip(delta.values()) {
            out[i] -= d;
            out[j] += d;
        }
        Ok(out)
    }

    /// Arcs carrying more than `tol` flow, and whether they form a DAG.
    pub fn support_flow_graph(&self, delta: &FlowVector, tol: f64) -> SupportGraph {
        let arcs: Vec<(usize, usize)> = self
            .arcs
            .iter()
            .zip(delta.values())
            .filter(|&(_, &d)| d > tol)
            .map(|(&a, _)| a)
            .collect();
        let acyclic = is_acyclic(self.node_count, &arcs);
        SupportGraph { arcs, acyclic }
    }

    /// Origin-destination decomposition of a support pattern.
    ///
    /// Each node `i` is split into an origin copy `i_o` and a destination
    /// copy `i_d`; every pattern arc `(i, j)` becomes `(i_o, j_d)`. The
    /// non-trivial weakly connected components of that doubled graph give
    /// the `(O^r, D^r)` pairs.
    pub fn od_decompose(&self, pattern: &SupportPattern) -> Result<OdDecomposition, GraphError> {
        let n = self.node_count;
        let mut uf = DisjointSet::new(2 * n);
        let mut has_out = vec![false; n];
        let mut has_in = vec![false; n];
        for &(i, j) in pattern.arcs() {
            if i >= n || j >= n || (i != j && !self.has_arc(i, j)) {
                return Err(GraphError::UnknownArc(i + 1, j + 1));
            }
            uf.union(i, n + j);
            has_out[i] = true;
            has_in[j] = true;
        }

        // Components keyed by root, in order of first appearance over
        // origins then destinations, so that output order is deterministic.
        let mut slot: HashMap<usize, usize> = HashMap::new();
        let mut components: Vec<OdComponent> = Vec::new();
        for v in 0..2 * n {
            let is_origin = v < n;
            let node = if is_origin { v } else { v - n };
            let touched = if is_origin { has_out[node] } else { has_in[node] };
            if !touched {
                continue;
            }
            let root = uf.find(v);
            let k = *slot.entry(root).or_insert_with(|| {
                components.push(OdComponent::default());
                components.len() - 1
            });
            if is_origin {
                components[k].origins.push(node);
            } else {
                components[k].destinations.push(node);
            }
        }
        let uncovered_destinations = (0..n).filter(|&i| !has_in[i]).collect();
        Ok(OdDecomposition {
            components,
            uncovered_destinations,
        })
    }
}

fn is_acyclic(node_count: usize, arcs: &[(usize, usize)]) -> bool {
    let mut indegree = vec![0usize; node_count];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for &(i, j) in arcs {
        indegree[j] += 1;
        out[i].push(j);
    }
    let mut queue: VecDeque<usize> = (0..node_count).filter(|&v| indegree[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = queue.pop_front() {
        visited += 1;
        for &w in &out[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                queue.push_back(w);
            }
        }
    }
    visited == node_count
}

/// Nonnegative arc flows aligned with [`NetworkTopology::arcs`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector(Vec<f64>);

impl FlowVector {
    pub fn new(values: Vec<f64>) -> Result<Self, GraphError> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(GraphError::NegativeFlow { index, value });
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Directed graph of arcs whose flow exceeds a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGraph {
    pub arcs: Vec<(usize, usize)>,
    pub acyclic: bool,
}

/// A set of arcs from `A ∪ {(i, i)}` with positive reallocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SupportPattern {
    arcs: BTreeSet<(usize, usize)>,
}

impl SupportPattern {
    pub fn new(arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            arcs: arcs.into_iter().collect(),
        }
    }

    /// Every node keeps its own mass.
    pub fn identity(node_count: usize) -> Self {
        Self::new((0..node_count).map(|i| (i, i)))
    }

    pub fn arcs(&self) -> &BTreeSet<(usize, usize)> {
        &self.arcs
    }

    pub fn contains(&self, from: usize, to: usize) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn has_outgoing(&self, from: usize) -> bool {
        self.arcs.range((from, 0)..=(from, usize::MAX)).next().is_some()
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OdComponent {
    pub origins: Vec<usize>,
    pub destinations: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OdDecomposition {
    pub components: Vec<OdComponent>,
    /// Nodes with no incoming pattern arc; their reallocated mass is zero.
    pub uncovered_destinations: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows(topo: &NetworkTopology, entries: &[((usize, usize), f64)]) -> FlowVector {
        let mut v = vec![0.0; topo.arc_count()];
        for &((i, j), d) in entries {
            v[topo.arc_index(i, j).unwrap()] = d;
        }
        FlowVector::new(v).unwrap()
    }

    #[test]
    fn path_arcs_are_lexicographic() {
        let t = NetworkTopology::from_one_based(3, &[(1, 2), (2, 3)]).unwrap();
        assert_eq!(t.arcs(), &[(0, 1), (1, 0), (1, 2), (2, 1)]);
        assert_eq!(t.neighbors(1), &[0, 2]);
        assert_eq!(t.closed_neighborhood(1), vec![0, 1, 2]);
        assert_eq!(t.closed_neighborhood(2), vec![1, 2]);
    }

    #[test]
    fn triangle_has_six_arcs() {
        let t = NetworkTopology::from_one_based(3, &[(1, 2), (2, 3), (1, 3)]).unwrap();
        assert_eq!(t.arc_count(), 6);
        assert_eq!(t.edges(), &[(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn configuration_errors_are_distinct() {
        assert_eq!(
            NetworkTopology::from_one_based(3, &[(1, 2)]),
            Err(GraphError::Disconnected(3))
        );
        assert_eq!(
            NetworkTopology::from_one_based(3, &[(1, 1), (2, 3)]),
            Err(GraphError::SelfLoop(1))
        );
        assert_eq!(
            NetworkTopology::from_one_based(3, &[(1, 2), (2, 1), (2, 3)]),
            Err(GraphError::DuplicateEdge(2, 1))
        );
        assert_eq!(
            NetworkTopology::from_one_based(3, &[(1, 2), (2, 4)]),
            Err(GraphError::LabelOutOfRange {
                label: 4,
                node_count: 3
            })
        );
        assert_eq!(
            NetworkTopology::from_one_based(3, &[(0, 2)]),
            Err(GraphError::LabelOutOfRange {
                label: 0,
                node_count: 3
            })
        );
        assert_eq!(NetworkTopology::new(1, &[]), Err(GraphError::TooFewNodes(1)));
    }

    #[test]
    fn incidence_columns() {
        let t = NetworkTopology::cycle(4).unwrap();
        let a = t.incidence_matrix();
        for (m, &(i, j)) in t.arcs().iter().enumerate() {
            let col: Vec<f64> = a.iter().map(|row| row[m]).collect();
            assert_eq!(col.iter().sum::<f64>(), 0.0);
            assert_eq!(col[i], -1.0);
            assert_eq!(col[j], 1.0);
            assert_eq!(col.iter().filter(|v| **v != 0.0).count(), 2);
        }
    }

    #[test]
    fn incidence_examples() {
        let path = NetworkTopology::path(3).unwrap();
        let zero = FlowVector::zeros(path.arc_count());
        assert_eq!(path.apply_incidence(&zero).unwrap(), vec![0.0; 3]);
        let single = flows(&path, &[((0, 1), 0.3)]);
        assert_eq!(path.apply_incidence(&single).unwrap(), vec![-0.3, 0.3, 0.0]);

        let tri = NetworkTopology::complete(3).unwrap();
        let c = 0.37;
        let circ = flows(&tri, &[((0, 1), c), ((1, 2), c), ((2, 0), c)]);
        assert_eq!(tri.apply_incidence(&circ).unwrap(), vec![0.0; 3]);

        let short = FlowVector::zeros(3);
        assert_eq!(
            path.apply_incidence(&short),
            Err(GraphError::LengthMismatch { expected: 4, got: 3 })
        );
    }

    #[test]
    fn flow_vector_rejects_negative_entries() {
        assert!(FlowVector::new(vec![0.0, -1e-3]).is_err());
        assert!(FlowVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn support_graph_acyclicity() {
        let path = NetworkTopology::path(3).unwrap();
        let g = path.support_flow_graph(&FlowVector::zeros(4), FLOW_SUPPORT_TOL);
        assert!(g.arcs.is_empty() && g.acyclic);
        let g = path.support_flow_graph(&flows(&path, &[((0, 1), 0.1)]), FLOW_SUPPORT_TOL);
        assert_eq!(g.arcs, vec![(0, 1)]);
        assert!(g.acyclic);

        let tri = NetworkTopology::complete(3).unwrap();
        let circ = flows(&tri, &[((0, 1), 0.1), ((1, 2), 0.1), ((2, 0), 0.1)]);
        let g = tri.support_flow_graph(&circ, FLOW_SUPPORT_TOL);
        assert_eq!(g.arcs.len(), 3);
        assert!(!g.acyclic);
        // a two-cycle on one edge
        let back = flows(&path, &[((0, 1), 0.1), ((1, 0), 0.2)]);
        assert!(!path.support_flow_graph(&back, FLOW_SUPPORT_TOL).acyclic);
        assert!(path.support_flow_graph(&back, 0.15).acyclic);
    }

    #[test]
    fn od_identity_and_empty_patterns() {
        let t = NetworkTopology::path(4).unwrap();
        let od = t.od_decompose(&SupportPattern::identity(4)).unwrap();
        assert_eq!(od.components.len(), 4);
        for (r, c) in od.components.iter().enumerate() {
            assert_eq!(c.origins, vec![r]);
            assert_eq!(c.destinations, vec![r]);
        }
        assert!(od.uncovered_destinations.is_empty());

        let od = t.od_decompose(&SupportPattern::default()).unwrap();
        assert!(od.components.is_empty());
        assert_eq!(od.uncovered_destinations, vec![0, 1, 2, 3]);
    }

    #[test]
    fn od_rejects_non_arcs() {
        let t = NetworkTopology::path(3).unwrap();
        let bad = SupportPattern::new([(0, 2)]);
        assert_eq!(t.od_decompose(&bad), Err(GraphError::UnknownArc(1, 3)));
    }

    #[test]
    fn pattern_outgoing_lookup() {
        let p = SupportPattern::new([(1, 2), (3, 3)]);
        assert!(p.has_outgoing(1));
        assert!(p.has_outgoing(3));
        assert!(!p.has_outgoing(2));
        assert!(!p.has_outgoing(0));
    }
}
