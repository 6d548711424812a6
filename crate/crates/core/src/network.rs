//! Static network description: nodes, anchor/follower partition and the
//! undirected sensing graph.
//!
//! A [`NetworkSpec`] is the raw, externally indexed description (what the
//! JSON network file deserializes into). [`validate`] turns it into a
//! [`Network`], which reorders nodes so that anchors occupy the leading
//! internal slots, canonicalizes the edge set to undirected pairs and caches
//! adjacency.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::geometry;

/// One node of a network file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    /// Absent only for followers whose position is unknown.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<f64>>,
    #[serde(default)]
    pub anchor: bool,
}

impl NodeSpec {
    pub fn new(id: impl Into<String>, position: Vec<f64>, anchor: bool) -> Self {
        Self {
            id: id.into(),
            position: Some(position),
            anchor,
        }
    }
}

/// A bearing measurement supplied directly in a network file, from `tail`
/// toward `head`. Used when follower positions are withheld.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BearingSpec {
    pub tail: String,
    pub head: String,
    pub direction: Vec<f64>,
}

/// Raw network description in external node ids.
///
/// Edges may be listed in one direction only; the sensing graph is treated
/// as undirected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub dimension: usize,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bearings: Vec<BearingSpec>,
}

impl NetworkSpec {
    /// Builds a spec from `(id, position, is_anchor)` triples and id pairs.
    pub fn from_parts<I, S>(dimension: usize, nodes: Vec<(S, Vec<f64>, bool)>, edges: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Self {
            dimension,
            nodes: nodes.into_iter().map(|(id, p, a)| NodeSpec::new(id, p, a)).collect(),
            edges: edges.into_iter().map(|(a, b)| [a.into(), b.into()]).collect(),
            bearings: Vec::new(),
        }
    }

    /// Closes the edge list under reversal. The result is sorted and free of
    /// duplicates, so applying it twice changes nothing.
    pub fn symmetrize(&self) -> NetworkSpec {
        let mut set: BTreeSet<[String; 2]> = BTreeSet::new();
        for [a, b] in &self.edges {
            set.insert([a.clone(), b.clone()]);
            set.insert([b.clone(), a.clone()]);
        }
        NetworkSpec {
            edges: set.into_iter().collect(),
            ..self.clone()
        }
    }

    /// Adds an edge between every pair of anchors that is not already
    /// connected in either direction.
    pub fn augment_anchors(&self) -> NetworkSpec {
        let mut present: BTreeSet<(String, String)> = BTreeSet::new();
        for [a, b] in &self.edges {
            present.insert((a.clone(), b.clone()));
            present.insert((b.clone(), a.clone()));
        }
        let anchors: Vec<&str> = self.nodes.iter().filter(|n| n.anchor).map(|n| n.id.as_str()).collect();
        let mut edges = self.edges.clone();
        for (k, a) in anchors.iter().enumerate() {
            for b in &anchors[k + 1..] {
                if !present.contains(&(a.to_string(), b.to_string())) {
                    edges.push([a.to_string(), b.to_string()]);
                }
            }
        }
        NetworkSpec { edges, ..self.clone() }
    }

    /// The undirected edge set as unordered id pairs (lexicographically
    /// ordered within each pair).
    pub fn undirected_edges(&self) -> BTreeSet<(String, String)> {
        self.edges
            .iter()
            .map(|[a, b]| {
                if a <= b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                }
            })
            .collect()
    }

    fn position_scale(&self) -> f64 {
        self.nodes
            .iter()
            .filter_map(|n| n.position.as_ref())
            .flat_map(|p| p.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Collocation tolerance for a set of positions whose largest coordinate
/// magnitude is `scale`.
pub fn collocation_tolerance(scale: f64) -> f64 {
    1e-12 * (1.0 + scale)
}

/// A single violated network invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionTooSmall {
        dimension: usize,
    },
    DuplicateId {
        id: String,
    },
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    NonFinitePosition {
        id: String,
    },
    MissingPosition {
        id: String,
    },
    CollocatedNodes {
        first: String,
        second: String,
    },
    DanglingEdge {
        tail: String,
        head: String,
        missing: String,
    },
    SelfLoop {
        id: String,
    },
    NoFollowers,
    MissingBearing {
        tail: String,
        head: String,
    },
    InvalidBearing {
        tail: String,
        head: String,
    },
    InconsistentBearings {
        tail: String,
        head: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionTooSmall { dimension } => {
                write!(f, "dimension {dimension} is below 2")
            }
            Violation::DuplicateId { id } => write!(f, "duplicate node id '{id}'"),
            Violation::DimensionMismatch { id, expected, found } => {
                write!(f, "node '{id}' has a position of length {found}, expected {expected}")
            }
            Violation::NonFinitePosition { id } => {
                write!(f, "node '{id}' has a non-finite coordinate")
            }
            Violation::MissingPosition { id } => write!(f, "node '{id}' has no position"),
            Violation::CollocatedNodes { first, second } => {
                write!(f, "nodes '{first}' and '{second}' are collocated")
            }
            Violation::DanglingEdge { tail, head, missing } => {
                write!(f, "edge ({tail}, {head}) references unknown node '{missing}'")
            }
            Violation::SelfLoop { id } => write!(f, "edge ({id}, {id}) is a self-loop"),
            Violation::NoFollowers => write!(f, "network has no follower nodes"),
            Violation::MissingBearing { tail, head } => write!(
                f,
                "edge ({tail}, {head}) touches a node without position and has no bearing"
            ),
            Violation::InvalidBearing { tail, head } => {
                write!(f, "bearing ({tail}, {head}) is zero, non-finite or has wrong length")
            }
            Violation::InconsistentBearings { tail, head } => {
                write!(f, "bearings ({tail}, {head}) and ({head}, {tail}) are not opposite")
            }
        }
    }
}

/// Every invariant violated by a network spec.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid network: {}", render(.0))]
pub struct ValidationErrors(pub Vec<Violation>);

fn render(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl ValidationErrors {
    pub fn violations(&self) -> &[Violation] {
        &self.0
    }
}

/// Bidirectional map between external node ids and internal indices.
/// Anchors occupy `0..n_anchors`, followers the rest; relative order within
/// each group follows the input.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    ids: Vec<String>,
    lookup: HashMap<String, usize>,
    n_anchors: usize,
}

impl IndexMap {
    /// Panics on duplicate ids; callers validate first.
    fn from_nodes(nodes: &[NodeSpec]) -> Self {
        let ids: Vec<String> = nodes
            .iter()
            .filter(|n| n.anchor)
            .chain(nodes.iter().filter(|n| !n.anchor))
            .map(|n| n.id.clone())
            .collect();
        let n_anchors = nodes.iter().filter(|n| n.anchor).count();
        let lookup: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        assert_eq!(lookup.len(), ids.len(), "duplicate node ids");
        Self { ids, lookup, n_anchors }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    /// Node ids in internal order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn n_anchors(&self) -> usize {
        self.n_anchors
    }

    pub fn n_followers(&self) -> usize {
        self.ids.len() - self.n_anchors
    }

    pub fn is_anchor(&self, index: usize) -> bool {
        index < self.n_anchors
    }

    pub fn follower_ids(&self) -> &[String] {
        &self.ids[self.n_anchors..]
    }
}

/// Stacked node coordinates in internal order: node `i` occupies
/// `d*i .. d*(i+1)`, anchors first.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedPosition {
    dimension: usize,
    n_anchors: usize,
    data: DVector<f64>,
}

impl StackedPosition {
    pub fn new(dimension: usize, n_anchors: usize, data: DVector<f64>) -> Self {
        assert_eq!(data.len() % dimension, 0);
        assert!(n_anchors * dimension <= data.len());
        Self {
            dimension,
            n_anchors,
            data,
        }
    }

    /// Concatenates `[anchors; followers]`.
    pub fn from_parts(dimension: usize, anchors: &DVector<f64>, followers: &DVector<f64>) -> Self {
        let data = DVector::from_iterator(
            anchors.len() + followers.len(),
            anchors.iter().chain(followers.iter()).copied(),
        );
        Self::new(dimension, anchors.len() / dimension, data)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_nodes(&self) -> usize {
        self.data.len() / self.dimension
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn node(&self, i: usize) -> DVectorView<'_, f64> {
        self.data.rows(i * self.dimension, self.dimension)
    }

    pub fn anchors(&self) -> DVector<f64> {
        self.data.rows(0, self.n_anchors * self.dimension).into_owned()
    }

    pub fn followers(&self) -> DVector<f64> {
        let start = self.n_anchors * self.dimension;
        self.data.rows(start, self.data.len() - start).into_owned()
    }
}

/// A validated network in internal order.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dimension: usize,
    index: IndexMap,
    positions: Vec<DVector<f64>>,
    /// Undirected edges as `(tail, head)` with `tail < head`, sorted.
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// Checks every invariant of `spec` and returns the validated network.
pub fn validate(spec: &NetworkSpec) -> Result<Network, ValidationErrors> {
    let mut violations = check_common(spec);
    for n in &spec.nodes {
        if n.position.is_none() {
            violations.push(Violation::MissingPosition { id: n.id.clone() });
        }
    }
    if !violations.is_empty() {
        return Err(ValidationErrors(violations));
    }
    let index = IndexMap::from_nodes(&spec.nodes);
    let by_id: HashMap<&str, &NodeSpec> = spec.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let positions: Vec<DVector<f64>> = index
        .ids()
        .iter()
        .map(|id| DVector::from_vec(by_id[id.as_str()].position.clone().unwrap()))
        .collect();
    let edges = canonical_edges(spec, &index);
    Ok(Network::assemble(spec.dimension, index, positions, edges))
}

/// Invariants shared by the full and the bearing-only load paths.
fn check_common(spec: &NetworkSpec) -> Vec<Violation> {
    let mut violations = Vec::new();
    let d = spec.dimension;
    if d < 2 {
        violations.push(Violation::DimensionTooSmall { dimension: d });
    }
    let mut seen = BTreeSet::new();
    for n in &spec.nodes {
        if !seen.insert(n.id.as_str()) {
            violations.push(Violation::DuplicateId { id: n.id.clone() });
        }
        if let Some(p) = &n.position {
            if p.len() != d {
                violations.push(Violation::DimensionMismatch {
                    id: n.id.clone(),
                    expected: d,
                    found: p.len(),
                });
            } else if p.iter().any(|x| !x.is_finite()) {
                violations.push(Violation::NonFinitePosition { id: n.id.clone() });
            }
        }
    }
    if !spec.nodes.iter().any(|n| !n.anchor) {
        violations.push(Violation::NoFollowers);
    }

    let tol = collocation_tolerance(spec.position_scale());
    let placed: Vec<(&str, &Vec<f64>)> = spec
        .nodes
        .iter()
        .filter_map(|n| n.position.as_ref().map(|p| (n.id.as_str(), p)))
        .filter(|(_, p)| p.len() == d)
        .collect();
    for (k, (a, pa)) in placed.iter().enumerate() {
        for (b, pb) in &placed[k + 1..] {
            let dist = pa
                .iter()
                .zip(pb.iter())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            if dist <= tol {
                violations.push(Violation::CollocatedNodes {
                    first: a.to_string(),
                    second: b.to_string(),
                });
            }
        }
    }

    for [a, b] in &spec.edges {
        for end in [a, b] {
            if !seen.contains(end.as_str()) {
                violations.push(Violation::DanglingEdge {
                    tail: a.clone(),
                    head: b.clone(),
                    missing: end.clone(),
                });
            }
        }
        if a == b {
            violations.push(Violation::SelfLoop { id: a.clone() });
        }
    }
    violations
}

fn canonical_edges(spec: &NetworkSpec, index: &IndexMap) -> Vec<(usize, usize)> {
    let set: BTreeSet<(usize, usize)> = spec
        .edges
        .iter()
        .map(|[a, b]| {
            let (i, j) = (index.index_of(a).unwrap(), index.index_of(b).unwrap());
            (i.min(j), i.max(j))
        })
        .collect();
    set.into_iter().collect()
}

impl Network {
    fn assemble(dimension: usize, index: IndexMap, positions: Vec<DVector<f64>>, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); index.len()];
        for &(i, j) in &edges {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        Self {
            dimension,
            index,
            positions,
            edges,
            adjacency,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_nodes(&self) -> usize {
        self.index.len()
    }

    pub fn n_anchors(&self) -> usize {
        self.index.n_anchors()
    }

    pub fn n_followers(&self) -> usize {
        self.index.n_followers()
    }

    pub fn index(&self) -> &IndexMap {
        &self.index
    }

    pub fn position(&self, i: usize) -> &DVector<f64> {
        &self.positions[i]
    }

    pub fn positions(&self) -> &[DVector<f64>] {
        &self.positions
    }

    /// Undirected edges `(tail, head)` with `tail < head` in internal indices.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn stacked_positions(&self) -> StackedPosition {
        let d = self.dimension;
        let mut data = DVector::zeros(d * self.n_nodes());
        for (i, p) in self.positions.iter().enumerate() {
            data.rows_mut(i * d, d).copy_from(p);
        }
        StackedPosition::new(d, self.n_anchors(), data)
    }

    /// Same network with every anchor pair connected.
    pub fn augment_anchors(&self) -> Network {
        let mut set: BTreeSet<(usize, usize)> = self.edges.iter().copied().collect();
        let na = self.n_anchors();
        for i in 0..na {
            for j in i + 1..na {
                set.insert((i, j));
            }
        }
        Network::assemble(
            self.dimension,
            self.index.clone(),
            self.positions.clone(),
            set.into_iter().collect(),
        )
    }

    /// Same graph and anchor partition with node positions replaced by
    /// `positions` (internal order). Used to build translated or scaled
    /// variants in tests and experiments.
    pub fn with_positions(&self, positions: &StackedPosition) -> Result<Network, ValidationErrors> {
        let mut spec = self.to_spec();
        let d = self.dimension;
        for node in &mut spec.nodes {
            let i = self.index.index_of(&node.id).unwrap();
            node.position = Some(positions.as_vector().rows(i * d, d).iter().copied().collect());
        }
        validate(&spec)
    }

    /// Oriented incidence matrix (`m x n`): row `k` holds `-1` at the tail
    /// and `+1` at the head of edge `k`, with tail the smaller internal index.
    pub fn incidence_matrix(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.edges.len(), self.n_nodes());
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            h[(k, i)] = -1.0;
            h[(k, j)] = 1.0;
        }
        h
    }

    /// Largest distance between any two nodes.
    pub fn diameter(&self) -> f64 {
        diameter(&self.positions)
    }

    /// Bearings derived from the node positions for every edge.
    pub fn measurements(&self) -> MeasuredNetwork {
        let d = self.dimension;
        let na = self.n_anchors();
        let mut anchors = DVector::zeros(d * na);
        for i in 0..na {
            anchors.rows_mut(i * d, d).copy_from(&self.positions[i]);
        }
        let edges = self
            .edges
            .iter()
            .map(|&(i, j)| MeasuredEdge {
                tail: i,
                head: j,
                direction: geometry::bearing(&self.positions[i], &self.positions[j])
                    .expect("validated network has no collocated nodes"),
            })
            .collect();
        let mut followers = DVector::zeros(d * self.n_followers());
        for (k, p) in self.positions[na..].iter().enumerate() {
            followers.rows_mut(k * d, d).copy_from(p);
        }
        MeasuredNetwork {
            dimension: d,
            index: self.index.clone(),
            anchor_positions: anchors,
            edges,
            follower_truth: Some(followers),
        }
    }

    /// Back to an external-id description (undirected edges listed once).
    pub fn to_spec(&self) -> NetworkSpec {
        NetworkSpec {
            dimension: self.dimension,
            nodes: (0..self.n_nodes())
                .map(|i| NodeSpec {
                    id: self.index.id(i).to_string(),
                    position: Some(self.positions[i].iter().copied().collect()),
                    anchor: self.index.is_anchor(i),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|&(i, j)| [self.index.id(i).to_string(), self.index.id(j).to_string()])
                .collect(),
            bearings: Vec::new(),
        }
    }
}

pub(crate) fn diameter(points: &[DVector<f64>]) -> f64 {
    let mut best = 0.0_f64;
    for (k, a) in points.iter().enumerate() {
        for b in &points[k + 1..] {
            best = best.max((a - b).norm());
        }
    }
    best
}

/// An undirected edge with its bearing from `tail` toward `head`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredEdge {
    pub tail: usize,
    pub head: usize,
    pub direction: DVector<f64>,
}

/// The inputs the localization problem actually consumes: anchor positions
/// and one bearing per undirected edge. Follower positions, when known, are
/// carried along only as ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredNetwork {
    pub dimension: usize,
    pub index: IndexMap,
    /// Stacked anchor positions in internal order.
    pub anchor_positions: DVector<f64>,
    /// Edges with `tail < head`, sorted.
    pub edges: Vec<MeasuredEdge>,
    /// Stacked follower positions when every follower has one.
    pub follower_truth: Option<DVector<f64>>,
}

impl MeasuredNetwork {
    pub fn n_anchors(&self) -> usize {
        self.index.n_anchors()
    }

    pub fn n_followers(&self) -> usize {
        self.index.n_followers()
    }

    pub fn n_nodes(&self) -> usize {
        self.index.len()
    }
}

/// Builds a [`MeasuredNetwork`] from a spec whose follower positions may be
/// omitted. Explicit `bearings` take precedence over position-derived ones;
/// an edge touching a node without position must carry one.
pub fn measured_network(spec: &NetworkSpec) -> Result<MeasuredNetwork, ValidationErrors> {
    let mut violations = check_common(spec);
    for n in spec.nodes.iter().filter(|n| n.anchor) {
        if n.position.is_none() {
            violations.push(Violation::MissingPosition { id: n.id.clone() });
        }
    }
    if !violations.is_empty() {
        return Err(ValidationErrors(violations));
    }
    let d = spec.dimension;
    let index = IndexMap::from_nodes(&spec.nodes);
    let by_id: HashMap<&str, &NodeSpec> = spec.nodes.iter().map(|n| (n.id.as_str(), n)).collect();
    let position = |i: usize| -> Option<DVector<f64>> { by_id[index.id(i)].position.clone().map(DVector::from_vec) };

    // Supplied bearings, re-oriented to tail < head.
    let mut supplied: HashMap<(usize, usize), DVector<f64>> = HashMap::new();
    for b in &spec.bearings {
        let (Some(i), Some(j)) = (index.index_of(&b.tail), index.index_of(&b.head)) else {
            violations.push(Violation::DanglingEdge {
                tail: b.tail.clone(),
                head: b.head.clone(),
                missing: if index.index_of(&b.tail).is_none() {
                    b.tail.clone()
                } else {
                    b.head.clone()
                },
            });
            continue;
        };
        let v = DVector::from_vec(b.direction.clone());
        let norm = v.norm();
        if v.len() != d || i == j || !norm.is_finite() || norm <= collocation_tolerance(0.0) {
            violations.push(Violation::InvalidBearing {
                tail: b.tail.clone(),
                head: b.head.clone(),
            });
            continue;
        }
        let mut g = v / norm;
        let key = if i < j {
            (i, j)
        } else {
            g = -g;
            (j, i)
        };
        if let Some(prev) = supplied.get(&key) {
            if (prev - &g).norm() > 1e-6 {
                violations.push(Violation::InconsistentBearings {
                    tail: b.tail.clone(),
                    head: b.head.clone(),
                });
            }
        } else {
            supplied.insert(key, g);
        }
    }

    let mut edges = Vec::new();
    for (i, j) in canonical_edges(spec, &index) {
        let direction = match supplied.get(&(i, j)) {
            Some(g) => g.clone(),
            None => match (position(i), position(j)) {
                (Some(pi), Some(pj)) => geometry::bearing(&pi, &pj).expect("collocation checked during validation"),
                _ => {
                    violations.push(Violation::MissingBearing {
                        tail: index.id(i).to_string(),
                        head: index.id(j).to_string(),
                    });
                    continue;
                }
            },
        };
        edges.push(MeasuredEdge {
            tail: i,
            head: j,
            direction,
        });
    }
    if !violations.is_empty() {
        return Err(ValidationErrors(violations));
    }

    let na = index.n_anchors();
    let mut anchors = DVector::zeros(d * na);
    for i in 0..na {
        anchors.rows_mut(i * d, d).copy_from(&position(i).unwrap());
    }
    let follower_truth = (na..index.len())
        .map(position)
        .collect::<Option<Vec<_>>>()
        .map(|ps| DVector::from_iterator(ps.len() * d, ps.iter().flat_map(|p| p.iter().copied())));
    Ok(MeasuredNetwork {
        dimension: d,
        index,
        anchor_positions: anchors,
        edges,
        follower_truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> NetworkSpec {
        NetworkSpec::from_parts(
            2,
            vec![
                ("1", vec![0.0, 0.0], true),
                ("2", vec![0.0, -3.0], true),
                ("3", vec![3.0, -3.0], false),
                ("4", vec![3.0, 0.0], false),
            ],
            vec![("1", "2"), ("2", "3"), ("3", "4"), ("4", "1")],
        )
    }

    #[test]
    fn square_is_valid() {
        let net = validate(&square()).unwrap();
        assert_eq!(net.n_anchors(), 2);
        assert_eq!(net.n_followers(), 2);
        assert_eq!(net.edges().len(), 4);
    }

    #[test]
    fn collocated_nodes_rejected() {
        let spec = NetworkSpec::from_parts(
            2,
            vec![("a", vec![0.0, 0.0], true), ("b", vec![0.0, 0.0], false)],
            vec![("a", "b")],
        );
        let err = validate(&spec).unwrap_err();
        assert!(matches!(err.violations()[0], Violation::CollocatedNodes { .. }));
    }

    #[test]
    fn collocation_tolerance_is_relative() {
        // 1e-9 apart at coordinates ~1e6 is within tolerance 1e-12*(1+1e6).
        let spec = NetworkSpec::from_parts(
            2,
            vec![("a", vec![1e6, 0.0], true), ("b", vec![1e6 + 1e-9, 0.0], false)],
            vec![("a", "b")],
        );
        assert!(validate(&spec).is_err());
        let spec = NetworkSpec::from_parts(
            2,
            vec![("a", vec![0.0, 0.0], true), ("b", vec![1e-9, 0.0], false)],
            vec![("a", "b")],
        );
        assert!(validate(&spec).is_ok());
    }

    #[test]
    fn dangling_edge_rejected() {
        let mut spec = square();
        spec.edges.push(["1".into(), "x9".into()]);
        let err = validate(&spec).unwrap_err();
        assert_eq!(
            err.violations(),
            &[Violation::DanglingEdge {
                tail: "1".into(),
                head: "x9".into(),
                missing: "x9".into()
            }]
        );
    }

    #[test]
    fn reports_every_violation() {
        let spec = NetworkSpec::from_parts(
            2,
            vec![("a", vec![0.0, 0.0, 1.0], true), ("b", vec![1.0, 0.0], true)],
            vec![("a", "zz"), ("b", "b")],
        );
        let err = validate(&spec).unwrap_err();
        let v = err.violations();
        assert!(v.iter().any(|x| matches!(x, Violation::DimensionMismatch { .. })));
        assert!(v.contains(&Violation::NoFollowers));
        assert!(v.iter().any(|x| matches!(x, Violation::DanglingEdge { .. })));
        assert!(v.contains(&Violation::SelfLoop { id: "b".into() }));
    }

    #[test]
    fn anchors_precede_followers() {
        let spec = NetworkSpec::from_parts(
            2,
            vec![
                ("f1", vec![1.0, 0.0], false),
                ("a1", vec![0.0, 0.0], true),
                ("f2", vec![2.0, 1.0], false),
                ("a2", vec![0.0, 5.0], true),
            ],
            vec![("f1", "a1")],
        );
        let net = validate(&spec).unwrap();
        assert_eq!(net.index().ids(), &["a1", "a2", "f1", "f2"]);
        for id in ["a1", "a2", "f1", "f2"] {
            let i = net.index().index_of(id).unwrap();
            assert_eq!(net.index().id(i), id);
        }
        assert_eq!(net.edges(), &[(0, 2)]);
        assert_eq!(net.position(2).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn symmetrize_examples() {
        let spec = NetworkSpec::from_parts(
            2,
            vec![("1", vec![0.0, 0.0], true), ("2", vec![1.0, 0.0], false)],
            vec![("1", "2")],
        );
        let s = spec.symmetrize();
        assert_eq!(s.edges.len(), 2);
        assert_eq!(s.symmetrize(), s);
        let net = validate(&s).unwrap();
        assert_eq!(net.edges(), &[(0, 1)]);

        let tri = NetworkSpec::from_parts(
            2,
            vec![
                ("1", vec![0.0, 0.0], true),
                ("2", vec![1.0, 0.0], true),
                ("3", vec![0.0, 1.0], false),
            ],
            vec![("1", "2"), ("2", "3"), ("3", "1")],
        );
        assert_eq!(tri.symmetrize().undirected_edges(), tri.undirected_edges());
        assert_eq!(tri.symmetrize().edges.len(), 6);
    }

    #[test]
    fn augment_examples() {
        let two = NetworkSpec::from_parts(
            2,
            vec![
                ("1", vec![0.0, 0.0], true),
                ("2", vec![4.0, 0.0], true),
                ("3", vec![2.0, 3.0], false),
            ],
            vec![("1", "3"), ("2", "3")],
        );
        assert_eq!(two.augment_anchors().undirected_edges().len(), 3);
        let tri = NetworkSpec::from_parts(
            2,
            vec![
                ("1", vec![0.0, 0.0], true),
                ("2", vec![4.0, 0.0], true),
                ("3", vec![2.0, 3.0], false),
            ],
            vec![("1", "2"), ("2", "3"), ("3", "1")],
        );
        assert_eq!(tri.augment_anchors(), tri);
        let three = NetworkSpec::from_parts(
            2,
            vec![
                ("a", vec![0.0, 0.0], true),
                ("b", vec![4.0, 0.0], true),
                ("c", vec![2.0, 3.0], true),
                ("f", vec![2.0, 1.0], false),
            ],
            vec![("a", "f")],
        );
        let aug = three.augment_anchors();
        assert_eq!(aug.edges.len(), 4);
        let net = validate(&three).unwrap().augment_anchors();
        assert_eq!(net.edges().len(), 4);
    }

    #[test]
    fn incidence_examples() {
        let spec = NetworkSpec::from_parts(
            2,
            vec![("1", vec![0.0, 0.0], true), ("2", vec![1.0, 0.0], false)],
            vec![("1", "2")],
        );
        let h = validate(&spec).unwrap().incidence_matrix();
        assert_eq!(h, DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));

        let h = validate(&square()).unwrap().incidence_matrix();
        assert_eq!(h.shape(), (4, 4));
        for row in h.row_iter() {
            assert_eq!(row.sum(), 0.0);
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x == -1.0).count(), 1);
        }
    }

    #[test]
    fn measured_network_with_withheld_followers() {
        let mut spec = NetworkSpec::from_parts(
            2,
            vec![
                ("1", vec![0.0, 0.0], true),
                ("2", vec![4.0, 0.0], true),
                ("3", vec![2.0, 3.0], false),
            ],
            vec![("1", "2"), ("2", "3"), ("3", "1")],
        );
        spec.nodes[2].position = None;
        assert!(measured_network(&spec).is_err());
        let s = 13f64.sqrt();
        spec.bearings = vec![
            BearingSpec {
                tail: "3".into(),
                head: "2".into(),
                direction: vec![2.0 / s, -3.0 / s],
            },
            BearingSpec {
                tail: "1".into(),
                head: "3".into(),
                direction: vec![2.0, 3.0],
            },
        ];
        let m = measured_network(&spec).unwrap();
        assert!(m.follower_truth.is_none());
        assert_eq!(m.edges.len(), 3);
        // (2,3) stored as tail=1 (node "2"), head=2 (node "3").
        let e = m.edges.iter().find(|e| e.tail == 1 && e.head == 2).unwrap();
        assert!((e.direction[0] + 2.0 / s).abs() < 1e-15);
        assert!((e.direction[1] - 3.0 / s).abs() < 1e-15);
        let e = m.edges.iter().find(|e| e.tail == 0 && e.head == 2).unwrap();
        assert!((e.direction.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_bearings_rejected() {
        let spec = NetworkSpec {
            bearings: vec![
                BearingSpec {
                    tail: "1".into(),
                    head: "2".into(),
                    direction: vec![1.0, 0.0],
                },
                BearingSpec {
                    tail: "2".into(),
                    head: "1".into(),
                    direction: vec![1.0, 0.0],
                },
            ],
            ..NetworkSpec::from_parts(
                2,
                vec![("1", vec![0.0, 0.0], true), ("2", vec![1.0, 0.0], false)],
                vec![("1", "2")],
            )
        };
        let err = measured_network(&spec).unwrap_err();
        assert!(matches!(err.violations()[0], Violation::InconsistentBearings { .. }));
    }
}
