// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Circuit and hardware data model.
//!
//! A circuit is reduced to its two-qubit interactions, grouped into layers whose gates act
//! on pairwise disjoint qubits. The hardware is an undirected coupling graph.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix, PermutationMatrix, MAX_QUBITS};

/// An undirected two-qubit interaction. The orientation of `(a, b)` and the label are
/// carried through routing untouched.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub a: usize,
    pub b: usize,
    pub label: Option<String>,
}

impl Gate {
    pub fn new(a: usize, b: usize) -> Self {
        Self { a, b, label: None }
    }

    pub fn with_label(a: usize, b: usize, label: impl Into<String>) -> Self {
        Self {
            a,
            b,
            label: Some(label.into()),
        }
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// The pair as `(min, max)`.
    pub fn key(&self) -> (usize, usize) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

/// A sequence of matching layers over `m` qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredCircuit {
    m: usize,
    layers: Vec<Vec<Gate>>,
}

fn check_gate(m: usize, g: &Gate) -> Result<()> {
    if g.a >= m || g.b >= m {
        return Err(Error::Argument(format!(
            "gate ({}, {}) out of range for {m} qubits",
            g.a, g.b
        )));
    }
    if g.a == g.b {
        return Err(Error::Argument(format!("gate ({}, {}) acts on one qubit", g.a, g.b)));
    }
    Ok(())
}

impl LayeredCircuit {
    /// Builds a circuit from explicit layers, checking that every layer is a matching.
    pub fn new(m: usize, layers: Vec<Vec<Gate>>) -> Result<Self> {
        if m > MAX_QUBITS {
            return Err(Error::Size(format!("{m} qubits exceeds {MAX_QUBITS}")));
        }
        for (t, layer) in layers.iter().enumerate() {
            let mut busy = vec![false; m];
            for g in layer {
                check_gate(m, g)?;
                if busy[g.a] || busy[g.b] {
                    return Err(Error::Argument(format!(
                        "layer {t} is not a matching: qubit reused by ({}, {})",
                        g.a, g.b
                    )));
                }
                busy[g.a] = true;
                busy[g.b] = true;
            }
        }
        Ok(Self { m, layers })
    }

    pub fn from_pairs(m: usize, layers: &[Vec<(usize, usize)>]) -> Result<Self> {
        Self::new(
            m,
            layers
                .iter()
                .map(|l| l.iter().map(|&(a, b)| Gate::new(a, b)).collect())
                .collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.m
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_gates(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn layer(&self, t: usize) -> &[Gate] {
        &self.layers[t]
    }

    /// Layers `range` as a new circuit on the same qubits.
    pub fn slice(&self, range: std::ops::Range<usize>) -> LayeredCircuit {
        Self {
            m: self.m,
            layers: self.layers[range].to_vec(),
        }
    }

    /// Gates in program order (layer by layer).
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    /// Symmetric 0/1 adjacency matrix `G^(t)` of layer `t`.
    pub fn layer_adjacency(&self, t: usize) -> Matrix {
        let mut g = Matrix::zeros(self.m, self.m);
        for gate in &self.layers[t] {
            g[(gate.a, gate.b)] = 1.0;
            g[(gate.b, gate.a)] = 1.0;
        }
        g
    }
}

/// Greedy as-soon-as-possible packing of a gate list into matching layers.
pub fn layerize(m: usize, gates: &[(usize, usize)]) -> Result<LayeredCircuit> {
    layerize_gates(m, gates.iter().map(|&(a, b)| Gate::new(a, b)).collect())
}

/// As [`layerize`], keeping gate labels.
pub fn layerize_gates(m: usize, gates: Vec<Gate>) -> Result<LayeredCircuit> {
    if m > MAX_QUBITS {
        return Err(Error::Size(format!("{m} qubits exceeds {MAX_QUBITS}")));
    }
    // next free layer per qubit
    let mut frontier = vec![0usize; m];
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    for g in gates {
        check_gate(m, &g)?;
        let t = frontier[g.a].max(frontier[g.b]);
        if t == layers.len() {
            layers.push(Vec::new());
        }
        frontier[g.a] = t + 1;
        frontier[g.b] = t + 1;
        layers[t].push(g);
    }
    Ok(LayeredCircuit { m, layers })
}

/// Hardware coupling graph.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    m: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    adjacency: Matrix,
    complement: Matrix,
}

impl Topology {
    /// Builds a topology from an edge list. Edges are normalized to `(min, max)`, sorted and
    /// deduplicated. The graph must be connected and not complete.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m < 2 {
            return Err(Error::Topology(format!("need at least 2 qubits, got {m}")));
        }
        if m > MAX_QUBITS {
            return Err(Error::Size(format!("{m} qubits exceeds {MAX_QUBITS}")));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::Topology(format!("edge ({a}, {b}) out of range for {m} qubits")));
            }
            if a == b {
                return Err(Error::Topology(format!("self loop on qubit {a}")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        if norm.len() == m * (m - 1) / 2 {
            return Err(Error::Topology(
                "coupling graph is complete, nothing to route".into(),
            ));
        }
        let mut neighbors = vec![Vec::new(); m];
        let mut adjacency = Matrix::zeros(m, m);
        for &(a, b) in &norm {
            neighbors[a].push(b);
            neighbors[b].push(a);
            adjacency[(a, b)] = 1.0;
            adjacency[(b, a)] = 1.0;
        }
        for n in neighbors.iter_mut() {
            n.sort_unstable();
        }
        let mut seen = vec![false; m];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &neighbors[v] {
                if !std::mem::replace(&mut seen[w], true) {
                    queue.push_back(w);
                }
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::Topology(format!("coupling graph is disconnected at qubit {v}")));
        }
        let mut complement = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                if i != j && adjacency[(i, j)] == 0.0 {
                    complement[(i, j)] = 1.0;
                }
            }
        }
        Ok(Self {
            m,
            edges: norm,
            neighbors,
            adjacency,
            complement,
        })
    }

    /// A chain `0 - 1 - ... - (m-1)`.
    pub fn line(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Topology(format!("line needs at least 3 qubits, got {m}")));
        }
        let edges: Vec<_> = (0..m - 1).map(|k| (k, k + 1)).collect();
        Self::from_edges(m, &edges)
    }

    /// A line closed by the edge `(m-1, 0)`. `m = 3` is a triangle, which is complete and
    /// therefore rejected.
    pub fn ring(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::Topology(format!("ring needs at least 3 qubits, got {m}")));
        }
        let mut edges: Vec<_> = (0..m - 1).map(|k| (k, k + 1)).collect();
        edges.push((m - 1, 0));
        Self::from_edges(m, &edges)
    }

    /// A strip of `cells` hexagons sharing vertical edges, with an extra qubit on every
    /// hexagon edge. Produces `9·cells + 3` qubits with maximum degree 3.
    ///
    /// Qubits are numbered row by row: the top row (`4·cells + 1` qubits), then the bridge
    /// qubits of the vertical edges (`cells + 1`), then the bottom row.
    pub fn heavy_hex(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Topology("heavy-hex needs at least one cell".into()));
        }
        let row = 4 * cells + 1;
        let bridges = cells + 1;
        let m = 2 * row + bridges;
        if m > MAX_QUBITS {
            return Err(Error::Size(format!("heavy-hex with {cells} cells has {m} qubits")));
        }
        let bottom = row + bridges;
        let mut edges = Vec::new();
        for k in 0..row - 1 {
            edges.push((k, k + 1));
            edges.push((bottom + k, bottom + k + 1));
        }
        for k in 0..bridges {
            let bridge = row + k;
            edges.push((4 * k, bridge));
            edges.push((bridge, bottom + 4 * k));
        }
        Self::from_edges(m, &edges)
    }

    /// Parses `line:M`, `ring:M` or `heavyhex:CELLS`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (kind, arg) = spec
            .split_once(':')
            .ok_or_else(|| Error::parse("coupling", format!("expected KIND:N, got {spec:?}")))?;
        let n: usize = arg
            .trim()
            .parse()
            .map_err(|_| Error::parse("coupling", format!("bad size {arg:?}")))?;
        match kind.trim() {
            "line" => Self::line(n),
            "ring" => Self::ring(n),
            "heavyhex" | "heavy-hex" | "heavy_hex" => Self::heavy_hex(n),
            other => Err(Error::parse("coupling", format!("unknown topology kind {other:?}"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TopologyFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
        })?;
        let edges: Vec<_> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::from_edges(file.qubits, &edges)
    }

    pub fn to_json(&self) -> String {
        let file = TopologyFile {
            qubits: self.m,
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
        };
        serde_json::to_string(&file).expect("topology serializes")
    }

    pub fn num_qubits(&self) -> usize {
        self.m
    }

    /// Sorted `(min, max)` edges.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.m && b < self.m && self.adjacency[(a, b)] == 1.0
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `M`.
    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    /// `M_c`: 1 on every non-edge off the diagonal, 0 elsewhere.
    pub fn complement(&self) -> &Matrix {
        &self.complement
    }
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    qubits: usize,
    edges: Vec<[usize; 2]>,
}

/// Logical to physical qubit assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QubitMap {
    perm: PermutationMatrix,
}

impl QubitMap {
    pub fn identity(m: usize) -> Self {
        Self {
            perm: PermutationMatrix::identity(m),
        }
    }

    pub fn from_permutation(perm: PermutationMatrix) -> Self {
        Self { perm }
    }

    pub fn from_mapping(mapping: Vec<usize>) -> Result<Self> {
        Ok(Self {
            perm: PermutationMatrix::from_mapping(mapping)?,
        })
    }

    pub fn size(&self) -> usize {
        self.perm.size()
    }

    /// Physical position of logical qubit `q`.
    #[inline]
    pub fn physical(&self, q: usize) -> usize {
        self.perm.apply(q)
    }

    pub fn permutation(&self) -> &PermutationMatrix {
        &self.perm
    }

    pub fn mapping(&self) -> &[usize] {
        self.perm.mapping()
    }

    /// Exchanges whatever sits on physical qubits `i` and `j`.
    pub fn apply_swap(&mut self, i: usize, j: usize) {
        self.perm.swap_after(i, j);
    }

    /// `self ∘ other`: `other` first.
    pub fn compose(&self, other: &QubitMap) -> Result<QubitMap> {
        Ok(Self {
            perm: self.perm.compose(&other.perm)?,
        })
    }

    pub fn inverse(&self) -> QubitMap {
        Self {
            perm: self.perm.inverse(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.is_identity()
    }
}

/// Relabels every gate `(a, b)` to `(p(a), p(b))`.
pub fn apply_permutation(c: &LayeredCircuit, p: &QubitMap) -> Result<LayeredCircuit> {
    if p.size() != c.m {
        return Err(Error::Argument(format!(
            "map of size {} applied to a {}-qubit circuit",
            p.size(),
            c.m
        )));
    }
    let layers = c
        .layers
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|g| Gate {
                    a: p.physical(g.a),
                    b: p.physical(g.b),
                    label: g.label.clone(),
                })
                .collect()
        })
        .collect();
    Ok(LayeredCircuit { m: c.m, layers })
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    qubits: usize,
    gates: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// Reads the circuit JSON format and layerizes it.
pub fn parse_circuit(text: &str) -> Result<LayeredCircuit> {
    let file: CircuitFile = serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    if file.qubits > MAX_QUBITS {
        return Err(Error::parse("qubits", format!("{} exceeds {MAX_QUBITS}", file.qubits)));
    }
    if let Some(labels) = &file.labels {
        if labels.len() != file.gates.len() {
            return Err(Error::parse(
                "labels",
                format!("{} labels for {} gates", labels.len(), file.gates.len()),
            ));
        }
    }
    let mut gates = Vec::with_capacity(file.gates.len());
    for (k, [a, b]) in file.gates.iter().copied().enumerate() {
        if a >= file.qubits || b >= file.qubits {
            return Err(Error::parse(
                format!("gates[{k}]"),
                format!("qubit out of range for {} qubits", file.qubits),
            ));
        }
        if a == b {
            return Err(Error::parse(format!("gates[{k}]"), format!("duplicate qubit {a}")));
        }
        let label = file.labels.as_ref().map(|l| l[k].clone());
        gates.push(Gate { a, b, label });
    }
    layerize_gates(file.qubits, gates)
}

/// Writes the circuit JSON format, gates in layer order.
pub fn emit_circuit(c: &LayeredCircuit) -> String {
    let has_labels = c.gates().any(|g| g.label.is_some());
    let file = CircuitFile {
        qubits: c.m,
        gates: c.gates().map(|g| [g.a, g.b]).collect(),
        labels: has_labels.then(|| c.gates().map(|g| g.label.clone().unwrap_or_default()).collect()),
    };
    serde_json::to_string(&file).expect("circuit serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(c: &LayeredCircuit) -> Vec<Vec<(usize, usize)>> {
        c.layers().iter().map(|l| l.iter().map(Gate::pair).collect()).collect()
    }

    #[test]
    fn layerize_examples() {
        let c = layerize(7, &[(0, 2), (1, 3), (5, 6)]).unwrap();
        assert_eq!(c.num_layers(), 1);
        assert_eq!(layerize(3, &[(0, 1), (1, 2)]).unwrap().num_layers(), 2);
        let c = layerize(4, &[(0, 1), (2, 3), (0, 2)]).unwrap();
        assert_eq!(pairs(&c), vec![vec![(0, 1), (2, 3)], vec![(0, 2)]]);
        assert!(layerize(3, &[(0, 3)]).is_err());
        assert!(layerize(3, &[(1, 1)]).is_err());
    }

    #[test]
    fn layerize_keeps_order_on_shared_qubits() {
        // (2,3) may float past (0,1) but not past (1,2)
        let c = layerize(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(pairs(&c), vec![vec![(0, 1)], vec![(1, 2)], vec![(2, 3)]]);
    }

    #[test]
    fn topologies() {
        let line = Topology::line(5).unwrap();
        assert_eq!(line.edges(), &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        let ring = Topology::ring(4).unwrap();
        assert_eq!(ring.edges(), &[(0, 1), (0, 3), (1, 2), (2, 3)]);
        let hh = Topology::heavy_hex(3).unwrap();
        assert_eq!(hh.num_qubits(), 30);
        assert_eq!(hh.max_degree(), 3);
        assert_eq!(Topology::heavy_hex(1).unwrap().num_qubits(), 12);
        assert!(Topology::heavy_hex(1).unwrap().edges().len() == 12);
    }

    #[test]
    fn topology_errors() {
        assert!(matches!(Topology::from_edges(4, &[(0, 1), (2, 3)]), Err(Error::Topology(_))));
        assert!(matches!(Topology::ring(3), Err(Error::Topology(_))));
        assert!(matches!(
            Topology::from_edges(3, &[(0, 1), (1, 2), (0, 2)]),
            Err(Error::Topology(_))
        ));
        assert!(Topology::line(2).is_err());
        assert!(Topology::from_spec("torus:4").is_err());
        assert!(Topology::from_spec("line4").is_err());
        assert_eq!(Topology::from_spec("line:4").unwrap(), Topology::line(4).unwrap());
    }

    #[test]
    fn complement_structure() {
        let t = Topology::heavy_hex(1).unwrap();
        let m = t.num_qubits();
        for i in 0..m {
            for j in 0..m {
                let s = t.adjacency()[(i, j)] + t.complement()[(i, j)] + if i == j { 1.0 } else { 0.0 };
                assert_eq!(s, 1.0);
                assert_eq!(t.adjacency()[(i, j)] * t.complement()[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn topology_json_round_trip() {
        let t = Topology::ring(6).unwrap();
        assert_eq!(Topology::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn apply_permutation_examples() {
        let c = LayeredCircuit::from_pairs(3, &[vec![(0, 2)]]).unwrap();
        assert_eq!(apply_permutation(&c, &QubitMap::identity(3)).unwrap(), c);
        let mut p = QubitMap::identity(3);
        p.apply_swap(1, 2);
        let moved = apply_permutation(&c, &p).unwrap();
        assert_eq!(pairs(&moved), vec![vec![(0, 1)]]);
        assert_eq!(apply_permutation(&moved, &p.inverse()).unwrap(), c);
        assert!(apply_permutation(&c, &QubitMap::identity(4)).is_err());
    }

    #[test]
    fn parse_examples() {
        let c = parse_circuit(r#"{"qubits":3,"gates":[[0,2]]}"#).unwrap();
        assert_eq!(c.num_layers(), 1);
        let err = parse_circuit(r#"{"qubits":2,"gates":[[0,0]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref context, .. } if context == "gates[0]"));
        let err = parse_circuit(r#"{"qubits":2,"gates":[[0,5]]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = parse_circuit("{\"qubits\":2,\n\"gates\":[[0,1]").unwrap_err();
        assert!(matches!(err, Error::Parse { ref context, .. } if context.starts_with("line 2")));
        assert!(parse_circuit(r#"{"qubits":2,"gates":[[0,1]],"labels":[]}"#).is_err());
    }

    #[test]
    fn labels_survive_round_trip() {
        let text = r#"{"qubits":3,"gates":[[0,1],[2,1]],"labels":["cx","cz"]}"#;
        let c = parse_circuit(text).unwrap();
        assert_eq!(c.layer(1)[0].label.as_deref(), Some("cz"));
        assert_eq!(emit_circuit(&c), text);
    }
}
