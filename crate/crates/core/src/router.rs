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

//! Rolling-horizon routing.
//!
//! The circuit is cut into windows of at most `horizon` layers. Each window is relabeled by
//! the placement reached so far, solved by [`knitter`], and the window start advances by the
//! number of leading layers the solution made feasible. Rounded angles become concrete swap
//! sub-layers (one per non-empty class block) in front of each routed layer.
//!
//! When no trial makes even the first layer feasible, the window is retried with more trials
//! and sweeps. With [`Fallback::RetryThenPlace`] a window that still fails gets its first
//! layer placed explicitly, so routing only errors when the coupling graph cannot host the
//! layer at all.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::circuit::{apply_permutation, Gate, LayeredCircuit, QubitMap, Topology};
use crate::coloring::{partition_generators, GeneratorSchedule};
use crate::cost::ThetaVector;
use crate::error::{Error, Result};
use crate::optimizer::{knitter, omega_round, KnitterConfig};

/// Swap pairs on physical qubits.
pub type SwapLayer = Vec<(usize, usize)>;

/// Tolerance for angles that should sit on `Ω`.
pub const OMEGA_TOL: f64 = 1e-9;

/// Maximum number of escalations before giving up on a window.
pub const MAX_ESCALATIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fallback {
    /// Report the stuck layer.
    Fail,
    /// Retry the window with twice the trials and one more sweep, up to
    /// [`MAX_ESCALATIONS`] times.
    RetryWithEscalation,
    /// Escalate as above; if every attempt misses, make the first layer of the window
    /// feasible with explicitly placed swaps and continue after it.
    RetryThenPlace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RouterConfig {
    pub horizon: usize,
    pub sweeps: usize,
    pub fallback: Fallback,
    pub undo_final_permutation: bool,
    pub knitter: KnitterConfig,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            horizon: 4,
            sweeps: 1,
            fallback: Fallback::RetryThenPlace,
            undo_final_permutation: false,
            knitter: KnitterConfig::default(),
        }
    }
}

/// One original layer after routing.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutedLayer {
    /// Non-empty swap sub-layers executed before the gates, in order.
    pub swaps: Vec<SwapLayer>,
    /// The layer's gates on physical qubits.
    pub gates: Vec<Gate>,
    /// Logical to physical placement in effect for `gates`.
    pub layout: QubitMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoutedCircuit {
    pub num_qubits: usize,
    pub program: Vec<RoutedLayer>,
    /// Swap sub-layers appended after the last layer to restore the identity placement.
    pub epilogue: Vec<SwapLayer>,
    pub final_permutation: QubitMap,
    pub windows: usize,
    pub escalations: usize,
    /// Layers whose swaps came from explicit placement instead of the solver.
    pub placed_layers: usize,
    pub config: RouterConfig,
}

impl RoutedCircuit {
    pub fn swap_layers(&self) -> impl Iterator<Item = &SwapLayer> {
        self.program
            .iter()
            .flat_map(|l| l.swaps.iter())
            .chain(self.epilogue.iter())
    }

    pub fn swaps_inserted(&self) -> usize {
        self.swap_layers().map(Vec::len).sum()
    }

    /// Number of swap sub-layers, i.e. the depth added on top of the original layers.
    pub fn swap_depth(&self) -> usize {
        self.swap_layers().count()
    }

    pub fn num_layers(&self) -> usize {
        self.program.len()
    }

    /// Original layers plus swap sub-layers.
    pub fn depth(&self) -> usize {
        self.program.len() + self.swap_depth()
    }
}

/// Realizes rounded angles: for each layer, one swap list per schedule block. A slot with
/// `sin²θ = 1` emits its generator, `sin²θ = 0` emits nothing.
pub fn thetas_to_swaps(theta: &ThetaVector, schedule: &GeneratorSchedule) -> Result<Vec<Vec<SwapLayer>>> {
    if theta.per_layer() != schedule.params_per_layer() {
        return Err(Error::Argument(format!(
            "{} parameters per layer, schedule has {}",
            theta.per_layer(),
            schedule.params_per_layer()
        )));
    }
    let mut out = Vec::with_capacity(theta.num_layers());
    for t in 0..theta.num_layers() {
        let row = theta.layer(t);
        let mut blocks = Vec::with_capacity(schedule.blocks().len());
        for block in schedule.blocks() {
            let mut layer = Vec::new();
            for s in block.slots() {
                let x = row[s];
                let k = omega_round(x);
                if (x - k as f64 * std::f64::consts::FRAC_PI_2).abs() > OMEGA_TOL {
                    return Err(Error::Contract(format!(
                        "angle {x} at layer {t} slot {s} is not a multiple of pi/2"
                    )));
                }
                if k.rem_euclid(2) == 1 {
                    layer.push(schedule.slot(s));
                }
            }
            blocks.push(layer);
        }
        out.push(blocks);
    }
    Ok(out)
}

fn window_seed(seed: u64, start: usize, attempt: usize) -> u64 {
    // splitmix64 finalizer over the window coordinates
    let mut z = seed
        ^ (start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (attempt as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Routes `circuit` onto `topology` starting from the identity placement.
pub fn route(circuit: &LayeredCircuit, topology: &Topology, config: &RouterConfig) -> Result<RoutedCircuit> {
    let m = topology.num_qubits();
    if circuit.num_qubits() != m {
        return Err(Error::Argument(format!(
            "circuit has {} qubits, topology {m}",
            circuit.num_qubits()
        )));
    }
    if config.horizon == 0 {
        return Err(Error::Argument("horizon must be at least 1".into()));
    }
    config.knitter.validate()?;
    let base_schedule = partition_generators(topology, config.sweeps)?;

    let total = circuit.num_layers();
    let mut map = QubitMap::identity(m);
    let mut program = Vec::with_capacity(total);
    let mut t = 0;
    let mut windows = 0;
    let mut escalations = 0;
    let mut placed_layers = 0;
    while t < total {
        let h = config.horizon.min(total - t);
        let window = apply_permutation(&circuit.slice(t..t + h), &map)?;
        let mut schedule = base_schedule.clone();
        let mut kcfg = config.knitter.clone();
        let mut attempt = 0;
        let theta = loop {
            kcfg.seed = window_seed(config.knitter.seed, t, attempt);
            let result = knitter(&window, topology, &schedule, &kcfg)?;
            if let Some(theta) = result.theta_star {
                break Some(theta);
            }
            if config.fallback == Fallback::Fail || attempt == MAX_ESCALATIONS {
                if config.fallback == Fallback::RetryThenPlace {
                    break None;
                }
                return Err(Error::Routing {
                    layer: t,
                    message: format!("no feasible layer after {} attempt(s)", attempt + 1),
                });
            }
            attempt += 1;
            escalations += 1;
            kcfg.max_trials *= 2;
            schedule = schedule.with_sweeps(schedule.sweeps() + 1)?;
        };
        windows += 1;
        let realized: Vec<Vec<SwapLayer>> = match &theta {
            Some(theta) => thetas_to_swaps(theta, &schedule)?,
            None => {
                placed_layers += 1;
                vec![place_layer(topology, &map, circuit.layer(t)).map_err(|e| match e {
                    Error::Routing { message, .. } => Error::Routing { layer: t, message },
                    other => other,
                })?]
            }
        };
        let advance = realized.len();
        for (k, blocks) in realized.into_iter().enumerate() {
            let swaps: Vec<SwapLayer> = blocks.into_iter().filter(|b| !b.is_empty()).collect();
            for &(i, j) in swaps.iter().flatten() {
                map.apply_swap(i, j);
            }
            let gates = circuit
                .layer(t + k)
                .iter()
                .map(|g| Gate {
                    a: map.physical(g.a),
                    b: map.physical(g.b),
                    label: g.label.clone(),
                })
                .collect();
            program.push(RoutedLayer {
                swaps,
                gates,
                layout: map.clone(),
            });
        }
        t += advance;
    }

    let mut epilogue = Vec::new();
    if config.undo_final_permutation {
        epilogue = restore_identity(topology, &mut map)?;
    }
    Ok(RoutedCircuit {
        num_qubits: m,
        program,
        epilogue,
        final_permutation: map,
        windows,
        escalations,
        placed_layers,
        config: config.clone(),
    })
}

/// Swaps along a BFS spanning tree that bring every logical qubit back to its own index,
/// packed into parallel sub-layers.
fn restore_identity(topology: &Topology, map: &mut QubitMap) -> Result<Vec<SwapLayer>> {
    let m = topology.num_qubits();
    let sequence = tree_token_swaps(topology, map, &QubitMap::identity(m));
    debug_assert!(map.is_identity());
    Ok(pack_swaps(m, sequence))
}

/// Moves every logical qubit `q` from `map.physical(q)` to `target.physical(q)` using swaps on
/// a BFS spanning tree, filling the tree from its leaves inward. Updates `map` in place.
fn tree_token_swaps(topology: &Topology, map: &mut QubitMap, target: &QubitMap) -> Vec<(usize, usize)> {
    let m = topology.num_qubits();
    let mut parent = vec![usize::MAX; m];
    let mut order = Vec::with_capacity(m);
    let mut seen = vec![false; m];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in topology.neighbors(v) {
            if !std::mem::replace(&mut seen[w], true) {
                parent[w] = v;
                queue.push_back(w);
            }
        }
    }
    let owner = target.inverse();
    let mut alive = vec![true; m];
    let mut sequence = Vec::new();
    for &spot in order.iter().rev() {
        let mut pos = map.physical(owner.physical(spot));
        while pos != spot {
            let next = tree_step(&parent, &alive, pos, spot);
            map.apply_swap(pos, next);
            sequence.push((pos.min(next), pos.max(next)));
            pos = next;
        }
        alive[spot] = false;
    }
    sequence
}

/// As-soon-as-possible packing of a swap sequence into sub-layers of disjoint pairs; swaps
/// sharing a qubit keep their relative order.
fn pack_swaps(m: usize, sequence: Vec<(usize, usize)>) -> Vec<SwapLayer> {
    let mut frontier = vec![0usize; m];
    let mut layers: Vec<SwapLayer> = Vec::new();
    for (a, b) in sequence {
        let t = frontier[a].max(frontier[b]);
        if t == layers.len() {
            layers.push(Vec::new());
        }
        frontier[a] = t + 1;
        frontier[b] = t + 1;
        layers[t].push((a, b));
    }
    layers
}

fn distances(topology: &Topology) -> Vec<Vec<usize>> {
    let m = topology.num_qubits();
    (0..m)
        .map(|src| {
            let mut d = vec![usize::MAX; m];
            d[src] = 0;
            let mut queue = VecDeque::from([src]);
            while let Some(v) = queue.pop_front() {
                for &w in topology.neighbors(v) {
                    if d[w] == usize::MAX {
                        d[w] = d[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            d
        })
        .collect()
}

/// Shortest path `from -> to` whose interior avoids `blocked`.
fn free_path(topology: &Topology, blocked: &[bool], from: usize, to: usize) -> Option<Vec<usize>> {
    let m = topology.num_qubits();
    let mut prev = vec![usize::MAX; m];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = vec![to];
            let mut x = to;
            while x != from {
                x = prev[x];
                path.push(x);
            }
            path.reverse();
            return Some(path);
        }
        for &w in topology.neighbors(v) {
            if prev[w] == usize::MAX && (w == to || !blocked[w]) {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    None
}

/// Swap sub-layers, before `layer` (logical gates), that put every gate on a coupling edge
/// given the current placement `map`.
///
/// Gates are first walked together along shortest paths that avoid already-settled pairs.
/// If that gets stuck, a full placement is chosen greedily (each gate onto the free edge
/// nearest to it) and reached by tree token swapping.
fn place_layer(topology: &Topology, map: &QubitMap, layer: &[Gate]) -> Result<Vec<SwapLayer>> {
    let m = topology.num_qubits();
    if let Some(seq) = walk_gates_together(topology, map, layer) {
        return Ok(pack_swaps(m, seq));
    }
    let dist = distances(topology);
    let (mut taken, mut target) = match assign_gates(map, layer, topology.edges(), &dist) {
        Some(found) => found,
        None => {
            // greedy picks can block each other; a maximum matching always has room if
            // any placement does
            let graph = petgraph::graph::UnGraph::<(), ()>::from_edges(
                topology.edges().iter().map(|&(u, v)| (u as u32, v as u32)),
            );
            let matching: Vec<(usize, usize)> = petgraph::algo::maximum_matching(&graph)
                .edges()
                .map(|(u, v)| (u.index(), v.index()))
                .collect();
            assign_gates(map, layer, &matching, &dist).ok_or_else(|| Error::Routing {
                layer: 0,
                message: format!(
                    "the coupling graph has no {} disjoint edges to host this layer",
                    layer.len()
                ),
            })?
        }
    };
    for q in 0..m {
        if target[q] == usize::MAX {
            let here = map.physical(q);
            let spot = (0..m)
                .filter(|&p| !taken[p])
                .min_by_key(|&p| (dist[here][p], p))
                .expect("free positions remain for idle qubits");
            taken[spot] = true;
            target[q] = spot;
        }
    }
    let target = QubitMap::from_mapping(target)?;
    let mut work = map.clone();
    let seq = tree_token_swaps(topology, &mut work, &target);
    Ok(pack_swaps(m, seq))
}

/// Each gate, nearest first, onto the free edge of `edges` closest to its endpoints.
/// Returns the occupied positions and the partial logical -> physical target.
fn assign_gates(
    map: &QubitMap,
    layer: &[Gate],
    edges: &[(usize, usize)],
    dist: &[Vec<usize>],
) -> Option<(Vec<bool>, Vec<usize>)> {
    let m = map.size();
    let mut taken = vec![false; m];
    let mut target = vec![usize::MAX; m];
    let mut order: Vec<&Gate> = layer.iter().collect();
    order.sort_by_key(|g| dist[map.physical(g.a)][map.physical(g.b)]);
    for g in order {
        let (pa, pb) = (map.physical(g.a), map.physical(g.b));
        let best = edges
            .iter()
            .filter(|&&(u, v)| !taken[u] && !taken[v])
            .flat_map(|&(u, v)| [(u, v), (v, u)])
            .min_by_key(|&(u, v)| (dist[pa][u] + dist[pb][v], u, v))?;
        taken[best.0] = true;
        taken[best.1] = true;
        target[g.a] = best.0;
        target[g.b] = best.1;
    }
    Some((taken, target))
}

fn walk_gates_together(topology: &Topology, map: &QubitMap, layer: &[Gate]) -> Option<Vec<(usize, usize)>> {
    let m = topology.num_qubits();
    let mut work = map.clone();
    let mut settled = vec![false; m];
    let mut pending = Vec::new();
    for g in layer {
        let (pa, pb) = (work.physical(g.a), work.physical(g.b));
        if topology.has_edge(pa, pb) {
            settled[pa] = true;
            settled[pb] = true;
        } else {
            pending.push(g);
        }
    }
    let mut seq = Vec::new();
    for g in pending {
        let (pa, pb) = (work.physical(g.a), work.physical(g.b));
        let path = free_path(topology, &settled, pa, pb)?;
        // meet in the middle: `a` walks the first half, `b` the second
        let meet = (path.len() - 2) / 2;
        for k in 0..meet {
            work.apply_swap(path[k], path[k + 1]);
            seq.push((path[k].min(path[k + 1]), path[k].max(path[k + 1])));
        }
        let last = path.len() - 1;
        for k in (meet + 2..=last).rev() {
            work.apply_swap(path[k], path[k - 1]);
            seq.push((path[k].min(path[k - 1]), path[k].max(path[k - 1])));
        }
        settled[path[meet]] = true;
        settled[path[meet + 1]] = true;
    }
    Some(seq)
}

/// Next vertex on the tree path from `from` to `to`.
fn tree_step(parent: &[usize], alive: &[bool], from: usize, to: usize) -> usize {
    let ancestors = |mut v: usize| {
        let mut path = vec![v];
        while parent[v] != usize::MAX {
            v = parent[v];
            path.push(v);
        }
        path
    };
    let up_from = ancestors(from);
    let up_to = ancestors(to);
    if up_to.contains(&from) {
        // `to` lies below `from`: step to the child on the way down
        let idx = up_to.iter().position(|&v| v == from).unwrap();
        let next = up_to[idx - 1];
        debug_assert!(alive[next]);
        next
    } else {
        debug_assert!(up_from.len() > 1);
        parent[from]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    /// Every swap and gate acts on a coupling edge and swap sub-layers are matchings.
    pub feasible: bool,
    /// Replaying the swaps from the identity reproduces every stored placement.
    pub permutation_consistent: bool,
    /// Each original gate `(a, b)` of layer `t` appears as `(C(a), C(b))`, one for one.
    pub gates_preserved: bool,
    pub swaps: usize,
    pub swap_depth: usize,
    pub issues: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.feasible && self.permutation_consistent && self.gates_preserved
    }
}

/// Checks a routed circuit against the hardware and the original circuit.
pub fn verify_routing(r: &RoutedCircuit, topology: &Topology, original: &LayeredCircuit) -> VerificationReport {
    let mut rep = VerificationReport {
        feasible: true,
        permutation_consistent: true,
        gates_preserved: true,
        swaps: r.swaps_inserted(),
        swap_depth: r.swap_depth(),
        issues: Vec::new(),
    };
    let m = topology.num_qubits();
    if r.num_qubits != m || original.num_qubits() != m {
        rep.feasible = false;
        rep.permutation_consistent = false;
        rep.gates_preserved = false;
        rep.issues.push(format!(
            "qubit counts disagree: routed {}, topology {m}, original {}",
            r.num_qubits,
            original.num_qubits()
        ));
        return rep;
    }
    if r.program.len() != original.num_layers() {
        rep.gates_preserved = false;
        rep.issues.push(format!(
            "{} routed layers for {} original layers",
            r.program.len(),
            original.num_layers()
        ));
    }

    let check_swaps = |layer: &SwapLayer, at: &str, rep: &mut VerificationReport| {
        let mut busy = vec![false; m];
        for &(i, j) in layer {
            if !topology.has_edge(i, j) {
                rep.feasible = false;
                rep.issues.push(format!("{at}: swap ({i}, {j}) is not a coupling edge"));
                continue;
            }
            if std::mem::replace(&mut busy[i], true) || std::mem::replace(&mut busy[j], true) {
                rep.feasible = false;
                rep.issues.push(format!("{at}: swaps overlap on ({i}, {j})"));
            }
        }
    };

    let mut map = QubitMap::identity(m);
    for (t, layer) in r.program.iter().enumerate() {
        for (k, sub) in layer.swaps.iter().enumerate() {
            check_swaps(sub, &format!("layer {t} sub-layer {k}"), &mut rep);
            for &(i, j) in sub {
                if i < m && j < m {
                    map.apply_swap(i, j);
                }
            }
        }
        if layer.layout != map {
            rep.permutation_consistent = false;
            rep.issues.push(format!("layer {t}: stored placement differs from replay"));
        }
        for g in &layer.gates {
            if !topology.has_edge(g.a, g.b) {
                rep.feasible = false;
                rep.issues.push(format!("layer {t}: gate ({}, {}) is not on a coupling edge", g.a, g.b));
            }
        }
        if let Some(orig) = original.layers().get(t) {
            let mut want: Vec<_> = orig
                .iter()
                .map(|g| (map.physical(g.a), map.physical(g.b), g.label.clone()))
                .collect();
            let mut have: Vec<_> = layer.gates.iter().map(|g| (g.a, g.b, g.label.clone())).collect();
            want.sort();
            have.sort();
            if want != have {
                rep.gates_preserved = false;
                rep.issues.push(format!("layer {t}: emitted gates do not match the original layer"));
            }
        }
    }
    for (k, sub) in r.epilogue.iter().enumerate() {
        check_swaps(sub, &format!("epilogue sub-layer {k}"), &mut rep);
        for &(i, j) in sub {
            if i < m && j < m {
                map.apply_swap(i, j);
            }
        }
    }
    if r.final_permutation != map {
        rep.permutation_consistent = false;
        rep.issues.push("final permutation differs from replay".into());
    }
    rep
}

#[derive(Serialize, Deserialize)]
struct ProgramEntry {
    swaps: Vec<Vec<[usize; 2]>>,
    gates: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    layout: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RoutedFile {
    qubits: usize,
    program: Vec<ProgramEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    epilogue: Vec<Vec<[usize; 2]>>,
    final_permutation: Vec<usize>,
    #[serde(default)]
    metrics: serde_json::Value,
    #[serde(default)]
    config: RouterConfig,
}

fn pairs_out(layer: &SwapLayer) -> Vec<[usize; 2]> {
    layer.iter().map(|&(a, b)| [a, b]).collect()
}

/// Routed-circuit JSON. `metrics` is embedded verbatim; when absent a minimal block with the
/// swap counters is written.
pub fn emit_routed(r: &RoutedCircuit, metrics: Option<serde_json::Value>) -> String {
    let metrics = metrics.unwrap_or_else(|| {
        serde_json::json!({
            "swaps": r.swaps_inserted(),
            "swap_depth": r.swap_depth(),
            "depth_before": r.program.len(),
            "depth_after": r.depth(),
            "windows": r.windows,
            "escalations": r.escalations,
            "placed_layers": r.placed_layers,
        })
    });
    let file = RoutedFile {
        qubits: r.num_qubits,
        program: r
            .program
            .iter()
            .map(|l| {
                let has_labels = l.gates.iter().any(|g| g.label.is_some());
                ProgramEntry {
                    swaps: l.swaps.iter().map(pairs_out).collect(),
                    gates: l.gates.iter().map(|g| [g.a, g.b]).collect(),
                    labels: has_labels
                        .then(|| l.gates.iter().map(|g| g.label.clone().unwrap_or_default()).collect()),
                    layout: l.layout.mapping().to_vec(),
                }
            })
            .collect(),
        epilogue: r.epilogue.iter().map(pairs_out).collect(),
        final_permutation: r.final_permutation.mapping().to_vec(),
        metrics,
        config: r.config.clone(),
    };
    let value = serde_json::to_value(&file).expect("routed circuit serializes");
    let mut out = String::new();
    write_json(&value, 0, &mut out);
    out.push('\n');
    out
}

/// Indented JSON in which arrays holding no objects stay on one line.
fn write_json(v: &serde_json::Value, indent: usize, out: &mut String) {
    use serde_json::Value;
    let flat = |v: &Value| match v {
        Value::Array(items) => !items.iter().any(|x| matches!(x, Value::Object(_))),
        Value::Object(_) => false,
        _ => true,
    };
    let pad = |n: usize| "  ".repeat(n);
    match v {
        v if flat(v) => out.push_str(&v.to_string()),
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_json(item, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(fields) => {
            if fields.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            for (k, (key, item)) in fields.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_json(item, indent + 1, out);
                out.push_str(if k + 1 < fields.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        _ => unreachable!("scalars are flat"),
    }
}

/// Reads the routed-circuit JSON written by [`emit_routed`].
pub fn parse_routed(text: &str) -> Result<RoutedCircuit> {
    let file: RoutedFile = serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    let m = file.qubits;
    let map_of = |v: Vec<usize>, ctx: String| -> Result<QubitMap> {
        if v.len() != m {
            return Err(Error::parse(ctx, format!("expected {m} entries, got {}", v.len())));
        }
        QubitMap::from_mapping(v).map_err(|e| Error::parse(ctx, e.to_string()))
    };
    let pairs_in = |v: Vec<[usize; 2]>| v.into_iter().map(|[a, b]| (a, b)).collect::<Vec<_>>();
    let mut program = Vec::with_capacity(file.program.len());
    for (t, entry) in file.program.into_iter().enumerate() {
        if let Some(labels) = &entry.labels {
            if labels.len() != entry.gates.len() {
                return Err(Error::parse(format!("program[{t}].labels"), "length differs from gates"));
            }
        }
        let gates = entry
            .gates
            .iter()
            .enumerate()
            .map(|(k, &[a, b])| Gate {
                a,
                b,
                label: entry.labels.as_ref().map(|l| l[k].clone()),
            })
            .collect();
        program.push(RoutedLayer {
            swaps: entry.swaps.into_iter().map(pairs_in).collect(),
            gates,
            layout: map_of(entry.layout, format!("program[{t}].layout"))?,
        });
    }
    let windows = file.metrics.get("windows").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    let escalations = file.metrics.get("escalations").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    let placed_layers = file.metrics.get("placed_layers").and_then(|v| v.as_u64()).unwrap_or(0) as usize;
    Ok(RoutedCircuit {
        num_qubits: m,
        program,
        epilogue: file.epilogue.into_iter().map(pairs_in).collect(),
        final_permutation: map_of(file.final_permutation, "final_permutation".into())?,
        windows,
        escalations,
        placed_layers,
        config: file.config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::layerize;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn thetas_to_swaps_examples() {
        let topo = Topology::line(4).unwrap();
        let sched = partition_generators(&topo, 1).unwrap();
        let zero = ThetaVector::zeros(2, 3);
        let sw = thetas_to_swaps(&zero, &sched).unwrap();
        assert!(sw.iter().flatten().all(Vec::is_empty));

        let mut one = ThetaVector::zeros(1, 3);
        one.values_mut()[0] = FRAC_PI_2;
        one.values_mut()[1] = PI;
        let sw = thetas_to_swaps(&one, &sched).unwrap();
        assert_eq!(sw[0], vec![vec![(0, 1)], vec![]]);

        let bad = ThetaVector::new(vec![0.5, 0.0, 0.0], 3).unwrap();
        assert!(matches!(thetas_to_swaps(&bad, &sched), Err(Error::Contract(_))));
    }

    #[test]
    fn feasible_circuit_needs_no_swaps() {
        let topo = Topology::ring(5).unwrap();
        let c = layerize(5, &[(0, 1), (2, 3), (1, 2), (4, 0)]).unwrap();
        let r = route(&c, &topo, &RouterConfig::default()).unwrap();
        assert_eq!(r.swaps_inserted(), 0);
        assert_eq!(r.depth(), c.num_layers());
        assert!(verify_routing(&r, &topo, &c).passed());
    }

    #[test]
    fn one_swap_on_line3() {
        let topo = Topology::line(3).unwrap();
        let c = layerize(3, &[(0, 2)]).unwrap();
        let r = route(&c, &topo, &RouterConfig::default()).unwrap();
        assert_eq!(r.swaps_inserted(), 1);
        assert!(verify_routing(&r, &topo, &c).passed());
    }

    #[test]
    fn corruption_is_detected() {
        let topo = Topology::line(4).unwrap();
        let c = layerize(4, &[(0, 3), (1, 2), (0, 2)]).unwrap();
        let r = route(&c, &topo, &RouterConfig::default()).unwrap();
        assert!(verify_routing(&r, &topo, &c).passed());

        let mut off_edge = r.clone();
        let g = &mut off_edge.program[0].gates[0];
        g.b = if g.a == 0 { 3 } else { 0 };
        let rep = verify_routing(&off_edge, &topo, &c);
        assert!(!rep.feasible);

        let mut swaps = r.clone();
        swaps.program[0].swaps.push(vec![(1, 2)]);
        let rep = verify_routing(&swaps, &topo, &c);
        assert!(!rep.permutation_consistent);
    }

    #[test]
    fn undo_restores_identity() {
        let topo = Topology::heavy_hex(1).unwrap();
        let c = LayeredCircuit::from_pairs(12, &[vec![(0, 6), (3, 9)], vec![(1, 11)]]).unwrap();
        let cfg = RouterConfig {
            undo_final_permutation: true,
            ..Default::default()
        };
        let r = route(&c, &topo, &cfg).unwrap();
        assert!(r.final_permutation.is_identity());
        assert!(verify_routing(&r, &topo, &c).passed());
    }

    #[test]
    fn restore_identity_from_any_placement() {
        let topo = Topology::line(5).unwrap();
        let mut map = QubitMap::from_mapping(vec![4, 2, 0, 3, 1]).unwrap();
        let layers = restore_identity(&topo, &mut map).unwrap();
        assert!(map.is_identity());
        let mut replay = QubitMap::from_mapping(vec![4, 2, 0, 3, 1]).unwrap();
        for &(a, b) in layers.iter().flatten() {
            assert!(topo.has_edge(a, b));
            replay.apply_swap(a, b);
        }
        assert!(replay.is_identity());
    }

    #[test]
    fn routed_json_round_trip() {
        let topo = Topology::line(4).unwrap();
        let c = layerize(4, &[(0, 3), (1, 2), (0, 2)]).unwrap();
        let r = route(&c, &topo, &RouterConfig::default()).unwrap();
        let back = parse_routed(&emit_routed(&r, None)).unwrap();
        assert_eq!(back, r);
        assert!(parse_routed("{\"qubits\": 2}").is_err());
    }

    #[test]
    fn fail_policy_reports_layer() {
        let topo = Topology::line(4).unwrap();
        let c = layerize(4, &[(0, 1), (0, 3)]).unwrap();
        // a single trial with one step cannot reach a swap
        let cfg = RouterConfig {
            fallback: Fallback::Fail,
            horizon: 1,
            knitter: KnitterConfig {
                max_trials: 1,
                max_optim_steps: 1,
                epsilon: 0.01,
                ..Default::default()
            },
            ..Default::default()
        };
        match route(&c, &topo, &cfg) {
            Err(Error::Routing { layer, .. }) => assert_eq!(layer, 1),
            other => panic!("expected routing error, got {other:?}"),
        }
    }

    fn placed_ok(topo: &Topology, map: &QubitMap, layer: &[Gate]) -> bool {
        let mut work = map.clone();
        let layers = place_layer(topo, map, layer).unwrap();
        for sub in &layers {
            let mut touched = std::collections::HashSet::new();
            for &(a, b) in sub {
                assert!(topo.has_edge(a, b));
                assert!(touched.insert(a) && touched.insert(b));
                work.apply_swap(a, b);
            }
        }
        layer.iter().all(|g| topo.has_edge(work.physical(g.a), work.physical(g.b)))
    }

    #[test]
    fn placement_walks_and_matches() {
        let line = Topology::line(8).unwrap();
        let id = QubitMap::identity(8);
        let far = [Gate::new(0, 7)];
        assert!(placed_ok(&line, &id, &far));
        // a perfect matching is the only way to host four gates on line(8)
        let full: Vec<Gate> = [(0, 7), (1, 6), (2, 5), (3, 4)].iter().map(|&(a, b)| Gate::new(a, b)).collect();
        assert!(placed_ok(&line, &id, &full));
        let scrambled = QubitMap::from_mapping(vec![3, 6, 0, 7, 1, 4, 2, 5]).unwrap();
        assert!(placed_ok(&line, &scrambled, &full));
        let hh = Topology::heavy_hex(1).unwrap();
        let six: Vec<Gate> = [(0, 11), (1, 10), (2, 9), (3, 8), (4, 7), (5, 6)]
            .iter()
            .map(|&(a, b)| Gate::new(a, b))
            .collect();
        assert!(placed_ok(&hh, &QubitMap::identity(12), &six));
    }

    #[test]
    fn placement_reports_unhostable_layer() {
        let star = Topology::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let layer = [Gate::new(1, 2), Gate::new(3, 4)];
        assert!(matches!(
            place_layer(&star, &QubitMap::identity(5), &layer),
            Err(Error::Routing { .. })
        ));
        let c = LayeredCircuit::from_pairs(5, &[vec![(1, 2), (3, 4)]]).unwrap();
        assert!(matches!(
            route(&c, &star, &RouterConfig::default()),
            Err(Error::Routing { layer: 0, .. })
        ));
    }

    #[test]
    fn placement_fallback_is_counted() {
        // one trial of one step cannot bring 0 and 7 together on line(8)
        let topo = Topology::line(8).unwrap();
        let c = LayeredCircuit::from_pairs(8, &[vec![(0, 7)], vec![(1, 6)]]).unwrap();
        let cfg = RouterConfig {
            horizon: 1,
            knitter: KnitterConfig {
                max_trials: 1,
                max_optim_steps: 1,
                epsilon: 0.01,
                ..Default::default()
            },
            ..Default::default()
        };
        let r = route(&c, &topo, &cfg).unwrap();
        assert_eq!(r.placed_layers, 2);
        assert_eq!(r.escalations, 2 * MAX_ESCALATIONS);
        assert!(verify_routing(&r, &topo, &c).passed());
        let back = parse_routed(&emit_routed(&r, None)).unwrap();
        assert_eq!(back.placed_layers, 2);
    }
}
