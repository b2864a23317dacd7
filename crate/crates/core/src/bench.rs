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

//! Benchmark circuits, routing metrics and report output.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{layerize, LayeredCircuit, Topology};
use crate::error::{Error, Result};
use crate::router::{route, verify_routing, RoutedCircuit, RouterConfig};

/// CNOTs charged per original two-qubit gate.
pub const DEFAULT_CNOTS_PER_GATE: usize = 3;
/// CNOTs charged per inserted swap.
pub const DEFAULT_CNOTS_PER_SWAP: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Every layer is a random maximum matching.
    Qv,
    /// Every gate shares a qubit with the previous one.
    Mcx,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qv" => Ok(Family::Qv),
            "mcx" => Ok(Family::Mcx),
            other => Err(Error::Argument(format!("unknown circuit family {other:?}"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Qv => "qv",
            Family::Mcx => "mcx",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: Family,
    pub qubits: usize,
    /// Layers for `Qv`, gates for `Mcx`.
    pub size: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<LayeredCircuit> {
        match self.family {
            Family::Qv => gen_matching_circuit(self.qubits, self.size, self.seed),
            Family::Mcx => gen_sparse_circuit(self.qubits, self.size, self.seed),
        }
    }
}

/// `layers` layers, each a uniformly random maximum matching: labels are shuffled and paired
/// off consecutively.
pub fn gen_matching_circuit(m: usize, layers: usize, seed: u64) -> Result<LayeredCircuit> {
    if m < 2 {
        return Err(Error::Argument(format!("need at least 2 qubits, got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..m).collect();
    let mut out = Vec::with_capacity(layers);
    for _ in 0..layers {
        labels.shuffle(&mut rng);
        out.push(labels.chunks_exact(2).map(|c| (c[0], c[1])).collect::<Vec<_>>());
    }
    LayeredCircuit::from_pairs(m, &out)
}

/// `gates` random gates where each one reuses a qubit of its predecessor, so layering puts
/// exactly one gate in every layer.
pub fn gen_sparse_circuit(m: usize, gates: usize, seed: u64) -> Result<LayeredCircuit> {
    if m < 2 {
        return Err(Error::Argument(format!("need at least 2 qubits, got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(gates);
    for k in 0..gates {
        let keep = match out.last() {
            None => rng.gen_range(0..m),
            Some(&(a, b)) => {
                if rng.gen::<bool>() {
                    a
                } else {
                    b
                }
            }
        };
        let mut other = rng.gen_range(0..m - 1);
        if other >= keep {
            other += 1;
        }
        // alternate orientation so the payload is not always (shared, new)
        out.push(if k % 2 == 0 { (keep, other) } else { (other, keep) });
    }
    layerize(m, &out)
}

/// Routing quality of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub swaps: usize,
    pub cnots_before: usize,
    pub cnots_after: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    pub dcnots: f64,
    pub ddepth: f64,
    pub merit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// `(x_s − x_0) / x_0`.
pub fn relative_increase(before: f64, after: f64) -> Result<f64> {
    if before == 0.0 {
        return Err(Error::Metrics("relative measure undefined for a zero baseline".into()));
    }
    Ok((after - before) / before)
}

/// Metrics under the layered cost model: each original gate costs `cnots_per_gate`, each
/// swap `cnots_per_swap`; depth counts layers plus non-empty swap sub-layers.
pub fn compute_metrics(
    original: &LayeredCircuit,
    routed: &RoutedCircuit,
    cnots_per_gate: usize,
    cnots_per_swap: usize,
) -> Result<MetricsRecord> {
    let swaps = routed.swaps_inserted();
    let cnots_before = original.num_gates() * cnots_per_gate;
    let cnots_after = cnots_before + swaps * cnots_per_swap;
    let depth_before = original.num_layers();
    let depth_after = depth_before + routed.swap_depth();
    let dcnots = relative_increase(cnots_before as f64, cnots_after as f64)?;
    let ddepth = relative_increase(depth_before as f64, depth_after as f64)?;
    Ok(MetricsRecord {
        swaps,
        cnots_before,
        cnots_after,
        depth_before,
        depth_after,
        dcnots,
        ddepth,
        merit: dcnots + ddepth,
        wall_time_s: None,
    })
}

/// Empirical CDF as sorted `(value, fraction of samples <= value)` steps.
pub fn ecdf(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::Argument("eCDF of an empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Argument("eCDF sample contains NaN".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (k, &x) in sorted.iter().enumerate() {
        let frac = (k + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => out.push((x, frac)),
        }
    }
    Ok(out)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

const STRAND_GAP: f64 = 24.0;
const COLUMN: f64 = 36.0;
const MARGIN: f64 = 30.0;

/// Braid diagram of a routed circuit: one horizontal strand per physical qubit, a crossing
/// for every swap and a vertical bar for every gate. Strands are colored by the logical
/// qubit they carry.
pub fn emit_braid_svg(routed: &RoutedCircuit) -> String {
    let m = routed.num_qubits;
    let columns: usize = routed
        .program
        .iter()
        .map(|l| l.swaps.len() + 1)
        .sum::<usize>()
        + routed.epilogue.len();
    let width = 2.0 * MARGIN + COLUMN * columns.max(1) as f64;
    let height = 2.0 * MARGIN + STRAND_GAP * (m.max(1) - 1) as f64;
    let y = |q: usize| MARGIN + STRAND_GAP * q as f64;
    let color = |logical: usize| format!("hsl({},70%,40%)", (logical * 360) / m.max(1));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    // physical -> logical
    let mut occupant: Vec<usize> = (0..m).collect();
    let mut x = MARGIN;
    let straight = |svg: &mut String, x: f64, skip: &[usize], occupant: &[usize]| {
        for q in (0..m).filter(|q| !skip.contains(q)) {
            let _ = writeln!(
                svg,
                r#"<line class="strand" x1="{x:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}" stroke="{c}" stroke-width="2"/>"#,
                y0 = y(q),
                x1 = x + COLUMN,
                c = color(occupant[q]),
            );
        }
    };
    let swap_column = |svg: &mut String, x: f64, layer: &[(usize, usize)], occupant: &mut Vec<usize>| {
        let touched: Vec<usize> = layer.iter().flat_map(|&(a, b)| [a, b]).collect();
        straight(svg, x, &touched, occupant);
        for &(a, b) in layer {
            for (from, to) in [(a, b), (b, a)] {
                let _ = writeln!(
                    svg,
                    r#"<line class="swap" x1="{x:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y1:.1}" stroke="{c}" stroke-width="2"/>"#,
                    y0 = y(from),
                    x1 = x + COLUMN,
                    y1 = y(to),
                    c = color(occupant[from]),
                );
            }
            occupant.swap(a, b);
        }
    };
    for layer in &routed.program {
        for sub in &layer.swaps {
            swap_column(&mut svg, x, sub, &mut occupant);
            x += COLUMN;
        }
        straight(&mut svg, x, &[], &occupant);
        let mid = x + COLUMN / 2.0;
        for g in &layer.gates {
            let _ = writeln!(
                svg,
                r##"<line class="gate" x1="{mid:.1}" y1="{ya:.1}" x2="{mid:.1}" y2="{yb:.1}" stroke="#202020" stroke-width="3"/>"##,
                ya = y(g.a),
                yb = y(g.b),
            );
            for q in [g.a, g.b] {
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{mid:.1}" cy="{cy:.1}" r="4" fill="#202020"/>"##,
                    cy = y(q)
                );
            }
        }
        x += COLUMN;
    }
    for sub in &routed.epilogue {
        swap_column(&mut svg, x, sub, &mut occupant);
        x += COLUMN;
    }
    svg.push_str("</svg>\n");
    svg
}

/// One row of a benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub family: Family,
    pub topology: String,
    pub qubits: usize,
    pub layers: usize,
    pub seed: u64,
    pub horizon: usize,
    pub max_optim_steps: usize,
    pub routed: bool,
    pub verified: bool,
    pub swaps: usize,
    pub cnots_before: usize,
    pub cnots_after: usize,
    pub depth_before: usize,
    pub depth_after: usize,
    pub dcnots: f64,
    pub ddepth: f64,
    pub merit: f64,
    pub wall_time_s: Option<f64>,
}

/// CSV with a header row; `wall_time_s` is empty unless timing was recorded.
pub fn emit_csv(records: &[BenchRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::Argument(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Argument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    /// A handful of small instances, for smoke runs.
    Quick,
    /// Matching circuits with 5 to 8 qubits (depth = qubits) on line and ring couplings,
    /// horizons {1, 2, 4} crossed with {10, 30, 100} optimizer steps.
    PaperStudy { instances: usize },
}

#[derive(Clone, Debug)]
pub struct BenchCase {
    pub spec: GeneratorSpec,
    pub topology: String,
    pub horizon: usize,
    pub max_optim_steps: usize,
}

impl Protocol {
    pub fn cases(&self) -> Vec<BenchCase> {
        let (qubits, horizons, steps, instances): (Vec<usize>, Vec<usize>, Vec<usize>, usize) = match *self {
            Protocol::Quick => (vec![5, 6], vec![1, 2, 4], vec![30], 4),
            Protocol::PaperStudy { instances } => ((5..=8).collect(), vec![1, 2, 4], vec![10, 30, 100], instances),
        };
        let mut out = Vec::new();
        for &m in &qubits {
            for kind in ["line", "ring"] {
                for seed in 0..instances as u64 {
                    for &horizon in &horizons {
                        for &max_optim_steps in &steps {
                            out.push(BenchCase {
                                spec: GeneratorSpec {
                                    family: Family::Qv,
                                    qubits: m,
                                    size: m,
                                    seed,
                                },
                                topology: format!("{kind}:{m}"),
                                horizon,
                                max_optim_steps,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Routes and measures one case. Routing failures produce a row with `routed = false`.
pub fn run_case(case: &BenchCase, base: &RouterConfig, timing: bool) -> Result<BenchRecord> {
    let circuit = case.spec.generate()?;
    let topology = Topology::from_spec(&case.topology)?;
    let mut config = base.clone();
    config.horizon = case.horizon;
    config.knitter.max_optim_steps = case.max_optim_steps;
    config.knitter.seed = base.knitter.seed ^ case.spec.seed;
    let start = Instant::now();
    let outcome = route(&circuit, &topology, &config);
    let elapsed = start.elapsed().as_secs_f64();
    let mut rec = BenchRecord {
        family: case.spec.family,
        topology: case.topology.clone(),
        qubits: case.spec.qubits,
        layers: circuit.num_layers(),
        seed: case.spec.seed,
        horizon: case.horizon,
        max_optim_steps: case.max_optim_steps,
        routed: false,
        verified: false,
        swaps: 0,
        cnots_before: 0,
        cnots_after: 0,
        depth_before: circuit.num_layers(),
        depth_after: 0,
        dcnots: f64::NAN,
        ddepth: f64::NAN,
        merit: f64::NAN,
        wall_time_s: timing.then_some(elapsed),
    };
    match outcome {
        Ok(routed) => {
            let m = compute_metrics(&circuit, &routed, DEFAULT_CNOTS_PER_GATE, DEFAULT_CNOTS_PER_SWAP)?;
            rec.routed = true;
            rec.verified = verify_routing(&routed, &topology, &circuit).passed();
            rec.swaps = m.swaps;
            rec.cnots_before = m.cnots_before;
            rec.cnots_after = m.cnots_after;
            rec.depth_after = m.depth_after;
            rec.dcnots = m.dcnots;
            rec.ddepth = m.ddepth;
            rec.merit = m.merit;
        }
        Err(Error::Routing { .. }) => {}
        Err(e) => return Err(e),
    }
    Ok(rec)
}

/// Runs a protocol in parallel and returns rows sorted by
/// `(family, qubits, topology, seed, horizon, steps)`.
pub fn run_bench(protocol: Protocol, base: &RouterConfig, timing: bool) -> Result<Vec<BenchRecord>> {
    let mut rows = protocol
        .cases()
        .par_iter()
        .map(|c| run_case(c, base, timing))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        (a.family, a.qubits, &a.topology, a.seed, a.horizon, a.max_optim_steps).cmp(&(
            b.family,
            b.qubits,
            &b.topology,
            b.seed,
            b.horizon,
            b.max_optim_steps,
        ))
    });
    Ok(rows)
}
