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

//! Partitioning of the hardware swap generators into commuting classes.
//!
//! Two swaps commute when they act on disjoint qubits, so a class of mutually commuting
//! generators is a matching of the coupling graph and a partition into classes is an
//! edge coloring. A greedy coloring is tried first; greedy can need up to `2Δ − 1` colors,
//! so when it exceeds `Δ + 1` the Misra–Gries construction is used instead.

use crate::circuit::Topology;
use crate::error::{Error, Result};

/// A run of consecutive parameter slots that all belong to one class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub class: usize,
    pub sweep: usize,
    /// First slot of the block within a layer.
    pub start: usize,
    pub len: usize,
}

impl Block {
    pub fn slots(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// Ordered generator classes repeated `sweeps` times per circuit layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSchedule {
    m: usize,
    classes: Vec<Vec<(usize, usize)>>,
    sweeps: usize,
    slots: Vec<(usize, usize)>,
    blocks: Vec<Block>,
}

impl GeneratorSchedule {
    /// Builds a schedule from explicit classes. Each class must be a non-empty matching.
    pub fn new(m: usize, classes: Vec<Vec<(usize, usize)>>, sweeps: usize) -> Result<Self> {
        if sweeps == 0 {
            return Err(Error::Argument("sweeps must be at least 1".into()));
        }
        for (k, class) in classes.iter().enumerate() {
            if class.is_empty() {
                return Err(Error::Argument(format!("class {k} is empty")));
            }
            let mut busy = vec![false; m];
            for &(a, b) in class {
                if a >= m || b >= m || a == b {
                    return Err(Error::Argument(format!("bad generator ({a}, {b}) in class {k}")));
                }
                if std::mem::replace(&mut busy[a], true) || std::mem::replace(&mut busy[b], true) {
                    return Err(Error::Argument(format!("class {k} is not a matching")));
                }
            }
        }
        let mut slots = Vec::new();
        let mut blocks = Vec::new();
        for sweep in 0..sweeps {
            for (class, pairs) in classes.iter().enumerate() {
                blocks.push(Block {
                    class,
                    sweep,
                    start: slots.len(),
                    len: pairs.len(),
                });
                slots.extend_from_slice(pairs);
            }
        }
        Ok(Self {
            m,
            classes,
            sweeps,
            slots,
            blocks,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.m
    }

    pub fn classes(&self) -> &[Vec<(usize, usize)>] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Parameters per circuit layer, `S`.
    pub fn params_per_layer(&self) -> usize {
        self.slots.len()
    }

    /// The generator `(p₁(s), p₂(s))` of slot `s`.
    pub fn slot(&self, s: usize) -> (usize, usize) {
        self.slots[s]
    }

    /// All slots of a layer in application order.
    pub fn slots(&self) -> &[(usize, usize)] {
        &self.slots
    }

    /// Blocks in application order: sweep 0 of every class, then sweep 1, and so on.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Same classes with a different sweep count.
    pub fn with_sweeps(&self, sweeps: usize) -> Result<Self> {
        Self::new(self.m, self.classes.clone(), sweeps)
    }
}

/// Edge coloring of the coupling graph with at most `Δ + 1` classes. Edges are visited in
/// lexicographic order and each takes the smallest color free at both endpoints; if that
/// overshoots `Δ + 1`, the coloring is redone with Misra–Gries.
pub fn partition_generators(topology: &Topology, sweeps: usize) -> Result<GeneratorSchedule> {
    let m = topology.num_qubits();
    let mut classes = greedy_coloring(topology);
    if classes.len() > topology.max_degree() + 1 {
        classes = misra_gries(topology);
    }
    GeneratorSchedule::new(m, classes, sweeps)
}

fn greedy_coloring(topology: &Topology) -> Vec<Vec<(usize, usize)>> {
    let m = topology.num_qubits();
    let mut used: Vec<Vec<bool>> = vec![Vec::new(); m];
    let mut classes: Vec<Vec<(usize, usize)>> = Vec::new();
    for &(a, b) in topology.edges() {
        let color = (0..)
            .find(|&c| !used[a].get(c).copied().unwrap_or(false) && !used[b].get(c).copied().unwrap_or(false))
            .expect("a free color always exists");
        for v in [a, b] {
            if used[v].len() <= color {
                used[v].resize(color + 1, false);
            }
            used[v][color] = true;
        }
        if classes.len() <= color {
            classes.resize(color + 1, Vec::new());
        }
        classes[color].push((a, b));
    }
    classes
}

/// Misra–Gries `Δ + 1` edge coloring; edges are processed in lexicographic order.
fn misra_gries(topology: &Topology) -> Vec<Vec<(usize, usize)>> {
    let m = topology.num_qubits();
    let colors = topology.max_degree() + 1;
    // color[u][v] == color[v][u]
    let mut color: Vec<Vec<Option<usize>>> = vec![vec![None; m]; m];
    let free = |color: &[Vec<Option<usize>>], x: usize, c: usize| color[x].iter().all(|&e| e != Some(c));
    let first_free = |color: &[Vec<Option<usize>>], x: usize| {
        (0..colors).find(|&c| free(color, x, c)).expect("degree < colors")
    };

    for &(u, v) in topology.edges() {
        // maximal fan of u starting at v
        let mut fan = vec![v];
        loop {
            let last = *fan.last().expect("fan is non-empty");
            let next = topology.neighbors(u).iter().copied().find(|&w| {
                !fan.contains(&w) && matches!(color[u][w], Some(c) if free(&color, last, c))
            });
            match next {
                Some(w) => fan.push(w),
                None => break,
            }
        }
        let c = first_free(&color, u);
        let d = first_free(&color, *fan.last().expect("fan is non-empty"));

        // invert the c/d path leaving u along d
        let mut path = vec![u];
        let mut want = d;
        loop {
            let x = *path.last().expect("path is non-empty");
            let prev = path.get(path.len().wrapping_sub(2)).copied();
            let step = (0..m).find(|&y| Some(y) != prev && color[x][y] == Some(want));
            match step {
                Some(y) => {
                    path.push(y);
                    want = if want == d { c } else { d };
                }
                None => break,
            }
        }
        for w in path.windows(2) {
            let swapped = match color[w[0]][w[1]] {
                Some(x) if x == c => d,
                _ => c,
            };
            color[w[0]][w[1]] = Some(swapped);
            color[w[1]][w[0]] = Some(swapped);
        }

        // first fan vertex with d free whose prefix is still a fan
        let is_fan_prefix = |color: &[Vec<Option<usize>>], k: usize| {
            (1..=k).all(|i| matches!(color[u][fan[i]], Some(col) if free(color, fan[i - 1], col)))
        };
        let k = (0..fan.len())
            .find(|&k| free(&color, fan[k], d) && is_fan_prefix(&color, k))
            .expect("Misra-Gries guarantees a rotatable fan prefix");
        for i in 0..k {
            let shifted = color[u][fan[i + 1]];
            color[u][fan[i]] = shifted;
            color[fan[i]][u] = shifted;
        }
        color[u][fan[k]] = Some(d);
        color[fan[k]][u] = Some(d);
    }

    let mut classes = vec![Vec::new(); colors];
    for &(a, b) in topology.edges() {
        classes[color[a][b].expect("every edge is colored")].push((a, b));
    }
    classes.retain(|cl: &Vec<(usize, usize)>| !cl.is_empty());
    classes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_five_splits_in_two() {
        let s = partition_generators(&Topology::line(5).unwrap(), 1).unwrap();
        assert_eq!(s.classes(), &[vec![(0, 1), (2, 3)], vec![(1, 2), (3, 4)]]);
        assert_eq!(s.params_per_layer(), 4);
    }

    #[test]
    fn five_vertex_graph_needs_three_classes() {
        let t = Topology::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3)]).unwrap();
        let s = partition_generators(&t, 1).unwrap();
        assert_eq!(s.num_classes(), 3);
        let mut classes = s.classes().to_vec();
        classes.sort();
        assert_eq!(
            classes,
            vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(1, 2), (3, 4)]]
        );
    }

    #[test]
    fn heavy_hex_needs_at_most_four() {
        let s = partition_generators(&Topology::heavy_hex(3).unwrap(), 1).unwrap();
        assert!(s.num_classes() <= 4);
    }

    #[test]
    fn sweeps_repeat_the_flat_order() {
        let s = partition_generators(&Topology::line(4).unwrap(), 2).unwrap();
        assert_eq!(s.params_per_layer(), 6);
        assert_eq!(s.slots(), &[(0, 1), (2, 3), (1, 2), (0, 1), (2, 3), (1, 2)]);
        let blocks: Vec<_> = s.blocks().iter().map(|b| (b.class, b.sweep, b.start, b.len)).collect();
        assert_eq!(blocks, vec![(0, 0, 0, 2), (1, 0, 2, 1), (0, 1, 3, 2), (1, 1, 5, 1)]);
        assert!(partition_generators(&Topology::line(4).unwrap(), 0).is_err());
    }

    #[test]
    fn rejects_non_matching_class() {
        assert!(GeneratorSchedule::new(3, vec![vec![(0, 1), (1, 2)]], 1).is_err());
    }

    #[test]
    fn misra_gries_meets_vizing_where_greedy_does_not() {
        let mut found = false;
        for seed in 0..400u64 {
            let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
            let mut next = |k: usize| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state % k as u64) as usize
            };
            let m = 4 + next(6);
            let mut edges: Vec<(usize, usize)> = (1..m).map(|k| (next(k), k)).collect();
            for a in 0..m {
                for b in a + 1..m {
                    if next(4) == 0 {
                        edges.push((a, b));
                    }
                }
            }
            let Ok(t) = Topology::from_edges(m, &edges) else { continue };
            let bound = t.max_degree() + 1;
            if greedy_coloring(&t).len() > bound {
                found = true;
            }
            let classes = misra_gries(&t);
            assert!(classes.len() <= bound);
            let s = GeneratorSchedule::new(m, classes, 1).unwrap();
            let mut seen = s.slots().to_vec();
            seen.sort();
            assert_eq!(seen, t.edges());
        }
        assert!(found, "the sample should contain a graph where greedy overshoots");
    }
}
