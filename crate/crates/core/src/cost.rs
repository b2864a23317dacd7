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

//! The hardware cost function over smooth swap parameters and its exact gradient.
//!
//! For a window of `T′` layers and a schedule with `S` slots per layer, the parameters are
//! `θ ∈ ℝ^{S·T′}`. Slot `s` of layer `t` contributes the factor
//! `PSSWAP = I + α (P⊗P − I)` with `α = sin²θ`. The slots of a layer are applied in
//! schedule order (slots of one class commute), and layers chain into `K^(t)`. The cost is
//! `𝓛(θ) = Σ_t β(t) · vec(M_c)ᵀ K^(t) vec(G^(t))` with `β(t) = γ_β^t`.
//!
//! The factors of one class are multiplied, not summed: for disjoint transpositions
//! `P_a P_b = P_a + P_b − I` holds in `m` dimensions, but the tensor squares `P⊗P` overlap on
//! indices `(r, c)` with `r` and `c` in different pairs, and the summed form can go negative.
//!
//! Everything here works on `m²`-vectors. A swap acting on `vec(X)` is the simultaneous
//! exchange of two rows and two columns of `X`, so one factor costs `O(m)` to apply and
//! nothing of size `m²×m²` is ever built outside [`build_composites`].

use std::f64::consts::FRAC_PI_4;

use crate::circuit::{LayeredCircuit, Topology};
use crate::coloring::GeneratorSchedule;
use crate::error::{Error, Result};
use crate::tensor::{
    psswap, swap_matrix, vec_row_major, DoublyStochasticMatrix, Matrix, PermutationMatrix,
    DSM_SUM_TOL,
};

/// Default decay `γ_β` of the layer weights.
pub const DEFAULT_BETA: f64 = 0.5;

/// Parameters for `layers` circuit layers with `per_layer` slots each, addressed
/// `values[t·S + s]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaVector {
    values: Vec<f64>,
    per_layer: usize,
}

impl ThetaVector {
    pub fn new(values: Vec<f64>, per_layer: usize) -> Result<Self> {
        if per_layer == 0 {
            return Err(Error::Argument("zero parameters per layer".into()));
        }
        if values.len() % per_layer != 0 {
            return Err(Error::Argument(format!(
                "{} parameters is not a multiple of {per_layer}",
                values.len()
            )));
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite parameter {x}")));
        }
        Ok(Self { values, per_layer })
    }

    pub fn zeros(layers: usize, per_layer: usize) -> Self {
        Self {
            values: vec![0.0; layers * per_layer],
            per_layer,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn per_layer(&self) -> usize {
        self.per_layer
    }

    pub fn num_layers(&self) -> usize {
        self.values.len() / self.per_layer
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize) -> f64 {
        self.values[t * self.per_layer + s]
    }

    pub fn layer(&self, t: usize) -> &[f64] {
        &self.values[t * self.per_layer..(t + 1) * self.per_layer]
    }

    /// The first `layers` layers.
    pub fn prefix(&self, layers: usize) -> ThetaVector {
        Self {
            values: self.values[..layers * self.per_layer].to_vec(),
            per_layer: self.per_layer,
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum()
    }
}

/// Everything the cost function needs for one window of layers.
#[derive(Clone, Debug)]
pub struct CostContext {
    m: usize,
    schedule: GeneratorSchedule,
    beta: f64,
    weights: Vec<f64>,
    complement: Vec<f64>,
    layers: Vec<Vec<f64>>,
}

impl CostContext {
    pub fn new(
        topology: &Topology,
        circuit: &LayeredCircuit,
        schedule: &GeneratorSchedule,
        beta: f64,
    ) -> Result<Self> {
        let m = topology.num_qubits();
        if circuit.num_qubits() != m || schedule.num_qubits() != m {
            return Err(Error::Argument(format!(
                "qubit counts disagree: topology {m}, circuit {}, schedule {}",
                circuit.num_qubits(),
                schedule.num_qubits()
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Argument(format!("beta decay must lie in (0, 1), got {beta}")));
        }
        let layers = (0..circuit.num_layers())
            .map(|t| vec_row_major(&circuit.layer_adjacency(t)))
            .collect::<Result<Vec<_>>>()?;
        let weights = (0..layers.len()).map(|t| beta.powi(t as i32)).collect();
        Ok(Self {
            m,
            schedule: schedule.clone(),
            beta,
            weights,
            complement: vec_row_major(topology.complement())?,
            layers,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.m
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn schedule(&self) -> &GeneratorSchedule {
        &self.schedule
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `β(t)`.
    pub fn weight(&self, t: usize) -> f64 {
        self.weights[t]
    }

    /// Total number of parameters, `S·T′`.
    pub fn num_params(&self) -> usize {
        self.schedule.params_per_layer() * self.layers.len()
    }

    fn check_theta(&self, theta: &ThetaVector) -> Result<()> {
        let s = self.schedule.params_per_layer();
        if theta.per_layer() != s || theta.len() != self.num_params() {
            return Err(Error::Argument(format!(
                "expected {} parameters ({} per layer), got {} ({} per layer)",
                self.num_params(),
                s,
                theta.len(),
                theta.per_layer()
            )));
        }
        Ok(())
    }

    /// `sin²θ` per slot.
    fn alphas(theta: &ThetaVector) -> Vec<f64> {
        theta.values().iter().map(|x| x.sin().powi(2)).collect()
    }

    /// Pushes `v` through the factors of layer `t` in place.
    fn propagate_layer(&self, alphas: &[f64], t: usize, v: &mut [f64]) {
        let s_per = self.schedule.params_per_layer();
        for (s, &(i, j)) in self.schedule.slots().iter().enumerate() {
            let a = alphas[t * s_per + s];
            if a != 0.0 {
                apply_swap_step(self.m, i, j, a, v);
            }
        }
    }
}

/// `v ← v + α((P⊗P) v − v)` for the swap `P = (i j)`.
fn apply_swap_step(m: usize, i: usize, j: usize, alpha: f64, v: &mut [f64]) {
    // P⊗P is an involution, so the moved indices come in pairs (k, σk)
    for_each_moved(m, i, j, |k, src| {
        if k < src {
            let (x, y) = (v[k], v[src]);
            v[k] = x + alpha * (y - x);
            v[src] = y + alpha * (x - y);
        }
    });
}

/// `uᵀ((P⊗P) v − v)` for the swap `(i, j)`.
fn swap_difference(m: usize, i: usize, j: usize, u: &[f64], v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for_each_moved(m, i, j, |k, src| acc += u[k] * (v[src] - v[k]));
    acc
}

/// Calls `f(k, σ(k))` for every index of `vec(X)` touched by the swap `σ = (i j)` acting as
/// `X ↦ P X Pᵀ`.
#[inline]
fn for_each_moved(m: usize, i: usize, j: usize, mut f: impl FnMut(usize, usize)) {
    let sigma = |q: usize| {
        if q == i {
            j
        } else if q == j {
            i
        } else {
            q
        }
    };
    for r in [i, j] {
        let sr = sigma(r);
        for c in 0..m {
            f(r * m + c, sr * m + sigma(c));
        }
    }
    for r in (0..m).filter(|&r| r != i && r != j) {
        for c in [i, j] {
            f(r * m + c, r * m + sigma(c));
        }
    }
}

/// `1ᵀ[(P G Pᵀ) ⊙ M_c]1`: twice the number of gates of `G` that `P` leaves off the hardware.
pub fn layer_cost(p: &PermutationMatrix, g: &Matrix, mc: &Matrix) -> Result<f64> {
    let m = p.size();
    for (name, x) in [("layer", g), ("complement", mc)] {
        if x.rows() != m || x.cols() != m {
            return Err(Error::Shape(format!(
                "{name} matrix is {}x{}, permutation has size {m}",
                x.rows(),
                x.cols()
            )));
        }
    }
    let mut acc = 0.0;
    for r in 0..m {
        for c in 0..m {
            let gv = g[(r, c)];
            if gv != 0.0 {
                acc += gv * mc[(p.apply(r), p.apply(c))];
            }
        }
    }
    Ok(acc)
}

fn check_class(class: &[(usize, usize)], thetas: &[f64], m: usize) -> Result<()> {
    if class.len() != thetas.len() {
        return Err(Error::Argument(format!(
            "{} angles for {} generators",
            thetas.len(),
            class.len()
        )));
    }
    let mut busy = vec![false; m];
    for &(a, b) in class {
        if a >= m || b >= m || a == b {
            return Err(Error::Argument(format!("bad generator ({a}, {b})")));
        }
        if std::mem::replace(&mut busy[a], true) || std::mem::replace(&mut busy[b], true) {
            return Err(Error::Argument("class is not a matching".into()));
        }
    }
    Ok(())
}

/// Dense `m²×m²` composition of the PSSWAPs of one class of disjoint swaps. The factors
/// commute, so the order of `class` does not matter.
pub fn psswap_class_layer(
    class: &[(usize, usize)],
    thetas: &[f64],
    m: usize,
) -> Result<DoublyStochasticMatrix> {
    check_class(class, thetas, m)?;
    let mut out = Matrix::identity(m * m);
    for (&(a, b), &th) in class.iter().zip(thetas) {
        out = psswap(m, a, b, th)?.matrix().matmul(&out)?;
    }
    DoublyStochasticMatrix::new(out, DSM_SUM_TOL)
}

/// `I_m + Σ sin²θᵢ (Pᵢ − I_m)` for one class of disjoint swaps, which equals the product of
/// the class's `m×m` SSWAPs.
pub fn sswap_class_sum(class: &[(usize, usize)], thetas: &[f64], m: usize) -> Result<DoublyStochasticMatrix> {
    check_class(class, thetas, m)?;
    let eye = Matrix::identity(m);
    let mut out = eye.clone();
    for (&(a, b), &th) in class.iter().zip(thetas) {
        let diff = swap_matrix(m, a, b)?.to_dense().add_scaled(&eye, -1.0)?;
        out = out.add_scaled(&diff, th.sin().powi(2))?;
    }
    DoublyStochasticMatrix::new(out, DSM_SUM_TOL)
}

/// Dense composites `K^(0..T′)`. Meant for inspection and testing; the cost and gradient
/// never materialize these.
pub fn build_composites(ctx: &CostContext, theta: &ThetaVector) -> Result<Vec<DoublyStochasticMatrix>> {
    ctx.check_theta(theta)?;
    let m = ctx.m;
    let sched = &ctx.schedule;
    let mut k = Matrix::identity(m * m);
    let mut out = Vec::with_capacity(ctx.num_layers());
    for t in 0..ctx.num_layers() {
        for block in sched.blocks() {
            let layer = psswap_class_layer(
                &sched.slots()[block.slots()],
                &theta.layer(t)[block.slots()],
                m,
            )?;
            k = layer.matrix().matmul(&k)?;
        }
        out.push(DoublyStochasticMatrix::new(k.clone(), DSM_SUM_TOL)?);
    }
    Ok(out)
}

/// Total cost and its per-layer terms.
#[derive(Clone, Debug, PartialEq)]
pub struct CostBreakdown {
    pub total: f64,
    pub per_layer: Vec<f64>,
}

/// `𝓛(θ)` together with the terms `𝓛_t`.
pub fn hardware_cost(ctx: &CostContext, theta: &ThetaVector) -> Result<CostBreakdown> {
    ctx.check_theta(theta)?;
    let alphas = CostContext::alphas(theta);
    let mut per_layer = Vec::with_capacity(ctx.num_layers());
    let mut v = Vec::new();
    for (t, x) in ctx.layers.iter().enumerate() {
        if x.iter().all(|&g| g == 0.0) {
            per_layer.push(0.0);
            continue;
        }
        v.clear();
        v.extend_from_slice(x);
        for tau in 0..=t {
            ctx.propagate_layer(&alphas, tau, &mut v);
        }
        per_layer.push(ctx.weights[t] * dot(&ctx.complement, &v));
    }
    Ok(CostBreakdown {
        total: per_layer.iter().sum(),
        per_layer,
    })
}

/// Cost and gradient in one pass.
///
/// `𝓛` is affine in each `αₛ = sin²θₛ`, so `∂𝓛/∂θₛ = sin(2θₛ)·∂𝓛/∂αₛ`, which is exactly
/// the shift rule `𝓛(θ + π/4·eₛ) − 𝓛(θ − π/4·eₛ)`. The `∂𝓛/∂αₛ` are collected with one
/// forward sweep per layer term and an adjoint sweep back through the same factors (every
/// factor is symmetric).
pub fn cost_and_gradient(ctx: &CostContext, theta: &ThetaVector) -> Result<(f64, Vec<f64>)> {
    ctx.check_theta(theta)?;
    let m = ctx.m;
    let slots = ctx.schedule.slots();
    let s_per = slots.len();
    let alphas = CostContext::alphas(theta);
    let mut d_alpha = vec![0.0; theta.len()];
    let mut total = 0.0;
    // states[k] is the vector after the k-th factor that actually changed it
    let mut states: Vec<Vec<f64>> = Vec::new();
    let mut before: Vec<usize> = Vec::new();
    for (t, x) in ctx.layers.iter().enumerate() {
        if x.iter().all(|&g| g == 0.0) {
            continue;
        }
        states.clear();
        before.clear();
        states.push(x.clone());
        for idx in 0..(t + 1) * s_per {
            before.push(states.len() - 1);
            let a = alphas[idx];
            if a != 0.0 {
                let (i, j) = slots[idx % s_per];
                let mut next = states[states.len() - 1].clone();
                apply_swap_step(m, i, j, a, &mut next);
                states.push(next);
            }
        }
        let last = states.last().expect("initial state");
        total += ctx.weights[t] * dot(&ctx.complement, last);

        let mut u: Vec<f64> = ctx.complement.iter().map(|c| c * ctx.weights[t]).collect();
        for idx in (0..(t + 1) * s_per).rev() {
            let (i, j) = slots[idx % s_per];
            d_alpha[idx] += swap_difference(m, i, j, &u, &states[before[idx]]);
            let a = alphas[idx];
            if a != 0.0 {
                apply_swap_step(m, i, j, a, &mut u);
            }
        }
    }
    let grad = theta
        .values()
        .iter()
        .zip(&d_alpha)
        .map(|(th, da)| (2.0 * th).sin() * da)
        .collect();
    Ok((total, grad))
}

/// `∇𝓛(θ)`.
pub fn gradient(ctx: &CostContext, theta: &ThetaVector) -> Result<Vec<f64>> {
    cost_and_gradient(ctx, theta).map(|(_, g)| g)
}

/// The shift rule for one slot, evaluated literally with two cost evaluations.
pub fn parameter_shift(ctx: &CostContext, theta: &ThetaVector, index: usize) -> Result<f64> {
    ctx.check_theta(theta)?;
    let mut shifted = theta.clone();
    shifted.values[index] += FRAC_PI_4;
    let plus = hardware_cost(ctx, &shifted)?.total;
    shifted.values[index] -= 2.0 * FRAC_PI_4;
    let minus = hardware_cost(ctx, &shifted)?.total;
    Ok(plus - minus)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::layerize;
    use crate::coloring::partition_generators;
    use crate::tensor::kron;
    use std::f64::consts::FRAC_PI_2;

    fn line3_instance() -> (Topology, LayeredCircuit, GeneratorSchedule) {
        let topo = Topology::line(3).unwrap();
        let circ = layerize(3, &[(0, 2)]).unwrap();
        let sched = partition_generators(&topo, 1).unwrap();
        (topo, circ, sched)
    }

    fn slot_of(sched: &GeneratorSchedule, pair: (usize, usize)) -> usize {
        sched.slots().iter().position(|&p| p == pair).unwrap()
    }

    #[test]
    fn fig5_layer_cost() {
        let topo = Topology::line(7).unwrap();
        let circ = layerize(7, &[(0, 2), (1, 3), (5, 6)]).unwrap();
        let g = circ.layer_adjacency(0);
        let p = swap_matrix(7, 1, 2).unwrap();
        assert_eq!(layer_cost(&p, &g, topo.complement()).unwrap(), 0.0);
        let id = PermutationMatrix::identity(7);
        assert_eq!(layer_cost(&id, &g, topo.complement()).unwrap(), 4.0);
        let empty = Matrix::zeros(7, 7);
        assert_eq!(layer_cost(&p, &empty, topo.complement()).unwrap(), 0.0);
        assert!(layer_cost(&p, &Matrix::zeros(3, 3), topo.complement()).is_err());
    }

    #[test]
    fn class_layer_examples() {
        let eye = Matrix::identity(25);
        let zero = psswap_class_layer(&[(0, 1), (2, 3)], &[0.0, 0.0], 5).unwrap();
        assert!(zero.matrix().max_abs_diff(&eye) < 1e-15);
        let p = swap_matrix(3, 0, 1).unwrap().to_dense();
        let one = psswap_class_layer(&[(0, 1)], &[FRAC_PI_2], 3).unwrap();
        assert!(one.matrix().max_abs_diff(&kron(&p, &p).unwrap()) < 1e-15);
        assert!(psswap_class_layer(&[(0, 1), (1, 2)], &[0.1, 0.2], 3).is_err());
    }

    #[test]
    fn cost_examples() {
        let (topo, circ, sched) = line3_instance();
        let ctx = CostContext::new(&topo, &circ, &sched, DEFAULT_BETA).unwrap();
        let zero = ThetaVector::zeros(1, sched.params_per_layer());
        assert_eq!(hardware_cost(&ctx, &zero).unwrap().total, 2.0);
        let mut theta = zero.clone();
        theta.values_mut()[slot_of(&sched, (0, 1))] = FRAC_PI_2;
        assert!(hardware_cost(&ctx, &theta).unwrap().total.abs() < 1e-15);

        let feasible = layerize(3, &[(0, 1), (1, 2)]).unwrap();
        let ctx = CostContext::new(&topo, &feasible, &sched, DEFAULT_BETA).unwrap();
        let z = ThetaVector::zeros(2, sched.params_per_layer());
        assert_eq!(hardware_cost(&ctx, &z).unwrap().total, 0.0);
    }

    #[test]
    fn composites_examples() {
        let topo = Topology::line(4).unwrap();
        let circ = layerize(4, &[(0, 2), (1, 3), (0, 3)]).unwrap();
        let sched = partition_generators(&topo, 1).unwrap();
        let ctx = CostContext::new(&topo, &circ, &sched, DEFAULT_BETA).unwrap();
        let zero = ThetaVector::zeros(circ.num_layers(), sched.params_per_layer());
        for k in build_composites(&ctx, &zero).unwrap() {
            assert!(k.matrix().max_abs_diff(&Matrix::identity(16)) < 1e-15);
        }

        let (topo, circ, sched) = line3_instance();
        let ctx = CostContext::new(&topo, &circ, &sched, DEFAULT_BETA).unwrap();
        let mut theta = ThetaVector::zeros(1, sched.params_per_layer());
        theta.values_mut()[slot_of(&sched, (0, 1))] = FRAC_PI_2;
        let k = build_composites(&ctx, &theta).unwrap();
        let p = swap_matrix(3, 0, 1).unwrap().to_dense();
        assert!(k[0].matrix().max_abs_diff(&kron(&p, &p).unwrap()) < 1e-15);
        assert!(build_composites(&ctx, &ThetaVector::zeros(2, sched.params_per_layer())).is_err());
    }

    #[test]
    fn gradient_examples() {
        let (topo, circ, sched) = line3_instance();
        let ctx = CostContext::new(&topo, &circ, &sched, DEFAULT_BETA).unwrap();
        let s = slot_of(&sched, (0, 1));
        let mut theta = ThetaVector::zeros(1, sched.params_per_layer());
        theta.values_mut()[s] = FRAC_PI_4;
        let g = gradient(&ctx, &theta).unwrap();
        assert!(g[s] < 0.0);
        // central differences
        let h = 1e-5;
        let mut p = theta.clone();
        p.values_mut()[s] += h;
        let mut q = theta.clone();
        q.values_mut()[s] -= h;
        let fd = (hardware_cost(&ctx, &p).unwrap().total - hardware_cost(&ctx, &q).unwrap().total) / (2.0 * h);
        assert!((fd - g[s]).abs() < 1e-6);
        assert!((parameter_shift(&ctx, &theta, s).unwrap() - g[s]).abs() < 1e-12);

        let empty = LayeredCircuit::new(3, vec![vec![]]).unwrap();
        let ctx = CostContext::new(&topo, &empty, &sched, DEFAULT_BETA).unwrap();
        let g = gradient(&ctx, &ThetaVector::new(vec![0.3, 0.7], 2).unwrap()).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn context_validation() {
        let (topo, circ, sched) = line3_instance();
        assert!(CostContext::new(&topo, &circ, &sched, 1.0).is_err());
        assert!(CostContext::new(&topo, &circ, &sched, 0.0).is_err());
        let other = Topology::line(4).unwrap();
        assert!(CostContext::new(&other, &circ, &sched, 0.5).is_err());
        assert!(ThetaVector::new(vec![f64::NAN], 1).is_err());
        assert!(ThetaVector::new(vec![0.0; 3], 2).is_err());
    }
}
