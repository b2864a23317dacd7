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

//! The per-window solver.
//!
//! Each trial starts from random angles and a random multiplier and runs the
//! differential multiplier method on `‖θ‖² + λ𝓛(θ)`: gradient descent in `θ`, ascent in `λ`.
//! The final angles are rounded onto `Ω = {kπ/2}`, where every slot is either a full swap
//! or nothing. Trials are ranked by how many leading layers they make feasible, then by the
//! merit `‖θ‖² + α𝓛(θ)`.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{LayeredCircuit, QubitMap, Topology};
use crate::coloring::GeneratorSchedule;
use crate::cost::{cost_and_gradient, hardware_cost, CostContext, ThetaVector, DEFAULT_BETA};
use crate::error::{Error, Result};
use crate::router::thetas_to_swaps;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnitterConfig {
    pub max_trials: usize,
    pub max_optim_steps: usize,
    pub eta_theta: f64,
    pub eta_lambda: f64,
    /// Upper end of the uniform initialization of `θ` and `λ`.
    pub epsilon: f64,
    /// Early stop once `‖∇𝓛‖² <= grad_stop`.
    pub grad_stop: f64,
    /// Weight of the cost in the trial merit.
    pub alpha: f64,
    /// Decay `γ_β` of the layer weights `β(t) = γ_β^t`.
    pub beta: f64,
    pub seed: u64,
}

impl Default for KnitterConfig {
    fn default() -> Self {
        Self {
            max_trials: 8,
            max_optim_steps: 30,
            eta_theta: 0.03,
            eta_lambda: 0.05,
            // a full half-period of sin²: near-zero starts sit where single swaps only raise 𝓛
            epsilon: FRAC_PI_2,
            grad_stop: 1e-6,
            alpha: 1.0,
            beta: DEFAULT_BETA,
            seed: 0,
        }
    }
}

impl KnitterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_trials == 0 || self.max_optim_steps == 0 {
            return Err(Error::Argument(
                "max_trials and max_optim_steps must be at least 1".into(),
            ));
        }
        let positive = [
            ("eta_theta", self.eta_theta),
            ("eta_lambda", self.eta_lambda),
            ("epsilon", self.epsilon),
            ("grad_stop", self.grad_stop),
            ("alpha", self.alpha),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Argument(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

/// Rounds every entry to the nearest multiple of `π/2`. An exact tie goes to the candidate
/// of smaller magnitude.
pub fn project_to_omega(theta: &ThetaVector) -> ThetaVector {
    let mut out = theta.clone();
    for x in out.values_mut() {
        *x = omega_round(*x) as f64 * FRAC_PI_2;
    }
    out
}

/// Index `k` of the nearest point `kπ/2`.
pub(crate) fn omega_round(x: f64) -> i64 {
    let q = x / FRAC_PI_2;
    let lo = q.floor();
    let hi = lo + 1.0;
    let k = match (q - lo).partial_cmp(&(hi - q)) {
        Some(std::cmp::Ordering::Less) => lo,
        Some(std::cmp::Ordering::Greater) => hi,
        _ => {
            if lo.abs() <= hi.abs() {
                lo
            } else {
                hi
            }
        }
    };
    k as i64
}

/// Outcome of one descent run.
#[derive(Clone, Debug, PartialEq)]
pub struct BdmmRun {
    pub theta: ThetaVector,
    pub lambda: f64,
    pub steps: usize,
    /// `λ` after initialization and after every step.
    pub lambda_trace: Vec<f64>,
}

/// One differential multiplier run from the trial's own random stream.
pub fn bdmm_run(ctx: &CostContext, config: &KnitterConfig, trial: u64) -> Result<BdmmRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(trial);
    let n = ctx.num_params();
    let init: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * config.epsilon).collect();
    let mut theta = ThetaVector::new(init, ctx.schedule().params_per_layer())?;
    let mut lambda = rng.gen::<f64>() * config.epsilon;
    let mut lambda_trace = vec![lambda];

    let (_, mut grad) = cost_and_gradient(ctx, &theta)?;
    let mut steps = 0;
    for _ in 0..config.max_optim_steps {
        steps += 1;
        for (x, g) in theta.values_mut().iter_mut().zip(&grad) {
            *x -= config.eta_theta * (2.0 * *x + lambda * g);
        }
        let (cost, g) = cost_and_gradient(ctx, &theta)?;
        if !cost.is_finite() || g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite cost or gradient at step {steps}")));
        }
        grad = g;
        lambda += config.eta_lambda * cost;
        lambda_trace.push(lambda);
        if grad.iter().map(|x| x * x).sum::<f64>() <= config.grad_stop {
            break;
        }
    }
    Ok(BdmmRun {
        theta,
        lambda,
        steps,
        lambda_trace,
    })
}

/// Number of leading layers made feasible by the rounded angles `theta`, checked exactly on
/// the realized permutations.
pub fn count_feasible_prefix(
    window: &LayeredCircuit,
    topology: &Topology,
    schedule: &GeneratorSchedule,
    theta: &ThetaVector,
) -> Result<usize> {
    let swaps = thetas_to_swaps(theta, schedule)?;
    let mut map = QubitMap::identity(topology.num_qubits());
    for (t, layer) in window.layers().iter().enumerate().take(swaps.len()) {
        for pair in swaps[t].iter().flatten() {
            map.apply_swap(pair.0, pair.1);
        }
        if !layer
            .iter()
            .all(|g| topology.has_edge(map.physical(g.a), map.physical(g.b)))
        {
            return Ok(t);
        }
    }
    Ok(swaps.len().min(window.num_layers()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialReport {
    pub trial: usize,
    pub steps: usize,
    pub lambda: f64,
    /// `𝓛` at the rounded angles.
    pub cost: f64,
    pub merit: f64,
    pub feasible_layers: usize,
    pub swaps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnitterResult {
    /// Rounded angles for the feasible prefix, absent when no trial made layer 0 feasible.
    pub theta_star: Option<ThetaVector>,
    pub feasible_layers: usize,
    /// Index of the selected trial in `trials`.
    pub best_trial: Option<usize>,
    pub trials: Vec<TrialReport>,
}

/// Solves one window. Trials are independent and run in parallel; the selection does not
/// depend on completion order.
pub fn knitter(
    window: &LayeredCircuit,
    topology: &Topology,
    schedule: &GeneratorSchedule,
    config: &KnitterConfig,
) -> Result<KnitterResult> {
    config.validate()?;
    if window.num_layers() == 0 {
        return Err(Error::Argument("empty window".into()));
    }
    let ctx = CostContext::new(topology, window, schedule, config.beta)?;
    let outcomes: Vec<(TrialReport, ThetaVector)> = (0..config.max_trials)
        .into_par_iter()
        .filter_map(|trial| {
            let run = bdmm_run(&ctx, config, trial as u64).ok()?;
            let projected = project_to_omega(&run.theta);
            let cost = hardware_cost(&ctx, &projected).ok()?.total;
            let feasible_layers = count_feasible_prefix(window, topology, schedule, &projected).ok()?;
            let swaps = projected
                .values()
                .iter()
                .filter(|&&x| omega_round(x).rem_euclid(2) == 1)
                .count();
            let report = TrialReport {
                trial,
                steps: run.steps,
                lambda: run.lambda,
                cost,
                merit: projected.norm_squared() + config.alpha * cost,
                feasible_layers,
                swaps,
            };
            Some((report, projected))
        })
        .collect();

    let best = outcomes
        .iter()
        .enumerate()
        .max_by(|(ia, (a, _)), (ib, (b, _))| {
            a.feasible_layers
                .cmp(&b.feasible_layers)
                .then(b.merit.total_cmp(&a.merit))
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i);

    let (theta_star, feasible_layers) = match best {
        Some(i) if outcomes[i].0.feasible_layers > 0 => {
            let l = outcomes[i].0.feasible_layers;
            (Some(outcomes[i].1.prefix(l)), l)
        }
        _ => (None, 0),
    };
    Ok(KnitterResult {
        theta_star,
        feasible_layers,
        best_trial: best,
        trials: outcomes.into_iter().map(|(r, _)| r).collect(),
    })
}
