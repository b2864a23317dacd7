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

//! Command-line front end: `route`, `gen`, `bench` and `verify`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dsm_swap::bench::{
    compute_metrics, emit_braid_svg, emit_csv, mean, run_bench, Family, GeneratorSpec, Protocol,
    DEFAULT_CNOTS_PER_GATE, DEFAULT_CNOTS_PER_SWAP,
};
use dsm_swap::circuit::{emit_circuit, parse_circuit};
use dsm_swap::router::{emit_routed, parse_routed, Fallback};
use dsm_swap::{route, verify_routing, Error, KnitterConfig, LayeredCircuit, RoutedCircuit, RouterConfig, Topology};

const EXIT_ROUTING: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "dsm-swap", version, about = "Swap routing by doubly stochastic relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Route a circuit onto a coupling graph.
    Route(RouteArgs),
    /// Generate a benchmark circuit.
    Gen(GenArgs),
    /// Run a benchmark protocol.
    Bench(BenchArgs),
    /// Check a routed circuit against its coupling graph and original circuit.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct KnitterArgs {
    #[arg(long, default_value_t = KnitterConfig::default().max_trials)]
    max_trials: usize,
    #[arg(long, default_value_t = KnitterConfig::default().max_optim_steps)]
    max_optim_steps: usize,
    #[arg(long, default_value_t = KnitterConfig::default().eta_theta)]
    eta_theta: f64,
    #[arg(long, default_value_t = KnitterConfig::default().eta_lambda)]
    eta_lambda: f64,
    #[arg(long, default_value_t = KnitterConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = KnitterConfig::default().grad_stop)]
    grad_stop: f64,
    #[arg(long, default_value_t = KnitterConfig::default().alpha)]
    alpha: f64,
    /// Decay of the per-layer cost weights.
    #[arg(long, default_value_t = KnitterConfig::default().beta)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl KnitterArgs {
    fn config(&self) -> KnitterConfig {
        KnitterConfig {
            max_trials: self.max_trials,
            max_optim_steps: self.max_optim_steps,
            eta_theta: self.eta_theta,
            eta_lambda: self.eta_lambda,
            epsilon: self.epsilon,
            grad_stop: self.grad_stop,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FallbackArg {
    Fail,
    RetryWithEscalation,
    RetryThenPlace,
}

#[derive(Args)]
struct RouterArgs {
    #[arg(long, default_value_t = RouterConfig::default().horizon)]
    horizon: usize,
    #[arg(long, default_value_t = RouterConfig::default().sweeps)]
    sweeps: usize,
    #[arg(long, value_enum, default_value = "retry-then-place")]
    fallback: FallbackArg,
    /// Append swaps that return every qubit to its initial position.
    #[arg(long)]
    undo_final_permutation: bool,
    #[command(flatten)]
    knitter: KnitterArgs,
}

impl RouterArgs {
    fn config(&self) -> RouterConfig {
        RouterConfig {
            horizon: self.horizon,
            sweeps: self.sweeps,
            fallback: match self.fallback {
                FallbackArg::Fail => Fallback::Fail,
                FallbackArg::RetryWithEscalation => Fallback::RetryWithEscalation,
                FallbackArg::RetryThenPlace => Fallback::RetryThenPlace,
            },
            undo_final_permutation: self.undo_final_permutation,
            knitter: self.knitter.config(),
        }
    }
}

#[derive(Args)]
struct RouteArgs {
    /// Circuit JSON file.
    #[arg(long)]
    circuit: PathBuf,
    /// `line:M`, `ring:M`, `heavyhex:C` or a topology JSON file.
    #[arg(long)]
    coupling: String,
    /// Routed JSON destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a braid diagram.
    #[arg(long)]
    emit_braid: Option<PathBuf>,
    /// Record wall time in the metrics.
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    router: RouterArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Qv,
    Mcx,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    qubits: usize,
    /// Layers for `qv`, gates (equal to layers) for `mcx`.
    #[arg(long)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Quick,
    PaperStudy,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "quick")]
    protocol: ProtocolArg,
    /// Instances per (qubits, topology) cell for `paper-study`.
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    /// Record wall time per instance (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    router: RouterArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    routed: PathBuf,
    #[arg(long)]
    coupling: String,
    #[arg(long)]
    original: PathBuf,
}

enum Failure {
    Input(String),
    Routing(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Routing { .. } => Failure::Routing(e.to_string()),
            Error::Size(_)
            | Error::Shape(_)
            | Error::Argument(_)
            | Error::Topology(_)
            | Error::Parse { .. }
            | Error::Metrics(_) => Failure::Input(e.to_string()),
            Error::Numeric(_) | Error::Contract(_) => Failure::Internal(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            // a closed downstream pipe is not an error worth reporting
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn load_topology(spec: &str) -> Result<Topology, Failure> {
    if Path::new(spec).is_file() {
        return Ok(Topology::from_json(&read(Path::new(spec))?)?);
    }
    Ok(Topology::from_spec(spec)?)
}

/// Routed-output metrics: the quality record plus the router's own counters.
fn metrics_json(original: &LayeredCircuit, routed: &RoutedCircuit, wall: Option<f64>) -> Result<serde_json::Value, Failure> {
    let mut value = serde_json::json!({
        "swap_depth": routed.swap_depth(),
        "windows": routed.windows,
        "escalations": routed.escalations,
        "placed_layers": routed.placed_layers,
    });
    let map = value.as_object_mut().expect("object literal");
    if original.num_gates() > 0 {
        let mut record = compute_metrics(original, routed, DEFAULT_CNOTS_PER_GATE, DEFAULT_CNOTS_PER_SWAP)?;
        record.wall_time_s = wall;
        if let serde_json::Value::Object(fields) = serde_json::to_value(record).expect("serializable") {
            map.extend(fields);
        }
    } else {
        map.insert("swaps".into(), routed.swaps_inserted().into());
    }
    Ok(value)
}

fn cmd_route(args: &RouteArgs) -> Result<(), Failure> {
    let circuit = parse_circuit(&read(&args.circuit)?)?;
    let topology = load_topology(&args.coupling)?;
    let config = args.router.config();
    let start = std::time::Instant::now();
    let routed = route(&circuit, &topology, &config)?;
    let wall = args.timing.then(|| start.elapsed().as_secs_f64());
    let metrics = metrics_json(&circuit, &routed, wall)?;
    write(args.out.as_deref(), &emit_routed(&routed, Some(metrics)))?;
    if let Some(path) = &args.emit_braid {
        write(Some(path), &emit_braid_svg(&routed))?;
    }
    Ok(())
}

fn cmd_gen(args: &GenArgs) -> Result<(), Failure> {
    let spec = GeneratorSpec {
        family: match args.family {
            FamilyArg::Qv => Family::Qv,
            FamilyArg::Mcx => Family::Mcx,
        },
        qubits: args.qubits,
        size: args.layers,
        seed: args.seed,
    };
    write(args.out.as_deref(), &format!("{}\n", emit_circuit(&spec.generate()?)))
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let protocol = match args.protocol {
        ProtocolArg::Quick => Protocol::Quick,
        ProtocolArg::PaperStudy => Protocol::PaperStudy {
            instances: args.instances,
        },
    };
    let rows = run_bench(protocol, &args.router.config(), args.timing)?;
    let csv = emit_csv(&rows)?;
    write(args.out_csv.as_deref(), &csv)?;
    let mut cells: Vec<(String, usize, usize)> = rows
        .iter()
        .map(|r| (r.topology.clone(), r.horizon, r.max_optim_steps))
        .collect();
    cells.sort();
    cells.dedup();
    eprintln!("{:<10} {:>7} {:>5} {:>6} {:>8} {:>8} {:>8}", "topology", "horizon", "steps", "count", "dcnots", "ddepth", "merit");
    for (topo, h, steps) in cells {
        let sel: Vec<_> = rows
            .iter()
            .filter(|r| r.routed && r.topology == topo && r.horizon == h && r.max_optim_steps == steps)
            .collect();
        let pick = |f: fn(&dsm_swap::bench::BenchRecord) -> f64| mean(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
        eprintln!(
            "{topo:<10} {h:>7} {steps:>5} {:>6} {:>8.3} {:>8.3} {:>8.3}",
            sel.len(),
            pick(|r| r.dcnots),
            pick(|r| r.ddepth),
            pick(|r| r.merit)
        );
    }
    if rows.iter().any(|r| !r.routed || !r.verified) {
        return Err(Failure::Routing("some instances failed to route or verify".into()));
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let routed = parse_routed(&read(&args.routed)?)?;
    let topology = load_topology(&args.coupling)?;
    let original = parse_circuit(&read(&args.original)?)?;
    let report = verify_routing(&routed, &topology, &original);
    write(None, &format!("{}\n", serde_json::to_string_pretty(&report).expect("serializable")))?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Routing("verification failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Route(a) => cmd_route(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Routing(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ROUTING)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
