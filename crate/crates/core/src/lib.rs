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

//! Qubit routing by relaxation onto the Birkhoff polytope.
//!
//! Swap insertion is cast as a smooth constrained problem: every hardware swap slot before
//! every circuit layer carries an angle `θ`, the swap is blended with the identity by
//! `sin²θ`, and a cost counts (in expectation) the gates left off the coupling graph. A
//! differential multiplier method drives the cost to zero while keeping `‖θ‖²` small, the
//! angles are rounded to multiples of `π/2`, and a rolling horizon stitches windows of
//! layers together.
//!
//! Module map:
//!
//! * [`tensor`]: dense matrices, Kronecker products, permutations, doubly stochastic checks.
//! * [`circuit`]: layered circuits, coupling graphs, relabeling and JSON I/O.
//! * [`coloring`]: commuting classes of swap generators.
//! * [`cost`]: the hardware cost and its exact gradient.
//! * [`optimizer`]: the per-window multi-trial solver.
//! * [`router`]: the rolling-horizon router and routing verification.
//! * [`bench`]: circuit generators, metrics, eCDF, CSV and SVG output.

pub mod bench;
pub mod circuit;
pub mod coloring;
pub mod cost;
pub mod error;
pub mod optimizer;
pub mod router;
pub mod tensor;

pub use circuit::{layerize, LayeredCircuit, QubitMap, Topology};
pub use coloring::{partition_generators, GeneratorSchedule};
pub use error::{Error, Result};


pub use optimizer::{knitter, KnitterConfig, KnitterResult};
pub use router::{route, verify_routing, RoutedCircuit, RouterConfig};
