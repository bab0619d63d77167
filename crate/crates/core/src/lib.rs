//! Tabular multi-objective reinforcement learning.
//!
//! The crate is `no_std` (with `alloc`) and covers:
//!
//! * [`momdp`]: MOMDP tables, weight/value vectors, seeded simulation.
//! * [`environments`]: Deep Sea Treasure and small synthetic instances.
//! * [`geometry`]: corner weights, linear-dominance pruning, weight grids.
//! * [`gpi`]: generalized policy evaluation/improvement and GPI priorities.
//! * [`buffer`]: sum-tree prioritized transition buffer.
//! * [`learners`]: GPI linear support and tabular GPI-prioritized Dyna.
//! * [`oracle`]: value iteration, exact CCS construction, EU/MUL metrics.
//!
//! File formats, configuration and the experiment runner live in the
//! companion `morl` crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod buffer;
pub mod environments;
mod error;
pub mod geometry;
pub mod gpi;
pub mod learners;
pub(crate) mod linalg;
pub mod momdp;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
pub use momdp::{scalarize, MoQTable, Momdp, Outcome, Transition, ValueVector, WeightVector};
pub use rng::SimRng;
