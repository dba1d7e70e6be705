//! Simulator for in-flash bulk bitwise processing.
//!
//! Models a NAND die that evaluates bitwise boolean expressions inside the
//! flash array: multi-wordline sensing computes OR-of-ANDs across up to four
//! blocks in one array operation, and the per-bitline sensing/cache latches
//! accumulate partial results so full AND/OR/XOR/NOT expressions resolve
//! without moving operands off-die. The crate covers the whole stack:
//!
//! - [`chip`]: logical die state (blocks, pages, latches, snapshots)
//! - [`sensing`]: multi-wordline sensing and latch semantics
//! - [`commands`]: bit-exact wire codec for the device command set
//! - [`reliability`]: raw bit-error-rate model and error injection
//! - [`timing`]: sensing latency / power curves and transfer times
//! - [`system`]: pipelined latency + energy accounting for four system
//!   organizations (host processing, in-storage processing, single-wordline
//!   in-flash, multi-wordline in-flash)
//! - [`expr`] / [`planner`]: boolean expressions, operand placement, and
//!   compilation to device command plans
//! - [`workloads`]: bitmap-index, image-search, and clique-candidate
//!   workload generators, correctness checks, and full-scale profiles
//!
//! Everything is deterministic under a caller-supplied seed.

pub mod bits;
pub mod chip;
pub mod commands;
pub mod expr;
pub mod geometry;
pub mod planner;
pub mod reliability;
pub mod sensing;
pub mod system;
pub mod timing;
pub mod workloads;

pub use bits::Bits;
pub use chip::{ChipState, ProgramMode};
pub use commands::CommandFrame;
pub use expr::Expr;
pub use geometry::ChipGeometry;
pub use planner::{Placement, Plan};
pub use reliability::RberModel;
pub use sensing::{MwsFlags, MwsTarget};
pub use system::SystemKind;
