//! Static register power-state analysis for GPU kernels written in GASM, a
//! PTXPlus-style assembly, together with a warp-level pipeline simulator that
//! measures the register-file leakage energy of the resulting schedule.
//!
//! The flow is: [`gasm::parse_program`] → [`dataflow::analyze`] →
//! [`annotator::annotate`] → [`sim::simulate`] → [`energy::compare_report`].

pub mod annotator;
pub mod cfg;
pub mod dataflow;
pub mod energy;
pub mod gasm;
pub mod sim;
pub mod synth;

pub use annotator::annotate;
pub use cfg::{build_cfg, Cfg, CfgError, Node, Point, Side};
pub use dataflow::{analyze, AnalysisResult, Distance, Threshold};
pub use energy::{EnergyLedger, PowerParams, Report};
pub use gasm::{
    parse_program, serialize_program, InstrId, Instruction, Operand, PowerState, Program, RegKind, Register,
};
pub use sim::{simulate, Mode, Scheduler, SimConfig, SimError, SimResult};
