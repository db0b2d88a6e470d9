//! Substrate noise impact simulation for analog/RF circuits.
//!
//! The flow mirrors a layout-driven extraction: a finite-volume substrate
//! mesh is reduced to a macro-model, on-chip interconnect is extracted to
//! series R and π capacitances, device stubs are attached, and the resulting
//! linear network is solved for substrate-to-circuit transfer functions. The
//! impact module turns those transfers into FM and AM spurs around an LC-tank
//! VCO carrier, and the oracle module checks the narrowband spur formulas
//! against a direct time-domain synthesis.

pub mod devices;
pub mod error;
pub mod impact;
pub mod interconnect;
pub mod layout;
pub mod mesh;
pub mod mna;
pub mod netlist;
pub mod oracle;
pub mod pipeline;
pub mod solver;
pub mod sparse;
pub mod units;

pub use error::{Error, Result};
pub use netlist::{Element, ElementKind, MosSmallSignal, Netlist, Node, NodeId, NodeKind};
pub use solver::{ac_solve, point_to_point_resistance, transfer, transimpedance, TransferFunction};
