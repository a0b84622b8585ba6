//! Simulation and optimization of an EIT optical quantum memory for heralded
//! single photons.
//!
//! * [`source`]: Gaussian-shaped heralded photons from a backward sFWM source.
//! * [`solver`]: Maxwell-Bloch propagation through a three-level Lambda ensemble.
//! * [`spectral`]: closed-form steady-state transfer function, EIT spectra and fits.
//! * [`storage`]: slow-light and store/retrieve runs, efficiency and likeness.
//! * [`optimizer`]: control-field optimization and parameter scans.
//! * [`stats`]: Monte Carlo time-tag streams, conditional g2 and Cauchy-Schwarz ratio.
//!
//! Rates are in units of gamma13 = 2 pi x 3 MHz and times in units of 1/gamma13
//! (see [`units`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod decay;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod lsq;
pub mod optimizer;
pub mod solver;
pub mod source;
pub mod spectral;
pub mod stats;
pub mod storage;
pub mod units;
pub mod wavepacket;

pub use control::{evaluate_control, ControlProfile};
pub use decay::{DecayKind, DecayModel};
pub use ensemble::EnsembleParams;
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use solver::{propagate, SolverConfig};
pub use source::{generate_heralded_waveform, SourceParams};
pub use wavepacket::Wavepacket;
