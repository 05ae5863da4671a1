//! Phase-locking toolkit: number theory, continued-fraction locking basins,
//! oscillator dynamics, finite-dimensional quantum phase, Galois-field
//! mutually unbiased bases and generalised Bell states.

pub mod arith;
pub mod cli;
pub mod dynamics;
pub mod entangle;
pub mod galois;
pub mod locking;
pub mod qphase;
pub mod qstate;
pub mod report;
