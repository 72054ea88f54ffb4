//! Simulation toolkit for circular Rydberg atoms held in an electrodynamic chip trap.
//!
//! The crate is organised by physics: [`stark`] for level energies and dipoles,
//! [`field`] for the trap potential, [`dynamics`] for trajectories, [`emission`]
//! for cavity-modified decay, [`dressing`] for the microwave-dressed ladder,
//! [`coherence`] for Ramsey and echo simulations and [`estimates`] for closed-form
//! order-of-magnitude numbers. [`presets`] holds the built-in trap settings and
//! [`verify`] runs the numbered acceptance checks.

pub mod units;
pub mod stark;
pub mod field;
pub mod emission;
pub mod numerics;
pub mod dressing;
pub mod par;
pub mod dynamics;
pub mod coherence;
pub mod estimates;
pub mod presets;
pub mod verify;
