//! Closed-form order-of-magnitude numbers: dipole blockade between two
//! Rydberg atoms and stray fields from electrode patch potentials.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("invalid input: {0}")]
    Input(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockadeInput {
    pub n: u32,
    /// interatomic distance [m]
    pub r12: f64,
    /// splitting of the doubly excited states [Hz]
    pub delta_dd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Blockade {
    pub w_dd_hz: f64,
    pub shift_hz: f64,
}

pub fn blockade_shift(input: &BlockadeInput) -> Result<Blockade, EstimateError> {
    if input.n == 0 || !(input.r12 > 0.0) || !(input.delta_dd > 0.0) {
        return Err(EstimateError::Input("n, R12 and delta_dd must be positive".into()));
    }
    let n = input.n as f64;
    let e2a2 = (units::ELEMENTARY_CHARGE * units::BOHR).powi(2);
    let w = n.powi(4) * e2a2 / (8.0 * std::f64::consts::PI * units::EPSILON0 * input.r12.powi(3)) / units::PLANCK;
    Ok(Blockade { w_dd_hz: w, shift_hz: w * w / input.delta_dd })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchInput {
    /// grain size [m]
    pub a: f64,
    /// voltage between neighbouring grains [V]
    pub dv: f64,
    /// atom-surface distance [m]
    pub d: f64,
    /// size of the region explored by the atom [m]
    pub dr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchField {
    pub e_patch: f64,
    pub de_patch: f64,
}

pub fn patch_field(input: &PatchInput) -> Result<PatchField, EstimateError> {
    let PatchInput { a, dv, d, dr } = *input;
    if !(a > 0.0 && dv > 0.0 && d > 0.0 && dr > 0.0) {
        return Err(EstimateError::Input("a, dV, d and dr must be positive".into()));
    }
    if d <= a {
        return Err(EstimateError::Input(format!("distance {d:e} m must exceed grain size {a:e} m")));
    }
    Ok(PatchField { e_patch: a * dv / (d * d), de_patch: a * dv * dr / d.powi(3) })
}

/// Grain voltage implied by a measured patch field `e` at distance `d` for grain size `a`.
pub fn calibrate_grain_voltage(e: f64, d: f64, a: f64) -> f64 {
    e * d * d / a
}

/// Grain voltage from the reference measurement on gold (1e4 V/m at 0.25 um, 30 nm grains).
pub fn gold_grain_voltage() -> f64 {
    calibrate_grain_voltage(1e4, 0.25e-6, 30e-9)
}

/// Patch input for a gold electrode with 100 nm grains.
pub fn gold_patch(d: f64, dr: f64) -> PatchInput {
    PatchInput { a: 100e-9, dv: gold_grain_voltage(), d, dr }
}
