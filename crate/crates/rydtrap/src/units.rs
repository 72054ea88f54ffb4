//! Physical constants and the atomic-unit conversions used throughout the crate.
//!
//! The atomic units of energy and field are fixed at the rounded values
//! 4.360e-18 J and 514.2e9 V/m so that polarizabilities reproduce the
//! published figures to the last digit.

/// Atomic unit of energy [J].
pub const ENERGY_AU: f64 = 4.360e-18;
/// Atomic unit of electric field [V/m].
pub const FIELD_AU: f64 = 514.2e9;
/// Planck constant [J s].
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Frequency of one atomic unit of energy [Hz].
pub const HZ_PER_AU: f64 = ENERGY_AU / PLANCK;
/// Bohr radius [m].
pub const BOHR: f64 = 5.291_772_109_03e-11;
/// Elementary charge [C].
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity [F/m].
pub const EPSILON0: f64 = 8.854_187_812_8e-12;
/// Speed of light [m/s].
pub const LIGHT_SPEED: f64 = 299_792_458.0;
/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Mass of a rubidium-87 atom [kg].
pub const MASS_RB87: f64 = 86.909_180_527 * 1.660_539_066_60e-27;
/// Standard gravity [m/s^2].
pub const GRAVITY: f64 = 9.81;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Converts a field from V/m to atomic units.
#[inline]
pub fn field_to_au(e: f64) -> f64 {
    e / FIELD_AU
}

#[inline]
pub fn field_from_au(f: f64) -> f64 {
    f * FIELD_AU
}

/// Converts an energy in atomic units to a frequency in Hz.
#[inline]
pub fn au_to_hz(e: f64) -> f64 {
    e * HZ_PER_AU
}

#[inline]
pub fn hz_to_au(f: f64) -> f64 {
    f / HZ_PER_AU
}

/// Converts a frequency [Hz] to an energy [J].
#[inline]
pub fn hz_to_joule(f: f64) -> f64 {
    f * PLANCK
}

/// Converts a coefficient in a.u. of energy per (a.u. of field)^k to Hz per (V/m)^k.
#[inline]
pub fn au_coeff_to_hz(c: f64, k: i32) -> f64 {
    au_to_hz(c) / FIELD_AU.powi(k)
}

/// Mean thermal photon number of a mode at frequency `nu` [Hz] and temperature `t` [K].
pub fn bose_occupation(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    1.0 / ((PLANCK * nu / (BOLTZMANN * t)).exp_m1())
}

/// Free-space spontaneous emission rate [1/s] for angular frequency `omega` and
/// dipole `d_au` in units of e a0.
pub fn einstein_a(omega: f64, d_au: f64) -> f64 {
    let d = d_au * ELEMENTARY_CHARGE * BOHR;
    omega.powi(3) * d * d / (3.0 * std::f64::consts::PI * EPSILON0 * HBAR * LIGHT_SPEED.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [1e-3, 0.7, 400.0, 1e6] {
            assert!((field_from_au(field_to_au(x)) / x - 1.0).abs() < 1e-12);
            assert!((au_to_hz(hz_to_au(x)) / x - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occupation_at_one_kelvin() {
        let n = bose_occupation(50e9, 1.0);
        assert!((n - 0.1).abs() < 0.005, "{n}");
        assert_eq!(bose_occupation(50e9, 0.0), 0.0);
    }
}
