//! Spontaneous emission between two plane mirrors by summing the field of the
//! dipole's images, plus the tilt correction and blackbody transfer rates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::stark::{self, Polarization, RydbergLevel};
use crate::units;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmissionError {
    #[error("invalid cavity: {0}")]
    InvalidCavity(String),
    #[error("image series did not converge: residual {0:e}")]
    Convergence(f64),
    #[error("negative decay ratio {0:e} beyond truncation noise")]
    Negative(f64),
    #[error(transparent)]
    Stark(#[from] stark::StarkError),
}

/// Plane cavity: mirrors at z = 0 and z = L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavitySpec {
    pub l: f64,
    pub z_atom: f64,
    pub lambda: f64,
    /// mirror skin depth [m], 0 for perfect conductors
    pub skin_depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// dipole parallel to the mirrors (sigma transitions)
    Parallel,
    /// dipole perpendicular to the mirrors (pi transitions)
    Perpendicular,
}

impl CavitySpec {
    pub fn validate(&self) -> Result<(), EmissionError> {
        if !(self.l > 0.0 && self.lambda > 0.0) {
            return Err(EmissionError::InvalidCavity("L and lambda must be positive".into()));
        }
        if !(self.z_atom > 0.0 && self.z_atom < self.l) {
            return Err(EmissionError::InvalidCavity(format!(
                "atom height {} must lie strictly between the mirrors (L = {})",
                self.z_atom, self.l
            )));
        }
        if !(self.skin_depth >= 0.0) || self.skin_depth > 1e-2 * self.lambda {
            return Err(EmissionError::InvalidCavity("skin depth must satisfy 0 <= delta << lambda".into()));
        }
        Ok(())
    }

    /// Amplitude reflection modulus and phase (rho, chi).
    pub fn reflection(&self) -> (f64, f64) {
        let a = 2.0 * PI * self.skin_depth / self.lambda;
        ((-a).exp(), a)
    }
}

const TAIL_TOL: f64 = 1e-12;

fn dipole_kernel(x: f64, orient: Orientation) -> Complex64 {
    let ph = Complex64::from_polar(1.0, x);
    let (x2, x3) = (x * x, x * x * x);
    match orient {
        Orientation::Parallel => ph * Complex64::new(1.0 / x - 1.0 / x3, 1.0 / x2),
        Orientation::Perpendicular => ph * Complex64::new(2.0 / x3, -2.0 / x2),
    }
}

/// Sum of the image fields at the dipole, in units where the free-space
/// radiative part gives Im = 2/3. `max_pairs` caps the number of image pairs.
fn image_sum(cav: &CavitySpec, orient: Orientation, reflection: Complex64, max_pairs: usize) -> (Complex64, usize) {
    let kwave = 2.0 * PI / cav.lambda;
    let (l, z) = (cav.l, cav.z_atom);
    let r = match orient {
        Orientation::Parallel => -reflection,
        Orientation::Perpendicular => reflection,
    };
    let rho = reflection.norm();
    let mut sum = Complex64::new(0.0, 0.0);
    // images at -z (one reflection) and 2L - z (one reflection)
    let mut pow_odd = r; // r^(2k-1) for k = 1
    sum += pow_odd * dipole_kernel(kwave * 2.0 * z, orient);
    sum += pow_odd * dipole_kernel(kwave * (2.0 * l - 2.0 * z), orient);
    let mut k = 1usize;
    let mut pow_even = Complex64::new(1.0, 0.0);
    loop {
        let kf = k as f64;
        pow_even *= r * r; // r^(2k)
        let even = dipole_kernel(kwave * 2.0 * kf * l, orient);
        sum += pow_even * even * 2.0;
        pow_odd *= r * r; // r^(2k+1)
        sum += pow_odd * dipole_kernel(kwave * (2.0 * kf * l + 2.0 * z), orient);
        sum += pow_odd * dipole_kernel(kwave * (2.0 * (kf + 1.0) * l - 2.0 * z), orient);
        k += 1;
        let x_min = kwave * (2.0 * kf * l).min(2.0 * kf * l + 2.0 * z);
        let tail = 4.0 * rho.powi(2 * k as i32 - 1) / ((1.0 - rho * rho).max(1e-300) * x_min.max(1e-300));
        if tail < TAIL_TOL || k >= max_pairs {
            return (sum, k);
        }
    }
}

/// Image-series susceptibility u_d . F(r_d, r_d) in units of the free-space
/// radiative reaction.
pub fn image_susceptibility(cav: &CavitySpec, orient: Orientation) -> Result<Complex64, EmissionError> {
    cav.validate()?;
    let (rho, chi) = cav.reflection();
    if rho >= 1.0 {
        return Err(EmissionError::Convergence(f64::INFINITY));
    }
    let refl = Complex64::from_polar(rho, chi);
    Ok(image_sum(cav, orient, refl, usize::MAX).0)
}

/// Same sum truncated after `pairs` image pairs (used by the convergence checks).
pub fn image_susceptibility_truncated(cav: &CavitySpec, orient: Orientation, pairs: usize) -> Complex64 {
    let (rho, chi) = cav.reflection();
    image_sum(cav, orient, Complex64::from_polar(rho, chi), pairs).0
}

fn ratio_from(s: Complex64) -> Result<f64, EmissionError> {
    let g = 1.0 + 1.5 * s.im;
    if g < 0.0 {
        if g < -1e-9 {
            return Err(EmissionError::Negative(g));
        }
        return Ok(0.0);
    }
    Ok(g)
}

/// Gamma/Gamma0 for a dipole of the given orientation. Perfect mirrors
/// (skin depth 0) go through `perfect_mirror_ratio`.
pub fn decay_ratio(cav: &CavitySpec, orient: Orientation) -> Result<f64, EmissionError> {
    cav.validate()?;
    if cav.skin_depth == 0.0 {
        return perfect_mirror_ratio(cav, orient);
    }
    ratio_from(image_susceptibility(cav, orient)?)
}

/// Perfect mirrors: evaluate at reflection loss eps, eps/2, eps/4 and
/// Richardson-extrapolate to eps = 0.
pub fn perfect_mirror_ratio(cav: &CavitySpec, orient: Orientation) -> Result<f64, EmissionError> {
    cav.validate()?;
    let eps0 = 1e-3;
    let at = |eps: f64| -> Result<f64, EmissionError> {
        let c = CavitySpec { skin_depth: eps * cav.lambda / (2.0 * PI), ..*cav };
        Ok(1.0 + 1.5 * image_susceptibility(&c, orient)?.im)
    };
    let (a, b, c) = (at(eps0)?, at(eps0 / 2.0)?, at(eps0 / 4.0)?);
    let r1 = 2.0 * b - a;
    let r2 = 2.0 * c - b;
    let g = (4.0 * r2 - r1) / 3.0;
    if g.abs() < 1e-9 {
        return Ok(0.0);
    }
    ratio_from(Complex64::new(0.0, (g - 1.0) / 1.5))
}

/// Closed-form mode sum for perfect mirrors.
pub fn mode_sum_ratio(l: f64, lambda: f64, z: f64, orient: Orientation) -> f64 {
    let nmax = (2.0 * l / lambda).floor() as usize;
    let q = |n: usize| n as f64 * lambda / (2.0 * l);
    match orient {
        Orientation::Parallel => {
            3.0 * lambda / (4.0 * l)
                * (1..=nmax)
                    .map(|n| (1.0 + q(n).powi(2)) * (n as f64 * PI * z / l).sin().powi(2))
                    .sum::<f64>()
        }
        Orientation::Perpendicular => {
            3.0 * lambda / (2.0 * l)
                * (0.5
                    + (1..=nmax)
                        .map(|n| (1.0 - q(n).powi(2)) * (n as f64 * PI * z / l).cos().powi(2))
                        .sum::<f64>())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmissionRates {
    pub gamma_par: f64,
    pub gamma_perp: f64,
    pub gamma_corr: f64,
}

pub fn emission_rates(cav: &CavitySpec, theta_sq_bar: f64) -> Result<EmissionRates, EmissionError> {
    let gamma_par = decay_ratio(cav, Orientation::Parallel)?;
    let gamma_perp = decay_ratio(cav, Orientation::Perpendicular)?;
    Ok(EmissionRates {
        gamma_par,
        gamma_perp,
        gamma_corr: corrected_inhibition(gamma_par, gamma_perp, theta_sq_bar),
    })
}

/// Decay ratio for a dipole tilted by a small angle with mean square theta_sq_bar.
pub fn corrected_inhibition(gamma_par: f64, gamma_perp: f64, theta_sq_bar: f64) -> f64 {
    gamma_par + gamma_perp * theta_sq_bar
}

/// Survival probability along a sampled tilt history (t [s], theta [rad]):
/// exp(-gamma0 * integral of (gamma_par + gamma_perp theta^2) dt), trapezoidal.
pub fn survival_probability(gamma0: f64, gamma_par: f64, gamma_perp: f64, samples: &[(f64, f64)]) -> f64 {
    let mut integral = 0.0;
    for w in samples.windows(2) {
        let (t0, a) = w[0];
        let (t1, b) = w[1];
        let fa = gamma_par + gamma_perp * a * a;
        let fb = gamma_par + gamma_perp * b * b;
        integral += 0.5 * (fa + fb) * (t1 - t0);
    }
    (-gamma0 * integral).exp()
}

#[derive(Debug, Clone, Serialize)]
pub struct BlackbodyTransition {
    pub target: RydbergLevel,
    pub frequency_hz: f64,
    pub dipole_au: f64,
    /// cavity-modified pi decay rate [1/s]
    pub gamma_pi: f64,
    pub occupation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlackbodyRates {
    /// sum of n_t * gamma_pi [1/s]
    pub rate: f64,
    /// sum of gamma_pi, i.e. the rate per thermal photon per mode [1/s]
    pub rate_per_photon: f64,
    pub transitions: Vec<BlackbodyTransition>,
}

/// Blackbody-induced pi transfer out of `level` towards the same-m levels of
/// manifolds n-1, n and n+1. The cavity supplies L, atom height and skin depth;
/// each transition uses its own wavelength for the pi enhancement factor.
pub fn blackbody_rates(level: &RydbergLevel, temperature: f64, cavity: &CavitySpec) -> Result<BlackbodyRates, EmissionError> {
    if temperature < 0.0 {
        return Err(EmissionError::InvalidCavity("temperature must be non-negative".into()));
    }
    let mut transitions = Vec::new();
    let e0 = stark::bare_energy_au(level.n);
    for n in level.n.saturating_sub(1).max(1)..=level.n + 1 {
        if (level.m.unsigned_abs()) >= n {
            continue;
        }
        for n1 in 0..(n - level.m.unsigned_abs()) {
            let target = RydbergLevel::new(n, n1, level.m)?;
            if target == *level {
                continue;
            }
            let nu = units::au_to_hz((stark::bare_energy_au(n) - e0).abs());
            if nu == 0.0 {
                continue;
            }
            let d = stark::dipole_matrix_element(level, &target, Polarization::Pi)?;
            if d == 0.0 {
                continue;
            }
            let c = CavitySpec { lambda: units::LIGHT_SPEED / nu, ..*cavity };
            let enh = decay_ratio(&c, Orientation::Perpendicular)?;
            let gamma_pi = units::einstein_a(units::TWO_PI * nu, d) * enh;
            transitions.push(BlackbodyTransition {
                target,
                frequency_hz: nu,
                dipole_au: d,
                gamma_pi,
                occupation: units::bose_occupation(nu, temperature),
            });
        }
    }
    let rate = transitions.iter().map(|t| t.occupation * t.gamma_pi).sum();
    let rate_per_photon = transitions.iter().map(|t| t.gamma_pi).sum();
    Ok(BlackbodyRates { rate, rate_per_photon, transitions })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chip(z: f64, skin: f64) -> CavitySpec {
        CavitySpec { l: 1e-3, z_atom: z, lambda: 6e-3, skin_depth: skin }
    }

    #[test]
    fn lossy_cavity_numbers() {
        let c = chip(120e-6, 30e-9);
        let par = decay_ratio(&c, Orientation::Parallel).unwrap();
        assert!((1.0 / par - 340.0).abs() < 0.15 * 340.0, "{}", 1.0 / par);
        let perp = decay_ratio(&c, Orientation::Perpendicular).unwrap();
        assert!((perp - 4.5).abs() < 0.2);
    }

    #[test]
    fn strong_losses_restore_free_space() {
        let c = chip(0.5e-3, 30e-9);
        for orient in [Orientation::Parallel, Orientation::Perpendicular] {
            let (s, _) = image_sum(&c, orient, Complex64::new(1e-12, 0.0), usize::MAX);
            assert!(s.norm() < 1e-10);
        }
    }

    #[test]
    fn invalid_cavity() {
        assert!(chip(0.0, 30e-9).validate().is_err());
        assert!(chip(2e-3, 30e-9).validate().is_err());
        assert!(chip(0.5e-3, 1e-3).validate().is_err());
    }

    #[test]
    fn tilt_correction() {
        assert_eq!(corrected_inhibition(0.003, 4.5, 0.0), 0.003);
        assert!((corrected_inhibition(0.003, 4.5, 1e-4) - 0.00345).abs() < 1e-15);
    }
}
