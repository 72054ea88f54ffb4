//! Ramsey interferometry on the dressed transition, with an optional
//! imperfect echo pulse, from state-dependent trajectories.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use thiserror::Error;

use crate::dressing::DressedSurface;
use crate::dynamics::{
    self, AtomSpec, DressedStark, DynamicsError, InitialEnsemble, IntegratorOptions, ModeProfile, Sample, State, Trajectory,
};
use crate::field::{DriveSettings, HarmonicPotential};
use crate::par::{self, WorkerPool};
use crate::units;

/// Stream offset separating echo-angle draws from initial-condition draws.
const ECHO_STREAM: u64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherenceError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("trajectory is not usable for a phase: {0}")]
    Invalid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Dressed energy surfaces of the two clock states.
#[derive(Debug, Clone)]
pub struct ClockSurfaces {
    pub g: DressedSurface,
    pub e: DressedSurface,
    pub profile: ModeProfile,
}

impl ClockSurfaces {
    pub fn atom(&self, excited: bool) -> AtomSpec {
        let s = if excited { &self.e } else { &self.g };
        AtomSpec { profile: self.profile, ..AtomSpec::with_surface(Arc::new(DressedStark(s.clone()))) }
    }

    /// Relative Rabi factor f(r) cos(theta) seen at a sample.
    pub fn rabi_factor(&self, s: &Sample) -> f64 {
        self.profile.value(s.r) * s.theta.cos()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RamseyConfig {
    /// evaluation times, ascending [s]
    pub times: Vec<f64>,
    /// echo pulse time [s]
    pub t_pi: Option<f64>,
    pub theta_err_sigma: f64,
    pub ensemble: InitialEnsemble,
    pub integrator: IntegratorOptions,
    /// |phi| [rad] below which a trajectory counts as "slow" in the histogram
    pub slow_threshold: f64,
    /// time at which the phase histogram is taken [s]
    pub histogram_time: Option<f64>,
    pub histogram_bins: usize,
    pub paths: PathMode,
}

/// How the two clock states move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum PathMode {
    /// each state follows the trajectory of its own dressed surface
    #[default]
    StateDependent,
    /// both energies are evaluated along the ground-state trajectory
    Shared,
}

impl RamseyConfig {
    pub fn new(times: Vec<f64>, ensemble: InitialEnsemble, drive: &DriveSettings) -> Self {
        Self {
            times,
            t_pi: None,
            theta_err_sigma: 0.1,
            ensemble,
            integrator: IntegratorOptions::for_drive(drive),
            slow_threshold: std::f64::consts::PI,
            histogram_time: None,
            histogram_bins: 40,
            paths: PathMode::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CoherenceError> {
        if self.times.is_empty() || self.times.iter().any(|t| !(*t >= 0.0)) || self.times.windows(2).any(|w| w[1] < w[0]) {
            return Err(CoherenceError::Config("times must be non-negative and ascending".into()));
        }
        if self.integrator.stride.is_none() {
            return Err(CoherenceError::Config("phase quadrature needs a recording stride".into()));
        }
        if let Some(tp) = self.t_pi {
            let t_end = self.t_end();
            if !(tp > 0.0 && tp < t_end) {
                return Err(CoherenceError::Config(format!("echo time {tp} outside (0, {t_end})")));
            }
        }
        if !(self.theta_err_sigma >= 0.0) {
            return Err(CoherenceError::Config("pulse error width must be non-negative".into()));
        }
        Ok(())
    }

    fn t_end(&self) -> f64 {
        let last = self.times.last().copied().unwrap_or(0.0);
        last.max(self.histogram_time.unwrap_or(0.0))
    }
}

/// Cumulative phase integral 2 pi int dev(t) dt along one trajectory,
/// evaluated on the recorded samples.
#[derive(Debug, Clone, Default)]
struct PhaseTrack {
    t: Vec<f64>,
    phase: Vec<f64>,
    last: Option<(f64, f64)>,
    out_of_window: usize,
}

impl PhaseTrack {
    fn push(&mut self, s: &Sample, surf: &DressedSurface, w: f64) {
        if !surf.contains(s.e, w) {
            self.out_of_window += 1;
        }
        let dev = surf.deviation_hz(s.e, w);
        let acc = match self.last {
            Some((t0, d0)) => self.phase.last().copied().unwrap_or(0.0) + units::TWO_PI * 0.5 * (d0 + dev) * (s.t - t0),
            None => 0.0,
        };
        self.t.push(s.t);
        self.phase.push(acc);
        self.last = Some((s.t, dev));
    }

    fn at(&self, t: f64) -> f64 {
        interpolate(&self.t, &self.phase, t)
    }
}

fn interpolate(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let k = ts.partition_point(|&x| x < t);
    if k == 0 {
        return ys[0];
    }
    if k >= ts.len() {
        return ys[ys.len() - 1];
    }
    let (t0, t1) = (ts[k - 1], ts[k]);
    let a = (t - t0) / (t1 - t0);
    ys[k - 1] + a * (ys[k] - ys[k - 1])
}

/// Ramsey phase at the end of two recorded trajectories: each state's energy
/// deviation integrated along its own path.
pub fn ramsey_phase(traj_g: &Trajectory, traj_e: &Trajectory, surfaces: &ClockSurfaces) -> Result<f64, CoherenceError> {
    for (name, tr) in [("g", traj_g), ("e", traj_e)] {
        if !tr.trapped {
            return Err(CoherenceError::Invalid(format!("{name} trajectory left the validity sphere")));
        }
        if tr.samples.len() < 2 {
            return Err(CoherenceError::Invalid(format!("{name} trajectory has fewer than two samples")));
        }
    }
    if traj_g.samples.len() != traj_e.samples.len() || traj_g.samples.iter().zip(&traj_e.samples).any(|(a, b)| a.t != b.t) {
        return Err(CoherenceError::Invalid("trajectories do not share a time grid".into()));
    }
    let mut pg = PhaseTrack::default();
    let mut pe = PhaseTrack::default();
    for s in &traj_g.samples {
        pg.push(s, &surfaces.g, surfaces.rabi_factor(s));
    }
    for s in &traj_e.samples {
        pe.push(s, &surfaces.e, surfaces.rabi_factor(s));
    }
    Ok(pe.phase.last().unwrap() - pg.phase.last().unwrap())
}

/// Coherence after an echo pulse with rotation error `vartheta`, given the
/// phase accumulated before (`phi1`) and after (`phi2`) the pulse.
pub fn echo_coherence(phi1: f64, phi2: f64, vartheta: f64) -> Complex64 {
    let c2 = (0.5 * vartheta).cos().powi(2);
    let s2 = (0.5 * vartheta).sin().powi(2);
    -c2 * Complex64::from_polar(1.0, phi2 - phi1) + s2 * Complex64::from_polar(1.0, phi1 + phi2)
}

/// Contrast sqrt(mean(cos)^2 + mean(sin)^2) of a set of phases.
pub fn contrast(phases: &[f64]) -> f64 {
    if phases.is_empty() {
        return 0.0;
    }
    let n = phases.len() as f64;
    let (c, s) = phases.iter().fold((0.0, 0.0), |(c, s), p| (c + p.cos(), s + p.sin()));
    ((c / n).powi(2) + (s / n).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseClass {
    Slow,
    Fast,
}

impl PhaseClass {
    pub fn name(&self) -> &'static str {
        match self {
            PhaseClass::Slow => "slow",
            PhaseClass::Fast => "fast",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
    pub class: PhaseClass,
}

/// Histogram of phases, each bin split into slow/fast classes by |phi|.
pub fn phase_histogram(phases: &[f64], bins: usize, slow_threshold: f64) -> Vec<HistogramBin> {
    if phases.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![[0usize; 2]; bins];
    for &p in phases {
        let k = (((p - lo) / width) as usize).min(bins - 1);
        let c = usize::from(p.abs() >= slow_threshold);
        counts[k][c] += 1;
    }
    let mut out = Vec::new();
    for (k, c) in counts.iter().enumerate() {
        let center = lo + (k as f64 + 0.5) * width;
        for (idx, class) in [PhaseClass::Slow, PhaseClass::Fast].into_iter().enumerate() {
            if c[idx] > 0 {
                out.push(HistogramBin { center, count: c[idx], class });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct RamseyResult {
    pub times: Vec<f64>,
    /// contrast without echo
    pub contrast: Vec<f64>,
    /// contrast with the echo pulse, when one is configured
    pub echo_contrast: Option<Vec<f64>>,
    /// trajectories that stayed trapped in both states
    pub n_traj: usize,
    pub n_lost: usize,
    /// phase of each valid trajectory at the histogram time, in index order
    pub phases: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    /// samples that fell outside the fitted surface window
    pub out_of_window: usize,
}

struct PerTrajectory {
    free: Vec<Complex64>,
    echo: Option<Vec<Complex64>>,
    phase_hist: f64,
    out_of_window: usize,
}

/// Ensemble Ramsey (and echo) simulation.
pub fn simulate_ramsey(
    surfaces: &ClockSurfaces,
    hp: &HarmonicPotential,
    drive: &DriveSettings,
    cfg: &RamseyConfig,
    pool: &WorkerPool,
) -> Result<RamseyResult, CoherenceError> {
    cfg.validate()?;
    let t_end = cfg.t_end();
    let atom_g = surfaces.atom(false);
    let atom_e = surfaces.atom(true);
    let echo_err = Normal::new(0.0, cfg.theta_err_sigma.max(1e-300)).map_err(|e| CoherenceError::Config(e.to_string()))?;
    let hist_t = cfg.histogram_time.unwrap_or(t_end);
    let results = pool.map(cfg.ensemble.count, |i| -> Result<Option<PerTrajectory>, CoherenceError> {
        let s0 = cfg.ensemble.state(i);
        if hp.check_bounds(s0.r).is_err() {
            return Ok(None);
        }
        let mut pg = PhaseTrack::default();
        let mut pe = PhaseTrack::default();
        let shared = cfg.paths == PathMode::Shared;
        let og = dynamics::integrate_observed(&atom_g, hp, drive, s0, t_end, &cfg.integrator, |s| {
            let w = surfaces.rabi_factor(s);
            pg.push(s, &surfaces.g, w);
            if shared {
                pe.push(s, &surfaces.e, w);
            }
        })?;
        if !og.trapped {
            return Ok(None);
        }
        if !shared {
            let oe = dynamics::integrate_observed(&atom_e, hp, drive, s0, t_end, &cfg.integrator, |s| {
                pe.push(s, &surfaces.e, surfaces.rabi_factor(s))
            })?;
            if !oe.trapped {
                return Ok(None);
            }
        }
        let phi = |t: f64| pe.at(t) - pg.at(t);
        let echo = cfg.t_pi.map(|tp| {
            let vartheta = if cfg.theta_err_sigma > 0.0 {
                echo_err.sample(&mut par::stream(cfg.ensemble.seed, ECHO_STREAM + i as u64))
            } else {
                0.0
            };
            let p1 = phi(tp);
            cfg.times
                .iter()
                .map(|&t| if t > tp { echo_coherence(p1, phi(t) - p1, vartheta) } else { Complex64::from_polar(1.0, phi(t)) })
                .collect()
        });
        Ok(Some(PerTrajectory {
            free: cfg.times.iter().map(|&t| Complex64::from_polar(1.0, phi(t))).collect(),
            echo,
            phase_hist: phi(hist_t),
            out_of_window: pg.out_of_window + pe.out_of_window,
        }))
    });
    let zero = vec![Complex64::new(0.0, 0.0); cfg.times.len()];
    let mut free = zero.clone();
    let mut echo = zero;
    let mut phases = Vec::new();
    let mut n_lost = 0;
    let mut out_of_window = 0;
    for r in results {
        match r? {
            Some(p) => {
                for (s, c) in free.iter_mut().zip(&p.free) {
                    *s += c;
                }
                if let Some(e) = &p.echo {
                    for (s, c) in echo.iter_mut().zip(e) {
                        *s += c;
                    }
                }
                phases.push(p.phase_hist);
                out_of_window += p.out_of_window;
            }
            None => n_lost += 1,
        }
    }
    let n = phases.len();
    let norm = |v: &[Complex64]| -> Vec<f64> { v.iter().map(|s| if n > 0 { s.norm() / n as f64 } else { 0.0 }).collect() };
    let contrast = norm(&free);
    let echo_contrast = cfg.t_pi.map(|_| norm(&echo));
    let histogram = phase_histogram(&phases, cfg.histogram_bins, cfg.slow_threshold);
    Ok(RamseyResult { times: cfg.times.clone(), contrast, echo_contrast, n_traj: n, n_lost, phases, histogram, out_of_window })
}

pub fn write_contrast_csv<W: Write>(w: W, res: &RamseyResult) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["T", "C", "n_traj"])?;
    let c = res.echo_contrast.as_ref().unwrap_or(&res.contrast);
    for (t, c) in res.times.iter().zip(c) {
        wtr.write_record([format!("{t:e}"), format!("{c:.6}"), res.n_traj.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(w: W, bins: &[HistogramBin]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["phase_bin", "count", "class"])?;
    for b in bins {
        wtr.write_record([format!("{:e}", b.center), b.count.to_string(), b.class.name().to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SternGerlach {
    pub max_separation: f64,
    pub mean_separation: f64,
    pub lambda_db: f64,
    pub ok: bool,
}

/// Separation of paired state-dependent trajectories against the thermal
/// de Broglie wavelength at `t0`.
pub fn stern_gerlach_check(traj_g: &Trajectory, traj_e: &Trajectory, t0: f64, mass: f64) -> Result<SternGerlach, CoherenceError> {
    let n = traj_g.samples.len().min(traj_e.samples.len());
    if n == 0 {
        return Err(CoherenceError::Invalid("empty trajectory".into()));
    }
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for (a, b) in traj_g.samples.iter().zip(&traj_e.samples).take(n) {
        let d = ((a.r[0] - b.r[0]).powi(2) + (a.r[1] - b.r[1]).powi(2) + (a.r[2] - b.r[2]).powi(2)).sqrt();
        max = max.max(d);
        sum += d;
    }
    let lambda_db = dynamics::de_broglie_wavelength(mass, t0);
    Ok(SternGerlach { max_separation: max, mean_separation: sum / n as f64, lambda_db, ok: max < 0.1 * lambda_db })
}

/// Paired trajectories of one initial condition under two atom models.
pub fn paired_trajectories(
    atom_g: &AtomSpec,
    atom_e: &AtomSpec,
    hp: &HarmonicPotential,
    drive: &DriveSettings,
    s0: State,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<(Trajectory, Trajectory), CoherenceError> {
    Ok((
        dynamics::integrate(atom_g, hp, drive, s0, t_end, opts)?,
        dynamics::integrate(atom_e, hp, drive, s0, t_end, opts)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_phases_full_contrast() {
        assert!((contrast(&[0.0; 50]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_echo_conjugates() {
        let z = echo_coherence(0.7, 0.7, 0.0);
        assert!((z + Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn histogram_counts_everything() {
        let p: Vec<f64> = (0..100).map(|i| i as f64 * 0.1 - 5.0).collect();
        let h = phase_histogram(&p, 10, 1.0);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 100);
        assert!(h.iter().any(|b| b.class == PhaseClass::Slow));
    }

    #[test]
    fn interpolation_hits_nodes() {
        let t = [0.0, 1.0, 2.0];
        let y = [0.0, 2.0, 3.0];
        assert_eq!(interpolate(&t, &y, 1.0), 2.0);
        assert_eq!(interpolate(&t, &y, 1.5), 2.5);
        assert_eq!(interpolate(&t, &y, 5.0), 3.0);
    }
}
