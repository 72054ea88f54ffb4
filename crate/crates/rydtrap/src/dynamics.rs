//! Classical motion of a polarizable atom in the driven trap: Mathieu
//! stability, adaptive integration and ensemble statistics.

use std::io::Write;
use std::sync::Arc;

use rand_distr::{Distribution, Normal};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::Serialize;
use thiserror::Error;

use crate::dressing::DressedSurface;
use crate::field::{DriveSettings, FieldError, FieldJet, HarmonicPotential};
use crate::par::{self, WorkerPool};
use crate::stark::StarkPolynomial;
use crate::units;

/// Stability bound on |q| used for the Mathieu classification.
pub const Q_STABLE: f64 = 0.907;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("step size underflow at t = {t:e} s (h = {h:e} s)")]
    Stiffness { t: f64, h: f64 },
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("depth bracket [{lo:e}, {hi:e}] K does not straddle 50% (efficiencies {eff_lo}, {eff_hi})")]
    Bracket { lo: f64, hi: f64, eff_lo: f64, eff_hi: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Internal energy of the atom as a function of the local field modulus and
/// of the local dressing amplitude relative to its value at the trap centre.
pub trait EnergySurface: Send + Sync + std::fmt::Debug {
    /// (U [J], dU/dE [J/(V/m)], dU/dw [J]) at field `e` and relative Rabi factor `w`.
    fn eval(&self, e: f64, w: f64) -> (f64, f64, f64);

    fn uses_rabi(&self) -> bool {
        false
    }
}

/// U = h alpha E^2.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticStark {
    pub alpha_hz: f64,
}

impl EnergySurface for QuadraticStark {
    fn eval(&self, e: f64, _w: f64) -> (f64, f64, f64) {
        let a = units::hz_to_joule(self.alpha_hz);
        (a * e * e, 2.0 * a * e, 0.0)
    }
}

/// U = h P(E) from a fitted Stark polynomial (evaluated without range check).
#[derive(Debug, Clone)]
pub struct PolynomialStark(pub StarkPolynomial);

impl EnergySurface for PolynomialStark {
    fn eval(&self, e: f64, _w: f64) -> (f64, f64, f64) {
        (units::hz_to_joule(self.0.value(e)), units::hz_to_joule(self.0.slope(e)), 0.0)
    }
}

/// Dressed potential, measured from its value at the operating point.
#[derive(Debug, Clone)]
pub struct DressedStark(pub DressedSurface);

impl EnergySurface for DressedStark {
    fn eval(&self, e: f64, w: f64) -> (f64, f64, f64) {
        let (de, dw) = self.0.gradient(e, w);
        (
            units::hz_to_joule(self.0.deviation_hz(e, w)),
            units::hz_to_joule(de),
            units::hz_to_joule(dw),
        )
    }

    fn uses_rabi(&self) -> bool {
        true
    }
}

/// Dressing amplitude profile: maximal at the origin, sinusoidal in y with
/// nodes at +-`node`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeProfile {
    pub node: f64,
}

impl Default for ModeProfile {
    fn default() -> Self {
        Self { node: 1e-2 }
    }
}

impl ModeProfile {
    pub fn value(&self, r: [f64; 3]) -> f64 {
        (std::f64::consts::FRAC_PI_2 * r[1] / self.node).cos()
    }

    pub fn gradient(&self, r: [f64; 3]) -> [f64; 3] {
        let k = std::f64::consts::FRAC_PI_2 / self.node;
        [0.0, -k * (k * r[1]).sin(), 0.0]
    }
}

#[derive(Debug, Clone)]
pub struct AtomSpec {
    pub mass: f64,
    /// downward acceleration [m/s^2]
    pub gravity: f64,
    pub surface: Arc<dyn EnergySurface>,
    pub profile: ModeProfile,
}

impl AtomSpec {
    /// Rb-87 with a quadratic Stark energy.
    pub fn bare(alpha_hz: f64) -> Self {
        Self {
            mass: units::MASS_RB87,
            gravity: units::GRAVITY,
            surface: Arc::new(QuadraticStark { alpha_hz }),
            profile: ModeProfile::default(),
        }
    }

    pub fn with_surface(surface: Arc<dyn EnergySurface>) -> Self {
        Self { surface, ..Self::bare(0.0) }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass > 0.0) {
            return Err(DynamicsError::Input("mass must be positive".into()));
        }
        Ok(())
    }

    /// Relative dressing amplitude f(r) cos(theta) and its gradient.
    fn rabi_factor(&self, r: [f64; 3], jet: &FieldJet) -> (f64, [f64; 3]) {
        let f = self.profile.value(r);
        let gf = self.profile.gradient(r);
        let c = jet.sample.theta.cos();
        let gc = jet.grad_cos_theta();
        (f * c, [gf[0] * c + f * gc[0], gf[1] * c + f * gc[1], gf[2] * c + f * gc[2]])
    }

    /// Acceleration and the field jet at (r, t).
    pub fn acceleration(&self, hp: &HarmonicPotential, drive: &DriveSettings, r: [f64; 3], t: f64) -> ([f64; 3], FieldJet) {
        let jet = hp.jet_with(drive.voltages(t), r);
        let e = jet.sample.modulus;
        let (w, gw) = if self.surface.uses_rabi() { self.rabi_factor(r, &jet) } else { (1.0, [0.0; 3]) };
        let (_, du_de, du_dw) = self.surface.eval(e, w);
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = -(du_de * jet.grad_modulus[i] + du_dw * gw[i]) / self.mass;
        }
        a[2] -= self.gravity;
        (a, jet)
    }

    /// Internal + kinetic + gravitational energy [J].
    pub fn total_energy(&self, hp: &HarmonicPotential, drive: &DriveSettings, s: &State, t: f64) -> f64 {
        let jet = hp.jet_with(drive.voltages(t), s.r);
        let w = if self.surface.uses_rabi() { self.rabi_factor(s.r, &jet).0 } else { 1.0 };
        let (u, _, _) = self.surface.eval(jet.sample.modulus, w);
        let v2: f64 = s.v.iter().map(|v| v * v).sum();
        u + 0.5 * self.mass * v2 + self.mass * self.gravity * s.r[2]
    }
}

// ---- Mathieu analysis ----

/// Mathieu q parameters (q_x, q_y, q_z) of the a.c. quadrupole energy term.
pub fn mathieu_q(hp: &HarmonicPotential, drive: &DriveSettings, alpha_hz: f64, mass: f64) -> [f64; 3] {
    let quad = hp.quad_lin_coefficients(drive, alpha_hz).quad_per_volt;
    let qx = 4.0 * quad * drive.u30 / (mass * drive.omega * drive.omega);
    [qx, qx, -2.0 * qx]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
}

pub fn stability_classify(q: [f64; 3]) -> Stability {
    if q.iter().all(|v| v.abs() <= Q_STABLE) {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Drive angular frequency at which |q_z| reaches the stability bound.
pub fn threshold_omega(hp: &HarmonicPotential, drive: &DriveSettings, alpha_hz: f64, mass: f64) -> f64 {
    let unit = DriveSettings { omega: 1.0, ..*drive };
    let qz1 = mathieu_q(hp, &unit, alpha_hz, mass)[2].abs();
    (qz1 / Q_STABLE).sqrt()
}

/// Integrate x'' + (a - 2 q cos 2 tau) x = 0 over `periods` periods of the
/// drive and report whether the solution stays bounded.
pub fn mathieu_bounded(a: f64, q: f64, periods: usize) -> bool {
    let steps_per = 400;
    let h = std::f64::consts::PI / steps_per as f64;
    let f = |tau: f64, x: f64| -(a - 2.0 * q * (2.0 * tau).cos()) * x;
    let mut worst: f64 = 0.0;
    // two independent solutions
    for (mut x, mut v) in [(1.0, 0.0), (0.0, 1.0)] {
        let mut tau = 0.0;
        for _ in 0..periods * steps_per {
            let k1x = v;
            let k1v = f(tau, x);
            let k2x = v + 0.5 * h * k1v;
            let k2v = f(tau + 0.5 * h, x + 0.5 * h * k1x);
            let k3x = v + 0.5 * h * k2v;
            let k3v = f(tau + 0.5 * h, x + 0.5 * h * k2x);
            let k4x = v + h * k3v;
            let k4v = f(tau + h, x + h * k3x);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            tau += h;
            worst = worst.max(x.abs());
            if worst > 1e6 {
                return false;
            }
        }
    }
    worst < 1e3
}

// ---- initial conditions ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct State {
    pub r: [f64; 3],
    pub v: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialEnsemble {
    pub count: usize,
    /// temperature [K]
    pub t0: f64,
    pub sigma_v_ref: f64,
    pub sigma_r_ref: f64,
    pub t_ref: f64,
    /// added to every velocity [m/s]
    pub recoil: [f64; 3],
    pub seed: u64,
}

impl InitialEnsemble {
    pub fn new(count: usize, t0: f64, seed: u64) -> Self {
        Self {
            count,
            t0,
            sigma_v_ref: 5.35e-3,
            sigma_r_ref: 0.27e-6,
            t_ref: 300e-9,
            recoil: [0.0, 6e-3, 0.0],
            seed,
        }
    }

    pub fn sigmas(&self) -> (f64, f64) {
        let s = (self.t0.max(0.0) / self.t_ref).sqrt();
        (self.sigma_r_ref * s, self.sigma_v_ref * s)
    }

    /// Initial condition of trajectory `index`, from its own random stream.
    pub fn state(&self, index: usize) -> State {
        let (sr, sv) = self.sigmas();
        let mut rng = par::stream(self.seed, index as u64);
        let mut r = [0.0; 3];
        let mut v = self.recoil;
        if sr > 0.0 && sv > 0.0 {
            let nr = Normal::new(0.0, sr).expect("positive width");
            let nv = Normal::new(0.0, sv).expect("positive width");
            for i in 0..3 {
                r[i] = nr.sample(&mut rng);
            }
            for i in 0..3 {
                v[i] += nv.sample(&mut rng);
            }
        }
        State { r, v }
    }
}

pub fn sample_initial(ens: &InitialEnsemble) -> Vec<State> {
    (0..ens.count).map(|i| ens.state(i)).collect()
}

// ---- integration ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol_pos: f64,
    pub atol_vel: f64,
    /// recording interval [s]; None records only the end point
    pub stride: Option<f64>,
    pub h_min: f64,
}

impl IntegratorOptions {
    /// 20 samples per drive period.
    pub fn for_drive(drive: &DriveSettings) -> Self {
        Self { stride: Some(units::TWO_PI / drive.omega / 20.0), ..Self::default() }
    }

    /// Looser tolerance for ensemble statistics, same recording stride.
    pub fn ensemble(drive: &DriveSettings) -> Self {
        Self { rtol: 1e-8, ..Self::for_drive(drive) }
    }
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol_pos: 1e-13, atol_vel: 1e-10, stride: None, h_min: 1e-14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub r: [f64; 3],
    pub v: [f64; 3],
    pub e: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub trapped: bool,
    pub exit_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub trapped: bool,
    pub exit_time: Option<f64>,
    pub final_state: State,
    pub t_final: f64,
}

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B_ERR: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

type Y = [f64; 6];

fn sample_at(hp: &HarmonicPotential, drive: &DriveSettings, t: f64, y: &Y) -> Sample {
    let r = [y[0], y[1], y[2]];
    let f = hp.evec_with(drive.voltages(t), r);
    let rho = (f[0] * f[0] + f[1] * f[1]).sqrt();
    Sample {
        t,
        r,
        v: [y[3], y[4], y[5]],
        e: (rho * rho + f[2] * f[2]).sqrt(),
        theta: rho.atan2(f[2].abs()),
    }
}

/// Integrate from `s0` at t = 0 to `t_end`, calling `observe` at t = 0, at
/// every multiple of the stride and at the final time.
pub fn integrate_observed<F: FnMut(&Sample)>(
    atom: &AtomSpec,
    hp: &HarmonicPotential,
    drive: &DriveSettings,
    s0: State,
    t_end: f64,
    opts: &IntegratorOptions,
    mut observe: F,
) -> Result<Outcome, DynamicsError> {
    atom.validate()?;
    drive.validate().map_err(DynamicsError::Input)?;
    hp.check_bounds(s0.r)?;
    if !(t_end > 0.0) {
        return Err(DynamicsError::Input("t_end must be positive".into()));
    }
    let deriv = |t: f64, y: &Y| -> Y {
        let (a, _) = atom.acceleration(hp, drive, [y[0], y[1], y[2]], t);
        [y[3], y[4], y[5], a[0], a[1], a[2]]
    };
    let r2max = hp.validity_radius * hp.validity_radius;
    let mut y: Y = [s0.r[0], s0.r[1], s0.r[2], s0.v[0], s0.v[1], s0.v[2]];
    let mut t = 0.0;
    observe(&sample_at(hp, drive, t, &y));
    let period = units::TWO_PI / drive.omega;
    let mut h = period / 200.0;
    let stride = opts.stride.unwrap_or(t_end);
    let mut next_rec = 1usize;
    let mut k = [[0.0; 6]; 7];
    k[0] = deriv(t, &y);
    loop {
        let t_rec = (next_rec as f64 * stride).min(t_end);
        let mut hs = h.min(t_rec - t);
        let clamped = hs < h;
        let (y_new, err) = loop {
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        for i in 0..6 {
                            ys[i] += hs * a * kj[i];
                        }
                    }
                }
                k[s] = deriv(t + C[s] * hs, &ys);
            }
            let mut yn = y;
            for (j, kj) in k.iter().enumerate().take(6) {
                let b = A[6][j];
                for i in 0..6 {
                    yn[i] += hs * b * kj[i];
                }
            }
            let mut err: f64 = 0.0;
            for i in 0..6 {
                let mut e = 0.0;
                for j in 0..7 {
                    e += B_ERR[j] * k[j][i];
                }
                let atol = if i < 3 { opts.atol_pos } else { opts.atol_vel };
                let sc = atol + opts.rtol * y[i].abs().max(yn[i].abs());
                err = err.max((hs * e / sc).abs());
            }
            if err <= 1.0 {
                break (yn, err);
            }
            hs *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if hs < opts.h_min {
                return Err(DynamicsError::Stiffness { t, h: hs });
            }
        };
        t += hs;
        y = y_new;
        // FSAL: stage 7 was evaluated at the new point
        k[0] = k[6];
        let grow = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        if !clamped {
            h = hs * grow;
        } else {
            h = h.max(hs * grow);
        }
        let r2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
        if r2 > r2max {
            observe(&sample_at(hp, drive, t, &y));
            return Ok(Outcome {
                trapped: false,
                exit_time: Some(t),
                final_state: State { r: [y[0], y[1], y[2]], v: [y[3], y[4], y[5]] },
                t_final: t,
            });
        }
        if t >= t_rec - 1e-12 * stride {
            t = t_rec;
            observe(&sample_at(hp, drive, t, &y));
            next_rec += 1;
            if t >= t_end {
                break;
            }
        }
    }
    Ok(Outcome {
        trapped: true,
        exit_time: None,
        final_state: State { r: [y[0], y[1], y[2]], v: [y[3], y[4], y[5]] },
        t_final: t,
    })
}

/// Integrate and keep every recorded sample.
pub fn integrate(
    atom: &AtomSpec,
    hp: &HarmonicPotential,
    drive: &DriveSettings,
    s0: State,
    t_end: f64,
    opts: &IntegratorOptions,
) -> Result<Trajectory, DynamicsError> {
    let mut samples = Vec::new();
    let out = integrate_observed(atom, hp, drive, s0, t_end, opts, |s| samples.push(*s))?;
    Ok(Trajectory { samples, trapped: out.trapped, exit_time: out.exit_time })
}

pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["t", "x", "y", "z", "vx", "vy", "vz", "E", "theta"])?;
    for s in &traj.samples {
        wtr.write_record(
            [s.t, s.r[0], s.r[1], s.r[2], s.v[0], s.v[1], s.v[2], s.e, s.theta].iter().map(|v| format!("{v:e}")),
        )?;
    }
    wtr.flush()?;
    Ok(())
}

// ---- ensemble statistics ----

#[derive(Debug, Clone, Serialize)]
pub struct EfficiencyReport {
    pub fraction: f64,
    pub trapped: usize,
    pub total: usize,
    /// per-trajectory time averages of theta and theta^2 for the trapped ones
    pub tilt: TiltStats,
}

/// Fraction of the ensemble still inside the validity sphere after `t_hold`.
pub fn trapping_efficiency(
    atom: &AtomSpec,
    hp: &HarmonicPotential,
    drive: &DriveSettings,
    ens: &InitialEnsemble,
    t_hold: f64,
    opts: &IntegratorOptions,
    pool: &WorkerPool,
) -> Result<EfficiencyReport, DynamicsError> {
    if ens.count == 0 {
        return Err(DynamicsError::Input("empty ensemble".into()));
    }
    let results = pool.map(ens.count, |i| {
        let mut acc = TiltAccumulator::default();
        let s0 = ens.state(i);
        // hot tails can start outside the fitted region: count them as lost
        if hp.check_bounds(s0.r).is_err() {
            return Ok((false, acc));
        }
        let out = integrate_observed(atom, hp, drive, s0, t_hold, opts, |s| acc.push(s));
        out.map(|o| (o.trapped, acc))
    });
    let mut trapped = 0;
    let mut tilts = Vec::new();
    for r in results {
        let (ok, acc) = r?;
        if ok {
            trapped += 1;
            tilts.push(acc);
        }
    }
    Ok(EfficiencyReport {
        fraction: trapped as f64 / ens.count as f64,
        trapped,
        total: ens.count,
        tilt: TiltStats::from_accumulators(&tilts),
    })
}

/// Running time averages of theta and theta^2 (trapezoidal in t).
#[derive(Debug, Clone, Copy, Default)]
pub struct TiltAccumulator {
    last: Option<(f64, f64)>,
    int_theta: f64,
    int_theta_sq: f64,
    duration: f64,
}

impl TiltAccumulator {
    pub fn push(&mut self, s: &Sample) {
        if let Some((t0, th0)) = self.last {
            let dt = s.t - t0;
            self.int_theta += 0.5 * (th0 + s.theta) * dt;
            self.int_theta_sq += 0.5 * (th0 * th0 + s.theta * s.theta) * dt;
            self.duration += dt;
        }
        self.last = Some((s.t, s.theta));
    }

    pub fn means(&self) -> Option<(f64, f64)> {
        (self.duration > 0.0).then(|| (self.int_theta / self.duration, self.int_theta_sq / self.duration))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TiltStats {
    pub mean_theta: f64,
    pub mean_theta_sq: f64,
    pub count: usize,
}

impl TiltStats {
    fn from_accumulators(accs: &[TiltAccumulator]) -> Self {
        let means: Vec<_> = accs.iter().filter_map(|a| a.means()).collect();
        if means.is_empty() {
            return Self::default();
        }
        let n = means.len() as f64;
        Self {
            mean_theta: means.iter().map(|m| m.0).sum::<f64>() / n,
            mean_theta_sq: means.iter().map(|m| m.1).sum::<f64>() / n,
            count: means.len(),
        }
    }
}

/// Ensemble mean of per-trajectory time averages of theta and theta^2.
pub fn tilt_statistics(trajs: &[Trajectory]) -> TiltStats {
    let accs: Vec<_> = trajs
        .iter()
        .map(|t| {
            let mut a = TiltAccumulator::default();
            t.samples.iter().for_each(|s| a.push(s));
            a
        })
        .collect();
    TiltStats::from_accumulators(&accs)
}

/// Dominant spectral peak of a uniformly sampled series between `f_lo` and `f_hi` [Hz].
pub fn spectral_peak(series: &[f64], dt: f64, f_lo: f64, f_hi: f64) -> Option<f64> {
    let n = series.len();
    if n < 16 {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let nfft = (4 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = (0..nfft)
        .map(|i| {
            if i < n {
                let w = 0.5 - 0.5 * (units::TWO_PI * i as f64 / (n - 1) as f64).cos();
                Complex::new((series[i] - mean) * w, 0.0)
            } else {
                Complex::new(0.0, 0.0)
            }
        })
        .collect();
    FftPlanner::new().plan_fft_forward(nfft).process(&mut buf);
    let df = 1.0 / (nfft as f64 * dt);
    let lo = ((f_lo / df).ceil() as usize).max(1);
    let hi = ((f_hi / df).floor() as usize).min(nfft / 2 - 1);
    if lo + 2 > hi {
        return None;
    }
    let p: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let k = (lo..=hi).max_by(|&a, &b| p[a].total_cmp(&p[b]))?;
    if k == lo || k == hi {
        return None;
    }
    // quadratic interpolation on log power
    let (a, b, c) = (p[k - 1].ln(), p[k].ln(), p[k + 1].ln());
    let denom = a - 2.0 * b + c;
    let off = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((k as f64 + off) * df)
}

/// (transverse, longitudinal) macromotion frequencies [Hz] of a recorded
/// trajectory, searched below half the drive frequency.
pub fn macromotion_frequencies(traj: &Trajectory, drive: &DriveSettings) -> Result<(f64, f64), DynamicsError> {
    let s = &traj.samples;
    if s.len() < 32 {
        return Err(DynamicsError::Analysis("trajectory too short".into()));
    }
    let dt = s[1].t - s[0].t;
    let duration = s[s.len() - 1].t - s[0].t;
    let f_hi = 0.5 * drive.omega / units::TWO_PI;
    let f_lo = 4.0 / duration;
    let x: Vec<f64> = s.iter().map(|p| p.r[0]).collect();
    let y: Vec<f64> = s.iter().map(|p| p.r[1]).collect();
    let z: Vec<f64> = s.iter().map(|p| p.r[2]).collect();
    let spread = |v: &[f64]| v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - v.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let radial = if spread(&x) >= spread(&y) { &x } else { &y };
    let fr = spectral_peak(radial, dt, f_lo, f_hi).ok_or_else(|| DynamicsError::Analysis("no transverse peak below half the drive frequency".into()))?;
    let fz = spectral_peak(&z, dt, f_lo, f_hi).ok_or_else(|| DynamicsError::Analysis("no longitudinal peak below half the drive frequency".into()))?;
    Ok((fr, fz))
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthReport {
    /// temperature at which half the atoms stay trapped [K]
    pub t_d: f64,
    /// (T0, efficiency) for every ensemble run
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection (geometric) on the initial temperature for 50% trapping after
/// `t_hold`, to 10% resolution.
#[allow(clippy::too_many_arguments)]
pub fn trap_depth(
    atom: &AtomSpec,
    hp: &HarmonicPotential,
    drive: &DriveSettings,
    base: &InitialEnsemble,
    bracket: (f64, f64),
    t_hold: f64,
    opts: &IntegratorOptions,
    pool: &WorkerPool,
) -> Result<DepthReport, DynamicsError> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(DynamicsError::Input("bracket must satisfy 0 < lo < hi".into()));
    }
    let mut evaluations = Vec::new();
    let mut eff = |t0: f64| -> Result<f64, DynamicsError> {
        let e = trapping_efficiency(atom, hp, drive, &InitialEnsemble { t0, ..*base }, t_hold, opts, pool)?.fraction;
        evaluations.push((t0, e));
        Ok(e)
    };
    let e_lo = eff(lo)?;
    let e_hi = eff(hi)?;
    if !(e_lo >= 0.5 && e_hi < 0.5) {
        return Err(DynamicsError::Bracket { lo, hi, eff_lo: e_lo, eff_hi: e_hi });
    }
    while hi / lo > 1.1 {
        let mid = (lo * hi).sqrt();
        if eff(mid)? >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(DepthReport { t_d: (lo * hi).sqrt(), evaluations })
}

/// Largest rate of change of the field direction along the recorded samples [rad/s].
pub fn max_rotation_rate(traj: &Trajectory) -> f64 {
    traj.samples
        .windows(2)
        .map(|w| (w[1].theta - w[0].theta).abs() / (w[1].t - w[0].t))
        .fold(0.0, f64::max)
}

/// Thermal de Broglie wavelength h / sqrt(2 pi m kB T) [m].
pub fn de_broglie_wavelength(mass: f64, t0: f64) -> f64 {
    units::PLANCK / (units::TWO_PI * mass * units::BOLTZMANN * t0).sqrt()
}

/// Largest distance from the origin reached along a trajectory [m].
pub fn max_extension(traj: &Trajectory) -> f64 {
    traj.samples
        .iter()
        .map(|s| s.r.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_examples() {
        assert_eq!(stability_classify([0.4, 0.4, -0.8]), Stability::Stable);
        assert_eq!(stability_classify([0.5, 0.5, -1.0]), Stability::Unstable);
    }

    #[test]
    fn brute_force_mathieu_boundary() {
        assert!(mathieu_bounded(0.0, 0.5, 200));
        assert!(!mathieu_bounded(0.0, 1.0, 200));
    }

    #[test]
    fn zero_temperature_ensemble() {
        let mut ens = InitialEnsemble::new(10, 0.0, 3);
        ens.recoil = [0.0; 3];
        assert!(sample_initial(&ens).iter().all(|s| s.r == [0.0; 3] && s.v == [0.0; 3]));
    }

    #[test]
    fn spectral_peak_of_sine() {
        let dt = 1e-4;
        let s: Vec<f64> = (0..20000).map(|i| (units::TWO_PI * 64.0 * i as f64 * dt).sin()).collect();
        let f = spectral_peak(&s, dt, 5.0, 1000.0).unwrap();
        assert!((f - 64.0).abs() < 0.05, "{f}");
    }

    #[test]
    fn mode_profile_nodes() {
        let p = ModeProfile::default();
        assert_eq!(p.value([0.0; 3]), 1.0);
        assert!(p.value([0.0, 1e-2, 0.0]).abs() < 1e-15);
        assert!(p.value([0.0, -1e-2, 0.0]).abs() < 1e-15);
    }
}
