//! Microwave dressing of the fixed-m Rydberg ladder. A pi-polarized field
//! couples all levels of equal m; the resulting dressed energies of the two
//! circular levels are tuned so their difference no longer depends on the
//! static field near the working point.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emission::{self, CavitySpec, EmissionError, Orientation};
use crate::numerics::{brent, golden_min, stencil5};
use crate::stark::{
    self, fit_polynomial, FitOptions, Polarization, RydbergLevel, StarkBasis, StarkError, StarkPolynomial,
};
use crate::units;

/// Lower circular level g = (50, 0, 49).
pub const GROUND: RydbergLevel = RydbergLevel { n: 50, n1: 0, m: 49 };
/// Upper circular level e = (51, 0, 50).
pub const EXCITED: RydbergLevel = RydbergLevel { n: 51, n1: 0, m: 50 };
/// Level of the n = 51, m = 49 pair that moves down with the field.
pub const I_LOW: RydbergLevel = RydbergLevel { n: 51, n1: 0, m: 49 };
/// Its partner moving up.
pub const I_HIGH: RydbergLevel = RydbergLevel { n: 51, n1: 1, m: 49 };

/// Spacing of the finite-difference stencil in the field [V/m].
pub const STENCIL_STEP: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DressingError {
    #[error(transparent)]
    Stark(#[from] StarkError),
    #[error(transparent)]
    Emission(#[from] EmissionError),
    #[error("cannot label dressed state {level} (photon offset {photons}) at {field} V/m: max weight {weight:.3}")]
    Labeling { level: RydbergLevel, photons: i64, field: f64, weight: f64 },
    #[error("no root found: {detail}")]
    Solver { detail: String, trace: Vec<(f64, f64)> },
    #[error("degenerate compensation problem: {0}")]
    Degenerate(String),
    #[error("surface fit residual {residual_hz:.3} Hz exceeds {tol_hz} Hz")]
    SurfaceFit { residual_hz: f64, tol_hz: f64 },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Bare level positions: exact polynomials where available, the second-order
/// expansion for everything else.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StarkModel {
    pub polys: Vec<StarkPolynomial>,
}

impl StarkModel {
    pub fn perturbative() -> Self {
        Self { polys: Vec::new() }
    }

    /// Fit order-4 polynomials to diagonalized energies for `levels` on a
    /// 41-point grid spanning `window`.
    pub fn fitted(levels: &[RydbergLevel], window: (f64, f64), manifolds: u32) -> Result<Self, DressingError> {
        let (lo, hi) = window;
        if !(lo >= 0.0 && hi > lo && hi <= stark::MAX_FIELD) {
            return Err(DressingError::Input(format!("bad fit window [{lo}, {hi}]")));
        }
        let grid: Vec<f64> = (0..=40).map(|k| lo + (hi - lo) * k as f64 / 40.0).collect();
        let mut by_m: HashMap<i32, Vec<RydbergLevel>> = HashMap::new();
        for l in levels {
            by_m.entry(l.m).or_default().push(*l);
        }
        let mut ms: Vec<_> = by_m.keys().copied().collect();
        ms.sort();
        let mut polys = Vec::new();
        for m in ms {
            let lowest = by_m[&m].iter().map(|l| l.n).min().unwrap_or(1);
            let basis = StarkBasis::new(m, lowest, manifolds)?;
            let scan = stark::stark_scan(&basis, &grid)?;
            for l in &by_m[&m] {
                let series = scan
                    .series(l)
                    .ok_or_else(|| DressingError::Input(format!("{l} not in the diagonalization basis")))?;
                polys.push(fit_polynomial(*l, &series, FitOptions::default())?);
            }
        }
        Ok(Self { polys })
    }

    /// g, e, i and i' fitted over [200, 600] V/m with five manifolds.
    pub fn reference() -> Result<Self, DressingError> {
        static CACHE: OnceLock<StarkModel> = OnceLock::new();
        if let Some(m) = CACHE.get() {
            return Ok(m.clone());
        }
        let m = Self::fitted(&[GROUND, EXCITED, I_LOW, I_HIGH], (200.0, 600.0), 5)?;
        Ok(CACHE.get_or_init(|| m).clone())
    }

    /// Stark shift [Hz] of `level` at field `e`.
    pub fn shift_hz(&self, level: &RydbergLevel, e: f64) -> Result<f64, DressingError> {
        match self.polys.iter().find(|p| p.level == *level) {
            Some(p) => Ok(p.eval(e)?),
            None => Ok(stark::perturbative_shift_hz(level, e)),
        }
    }

    /// Energy [Hz] measured from the zero-field energy of manifold `origin_n`.
    pub fn energy_hz(&self, level: &RydbergLevel, e: f64, origin_n: u32) -> Result<f64, DressingError> {
        Ok(manifold_offset_hz(level.n, origin_n) + self.shift_hz(level, e)?)
    }
}

fn manifold_offset_hz(n: u32, origin_n: u32) -> f64 {
    units::au_to_hz(stark::bare_energy_au(n) - stark::bare_energy_au(origin_n))
}

/// |<g|z|i'>|, the element that normalizes every coupling.
pub fn reference_dipole() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| {
        stark::dipole_matrix_element(&GROUND, &I_HIGH, Polarization::Pi)
            .expect("valid levels")
            .abs()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingScheme {
    /// couple |a, p+1> and |b, p> for every pair
    Full,
    /// only the absorbing direction (b above a)
    RotatingWave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DressedLadderSpec {
    pub m: i32,
    /// manifolds n = |m|+1 .. |m|+M
    pub manifolds: u32,
    /// photon offsets -N..N around `photon_number`
    pub photons: u32,
    /// dressing frequency / 2 pi [Hz]
    pub omega0_hz: f64,
    /// Rabi frequency / 2 pi on the reference transition [Hz]
    pub rabi_hz: f64,
    pub photon_number: i64,
    pub scheme: CouplingScheme,
    /// energies are reported from the zero-field energy of this manifold
    pub origin_n: u32,
    /// keep only couplings between these unordered pairs
    pub only: Option<Vec<(RydbergLevel, RydbergLevel)>>,
}

impl DressedLadderSpec {
    pub fn new(m: i32, manifolds: u32, photons: u32, omega0_hz: f64, rabi_hz: f64) -> Self {
        Self {
            m,
            manifolds,
            photons,
            omega0_hz,
            rabi_hz,
            photon_number: 0,
            scheme: CouplingScheme::Full,
            origin_n: m.unsigned_abs() + 1,
            only: None,
        }
    }

    pub fn validate(&self) -> Result<(), DressingError> {
        if self.manifolds == 0 {
            return Err(DressingError::Input("need at least one manifold".into()));
        }
        if !(self.omega0_hz.is_finite() && self.rabi_hz.is_finite() && self.rabi_hz >= 0.0) {
            return Err(DressingError::Input("dressing frequency and Rabi frequency must be finite, Rabi >= 0".into()));
        }
        Ok(())
    }
}

struct Block {
    labels: Vec<RydbergLevel>,
    z: DMatrix<f64>,
}

fn block(m: i32, manifolds: u32) -> Result<Arc<Block>, DressingError> {
    static CACHE: OnceLock<Mutex<HashMap<(i32, u32), Arc<Block>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("cache lock").get(&(m, manifolds)) {
        return Ok(b.clone());
    }
    let basis = StarkBasis::new(m, m.unsigned_abs() + 1, manifolds)?;
    let b = Arc::new(Block { z: basis.z_parabolic(), labels: basis.labels });
    cache.lock().expect("cache lock").insert((m, manifolds), b.clone());
    Ok(b)
}

/// Eigen-decomposition of one dressed ladder at one field.
#[derive(Debug, Clone)]
pub struct DressedSpectrum {
    pub field: f64,
    /// eigenvalues [Hz], in solver order
    pub energies: Vec<f64>,
    /// bare label and photon number of each basis vector
    pub basis: Vec<(RydbergLevel, i64)>,
    /// columns are eigenvectors
    pub vectors: DMatrix<f64>,
    pub photon_number: i64,
    pub omega0_hz: f64,
    pub photons: u32,
}

impl DressedSpectrum {
    /// Eigenstate arising from the bare state (level, photon number).
    pub fn find(&self, level: &RydbergLevel, photons: i64) -> Result<usize, DressingError> {
        let t = self
            .basis
            .iter()
            .position(|b| b.0 == *level && b.1 == photons)
            .ok_or_else(|| DressingError::Input(format!("{level} with {photons} photons not in the ladder")))?;
        let row = self.vectors.row(t);
        let (j, w) = row.iter().enumerate().fold((0, 0.0), |acc, (j, v)| if v * v > acc.1 { (j, v * v) } else { acc });
        if w <= 0.5 {
            return Err(DressingError::Labeling { level: *level, photons, field: self.field, weight: w });
        }
        Ok(j)
    }

    /// Potential energy of the dressed state, with n_pi hbar omega0 removed [Hz].
    pub fn potential_energy(&self, level: &RydbergLevel) -> Result<f64, DressingError> {
        let j = self.find(level, self.photon_number)?;
        Ok(self.energies[j] - self.photon_number as f64 * self.omega0_hz)
    }

    /// Greedy one-to-one assignment of eigenstates to bare states by weight.
    /// Entries are None where no bare state carries more than half the weight.
    pub fn labels(&self) -> Vec<Option<(RydbergLevel, i64)>> {
        let n = self.energies.len();
        let mut out = vec![None; n];
        for j in 0..n {
            let col = self.vectors.column(j);
            let (t, w) = col.iter().enumerate().fold((0, 0.0), |acc, (t, v)| if v * v > acc.1 { (t, v * v) } else { acc });
            if w > 0.5 {
                out[j] = Some(self.basis[t]);
            }
        }
        out
    }

    /// Dipole (z, atomic units) between eigenstates j and k within equal photon numbers.
    pub(crate) fn pi_dipole(&self, z: &DMatrix<f64>, j: usize, k: usize) -> f64 {
        let na = z.nrows();
        let blocks = self.energies.len() / na;
        let vj = self.vectors.column(j);
        let vk = self.vectors.column(k);
        let mut s = 0.0;
        for p in 0..blocks {
            let a = vj.rows(p * na, na);
            let b = vk.rows(p * na, na);
            s += a.dot(&(z * b));
        }
        s
    }
}

/// Build the ladder Hamiltonian at field `e` and diagonalize it.
pub fn build_and_diagonalize(spec: &DressedLadderSpec, model: &StarkModel, e: f64) -> Result<DressedSpectrum, DressingError> {
    spec.validate()?;
    let b = block(spec.m, spec.manifolds)?;
    let na = b.labels.len();
    let nblocks = 2 * spec.photons as usize + 1;
    let dim = na * nblocks;
    // keep the diagonal small: energies are measured from the lowest bare level
    // of the central block while building, and shifted back afterwards
    let bare: Vec<f64> = b
        .labels
        .iter()
        .map(|l| model.energy_hz(l, e, spec.origin_n))
        .collect::<Result<_, _>>()?;
    let base = bare.iter().copied().fold(f64::INFINITY, f64::min) + spec.photon_number as f64 * spec.omega0_hz;
    let mref = reference_dipole();
    let keep = |a: usize, c: usize| -> bool {
        match &spec.only {
            None => true,
            Some(pairs) => pairs
                .iter()
                .any(|(x, y)| (*x == b.labels[a] && *y == b.labels[c]) || (*x == b.labels[c] && *y == b.labels[a])),
        }
    };
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut basis = Vec::with_capacity(dim);
    let n_half = spec.photons as i64;
    for blk in 0..nblocks {
        let p = blk as i64 - n_half;
        for a in 0..na {
            let i = blk * na + a;
            h[(i, i)] = bare[a] + (spec.photon_number + p) as f64 * spec.omega0_hz - base;
            basis.push((b.labels[a], spec.photon_number + p));
        }
    }
    if spec.rabi_hz > 0.0 {
        for blk in 0..nblocks - 1 {
            // |a, p+1> (block blk+1) couples to |c, p> (block blk)
            for a in 0..na {
                for c in 0..na {
                    let zac = b.z[(a, c)];
                    if zac == 0.0 || !keep(a, c) {
                        continue;
                    }
                    if spec.scheme == CouplingScheme::RotatingWave && bare[c] <= bare[a] {
                        continue;
                    }
                    let v = 0.5 * spec.rabi_hz * zac / mref;
                    let i = (blk + 1) * na + a;
                    let j = blk * na + c;
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let energies = eig.eigenvalues.iter().map(|w| w + base).collect();
    Ok(DressedSpectrum {
        field: e,
        energies,
        basis,
        vectors: eig.eigenvectors,
        photon_number: spec.photon_number,
        omega0_hz: spec.omega0_hz,
        photons: spec.photons,
    })
}

/// Working point: static field, detuning from the Stark-shifted g-i line and Rabi frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub e_a: f64,
    pub delta0_hz: f64,
    pub rabi_hz: f64,
}

impl OperatingPoint {
    pub fn multilevel_reference() -> Self {
        Self { e_a: 400.0, delta0_hz: 555.907e6, rabi_hz: 200.0e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    /// transition frequency at E_a [Hz]
    pub omega_eg_hz: f64,
    /// first derivative [Hz/(V/m)]
    pub l: f64,
    /// coefficient of (E - E_a)^2 [Hz/(V/m)^2]
    pub q: f64,
}

/// Multilevel dressing of g and e with a shared level model and truncation.
#[derive(Debug, Clone)]
pub struct Dresser {
    pub model: StarkModel,
    pub manifolds: u32,
    pub photons: u32,
    pub scheme: CouplingScheme,
}

impl Dresser {
    pub fn new(model: StarkModel, manifolds: u32, photons: u32) -> Self {
        Self { model, manifolds, photons, scheme: CouplingScheme::Full }
    }

    /// Fitted g, e, i, i' model with M = 6, N = 4.
    pub fn reference() -> Result<Self, DressingError> {
        Ok(Self::new(StarkModel::reference()?, 6, 4))
    }

    /// Stark-shifted g -> i frequency [Hz].
    pub fn omega_gi(&self, e: f64) -> Result<f64, DressingError> {
        Ok(self.model.energy_hz(&I_LOW, e, GROUND.n)? - self.model.energy_hz(&GROUND, e, GROUND.n)?)
    }

    pub fn dressing_frequency(&self, op: &OperatingPoint) -> Result<f64, DressingError> {
        Ok(self.omega_gi(op.e_a)? - op.delta0_hz)
    }

    pub fn ladder_spec(&self, m: i32, op: &OperatingPoint, rabi_hz: f64) -> Result<DressedLadderSpec, DressingError> {
        let mut s = DressedLadderSpec::new(m, self.manifolds, self.photons, self.dressing_frequency(op)?, rabi_hz);
        s.scheme = self.scheme;
        s.origin_n = GROUND.n;
        Ok(s)
    }

    pub fn spectrum(&self, m: i32, op: &OperatingPoint, e: f64, rabi_hz: f64) -> Result<DressedSpectrum, DressingError> {
        build_and_diagonalize(&self.ladder_spec(m, op, rabi_hz)?, &self.model, e)
    }

    /// Potential energy of the dressed version of `level` [Hz].
    pub fn level_energy(&self, level: &RydbergLevel, op: &OperatingPoint, e: f64, rabi_hz: f64) -> Result<f64, DressingError> {
        self.spectrum(level.m, op, e, rabi_hz)?.potential_energy(level)
    }

    /// Dressed e - g transition frequency [Hz].
    pub fn transition(&self, op: &OperatingPoint, e: f64, rabi_hz: f64) -> Result<f64, DressingError> {
        Ok(self.level_energy(&EXCITED, op, e, rabi_hz)? - self.level_energy(&GROUND, op, e, rabi_hz)?)
    }

    pub fn expansion(&self, op: &OperatingPoint) -> Result<Expansion, DressingError> {
        expansion_of(|e| self.transition(op, e, op.rabi_hz), op.e_a)
    }

    /// Max - min of the transition frequency over [E_a - w, E_a + w].
    pub fn dispersion(&self, op: &OperatingPoint, half_width: f64, points: usize) -> Result<f64, DressingError> {
        dispersion_of(|e| self.transition(op, e, op.rabi_hz), op.e_a, half_width, points)
    }

    /// |omega(E_a, Omega (1 + x)) - omega(E_a, Omega)| [Hz].
    pub fn rabi_sensitivity(&self, op: &OperatingPoint, x: f64) -> Result<f64, DressingError> {
        if x == 0.0 {
            return Ok(0.0);
        }
        let a = self.transition(op, op.e_a, op.rabi_hz)?;
        let b = self.transition(op, op.e_a, op.rabi_hz * (1.0 + x))?;
        Ok((b - a).abs())
    }

    /// Solve L = 0 on a detuning or Rabi-frequency bracket according to `strategy`.
    pub fn solve_multilevel(&self, e_a: f64, strategy: MultilevelStrategy) -> Result<MultilevelSolution, DressingError> {
        check_compensable(e_a)?;
        let mut trace = Vec::new();
        let op = match strategy {
            MultilevelStrategy::FixedRabi { rabi_hz, delta_lo_hz, delta_hi_hz, delta_step_hz } => {
                let l_at = |d: f64| -> Result<f64, DressingError> {
                    self.expansion(&OperatingPoint { e_a, delta0_hz: d, rabi_hz }).map(|x| x.l)
                };
                let (a, b) = scan_bracket(&l_at, delta_lo_hz, delta_hi_hz, delta_step_hz, &mut trace)?;
                let d = brent(l_at, a, b, 1.0, 100)?.expect("bracket straddles a root");
                OperatingPoint { e_a, delta0_hz: d, rabi_hz }
            }
            MultilevelStrategy::MinimizeQ { delta_lo_hz, delta_hi_hz, delta_step_hz } => {
                let rabi_for = |d: f64| -> Result<f64, DressingError> {
                    let l_at = |w: f64| -> Result<f64, DressingError> {
                        self.expansion(&OperatingPoint { e_a, delta0_hz: d, rabi_hz: w }).map(|x| x.l)
                    };
                    let mut t = Vec::new();
                    let (a, b) = scan_bracket(&l_at, 10e6, 2000e6, 25e6, &mut t)?;
                    Ok(brent(l_at, a, b, 1.0, 100)?.expect("bracket straddles a root"))
                };
                let abs_q = |d: f64| -> Result<f64, DressingError> {
                    let w = rabi_for(d)?;
                    Ok(self.expansion(&OperatingPoint { e_a, delta0_hz: d, rabi_hz: w })?.q.abs())
                };
                let mut best = (f64::NAN, f64::INFINITY);
                let mut d = delta_lo_hz;
                while d <= delta_hi_hz + 0.5 * delta_step_hz {
                    if let Ok(q) = abs_q(d) {
                        trace.push((d, q));
                        if q < best.1 {
                            best = (d, q);
                        }
                    }
                    d += delta_step_hz;
                }
                if !best.0.is_finite() {
                    return Err(DressingError::Solver { detail: "no detuning admits L = 0".into(), trace });
                }
                let lo = (best.0 - delta_step_hz).max(delta_lo_hz);
                let hi = (best.0 + delta_step_hz).min(delta_hi_hz);
                let (d, _) = golden_min(abs_q, lo, hi, delta_step_hz / 100.0)?;
                OperatingPoint { e_a, delta0_hz: d, rabi_hz: rabi_for(d)? }
            }
        };
        let expansion = self.expansion(&op)?;
        let dispersion_hz = self.dispersion(&op, 1.0, 41)?;
        Ok(MultilevelSolution { op, expansion, dispersion_hz, trace })
    }

    /// Lifetime of a dressed circular level in the cavity.
    pub fn dressed_lifetime(&self, level: &RydbergLevel, op: &OperatingPoint, cavity: &CavitySpec) -> Result<DressedLifetime, DressingError> {
        let spec = self.ladder_spec(level.m, op, op.rabi_hz)?;
        let sp = build_and_diagonalize(&spec, &self.model, op.e_a)?;
        let b = block(level.m, self.manifolds)?;
        let j = sp.find(level, sp.photon_number)?;
        let ej = sp.energies[j];
        // free-space rates first, then the cavity factor for the channels that matter
        let mut channels = Vec::new();
        for k in 0..sp.energies.len() {
            let nu = ej - sp.energies[k];
            if nu < 1e3 {
                continue;
            }
            let d = sp.pi_dipole(&b.z, j, k);
            let free = units::einstein_a(units::TWO_PI * nu, d);
            // bound on the perpendicular enhancement between close mirrors
            let bound = 1.0 + 1.5 * units::LIGHT_SPEED / nu / cavity.l;
            channels.push((nu, free, free * bound));
        }
        let budget: f64 = channels.iter().map(|c| c.2).sum();
        let mut pi_rate = 0.0;
        let mut cache: HashMap<i64, f64> = HashMap::new();
        for &(nu, free, bounded) in &channels {
            if bounded < 1e-6 * budget {
                continue;
            }
            // 0.1% frequency bins
            let key = (nu.ln() * 1e3).round() as i64;
            let enh = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let c = CavitySpec { lambda: units::LIGHT_SPEED / nu, ..*cavity };
                    let v = emission::decay_ratio(&c, Orientation::Perpendicular)?;
                    cache.insert(key, v);
                    v
                }
            };
            pi_rate += free * enh;
        }
        // sigma decay of the bare circular component, inhibited by the cavity
        let weight = sp.vectors[(sp.basis.iter().position(|x| *x == (*level, sp.photon_number)).unwrap_or(0), j)].powi(2);
        let lower = RydbergLevel::circular(level.n - 1);
        let d = stark::dipole_matrix_element(level, &lower, Polarization::Sigma)?;
        let nu = units::au_to_hz(stark::bare_energy_au(level.n) - stark::bare_energy_au(lower.n));
        let lambda = units::LIGHT_SPEED / nu;
        let par = emission::decay_ratio(&CavitySpec { lambda, ..*cavity }, Orientation::Parallel)?;
        let sigma_rate = weight * units::einstein_a(units::TWO_PI * nu, d) * par;
        let total = pi_rate + sigma_rate;
        Ok(DressedLifetime {
            level: *level,
            tau_s: 1.0 / total,
            tau_pi_s: if pi_rate > 0.0 { 1.0 / pi_rate } else { f64::INFINITY },
            pi_rate,
            sigma_rate,
        })
    }

    /// Delta m = +-1 coincidences between dressed g, e and the neighbouring-m ladders.
    pub fn sigma_resonance_scan(&self, op: &OperatingPoint, window_hz: f64) -> Result<Vec<SigmaResonance>, DressingError> {
        let mut out = Vec::new();
        for target in [GROUND, EXCITED] {
            let own = self.spectrum(target.m, op, op.e_a, op.rabi_hz)?;
            let jt = own.find(&target, own.photon_number)?;
            let et = own.energies[jt];
            for dm in [-1, 1] {
                let sp = self.spectrum(target.m + dm, op, op.e_a, op.rabi_hz)?;
                let labels = sp.labels();
                for (k, &ek) in sp.energies.iter().enumerate() {
                    let det = ek - et;
                    if det.abs() < window_hz {
                        let (partner, photons) = labels[k].unwrap_or_else(|| {
                            let col = sp.vectors.column(k);
                            let t = col.iamax();
                            sp.basis[t]
                        });
                        out.push(SigmaResonance {
                            target,
                            partner,
                            photon_offset: photons - own.photon_number,
                            detuning_hz: det,
                        });
                    }
                }
            }
        }
        out.sort_by(|a, b| a.detuning_hz.abs().total_cmp(&b.detuning_hz.abs()));
        Ok(out)
    }

    /// Bivariate fit of a dressed potential energy around the operating point.
    pub fn fit_surface(&self, level: &RydbergLevel, op: &OperatingPoint, opts: SurfaceOptions) -> Result<DressedSurface, DressingError> {
        let g = opts.grid.max(5);
        let mut samples = Vec::with_capacity(g * g);
        for i in 0..g {
            let u = -1.0 + 2.0 * i as f64 / (g - 1) as f64;
            for j in 0..g {
                let w = -1.0 + 2.0 * j as f64 / (g - 1) as f64;
                let e = op.e_a + u * opts.field_half_width;
                let rabi = op.rabi_hz * (1.0 + w * opts.rabi_rel_half_width);
                samples.push((u, w, self.level_energy(level, op, e, rabi)?));
            }
        }
        let center = self.level_energy(level, op, op.e_a, op.rabi_hz)?;
        let terms = surface_terms(SURFACE_ORDER);
        let a = DMatrix::from_fn(samples.len(), terms.len(), |r, c| {
            samples[r].0.powi(terms[c].0 as i32) * samples[r].1.powi(terms[c].1 as i32)
        });
        let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.2 - center));
        let sol = a
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| DressingError::Input(format!("surface least squares failed: {e}")))?;
        let residual_hz = (&a * &sol - &rhs).amax();
        if residual_hz > opts.tol_hz {
            return Err(DressingError::SurfaceFit { residual_hz, tol_hz: opts.tol_hz });
        }
        Ok(DressedSurface {
            level: *level,
            op: *op,
            center_hz: center,
            field_half_width: opts.field_half_width,
            rabi_rel_half_width: opts.rabi_rel_half_width,
            coeffs: sol.iter().copied().collect(),
            residual_hz,
        })
    }
}

fn check_compensable(e_a: f64) -> Result<(), DressingError> {
    if !(e_a > 2.0 * STENCIL_STEP) {
        return Err(DressingError::Degenerate(format!(
            "E_a = {e_a} V/m: the bare slope 2 (alpha_e - alpha_g) E_a vanishes with E_a and the stencil leaves the physical range"
        )));
    }
    Ok(())
}

fn expansion_of<F: FnMut(f64) -> Result<f64, DressingError>>(mut f: F, e_a: f64) -> Result<Expansion, DressingError> {
    let h = STENCIL_STEP;
    let mut v = [0.0; 5];
    for (k, slot) in v.iter_mut().enumerate() {
        *slot = f(e_a + (k as f64 - 2.0) * h)?;
    }
    // subtract the centre before differencing to keep the digits
    let c = v[2];
    let (l, d2) = stencil5(v.map(|x| x - c), h);
    Ok(Expansion { omega_eg_hz: c, l, q: 0.5 * d2 })
}

fn dispersion_of<F: FnMut(f64) -> Result<f64, DressingError>>(mut f: F, e_a: f64, half_width: f64, points: usize) -> Result<f64, DressingError> {
    let n = points.max(2);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..n {
        let e = e_a - half_width + 2.0 * half_width * k as f64 / (n - 1) as f64;
        let v = f(e)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

fn scan_bracket<F: Fn(f64) -> Result<f64, DressingError>>(
    f: &F,
    lo: f64,
    hi: f64,
    step: f64,
    trace: &mut Vec<(f64, f64)>,
) -> Result<(f64, f64), DressingError> {
    let mut x0 = lo;
    let mut f0 = f(x0)?;
    trace.push((x0, f0));
    let mut x = lo;
    while x < hi {
        x = (x + step).min(hi);
        let fx = f(x)?;
        trace.push((x, fx));
        if f0.signum() != fx.signum() {
            return Ok((x0, x));
        }
        x0 = x;
        f0 = fx;
    }
    Err(DressingError::Solver { detail: format!("no sign change of L on [{lo:e}, {hi:e}]"), trace: trace.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MultilevelStrategy {
    /// hold the Rabi frequency and solve L = 0 for the detuning
    FixedRabi { rabi_hz: f64, delta_lo_hz: f64, delta_hi_hz: f64, delta_step_hz: f64 },
    /// for each detuning solve L = 0 for the Rabi frequency, then minimize |Q|
    MinimizeQ { delta_lo_hz: f64, delta_hi_hz: f64, delta_step_hz: f64 },
}

impl MultilevelStrategy {
    pub fn fixed_rabi(rabi_hz: f64) -> Self {
        Self::FixedRabi { rabi_hz, delta_lo_hz: 300e6, delta_hi_hz: 900e6, delta_step_hz: 50e6 }
    }

    pub fn minimize_q(step_hz: f64) -> Self {
        Self::MinimizeQ { delta_lo_hz: 300e6, delta_hi_hz: 900e6, delta_step_hz: step_hz }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MultilevelSolution {
    pub op: OperatingPoint,
    pub expansion: Expansion,
    /// max - min of the transition frequency over E_a +- 1 V/m [Hz]
    pub dispersion_hz: f64,
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DressedLifetime {
    pub level: RydbergLevel,
    pub tau_s: f64,
    /// lifetime from dressing-induced pi cascades alone
    pub tau_pi_s: f64,
    pub pi_rate: f64,
    pub sigma_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaResonance {
    pub target: RydbergLevel,
    pub partner: RydbergLevel,
    pub photon_offset: i64,
    pub detuning_hz: f64,
}

// ---- two-level treatment ----

/// Dressed e - g frequency when only g and i are coupled [Hz].
pub fn two_level_transition(model: &StarkModel, e_a: f64, delta0_hz: f64, rabi_hz: f64, e: f64) -> Result<f64, DressingError> {
    let g = |x: f64| model.energy_hz(&GROUND, x, GROUND.n);
    let i = |x: f64| model.energy_hz(&I_LOW, x, GROUND.n);
    let delta = delta0_hz + (i(e)? - g(e)?) - (i(e_a)? - g(e_a)?);
    let s = 0.5 * ((delta * delta + rabi_hz * rabi_hz).sqrt() - delta);
    Ok(model.energy_hz(&EXCITED, e, GROUND.n)? - g(e)? + s)
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoLevelSolution {
    /// detuning from the Stark-shifted g-i line [Hz]
    pub delta0_hz: f64,
    /// the same detuning measured from the zero-field position of g [Hz]
    pub delta0_zero_field_g_hz: f64,
    pub rabi_hz: f64,
    pub l: f64,
    pub q: f64,
    /// max - min of the transition frequency over E_a +- 1 V/m [Hz]
    pub dispersion_hz: f64,
    /// largest |omega(E) - omega(E_a)| over the same range [Hz]
    pub max_deviation_hz: f64,
}

/// Cancel L and Q with g-i coupling only (2-D Newton on detuning and Rabi frequency).
pub fn solve_two_level(model: &StarkModel, e_a: f64) -> Result<TwoLevelSolution, DressingError> {
    check_compensable(e_a)?;
    let lq = |x: [f64; 2]| -> Result<[f64; 2], DressingError> {
        let ex = expansion_of(|e| two_level_transition(model, e_a, x[0], x[1], e), e_a)?;
        Ok([ex.l, ex.q])
    };
    let mut x = [700e6, 200e6];
    let mut f = lq(x)?;
    let mut trace = vec![(x[0], f[0])];
    for _ in 0..60 {
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let h = 1e-4 * x[c].abs().max(1e6);
            let mut xp = x;
            xp[c] += h;
            let fp = lq(xp)?;
            jac[0][c] = (fp[0] - f[0]) / h;
            jac[1][c] = (fp[1] - f[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(DressingError::Solver { detail: "singular Jacobian".into(), trace });
        }
        let dx0 = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        let dx1 = (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
        // damped step keeping both parameters positive
        let mut t = 1.0;
        let norm0 = f[0].abs() + 100.0 * f[1].abs();
        loop {
            let xn = [x[0] - t * dx0, x[1] - t * dx1];
            if xn[0] > 0.0 && xn[1] > 0.0 {
                let fnew = lq(xn)?;
                if fnew[0].abs() + 100.0 * fnew[1].abs() < norm0 || t < 1e-3 {
                    x = xn;
                    f = fnew;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return Err(DressingError::Solver { detail: "line search failed".into(), trace });
            }
        }
        trace.push((x[0], f[0]));
        if dx0.abs() < 1.0 && dx1.abs() < 1.0 {
            break;
        }
    }
    if f[0].abs() > 1e-3 || f[1].abs() > 1e-3 {
        return Err(DressingError::Solver { detail: format!("residual L = {}, Q = {}", f[0], f[1]), trace });
    }
    let dispersion_hz = dispersion_of(|e| two_level_transition(model, e_a, x[0], x[1], e), e_a, 1.0, 41)?;
    let centre = two_level_transition(model, e_a, x[0], x[1], e_a)?;
    let mut max_deviation_hz: f64 = 0.0;
    for k in 0..41 {
        let e = e_a - 1.0 + 2.0 * k as f64 / 40.0;
        max_deviation_hz = max_deviation_hz.max((two_level_transition(model, e_a, x[0], x[1], e)? - centre).abs());
    }
    let g_shift = model.shift_hz(&GROUND, e_a)?;
    Ok(TwoLevelSolution {
        delta0_hz: x[0],
        delta0_zero_field_g_hz: x[0] + g_shift,
        rabi_hz: x[1],
        l: f[0],
        q: f[1],
        dispersion_hz,
        max_deviation_hz,
    })
}

// ---- fitted surfaces ----

const SURFACE_ORDER: usize = 4;

fn surface_terms(order: usize) -> Vec<(usize, usize)> {
    let mut t = Vec::new();
    for total in 0..=order {
        for i in (0..=total).rev() {
            t.push((i, total - i));
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceOptions {
    pub field_half_width: f64,
    pub rabi_rel_half_width: f64,
    pub grid: usize,
    pub tol_hz: f64,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self { field_half_width: 5.0, rabi_rel_half_width: 1e-4, grid: 9, tol_hz: 1.0 }
    }
}

/// Dressed potential energy as a polynomial in (E - E_a) and (Omega/Omega_0 - 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DressedSurface {
    pub level: RydbergLevel,
    pub op: OperatingPoint,
    /// energy at (E_a, Omega_0) [Hz]
    pub center_hz: f64,
    pub field_half_width: f64,
    pub rabi_rel_half_width: f64,
    pub coeffs: Vec<f64>,
    pub residual_hz: f64,
}

impl DressedSurface {
    fn scaled(&self, e: f64, rabi_factor: f64) -> (f64, f64) {
        ((e - self.op.e_a) / self.field_half_width, (rabi_factor - 1.0) / self.rabi_rel_half_width)
    }

    /// Energy [Hz] at field `e` and Rabi frequency `rabi_factor` * Omega_0.
    pub fn energy_hz(&self, e: f64, rabi_factor: f64) -> f64 {
        self.center_hz + self.deviation_hz(e, rabi_factor)
    }

    /// Energy minus its value at the operating point [Hz].
    pub fn deviation_hz(&self, e: f64, rabi_factor: f64) -> f64 {
        let (u, w) = self.scaled(e, rabi_factor);
        surface_terms(SURFACE_ORDER)
            .iter()
            .zip(&self.coeffs)
            .map(|(&(i, j), c)| c * u.powi(i as i32) * w.powi(j as i32))
            .sum()
    }

    /// (dE/dfield [Hz/(V/m)], dE/drabi_factor [Hz]).
    pub fn gradient(&self, e: f64, rabi_factor: f64) -> (f64, f64) {
        let (u, w) = self.scaled(e, rabi_factor);
        let mut du = 0.0;
        let mut dw = 0.0;
        for (&(i, j), c) in surface_terms(SURFACE_ORDER).iter().zip(&self.coeffs) {
            if i > 0 {
                du += c * i as f64 * u.powi(i as i32 - 1) * w.powi(j as i32);
            }
            if j > 0 {
                dw += c * j as f64 * u.powi(i as i32) * w.powi(j as i32 - 1);
            }
        }
        (du / self.field_half_width, dw / self.rabi_rel_half_width)
    }

    pub fn contains(&self, e: f64, rabi_factor: f64) -> bool {
        let (u, w) = self.scaled(e, rabi_factor);
        u.abs() <= 1.0 && w.abs() <= 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn undressed_ladder_is_bare_plus_photons() {
        let model = StarkModel::perturbative();
        let mut spec = DressedLadderSpec::new(49, 3, 2, 51.0e9, 0.0);
        spec.photon_number = 3;
        let sp = build_and_diagonalize(&spec, &model, 400.0).unwrap();
        let mut got = sp.energies.clone();
        let mut want: Vec<f64> = sp
            .basis
            .iter()
            .map(|(l, p)| model.energy_hz(l, 400.0, 50).unwrap() + *p as f64 * 51.0e9)
            .collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-3, "{a} {b}");
        }
    }

    #[test]
    fn rotating_wave_two_level_closed_form() {
        let model = StarkModel::perturbative();
        let e = 400.0;
        let wgi = model.energy_hz(&I_LOW, e, 50).unwrap() - model.energy_hz(&GROUND, e, 50).unwrap();
        let (delta, rabi) = (700e6, 230e6);
        let mut spec = DressedLadderSpec::new(49, 2, 1, wgi - delta, rabi);
        spec.scheme = CouplingScheme::RotatingWave;
        spec.only = Some(vec![(GROUND, I_LOW)]);
        let sp = build_and_diagonalize(&spec, &model, e).unwrap();
        let shift = sp.potential_energy(&GROUND).unwrap() - model.energy_hz(&GROUND, e, 50).unwrap();
        let want = -0.5 * ((delta * delta + rabi * rabi).sqrt() - delta);
        assert!((shift - want).abs() < 1e-9 * want.abs(), "{shift} vs {want}");
    }

    #[test]
    fn degenerate_working_field() {
        assert!(matches!(solve_two_level(&StarkModel::perturbative(), 0.0), Err(DressingError::Degenerate(_))));
    }

    #[test]
    fn surface_terms_count() {
        assert_eq!(surface_terms(4).len(), 15);
    }
}
