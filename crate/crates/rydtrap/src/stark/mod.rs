//! Hydrogenic Rydberg levels in a static electric field: perturbative energies,
//! dipole matrix elements and direct diagonalization of the Stark Hamiltonian.

pub mod hydrogen;
mod poly;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units;
pub use poly::{fit_polynomial, read_polynomials_csv, write_polynomials_csv, FitOptions, StarkPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StarkError {
    #[error("invalid quantum numbers n={n} n1={n1} m={m}")]
    InvalidLevel { n: u32, n1: u32, m: i32 },
    #[error("polarization {pol:?} incompatible with delta m = {dm}")]
    Polarization { pol: Polarization, dm: i32 },
    #[error("field {field} V/m outside the range [{lo}, {hi}] V/m")]
    OutOfRange { field: f64, lo: f64, hi: f64 },
    #[error("polynomial fit residual {residual_hz:.3} Hz exceeds tolerance {tol_hz} Hz")]
    FitFailure { residual_hz: f64, tol_hz: f64 },
    #[error("adiabatic labeling failed near {field} V/m: {detail}")]
    Labeling { field: f64, detail: String },
    #[error("invalid input: {0}")]
    Input(String),
}

/// Parabolic labels (n, n1, m) of a hydrogen level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub struct RydbergLevel {
    pub n: u32,
    pub n1: u32,
    pub m: i32,
}

impl RydbergLevel {
    pub fn new(n: u32, n1: u32, m: i32) -> Result<Self, StarkError> {
        if n == 0 || m.unsigned_abs() >= n || n1 + m.unsigned_abs() >= n {
            return Err(StarkError::InvalidLevel { n, n1, m });
        }
        Ok(Self { n, n1, m })
    }

    /// The circular level (n, 0, n-1).
    pub fn circular(n: u32) -> Self {
        Self { n, n1: 0, m: n as i32 - 1 }
    }

    pub fn n2(&self) -> u32 {
        self.n - self.m.unsigned_abs() - 1 - self.n1
    }

    pub fn is_circular(&self) -> bool {
        self.m.unsigned_abs() + 1 == self.n && self.n1 == 0
    }

    /// n - 2 n1 - |m| - 1, the integer multiplying the linear Stark term.
    pub fn stark_index(&self) -> i64 {
        self.n as i64 - 2 * self.n1 as i64 - self.m.abs() as i64 - 1
    }

    fn check(&self) -> Result<(), StarkError> {
        Self::new(self.n, self.n1, self.m).map(|_| ())
    }
}

impl std::fmt::Display for RydbergLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.n, self.n1, self.m)
    }
}

/// Perturbative energy terms in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbativeEnergy {
    pub e0_au: f64,
    pub e1_au: f64,
    pub e2_au: f64,
    /// shift from the zero-field level [Hz]
    pub shift_hz: f64,
}

impl PerturbativeEnergy {
    pub fn total_au(&self) -> f64 {
        self.e0_au + self.e1_au + self.e2_au
    }
}

/// Second-order coefficient in a.u.: the energy term is this times F^2.
pub fn quadratic_coefficient_au(level: &RydbergLevel) -> f64 {
    let n = level.n as f64;
    let m = level.m as f64;
    let k = level.n1 as f64 - level.n2() as f64;
    -(17.0 * n * n - 3.0 * k * k - 9.0 * m * m + 19.0) * n.powi(4) / 16.0
}

/// Quadratic Stark coefficient [Hz/(V/m)^2].
pub fn polarizability_hz(level: &RydbergLevel) -> f64 {
    units::au_coeff_to_hz(quadratic_coefficient_au(level), 2)
}

/// Energy up to second order in the field `e` [V/m].
pub fn perturbative_energy(level: &RydbergLevel, e: f64) -> Result<PerturbativeEnergy, StarkError> {
    level.check()?;
    if !(e >= 0.0) {
        return Err(StarkError::Input(format!("field must be non-negative, got {e}")));
    }
    let n = level.n as f64;
    let f = units::field_to_au(e);
    let e0 = -0.5 / (n * n);
    let e1 = -1.5 * level.stark_index() as f64 * n * f;
    let e2 = quadratic_coefficient_au(level) * f * f;
    Ok(PerturbativeEnergy { e0_au: e0, e1_au: e1, e2_au: e2, shift_hz: units::au_to_hz(e1 + e2) })
}

/// Shift from the zero-field level [Hz], perturbative, without validation.
pub(crate) fn perturbative_shift_hz(level: &RydbergLevel, e: f64) -> f64 {
    linear_stark_slope(level) * e + polarizability_hz(level) * e * e
}

/// Linear Stark slope d(energy)/dE in Hz/(V/m). Zero for circular levels.
pub fn linear_stark_slope(level: &RydbergLevel) -> f64 {
    units::au_coeff_to_hz(-1.5 * level.stark_index() as f64 * level.n as f64, 1)
}

/// Zero-field energy of manifold n in atomic units.
pub fn bare_energy_au(n: u32) -> f64 {
    -0.5 / (n as f64 * n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    Pi,
    /// Either circular component; the element is taken from the level with the
    /// larger m down to the other one so that it is symmetric in its arguments.
    Sigma,
}

/// Parabolic state as a vector over spherical |n l m>, l = |m|..n-1.
pub fn parabolic_vector(level: &RydbergLevel) -> Vec<(u32, f64)> {
    hydrogen::parabolic_expansion(level.n, level.n1, level.m)
}

/// Dipole matrix element between two parabolic levels [e a0].
pub fn dipole_matrix_element(
    a: &RydbergLevel,
    b: &RydbergLevel,
    pol: Polarization,
) -> Result<f64, StarkError> {
    a.check()?;
    b.check()?;
    let dm = a.m - b.m;
    let (hi, lo, q) = match pol {
        Polarization::Pi if dm == 0 => {
            if a <= b {
                (a, b, 0)
            } else {
                (b, a, 0)
            }
        }
        Polarization::Sigma if dm.abs() == 1 => {
            if dm > 0 {
                (a, b, 1)
            } else {
                (b, a, 1)
            }
        }
        _ => return Err(StarkError::Polarization { pol, dm }),
    };
    let va = parabolic_vector(hi);
    let vb = parabolic_vector(lo);
    let mut sum = 0.0;
    for &(la, ca) in &va {
        for &(lb, cb) in &vb {
            if (la as i64 - lb as i64).abs() == 1 {
                sum += ca * cb * hydrogen::spherical_dipole(hi.n, la, hi.m, lo.n, lb, lo.m, q);
            }
        }
    }
    Ok(sum)
}

/// Fixed-m spherical basis spanning a set of consecutive manifolds.
#[derive(Debug, Clone)]
pub struct StarkBasis {
    pub m: i32,
    pub n_lowest: u32,
    pub manifolds: u32,
    /// (n, l) of each basis vector
    pub states: Vec<(u32, u32)>,
    /// z operator in atomic units
    pub z: DMatrix<f64>,
    /// parabolic labels, one per basis vector
    pub labels: Vec<RydbergLevel>,
    /// columns are the parabolic states expanded on `states`
    pub parabolic: DMatrix<f64>,
}

impl StarkBasis {
    pub fn new(m: i32, n_lowest: u32, manifolds: u32) -> Result<Self, StarkError> {
        if manifolds == 0 {
            return Err(StarkError::Input("need at least one manifold".into()));
        }
        let am = m.unsigned_abs();
        let n_lowest = n_lowest.max(am + 1);
        let mut states = Vec::new();
        let mut labels = Vec::new();
        for n in n_lowest..n_lowest + manifolds {
            for l in am..n {
                states.push((n, l));
            }
            for n1 in 0..(n - am) {
                labels.push(RydbergLevel { n, n1, m });
            }
        }
        let dim = states.len();
        let mut z = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let (n, l) = states[i];
            for j in (i + 1)..dim {
                let (n2, l2) = states[j];
                if l2 == l + 1 || l == l2 + 1 {
                    let v = hydrogen::spherical_dipole(n, l, m, n2, l2, m, 0);
                    z[(i, j)] = v;
                    z[(j, i)] = v;
                }
            }
        }
        let mut parabolic = DMatrix::zeros(dim, dim);
        for (col, lab) in labels.iter().enumerate() {
            for (l, c) in parabolic_vector(lab) {
                let row = states.iter().position(|&s| s == (lab.n, l)).expect("state in basis");
                parabolic[(row, col)] = c;
            }
        }
        Ok(Self { m, n_lowest, manifolds, states, z, labels, parabolic })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Hamiltonian H0 + F z in atomic units, measured from the lowest manifold's zero-field energy.
    pub fn hamiltonian(&self, e: f64) -> DMatrix<f64> {
        let f = units::field_to_au(e);
        let e_ref = bare_energy_au(self.n_lowest);
        let mut h = &self.z * f;
        for (i, &(n, _)) in self.states.iter().enumerate() {
            h[(i, i)] += bare_energy_au(n) - e_ref;
        }
        h
    }

    /// The z operator expressed in the parabolic basis.
    pub fn z_parabolic(&self) -> DMatrix<f64> {
        self.parabolic.transpose() * &self.z * &self.parabolic
    }
}

/// One labeled eigenstate from a Stark diagonalization.
#[derive(Debug, Clone, Serialize)]
pub struct StarkState {
    pub level: RydbergLevel,
    /// shift from the zero-field energy of `level` [Hz]
    pub shift_hz: f64,
}

/// Result of following all eigenstates along a field path.
#[derive(Debug, Clone)]
pub struct StarkScan {
    pub fields: Vec<f64>,
    pub labels: Vec<RydbergLevel>,
    /// shifts[field index][label index], Hz
    pub shifts: Vec<Vec<f64>>,
}

impl StarkScan {
    pub fn series(&self, level: &RydbergLevel) -> Option<Vec<(f64, f64)>> {
        let j = self.labels.iter().position(|l| l == level)?;
        Some(self.fields.iter().zip(&self.shifts).map(|(&e, s)| (e, s[j])).collect())
    }
}

pub const MAX_FIELD: f64 = 1000.0;
const CONTINUATION_STEP: f64 = 20.0;

fn eigen_sorted(h: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    (eig.eigenvalues, eig.eigenvectors)
}

/// Assign each reference vector to the eigenvector with the largest overlap.
fn associate(
    refs: &DMatrix<f64>,
    vecs: &DMatrix<f64>,
    field: f64,
    labels: &[RydbergLevel],
) -> Result<Vec<usize>, StarkError> {
    let ov = refs.transpose() * vecs;
    let n = ov.nrows();
    let mut taken = vec![usize::MAX; n];
    let mut map = vec![0; n];
    for j in 0..n {
        let (mut best, mut bv) = (0, -1.0);
        for i in 0..n {
            let v = ov[(j, i)].abs();
            if v > bv {
                bv = v;
                best = i;
            }
        }
        if bv < 0.5 {
            return Err(StarkError::Labeling {
                field,
                detail: format!("{} has maximal overlap {bv:.3}", labels[j]),
            });
        }
        if taken[best] != usize::MAX {
            return Err(StarkError::Labeling {
                field,
                detail: format!("{} and {} map to the same eigenstate", labels[taken[best]], labels[j]),
            });
        }
        taken[best] = j;
        map[j] = best;
    }
    Ok(map)
}

/// Diagonalize along an increasing field path, labeling eigenstates by
/// adiabatic continuation from the parabolic states at zero field.
pub fn stark_scan(basis: &StarkBasis, fields: &[f64]) -> Result<StarkScan, StarkError> {
    let mut prev_e = 0.0;
    for &e in fields {
        if !(0.0..=MAX_FIELD).contains(&e) {
            return Err(StarkError::OutOfRange { field: e, lo: 0.0, hi: MAX_FIELD });
        }
        if e < prev_e {
            return Err(StarkError::Input("field path must be non-decreasing".into()));
        }
        prev_e = e;
    }
    let dim = basis.dim();
    let e_ref = bare_energy_au(basis.n_lowest);
    let mut refs = basis.parabolic.clone();
    let mut current = 0.0;
    let mut shifts = Vec::with_capacity(fields.len());
    for &target in fields {
        let mut vals = None;
        if target == 0.0 {
            shifts.push(vec![0.0; dim]);
            continue;
        }
        let steps = ((target - current) / CONTINUATION_STEP).ceil().max(1.0) as usize;
        for s in 1..=steps {
            let e = current + (target - current) * s as f64 / steps as f64;
            let (w, v) = eigen_sorted(basis.hamiltonian(e));
            let map = associate(&refs, &v, e, &basis.labels)?;
            let mut next = DMatrix::zeros(dim, dim);
            let mut ordered = vec![0.0; dim];
            for (j, &i) in map.iter().enumerate() {
                let col = v.column(i);
                let sign = if refs.column(j).dot(&col) < 0.0 { -1.0 } else { 1.0 };
                next.set_column(j, &(col * sign));
                ordered[j] = w[i];
            }
            refs = next;
            vals = Some(ordered);
        }
        current = target;
        let vals = vals.expect("at least one step");
        shifts.push(
            basis
                .labels
                .iter()
                .zip(vals)
                .map(|(lab, w)| units::au_to_hz(w + e_ref - bare_energy_au(lab.n)))
                .collect(),
        );
    }
    Ok(StarkScan { fields: fields.to_vec(), labels: basis.labels.clone(), shifts })
}

/// Eigenvalues of H0 + E z at fixed m over `manifolds` manifolds starting at
/// `n_lowest`, each labeled by continuation from zero field.
pub fn diagonalize_stark(m: i32, n_lowest: u32, manifolds: u32, e: f64) -> Result<Vec<StarkState>, StarkError> {
    let basis = StarkBasis::new(m, n_lowest, manifolds)?;
    let scan = stark_scan(&basis, &[e])?;
    Ok(scan
        .labels
        .iter()
        .zip(&scan.shifts[0])
        .map(|(l, &s)| StarkState { level: *l, shift_hz: s })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polarizabilities() {
        let ag = polarizability_hz(&RydbergLevel::circular(50));
        let ae = polarizability_hz(&RydbergLevel::circular(51));
        assert!((ag + 203.2).abs() < 0.1, "{ag}");
        assert!((ae + 228.7).abs() < 0.1, "{ae}");
        assert!(((ae - ag) + 25.5).abs() < 0.1);
    }

    #[test]
    fn zero_field_energy() {
        let p = perturbative_energy(&RydbergLevel::circular(50), 0.0).unwrap();
        assert_eq!(p.total_au(), -1.0 / (2.0 * 2500.0));
        assert_eq!(p.shift_hz, 0.0);
    }

    #[test]
    fn invalid_levels_rejected() {
        assert!(RydbergLevel::new(50, 0, 50).is_err());
        assert!(RydbergLevel::new(50, 1, 49).is_err());
        assert!(RydbergLevel::new(0, 0, 0).is_err());
        assert!(perturbative_energy(&RydbergLevel { n: 5, n1: 4, m: 2 }, 1.0).is_err());
    }

    #[test]
    fn slopes() {
        assert_eq!(linear_stark_slope(&RydbergLevel::circular(50)), 0.0);
        let s = linear_stark_slope(&RydbergLevel::new(50, 0, 48).unwrap());
        assert!((s.abs() - 0.96e6).abs() < 0.01e6, "{s}");
        let a = RydbergLevel::new(40, 3, 10).unwrap();
        let b = RydbergLevel::new(40, 40 - 10 - 1 - 3, 10).unwrap();
        assert!((linear_stark_slope(&a) + linear_stark_slope(&b)).abs() < 1e-9);
    }

    #[test]
    fn polarization_mismatch() {
        let a = RydbergLevel::circular(50);
        let b = RydbergLevel::new(52, 0, 51).unwrap();
        assert!(matches!(
            dipole_matrix_element(&a, &b, Polarization::Pi),
            Err(StarkError::Polarization { .. })
        ));
    }

    #[test]
    fn dipole_is_symmetric() {
        let g = RydbergLevel::circular(50);
        let i = RydbergLevel::new(51, 0, 49).unwrap();
        let e = RydbergLevel::circular(51);
        let a = dipole_matrix_element(&g, &i, Polarization::Pi).unwrap();
        let b = dipole_matrix_element(&i, &g, Polarization::Pi).unwrap();
        assert_eq!(a, b);
        let a = dipole_matrix_element(&g, &e, Polarization::Sigma).unwrap();
        let b = dipole_matrix_element(&e, &g, Polarization::Sigma).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parabolic_states_diagonalize_z_in_manifold() {
        let basis = StarkBasis::new(47, 50, 3).unwrap();
        let zp = basis.z_parabolic();
        for (j, lab) in basis.labels.iter().enumerate() {
            let want = 1.5 * lab.n as f64 * (lab.n1 as f64 - lab.n2() as f64);
            assert!((zp[(j, j)] - want).abs() < 1e-9, "{lab}: {} vs {want}", zp[(j, j)]);
            for (k, other) in basis.labels.iter().enumerate() {
                if k != j && other.n == lab.n {
                    assert!(zp[(j, k)].abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn zero_field_diagonalization() {
        let st = diagonalize_stark(49, 50, 3, 0.0).unwrap();
        assert_eq!(st.len(), 1 + 2 + 3);
        assert!(st.iter().all(|s| s.shift_hz == 0.0));
    }

    #[test]
    fn trace_is_field_independent() {
        let basis = StarkBasis::new(48, 50, 3).unwrap();
        let t0 = basis.hamiltonian(0.0).trace();
        let t1 = basis.hamiltonian(800.0).trace();
        assert!((t0 - t1).abs() < 1e-15);
        let h = basis.hamiltonian(500.0);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn out_of_range_field() {
        assert!(matches!(diagonalize_stark(49, 50, 2, 1200.0), Err(StarkError::OutOfRange { .. })));
    }
}
