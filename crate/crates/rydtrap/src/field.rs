//! Trap potential from a spherical-harmonic coefficient table, with closed-form
//! field, field gradient and tilt.
//!
//! V(r, t) = sum_k sum_l v_kl U_k(t) (r/z0)^l Y_l0(theta), with orthonormal Y_l0,
//! U_1 = U1, U_2 = U2 and U_3 = U30 cos(omega t).

use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const L_MAX: usize = 7;

const TRAP_A_CSV: &str = include_str!("../data/trap_a.csv");
const TRAP_B_CSV: &str = include_str!("../data/trap_b.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("position {radius:.3e} m from the origin is outside the validity sphere of radius {limit:.3e} m")]
    OutOfBounds { radius: f64, limit: f64 },
    #[error("cannot interpolate between two rows with the same eta = {0}")]
    DegenerateEta(f64),
    #[error("coefficient table: {0}")]
    Table(String),
    #[error("unknown geometry '{0}'")]
    UnknownGeometry(String),
}

/// One row of a coefficient file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub geometry: String,
    pub k: u8,
    pub eta: Option<f64>,
    pub v: [f64; L_MAX],
    pub z0: f64,
    pub validity_radius: f64,
}

#[derive(Debug, Deserialize)]
struct RawRow {
    geometry: String,
    k: u8,
    eta: Option<f64>,
    l1: f64,
    l2: f64,
    l3: f64,
    l4: f64,
    l5: f64,
    l6: f64,
    l7: f64,
    z0_m: f64,
    validity_radius_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub rows: Vec<CoefficientRow>,
}

impl CoefficientTable {
    pub fn from_reader<R: Read>(r: R) -> Result<Self, FieldError> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut rows = Vec::new();
        for raw in rdr.deserialize::<RawRow>() {
            let raw = raw.map_err(|e| FieldError::Table(e.to_string()))?;
            if !(1..=3).contains(&raw.k) {
                return Err(FieldError::Table(format!("k must be 1, 2 or 3, got {}", raw.k)));
            }
            if raw.z0_m <= 0.0 || raw.validity_radius_m <= 0.0 {
                return Err(FieldError::Table("z0 and validity radius must be positive".into()));
            }
            rows.push(CoefficientRow {
                geometry: raw.geometry,
                k: raw.k,
                eta: raw.eta,
                v: [raw.l1, raw.l2, raw.l3, raw.l4, raw.l5, raw.l6, raw.l7],
                z0: raw.z0_m,
                validity_radius: raw.validity_radius_m,
            });
        }
        if rows.is_empty() {
            return Err(FieldError::Table("empty table".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, FieldError> {
        let f = std::fs::File::open(path.as_ref()).map_err(|e| FieldError::Table(e.to_string()))?;
        Self::from_reader(f)
    }

    /// Bundled table by geometry name: "trapA" or "trapB".
    pub fn bundled(geometry: &str) -> Result<Self, FieldError> {
        match geometry {
            "trapA" => Self::from_reader(TRAP_A_CSV.as_bytes()),
            "trapB" => Self::from_reader(TRAP_B_CSV.as_bytes()),
            other => Err(FieldError::UnknownGeometry(other.to_string())),
        }
    }

    pub fn raw_text(geometry: &str) -> Option<&'static str> {
        match geometry {
            "trapA" => Some(TRAP_A_CSV),
            "trapB" => Some(TRAP_B_CSV),
            _ => None,
        }
    }

    fn row(&self, k: u8) -> Result<&CoefficientRow, FieldError> {
        self.rows
            .iter()
            .find(|r| r.k == k)
            .ok_or_else(|| FieldError::Table(format!("no row for k={k}")))
    }

    /// Potential with the U3 row taken at the requested eta. An exact match is
    /// returned as is; otherwise the two tabulated rows are interpolated.
    pub fn potential(&self, eta: f64) -> Result<HarmonicPotential, FieldError> {
        let r1 = self.row(1)?;
        let r2 = self.row(2)?;
        let hex: Vec<&CoefficientRow> = self.rows.iter().filter(|r| r.k == 3).collect();
        let v3 = match hex.iter().find(|r| r.eta == Some(eta)) {
            Some(r) => r.v,
            None => {
                if hex.len() < 2 {
                    return Err(FieldError::Table("need two k=3 rows to synthesize eta".into()));
                }
                synthesize_eta(hex[0], hex[1], eta)?
            }
        };
        Ok(HarmonicPotential::new(&r1.geometry, r1.z0, r1.validity_radius, [r1.v, r2.v, v3], eta))
    }
}

/// The U3 row at an arbitrary eta: each coefficient is affine in eta because
/// electrostatics is linear in the electrode voltages.
pub fn synthesize_eta(a: &CoefficientRow, b: &CoefficientRow, eta: f64) -> Result<[f64; L_MAX], FieldError> {
    let (ea, eb) = match (a.eta, b.eta) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(FieldError::Table("rows carry no eta".into())),
    };
    if ea == eb {
        return Err(FieldError::DegenerateEta(ea));
    }
    if eta == ea {
        return Ok(a.v);
    }
    if eta == eb {
        return Ok(b.v);
    }
    let t = (eta - ea) / (eb - ea);
    let mut out = [0.0; L_MAX];
    for l in 0..L_MAX {
        out[l] = a.v[l] + (b.v[l] - a.v[l]) * t;
    }
    Ok(out)
}

/// Electrode voltages and drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveSettings {
    pub u1: f64,
    pub u2: f64,
    pub u30: f64,
    /// angular frequency [rad/s]
    pub omega: f64,
    pub eta: f64,
}

impl DriveSettings {
    pub fn validate(&self) -> Result<(), String> {
        if ![self.u1, self.u2, self.u30, self.eta].iter().all(|v| v.is_finite()) {
            return Err("voltages must be finite".into());
        }
        if !(self.omega > 0.0) {
            return Err("drive frequency must be positive".into());
        }
        Ok(())
    }

    #[inline]
    pub fn voltages(&self, t: f64) -> [f64; 3] {
        [self.u1, self.u2, self.u30 * (self.omega * t).cos()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldSample {
    pub evec: [f64; 3],
    pub modulus: f64,
    /// angle between the field and the trap axis, folded into [0, pi/2]
    pub theta: f64,
}

/// Field with first derivatives: `jac[i][j]` = dE_i/dx_j.
#[derive(Debug, Clone, Copy)]
pub struct FieldJet {
    pub sample: FieldSample,
    pub jac: [[f64; 3]; 3],
    /// gradient of |E|
    pub grad_modulus: [f64; 3],
}

impl FieldJet {
    /// Gradient of cos(theta) = |E_z| / |E|.
    pub fn grad_cos_theta(&self) -> [f64; 3] {
        let e = self.sample.modulus;
        let sgn = self.sample.evec[2].signum();
        let ez = self.sample.evec[2].abs();
        let mut g = [0.0; 3];
        for j in 0..3 {
            g[j] = sgn * self.jac[2][j] / e - ez * self.grad_modulus[j] / (e * e);
        }
        g
    }
}

/// Solid harmonics r^l P_l(cos) and their derivatives with respect to z and
/// s = x^2 + y^2, from the three-term recurrence.
#[derive(Debug, Clone, Copy, Default)]
struct SolidJet {
    p: [f64; L_MAX + 1],
    pz: [f64; L_MAX + 1],
    ps: [f64; L_MAX + 1],
    pzz: [f64; L_MAX + 1],
    pzs: [f64; L_MAX + 1],
    pss: [f64; L_MAX + 1],
}

impl SolidJet {
    fn new(z: f64, s: f64, second: bool) -> Self {
        let q = z * z + s;
        let mut j = SolidJet::default();
        j.p[0] = 1.0;
        j.p[1] = z;
        j.pz[1] = 1.0;
        for l in 1..L_MAX {
            let lf = l as f64;
            let a = 2.0 * lf + 1.0;
            let d = lf + 1.0;
            j.p[l + 1] = (a * z * j.p[l] - lf * q * j.p[l - 1]) / d;
            j.pz[l + 1] = (a * (j.p[l] + z * j.pz[l]) - lf * (2.0 * z * j.p[l - 1] + q * j.pz[l - 1])) / d;
            j.ps[l + 1] = (a * z * j.ps[l] - lf * (j.p[l - 1] + q * j.ps[l - 1])) / d;
            if second {
                j.pzz[l + 1] = (a * (2.0 * j.pz[l] + z * j.pzz[l])
                    - lf * (2.0 * j.p[l - 1] + 4.0 * z * j.pz[l - 1] + q * j.pzz[l - 1]))
                    / d;
                j.pzs[l + 1] = (a * (j.ps[l] + z * j.pzs[l])
                    - lf * (2.0 * z * j.ps[l - 1] + j.pz[l - 1] + q * j.pzs[l - 1]))
                    / d;
                j.pss[l + 1] = (a * z * j.pss[l] - lf * (2.0 * j.ps[l - 1] + q * j.pss[l - 1])) / d;
            }
        }
        j
    }
}

/// Fitted potential of one geometry at one eta.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicPotential {
    pub geometry: String,
    pub z0: f64,
    pub validity_radius: f64,
    /// v[k-1][l-1]
    pub v: [[f64; L_MAX]; 3],
    pub eta: f64,
    /// v_kl sqrt((2l+1)/4pi) / z0^l, indexed [k-1][l]
    #[serde(skip)]
    c: [[f64; L_MAX + 1]; 3],
}

impl HarmonicPotential {
    pub fn new(geometry: &str, z0: f64, validity_radius: f64, v: [[f64; L_MAX]; 3], eta: f64) -> Self {
        let mut c = [[0.0; L_MAX + 1]; 3];
        for k in 0..3 {
            for l in 1..=L_MAX {
                c[k][l] = v[k][l - 1] * ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() / z0.powi(l as i32);
            }
        }
        Self { geometry: geometry.to_string(), z0, validity_radius, v, eta, c }
    }

    /// Bundled geometry ("trapA" / "trapB") at the given eta.
    pub fn bundled(geometry: &str, eta: f64) -> Result<Self, FieldError> {
        CoefficientTable::bundled(geometry)?.potential(eta)
    }

    #[inline]
    pub fn check_bounds(&self, r: [f64; 3]) -> Result<(), FieldError> {
        let radius = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        if radius > self.validity_radius || !radius.is_finite() {
            return Err(FieldError::OutOfBounds { radius, limit: self.validity_radius });
        }
        Ok(())
    }

    fn weights(&self, u: [f64; 3]) -> [f64; L_MAX + 1] {
        let mut w = [0.0; L_MAX + 1];
        for l in 1..=L_MAX {
            w[l] = u[0] * self.c[0][l] + u[1] * self.c[1][l] + u[2] * self.c[2][l];
        }
        w
    }

    /// Potential [V] for explicit electrode voltages (U1, U2, U3).
    pub fn potential_with(&self, u: [f64; 3], r: [f64; 3]) -> Result<f64, FieldError> {
        self.check_bounds(r)?;
        let jet = SolidJet::new(r[2], r[0] * r[0] + r[1] * r[1], false);
        let w = self.weights(u);
        Ok((1..=L_MAX).map(|l| w[l] * jet.p[l]).sum())
    }

    pub fn potential(&self, drive: &DriveSettings, r: [f64; 3], t: f64) -> Result<f64, FieldError> {
        self.potential_with(drive.voltages(t), r)
    }

    /// Field vector for explicit voltages, no bounds check.
    pub fn evec_with(&self, u: [f64; 3], r: [f64; 3]) -> [f64; 3] {
        let jet = SolidJet::new(r[2], r[0] * r[0] + r[1] * r[1], false);
        let w = self.weights(u);
        let (mut wz, mut ws) = (0.0, 0.0);
        for l in 1..=L_MAX {
            wz += w[l] * jet.pz[l];
            ws += w[l] * jet.ps[l];
        }
        [-2.0 * r[0] * ws, -2.0 * r[1] * ws, -wz]
    }

    pub fn field_with(&self, u: [f64; 3], r: [f64; 3]) -> Result<FieldSample, FieldError> {
        self.check_bounds(r)?;
        Ok(sample_from(self.evec_with(u, r)))
    }

    pub fn field(&self, drive: &DriveSettings, r: [f64; 3], t: f64) -> Result<FieldSample, FieldError> {
        self.field_with(drive.voltages(t), r)
    }

    /// Field, Jacobian and gradient of the modulus, no bounds check.
    pub fn jet_with(&self, u: [f64; 3], r: [f64; 3]) -> FieldJet {
        let (x, y, z) = (r[0], r[1], r[2]);
        let jet = SolidJet::new(z, x * x + y * y, true);
        let w = self.weights(u);
        let (mut wz, mut ws, mut wzz, mut wzs, mut wss) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for l in 1..=L_MAX {
            wz += w[l] * jet.pz[l];
            ws += w[l] * jet.ps[l];
            wzz += w[l] * jet.pzz[l];
            wzs += w[l] * jet.pzs[l];
            wss += w[l] * jet.pss[l];
        }
        let evec = [-2.0 * x * ws, -2.0 * y * ws, -wz];
        // Hessian of V
        let vxx = 2.0 * ws + 4.0 * x * x * wss;
        let vyy = 2.0 * ws + 4.0 * y * y * wss;
        let vxy = 4.0 * x * y * wss;
        let vxz = 2.0 * x * wzs;
        let vyz = 2.0 * y * wzs;
        let hv = [[vxx, vxy, vxz], [vxy, vyy, vyz], [vxz, vyz, wzz]];
        let mut jac = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                jac[i][j] = -hv[i][j];
            }
        }
        let sample = sample_from(evec);
        let mut grad = [0.0; 3];
        if sample.modulus > 0.0 {
            for j in 0..3 {
                grad[j] = (0..3).map(|i| evec[i] * jac[i][j]).sum::<f64>() / sample.modulus;
            }
        }
        FieldJet { sample, jac, grad_modulus: grad }
    }

    pub fn jet(&self, drive: &DriveSettings, r: [f64; 3], t: f64) -> Result<FieldJet, FieldError> {
        self.check_bounds(r)?;
        Ok(self.jet_with(drive.voltages(t), r))
    }

    /// Coefficients of the truncated two-term potential energy.
    pub fn quad_lin_coefficients(&self, drive: &DriveSettings, alpha_hz: f64) -> QuadLin {
        let alpha = crate::units::hz_to_joule(alpha_hz);
        let [v1, v2, v3] = self.v;
        let z0 = self.z0;
        let quad = alpha * 3.0 * 21f64.sqrt() / (4.0 * PI) * drive.u1 * v1[0] * v3[2] / z0.powi(4);
        let lin = alpha * 15f64.sqrt() / PI * drive.u1 * drive.u2 * v1[0] * v2[1] / z0.powi(3);
        QuadLin { quad_per_volt: quad, lin }
    }
}

fn sample_from(evec: [f64; 3]) -> FieldSample {
    let rho = (evec[0] * evec[0] + evec[1] * evec[1]).sqrt();
    let modulus = (rho * rho + evec[2] * evec[2]).sqrt();
    FieldSample { evec, modulus, theta: rho.atan2(evec[2].abs()) }
}

/// Two-term model of the trapping energy near the origin:
/// quad_per_volt * U3(t) * (2z^2 - x^2 - y^2) + lin * z, energies in J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadLin {
    /// J/m^2 per volt of U3
    pub quad_per_volt: f64,
    /// J/m
    pub lin: f64,
}

impl QuadLin {
    pub fn energy(&self, u3: f64, r: [f64; 3]) -> f64 {
        self.quad_per_volt * u3 * (2.0 * r[2] * r[2] - r[0] * r[0] - r[1] * r[1]) + self.lin * r[2]
    }
}

/// U2 [V] for which the linear energy term cancels gravity on the atom.
pub fn gravity_compensating_u2(hp: &HarmonicPotential, drive: &DriveSettings, alpha_hz: f64, mass: f64) -> f64 {
    let unit = DriveSettings { u2: 1.0, ..*drive };
    let per_volt = hp.quad_lin_coefficients(&unit, alpha_hz).lin;
    -mass * crate::units::GRAVITY / per_volt
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trap_a() -> HarmonicPotential {
        HarmonicPotential::bundled("trapA", 4.49).unwrap()
    }

    #[test]
    fn bundled_tables_parse() {
        let a = CoefficientTable::bundled("trapA").unwrap();
        assert_eq!(a.rows.len(), 4);
        assert_eq!(a.rows[0].v[0], 4.09);
        let b = CoefficientTable::bundled("trapB").unwrap();
        assert_eq!(b.rows[1].v[6], 2e-6);
        assert_eq!(b.rows[0].validity_radius, 50e-6);
    }

    #[test]
    fn field_at_origin() {
        let hp = trap_a();
        let s = hp.field_with([0.2, 0.0, 0.0], [0.0; 3]).unwrap();
        assert!((s.modulus - 400.0).abs() < 4.0, "{}", s.modulus);
        assert_eq!(s.theta, 0.0);
        let s3 = hp.field_with([0.0, 0.0, 1.0], [0.0; 3]).unwrap();
        assert!(s3.modulus < 1e-12);
    }

    #[test]
    fn potential_vanishes_at_origin() {
        let hp = trap_a();
        assert_eq!(hp.potential_with([1.0, 1.0, 1.0], [0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn out_of_bounds() {
        let hp = trap_a();
        assert!(matches!(
            hp.field_with([0.2, 0.0, 0.0], [0.0, 0.0, 401e-6]),
            Err(FieldError::OutOfBounds { .. })
        ));
    }

    #[test]
    fn eta_interpolation() {
        let t = CoefficientTable::bundled("trapA").unwrap();
        let rows: Vec<_> = t.rows.iter().filter(|r| r.k == 3).collect();
        assert_eq!(synthesize_eta(rows[0], rows[1], 1.0).unwrap(), rows[0].v);
        assert_eq!(synthesize_eta(rows[0], rows[1], 4.49).unwrap(), rows[1].v);
        let mid = synthesize_eta(rows[0], rows[1], 2.0).unwrap();
        assert!((mid[2] - (5.48 + (15.04 - 5.48) / 3.49)).abs() < 1e-12);
        assert!(matches!(synthesize_eta(rows[0], rows[0], 2.0), Err(FieldError::DegenerateEta(_))));
        let tb = CoefficientTable::bundled("trapB").unwrap();
        let hb = tb.potential(0.05).unwrap();
        assert!(hb.v[2][0].abs() < 1e-3);
    }

    #[test]
    fn parity_of_rows() {
        let hp = trap_a();
        let r = [37e-6, -81e-6, 122e-6];
        let rm = [r[0], r[1], -r[2]];
        let v2 = |r| hp.potential_with([0.0, 1.0, 0.0], r).unwrap();
        let v3 = |r| hp.potential_with([0.0, 0.0, 1.0], r).unwrap();
        assert!((v2(r) - v2(rm)).abs() < 1e-14);
        assert!((v3(r) + v3(rm)).abs() < 1e-14);
    }

    #[test]
    fn gravity_u2_for_trap_a() {
        let hp = trap_a();
        let drive = DriveSettings { u1: 0.2, u2: 0.0, u30: 0.056, omega: 2.0 * PI * 430.0, eta: 4.49 };
        let ag = crate::stark::polarizability_hz(&crate::stark::RydbergLevel::circular(50));
        let u2 = gravity_compensating_u2(&hp, &drive, ag, crate::units::MASS_RB87);
        assert!((u2 + 3e-3).abs() < 0.15 * 3e-3, "{u2}");
    }
}
