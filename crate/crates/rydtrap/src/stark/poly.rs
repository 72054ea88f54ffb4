use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{RydbergLevel, StarkError};

/// Energy shift of one level as a polynomial in the field, valid on a closed interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarkPolynomial {
    pub level: RydbergLevel,
    /// c_k in Hz/(V/m)^k
    pub coeffs: Vec<f64>,
    pub e_min: f64,
    pub e_max: f64,
}

impl StarkPolynomial {
    pub fn eval(&self, e: f64) -> Result<f64, StarkError> {
        self.check(e)?;
        Ok(self.value(e))
    }

    fn check(&self, e: f64) -> Result<(), StarkError> {
        if e < self.e_min || e > self.e_max || e.is_nan() {
            return Err(StarkError::OutOfRange { field: e, lo: self.e_min, hi: self.e_max });
        }
        Ok(())
    }

    /// Horner evaluation without range check.
    pub fn value(&self, e: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * e + c)
    }

    /// First derivative [Hz/(V/m)], no range check.
    pub fn slope(&self, e: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, c)| acc * e + k as f64 * c)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub order: usize,
    pub tol_hz: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { order: 4, tol_hz: 0.5 }
    }
}

/// Least-squares polynomial through `samples` = (E [V/m], shift [Hz]).
/// Fails with the achieved residual when it exceeds the tolerance.
pub fn fit_polynomial(
    level: RydbergLevel,
    samples: &[(f64, f64)],
    opts: FitOptions,
) -> Result<StarkPolynomial, StarkError> {
    let (poly, resid) = fit_with_residual(level, samples, opts.order)?;
    if resid > opts.tol_hz {
        return Err(StarkError::FitFailure { residual_hz: resid, tol_hz: opts.tol_hz });
    }
    Ok(poly)
}

/// Fit and return the maximum absolute residual, without a tolerance check.
pub(crate) fn fit_with_residual(
    level: RydbergLevel,
    samples: &[(f64, f64)],
    order: usize,
) -> Result<(StarkPolynomial, f64), StarkError> {
    if samples.len() <= order {
        return Err(StarkError::Input(format!(
            "{} samples cannot determine an order-{order} polynomial",
            samples.len()
        )));
    }
    let e_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let e_max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let scale = e_max.abs().max(e_min.abs()).max(1e-300);
    let a = DMatrix::from_fn(samples.len(), order + 1, |i, k| (samples[i].0 / scale).powi(k as i32));
    let b = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let svd = a.svd(true, true);
    let x = svd
        .solve(&b, 1e-14)
        .map_err(|e| StarkError::Input(format!("least squares failed: {e}")))?;
    let coeffs: Vec<f64> = x.iter().enumerate().map(|(k, c)| c / scale.powi(k as i32)).collect();
    let poly = StarkPolynomial { level, coeffs, e_min, e_max };
    let resid = samples
        .iter()
        .map(|&(e, y)| (poly.value(e) - y).abs())
        .fold(0.0, f64::max);
    Ok((poly, resid))
}

#[derive(Debug, Serialize, Deserialize)]
struct PolyRow {
    n: u32,
    n1: u32,
    m: i32,
    c0: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    c4: f64,
    #[serde(rename = "Emin")]
    e_min: f64,
    #[serde(rename = "Emax")]
    e_max: f64,
}

pub fn write_polynomials_csv<W: Write>(w: W, polys: &[StarkPolynomial]) -> Result<(), StarkError> {
    let mut wtr = csv::Writer::from_writer(w);
    for p in polys {
        if p.order() > 4 {
            return Err(StarkError::Input("CSV schema holds at most c0..c4".into()));
        }
        let c = |k: usize| p.coeffs.get(k).copied().unwrap_or(0.0);
        wtr.serialize(PolyRow {
            n: p.level.n,
            n1: p.level.n1,
            m: p.level.m,
            c0: c(0),
            c1: c(1),
            c2: c(2),
            c3: c(3),
            c4: c(4),
            e_min: p.e_min,
            e_max: p.e_max,
        })
        .map_err(|e| StarkError::Input(e.to_string()))?;
    }
    wtr.flush().map_err(|e| StarkError::Input(e.to_string()))
}

pub fn read_polynomials_csv<R: Read>(r: R) -> Result<Vec<StarkPolynomial>, StarkError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize::<PolyRow>()
        .map(|row| {
            let row = row.map_err(|e| StarkError::Input(e.to_string()))?;
            Ok(StarkPolynomial {
                level: RydbergLevel::new(row.n, row.n1, row.m)?,
                coeffs: vec![row.c0, row.c1, row.c2, row.c3, row.c4],
                e_min: row.e_min,
                e_max: row.e_max,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_level_fits_to_zero() {
        let s: Vec<_> = (0..60).map(|i| (i as f64 * 1000.0 / 59.0, 0.0)).collect();
        let p = fit_polynomial(RydbergLevel::circular(50), &s, FitOptions::default()).unwrap();
        assert!(p.coeffs.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn csv_round_trip() {
        let p = StarkPolynomial {
            level: RydbergLevel::circular(50),
            coeffs: vec![0.0, 1e-3, -203.27, 1e-7, -9.7e-8],
            e_min: 0.0,
            e_max: 1000.0,
        };
        let mut buf = Vec::new();
        write_polynomials_csv(&mut buf, std::slice::from_ref(&p)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,n1,m,c0,c1,c2,c3,c4,Emin,Emax"));
        let back = read_polynomials_csv(buf.as_slice()).unwrap();
        assert_eq!(back, vec![p]);
    }

    #[test]
    fn range_is_enforced() {
        let p = StarkPolynomial { level: RydbergLevel::circular(50), coeffs: vec![1.0], e_min: 0.0, e_max: 10.0 };
        assert!(p.eval(11.0).is_err());
        assert_eq!(p.eval(5.0).unwrap(), 1.0);
    }
}
