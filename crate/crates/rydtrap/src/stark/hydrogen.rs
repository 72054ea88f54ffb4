//! Hydrogen radial integrals, angular factors and the parabolic/spherical
//! change of basis.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const LN_FACT_MAX: usize = 1024;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; LN_FACT_MAX + 1];
        for k in 1..=LN_FACT_MAX {
            t[k] = t[k - 1] + (k as f64).ln();
        }
        t
    })
}

/// ln(k!)
pub fn ln_factorial(k: usize) -> f64 {
    assert!(k <= LN_FACT_MAX, "factorial argument {k} too large");
    ln_fact_table()[k]
}

/// Gauss-Laguerre rule for weight e^-x on [0, inf). Weights are kept as logs
/// because the outer ones underflow quickly.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub x: Vec<f64>,
    pub ln_w: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut ln_w = vec![0.0; n];
        let mut z = 0.0_f64;
        for i in 0..n {
            if i == 0 {
                z = 3.0 / (1.0 + 2.4 * nf);
            } else if i == 1 {
                z += 15.0 / (1.0 + 2.5 * nf);
            } else {
                let ai = (i - 1) as f64;
                z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - x[i - 2]);
            }
            let mut pp;
            let mut p2;
            for _ in 0..100 {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
                }
                pp = (nf * p1 - nf * p2) / z;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs() {
                    break;
                }
            }
            // recompute with the converged node for the weight
            let mut p1 = 1.0;
            p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0 - z) * p2 - jf * p3) / (jf + 1.0);
            }
            pp = (nf * p1 - nf * p2) / z;
            x[i] = z;
            ln_w[i] = (-1.0 / (pp * nf * p2)).ln();
        }
        Self { x, ln_w }
    }

    /// Shared rule exact for polynomials up to degree `degree`.
    pub fn for_degree(degree: usize) -> Arc<GaussLaguerre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLaguerre>>>> = OnceLock::new();
        let n = degree / 2 + 2;
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLaguerre::new(n)))
            .clone()
    }
}

/// Generalized Laguerre polynomial L_k^alpha(x) by upward recurrence.
pub fn laguerre(k: usize, alpha: f64, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0;
    let mut l = 1.0 + alpha - x;
    for j in 1..k {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + alpha - x) * l - (jf + alpha) * lm1) / (jf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// ln of the radial normalization constant of R_nl.
fn ln_norm(n: u32, l: u32) -> f64 {
    let nf = n as f64;
    0.5 * (3.0 * (2.0 / nf).ln() + ln_factorial((n - l - 1) as usize)
        - (2.0 * nf).ln()
        - ln_factorial((n + l) as usize))
}

/// Polynomial part of R_nl(r) (everything but e^{-r/n}), returned as (sign, ln|value|).
fn radial_poly(n: u32, l: u32, r: f64) -> (f64, f64) {
    let nf = n as f64;
    let rho = 2.0 * r / nf;
    let lag = laguerre((n - l - 1) as usize, (2 * l + 1) as f64, rho);
    let sign = if lag < 0.0 { -1.0 } else { 1.0 };
    (sign, ln_norm(n, l) + l as f64 * rho.ln() + lag.abs().ln())
}

/// Normalized hydrogen radial function R_nl(r), r in Bohr radii.
pub fn radial_wavefunction(n: u32, l: u32, r: f64) -> f64 {
    if r == 0.0 {
        return if l == 0 { ln_norm(n, 0).exp() * laguerre((n - 1) as usize, 1.0, 0.0) } else { 0.0 };
    }
    let (s, ln) = radial_poly(n, l, r);
    s * (ln - r / n as f64).exp()
}

/// Radial integral <n l| r^p |n2 l2> in atomic units.
pub fn radial_integral(n: u32, l: u32, n2: u32, l2: u32, p: i32) -> f64 {
    assert!(l < n && l2 < n2);
    let degree = (n + n2) as i32 + p;
    assert!(degree >= 0, "negative powers are not supported");
    let rule = GaussLaguerre::for_degree(degree as usize);
    let a = 1.0 / n as f64 + 1.0 / n2 as f64;
    let mut sum = 0.0;
    for (x, lw) in rule.x.iter().zip(&rule.ln_w) {
        let r = x / a;
        let (s1, l1) = radial_poly(n, l, r);
        let (s2, l2v) = radial_poly(n2, l2, r);
        sum += s1 * s2 * (lw + l1 + l2v + (2 + p) as f64 * r.ln()).exp();
    }
    sum / a
}

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | j m> with all arguments doubled.
pub fn clebsch_gordan(j1: i64, m1: i64, j2: i64, m2: i64, j: i64, m: i64) -> f64 {
    if m1 + m2 != m || m1.abs() > j1 || m2.abs() > j2 || m.abs() > j {
        return 0.0;
    }
    if j > j1 + j2 || j < (j1 - j2).abs() {
        return 0.0;
    }
    let half = |v: i64| -> Option<usize> {
        if v < 0 || v % 2 != 0 {
            None
        } else {
            Some((v / 2) as usize)
        }
    };
    let (a, b, c, d) = match (half(j + j1 - j2), half(j - j1 + j2), half(j1 + j2 - j), half(j1 + j2 + j + 2)) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return 0.0,
    };
    let f = |v: i64| ln_factorial(half(v).expect("parity checked above"));
    let pre = 0.5
        * (((j + 1) as f64).ln() + ln_factorial(a) + ln_factorial(b) + ln_factorial(c) - ln_factorial(d)
            + f(j + m)
            + f(j - m)
            + f(j1 - m1)
            + f(j1 + m1)
            + f(j2 - m2)
            + f(j2 + m2));
    let mut sum = 0.0;
    let mut k = 0i64;
    loop {
        let args = [
            j1 + j2 - j - 2 * k,
            j1 - m1 - 2 * k,
            j2 + m2 - 2 * k,
            j - j2 + m1 + 2 * k,
            j - j1 - m2 + 2 * k,
        ];
        if args[0] < 0 || args[1] < 0 || args[2] < 0 {
            break;
        }
        if args[3] >= 0 && args[4] >= 0 {
            let den = ln_factorial(k as usize) + args.iter().map(|&v| f(v)).sum::<f64>();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (pre - den).exp();
        }
        k += 1;
    }
    sum
}

/// Angular part of <l2 m2 | C^1_q | l m>, where C^1 is the rank-one
/// renormalized spherical harmonic (C^1_0 = cos theta).
pub fn angular_factor(l2: u32, m2: i32, l: u32, m: i32, q: i32) -> f64 {
    if m2 != m + q || (l2 as i64 - l as i64).abs() != 1 {
        return 0.0;
    }
    let ratio = ((2 * l + 1) as f64 / (2 * l2 + 1) as f64).sqrt();
    ratio
        * clebsch_gordan(2 * l as i64, 2 * m as i64, 2, 2 * q as i64, 2 * l2 as i64, 2 * m2 as i64)
        * clebsch_gordan(2 * l as i64, 0, 2, 0, 2 * l2 as i64, 0)
}

/// Closed form of <l m| cos theta |l+1 m>.
pub fn cos_theta_up(l: u32, m: i32) -> f64 {
    let (l, m) = (l as f64, m as f64);
    (((l + 1.0).powi(2) - m * m) / ((2.0 * l + 1.0) * (2.0 * l + 3.0))).sqrt()
}

/// Dipole component <n2 l2 m2 | r_q | n l m> between spherical states.
pub fn spherical_dipole(n2: u32, l2: u32, m2: i32, n: u32, l: u32, m: i32, q: i32) -> f64 {
    let ang = angular_factor(l2, m2, l, m, q);
    if ang == 0.0 {
        return 0.0;
    }
    ang * radial_integral(n2, l2, n, l, 1)
}

/// Expansion of the parabolic state |n n1 n2 m> on spherical states |n l m>,
/// returned as (l, coefficient) for l = |m| .. n-1.
pub fn parabolic_expansion(n: u32, n1: u32, m: i32) -> Vec<(u32, f64)> {
    let am = m.unsigned_abs();
    assert!(n1 + am < n, "invalid parabolic labels");
    let n2 = n - am - 1 - n1;
    let j = n as i64 - 1;
    let m1 = m as i64 + n1 as i64 - n2 as i64;
    let m2 = m as i64 - n1 as i64 + n2 as i64;
    (am..n)
        .map(|l| {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            (l, sign * clebsch_gordan(j, m1, j, m2, 2 * l as i64, 2 * m as i64))
        })
        .collect()
}
