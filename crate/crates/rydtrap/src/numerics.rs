//! Small scalar solvers shared by the physics modules.

/// Brent's method on a bracket with f(a) f(b) <= 0. Returns None when the
/// bracket does not straddle a root.
pub fn brent<F: FnMut(f64) -> Result<f64, E>, E>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<Option<f64>, E> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(Some(b));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)), (q - 1.0) * (r - 1.0) * (s - 1.0))
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok(Some(b))
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_min<F: FnMut(f64) -> Result<f64, E>, E>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64), E> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Five-point central first and second derivatives from samples at x0 + k h, k = -2..2.
pub fn stencil5(f: [f64; 5], h: f64) -> (f64, f64) {
    let d1 = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
    let d2 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| Ok::<_, ()>(x * x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap().unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
        assert!(brent(|x| Ok::<_, ()>(x * x + 1.0), -1.0, 1.0, 1e-12, 50).unwrap().is_none());
    }

    #[test]
    fn golden_parabola() {
        let (x, _) = golden_min(|x| Ok::<_, ()>((x - 0.3) * (x - 0.3)), -1.0, 2.0, 1e-10).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn stencil_on_quartic() {
        let p = |x: f64| 1.0 + 2.0 * x - 3.0 * x * x + 0.5 * x.powi(3);
        let h = 0.25;
        let (d1, d2) = stencil5([-2.0, -1.0, 0.0, 1.0, 2.0].map(|k| p(1.0 + k * h)), h);
        assert!((d1 - (2.0 - 6.0 + 1.5)).abs() < 1e-10);
        assert!((d2 - (-6.0 + 3.0)).abs() < 1e-10);
    }
}
