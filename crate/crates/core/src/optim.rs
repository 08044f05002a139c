//! Scalar root bracketing, Brent's method and a Nelder-Mead simplex minimizer.

use crate::{Error, Result};

/// A root of a scalar function together with the residual at the root.
#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Stopping rule for [`brent`]: stop once `|f| <= f_tol` or the bracket is
/// narrower than `x_rel_tol * |x|`.
#[derive(Debug, Clone, Copy)]
pub struct RootTolerance {
    pub f_tol: f64,
    pub x_rel_tol: f64,
    pub max_iter: usize,
}

impl Default for RootTolerance {
    fn default() -> Self {
        Self {
            f_tol: 1e-10,
            x_rel_tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
pub fn brent<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, tol: RootTolerance) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(Root { x: a, fx: fa, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: fb, iterations: 0 });
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoSolution(format!(
            "bracket [{a}, {b}] does not contain a sign change ({fa}, {fb})"
        )));
    }
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=tol.max_iter {
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
        let tol1 = 0.5 * tol.x_rel_tol * b.abs() + f64::MIN_POSITIVE;
        let xm = 0.5 * (c - b);
        if fb.abs() <= tol.f_tol || xm.abs() <= tol1 {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if !fb.is_finite() {
            return Err(Error::Convergence(format!("function is not finite at {b}")));
        }
    }
    Err(Error::Convergence(format!(
        "Brent's method did not converge in {} iterations",
        tol.max_iter
    )))
}

/// A sign-change bracket `(lo, hi, f(lo), f(hi))` with `lo < hi`.
pub type Bracket = (f64, f64, f64, f64);

/// Expands geometrically from `x0` by `factor` until `f` changes sign, staying
/// inside `[min, max]`. `x0` must be positive.
pub fn expand_bracket<F>(mut f: F, x0: f64, factor: f64, min: f64, max: f64) -> Result<Bracket>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(x0)?;
    if f0 == 0.0 {
        return Ok((x0, x0, f0, f0));
    }
    // Walk outward in both directions until one of them crosses the root.
    let mut up = x0;
    let mut down = x0;
    loop {
        let mut progressed = false;
        if up < max {
            let next = (up * factor).min(max);
            let fv = f(next)?;
            if fv.signum() != f0.signum() {
                let lo = (up, if up == x0 { f0 } else { f(up)? });
                return Ok((lo.0, next, lo.1, fv));
            }
            up = next;
            progressed = true;
        }
        if down > min {
            let next = (down / factor).max(min);
            let fv = f(next)?;
            if fv.signum() != f0.signum() {
                let hi = if down == x0 { f0 } else { f(down)? };
                return Ok((next, down, fv, hi));
            }
            down = next;
            progressed = true;
        }
        if !progressed {
            return Err(Error::Convergence(format!(
                "no sign change found within [{min}, {max}]"
            )));
        }
    }
}

/// Options for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop when the simplex diameter is below `x_rel_tol * (1 + |x_best|)`.
    pub x_rel_tol: f64,
    /// Also stop when the spread of function values is below this.
    pub f_tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            x_rel_tol: 1e-8,
            f_tol: 1e-13,
            max_iter: 20_000,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` with the Nelder-Mead simplex method (standard coefficients,
/// non-adaptive). Non-finite values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    pts.push(x0.to_vec());
    for i in 0..d {
        let mut p = x0.to_vec();
        p[i] += if x0[i] != 0.0 { opts.initial_step * x0[i].abs().max(1.0) } else { opts.initial_step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let best = &pts[0];
        let scale = 1.0 + best.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let diameter = pts[1..]
            .iter()
            .map(|p| p.iter().zip(best).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let spread = vals[d] - vals[0];
        if vals[0].is_finite() && (diameter < opts.x_rel_tol * scale || spread.abs() < opts.f_tol) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|j| pts[..d].iter().map(|p| p[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[d])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(gamma);
            let fe = eval(&xe);
            if fe < fr {
                pts[d] = xe;
                vals[d] = fe;
            } else {
                pts[d] = xr;
                vals[d] = fr;
            }
        } else if fr < vals[d - 1] {
            pts[d] = xr;
            vals[d] = fr;
        } else {
            let (xc, fc) = if fr < vals[d] {
                let xc = along(rho);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < vals[d].min(fr) {
                pts[d] = xc;
                vals[d] = fc;
            } else {
                for i in 1..=d {
                    let shrunk: Vec<f64> = pts[0]
                        .iter()
                        .zip(&pts[i])
                        .map(|(b, p)| b + sigma * (p - b))
                        .collect();
                    vals[i] = eval(&shrunk);
                    pts[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=d).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexResult {
        x: pts[best].clone(),
        fx: vals[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let f = |x: f64| Ok(x * x * x - 2.0 * x - 5.0);
        let r = brent(f, 2.0, 3.0, f(2.0).unwrap(), f(3.0).unwrap(), RootTolerance {
            f_tol: 0.0,
            x_rel_tol: 1e-15,
            max_iter: 100,
        })
        .unwrap();
        assert!((r.x - 2.094_551_481_542_326_5).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        let f = |x: f64| Ok(x * x + 1.0);
        assert!(brent(f, -1.0, 1.0, 2.0, 2.0, RootTolerance::default()).is_err());
    }

    #[test]
    fn bracket_expands_both_ways() {
        let (lo, hi, flo, fhi) = expand_bracket(|x| Ok(5.0 - x), 1.0, 4.0, 1e-6, 1e6).unwrap();
        assert!(lo <= 5.0 && hi >= 5.0 && flo > 0.0 && fhi < 0.0);
        let (lo, hi, _, _) = expand_bracket(|x| Ok(x - 0.01), 1.0, 4.0, 1e-6, 1e6).unwrap();
        assert!(lo <= 0.01 && hi >= 0.01);
        assert!(expand_bracket(|x| Ok(x + 1.0), 1.0, 4.0, 1e-6, 1e6).is_err());
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            SimplexOptions { f_tol: 0.0, x_rel_tol: 1e-10, ..Default::default() },
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-7 && (r.x[1] - 1.0).abs() < 1e-7, "{:?}", r.x);
    }
}
