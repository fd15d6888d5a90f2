//! Bracketed scalar root finding: regula falsi with Illinois damping and
//! a bisection safeguard.

use crate::error::{Error, Result};

/// Find a root between a sign-separated pair of evaluated points.
/// `neg` carries g ≤ 0, `pos` carries g ≥ 0 (their order on the axis is
/// arbitrary). Terminates as soon as `|g(x)| <= f_tol`.
pub fn illinois_from<F: FnMut(f64) -> f64>(
    mut f: F,
    neg: (f64, f64),
    pos: (f64, f64),
    f_tol: f64,
) -> Result<f64> {
    let (mut a, mut ga) = neg;
    let (mut b, mut gb) = pos;
    if ga.abs() <= f_tol {
        return Ok(a);
    }
    if gb.abs() <= f_tol {
        return Ok(b);
    }
    if ga > 0.0 || gb < 0.0 {
        return Err(Error::Bracket { lo: a, hi: b });
    }

    // side ∈ {-1, +1}: which end was retained last; repeated retention
    // halves its residual (Illinois damping)
    let mut side = 0i8;
    for _ in 0..200 {
        let denom = gb - ga;
        let mut s = if denom != 0.0 {
            (a * gb - b * ga) / denom
        } else {
            0.5 * (a + b)
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let width = hi - lo;
        if !(s > lo + 1e-3 * width && s < hi - 1e-3 * width) {
            s = 0.5 * (lo + hi);
        }
        let gs = f(s);
        if !gs.is_finite() {
            return Err(Error::RootTolerance {
                residual: f64::NAN,
                tol: f_tol,
            });
        }
        if gs.abs() <= f_tol {
            return Ok(s);
        }
        if gs < 0.0 {
            a = s;
            ga = gs;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = s;
            gb = gs;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
            let (x, g) = if ga.abs() < gb.abs() { (a, ga) } else { (b, gb) };
            if g.abs() <= f_tol.max(1e3 * f64::EPSILON * (1.0 + g.abs())) {
                return Ok(x);
            }
            return Err(Error::RootTolerance {
                residual: g.abs(),
                tol: f_tol,
            });
        }
    }
    let g = ga.abs().min(gb.abs());
    Err(Error::RootTolerance {
        residual: g,
        tol: f_tol,
    })
}

/// Find a root of `f` in `[lo, hi]`; the ends must not share a strict
/// sign.
pub fn bracketed<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, f_tol: f64) -> Result<f64> {
    let glo = f(lo);
    if glo.abs() <= f_tol {
        return Ok(lo);
    }
    let ghi = f(hi);
    if ghi.abs() <= f_tol {
        return Ok(hi);
    }
    if glo < 0.0 {
        illinois_from(f, (lo, glo), (hi, ghi), f_tol)
    } else {
        illinois_from(f, (hi, ghi), (lo, glo), f_tol)
    }
}
