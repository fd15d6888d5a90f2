//! Explicit adaptive Runge–Kutta integration (Dormand–Prince 5(4))
//! with a continuous extension for event location.

use crate::error::{Error, Result};
use nalgebra::DVector;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b(5th) - b*(4th)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense-output weights
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Fourth-order continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    cont: [DVector<f64>; 5],
}

impl DenseSegment {
    /// Evaluate the interpolant at `t` inside `[t0, t0 + h]`.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        &self.cont[0]
            + theta
                * (&self.cont[1]
                    + theta1 * (&self.cont[2] + theta * (&self.cont[3] + theta1 * &self.cont[4])))
    }

    pub fn contains(&self, t: f64) -> bool {
        let (lo, hi) = if self.h >= 0.0 {
            (self.t0, self.t0 + self.h)
        } else {
            (self.t0 + self.h, self.t0)
        };
        t >= lo && t <= hi
    }
}

#[derive(Debug, Clone)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
    /// Step-size ceiling. Narrow features of the right-hand side must not
    /// fit between the stage points of a single step, or the error
    /// estimate never sees them.
    pub max_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 1_000_000,
            initial_step: None,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<DVector<f64>>,
    pub derivs: Vec<DVector<f64>>,
    pub segments: Vec<DenseSegment>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl OdeSolution {
    /// Dense evaluation anywhere in the integrated span.
    pub fn eval(&self, t: f64) -> DVector<f64> {
        if let Some(seg) = self.segments.iter().find(|s| s.contains(t)) {
            return seg.eval(t);
        }
        // clamp to nearest endpoint
        let first = self.ts.first().copied().unwrap_or(0.0);
        if (t - first).abs() <= (t - *self.ts.last().unwrap()).abs() {
            self.ys.first().unwrap().clone()
        } else {
            self.ys.last().unwrap().clone()
        }
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
pub fn integrate<F>(f: F, t0: f64, y0: DVector<f64>, t_end: f64, opts: &OdeOptions) -> Result<OdeSolution>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);

    let mut sol = OdeSolution {
        ts: vec![t],
        ys: vec![y.clone()],
        derivs: vec![k1.clone()],
        segments: Vec::new(),
        steps_accepted: 0,
        steps_rejected: 0,
    };
    if span == 0.0 {
        return Ok(sol);
    }

    let cap = opts.max_step.unwrap_or(f64::INFINITY);
    let mut h = opts
        .initial_step
        .unwrap_or_else(|| initial_step_guess(&y, &k1, opts))
        .min(span)
        .min(cap)
        * dir;

    let mut steps = 0usize;
    while dir * (t_end - t) > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::MaxSteps {
                max_steps: opts.max_steps,
            });
        }
        if h.abs() < 1e-14 * (1.0 + t.abs()) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        if dir * (t + h - t_end) > 0.0 {
            h = t_end - t;
        }

        let k2 = f(t + h * 0.2, &(&y + h * A21 * &k1));
        let k3 = f(t + h * 0.3, &(&y + h * (A31 * &k1 + A32 * &k2)));
        let k4 = f(t + h * 0.8, &(&y + h * (A41 * &k1 + A42 * &k2 + A43 * &k3)));
        let k5 = f(
            t + h * (8.0 / 9.0),
            &(&y + h * (A51 * &k1 + A52 * &k2 + A53 * &k3 + A54 * &k4)),
        );
        let k6 = f(
            t + h,
            &(&y + h * (A61 * &k1 + A62 * &k2 + A63 * &k3 + A64 * &k4 + A65 * &k5)),
        );
        let y_new = &y + h * (B1 * &k1 + B3 * &k3 + B4 * &k4 + B5 * &k5 + B6 * &k6);
        let k7 = f(t + h, &y_new);

        let err_vec = E1 * &k1 + E3 * &k3 + E4 * &k4 + E5 * &k5 + E6 * &k6 + E7 * &k7;
        let mut err = 0.0;
        for i in 0..y.len() {
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            let e = h * err_vec[i] / sc;
            err += e * e;
        }
        err = (err / y.len() as f64).sqrt();

        if err <= 1.0 {
            // accept; assemble dense coefficients
            let ydiff = &y_new - &y;
            let bspl = h * &k1 - &ydiff;
            let cont = [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                &ydiff - h * &k7 - &bspl,
                h * (D1 * &k1 + D3 * &k3 + D4 * &k4 + D5 * &k5 + D6 * &k6 + D7 * &k7),
            ];
            sol.segments.push(DenseSegment { t0: t, h, cont });

            t += h;
            y = y_new;
            k1 = k7; // FSAL
            sol.ts.push(t);
            sol.ys.push(y.clone());
            sol.derivs.push(k1.clone());
            sol.steps_accepted += 1;
        } else {
            sol.steps_rejected += 1;
        }

        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
        if h.abs() > cap {
            h = cap * dir;
        }
    }

    Ok(sol)
}

fn initial_step_guess(y: &DVector<f64>, dy: &DVector<f64>, opts: &OdeOptions) -> f64 {
    let d0 = y.norm().max(1e-8);
    let d1 = dy.norm().max(1e-8);
    (0.01 * d0 / d1).min(0.1).max(opts.abs_tol.sqrt() * 1e-2)
}
