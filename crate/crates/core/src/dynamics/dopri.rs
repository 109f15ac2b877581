//! Dormand–Prince 5(4) with PI step-size control on matrix-valued states.

use crate::error::{Error, Result};
use crate::linalg::{r, CMat};

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, max_steps: 5_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrator state carried across output intervals.
pub struct Dopri<F: Fn(&CMat) -> CMat> {
    f: F,
    tol: Tolerances,
    pub t: f64,
    pub y: CMat,
    k1: CMat,
    h: f64,
    err_old: f64,
    pub stats: StepStats,
}

fn error_norm(err: &CMat, y0: &CMat, y1: &CMat, tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let sc = tol.atol + tol.rtol * a.norm().max(b.norm());
        acc += (e.norm() / sc).powi(2);
    }
    (acc / err.len() as f64).sqrt()
}

impl<F: Fn(&CMat) -> CMat> Dopri<F> {
    pub fn new(f: F, t0: f64, y0: CMat, tol: Tolerances) -> Self {
        let k1 = f(&y0);
        Self { f, tol, t: t0, y: y0, k1, h: 0.0, err_old: 1e-4, stats: StepStats::default() }
    }

    fn initial_step(&self, span: f64) -> f64 {
        let scale = |m: &CMat| {
            let mut acc = 0.0;
            for (v, y) in m.iter().zip(self.y.iter()) {
                acc += (v.norm() / (self.tol.atol + self.tol.rtol * y.norm())).powi(2);
            }
            (acc / m.len() as f64).sqrt()
        };
        let d0 = scale(&self.y);
        let d1 = scale(&self.k1);
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span)
    }

    /// Advances exactly to `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        if t_end <= self.t {
            return Ok(());
        }
        if self.h == 0.0 {
            self.h = self.initial_step(t_end - self.t);
        }
        while self.t < t_end {
            if self.stats.accepted + self.stats.rejected >= self.tol.max_steps {
                return Err(self.failure("step budget exhausted"));
            }
            let remaining = t_end - self.t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            if h < 1e-14 * self.t.abs().max(1.0) && !last {
                return Err(self.failure("step size underflow"));
            }
            let mut k: Vec<CMat> = Vec::with_capacity(7);
            k.push(self.k1.clone());
            let mut y5 = CMat::zeros(0, 0);
            for a in A.iter().skip(1) {
                y5 = self.y.clone();
                for (kj, &aj) in k.iter().zip(a.iter()) {
                    if aj != 0.0 {
                        y5 += kj * r(h * aj);
                    }
                }
                k.push((self.f)(&y5));
            }
            // The last row of A holds the fifth-order weights, so y5 is the solution
            // and k[6] its derivative (first-same-as-last).
            let mut err = CMat::zeros(self.y.nrows(), self.y.ncols());
            for (kj, &e) in k.iter().zip(E.iter()) {
                if e != 0.0 {
                    err += kj * r(h * e);
                }
            }
            let err_n = error_norm(&err, &self.y, &y5, &self.tol);
            if !err_n.is_finite() {
                return Err(self.failure("non-finite error estimate"));
            }
            if err_n <= 1.0 {
                let fac = (SAFETY * err_n.max(1e-10).powf(-ALPHA) * self.err_old.powf(BETA)).clamp(FAC_MIN, FAC_MAX);
                self.err_old = err_n.max(1e-4);
                self.t = if last { t_end } else { self.t + h };
                self.y = y5;
                self.k1 = k.pop().expect("seven stages");
                self.stats.accepted += 1;
                if !last {
                    self.h = h * fac;
                }
            } else {
                self.h = h * (SAFETY * err_n.powf(-ALPHA)).clamp(FAC_MIN, 1.0);
                self.stats.rejected += 1;
            }
        }
        Ok(())
    }

    fn failure(&self, reason: &str) -> Error {
        Error::IntegrationFailure { t: self.t, reason: reason.into(), last_state: Box::new(self.y.clone()) }
    }
}
