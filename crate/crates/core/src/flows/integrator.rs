//! Classical RK4 with step-doubling error control, plus a fixed-step
//! variant whose output is a smooth function of the start point.

use serde::{Deserialize, Serialize};

use crate::chart::EscapeRegion;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt_init: f64,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { dt_init: 1e-2, tol: 1e-10, max_steps: 2_000_000 }
    }
}

impl StepControl {
    pub fn with_tol(tol: f64) -> Self {
        StepControl { tol, ..Self::default() }
    }
}

/// Right-hand side `ẋ = v(t, x)`; returns `false` when `v` is not finite.
pub trait VectorField: Sync {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool;
}

impl<F> VectorField for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> bool + Sync,
{
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        self(t, x, out)
    }
}

struct Stages {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(d: usize) -> Self {
        Stages { k: std::array::from_fn(|_| vec![0.0; d]), tmp: vec![0.0; d] }
    }
}

fn rk4_step(f: &dyn VectorField, t: f64, y: &[f64], h: f64, s: &mut Stages, out: &mut [f64]) -> Result<()> {
    let d = y.len();
    let bad = || Error::NonFiniteGradient(y.to_vec());
    if !f.eval(t, y, &mut s.k[0]) {
        return Err(bad());
    }
    for i in 0..d {
        s.tmp[i] = y[i] + 0.5 * h * s.k[0][i];
    }
    let (k0, rest) = s.k.split_at_mut(1);
    let _ = k0;
    if !f.eval(t + 0.5 * h, &s.tmp, &mut rest[0]) {
        return Err(bad());
    }
    for i in 0..d {
        s.tmp[i] = y[i] + 0.5 * h * rest[0][i];
    }
    if !f.eval(t + 0.5 * h, &s.tmp, &mut rest[1]) {
        return Err(bad());
    }
    for i in 0..d {
        s.tmp[i] = y[i] + h * rest[1][i];
    }
    if !f.eval(t + h, &s.tmp, &mut rest[2]) {
        return Err(bad());
    }
    for i in 0..d {
        out[i] = y[i] + h / 6.0 * (s.k[0][i] + 2.0 * s.k[1][i] + 2.0 * s.k[2][i] + s.k[3][i]);
    }
    Ok(())
}

/// Result of an adaptive integration.
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub rejected: usize,
}

/// Adaptive RK4 from `t0` to `t1` (either direction). Local error is
/// estimated by step doubling and the accepted state is the
/// Richardson-extrapolated one. Every accepted state must lie in `escape`.
pub fn integrate_adaptive(
    f: &dyn VectorField,
    start: &[f64],
    t0: f64,
    t1: f64,
    ctl: &StepControl,
    escape: &EscapeRegion,
    record: bool,
) -> Result<Solution> {
    let d = start.len();
    let mut times = vec![t0];
    let mut states = vec![start.to_vec()];
    if t1 == t0 {
        return Ok(Solution { times, states, rejected: 0 });
    }
    let dir = (t1 - t0).signum();
    let span = (t1 - t0).abs();
    let mut h = ctl.dt_init.abs().min(span) * dir;
    let mut t = t0;
    let mut y = start.to_vec();
    let mut st = Stages::new(d);
    let (mut full, mut half, mut two_half) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut rejected = 0;
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        if steps >= ctl.max_steps {
            return Err(Error::MaxSteps(ctl.max_steps));
        }
        steps += 1;
        let last = (t + h - t1) * dir >= 0.0;
        if last {
            h = t1 - t;
        }
        if h.abs() < 1e-13 * (1.0 + t.abs()) && !last {
            return Err(Error::StepUnderflow { t, h });
        }
        rk4_step(f, t, &y, h, &mut st, &mut full)?;
        rk4_step(f, t, &y, 0.5 * h, &mut st, &mut half)?;
        rk4_step(f, t + 0.5 * h, &half, 0.5 * h, &mut st, &mut two_half)?;
        let err = (0..d)
            .map(|i| (two_half[i] - full[i]).abs() / (15.0 * (1.0 + two_half[i].abs())))
            .fold(0.0, f64::max);
        if !err.is_finite() {
            return Err(Error::NonFiniteGradient(y.clone()));
        }
        if err <= ctl.tol {
            t = if last { t1 } else { t + h };
            for i in 0..d {
                y[i] = two_half[i] + (two_half[i] - full[i]) / 15.0;
            }
            if !escape.contains(&y) {
                return Err(Error::Escape { t, state: y });
            }
            if record {
                times.push(t);
                states.push(y.clone());
            }
        } else {
            rejected += 1;
        }
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (ctl.tol / err).powf(0.2)).clamp(0.2, 4.0) };
        h *= factor;
        if h.abs() < 1e-13 * (1.0 + t.abs()) && (t1 - t) * dir > 0.0 {
            return Err(Error::StepUnderflow { t, h });
        }
    }
    if !record {
        times.push(t);
        states.push(y);
    }
    Ok(Solution { times, states, rejected })
}

/// `steps` classical RK4 steps from `t0` to `t1`.
pub fn integrate_fixed(f: &dyn VectorField, start: &[f64], t0: f64, t1: f64, steps: usize) -> Result<Vec<f64>> {
    let d = start.len();
    let mut y = start.to_vec();
    if t0 == t1 || steps == 0 {
        return Ok(y);
    }
    let h = (t1 - t0) / steps as f64;
    let mut st = Stages::new(d);
    let mut next = vec![0.0; d];
    for k in 0..steps {
        rk4_step(f, t0 + k as f64 * h, &y, h, &mut st, &mut next)?;
        std::mem::swap(&mut y, &mut next);
    }
    Ok(y)
}
