//! Hamiltonian vector fields and their flows.

mod compose;
mod growth;
mod hamiltonian;
pub mod integrator;

use std::io::Write;

use rayon::prelude::*;

use crate::chart::{Chart, EscapeRegion};
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};

pub use compose::{
    commutator_flow, commutator_flow_with_leading, commutator_generator_flow, conjugated_flow,
    pullback_hamiltonian, CommutatorGenerator,
};
pub use growth::{hamiltonian_growth_bound, linear_growth_bound, Annulus, GrowthCertificate};
pub use hamiltonian::{symplectic_gradient, HamiltonianField};
pub use integrator::StepControl;

use integrator::{integrate_adaptive, integrate_fixed, VectorField};

/// Anything whose time-t map can be evaluated: plain Hamiltonians and the
/// affine-at-infinity Hamiltonians of the experiments.
pub trait HamiltonianFlow: Send + Sync {
    fn chart(&self) -> &Chart;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Accurate time-t map.
    fn flow(&self, x: &[f64], t: f64, ctl: &StepControl) -> Result<Vec<f64>>;
    /// Fixed-step time-t map: a smooth function of `x`, for differencing
    /// compositions of flows.
    fn flow_fixed(&self, x: &[f64], t: f64, steps: usize) -> Result<Vec<f64>>;
}

struct FieldRhs<'a>(&'a HamiltonianField);

impl VectorField for FieldRhs<'_> {
    fn eval(&self, _t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let d = x.len();
        let mut stack = [0.0; 16];
        let mut heap = Vec::new();
        let g: &mut [f64] = if d <= stack.len() {
            &mut stack[..d]
        } else {
            heap.resize(d, 0.0);
            &mut heap
        };
        self.0.gradient(x, g);
        if g.iter().any(|v| !v.is_finite()) {
            return false;
        }
        self.0.chart().raise(x, g, out);
        true
    }
}

impl HamiltonianFlow for HamiltonianField {
    fn chart(&self) -> &Chart {
        HamiltonianField::chart(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        HamiltonianField::value(self, x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        HamiltonianField::gradient(self, x, out)
    }

    fn flow(&self, x: &[f64], t: f64, ctl: &StepControl) -> Result<Vec<f64>> {
        let escape = self.chart().default_escape();
        let sol = integrate_adaptive(&FieldRhs(self), x, 0.0, t, ctl, &escape, false)?;
        Ok(sol.states.into_iter().last().expect("start state"))
    }

    fn flow_fixed(&self, x: &[f64], t: f64, steps: usize) -> Result<Vec<f64>> {
        integrate_fixed(&FieldRhs(self), x, 0.0, t, steps)
    }
}

fn check_dim(chart: &Chart, x: &[f64]) -> Result<()> {
    if x.len() != chart.dim() {
        return Err(Error::InvalidDimension(format!(
            "point has {} coordinates, chart {} has {}",
            x.len(),
            chart.name(),
            chart.dim()
        )));
    }
    Ok(())
}

/// A recorded integration of `X_H` from `start`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub hamiltonian: HamiltonianField,
    pub start: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub step_control: StepControl,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn end(&self) -> &[f64] {
        self.states.last().expect("trajectory has a start state")
    }

    /// `max_t |H(x(t)) − H(start)|`.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.hamiltonian.value(&self.start);
        self.states.iter().map(|x| (self.hamiltonian.value(x) - h0).abs()).fold(0.0, f64::max)
    }

    /// Rows `t, coordinates..., H_value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend(self.hamiltonian.chart().coordinate_names().iter().cloned());
        header.push("H_value".into());
        w.write_record(&header)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            row.push(self.hamiltonian.value(x).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates `X_H` for time `t` inside the chart's default escape region.
pub fn advance_flow(h: &HamiltonianField, start: &[f64], t: f64, ctl: &StepControl) -> Result<Trajectory> {
    advance_flow_within(h, start, t, ctl, &h.chart().default_escape())
}

pub fn advance_flow_within(
    h: &HamiltonianField,
    start: &[f64],
    t: f64,
    ctl: &StepControl,
    escape: &EscapeRegion,
) -> Result<Trajectory> {
    check_dim(h.chart(), start)?;
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("flow time {t}")));
    }
    let sol = integrate_adaptive(&FieldRhs(h), start, 0.0, t, ctl, escape, true)?;
    Ok(Trajectory {
        hamiltonian: h.clone(),
        start: start.to_vec(),
        times: sol.times,
        states: sol.states,
        step_control: *ctl,
        rejected_steps: sol.rejected,
    })
}

/// Endpoints of `φ_H^t` over every grid point.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub hamiltonian: HamiltonianField,
    pub t: f64,
    pub grid: GridSpec,
    pub endpoints: Vec<Vec<f64>>,
}

impl FlowMap {
    /// Rows `coordinates..., image coordinates...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let names = self.hamiltonian.chart().coordinate_names();
        let mut header: Vec<String> = names.to_vec();
        header.extend(names.iter().map(|n| format!("{n}_t")));
        w.write_record(&header)?;
        for (i, e) in self.endpoints.iter().enumerate() {
            let row: Vec<String> = self.grid.point(i).iter().chain(e).map(|v| v.to_string()).collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn flow_map(h: &HamiltonianField, t: f64, grid: &GridSpec, ctl: &StepControl) -> Result<FlowMap> {
    if grid.dim() != h.chart().dim() {
        return Err(Error::Mismatch);
    }
    let endpoints = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            if t == 0.0 {
                Ok(x)
            } else {
                HamiltonianFlow::flow(h, &x, t, ctl)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowMap { hamiltonian: h.clone(), t, grid: grid.clone(), endpoints })
}

/// `F∘φ_H^t` sampled on `grid`.
pub fn pullback(
    f: &HamiltonianField,
    h: &dyn HamiltonianFlow,
    t: f64,
    grid: &GridSpec,
    ctl: &StepControl,
) -> Result<GridField> {
    if f.chart() != h.chart() || grid.dim() != f.chart().dim() {
        return Err(Error::Mismatch);
    }
    if t == 0.0 {
        return f.sample(grid);
    }
    let samples = (0..grid.len())
        .into_par_iter()
        .map(|i| h.flow(&grid.point(i), t, ctl).map(|y| f.value(&y)))
        .collect::<Result<Vec<_>>>()?;
    GridField::from_samples(f.chart(), grid, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::ClosedForm;
    use crate::grid::Axis;
    use std::f64::consts::{PI, TAU};

    fn oscillator() -> HamiltonianField {
        let c = make_chart("cartesian", Some(2)).unwrap();
        HamiltonianField::new(
            &c,
            ClosedForm::with_gradient(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), |x, g| g.copy_from_slice(&x[..2])),
        )
        .unwrap()
    }

    #[test]
    fn oscillator_returns_after_one_period() {
        let tr = advance_flow(&oscillator(), &[1.0, 0.5], TAU, &StepControl::default()).unwrap();
        let e = tr.end();
        assert!((e[0] - 1.0).abs() < 1e-6 && (e[1] - 0.5).abs() < 1e-6);
        assert!(tr.energy_drift() < 1e-8 * TAU);
        assert_eq!(tr.times.len(), tr.states.len());
        assert_eq!(tr.states[0], vec![1.0, 0.5]);
    }

    #[test]
    fn zero_hamiltonian_is_stationary() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let tr = advance_flow(&HamiltonianField::zero(&c), &[0.3, -0.2], 5.0, &StepControl::default()).unwrap();
        assert!(tr.states.iter().all(|s| s == &vec![0.3, -0.2]));
    }

    #[test]
    fn group_law_and_inverse() {
        let h = oscillator();
        let ctl = StepControl::default();
        let x = [0.4, 0.9];
        let a = advance_flow(&h, &x, 0.7, &ctl).unwrap();
        let b = advance_flow(&h, a.end(), 1.1, &ctl).unwrap();
        let c = advance_flow(&h, &x, 1.8, &ctl).unwrap();
        let back = advance_flow(&h, c.end(), -1.8, &ctl).unwrap();
        for k in 0..2 {
            assert!((b.end()[k] - c.end()[k]).abs() < 2e-9);
            assert!((back.end()[k] - x[k]).abs() < 2e-9);
        }
    }

    #[test]
    fn flow_map_at_zero_is_identity() {
        let g = GridSpec::new(vec![Axis::new(-1.0, 1.0, 5), Axis::new(-1.0, 1.0, 5)]).unwrap();
        let m = flow_map(&oscillator(), 0.0, &g, &StepControl::default()).unwrap();
        for (i, e) in m.endpoints.iter().enumerate() {
            assert_eq!(e, &g.point(i));
        }
        let m = flow_map(&oscillator(), PI, &g, &StepControl::default()).unwrap();
        for (i, e) in m.endpoints.iter().enumerate() {
            let p = g.point(i);
            assert!((e[0] + p[0]).abs() < 1e-8 && (e[1] + p[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn pullback_of_commuting_pair_is_unchanged() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let f = HamiltonianField::new(&c, ClosedForm::with_gradient(|x| x[1].sin(), |x, g| {
            g[0] = 0.0;
            g[1] = x[1].cos();
        }))
        .unwrap();
        let h = HamiltonianField::new(&c, ClosedForm::with_gradient(|x| x[1] * x[1], |x, g| {
            g[0] = 0.0;
            g[1] = 2.0 * x[1];
        }))
        .unwrap();
        let g = GridSpec::new(vec![Axis::new(-1.0, 1.0, 6), Axis::new(-1.0, 1.0, 6)]).unwrap();
        let pb = pullback(&f, &h, 0.8, &g, &StepControl::default()).unwrap();
        let base = f.sample(&g).unwrap();
        assert!(pb.sub(&base).unwrap().c0_norm() < 1e-8);
    }

    #[test]
    fn trajectory_csv_columns() {
        let tr = advance_flow(&oscillator(), &[1.0, 0.0], 0.1, &StepControl::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,q,p,H_value\n"));
        assert_eq!(text.lines().count(), tr.times.len() + 1);
    }
}
