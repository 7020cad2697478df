//! Compositions of flows: conjugation, commutators and the generator of a
//! commutator flow.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::ClosedForm;

use super::integrator::{integrate_fixed, VectorField};
use super::{HamiltonianField, HamiltonianFlow, StepControl};

/// `φ_g^{−s} ∘ φ_f^t ∘ φ_g^s (start)`.
pub fn conjugated_flow(
    f: &dyn HamiltonianFlow,
    g: &dyn HamiltonianFlow,
    s: f64,
    t: f64,
    start: &[f64],
    ctl: &StepControl,
) -> Result<Vec<f64>> {
    let y = g.flow(start, s, ctl)?;
    let y = f.flow(&y, t, ctl)?;
    g.flow(&y, -s, ctl)
}

/// The Hamiltonian `f∘φ_g^s`, whose flow is the conjugated flow. The inner
/// flow uses `steps` fixed RK4 steps so that the composite is smooth and
/// its gradient can be taken by central differences.
pub fn pullback_hamiltonian<G>(f: &HamiltonianField, g: &Arc<G>, s: f64, steps: usize) -> HamiltonianField
where
    G: HamiltonianFlow + 'static,
{
    let (f2, g2) = (f.clone(), Arc::clone(g));
    let form = ClosedForm::new(move |x| match g2.flow_fixed(x, s, steps) {
        Ok(y) => f2.value(&y),
        Err(_) => f64::NAN,
    });
    HamiltonianField::new_unchecked(f.chart(), form).with_fd_step(1e-6)
}

/// `ψ = φ_H^t ∘ φ_K^s ∘ φ_H^{−t} ∘ φ_K^{−s}`, applied right to left.
pub fn commutator_flow(
    h: &dyn HamiltonianFlow,
    k: &dyn HamiltonianFlow,
    s: f64,
    t: f64,
    start: &[f64],
    ctl: &StepControl,
) -> Result<Vec<f64>> {
    if s == 0.0 || t == 0.0 {
        return Ok(start.to_vec());
    }
    let y = k.flow(start, -s, ctl)?;
    let y = h.flow(&y, -t, ctl)?;
    let y = k.flow(&y, s, ctl)?;
    h.flow(&y, t, ctl)
}

/// `φ_G^{−ts} ∘ ψ`.
pub fn commutator_flow_with_leading(
    g: &dyn HamiltonianFlow,
    h: &dyn HamiltonianFlow,
    k: &dyn HamiltonianFlow,
    s: f64,
    t: f64,
    start: &[f64],
    ctl: &StepControl,
) -> Result<Vec<f64>> {
    let y = commutator_flow(h, k, s, t, start, ctl)?;
    g.flow(&y, -t * s, ctl)
}

/// Time-dependent Hamiltonian `Γ_t` generating `t ↦ ψ_t` for fixed `s`:
///
/// `Γ_t(x) = ∫₀ˢ {H,K}(φ_K^{σ−s} φ_H^{−t} x) dσ`,
///
/// with Simpson quadrature in σ and fixed-step inner flows.
pub struct CommutatorGenerator<'a> {
    pub h: &'a dyn HamiltonianFlow,
    pub k: &'a dyn HamiltonianFlow,
    pub s: f64,
    pub panels: usize,
    /// Fixed RK4 steps per unit time for the inner flows.
    pub steps_per_unit: f64,
    pub fd_step: f64,
}

impl<'a> CommutatorGenerator<'a> {
    pub fn new(h: &'a dyn HamiltonianFlow, k: &'a dyn HamiltonianFlow, s: f64) -> Self {
        CommutatorGenerator { h, k, s, panels: 64, steps_per_unit: 200.0, fd_step: 1e-5 }
    }

    fn steps_for(&self, t: f64) -> usize {
        ((t.abs() * self.steps_per_unit).ceil() as usize).max(4)
    }

    fn bracket_at(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
        self.h.gradient(x, &mut a);
        self.k.gradient(x, &mut b);
        self.h.chart().contract(x, &a, &b)
    }

    /// `Γ_t(x)`; NaN when an inner flow fails.
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let n = self.panels + self.panels % 2;
        let y = match self.h.flow_fixed(x, -t, self.steps_for(t)) {
            Ok(y) => y,
            Err(_) => return f64::NAN,
        };
        // Nodes σᵢ = i·s/n; march from σ = s (no K-flow) down to σ = 0.
        let dsig = self.s / n as f64;
        let sub = self.steps_for(dsig);
        let mut z = y;
        let mut sum = 0.0;
        for i in (0..=n).rev() {
            if i < n {
                z = match self.k.flow_fixed(&z, -dsig, sub) {
                    Ok(v) => v,
                    Err(_) => return f64::NAN,
                };
            }
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.bracket_at(&z);
        }
        sum * dsig / 3.0
    }
}

struct GeneratorRhs<'g, 'a>(&'g CommutatorGenerator<'a>);

impl VectorField for GeneratorRhs<'_, '_> {
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        let d = x.len();
        let mut grad = vec![0.0; d];
        let mut y = x.to_vec();
        for k in 0..d {
            let h = self.0.fd_step * x[k].abs().max(1.0);
            y[k] = x[k] + h;
            let fp = self.0.value(t, &y);
            y[k] = x[k] - h;
            let fm = self.0.value(t, &y);
            y[k] = x[k];
            grad[k] = (fp - fm) / (2.0 * h);
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return false;
        }
        self.0.h.chart().raise(x, &grad, out);
        true
    }
}

/// Flows the time-dependent generator from 0 to `t` with `steps` RK4 steps.
pub fn commutator_generator_flow(gen: &CommutatorGenerator<'_>, t: f64, start: &[f64], steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("generator flow needs at least one step".into()));
    }
    integrate_fixed(&GeneratorRhs(gen), start, 0.0, t, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::TestFunction;

    fn bump(center: Vec<f64>, radius: f64, scale: f64) -> HamiltonianField {
        let c = make_chart("cartesian", Some(2)).unwrap();
        HamiltonianField::new(&c, TestFunction::new(center, radius).closed_form().scale(scale)).unwrap()
    }

    #[test]
    fn commutator_of_a_flow_with_itself_is_identity() {
        let h = bump(vec![0.1, 0.0], 1.0, 1.0);
        let ctl = StepControl::default();
        let y = commutator_flow(&h, &h, 0.4, 0.3, &[0.2, 0.1], &ctl).unwrap();
        assert!((y[0] - 0.2).abs() < 1e-8 && (y[1] - 0.1).abs() < 1e-8);
        assert_eq!(commutator_flow(&h, &h, 0.0, 0.3, &[0.2, 0.1], &ctl).unwrap(), vec![0.2, 0.1]);
    }

    #[test]
    fn conjugation_trivial_cases() {
        let f = bump(vec![0.0, 0.0], 1.0, 1.0);
        let g = bump(vec![0.3, 0.0], 1.0, 2.0);
        let ctl = StepControl::default();
        let x = [0.1, 0.2];
        let a = conjugated_flow(&f, &g, 0.0, 0.5, &x, &ctl).unwrap();
        let b = HamiltonianFlow::flow(&f, &x, 0.5, &ctl).unwrap();
        assert_eq!(a, b);
        let c = conjugated_flow(&f, &g, 0.7, 0.0, &x, &ctl).unwrap();
        assert!((c[0] - x[0]).abs() < 1e-8 && (c[1] - x[1]).abs() < 1e-8);
    }

    #[test]
    fn conjugated_flow_matches_pullback_hamiltonian() {
        let f = bump(vec![0.0, 0.0], 1.0, 1.0);
        let g = Arc::new(bump(vec![0.3, -0.2], 1.2, 1.5));
        let ctl = StepControl::with_tol(1e-11);
        let x = [0.15, 0.1];
        let a = conjugated_flow(&f, g.as_ref(), 0.4, 0.6, &x, &ctl).unwrap();
        let k = pullback_hamiltonian(&f, &g, 0.4, 400);
        let b = HamiltonianFlow::flow(&k, &x, 0.6, &ctl).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-5 && (a[1] - b[1]).abs() < 1e-5, "{a:?} {b:?}");
    }

    #[test]
    fn generator_reproduces_commutator_flow() {
        let h = bump(vec![0.0, 0.0], 1.0, 1.0);
        let k = bump(vec![0.3, 0.1], 1.0, 1.0);
        let (s, t) = (0.3, 0.3);
        let ctl = StepControl::with_tol(1e-12);
        let gen = CommutatorGenerator::new(&h, &k, s);
        for x in [[0.1, 0.05], [-0.2, 0.3], [0.4, -0.1]] {
            let a = commutator_flow(&h, &k, s, t, &x, &ctl).unwrap();
            let b = commutator_generator_flow(&gen, t, &x, 30).unwrap();
            assert!((a[0] - b[0]).abs() < 1e-4 && (a[1] - b[1]).abs() < 1e-4, "{a:?} {b:?}");
        }
    }
}
