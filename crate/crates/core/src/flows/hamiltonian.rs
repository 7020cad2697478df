use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::function::ClosedForm;
use crate::grid::{sample_field, GridField, GridSpec};

const PROBE_POINTS: usize = 100;
const PROBE_SEED: u64 = 0x5eed_f10e;
const GRADIENT_TOL: f64 = 1e-6;

/// A Hamiltonian on a chart. When the closed form has no analytic gradient,
/// gradients come from central differences with step `fd_step`.
#[derive(Clone, Debug)]
pub struct HamiltonianField {
    chart: Chart,
    form: ClosedForm,
    fd_step: f64,
}

impl HamiltonianField {
    /// Builds the field, checking an analytic gradient against central
    /// differences at seeded probe points of the chart's probe box.
    pub fn new(chart: &Chart, form: ClosedForm) -> Result<Self> {
        let h = HamiltonianField::new_unchecked(chart, form);
        if h.form.has_gradient() {
            h.check_gradient()?;
        }
        Ok(h)
    }

    /// Skips the probe check; for combinations of already-checked fields.
    pub fn new_unchecked(chart: &Chart, form: ClosedForm) -> Self {
        HamiltonianField { chart: chart.clone(), form, fd_step: 1e-5 }
    }

    pub fn zero(chart: &Chart) -> Self {
        Self::new_unchecked(chart, ClosedForm::zero())
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    fn check_gradient(&self) -> Result<()> {
        let d = self.chart.dim();
        let bounds = self.chart.probe_box();
        let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
        let (mut x, mut g, mut fd) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut worst: f64 = 0.0;
        for _ in 0..PROBE_POINTS {
            for (v, (lo, hi)) in x.iter_mut().zip(&bounds) {
                *v = rng.gen_range(*lo..*hi);
            }
            self.form.gradient_into(&x, &mut g);
            self.central_difference(&x, &mut fd);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
            worst = worst.max(err);
        }
        if worst > GRADIENT_TOL {
            Err(Error::GradientMismatch(worst))
        } else {
            Ok(())
        }
    }

    fn central_difference(&self, x: &[f64], out: &mut [f64]) {
        let mut y = x.to_vec();
        for (k, o) in out.iter_mut().enumerate() {
            let h = self.fd_step;
            y[k] = x[k] + h;
            let fp = self.form.eval(&y);
            y[k] = x[k] - h;
            let fm = self.form.eval(&y);
            y[k] = x[k];
            *o = (fp - fm) / (2.0 * h);
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn form(&self) -> &ClosedForm {
        &self.form
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.form.has_gradient()
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.form.eval(x)
    }

    #[inline]
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        if !self.form.gradient_into(x, out) {
            self.central_difference(x, out);
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Result<GridField> {
        sample_field(&self.chart, grid, &self.form)
    }

    pub fn scale(&self, k: f64) -> Self {
        HamiltonianField { form: self.form.scale(k), ..self.clone() }
    }

    /// `Σ λᵢ Hᵢ` on a common chart.
    pub fn linear_combination(chart: &Chart, terms: &[(f64, &HamiltonianField)]) -> Result<Self> {
        if terms.iter().any(|(_, h)| h.chart != *chart) {
            return Err(Error::Mismatch);
        }
        let forms: Vec<(f64, ClosedForm)> = terms.iter().map(|(l, h)| (*l, h.form.clone())).collect();
        Ok(Self::new_unchecked(chart, ClosedForm::linear_combination(&forms)))
    }
}

/// `X_H(x) = Π(x)∇H(x)` under the crate's sign convention.
pub fn symplectic_gradient(h: &HamiltonianField, x: &[f64]) -> Result<Vec<f64>> {
    let d = h.chart.dim();
    let mut g = vec![0.0; d];
    h.gradient(x, &mut g);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient(x.to_vec()));
    }
    let mut out = vec![0.0; d];
    h.chart.raise(x, &g, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;

    #[test]
    fn oscillator_gradient_is_rotation() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let h = HamiltonianField::new(
            &c,
            ClosedForm::with_gradient(
                |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
                |x, g| g.copy_from_slice(&x[..2]),
            ),
        )
        .unwrap();
        let v = symplectic_gradient(&h, &[1.0, 0.0]).unwrap();
        assert_eq!(v, vec![0.0, -1.0]);
        let dh = 1.0 * v[0] + 0.0 * v[1];
        assert!(dh.abs() < 1e-10);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let c = make_chart("polar", None).unwrap();
        let h = HamiltonianField::new(&c, ClosedForm::constant(4.0)).unwrap();
        assert_eq!(symplectic_gradient(&h, &[0.7, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn wrong_gradient_is_rejected() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let bad = ClosedForm::with_gradient(|x| x[0] * x[1], |x, g| {
            g[0] = x[1];
            g[1] = 2.0 * x[0];
        });
        assert!(matches!(HamiltonianField::new(&c, bad), Err(Error::GradientMismatch(_))));
    }

    #[test]
    fn cylinder_gradient_components() {
        // ρ(f) = e^{s/2} cos(nθ)/√n: X = (−√n e^{−s/2} sin nθ) ∂s + (−e^{−s/2} cos nθ /(2√n)) ∂θ.
        let c = make_chart("cylinder", None).unwrap();
        let n = 4.0f64;
        let rn = n.sqrt();
        let h = HamiltonianField::new(
            &c,
            ClosedForm::with_gradient(
                move |x| (x[0] / 2.0).exp() * (n * x[1]).cos() / rn,
                move |x, g| {
                    let e = (x[0] / 2.0).exp();
                    g[0] = 0.5 * e * (n * x[1]).cos() / rn;
                    g[1] = -e * rn * (n * x[1]).sin();
                },
            ),
        )
        .unwrap();
        let x = [0.3, 0.2];
        let v = symplectic_gradient(&h, &x).unwrap();
        let e = (-x[0] / 2.0).exp();
        assert!((v[0] + rn * e * (n * x[1]).sin()).abs() < 1e-14);
        assert!((v[1] + e * (n * x[1]).cos() / (2.0 * rn)).abs() < 1e-14);
    }
}
