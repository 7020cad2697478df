//! Hamiltonians that are affine outside a compact set, and the commutator
//! flows built from them.

use serde::{Deserialize, Serialize};

use crate::chart::{Chart, ChartKind};
use crate::error::{Error, Result};
use crate::flows::integrator::{integrate_adaptive, integrate_fixed, VectorField};
use crate::flows::{
    commutator_flow, commutator_flow_with_leading, commutator_generator_flow, CommutatorGenerator, HamiltonianField,
    HamiltonianFlow, StepControl,
};
use crate::grid::GridSpec;

/// `H + u` with `H` supported in the ball of radius `support_radius` and
/// `u(x) = ⟨linear, x⟩ + constant`, on a cartesian chart.
#[derive(Clone, Debug)]
pub struct AffineHamiltonian {
    compact: HamiltonianField,
    support_radius: f64,
    linear: Vec<f64>,
    constant: f64,
    /// `X_u`, constant because `Π` is.
    drift: Vec<f64>,
}

impl AffineHamiltonian {
    pub fn new(compact: HamiltonianField, support_radius: f64, linear: Vec<f64>, constant: f64) -> Result<Self> {
        let chart = compact.chart().clone();
        if !matches!(chart.kind(), ChartKind::Cartesian { .. }) {
            return Err(Error::InvalidArgument("affine Hamiltonians live on cartesian charts".into()));
        }
        if linear.len() != chart.dim() || linear.iter().any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(Error::InvalidDimension(format!("affine part needs {} finite coefficients", chart.dim())));
        }
        // The compact part must vanish on a sphere just outside its declared support.
        let d = chart.dim();
        let mut probe = vec![0.0; d];
        for k in 0..64 {
            let a = std::f64::consts::TAU * k as f64 / 64.0;
            probe.iter_mut().for_each(|v| *v = 0.0);
            probe[0] = 1.01 * support_radius * a.cos();
            probe[d / 2] = 1.01 * support_radius * a.sin();
            if compact.value(&probe) != 0.0 {
                return Err(Error::InvalidArgument(format!("compact part does not vanish at radius {support_radius}")));
            }
        }
        let mut drift = vec![0.0; d];
        chart.raise(&vec![0.0; d], &linear, &mut drift);
        Ok(AffineHamiltonian { compact, support_radius, linear, constant, drift })
    }

    /// A purely affine Hamiltonian.
    pub fn affine(chart: &Chart, linear: Vec<f64>, constant: f64) -> Result<Self> {
        Self::new(HamiltonianField::zero(chart), 0.0, linear, constant)
    }

    pub fn compact_part(&self) -> &HamiltonianField {
        &self.compact
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// In moving coordinates `x = w + t·X_u`, the flow solves
    /// `ẇ = X_H(w + t·X_u)`; the affine translation is applied exactly.
    fn moving_frame(&self) -> impl VectorField + '_ {
        move |t: f64, w: &[f64], out: &mut [f64]| {
            let x: Vec<f64> = w.iter().zip(&self.drift).map(|(a, v)| a + t * v).collect();
            let mut g = vec![0.0; x.len()];
            self.compact.gradient(&x, &mut g);
            if g.iter().any(|v| !v.is_finite()) {
                return false;
            }
            self.compact.chart().raise(&x, &g, out);
            true
        }
    }

    fn translate(&self, w: Vec<f64>, t: f64) -> Vec<f64> {
        w.into_iter().zip(&self.drift).map(|(a, v)| a + t * v).collect()
    }
}

impl HamiltonianFlow for AffineHamiltonian {
    fn chart(&self) -> &Chart {
        self.compact.chart()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.compact.value(x) + self.linear.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.constant
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.compact.gradient(x, out);
        out.iter_mut().zip(&self.linear).for_each(|(o, l)| *o += l);
    }

    fn flow(&self, x: &[f64], t: f64, ctl: &StepControl) -> Result<Vec<f64>> {
        let escape = self.chart().default_escape();
        let unbounded = crate::chart::EscapeRegion { bounds: vec![None; x.len()] };
        let w = integrate_adaptive(&self.moving_frame(), x, 0.0, t, ctl, &unbounded, false)?
            .states
            .pop()
            .expect("start state");
        let y = self.translate(w, t);
        if !escape.contains(&y) {
            return Err(Error::Escape { t, state: y });
        }
        Ok(y)
    }

    fn flow_fixed(&self, x: &[f64], t: f64, steps: usize) -> Result<Vec<f64>> {
        let w = integrate_fixed(&self.moving_frame(), x, 0.0, t, steps)?;
        Ok(self.translate(w, t))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineCommutatorReport {
    pub s: f64,
    pub t: f64,
    pub points: usize,
    /// `max |ψ(x) − Γ-flow(x)|` over the grid.
    pub max_discrepancy: f64,
    /// `max |ψ(x) − x|`.
    pub max_displacement: f64,
    /// `‖{H+u,K+v} − (G+w)‖` on the grid, when a third Hamiltonian is given.
    pub combination_defect: Option<f64>,
    /// `max |φ_G^{−ts}ψ(x) − x|`, when a third Hamiltonian is given.
    pub leading_displacement: Option<f64>,
}

/// Compares the commutator flow `ψ = φ_H^t φ_K^s φ_H^{−t} φ_K^{−s}` with the
/// flow of its generating Hamiltonian at every grid point.
pub fn affine_commutator_check(
    h: &AffineHamiltonian,
    k: &AffineHamiltonian,
    g: Option<&AffineHamiltonian>,
    s: f64,
    t: f64,
    grid: &GridSpec,
    ctl: &StepControl,
) -> Result<AffineCommutatorReport> {
    if h.chart() != k.chart() || grid.dim() != h.chart().dim() {
        return Err(Error::Mismatch);
    }
    let gen = CommutatorGenerator::new(h, k, s);
    let steps = ((t.abs() * 400.0).ceil() as usize).max(10);
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let mut max_discrepancy: f64 = 0.0;
    let mut max_displacement: f64 = 0.0;
    let mut leading: Option<f64> = g.map(|_| 0.0);
    let mut combination: Option<f64> = g.map(|_| 0.0);
    let chart = h.chart().clone();
    let d = chart.dim();
    let (mut gh, mut gk) = (vec![0.0; d], vec![0.0; d]);
    for idx in 0..grid.len() {
        let x = grid.point(idx);
        let psi = commutator_flow(h, k, s, t, &x, ctl)?;
        let gamma = commutator_generator_flow(&gen, t, &x, steps)?;
        max_discrepancy = max_discrepancy.max(dist(&psi, &gamma));
        max_displacement = max_displacement.max(dist(&psi, &x));
        if let Some(g) = g {
            let y = commutator_flow_with_leading(g, h, k, s, t, &x, ctl)?;
            leading = leading.map(|m| m.max(dist(&y, &x)));
            h.gradient(&x, &mut gh);
            k.gradient(&x, &mut gk);
            let defect = (chart.contract(&x, &gh, &gk) - g.value(&x)).abs();
            combination = combination.map(|m| m.max(defect));
        }
    }
    Ok(AffineCommutatorReport {
        s,
        t,
        points: grid.len(),
        max_discrepancy,
        max_displacement,
        combination_defect: combination,
        leading_displacement: leading,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::TestFunction;
    use crate::grid::Axis;

    fn grid() -> GridSpec {
        GridSpec::new(vec![Axis::new(-1.0, 1.0, 4), Axis::new(-1.0, 1.0, 4)]).unwrap()
    }

    #[test]
    fn translations_commute() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let u = AffineHamiltonian::affine(&c, vec![1.0, 0.0], 0.0).unwrap();
        let v = AffineHamiltonian::affine(&c, vec![0.0, 1.0], 0.0).unwrap();
        let r = affine_commutator_check(&u, &v, None, 0.3, 0.3, &grid(), &StepControl::default()).unwrap();
        assert!(r.max_displacement < 1e-9);
        assert!(r.max_discrepancy < 1e-8);
    }

    #[test]
    fn affine_flow_is_exact_translation() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let u = AffineHamiltonian::affine(&c, vec![1.0, 0.0], 0.0).unwrap();
        // X_q = Π(dq) points along −p under {q,p} = 1.
        let y = u.flow(&[0.2, 0.5], 0.7, &StepControl::default()).unwrap();
        assert_eq!(y, vec![0.2, 0.5 - 0.7]);
    }

    #[test]
    fn bump_plus_linear_matches_direct_integration() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let bump = HamiltonianField::new(&c, TestFunction::new(vec![0.0, 0.0], 1.0).closed_form()).unwrap();
        let a = AffineHamiltonian::new(bump.clone(), 1.0, vec![0.3, -0.2], 1.0).unwrap();
        let full = HamiltonianField::new(
            &c,
            bump.form().add(&crate::function::ClosedForm::affine(vec![0.3, -0.2], 1.0)),
        )
        .unwrap();
        let ctl = StepControl::default();
        let y1 = a.flow(&[0.1, 0.2], 1.3, &ctl).unwrap();
        let y2 = HamiltonianFlow::flow(&full, &[0.1, 0.2], 1.3, &ctl).unwrap();
        assert!((y1[0] - y2[0]).abs() < 1e-8 && (y1[1] - y2[1]).abs() < 1e-8);
        let bad = AffineHamiltonian::new(bump, 0.5, vec![0.0, 0.0], 0.0);
        assert!(bad.is_err());
    }

    #[test]
    fn disjoint_bumps_commute() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let b1 = HamiltonianField::new(&c, TestFunction::new(vec![-1.0, 0.0], 0.6).closed_form()).unwrap();
        let b2 = HamiltonianField::new(&c, TestFunction::new(vec![1.0, 0.0], 0.6).closed_form()).unwrap();
        let h = AffineHamiltonian::new(b1.clone(), 0.6 + 1.0, vec![0.0; 2], 0.0);
        // Declared support must be a ball about the origin containing the bump.
        let h = h.unwrap();
        let k = AffineHamiltonian::new(b2, 1.6, vec![0.0; 2], 0.0).unwrap();
        let r = affine_commutator_check(&h, &k, None, 0.3, 0.3, &grid(), &StepControl::default()).unwrap();
        assert!(r.max_displacement < 1e-6 && r.max_discrepancy < 1e-6, "{r:?}");
    }
}
