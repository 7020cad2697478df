//! Poisson brackets of grid fields and of closed forms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, ChartKind};
use crate::error::{Error, Result};
use crate::function::ClosedForm;
use crate::grid::GridField;
use crate::stencil::{partial_derivative, StencilOrder};

/// How first derivatives are obtained for a bracket.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DerivativeMode {
    /// Analytic gradient where a field carries one, finite differences otherwise.
    #[default]
    Auto,
    /// Analytic gradients only.
    Exact,
    /// Finite differences for both operands.
    FiniteDifference(StencilOrder),
}

enum Gradient<'a> {
    Analytic(&'a ClosedForm),
    Sampled(Vec<GridField>),
}

impl Gradient<'_> {
    fn fill(&self, flat: usize, x: &[f64], out: &mut [f64]) {
        match self {
            Gradient::Analytic(f) => {
                f.gradient_into(x, out);
            }
            Gradient::Sampled(parts) => {
                for (o, p) in out.iter_mut().zip(parts) {
                    *o = p.samples()[flat];
                }
            }
        }
    }
}

fn gradient_of(field: &GridField, mode: DerivativeMode) -> Result<Gradient<'_>> {
    let analytic = field.analytic().filter(|f| f.has_gradient());
    let fd = |order| -> Result<Gradient<'_>> {
        let parts = (0..field.grid().dim())
            .map(|axis| partial_derivative(field, axis, order))
            .collect::<Result<Vec<_>>>()?;
        Ok(Gradient::Sampled(parts))
    };
    match (mode, analytic) {
        (DerivativeMode::Exact, Some(f)) | (DerivativeMode::Auto, Some(f)) => Ok(Gradient::Analytic(f)),
        (DerivativeMode::Exact, None) => Err(Error::MissingGradient),
        (DerivativeMode::Auto, None) => fd(StencilOrder::Second),
        (DerivativeMode::FiniteDifference(order), _) => fd(order),
    }
}

fn check_polar(field: &GridField) -> Result<()> {
    if field.chart().kind() == ChartKind::PolarR2 {
        let r_min = field.grid().axes()[0].min;
        if r_min <= 0.0 {
            return Err(Error::PolarSingularity(r_min));
        }
    }
    Ok(())
}

/// `{F,G}` sampled on the common grid, with [`DerivativeMode::Auto`].
pub fn poisson_bracket(f: &GridField, g: &GridField) -> Result<GridField> {
    poisson_bracket_with(f, g, DerivativeMode::Auto)
}

pub fn poisson_bracket_with(f: &GridField, g: &GridField, mode: DerivativeMode) -> Result<GridField> {
    if !f.same_domain(g) {
        return Err(Error::Mismatch);
    }
    check_polar(f)?;
    let grad_f = gradient_of(f, mode)?;
    let grad_g = gradient_of(g, mode)?;
    let chart = f.chart();
    let grid = f.grid();
    let d = grid.dim();
    let samples: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || (vec![0.0; d], vec![0.0; d], vec![0.0; d]),
            |(x, a, b), i| {
                grid.coords_into(i, x);
                grad_f.fill(i, x, a);
                grad_g.fill(i, x, b);
                chart.contract(x, a, b)
            },
        )
        .collect();
    GridField::from_samples(chart, grid, samples)
}

/// Pointwise bracket of two closed forms; both need analytic gradients.
pub fn closed_form_bracket(chart: &Chart, f: &ClosedForm, g: &ClosedForm) -> Result<ClosedForm> {
    if !(f.has_gradient() && g.has_gradient()) {
        return Err(Error::MissingGradient);
    }
    let (chart, f, g) = (chart.clone(), f.clone(), g.clone());
    let d = chart.dim();
    Ok(ClosedForm::new(move |x| {
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        f.gradient_into(x, &mut a);
        g.gradient_into(x, &mut b);
        chart.contract(x, &a, &b)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::chi;
    use crate::grid::{sample_field, Axis, GridSpec};
    use std::f64::consts::TAU;

    fn polar_pair(n: f64) -> (ClosedForm, ClosedForm) {
        let s = n.sqrt();
        let f = ClosedForm::with_gradient(
            move |x| x[0] / s * (n * x[1]).cos(),
            move |x, g| {
                g[0] = (n * x[1]).cos() / s;
                g[1] = -x[0] * s * (n * x[1]).sin();
            },
        );
        let gf = ClosedForm::with_gradient(
            move |x| x[0] / s * (n * x[1]).sin(),
            move |x, g| {
                g[0] = (n * x[1]).sin() / s;
                g[1] = x[0] * s * (n * x[1]).cos();
            },
        );
        (f, gf)
    }

    fn polar_grid() -> GridSpec {
        GridSpec::new(vec![Axis::new(0.05, 2.0, 32), Axis::periodic(0.0, TAU, 64)]).unwrap()
    }

    #[test]
    fn polar_pair_bracket_is_one() {
        let chart = make_chart("polar", None).unwrap();
        let (f, g) = polar_pair(4.0);
        let ff = sample_field(&chart, &polar_grid(), &f).unwrap();
        let gg = sample_field(&chart, &polar_grid(), &g).unwrap();
        let b = poisson_bracket_with(&ff, &gg, DerivativeMode::Exact).unwrap();
        assert!(b.samples().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn self_bracket_vanishes() {
        let chart = make_chart("polar", None).unwrap();
        let (f, _) = polar_pair(3.0);
        let ff = sample_field(&chart, &polar_grid(), &f).unwrap();
        assert_eq!(poisson_bracket(&ff, &ff).unwrap().c0_norm(), 0.0);
        let fd = sample_field(&chart, &polar_grid(), &f.without_gradient()).unwrap();
        assert_eq!(poisson_bracket(&fd, &fd).unwrap().c0_norm(), 0.0);
    }

    #[test]
    fn cutoff_pair_bracket_is_minus_chi_chi_prime() {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let n = 3.0f64;
        let s = n.sqrt();
        let f = ClosedForm::with_gradient(
            move |x| chi(x[1]) / s * (n * x[0]).cos(),
            move |x, g| {
                g[0] = -chi(x[1]) * s * (n * x[0]).sin();
                g[1] = crate::function::chi_prime(x[1]) / s * (n * x[0]).cos();
            },
        );
        let gf = ClosedForm::with_gradient(
            move |x| chi(x[1]) / s * (n * x[0]).sin(),
            move |x, g| {
                g[0] = chi(x[1]) * s * (n * x[0]).cos();
                g[1] = crate::function::chi_prime(x[1]) / s * (n * x[0]).sin();
            },
        );
        let grid = GridSpec::new(vec![Axis::periodic(0.0, TAU, 32), Axis::new(-1.2, 1.2, 49)]).unwrap();
        let b = poisson_bracket(
            &sample_field(&chart, &grid, &f).unwrap(),
            &sample_field(&chart, &grid, &gf).unwrap(),
        )
        .unwrap();
        for i in 0..grid.len() {
            let p = grid.point(i)[1];
            let expected = -chi(p) * crate::function::chi_prime(p);
            assert!((b.samples()[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatch_and_singularity() {
        let polar = make_chart("polar", None).unwrap();
        let cart = make_chart("cartesian", Some(2)).unwrap();
        let g = polar_grid();
        let a = GridField::constant(&polar, &g, 1.0).unwrap();
        let b = GridField::constant(&cart, &g, 1.0).unwrap();
        assert!(matches!(poisson_bracket(&a, &b), Err(Error::Mismatch)));
        let bad = GridSpec::new(vec![Axis::new(0.0, 1.0, 8), Axis::periodic(0.0, TAU, 8)]).unwrap();
        let c = GridField::constant(&polar, &bad, 1.0).unwrap();
        assert!(matches!(poisson_bracket(&c, &c), Err(Error::PolarSingularity(_))));
        let sampled = a.map(|v| v).unwrap();
        assert!(matches!(
            poisson_bracket_with(&sampled, &a, DerivativeMode::Exact),
            Err(Error::MissingGradient)
        ));
    }
}
