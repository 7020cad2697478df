//! Central finite-difference derivatives on grid fields.
//!
//! Periodic axes wrap around; non-periodic axes switch to one-sided
//! stencils of the same order within the first and last two nodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

impl StencilOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(StencilOrder::Second),
            4 => Ok(StencilOrder::Fourth),
            o => Err(Error::UnsupportedOrder(o)),
        }
    }

    pub fn order(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    fn width(self) -> usize {
        match self {
            StencilOrder::Second => 3,
            StencilOrder::Fourth => 5,
        }
    }
}

/// Derivative of the sampled values along one line of `n` nodes spaced `h`.
fn differentiate_line(line: &[f64], h: f64, periodic: bool, order: StencilOrder, out: &mut [f64]) {
    let n = line.len();
    let at = |i: isize| -> f64 { line[i.rem_euclid(n as isize) as usize] };
    match (order, periodic) {
        (StencilOrder::Second, true) => {
            for i in 0..n as isize {
                out[i as usize] = (at(i + 1) - at(i - 1)) / (2.0 * h);
            }
        }
        (StencilOrder::Fourth, true) => {
            for i in 0..n as isize {
                out[i as usize] =
                    (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2))) / (12.0 * h);
            }
        }
        (StencilOrder::Second, false) => {
            out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) / (2.0 * h);
            for i in 1..n - 1 {
                out[i] = (line[i + 1] - line[i - 1]) / (2.0 * h);
            }
            out[n - 1] = (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) / (2.0 * h);
        }
        (StencilOrder::Fourth, false) => {
            let f = line;
            out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
            out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
            for i in 2..n - 2 {
                out[i] = (8.0 * (f[i + 1] - f[i - 1]) - (f[i + 2] - f[i - 2])) / (12.0 * h);
            }
            let m = n - 1;
            out[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4]) / (12.0 * h);
            out[m - 1] = (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) / (12.0 * h);
        }
    }
}

/// First derivative of `field` along `axis`, as a sampled field without a closed form.
pub fn partial_derivative(field: &GridField, axis: usize, order: StencilOrder) -> Result<GridField> {
    let grid = field.grid();
    if axis >= grid.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: grid.dim() });
    }
    let ax = &grid.axes()[axis];
    if !ax.periodic && ax.points < order.width() {
        return Err(Error::InvalidGrid(format!(
            "axis {axis} has {} points, order {} needs {}",
            ax.points,
            order.order(),
            order.width()
        )));
    }
    let n = ax.points;
    let stride = grid.stride(axis);
    let h = ax.spacing();
    let samples = field.samples();
    let outer = grid.len() / (n * stride);

    // Each (outer, inner) pair names one line along `axis`.
    let lines: Vec<(usize, Vec<f64>)> = (0..outer * stride)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, l| {
                let (o, inner) = (l / stride, l % stride);
                let base = o * n * stride + inner;
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = samples[base + k * stride];
                }
                let mut d = vec![0.0; n];
                differentiate_line(buf, h, ax.periodic, order, &mut d);
                (base, d)
            },
        )
        .collect();
    let mut out = vec![0.0; grid.len()];
    for (base, d) in lines {
        for (k, v) in d.into_iter().enumerate() {
            out[base + k * stride] = v;
        }
    }
    GridField::from_samples(field.chart(), grid, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::ClosedForm;
    use crate::grid::{sample_field, Axis, GridSpec};
    use std::f64::consts::TAU;

    fn err_vs(field: &GridField, exact: impl Fn(&[f64]) -> f64) -> f64 {
        (0..field.grid().len())
            .map(|i| (field.samples()[i] - exact(&field.grid().point(i))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sine_on_periodic_axis() {
        let chart = make_chart("polar", None).unwrap();
        let g = GridSpec::new(vec![Axis::new(0.5, 1.0, 4), Axis::periodic(0.0, TAU, 256)]).unwrap();
        let f = sample_field(&chart, &g, &ClosedForm::new(|x| x[1].sin())).unwrap();
        let d = partial_derivative(&f, 1, StencilOrder::Second).unwrap();
        // The central difference of sin has the closed-form error 1 − sin(h)/h.
        let h = TAU / 256.0;
        let err = err_vs(&d, |x| x[1].cos());
        assert!((err - (1.0 - h.sin() / h)).abs() < 1e-12, "{err}");
        assert!(err < 1.01e-4);
    }

    #[test]
    fn constant_has_exactly_zero_derivative() {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let g = GridSpec::new(vec![Axis::new(-1.0, 1.0, 9), Axis::periodic(0.0, TAU, 12)]).unwrap();
        let f = GridField::constant(&chart, &g, 3.25).unwrap();
        for axis in 0..2 {
            for o in [StencilOrder::Second, StencilOrder::Fourth] {
                assert!(partial_derivative(&f, axis, o).unwrap().samples().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn no_q_dependence_gives_zero_q_derivative() {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let g = GridSpec::new(vec![Axis::periodic(0.0, TAU, 16), Axis::new(-1.2, 1.2, 33)]).unwrap();
        let f = sample_field(&chart, &g, &ClosedForm::new(|x| crate::function::chi(x[1]))).unwrap();
        let d = partial_derivative(&f, 0, StencilOrder::Fourth).unwrap();
        assert_eq!(d.c0_norm(), 0.0);
    }

    #[test]
    fn one_sided_edges_are_exact_on_polynomials_of_matching_degree() {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 11), Axis::new(0.0, 1.0, 5)]).unwrap();
        let f = sample_field(&chart, &g, &ClosedForm::new(|x| x[0].powi(4) - 2.0 * x[0] * x[0] + x[1])).unwrap();
        let d = partial_derivative(&f, 0, StencilOrder::Fourth).unwrap();
        assert!(err_vs(&d, |x| 4.0 * x[0].powi(3) - 4.0 * x[0]) < 1e-12);
        let q = sample_field(&chart, &g, &ClosedForm::new(|x| x[0] * x[0])).unwrap();
        let d2 = partial_derivative(&q, 0, StencilOrder::Second).unwrap();
        assert!(err_vs(&d2, |x| 2.0 * x[0]) < 1e-12);
    }

    #[test]
    fn convergence_order_under_refinement() {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let coarse = GridSpec::new(vec![Axis::new(0.0, 2.0, 33), Axis::periodic(0.0, TAU, 32)]).unwrap();
        let form = ClosedForm::new(|x| (1.3 * x[0]).sin() * (2.0 * x[1]).cos());
        for (order, min_ratio) in [(StencilOrder::Second, 3.5), (StencilOrder::Fourth, 14.0)] {
            let errs: Vec<f64> = [1, 2]
                .iter()
                .map(|&k| {
                    let g = coarse.refined(k);
                    let f = sample_field(&chart, &g, &form).unwrap();
                    let dq = partial_derivative(&f, 0, order).unwrap();
                    let dp = partial_derivative(&f, 1, order).unwrap();
                    err_vs(&dq, |x| 1.3 * (1.3 * x[0]).cos() * (2.0 * x[1]).cos())
                        .max(err_vs(&dp, |x| -2.0 * (1.3 * x[0]).sin() * (2.0 * x[1]).sin()))
                })
                .collect();
            assert!(errs[0] / errs[1] >= min_ratio, "{order:?}: {errs:?}");
        }
    }

    #[test]
    fn errors() {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 4), Axis::new(0.0, 1.0, 8)]).unwrap();
        let f = GridField::constant(&chart, &g, 1.0).unwrap();
        assert!(matches!(partial_derivative(&f, 2, StencilOrder::Second), Err(Error::AxisOutOfRange { .. })));
        assert!(partial_derivative(&f, 0, StencilOrder::Fourth).is_err());
        assert!(matches!(StencilOrder::from_order(3), Err(Error::UnsupportedOrder(3))));
    }
}
