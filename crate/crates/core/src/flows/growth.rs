//! Numerical linear-growth certificates `‖X‖ ≤ a·r + b` on radial annuli.

use serde::{Deserialize, Serialize};

use crate::chart::{Chart, ChartKind};
use crate::error::{Error, Result};

use super::{symplectic_gradient, HamiltonianField};

/// Sampling range `r ∈ [r_min, r_max]` over the full circle. Points are
/// placed in the chart as `(r cos θ, r sin θ)` (cartesian), `(r, θ)`
/// (polar) or `(2 ln(r/√2), θ)` (cylinder, where `r = √2 e^{s/2}`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub r_min: f64,
    pub r_max: f64,
    pub radial_points: usize,
    pub angular_points: usize,
}

impl Annulus {
    pub fn new(r_min: f64, r_max: f64) -> Self {
        Annulus { r_min, r_max, radial_points: 200, angular_points: 256 }
    }

    fn point(&self, chart: &Chart, r: f64, theta: f64) -> Result<Vec<f64>> {
        match chart.kind() {
            ChartKind::Cartesian { pairs: 1 } => Ok(vec![r * theta.cos(), r * theta.sin()]),
            ChartKind::PolarR2 => Ok(vec![r, theta]),
            ChartKind::CylinderS1 => Ok(vec![2.0 * (r / std::f64::consts::SQRT_2).ln(), theta]),
            _ => Err(Error::InvalidArgument(format!("no radial annulus on chart {}", chart.name()))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub a: f64,
    pub b: f64,
    /// `max (‖X‖ − (a·r + b))` over the samples; never positive.
    pub max_excess: f64,
    pub radii: Vec<f64>,
    /// `max_θ ‖X‖` at each radius.
    pub envelope: Vec<f64>,
}

/// Fits `‖X(x)‖ ≤ a·r + b` for a vector field given in chart components,
/// with the coordinate Euclidean norm. The slope is the least-squares slope
/// of the angular envelope over the outer half of the range; `b` lifts the
/// line above every sample. A dominant quadratic trend is reported as
/// superlinear growth.
pub fn linear_growth_bound(
    chart: &Chart,
    field: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    region: &Annulus,
) -> Result<GrowthCertificate> {
    if !(region.r_min > 0.0 && region.r_max > region.r_min) || region.radial_points < 4 || region.angular_points < 1 {
        return Err(Error::InvalidArgument(format!("bad annulus {region:?}")));
    }
    let nr = region.radial_points;
    let radii: Vec<f64> = (0..nr)
        .map(|i| region.r_min + (region.r_max - region.r_min) * i as f64 / (nr - 1) as f64)
        .collect();
    let mut envelope = Vec::with_capacity(nr);
    for &r in &radii {
        let mut m: f64 = 0.0;
        for j in 0..region.angular_points {
            let theta = std::f64::consts::TAU * j as f64 / region.angular_points as f64;
            let v = field(&region.point(chart, r, theta)?)?;
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::NonFiniteGradient(region.point(chart, r, theta)?));
            }
            m = m.max(norm);
        }
        envelope.push(m);
    }

    let span = region.r_max - region.r_min;
    let u: Vec<f64> = radii.iter().map(|r| (r - region.r_min) / span).collect();
    let c2 = quadratic_coefficient(&u, &envelope);
    let (lo, hi) = envelope.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi > 0.0 && c2 > 0.05 * (hi - lo) {
        return Err(Error::SuperlinearGrowth(c2 / (span * span)));
    }

    let half = nr / 2;
    let a = ls_slope(&radii[half..], &envelope[half..]).max(0.0);
    let b = radii.iter().zip(&envelope).map(|(r, m)| m - a * r).fold(f64::NEG_INFINITY, f64::max);
    let max_excess = radii
        .iter()
        .zip(&envelope)
        .map(|(r, m)| m - (a * r + b))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthCertificate { a, b, max_excess, radii, envelope })
}

/// Certificate for `X_H`.
pub fn hamiltonian_growth_bound(h: &HamiltonianField, region: &Annulus) -> Result<GrowthCertificate> {
    linear_growth_bound(h.chart(), &|x: &[f64]| symplectic_gradient(h, x), region)
}

fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Leading coefficient of the least-squares quadratic through `(x, y)`.
fn quadratic_coefficient(x: &[f64], y: &[f64]) -> f64 {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let p = [1.0, xi, xi * xi];
        for a in 0..3 {
            rhs[a] += p[a] * yi;
            for b in 0..3 {
                m[a][b] += p[a] * p[b];
            }
        }
    }
    // Gaussian elimination with partial pivoting on the 3×3 normal equations.
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut sol = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * sol[k]).sum();
        sol[row] = (rhs[row] - s) / m[row][row];
    }
    sol[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::ClosedForm;

    #[test]
    fn zero_field_gives_zero_constants() {
        let c = make_chart("polar", None).unwrap();
        let cert = hamiltonian_growth_bound(&HamiltonianField::zero(&c), &Annulus::new(0.05, 10.0)).unwrap();
        assert_eq!((cert.a, cert.b), (0.0, 0.0));
    }

    #[test]
    fn radial_angular_field_is_linear() {
        let c = make_chart("polar", None).unwrap();
        let n = 4.0f64;
        let field = move |x: &[f64]| -> Result<Vec<f64>> {
            Ok(vec![(n * x[1]).cos() / n.sqrt(), x[0] * n.sqrt() * (n * x[1]).sin()])
        };
        let cert = linear_growth_bound(&c, &field, &Annulus::new(0.05, 10.0)).unwrap();
        assert!(cert.a >= 2.0 - 1e-9 && cert.a <= 2.2, "{cert:?}");
        assert!(cert.b > 0.0 && cert.b <= 0.6, "{}", cert.b);
        assert!(cert.max_excess <= 0.0);
    }

    #[test]
    fn cubic_hamiltonian_is_superlinear() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        let h = HamiltonianField::new(&c, ClosedForm::with_gradient(|x| x[0].powi(3), |x, g| {
            g[0] = 3.0 * x[0] * x[0];
            g[1] = 0.0;
        }))
        .unwrap();
        assert!(matches!(hamiltonian_growth_bound(&h, &Annulus::new(0.1, 5.0)), Err(Error::SuperlinearGrowth(_))));
    }
}
