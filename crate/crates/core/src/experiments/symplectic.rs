//! Symplecticity of a coordinate map from the brackets of its components.

use serde::{Deserialize, Serialize};

use crate::bracket::{poisson_bracket_with, DerivativeMode};
use crate::chart::{Chart, ChartKind};
use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::stencil::{partial_derivative, StencilOrder};

pub type CoordinateMap = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticReport {
    /// Row-major `2n × 2n` matrix of `‖{cₐ,c_b} − J_ab‖` over the grid, where
    /// `c = (f₁..fₙ, g₁..gₙ)` are the components of the map.
    pub residuals: Vec<f64>,
    pub dim: usize,
    pub max_residual: f64,
    pub min_abs_jacobian: f64,
    pub degenerate_jacobian: bool,
}

/// Brackets the components of `map` with 4th-order stencils on a cartesian
/// grid and compares them with the standard relations
/// `{fᵢ,gⱼ} = δᵢⱼ`, `{fᵢ,fⱼ} = {gᵢ,gⱼ} = 0`.
pub fn symplectic_check(map: &dyn Fn(&[f64]) -> Vec<f64>, chart: &Chart, grid: &GridSpec) -> Result<SymplecticReport> {
    let ChartKind::Cartesian { pairs } = chart.kind() else {
        return Err(Error::InvalidArgument(format!("symplectic check needs a cartesian chart, got {}", chart.name())));
    };
    let d = 2 * pairs;
    if grid.dim() != d {
        return Err(Error::Mismatch);
    }
    let images: Vec<Vec<f64>> = (0..grid.len()).map(|k| map(&grid.point(k))).collect();
    if images.iter().any(|v| v.len() != d) {
        return Err(Error::InvalidDimension(format!("map must return {d} coordinates")));
    }
    let components: Vec<GridField> = (0..d)
        .map(|a| GridField::from_samples(chart, grid, images.iter().map(|v| v[a]).collect()))
        .collect::<Result<_>>()?;
    let mode = DerivativeMode::FiniteDifference(StencilOrder::Fourth);
    let mut residuals = vec![0.0; d * d];
    for a in 0..d {
        for b in a + 1..d {
            let target = if b == a + pairs { 1.0 } else { 0.0 };
            let r = poisson_bracket_with(&components[a], &components[b], mode)?.map(|v| v - target)?.c0_norm();
            residuals[a * d + b] = r;
            residuals[b * d + a] = r;
        }
    }
    // Jacobian determinant, only for the single-pair case where it is cheap.
    let min_abs_jacobian = if d == 2 {
        let jac: Vec<Vec<GridField>> = components
            .iter()
            .map(|c| (0..2).map(|k| partial_derivative(c, k, StencilOrder::Fourth)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        (0..grid.len())
            .map(|k| {
                let m = |i: usize, j: usize| jac[i][j].samples()[k];
                (m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)).abs()
            })
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let degenerate = min_abs_jacobian < 1e-8;
    if degenerate {
        log::warn!("symplectic check: Jacobian nearly singular (min |det| = {min_abs_jacobian:e})");
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(SymplecticReport { residuals, dim: d, max_residual, min_abs_jacobian, degenerate_jacobian: degenerate })
}

/// `identity`, `shear` (`(q,p) ↦ (q+p,p)`), `scaling` (`(q,p) ↦ (2q,2p)`),
/// `scaling(k)`, or `translation` by `(0.3, −0.2)`, all on one pair.
pub fn named_map(name: &str) -> Result<CoordinateMap> {
    let name = name.trim();
    if let Some(k) = name.strip_prefix("scaling(").and_then(|r| r.strip_suffix(')')) {
        let k: f64 = k.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad map {name}")))?;
        return Ok(Box::new(move |x| vec![k * x[0], k * x[1]]));
    }
    match name {
        "identity" => Ok(Box::new(|x: &[f64]| x.to_vec())),
        "shear" => Ok(Box::new(|x: &[f64]| vec![x[0] + x[1], x[1]])),
        "scaling" => Ok(Box::new(|x: &[f64]| vec![2.0 * x[0], 2.0 * x[1]])),
        "translation" => Ok(Box::new(|x: &[f64]| vec![x[0] + 0.3, x[1] - 0.2])),
        "collapse" => Ok(Box::new(|x: &[f64]| vec![x[0], 0.0])),
        other => Err(Error::InvalidArgument(format!("unknown map {other}"))),
    }
}
