//! Phase-space charts and their Poisson structures.
//!
//! Every chart used here has a Poisson tensor made of independent
//! conjugate pairs `(i, j)` with a closed-form coefficient `c(x)`, so that
//!
//! ```text
//! {H,K}(x) = Σ_pairs c(x) (∂ᵢH ∂ⱼK − ∂ⱼH ∂ᵢK)
//! ```
//!
//! and the symplectic gradient is `X_H = Π ∇H`. The convention is
//! `ι_{X_H} ω = dH`, `{H,K} = dH(X_K)`; with it `{q,p} = +1` on the
//! cartesian plane and the polar pair `r cos nθ/√n`, `r sin nθ/√n` has
//! bracket `+1`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global orientation of the bracket. Flipping it flips every bracket and
/// every symplectic gradient at once.
pub const BRACKET_SIGN: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChartKind {
    /// `(q₁..qₙ, p₁..pₙ)` with `ω = Σ dqᵢ∧dpᵢ`.
    Cartesian { pairs: usize },
    /// `(r, θ)` with `ω = r dr∧dθ`.
    PolarR2,
    /// `(s, θ)` on `ℝ×S¹` with `ω = d(eˢdθ) = eˢ ds∧dθ`.
    CylinderS1,
    /// `(s, θ, x₁..x_k, y₁..y_k)`: cylinder block plus a standard transverse block.
    SymplectizationS1xU { transverse_pairs: usize },
}

impl ChartKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChartKind::Cartesian { .. } => "cartesian",
            ChartKind::PolarR2 => "polar_r2",
            ChartKind::CylinderS1 => "cylinder_s1",
            ChartKind::SymplectizationS1xU { .. } => "symplectization_s1xU",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Coefficient {
    One,
    InverseR,
    ExpMinusS,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct ConjugatePair {
    i: usize,
    j: usize,
    coefficient: Coefficient,
}

/// Per-axis bounds outside which a trajectory counts as escaped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeRegion {
    pub bounds: Vec<Option<(f64, f64)>>,
}

impl EscapeRegion {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.is_finite())
            && self
                .bounds
                .iter()
                .zip(x)
                .all(|(b, &v)| b.is_none_or(|(lo, hi)| v >= lo && v <= hi))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    kind: ChartKind,
    coordinate_names: Vec<String>,
    pairs: Vec<ConjugatePair>,
}

impl Chart {
    pub fn new(kind: ChartKind) -> Result<Self> {
        let (names, pairs) = match kind {
            ChartKind::Cartesian { pairs } => {
                if pairs == 0 {
                    return Err(Error::InvalidDimension(
                        "cartesian chart needs at least one conjugate pair".into(),
                    ));
                }
                let mut names: Vec<String> = Vec::with_capacity(2 * pairs);
                if pairs == 1 {
                    names.extend(["q".to_string(), "p".to_string()]);
                } else {
                    names.extend((1..=pairs).map(|i| format!("q{i}")));
                    names.extend((1..=pairs).map(|i| format!("p{i}")));
                }
                let cp = (0..pairs)
                    .map(|k| ConjugatePair { i: k, j: pairs + k, coefficient: Coefficient::One })
                    .collect();
                (names, cp)
            }
            ChartKind::PolarR2 => (
                vec!["r".into(), "theta".into()],
                vec![ConjugatePair { i: 0, j: 1, coefficient: Coefficient::InverseR }],
            ),
            ChartKind::CylinderS1 => (
                vec!["s".into(), "theta".into()],
                vec![ConjugatePair { i: 0, j: 1, coefficient: Coefficient::ExpMinusS }],
            ),
            ChartKind::SymplectizationS1xU { transverse_pairs } => {
                if transverse_pairs == 0 {
                    return Err(Error::InvalidDimension(
                        "symplectization needs transverse dimension >= 2".into(),
                    ));
                }
                let k = transverse_pairs;
                let mut names = vec!["s".to_string(), "theta".to_string()];
                if k == 1 {
                    names.extend(["x".to_string(), "y".to_string()]);
                } else {
                    names.extend((1..=k).map(|i| format!("x{i}")));
                    names.extend((1..=k).map(|i| format!("y{i}")));
                }
                let mut cp = vec![ConjugatePair { i: 0, j: 1, coefficient: Coefficient::ExpMinusS }];
                cp.extend(
                    (0..k).map(|m| ConjugatePair { i: 2 + m, j: 2 + k + m, coefficient: Coefficient::One }),
                );
                (names, cp)
            }
        };
        Ok(Chart { kind, coordinate_names: names, pairs })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn dim(&self) -> usize {
        self.coordinate_names.len()
    }

    pub fn coordinate_names(&self) -> &[String] {
        &self.coordinate_names
    }

    /// Axes carrying an angle; grids on these axes are periodic with period 2π.
    pub fn angular_axes(&self) -> Vec<usize> {
        match self.kind {
            ChartKind::Cartesian { .. } => vec![],
            _ => vec![1],
        }
    }

    fn coefficient(&self, c: Coefficient, x: &[f64]) -> f64 {
        BRACKET_SIGN
            * match c {
                Coefficient::One => 1.0,
                Coefficient::InverseR => 1.0 / x[0],
                Coefficient::ExpMinusS => (-x[0]).exp(),
            }
    }

    /// Dense row-major `Π(x)`.
    pub fn poisson_matrix(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d * d];
        for p in &self.pairs {
            let c = self.coefficient(p.coefficient, x);
            m[p.i * d + p.j] = c;
            m[p.j * d + p.i] = -c;
        }
        m
    }

    /// `Σᵢⱼ Πᵢⱼ(x) aᵢ bⱼ` for covectors `a = dH`, `b = dK`.
    #[inline]
    pub fn contract(&self, x: &[f64], a: &[f64], b: &[f64]) -> f64 {
        self.pairs
            .iter()
            .map(|p| self.coefficient(p.coefficient, x) * (a[p.i] * b[p.j] - a[p.j] * b[p.i]))
            .sum()
    }

    /// `X_H(x) = Π(x) ∇H(x)`.
    #[inline]
    pub fn raise(&self, x: &[f64], grad: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for p in &self.pairs {
            let c = self.coefficient(p.coefficient, x);
            out[p.i] += c * grad[p.j];
            out[p.j] -= c * grad[p.i];
        }
    }

    pub fn default_escape(&self) -> EscapeRegion {
        let bounds = match self.kind {
            ChartKind::Cartesian { pairs } => vec![Some((-100.0, 100.0)); 2 * pairs],
            ChartKind::PolarR2 => vec![Some((0.01, 50.0)), None],
            ChartKind::CylinderS1 => vec![Some((-12.0, 12.0)), None],
            ChartKind::SymplectizationS1xU { transverse_pairs } => {
                let mut b = vec![Some((-12.0, 12.0)), None];
                b.extend(std::iter::repeat_n(Some((-100.0, 100.0)), 2 * transverse_pairs));
                b
            }
        };
        EscapeRegion { bounds }
    }

    /// Box used to draw probe points when checking analytic gradients.
    pub fn probe_box(&self) -> Vec<(f64, f64)> {
        match self.kind {
            ChartKind::Cartesian { pairs } => vec![(-1.5, 1.5); 2 * pairs],
            ChartKind::PolarR2 => vec![(0.2, 2.0), (0.0, TAU)],
            ChartKind::CylinderS1 => vec![(-2.0, 2.0), (0.0, TAU)],
            ChartKind::SymplectizationS1xU { transverse_pairs } => {
                let mut b = vec![(-2.0, 2.0), (0.0, TAU)];
                b.extend(std::iter::repeat_n((-1.2, 1.2), 2 * transverse_pairs));
                b
            }
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds a chart from its textual kind. `dim` is the total dimension for
/// `cartesian` and the transverse dimension for `symplectization`.
pub fn make_chart(kind: &str, dim: Option<usize>) -> Result<Chart> {
    let even_half = |d: usize, what: &str| -> Result<usize> {
        if d == 0 || !d.is_multiple_of(2) {
            Err(Error::InvalidDimension(format!("{what} dimension must be even and positive, got {d}")))
        } else {
            Ok(d / 2)
        }
    };
    let kind = match kind {
        "cartesian" => ChartKind::Cartesian { pairs: even_half(dim.unwrap_or(2), "cartesian")? },
        "polar_r2" | "polar" => ChartKind::PolarR2,
        "cylinder_s1" | "cylinder" => ChartKind::CylinderS1,
        "symplectization_s1xU" | "symplectization" => ChartKind::SymplectizationS1xU {
            transverse_pairs: even_half(dim.unwrap_or(2), "transverse")?,
        },
        other => return Err(Error::UnknownChart(other.to_string())),
    };
    Chart::new(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn antisymmetry_defect(chart: &Chart, x: &[f64]) -> f64 {
        let d = chart.dim();
        let m = chart.poisson_matrix(x);
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (m[i * d + j] + m[j * d + i]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn cartesian_block() {
        let c = make_chart("cartesian", Some(2)).unwrap();
        assert_eq!(c.poisson_matrix(&[0.3, -1.0]), vec![0.0, 1.0, -1.0, 0.0]);
        assert_eq!(c.coordinate_names(), &["q".to_string(), "p".to_string()]);
    }

    #[test]
    fn polar_and_cylinder_coefficients() {
        let polar = make_chart("polar_r2", None).unwrap();
        let m = polar.poisson_matrix(&[0.5, 1.0]);
        assert_eq!(m[1], 2.0);
        let cyl = make_chart("cylinder_s1", None).unwrap();
        let m = cyl.poisson_matrix(&[1.0, 0.0]);
        assert!((m[1] - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn symplectization_blocks_are_orthogonal() {
        let c = make_chart("symplectization", Some(2)).unwrap();
        assert_eq!(c.dim(), 4);
        let m = c.poisson_matrix(&[0.0, 0.0, 0.1, 0.2]);
        // (s,θ) block, (x,y) block, nothing across.
        assert_eq!(m[1], 1.0);
        assert_eq!(m[2 * 4 + 3], 1.0);
        for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
            assert_eq!(m[i * 4 + j], 0.0);
        }
    }

    #[test]
    fn matrices_are_antisymmetric() {
        for (k, d) in [("cartesian", Some(4)), ("polar", None), ("cylinder", None), ("symplectization", Some(4))] {
            let c = make_chart(k, d).unwrap();
            let x: Vec<f64> = (0..c.dim()).map(|i| 0.3 + 0.1 * i as f64).collect();
            assert_eq!(antisymmetry_defect(&c, &x), 0.0);
        }
    }

    #[test]
    fn bad_kinds_and_dimensions() {
        assert!(matches!(make_chart("torus", None), Err(Error::UnknownChart(_))));
        assert!(matches!(make_chart("cartesian", Some(3)), Err(Error::InvalidDimension(_))));
        assert!(matches!(make_chart("symplectization", Some(0)), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn raise_is_orthogonal_to_gradient() {
        let c = make_chart("symplectization", Some(2)).unwrap();
        let x = [0.4, 1.0, 0.2, -0.3];
        let g = [1.0, -2.0, 0.5, 3.0];
        let mut v = [0.0; 4];
        c.raise(&x, &g, &mut v);
        let dot: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-15);
    }
}
