//! Uniform tensor-product grids and scalar fields sampled on them.

use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{make_chart, Chart};
use crate::error::{Error, Result};
use crate::function::ClosedForm;

/// One grid axis. A periodic axis identifies `max` with `min` and does not
/// sample `max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        Axis { min, max, points, periodic: false }
    }

    pub fn periodic(min: f64, max: f64, points: usize) -> Self {
        Axis { min, max, points, periodic: true }
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.max - self.min) / self.points as f64
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        if !self.periodic && i + 1 == self.points {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    /// Trapezoid weight of node `i`.
    fn weight(&self, i: usize) -> f64 {
        let h = self.spacing();
        if !self.periodic && (i == 0 || i + 1 == self.points) {
            0.5 * h
        } else {
            h
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        for (k, a) in axes.iter().enumerate() {
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::InvalidGrid(format!("axis {k}: need finite min < max")));
            }
            if a.points < 4 {
                return Err(Error::InvalidGrid(format!("axis {k}: need at least 4 points")));
            }
        }
        Ok(GridSpec { axes })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.points).collect()
    }

    /// Row-major stride of `axis` (last axis is contiguous).
    pub fn stride(&self, axis: usize) -> usize {
        self.axes[axis + 1..].iter().map(|a| a.points).product()
    }

    #[inline]
    pub fn index_along(&self, flat: usize, axis: usize) -> usize {
        (flat / self.stride(axis)) % self.axes[axis].points
    }

    #[inline]
    pub fn coords_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for k in (0..self.axes.len()).rev() {
            let n = self.axes[k].points;
            out[k] = self.axes[k].coord(rem % n);
            rem /= n;
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.coords_into(flat, &mut x);
        x
    }

    /// Same grid with every axis refined to `factor ×` its points (periodic)
    /// or `factor × (points − 1) + 1` (non-periodic), so the spacing divides by `factor`.
    pub fn refined(&self, factor: usize) -> GridSpec {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis {
                points: if a.periodic { a.points * factor } else { (a.points - 1) * factor + 1 },
                ..a.clone()
            })
            .collect();
        GridSpec { axes }
    }

    fn is_boundary(&self, flat: usize) -> bool {
        self.axes.iter().enumerate().any(|(k, a)| {
            !a.periodic && {
                let i = self.index_along(flat, k);
                i == 0 || i + 1 == a.points
            }
        })
    }

    fn weight(&self, flat: usize) -> f64 {
        self.axes.iter().enumerate().map(|(k, a)| a.weight(self.index_along(flat, k))).product()
    }
}

/// A scalar function sampled on a grid in a chart, optionally remembering
/// the closed form it was sampled from.
#[derive(Clone, Debug)]
pub struct GridField {
    chart: Chart,
    grid: GridSpec,
    samples: Vec<f64>,
    analytic: Option<ClosedForm>,
}

/// Samples `form` on every grid point; the result keeps `form` as its analytic part.
pub fn sample_field(chart: &Chart, grid: &GridSpec, form: &ClosedForm) -> Result<GridField> {
    if grid.dim() != chart.dim() {
        return Err(Error::Mismatch);
    }
    let samples: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; grid.dim()],
            |x, i| {
                grid.coords_into(i, x);
                form.eval(x)
            },
        )
        .collect();
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(GridField { chart: chart.clone(), grid: grid.clone(), samples, analytic: Some(form.clone()) })
}

impl GridField {
    pub fn from_samples(chart: &Chart, grid: &GridSpec, samples: Vec<f64>) -> Result<Self> {
        if grid.dim() != chart.dim() || samples.len() != grid.len() {
            return Err(Error::Mismatch);
        }
        if let Some((index, &value)) = samples.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(GridField { chart: chart.clone(), grid: grid.clone(), samples, analytic: None })
    }

    pub fn constant(chart: &Chart, grid: &GridSpec, c: f64) -> Result<Self> {
        sample_field(chart, grid, &ClosedForm::constant(c))
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn analytic(&self) -> Option<&ClosedForm> {
        self.analytic.as_ref()
    }

    pub fn same_domain(&self, other: &GridField) -> bool {
        self.chart == other.chart && self.grid == other.grid
    }

    pub fn zip_with(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> Result<GridField> {
        if !self.same_domain(other) {
            return Err(Error::Mismatch);
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        GridField::from_samples(&self.chart, &self.grid, samples)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridField> {
        GridField::from_samples(&self.chart, &self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridField) -> Result<GridField> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, k: f64) -> Result<GridField> {
        self.map(|v| k * v)
    }

    pub fn c0_norm(&self) -> f64 {
        c0_norm(self)
    }

    /// Largest absolute sample on the non-periodic boundary faces.
    pub fn boundary_max(&self) -> f64 {
        (0..self.grid.len())
            .filter(|&i| self.grid.is_boundary(i))
            .map(|i| self.samples[i].abs())
            .fold(0.0, f64::max)
    }

    /// Whether the field vanishes (to `1e-9 ×` its norm) on the boundary.
    pub fn is_compactly_supported(&self) -> bool {
        let norm = self.c0_norm();
        self.boundary_max() <= 1e-9 * norm
    }

    /// Grid average of the samples, weighted by the trapezoid rule.
    pub fn mean(&self) -> f64 {
        let vol: f64 = self.grid.axes.iter().map(|a| a.max - a.min).product();
        raw_quadrature(self) / vol
    }

    /// `# chart=<kind> axes=<names> dims=<points>` then `coords..., value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(
            out,
            "# chart={} axes={} dims={}",
            self.chart.name(),
            self.chart.coordinate_names().join(","),
            self.grid.shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x")
        )?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        let mut x = vec![0.0; self.grid.dim()];
        let mut row: Vec<String> = Vec::with_capacity(x.len() + 1);
        for (i, v) in self.samples.iter().enumerate() {
            self.grid.coords_into(i, &mut x);
            row.clear();
            row.extend(x.iter().map(|c| c.to_string()));
            row.push(v.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a field written by [`GridField::write_csv`] on a known grid.
    pub fn read_csv<R: Read>(input: R, grid: &GridSpec) -> Result<GridField> {
        let mut reader = BufReader::new(input);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim_end();
        let mut kind = None;
        let mut dims = None;
        for part in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = part.strip_prefix("chart=") {
                kind = Some(v.to_string());
            } else if let Some(v) = part.strip_prefix("dims=") {
                dims = Some(v.to_string());
            }
        }
        let kind = kind.ok_or_else(|| Error::Parse("missing chart= in header".into()))?;
        let dims = dims.ok_or_else(|| Error::Parse("missing dims= in header".into()))?;
        let shape: Vec<usize> = dims
            .split('x')
            .map(|d| d.parse().map_err(|_| Error::Parse(format!("bad dims `{dims}`"))))
            .collect::<Result<_>>()?;
        if shape != grid.shape() {
            return Err(Error::Mismatch);
        }
        let chart_dim = match kind.as_str() {
            "cartesian" => Some(shape.len()),
            k if k.starts_with("symplectization") => Some(shape.len() - 2),
            _ => None,
        };
        let chart = make_chart(&kind, chart_dim)?;
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut samples = Vec::with_capacity(grid.len());
        for rec in r.records() {
            let rec = rec?;
            let v = rec
                .get(rec.len() - 1)
                .ok_or_else(|| Error::Parse("empty row".into()))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            samples.push(v);
        }
        GridField::from_samples(&chart, grid, samples)
    }
}

/// Sup norm approximated by the grid maximum of `|samples|`.
pub fn c0_norm(field: &GridField) -> f64 {
    field.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Tensor-product trapezoid rule. Logs a warning when the field does not
/// vanish on the non-periodic boundary.
pub fn quadrature(field: &GridField) -> f64 {
    if let Err(e) = check_support(field) {
        log::warn!("quadrature: {e}");
    }
    raw_quadrature(field)
}

/// Like [`quadrature`], but a support leak is an error.
pub fn quadrature_checked(field: &GridField) -> Result<f64> {
    check_support(field)?;
    Ok(raw_quadrature(field))
}

fn check_support(field: &GridField) -> Result<()> {
    let limit = 1e-9 * field.c0_norm();
    let boundary = field.boundary_max();
    if boundary > limit {
        Err(Error::SupportLeak { boundary, limit })
    } else {
        Ok(())
    }
}

fn raw_quadrature(field: &GridField) -> f64 {
    let g = &field.grid;
    // Sum per contiguous line first so the reduction order is fixed.
    let last = g.axes.last().map(|a| a.points).unwrap_or(1);
    field
        .samples
        .par_chunks(last)
        .enumerate()
        .map(|(line, chunk)| {
            let base = line * last;
            chunk.iter().enumerate().map(|(k, v)| v * g.weight(base + k)).sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    fn cart() -> Chart {
        make_chart("cartesian", Some(2)).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![Axis::new(1.0, 0.0, 8)]).is_err());
        assert!(GridSpec::new(vec![Axis::new(0.0, 1.0, 3)]).is_err());
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 5), Axis::periodic(0.0, TAU, 8)]).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g.point(39), vec![1.0, TAU * 7.0 / 8.0]);
    }

    #[test]
    fn constant_samples_and_norm() {
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 6), Axis::new(0.0, 1.0, 7)]).unwrap();
        let f = GridField::constant(&cart(), &g, 1.0).unwrap();
        assert!(f.samples().iter().all(|&v| v == 1.0));
        assert_eq!(f.c0_norm(), 1.0);
        assert!((quadrature(&f) - 1.0).abs() < 1e-15);
        let z = GridField::constant(&cart(), &g, 0.0).unwrap();
        assert_eq!(z.c0_norm(), 0.0);
    }

    #[test]
    fn non_finite_rejected() {
        let g = GridSpec::new(vec![Axis::new(-1.0, 1.0, 5), Axis::new(-1.0, 1.0, 5)]).unwrap();
        let r = sample_field(&cart(), &g, &ClosedForm::new(|x| 1.0 / x[0]));
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn odd_function_integrates_to_zero() {
        let g = GridSpec::new(vec![Axis::new(-1.0, 1.0, 41), Axis::new(-2.0, 2.0, 33)]).unwrap();
        let f = sample_field(&cart(), &g, &ClosedForm::new(|x| x[0].powi(3) * (x[1] * 2.0).cos())).unwrap();
        assert!(quadrature(&f).abs() < 1e-12);
    }

    #[test]
    fn periodic_quadrature_is_spectral() {
        let g = GridSpec::new(vec![Axis::periodic(0.0, TAU, 16), Axis::periodic(0.0, TAU, 16)]).unwrap();
        let f = sample_field(&cart(), &g, &ClosedForm::new(|x| (x[0].cos() + 2.0).powi(2))).unwrap();
        // ∫∫ (cos q + 2)² = 2π·2π·(1/2 + 4)
        assert!((quadrature_checked(&f).unwrap() - 4.5 * 4.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn support_leak_is_reported() {
        let g = GridSpec::new(vec![Axis::new(0.0, 1.0, 6), Axis::new(0.0, 1.0, 6)]).unwrap();
        let f = GridField::constant(&cart(), &g, 1.0).unwrap();
        assert!(matches!(quadrature_checked(&f), Err(Error::SupportLeak { .. })));
        assert!(!f.is_compactly_supported());
    }

    #[test]
    fn triangle_inequality_with_constant() {
        let g = GridSpec::new(vec![Axis::new(-1.0, 1.0, 9), Axis::new(-1.0, 1.0, 9)]).unwrap();
        let f = sample_field(&cart(), &g, &ClosedForm::new(|x| x[0] * x[1] - 0.3)).unwrap();
        for c in [-2.0, -0.1, 0.0, 0.5, 3.0] {
            assert!(f.map(|v| v + c).unwrap().c0_norm() <= f.c0_norm() + f64::abs(c) + 1e-15);
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let chart = make_chart("polar", None).unwrap();
        let g = GridSpec::new(vec![Axis::new(0.05, 1.0, 4), Axis::periodic(0.0, TAU, 5)]).unwrap();
        let f = sample_field(&chart, &g, &ClosedForm::new(|x| x[0] * x[1].cos())).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "# chart=polar_r2 axes=r,theta dims=4x5");
        assert_eq!(text.lines().count(), 21);
        let back = GridField::read_csv(buf.as_slice(), &g).unwrap();
        assert_eq!(back.samples(), f.samples());
        assert_eq!(back.chart(), f.chart());
    }
}
