//! The named pseudo-representation examples and their convergence runs.

use std::f64::consts::{SQRT_2, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bracket::{poisson_bracket_with, DerivativeMode};
use crate::chart::{make_chart, Chart};
use crate::error::{Error, Result};
use crate::flows::HamiltonianField;
use crate::function::{ClosedForm, Cutoff};
use crate::grid::{Axis, GridSpec};
use crate::lie::{abelian, heisenberg3, CoefficientNorm, NormedLieAlgebra};
use crate::pseudo_rep::{BasisImages, LimitReport, PseudoRepresentation};

/// Bracket constant of the cylinder pair `e^{s/2}cos(nθ)/√n`, `e^{s/2}sin(nθ)/√n`
/// for `ω = eˢ ds∧dθ`.
pub const CYLINDER_KAPPA: f64 = 0.5;
/// The constant printed for the same bracket in the source text; only echoed.
pub const CYLINDER_STATED_CONSTANT: f64 = 2.0;

pub const GALLERY_NAMES: [&str; 4] =
    ["remark2_cartesian", "polterovich_polar", "cylinder_heisenberg", "symplectization_transverse"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryOptions {
    /// Support half-width of the cutoff `χ`.
    pub chi_radius: f64,
    /// Constant used for the central image in the cylinder example; `None`
    /// uses the bracket constant, making the defect vanish.
    pub cylinder_center: Option<f64>,
}

impl Default for GalleryOptions {
    fn default() -> Self {
        GalleryOptions { chi_radius: 1.0, cylinder_center: None }
    }
}

/// A named example: basis images depending on `n`, their claimed limits,
/// a default sampling grid and the canonical pair `(f, g)`.
pub struct GalleryEntry {
    pub name: &'static str,
    pub chart: Chart,
    pub algebra: NormedLieAlgebra,
    pub grid: GridSpec,
    pub images: BasisImages,
    pub limits: Vec<HamiltonianField>,
    pub pair: (usize, usize),
    pub cutoff: Option<Cutoff>,
    pub expected: Vec<String>,
}

impl std::fmt::Debug for GalleryEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GalleryEntry").field("name", &self.name).field("chart", &self.chart).finish()
    }
}

/// `a·cos(nθ) + b·sin(nθ)` style trigonometric factor and its derivative.
fn trig(n: f64, sine: bool) -> (impl Fn(f64) -> f64 + Copy, impl Fn(f64) -> f64 + Copy) {
    let v = move |t: f64| if sine { (n * t).sin() } else { (n * t).cos() };
    let d = move |t: f64| if sine { n * (n * t).cos() } else { -n * (n * t).sin() };
    (v, d)
}

fn remark2_images(chart: &Chart, cutoff: Cutoff) -> BasisImages {
    let chart = chart.clone();
    Arc::new(move |n, i| {
        let nf = n as f64;
        let rn = nf.sqrt();
        let (v, d) = trig(nf, i == 1);
        let form = ClosedForm::with_gradient(
            move |x| cutoff.value(x[1]) * v(x[0]) / rn,
            move |x, g| {
                g[0] = cutoff.value(x[1]) * d(x[0]) / rn;
                g[1] = cutoff.derivative(x[1]) * v(x[0]) / rn;
            },
        );
        HamiltonianField::new(&chart, form)
    })
}

fn polar_images(chart: &Chart) -> BasisImages {
    let chart = chart.clone();
    Arc::new(move |n, i| {
        if i == 2 {
            return HamiltonianField::new(&chart, ClosedForm::constant(1.0));
        }
        let nf = n as f64;
        let rn = nf.sqrt();
        let (v, d) = trig(nf, i == 1);
        let form = ClosedForm::with_gradient(
            move |x| x[0] * v(x[1]) / rn,
            move |x, g| {
                g[0] = v(x[1]) / rn;
                g[1] = x[0] * d(x[1]) / rn;
            },
        );
        HamiltonianField::new(&chart, form)
    })
}

fn cylinder_images(chart: &Chart, center: f64) -> BasisImages {
    let chart = chart.clone();
    Arc::new(move |n, i| {
        if i == 2 {
            return HamiltonianField::new(&chart, ClosedForm::constant(center));
        }
        let nf = n as f64;
        let rn = nf.sqrt();
        let (v, d) = trig(nf, i == 1);
        let form = ClosedForm::with_gradient(
            move |x| (0.5 * x[0]).exp() * v(x[1]) / rn,
            move |x, g| {
                let e = (0.5 * x[0]).exp();
                g[0] = 0.5 * e * v(x[1]) / rn;
                g[1] = e * d(x[1]) / rn;
            },
        );
        HamiltonianField::new(&chart, form)
    })
}

/// `χ(|z|)` on the transverse coordinates `z = (x, y)` and its gradient.
fn radial_cutoff(cutoff: Cutoff, x: &[f64]) -> (f64, f64, f64) {
    let r = x[2].hypot(x[3]);
    if r == 0.0 {
        return (cutoff.value(0.0), 0.0, 0.0);
    }
    let dc = cutoff.derivative(r);
    (cutoff.value(r), dc * x[2] / r, dc * x[3] / r)
}

fn symplectization_images(chart: &Chart, cutoff: Cutoff) -> BasisImages {
    let chart = chart.clone();
    Arc::new(move |n, i| {
        if i == 2 {
            let form = ClosedForm::with_gradient(
                move |x| CYLINDER_KAPPA * radial_cutoff(cutoff, x).0.powi(2),
                move |x, g| {
                    let (c, cx, cy) = radial_cutoff(cutoff, x);
                    g[0] = 0.0;
                    g[1] = 0.0;
                    g[2] = 2.0 * CYLINDER_KAPPA * c * cx;
                    g[3] = 2.0 * CYLINDER_KAPPA * c * cy;
                },
            );
            return HamiltonianField::new(&chart, form);
        }
        let nf = n as f64;
        let rn = nf.sqrt();
        let (v, d) = trig(nf, i == 1);
        let form = ClosedForm::with_gradient(
            move |x| radial_cutoff(cutoff, x).0 * (0.5 * x[0]).exp() * v(x[1]) / rn,
            move |x, g| {
                let (c, cx, cy) = radial_cutoff(cutoff, x);
                let e = (0.5 * x[0]).exp() / rn;
                g[0] = 0.5 * c * e * v(x[1]);
                g[1] = c * e * d(x[1]);
                g[2] = cx * e * v(x[1]);
                g[3] = cy * e * v(x[1]);
            },
        );
        HamiltonianField::new(&chart, form)
    })
}

pub fn gallery(name: &str) -> Result<GalleryEntry> {
    gallery_with(name, &GalleryOptions::default())
}

pub fn gallery_with(name: &str, opts: &GalleryOptions) -> Result<GalleryEntry> {
    if !(opts.chi_radius > 0.0 && opts.chi_radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("cutoff radius {}", opts.chi_radius)));
    }
    let cutoff = Cutoff { radius: opts.chi_radius };
    // Sum-coefficient norm: unit basis vectors, so ‖Bₙ‖ is the defect of the canonical pair.
    let sum = CoefficientNorm::sum();
    match name {
        "remark2_cartesian" => {
            let chart = make_chart("cartesian", Some(2))?;
            let r = 1.2 * cutoff.radius;
            let grid = GridSpec::new(vec![Axis::periodic(0.0, TAU, 128), Axis::new(-r, r, 481)])?;
            let zero = HamiltonianField::zero(&chart);
            Ok(GalleryEntry {
                name: "remark2_cartesian",
                images: remark2_images(&chart, cutoff),
                limits: vec![zero.clone(), zero],
                algebra: abelian(2)?.with_norm(sum),
                grid,
                pair: (0, 1),
                cutoff: Some(cutoff),
                expected: vec![
                    "images converge to 0 in C0 at rate 1/sqrt(n)".into(),
                    "bracket equals -chi(p)chi'(p) for every n, so the defect stays at max|chi chi'|".into(),
                    "not a pseudo-representation".into(),
                ],
                chart,
            })
        }
        "polterovich_polar" => {
            let chart = make_chart("polar", None)?;
            let grid = GridSpec::new(vec![Axis::new(0.05, 2.0, 256), Axis::periodic(0.0, TAU, 512)])?;
            let zero = HamiltonianField::zero(&chart);
            Ok(GalleryEntry {
                name: "polterovich_polar",
                images: polar_images(&chart),
                limits: vec![zero.clone(), zero, HamiltonianField::new(&chart, ClosedForm::constant(1.0))?],
                algebra: heisenberg3().with_norm(sum),
                grid,
                pair: (0, 1),
                cutoff: None,
                expected: vec![
                    "{F_n,G_n} = 1 = rho_n(h): defect identically 0".into(),
                    "sup of F_n on r <= 1 is 1/sqrt(n)".into(),
                    "limit (0,0,1) is not a representation; limits are not compactly supported".into(),
                ],
                chart,
            })
        }
        "cylinder_heisenberg" => {
            let chart = make_chart("cylinder", None)?;
            let grid = GridSpec::new(vec![Axis::new(-3.0, 3.0, 241), Axis::periodic(0.0, TAU, 512)])?;
            let center = opts.cylinder_center.unwrap_or(CYLINDER_KAPPA);
            let zero = HamiltonianField::zero(&chart);
            Ok(GalleryEntry {
                name: "cylinder_heisenberg",
                images: cylinder_images(&chart, center),
                limits: vec![zero.clone(), zero, HamiltonianField::new(&chart, ClosedForm::constant(center))?],
                algebra: heisenberg3().with_norm(sum),
                grid,
                pair: (0, 1),
                cutoff: None,
                expected: vec![
                    format!("bracket of the pair is the constant {CYLINDER_KAPPA}"),
                    format!("defect is |{CYLINDER_KAPPA} - center| = {}", (CYLINDER_KAPPA - center).abs()),
                    "sup of rho_n(f) on s in [-3,3] is e^1.5/sqrt(n)".into(),
                ],
                chart,
            })
        }
        "symplectization_transverse" => {
            let chart = make_chart("symplectization", Some(2))?;
            let r = 1.2 * cutoff.radius;
            let grid = GridSpec::new(vec![
                Axis::new(-1.0, 1.0, 9),
                Axis::periodic(0.0, TAU, 64),
                Axis::new(-r, r, 41),
                Axis::new(-r, r, 41),
            ])?;
            let zero = HamiltonianField::zero(&chart);
            let images = symplectization_images(&chart, cutoff);
            let center = images(1, 2)?;
            Ok(GalleryEntry {
                name: "symplectization_transverse",
                images,
                limits: vec![zero.clone(), zero, center],
                algebra: heisenberg3().with_norm(sum),
                grid,
                pair: (0, 1),
                cutoff: Some(cutoff),
                expected: vec![
                    format!("bracket of the pair is {CYLINDER_KAPPA} chi(|z|)^2 = rho_n(h): defect 0"),
                    "all images vanish for |z| > chi radius".into(),
                ],
                chart,
            })
        }
        other => Err(Error::UnknownEntry(other.to_string())),
    }
}

impl GalleryEntry {
    pub fn representation(&self, n_set: Vec<u32>) -> Result<PseudoRepresentation> {
        self.representation_on(n_set, self.grid.clone())
    }

    pub fn representation_on(&self, n_set: Vec<u32>, grid: GridSpec) -> Result<PseudoRepresentation> {
        PseudoRepresentation::new(self.algebra.clone(), self.chart.clone(), grid, n_set, self.images.clone())?
            .with_limits(self.limits.clone())
    }

    pub fn image(&self, n: u32, i: usize) -> Result<HamiltonianField> {
        (self.images)(n, i)
    }

    /// A grid from which the flow of the `g` image for time `s` stays inside
    /// the chart's evaluable region: radial speeds are at most `√n`
    /// (polar) and `√(n/2)` in `r = √2 e^{s/2}` (cylinder, symplectization), so the inner
    /// radius is pushed out by that distance with 20% margin.
    pub fn lemma3_grid(&self, n: u32, s: f64) -> Result<GridSpec> {
        let nf = n as f64;
        let theta = Axis::periodic(0.0, TAU, (8 * n as usize).max(64));
        match self.name {
            "polterovich_polar" => {
                let r_in = 0.05 + 1.2 * nf.sqrt() * s.abs();
                GridSpec::new(vec![Axis::new(r_in, r_in + 1.5, 16), theta])
            }
            "cylinder_heisenberg" => {
                let r_floor = SQRT_2 * (-3.0f64 / 2.0).exp();
                let r_in = r_floor + 1.2 * (nf / 2.0).sqrt() * s.abs();
                let to_s = |r: f64| 2.0 * (r / SQRT_2).ln();
                GridSpec::new(vec![Axis::new(to_s(r_in), to_s(r_in + 1.5), 16), theta])
            }
            "remark2_cartesian" => {
                let r = 1.2 * self.cutoff.map_or(1.0, |c| c.radius);
                GridSpec::new(vec![theta, Axis::new(-r, r, 49)])
            }
            "symplectization_transverse" => {
                // Same radial speed bound as the cylinder, since χ ≤ 1.
                let r_in = SQRT_2 * (-0.25f64).exp() + 1.2 * (nf / 2.0).sqrt() * s.abs();
                let to_s = |r: f64| 2.0 * (r / SQRT_2).ln();
                let r = 1.2 * self.cutoff.map_or(1.0, |c| c.radius);
                GridSpec::new(vec![
                    Axis::new(to_s(r_in), to_s(r_in + 0.6), 4),
                    Axis::periodic(0.0, TAU, (4 * n as usize).max(32)),
                    Axis::new(-r, r, 9),
                    Axis::new(-r, r, 9),
                ])
            }
            _ => Ok(self.grid.clone()),
        }
    }

    /// Where the images vanish and how far they are from normalized.
    pub fn diagnostics(&self, n: u32) -> Result<GalleryDiagnostics> {
        let samples: Vec<_> =
            (0..self.algebra.dim()).map(|i| self.image(n, i)?.sample(&self.grid)).collect::<Result<_>>()?;
        let len = self.grid.len();
        let vanishing = (0..len).filter(|&k| samples.iter().all(|s| s.samples()[k] == 0.0)).count();
        Ok(GalleryDiagnostics {
            n,
            vanishing_fraction: vanishing as f64 / len as f64,
            compactly_supported: samples.iter().map(|s| s.is_compactly_supported()).collect(),
            means: samples.iter().map(|s| s.mean()).collect(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryDiagnostics {
    pub n: u32,
    /// Fraction of grid points where every basis image vanishes.
    pub vanishing_fraction: f64,
    pub compactly_supported: Vec<bool>,
    pub means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u32,
    /// `‖ρₙ(eᵢ) − ρ(eᵢ)‖` per basis element.
    pub image_distance: Vec<f64>,
    pub defect_norm: f64,
    /// `‖{ρₙ(f),ρₙ(g)}‖` for the canonical pair.
    pub bracket_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub entry: String,
    pub rows: Vec<ConvergenceRow>,
    pub limit: LimitReport,
}

impl ConvergenceTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let dim = self.rows.first().map_or(0, |r| r.image_distance.len());
        let mut header = vec!["n".to_string()];
        header.extend((0..dim).map(|i| format!("image_distance_{i}")));
        header.extend(["defect_norm".to_string(), "bracket_norm".to_string()]);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut row = vec![r.n.to_string()];
            row.extend(r.image_distance.iter().map(|v| v.to_string()));
            row.push(r.defect_norm.to_string());
            row.push(r.bracket_norm.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_convergence(entry: &GalleryEntry, n_set: &[u32]) -> Result<ConvergenceTable> {
    let rep = entry.representation(n_set.to_vec())?.with_derivative_mode(DerivativeMode::Exact);
    let (fi, gi) = entry.pair;
    let (f, g) = (entry.algebra.basis(fi), entry.algebra.basis(gi));
    let mut rows = Vec::with_capacity(n_set.len());
    for &n in n_set {
        let image_distance = entry
            .limits
            .iter()
            .enumerate()
            .map(|(i, l)| Ok(entry.image(n, i)?.sample(&entry.grid)?.sub(&l.sample(&entry.grid)?)?.c0_norm()))
            .collect::<Result<Vec<_>>>()?;
        let bracket = poisson_bracket_with(
            &rep.rho(n, &f)?.sample(&entry.grid)?,
            &rep.rho(n, &g)?.sample(&entry.grid)?,
            DerivativeMode::Exact,
        )?;
        rows.push(ConvergenceRow {
            n,
            image_distance,
            defect_norm: rep.defect_norm(n)?.defect_norm_estimate,
            bracket_norm: bracket.c0_norm(),
        });
    }
    let limit = rep.limit_representation_check(&f, &g, 1e-8)?;
    Ok(ConvergenceTable { entry: entry.name.to_string(), rows, limit })
}
