//! Sequences of linear maps from a normed Lie algebra into Hamiltonians,
//! their defects, the truncated ad-series and its remainder bound.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bracket::{poisson_bracket_with, DerivativeMode};
use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::flows::{pullback, HamiltonianField, StepControl};
use crate::grid::{GridField, GridSpec};
use crate::lie::{ad_power, bracket, bracket_norm_constant, AlgebraElement, BracketConstant, NormKind, NormedLieAlgebra};

/// `(n, basis index) ↦ ρₙ(eᵢ)`.
pub type BasisImages = Arc<dyn Fn(u32, usize) -> Result<HamiltonianField> + Send + Sync>;

const RANDOM_UNIT_PAIRS: usize = 256;
const DEFECT_SEED: u64 = 0xdefec7;

pub struct PseudoRepresentation {
    algebra: NormedLieAlgebra,
    chart: Chart,
    grid: GridSpec,
    n_set: Vec<u32>,
    images: BasisImages,
    limits: Option<Vec<HamiltonianField>>,
    mode: DerivativeMode,
    defects: Mutex<BTreeMap<u32, DefectReport>>,
    rep_bound: OnceLock<f64>,
}

impl std::fmt::Debug for PseudoRepresentation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PseudoRepresentation")
            .field("algebra", &self.algebra)
            .field("chart", &self.chart)
            .field("n_set", &self.n_set)
            .field("has_limits", &self.limits.is_some())
            .finish()
    }
}

/// Defect and image-size estimates at one index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub n: u32,
    /// `sup ‖Bₙ(x,y)‖` over the sampled unit pairs.
    pub defect_norm_estimate: f64,
    /// `sup ‖ρₙ(x)‖` over the sampled unit vectors.
    pub rep_norm_estimate: f64,
    pub constant: BracketConstant,
    pub samples: usize,
}

impl PseudoRepresentation {
    pub fn new(
        algebra: NormedLieAlgebra,
        chart: Chart,
        grid: GridSpec,
        n_set: Vec<u32>,
        images: BasisImages,
    ) -> Result<Self> {
        if n_set.is_empty() || n_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("index set {n_set:?} must be nonempty and increasing")));
        }
        if grid.dim() != chart.dim() {
            return Err(Error::Mismatch);
        }
        Ok(PseudoRepresentation {
            algebra,
            chart,
            grid,
            n_set,
            images,
            limits: None,
            mode: DerivativeMode::Auto,
            defects: Mutex::new(BTreeMap::new()),
            rep_bound: OnceLock::new(),
        })
    }

    pub fn with_limits(mut self, limits: Vec<HamiltonianField>) -> Result<Self> {
        if limits.len() != self.algebra.dim() || limits.iter().any(|l| l.chart() != &self.chart) {
            return Err(Error::Mismatch);
        }
        self.limits = Some(limits);
        Ok(self)
    }

    pub fn with_derivative_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    /// Same maps on another index set and grid.
    pub fn restricted(&self, n_set: Vec<u32>, grid: GridSpec) -> Result<Self> {
        let mut r = PseudoRepresentation::new(self.algebra.clone(), self.chart.clone(), grid, n_set, self.images.clone())?;
        r.limits = self.limits.clone();
        r.mode = self.mode;
        Ok(r)
    }

    pub fn algebra(&self) -> &NormedLieAlgebra {
        &self.algebra
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n_set(&self) -> &[u32] {
        &self.n_set
    }

    pub fn has_limits(&self) -> bool {
        self.limits.is_some()
    }

    fn check_index(&self, n: u32) -> Result<()> {
        if self.n_set.contains(&n) {
            Ok(())
        } else {
            Err(Error::UnknownIndex(n))
        }
    }

    fn combine(&self, x: &AlgebraElement, image: impl Fn(usize) -> Result<HamiltonianField>) -> Result<HamiltonianField> {
        if x.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let fields = x
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| image(i).map(|h| (*c, h)))
            .collect::<Result<Vec<_>>>()?;
        if fields.is_empty() {
            return Ok(HamiltonianField::zero(&self.chart));
        }
        let terms: Vec<(f64, &HamiltonianField)> = fields.iter().map(|(c, h)| (*c, h)).collect();
        HamiltonianField::linear_combination(&self.chart, &terms)
    }

    /// `ρₙ(x) = Σ xᵢ ρₙ(eᵢ)`.
    pub fn rho(&self, n: u32, x: &AlgebraElement) -> Result<HamiltonianField> {
        self.check_index(n)?;
        self.combine(x, |i| (self.images)(n, i))
    }

    /// The claimed limit `ρ(x)`.
    pub fn limit(&self, x: &AlgebraElement) -> Result<HamiltonianField> {
        let limits = self.limits.as_ref().ok_or(Error::MissingLimit)?;
        self.combine(x, |i| Ok(limits[i].clone()))
    }

    fn bracket_on(&self, a: &HamiltonianField, b: &HamiltonianField, grid: &GridSpec) -> Result<GridField> {
        poisson_bracket_with(&a.sample(grid)?, &b.sample(grid)?, self.mode)
    }

    /// `Bₙ(f,g) = {ρₙ(f),ρₙ(g)} − ρₙ([f,g])` on the representation grid.
    pub fn defect_field(&self, n: u32, f: &AlgebraElement, g: &AlgebraElement) -> Result<GridField> {
        let (rf, rg) = (self.rho(n, f)?, self.rho(n, g)?);
        let rfg = self.rho(n, &bracket(f, g)?)?;
        self.bracket_on(&rf, &rg, &self.grid)?.sub(&rfg.sample(&self.grid)?)
    }

    /// Unit vectors and unit pairs probed by the sup estimates: normalized
    /// basis vectors, the sign-vector vertices of the max-norm ball
    /// (dimension ≤ 6) and seeded random directions.
    fn unit_samples(&self) -> (Vec<Vec<f64>>, Vec<(Vec<f64>, Vec<f64>)>) {
        let d = self.algebra.dim();
        let norm = self.algebra.norm_spec();
        let unit = |v: Vec<f64>| {
            let k = norm.eval(&v);
            v.into_iter().map(|c| c / k).collect::<Vec<_>>()
        };
        let mut vectors: Vec<Vec<f64>> = (0..d)
            .map(|i| unit((0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()))
            .collect();
        if norm.kind == NormKind::MaxCoefficient && d <= 6 {
            for m in 0..1usize << d {
                vectors.push(unit((0..d).map(|b| if m >> b & 1 == 1 { -1.0 } else { 1.0 }).collect()));
            }
        }
        let mut pairs = Vec::new();
        for a in &vectors {
            for b in &vectors {
                pairs.push((a.clone(), b.clone()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(DEFECT_SEED);
        let mut random = || unit((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
        for _ in 0..RANDOM_UNIT_PAIRS {
            let (a, b) = (random(), random());
            vectors.push(a.clone());
            pairs.push((a, b));
        }
        (vectors, pairs)
    }

    /// Estimates `‖Bₙ‖` and `‖ρₙ‖` by sampling unit pairs; the defect of a
    /// pair is assembled bilinearly from the basis defects `Bₙ(eᵢ,eⱼ)`.
    pub fn defect_norm(&self, n: u32) -> Result<DefectReport> {
        self.check_index(n)?;
        if let Some(r) = self.defects.lock().expect("defect cache").get(&n) {
            return Ok(r.clone());
        }
        let d = self.algebra.dim();
        let images: Vec<GridField> =
            (0..d).map(|i| (self.images)(n, i)?.sample(&self.grid)).collect::<Result<_>>()?;
        let mut basis_defects: Vec<Option<GridField>> = vec![None; d * d];
        for i in 0..d {
            for j in i + 1..d {
                let field = self.defect_field(n, &self.algebra.basis(i), &self.algebra.basis(j))?;
                basis_defects[i * d + j] = Some(field);
            }
        }
        let len = self.grid.len();
        let (vectors, pairs) = self.unit_samples();
        let mut rep_norm: f64 = 0.0;
        let mut buf = vec![0.0; len];
        for v in &vectors {
            buf.iter_mut().for_each(|b| *b = 0.0);
            for (c, img) in v.iter().zip(&images) {
                if *c != 0.0 {
                    buf.iter_mut().zip(img.samples()).for_each(|(b, s)| *b += c * s);
                }
            }
            rep_norm = rep_norm.max(buf.iter().fold(0.0, |m, b| m.max(b.abs())));
        }
        let mut defect: f64 = 0.0;
        for (x, y) in &pairs {
            buf.iter_mut().for_each(|b| *b = 0.0);
            for i in 0..d {
                for j in i + 1..d {
                    let w = x[i] * y[j] - x[j] * y[i];
                    if w != 0.0 {
                        let field = basis_defects[i * d + j].as_ref().expect("upper triangle");
                        buf.iter_mut().zip(field.samples()).for_each(|(b, s)| *b += w * s);
                    }
                }
            }
            defect = defect.max(buf.iter().fold(0.0, |m, b| m.max(b.abs())));
        }
        let report = DefectReport {
            n,
            defect_norm_estimate: defect,
            rep_norm_estimate: rep_norm,
            constant: bracket_norm_constant(&self.algebra),
            samples: pairs.len(),
        };
        self.defects.lock().expect("defect cache").insert(n, report.clone());
        Ok(report)
    }

    /// `R = max_n ‖ρₙ‖` over the configured index set.
    pub fn rep_bound(&self) -> Result<f64> {
        if let Some(r) = self.rep_bound.get() {
            return Ok(*r);
        }
        let mut r: f64 = 0.0;
        for &n in &self.n_set {
            r = r.max(self.defect_norm(n)?.rep_norm_estimate);
        }
        Ok(*self.rep_bound.get_or_init(|| r))
    }

    /// The algebra element `Σ_{j≤N} ad(g)ʲf sʲ/j!`.
    pub fn ad_series_element(f: &AlgebraElement, g: &AlgebraElement, s: f64, big_n: usize) -> Result<AlgebraElement> {
        let mut sum = f.clone();
        let mut term = f.clone();
        let mut coeff = 1.0;
        for j in 1..=big_n {
            term = ad_power(g, &term, 1)?;
            if term.is_zero() {
                break;
            }
            coeff *= s / j as f64;
            sum = sum.axpy(coeff, &term)?;
        }
        Ok(sum)
    }

    /// `ρₙ(Σ_{j≤N} ad(g)ʲf sʲ/j!)` sampled on `grid`.
    pub fn ad_series(&self, n: u32, f: &AlgebraElement, g: &AlgebraElement, s: f64, big_n: usize, grid: &GridSpec) -> Result<GridField> {
        let x = Self::ad_series_element(f, g, s, big_n)?;
        self.rho(n, &x)?.sample(grid)
    }

    /// Compares `ρₙ(f)∘φ_{ρₙ(g)}^s` with the truncated ad-series on `grid`.
    #[allow(clippy::too_many_arguments)]
    pub fn lemma3_residual(
        &self,
        n: u32,
        f: &AlgebraElement,
        g: &AlgebraElement,
        s: f64,
        big_n: usize,
        grid: &GridSpec,
        opts: &Lemma3Options,
    ) -> Result<Lemma3Report> {
        let (rf, rg) = (self.rho(n, f)?, self.rho(n, g)?);
        let series = self.ad_series(n, f, g, s, big_n, grid)?;
        let composed = pullback(&rf, &rg, s, grid, &opts.step_control)?;
        let residual = composed.sub(&series)?.c0_norm();
        let report = self.defect_norm(n)?;
        let (nf, ng) = (f.norm(), g.norm());
        let defect_term = report.defect_norm_estimate * nf * (s * ng).exp();
        let tail = if ad_power(g, f, big_n + 1)?.is_zero() {
            0.0
        } else {
            tail_bound(self.rep_bound()?, report.constant.working, nf, ng, s, big_n + 1)
        };
        let bound = defect_term + tail;
        Ok(Lemma3Report {
            n,
            f_label: f.label(),
            g_label: g.label(),
            s,
            big_n,
            residual,
            bound,
            defect_norm: report.defect_norm_estimate,
            tail,
            slack: opts.slack,
            atol: opts.atol,
            pass: residual <= opts.slack * bound + opts.atol,
        })
    }

    /// Checks whether the claimed limit is a representation, given the
    /// trend of the defects along the index set.
    pub fn limit_representation_check(&self, f: &AlgebraElement, g: &AlgebraElement, tol: f64) -> Result<LimitReport> {
        let limits = self.limits.as_ref().ok_or(Error::MissingLimit)?;
        let defect_norms = self
            .n_set
            .iter()
            .map(|&n| self.defect_norm(n).map(|r| (n, r.defect_norm_estimate)))
            .collect::<Result<Vec<_>>>()?;
        let (lf, lg) = (self.limit(f)?, self.limit(g)?);
        let lfg = self.limit(&bracket(f, g)?)?;
        let limit_bracket = self.bracket_on(&lf, &lg, &self.grid)?;
        let limit_residual = limit_bracket.sub(&lfg.sample(&self.grid)?)?.c0_norm();
        let last = *self.n_set.last().expect("nonempty index set");
        let naive_gap = self
            .bracket_on(&self.rho(last, f)?, &self.rho(last, g)?, &self.grid)?
            .sub(&limit_bracket)?
            .c0_norm();
        let limits_compact = limits
            .iter()
            .map(|l| l.sample(&self.grid).map(|s| s.is_compactly_supported()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .all(|c| c);
        let values: Vec<f64> = defect_norms.iter().map(|(_, d)| *d).collect();
        let verdict = match defect_trend(&values) {
            DefectTrend::Vanishing if limit_residual <= tol => Verdict::ConsistentRepresentation,
            DefectTrend::Vanishing if !limits_compact => Verdict::NoncompactCaveat,
            DefectTrend::Vanishing => Verdict::LimitNotRepresentation,
            DefectTrend::Stuck => Verdict::NotPseudoRepresentation,
            DefectTrend::Unclear => Verdict::Inconclusive,
        };
        Ok(LimitReport {
            f_label: f.label(),
            g_label: g.label(),
            defect_norms,
            limit_residual,
            naive_bracket_gap: naive_gap,
            limits_compactly_supported: limits_compact,
            verdict,
        })
    }

    /// `max_i ‖ρₙ(eᵢ) − ρ(eᵢ)‖` on the grid.
    pub fn distance_to_limit(&self, n: u32) -> Result<f64> {
        let limits = self.limits.as_ref().ok_or(Error::MissingLimit)?;
        let mut worst: f64 = 0.0;
        for (i, l) in limits.iter().enumerate() {
            let diff = (self.images)(n, i)?.sample(&self.grid)?.sub(&l.sample(&self.grid)?)?;
            worst = worst.max(diff.c0_norm());
        }
        Ok(worst)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Options {
    pub slack: f64,
    pub atol: f64,
    pub step_control: StepControl,
}

impl Default for Lemma3Options {
    fn default() -> Self {
        Lemma3Options { slack: 1.5, atol: 1e-4, step_control: StepControl::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub n: u32,
    pub f_label: String,
    pub g_label: String,
    pub s: f64,
    #[serde(rename = "N")]
    pub big_n: usize,
    /// `L`: sup-distance between the composed field and the series.
    pub residual: f64,
    /// `B = ‖Bₙ‖‖f‖exp(s‖g‖) + tail`.
    pub bound: f64,
    pub defect_norm: f64,
    pub tail: f64,
    pub slack: f64,
    pub atol: f64,
    pub pass: bool,
}

/// Rows `n,f_label,g_label,s,N,L,bound,pass`.
pub fn write_lemma3_csv<W: Write>(rows: &[Lemma3Report], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "f_label", "g_label", "s", "N", "L", "bound", "pass"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.f_label.clone(),
            r.g_label.clone(),
            r.s.to_string(),
            r.big_n.to_string(),
            r.residual.to_string(),
            r.bound.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Defects vanish and the limit brackets correctly.
    ConsistentRepresentation,
    /// Defects vanish but the limit fails to bracket correctly; some limit
    /// image is not compactly supported, so the compact-support theorem
    /// does not apply.
    NoncompactCaveat,
    /// Defects vanish, limits are compactly supported, yet the limit fails.
    LimitNotRepresentation,
    /// Defects stay bounded away from zero: a counterexample to the naive
    /// limit argument.
    NotPseudoRepresentation,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub f_label: String,
    pub g_label: String,
    pub defect_norms: Vec<(u32, f64)>,
    /// `‖{ρf,ρg} − ρ([f,g])‖`.
    pub limit_residual: f64,
    /// `‖{ρₙf,ρₙg} − {ρf,ρg}‖` at the largest index.
    pub naive_bracket_gap: f64,
    pub limits_compactly_supported: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefectTrend {
    Vanishing,
    Stuck,
    Unclear,
}

/// Vanishing: the last value is ≤ 1e−8, or the sequence is nonincreasing
/// within 10% and ends below a quarter of its start. Stuck: the last value
/// keeps at least 90% of the first and exceeds 1e−8.
pub fn defect_trend(values: &[f64]) -> DefectTrend {
    let (Some(&first), Some(&last)) = (values.first(), values.last()) else {
        return DefectTrend::Unclear;
    };
    let monotone = values.windows(2).all(|w| w[1] <= 1.1 * w[0]);
    if last <= 1e-8 || (monotone && last <= 0.25 * first) {
        DefectTrend::Vanishing
    } else if last >= 0.9 * first {
        DefectTrend::Stuck
    } else {
        DefectTrend::Unclear
    }
}

/// `R‖f‖ Σ_{j≥N} xʲ/j!` with `x = s·C·‖g‖`.
///
/// When `N ≤ x` the terms before `N` dominate and the tail is
/// `exp(x)` minus a compensated partial sum; otherwise the terms decrease
/// from `j = N` on and the tail is summed directly.
pub fn tail_bound(r: f64, c: f64, norm_f: f64, norm_g: f64, s: f64, big_n: usize) -> f64 {
    let scale = r * norm_f;
    if scale == 0.0 {
        return 0.0;
    }
    let x = s * c * norm_g;
    if x == 0.0 {
        return if big_n == 0 { scale } else { 0.0 };
    }
    if big_n == 0 {
        return scale * x.exp();
    }
    if (big_n as f64) <= x {
        let mut partial = Neumaier::default();
        let mut term = 1.0;
        for j in 0..big_n {
            if j > 0 {
                term *= x / j as f64;
            }
            partial.add(term);
        }
        return scale * (x.exp() - partial.value()).max(0.0);
    }
    // First tail term xᴺ/N!, built in log space to avoid overflow.
    let log_first = big_n as f64 * x.ln() - ln_factorial(big_n);
    let mut term = log_first.exp();
    let mut sum = Neumaier::default();
    let mut j = big_n;
    while term > 0.0 {
        sum.add(term);
        j += 1;
        term *= x / j as f64;
        if term < 1e-18 * sum.value() {
            break;
        }
    }
    scale * sum.value()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::make_chart;
    use crate::function::ClosedForm;
    use crate::grid::Axis;
    use crate::lie::{abelian, heisenberg3};
    use proptest::prelude::*;

    /// Oscillator-style Heisenberg representation on ℝ²: q, p, 1.
    fn exact_rep() -> PseudoRepresentation {
        let chart = make_chart("cartesian", Some(2)).unwrap();
        let grid = GridSpec::new(vec![Axis::new(-1.0, 1.0, 17), Axis::new(-1.0, 1.0, 17)]).unwrap();
        let c2 = chart.clone();
        let images: BasisImages = Arc::new(move |_n, i| {
            let form = match i {
                0 => ClosedForm::affine(vec![1.0, 0.0], 0.0),
                1 => ClosedForm::affine(vec![0.0, 1.0], 0.0),
                _ => ClosedForm::constant(1.0),
            };
            HamiltonianField::new(&c2, form)
        });
        PseudoRepresentation::new(heisenberg3(), chart, grid, vec![1, 2], images).unwrap()
    }

    #[test]
    fn tail_spot_value_against_summation() {
        let oracle: f64 = (10..40).rev().map(|j| 1.0 / (1..=j).map(|k| k as f64).product::<f64>()).sum();
        let t = tail_bound(1.0, 1.0, 1.0, 1.0, 1.0, 10);
        assert!((t - oracle).abs() < 1e-12 * oracle.max(1e-300) + 1e-22);
        assert!((t - 3.028_858_529_955_014e-7).abs() < 1e-18);
    }

    #[test]
    fn tail_trivial_cases() {
        assert_eq!(tail_bound(2.0, 1.0, 1.5, 1.0, 0.5, 0), 3.0 * 0.5f64.exp());
        assert_eq!(tail_bound(2.0, 1.0, 0.0, 1.0, 0.5, 3), 0.0);
        assert_eq!(tail_bound(1.0, 1.0, 1.0, 0.0, 1.0, 3), 0.0);
    }

    proptest! {
        #[test]
        fn partial_sum_plus_tail_is_exponential(x in 0.01f64..20.0, big_n in 0usize..40) {
            let mut partial = 0.0;
            let mut term = 1.0;
            for j in 0..big_n {
                if j > 0 { term *= x / j as f64; }
                partial += term;
            }
            let total = partial + tail_bound(1.0, 1.0, 1.0, 1.0, x, big_n);
            prop_assert!((total - x.exp()).abs() <= 1e-12 * x.exp());
        }

        #[test]
        fn tail_decreases_past_the_peak(x in 0.01f64..10.0) {
            let start = (std::f64::consts::E * x).ceil() as usize;
            for k in start..start + 20 {
                prop_assert!(tail_bound(1.0, 1.0, 1.0, 1.0, x, k + 1) <= tail_bound(1.0, 1.0, 1.0, 1.0, x, k));
            }
        }
    }

    #[test]
    fn exact_representation_has_zero_defect() {
        let rep = exact_rep();
        let r = rep.defect_norm(1).unwrap();
        assert!(r.defect_norm_estimate < 1e-12);
        // Vertex (1,1,1) of the max-norm ball maps to q + p + 1, which is 3 at (1,1).
        assert_eq!(r.rep_norm_estimate, 3.0);
        let a = rep.algebra().clone();
        assert!(matches!(rep.rho(3, &a.basis(0)), Err(Error::UnknownIndex(3))));
        let zero = rep.rho(1, &a.zero()).unwrap();
        assert_eq!(zero.value(&[0.3, 0.4]), 0.0);
    }

    #[test]
    fn ad_series_truncation_is_exact_for_heisenberg() {
        let a = heisenberg3();
        let (f, g) = (a.basis(0), a.basis(1));
        let e1 = PseudoRepresentation::ad_series_element(&f, &g, 0.7, 1).unwrap();
        let e5 = PseudoRepresentation::ad_series_element(&f, &g, 0.7, 5).unwrap();
        assert_eq!(e1, e5);
        assert_eq!(e1.coefficients(), &[1.0, 0.0, 0.7]);
        let ab = abelian(2).unwrap();
        let e = PseudoRepresentation::ad_series_element(&ab.basis(0), &ab.basis(1), 2.0, 4).unwrap();
        assert_eq!(e, ab.basis(0));
    }

    #[test]
    fn lemma3_on_exact_representation() {
        // q∘φ_p^s = q + s under the bracket {q,p} = 1.
        let rep = exact_rep();
        let a = rep.algebra().clone();
        let r = rep
            .lemma3_residual(1, &a.basis(0), &a.basis(1), 0.5, 2, rep.grid(), &Lemma3Options::default())
            .unwrap();
        assert!(r.residual < 1e-9, "{r:?}");
        assert_eq!(r.bound, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn trend_classification() {
        assert_eq!(defect_trend(&[0.0, 0.0]), DefectTrend::Vanishing);
        assert_eq!(defect_trend(&[1.0, 0.5, 0.2]), DefectTrend::Vanishing);
        assert_eq!(defect_trend(&[0.9, 0.9, 0.9]), DefectTrend::Stuck);
        assert_eq!(defect_trend(&[1.0, 0.6]), DefectTrend::Unclear);
    }

    #[test]
    fn honest_representation_limit_check() {
        let rep = exact_rep();
        let chart = rep.chart().clone();
        let limits = vec![
            HamiltonianField::new(&chart, ClosedForm::affine(vec![1.0, 0.0], 0.0)).unwrap(),
            HamiltonianField::new(&chart, ClosedForm::affine(vec![0.0, 1.0], 0.0)).unwrap(),
            HamiltonianField::new(&chart, ClosedForm::constant(1.0)).unwrap(),
        ];
        let rep = rep.with_limits(limits).unwrap();
        let a = rep.algebra().clone();
        let r = rep.limit_representation_check(&a.basis(0), &a.basis(1), 1e-10).unwrap();
        assert!(r.limit_residual <= 1e-10);
        assert_eq!(r.verdict, Verdict::ConsistentRepresentation);
    }

    #[test]
    fn csv_columns() {
        let row = Lemma3Report {
            n: 4,
            f_label: "f".into(),
            g_label: "g".into(),
            s: 0.5,
            big_n: 2,
            residual: 1e-9,
            bound: 0.0,
            defect_norm: 0.0,
            tail: 0.0,
            slack: 1.5,
            atol: 1e-4,
            pass: true,
        };
        let mut buf = Vec::new();
        write_lemma3_csv(&[row], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,f_label,g_label,s,N,L,bound,pass\n4,f,g,0.5,2,0.000000001,0,true\n");
    }
}
