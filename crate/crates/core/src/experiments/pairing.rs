//! Brackets tested against compactly supported functions, and the
//! convergence experiments built on them.

use serde::{Deserialize, Serialize};

use crate::bracket::poisson_bracket;
use crate::chart::make_chart;
use crate::error::{Error, Result};
use crate::flows::HamiltonianField;
use crate::function::{ClosedForm, Cutoff, TestFunction};
use crate::grid::{quadrature, sample_field, Axis, GridField, GridSpec};
use crate::stencil::{partial_derivative, StencilOrder};

fn check_test_function(phi: &TestFunction, grid: &GridSpec, chart: &crate::chart::Chart) -> Result<GridField> {
    let sampled = sample_field(chart, grid, &phi.closed_form())?;
    let limit = 1e-12 * sampled.c0_norm();
    let boundary = sampled.boundary_max();
    if boundary > limit || sampled.c0_norm() == 0.0 {
        return Err(Error::SupportLeak { boundary, limit });
    }
    Ok(sampled)
}

/// `⟨{F,G},φ⟩ = −Σⱼ ∫ G ∂ⱼ(Σᵢ Πᵢⱼ ∂ᵢF φ)` in coordinate measure: only `F`
/// is differentiated analytically; the outer derivative is a 4th-order
/// stencil on the compactly supported product.
pub fn distribution_pairing(f: &HamiltonianField, g: &HamiltonianField, phi: &TestFunction, grid: &GridSpec) -> Result<f64> {
    let chart = f.chart();
    if g.chart() != chart || grid.dim() != chart.dim() || phi.center.len() != chart.dim() {
        return Err(Error::Mismatch);
    }
    let phi_s = check_test_function(phi, grid, chart)?;
    let d = chart.dim();
    let len = grid.len();
    let mut w = vec![vec![0.0; len]; d];
    let (mut x, mut grad) = (vec![0.0; d], vec![0.0; d]);
    for k in 0..len {
        let ph = phi_s.samples()[k];
        if ph == 0.0 {
            continue;
        }
        grid.coords_into(k, &mut x);
        f.gradient(&x, &mut grad);
        let pi = chart.poisson_matrix(&x);
        for (j, wj) in w.iter_mut().enumerate() {
            wj[k] = (0..d).map(|i| pi[i * d + j] * grad[i]).sum::<f64>() * ph;
        }
    }
    let mut divergence = vec![0.0; len];
    for (j, wj) in w.into_iter().enumerate() {
        let field = GridField::from_samples(chart, grid, wj)?;
        let dj = partial_derivative(&field, j, StencilOrder::Fourth)?;
        divergence.iter_mut().zip(dj.samples()).for_each(|(a, b)| *a += b);
    }
    let gs = g.sample(grid)?;
    let integrand: Vec<f64> = gs.samples().iter().zip(&divergence).map(|(a, b)| -a * b).collect();
    Ok(quadrature(&GridField::from_samples(chart, grid, integrand)?))
}

/// `∫ {F,G} φ` by quadrature of the sampled bracket.
pub fn direct_pairing(f: &HamiltonianField, g: &HamiltonianField, phi: &TestFunction, grid: &GridSpec) -> Result<f64> {
    let chart = f.chart();
    let phi_s = check_test_function(phi, grid, chart)?;
    let b = poisson_bracket(&f.sample(grid)?, &g.sample(grid)?)?;
    Ok(quadrature(&b.mul(&phi_s)?))
}

/// `∫ H φ`.
pub fn function_pairing(h: &HamiltonianField, phi: &TestFunction, grid: &GridSpec) -> Result<f64> {
    let phi_s = check_test_function(phi, grid, h.chart())?;
    Ok(quadrature(&h.sample(grid)?.mul(&phi_s)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    pub n: u32,
    pub pairing: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop6Table {
    pub family: String,
    pub limit_pairing: f64,
    pub rows: Vec<PairingRow>,
    /// `error(first n) / error(last n)`.
    pub decrease_factor: f64,
    pub hypothesis_satisfied: bool,
    pub verdict: String,
}

impl Prop6Table {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "pairing", "limit_pairing", "error"])?;
        for r in &self.rows {
            w.write_record([r.n.to_string(), r.pairing.to_string(), self.limit_pairing.to_string(), r.error.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A family `n ↦ (Fₙ, Gₙ)` with limits `(F, G)` on a fixed grid.
pub struct PairFamily {
    pub name: String,
    pub members: Box<dyn Fn(u32) -> Result<(HamiltonianField, HamiltonianField)> + Send + Sync>,
    pub limit: (HamiltonianField, HamiltonianField),
    pub grid: GridSpec,
    pub phi: TestFunction,
    /// Whether `Fₙ → F` in C² (and `Gₙ → G` in C⁰).
    pub satisfies_hypothesis: bool,
}

/// Per-`n` pairing error `|⟨{Fₙ,Gₙ},φ⟩ − ⟨{F,G},φ⟩|`.
pub fn prop6_experiment(family: &PairFamily, n_set: &[u32]) -> Result<Prop6Table> {
    if n_set.is_empty() {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    let limit = distribution_pairing(&family.limit.0, &family.limit.1, &family.phi, &family.grid)?;
    let mut rows = Vec::with_capacity(n_set.len());
    for &n in n_set {
        let (fnn, gn) = (family.members)(n)?;
        let pairing = distribution_pairing(&fnn, &gn, &family.phi, &family.grid)?;
        rows.push(PairingRow { n, pairing, error: (pairing - limit).abs() });
    }
    let (first, last) = (rows[0].error, rows[rows.len() - 1].error);
    let decrease_factor = if last == 0.0 { f64::INFINITY } else { first / last };
    let converging = last <= 1e-10 || decrease_factor >= 2.0;
    let verdict = match (family.satisfies_hypothesis, converging) {
        (true, true) => "converges",
        (true, false) => "hypothesis satisfied but no convergence",
        (false, false) => "hypothesis violated, no convergence",
        (false, true) => "hypothesis violated, converges anyway",
    };
    Ok(Prop6Table {
        family: family.name.clone(),
        limit_pairing: limit,
        rows,
        decrease_factor,
        hypothesis_satisfied: family.satisfies_hypothesis,
        verdict: verdict.into(),
    })
}

fn bump_field(chart: &crate::chart::Chart, center: Vec<f64>, radius: f64, scale: f64) -> Result<HamiltonianField> {
    HamiltonianField::new(chart, TestFunction::new(center, radius).closed_form().scale(scale))
}

/// `Fₙ = F + bump/n` (C² convergent) and `Gₙ = G + sin(nq)·bump/√n`
/// (C⁰ convergent only) for fixed compact bumps `F`, `G` on `[−2,2]²`.
pub fn conforming_family() -> Result<PairFamily> {
    let chart = make_chart("cartesian", Some(2))?;
    let f = bump_field(&chart, vec![0.2, 0.0], 1.2, 1.0)?;
    let g = bump_field(&chart, vec![-0.1, 0.3], 1.3, 1.0)?;
    let grid = GridSpec::new(vec![Axis::new(-2.0, 2.0, 801), Axis::new(-2.0, 2.0, 801)])?;
    let (c2, f2, g2) = (chart.clone(), f.clone(), g.clone());
    let members = move |n: u32| -> Result<(HamiltonianField, HamiltonianField)> {
        let nf = n as f64;
        let pf = TestFunction::new(vec![0.0, -0.2], 1.0).closed_form().scale(1.0 / nf);
        let bump = TestFunction::new(vec![0.1, 0.1], 1.1);
        let (b1, b2) = (bump.clone(), bump);
        let rn = nf.sqrt();
        let pg = ClosedForm::with_gradient(
            move |x| (nf * x[0]).sin() * b1.value(x) / rn,
            move |x, out| {
                let mut gb = [0.0; 2];
                b2.gradient(x, &mut gb);
                let (s, c) = (nf * x[0]).sin_cos();
                let v = b2.value(x);
                out[0] = (nf * c * v + s * gb[0]) / rn;
                out[1] = s * gb[1] / rn;
            },
        );
        Ok((
            HamiltonianField::new(&c2, f2.form().add(&pf))?,
            HamiltonianField::new(&c2, g2.form().add(&pg))?,
        ))
    };
    Ok(PairFamily {
        name: "conforming".into(),
        members: Box::new(members),
        limit: (f, g),
        grid,
        phi: TestFunction::new(vec![0.0, 0.1], 1.5),
        satisfies_hypothesis: true,
    })
}

/// Test function used with the cutoff pair: centred at `(π, 0.4)`, radius 0.5.
pub fn remark2_test_function() -> TestFunction {
    TestFunction::new(vec![std::f64::consts::PI, 0.4], 0.5)
}

/// `Fₙ = χ(p)cos(nq)/√n`, `Gₙ = χ(p)sin(nq)/√n`: both tend to 0 in C⁰ but
/// `Fₙ` does not converge in C¹, and the pairing stays at `−∫χχ′φ`.
pub fn remark2_family(cutoff: Cutoff) -> Result<PairFamily> {
    let chart = make_chart("cartesian", Some(2))?;
    let r = 1.2 * cutoff.radius;
    let grid = GridSpec::new(vec![Axis::periodic(0.0, std::f64::consts::TAU, 1024), Axis::new(-r, r, 241)])?;
    let c2 = chart.clone();
    let members = move |n: u32| -> Result<(HamiltonianField, HamiltonianField)> {
        let nf = n as f64;
        let rn = nf.sqrt();
        let make = |sine: bool| {
            ClosedForm::with_gradient(
                move |x| cutoff.value(x[1]) * if sine { (nf * x[0]).sin() } else { (nf * x[0]).cos() } / rn,
                move |x, g| {
                    let (s, c) = (nf * x[0]).sin_cos();
                    let (v, d) = if sine { (s, nf * c) } else { (c, -nf * s) };
                    g[0] = cutoff.value(x[1]) * d / rn;
                    g[1] = cutoff.derivative(x[1]) * v / rn;
                },
            )
        };
        Ok((HamiltonianField::new(&c2, make(false))?, HamiltonianField::new(&c2, make(true))?))
    };
    let zero = HamiltonianField::zero(&chart);
    Ok(PairFamily {
        name: "remark2_violation".into(),
        members: Box::new(members),
        limit: (zero.clone(), zero),
        grid,
        phi: remark2_test_function(),
        satisfies_hypothesis: false,
    })
}

/// `|∫∫ χ(p)χ′(p) φ(q,p) dq dp|` for `cutoff` and [`remark2_test_function`],
/// by a fine tensor trapezoid rule.
pub fn remark2_pairing_constant(cutoff: Cutoff, points: usize) -> f64 {
    let phi = remark2_test_function();
    let (c, r) = (phi.center.clone(), phi.radius);
    let h_q = 2.0 * r / points as f64;
    let h_p = 2.0 * r / points as f64;
    let mut sum = 0.0;
    for i in 0..=points {
        let q = c[0] - r + i as f64 * h_q;
        for j in 0..=points {
            let p = c[1] - r + j as f64 * h_p;
            sum += cutoff.value(p) * cutoff.derivative(p) * phi.value(&[q, p]);
        }
    }
    (sum * h_q * h_p).abs()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop7Row {
    pub p: u32,
    pub q: u32,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop7Table {
    pub rows: Vec<Prop7Row>,
    /// Least-squares `c` in `error ≈ c(1/p + 1/q)`.
    pub fit_c: f64,
    /// `max error/(1/p + 1/q)`.
    pub max_ratio: f64,
    pub converges: bool,
    pub verdict: String,
}

impl Prop7Table {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "q", "error"])?;
        for r in &self.rows {
            w.write_record([r.p.to_string(), r.q.to_string(), r.error.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Doubly indexed families compared against a candidate limit bracket `H`:
/// `|⟨{F_p,G_q},φ⟩ − ⟨H,φ⟩|` over all index pairs.
#[allow(clippy::type_complexity)]
pub fn prop7_experiment(
    f_family: &dyn Fn(u32) -> Result<HamiltonianField>,
    g_family: &dyn Fn(u32) -> Result<HamiltonianField>,
    h: &HamiltonianField,
    phi: &TestFunction,
    grid: &GridSpec,
    p_set: &[u32],
    q_set: &[u32],
) -> Result<Prop7Table> {
    if p_set.is_empty() || q_set.is_empty() {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    let target = function_pairing(h, phi, grid)?;
    let mut rows = Vec::new();
    for &p in p_set {
        let fp = f_family(p)?;
        for &q in q_set {
            let gq = g_family(q)?;
            let pairing = distribution_pairing(&fp, &gq, phi, grid)?;
            rows.push(Prop7Row { p, q, error: (pairing - target).abs() });
        }
    }
    let u = |r: &Prop7Row| 1.0 / r.p as f64 + 1.0 / r.q as f64;
    let fit_c = rows.iter().map(|r| r.error * u(r)).sum::<f64>() / rows.iter().map(|r| u(r) * u(r)).sum::<f64>();
    let max_ratio = rows.iter().map(|r| r.error / u(r)).fold(0.0, f64::max);
    let first = rows[0].error;
    let last = rows[rows.len() - 1].error;
    let converges = last <= 1e-5 || last <= 0.25 * first;
    let verdict = if converges { "converges to the candidate bracket" } else { "candidate bracket mismatch detected" };
    Ok(Prop7Table { rows, fit_c, max_ratio, converges, verdict: verdict.into() })
}

/// Families `F + bump/p`, `G + bump/q` with `H = {F,G}` (optionally shifted
/// by a further bump, which makes `H` wrong).
#[allow(clippy::type_complexity)]
pub fn prop7_families(
    mismatch: bool,
) -> Result<(
    Box<dyn Fn(u32) -> Result<HamiltonianField>>,
    Box<dyn Fn(u32) -> Result<HamiltonianField>>,
    HamiltonianField,
    GridSpec,
    TestFunction,
)> {
    let chart = make_chart("cartesian", Some(2))?;
    let f = bump_field(&chart, vec![0.2, 0.0], 1.2, 1.0)?;
    let g = bump_field(&chart, vec![-0.1, 0.3], 1.3, 1.0)?;
    let bracket = crate::bracket::closed_form_bracket(&chart, f.form(), g.form())?;
    let h_form = if mismatch {
        bracket.add(&TestFunction::new(vec![0.0, 0.0], 0.8).closed_form().without_gradient())
    } else {
        bracket
    };
    let h = HamiltonianField::new_unchecked(&chart, h_form.without_gradient());
    let (c1, c2) = (chart.clone(), chart);
    let ff = Box::new(move |p: u32| -> Result<HamiltonianField> {
        let extra = TestFunction::new(vec![0.0, -0.2], 1.0).closed_form().scale(1.0 / p as f64);
        HamiltonianField::new(&c1, f.form().add(&extra))
    });
    let gg = Box::new(move |q: u32| -> Result<HamiltonianField> {
        let extra = TestFunction::new(vec![0.1, 0.1], 1.1).closed_form().scale(1.0 / q as f64);
        HamiltonianField::new(&c2, g.form().add(&extra))
    });
    let grid = GridSpec::new(vec![Axis::new(-2.0, 2.0, 401), Axis::new(-2.0, 2.0, 401)])?;
    Ok((ff, gg, h, grid, TestFunction::new(vec![0.0, 0.1], 1.5)))
}
