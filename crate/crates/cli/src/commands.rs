use serde_json::{json, Value};

use symplab::bracket::{poisson_bracket_with, DerivativeMode};
use symplab::chart::make_chart;
use symplab::experiments::affine::{affine_commutator_check, AffineHamiltonian};
use symplab::experiments::gallery::{
    gallery_with, run_convergence, GalleryEntry, GalleryOptions, CYLINDER_KAPPA, CYLINDER_STATED_CONSTANT,
};
use symplab::experiments::pairing::{conforming_family, prop6_experiment, prop7_experiment, prop7_families, remark2_family};
use symplab::experiments::symplectic::{named_map, symplectic_check};
use symplab::flows::{advance_flow, HamiltonianField, StepControl};
use symplab::function::{ClosedForm, Cutoff, TestFunction};
use symplab::golden::{self, GoldenParameters};
use symplab::grid::{Axis, GridField, GridSpec};
use symplab::pseudo_rep::{defect_trend, write_lemma3_csv, DefectTrend, Lemma3Options, Verdict};
use symplab::stencil::StencilOrder;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Tolerance for brackets computed from analytic gradients.
const EXACT_TOL: f64 = 1e-10;
/// Tolerance for 4th-order stencil brackets on the default grids.
const FD4_TOL: f64 = 5e-3;
const FD2_TOL: f64 = 5e-2;
/// Residual below which a map counts as symplectic.
const SYMPLECTIC_TOL: f64 = 1e-6;
const COMMUTATOR_TOL: f64 = 1e-4;
const ENERGY_TOL_PER_TIME: f64 = 1e-8;

/// Artifacts of one experiment run.
pub struct Outcome {
    pub csv: Vec<u8>,
    pub verdict: Value,
    pub pass: bool,
    pub summary: String,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.experiment.as_deref().unwrap_or_default() {
        "bracket" => bracket(cfg),
        "flow" => flow(cfg),
        "defect" => defect(cfg),
        "lemma3" => lemma3(cfg),
        "gallery" => gallery_run(cfg),
        "prop6" => prop6(cfg),
        "prop7" => prop7(cfg),
        "sympcheck" => sympcheck(cfg),
        "commutator" => commutator(cfg),
        "golden" => golden_run(cfg),
        other => Err(CliError::Config(format!("unknown experiment `{other}`"))),
    }
}

fn entry(cfg: &ExperimentConfig, default: &str) -> Result<GalleryEntry, CliError> {
    let opts = GalleryOptions {
        chi_radius: cfg.chi_radius.unwrap_or(1.0),
        cylinder_center: cfg.cylinder_center,
    };
    Ok(gallery_with(cfg.entry.as_deref().unwrap_or(default), &opts)?)
}

fn n_set(cfg: &ExperimentConfig, default: &[u32]) -> Vec<u32> {
    cfg.n_set.clone().unwrap_or_else(|| default.to_vec())
}

fn step_control(cfg: &ExperimentConfig) -> StepControl {
    cfg.tol.map_or_else(StepControl::default, StepControl::with_tol)
}

fn mode(cfg: &ExperimentConfig) -> (DerivativeMode, f64) {
    match cfg.order.as_deref() {
        Some("2") => (DerivativeMode::FiniteDifference(StencilOrder::Second), FD2_TOL),
        Some("4") => (DerivativeMode::FiniteDifference(StencilOrder::Fourth), FD4_TOL),
        _ => (DerivativeMode::Exact, EXACT_TOL),
    }
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> symplab::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn bracket(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (mode, tol) = mode(cfg);
    let name = cfg.entry.as_deref().unwrap_or("polterovich_polar");
    if name == "zero" {
        let chart = make_chart("cartesian", Some(2))?;
        let grid = GridSpec::new(vec![Axis::new(-1.0, 1.0, 21), Axis::new(-1.0, 1.0, 21)])?;
        let z = GridField::constant(&chart, &grid, 0.0)?;
        let b = poisson_bracket_with(&z, &z, mode)?;
        let max = b.c0_norm();
        return Ok(Outcome {
            csv: csv_bytes(|w| b.write_csv(w))?,
            verdict: json!({"experiment": "bracket", "entry": "zero", "max_abs": max, "pass": max == 0.0}),
            pass: max == 0.0,
            summary: format!("bracket zero: c0 norm {max:e}"),
        });
    }
    let e = entry(cfg, name)?;
    let n = n_set(cfg, &[4])[0];
    let (fi, gi) = e.pair;
    let f = e.image(n, fi)?.sample(&e.grid)?;
    let g = e.image(n, gi)?.sample(&e.grid)?;
    let b = poisson_bracket_with(&f, &g, mode)?;
    let s = b.samples();
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let c0 = b.c0_norm();
    let mut verdict = json!({
        "experiment": "bracket",
        "entry": e.name,
        "n": n,
        "order": cfg.order.clone().unwrap_or_else(|| "exact".into()),
        "min": min,
        "max": max,
        "c0_norm": c0,
        "mean": b.mean(),
    });
    // Entries with a known constant bracket are checked against it.
    let (expected, tol) = match e.name {
        "polterovich_polar" => (Some(1.0), tol),
        "cylinder_heisenberg" => {
            verdict["stated_constant"] = json!(CYLINDER_STATED_CONSTANT);
            verdict["derived_constant"] = json!(CYLINDER_KAPPA);
            (Some(CYLINDER_KAPPA), tol)
        }
        "remark2_cartesian" => {
            let reference = golden::stored()?.get("max_abs_chi_chi_prime")? / cfg.chi_radius.unwrap_or(1.0);
            verdict["golden_max_abs_chi_chi_prime"] = json!(reference);
            let dev = (c0 - reference).abs();
            verdict["deviation"] = json!(dev);
            verdict["pass"] = json!(dev <= 1e-3);
            return Ok(Outcome {
                csv: csv_bytes(|w| b.write_csv(w))?,
                pass: dev <= 1e-3,
                summary: format!("bracket {} n={n}: max |bracket| = {c0:.10} (golden {reference:.10})", e.name),
                verdict,
            });
        }
        _ => (None, tol),
    };
    let (pass, summary) = match expected {
        Some(c) => {
            let dev = s.iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
            verdict["expected_constant"] = json!(c);
            verdict["deviation"] = json!(dev);
            verdict["tolerance"] = json!(tol);
            (dev <= tol, format!("bracket {} n={n}: constant {:.10} (max deviation from {c} is {dev:.3e})", e.name, b.mean()))
        }
        None => (true, format!("bracket {} n={n}: range [{min:.6e}, {max:.6e}]", e.name)),
    };
    verdict["pass"] = json!(pass);
    Ok(Outcome { csv: csv_bytes(|w| b.write_csv(w))?, verdict, pass, summary })
}

fn flow(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ctl = step_control(cfg);
    let name = cfg.entry.as_deref().unwrap_or("harmonic");
    let (h, start, t, label) = if name == "harmonic" {
        let chart = make_chart("cartesian", Some(2))?;
        let form = ClosedForm::with_gradient(
            |x| 0.5 * (x[0] * x[0] + x[1] * x[1]),
            |x, g| {
                g[0] = x[0];
                g[1] = x[1];
            },
        );
        let start = cfg.start.clone().unwrap_or_else(|| vec![1.0, 0.0]);
        (HamiltonianField::new(&chart, form)?, start, cfg.t.unwrap_or(std::f64::consts::TAU), "harmonic".to_string())
    } else {
        let e = entry(cfg, name)?;
        let n = n_set(cfg, &[4])[0];
        let i = cfg.field.unwrap_or(e.pair.1);
        let start = match &cfg.start {
            Some(s) => s.clone(),
            None => e.grid.point(e.grid.len() / 2),
        };
        (e.image(n, i)?, start, cfg.t.unwrap_or(1.0), format!("{} n={n} image {i}", e.name))
    };
    let traj = advance_flow(&h, &start, t, &ctl)?;
    let drift = traj.energy_drift();
    let allowed = ENERGY_TOL_PER_TIME * t.abs().max(1.0);
    let mut verdict = json!({
        "experiment": "flow",
        "entry": name,
        "label": label,
        "t": t,
        "start": start,
        "end": traj.end(),
        "steps": traj.times.len() - 1,
        "rejected_steps": traj.rejected_steps,
        "energy_drift": drift,
        "energy_tolerance": allowed,
    });
    let mut pass = drift <= allowed;
    if name == "harmonic" && cfg.t.is_none() {
        let ret = traj.end().iter().zip(&start).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        verdict["return_error"] = json!(ret);
        pass &= ret <= 1e-6;
    }
    verdict["pass"] = json!(pass);
    Ok(Outcome {
        csv: csv_bytes(|w| traj.write_csv(w))?,
        summary: format!("flow {label}: t={t}, energy drift {drift:.3e}"),
        verdict,
        pass,
    })
}

fn defect(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let e = entry(cfg, "remark2_cartesian")?;
    let ns = n_set(cfg, &[1, 4, 16, 64]);
    let rep = e.representation(ns.clone())?.with_derivative_mode(mode(cfg).0);
    let mut csv = b"n,defect_norm,rep_norm,bracket_constant_sampled,bracket_constant_working\n".to_vec();
    let mut norms = Vec::new();
    for &n in &ns {
        let r = rep.defect_norm(n)?;
        csv.extend(
            format!(
                "{},{},{},{},{}\n",
                n, r.defect_norm_estimate, r.rep_norm_estimate, r.constant.sampled, r.constant.working
            )
            .bytes(),
        );
        norms.push(r.defect_norm_estimate);
    }
    let trend = match defect_trend(&norms) {
        DefectTrend::Vanishing => "vanishing",
        DefectTrend::Stuck => "stuck",
        DefectTrend::Unclear => "unclear",
    };
    let classification = match trend {
        "vanishing" => "pseudo-representation",
        "stuck" => "not a pseudo-representation",
        _ => "inconclusive",
    };
    let verdict = json!({
        "experiment": "defect",
        "entry": e.name,
        "n_set": ns,
        "defect_norms": norms,
        "trend": trend,
        "classification": classification,
        "pass": true,
    });
    Ok(Outcome { csv, summary: format!("defect {}: {trend} ({classification})", e.name), verdict, pass: true })
}

fn lemma3(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let e = entry(cfg, "polterovich_polar")?;
    let ns = n_set(cfg, &[1, 4, 16]);
    let s_set = cfg.s.clone().unwrap_or_else(|| vec![0.5]);
    let big_n = cfg.big_n.unwrap_or(3);
    let mut opts = Lemma3Options { step_control: step_control(cfg), ..Default::default() };
    if let Some(v) = cfg.slack {
        opts.slack = v;
    }
    if let Some(v) = cfg.atol {
        opts.atol = v;
    }
    let rep = e.representation(ns.clone())?.with_derivative_mode(DerivativeMode::Exact);
    let (f, g) = (e.algebra.basis(e.pair.0), e.algebra.basis(e.pair.1));
    let mut rows = Vec::new();
    for &n in &ns {
        for &s in &s_set {
            let grid = e.lemma3_grid(n, s)?;
            rows.push(rep.lemma3_residual(n, &f, &g, s, big_n, &grid, &opts)?);
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    let verdict = json!({
        "experiment": "lemma3",
        "entry": e.name,
        "N": big_n,
        "rows": rows,
        "pass": pass,
    });
    Ok(Outcome {
        csv: csv_bytes(|w| write_lemma3_csv(&rows, w))?,
        summary: format!("lemma3 {}: {}/{} rows pass", e.name, rows.iter().filter(|r| r.pass).count(), rows.len()),
        verdict,
        pass,
    })
}

fn expected_verdict(name: &str, center_shifted: bool) -> Option<Verdict> {
    match name {
        "remark2_cartesian" => Some(Verdict::NotPseudoRepresentation),
        "cylinder_heisenberg" if center_shifted => Some(Verdict::NotPseudoRepresentation),
        "cylinder_heisenberg" => Some(Verdict::NoncompactCaveat),
        _ => None,
    }
}

fn gallery_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let e = entry(cfg, "polterovich_polar")?;
    let ns = n_set(cfg, &[1, 4, 16, 64]);
    let table = run_convergence(&e, &ns)?;
    let shifted = cfg.cylinder_center.is_some_and(|c| c != CYLINDER_KAPPA);
    let expected = expected_verdict(e.name, shifted);
    let pass = expected.map_or(table.limit.verdict != Verdict::Inconclusive, |v| v == table.limit.verdict);
    let mut verdict = json!({
        "experiment": "gallery",
        "entry": e.name,
        "n_set": ns,
        "rows": table.rows,
        "limit": table.limit,
        "verdict": table.limit.verdict,
        "expected_behaviour": e.expected,
        "pass": pass,
    });
    if e.name == "cylinder_heisenberg" {
        verdict["stated_constant"] = json!(CYLINDER_STATED_CONSTANT);
        verdict["derived_constant"] = json!(CYLINDER_KAPPA);
        verdict["constant_discrepancy"] = json!(CYLINDER_STATED_CONSTANT - CYLINDER_KAPPA);
    }
    Ok(Outcome {
        csv: csv_bytes(|w| table.write_csv(w))?,
        summary: format!("gallery {}: {:?}", e.name, table.limit.verdict),
        verdict,
        pass,
    })
}

fn prop6(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let violate = cfg.violate_c2.unwrap_or(false);
    let family = if violate {
        remark2_family(Cutoff { radius: cfg.chi_radius.unwrap_or(1.0) })?
    } else {
        conforming_family()?
    };
    let ns = n_set(cfg, &[4, 16, 64]);
    let table = prop6_experiment(&family, &ns)?;
    let expected = if violate { "hypothesis violated, no convergence" } else { "converges" };
    let pass = table.verdict == expected;
    let verdict = json!({
        "experiment": "prop6",
        "family": table.family,
        "limit_pairing": table.limit_pairing,
        "rows": table.rows,
        "decrease_factor": table.decrease_factor,
        "hypothesis_satisfied": table.hypothesis_satisfied,
        "verdict": table.verdict,
        "pass": pass,
    });
    Ok(Outcome {
        csv: csv_bytes(|w| table.write_csv(w))?,
        summary: format!("prop6 {}: {}", table.family, table.verdict),
        verdict,
        pass,
    })
}

fn prop7(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mismatch = cfg.mismatch.unwrap_or(false);
    let (ff, gg, h, grid, phi) = prop7_families(mismatch)?;
    let ns = n_set(cfg, &[2, 8, 32]);
    let table = prop7_experiment(&*ff, &*gg, &h, &phi, &grid, &ns, &ns)?;
    let pass = table.converges != mismatch;
    let verdict = json!({
        "experiment": "prop7",
        "mismatch": mismatch,
        "rows": table.rows,
        "fit_c": table.fit_c,
        "max_ratio": table.max_ratio,
        "converges": table.converges,
        "verdict": table.verdict,
        "pass": pass,
    });
    Ok(Outcome { csv: csv_bytes(|w| table.write_csv(w))?, summary: format!("prop7: {}", table.verdict), verdict, pass })
}

fn sympcheck(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let name = cfg.map.clone().unwrap_or_else(|| "identity".into());
    let map = named_map(&name)?;
    let chart = make_chart("cartesian", Some(2))?;
    let grid = GridSpec::new(vec![Axis::new(-1.0, 1.0, 41), Axis::new(-1.0, 1.0, 41)])?;
    let r = symplectic_check(&map, &chart, &grid)?;
    let mut csv = b"a,b,residual\n".to_vec();
    for a in 0..r.dim {
        for b in a + 1..r.dim {
            csv.extend(format!("{a},{b},{}\n", r.residuals[a * r.dim + b]).bytes());
        }
    }
    let pass = r.max_residual <= SYMPLECTIC_TOL;
    let verdict = json!({
        "experiment": "sympcheck",
        "map": name,
        "max_residual": r.max_residual,
        "tolerance": SYMPLECTIC_TOL,
        "min_abs_jacobian": r.min_abs_jacobian,
        "degenerate_jacobian": r.degenerate_jacobian,
        "verdict": if pass { "symplectic" } else { "not symplectic" },
        "pass": pass,
    });
    Ok(Outcome { csv, summary: format!("sympcheck {name}: max residual {:.3e}", r.max_residual), verdict, pass })
}

fn commutator(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let chart = make_chart("cartesian", Some(2))?;
    let case = cfg.entry.clone().unwrap_or_else(|| "translations".into());
    let bump = |c: Vec<f64>, r: f64| HamiltonianField::new(&chart, TestFunction::new(c, r).closed_form());
    let (h, k) = match case.as_str() {
        "translations" => (
            AffineHamiltonian::affine(&chart, vec![1.0, 0.0], 0.0)?,
            AffineHamiltonian::affine(&chart, vec![0.0, 1.0], 0.0)?,
        ),
        "disjoint_bumps" => (
            AffineHamiltonian::new(bump(vec![-1.0, 0.0], 0.6)?, 1.6, vec![0.0; 2], 0.0)?,
            AffineHamiltonian::new(bump(vec![1.0, 0.0], 0.6)?, 1.6, vec![0.0; 2], 0.0)?,
        ),
        "bump_translation" => (
            AffineHamiltonian::new(bump(vec![0.0, 0.0], 0.8)?, 0.8, vec![0.0; 2], 0.0)?,
            AffineHamiltonian::affine(&chart, vec![0.0, 1.0], 0.0)?,
        ),
        other => return Err(CliError::Config(format!("unknown commutator case `{other}`"))),
    };
    let s = cfg.s.as_ref().map_or(0.3, |v| v[0]);
    let t = cfg.t.unwrap_or(0.3);
    let grid = GridSpec::new(vec![Axis::new(-1.0, 1.0, 9), Axis::new(-1.0, 1.0, 9)])?;
    let r = affine_commutator_check(&h, &k, None, s, t, &grid, &step_control(cfg))?;
    let pass = r.max_discrepancy <= COMMUTATOR_TOL;
    let csv = format!(
        "case,s,t,points,max_discrepancy,max_displacement\n{case},{},{},{},{},{}\n",
        r.s, r.t, r.points, r.max_discrepancy, r.max_displacement
    )
    .into_bytes();
    let verdict = json!({
        "experiment": "commutator",
        "case": case,
        "report": r,
        "tolerance": COMMUTATOR_TOL,
        "pass": pass,
    });
    Ok(Outcome {
        csv,
        summary: format!("commutator {case}: discrepancy {:.3e}", r.max_discrepancy),
        verdict,
        pass,
    })
}

fn golden_run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let reference = match &cfg.golden_file {
        Some(p) if p.exists() => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        _ => golden::stored()?,
    };
    let mut params = GoldenParameters::default();
    if let Some(r) = cfg.chi_radius {
        params.chi_radius = r;
    }
    if let Some(seed) = cfg.seed {
        params.seed = seed;
    }
    let fresh = golden::regenerate(&params, &reference)?;
    if let Some(p) = &cfg.golden_file {
        std::fs::write(p, fresh.to_json()?)?;
    }
    let mut csv = b"name,value\n".to_vec();
    for (k, v) in &fresh.constants {
        csv.extend(format!("{k},{v}\n").bytes());
    }
    let compared = reference.header.parameters == params;
    let verdict = json!({
        "experiment": "golden",
        "parameters": params,
        "compared_with_reference": compared,
        "constants": fresh.constants,
        "pass": true,
    });
    Ok(Outcome {
        csv,
        summary: format!(
            "golden: {} constants {}",
            fresh.constants.len(),
            if compared { "reproduced" } else { "computed for new parameters" }
        ),
        verdict,
        pass: true,
    })
}
