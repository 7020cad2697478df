use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const EXPERIMENTS: [&str; 10] =
    ["bracket", "flow", "defect", "lemma3", "gallery", "prop6", "prop7", "sympcheck", "commutator", "golden"];

/// Flags shared by every experiment. Each one mirrors a field of
/// [`ExperimentConfig`].
#[derive(Args, Clone, Debug, Default)]
pub struct ExperimentArgs {
    /// JSON config file; its fields override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Gallery entry or named case.
    #[arg(long)]
    pub entry: Option<String>,
    /// Index set, comma separated and strictly increasing.
    #[arg(long = "n", value_delimiter = ',')]
    pub n_set: Option<Vec<u32>>,
    /// Series or flow parameters `s`, comma separated.
    #[arg(long = "s", value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
    /// Flow time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Truncation order of the ad-series.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    /// Coordinate map for the symplecticity check.
    #[arg(long)]
    pub map: Option<String>,
    /// Use the pair family that breaks the C² hypothesis.
    #[arg(long = "violate-c2")]
    pub violate_c2: bool,
    /// Shift the candidate bracket so it no longer matches.
    #[arg(long)]
    pub mismatch: bool,
    /// Derivative mode: `exact`, `2` or `4`.
    #[arg(long)]
    pub order: Option<String>,
    /// Basis index of the image to flow.
    #[arg(long)]
    pub field: Option<usize>,
    /// Start point of a flow, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    /// Support half-width of the cutoff.
    #[arg(long = "chi-radius")]
    pub chi_radius: Option<f64>,
    /// Central constant of the cylinder example.
    #[arg(long = "cylinder-center")]
    pub cylinder_center: Option<f64>,
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "SYMPLAB_OUT")]
    pub out: Option<PathBuf>,
    /// Golden table to compare against and rewrite.
    #[arg(long = "golden-file")]
    pub golden_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub entry: Option<String>,
    pub n_set: Option<Vec<u32>>,
    pub s: Option<Vec<f64>>,
    pub t: Option<f64>,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub map: Option<String>,
    pub violate_c2: Option<bool>,
    pub mismatch: Option<bool>,
    pub order: Option<String>,
    pub field: Option<usize>,
    pub start: Option<Vec<f64>>,
    pub chi_radius: Option<f64>,
    pub cylinder_center: Option<f64>,
    pub slack: Option<f64>,
    pub atol: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    /// Not echoed into verdicts, so outputs do not depend on where they land.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub golden_file: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_args(experiment: &str, a: &ExperimentArgs) -> Self {
        ExperimentConfig {
            experiment: Some(experiment.to_string()),
            entry: a.entry.clone(),
            n_set: a.n_set.clone(),
            s: a.s.clone(),
            t: a.t,
            big_n: a.big_n,
            map: a.map.clone(),
            violate_c2: a.violate_c2.then_some(true),
            mismatch: a.mismatch.then_some(true),
            order: a.order.clone(),
            field: a.field,
            start: a.start.clone(),
            chi_radius: a.chi_radius,
            cylinder_center: a.cylinder_center,
            slack: a.slack,
            atol: a.atol,
            tol: a.tol,
            seed: a.seed,
            out: a.out.clone(),
            golden_file: a.golden_file.clone(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace ours.
    pub fn overridden_by(self, other: ExperimentConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { ExperimentConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment, entry, n_set, s, t, big_n, map, violate_c2, mismatch, order, field, start, chi_radius,
            cylinder_center, slack, atol, tol, seed, out, golden_file
        )
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let name = self.experiment.as_deref().unwrap_or_default();
        if !EXPERIMENTS.contains(&name) {
            return Err(CliError::Config(format!("unknown experiment `{name}`")));
        }
        if let Some(n) = &self.n_set {
            if n.is_empty() || n.contains(&0) || n.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Config("n_set must be nonempty, positive and strictly increasing".into()));
            }
        }
        for (label, v) in [("slack", self.slack), ("atol", self.atol), ("tol", self.tol), ("chi_radius", self.chi_radius)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::Config(format!("{label} must be positive, got {v}")));
                }
            }
        }
        if let Some(s) = &self.s {
            if s.is_empty() || s.iter().any(|v| !v.is_finite()) {
                return Err(CliError::Config("s must be a nonempty list of finite values".into()));
            }
        }
        if let Some(o) = &self.order {
            if !["exact", "2", "4"].contains(&o.as_str()) {
                return Err(CliError::Config(format!("order must be exact, 2 or 4, got {o}")));
            }
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("symplab-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_fields_win() {
        let flags = ExperimentConfig { entry: Some("a".into()), seed: Some(1), ..Default::default() };
        let file = ExperimentConfig { entry: Some("b".into()), ..Default::default() };
        let c = flags.overridden_by(file);
        assert_eq!(c.entry.as_deref(), Some("b"));
        assert_eq!(c.seed, Some(1));
    }

    #[test]
    fn rejects_bad_values() {
        let base = ExperimentConfig { experiment: Some("defect".into()), ..Default::default() };
        assert!(base.validate().is_ok());
        let c = ExperimentConfig { n_set: Some(vec![4, 1]), ..base.clone() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { tol: Some(0.0), ..base.clone() };
        assert!(c.validate().is_err());
        let c = ExperimentConfig { experiment: Some("nope".into()), ..base };
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
