//! The run configuration file.

use std::path::{Path, PathBuf};

use bohrcolor_core::{Ambient, NilBohrNbhd, Params, ScheduleSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: Params,
    pub schedule: ScheduleSpec,
    pub scan: ScanConfig,
    #[serde(default)]
    pub neighborhoods: Vec<NamedNbhd>,
    pub stats: StatsConfig,
    pub sampling: SamplingConfig,
    /// Worker threads; absent means one per core.
    #[serde(default)]
    pub workers: Option<usize>,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Bound for `enumerate` and the hit searches.
    pub enumerate_n: u64,
    /// Window of the exhaustive 3-AP audit.
    pub audit_n: u64,
    /// `N·tail_bound < δ₂·guard_fraction` is required before scanning.
    pub guard_fraction: f64,
    /// Scan length and grid for the density check on the first coordinate.
    pub density_n: u64,
    pub density_cells: u64,
    pub density_min_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedNbhd {
    pub name: String,
    #[serde(flatten)]
    pub nbhd: NilBohrNbhd,
    /// The `nilbohr` command fails when a required hit is missing.
    #[serde(default)]
    pub require_hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsConfig {
    pub bins: usize,
    /// `{n(√2-1)}` over `1..=linear_n` must stay below `linear_tolerance`.
    pub linear_n: u64,
    pub linear_tolerance: f64,
    /// `{n²(√2-1)}` over `S_ℕ ∩ [1, N]` must stay below this.
    pub restricted_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub seed: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Recorded reference values, relative to the config file.
    pub golden: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.output.golden.is_relative() {
            cfg.output.golden = base.join(&cfg.output.golden);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Largest scan bound any command uses.
    pub fn max_scan(&self) -> u64 {
        self.scan.enumerate_n.max(self.scan.audit_n)
    }

    pub fn defaults() -> Self {
        RunConfig {
            params: Params::new(0.1, 1e-4, Ambient::Bounded(2000)),
            schedule: ScheduleSpec::resonant(99_950.0),
            scan: ScanConfig {
                enumerate_n: 100_000,
                audit_n: 100_000,
                guard_fraction: 0.1,
                density_n: 1_000_000,
                density_cells: 1000,
                density_min_fraction: 0.99,
            },
            neighborhoods: Vec::new(),
            stats: StatsConfig { bins: 100, linear_n: 100_000, linear_tolerance: 0.01, restricted_tolerance: 0.1 },
            sampling: SamplingConfig { seed: 1, count: 1 },
            workers: None,
            output: OutputConfig { dir: PathBuf::from("out"), golden: PathBuf::from("golden.json") },
        }
    }
}

/// Reference values recorded by `--record`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Golden {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumerate: Option<GoldenEnumerate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<GoldenAudit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenEnumerate {
    pub scan_bound: u64,
    pub fingerprint: String,
    pub first_element: Option<u64>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenAudit {
    pub range: u64,
    pub fingerprint: String,
    pub colors_used: usize,
}

impl Golden {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Golden::default()),
            Err(e) => Err(CliError::Input(format!("cannot read {}: {e}", path.display()))),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("golden serializes");
        std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
