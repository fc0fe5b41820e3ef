use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sensalign::stats::{bootstrap_alignment_kernels, BootstrapConfig, DEFAULT_REPLICATES};
use sensalign::{cosine_kernel_with, load_manifest, load_matrix, Error, Execution, Kernel, DEFAULT_K};

use crate::error::{CliError, EXIT_OK};

fn default_k() -> usize {
    DEFAULT_K
}

fn default_bootstrap() -> usize {
    DEFAULT_REPLICATES
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(alias = "manifest_path")]
    pub manifest: PathBuf,
    /// Sensory-encoder matrix every cell is aligned against.
    #[serde(alias = "reference_path")]
    pub reference: PathBuf,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_bootstrap", alias = "bootstrap_B")]
    pub bootstrap: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCell {
    #[serde(alias = "matrix_path")]
    pub matrix: PathBuf,
    pub model_id: String,
    pub condition: String,
    #[serde(default)]
    pub token_budget: Option<u64>,
    #[serde(default)]
    pub layer: Option<u32>,
}

impl SweepCell {
    fn labels(&self) -> (&str, &str, Option<u64>, Option<u32>) {
        (&self.model_id, &self.condition, self.token_budget, self.layer)
    }
}

impl SweepConfig {
    /// Reads a config file. `.toml` is parsed as TOML, `.json` as JSON, and
    /// anything else as JSON first, then TOML. Relative paths inside the file
    /// are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<SweepConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let invalid = |message: String| CliError::Config { path: path.to_path_buf(), message };
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        let mut config: SweepConfig = match ext.as_deref() {
            Some("toml") => toml::from_str(&text).map_err(|e| invalid(e.to_string()))?,
            Some("json") => serde_json::from_str(&text).map_err(|e| invalid(e.to_string()))?,
            _ => match serde_json::from_str(&text) {
                Ok(c) => c,
                Err(json_err) => toml::from_str(&text)
                    .map_err(|e| invalid(format!("not JSON ({json_err}) or TOML ({e})")))?,
            },
        };
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config.check().map_err(invalid)?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.manifest);
        join(&mut self.reference);
        if let Some(out) = self.output.as_mut() {
            join(out);
        }
        for cell in &mut self.cells {
            join(&mut cell.matrix);
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if self.cells.is_empty() {
            return Err("no cells".into());
        }
        if self.k == 0 {
            return Err("k must be at least 1".into());
        }
        if self.bootstrap < 2 {
            return Err(format!("bootstrap needs at least 2 replicates, got {}", self.bootstrap));
        }
        let mut seen = HashSet::new();
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.model_id.is_empty() || cell.condition.is_empty() {
                return Err(format!("cell {i}: model_id and condition must be nonempty"));
            }
            if !seen.insert(cell.labels()) {
                return Err(format!(
                    "cell {i}: duplicate labels (model_id={}, condition={}, token_budget={:?}, layer={:?})",
                    cell.model_id, cell.condition, cell.token_budget, cell.layer
                ));
            }
        }
        Ok(())
    }
}

/// One CSV row per cell, in config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model_id: String,
    pub condition: String,
    pub token_budget: Option<u64>,
    pub layer: Option<u32>,
    pub n: Option<usize>,
    pub k: usize,
    #[serde(rename = "B")]
    pub bootstrap: usize,
    pub seed: u64,
    pub score: Option<f64>,
    pub se: Option<f64>,
    pub status: String,
    pub error: String,
}

/// Runs every cell against the shared reference.
///
/// Manifest and reference failures abort the sweep. A failing cell becomes an
/// `error` row; the returned code is the most severe cell failure, 0 if none.
pub fn run_sweep(config: &SweepConfig, exec: Execution) -> Result<(Vec<SweepRow>, u8), CliError> {
    let manifest = load_manifest(&config.manifest).map_err(CliError::load(&config.manifest))?;
    let n = manifest.n_items();
    let reference = load_matrix(&config.reference).map_err(CliError::load(&config.reference))?;
    if reference.rows() != n {
        return Err(CliError::Load {
            path: config.reference.clone(),
            source: Error::RowCountMismatch { expected: n, found: reference.rows() },
        });
    }
    let ref_kernel = cosine_kernel_with(&reference, exec)?;
    let boot = BootstrapConfig {
        k: config.k,
        replicates: config.bootstrap,
        seed: config.seed,
        keep_replicates: false,
        execution: exec,
    };

    let outcomes = exec.map_slice(&config.cells, |cell| run_cell(cell, n, &ref_kernel, &boot, exec));
    let mut worst = EXIT_OK;
    let rows = config
        .cells
        .iter()
        .zip(outcomes)
        .map(|(cell, outcome)| {
            let mut row = SweepRow {
                model_id: cell.model_id.clone(),
                condition: cell.condition.clone(),
                token_budget: cell.token_budget,
                layer: cell.layer,
                n: None,
                k: config.k,
                bootstrap: config.bootstrap,
                seed: config.seed,
                score: None,
                se: None,
                status: "ok".into(),
                error: String::new(),
            };
            match outcome {
                Ok((rows, score, se)) => {
                    row.n = Some(rows);
                    row.score = Some(score);
                    row.se = Some(se);
                }
                Err(e) => {
                    worst = worst.max(e.exit_code());
                    row.status = "error".into();
                    row.error = e.to_string();
                }
            }
            row
        })
        .collect();
    Ok((rows, worst))
}

fn run_cell(
    cell: &SweepCell,
    n: usize,
    ref_kernel: &Kernel,
    boot: &BootstrapConfig,
    exec: Execution,
) -> Result<(usize, f64, f64), CliError> {
    let m = load_matrix(&cell.matrix).map_err(CliError::load(&cell.matrix))?;
    if m.rows() != n {
        return Err(CliError::Load {
            path: cell.matrix.clone(),
            source: Error::RowCountMismatch { expected: n, found: m.rows() },
        });
    }
    let kernel = cosine_kernel_with(&m, exec)?;
    let result = bootstrap_alignment_kernels(&kernel, ref_kernel, boot)?;
    Ok((n, result.point_estimate, result.standard_error))
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
