use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use sensalign::axis::{separation_report, HEAR, SEE};
use sensalign::neighbors::{overlap_delta_ranking, write_jsonl};
use sensalign::stats::{bootstrap_alignment, mean, BootstrapConfig};
use sensalign::{
    cosine_kernel_with, linear_cka_with, load_manifest, load_matrix, topk_neighbors_with, validate_cell_set, vqa,
    EmbeddingMatrix, Error, Execution,
};

use crate::error::{CliError, EXIT_INVALID, EXIT_OK};
use crate::sweep::{self, SweepConfig};
use crate::{AlignArgs, CkaArgs, Cli, Command, NeighborsArgs, ProjectArgs, SweepArgs, ValidateArgs, VqaScoreArgs};

/// Executes one parsed command line and returns the exit code.
pub fn run(cli: Cli) -> Result<u8, CliError> {
    let exec = Execution::default();
    match cli.command {
        Command::Validate(args) => validate(args),
        Command::Align(args) => align(args, exec),
        Command::Cka(args) => cka(args, exec),
        Command::Project(args) => project(args),
        Command::Neighbors(args) => neighbors(args, exec),
        Command::Sweep(args) => sweep(args, exec),
        Command::VqaScore(args) => vqa_score(args),
    }
}

fn load(path: &Path) -> Result<EmbeddingMatrix, CliError> {
    load_matrix(path).map_err(CliError::load(path))
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, body).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body).and_then(|_| stdout.flush()).map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_vec_pretty(value).expect("reports serialize");
    body.push(b'\n');
    emit(out, &body)
}

fn csv_bytes<F>(path: &Path, fill: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let written = fill(&mut w).and_then(|_| w.into_inner().map_err(|e| e.into_error().into()));
    written.map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    })
}

fn require_rows(path: &Path, m: &EmbeddingMatrix, n: usize) -> Result<(), CliError> {
    if m.rows() != n {
        return Err(CliError::Load {
            path: path.to_path_buf(),
            source: Error::RowCountMismatch { expected: n, found: m.rows() },
        });
    }
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<u8, CliError> {
    let manifest = load_manifest(&args.manifest).map_err(CliError::load(&args.manifest))?;
    let matrices = args.matrices.iter().map(|p| load(p)).collect::<Result<Vec<_>, _>>()?;
    let report = validate_cell_set(&manifest, &matrices);
    emit_json(args.out.as_deref(), &report)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_INVALID })
}

#[derive(Serialize)]
struct AlignReport {
    score: f64,
    se: f64,
    k: usize,
    n: usize,
    #[serde(rename = "B")]
    bootstrap: usize,
    seed: u64,
    replicate_mean: f64,
    /// Neighbor lists never contain the item itself.
    self_excluded: bool,
}

fn align(args: AlignArgs, exec: Execution) -> Result<u8, CliError> {
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    if let Some(path) = &args.manifest {
        let n = load_manifest(path).map_err(CliError::load(path))?.n_items();
        require_rows(&args.a, &a, n)?;
        require_rows(&args.b, &b, n)?;
    }
    let config = BootstrapConfig {
        k: args.k,
        replicates: args.bootstrap,
        seed: args.seed,
        keep_replicates: false,
        execution: exec,
    };
    let result = bootstrap_alignment(&a, &b, &config)?;
    emit_json(
        args.out.as_deref(),
        &AlignReport {
            score: result.point_estimate,
            se: result.standard_error,
            k: result.k,
            n: result.n,
            bootstrap: result.replicates,
            seed: result.seed,
            replicate_mean: result.replicate_mean,
            self_excluded: true,
        },
    )?;
    Ok(EXIT_OK)
}

fn cka(args: CkaArgs, exec: Execution) -> Result<u8, CliError> {
    let a = load(&args.a)?;
    let b = load(&args.b)?;
    let value = linear_cka_with(&a, &b, exec)?;
    emit_json(
        args.out.as_deref(),
        &serde_json::json!({ "cka": value, "n": a.rows(), "cols_a": a.cols(), "cols_b": b.cols() }),
    )?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ConditionSummary {
    n: usize,
    mean: f64,
    bandwidth: f64,
}

#[derive(Serialize)]
struct ProjectReport {
    positive_class: &'static str,
    delta_mu: f64,
    cohens_d: f64,
    auroc: f64,
    axis_norm: f64,
    conditions: BTreeMap<String, ConditionSummary>,
}

fn project(args: ProjectArgs) -> Result<u8, CliError> {
    let see = load(&args.see)?;
    let hear = load(&args.hear)?;
    let mut extra = BTreeMap::new();
    for spec in &args.extra {
        let (name, path) = spec
            .split_once('=')
            .filter(|(name, path)| !name.is_empty() && !path.is_empty())
            .ok_or_else(|| CliError::Usage(format!("--extra expects NAME=PATH, got {spec:?}")))?;
        if name == SEE || name == HEAR || extra.contains_key(name) {
            return Err(CliError::Usage(format!("duplicate condition name {name:?}")));
        }
        extra.insert(name.to_string(), load(Path::new(path))?);
    }
    let report = separation_report(&see, &hear, &extra, args.grid_points)?;

    let conditions = report
        .projections
        .iter()
        .map(|(name, values)| {
            let summary = ConditionSummary {
                n: values.len(),
                mean: mean(values),
                bandwidth: report.curves[name].bandwidth,
            };
            (name.clone(), summary)
        })
        .collect();

    if let Some(path) = &args.curves {
        let body = csv_bytes(path, |w| {
            w.write_record(["condition", "x", "density"])?;
            for (name, curve) in &report.curves {
                for (x, y) in curve.grid.iter().zip(&curve.density) {
                    w.write_record([name.as_str(), &x.to_string(), &y.to_string()])?;
                }
            }
            Ok(())
        })?;
        emit(Some(path), &body)?;
    }
    if let Some(path) = &args.projections {
        let body = csv_bytes(path, |w| {
            w.write_record(["condition", "item_index", "value"])?;
            for (name, values) in &report.projections {
                for (i, v) in values.iter().enumerate() {
                    w.write_record([name.as_str(), &i.to_string(), &v.to_string()])?;
                }
            }
            Ok(())
        })?;
        emit(Some(path), &body)?;
    }

    emit_json(
        args.out.as_deref(),
        &ProjectReport {
            positive_class: SEE,
            delta_mu: report.delta_mu,
            cohens_d: report.cohens_d,
            auroc: report.auroc,
            axis_norm: report.axis_norm,
            conditions,
        },
    )?;
    Ok(EXIT_OK)
}

fn neighbors(args: NeighborsArgs, exec: Execution) -> Result<u8, CliError> {
    let manifest = load_manifest(&args.manifest).map_err(CliError::load(&args.manifest))?;
    let n = manifest.n_items();
    let mut indices = Vec::with_capacity(3);
    for path in [&args.a, &args.b, &args.reference] {
        let m = load(path)?;
        require_rows(path, &m, n)?;
        let kernel = cosine_kernel_with(&m, exec)?;
        indices.push(topk_neighbors_with(&kernel, args.k, exec)?);
    }
    let records = overlap_delta_ranking(&indices[0], &indices[1], &indices[2], args.top.unwrap_or(n), &manifest)?;
    let mut body = Vec::new();
    write_jsonl(&records, &mut body)?;
    emit(args.out.as_deref(), &body)?;
    Ok(EXIT_OK)
}

fn sweep(args: SweepArgs, exec: Execution) -> Result<u8, CliError> {
    let mut config = SweepConfig::load(&args.config)?;
    config.k = args.k.unwrap_or(config.k);
    config.bootstrap = args.bootstrap.unwrap_or(config.bootstrap);
    config.seed = args.seed.unwrap_or(config.seed);
    config.check().map_err(|message| CliError::Config {
        path: args.config.clone(),
        message,
    })?;
    let (rows, code) = sweep::run_sweep(&config, exec)?;
    for row in rows.iter().filter(|r| r.status != "ok") {
        eprintln!("cell {}/{} failed: {}", row.model_id, row.condition, row.error);
    }
    let out = args.out.or(config.output);
    let body = sweep::to_csv(&rows).map_err(|e| CliError::Write {
        path: out.clone().unwrap_or_else(|| "<stdout>".into()),
        source: io::Error::other(e),
    })?;
    emit(out.as_deref(), body.as_bytes())?;
    Ok(code)
}

fn vqa_score(args: VqaScoreArgs) -> Result<u8, CliError> {
    let text = fs::read_to_string(&args.log).map_err(|source| CliError::Read {
        path: args.log.clone(),
        source,
    })?;
    let entries = vqa::parse_log(&text).map_err(CliError::load(&args.log))?;
    let table = vqa::score(&entries);
    let body = if args.wide { table.to_wide_csv() } else { table.to_long_csv() };
    emit(args.out.as_deref(), body.as_bytes())?;
    Ok(EXIT_OK)
}
