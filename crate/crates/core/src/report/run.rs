//! Running an experiment and assembling its report.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Reference};
use super::rates::{compute_rates, richardson_limit};
use crate::eigen::{inverse_iteration_oracle, solve_coarse_eigen, OracleOptions, SpectrumResult};
use crate::linalg::dot;
use crate::multigrid::{Hierarchy, IterationTrace};
use crate::{Error, Result};

/// Relative distance of the oracle shift below the scheme's estimate.
const ORACLE_SHIFT_OFFSET: f64 = 1e-3;

/// One row per target and level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Eigenvalue number, counted from 1.
    pub k: usize,
    pub level: usize,
    /// Free edge DOFs of the level.
    pub dof: usize,
    pub lambda_scheme: f64,
    /// Converged eigenvalue of the same level, when the oracle ran.
    pub lambda_direct: Option<f64>,
    /// Value the error is measured against.
    pub reference: Option<f64>,
    /// `|λ − reference| / reference`.
    pub error: Option<f64>,
    /// Rate from the previous level.
    pub rate: Option<f64>,
    /// `|Im(uᴴSu)| / |uᴴSu|` of the scheme iterate.
    pub rq_imag: f64,
}

/// Where the errors of a target come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorBasis {
    Reference,
    /// Extrapolation of the last three levels; approximate.
    Richardson,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub level: usize,
    pub cells: usize,
    pub free_edges: usize,
    pub free_vertices: usize,
    pub mesh_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub name: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub dim: usize,
    pub levels: Vec<LevelInfo>,
    pub coarse_spectrum: Vec<f64>,
    pub zero_modes: Vec<usize>,
    pub error_basis: Vec<(usize, ErrorBasis)>,
    /// Timing; kept out of the CSV so that stays reproducible.
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metadata: ReportMetadata,
    pub rows: Vec<ReportRow>,
    #[serde(default)]
    pub trace: IterationTrace,
    /// Set when the run stopped early; the rows are partial.
    pub failure: Option<String>,
}

/// A run that stopped on an error, with everything computed before it.
#[derive(Debug)]
pub struct ExperimentError {
    pub partial: Box<ConvergenceReport>,
    pub source: Error,
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "experiment `{}`: {}",
            self.partial.metadata.name, self.source
        )
    }
}

impl std::error::Error for ExperimentError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Progress callback; receives one line per finished step.
pub type Progress<'a> = &'a mut dyn FnMut(&str);

/// Builds the hierarchy, solves the coarse problem, runs the scheme for
/// every target cluster and optionally the per-level oracle.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    progress: Progress<'_>,
) -> std::result::Result<ConvergenceReport, ExperimentError> {
    let started = Instant::now();
    let mut report = ConvergenceReport {
        metadata: ReportMetadata {
            name: cfg.name.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.clone(),
            dim: cfg.domain.kind.dim(),
            levels: Vec::new(),
            coarse_spectrum: Vec::new(),
            zero_modes: Vec::new(),
            error_basis: Vec::new(),
            wall_seconds: 0.0,
        },
        rows: Vec::new(),
        trace: IterationTrace::default(),
        failure: None,
    };
    let result = fill_report(cfg, &mut report, progress);
    report.metadata.wall_seconds = started.elapsed().as_secs_f64();
    finish_rows(cfg, &mut report);
    match result {
        Ok(()) => Ok(report),
        Err(source) => {
            report.failure = Some(source.to_string());
            Err(ExperimentError {
                partial: Box::new(report),
                source,
            })
        }
    }
}

fn fill_report(
    cfg: &ExperimentConfig,
    report: &mut ConvergenceReport,
    progress: Progress<'_>,
) -> Result<()> {
    let coarse_mesh = cfg.domain.generate()?;
    let materials = cfg.material_map(&coarse_mesh)?;
    let hierarchy = Hierarchy::build(coarse_mesh, &materials, &cfg.refinement.schedule())?;
    report.metadata.levels = hierarchy
        .levels()
        .iter()
        .map(|l| LevelInfo {
            level: l.index,
            cells: l.mesh.num_cells(),
            free_edges: l.ops.n_edge,
            free_vertices: l.ops.n_vertex,
            mesh_size: l.mesh.mesh_size(),
        })
        .collect();
    progress(&format!(
        "hierarchy: {} levels, DOFs {:?}",
        hierarchy.num_levels(),
        report
            .metadata
            .levels
            .iter()
            .map(|l| l.free_edges)
            .collect::<Vec<_>>()
    ));

    let spectrum = solve_coarse_eigen(&hierarchy.coarse().ops, &cfg.coarse_options())?;
    report.metadata.coarse_spectrum = spectrum.lambdas();
    report.metadata.zero_modes = spectrum.zero_modes.clone();
    progress(&format!("coarse spectrum: {:?}", spectrum.lambdas()));

    let mut targets = cfg.targets.clone();
    targets.sort_unstable();
    targets.dedup();
    let mut done: Vec<ReportRow> = Vec::new();
    for &k in &targets {
        if done.iter().any(|r| r.k == k) {
            continue;
        }
        let rows = run_cluster(cfg, &hierarchy, &spectrum, k - 1, &mut report.trace)?;
        for r in rows {
            progress(&format!(
                "k = {}, level {}: {}",
                r.k, r.level, r.lambda_scheme
            ));
            done.push(r);
        }
        report.rows = done
            .iter()
            .filter(|r| targets.contains(&r.k))
            .cloned()
            .collect();
    }
    Ok(())
}

/// Runs the cluster starting at the 0-based `first` and returns rows for all
/// of its members.
fn run_cluster(
    cfg: &ExperimentConfig,
    hierarchy: &Hierarchy,
    spectrum: &SpectrumResult,
    first: usize,
    trace: &mut IterationTrace,
) -> Result<Vec<ReportRow>> {
    let scheme_cfg = cfg.scheme.config(first);
    let out = crate::multigrid::run_scheme(hierarchy, &scheme_cfg, spectrum)?;
    trace.records.extend(out.trace.records.iter().cloned());
    let q = out.iterates[0].len();
    let mut rows = Vec::new();
    for (level, members) in out.iterates.iter().enumerate() {
        let ops = &hierarchy.level(level).ops;
        let direct: Option<Vec<f64>> = if !cfg.oracle.enabled {
            None
        } else if level == 0 {
            Some(members.iter().map(|m| m.lambda).collect())
        } else {
            let p = hierarchy
                .level(level)
                .prolongation
                .as_ref()
                .expect("fine level");
            let start: Vec<_> = out.iterates[level - 1]
                .iter()
                .map(|m| p.mul_vec(&m.vector))
                .collect();
            // just below the cluster, so the shifted operator stays well
            // conditioned while the cluster still dominates
            let mean = members.iter().map(|m| m.lambda).sum::<f64>() / q as f64;
            let shift = mean - ORACLE_SHIFT_OFFSET * mean.abs();
            let pairs =
                inverse_iteration_oracle(ops, &start, shift, level, &OracleOptions::default())
                    .map_err(|e| e.at_level(level))?;
            Some(pairs.iter().map(|p| p.lambda).collect())
        };
        let mut lambdas: Vec<(f64, f64)> = members
            .iter()
            .map(|m| {
                let a = dot(&m.vector, &ops.stiffness.mul_vec(&m.vector));
                (m.lambda, a.im.abs() / a.norm())
            })
            .collect();
        lambdas.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (j, (lambda, rq_imag)) in lambdas.into_iter().enumerate() {
            rows.push(ReportRow {
                k: first + j + 1,
                level,
                dof: ops.n_edge,
                lambda_scheme: lambda,
                lambda_direct: direct.as_ref().map(|d| d[j]),
                reference: None,
                error: None,
                rate: None,
                rq_imag,
            });
        }
    }
    Ok(rows)
}

/// Fills in references, errors and rates, and orders the rows.
fn finish_rows(cfg: &ExperimentConfig, report: &mut ConvergenceReport) {
    report.rows.sort_by_key(|r| (r.k, r.level));
    let d = report.metadata.dim;
    let mut bases = Vec::new();
    let mut ks: Vec<usize> = report.rows.iter().map(|r| r.k).collect();
    ks.dedup();
    for k in ks {
        let rows: Vec<&mut ReportRow> = report.rows.iter_mut().filter(|r| r.k == k).collect();
        let lambdas: Vec<f64> = rows.iter().map(|r| r.lambda_scheme).collect();
        let dofs: Vec<usize> = rows.iter().map(|r| r.dof).collect();
        let (reference, basis) = match cfg.reference(k) {
            Some(Reference { value, .. }) => (Some(*value), ErrorBasis::Reference),
            None => match richardson_limit(&lambdas, &dofs, d) {
                Some(v) => (Some(v), ErrorBasis::Richardson),
                None => (None, ErrorBasis::None),
            },
        };
        bases.push((k, basis));
        let Some(reference) = reference else { continue };
        let errors: Vec<f64> = lambdas
            .iter()
            .map(|l| (l - reference).abs() / reference.abs())
            .collect();
        let rates = if errors.len() >= 2 {
            compute_rates(&errors, &dofs, d).unwrap_or_default()
        } else {
            Vec::new()
        };
        for (i, r) in rows.into_iter().enumerate() {
            r.reference = Some(reference);
            r.error = Some(errors[i]);
            r.rate = if i == 0 {
                None
            } else {
                rates.get(i - 1).copied().flatten()
            };
        }
    }
    report.metadata.error_basis = bases;
}

impl ConvergenceReport {
    /// Final-level rows, one per target.
    pub fn finest(&self) -> Vec<&ReportRow> {
        let mut out: Vec<&ReportRow> = Vec::new();
        for r in &self.rows {
            match out.last() {
                Some(last) if last.k == r.k => *out.last_mut().unwrap() = r,
                _ => out.push(r),
            }
        }
        out
    }

    pub fn row(&self, k: usize, level: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.k == k && r.level == level)
    }

    /// The rows as CSV, without timing so that reruns are byte-identical.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }

    /// Writes `report.csv`, `report.json` and `trace.jsonl` into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join("report.csv"))?)?;
        self.write_json(std::io::BufWriter::new(std::fs::File::create(
            dir.join("report.json"),
        )?))?;
        self.trace
            .write_jsonl(std::io::BufWriter::new(std::fs::File::create(
                dir.join("trace.jsonl"),
            )?))?;
        Ok(())
    }

    /// Recomputes errors and rates, e.g. after the references changed.
    pub fn recompute_rates(&mut self, cfg: &ExperimentConfig) {
        for r in self.rows.iter_mut() {
            r.reference = None;
            r.error = None;
            r.rate = None;
        }
        finish_rows(cfg, self);
    }
}

/// Verdict for one reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub k: usize,
    pub level: Option<usize>,
    pub value: Option<f64>,
    pub reference: f64,
    pub tolerance: f64,
    pub relative_error: Option<f64>,
    pub passed: bool,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub verdicts: Vec<Verdict>,
}

impl ReferenceSummary {
    /// True when every verdict passed, including when there are none.
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// 0 when everything passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Compares the finest-level value of every referenced target. A reference
/// whose target is missing from the report fails.
pub fn compare_reference(report: &ConvergenceReport, references: &[Reference]) -> ReferenceSummary {
    let finest = report.finest();
    let verdicts = references
        .iter()
        .map(|r| {
            let row = finest.iter().find(|row| row.k == r.target);
            let err = row.map(|row| (row.lambda_scheme - r.value).abs() / r.value.abs());
            Verdict {
                k: r.target,
                level: row.map(|row| row.level),
                value: row.map(|row| row.lambda_scheme),
                reference: r.value,
                tolerance: r.tolerance,
                relative_error: err,
                passed: err.is_some_and(|e| e <= r.tolerance),
                source: r.source.clone(),
            }
        })
        .collect();
    ReferenceSummary { verdicts }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> impl FnMut(&str) {
        |_: &str| {}
    }

    fn square_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
name = "square"
targets = [1, 2]
[domain]
kind = "unit_square_2d"
resolution = 4
[refinement]
uniform = 2
[scheme]
kind = "fixed_shift"
i0 = 0
{extra}
"#
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    fn row(k: usize, level: usize, lambda: f64) -> ReportRow {
        ReportRow {
            k,
            level,
            dof: 10,
            lambda_scheme: lambda,
            lambda_direct: None,
            reference: None,
            error: None,
            rate: None,
            rq_imag: 0.0,
        }
    }

    #[test]
    fn square_experiment_converges_with_rate_two() {
        let pi2 = std::f64::consts::PI.powi(2);
        let cfg = square_config(&format!(
            "[[references]]\ntarget = 1\nvalue = {pi2}\ntolerance = 0.01\n[oracle]\nenabled = true\n"
        ));
        let report = run_experiment(&cfg, &mut quiet()).unwrap();
        assert_eq!(report.rows.len(), 6);
        assert_eq!(
            report.metadata.error_basis,
            vec![(1, ErrorBasis::Reference), (2, ErrorBasis::Richardson)]
        );
        let last = report.row(1, 2).unwrap();
        assert!(last.error.unwrap() < 5e-3);
        assert!((last.rate.unwrap() - 2.0).abs() < 0.3, "{:?}", last.rate);
        for r in &report.rows {
            let d = r.lambda_direct.unwrap();
            assert!((r.lambda_scheme - d).abs() <= 1e-3 * d, "{r:?}");
        }
        let summary = compare_reference(&report, &cfg.references);
        assert!(summary.passed() && summary.exit_code() == 0);
    }

    #[test]
    fn csv_is_reproducible() {
        let cfg = square_config("");
        let mut a = Vec::new();
        let mut b = Vec::new();
        run_experiment(&cfg, &mut quiet())
            .unwrap()
            .write_csv(&mut a)
            .unwrap();
        run_experiment(&cfg, &mut quiet())
            .unwrap()
            .write_csv(&mut b)
            .unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text
            .starts_with("k,level,dof,lambda_scheme,lambda_direct,reference,error,rate,rq_imag\n"));
    }

    #[test]
    fn no_targets_gives_metadata_only() {
        let mut cfg = square_config("");
        cfg.targets.clear();
        let report = run_experiment(&cfg, &mut quiet()).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.metadata.levels.len(), 3);
        assert!(compare_reference(&report, &[]).passed());
    }

    #[test]
    fn failures_keep_the_partial_report() {
        let mut cfg = square_config("");
        cfg.coarse.max_iter = 1;
        let err = run_experiment(&cfg, &mut quiet()).unwrap_err();
        assert!(err.partial.failure.is_some());
        assert_eq!(err.partial.metadata.levels.len(), 3);
        assert!(err.to_string().contains("square"));
    }

    #[test]
    fn reference_verdicts() {
        let mut report = run_experiment(
            &{
                let mut c = square_config("");
                c.targets.clear();
                c
            },
            &mut quiet(),
        )
        .unwrap();
        report.rows = vec![row(1, 0, 19.5), row(1, 2, 19.73), row(2, 2, 9.70)];
        let refs = [
            Reference {
                target: 1,
                value: 19.7392,
                tolerance: 0.01,
                source: "cube".into(),
            },
            Reference {
                target: 2,
                value: 9.6397,
                tolerance: 0.005,
                source: "thick L".into(),
            },
            Reference {
                target: 3,
                value: 1.0,
                tolerance: 0.5,
                source: "missing".into(),
            },
        ];
        let s = compare_reference(&report, &refs);
        assert_eq!(
            s.verdicts.iter().map(|v| v.passed).collect::<Vec<_>>(),
            vec![true, false, false]
        );
        assert_eq!(s.verdicts[0].level, Some(2));
        assert_eq!(s.exit_code(), 1);
    }
}
