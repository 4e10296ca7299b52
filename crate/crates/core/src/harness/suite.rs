//! Suite runner: construct, block checks, growth, orbit, density; writes the
//! report bundle and plot data.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{parse_real_grid, OrbitSample, Resolved, RunConfig, RunMode};
use crate::block_construction::{assemble, class_summaries, structure_check, Assembly, ClassSummary, StructureReport};
use crate::error::{Error, Result};
use crate::growth_analysis::{
    block_peak_check, growth_profile, hitting_density_check, optimality_witness, orbit_check, BlockPeakCheck,
    DensityCheck, GrowthReport, OptimalityWitness, OrbitCheckRecord,
};
use crate::kernel_polynomials::{bounded_kernel, default_check_exponents, sign_kernel, validate, KernelFamily, KernelValidation};

/// Version of every JSON report written by the harness.
pub const SCHEMA: u32 = 1;

pub const PAPER_MODE_NOTE: &str = "paper-mode: thresholds only";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub ran: bool,
    /// `None` when nothing was asserted.
    pub pass: Option<bool>,
    pub detail: String,
}

impl SuiteResult {
    fn skipped(name: &'static str) -> Self {
        Self {
            name,
            ran: false,
            pass: None,
            detail: "not selected".into(),
        }
    }
}

/// Everything a run produced, before and after it is written out.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub config: RunConfig,
    pub resolved: Resolved,
    pub classes: Vec<ClassSummary>,
    pub assembly: Option<Assembly>,
    pub structure: Option<StructureReport>,
    pub kernels: Option<Vec<KernelValidation>>,
    pub peaks: Option<Vec<BlockPeakCheck>>,
    pub growth: Option<GrowthReport>,
    pub witness: Option<OptimalityWitness>,
    pub orbit: Option<Vec<OrbitCheckRecord>>,
    pub density: Option<Vec<DensityCheck>>,
    pub suites: Vec<SuiteResult>,
    pub warnings: Vec<String>,
}

impl ReportBundle {
    fn header(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "config": self.config,
            "constants": self.resolved.constants,
        })
    }

    fn doc(&self, body: Value) -> Value {
        let mut doc = self.header();
        if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
            d.extend(b);
        }
        doc
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub exit_code: i32,
    pub status: String,
    pub bundle: ReportBundle,
    /// Files written, relative to the output directory, sorted.
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Growth,
    Density,
    Kernels,
}

impl PlotKind {
    fn member(self) -> &'static str {
        match self {
            PlotKind::Growth => "growth",
            PlotKind::Density => "density",
            PlotKind::Kernels => "kernels",
        }
    }
}

fn write_bytes(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    files.push(name.to_string());
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &Value, files: &mut Vec<String>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    write_bytes(dir, name, text.as_bytes(), files)
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Parse(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Parse(format!("csv: {e}")))
}

fn growth_csv_rows(rows: &[crate::growth_analysis::GrowthRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| vec![r.r.to_string(), r.log_mp.to_string(), r.indicator.to_string()])
        .collect()
}

/// Writes the CSV curves for `kinds` into `dir` and returns their names.
///
/// * `growth_gamma.csv`, `growth_subseq.csv`: `r,log_Mp,Gamma`
/// * `density_tk.csv`: `k,end,ratio,running_max`
/// * `kernel_norms.csv`: `N,family,plus_count,required_plus,p,norm,bound,ok`
pub fn emit_plot_data(bundle: &ReportBundle, dir: &Path, kinds: &[PlotKind]) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for &kind in kinds {
        match kind {
            PlotKind::Growth => {
                let g = bundle.growth.as_ref().ok_or(Error::MissingMember(kind.member()))?;
                let header = ["r", "log_Mp", "Gamma"];
                write_bytes(dir, "growth_gamma.csv", &csv_bytes(&header, growth_csv_rows(&g.rows))?, &mut files)?;
                write_bytes(dir, "growth_subseq.csv", &csv_bytes(&header, growth_csv_rows(&g.subseq_rows))?, &mut files)?;
            }
            PlotKind::Density => {
                let checks = bundle.density.as_ref().ok_or(Error::MissingMember(kind.member()))?;
                let mut rows = Vec::new();
                for c in checks {
                    if let Some(scan) = &c.scan {
                        for (pt, running) in scan.points.iter().zip(scan.running_max_curve()) {
                            rows.push(vec![c.k.to_string(), pt.n.to_string(), pt.ratio.to_string(), running.to_string()]);
                        }
                    }
                }
                write_bytes(dir, "density_tk.csv", &csv_bytes(&["k", "end", "ratio", "running_max"], rows)?, &mut files)?;
            }
            PlotKind::Kernels => {
                let kernels = bundle.kernels.as_ref().ok_or(Error::MissingMember(kind.member()))?;
                let mut rows = Vec::new();
                for v in kernels {
                    let family = match v.family {
                        KernelFamily::Sign => "sign",
                        KernelFamily::Bounded => "bounded",
                    };
                    for c in &v.norms {
                        rows.push(vec![
                            v.n.to_string(),
                            family.to_string(),
                            v.plus_count.to_string(),
                            v.required_plus.to_string(),
                            c.norm.p.to_string(),
                            c.norm.value.to_string(),
                            c.bound.map_or(String::new(), |b| b.to_string()),
                            c.ok.to_string(),
                        ]);
                    }
                }
                let header = ["N", "family", "plus_count", "required_plus", "p", "norm", "bound", "ok"];
                write_bytes(dir, "kernel_norms.csv", &csv_bytes(&header, rows)?, &mut files)?;
            }
        }
    }
    Ok(files)
}

fn kernel_table(assembly: &Assembly, family: KernelFamily) -> Result<Vec<KernelValidation>> {
    let mut lens: Vec<usize> = assembly.blocks.iter().map(|b| b.descriptor.kernel_len as usize).collect();
    lens.sort_unstable();
    lens.dedup();
    lens.par_iter()
        .map(|&n| {
            let kernel = match family {
                KernelFamily::Sign => sign_kernel(n)?,
                KernelFamily::Bounded => bounded_kernel(n)?,
            };
            validate(&kernel, default_check_exponents(family))
        })
        .collect()
}

/// Hitting indices to check, with the index of their block.
fn orbit_targets(assembly: &Assembly, k: Option<u32>, sample: OrbitSample) -> Vec<(usize, u64)> {
    let all: Vec<(usize, u64)> = assembly
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| k.is_none() || b.descriptor.k == k)
        .flat_map(|(i, b)| b.descriptor.hitting_set.iter().map(move |&s| (i, s)))
        .collect();
    match sample {
        OrbitSample::All => all,
        OrbitSample::Spread(count) if count >= all.len() => all,
        OrbitSample::Spread(count) => {
            let mut picked: Vec<(usize, u64)> = (0..count).map(|i| all[i * all.len() / count]).collect();
            picked.dedup();
            picked
        }
    }
}

fn verdict(pass: Option<bool>) -> &'static str {
    match pass {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "not asserted",
    }
}

/// Runs the selected suites and writes the bundle into `cfg.output_dir`.
///
/// Exit codes: 0 when every asserted check passes, 1 otherwise. Usage and
/// I/O problems surface as errors whose [`Error::exit_code`] is 2 or 3.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteOutcome> {
    let resolved = cfg.resolve()?;
    if !cfg.suites.any() {
        return Err(Error::Parse("no suite selected".into()));
    }
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let construction = resolved.construction;
    let classes = class_summaries(&construction, cfg.k_max)?;
    let mut bundle = ReportBundle {
        config: cfg.clone(),
        resolved,
        classes,
        assembly: None,
        structure: None,
        kernels: None,
        peaks: None,
        growth: None,
        witness: None,
        orbit: None,
        density: None,
        suites: Vec::new(),
        warnings: Vec::new(),
    };
    let mut files = Vec::new();

    if cfg.mode == RunMode::Paper {
        bundle.warnings.push(PAPER_MODE_NOTE.into());
        let doc = bundle.doc(json!({ "note": PAPER_MODE_NOTE, "classes": bundle.classes }));
        write_json(&dir, "thresholds.json", &doc, &mut files)?;
        return finish(bundle, &dir, files, PAPER_MODE_NOTE.into());
    }

    // construct (always: every other suite needs the series)
    let assembly = assemble(&construction, cfg.k_max)?;
    bundle.warnings.extend(assembly.warnings.iter().cloned());
    let meta = bundle.doc(json!({ "blocks": assembly.series.meta.blocks }));
    let series_path = dir.join("series.csv");
    assembly.series.save(&series_path, &meta)?;
    files.push("series.csv".into());
    files.push("series.meta.json".into());
    let structure = structure_check(&assembly, &construction);
    let kernels = kernel_table(&assembly, resolved.regime.kernel_family())?;
    let kernels_ok = kernels.iter().all(|k| k.bounds_ok);
    let doc = bundle.doc(json!({
        "build": assembly.report(),
        "structure": structure,
        "blocks": assembly.descriptors(),
        "classes": bundle.classes,
    }));
    write_json(&dir, "build_report.json", &doc, &mut files)?;
    let doc = bundle.doc(json!({ "kernels": kernels }));
    write_json(&dir, "kernels.json", &doc, &mut files)?;
    bundle.suites.push(SuiteResult {
        name: "construct",
        ran: true,
        pass: Some(structure.pass() && kernels_ok),
        detail: format!(
            "{} blocks built, {} empty, {} structural violations",
            assembly.blocks.len(),
            assembly.blocks_empty,
            structure.violations.len()
        ),
    });
    bundle.structure = Some(structure);
    bundle.kernels = Some(kernels);
    let mut plots = vec![PlotKind::Kernels];

    if cfg.suites.blocks {
        let checks: Vec<BlockPeakCheck> = assembly
            .blocks
            .par_iter()
            .map(|b| {
                let entry = assembly.entry(b.descriptor.k.unwrap_or(0)).expect("class entry");
                block_peak_check(b, &construction, entry, &resolved.quad)
            })
            .collect::<Result<_>>()?;
        let failures = checks.iter().filter(|c| !c.pass).count();
        let pass = (!checks.is_empty()).then_some(failures == 0);
        let doc = bundle.doc(json!({ "checks": checks, "pass": pass }));
        write_json(&dir, "block_checks.json", &doc, &mut files)?;
        bundle.suites.push(SuiteResult {
            name: "blocks",
            ran: true,
            pass,
            detail: format!("{} blocks checked, {failures} failures", checks.len()),
        });
        bundle.peaks = Some(checks);
    } else {
        bundle.suites.push(SuiteResult::skipped("blocks"));
    }

    if cfg.suites.growth {
        let auto_range = match (assembly.blocks.first(), assembly.series.max_exponent()) {
            (Some(first), Some(top)) => Some((first.descriptor.base as f64 * 0.5, top as f64 * 1.1)),
            _ => None,
        };
        let grid = parse_real_grid(&cfg.grid, auto_range)?;
        let subseq: Vec<f64> = if cfg.subseq {
            assembly.blocks.iter().map(|b| b.descriptor.base as f64).collect()
        } else {
            Vec::new()
        };
        let report = growth_profile(&assembly.series, cfg.p, cfg.gamma, &grid, &subseq, &resolved.quad)?;
        let witness = optimality_witness(&report).ok();
        let finite = report.rows.iter().all(|r| r.log_gamma.is_finite());
        let mut parseval_max_err = None;
        if cfg.p == 2.0 {
            let mut worst: f64 = 0.0;
            for row in report.rows.iter().chain(&report.subseq_rows) {
                let exact = assembly.series.parseval_log_m2(row.r, cfg.tail_eps)?;
                worst = worst.max((row.log_mp - exact).abs());
            }
            parseval_max_err = Some(worst);
        }
        let pass = if report.rows.is_empty() {
            None
        } else {
            Some(
                finite
                    && witness.is_none_or(|w| w.value > 0.0)
                    && parseval_max_err.is_none_or(|e| e <= 1e-8),
            )
        };
        let doc = bundle.doc(json!({
            "report": report,
            "witness": witness,
            "parseval_max_log_err": parseval_max_err,
            "pass": pass,
        }));
        write_json(&dir, "growth.json", &doc, &mut files)?;
        bundle.suites.push(SuiteResult {
            name: "growth",
            ran: true,
            pass,
            detail: format!(
                "{} grid radii, sup Gamma {:.6e}, witness {}",
                report.rows.len(),
                report.sup_gamma,
                witness.map_or("n/a".to_string(), |w| format!("{:.6e}", w.value))
            ),
        });
        bundle.growth = Some(report);
        bundle.witness = witness;
        plots.push(PlotKind::Growth);
    } else {
        bundle.suites.push(SuiteResult::skipped("growth"));
    }

    if cfg.suites.orbit {
        let targets = orbit_targets(&assembly, cfg.orbit_k, cfg.orbit_sample);
        let records: Vec<OrbitCheckRecord> = targets
            .chunk_by(|a, b| a.0 == b.0)
            .flat_map(|chunk| {
                let block = &assembly.blocks[chunk[0].0].descriptor;
                let entry = assembly.entry(block.k.unwrap_or(0)).expect("class entry");
                let s: Vec<u64> = chunk.iter().map(|t| t.1).collect();
                orbit_check(&assembly.series, Some(&assembly.exact), entry, block, &s)
            })
            .collect();
        let failures = records.iter().filter(|r| !r.pass).count();
        let pass = (!records.is_empty()).then_some(failures == 0);
        let doc = bundle.doc(json!({ "records": records, "pass": pass }));
        write_json(&dir, "orbit.json", &doc, &mut files)?;
        bundle.suites.push(SuiteResult {
            name: "orbit",
            ran: true,
            pass,
            detail: format!("{} hitting indices checked, {failures} failures", records.len()),
        });
        bundle.orbit = Some(records);
    } else {
        bundle.suites.push(SuiteResult::skipped("orbit"));
    }

    if cfg.suites.density {
        let ks: Vec<u32> = match cfg.density_k {
            Some(k) => vec![k],
            None => (1..=cfg.k_max).collect(),
        };
        let descriptors = assembly.descriptors();
        let checks: Vec<DensityCheck> = ks
            .iter()
            .map(|&k| {
                let entry = assembly
                    .entry(k)
                    .ok_or_else(|| Error::invalid("density_k", format!("class {k} is above k_max")))?;
                hitting_density_check(&descriptors, k, entry, cfg.gamma, cfg.density_slack)
            })
            .collect::<Result<_>>()?;
        let asserted: Vec<bool> = checks
            .iter()
            .filter(|c| c.enough_blocks)
            .filter_map(|c| c.pass)
            .collect();
        let pass = (!asserted.is_empty()).then(|| asserted.iter().all(|&p| p));
        let doc = bundle.doc(json!({ "checks": checks, "pass": pass }));
        write_json(&dir, "density.json", &doc, &mut files)?;
        bundle.suites.push(SuiteResult {
            name: "density",
            ran: true,
            pass,
            detail: checks
                .iter()
                .map(|c| format!("k={}: running max {:.6} vs {:.6}", c.k, c.running_max, c.slack * c.bound))
                .collect::<Vec<_>>()
                .join("; "),
        });
        bundle.density = Some(checks);
        plots.push(PlotKind::Density);
    } else {
        bundle.suites.push(SuiteResult::skipped("density"));
    }

    files.extend(emit_plot_data(&bundle, &dir, &plots)?);
    bundle.assembly = Some(assembly);
    let failed = bundle.suites.iter().any(|s| s.pass == Some(false));
    let status = if failed { "fail" } else { "pass" };
    finish(bundle, &dir, files, status.into())
}

fn finish(bundle: ReportBundle, dir: &Path, mut files: Vec<String>, status: String) -> Result<SuiteOutcome> {
    let exit_code = if status == "fail" { 1 } else { 0 };
    files.push("summary.json".into());
    files.sort();
    let suites: Vec<Value> = bundle
        .suites
        .iter()
        .map(|s| json!({ "name": s.name, "ran": s.ran, "pass": s.pass, "verdict": verdict(s.pass), "detail": s.detail }))
        .collect();
    let doc = bundle.doc(json!({
        "status": status,
        "exit_code": exit_code,
        "suites": suites,
        "warnings": bundle.warnings,
        "files": files,
    }));
    let mut written = Vec::new();
    write_json(dir, "summary.json", &doc, &mut written)?;
    Ok(SuiteOutcome {
        exit_code,
        status,
        bundle,
        files,
    })
}

/// Path of a bundle member inside an output directory.
pub fn bundle_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
