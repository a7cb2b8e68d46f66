//! Subcommand drivers. Each returns the paths it wrote.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ion_nmpm::closed_form::{p_excited_second_order, CoefficientSet, CoherentExcitedSolution};
use ion_nmpm::report::{self, fmt_e12, DeviationRecord};
use ion_nmpm::{IonParams, TimeGrid};
use rayon::prelude::*;

use crate::comparison::{self, evolve_rows, ComparisonRow, CoherentPoint};
use crate::config::{Output, RunConfig};
use crate::svg;
use crate::validate::{self, ValidationReport};

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_comparison(cfg: &RunConfig, stem: &str, title: &str, rows: &[ComparisonRow]) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if cfg.wants(Output::Csv) {
        let path = cfg.out_dir.join(format!("{stem}.csv"));
        let mut out = create(&path)?;
        comparison::write_rows(&mut out, rows)?;
        out.flush()?;
        written.push(path);
    }
    if cfg.wants(Output::Svg) {
        let path = cfg.out_dir.join(format!("{stem}.svg"));
        fs::write(&path, svg::comparison_plot(title, cfg.tau_max, rows))?;
        written.push(path);
    }
    Ok(written)
}

fn write_deviations(dir: &Path, records: &[DeviationRecord]) -> anyhow::Result<PathBuf> {
    let path = dir.join("deviation_report.csv");
    let mut out = create(&path)?;
    report::write_csv(&mut out, records)?;
    out.flush()?;
    Ok(path)
}

/// Explicit-vs-direct records of the second-order coherent solution along a grid.
fn coherent_deviations(p: &IonParams, alpha: f64, cfg: &RunConfig, grid: &TimeGrid) -> anyhow::Result<Vec<DeviationRecord>> {
    let trunc = cfg.trunc()?;
    let sol = CoherentExcitedSolution::new(alpha, p.eta(), trunc)?;
    let mut out = Vec::new();
    for &tau in grid.taus() {
        out.extend(sol.second_order(p, tau, CoefficientSet::Corrected)?.deviations);
        out.extend(p_excited_second_order(p, alpha, tau, trunc)?.deviation);
    }
    Ok(out)
}

/// Label used in file names: `0.1` → `0.1`, `0.25` → `0.25`.
pub fn lambda_label(lambda: f64) -> String {
    format!("{lambda}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Panel {
    pub lambda: f64,
    pub rows: Vec<ComparisonRow>,
}

pub fn fig1_panels(cfg: &RunConfig) -> anyhow::Result<Vec<Fig1Panel>> {
    let trunc = cfg.trunc()?;
    let grid = TimeGrid::uniform(cfg.tau_max, cfg.tau_steps)?;
    cfg.fig1_lambdas
        .par_iter()
        .map(|&lambda| {
            let p = IonParams::from_lambda(lambda, cfg.kappa, cfg.eta)?;
            let rows = CoherentPoint::new(p, cfg.alpha, cfg.order, trunc)?.rows(&grid)?;
            Ok(Fig1Panel { lambda, rows })
        })
        .collect()
}

pub fn fig1(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut written = Vec::new();
    for panel in fig1_panels(cfg)? {
        let label = lambda_label(panel.lambda);
        let title = format!("λ = {label}, η = {}, κ = {}, α = {}", cfg.eta, cfg.kappa, cfg.alpha);
        written.extend(write_comparison(cfg, &format!("fig1_lambda{label}"), &title, &panel.rows)?);
    }
    if cfg.wants(Output::DeviationReport) && cfg.order == 2 {
        let grid = TimeGrid::uniform(cfg.tau_max, cfg.tau_steps)?;
        let mut records = Vec::new();
        for &lambda in &cfg.fig1_lambdas {
            let p = IonParams::from_lambda(lambda, cfg.kappa, cfg.eta)?;
            records.extend(coherent_deviations(&p, cfg.alpha, cfg, &grid)?);
        }
        written.push(write_deviations(&cfg.out_dir, &records)?);
    }
    Ok(written)
}

pub fn evolve(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let grid = TimeGrid::uniform(cfg.tau_max, cfg.tau_steps)?;
    let p = IonParams::from_lambda(cfg.lambda, cfg.kappa, cfg.eta)?;
    let initial = cfg.initial_state();
    let rows = evolve_rows(p, initial, cfg.order, cfg.trunc()?, &grid)?;
    let title = format!("{initial:?}, λ = {}, η = {}, κ = {}, order {}", cfg.lambda, cfg.eta, cfg.kappa, cfg.order);
    let mut written = write_comparison(cfg, "evolve", &title, &rows)?;
    if cfg.wants(Output::DeviationReport) {
        let records = match initial {
            ion_nmpm::InitialStateSpec::CoherentExcited { alpha } if cfg.order == 2 => {
                coherent_deviations(&p, alpha, cfg, &grid)?
            }
            _ => Vec::new(),
        };
        written.push(write_deviations(&cfg.out_dir, &records)?);
    }
    Ok(written)
}

pub const SWEEP_HEADER_PREFIX: &str = "lambda,eta,kappa,alpha,";

/// One sweep row: the grid point, its comparison row or the error that prevented it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub eta: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub tau: f64,
    pub result: Result<ComparisonRow, String>,
}

impl SweepRow {
    pub fn csv_line(&self) -> String {
        let head = [self.lambda, self.eta, self.kappa, self.alpha].map(fmt_e12).join(",");
        match &self.result {
            Ok(r) => format!("{head},{},", r.csv_fields()),
            Err(e) => {
                let blank = ComparisonRow::new(self.tau, f64::NAN, f64::NAN, f64::NAN, f64::NAN);
                format!("{head},{},{}", blank.csv_fields(), e.replace([',', '\n'], ";"))
            }
        }
    }
}

pub fn sweep_taus(cfg: &RunConfig) -> anyhow::Result<Vec<f64>> {
    if cfg.sweep_tau.is_empty() {
        Ok(TimeGrid::uniform(cfg.tau_max, cfg.tau_steps)?.taus().to_vec())
    } else {
        Ok(cfg.sweep_tau.clone())
    }
}

/// Rows in grid order (λ outermost, τ innermost), whatever the evaluation order.
pub fn sweep_rows(cfg: &RunConfig) -> anyhow::Result<Vec<SweepRow>> {
    let trunc = cfg.trunc()?;
    let taus = sweep_taus(cfg)?;
    let mut points = Vec::new();
    for &lambda in &cfg.sweep_lambda {
        for &eta in &cfg.sweep_eta {
            for &alpha in &cfg.sweep_alpha {
                points.push((lambda, eta, alpha));
            }
        }
    }
    let blocks: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|&(lambda, eta, alpha)| {
            let row = |tau: f64, result| SweepRow { lambda, eta, kappa: cfg.kappa, alpha, tau, result };
            let point = IonParams::from_lambda(lambda, cfg.kappa, eta)
                .and_then(|p| CoherentPoint::new(p, alpha, cfg.order, trunc));
            match point {
                Ok(point) => taus.iter().map(|&tau| row(tau, point.row(tau).map_err(|e| e.to_string()))).collect(),
                Err(e) => taus.iter().map(|&tau| row(tau, Err(e.to_string()))).collect(),
            }
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

pub fn sweep(cfg: &RunConfig) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let rows = sweep_rows(cfg)?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points failed; see the error column", rows.len());
    }
    let path = cfg.out_dir.join("sweep.csv");
    let mut out = create(&path)?;
    writeln!(out, "{SWEEP_HEADER_PREFIX}{},error", comparison::CSV_HEADER)?;
    for r in &rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()?;
    Ok(vec![path])
}

pub fn validate(cfg: &RunConfig) -> anyhow::Result<(ValidationReport, PathBuf)> {
    fs::create_dir_all(&cfg.out_dir)?;
    let report = validate::run_all(cfg);
    let path = write_deviations(&cfg.out_dir, &report.deviations)?;
    Ok((report, path))
}
