use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::csvio::{fmt_f64, read_chain_csv, write_atomic, ChainFile};
use crate::diagnostics::{
    coordinate_diagnostics, error_report_from_columns, CoordinateDiagnostics, ErrorDensityReport,
    HeatGrid2D, Marginal,
};
use crate::error::{AbcError, Result};

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub files: Vec<String>,
    pub acceptance_rates: Vec<Option<f64>>,
    pub diagnostics: Vec<CoordinateDiagnostics>,
    pub errors: ErrorDensityReport,
}

/// Expands directories to their `chain_*.csv` files, in name order.
pub fn collect_chain_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("chain_") && n.ends_with(".csv"))
                })
                .collect();
            found.sort_by_key(|f| chain_number(f));
            if found.is_empty() {
                return Err(AbcError::Input(format!(
                    "no chain_*.csv files in {}",
                    p.display()
                )));
            }
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(AbcError::Input("no chain files given".into()));
    }
    Ok(files)
}

fn chain_number(p: &Path) -> (u64, String) {
    let name = p
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    let n = name
        .trim_start_matches("chain_")
        .trim_end_matches(".csv")
        .parse()
        .unwrap_or(u64::MAX);
    (n, name)
}

pub fn analyze_files(chains: &[ChainFile], names: Vec<String>) -> Result<AnalysisReport> {
    let first = chains
        .first()
        .ok_or_else(|| AbcError::Input("no chain files given".into()))?;
    for (c, n) in chains.iter().zip(&names) {
        if c.header() != first.header() {
            return Err(AbcError::Input(format!(
                "header mismatch: {n} has `{}`, expected `{}`",
                c.header().join(","),
                first.header().join(",")
            )));
        }
    }
    let columns: Vec<Vec<Vec<f64>>> = chains
        .iter()
        .map(|c| (0..c.eps_names.len()).map(|k| c.eps_column(k)).collect())
        .collect();
    let errors = error_report_from_columns(first.eps_names.clone(), &columns)?;
    let mut diagnostics = Vec::new();
    for (i, name) in first.theta_names.iter().enumerate() {
        let cols: Vec<Vec<f64>> = chains.iter().map(|c| c.theta_column(i)).collect();
        diagnostics.push(coordinate_diagnostics(format!("theta_{name}"), &cols)?);
    }
    for (k, name) in first.eps_names.iter().enumerate() {
        let cols: Vec<Vec<f64>> = chains.iter().map(|c| c.eps_column(k)).collect();
        diagnostics.push(coordinate_diagnostics(format!("eps_{name}"), &cols)?);
    }
    Ok(AnalysisReport {
        files: names,
        acceptance_rates: chains.iter().map(|c| c.acceptance_rate()).collect(),
        diagnostics,
        errors,
    })
}

pub fn marginal_csv(m: &Marginal) -> String {
    let mut out = String::new();
    match m {
        Marginal::Density(d) => {
            out.push_str("x,density\n");
            for (x, v) in d.grid.iter().zip(&d.values) {
                writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v)).unwrap();
            }
        }
        Marginal::Lattice(p) => {
            out.push_str("eps,mass\n");
            for (s, v) in p.support.iter().zip(&p.masses) {
                writeln!(out, "{s},{}", fmt_f64(*v)).unwrap();
            }
        }
    }
    out
}

pub fn heat_csv(g: &HeatGrid2D) -> String {
    let mut out = String::from("x_lo,x_hi,y_lo,y_hi,mass\n");
    for (i, row) in g.mass.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(g.x_edges[i]),
                fmt_f64(g.x_edges[i + 1]),
                fmt_f64(g.y_edges[j]),
                fmt_f64(g.y_edges[j + 1]),
                fmt_f64(*m)
            )
            .unwrap();
        }
    }
    out
}

/// Writes the marginal and heat-grid CSVs of `report` into `out`, returning the file names.
pub fn write_error_grids(
    report: &ErrorDensityReport,
    out: &Path,
    prefix: &str,
) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for (name, m) in report.names.iter().zip(&report.marginals) {
        let kind = if matches!(m, Marginal::Lattice(_)) {
            "pmf"
        } else {
            "density"
        };
        let file = format!("{prefix}{kind}_{name}.csv");
        write_atomic(&out.join(&file), marginal_csv(m).as_bytes())?;
        files.push(file);
    }
    for g in &report.heat_grids {
        let file = format!(
            "{prefix}heat_{}_{}.csv",
            report.names[g.x], report.names[g.y]
        );
        write_atomic(&out.join(&file), heat_csv(&g.grid).as_bytes())?;
        files.push(file);
    }
    Ok(files)
}

pub fn cmd_analyze(inputs: &[PathBuf], out: &Path) -> Result<AnalysisReport> {
    let files = collect_chain_files(inputs)?;
    let chains = files
        .iter()
        .map(|f| read_chain_csv(f))
        .collect::<Result<Vec<_>>>()?;
    let names = files.iter().map(|f| f.display().to_string()).collect();
    let report = analyze_files(&chains, names)?;
    std::fs::create_dir_all(out)?;
    write_error_grids(&report.errors, out, "")?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&out.join("report.json"), json.as_bytes())?;
    Ok(report)
}
