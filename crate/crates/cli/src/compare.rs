//! Bound-versus-empirical metrics over joined CSV tables.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use effhorizon::metrics::{convergence_accuracy, convergence_auroc, median_ratio, spearman};
use serde::Serialize;

/// Named numeric columns keyed by environment name; `None` marks an empty cell.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: HashMap<String, Vec<Option<f64>>>,
    pub order: Vec<String>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        let file = std::fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
        Table::from_reader(file, &path.display().to_string())
    }

    /// `label` names the source in error messages.
    pub fn from_reader(source: impl Read, label: &str) -> Result<Table> {
        let mut reader = csv::Reader::from_reader(source);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let name_col = headers.iter().position(|h| h == "name").with_context(|| format!("{label} has no name column"))?;
        let mut rows = HashMap::new();
        let mut order = Vec::new();
        for record in reader.records() {
            let record = record?;
            let name = record[name_col].to_string();
            let values = headers
                .iter()
                .enumerate()
                .map(|(i, h)| {
                    let cell = record.get(i).unwrap_or("").trim();
                    if i == name_col || cell.is_empty() {
                        return Ok(None);
                    }
                    cell.parse::<f64>().map(Some).with_context(|| format!("{label}: {h} = {cell:?} for {name}"))
                })
                .collect::<Result<Vec<_>>>()?;
            if rows.insert(name.clone(), values).is_some() {
                bail!("{label}: duplicate row {name}");
            }
            order.push(name);
        }
        Ok(Table { columns: headers, rows, order })
    }

    fn column(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).expect("known column")
    }

    fn prefixed(&self, prefix: &str) -> Vec<String> {
        self.columns.iter().filter(|c| c.starts_with(prefix)).cloned().collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairMetrics {
    /// Rows where the bound is defined.
    pub rows: usize,
    /// Of those, rows where the learner converged.
    pub converged: usize,
    pub spearman: Option<f64>,
    pub median_ratio: Option<f64>,
    pub auroc: Option<f64>,
    pub accuracy: Option<f64>,
    /// Predict convergence when the log10 bound is at most this.
    pub threshold: Option<f64>,
}

pub type Metrics = BTreeMap<String, BTreeMap<String, PairMetrics>>;

fn pair_metrics(bound: &[f64], empirical: &[Option<f64>]) -> PairMetrics {
    let converged: Vec<bool> = empirical.iter().map(Option::is_some).collect();
    let (b, e): (Vec<f64>, Vec<f64>) = bound.iter().zip(empirical).filter_map(|(&b, e)| e.map(|e| (b, e))).unzip();
    let accuracy = convergence_accuracy(bound, &converged);
    PairMetrics {
        rows: bound.len(),
        converged: b.len(),
        spearman: spearman(&b, &e).ok().filter(|v| v.is_finite()),
        median_ratio: median_ratio(&b, &e).ok(),
        auroc: convergence_auroc(bound, &converged),
        accuracy: accuracy.map(|a| a.0),
        threshold: accuracy.map(|a| a.1).filter(|t| t.is_finite()),
    }
}

/// Metrics for every (empirical column, bound column) pair, joined on `name`.
pub fn compare(bounds: &Table, empirical: &Table) -> Result<Metrics> {
    let bound_cols = bounds.prefixed("bound_");
    let emp_cols = empirical.prefixed("empirical_");
    if bound_cols.is_empty() || emp_cols.is_empty() {
        bail!("need at least one bound_* column and one empirical_* column");
    }
    let names: Vec<&String> = bounds.order.iter().filter(|n| empirical.rows.contains_key(*n)).collect();
    if names.is_empty() {
        bail!("the two tables share no environment names");
    }
    let mut out = Metrics::new();
    for ec in &emp_cols {
        let ei = empirical.column(ec);
        let per_bound = out.entry(ec.clone()).or_default();
        for bc in &bound_cols {
            let bi = bounds.column(bc);
            let (b, e): (Vec<f64>, Vec<Option<f64>>) = names
                .iter()
                .filter_map(|n| bounds.rows[*n][bi].map(|b| (b, empirical.rows[*n][ei])))
                .unzip();
            per_bound.insert(bc.clone(), pair_metrics(&b, &e));
        }
    }
    Ok(out)
}
