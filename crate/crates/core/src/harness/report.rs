//! Aggregation and report emission.
//!
//! Column order everywhere: method, theta, mae_mean, mae_sd, cost_mean,
//! cost_sd, p_value. CSV carries full precision (shortest round-trip
//! floats); the markdown table rounds to one decimal for display.

use std::path::Path;

use super::{ExperimentConfig, Method, ReplicateRecord};
use crate::diagnostics::welch_t_test;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub method: Method,
    pub theta: f64,
    pub mae_mean: f64,
    pub mae_sd: f64,
    pub cost_mean: f64,
    pub cost_sd: f64,
    /// Welch p-value of the adversarial learner against the better
    /// off-the-shelf baseline; present only on adversarial rows.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ReportTable {
    pub rows: Vec<ReportRow>,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn collect(records: &[ReplicateRecord], method: Method, theta: f64, cost: bool) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.method == method && r.theta == theta)
        .map(|r| if cost { r.realized_cost } else { r.mae_b })
        .collect()
}

/// Aggregates replicate records into the report table. Within each θ the
/// adversarial learner is Welch-tested on realized cost against the better
/// (by replicate mean) of the two off-the-shelf baselines.
pub(crate) fn aggregate(cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Result<ReportTable> {
    if records.is_empty() {
        return Err(Error::EmptyData("no replicate records to aggregate"));
    }
    for r in records {
        if !r.dominance_ok {
            // The oracle anchors every comparison; a violation would mean a
            // solver budget problem and poisons the table.
            return Err(Error::InvalidConfig(format!(
                "oracle dominance violated at theta {} seed {} ({})",
                r.theta,
                r.seed,
                r.method.name()
            )));
        }
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for &theta in &cfg.theta_grid {
            let maes = collect(records, method, theta, false);
            let costs = collect(records, method, theta, true);
            if maes.is_empty() {
                continue;
            }
            let (mae_mean, mae_sd) = mean_sd(&maes);
            let (cost_mean, cost_sd) = mean_sd(&costs);
            let p_value = if method == Method::Wdgrl {
                best_baseline_costs(cfg, records, theta)
                    .and_then(|b| welch_t_test(&costs, &b).ok())
                    .map(|w| w.p_value)
            } else {
                None
            };
            rows.push(ReportRow {
                method,
                theta,
                mae_mean,
                mae_sd,
                cost_mean,
                cost_sd,
                p_value,
            });
        }
    }
    Ok(ReportTable { rows })
}

/// Realized costs of the better (lower replicate-mean cost) off-the-shelf
/// baseline at θ, when at least one baseline was run.
fn best_baseline_costs(
    cfg: &ExperimentConfig,
    records: &[ReplicateRecord],
    theta: f64,
) -> Option<Vec<f64>> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for method in [Method::ElasticNet, Method::Dnn] {
        if !cfg.methods.contains(&method) {
            continue;
        }
        let costs = collect(records, method, theta, true);
        if costs.is_empty() {
            continue;
        }
        let mean = costs.iter().sum::<f64>() / costs.len() as f64;
        if best.as_ref().map_or(true, |(m, _)| mean < *m) {
            best = Some((mean, costs));
        }
    }
    best.map(|(_, costs)| costs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    StructuredText,
    Markdown,
}

fn format_opt(p: Option<f64>) -> String {
    p.map(|v| format!("{v}")).unwrap_or_default()
}

/// Full-precision CSV, fixed column order.
pub fn report_csv(table: &ReportTable) -> String {
    let mut out = String::from("method,theta,mae_mean,mae_sd,cost_mean,cost_sd,p_value\n");
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method.name(),
            r.theta,
            r.mae_mean,
            r.mae_sd,
            r.cost_mean,
            r.cost_sd,
            format_opt(r.p_value)
        ));
    }
    out
}

/// Display table rounded to one decimal.
pub fn format_markdown_table(table: &ReportTable) -> String {
    let mut out = String::from(
        "| method | theta | mae_mean | mae_sd | cost_mean | cost_sd | p_value |\n\
         |---|---|---|---|---|---|---|\n",
    );
    for r in &table.rows {
        out.push_str(&format!(
            "| {} | {} | {:.1} | {:.1} | {:.1} | {:.1} | {} |\n",
            r.method.name(),
            r.theta,
            r.mae_mean,
            r.mae_sd,
            r.cost_mean,
            r.cost_sd,
            r.p_value.map(|p| format!("{p:.4}")).unwrap_or_default()
        ));
    }
    out
}

fn report_structured_text(table: &ReportTable) -> String {
    let mut out = String::new();
    for r in &table.rows {
        out.push_str(&format!(
            "row {{ method = {}, theta = {}, mae_mean = {}, mae_sd = {}, cost_mean = {}, cost_sd = {}, p_value = {} }}\n",
            r.method.name(),
            r.theta,
            r.mae_mean,
            r.mae_sd,
            r.cost_mean,
            r.cost_sd,
            r.p_value.map(|p| p.to_string()).unwrap_or_else(|| "none".into())
        ));
    }
    out
}

/// Writes the table in the requested format.
pub fn emit_report(table: &ReportTable, format: ReportFormat, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::EmptyData("report table has no rows"));
    }
    let body = match format {
        ReportFormat::Csv => report_csv(table),
        ReportFormat::StructuredText => report_structured_text(table),
        ReportFormat::Markdown => format_markdown_table(table),
    };
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Raw per-replicate records as CSV (full precision, deterministic order).
pub fn raw_records_csv(records: &[ReplicateRecord]) -> String {
    let mut out = String::from(
        "theta,seed,method,mae_b,realized_cost,solver_optimal,oracle_cost,dominance_ok\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.theta,
            r.seed,
            r.method.name(),
            r.mae_b,
            r.realized_cost,
            r.solver_optimal,
            r.oracle_cost,
            r.dominance_ok
        ));
    }
    out
}

/// Parses a raw-records CSV back into replicate records (for `report`
/// re-aggregation); the round trip is bit-exact.
pub fn parse_raw_csv(body: &str) -> Result<Vec<ReplicateRecord>> {
    let mut records = Vec::new();
    let mut lines = body.lines();
    let header = lines.next().ok_or(Error::EmptyData("raw csv empty"))?;
    if header != "theta,seed,method,mae_b,realized_cost,solver_optimal,oracle_cost,dominance_ok" {
        return Err(Error::parse("raw csv", "unexpected header"));
    }
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 8 {
            return Err(Error::parse("raw csv", format!("line {}: want 8 fields", ln + 2)));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::parse("raw csv", format!("line {}: {e}", ln + 2)))
        };
        records.push(ReplicateRecord {
            theta: parse_f(parts[0])?,
            seed: parts[1]
                .parse()
                .map_err(|e| Error::parse("raw csv", format!("line {}: {e}", ln + 2)))?,
            method: parts[2].parse()?,
            mae_b: parse_f(parts[3])?,
            realized_cost: parse_f(parts[4])?,
            solver_optimal: parts[5] == "true",
            oracle_cost: parse_f(parts[6])?,
            dominance_ok: parts[7] == "true",
        });
    }
    Ok(records)
}

/// Re-aggregates raw records (CLI `report` subcommand).
pub fn reaggregate(cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Result<ReportTable> {
    aggregate(cfg, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(theta: f64, seed: u64, method: Method, mae: f64, cost: f64) -> ReplicateRecord {
        ReplicateRecord {
            theta,
            seed,
            method,
            mae_b: mae,
            realized_cost: cost,
            solver_optimal: true,
            oracle_cost: 10.0,
            dominance_ok: true,
        }
    }

    fn tiny_cfg() -> ExperimentConfig {
        ExperimentConfig {
            theta_grid: vec![1.0],
            seeds: vec![1, 2, 3],
            methods: vec![Method::Dnn, Method::Wdgrl],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn aggregation_means_and_sds() {
        let cfg = tiny_cfg();
        let records = vec![
            record(1.0, 1, Method::Dnn, 10.0, 100.0),
            record(1.0, 2, Method::Dnn, 12.0, 110.0),
            record(1.0, 3, Method::Dnn, 14.0, 120.0),
            record(1.0, 1, Method::Wdgrl, 8.0, 90.0),
            record(1.0, 2, Method::Wdgrl, 9.0, 95.0),
            record(1.0, 3, Method::Wdgrl, 10.0, 100.0),
        ];
        let table = aggregate(&cfg, &records).unwrap();
        assert_eq!(table.rows.len(), 2);
        let dnn = &table.rows[0];
        assert_eq!(dnn.mae_mean, 12.0);
        assert_eq!(dnn.mae_sd, 2.0);
        assert!(dnn.p_value.is_none());
        let wdgrl = &table.rows[1];
        assert!(wdgrl.p_value.is_some());
    }

    #[test]
    fn single_seed_sd_is_zero() {
        let cfg = ExperimentConfig {
            seeds: vec![1],
            theta_grid: vec![2.0],
            methods: vec![Method::Dnn],
            ..ExperimentConfig::default()
        };
        let records = vec![record(2.0, 1, Method::Dnn, 5.0, 50.0)];
        let table = aggregate(&cfg, &records).unwrap();
        assert_eq!(table.rows[0].mae_sd, 0.0);
        assert_eq!(table.rows[0].cost_sd, 0.0);
    }

    #[test]
    fn markdown_row_count() {
        let cfg = ExperimentConfig {
            theta_grid: vec![1.0, 2.0],
            seeds: vec![1],
            methods: vec![Method::Dnn, Method::Wdgrl],
            ..ExperimentConfig::default()
        };
        let records = vec![
            record(1.0, 1, Method::Dnn, 1.0, 1.0),
            record(2.0, 1, Method::Dnn, 1.0, 1.0),
            record(1.0, 1, Method::Wdgrl, 1.0, 1.0),
            record(2.0, 1, Method::Wdgrl, 1.0, 1.0),
        ];
        let table = aggregate(&cfg, &records).unwrap();
        let md = format_markdown_table(&table);
        // Header + separator + |methods|·|theta_grid| rows.
        assert_eq!(md.lines().count(), 2 + 4);
    }

    #[test]
    fn raw_csv_roundtrip_is_bit_exact() {
        let records = vec![
            record(1.0, 1, Method::Dnn, 10.123456789012345, 100.5),
            record(1.0, 1, Method::Wdgrl, 0.1 + 0.2, 1e-17),
        ];
        let body = raw_records_csv(&records);
        let back = parse_raw_csv(&body).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.mae_b.to_bits(), b.mae_b.to_bits());
            assert_eq!(a.realized_cost.to_bits(), b.realized_cost.to_bits());
            assert_eq!(a.method, b.method);
        }
        assert_eq!(body, raw_records_csv(&back));
    }

    #[test]
    fn empty_table_emit_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let table = ReportTable { rows: vec![] };
        assert!(emit_report(&table, ReportFormat::Csv, &dir.path().join("t.csv")).is_err());
    }

    #[test]
    fn dominance_violation_rejected() {
        let cfg = tiny_cfg();
        let mut bad = record(1.0, 1, Method::Dnn, 1.0, 5.0);
        bad.dominance_ok = false;
        assert!(aggregate(&cfg, &[bad]).is_err());
    }
}
