//! Deterministic CSV emission: per-experiment result tables, a run summary,
//! and flat (x, y, series) plot data for external plotting.

use std::path::Path;

use crate::error::Result;
use crate::harness::{ResultTable, ALL_EXPERIMENTS};

/// 12 significant digits, locale-free.
pub fn format_g12(x: f64) -> String {
    format!("{x:.11e}")
}

pub const TABLE_HEADER: &str = "experiment,instance,seed,metric,value,bound,pass";

/// One experiment's rows as CSV with a header, in construction order.
pub fn table_csv(table: &ResultTable) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in &table.rows {
        let bound = row.bound.map(format_g12).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            table.experiment,
            row.instance,
            row.seed,
            row.metric,
            format_g12(row.value),
            bound,
            row.pass as u8
        ));
    }
    out
}

pub fn write_table(table: &ResultTable, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, table_csv(table))?;
    Ok(())
}

/// Per-experiment pass/fail aggregate. Recomputed from rows; the aggregates
/// are asserted to match a second count in tests.
pub fn summary_csv(tables: &[ResultTable]) -> String {
    let mut out = String::from("experiment,seed,rows,passed,failed,status\n");
    for id in ALL_EXPERIMENTS {
        for t in tables.iter().filter(|t| t.experiment == id) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.experiment,
                t.master_seed,
                t.rows.len(),
                t.passed(),
                t.failed(),
                if t.all_pass() { "PASS" } else { "FAIL" }
            ));
        }
    }
    out
}

/// Human-oriented one-line summary for the terminal, naming the first
/// violated bound if any.
pub fn summary_line(table: &ResultTable) -> String {
    match table.first_failure() {
        None => format!("{}: PASS ({} checks)", table.experiment, table.rows.len()),
        Some(row) => format!(
            "{}: FAIL at instance {} metric {} value {} bound {}",
            table.experiment,
            row.instance,
            row.metric,
            format_g12(row.value),
            row.bound.map(format_g12).unwrap_or_default()
        ),
    }
}

/// Flat plot data: every bounded metric contributes a measured series and a
/// bound series keyed by instance.
pub fn plot_data_csv(tables: &[ResultTable]) -> String {
    let mut out = String::from("experiment,series,x,y\n");
    for t in tables {
        for row in &t.rows {
            if let Some(bound) = row.bound {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    t.experiment,
                    row.metric,
                    row.instance,
                    format_g12(row.value)
                ));
                out.push_str(&format!(
                    "{},{}.bound,{},{}\n",
                    t.experiment,
                    row.metric,
                    row.instance,
                    format_g12(bound)
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentId;

    fn sample_table() -> ResultTable {
        let mut t = ResultTable::new(ExperimentId::Ratio, 7);
        t.check_at_most(0, "dev", 5e-10, 1e-9);
        t.info(0, "note", 1.0);
        t
    }

    #[test]
    fn csv_shape() {
        let csv = table_csv(&sample_table());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], TABLE_HEADER);
        assert!(lines[1].starts_with("ratio,0,7,dev,"));
        assert!(lines[1].ends_with(",1"));
        // Informational row has an empty bound column.
        assert!(lines[2].contains(",,1"));
    }

    #[test]
    fn significant_digits_fixed() {
        assert_eq!(format_g12(0.625), "6.25000000000e-1");
        assert_eq!(format_g12(1.0), "1.00000000000e0");
    }

    #[test]
    fn summary_counts_match_recomputation() {
        let t = sample_table();
        let csv = summary_csv(std::slice::from_ref(&t));
        assert!(csv.contains("ratio,7,2,2,0,PASS"));
        let manual_pass = t.rows.iter().filter(|r| r.pass).count();
        assert_eq!(manual_pass, t.passed());
    }

    #[test]
    fn plot_data_emits_bound_series() {
        let csv = plot_data_csv(&[sample_table()]);
        assert!(csv.contains("ratio,dev,0,"));
        assert!(csv.contains("ratio,dev.bound,0,"));
        // Informational rows do not plot.
        assert!(!csv.contains("note"));
    }

    #[test]
    fn failing_summary_names_the_violation() {
        let mut t = ResultTable::new(ExperimentId::UnionBound, 5);
        t.check_at_least(17, "all_success_vs_floor", 0.4, 0.7);
        let line = summary_line(&t);
        assert!(line.contains("union-bound"));
        assert!(line.contains("instance 17"));
        assert!(line.contains("all_success_vs_floor"));
        assert!(line.contains("4.00000000000e-1"));
        assert!(line.contains("7.00000000000e-1"));
        assert!(summary_csv(&[t]).contains("union-bound,5,1,0,1,FAIL"));
    }
}
