//! CSV, JSON and plain-text renderings of experiment results.

use serde::{Deserialize, Serialize};

use super::{AblationReport, ExperimentReport};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Format {
    #[default]
    Csv,
    Json,
    Table,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "table" => Some(Format::Table),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Table => "txt",
        }
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn table_string(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in &rows {
        for (i, c) in r.iter().enumerate() {
            widths[i] = widths[i].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{:>w$}", c, w = widths[i])).collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(header.to_vec());
    s.push_str(&line(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in &rows {
        s.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    s
}

const CELL_HEADER: [&str; 11] = [
    "workload",
    "wire_width",
    "scheme",
    "flows",
    "mean_bounded_ratio",
    "max_bounded_ratio",
    "comm_latency",
    "makespan",
    "ideal_makespan",
    "total_compute",
    "total_stall",
];

const TILE_HEADER: [&str; 8] =
    ["workload", "wire_width", "scheme", "layer", "tile", "compute", "stall", "bounded_ratio"];

impl ExperimentReport {
    fn rows(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|c| {
                vec![
                    c.workload.clone(),
                    c.wire_width.to_string(),
                    c.scheme.clone(),
                    c.flows.to_string(),
                    f6(c.mean_bounded_ratio),
                    f6(c.max_bounded_ratio),
                    c.comm_latency.to_string(),
                    c.makespan.to_string(),
                    c.ideal_makespan.to_string(),
                    c.total_compute.to_string(),
                    c.total_stall.to_string(),
                ]
            })
            .collect()
    }

    /// One row per cell.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => csv_string(&CELL_HEADER, self.rows()),
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            Format::Table => table_string(&CELL_HEADER, self.rows()),
        }
    }

    /// One row per (cell, tile).
    pub fn tiles_csv(&self) -> String {
        let rows = self
            .cells
            .iter()
            .flat_map(|c| {
                c.tiles.iter().map(move |t| {
                    vec![
                        c.workload.clone(),
                        c.wire_width.to_string(),
                        c.scheme.clone(),
                        t.layer.to_string(),
                        format!("{}:{}", t.tile.x, t.tile.y),
                        t.compute.to_string(),
                        t.stall.to_string(),
                        f6(t.bounded_ratio),
                    ]
                })
            })
            .collect();
        csv_string(&TILE_HEADER, rows)
    }
}

const ABLATION_HEADER: [&str; 4] = ["stage", "comm_latency", "reduction", "makespan"];

impl AblationReport {
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| vec![r.stage.clone(), r.comm_latency.to_string(), f6(r.reduction), r.makespan.to_string()])
            .collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => csv_string(&ABLATION_HEADER, self.rows()),
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            Format::Table => {
                format!("{} @ {} bits\n", self.workload, self.wire_width) + &table_string(&ABLATION_HEADER, self.rows())
            }
        }
    }
}
