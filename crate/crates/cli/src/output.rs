//! CSV tables, the sweep plot and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

/// Header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Shortest decimal that round-trips, in exponent form when very large or small.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Collects output files for one run directory.
#[derive(Debug)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn table(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        self.write(name, &table.to_csv()?)
    }

    pub fn manifest(&mut self, command: &str, config: &RunConfig) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            version: &'a str,
            command: &'a str,
            files: &'a [String],
            config: &'a RunConfig,
        }
        let m = Manifest { version: qtransport::VERSION, command, files: &self.files, config };
        let text = toml::to_string(&m).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(self.dir.join("manifest.toml"), text)?;
        Ok(())
    }
}

/// Log-log line plot of the non-empty, positive numeric columns against
/// the first column.
pub fn sweep_svg(table: &Table, x_col: usize, y_cols: &[usize], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const M: f64 = 60.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let parse = |s: &String| s.parse::<f64>().ok().filter(|v| *v > 0.0 && v.is_finite());
    let series: Vec<(&str, Vec<(f64, f64)>)> = y_cols
        .iter()
        .map(|&c| {
            let pts = table
                .rows
                .iter()
                .filter_map(|r| Some((parse(&r[x_col])?.log10(), parse(&r[c])?.log10())))
                .collect();
            (table.header[c].as_str(), pts)
        })
        .filter(|(_, p): &(&str, Vec<(f64, f64)>)| !p.is_empty())
        .collect();
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{M}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{M}\" y1=\"{M}\" x2=\"{M}\" y2=\"{}\" stroke=\"black\"/>\n",
        W / 2.0,
        H - M,
        W - M,
        H - M,
        H - M
    );
    out += &format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 {}</text>\n",
        W / 2.0,
        H - 20.0,
        table.header[x_col]
    );
    out += &format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 {})\">log10 value</text>\n",
        H / 2.0,
        H / 2.0
    );
    for (k, label) in [(x0, "x0"), (x1, "x1")] {
        out += &format!(
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\" id=\"{label}\">{k:.2}</text>\n",
            sx(k),
            H - M + 14.0
        );
    }
    for (k, label) in [(y0, "y0"), (y1, "y1")] {
        out += &format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\" id=\"{label}\">{k:.2}</text>\n",
            M - 4.0,
            sy(k) + 3.0
        );
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out += &format!("<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n", path.join(" "));
        for &(x, y) in pts {
            out += &format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n", sx(x), sy(y));
        }
        out += &format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{name}</text>\n",
            W - M - 110.0,
            M + 14.0 * i as f64
        );
    }
    out += "</svg>\n";
    out
}
