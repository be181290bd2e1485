//! CSV tables and static SVG plots. Output is byte-deterministic for a
//! fixed configuration and seed.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hbspace::{Error, Result};
use plotters::prelude::*;

pub struct OutDir {
    dir: PathBuf,
    header: String,
    written: Vec<PathBuf>,
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))
}

impl OutDir {
    /// `header` goes on the comment line that opens every CSV.
    pub fn new(dir: &Path, header: String) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<Cell>>) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "# {}", self.header).unwrap();
        writeln!(s, "{}", columns.join(",")).unwrap();
        for row in rows {
            let cells: Vec<String> = row
                .into_iter()
                .map(|c| match c {
                    Cell::F(v) => num(v),
                    Cell::I(v) => v.to_string(),
                    Cell::S(v) => v,
                })
                .collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        self.write(name, s.as_bytes())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, bytes).map_err(|e| io(&p, e))?;
        self.written.push(p);
        Ok(())
    }

    pub fn line_plot(&mut self, name: &str, title: &str, x_label: &str, y_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> Result<()> {
        let p = self.path(name);
        line_plot(&p, title, x_label, y_label, series).map_err(|e| io(&p, e))?;
        self.written.push(p);
        Ok(())
    }

    pub fn heatmap(&mut self, name: &str, title: &str, x: (f64, f64), y: (f64, f64), values: &[Vec<f64>]) -> Result<()> {
        let p = self.path(name);
        heatmap(&p, title, x, y, values).map_err(|e| io(&p, e))?;
        self.written.push(p);
        Ok(())
    }
}

type PlotResult = std::result::Result<(), Box<dyn std::error::Error>>;

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        let d = lo.abs().max(1.0) * 0.05;
        return (lo - d, hi + d);
    }
    let d = (hi - lo) * 0.05;
    (lo - d, hi + d)
}

const PALETTE: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];

fn line_plot(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[(&str, Vec<(f64, f64)>)]) -> PlotResult {
    let pts = series.iter().flat_map(|s| s.1.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(x0..x1, y0..y1)?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw()?;
    for (i, (label, data)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let data: Vec<(f64, f64)> = data.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        chart
            .draw_series(LineSeries::new(data.clone(), color.stroke_width(2)))?
            .label(*label)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
        chart.draw_series(data.iter().map(|&p| Circle::new(p, 3, color.filled())))?;
    }
    chart.configure_series_labels().background_style(WHITE).border_style(BLACK).draw()?;
    root.present()?;
    Ok(())
}

/// Rows run along `y`, columns along `x`; colors follow log10 of the values.
fn heatmap(path: &Path, title: &str, x: (f64, f64), y: (f64, f64), values: &[Vec<f64>]) -> PlotResult {
    let rows = values.len();
    let cols = values.first().map_or(0, |r| r.len());
    let logs: Vec<f64> = values.iter().flatten().map(|v| v.max(1e-300).log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let root = SVGBackend::new(path, (720, 560)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{title} (log10 range {lo:.3} .. {hi:.3})"), ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(x.0..x.1, y.0..y.1)?;
    chart.configure_mesh().x_desc("theta").y_desc("r").disable_mesh().draw()?;
    let dx = (x.1 - x.0) / cols.max(1) as f64;
    let dy = (y.1 - y.0) / rows.max(1) as f64;
    chart.draw_series(values.iter().enumerate().flat_map(|(i, row)| {
        row.iter().enumerate().map(move |(j, v)| {
            let t = (v.max(1e-300).log10() - lo) / span;
            let color = HSLColor(0.7 * (1.0 - t), 0.8, 0.5);
            let (xa, ya) = (x.0 + j as f64 * dx, y.0 + i as f64 * dy);
            Rectangle::new([(xa, ya), (xa + dx, ya + dy)], color.filled())
        })
    }))?;
    root.present()?;
    Ok(())
}
