//! Plain-text readers and CSV writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::regression::Prediction;
use crate::summary::PosteriorSummary;

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn parse_field(path: &Path, line: usize, field: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|e| Error::Parse {
        context: path.display().to_string(),
        line,
        message: format!("{field:?}: {e}"),
    })
}

fn split(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect()
}

/// One number per line; blank lines and `#` comments are skipped.
pub fn read_observations(path: &Path) -> Result<Vec<f64>> {
    read_lines(path)?
        .iter()
        .map(|(n, l)| parse_field(path, *n, l))
        .collect()
}

/// Two columns `z,x` per line.
pub fn read_pairs(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut z = Vec::new();
    let mut x = Vec::new();
    for (n, l) in read_lines(path)? {
        let fields = split(&l);
        if fields.len() != 2 {
            return Err(Error::Parse {
                context: path.display().to_string(),
                line: n,
                message: format!("expected 2 fields, found {}", fields.len()),
            });
        }
        z.push(parse_field(path, n, fields[0])?);
        x.push(parse_field(path, n, fields[1])?);
    }
    Ok((z, x))
}

/// Curves on a common grid: a header row of grid times, then one row per
/// curve. With `response_last`, each curve row ends with its response.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTable {
    pub grid: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
    pub responses: Option<Vec<f64>>,
}

pub fn read_functional(path: &Path, response_last: bool) -> Result<FunctionalTable> {
    let lines = read_lines(path)?;
    let (header_line, header) = lines.first().ok_or_else(|| Error::Parse {
        context: path.display().to_string(),
        line: 1,
        message: "missing grid header".into(),
    })?;
    let grid = split(header)
        .into_iter()
        .map(|f| parse_field(path, *header_line, f))
        .collect::<Result<Vec<_>>>()?;
    let width = grid.len() + usize::from(response_last);
    let mut curves = Vec::new();
    let mut responses = Vec::new();
    for (n, l) in &lines[1..] {
        let mut row = split(l)
            .into_iter()
            .map(|f| parse_field(path, *n, f))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != width {
            return Err(Error::Parse {
                context: path.display().to_string(),
                line: *n,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        if response_last {
            responses.push(row.pop().expect("nonempty row"));
        }
        curves.push(row);
    }
    Ok(FunctionalTable {
        grid,
        curves,
        responses: response_last.then_some(responses),
    })
}

/// Affinely maps an increasing grid onto `[0, 1]`.
pub fn rescale_grid(grid: &[f64]) -> Result<Vec<f64>> {
    let (lo, hi) = match (grid.first(), grid.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => return Err(Error::invalid("grid must be increasing with at least 2 points")),
    };
    Ok(grid.iter().map(|t| ((t - lo) / (hi - lo)).clamp(0.0, 1.0)).collect())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows `x,mean,sd,band_low,band_high,mc_se`; missing columns are left empty.
pub fn write_summary(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    let mut w = create(path)?;
    let sd = summary.sd();
    let io = |e| Error::io(path, e);
    writeln!(w, "x,mean,sd,band_low,band_high,mc_se").map_err(io)?;
    for i in 0..summary.grid.len() {
        let sd_i = sd.as_ref().map(|s| s[i].to_string()).unwrap_or_default();
        let (lo, hi) = summary
            .band
            .as_ref()
            .map(|b| (b.low[i].to_string(), b.high[i].to_string()))
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            summary.grid[i], summary.mean[i], sd_i, lo, hi, summary.mc_se[i]
        )
        .map_err(io)?;
    }
    finish(path, w)
}

/// Rows `j,weight`.
pub fn write_j_weights(path: &Path, summary: &PosteriorSummary) -> Result<()> {
    write_weights(path, &summary.j_values, &summary.j_weights)
}

pub fn write_weights(path: &Path, j: &[usize], weights: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "j,weight").map_err(io)?;
    for (j, p) in j.iter().zip(weights) {
        writeln!(w, "{j},{p}").map_err(io)?;
    }
    finish(path, w)
}

/// Rows `id,mean,sd`.
pub fn write_predictions(path: &Path, predictions: &[Prediction]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "id,mean,sd").map_err(io)?;
    for (i, p) in predictions.iter().enumerate() {
        writeln!(w, "{i},{},{}", p.mean, p.variance.sqrt()).map_err(io)?;
    }
    finish(path, w)
}

/// Writes a header and rows of already formatted fields.
pub fn write_table(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "{header}").map_err(io)?;
    for r in rows {
        writeln!(w, "{}", r.join(",")).map_err(io)?;
    }
    finish(path, w)
}
