//! Delimited-table ingestion: comma- or whitespace-separated numeric tables
//! with a header row, plus the Auto MPG preset.

use anyhow::{anyhow, bail, Context, Result};
use coherencykit::Dataset;
use std::path::Path;

/// The six continuous Auto MPG columns, in file order.
pub const AUTO_MPG_COLUMNS: [&str; 6] = [
    "mpg",
    "cylinders",
    "displacement",
    "horsepower",
    "weight",
    "acceleration",
];

/// Processing order over the selected Auto MPG columns: displacement,
/// cylinders, horsepower, mpg, weight, acceleration.
pub const AUTO_MPG_ORDER: [usize; 6] = [2, 1, 3, 0, 4, 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MissingPolicy {
    /// Drop any row with a missing marker (`?` or empty cell).
    DropRows,
    /// Treat missing markers as parse errors.
    Error,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

fn split_line(line: &str, comma: bool) -> Vec<String> {
    if comma {
        line.split(',').map(|c| c.trim().to_string()).collect()
    } else {
        line.split_whitespace().map(|c| c.to_string()).collect()
    }
}

/// Loads a delimited numeric table. `columns` restricts and orders the
/// selection; `None` keeps every column. Rows with missing markers are
/// dropped or rejected per `policy`.
pub fn load_csv(
    path: impl AsRef<Path>,
    columns: Option<&[&str]>,
    policy: MissingPolicy,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header_line = lines.next().ok_or_else(|| anyhow!("{}: empty file", path.display()))?;
    let comma = header_line.contains(',');
    let header = split_line(header_line, comma);

    let indices: Vec<usize> = match columns {
        Some(wanted) => wanted
            .iter()
            .map(|name| {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| anyhow!("{}: unknown column {name:?}", path.display()))
            })
            .collect::<Result<_>>()?,
        None => (0..header.len()).collect(),
    };
    let names: Vec<String> = indices.iter().map(|&i| header[i].clone()).collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells = split_line(line, comma);
        let mut row = Vec::with_capacity(indices.len());
        let mut missing = false;
        for &i in &indices {
            let cell = cells.get(i).map(String::as_str).unwrap_or("");
            if is_missing(cell) {
                if policy == MissingPolicy::Error {
                    bail!("{}:{}: missing value in column {:?}", path.display(), lineno + 2, header[i]);
                }
                missing = true;
                break;
            }
            let v: f64 = cell.parse().map_err(|_| {
                anyhow!("{}:{}: non-numeric cell {cell:?} in column {:?}", path.display(), lineno + 2, header[i])
            })?;
            row.push(v);
        }
        if !missing {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        bail!("{}: no rows left after dropping missing values", path.display());
    }
    Ok(Dataset::new(names, rows))
}

/// Auto MPG preset: the six continuous columns with missing rows dropped.
pub fn load_auto_mpg(path: impl AsRef<Path>) -> Result<Dataset> {
    load_csv(path, Some(&AUTO_MPG_COLUMNS), MissingPolicy::DropRows)
}
