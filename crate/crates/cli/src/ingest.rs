//! Delimited-text panels: loading, transforms and writing.
//!
//! Orientation is always explicit. A file is a grid of numeric cells, comma
//! or tab separated (detected from the first non-empty line). With
//! `panels_as_columns` each column is one panel and each row one time point;
//! `panels_as_rows` is the transpose.

use std::fs;
use std::path::{Path, PathBuf};

use panelbreak::panel::PanelData;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    #[value(name = "panels_as_columns", alias = "columns")]
    PanelsAsColumns,
    #[value(name = "panels_as_rows", alias = "rows")]
    PanelsAsRows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    #[default]
    #[value(name = "reject")]
    Reject,
    #[value(name = "drop_panel", alias = "drop-panel")]
    DropPanel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Divide every panel by its first observation.
    #[value(name = "rescale_by_first", alias = "rescale-by-first")]
    RescaleByFirst,
    /// `ln x_t - ln x_{t-1}`; shortens every panel by one.
    #[value(name = "log_diff", alias = "log-diff")]
    LogDiff,
    /// Subtract each panel's mean.
    #[value(name = "demean")]
    Demean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub orientation: Orientation,
    /// First record holds labels (panel ids for columns, time ids for rows).
    #[serde(default)]
    pub header: bool,
    /// First field of every record is a label (time ids for columns, panel
    /// ids for rows).
    #[serde(default)]
    pub index_column: bool,
    #[serde(default)]
    pub missing: MissingPolicy,
    /// Applied left to right.
    #[serde(default)]
    pub transforms: Vec<Transform>,
}

/// A loaded panel and what was done to it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub panel: PanelData,
    pub transforms: Vec<Transform>,
    pub dropped_panels: Vec<String>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "." | "null")
}

fn detect_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

struct Grid {
    /// Labels along the record direction (from the header).
    header: Option<Vec<String>>,
    /// Labels from the index column, one per record.
    index: Option<Vec<String>>,
    /// `cells[record][field]`, `None` for missing.
    cells: Vec<Vec<Option<f64>>>,
    /// File line of every record, one-based.
    lines: Vec<usize>,
}

fn read_grid(text: &str, header: bool, index_column: bool) -> Result<Grid> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(detect_delimiter(text))
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let skip = usize::from(index_column);
    let mut header_labels = None;
    let mut index = index_column.then(Vec::new);
    let mut cells = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Parse {
            row: e.position().map_or(k + 1, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let row = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if header && header_labels.is_none() {
            header_labels = Some(record.iter().skip(skip).map(str::to_string).collect::<Vec<_>>());
            continue;
        }
        let fields: Vec<&str> = record.iter().collect();
        let n = fields.len().saturating_sub(skip);
        match width {
            None => width = Some(n),
            Some(w) if w != n => {
                return Err(CliError::Parse {
                    row,
                    column: fields.len(),
                    message: format!("expected {} fields, found {}", w + skip, fields.len()),
                })
            }
            _ => {}
        }
        if let Some(index) = index.as_mut() {
            index.push(fields.first().copied().unwrap_or("").to_string());
        }
        let values = fields[skip..]
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                if is_missing(cell) {
                    return Ok(None);
                }
                cell.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(Some)
                    .ok_or_else(|| CliError::Parse {
                        row,
                        column: j + skip + 1,
                        message: format!("not a finite number: {cell:?}"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        cells.push((row, values));
    }
    if let (Some(labels), Some(w)) = (&header_labels, width) {
        if labels.len() != w {
            return Err(CliError::Parse {
                row: 1,
                column: labels.len(),
                message: format!("header has {} labels for {w} data columns", labels.len()),
            });
        }
    }
    let (lines, cells) = cells.into_iter().unzip();
    Ok(Grid {
        header: header_labels,
        index,
        cells,
        lines,
    })
}

/// Reads, cleans and transforms a panel as described by `spec`.
pub fn load_panel(spec: &IngestSpec) -> Result<Loaded> {
    let text = fs::read_to_string(&spec.path).map_err(|source| CliError::Io {
        path: spec.path.clone(),
        source,
    })?;
    parse_panel(&text, spec)
}

/// As [`load_panel`] on in-memory text; `spec.path` is ignored.
pub fn parse_panel(text: &str, spec: &IngestSpec) -> Result<Loaded> {
    let grid = read_grid(text, spec.header, spec.index_column)?;
    if grid.cells.is_empty() {
        return Err(CliError::Parse {
            row: 1,
            column: 1,
            message: "no data rows".into(),
        });
    }
    let n_records = grid.cells.len();
    let n_fields = grid.cells[0].len();
    let skip = usize::from(spec.index_column);
    // (panel, time) -> (record, field)
    let (n_panels, n_times) = match spec.orientation {
        Orientation::PanelsAsColumns => (n_fields, n_records),
        Orientation::PanelsAsRows => (n_records, n_fields),
    };
    let locate = |i: usize, t: usize| match spec.orientation {
        Orientation::PanelsAsColumns => (t, i),
        Orientation::PanelsAsRows => (i, t),
    };
    let default_labels = |n: usize| (1..=n).map(|k| k.to_string()).collect::<Vec<_>>();
    let (panel_ids, time_ids) = match spec.orientation {
        Orientation::PanelsAsColumns => (
            grid.header.clone().unwrap_or_else(|| default_labels(n_panels)),
            grid.index.clone().unwrap_or_else(|| default_labels(n_times)),
        ),
        Orientation::PanelsAsRows => (
            grid.index.clone().unwrap_or_else(|| default_labels(n_panels)),
            grid.header.clone().unwrap_or_else(|| default_labels(n_times)),
        ),
    };

    let mut rows = Vec::with_capacity(n_panels);
    let mut kept_ids = Vec::with_capacity(n_panels);
    let mut dropped = Vec::new();
    for (i, id) in panel_ids.iter().enumerate() {
        let mut row = Vec::with_capacity(n_times);
        let mut missing_at = None;
        for t in 0..n_times {
            let (r, f) = locate(i, t);
            match grid.cells[r][f] {
                Some(x) => row.push(x),
                None => {
                    missing_at = Some((r, f));
                    break;
                }
            }
        }
        match (missing_at, spec.missing) {
            (None, _) => {
                rows.push(row);
                kept_ids.push(id.clone());
            }
            (Some((r, f)), MissingPolicy::Reject) => {
                return Err(CliError::MissingValues {
                    row: grid.lines[r],
                    column: f + skip + 1,
                })
            }
            (Some(_), MissingPolicy::DropPanel) => dropped.push(id.clone()),
        }
    }
    if rows.is_empty() {
        return Err(CliError::NoPanelsLeft);
    }

    let mut time_ids = time_ids;
    for transform in &spec.transforms {
        apply_transform(*transform, &mut rows, &kept_ids, &mut time_ids)?;
    }
    let panel = PanelData::from_rows(rows)?.with_ids(kept_ids, time_ids)?;
    Ok(Loaded {
        panel,
        transforms: spec.transforms.clone(),
        dropped_panels: dropped,
    })
}

fn apply_transform(
    transform: Transform,
    rows: &mut [Vec<f64>],
    ids: &[String],
    time_ids: &mut Vec<String>,
) -> Result<()> {
    match transform {
        Transform::RescaleByFirst => {
            for (row, id) in rows.iter_mut().zip(ids) {
                let first = row[0];
                if first == 0.0 {
                    return Err(CliError::ZeroFirstValue { panel: id.clone() });
                }
                row.iter_mut().for_each(|x| *x /= first);
            }
        }
        Transform::LogDiff => {
            for (row, id) in rows.iter_mut().zip(ids.iter()) {
                if let Some((t, &value)) = row.iter().enumerate().find(|(_, x)| **x <= 0.0) {
                    return Err(CliError::NonPositiveForLog {
                        panel: id.clone(),
                        time: t + 1,
                        value,
                    });
                }
                *row = row.windows(2).map(|w| w[1].ln() - w[0].ln()).collect();
            }
            if !time_ids.is_empty() {
                time_ids.remove(0);
            }
        }
        Transform::Demean => {
            for row in rows.iter_mut() {
                let mean = row.iter().sum::<f64>() / row.len() as f64;
                row.iter_mut().for_each(|x| *x -= mean);
            }
        }
    }
    Ok(())
}

/// Writes `panel` so that [`load_panel`] with the same orientation and
/// `header = true`, `index_column = true` reproduces it exactly.
pub fn write_panel(panel: &PanelData, path: &Path, orientation: Orientation) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::Output(e.to_string()))?;
    let put = |w: &mut csv::Writer<fs::File>, record: Vec<String>| {
        w.write_record(&record).map_err(|e| CliError::Output(e.to_string()))
    };
    match orientation {
        Orientation::PanelsAsColumns => {
            let mut head = vec!["time".to_string()];
            head.extend(panel.panel_ids().iter().cloned());
            put(&mut writer, head)?;
            for (t, id) in panel.time_ids().iter().enumerate() {
                let mut record = vec![id.clone()];
                record.extend((0..panel.n_panels()).map(|i| format!("{}", panel.get(i, t))));
                put(&mut writer, record)?;
            }
        }
        Orientation::PanelsAsRows => {
            let mut head = vec!["panel".to_string()];
            head.extend(panel.time_ids().iter().cloned());
            put(&mut writer, head)?;
            for (i, id) in panel.panel_ids().iter().enumerate() {
                let mut record = vec![id.clone()];
                record.extend(panel.row(i).iter().map(|x| format!("{x}")));
                put(&mut writer, record)?;
            }
        }
    }
    writer.flush().map_err(|e| CliError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(orientation: Orientation, transforms: Vec<Transform>) -> IngestSpec {
        IngestSpec {
            path: PathBuf::new(),
            orientation,
            header: false,
            index_column: false,
            missing: MissingPolicy::Reject,
            transforms,
        }
    }

    #[test]
    fn log_diff_of_rows() {
        let s = spec(Orientation::PanelsAsRows, vec![Transform::LogDiff]);
        let loaded = parse_panel("1,2,4,8\n1,1,1,1\n", &s).unwrap();
        let ln2 = 2f64.ln();
        assert!(loaded.panel.row(0).iter().all(|x| (x - ln2).abs() < 1e-15));
        assert_eq!(loaded.panel.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(loaded.panel.time_ids(), &["2", "3", "4"]);
    }

    #[test]
    fn rescale_then_demean() {
        let s = spec(Orientation::PanelsAsRows, vec![Transform::RescaleByFirst]);
        assert_eq!(parse_panel("2,4,6\n", &s).unwrap().panel.row(0), &[1.0, 2.0, 3.0]);
        let s = spec(
            Orientation::PanelsAsRows,
            vec![Transform::RescaleByFirst, Transform::Demean],
        );
        assert_eq!(parse_panel("2,4,6\n", &s).unwrap().panel.row(0), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn columns_orientation_transposes() {
        let s = spec(Orientation::PanelsAsColumns, vec![]);
        let p = parse_panel("1\t10\n2\t20\n3\t30\n", &s).unwrap().panel;
        assert_eq!(p.n_panels(), 2);
        assert_eq!(p.row(1), &[10.0, 20.0, 30.0]);
    }

    #[test]
    fn blank_cell_is_reported() {
        let s = spec(Orientation::PanelsAsRows, vec![]);
        match parse_panel("1,2,3\n4,,6\n", &s) {
            Err(CliError::MissingValues { row, column }) => assert_eq!((row, column), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn drop_panel_policy() {
        let mut s = spec(Orientation::PanelsAsRows, vec![]);
        s.missing = MissingPolicy::DropPanel;
        s.index_column = true;
        let loaded = parse_panel("a,1,2,3\nb,4,NA,6\nc,7,8,9\n", &s).unwrap();
        assert_eq!(loaded.panel.panel_ids(), &["a", "c"]);
        assert_eq!(loaded.dropped_panels, vec!["b"]);
    }

    #[test]
    fn log_of_nonpositive_is_rejected() {
        let s = spec(Orientation::PanelsAsRows, vec![Transform::LogDiff]);
        assert!(matches!(
            parse_panel("1,0,2,3\n", &s),
            Err(CliError::NonPositiveForLog { time: 2, .. })
        ));
    }

    #[test]
    fn bad_number_names_the_cell() {
        let s = spec(Orientation::PanelsAsRows, vec![]);
        match parse_panel("1,2,3\n4,x,6\n", &s) {
            Err(CliError::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let s = spec(Orientation::PanelsAsRows, vec![]);
        assert!(matches!(parse_panel("1,2,3\n4,5\n", &s), Err(CliError::Parse { row: 2, .. })));
    }
}
