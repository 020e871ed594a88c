//! Serialization: matrices as CSV/JSON, analysis reports as JSON, vote
//! matrices and node-group sidecars as CSV, and plot-ready data emission.
//!
//! All numeric CSV fields are written with 17 significant digits so
//! re-parsing reproduces every finite double bit-exactly. All file writes
//! go through a temp-file-and-rename so readers never observe a partial
//! file.

use crate::error::{Error, Result};
use crate::pipeline::{AnalysisReport, VoteMatrix};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Formats a double with 17 significant digits (round-trip exact).
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to `path` atomically: the data lands in a temporary
/// file in the destination directory which is then renamed over the target.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Quotes a CSV field when it contains a comma, quote, or line break.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Splits one CSV line honoring double-quote escaping.
fn split_csv_line(line: &str) -> Result<Vec<String>> {
    let mut fields = Vec::new();
    let mut field = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(c) = chars.next() {
        if quoted {
            match c {
                '"' if chars.peek() == Some(&'"') => {
                    chars.next();
                    field.push('"');
                }
                '"' => quoted = false,
                other => field.push(other),
            }
        } else {
            match c {
                '"' if field.is_empty() => quoted = true,
                ',' => fields.push(std::mem::take(&mut field)),
                other => field.push(other),
            }
        }
    }
    if quoted {
        return Err(Error::data(format!("unterminated quote in CSV line: {line}")));
    }
    fields.push(field);
    Ok(fields)
}

/// Serializes a matrix as headerless row-major CSV, 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_float(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Parses a headerless numeric CSV matrix; all rows must agree in width.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    Error::data(format!("line {}: '{}' is not a number", idx + 1, f))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::data(format!(
                    "line {}: {} fields, expected {}",
                    idx + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::data("matrix CSV has no rows"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// JSON form of a matrix with optional row/column labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub labels: Option<Vec<String>>,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

/// Serializes a matrix (with optional node labels) as pretty JSON.
pub fn matrix_to_json(labels: Option<&[String]>, m: &DMatrix<f64>) -> String {
    let value = LabeledMatrix {
        labels: labels.map(|l| l.to_vec()),
        rows: m.nrows(),
        cols: m.ncols(),
        data: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&value).expect("matrix serialization");
    text.push('\n');
    text
}

/// Parses the JSON matrix form back into labels and matrix.
pub fn parse_matrix_json(text: &str) -> Result<(Option<Vec<String>>, DMatrix<f64>)> {
    let value: LabeledMatrix =
        serde_json::from_str(text).map_err(|e| Error::data(format!("matrix JSON: {e}")))?;
    if value.data.len() != value.rows || value.data.iter().any(|r| r.len() != value.cols) {
        return Err(Error::data("matrix JSON shape fields disagree with data"));
    }
    if let Some(labels) = &value.labels {
        if labels.len() != value.rows {
            return Err(Error::data("matrix JSON labels do not match row count"));
        }
    }
    let m = DMatrix::from_fn(value.rows, value.cols, |i, j| value.data[i][j]);
    Ok((value.labels, m))
}

/// Serializes an analysis report as pretty JSON with a trailing newline.
pub fn report_to_json(report: &AnalysisReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    text
}

/// Parses a report back; inverse of [`report_to_json`].
pub fn parse_report_json(text: &str) -> Result<AnalysisReport> {
    serde_json::from_str(text).map_err(|e| Error::data(format!("report JSON: {e}")))
}

/// Writes a report atomically as JSON.
pub fn write_report(path: &Path, report: &AnalysisReport) -> Result<()> {
    atomic_write(path, &report_to_json(report))
}

/// Loads a report from a JSON file.
pub fn load_report(path: &Path) -> Result<AnalysisReport> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_report_json(&text)
}

/// Serializes a vote matrix as CSV: header `voter,<ballot...>`, then one
/// row per voter with entries in {-1, 0, 1}.
pub fn vote_matrix_to_csv(v: &VoteMatrix) -> String {
    let mut out = String::from("voter");
    for b in v.ballots() {
        out.push(',');
        out.push_str(&csv_field(b));
    }
    out.push('\n');
    for (i, voter) in v.voters().iter().enumerate() {
        out.push_str(&csv_field(voter));
        for j in 0..v.ballots().len() {
            out.push(',');
            out.push_str(&v.vote(i, j).to_string());
        }
        out.push('\n');
    }
    out
}

/// Parses the vote-matrix CSV form: a `voter,...` header naming ballots,
/// then one row per voter; entries −1/0/+1 (a leading '+' is allowed).
/// Blank lines and `#` comment lines are skipped.
pub fn parse_vote_matrix_csv(text: &str) -> Result<VoteMatrix> {
    let mut lines = text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::data("vote CSV is empty"))?;
    let header_fields = split_csv_line(header)?;
    if header_fields.len() < 2 || header_fields[0] != "voter" {
        return Err(Error::data(
            "vote CSV header must be 'voter,<ballot>,...' with at least one ballot",
        ));
    }
    let ballots: Vec<String> = header_fields[1..].to_vec();
    let mut voters = Vec::new();
    let mut rows: Vec<Vec<i8>> = Vec::new();
    for (idx, line) in lines {
        let fields = split_csv_line(line)?;
        if fields.len() != ballots.len() + 1 {
            return Err(Error::data(format!(
                "line {}: {} fields, expected {}",
                idx + 1,
                fields.len(),
                ballots.len() + 1
            )));
        }
        voters.push(fields[0].clone());
        let row = fields[1..]
            .iter()
            .map(|f| match f.trim() {
                "1" | "+1" => Ok(1i8),
                "-1" => Ok(-1i8),
                "0" => Ok(0i8),
                other => Err(Error::data(format!(
                    "line {}: vote '{}' must be -1, 0, or 1",
                    idx + 1,
                    other
                ))),
            })
            .collect::<Result<Vec<i8>>>()?;
        rows.push(row);
    }
    let votes = DMatrix::from_fn(voters.len(), ballots.len(), |i, j| rows[i][j]);
    VoteMatrix::new(voters, ballots, votes)
}

/// Loads a vote matrix from a CSV file.
pub fn load_vote_matrix(path: &Path) -> Result<VoteMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_vote_matrix_csv(&text)
}

/// Parses a `label,group` sidecar CSV (optional literal header, blank and
/// `#` lines skipped). Duplicate labels are rejected.
pub fn parse_groups_csv(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if idx == 0 && line == "label,group" {
            continue;
        }
        let fields = split_csv_line(line)?;
        if fields.len() != 2 {
            return Err(Error::data(format!(
                "line {}: expected 'label,group', got {} fields",
                idx + 1,
                fields.len()
            )));
        }
        if !seen.insert(fields[0].clone()) {
            return Err(Error::data(format!(
                "line {}: duplicate label '{}'",
                idx + 1,
                fields[0]
            )));
        }
        pairs.push((fields[0].clone(), fields[1].clone()));
    }
    if pairs.is_empty() {
        return Err(Error::data("group CSV has no entries"));
    }
    Ok(pairs)
}

/// Loads the node-group sidecar CSV.
pub fn load_groups(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_groups_csv(&text)
}

/// Writes plot-ready data files for a report into `dir`:
///
/// - `embedding.csv` — `label,x,y,cluster` (y is 0 for 1-D embeddings);
/// - `dendrogram.nwk` — Newick tree (hierarchical routes only);
/// - `silhouette.csv` — `k,score` model-selection curve;
/// - `polarization.csv` — `label,score`;
/// - `kde.csv` — `x,density`, or `x,group,density` when a node-group
///   sidecar is supplied.
///
/// Files whose data the report lacks (no dendrogram for the k-means route,
/// no polarization section) are skipped with a note on standard error.
/// Returns the paths written.
pub fn emit_plot_data(
    report: &AnalysisReport,
    dir: &Path,
    groups: Option<&[(String, String)]>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let nodes = &report.embedding.nodes;

    let mut embedding = String::from("label,x,y,cluster\n");
    for (i, label) in nodes.iter().enumerate() {
        let row = &report.embedding.coords[i];
        let x = row.first().copied().unwrap_or(0.0);
        let y = row.get(1).copied().unwrap_or(0.0);
        embedding.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(label),
            format_float(x),
            format_float(y),
            report.labels.assignments[i]
        ));
    }
    let path = dir.join("embedding.csv");
    atomic_write(&path, &embedding)?;
    written.push(path);

    match report.dendrogram_newick() {
        Some(mut tree) => {
            tree.push('\n');
            let path = dir.join("dendrogram.nwk");
            atomic_write(&path, &tree)?;
            written.push(path);
        }
        None => eprintln!("note: report has no dendrogram; skipping dendrogram.nwk"),
    }

    let mut silhouette = String::from("k,score\n");
    for point in &report.silhouette_curve {
        silhouette.push_str(&format!("{},{}\n", point.k, format_float(point.score)));
    }
    let path = dir.join("silhouette.csv");
    atomic_write(&path, &silhouette)?;
    written.push(path);

    match &report.polarization {
        Some(polarization) => {
            let mut csv = String::from("label,score\n");
            for (label, score) in nodes.iter().zip(&polarization.scores) {
                csv.push_str(&format!("{},{}\n", csv_field(label), format_float(*score)));
            }
            let path = dir.join("polarization.csv");
            atomic_write(&path, &csv)?;
            written.push(path);

            let path = dir.join("kde.csv");
            atomic_write(&path, &kde_csv(nodes, &polarization.scores, groups)?)?;
            written.push(path);
        }
        None => eprintln!(
            "note: report has no polarization scores; skipping polarization.csv and kde.csv"
        ),
    }
    Ok(written)
}

/// Builds the KDE CSV: overall density, or one density block per group
/// when a `label,group` sidecar is given.
pub fn kde_csv(
    nodes: &[String],
    scores: &[f64],
    groups: Option<&[(String, String)]>,
) -> Result<String> {
    let grid = crate::embed::default_kde_grid();
    match groups {
        None => {
            let density = crate::embed::gaussian_kde(
                scores,
                crate::embed::KDE_DEFAULT_BANDWIDTH,
                &grid,
            )?;
            let mut out = String::from("x,density\n");
            for (x, d) in grid.iter().zip(&density) {
                out.push_str(&format!("{},{}\n", format_float(*x), format_float(*d)));
            }
            Ok(out)
        }
        Some(pairs) => {
            let lookup: std::collections::HashMap<&str, &str> = pairs
                .iter()
                .map(|(label, group)| (label.as_str(), group.as_str()))
                .collect();
            let mut by_group: std::collections::BTreeMap<&str, Vec<f64>> =
                std::collections::BTreeMap::new();
            for (label, &score) in nodes.iter().zip(scores) {
                let group = lookup.get(label.as_str()).copied().ok_or_else(|| {
                    Error::data(format!("node '{label}' missing from group sidecar"))
                })?;
                by_group.entry(group).or_default().push(score);
            }
            let mut out = String::from("x,group,density\n");
            for (group, members) in &by_group {
                let density = crate::embed::gaussian_kde(
                    members,
                    crate::embed::KDE_DEFAULT_BANDWIDTH,
                    &grid,
                )?;
                for (x, d) in grid.iter().zip(&density) {
                    out.push_str(&format!(
                        "{},{},{}\n",
                        format_float(*x),
                        csv_field(group),
                        format_float(*d)
                    ));
                }
            }
            Ok(out)
        }
    }
}
