//! CSV datasets: a header row, comma-separated numeric columns, one of which
//! is the target.

use std::io::Write;
use std::path::Path;

use tensornet::linalg::Matrix;
use tensornet::Dataset;

use crate::error::CliError;

/// Column holding the target: a header name or a zero-based index.
pub fn target_index(headers: &[String], target: Option<&str>) -> Result<usize, CliError> {
    let Some(t) = target else {
        return Ok(headers.len() - 1);
    };
    if let Some(i) = headers.iter().position(|h| h == t) {
        return Ok(i);
    }
    match t.parse::<usize>() {
        Ok(i) if i < headers.len() => Ok(i),
        _ => Err(CliError::Config(format!("target column `{t}` not found in {headers:?}"))),
    }
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(CliError::input(path, "no columns"));
    }
    let mut rows = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| CliError::input(path, format!("row {}: `{f}` is not a number", line + 1)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((headers, rows))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => CliError::input(path, format!("{other:?}")),
        }
    } else {
        CliError::input(path, e.to_string())
    }
}

/// Loads a dataset with the target in `target` (default: last column).
pub fn load_dataset(path: &Path, target: Option<&str>) -> Result<Dataset<f64>, CliError> {
    let (headers, rows) = read_table(path)?;
    if headers.len() < 2 {
        return Err(CliError::input(path, "need at least one feature column and a target"));
    }
    let t = target_index(&headers, target)?;
    let inputs: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().enumerate().filter(|&(c, _)| c != t).map(|(_, &v)| v).collect())
        .collect();
    let targets = rows.iter().map(|r| r[t]).collect();
    if inputs.is_empty() {
        return Err(CliError::input(path, "no data rows"));
    }
    Ok(Dataset::from_rows(&inputs, targets)?)
}

/// Loads model inputs with `dims` columns. A table with one extra column is
/// treated as inputs plus target and the target column is dropped.
pub fn load_inputs(path: &Path, dims: usize, target: Option<&str>) -> Result<Matrix<f64>, CliError> {
    let (headers, rows) = read_table(path)?;
    let drop = if headers.len() == dims + 1 {
        Some(target_index(&headers, target)?)
    } else if headers.len() == dims {
        None
    } else {
        return Err(CliError::Config(format!(
            "{} has {} columns, model expects {dims} inputs",
            path.display(),
            headers.len()
        )));
    };
    let kept: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().enumerate().filter(|&(c, _)| Some(c) != drop).map(|(_, &v)| v).collect())
        .collect();
    Ok(Matrix::from_rows(&kept)?)
}

/// Writes `x1..xD,y` with full round-trip precision.
pub fn write_dataset(out: &mut impl Write, data: &Dataset<f64>) -> std::io::Result<()> {
    let header: Vec<String> = (1..=data.dim()).map(|d| format!("x{d}")).chain(["y".to_string()]).collect();
    writeln!(out, "{}", header.join(","))?;
    for n in 0..data.len() {
        let mut fields: Vec<String> = (0..data.dim()).map(|d| format!("{:?}", data.input(n, d))).collect();
        fields.push(format!("{:?}", data.targets()[n]));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
