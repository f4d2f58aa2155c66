use std::io::Read;
use std::path::{Path, PathBuf};

use super::TabularDataset;
use crate::{Error, Result};

/// Diabetes progression data (442 rows, 10 features, target `target`).
const DIABETES_CSV: &str = include_str!("../../data/diabetes.csv");
/// Boston housing values (506 rows, 13 features, target `MEDV`).
const BOSTON_CSV: &str = include_str!("../../data/boston.csv");

pub fn diabetes() -> Result<TabularDataset> {
    let mut data = parse_csv(DIABETES_CSV.as_bytes(), "diabetes.csv", "target", "disease progression")?;
    data.metadata.insert("source".into(), "bundled diabetes.csv".into());
    Ok(data)
}

pub fn boston() -> Result<TabularDataset> {
    let mut data = parse_csv(BOSTON_CSV.as_bytes(), "boston.csv", "MEDV", "USD 1000s")?;
    data.metadata.insert("source".into(), "bundled boston.csv".into());
    Ok(data)
}

/// Load a comma-separated file with a header row. Every column other than
/// `target_column` becomes a feature, in header order.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str, unit: &str) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_csv(file, path, target_column, unit)
}

/// [`load_csv`] over any reader; `origin` labels error messages.
pub fn parse_csv<R: Read>(
    reader: R,
    origin: impl Into<PathBuf>,
    target_column: &str,
    unit: &str,
) -> Result<TabularDataset> {
    let origin = origin.into();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.iter().all(String::is_empty) {
        return Err(Error::EmptyFile(origin));
    }
    let Some(target_idx) = headers.iter().position(|h| h == target_column) else {
        return Err(Error::MissingColumn { path: origin, column: target_column.to_string() });
    };
    let feature_names: Vec<String> =
        headers.iter().enumerate().filter(|&(j, _)| j != target_idx).map(|(_, h)| h.clone()).collect();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Dataset(format!(
                "{}: row {} has {} fields, header has {}",
                origin.display(),
                row + 1,
                record.len(),
                headers.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => {
                    return Err(Error::NonNumericCell {
                        path: origin,
                        row: row + 1,
                        column: headers[j].clone(),
                        value: cell.to_string(),
                    })
                }
            };
            if j == target_idx {
                targets.push(value);
            } else {
                features.push(value);
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::EmptyFile(origin));
    }
    if feature_names.is_empty() {
        return Err(Error::Dataset(format!("{}: no feature columns besides the target", origin.display())));
    }
    TabularDataset::new(features, targets, feature_names, unit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shapes() {
        let d = diabetes().unwrap();
        assert_eq!((d.len(), d.dim()), (442, 10));
        let tmin = d.targets().iter().copied().fold(f64::INFINITY, f64::min);
        let tmax = d.targets().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((tmin, tmax), (25.0, 346.0));
        let b = boston().unwrap();
        assert_eq!((b.len(), b.dim()), (506, 13));
    }

    #[test]
    fn single_row() {
        let d = parse_csv("a,y\n1.5,2\n".as_bytes(), "mem", "y", "u").unwrap();
        assert_eq!((d.len(), d.dim()), (1, 1));
        assert_eq!(d.targets(), &[2.0]);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(parse_csv("a,b\n1,2\n".as_bytes(), "mem", "y", "u"), Err(Error::MissingColumn { .. })));
        match parse_csv("a,y\n1,2\n3,x\n".as_bytes(), "mem", "y", "u") {
            Err(Error::NonNumericCell { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "y")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("".as_bytes(), "mem", "y", "u"), Err(Error::EmptyFile(_))));
        assert!(matches!(parse_csv("a,y\n".as_bytes(), "mem", "y", "u"), Err(Error::EmptyFile(_))));
        assert!(matches!(load_csv("/nonexistent/file.csv", "y", "u"), Err(Error::Io { .. })));
        assert!(parse_csv("a,y\n1,2,3\n".as_bytes(), "mem", "y", "u").is_err());
        assert!(parse_csv("a,y\nNaN,2\n".as_bytes(), "mem", "y", "u").is_err());
    }
}
