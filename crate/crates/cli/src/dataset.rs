//! CSV ingestion: a header row, one response column, numeric covariates or
//! a separate headerless distance matrix.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nncouple::{LabelVector, PointCloud};

#[derive(Debug, Clone, Default)]
pub struct DatasetFile {
    pub path: PathBuf,
    pub response: String,
    /// Covariate columns; all non-response columns when empty.
    pub covariates: Vec<String>,
    /// Treat the covariate columns as samples of one curve on a uniform grid.
    pub grid: bool,
    /// Headerless `n x n` CSV of pairwise distances replacing the covariates.
    pub distance_matrix: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub labels: LabelVector,
    pub covariate_names: Vec<String>,
    /// Covariate values, one vector per column.
    pub columns: Vec<Vec<f64>>,
    pub distances: Option<Vec<f64>>,
    pub grid: bool,
    pub warnings: Vec<String>,
}

fn parse_number(raw: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| anyhow!("row {row}, column '{column}': cannot parse '{raw}' as a number"))?;
    if !v.is_finite() {
        bail!("row {row}, column '{column}': value '{raw}' is not finite");
    }
    Ok(v)
}

pub fn parse_dataset(file: &DatasetFile) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(&file.path)
        .with_context(|| format!("cannot open {}", file.path.display()))?;
    let headers: Vec<String> = reader
        .headers()
        .with_context(|| format!("cannot read header of {}", file.path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("missing column '{name}' in {}", file.path.display()))
    };
    let response_at = find(&file.response)?;
    let covariate_names: Vec<String> = if file.distance_matrix.is_some() {
        Vec::new()
    } else if file.covariates.is_empty() {
        headers.iter().filter(|h| **h != file.response).cloned().collect()
    } else {
        file.covariates.clone()
    };
    let covariate_at = covariate_names.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;
    if file.distance_matrix.is_none() && covariate_at.is_empty() {
        bail!("no covariate columns");
    }

    let mut raw_labels = Vec::new();
    let mut columns = vec![Vec::new(); covariate_at.len()];
    for (r, record) in reader.records().enumerate() {
        // data rows are numbered from 1, the header being row 0
        let row = r + 1;
        let record = record.with_context(|| format!("malformed CSV at row {row}"))?;
        if record.len() != headers.len() {
            bail!("row {row}: expected {} fields, found {}", headers.len(), record.len());
        }
        raw_labels.push(record[response_at].to_string());
        for (c, &at) in covariate_at.iter().enumerate() {
            columns[c].push(parse_number(&record[at], row, &headers[at])?);
        }
    }
    let n = raw_labels.len();
    if n < 2 {
        bail!("need at least 2 data rows, found {n}");
    }
    let labels = LabelVector::from_raw(&raw_labels);
    let mut warnings = Vec::new();
    if labels.k() < 2 {
        warnings.push(format!(
            "response '{}' has {} distinct value(s); the coefficient is undefined",
            file.response,
            labels.k()
        ));
    }
    let distances = match &file.distance_matrix {
        Some(path) => Some(read_distance_matrix(path, n)?),
        None => None,
    };
    Ok(Dataset {
        labels,
        covariate_names,
        columns,
        distances,
        grid: file.grid,
        warnings,
    })
}

fn read_distance_matrix(path: &Path, n: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("malformed distance matrix at row {}", r + 1))?;
        if record.len() != n {
            bail!("distance matrix row {} has {} entries, expected {n}", r + 1, record.len());
        }
        for (c, cell) in record.iter().enumerate() {
            values.push(parse_number(cell, r + 1, &format!("{}", c + 1))?);
        }
        rows += 1;
    }
    if rows != n {
        bail!("distance matrix has {rows} rows but the data file has {n}");
    }
    PointCloud::precomputed(values.clone(), n)?;
    Ok(values)
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.covariate_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| anyhow!("'{name}' is not a covariate column"))
    }

    /// The covariates selected by `names` (all when empty) as one cloud.
    pub fn cloud(&self, names: &[String], standardize: bool) -> Result<PointCloud<f64>> {
        if let Some(d) = &self.distances {
            if !names.is_empty() {
                bail!("column selection is not available with a distance matrix");
            }
            return Ok(PointCloud::precomputed(d.clone(), self.n())?);
        }
        let picked: Vec<usize> = if names.is_empty() {
            (0..self.columns.len()).collect()
        } else {
            names.iter().map(|c| self.column_index(c)).collect::<Result<_>>()?
        };
        let n = self.n();
        let dim = picked.len();
        let mut values = Vec::with_capacity(n * dim);
        for i in 0..n {
            values.extend(picked.iter().map(|&c| self.columns[c][i]));
        }
        if self.grid {
            return Ok(PointCloud::function_grid(values, dim)?);
        }
        let cloud = PointCloud::euclidean(values, dim)?;
        Ok(if standardize { cloud.standardized() } else { cloud })
    }

    /// Every covariate column as its own one-dimensional cloud.
    pub fn column_clouds(&self, standardize: bool) -> Result<Vec<PointCloud<f64>>> {
        if self.distances.is_some() || self.grid {
            bail!("per-column covariates need plain numeric columns (no grid, no distance matrix)");
        }
        self.columns
            .iter()
            .map(|c| {
                let cloud = PointCloud::from_scalars(c.clone())?;
                Ok(if standardize { cloud.standardized() } else { cloud })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn file_for(path: &Path) -> DatasetFile {
        DatasetFile {
            path: path.to_path_buf(),
            response: "y".into(),
            ..Default::default()
        }
    }

    #[test]
    fn three_rows() {
        let f = write("y,x1,x2\na,0,1\nb,1,0\na,2,2\n");
        let d = parse_dataset(&file_for(f.path())).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.labels.k(), 2);
        assert_eq!(d.covariate_names, vec!["x1", "x2"]);
        assert_eq!(d.cloud(&[], false).unwrap().n(), 3);
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let f = write("y,x1,x2\na,0,1\nb,oops,0\n");
        let err = parse_dataset(&file_for(f.path())).unwrap_err().to_string();
        assert!(err.contains("row 2") && err.contains("x1"), "{err}");
    }

    #[test]
    fn missing_column() {
        let f = write("y,x1\na,0\nb,1\n");
        let mut s = file_for(f.path());
        s.covariates = vec!["x9".into()];
        assert!(parse_dataset(&s).unwrap_err().to_string().contains("x9"));
        s.response = "z".into();
        assert!(parse_dataset(&s).is_err());
    }

    #[test]
    fn asymmetric_distance_matrix() {
        let f = write("y\na\nb\n");
        let m = write("0,1\n2,0\n");
        let mut s = file_for(f.path());
        s.distance_matrix = Some(m.path().to_path_buf());
        let err = format!("{:#}", parse_dataset(&s).unwrap_err());
        assert!(err.contains("distance matrix not symmetric"), "{err}");
    }

    #[test]
    fn single_level_warns() {
        let f = write("y,x\na,0\na,1\n");
        let d = parse_dataset(&file_for(f.path())).unwrap();
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn too_few_rows() {
        let f = write("y,x\na,0\n");
        assert!(parse_dataset(&file_for(f.path())).is_err());
    }
}
