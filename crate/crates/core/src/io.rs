//! CSV ingestion, covariate standardization and JSON/CSV emission.
//!
//! A dataset block is a directory (or explicit triple of paths) holding
//! `y.csv`, `x.csv` and optionally `z.csv`. Every file has a header row; all
//! cells are decimal numbers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DatasetBlock, HyperParams, IntegratedDataset, ModelFit};
use crate::selection::CvResult;
use crate::sim::study::BoxplotRow;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPaths {
    pub y: PathBuf,
    pub x: PathBuf,
    pub z: Option<PathBuf>,
}

impl BlockPaths {
    /// `dir/y.csv`, `dir/x.csv`, and `dir/z.csv` if it exists.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let z = dir.join("z.csv");
        Self {
            y: dir.join("y.csv"),
            x: dir.join("x.csv"),
            z: z.exists().then_some(z),
        }
    }
}

/// A numeric CSV file: header plus an `n × columns` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub values: DMatrix<f64>,
}

impl Table {
    /// Keep the named columns, in the given order.
    pub fn columns(&self, names: &[String]) -> Result<Table> {
        let idx = names
            .iter()
            .map(|name| {
                self.header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| Error::InvalidArgument(format!("no column named {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            header: names.to_vec(),
            values: self.values.select_columns(&idx),
        })
    }
}

fn csv_error(path: &Path, source: csv::Error) -> Error {
    Error::Csv { path: path.to_path_buf(), source }
}

/// Parse one numeric CSV file. Row numbers in errors are 1-based data rows.
pub fn read_table(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let width = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != width {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row: i + 1,
                found: record.len(),
                expected: width,
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumeric {
                path: path.to_path_buf(),
                row: i + 1,
                column: j + 1,
                value: cell.to_string(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(Table {
        header,
        values: DMatrix::from_row_slice(rows, width, &data),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockNames {
    pub y: Vec<String>,
    pub x: Vec<String>,
    pub z: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub data: IntegratedDataset,
    pub names: Vec<BlockNames>,
}

/// Read and validate every block; x.csv headers must agree exactly across
/// blocks.
pub fn load_dataset(paths: &[BlockPaths]) -> Result<LoadedDataset> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no dataset blocks given".into()));
    }
    let mut blocks = Vec::with_capacity(paths.len());
    let mut names: Vec<BlockNames> = Vec::with_capacity(paths.len());
    for (m, bp) in paths.iter().enumerate() {
        let y = read_table(&bp.y)?;
        let x = read_table(&bp.x)?;
        let z = match &bp.z {
            Some(p) => Some(read_table(p)?),
            None => None,
        };
        let n = y.values.nrows();
        let mut counts = vec![format!("y.csv {n}"), format!("x.csv {}", x.values.nrows())];
        if let Some(z) = &z {
            counts.push(format!("z.csv {}", z.values.nrows()));
        }
        if x.values.nrows() != n || z.as_ref().is_some_and(|z| z.values.nrows() != n) {
            return Err(Error::RowCountMismatch { block: m, detail: counts.join(", ") });
        }
        if let Some(first) = names.first() {
            if first.x != x.header {
                return Err(Error::HeaderMismatch {
                    block: m,
                    expected: first.x.clone(),
                    found: x.header,
                });
            }
        }
        let (z_header, z_values) = match z {
            Some(z) => (z.header, z.values),
            None => (Vec::new(), DMatrix::zeros(n, 0)),
        };
        blocks.push(DatasetBlock::new(y.values, x.values, z_values)?);
        names.push(BlockNames { y: y.header, x: x.header, z: z_header });
    }
    Ok(LoadedDataset {
        data: IntegratedDataset::new(blocks)?,
        names,
    })
}

/// Partition per-dataset covariate tables into shared columns (present in
/// every table, in the first table's order) and dataset-specific columns.
/// Returns `(X^m, Z^m)` per table.
pub fn split_by_header(tables: &[Table]) -> Result<Vec<(Table, Table)>> {
    let first = tables.first().ok_or_else(|| Error::InvalidArgument("no tables to split".into()))?;
    let common: Vec<String> = first
        .header
        .iter()
        .filter(|h| tables.iter().all(|t| t.header.contains(h)))
        .cloned()
        .collect();
    tables
        .iter()
        .map(|t| {
            let specific: Vec<String> = t.header.iter().filter(|h| !common.contains(h)).cloned().collect();
            Ok((t.columns(&common)?, t.columns(&specific)?))
        })
        .collect()
}

/// Per-dataset column means and sample standard deviations used by
/// [`standardize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub x_mean: Vec<Vec<f64>>,
    pub x_sd: Vec<Vec<f64>>,
    pub z_mean: Vec<Vec<f64>>,
    pub z_sd: Vec<Vec<f64>>,
}

fn column_stats(a: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = a.nrows() as f64;
    a.column_iter()
        .map(|col| {
            let mean = col.mean();
            let ss: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            (mean, (ss / (n - 1.0)).sqrt())
        })
        .unzip()
}

fn scaled(a: &DMatrix<f64>, mean: &[f64], sd: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] - mean[j]) / sd[j])
}

fn is_degenerate(mean: f64, sd: f64) -> bool {
    !(sd > 1e-12 * (1.0 + mean.abs()))
}

fn standardize_labelled(data: &IntegratedDataset, names: Option<&[BlockNames]>) -> Result<(IntegratedDataset, Scaling)> {
    if data.n().iter().any(|&n| n < 2) {
        return Err(Error::InvalidArgument("standardizing needs at least 2 rows per dataset".into()));
    }
    let label = |m: usize, part: &str, j: usize| -> String {
        let name = names.and_then(|ns| {
            let bn = ns.get(m)?;
            if part == "x" { bn.x.get(j) } else { bn.z.get(j) }.cloned()
        });
        match name {
            Some(name) => format!("dataset {} {part}.csv column {name:?}", m + 1),
            None => format!("dataset {} {part} column {}", m + 1, j + 1),
        }
    };
    let mut scaling = Scaling { x_mean: vec![], x_sd: vec![], z_mean: vec![], z_sd: vec![] };
    let mut degenerate = Vec::new();
    let mut blocks = Vec::with_capacity(data.m());
    for (m, blk) in data.blocks().iter().enumerate() {
        let (xm, xs) = column_stats(blk.x());
        let (zm, zs) = column_stats(blk.z());
        for (j, (&mu, &sd)) in xm.iter().zip(&xs).enumerate() {
            if is_degenerate(mu, sd) {
                degenerate.push(label(m, "x", j));
            }
        }
        for (j, (&mu, &sd)) in zm.iter().zip(&zs).enumerate() {
            if is_degenerate(mu, sd) {
                degenerate.push(label(m, "z", j));
            }
        }
        if degenerate.is_empty() {
            blocks.push(DatasetBlock::new(blk.y().clone(), scaled(blk.x(), &xm, &xs), scaled(blk.z(), &zm, &zs))?);
        }
        scaling.x_mean.push(xm);
        scaling.x_sd.push(xs);
        scaling.z_mean.push(zm);
        scaling.z_sd.push(zs);
    }
    if !degenerate.is_empty() {
        return Err(Error::ZeroVariance(degenerate));
    }
    Ok((IntegratedDataset::new(blocks)?, scaling))
}

/// Center every X and Z column and scale it to unit sample standard deviation
/// (denominator `n − 1`), separately per dataset. Responses are untouched.
pub fn standardize(data: &IntegratedDataset) -> Result<(IntegratedDataset, Scaling)> {
    standardize_labelled(data, None)
}

impl LoadedDataset {
    /// [`standardize`] with column names in error messages.
    pub fn standardized(&self) -> Result<(IntegratedDataset, Scaling)> {
        standardize_labelled(&self.data, Some(&self.names))
    }
}

impl Scaling {
    /// Express a fit on standardized covariates in original units, so that
    /// predictions from raw covariates are unchanged.
    pub fn to_original(&self, fit: &ModelFit) -> Result<ModelFit> {
        if fit.m() != self.x_sd.len() {
            return Err(Error::Dimension("fit and scaling record have different dataset counts".into()));
        }
        let mut alpha = Vec::with_capacity(fit.m());
        let mut b = Vec::with_capacity(fit.m());
        let mut c = Vec::with_capacity(fit.m());
        for m in 0..fit.m() {
            let (bs, cs) = (&fit.b()[m], &fit.c()[m]);
            if bs.nrows() != self.x_sd[m].len() || cs.nrows() != self.z_sd[m].len() {
                return Err(Error::Dimension(format!("dataset {m}: coefficient rows do not match scaling record")));
            }
            let bo = DMatrix::from_fn(bs.nrows(), bs.ncols(), |j, k| bs[(j, k)] / self.x_sd[m][j]);
            let co = DMatrix::from_fn(cs.nrows(), cs.ncols(), |j, k| cs[(j, k)] / self.z_sd[m][j]);
            let xm = DVector::from_column_slice(&self.x_mean[m]);
            let zm = DVector::from_column_slice(&self.z_mean[m]);
            let shift = bo.tr_mul(&xm) + co.tr_mul(&zm);
            alpha.push(&fit.alpha()[m] - shift);
            b.push(bo);
            c.push(co);
        }
        ModelFit::new(alpha, b, c)
    }

    /// Center and scale `data` with this record's statistics.
    pub fn apply(&self, data: &IntegratedDataset) -> Result<IntegratedDataset> {
        if data.m() != self.x_sd.len() {
            return Err(Error::Dimension("data and scaling record have different dataset counts".into()));
        }
        let blocks = data
            .blocks()
            .iter()
            .enumerate()
            .map(|(m, blk)| {
                if blk.p() != self.x_sd[m].len() || blk.r() != self.z_sd[m].len() {
                    return Err(Error::Dimension(format!("dataset {m}: columns do not match scaling record")));
                }
                DatasetBlock::new(
                    blk.y().clone(),
                    scaled(blk.x(), &self.x_mean[m], &self.x_sd[m]),
                    scaled(blk.z(), &self.z_mean[m], &self.z_sd[m]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        IntegratedDataset::new(blocks)
    }

    /// Inverse of [`Scaling::to_original`].
    pub fn to_standardized(&self, fit: &ModelFit) -> Result<ModelFit> {
        if fit.m() != self.x_sd.len() {
            return Err(Error::Dimension("fit and scaling record have different dataset counts".into()));
        }
        let mut alpha = Vec::with_capacity(fit.m());
        let mut b = Vec::with_capacity(fit.m());
        let mut c = Vec::with_capacity(fit.m());
        for m in 0..fit.m() {
            let (bo, co) = (&fit.b()[m], &fit.c()[m]);
            if bo.nrows() != self.x_sd[m].len() || co.nrows() != self.z_sd[m].len() {
                return Err(Error::Dimension(format!("dataset {m}: coefficient rows do not match scaling record")));
            }
            let xm = DVector::from_column_slice(&self.x_mean[m]);
            let zm = DVector::from_column_slice(&self.z_mean[m]);
            alpha.push(&fit.alpha()[m] + bo.tr_mul(&xm) + co.tr_mul(&zm));
            b.push(DMatrix::from_fn(bo.nrows(), bo.ncols(), |j, k| bo[(j, k)] * self.x_sd[m][j]));
            c.push(DMatrix::from_fn(co.nrows(), co.ncols(), |j, k| co[(j, k)] * self.z_sd[m][j]));
        }
        ModelFit::new(alpha, b, c)
    }
}

/// Row-major dense matrix with an explicit shape, so empty matrices keep
/// their dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(a: &DMatrix<f64>) -> Self {
        Self {
            rows: a.nrows(),
            cols: a.ncols(),
            data: a.transpose().as_slice().to_vec(),
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Dimension(format!(
                "matrix of shape {}x{} has {} entries",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoefficientScale {
    #[default]
    Original,
    Standardized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt_residual: f64,
    pub consensus_gap: f64,
}

/// Serialized form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub hyper: HyperParams,
    pub scale: CoefficientScale,
    pub alpha: Vec<Vec<f64>>,
    pub b: Vec<MatrixJson>,
    pub c: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<BlockNames>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FitDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
}

impl SavedModel {
    pub fn new(fit: &ModelFit, hyper: HyperParams) -> Self {
        Self {
            hyper,
            scale: CoefficientScale::Original,
            alpha: fit.alpha().iter().map(|a| a.as_slice().to_vec()).collect(),
            b: fit.b().iter().map(MatrixJson::from).collect(),
            c: fit.c().iter().map(MatrixJson::from).collect(),
            names: None,
            diagnostics: None,
            scaling: None,
        }
    }

    pub fn to_fit(&self) -> Result<ModelFit> {
        ModelFit::new(
            self.alpha.iter().map(|a| DVector::from_column_slice(a)).collect(),
            self.b.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?,
            self.c.iter().map(MatrixJson::to_matrix).collect::<Result<_>>()?,
        )
    }
}

/// Write via a temporary file in the same directory, then rename.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_err)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_bytes<T: Serialize>(rows: &[T], header_if_empty: &[&str]) -> Result<Vec<u8>> {
    let sink = PathBuf::from("<memory>");
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header_if_empty).map_err(|e| csv_error(&sink, e))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(&sink, e))?;
    }
    w.into_inner()
        .map_err(|e| Error::Io { path: sink, source: e.into_error() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvMatrixRow {
    pub lambda: f64,
    pub gamma: f64,
    pub cv_score: f64,
}

/// The CV score grid in long format, λ-major, both axes descending.
pub fn cv_matrix_csv(result: &CvResult) -> Result<Vec<u8>> {
    let mut rows = Vec::with_capacity(result.lambdas.len() * result.gammas.len());
    for (i, &lambda) in result.lambdas.iter().enumerate() {
        for (j, &gamma) in result.gammas.iter().enumerate() {
            rows.push(CvMatrixRow { lambda, gamma, cv_score: result.cv_matrix[(i, j)] });
        }
    }
    csv_bytes(&rows, &["lambda", "gamma", "cv_score"])
}

/// Columns: scenario, method, dataset, response, replicate, mse, fpr, fnr.
pub fn boxplot_csv(rows: &[BoxplotRow]) -> Result<Vec<u8>> {
    csv_bytes(rows, &["scenario", "method", "dataset", "response", "replicate", "mse", "fpr", "fnr"])
}

/// Coefficients in long format for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub dataset: usize,
    pub kind: String,
    pub covariate: String,
    pub response: String,
    pub value: f64,
    pub nonzero: bool,
}

/// Long-format coefficient table: intercepts, shared (`b`) and
/// dataset-specific (`c`) coefficients. Names default to 1-based indices.
pub fn coefficient_rows(fit: &ModelFit, names: Option<&[BlockNames]>) -> Vec<CoefficientRow> {
    let pick = |list: Option<&Vec<String>>, i: usize| -> String {
        list.and_then(|l| l.get(i).cloned()).unwrap_or_else(|| (i + 1).to_string())
    };
    let mut rows = Vec::new();
    for m in 0..fit.m() {
        let bn = names.and_then(|ns| ns.get(m));
        let mut push = |kind: &str, covariate: String, k: usize, value: f64| {
            rows.push(CoefficientRow {
                dataset: m + 1,
                kind: kind.to_string(),
                covariate,
                response: pick(bn.map(|b| &b.y), k),
                value,
                nonzero: value != 0.0,
            });
        };
        for (k, &a) in fit.alpha()[m].iter().enumerate() {
            push("intercept", String::new(), k, a);
        }
        let b = &fit.b()[m];
        for j in 0..b.nrows() {
            for k in 0..b.ncols() {
                push("b", pick(bn.map(|b| &b.x), j), k, b[(j, k)]);
            }
        }
        let c = &fit.c()[m];
        for j in 0..c.nrows() {
            for k in 0..c.ncols() {
                push("c", pick(bn.map(|b| &b.z), j), k, c[(j, k)]);
            }
        }
    }
    rows
}

pub fn coefficient_csv(rows: &[CoefficientRow]) -> Result<Vec<u8>> {
    csv_bytes(rows, &["dataset", "kind", "covariate", "response", "value", "nonzero"])
}
