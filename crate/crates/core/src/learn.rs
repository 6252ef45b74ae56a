//! Ridge regression on explicit features, exact kernel ridge, data loading,
//! standardization and a synthetic regression generator.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::{nystrom_build, DenseGaussianTransform};
use crate::error::{check_dim, Error, Result};
use crate::fastfood::FastfoodTransform;
use crate::feature_map::FeatureMap;
use crate::kernels::{rbf_kernel, KernelSpec};
use crate::sampling::SeedSpec;

/// Ridge penalty used when none is given (applies to standardized data).
pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// Fraction of rows held out for testing.
pub const TEST_FRACTION: f64 = 0.2;

/// Number of kernel centers in [`synth_gp_data`].
pub const SYNTH_CENTERS: usize = 50;

/// Rows of inputs with one real target each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        check_dim(x.nrows(), y.len())?;
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows.iter()),
            y: DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
        }
    }

    /// Seeded shuffle into `(train, test)` with `round(m · test_fraction)` test rows.
    pub fn split(&self, test_fraction: f64, seed: SeedSpec) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::invalid("test fraction must lie in [0, 1)"));
        }
        let m = self.len();
        let n_test = (m as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == m {
            return Err(Error::invalid(format!("cannot split {m} rows")));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut seed.rng());
        let (test, train) = order.split_at(n_test);
        Ok((self.select(train), self.select(test)))
    }
}

/// Column means and population standard deviations of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    // Constant columns keep std 1 and map to zeros.
    if std > 1e-12 * mean.abs().max(1.0) {
        (mean, std)
    } else {
        (mean, 1.0)
    }
}

impl Standardizer {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("cannot standardize an empty dataset"));
        }
        let (feature_means, feature_stds) = (0..data.dim())
            .map(|j| mean_std(data.x.column(j).iter().copied()))
            .unzip();
        let (target_mean, target_std) = mean_std(data.y.iter().copied());
        Ok(Self {
            feature_means,
            feature_stds,
            target_mean,
            target_std,
        })
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        check_dim(self.feature_means.len(), data.dim())?;
        let x = DMatrix::from_fn(data.len(), data.dim(), |i, j| {
            (data.x[(i, j)] - self.feature_means[j]) / self.feature_stds[j]
        });
        let y = data.y.map(|v| (v - self.target_mean) / self.target_std);
        Ok(Dataset { x, y })
    }

    /// Maps standardized targets back to original units.
    pub fn inverse_target(&self, y: &DVector<f64>) -> DVector<f64> {
        y.map(|v| v * self.target_std + self.target_mean)
    }
}

/// Which column of a table holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for TargetColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("empty target column"));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) if s == "last" => TargetColumn::Last,
            Err(_) => TargetColumn::Name(s.to_string()),
        })
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Numeric rows parsed from comma- or whitespace-delimited text. Blank lines
/// and lines starting with `#` are skipped; a first row with any non-numeric
/// cell is taken as a header. Reported row numbers are 1-based file lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: DMatrix<f64>,
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut header = None;
    let mut values = Vec::new();
    let mut width = None;
    let mut nrows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line);
        let row = idx + 1;
        if width.is_none() && header.is_none() && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(fields.iter().map(|f| f.to_string()).collect::<Vec<_>>());
            width = Some(fields.len());
            continue;
        }
        let w = *width.get_or_insert(fields.len());
        if fields.len() != w {
            return Err(Error::Parse {
                row,
                column: fields.len().min(w) + 1,
                message: format!("expected {w} fields, found {}", fields.len()),
            });
        }
        for (col, f) in fields.iter().enumerate() {
            let v = f.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: col + 1,
                message: format!("not a number: {f:?}"),
            })?;
            values.push(v);
        }
        nrows += 1;
    }
    let width = width.ok_or_else(|| Error::Format("table is empty".into()))?;
    Ok(Table {
        header,
        rows: DMatrix::from_row_slice(nrows, width, &values),
    })
}

impl Table {
    pub fn read(path: &Path) -> Result<Table> {
        parse_table(&std::fs::read_to_string(path)?)
    }

    /// Splits off the target column.
    pub fn into_dataset(self, target: &TargetColumn) -> Result<Dataset> {
        let width = self.rows.ncols();
        let col = match target {
            TargetColumn::Last => width - 1,
            TargetColumn::Index(i) => *i,
            TargetColumn::Name(name) => self
                .header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::Parse {
                    row: 1,
                    column: 0,
                    message: format!("no column named {name:?}"),
                })?,
        };
        if col >= width {
            return Err(Error::Parse {
                row: 1,
                column: col + 1,
                message: format!("target column {col} beyond {width} columns"),
            });
        }
        if width < 2 {
            return Err(Error::Format("need at least one feature column".into()));
        }
        let keep: Vec<usize> = (0..width).filter(|&j| j != col).collect();
        let x = self.rows.select_columns(keep.iter());
        let y = self.rows.column(col).into_owned();
        Dataset::new(x, y)
    }
}

/// Loads a delimited file and splits off the target column.
pub fn load_table(path: &Path, target: &TargetColumn) -> Result<Dataset> {
    Table::read(path)?.into_dataset(target)
}

/// Writes rows as comma-separated shortest round-trip decimals.
pub fn write_table<W: Write + ?Sized>(out: &mut W, header: Option<&[String]>, rows: &DMatrix<f64>) -> Result<()> {
    if let Some(h) = header {
        writeln!(out, "{}", h.join(","))?;
    }
    let mut line = String::new();
    for i in 0..rows.nrows() {
        line.clear();
        for j in 0..rows.ncols() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{:?}", rows[(i, j)]));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn cholesky_solve(a: DMatrix<f64>, b: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let chol = Cholesky::new(a).ok_or_else(|| {
        Error::numerical(format!(
            "normal equations are not positive definite at lambda={lambda}; try a larger lambda"
        ))
    })?;
    Ok(chol.solve(b))
}

/// Linear weights on explicit features.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub w: DVector<f64>,
    pub lambda: f64,
}

/// Solves `(ΦᵀΦ + λI) w = Φᵀ y`. When there are more features than rows the
/// equivalent system `(ΦΦᵀ + λI) α = y`, `w = Φᵀ α` is solved instead.
pub fn ridge_fit(phi: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RidgeModel> {
    check_dim(phi.nrows(), y.len())?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let (m, p) = phi.shape();
    let w = if p <= m {
        let mut a = phi.tr_mul(phi);
        for i in 0..p {
            a[(i, i)] += lambda;
        }
        cholesky_solve(a, &phi.tr_mul(y), lambda)?
    } else {
        let mut a = phi * phi.transpose();
        for i in 0..m {
            a[(i, i)] += lambda;
        }
        phi.tr_mul(&cholesky_solve(a, y, lambda)?)
    };
    Ok(RidgeModel { w, lambda })
}

impl RidgeModel {
    pub fn predict(&self, phi: &DMatrix<f64>) -> Result<DVector<f64>> {
        check_dim(self.w.len(), phi.ncols())?;
        Ok(phi * &self.w)
    }

    pub fn predict_one(&self, phi: &[f64]) -> Result<f64> {
        check_dim(self.w.len(), phi.len())?;
        Ok(self.w.iter().zip(phi).map(|(a, b)| a * b).sum())
    }
}

/// Gram matrix `K[i, j] = k(a_i, b_j)`.
pub fn kernel_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, spec: &KernelSpec) -> Result<DMatrix<f64>> {
    check_dim(a.ncols(), b.ncols())?;
    let rows_a: Vec<Vec<f64>> = (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect();
    let rows_b: Vec<Vec<f64>> = (0..b.nrows()).map(|i| b.row(i).iter().copied().collect()).collect();
    let mut k = DMatrix::zeros(a.nrows(), b.nrows());
    for (i, x) in rows_a.iter().enumerate() {
        for (j, xp) in rows_b.iter().enumerate() {
            k[(i, j)] = spec.evaluate(x, xp)?;
        }
    }
    Ok(k)
}

/// Kernel ridge regression solved in the dual.
#[derive(Debug, Clone)]
pub struct ExactKernelRidge {
    train_x: DMatrix<f64>,
    alpha: DVector<f64>,
    spec: KernelSpec,
}

impl ExactKernelRidge {
    pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, spec: KernelSpec, lambda: f64) -> Result<Self> {
        check_dim(x.nrows(), y.len())?;
        let mut k = kernel_matrix(x, x, &spec)?;
        for i in 0..k.nrows() {
            k[(i, i)] += lambda;
        }
        let alpha = cholesky_solve(k, y, lambda)?;
        Ok(Self {
            train_x: x.clone(),
            alpha,
            spec,
        })
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(kernel_matrix(x, &self.train_x, &self.spec)? * &self.alpha)
    }
}

/// Root mean squared error.
pub fn rmse(preds: &[f64], y: &[f64]) -> Result<f64> {
    check_dim(y.len(), preds.len())?;
    if y.is_empty() {
        return Err(Error::invalid("rmse of an empty set"));
    }
    let sse: f64 = preds.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sse / y.len() as f64).sqrt())
}

/// `m` points uniform on `[0,1]^d` with targets `Σ_j α_j k_RBF(c_j, x) + ε`,
/// [`SYNTH_CENTERS`] uniform centers, `α_j ~ N(0,1)`, `ε ~ N(0, noise²)`.
pub fn synth_gp_data(m: usize, d: usize, sigma: f64, noise: f64, seed: u64) -> Result<Dataset> {
    synth_gp_data_with_centers(m, d, sigma, noise, SYNTH_CENTERS, seed)
}

pub fn synth_gp_data_with_centers(
    m: usize,
    d: usize,
    sigma: f64,
    noise: f64,
    centers: usize,
    seed: u64,
) -> Result<Dataset> {
    if m == 0 || d == 0 || centers == 0 {
        return Err(Error::invalid("synthetic data needs m, d and centers >= 1"));
    }
    if !(sigma > 0.0) || !(noise >= 0.0) {
        return Err(Error::invalid("need sigma > 0 and noise >= 0"));
    }
    let mut rng = SeedSpec::new(seed, 0).child(1).rng();
    let c = DMatrix::from_fn(centers, d, |_, _| rng.gen::<f64>());
    let alpha: Vec<f64> = (0..centers).map(|_| rng.sample(StandardNormal)).collect();
    let mut rng = SeedSpec::new(seed, 0).child(2).rng();
    let x = DMatrix::from_fn(m, d, |_, _| rng.gen::<f64>());
    let mut rng = SeedSpec::new(seed, 0).child(3).rng();
    let rows_c: Vec<Vec<f64>> = (0..centers).map(|j| c.row(j).iter().copied().collect()).collect();
    let y = DVector::from_iterator(
        m,
        (0..m).map(|i| {
            let xi: Vec<f64> = x.row(i).iter().copied().collect();
            let f: f64 = rows_c
                .iter()
                .zip(&alpha)
                .map(|(cj, a)| a * rbf_kernel(cj, &xi, sigma))
                .sum();
            let eps: f64 = rng.sample(StandardNormal);
            f + noise * eps
        }),
    );
    Dataset::new(x, y)
}

/// Regression method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Fastfood,
    Rks,
    RksHashed,
    Nystrom,
    Exact,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Fastfood,
        Method::Rks,
        Method::RksHashed,
        Method::Nystrom,
        Method::Exact,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Fastfood => "fastfood",
            Method::Rks => "rks",
            Method::RksHashed => "rks-hashed",
            Method::Nystrom => "nystrom",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Builds the explicit feature map for `method` (not `Exact`). Nyström
/// samples `min(n, rows)` landmarks from `train_x`.
pub fn build_feature_map(
    method: Method,
    spec: &KernelSpec,
    n: usize,
    train_x: &DMatrix<f64>,
    seed: u64,
) -> Result<Box<dyn FeatureMap>> {
    let d = train_x.ncols();
    let sigma = || {
        spec.sigma()
            .filter(|_| matches!(spec, KernelSpec::Rbf { .. }))
            .ok_or_else(|| Error::invalid("random kitchen sinks need an RBF kernel"))
    };
    Ok(match method {
        Method::Fastfood => Box::new(FastfoodTransform::build(d, n, spec.clone(), seed)?),
        Method::Rks => Box::new(DenseGaussianTransform::build(d, n, sigma()?, seed, false)?),
        Method::RksHashed => Box::new(DenseGaussianTransform::build(d, n, sigma()?, seed, true)?),
        Method::Nystrom => Box::new(nystrom_build(
            train_x,
            n.min(train_x.nrows()),
            spec.clone(),
            SeedSpec::new(seed, 0).child(0x4E),
        )?),
        Method::Exact => return Err(Error::invalid("the exact method has no explicit features")),
    })
}

/// Outcome of one train/test regression run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub method: Method,
    pub train_rows: usize,
    pub test_rows: usize,
    pub features: usize,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub seconds: f64,
}

/// Seeded 80/20 split, standardization with training statistics, fit and
/// RMSE in original target units.
pub fn evaluate_regression(
    data: &Dataset,
    method: Method,
    spec: &KernelSpec,
    n: usize,
    lambda: f64,
    seed: u64,
) -> Result<RegressionReport> {
    let start = Instant::now();
    let (train, test) = data.split(TEST_FRACTION, SeedSpec::new(seed, 0).child(0x5B))?;
    let scaler = Standardizer::fit(&train)?;
    let (train_s, test_s) = (scaler.transform(&train)?, scaler.transform(&test)?);
    let (train_pred, test_pred, features) = match method {
        Method::Exact => {
            let model = ExactKernelRidge::fit(&train_s.x, &train_s.y, spec.clone(), lambda)?;
            (model.predict(&train_s.x)?, model.predict(&test_s.x)?, train.len())
        }
        _ => {
            let map = build_feature_map(method, spec, n, &train_s.x, seed)?;
            let phi_train = map.map_rows(&train_s.x)?;
            let model = ridge_fit(&phi_train, &train_s.y, lambda)?;
            let phi_test = map.map_rows(&test_s.x)?;
            (model.predict(&phi_train)?, model.predict(&phi_test)?, map.output_dim())
        }
    };
    let train_rmse = rmse(scaler.inverse_target(&train_pred).as_slice(), train.y.as_slice())?;
    let test_rmse = rmse(scaler.inverse_target(&test_pred).as_slice(), test.y.as_slice())?;
    Ok(RegressionReport {
        method,
        train_rows: train.len(),
        test_rows: test.len(),
        features,
        train_rmse,
        test_rmse,
        seconds: start.elapsed().as_secs_f64(),
    })
}
