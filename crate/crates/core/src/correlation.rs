//! Symmetric unit-diagonal correlation matrices with a cached
//! eigendecomposition.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues at or above this are treated as numerically zero and clipped.
pub const PSD_TOLERANCE: f64 = 1e-10;
const STRUCTURE_TOLERANCE: f64 = 1e-12;

/// Eigenpairs sorted by ascending eigenvalue; `vectors` holds them as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    eigen: OnceLock<Eigen>,
}

impl PartialEq for CorrelationMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl CorrelationMatrix {
    /// Validates squareness, symmetry, unit diagonal and finiteness. The
    /// stored matrix is exactly symmetric.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 {
            return Err(Error::input("correlation matrix must have order >= 1"));
        }
        if entries.ncols() != n {
            return Err(Error::Dimension { expected: n, found: entries.ncols() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("correlation matrix has non-finite entries"));
        }
        for i in 0..n {
            if (entries[(i, i)] - 1.0).abs() > STRUCTURE_TOLERANCE {
                return Err(Error::input(format!(
                    "correlation matrix diagonal entry {i} is {} (expected 1)",
                    entries[(i, i)]
                )));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > STRUCTURE_TOLERANCE {
                    return Err(Error::input(format!("correlation matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        let mut sym = (&entries + entries.transpose()) * 0.5;
        sym.fill_diagonal(1.0);
        Ok(Self { entries: sym, eigen: OnceLock::new() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Dimension { expected: n, found: rows[bad].len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(order: usize) -> Self {
        Self::new(DMatrix::identity(order, order)).expect("identity is a valid correlation")
    }

    /// Off-diagonal entries all equal `rho`.
    pub fn equicorrelated(order: usize, rho: f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(order, order, |i, j| if i == j { 1.0 } else { rho }))
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn eigen(&self) -> &Eigen {
        self.eigen.get_or_init(|| {
            let se = self.entries.clone().symmetric_eigen();
            let mut idx: Vec<usize> = (0..self.order()).collect();
            idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
            let values = DVector::from_iterator(idx.len(), idx.iter().map(|&i| se.eigenvalues[i]));
            let vectors = DMatrix::from_fn(self.order(), idx.len(), |r, c| se.eigenvectors[(r, idx[c])]);
            Eigen { values, vectors }
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }

    pub fn check_psd(&self) -> Result<()> {
        let m = self.min_eigenvalue();
        if m < -PSD_TOLERANCE {
            return Err(Error::NotPsd { eigenvalue: m });
        }
        Ok(())
    }

    /// Clips eigenvalues in `[-1e-10, 0)` to zero and restores the unit
    /// diagonal. Anything more negative is an error.
    pub fn psd_repaired(&self) -> Result<Self> {
        self.check_psd()?;
        let eig = self.eigen();
        if eig.values[0] >= 0.0 {
            return Ok(self.clone());
        }
        let clipped = DMatrix::from_diagonal(&eig.values.map(|v| v.max(0.0)));
        let rebuilt = &eig.vectors * clipped * eig.vectors.transpose();
        Ok(Self::new_unchecked(normalize_diagonal(rebuilt)))
    }

    /// `F` with `F Fᵀ = R`, built as `Q Λ^{1/2}` with negative eigenvalues
    /// clipped. Works for semidefinite input.
    pub fn sqrt_factor(&self) -> DMatrix<f64> {
        let eig = self.eigen();
        let mut f = eig.vectors.clone();
        for (mut col, &v) in f.column_iter_mut().zip(eig.values.iter()) {
            col *= v.max(0.0).sqrt();
        }
        f
    }

    /// `(R + εI) / (1 + ε)`, used as an explicit escape for near-singular input.
    pub fn with_ridge(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::domain(format!("ridge must be > 0, got {eps}")));
        }
        let n = self.order();
        let m = (&self.entries + DMatrix::identity(n, n) * eps) / (1.0 + eps);
        Ok(Self::new_unchecked(normalize_diagonal(m)))
    }

    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let m = DMatrix::from_fn(indices.len(), indices.len(), |i, j| self.entries[(indices[i], indices[j])]);
        Self::new_unchecked(m)
    }

    fn new_unchecked(mut entries: DMatrix<f64>) -> Self {
        entries.fill_diagonal(1.0);
        let sym = (&entries + entries.transpose()) * 0.5;
        Self { entries: sym, eigen: OnceLock::new() }
    }

    /// Parses a headerless square numeric CSV.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::input(format!("correlation CSV: {e}")))?;
            let row = record
                .iter()
                .filter(|f| !f.is_empty())
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::input(format!("correlation CSV row {}: non-numeric entry {f:?}", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            if !row.is_empty() {
                rows.push(row);
            }
        }
        Self::from_rows(&rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.order() {
            let row: Vec<String> = (0..self.order()).map(|j| format!("{}", self.entries[(i, j)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

fn normalize_diagonal(m: DMatrix<f64>) -> DMatrix<f64> {
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].max(f64::MIN_POSITIVE).sqrt()).collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] / (d[i] * d[j]))
}
