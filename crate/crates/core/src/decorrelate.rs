//! Whitening of correlated statistics, LD correlation from haplotype
//! frequencies, and random perturbed-equicorrelation matrices.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::fixed::PValueVector;
use crate::numkernel::{normal_inv_cdf, normal_sf};
use crate::rng::{open01, stream, Domain};

/// Whitening refuses matrices whose smallest eigenvalue is at or below this.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

/// How p-values map to and from normal scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `y = Φ^{-1}(1 − p)`, back as `1 − Φ(y)`.
    #[default]
    OneSided,
    /// `y = Φ^{-1}(1 − p/2)`, back as `2Φ(−|y|)`.
    TwoSided,
}

impl Sidedness {
    pub fn score(self, p: f64) -> Result<f64> {
        match self {
            Sidedness::OneSided => Ok(-normal_inv_cdf(p)?),
            Sidedness::TwoSided => Ok(-normal_inv_cdf(0.5 * p)?),
        }
    }

    pub fn pvalue(self, y: f64) -> f64 {
        match self {
            Sidedness::OneSided => normal_sf(y),
            Sidedness::TwoSided => (2.0 * normal_sf(y.abs())).min(1.0),
        }
    }
}

impl fmt::Display for Sidedness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sidedness::OneSided => "one",
            Sidedness::TwoSided => "two",
        })
    }
}

impl FromStr for Sidedness {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "one" | "one-sided" | "1" => Ok(Sidedness::OneSided),
            "two" | "two-sided" | "2" => Ok(Sidedness::TwoSided),
            _ => Err(Error::input(format!("unknown sidedness {s:?} (use one or two)"))),
        }
    }
}

/// Symmetric inverse square root `H = Q Λ^{-1/2} Qᵀ` of a correlation matrix.
#[derive(Debug, Clone)]
pub struct Whitener {
    h: DMatrix<f64>,
}

impl Whitener {
    pub fn new(sigma: &CorrelationMatrix) -> Result<Self> {
        let eig = sigma.eigen();
        let min = eig.values[0];
        if min <= SINGULAR_THRESHOLD {
            return Err(Error::Singular { eigenvalue: min, threshold: SINGULAR_THRESHOLD });
        }
        let scale = DMatrix::from_diagonal(&eig.values.map(|v| 1.0 / v.sqrt()));
        Ok(Self { h: &eig.vectors * scale * eig.vectors.transpose() })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn order(&self) -> usize {
        self.h.nrows()
    }

    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.order() {
            return Err(Error::Dimension { expected: self.order(), found: y.len() });
        }
        let v = self.h.transpose() * DVector::from_column_slice(y);
        Ok(v.iter().copied().collect())
    }

    /// Whitens scores and maps them back to p-values.
    pub fn decorrelate_scores(&self, y: &[f64], sided: Sidedness) -> Result<Vec<f64>> {
        Ok(self.apply(y)?.into_iter().map(|v| sided.pvalue(v)).collect())
    }
}

/// `y_e = Hᵀ y`; components are iid standard normal when `y ~ MVN(0, Σ)`.
pub fn whiten(y: &[f64], sigma: &CorrelationMatrix) -> Result<Vec<f64>> {
    if y.len() != sigma.order() {
        return Err(Error::Dimension { expected: sigma.order(), found: y.len() });
    }
    Whitener::new(sigma)?.apply(y)
}

/// Converts p-values to signed scores, whitens them, and maps them back.
///
/// Without `signs` every score is taken as positive.
pub fn decorrelate_pvalues(
    p: &PValueVector,
    signs: Option<&[f64]>,
    sigma: &CorrelationMatrix,
    sided: Sidedness,
) -> Result<PValueVector> {
    if !p.is_full() {
        return Err(Error::input("decorrelation needs all L p-values"));
    }
    if p.len() != sigma.order() {
        return Err(Error::Dimension { expected: sigma.order(), found: p.len() });
    }
    if let Some(s) = signs {
        if s.len() != p.len() {
            return Err(Error::Dimension { expected: p.len(), found: s.len() });
        }
        if s.iter().any(|v| !(v.is_finite() && *v != 0.0)) {
            return Err(Error::input("signs must be nonzero"));
        }
    }
    let mut y = Vec::with_capacity(p.len());
    for (i, &v) in p.values().iter().enumerate() {
        let sign = signs.map_or(1.0, |s| s[i].signum());
        y.push(sign * sided.score(v)?);
    }
    let out = Whitener::new(sigma)?.decorrelate_scores(&y, sided)?;
    PValueVector::new(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaplotypeTable {
    n_snps: usize,
    rows: Vec<(Vec<bool>, f64)>,
}

impl HaplotypeTable {
    pub fn new(rows: Vec<(Vec<bool>, f64)>) -> Result<Self> {
        let n_snps = rows.first().map(|r| r.0.len()).unwrap_or(0);
        if n_snps == 0 {
            return Err(Error::input("haplotype table is empty"));
        }
        if let Some((pat, _)) = rows.iter().find(|r| r.0.len() != n_snps) {
            return Err(Error::Dimension { expected: n_snps, found: pat.len() });
        }
        if let Some((_, f)) = rows.iter().find(|r| !(r.1 >= 0.0 && r.1 <= 1.0)) {
            return Err(Error::input(format!("haplotype frequency {f} outside [0, 1]")));
        }
        let total: f64 = rows.iter().map(|r| r.1).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::input(format!("haplotype frequencies sum to {total}, not 1")));
        }
        let mut pats: Vec<&Vec<bool>> = rows.iter().map(|r| &r.0).collect();
        pats.sort();
        if pats.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("haplotype patterns must be distinct"));
        }
        Ok(Self { n_snps, rows })
    }

    pub fn n_snps(&self) -> usize {
        self.n_snps
    }

    pub fn rows(&self) -> &[(Vec<bool>, f64)] {
        &self.rows
    }

    /// CSV with a header naming `pattern` and `freq` columns.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| Error::input(e.to_string()))?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::input(format!("haplotype file lacks a {name:?} column")))
        };
        let (pc, fc) = (col("pattern")?, col("freq")?);
        let mut rows = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::input(e.to_string()))?;
            let pat = rec.get(pc).unwrap_or("");
            let bits = pat
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::input(format!("row {}: pattern {pat:?} is not a 0/1 string", line + 1))),
                })
                .collect::<Result<Vec<bool>>>()?;
            let freq_text = rec.get(fc).unwrap_or("");
            let freq: f64 = freq_text
                .parse()
                .map_err(|_| Error::input(format!("row {}: frequency {freq_text:?} is not a number", line + 1)))?;
            rows.push((bits, freq));
        }
        Self::new(rows)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::input(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse_csv(&text)
    }
}

/// LD correlation `r_ij = D_ij / √(p_i(1−p_i) p_j(1−p_j))` with
/// `D_ij = P_ij − p_i p_j`.
pub fn ld_matrix_from_haplotypes(h: &HaplotypeTable) -> Result<CorrelationMatrix> {
    let n = h.n_snps();
    let mut joint = DMatrix::<f64>::zeros(n, n);
    for (pat, f) in h.rows() {
        for i in 0..n {
            if pat[i] {
                for j in 0..n {
                    if pat[j] {
                        joint[(i, j)] += f;
                    }
                }
            }
        }
    }
    let freq: Vec<f64> = (0..n).map(|i| joint[(i, i)]).collect();
    if let Some(i) = freq.iter().position(|&p| p <= 0.0 || p >= 1.0) {
        return Err(Error::input(format!("SNP {} is monomorphic (allele frequency {})", i + 1, freq[i])));
    }
    let r = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 1.0;
        }
        let d = joint[(i, j)] - freq[i] * freq[j];
        (d / (freq[i] * (1.0 - freq[i]) * freq[j] * (1.0 - freq[j])).sqrt()).clamp(-1.0, 1.0)
    });
    CorrelationMatrix::new(r)
}

/// `ρ_ij = (ρ + u_i u_j) / √((1 + u_i²)(1 + u_j²))` with `u_i ~ U(−δ, δ)`.
pub fn random_correlation(l: usize, rho: f64, delta: f64, seed: u64) -> Result<CorrelationMatrix> {
    random_correlation_at(l, rho, delta, seed, 0)
}

/// As [`random_correlation`], drawing from stream `index`.
pub fn random_correlation_at(l: usize, rho: f64, delta: f64, seed: u64, index: u64) -> Result<CorrelationMatrix> {
    if l == 0 {
        return Err(Error::input("order must be positive"));
    }
    let floor = if l > 1 { -1.0 / (l as f64 - 1.0) } else { -1.0 };
    if !(rho > floor && rho < 1.0) {
        return Err(Error::domain(format!("rho = {rho} outside ({floor}, 1)")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("delta must be >= 0, got {delta}")));
    }
    let mut rng = stream(seed, Domain::CorrelationGen, index);
    let u: Vec<f64> = (0..l).map(|_| delta * (2.0 * open01(&mut rng) - 1.0)).collect();
    let m = DMatrix::from_fn(l, l, |i, j| {
        if i == j {
            1.0
        } else {
            (rho + u[i] * u[j]) / ((1.0 + u[i] * u[i]) * (1.0 + u[j] * u[j])).sqrt()
        }
    });
    CorrelationMatrix::new(m)
}
