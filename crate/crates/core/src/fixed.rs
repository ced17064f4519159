//! Fixed-truncation and classical combiners.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::quadrature::integrate_adaptive;
use crate::numkernel::{beta_cdf, beta_inv_cdf, digamma, gamma_inv_sf, gamma_sf};

/// Smallest p-value retained after ingestion.
pub const P_FLOOR: f64 = 1e-300;
/// Values above 1 by no more than this are rounded down instead of rejected.
const P_CEILING_SLACK: f64 = 1e-9;

const RTP_ABS_TOL: f64 = 1e-8;
const RTP_MAX_SEGMENTS: usize = 200;
const RTP_FALLBACK_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fisher,
    Sidak,
    Bonferroni,
    Simes,
    Rtp,
    Art,
    Artp,
    Arta,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Fisher,
        Method::Sidak,
        Method::Bonferroni,
        Method::Simes,
        Method::Rtp,
        Method::Art,
        Method::Artp,
        Method::Arta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fisher => "fisher",
            Method::Sidak => "sidak",
            Method::Bonferroni => "bonferroni",
            Method::Simes => "simes",
            Method::Rtp => "rtp",
            Method::Art => "art",
            Method::Artp => "artp",
            Method::Arta => "arta",
        }
    }

    /// Whether the method needs every one of the `L` p-values.
    pub fn needs_full_vector(self) -> bool {
        matches!(self, Method::Fisher | Method::Simes)
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
            .iter()
            .copied()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::input(format!("unknown method {s:?}")))
    }
}

/// P-values together with the total number of tests `L`.
///
/// Either all `L` values are present (any order), or only the head: the
/// smallest few, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueVector {
    values: Vec<f64>,
    sorted: Vec<f64>,
    total: usize,
    clamped: usize,
}

impl PValueVector {
    /// A complete vector; `L` is its length.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let total = values.len();
        Self::with_total(values, total)
    }

    /// `values` may be a head of the `total` p-values, in which case it must
    /// be sorted ascending.
    pub fn with_total(values: Vec<f64>, total: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("no p-values supplied"));
        }
        if total < values.len() {
            return Err(Error::input(format!("L = {total} is smaller than the {} supplied p-values", values.len())));
        }
        let mut clamped = 0;
        let mut cleaned = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if v.is_nan() || v < 0.0 || v > 1.0 + P_CEILING_SLACK {
                return Err(Error::input(format!("p-value #{} = {v} is outside [0, 1]", i + 1)));
            }
            let c = v.clamp(P_FLOOR, 1.0);
            if c != v {
                clamped += 1;
            }
            cleaned.push(c);
        }
        if total > cleaned.len() && cleaned.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::input("a truncated head of p-values must be sorted ascending"));
        }
        let mut sorted = cleaned.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values: cleaned, sorted, total, clamped })
    }

    /// Values in input order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Total number of tests `L`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.values.len() == self.total
    }

    /// Number of values moved into `[1e-300, 1]` on ingestion.
    pub fn clamped_count(&self) -> usize {
        self.clamped
    }

    /// `Σ ln p_(i)` over the `k` smallest values.
    pub fn log_product(&self, k: usize) -> f64 {
        self.sorted[..k].iter().map(|p| p.ln()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub k: usize,
    pub l: usize,
}

impl TruncationSpec {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if k < 1 || k > l {
            return Err(Error::Truncation { k, l });
        }
        Ok(Self { k, l })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedResult {
    pub method: Method,
    pub statistic: f64,
    pub p_combined: f64,
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CombinedResult {
    pub(crate) fn new(method: Method, statistic: f64, p_combined: f64) -> Self {
        Self { method, statistic, p_combined: p_combined.clamp(0.0, 1.0), diagnostics: BTreeMap::new(), notes: Vec::new() }
    }

    pub(crate) fn with_diag(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    fn flag_clamping(self, p: &PValueVector) -> Self {
        if p.clamped_count() > 0 {
            let n = p.clamped_count() as f64;
            self.with_diag("clamped_inputs", n)
        } else {
            self
        }
    }
}

fn require_full(p: &PValueVector, what: &str) -> Result<()> {
    if !p.is_full() {
        return Err(Error::input(format!(
            "{what} needs all L = {} p-values, only {} supplied",
            p.total(),
            p.len()
        )));
    }
    Ok(())
}

fn require_head(p: &PValueVector, spec: TruncationSpec) -> Result<()> {
    if spec.l != p.total() {
        return Err(Error::Dimension { expected: p.total(), found: spec.l });
    }
    if p.len() < spec.k {
        return Err(Error::input(format!("k = {} exceeds the {} supplied p-values", spec.k, p.len())));
    }
    Ok(())
}

/// Fisher's test: `T = −2 Σ ln p_i` against chi-square with `2L` degrees of freedom.
pub fn fisher(p: &PValueVector) -> Result<CombinedResult> {
    require_full(p, "Fisher's method")?;
    let t = -2.0 * p.log_product(p.len());
    let pc = gamma_sf(0.5 * t, p.total() as f64)?;
    Ok(CombinedResult::new(Method::Fisher, t, pc).flag_clamping(p))
}

/// Šidák-corrected minimum p-value `1 − (1 − p1)^L`.
pub fn sidak_min(p1: f64, l: usize) -> f64 {
    if p1 <= 0.0 {
        return 0.0;
    }
    if p1 >= 1.0 {
        return 1.0;
    }
    -(l as f64 * (-p1).ln_1p()).exp_m1()
}

/// Bonferroni-corrected minimum p-value `min(1, L p1)`.
pub fn bonferroni_min(p1: f64, l: usize) -> f64 {
    (l as f64 * p1).clamp(0.0, 1.0)
}

/// Simes: `min_i L p_(i) / i` over all `L` p-values.
pub fn simes(p: &PValueVector) -> Result<CombinedResult> {
    require_full(p, "Simes' method")?;
    let l = p.total() as f64;
    let pc = p
        .sorted()
        .iter()
        .enumerate()
        .map(|(i, &v)| l * v / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min)
        .min(1.0);
    Ok(CombinedResult::new(Method::Simes, pc, pc).flag_clamping(p))
}

/// Which evaluation route produced an RTP probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RtpPath {
    FisherIdentity,
    SidakIdentity,
    Quadrature,
    LatticeFallback,
}

impl RtpPath {
    fn code(self) -> f64 {
        match self {
            RtpPath::FisherIdentity => 0.0,
            RtpPath::SidakIdentity => 1.0,
            RtpPath::Quadrature => 2.0,
            RtpPath::LatticeFallback => 3.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            RtpPath::FisherIdentity => "k = L: Fisher gamma tail",
            RtpPath::SidakIdentity => "k = 1: Sidak identity",
            RtpPath::Quadrature => "adaptive Gauss-Kronrod",
            RtpPath::LatticeFallback => "10k-point lattice fallback",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtpProbability {
    pub probability: f64,
    pub error_bound: f64,
    pub path: RtpPath,
}

/// `Pr(W_k <= w)` for the product of the `k` smallest of `L` independent
/// uniforms, given `z = −ln w >= 0`.
///
/// `1 − G_k` composed with the Beta(k+1, L−k) quantile is integrated over
/// `u ∈ (0, 1)`. On `u <= B(w^{1/k})` the integrand is exactly one, so that
/// piece is added in closed form and only the remainder goes to quadrature.
pub fn rtp_cdf(z: f64, k: usize, l: usize) -> Result<RtpProbability> {
    TruncationSpec::new(k, l)?;
    if !(z >= 0.0) {
        return Err(Error::domain(format!("RTP needs -ln w >= 0, got {z}")));
    }
    if k == l {
        let p = gamma_sf(z, l as f64)?;
        return Ok(RtpProbability { probability: p, error_bound: 0.0, path: RtpPath::FisherIdentity });
    }
    if k == 1 {
        let p = sidak_min((-z).exp(), l);
        return Ok(RtpProbability { probability: p, error_bound: 0.0, path: RtpPath::SidakIdentity });
    }
    rtp_cdf_integral(z, k, l)
}

/// The quadrature route with no closed-form shortcuts; valid for `1 <= k < L`.
pub fn rtp_cdf_integral(z: f64, k: usize, l: usize) -> Result<RtpProbability> {
    let (a, b) = ((k + 1) as f64, (l - k) as f64);
    let kf = k as f64;
    let u_flat = beta_cdf((-z / kf).exp(), a, b)?;
    let integrand = |u: f64| -> [f64; 1] {
        let t = beta_inv_cdf(u, a, b).unwrap_or(0.0);
        if t <= 0.0 {
            return [1.0];
        }
        [gamma_sf((kf * t.ln() + z).max(0.0), kf).unwrap_or(0.0)]
    };
    let mut quad = integrate_adaptive(integrand, &[u_flat, 1.0], RTP_ABS_TOL, RTP_MAX_SEGMENTS);
    let mut value = u_flat + quad.value[0];
    if quad.converged && value < 1e-2 {
        // tighten for small tail probabilities
        let tol = (1e-6 * value).max(1e-15);
        if quad.error > tol {
            quad = integrate_adaptive(integrand, &[u_flat, 1.0], tol, 4 * RTP_MAX_SEGMENTS);
            value = u_flat + quad.value[0];
        }
    }
    if quad.error <= RTP_ABS_TOL {
        return Ok(RtpProbability {
            probability: value.clamp(0.0, 1.0),
            error_bound: quad.error.abs(),
            path: RtpPath::Quadrature,
        });
    }
    // Midpoint lattice over the unflat part, with a two-halves error proxy.
    let width = 1.0 - u_flat;
    let n = RTP_FALLBACK_POINTS;
    let mut halves = [0.0; 2];
    for i in 0..n {
        let u = u_flat + width * (i as f64 + 0.5) / n as f64;
        halves[i % 2] += integrand(u)[0];
    }
    let even = width * halves[0] / (n / 2) as f64;
    let odd = width * halves[1] / (n / 2) as f64;
    Ok(RtpProbability {
        probability: (u_flat + 0.5 * (even + odd)).clamp(0.0, 1.0),
        error_bound: (even - odd).abs(),
        path: RtpPath::LatticeFallback,
    })
}

/// The value `z*` of `−ln w` at which the RTP probability equals `alpha`;
/// `rtp <= alpha` exactly when `−ln w >= z*`.
pub fn rtp_critical_value(alpha: f64, k: usize, l: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    TruncationSpec::new(k, l)?;
    let tail = |z: f64| rtp_cdf(z, k, l).map(|r| r.probability);
    let (mut lo, mut hi) = (0.0, k as f64 + 1.0);
    while tail(hi)? > alpha {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Exact rank truncated product: `Pr(W_k <= w)` with `w` the product of the
/// `k` smallest p-values.
pub fn rtp_exact(p: &PValueVector, spec: TruncationSpec) -> Result<CombinedResult> {
    require_head(p, spec)?;
    let z = -p.log_product(spec.k);
    let r = rtp_cdf(z, spec.k, spec.l)?;
    Ok(CombinedResult::new(Method::Rtp, z, r.probability)
        .with_diag("quadrature_error", r.error_bound)
        .with_diag("path", r.path.code())
        .with_note(r.path.label())
        .flag_clamping(p))
}

/// `(Pr(W_k <= w), Pr(W_{k+1} <= w))` from one shared quadrature pass.
pub fn rtp_exact_pair(w: f64, spec: TruncationSpec) -> Result<(f64, f64)> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::domain(format!("product value must lie in (0, 1], got {w}")));
    }
    if spec.k + 1 > spec.l {
        return Err(Error::Truncation { k: spec.k + 1, l: spec.l });
    }
    let (k, l) = (spec.k, spec.l);
    let (a, b) = ((k + 1) as f64, (l - k) as f64);
    let kf = k as f64;
    let z = -w.ln();
    let u_first = beta_cdf((-z / kf).exp(), a, b)?;
    let u_second = beta_cdf((-z / (kf + 1.0)).exp(), a, b)?;
    let integrand = |u: f64| -> [f64; 2] {
        let t = beta_inv_cdf(u, a, b).unwrap_or(0.0);
        if t <= 0.0 {
            return [1.0, 1.0];
        }
        let lt = t.ln();
        [
            gamma_sf((kf * lt + z).max(0.0), kf).unwrap_or(0.0),
            gamma_sf(((kf + 1.0) * lt + z).max(0.0), kf).unwrap_or(0.0),
        ]
    };
    // Below u_first both components are exactly one.
    let quad = integrate_adaptive(integrand, &[u_first, u_second, 1.0], RTP_ABS_TOL * 0.5, 2 * RTP_MAX_SEGMENTS);
    let first = (u_first + quad.value[0]).clamp(0.0, 1.0);
    let second = (u_first + quad.value[1]).clamp(0.0, 1.0);
    Ok((first, second))
}

/// Shape λ = (k−1)(ψ(L+1) − ψ(k)) of the gamma term in the ART statistic.
pub fn art_shape(k: usize, l: usize) -> Result<f64> {
    Ok((k as f64 - 1.0) * (digamma(l as f64 + 1.0)? - digamma(k as f64)?))
}

/// ART statistic `a_k` from `Σ_{i<k} ln p_(i)` and `p_(k)`.
pub fn art_statistic(log_head: f64, pk: f64, k: usize, l: usize) -> Result<f64> {
    let lambda = art_shape(k, l)?;
    let kf = k as f64;
    let lower = beta_cdf(pk, kf, (l - k + 1) as f64)?;
    // G_λ^{-1}(1 − B_k(p_(k))) solved on the upper tail for precision.
    let gamma_term = gamma_inv_sf(lower.max(f64::MIN_POSITIVE), lambda)?;
    Ok(-log_head + (kf - 1.0) * pk.ln() + gamma_term)
}

/// Augmented rank truncation: `1 − G_{k+λ−1}(a_k)`.
pub fn art(p: &PValueVector, spec: TruncationSpec) -> Result<CombinedResult> {
    require_head(p, spec)?;
    if spec.k == 1 {
        let p1 = p.sorted()[0];
        return Ok(CombinedResult::new(Method::Art, p1, sidak_min(p1, spec.l))
            .with_note("k = 1: Sidak identity")
            .flag_clamping(p));
    }
    let (k, l) = (spec.k, spec.l);
    let lambda = art_shape(k, l)?;
    let ak = art_statistic(p.log_product(k - 1), p.sorted()[k - 1], k, l)?;
    let pc = gamma_sf(ak.max(0.0), k as f64 + lambda - 1.0)?;
    Ok(CombinedResult::new(Method::Art, ak, pc).with_diag("lambda", lambda).flag_clamping(p))
}
