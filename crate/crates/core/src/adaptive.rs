//! Adaptive truncation: the analytic ART-A combiner and the resampling aRTP
//! benchmark.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::fixed::{CombinedResult, Method, PValueVector};
use crate::numkernel::mvn::{MvnEvaluator, DEFAULT_MAX_POINTS, DEFAULT_TARGET_SE};
use crate::numkernel::{gamma_inv_cdf, gamma_sf, normal_cdf, normal_inv_cdf};
use crate::orderstats::fill_head;
use crate::rng::{par_generate, Domain};

/// Bounds applied to each `Z_i` before the normal quantile.
pub const Z_CLAMP: f64 = 1e-15;

/// Smallest null sample accepted by the resampling benchmark.
pub const MIN_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveSpec {
    pub candidate_ks: Vec<usize>,
    pub weights: Vec<f64>,
    pub l: usize,
    pub mvn_target_se: f64,
}

impl AdaptiveSpec {
    /// Candidates `1..=k`, unit weights.
    pub fn new(k: usize, l: usize) -> Result<Self> {
        Self::with_candidates((1..=k).collect(), l)
    }

    pub fn with_candidates(candidate_ks: Vec<usize>, l: usize) -> Result<Self> {
        let kmax = candidate_ks.last().copied().unwrap_or(0);
        let spec = Self { candidate_ks, weights: vec![1.0; kmax], l, mvn_target_se: DEFAULT_TARGET_SE };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.weights = weights;
        self.validate()?;
        Ok(self)
    }

    /// Weights `λ²_{k−i+1} = k/(k−i+1)`, favouring sums over few terms.
    pub fn with_sparse_weights(self) -> Result<Self> {
        let k = self.max_k();
        let weights = (1..=k).map(|m| (k as f64 / m as f64).sqrt()).collect();
        self.with_weights(weights)
    }

    pub fn with_target_se(mut self, se: f64) -> Result<Self> {
        self.mvn_target_se = se;
        self.validate()?;
        Ok(self)
    }

    pub fn max_k(&self) -> usize {
        self.candidate_ks.last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.candidate_ks;
        if c.is_empty() {
            return Err(Error::input("no candidate truncation points"));
        }
        if c[0] < 1 || c.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::input("candidate truncation points must be strictly increasing and >= 1"));
        }
        if self.max_k() > self.l {
            return Err(Error::Truncation { k: self.max_k(), l: self.l });
        }
        if self.weights.len() != self.max_k() {
            return Err(Error::Dimension { expected: self.max_k(), found: self.weights.len() });
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::input("weights must be positive"));
        }
        if !(self.mvn_target_se > 0.0) {
            return Err(Error::input("MVN target standard error must be positive"));
        }
        Ok(())
    }

    /// Running sums `σ_j² = Σ_{i<=j} λ_i²`.
    fn variances(&self) -> Vec<f64> {
        self.weights
            .iter()
            .scan(0.0, |acc, w| {
                *acc += w * w;
                Some(*acc)
            })
            .collect()
    }

    /// Correlation of the standardized partial sums at the candidates:
    /// `R_ab = σ_min(a,b)² / (σ_a σ_b)`.
    pub fn candidate_correlation(&self) -> Result<CorrelationMatrix> {
        let var = self.variances();
        let c = &self.candidate_ks;
        let m = DMatrix::from_fn(c.len(), c.len(), |i, j| {
            let (a, b) = (var[c[i] - 1], var[c[j] - 1]);
            a.min(b) / (a * b).sqrt()
        });
        CorrelationMatrix::new(m)
    }
}

fn check_l(p: &PValueVector, spec: &AdaptiveSpec) -> Result<()> {
    if p.total() != spec.l {
        return Err(Error::Dimension { expected: p.total(), found: spec.l });
    }
    if p.len() < spec.max_k() {
        return Err(Error::input(format!(
            "largest candidate k = {} exceeds the {} supplied p-values",
            spec.max_k(),
            p.len()
        )));
    }
    Ok(())
}

fn z_from_sorted(sorted: &[f64], l: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut prev = 0.0_f64;
    for (i, &p) in sorted.iter().enumerate() {
        if p < prev {
            return Err(Error::input("p-values must be sorted ascending"));
        }
        let z = if prev >= 1.0 {
            1.0
        } else {
            ((l - i) as f64 * ((-p).ln_1p() - (-prev).ln_1p())).exp()
        };
        out.push(z.clamp(0.0, 1.0));
        prev = p;
    }
    Ok(out)
}

/// Independent uniforms `Z_1 = (1 − p_(1))^L`,
/// `Z_i = ((1 − p_(i)) / (1 − p_(i−1)))^{L−i+1}` from the sorted values.
pub fn z_transform(p: &PValueVector) -> Result<Vec<f64>> {
    z_from_sorted(p.sorted(), p.total())
}

/// Gamma-sum form at a single `k`: `1 − G_{Σλ}(Σ G_{λ_i}^{-1}(Z_i))`.
///
/// With `k = 1` and `λ = 1` this is the Šidák value.
pub fn gamma_sum_pvalue(z: &[f64], shapes: &[f64]) -> Result<f64> {
    if z.len() != shapes.len() || z.is_empty() {
        return Err(Error::Dimension { expected: shapes.len(), found: z.len() });
    }
    let mut y = 0.0;
    for (&zi, &s) in z.iter().zip(shapes) {
        y += gamma_inv_cdf(zi.clamp(0.0, 1.0 - Z_CLAMP), s)?;
    }
    gamma_sf(y, shapes.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtaStatistic {
    /// `S_j` for `j = 1..=max k`.
    pub partial_sums: Vec<f64>,
    /// Marginal p-value at each candidate.
    pub marginal_ps: Vec<f64>,
    pub min_p: f64,
    pub argmin_k: usize,
    /// How many `Z_i` hit the clamp.
    pub clamped: usize,
}

/// Partial sums `S_j = Σ_{i<=j} λ_i Φ^{-1}(1 − Z_i)` and marginal p-values
/// `Φ(S_k / σ_k)` at each candidate.
pub fn arta_statistic(p: &PValueVector, spec: &AdaptiveSpec) -> Result<ArtaStatistic> {
    spec.validate()?;
    check_l(p, spec)?;
    statistic_from_sorted(&p.sorted()[..spec.max_k()], spec)
}

/// As [`arta_statistic`] from the `max k` smallest values, ascending.
pub fn arta_statistic_sorted(head: &[f64], spec: &AdaptiveSpec) -> Result<ArtaStatistic> {
    if head.len() < spec.max_k() {
        return Err(Error::Dimension { expected: spec.max_k(), found: head.len() });
    }
    statistic_from_sorted(&head[..spec.max_k()], spec)
}

fn statistic_from_sorted(head: &[f64], spec: &AdaptiveSpec) -> Result<ArtaStatistic> {
    let z = z_from_sorted(head, spec.l)?;
    let mut clamped = 0;
    let mut partial_sums = Vec::with_capacity(z.len());
    let mut s = 0.0;
    for (zi, w) in z.iter().zip(&spec.weights) {
        let c = zi.clamp(Z_CLAMP, 1.0 - Z_CLAMP);
        if c != *zi {
            clamped += 1;
        }
        s += w * normal_inv_cdf(1.0 - c)?;
        partial_sums.push(s);
    }
    let var = spec.variances();
    let marginal_ps: Vec<f64> = spec
        .candidate_ks
        .iter()
        .map(|&k| normal_cdf(partial_sums[k - 1] / var[k - 1].sqrt()))
        .collect();
    let (idx, &min_p) = marginal_ps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("candidates are nonempty");
    Ok(ArtaStatistic { partial_sums, marginal_ps, min_p, argmin_k: spec.candidate_ks[idx], clamped })
}

/// ART-A with the candidate correlation factored once, for repeated use.
#[derive(Debug, Clone)]
pub struct ArtaEngine {
    spec: AdaptiveSpec,
    mvn: MvnEvaluator,
}

impl ArtaEngine {
    pub fn new(spec: AdaptiveSpec) -> Result<Self> {
        spec.validate()?;
        let mvn = MvnEvaluator::new(&spec.candidate_correlation()?)?;
        Ok(Self { spec, mvn })
    }

    pub fn spec(&self) -> &AdaptiveSpec {
        &self.spec
    }

    pub fn pvalue(&self, p: &PValueVector, seed: u64) -> Result<CombinedResult> {
        check_l(p, &self.spec)?;
        self.pvalue_sorted(&p.sorted()[..self.spec.max_k()], seed)
    }

    /// As [`pvalue`](Self::pvalue) from the `max k` smallest values, ascending.
    pub fn pvalue_sorted(&self, head: &[f64], seed: u64) -> Result<CombinedResult> {
        let stat = statistic_from_sorted(head, &self.spec)?;
        let m = self.spec.candidate_ks.len();
        let min_p = stat.min_p;
        let (raw, se) = if m == 1 {
            (min_p, 0.0)
        } else {
            let bound = -normal_inv_cdf(min_p.max(f64::MIN_POSITIVE))?;
            let est = self.mvn.evaluate(&vec![bound; m], self.spec.mvn_target_se, DEFAULT_MAX_POINTS, seed)?;
            (1.0 - est.probability, est.se)
        };
        let upper = (m as f64 * min_p).min(1.0);
        let p = raw.clamp(min_p, upper);
        let mut r = CombinedResult::new(Method::Arta, min_p, p)
            .with_diag("argmin_k", stat.argmin_k as f64)
            .with_diag("mvn_se", se)
            .with_diag("unclamped", raw);
        if stat.clamped > 0 {
            r = r.with_diag("z_clamped", stat.clamped as f64);
        }
        Ok(r)
    }
}

impl ArtaEngine {
    /// Largest minimum marginal p-value whose ART-A value is at most `alpha`.
    ///
    /// The ART-A value grows with the minimum marginal p-value, so
    /// `p_ART-A <= alpha` exactly when `min p <= critical_min_p(alpha)`.
    /// Solved by bisection in `ln min p` with one fixed MVN seed.
    pub fn critical_min_p(&self, alpha: f64, seed: u64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let m = self.spec.candidate_ks.len();
        if m == 1 {
            return Ok(alpha);
        }
        let tail = |min_p: f64| -> Result<f64> {
            let bound = -normal_inv_cdf(min_p)?;
            let est = self.mvn.evaluate(&vec![bound; m], self.spec.mvn_target_se, DEFAULT_MAX_POINTS, seed)?;
            Ok((1.0 - est.probability).clamp(min_p, (m as f64 * min_p).min(1.0)))
        };
        let (mut lo, mut hi) = ((alpha / m as f64).ln(), alpha.ln());
        for _ in 0..40 {
            if hi - lo < 1e-5 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if tail(mid.exp())? <= alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo.exp())
    }
}

/// ART-A: `1 − Pr(all T_j < Φ^{-1}(1 − min p))` with `T ~ MVN(0, R)`.
pub fn arta_pvalue(p: &PValueVector, spec: &AdaptiveSpec, seed: u64) -> Result<CombinedResult> {
    ArtaEngine::new(spec.clone())?.pvalue(p, seed)
}

/// Null reference for the resampling aRTP benchmark.
///
/// Holds, per candidate, the sorted null log-products and the row-wise
/// minimum of the within-column ranks. Built once, it prices any number of
/// observed vectors.
#[derive(Debug, Clone)]
pub struct ArtpCalibrator {
    spec: AdaptiveSpec,
    columns: Vec<Vec<f64>>,
    null_min_p: Vec<f64>,
}

impl ArtpCalibrator {
    /// Draws `b` independent null heads.
    pub fn new(spec: AdaptiveSpec, b: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        check_resamples(b)?;
        let kmax = spec.max_k();
        let (l, cands) = (spec.l, spec.candidate_ks.clone());
        let rows = par_generate(seed, Domain::ArtpNull, b, |rng, _| {
            let mut head = vec![0.0; kmax];
            fill_head(rng, l, &mut head);
            candidate_log_products(&head, &cands)
        });
        Ok(Self::from_stats(spec, rows))
    }

    /// Uses caller-supplied null rows, each holding at least `max k` of the
    /// smallest p-values in ascending order.
    pub fn from_null_rows(spec: AdaptiveSpec, rows: &[Vec<f64>]) -> Result<Self> {
        spec.validate()?;
        check_resamples(rows.len())?;
        let kmax = spec.max_k();
        let mut stats = Vec::with_capacity(rows.len());
        for row in rows {
            if row.len() < kmax {
                return Err(Error::Dimension { expected: kmax, found: row.len() });
            }
            stats.push(candidate_log_products(&row[..kmax], &spec.candidate_ks));
        }
        Ok(Self::from_stats(spec, stats))
    }

    fn from_stats(spec: AdaptiveSpec, rows: Vec<Vec<f64>>) -> Self {
        let m = spec.candidate_ks.len();
        let b = rows.len() as f64;
        let mut columns: Vec<Vec<f64>> = (0..m).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        for col in &mut columns {
            col.sort_by(f64::total_cmp);
        }
        let mut null_min_p: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&columns)
                    .map(|(&s, col)| col.partition_point(|&v| v <= s) as f64 / b)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        null_min_p.sort_by(f64::total_cmp);
        Self { spec, columns, null_min_p }
    }

    pub fn spec(&self) -> &AdaptiveSpec {
        &self.spec
    }

    pub fn resamples(&self) -> usize {
        self.null_min_p.len()
    }

    pub fn pvalue(&self, p: &PValueVector) -> Result<CombinedResult> {
        check_l(p, &self.spec)?;
        self.pvalue_sorted(&p.sorted()[..self.spec.max_k()])
    }

    /// Prices the `max k` smallest values, ascending.
    pub fn pvalue_sorted(&self, head: &[f64]) -> Result<CombinedResult> {
        if head.len() < self.spec.max_k() {
            return Err(Error::Dimension { expected: self.spec.max_k(), found: head.len() });
        }
        let stats = candidate_log_products(&head[..self.spec.max_k()], &self.spec.candidate_ks);
        let b1 = (self.resamples() + 1) as f64;
        let mut min_p = f64::INFINITY;
        let mut argmin = self.spec.candidate_ks[0];
        for ((&s, col), &k) in stats.iter().zip(&self.columns).zip(&self.spec.candidate_ks) {
            let pj = (col.partition_point(|&v| v <= s) + 1) as f64 / b1;
            if pj < min_p {
                min_p = pj;
                argmin = k;
            }
        }
        let count = self.null_min_p.partition_point(|&v| v <= min_p);
        let p = (count + 1) as f64 / b1;
        Ok(CombinedResult::new(Method::Artp, min_p, p)
            .with_diag("argmin_k", argmin as f64)
            .with_diag("resamples", self.resamples() as f64))
    }
}

fn check_resamples(b: usize) -> Result<()> {
    if b < MIN_RESAMPLES {
        return Err(Error::input(format!("at least {MIN_RESAMPLES} resamples are needed, got {b}")));
    }
    Ok(())
}

fn candidate_log_products(head: &[f64], cands: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(cands.len());
    let mut acc = 0.0;
    let mut next = 0;
    for (i, v) in head.iter().enumerate() {
        acc += v.ln();
        if next < cands.len() && cands[next] == i + 1 {
            out.push(acc);
            next += 1;
        }
    }
    out
}

/// Resampling aRTP: rank-based minimum over candidate RTP statistics,
/// calibrated against `b` null heads.
pub fn artp_empirical(p: &PValueVector, spec: &AdaptiveSpec, b: usize, seed: u64) -> Result<CombinedResult> {
    check_l(p, spec)?;
    ArtpCalibrator::new(spec.clone(), b, seed)?.pvalue(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::sidak_min;

    #[test]
    fn spec_validation() {
        assert!(AdaptiveSpec::with_candidates(vec![], 5).is_err());
        assert!(AdaptiveSpec::with_candidates(vec![2, 2], 5).is_err());
        assert!(AdaptiveSpec::with_candidates(vec![1, 6], 5).is_err());
        assert!(AdaptiveSpec::new(3, 5).unwrap().with_weights(vec![1.0, -1.0, 1.0]).is_err());
        let s = AdaptiveSpec::new(4, 10).unwrap().with_sparse_weights().unwrap();
        assert!((s.weights[0] - 2.0).abs() < 1e-15);
        assert!((s.weights[3] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z_examples() {
        let z = z_transform(&PValueVector::new(vec![0.3]).unwrap()).unwrap();
        assert!((z[0] - 0.7).abs() < 1e-15);
        let z = z_transform(&PValueVector::with_total(vec![0.0, 0.5], 4).unwrap()).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15);
        // ((1 - 0.5)/(1 - 1e-300))^3
        assert!((z[1] - 0.125).abs() < 1e-15);
        let z = z_transform(&PValueVector::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(z, vec![0.0, 1.0]);
    }

    #[test]
    fn single_candidate_is_sidak() {
        let spec = AdaptiveSpec::with_candidates(vec![1], 10).unwrap();
        let p = PValueVector::with_total(vec![0.01], 10).unwrap();
        let stat = arta_statistic(&p, &spec).unwrap();
        assert!((stat.min_p - sidak_min(0.01, 10)).abs() < 1e-12);
        let r = arta_pvalue(&p, &spec, 1).unwrap();
        assert_eq!(r.p_combined, stat.min_p);
    }

    #[test]
    fn half_z_gives_zero_sums() {
        // choose p so every Z_i is exactly 1/2
        let l = 6;
        let mut p = Vec::new();
        let mut surv: f64 = 1.0;
        for i in 0..4 {
            surv *= 0.5f64.powf(1.0 / (l - i) as f64);
            p.push(1.0 - surv);
        }
        let spec = AdaptiveSpec::new(4, l).unwrap();
        let stat = arta_statistic(&PValueVector::with_total(p, l).unwrap(), &spec).unwrap();
        assert!(stat.partial_sums.iter().all(|s| s.abs() < 1e-12));
        assert!(stat.marginal_ps.iter().all(|m| (m - 0.5).abs() < 1e-12));
    }

    #[test]
    fn candidate_correlation_shape() {
        let spec = AdaptiveSpec::with_candidates(vec![1, 4], 10).unwrap();
        let r = spec.candidate_correlation().unwrap();
        assert!((r.get(0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gamma_sum_single_is_sidak() {
        let z = (1.0f64 - 0.02).powi(8);
        assert!((gamma_sum_pvalue(&[z], &[1.0]).unwrap() - sidak_min(0.02, 8)).abs() < 1e-12);
    }

    #[test]
    fn arta_within_sandwich_and_deterministic() {
        let p = PValueVector::new(vec![0.7, 0.07, 0.15, 0.12, 0.08, 0.09]).unwrap();
        let spec = AdaptiveSpec::new(4, 6).unwrap();
        let a = arta_pvalue(&p, &spec, 9).unwrap();
        let b = arta_pvalue(&p, &spec, 9).unwrap();
        assert_eq!(a.p_combined.to_bits(), b.p_combined.to_bits());
        assert!(a.p_combined >= a.statistic && a.p_combined <= 4.0 * a.statistic);
    }

    #[test]
    fn critical_value_brackets_decision() {
        let spec = AdaptiveSpec::new(5, 30).unwrap();
        let engine = ArtaEngine::new(spec).unwrap();
        let c = engine.critical_min_p(0.05, 3).unwrap();
        assert!(c > 0.01 && c < 0.05, "{c}");
        let bound = -normal_inv_cdf(c).unwrap();
        let est = engine.mvn.evaluate(&[bound; 5], 1e-4, DEFAULT_MAX_POINTS, 3).unwrap();
        assert!((1.0 - est.probability - 0.05).abs() < 1e-3);
    }

    #[test]
    fn artp_rejects_small_b() {
        let p = PValueVector::new(vec![0.1, 0.2, 0.3]).unwrap();
        let spec = AdaptiveSpec::new(2, 3).unwrap();
        assert!(artp_empirical(&p, &spec, 999, 0).is_err());
        let r = artp_empirical(&p, &spec, 2000, 0).unwrap();
        assert!(r.p_combined > 0.0 && r.p_combined <= 1.0);
        let again = artp_empirical(&p, &spec, 2000, 0).unwrap();
        assert_eq!(r.p_combined, again.p_combined);
    }
}
