//! Uniform order statistics: the step-wise head sampler, the beta-gamma
//! sampler for the truncated product, and correlation tools for the
//! shuffled head.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::error::{Error, Result};
use crate::fixed::TruncationSpec;
use crate::numkernel::beta_cdf;
use crate::rng::{open01, par_generate, stream, Domain};

/// The `k` smallest of `L` uniforms, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSample {
    pub k: usize,
    pub l: usize,
    pub values: Vec<f64>,
    pub log_product: f64,
}

/// Builds the head from `k` uniforms via
/// `P_(j) = 1 − Π_{i<=j} U_i^{1/(L−i+1)}`.
pub fn head_from_uniforms(uniforms: &[f64], l: usize) -> Result<HeadSample> {
    let k = uniforms.len();
    TruncationSpec::new(k, l)?;
    let mut values = Vec::with_capacity(k);
    let mut log_product = 0.0;
    let mut log_survivor = 0.0;
    for (i, &u) in uniforms.iter().enumerate() {
        if !(u > 0.0 && u <= 1.0) {
            return Err(Error::domain(format!("uniform draw {u} outside (0, 1]")));
        }
        log_survivor += u.ln() / (l - i) as f64;
        let p = -log_survivor.exp_m1();
        log_product += p.ln();
        values.push(p);
    }
    Ok(HeadSample { k, l, values, log_product })
}

/// Draws a head from `rng` into `out`, returning `Σ ln P_(j)`.
///
/// Allocation-free core of the samplers; `out.len()` is `k`.
pub fn fill_head<R: Rng + ?Sized>(rng: &mut R, l: usize, out: &mut [f64]) -> f64 {
    let mut log_survivor = 0.0;
    let mut log_product = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        log_survivor += open01(rng).ln() / (l - i) as f64;
        let p = (-log_survivor.exp_m1()).max(f64::MIN_POSITIVE);
        log_product += p.ln();
        *slot = p;
    }
    log_product
}

/// One head sample; replicate `index` of `seed`.
pub fn sample_head_at(k: usize, l: usize, seed: u64, index: u64) -> Result<HeadSample> {
    TruncationSpec::new(k, l)?;
    let mut rng = stream(seed, Domain::HeadSampler, index);
    let mut values = vec![0.0; k];
    let log_product = fill_head(&mut rng, l, &mut values);
    Ok(HeadSample { k, l, values, log_product })
}

pub fn sample_head(k: usize, l: usize, seed: u64) -> Result<HeadSample> {
    sample_head_at(k, l, seed, 0)
}

/// `b` head samples, flattened row-major into a `b × k` buffer.
pub fn sample_heads(k: usize, l: usize, b: usize, seed: u64) -> Result<Vec<f64>> {
    TruncationSpec::new(k, l)?;
    let rows = par_generate(seed, Domain::HeadSampler, b, |rng, _| {
        let mut row = vec![0.0; k];
        fill_head(rng, l, &mut row);
        row
    });
    Ok(rows.concat())
}

/// `b` draws of `Z = Y − k ln X` with `X ~ Beta(k+1, L−k)` and `Y ~ Gamma(k, 1)`.
///
/// `Z` is distributed as `−ln W_k`, so `mean(Z >= −ln w)` estimates the RTP
/// probability. At `k = L` the draws are `Gamma(L, 1)`.
pub fn sample_rtp_null(k: usize, l: usize, b: usize, seed: u64) -> Result<Vec<f64>> {
    TruncationSpec::new(k, l)?;
    let kf = k as f64;
    let gamma = Gamma::new(if k == l { l as f64 } else { kf }, 1.0).map_err(|e| Error::domain(e.to_string()))?;
    if k == l {
        return Ok(par_generate(seed, Domain::RtpNull, b, |rng, _| gamma.sample(rng)));
    }
    let beta = Beta::new(kf + 1.0, (l - k) as f64).map_err(|e| Error::domain(e.to_string()))?;
    Ok(par_generate(seed, Domain::RtpNull, b, |rng, _| {
        let x: f64 = beta.sample(rng);
        let y: f64 = gamma.sample(rng);
        y - kf * x.max(f64::MIN_POSITIVE).ln()
    }))
}

/// Correlation between two distinct entries of the shuffled `k` smallest of
/// `L` uniforms: `3(L−k) / (2 + k(L−2) + 5L)`.
pub fn unordered_min_correlation(k: usize, l: usize) -> Result<f64> {
    TruncationSpec::new(k, l)?;
    let (k, l) = (k as f64, l as f64);
    Ok(3.0 * (l - k) / (2.0 + k * (l - 2.0) + 5.0 * l))
}

/// Factor for the largest head value that removes the pairwise correlation
/// of the shuffled head.
pub fn scale_factor_sigma(k: usize, l: usize) -> Result<f64> {
    TruncationSpec::new(k, l)?;
    let (k, l) = (k as f64, l as f64);
    let root = ((k + 1.0) * (l + 1.0) * (l - k + 1.0)).sqrt();
    Ok((2.0 * l - k + 3.0 + root) / (4.0 + 2.0 * l))
}

/// The head with its last value multiplied by σ, still in head order.
pub fn scale_head(h: &HeadSample) -> Result<Vec<f64>> {
    let sigma = scale_factor_sigma(h.k, h.l)?;
    let mut v = h.values.clone();
    if let Some(last) = v.last_mut() {
        *last *= sigma;
    }
    Ok(v)
}

/// Scales the largest head value by σ and shuffles. Pairwise correlation is
/// removed, dependence is not.
pub fn decorrelate_head(h: &HeadSample, seed: u64) -> Result<Vec<f64>> {
    let mut v = scale_head(h)?;
    v.shuffle(&mut stream(seed, Domain::Shuffle, 0));
    Ok(v)
}

/// Maps a scaled head (head order, last entry multiplied by σ) through the
/// mixture CDF `(1/k) Σ_i I_x(i, L−i+1)`. After a uniform shuffle each
/// entry is Uniform(0, 1).
pub fn uniformize_head(x: &[f64], k: usize, l: usize) -> Result<Vec<f64>> {
    if x.len() != k {
        return Err(Error::Dimension { expected: k, found: x.len() });
    }
    let sigma = scale_factor_sigma(k, l)?;
    x.iter()
        .enumerate()
        .map(|(j, &v)| {
            let v = if j + 1 == k { v / sigma } else { v };
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::domain(format!("head value {v} outside [0, 1]")));
            }
            let mut acc = 0.0;
            for i in 1..=k {
                acc += beta_cdf(v, i as f64, (l - i + 1) as f64)?;
            }
            Ok(acc / k as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // E P_(i) = i/(L+1); E P_(i)P_(j) = i(j+1)/((L+1)(L+2)) for i <= j.
    fn mean(i: usize, l: usize) -> f64 {
        i as f64 / (l as f64 + 1.0)
    }

    fn cross(i: usize, j: usize, l: usize) -> f64 {
        let (i, j) = (i.min(j) as f64, i.max(j) as f64);
        let l = l as f64;
        i * (j + 1.0) / ((l + 1.0) * (l + 2.0))
    }

    /// Covariance and variance of two distinct shuffled entries when the
    /// last head value is multiplied by `s`.
    fn shuffled_moments(k: usize, l: usize, s: f64) -> (f64, f64) {
        let w = |i: usize| if i == k { s } else { 1.0 };
        let kf = k as f64;
        let m: f64 = (1..=k).map(|i| w(i) * mean(i, l)).sum::<f64>() / kf;
        let sq: f64 = (1..=k).map(|i| w(i) * w(i) * cross(i, i, l)).sum::<f64>() / kf;
        let mut pair = 0.0;
        for i in 1..=k {
            for j in 1..=k {
                if i != j {
                    pair += w(i) * w(j) * cross(i, j, l);
                }
            }
        }
        pair /= kf * (kf - 1.0);
        (pair - m * m, sq - m * m)
    }

    #[test]
    fn correlation_formula_matches_moments() {
        for l in 2..30 {
            for k in 2..=l {
                let (cov, var) = shuffled_moments(k, l, 1.0);
                let got = unordered_min_correlation(k, l).unwrap();
                assert!((cov / var - got).abs() < 1e-12, "k={k} l={l}");
            }
        }
        assert_eq!(unordered_min_correlation(7, 7).unwrap(), 0.0);
        let far = unordered_min_correlation(1, 10_000_000).unwrap();
        assert!((far - 0.5).abs() < 1e-6);
    }

    #[test]
    fn sigma_zeroes_shuffled_covariance() {
        for &(k, l) in &[(2, 4), (3, 10), (5, 6), (10, 100)] {
            let s = scale_factor_sigma(k, l).unwrap();
            let (cov, _) = shuffled_moments(k, l, s);
            assert!(cov.abs() < 1e-13, "k={k} l={l} cov={cov}");
        }
    }

    #[test]
    fn all_ones_give_zero_head() {
        let h = head_from_uniforms(&[1.0, 1.0, 1.0], 5).unwrap();
        assert_eq!(h.values, vec![0.0; 3]);
        assert!(head_from_uniforms(&[0.0], 5).is_err());
    }

    #[test]
    fn head_is_sorted_and_consistent() {
        for idx in 0..50 {
            let h = sample_head_at(6, 40, 3, idx).unwrap();
            assert!(h.values.windows(2).all(|w| w[0] <= w[1]));
            assert!(h.values.iter().all(|&v| v > 0.0 && v < 1.0));
            let lp: f64 = h.values.iter().map(|v| v.ln()).sum();
            assert!((lp - h.log_product).abs() < 1e-12);
        }
        assert_eq!(sample_head(3, 9, 11).unwrap(), sample_head(3, 9, 11).unwrap());
    }

    #[test]
    fn uniformize_single_is_beta_cdf() {
        // k = 1: the map is the Beta(1, L) CDF 1 − (1 − x)^L.
        let s = scale_factor_sigma(1, 5).unwrap();
        let got = uniformize_head(&[0.1 * s], 1, 5).unwrap()[0];
        assert!((got - (1.0 - 0.9f64.powi(5))).abs() < 1e-14);
    }

    #[test]
    fn rtp_null_k_equals_l_mean() {
        let z = sample_rtp_null(4, 4, 20_000, 1).unwrap();
        let m = z.iter().sum::<f64>() / z.len() as f64;
        assert!((m - 4.0).abs() < 4.0 * (4.0f64 / 20_000.0).sqrt());
    }
}
