//! Rectangle probabilities `Pr(T_1 <= b_1, ..., T_d <= b_d)` for
//! `T ~ MVN(0, R)`.
//!
//! Genz's separation-of-variables transform turns the probability into an
//! integral over the unit cube, which is then estimated with randomly
//! shifted Richtmyer lattice rules (tent-periodized). Each round doubles the
//! lattice size; rounds are pooled by inverse variance until the standard
//! error reaches the target or the point budget is spent.

use rand::Rng;

use super::normal::{normal_cdf, normal_inv_cdf};
use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::rng::{self, Domain};

pub const DEFAULT_TARGET_SE: f64 = 1e-4;
pub const DEFAULT_MAX_POINTS: usize = 1 << 20;
const SHIFTS_PER_ROUND: usize = 10;
const FIRST_ROUND_POINTS: usize = 256;
const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct MvnSpec {
    pub correlation: CorrelationMatrix,
    pub upper_bounds: Vec<f64>,
    pub target_se: f64,
    pub max_points: usize,
    pub seed: u64,
}

impl MvnSpec {
    pub fn new(correlation: CorrelationMatrix, upper_bounds: Vec<f64>, seed: u64) -> Result<Self> {
        let spec = Self {
            correlation,
            upper_bounds,
            target_se: DEFAULT_TARGET_SE,
            max_points: DEFAULT_MAX_POINTS,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dimension(&self) -> usize {
        self.upper_bounds.len()
    }

    fn validate(&self) -> Result<()> {
        if self.upper_bounds.is_empty() {
            return Err(Error::input("MVN dimension must be >= 1"));
        }
        if self.correlation.order() != self.upper_bounds.len() {
            return Err(Error::Dimension { expected: self.correlation.order(), found: self.upper_bounds.len() });
        }
        if !(self.target_se > 0.0) {
            return Err(Error::domain("MVN target_se must be > 0"));
        }
        if self.max_points < 1000 {
            return Err(Error::domain("MVN max_points must be >= 1000"));
        }
        if self.upper_bounds.iter().any(|b| b.is_nan()) {
            return Err(Error::domain("MVN bounds must not be NaN"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnEstimate {
    pub probability: f64,
    pub se: f64,
    pub points: usize,
    /// False when `max_points` ran out before `target_se` was reached.
    pub converged: bool,
}

/// One-shot evaluation of an [`MvnSpec`].
pub fn mvn_rectangle(spec: &MvnSpec) -> Result<MvnEstimate> {
    spec.validate()?;
    MvnEvaluator::new(&spec.correlation)?.evaluate(&spec.upper_bounds, spec.target_se, spec.max_points, spec.seed)
}

/// Holds a PSD-repaired correlation and its Cholesky factor so repeated
/// evaluations against the same matrix skip the factorization.
#[derive(Debug, Clone)]
pub struct MvnEvaluator {
    dim: usize,
    corr: Vec<f64>,
    chol: Vec<f64>,
}

impl MvnEvaluator {
    pub fn new(correlation: &CorrelationMatrix) -> Result<Self> {
        let repaired = correlation.psd_repaired()?;
        let dim = repaired.order();
        let corr: Vec<f64> = (0..dim * dim).map(|k| repaired.get(k / dim, k % dim)).collect();
        let chol = cholesky_semidefinite(&corr, dim);
        Ok(Self { dim, corr, chol })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, upper_bounds: &[f64], target_se: f64, max_points: usize, seed: u64) -> Result<MvnEstimate> {
        let d = self.dim;
        if upper_bounds.len() != d {
            return Err(Error::Dimension { expected: d, found: upper_bounds.len() });
        }
        if upper_bounds.iter().any(|&b| b == f64::NEG_INFINITY) {
            return Ok(MvnEstimate { probability: 0.0, se: 0.0, points: 0, converged: true });
        }

        // Tightest bounds first.
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| upper_bounds[a].total_cmp(&upper_bounds[b]));
        let chol_owned;
        let chol: &[f64] = if order.iter().enumerate().all(|(i, &o)| i == o) {
            &self.chol
        } else {
            let permuted: Vec<f64> = (0..d * d).map(|k| self.corr[order[k / d] * d + order[k % d]]).collect();
            chol_owned = cholesky_semidefinite(&permuted, d);
            &chol_owned
        };
        let bounds: Vec<f64> = order.iter().map(|&i| upper_bounds[i]).collect();

        if d == 1 {
            let p = conditional_cdf(bounds[0], 0.0, chol[0]);
            return Ok(MvnEstimate { probability: p, se: 0.0, points: 1, converged: true });
        }

        let generators = richtmyer_generators(d - 1);
        let mut n = FIRST_ROUND_POINTS;
        let mut used = 0usize;
        let mut weight_sum = 0.0;
        let mut weighted_mean = 0.0;
        let mut round = 0u64;
        let mut y = vec![0.0; d];
        let mut shift = vec![0.0; d - 1];
        let mut w = vec![0.0; d - 1];
        loop {
            let mut rng = rng::stream(seed, Domain::Mvn, round);
            let mut means = [0.0; SHIFTS_PER_ROUND];
            for m in means.iter_mut() {
                for s in shift.iter_mut() {
                    *s = rng.random::<f64>();
                }
                let mut acc = 0.0;
                for i in 1..=n {
                    for j in 0..d - 1 {
                        let x = (i as f64 * generators[j] + shift[j]).fract();
                        w[j] = (2.0 * x - 1.0).abs();
                    }
                    acc += genz_integrand(&w, &bounds, chol, d, &mut y);
                }
                *m = acc / n as f64;
            }
            used += n * SHIFTS_PER_ROUND;
            let mean = means.iter().sum::<f64>() / SHIFTS_PER_ROUND as f64;
            let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / ((SHIFTS_PER_ROUND - 1) * SHIFTS_PER_ROUND) as f64;
            if var <= 0.0 {
                // Integrand is constant on every shifted lattice.
                return Ok(MvnEstimate { probability: mean.clamp(0.0, 1.0), se: 0.0, points: used, converged: true });
            }
            weight_sum += 1.0 / var;
            weighted_mean += mean / var;
            let se = (1.0 / weight_sum).sqrt();
            let estimate = weighted_mean / weight_sum;
            let next = n * 2 * SHIFTS_PER_ROUND;
            if se <= target_se || used + next > max_points {
                return Ok(MvnEstimate {
                    probability: estimate.clamp(0.0, 1.0),
                    se,
                    points: used,
                    converged: se <= target_se,
                });
            }
            n *= 2;
            round += 1;
        }
    }
}

#[inline]
fn conditional_cdf(bound: f64, shift: f64, pivot: f64) -> f64 {
    if pivot > 0.0 {
        normal_cdf((bound - shift) / pivot)
    } else if shift <= bound {
        1.0
    } else {
        0.0
    }
}

fn genz_integrand(w: &[f64], bounds: &[f64], chol: &[f64], d: usize, y: &mut [f64]) -> f64 {
    let mut e = conditional_cdf(bounds[0], 0.0, chol[0]);
    let mut f = e;
    for i in 1..d {
        let pivot_prev = chol[(i - 1) * d + (i - 1)];
        y[i - 1] = if pivot_prev > 0.0 {
            let u = (w[i - 1] * e).clamp(1e-300, 1.0 - 1e-16);
            normal_inv_cdf(u).unwrap_or(0.0)
        } else {
            0.0
        };
        let mut s = 0.0;
        for j in 0..i {
            s += chol[i * d + j] * y[j];
        }
        e = conditional_cdf(bounds[i], s, chol[i * d + i]);
        f *= e;
        if f == 0.0 {
            break;
        }
    }
    f
}

/// Lower-triangular factor (row-major) that tolerates zero pivots.
fn cholesky_semidefinite(a: &[f64], d: usize) -> Vec<f64> {
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if diag <= PIVOT_TOLERANCE {
            continue;
        }
        let pivot = diag.sqrt();
        l[j * d + j] = pivot;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / pivot;
        }
    }
    l
}

fn richtmyer_generators(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while out.len() < n {
        if (2..candidate).take_while(|p| p * p <= candidate).all(|p| candidate % p != 0) {
            out.push((candidate as f64).sqrt().fract());
        }
        candidate += 1;
    }
    out
}
