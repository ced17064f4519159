//! Monte-Carlo studies of type I error and power.
//!
//! Replicate `r` of a study draws its effects, correlation matrix and
//! statistics from streams indexed by `r`, so a study gives the same counts
//! however the replicates are spread over workers.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::adaptive::{AdaptiveSpec, ArtaEngine, ArtpCalibrator};
use crate::correlation::CorrelationMatrix;
use crate::decorrelate::{random_correlation_at, Sidedness, Whitener};
use crate::error::{Error, Result};
use crate::fixed::{art_statistic, fisher, rtp_critical_value, sidak_min, simes, Method, PValueVector};
use crate::numkernel::normal_sf;
use crate::rng::{configure_threads, open01, stream, Domain};

pub const DEFAULT_B: usize = 10_000;
pub const DEFAULT_NULL_RESAMPLES: usize = 10_000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// MVN accuracy used for ART-A inside studies.
pub const STUDY_MVN_SE: f64 = 1e-4;

const PER_STUDY_INDEX: u64 = u64::MAX;
const NULL_OFFSET: u64 = 1 << 62;

/// Law of the per-test means `μ_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum EffectLaw {
    Constant { mu: f64 },
    /// Uniform on `[lo, hi]`, redrawn every replicate unless `per_study`.
    Uniform { lo: f64, hi: f64, per_study: bool },
    /// The first `round(fraction · L)` tests carry `mu`, the rest are null.
    Sparse { fraction: f64, mu: f64 },
}

impl EffectLaw {
    pub fn null() -> Self {
        EffectLaw::Constant { mu: 0.0 }
    }

    pub fn is_null(&self) -> bool {
        match *self {
            EffectLaw::Constant { mu } => mu == 0.0,
            EffectLaw::Uniform { lo, hi, .. } => lo == 0.0 && hi == 0.0,
            EffectLaw::Sparse { mu, .. } => mu == 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            EffectLaw::Constant { mu } if !mu.is_finite() => Err(Error::input("effect size must be finite")),
            EffectLaw::Uniform { lo, hi, .. } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                Err(Error::input(format!("uniform effect bounds [{lo}, {hi}] are invalid")))
            }
            EffectLaw::Sparse { fraction, mu } if !(fraction > 0.0 && fraction <= 1.0 && mu.is_finite()) => {
                Err(Error::input(format!("sparse fraction {fraction} must lie in (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    /// Number of tests carrying the effect under the sparse law.
    pub fn sparse_count(fraction: f64, l: usize) -> usize {
        ((fraction * l as f64).round() as usize).clamp(1, l)
    }

    pub fn means(&self, l: usize, seed: u64, replicate: u64) -> Vec<f64> {
        match *self {
            EffectLaw::Constant { mu } => vec![mu; l],
            EffectLaw::Uniform { lo, hi, per_study } => {
                let index = if per_study { PER_STUDY_INDEX } else { replicate };
                let mut rng = stream(seed, Domain::Effects, index);
                (0..l).map(|_| lo + (hi - lo) * open01(&mut rng)).collect()
            }
            EffectLaw::Sparse { fraction, mu } => {
                let m = Self::sparse_count(fraction, l);
                (0..l).map(|i| if i < m { mu } else { 0.0 }).collect()
            }
        }
    }
}

impl fmt::Display for EffectLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EffectLaw::Constant { mu } => write!(f, "constant({mu})"),
            EffectLaw::Uniform { lo, hi, per_study } => {
                write!(f, "uniform({lo},{hi}){}", if per_study { "/study" } else { "" })
            }
            EffectLaw::Sparse { fraction, mu } => write!(f, "sparse({fraction},{mu})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationSource {
    Independent,
    /// A fresh perturbed equicorrelation matrix for every replicate.
    Random { rho: f64, delta: f64 },
    Fixed(CorrelationMatrix),
}

impl CorrelationSource {
    pub fn is_independent(&self) -> bool {
        matches!(self, CorrelationSource::Independent)
    }

    fn sigma(&self, l: usize, seed: u64, index: u64) -> Result<Option<Cow<'_, CorrelationMatrix>>> {
        match self {
            CorrelationSource::Independent => Ok(None),
            CorrelationSource::Random { rho, delta } => {
                Ok(Some(Cow::Owned(random_correlation_at(l, *rho, *delta, seed, index)?)))
            }
            CorrelationSource::Fixed(m) => Ok(Some(Cow::Borrowed(m))),
        }
    }
}

impl fmt::Display for CorrelationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationSource::Independent => f.write_str("independent"),
            CorrelationSource::Random { rho, delta } => write!(f, "random({rho},{delta})"),
            CorrelationSource::Fixed(m) => write!(f, "fixed({}x{})", m.order(), m.order()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimStudyConfig {
    pub b: usize,
    pub l: usize,
    pub k: usize,
    pub alpha: f64,
    pub effect_law: EffectLaw,
    pub correlation: CorrelationSource,
    pub methods: Vec<Method>,
    /// Adds the whitened variant in correlated studies.
    pub decorrelate: bool,
    pub seed: u64,
    /// Null replicates behind aRTP and the plain correlated variants.
    pub null_resamples: usize,
    /// Ridge applied to Σ before whitening.
    pub ridge: Option<f64>,
}

impl SimStudyConfig {
    pub fn new(l: usize, k: usize) -> Self {
        Self {
            b: DEFAULT_B,
            l,
            k,
            alpha: DEFAULT_ALPHA,
            effect_law: EffectLaw::null(),
            correlation: CorrelationSource::Independent,
            methods: vec![Method::Rtp, Method::Art, Method::Artp, Method::Arta, Method::Simes],
            decorrelate: false,
            seed: 1,
            null_resamples: DEFAULT_NULL_RESAMPLES,
            ridge: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::input("B must be positive"));
        }
        if self.k < 1 || self.k > self.l {
            return Err(Error::Truncation { k: self.k, l: self.l });
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::input(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::input("no methods selected"));
        }
        self.effect_law.validate()?;
        if let CorrelationSource::Fixed(m) = &self.correlation {
            if m.order() != self.l {
                return Err(Error::Dimension { expected: self.l, found: m.order() });
            }
        }
        let needs_null = self.methods.contains(&Method::Artp) || !self.correlation.is_independent();
        if needs_null && self.null_resamples < crate::adaptive::MIN_RESAMPLES {
            return Err(Error::input(format!(
                "at least {} null resamples are needed, got {}",
                crate::adaptive::MIN_RESAMPLES,
                self.null_resamples
            )));
        }
        Ok(())
    }

    fn adaptive_spec(&self) -> Result<AdaptiveSpec> {
        AdaptiveSpec::new(self.k, self.l)?.with_target_se(STUDY_MVN_SE)
    }
}

/// A named study regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
    Table3,
    Table5,
    TabCor1,
    TabCor4,
    MuOpioidPower,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Table1,
        Preset::Table2,
        Preset::Table3,
        Preset::Table5,
        Preset::TabCor1,
        Preset::TabCor4,
        Preset::MuOpioidPower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
            Preset::Table3 => "table3",
            Preset::Table5 => "table5",
            Preset::TabCor1 => "tabcor1",
            Preset::TabCor4 => "tabcor4",
            Preset::MuOpioidPower => "muopioid-power",
        }
    }

    pub fn needs_correlation_file(self) -> bool {
        self == Preset::MuOpioidPower
    }

    /// The study for this regime. `corr` is required by `muopioid-power`
    /// and ignored otherwise.
    pub fn config(self, corr: Option<CorrelationMatrix>) -> Result<SimStudyConfig> {
        let mut cfg = SimStudyConfig::new(100, 10);
        let random = CorrelationSource::Random { rho: 0.5, delta: 1.0 };
        match self {
            Preset::Table1 => cfg.b = 20_000,
            Preset::Table2 => cfg.effect_law = EffectLaw::Constant { mu: 0.5 },
            Preset::Table3 => cfg.effect_law = EffectLaw::Uniform { lo: 0.05, hi: 0.45, per_study: false },
            Preset::Table5 => {
                cfg.l = 1000;
                cfg.effect_law = EffectLaw::Sparse { fraction: 0.05, mu: 1.4 };
            }
            Preset::TabCor1 | Preset::TabCor4 => {
                cfg.l = 10;
                cfg.correlation = random;
                cfg.decorrelate = true;
                if self == Preset::TabCor4 {
                    cfg.b = 5_000;
                    cfg.effect_law = EffectLaw::Uniform { lo: -0.45, hi: 1.3, per_study: false };
                }
            }
            Preset::MuOpioidPower => {
                let m = corr.ok_or_else(|| Error::input("the muopioid-power preset needs --corr <11x11 LD matrix>"))?;
                cfg.l = m.order();
                cfg.k = 7.min(cfg.l);
                cfg.b = 5_000;
                cfg.correlation = CorrelationSource::Fixed(m);
                cfg.decorrelate = true;
                cfg.effect_law = EffectLaw::Uniform { lo: -0.5, hi: 0.2, per_study: false };
            }
        }
        Ok(cfg)
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .iter()
            .copied()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::input(format!("unknown preset {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

/// One simulated data set.
#[derive(Debug, Clone)]
pub struct SimReplicate {
    pub pvalues: PValueVector,
    /// Raw normal statistics `X ~ MVN(μ, Σ)`.
    pub statistics: Vec<f64>,
    pub sigma: Option<CorrelationMatrix>,
}

/// Two-sided p-value of a normal statistic, `2Φ(−|x|)`.
pub fn two_sided_pvalue(x: f64) -> f64 {
    (2.0 * normal_sf(x.abs())).min(1.0)
}

fn draw_statistics(means: &[f64], factor: Option<&DMatrix<f64>>, seed: u64, domain: Domain, index: u64) -> Vec<f64> {
    let mut rng = stream(seed, domain, index);
    let z: Vec<f64> = (0..means.len()).map(|_| rng.sample(StandardNormal)).collect();
    match factor {
        None => means.iter().zip(&z).map(|(m, z)| m + z).collect(),
        Some(f) => {
            let y = f * DVector::from_vec(z);
            means.iter().zip(y.iter()).map(|(m, v)| m + v).collect()
        }
    }
}

/// Replicate `replicate` of the study: `X ~ MVN(μ, Σ)` and `p = 2Φ(−|X|)`.
pub fn generate_pvalues(cfg: &SimStudyConfig, replicate: u64) -> Result<SimReplicate> {
    cfg.validate()?;
    let sigma = cfg.correlation.sigma(cfg.l, cfg.seed, replicate)?;
    let factor = sigma.as_ref().map(|s| s.sqrt_factor());
    let means = cfg.effect_law.means(cfg.l, cfg.seed, replicate);
    let x = draw_statistics(&means, factor.as_ref(), cfg.seed, Domain::Alternative, replicate);
    let p = PValueVector::new(x.iter().map(|&v| two_sided_pvalue(v)).collect())?;
    Ok(SimReplicate { pvalues: p, statistics: x, sigma: sigma.map(Cow::into_owned) })
}

/// Variant of a method in a correlated study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Decorr,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::Decorr => "decorr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub method: Method,
    pub variant: Variant,
    pub rejection_rate: f64,
    pub se: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    pub fn rate(&self, method: Method, variant: Variant) -> Option<f64> {
        self.row(method, variant).map(|r| r.rejection_rate)
    }

    pub fn row(&self, method: Method, variant: Variant) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.method == method && r.variant == variant)
    }

    /// CSV with columns `method,variant,rejection_rate,se,B,seed`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize to CSV");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8")
    }
}

fn rows_from_counts(cfg: &SimStudyConfig, keys: &[(Method, Variant)], counts: &[u64]) -> StudyReport {
    let b = cfg.b as f64;
    let rows = keys
        .iter()
        .zip(counts)
        .map(|(&(method, variant), &c)| {
            let rate = c as f64 / b;
            StudyRow { method, variant, rejection_rate: rate, se: (rate * (1.0 - rate) / b).sqrt(), b: cfg.b, seed: cfg.seed }
        })
        .collect();
    StudyReport { rows }
}

/// Analytic combiners for independent p-values, prepared once per study.
struct Panel {
    k: usize,
    l: usize,
    alpha: f64,
    arta: Option<(ArtaEngine, f64)>,
    artp: Option<ArtpCalibrator>,
    rtp_critical: Option<f64>,
}

impl Panel {
    fn new(cfg: &SimStudyConfig, artp: Option<ArtpCalibrator>) -> Result<Self> {
        let arta = if cfg.methods.contains(&Method::Arta) {
            let engine = ArtaEngine::new(cfg.adaptive_spec()?)?;
            let critical = engine.critical_min_p(cfg.alpha, cfg.seed)?;
            Some((engine, critical))
        } else {
            None
        };
        let rtp_critical = if cfg.methods.contains(&Method::Rtp) {
            Some(rtp_critical_value(cfg.alpha, cfg.k, cfg.l)?)
        } else {
            None
        };
        Ok(Self { k: cfg.k, l: cfg.l, alpha: cfg.alpha, arta, artp, rtp_critical })
    }

    /// Whether `method` rejects at level alpha, treating `p` as independent.
    fn rejects(&self, method: Method, p: &PValueVector) -> Result<bool> {
        let head = &p.sorted()[..self.k];
        let pc = match method {
            Method::Fisher => fisher(p)?.p_combined,
            Method::Sidak => sidak_min(head[0], self.l),
            Method::Bonferroni => crate::fixed::bonferroni_min(head[0], self.l),
            Method::Simes => simes(p)?.p_combined,
            Method::Rtp => return Ok(-p.log_product(self.k) >= self.rtp_critical.expect("critical value prepared")),
            Method::Art => art_pvalue(head, self.k, self.l)?,
            Method::Artp => self.artp.as_ref().expect("calibrator prepared").pvalue_sorted(head)?.p_combined,
            Method::Arta => {
                let (engine, critical) = self.arta.as_ref().expect("engine prepared");
                let min_p = crate::adaptive::arta_statistic_sorted(head, engine.spec())?.min_p;
                return Ok(min_p <= *critical);
            }
        };
        Ok(pc <= self.alpha)
    }

    /// A score that orders data sets the way the method's p-value does
    /// (smaller is more significant).
    fn score(&self, method: Method, p: &PValueVector) -> Result<f64> {
        let head = &p.sorted()[..self.k];
        Ok(match method {
            Method::Fisher => p.log_product(p.len()),
            Method::Sidak | Method::Bonferroni => head[0],
            Method::Simes => simes(p)?.p_combined,
            Method::Rtp => p.log_product(self.k),
            Method::Art => {
                if self.k == 1 {
                    head[0]
                } else {
                    -art_statistic(head[..self.k - 1].iter().map(|v| v.ln()).sum(), head[self.k - 1], self.k, self.l)?
                }
            }
            Method::Arta => {
                let spec = self.arta.as_ref().expect("engine prepared").0.spec();
                crate::adaptive::arta_statistic_sorted(head, spec)?.min_p
            }
            Method::Artp => self.artp.as_ref().expect("calibrator prepared").pvalue_sorted(head)?.p_combined,
        })
    }
}

fn art_pvalue(head: &[f64], k: usize, l: usize) -> Result<f64> {
    if k == 1 {
        return Ok(sidak_min(head[0], l));
    }
    let lambda = crate::fixed::art_shape(k, l)?;
    let a = art_statistic(head[..k - 1].iter().map(|v| v.ln()).sum(), head[k - 1], k, l)?;
    crate::numkernel::gamma_sf(a.max(0.0), k as f64 + lambda - 1.0)
}

fn sum_counts(per_rep: Vec<Vec<bool>>, width: usize) -> Vec<u64> {
    let mut counts = vec![0u64; width];
    for rep in per_rep {
        for (c, hit) in counts.iter_mut().zip(rep) {
            *c += hit as u64;
        }
    }
    counts
}

/// Rejection rates of every configured method. Correlated sources are
/// handed to [`run_correlated_study`].
pub fn run_study(cfg: &SimStudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if !cfg.correlation.is_independent() {
        return run_correlated_study(cfg);
    }
    configure_threads();
    let artp = if cfg.methods.contains(&Method::Artp) {
        Some(ArtpCalibrator::new(cfg.adaptive_spec()?, cfg.null_resamples, cfg.seed)?)
    } else {
        None
    };
    let panel = Panel::new(cfg, artp)?;
    let per_rep: Vec<Vec<bool>> = (0..cfg.b as u64)
        .into_par_iter()
        .map(|r| {
            let rep = generate_pvalues(cfg, r)?;
            cfg.methods.iter().map(|&m| panel.rejects(m, &rep.pvalues)).collect()
        })
        .collect::<Result<_>>()?;
    let keys: Vec<(Method, Variant)> = cfg.methods.iter().map(|&m| (m, Variant::Plain)).collect();
    Ok(rows_from_counts(cfg, &keys, &sum_counts(per_rep, keys.len())))
}

/// Plain and whitened variants for correlated p-values.
///
/// Plain variants are calibrated against null replicates drawn with the same
/// correlation source; Simes is used at face value. The whitened variant
/// applies `H = Q Λ^{-1/2} Qᵀ` of each replicate's Σ to the statistics and
/// uses the independence formulas.
pub fn run_correlated_study(cfg: &SimStudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    if cfg.correlation.is_independent() {
        return Err(Error::input("a correlated study needs a random or fixed correlation source"));
    }
    configure_threads();
    let spec = cfg.adaptive_spec()?;
    let k = cfg.k;

    let fixed_factor = match &cfg.correlation {
        CorrelationSource::Fixed(m) => Some(m.sqrt_factor()),
        _ => None,
    };
    let fixed_whitener = match &cfg.correlation {
        CorrelationSource::Fixed(m) if cfg.decorrelate => Some(whitener_for(m, cfg.ridge)?),
        _ => None,
    };

    // null replicates under the same correlation source
    let null_reps: Vec<PValueVector> = (0..cfg.null_resamples as u64)
        .into_par_iter()
        .map(|r| {
            let index = NULL_OFFSET | r;
            let sigma = cfg.correlation.sigma(cfg.l, cfg.seed, index)?;
            let factor = match (&fixed_factor, &sigma) {
                (Some(f), _) => Cow::Borrowed(f),
                (None, Some(s)) => Cow::Owned(s.sqrt_factor()),
                (None, None) => unreachable!("correlated source"),
            };
            let x = draw_statistics(&vec![0.0; cfg.l], Some(&factor), cfg.seed, Domain::NullCalibration, r);
            PValueVector::new(x.iter().map(|&v| two_sided_pvalue(v)).collect())
        })
        .collect::<Result<_>>()?;

    let plain_artp = if cfg.methods.contains(&Method::Artp) {
        let rows: Vec<Vec<f64>> = null_reps.iter().map(|p| p.sorted()[..k].to_vec()).collect();
        Some(ArtpCalibrator::from_null_rows(spec.clone(), &rows)?)
    } else {
        None
    };
    let plain = Panel::new(cfg, plain_artp)?;
    let calibrated: Vec<Method> = cfg.methods.iter().copied().filter(|m| !matches!(m, Method::Simes | Method::Artp)).collect();
    let null_scores: Vec<Vec<f64>> = {
        let per_rep: Vec<Vec<f64>> = null_reps
            .par_iter()
            .map(|p| calibrated.iter().map(|&m| plain.score(m, p)).collect())
            .collect::<Result<_>>()?;
        let mut cols: Vec<Vec<f64>> = (0..calibrated.len()).map(|c| per_rep.iter().map(|r| r[c]).collect()).collect();
        for c in &mut cols {
            c.sort_by(f64::total_cmp);
        }
        cols
    };
    let nb1 = (cfg.null_resamples + 1) as f64;

    let decorr = if cfg.decorrelate {
        let artp = if cfg.methods.contains(&Method::Artp) {
            Some(ArtpCalibrator::new(spec.clone(), cfg.null_resamples, cfg.seed)?)
        } else {
            None
        };
        Some(Panel::new(cfg, artp)?)
    } else {
        None
    };

    let mut keys: Vec<(Method, Variant)> = cfg.methods.iter().map(|&m| (m, Variant::Plain)).collect();
    if cfg.decorrelate {
        keys.extend(cfg.methods.iter().map(|&m| (m, Variant::Decorr)));
    }

    let per_rep: Vec<Vec<bool>> = (0..cfg.b as u64)
        .into_par_iter()
        .map(|r| {
            let rep = generate_pvalues_with(cfg, r, fixed_factor.as_ref())?;
            let mut out = Vec::with_capacity(keys.len());
            for &m in &cfg.methods {
                let hit = match m {
                    Method::Simes | Method::Artp => plain.rejects(m, &rep.pvalues)?,
                    _ => {
                        let c = calibrated.iter().position(|&x| x == m).expect("calibrated method");
                        let s = plain.score(m, &rep.pvalues)?;
                        let count = null_scores[c].partition_point(|&v| v <= s);
                        (count + 1) as f64 / nb1 <= cfg.alpha
                    }
                };
                out.push(hit);
            }
            if let Some(panel) = &decorr {
                let owned;
                let whitener = match &fixed_whitener {
                    Some(w) => w,
                    None => {
                        owned = whitener_for(rep.sigma.as_ref().expect("correlated replicate"), cfg.ridge)?;
                        &owned
                    }
                };
                let pe = PValueVector::new(whitener.decorrelate_scores(&rep.statistics, Sidedness::TwoSided)?)?;
                for &m in &cfg.methods {
                    out.push(panel.rejects(m, &pe)?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(rows_from_counts(cfg, &keys, &sum_counts(per_rep, keys.len())))
}

fn whitener_for(sigma: &CorrelationMatrix, ridge: Option<f64>) -> Result<Whitener> {
    match ridge {
        Some(eps) => Whitener::new(&sigma.with_ridge(eps)?),
        None => Whitener::new(sigma),
    }
}

fn generate_pvalues_with(cfg: &SimStudyConfig, replicate: u64, factor: Option<&DMatrix<f64>>) -> Result<SimReplicate> {
    let sigma = cfg.correlation.sigma(cfg.l, cfg.seed, replicate)?;
    let owned;
    let f = match (factor, &sigma) {
        (Some(f), _) => Some(f),
        (None, Some(s)) => {
            owned = s.sqrt_factor();
            Some(&owned)
        }
        (None, None) => None,
    };
    let means = cfg.effect_law.means(cfg.l, cfg.seed, replicate);
    let x = draw_statistics(&means, f, cfg.seed, Domain::Alternative, replicate);
    let p = PValueVector::new(x.iter().map(|&v| two_sided_pvalue(v)).collect())?;
    Ok(SimReplicate { pvalues: p, statistics: x, sigma: sigma.map(Cow::into_owned) })
}
