//! Combined p-values for the smallest `k` of `L` association tests.
//!
//! The crate provides the exact rank truncated product (RTP) distribution
//! as a single bounded integral, the augmented rank truncation statistic
//! (ART) whose null law is a single gamma, two adaptive variants that pick
//! the truncation point (ART-A, analytic via the multivariate normal of
//! partial sums; aRTP, by single-layer resampling), and the classical
//! Fisher/Šidák/Bonferroni/Simes baselines.
//!
//! Correlated statistics are handled by whitening them with the symmetric
//! inverse square root of their correlation matrix before combining
//! ([`decorrelate`]). The [`simharness`] module reproduces Type I error and
//! power studies, and [`orderstats`] holds the order-statistic samplers used
//! as brute-force oracles.
//!
//! ```
//! use artcombine::{art, rtp_exact, PValueVector, TruncationSpec};
//!
//! let p = PValueVector::new(vec![0.7, 0.07, 0.15, 0.12, 0.08, 0.09]).unwrap();
//! let spec = TruncationSpec::new(4, 6).unwrap();
//! let rtp = rtp_exact(&p, spec).unwrap();
//! let art = art(&p, spec).unwrap();
//! assert!((rtp.p_combined - 0.047).abs() < 5e-4);
//! assert!((art.p_combined - 0.045).abs() < 5e-4);
//! ```

pub mod adaptive;
pub mod cli;
pub mod correlation;
pub mod decorrelate;
pub mod error;
pub mod fixed;
pub mod numkernel;
pub mod orderstats;
pub mod rng;
pub mod simharness;

pub use adaptive::{
    artp_empirical, arta_pvalue, arta_statistic, z_transform, AdaptiveSpec, ArtaEngine, ArtaStatistic, ArtpCalibrator,
};
pub use correlation::CorrelationMatrix;
pub use decorrelate::{decorrelate_pvalues, ld_matrix_from_haplotypes, random_correlation, whiten, HaplotypeTable, Sidedness};
pub use error::{Error, Result};
pub use fixed::{
    art, bonferroni_min, fisher, rtp_exact, rtp_exact_pair, sidak_min, simes, CombinedResult, Method, PValueVector,
    TruncationSpec,
};
