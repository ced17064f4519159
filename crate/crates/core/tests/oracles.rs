//! Independent oracles for the analytic routines.

use artcombine::fixed::rtp_cdf;
use artcombine::orderstats::sample_heads;
use artcombine::rng::{open01, stream, Domain};
use artcombine::{art, fisher, random_correlation, rtp_exact, simes, whiten, PValueVector, TruncationSpec};
use nalgebra::{DMatrix, DVector};

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// Upper tail of Gamma(k, 1) for integer k by the Poisson sum.
fn gamma_tail_int(x: f64, k: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (0..k).map(|j| (j as f64 * x.ln() - x - ln_factorial(j)).exp()).sum()
}

/// `Pr(W_k <= w)` by conditioning on `P_(k+1) = t` and Simpson's rule in `t`.
fn rtp_simpson(w: f64, k: usize, l: usize) -> f64 {
    let t0 = w.powf(1.0 / k as f64);
    let ln_norm = ln_factorial(l) - ln_factorial(k) - ln_factorial(l - k - 1);
    let density = |t: f64| {
        if t <= 0.0 || t >= 1.0 {
            return if t >= 1.0 && l - k == 1 { (ln_norm + k as f64 * t.ln()).exp() } else { 0.0 };
        }
        (ln_norm + k as f64 * t.ln() + (l - k - 1) as f64 * (1.0 - t).ln()).exp()
    };
    let integrand = |t: f64| density(t) * gamma_tail_int(k as f64 * t.ln() - w.ln(), k);
    let n = 200_000;
    let h = (1.0 - t0) / n as f64;
    let mut acc = integrand(t0) + integrand(1.0);
    for i in 1..n {
        let t = t0 + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * integrand(t);
    }
    let below: f64 = {
        let m = 200_000;
        let hb = t0 / m as f64;
        let mut s = density(0.0) + density(t0);
        for i in 1..m {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * density(i as f64 * hb);
        }
        s * hb / 3.0
    };
    below + acc * h / 3.0
}

#[test]
fn rtp_matches_conditional_simpson_oracle() {
    for &(w, k, l) in &[(1e-3, 2, 5), (5.67e-5, 4, 6), (1e-8, 5, 20), (0.2, 3, 4), (1e-12, 10, 100), (0.01, 2, 3)] {
        let got = rtp_cdf(-f64::ln(w), k, l).unwrap().probability;
        let want = rtp_simpson(w, k, l);
        assert!((got - want).abs() <= 1e-7 + 1e-6 * want, "w={w} k={k} L={l}: {got} vs {want}");
    }
}

#[test]
fn golden_rtp_matches_oracle() {
    let w = 0.07 * 0.08 * 0.09 * 0.12;
    let want = rtp_simpson(w, 4, 6);
    let p = PValueVector::new(vec![0.7, 0.07, 0.15, 0.12, 0.08, 0.09]).unwrap();
    let got = rtp_exact(&p, TruncationSpec::new(4, 6).unwrap()).unwrap().p_combined;
    assert!((got - want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn fisher_matches_poisson_sum() {
    let values = vec![0.01, 0.2, 0.3, 0.9, 0.05];
    let stat: f64 = -values.iter().map(|v: &f64| v.ln()).sum::<f64>();
    let p = fisher(&PValueVector::new(values).unwrap()).unwrap().p_combined;
    assert!((p - gamma_tail_int(stat, 5)).abs() < 1e-13);
}

fn ks_uniform(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

fn null_heads(k: usize, l: usize, b: usize, seed: u64) -> Vec<PValueVector> {
    sample_heads(k, l, b, seed)
        .unwrap()
        .chunks_exact(k)
        .map(|h| PValueVector::with_total(h.to_vec(), l).unwrap())
        .collect()
}

#[test]
fn art_is_uniform_under_the_null() {
    let b = 100_000;
    let spec = TruncationSpec::new(4, 6).unwrap();
    let ps: Vec<f64> = null_heads(4, 6, b, 71).iter().map(|p| art(p, spec).unwrap().p_combined).collect();
    let d = ks_uniform(ps);
    assert!(d < 1.63 / (b as f64).sqrt(), "KS distance {d}");
}

#[test]
fn art_is_uniform_for_long_vectors() {
    let b = 50_000;
    let spec = TruncationSpec::new(10, 100).unwrap();
    let ps: Vec<f64> = null_heads(10, 100, b, 72).iter().map(|p| art(p, spec).unwrap().p_combined).collect();
    let d = ks_uniform(ps);
    assert!(d < 1.63 / (b as f64).sqrt(), "KS distance {d}");
}

#[test]
fn simes_is_uniform_under_the_null() {
    let b = 50_000;
    let mut rng = stream(73, Domain::Generic, 0);
    let ps: Vec<f64> = (0..b)
        .map(|_| {
            let v: Vec<f64> = (0..8).map(|_| open01(&mut rng)).collect();
            simes(&PValueVector::new(v).unwrap()).unwrap().p_combined
        })
        .collect();
    let d = ks_uniform(ps);
    assert!(d < 1.63 / (b as f64).sqrt(), "KS distance {d}");
}

#[test]
fn whitened_samples_have_identity_covariance() {
    let l = 6;
    let sigma = random_correlation(l, 0.5, 1.0, 74).unwrap();
    let chol = sigma.entries().clone().cholesky().expect("positive definite");
    let b = 100_000;
    let mut rng = stream(75, Domain::Generic, 0);
    let mut cov = DMatrix::<f64>::zeros(l, l);
    for _ in 0..b {
        let z = DVector::from_iterator(
            l,
            (0..l).map(|_| {
                let (u1, u2) = (open01(&mut rng), open01(&mut rng));
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            }),
        );
        let y = chol.l() * z;
        let x = DVector::from_vec(whiten(y.as_slice(), &sigma).unwrap());
        cov += &x * x.transpose();
    }
    cov /= b as f64;
    let dev = (cov - DMatrix::<f64>::identity(l, l)).amax();
    assert!(dev < 5.0 * (2.0 / b as f64).sqrt(), "max deviation {dev}");
}
