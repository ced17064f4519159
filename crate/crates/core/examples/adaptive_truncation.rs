use artcombine::{artp_empirical, arta_pvalue, arta_statistic, AdaptiveSpec, PValueVector};

fn main() -> artcombine::Result<()> {
    let p = PValueVector::new(vec![
        0.0004, 0.006, 0.011, 0.03, 0.09, 0.2, 0.33, 0.41, 0.58, 0.66, 0.72, 0.8, 0.88, 0.93, 0.99,
    ])?;
    let spec = AdaptiveSpec::new(8, p.total())?;

    let stat = arta_statistic(&p, &spec)?;
    println!("{:>3} {:>10}", "k", "marginal");
    for (k, mp) in spec.candidate_ks.iter().zip(&stat.marginal_ps) {
        println!("{k:>3} {mp:>10.5}");
    }
    println!("min marginal {:.5} at k = {}", stat.min_p, stat.argmin_k);

    let arta = arta_pvalue(&p, &spec, 7)?;
    let artp = artp_empirical(&p, &spec, 20_000, 7)?;
    println!("ART-A {:.5}", arta.p_combined);
    println!("aRTP  {:.5}", artp.p_combined);

    let sparse = spec.clone().with_sparse_weights()?;
    println!("ART-A, sqrt(k/m) weights {:.5}", arta_pvalue(&p, &sparse, 7)?.p_combined);
    Ok(())
}
