use artcombine::simharness::{run_study, EffectLaw, SimStudyConfig, Variant};
use artcombine::Method;

fn main() -> artcombine::Result<()> {
    let b = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    println!("{:>5} {:>7} {:>7} {:>7} {:>7} {:>7}", "mu", "RTP", "ART", "aRTP", "ART-A", "Simes");
    for mu in [0.3, 0.5, 0.7] {
        let mut cfg = SimStudyConfig::new(100, 10);
        cfg.b = b;
        cfg.effect_law = EffectLaw::Constant { mu };
        let r = run_study(&cfg)?;
        let rate = |m| r.rate(m, Variant::Plain).unwrap_or(f64::NAN);
        println!(
            "{mu:>5} {:>7.3} {:>7.3} {:>7.3} {:>7.3} {:>7.3}",
            rate(Method::Rtp),
            rate(Method::Art),
            rate(Method::Artp),
            rate(Method::Arta),
            rate(Method::Simes)
        );
    }
    Ok(())
}
