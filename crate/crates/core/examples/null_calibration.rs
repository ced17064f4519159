use artcombine::simharness::{run_study, SimStudyConfig};

fn main() -> artcombine::Result<()> {
    let b = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2_000);
    let mut cfg = SimStudyConfig::new(100, 10);
    cfg.b = b;
    let report = run_study(&cfg)?;
    print!("{}", report.to_csv());
    Ok(())
}
