//! Every fixed-k combiner on one vector, for a range of truncation points.

use artcombine::{art, bonferroni_min, fisher, rtp_exact, sidak_min, simes, PValueVector, TruncationSpec};

fn main() -> artcombine::Result<()> {
    let p = PValueVector::new(vec![0.003, 0.02, 0.04, 0.11, 0.27, 0.35, 0.52, 0.64, 0.81, 0.97])?;
    let l = p.total();
    let p1 = p.sorted()[0];

    println!("Fisher     {:.5}", fisher(&p)?.p_combined);
    println!("Simes      {:.5}", simes(&p)?.p_combined);
    println!("Sidak      {:.5}", sidak_min(p1, l));
    println!("Bonferroni {:.5}", bonferroni_min(p1, l));
    println!();
    println!("{:>3} {:>9} {:>9}", "k", "RTP", "ART");
    for k in 1..=l {
        let spec = TruncationSpec::new(k, l)?;
        println!("{k:>3} {:>9.5} {:>9.5}", rtp_exact(&p, spec)?.p_combined, art(&p, spec)?.p_combined);
    }

    // Only the head is needed by the truncated methods.
    let head = PValueVector::with_total(vec![0.003, 0.02, 0.04], l)?;
    let spec = TruncationSpec::new(3, l)?;
    println!("\nhead-only RTP(3) {:.5}", rtp_exact(&head, spec)?.p_combined);
    Ok(())
}
