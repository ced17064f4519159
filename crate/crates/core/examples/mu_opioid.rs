//! Plain and decorrelated combined p-values for the bundled 11 SNPs, k = 2..11.
//!
//! Usage: `cargo run --example mu_opioid -- [ld.csv]`. Without an LD matrix
//! the identity is used and both halves of the table agree.

use artcombine::cli::parse_values;
use artcombine::{
    art, artp_empirical, arta_pvalue, decorrelate_pvalues, rtp_exact, AdaptiveSpec, CorrelationMatrix, PValueVector,
    Sidedness, TruncationSpec,
};

fn main() -> artcombine::Result<()> {
    let text = include_str!("mu_opioid_pvals.csv");
    let p = PValueVector::new(parse_values(text)?)?;
    let l = p.total();
    let sigma = match std::env::args().nth(1) {
        Some(path) => CorrelationMatrix::read_csv(path)?,
        None => CorrelationMatrix::identity(l),
    };
    let white = decorrelate_pvalues(&p, None, &sigma, Sidedness::OneSided)?;

    println!("{:>3} {:>8} {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8} {:>8}", "k", "RTP", "ART", "aRTP", "ART-A", "RTP", "ART", "aRTP", "ART-A");
    for k in 2..=l {
        let spec = TruncationSpec::new(k, l)?;
        let adaptive = AdaptiveSpec::new(k, l)?;
        let mut row = format!("{k:>3}");
        for (i, v) in [&p, &white].into_iter().enumerate() {
            if i == 1 {
                row.push_str(" |");
            }
            row.push_str(&format!(
                " {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                rtp_exact(v, spec)?.p_combined,
                art(v, spec)?.p_combined,
                artp_empirical(v, &adaptive, 5_000, 1)?.p_combined,
                arta_pvalue(v, &adaptive, 1)?.p_combined
            ));
        }
        println!("{row}");
    }
    Ok(())
}
