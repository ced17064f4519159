use artcombine::{art, rtp_exact, PValueVector, TruncationSpec};

fn main() -> artcombine::Result<()> {
    let p = PValueVector::new(vec![0.7, 0.07, 0.15, 0.12, 0.08, 0.09])?;
    let spec = TruncationSpec::new(4, 6)?;

    let rtp = rtp_exact(&p, spec)?;
    let art = art(&p, spec)?;
    println!("RTP  statistic {:>9.5}  p = {:.4}", rtp.statistic, rtp.p_combined);
    println!("ART  statistic {:>9.5}  p = {:.4}", art.statistic, art.p_combined);
    for (name, value) in &art.diagnostics {
        println!("  art.{name} = {value}");
    }
    Ok(())
}
