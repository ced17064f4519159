//! Head samplers and the scale-and-shuffle decorrelation of the smallest values.

use artcombine::orderstats::{sample_head, sample_heads, scale_factor_sigma, unordered_min_correlation};

fn main() -> artcombine::Result<()> {
    let (k, l) = (5, 20);
    let h = sample_head(k, l, 11)?;
    println!("one head: {:?}  ln product {:.3}", h.values, h.log_product);

    let b = 200_000;
    let rows = sample_heads(k, l, b, 12)?;
    for j in 0..k {
        let mean = rows.chunks_exact(k).map(|r| r[j]).sum::<f64>() / b as f64;
        println!("E P_({}) = {:.4}  (theory {:.4})", j + 1, mean, (j + 1) as f64 / (l + 1) as f64);
    }
    println!("shuffled-pair correlation {:.4}", unordered_min_correlation(k, l)?);
    println!("scale factor for the largest value {:.4}", scale_factor_sigma(k, l)?);
    Ok(())
}
