use artcombine::decorrelate::Whitener;
use artcombine::{art, decorrelate_pvalues, random_correlation, PValueVector, Sidedness, TruncationSpec};

fn main() -> artcombine::Result<()> {
    let l = 8;
    let sigma = random_correlation(l, 0.5, 1.0, 3)?;
    let h = Whitener::new(&sigma)?;
    let check = h.matrix().transpose() * sigma.entries() * h.matrix();
    let dev = (check - nalgebra::DMatrix::<f64>::identity(l, l)).amax();
    println!("max |H'ΣH - I| = {dev:.2e}");

    let p = PValueVector::new(vec![0.01, 0.02, 0.015, 0.3, 0.45, 0.6, 0.04, 0.8])?;
    let signs = [1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0];
    let white = decorrelate_pvalues(&p, Some(&signs), &sigma, Sidedness::TwoSided)?;

    let spec = TruncationSpec::new(4, l)?;
    println!("plain   ART(4) {:.5}", art(&p, spec)?.p_combined);
    println!("decorr  ART(4) {:.5}", art(&white, spec)?.p_combined);
    println!("whitened p-values {:?}", white.values().iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>());
    Ok(())
}
