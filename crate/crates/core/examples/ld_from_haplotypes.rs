use artcombine::{ld_matrix_from_haplotypes, HaplotypeTable};

const HAPLOTYPES: &str = "\
pattern,freq
1100,0.30
0011,0.25
1000,0.15
0110,0.20
0000,0.10
";

fn main() -> artcombine::Result<()> {
    let table = HaplotypeTable::parse_csv(HAPLOTYPES)?;
    let ld = ld_matrix_from_haplotypes(&table)?;
    print!("{}", ld.to_csv());
    println!("smallest eigenvalue {:.4}", ld.min_eigenvalue());
    Ok(())
}
