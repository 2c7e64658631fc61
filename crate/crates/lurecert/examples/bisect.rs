//! Finds the largest certifiable slope bound for a second-order lag.

use lurecert::{bisect_alpha, ClassTag, SearchConfig, SearchStrategy, TransferFunction};

fn main() -> lurecert::Result<()> {
    let g = TransferFunction::new(vec![1.0], vec![1.0, 3.0, 2.0])?;
    let config = SearchConfig::default_for(&g);
    let result = bisect_alpha(&g, ClassTag::Slope, SearchStrategy::ZamesFalb, &config)?;
    println!("largest certified slope bound: {}", result.alpha_star);
    println!("margin at that bound: {}", result.certificate.margin);
    Ok(())
}
