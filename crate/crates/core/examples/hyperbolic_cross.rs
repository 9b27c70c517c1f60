//! Rate parameters and the hyperbolic cross of levels for a parameter set.
//!
//! cargo run --example hyperbolic_cross -- [alpha] [lambda] [r]
//! e.g. cargo run --example hyperbolic_cross -- 2,3 1,0 6

use mixrec::indexkit::{hyperbolic_cross, MultiIndex, RecoveryParams};

fn main() -> mixrec::Result<()> {
    let arg = |i: usize, d: &str| std::env::args().nth(i).unwrap_or_else(|| d.to_string());
    let alpha: Vec<f64> = arg(1, "2,3").split(',').map(|s| s.parse().map_err(|_| mixrec::Error::Config(format!("bad alpha '{s}'")))).collect::<mixrec::Result<_>>()?;
    let lambda = MultiIndex::try_from(arg(2, "1,0").as_str())?;
    let r: u32 = arg(3, "6").parse().map_err(|_| mixrec::Error::Config("r must be an integer".into()))?;
    let d = alpha.len();
    let m = MultiIndex::splat(d, 3);
    let params = RecoveryParams::new(alpha, 2.0, f64::INFINITY, 2.0, lambda, m)?;
    let rate = &params.rate;
    println!("effective smoothness {:?}", rate.effective);
    println!("mrate {} attained on axes {:?} (crate {})", rate.mrate, rate.j_min, rate.crate_);
    println!("beta {:?}, log exponent E = {}", rate.beta, params.log_exponent());
    let cross = hyperbolic_cross(&rate.beta, r);
    println!("cross at r={r}: {} levels", cross.len());
    for kappa in &cross {
        println!("  {kappa}");
    }
    Ok(())
}
