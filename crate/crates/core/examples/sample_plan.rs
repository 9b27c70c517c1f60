//! Sample plans: how many oracle points each level r needs, and the
//! points themselves as CSV.
//!
//! cargo run --release --example sample_plan -- [r] > points.csv

use mixrec::domain::MTypeDomain;
use mixrec::indexkit::{MultiIndex, RecoveryParams};
use mixrec::recovery::build_sample_plan;

fn main() -> mixrec::Result<()> {
    let r_out: u32 = std::env::args().nth(1).map_or(Ok(3), |s| s.parse()).map_err(|_| mixrec::Error::Config("r must be an integer".into()))?;
    let params = RecoveryParams::new(vec![2.0, 2.0], 2.0, f64::INFINITY, 2.0, MultiIndex::zeros(2), MultiIndex::new(vec![3, 3]))?;
    for dom in [MTypeDomain::cube(params.m.clone()), MTypeDomain::lshape(params.m.clone())] {
        for r in 1..=7 {
            let plan = build_sample_plan(&dom, &params, r)?;
            eprintln!("{} r={r}: {} levels, {} cells, {} points", dom.kind, plan.cross.len(), plan.cells.len(), plan.len());
        }
    }
    let plan = build_sample_plan(&MTypeDomain::cube(params.m.clone()), &params, r_out)?;
    print!("{}", plan.to_csv());
    Ok(())
}
