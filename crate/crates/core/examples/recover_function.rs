//! Recovering a function and one of its mixed derivatives from point
//! samples on the L-shaped domain, with the oracle call count.
//!
//! cargo run --release --example recover_function

use mixrec::domain::MTypeDomain;
use mixrec::functions::TestFunction;
use mixrec::indexkit::{MultiIndex, RecoveryParams};
use mixrec::recovery::{build_sample_plan, lq_error, recover, CountingOracle, QuadSpec};

fn main() -> mixrec::Result<()> {
    let f: TestFunction = "gauss_bump:0.6,0.5;0.35".parse()?;
    for lambda in [[0u32, 0], [1, 1]] {
        let params = RecoveryParams::new(vec![3.0, 3.0], 2.0, f64::INFINITY, 2.0, MultiIndex::new(lambda.to_vec()), MultiIndex::new(vec![3, 3]))?;
        let dom = MTypeDomain::lshape(params.m.clone());
        println!("D^{lambda:?} of {f} on the L-shape");
        for r in [3, 5, 7] {
            let plan = build_sample_plan(&dom, &params, r)?;
            let inner = f.oracle();
            let counter = CountingOracle::new(&inner);
            let rec = recover(&dom, &params, &plan, &counter)?;
            let err = lq_error(&rec, &f.deriv_oracle(&lambda), &QuadSpec::default_for(2, 2.0), &dom)?;
            let x = [1.5, 0.5];
            println!(
                "  r={r}: {} samples ({} oracle calls), L2 error {:.3e}; at {x:?} got {:.6} want {:.6}",
                plan.len(),
                counter.calls(),
                err.value,
                rec.eval_deriv(&lambda, &x)?,
                f.deriv(&lambda, &x)
            );
        }
    }
    Ok(())
}
