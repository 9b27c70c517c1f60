//! Upper-rate sweep for prod_sin on the unit square: recovers f for
//! r = 3..rmax (default 8), prints the error table and the fitted log-log
//! rate.
//!
//! cargo run --release --example convergence_sweep -- [lambda1,lambda2] [rmax]

use mixrec::domain::MTypeDomain;
use mixrec::functions::TestFunction;
use mixrec::indexkit::{MultiIndex, RecoveryParams};
use mixrec::recovery::{convergence_sweep, fit_rate, sweep_csv, QuadSpec};

fn main() -> mixrec::Result<()> {
    let lambda = std::env::args().nth(1).unwrap_or_else(|| "0,0".into());
    let lambda = MultiIndex::try_from(lambda.as_str())?;
    let rmax: u32 = std::env::args().nth(2).map_or(Ok(8), |s| s.parse()).map_err(|_| mixrec::Error::Config("rmax must be an integer".into()))?;
    let params = RecoveryParams::new(vec![2.0, 2.0], 2.0, f64::INFINITY, 2.0, lambda, MultiIndex::new(vec![3, 3]))?;
    let dom = MTypeDomain::cube(params.m.clone());
    let t = std::time::Instant::now();
    let rows = convergence_sweep(&dom, &params, 3, rmax, &TestFunction::ProdSin, &QuadSpec::default_for(2, 2.0))?;
    print!("{}", sweep_csv(&rows));
    let e = params.log_exponent();
    let mrate = params.rate.mrate;
    for row in &rows {
        let n = row.n as f64;
        println!("r={} ratio={:.4}", row.r, row.error / (n.powf(-mrate) * n.ln().powf(e)));
    }
    let table: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.error)).collect();
    let fit = fit_rate(&table, Some(e))?;
    println!("free fit: {:?}", fit.free);
    println!("fixed E={e}: {:?}", fit.fixed.unwrap());
    eprintln!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
