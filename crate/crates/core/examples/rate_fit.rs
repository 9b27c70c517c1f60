//! Log-log rate fits `ln e = a + s ln n + E ln ln n`, free and with `E`
//! pinned, on synthetic data and on a measured sweep.
//!
//! cargo run --release --example rate_fit

use mixrec::domain::MTypeDomain;
use mixrec::functions::TestFunction;
use mixrec::indexkit::{MultiIndex, RecoveryParams};
use mixrec::recovery::{convergence_sweep, fit_rate, QuadSpec};

fn main() -> mixrec::Result<()> {
    let synthetic: Vec<(f64, f64)> = (3..9).map(|r| {
        let n = 2f64.powi(r) * r as f64;
        (n, 0.7 * n.powf(-2.0) * n.ln().powi(3))
    }).collect();
    let fit = fit_rate(&synthetic, Some(3.0))?;
    println!("synthetic n^-2 (ln n)^3: free {:?}", fit.free);
    println!("  E pinned at 3: {:?}", fit.fixed.expect("requested"));

    let params = RecoveryParams::new(vec![2.0, 3.0], 2.0, f64::INFINITY, 2.0, MultiIndex::zeros(2), MultiIndex::new(vec![3, 3]))?;
    let dom = MTypeDomain::cube(params.m.clone());
    let f: TestFunction = "gauss_bump:0.5,0.5;0.3".parse()?;
    let rows = convergence_sweep(&dom, &params, 3, 7, &f, &QuadSpec::default_for(2, 2.0))?;
    let table: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.error)).collect();
    for (n, e) in &table {
        println!("  n={n} error={e:.4e}");
    }
    let e = params.log_exponent();
    let fit = fit_rate(&table, Some(e))?;
    println!("alpha=(2,3): mrate {} E {e}; fitted slope {:.3} (E pinned), {:.3} (E free)", params.rate.mrate, fit.fixed.expect("requested").slope, fit.free.slope);
    Ok(())
}
