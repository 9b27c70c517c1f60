//! Mixed moduli of smoothness and class seminorms estimated numerically.
//!
//! cargo run --release --example smoothness_moduli

use mixrec::functions::TestFunction;
use mixrec::indexkit::MultiIndex;
use mixrec::smoothness::{modulus_avg, modulus_sup, seminorm_estimate, BoxRegion, ClassSpec, McSpec, ModulusRequest, SupSpec, TGrid};

fn main() -> mixrec::Result<()> {
    let dom = BoxRegion::unit(2);
    let f = TestFunction::ProdSin;
    let l = MultiIndex::new(vec![2, 2]);
    println!("prod_sin, second differences in both axes, p=2");
    for t in [0.4, 0.2, 0.1, 0.05] {
        let req = ModulusRequest::new(vec![0, 1], l.clone(), vec![t, t], 2.0)?;
        let avg = modulus_avg(&f.oracle(), &req, &dom, McSpec::default())?;
        let sup = modulus_sup(&f.oracle(), &req, &dom, SupSpec::default())?;
        println!(
            "  t={t:<5} averaged {:.4e} +- {:.1e} (rejected {:.0}%), sup {:.4e}, sup/t^4 {:.3}",
            avg.value,
            avg.stderr,
            100.0 * avg.rejection_rate,
            sup.value,
            sup.value / t.powi(4)
        );
    }
    for (alpha, theta) in [(vec![1.5, 1.5], f64::INFINITY), (vec![1.5, 1.5], 2.0)] {
        let class = ClassSpec { alpha: alpha.clone(), p: 2.0, theta };
        let est = seminorm_estimate(&f.oracle(), &class, &dom, TGrid { imax: 8 }, McSpec { samples: 4_000, seed: 1 })?;
        println!("class alpha={alpha:?} theta={theta}: seminorm {:.4}, ||f||_2 {:.4}, gauge {:.4}", est.seminorm, est.norm_p.value, est.gauge);
        for (axes, v) in &est.per_axes {
            println!("  J={axes:?}: {v:.4}");
        }
    }
    Ok(())
}
