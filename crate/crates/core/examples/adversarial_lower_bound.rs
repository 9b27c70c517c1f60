//! Lower bounds from fooling functions: for each recovery plan r = 3..8 on
//! the unit square, builds a class-normalized bump sum vanishing at every
//! plan point and reports ||f||_2, which no algorithm using those points can
//! beat. Also confirms that recovering the fooling function yields zero.
//!
//! cargo run --release --example adversarial_lower_bound

use mixrec::adversarial::{build_fooling, csv_line, FoolingSpec, PointSet, ADVERSARIAL_HEADER};
use mixrec::domain::MTypeDomain;
use mixrec::indexkit::{MultiIndex, RecoveryParams};
use mixrec::recovery::{build_sample_plan, lq_error, recover, QuadMode, QuadSpec};

fn main() -> mixrec::Result<()> {
    let params = RecoveryParams::new(vec![2.0, 2.0], 2.0, f64::INFINITY, 2.0, MultiIndex::new(vec![0, 0]), MultiIndex::new(vec![3, 3]))?;
    let dom = MTypeDomain::cube(params.m.clone());
    let spec = FoolingSpec::default_for(2, 2.0);
    println!("{ADVERSARIAL_HEADER}");
    let mut scaled = vec![];
    for r in 3..=8 {
        let t = std::time::Instant::now();
        let plan = build_sample_plan(&dom, &params, r)?;
        let res = build_fooling(PointSet::Exact(&plan.exact), &params, &dom, &spec)?;
        let f = &res.function;
        let rec = recover(&dom, &params, &plan, &|x: &[f64]| f.value(x))?;
        let level = f.kappa.iter().max().unwrap() + 2;
        let quad = QuadSpec { mode: QuadMode::Panels { level: Some(level), gauss: 3 }, ..spec.quad };
        let err = lq_error(&rec, &|x: &[f64]| f.value(x), &quad, &dom)?.value;
        println!("{}", csv_line(&res, plan.len(), spec.mc.seed));
        let n = plan.len() as f64;
        scaled.push(res.lower_bound * n * n);
        eprintln!(
            "r={r} kappa*={} recovery error {err:e} vs bound {:e}; bound*n^2 = {:.4}  ({:.1?})",
            f.kappa,
            res.lower_bound,
            res.lower_bound * n * n,
            t.elapsed()
        );
    }
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    eprintln!("spread of bound*n^2: {:.2}", hi / lo);
    Ok(())
}
