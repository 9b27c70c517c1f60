//! Cardinal B-splines: values, right-continuous derivatives, the two-scale
//! relation and scaled translates.
//!
//! cargo run --example bspline_basics

use mixrec::bspline::{bspline_deriv, bspline_eval, g_eval, ScaledTranslate};
use mixrec::indexkit::{refinement_coeff, refinement_weight, MultiIndex};

fn main() -> mixrec::Result<()> {
    for m in 0..=3u32 {
        let vals: Vec<String> = (0..=2 * (m + 1)).map(|i| format!("{:.4}", bspline_eval(m, i as f64 / 2.0))).collect();
        println!("M_{m} at 0, 0.5, .., {}: {}", m + 1, vals.join(" "));
    }
    println!("M_3' at the knots: {:?}", (0..=4).map(|k| bspline_deriv(3, 1, k as f64)).collect::<mixrec::Result<Vec<_>>>()?);

    let m = 3;
    let masks: Vec<String> = (0..=m + 1).map(|mu| refinement_coeff(m, mu).map(|c| c.to_string())).collect::<mixrec::Result<_>>()?;
    println!("two-scale mask for m={m}: {}", masks.join(", "));
    let x = 1.37;
    let rhs: f64 = (0..=m + 1).map(|mu| refinement_weight(m, mu) * bspline_eval(m, 2.0 * x - mu as f64)).sum();
    println!("M_3({x}) = {:.15}, two-scale sum = {:.15}", bspline_eval(m, x), rhs);

    let g = ScaledTranslate::new(MultiIndex::new(vec![2, 1]), vec![1, 0], MultiIndex::new(vec![3, 2]));
    let (lo, hi) = g.support();
    println!("g_(2,1),(1,0) of order (3,2): support {lo:?}..{hi:?}");
    println!("  value at (0.6, 0.7) = {:.6}", g_eval(&g, &[0, 0], &[0.6, 0.7])?);
    println!("  D^(1,1) at (0.6, 0.7) = {:.6}", g_eval(&g, &[1, 1], &[0.6, 0.7])?);
    Ok(())
}
