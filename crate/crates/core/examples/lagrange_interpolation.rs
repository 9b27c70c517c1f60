//! Tensor Lagrange interpolation on one cell: midpoint nodes, the fitted
//! local polynomial, its derivatives and reframing to another cell.
//!
//! cargo run --example lagrange_interpolation

use mixrec::polylag::{interpolate_cell, nodes_1d, tensor_node};

fn main() -> mixrec::Result<()> {
    for count in 1..=4 {
        println!("{count} nodes on [0,1]: {:?}", nodes_1d(count));
    }
    let f = |x: &[f64]| (3.0 * x[0]).sin() * (1.0 + x[1] * x[1]);
    let (anchor, scale, nodes) = ([0.25, 0.5], [0.25, 0.25], [3usize, 3]);
    let mut values = vec![];
    for i in 0..3 {
        for j in 0..3 {
            values.push(f(&tensor_node(&anchor, &scale, &nodes, &[i, j])));
        }
    }
    let p = interpolate_cell(&anchor, &scale, &nodes, &values)?;
    for x in [[0.3, 0.55], [0.4, 0.7], [0.49, 0.74]] {
        println!("x={x:?}: f={:.6} p={:.6} D^(1,0)p={:.6}", f(&x), p.eval(&x), p.eval_deriv(&[1, 0], &x));
    }
    let q = p.reframe(&[0.0, 0.0], &[1.0, 1.0]);
    println!("after reframing to the unit cell: p(0.4,0.7) = {:.12} vs {:.12}", q.eval(&[0.4, 0.7]), p.eval(&[0.4, 0.7]));
    let poly = |x: &[f64]| 1.0 - 2.0 * x[0] + x[0] * x[0] * x[1] * x[1];
    let vals: Vec<f64> = (0..9).map(|k| poly(&tensor_node(&anchor, &scale, &nodes, &[k / 3, k % 3]))).collect();
    let r = interpolate_cell(&anchor, &scale, &nodes, &vals)?;
    println!("degree-(2,2) polynomial reproduced: error at (1.7, -0.4) = {:e}", (r.eval(&[1.7, -0.4]) - poly(&[1.7, -0.4])).abs());
    Ok(())
}
