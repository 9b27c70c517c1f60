//! Tensor Lagrange interpolation on boxes and the cell-local polynomial type.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::indexkit::binomial;

/// Largest supported node count per axis.
pub const MAX_NODES: usize = 9;

/// Midpoint nodes `(2i+1) / (2 count)` in `(0, 1)`.
pub fn nodes_1d(count: usize) -> Vec<f64> {
    assert!(count >= 1, "need at least one node");
    (0..count).map(|i| (2 * i + 1) as f64 / (2 * count) as f64).collect()
}

/// `W[e][rho]`: coefficient of `t^e` in the Lagrange basis polynomial of node `rho`.
pub fn lagrange_matrix(count: usize) -> &'static [Vec<f64>] {
    static TABLES: OnceLock<Vec<Vec<Vec<f64>>>> = OnceLock::new();
    assert!((1..=MAX_NODES).contains(&count), "node count {count} unsupported");
    &TABLES.get_or_init(|| (0..=MAX_NODES).map(build_lagrange).collect())[count]
}

fn build_lagrange(count: usize) -> Vec<Vec<f64>> {
    if count == 0 {
        return vec![];
    }
    let xi = nodes_1d(count);
    let mut w = vec![vec![0.0; count]; count];
    for rho in 0..count {
        // expand prod_{mu != rho} (t - xi_mu) / (xi_rho - xi_mu)
        let mut poly = vec![1.0];
        for mu in (0..count).filter(|&mu| mu != rho) {
            let denom = xi[rho] - xi[mu];
            let mut next = vec![0.0; poly.len() + 1];
            for (e, &c) in poly.iter().enumerate() {
                next[e + 1] += c / denom;
                next[e] -= c * xi[mu] / denom;
            }
            poly = next;
        }
        for (e, &c) in poly.iter().enumerate() {
            w[e][rho] = c;
        }
    }
    w
}

/// Applies `mat` (rows = output length) along `axis` of a row-major tensor.
pub(crate) fn mode_apply(coeffs: &[f64], shape: &[usize], axis: usize, mat: &[Vec<f64>]) -> (Vec<f64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let n_in = shape[axis];
    let n_out = mat.len();
    let mut out = vec![0.0; outer * n_out * inner];
    for o in 0..outer {
        for (k, row) in mat.iter().enumerate() {
            let dst = &mut out[(o * n_out + k) * inner..(o * n_out + k + 1) * inner];
            for (rho, &a) in row.iter().enumerate().take(n_in) {
                if a == 0.0 {
                    continue;
                }
                let src = &coeffs[(o * n_in + rho) * inner..(o * n_in + rho + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = n_out;
    (out, new_shape)
}

/// `sum_rho coeffs[rho] prod_j ((x_j - anchor_j) / scale_j)^{rho_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPoly {
    pub anchor: Vec<f64>,
    pub scale: Vec<f64>,
    /// Per-axis coefficient count (degree + 1).
    pub shape: Vec<usize>,
    pub coeffs: Vec<f64>,
}

impl LocalPoly {
    pub fn zero(anchor: Vec<f64>, scale: Vec<f64>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        LocalPoly { anchor, scale, shape, coeffs: vec![0.0; n] }
    }

    pub fn constant(anchor: Vec<f64>, scale: Vec<f64>, c: f64) -> Self {
        let d = anchor.len();
        LocalPoly { anchor, scale, shape: vec![1; d], coeffs: vec![c] }
    }

    pub fn from_coeffs(anchor: Vec<f64>, scale: Vec<f64>, shape: Vec<usize>, coeffs: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), coeffs.len());
        LocalPoly { anchor, scale, shape, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, &c| a.max(c.abs()))
    }

    fn apply(&self, axis: usize, mat: &[Vec<f64>]) -> LocalPoly {
        let (coeffs, shape) = mode_apply(&self.coeffs, &self.shape, axis, mat);
        LocalPoly { anchor: self.anchor.clone(), scale: self.scale.clone(), shape, coeffs }
    }

    /// `D^mu p(x)`; components of `mu` beyond the degree give 0.
    pub fn eval_deriv(&self, mu: &[u32], x: &[f64]) -> f64 {
        let d = self.dim();
        let basis: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let t = (x[j] - self.anchor[j]) / self.scale[j];
                deriv_monomials(self.shape[j], mu[j], t, self.scale[j])
            })
            .collect();
        contract(&self.coeffs, &self.shape, &basis)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_deriv(&vec![0; self.dim()], x)
    }

    /// `self + coeff * src`; both must share anchor and scale.
    pub fn axpy(&self, coeff: f64, src: &LocalPoly) -> Result<LocalPoly> {
        if self.anchor != src.anchor || self.scale != src.scale {
            return Err(Error::Contract(format!(
                "frame mismatch: ({:?}, {:?}) vs ({:?}, {:?}); reframe first",
                self.anchor, self.scale, src.anchor, src.scale
            )));
        }
        let mut out = self.padded(&src.shape);
        if coeff == 0.0 {
            return Ok(out);
        }
        let src = src.padded(&out.shape);
        for (a, b) in out.coeffs.iter_mut().zip(&src.coeffs) {
            *a += coeff * b;
        }
        Ok(out)
    }

    /// Same polynomial with at least `shape` coefficients per axis.
    pub fn padded(&self, shape: &[usize]) -> LocalPoly {
        let target: Vec<usize> = self.shape.iter().zip(shape).map(|(&a, &b)| a.max(b)).collect();
        if target == self.shape {
            return self.clone();
        }
        let mut out = self.clone();
        for j in 0..self.dim() {
            if out.shape[j] < target[j] {
                let mat: Vec<Vec<f64>> = (0..target[j])
                    .map(|k| (0..out.shape[j]).map(|r| if r == k { 1.0 } else { 0.0 }).collect())
                    .collect();
                out = out.apply(j, &mat);
            }
        }
        out
    }

    /// Same function expressed in the frame `(new_anchor, new_scale)`.
    pub fn reframe(&self, new_anchor: &[f64], new_scale: &[f64]) -> LocalPoly {
        let mut out = self.clone();
        for j in 0..self.dim() {
            assert!(new_scale[j] > 0.0, "scale must be positive");
            let c = (new_anchor[j] - self.anchor[j]) / self.scale[j];
            let e = new_scale[j] / self.scale[j];
            if c == 0.0 && e == 1.0 {
                continue;
            }
            out = out.apply(j, &shift_scale_matrix(self.shape[j], c, e));
        }
        out.anchor = new_anchor.to_vec();
        out.scale = new_scale.to_vec();
        out
    }

    /// `D^mu` of the polynomial, in the same frame.
    pub fn derivative(&self, mu: &[u32]) -> LocalPoly {
        let mut out = self.clone();
        for j in 0..self.dim() {
            if mu[j] == 0 {
                continue;
            }
            let n = out.shape[j];
            let factor = self.scale[j].powi(-(mu[j] as i32));
            let mat: Vec<Vec<f64>> = (0..n)
                .map(|k| {
                    (0..n)
                        .map(|r| {
                            if r == k + mu[j] as usize {
                                falling(r, mu[j]) * factor
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            out = out.apply(j, &mat);
        }
        out
    }

    /// Product with a separable polynomial `prod_j q_j(t_j)` given in this frame.
    pub fn mul_separable(&self, factors: &[&[f64]]) -> LocalPoly {
        let mut out = self.clone();
        for (j, q) in factors.iter().enumerate() {
            let n_in = out.shape[j];
            let n_out = n_in + q.len() - 1;
            let mat: Vec<Vec<f64>> = (0..n_out)
                .map(|k| (0..n_in).map(|r| if k >= r && k - r < q.len() { q[k - r] } else { 0.0 }).collect())
                .collect();
            out = out.apply(j, &mat);
        }
        out
    }
}

fn falling(r: usize, k: u32) -> f64 {
    (0..k as usize).map(|i| (r - i) as f64).product()
}

/// Row `k`: coefficient of `t_new^k` in `(c + e t_new)^rho`, for each `rho`.
fn shift_scale_matrix(n: usize, c: f64, e: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            (0..n)
                .map(|rho| {
                    if k > rho {
                        0.0
                    } else {
                        binomial(rho as u32, k as u32) as f64 * c.powi((rho - k) as i32) * e.powi(k as i32)
                    }
                })
                .collect()
        })
        .collect()
}

/// `d^mu/dx^mu ((x-a)/s)^e` for `e < n` at local coordinate `t`.
pub(crate) fn deriv_monomials(n: usize, mu: u32, t: f64, scale: f64) -> Vec<f64> {
    let factor = scale.powi(-(mu as i32));
    let mu = mu as usize;
    let mut out = vec![0.0; n];
    let mut pw = 1.0;
    for e in mu..n {
        out[e] = falling(e, mu as u32) * pw * factor;
        pw *= t;
    }
    out
}

/// Full contraction of a row-major tensor with one vector per axis.
pub(crate) fn contract(coeffs: &[f64], shape: &[usize], basis: &[Vec<f64>]) -> f64 {
    let d = shape.len();
    if d == 1 {
        return coeffs.iter().zip(&basis[0]).map(|(a, b)| a * b).sum();
    }
    // contract the last axis first, then recurse on the rest
    let last = shape[d - 1];
    let reduced: Vec<f64> = coeffs
        .chunks_exact(last)
        .map(|row| row.iter().zip(&basis[d - 1]).map(|(a, b)| a * b).sum())
        .collect();
    contract(&reduced, &shape[..d - 1], &basis[..d - 1])
}

/// Tensor Lagrange interpolant on the box `anchor + scale * (0,1)^d` from
/// samples at the tensor midpoint nodes (row-major, last axis fastest).
pub fn interpolate_cell(anchor: &[f64], scale: &[f64], nodes: &[usize], values: &[f64]) -> Result<LocalPoly> {
    let n: usize = nodes.iter().product();
    if values.len() != n {
        return Err(Error::Contract(format!("expected {n} samples, got {}", values.len())));
    }
    if let Some(&bad) = nodes.iter().find(|&&c| c == 0 || c > MAX_NODES) {
        return Err(Error::Parameter(format!("node count {bad} outside [1, {MAX_NODES}]")));
    }
    let mut p = LocalPoly {
        anchor: anchor.to_vec(),
        scale: scale.to_vec(),
        shape: nodes.to_vec(),
        coeffs: values.to_vec(),
    };
    for (j, &c) in nodes.iter().enumerate() {
        p = p.apply(j, lagrange_matrix(c));
    }
    Ok(p)
}

/// Tensor node `rho` of the box in global coordinates.
pub fn tensor_node(anchor: &[f64], scale: &[f64], nodes: &[usize], rho: &[usize]) -> Vec<f64> {
    (0..anchor.len())
        .map(|j| anchor[j] + scale[j] * (2 * rho[j] + 1) as f64 / (2 * nodes[j]) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn node_examples() {
        assert_eq!(nodes_1d(1), vec![0.5]);
        assert_eq!(nodes_1d(2), vec![0.25, 0.75]);
        let n3 = nodes_1d(3);
        assert!((n3[0] - 1.0 / 6.0).abs() < 1e-16 && n3[1] == 0.5 && (n3[2] - 5.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn basis_duality() {
        for count in 1..=5 {
            let w = lagrange_matrix(count);
            let xi = nodes_1d(count);
            for lam in 0..count {
                for (mu, &x) in xi.iter().enumerate() {
                    let v: f64 = (0..count).map(|e| w[e][lam] * x.powi(e as i32)).sum();
                    let want = if lam == mu { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-13, "count={count} lam={lam} mu={mu}: {v}");
                }
            }
        }
    }

    #[test]
    fn interpolation_examples() {
        let p = interpolate_cell(&[0.0], &[1.0], &[2], &[0.0, 1.0]).unwrap();
        assert!((p.coeffs[0] + 0.5).abs() < 1e-15 && (p.coeffs[1] - 2.0).abs() < 1e-15);
        let c = interpolate_cell(&[0.5, 0.25], &[0.5, 0.25], &[3, 2], &[4.0; 6]).unwrap();
        for x in [[0.6, 0.3], [0.9, 0.49]] {
            assert!((c.eval(&x) - 4.0).abs() < 1e-13);
        }
        assert!(interpolate_cell(&[0.0], &[1.0], &[2], &[1.0]).is_err());
    }

    #[test]
    fn eval_deriv_examples() {
        let s = 0.25;
        let p = LocalPoly::from_coeffs(vec![0.5], vec![s], vec![3], vec![0.0, 0.0, 1.0]);
        assert!((p.eval_deriv(&[2], &[0.9]) - 2.0 / (s * s)).abs() < 1e-12);
        assert_eq!(p.eval_deriv(&[3], &[0.9]), 0.0);
        assert_eq!(p.eval_deriv(&[0], &[0.75]), p.eval(&[0.75]));
    }

    #[test]
    fn axpy_rules() {
        let a = LocalPoly::from_coeffs(vec![0.0], vec![1.0], vec![2], vec![0.0, 2.0]);
        let z = LocalPoly::from_coeffs(vec![0.0], vec![1.0], vec![3], vec![7.0, 1.0, 3.0]);
        let half = LocalPoly::zero(vec![0.0], vec![1.0], vec![1]).axpy(0.5, &a).unwrap();
        let r = half.axpy(0.0, &z).unwrap();
        assert_eq!(r.eval(&[0.3]), 0.3);
        assert_eq!(a.axpy(0.0, &a).unwrap(), a);
        assert!(a.axpy(-1.0, &a).unwrap().is_zero());
        let other = LocalPoly::zero(vec![0.5], vec![1.0], vec![2]);
        assert!(matches!(a.axpy(1.0, &other), Err(Error::Contract(_))));
    }

    #[test]
    fn reframe_examples() {
        let x = LocalPoly::from_coeffs(vec![0.0], vec![1.0], vec![2], vec![0.0, 1.0]);
        assert_eq!(x.reframe(&[0.0], &[1.0]), x);
        let half = x.reframe(&[0.0], &[0.5]);
        assert_eq!(half.coeffs, vec![0.0, 0.5]);
    }

    fn random_poly(rng: &mut ChaCha8Rng, d: usize, deg: usize) -> LocalPoly {
        let shape = vec![deg + 1; d];
        let n = shape.iter().product();
        let anchor = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale = (0..d).map(|_| rng.gen_range(0.1..2.0)).collect();
        let coeffs = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        LocalPoly::from_coeffs(anchor, scale, shape, coeffs)
    }

    #[test]
    fn reproduction_of_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 1..=3 {
            for l in 1..=4 {
                for _ in 0..100 {
                    let anchor: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let scale: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
                    let n: usize = (0..d).map(|_| l).product();
                    let coeffs = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let f = LocalPoly::from_coeffs(anchor.clone(), scale.clone(), vec![l; d], coeffs);
                    let nodes = vec![l; d];
                    let values: Vec<f64> = (0..n)
                        .map(|i| f.eval(&tensor_node(&anchor, &scale, &nodes, &unflat(i, &nodes))))
                        .collect();
                    let p = interpolate_cell(&anchor, &scale, &nodes, &values).unwrap();
                    for _ in 0..100 {
                        // points across a B-spline support of width 4 cells
                        let x: Vec<f64> =
                            (0..d).map(|j| anchor[j] + scale[j] * rng.gen_range(-3.0..4.0)).collect();
                        let err = (p.eval(&x) - f.eval(&x)).abs();
                        let gauge = abs_eval(&f, &x);
                        assert!(err < 1e-10 * gauge, "d={d} l={l} err={err} gauge={gauge}");
                    }
                }
            }
        }
    }

    // evaluation of the polynomial with all terms made nonnegative
    fn abs_eval(f: &LocalPoly, x: &[f64]) -> f64 {
        let basis: Vec<Vec<f64>> = (0..f.dim())
            .map(|j| {
                let t = ((x[j] - f.anchor[j]) / f.scale[j]).abs();
                deriv_monomials(f.shape[j], 0, t, 1.0)
            })
            .collect();
        let abs: Vec<f64> = f.coeffs.iter().map(|c| c.abs()).collect();
        contract(&abs, &f.shape, &basis)
    }

    fn unflat(mut i: usize, shape: &[usize]) -> Vec<usize> {
        let mut out = vec![0; shape.len()];
        for j in (0..shape.len()).rev() {
            out[j] = i % shape[j];
            i /= shape[j];
        }
        out
    }

    #[test]
    fn derivative_matches_eval_deriv() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_poly(&mut rng, 2, 4);
            let mu = [rng.gen_range(0..3), rng.gen_range(0..3)];
            let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let a = p.derivative(&mu).eval(&x);
            let b = p.eval_deriv(&mu, &x);
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn separable_product() {
        let p = LocalPoly::from_coeffs(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 1], vec![1.0, 1.0]);
        let q = p.mul_separable(&[&[0.0, 2.0], &[3.0, 0.0, 1.0]]);
        for x in [[0.3, 0.7], [1.5, -2.0]] {
            let want = (1.0 + x[0]) * 2.0 * x[0] * (3.0 + x[1] * x[1]);
            assert!((q.eval(&x) - want).abs() < 1e-12);
        }
    }

    proptest::proptest! {
        #[test]
        fn reframe_round_trip(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 9),
            a in -1.0f64..1.0, b in 0.1f64..2.0, c in -1.0f64..1.0, s in 0.1f64..2.0,
        ) {
            let p = LocalPoly::from_coeffs(vec![a, -a], vec![b, s], vec![3, 3], coeffs);
            let q = p.reframe(&[c, c * 0.5], &[s, b]);
            let back = q.reframe(&[a, -a], &[b, s]);
            for (x, y) in p.coeffs.iter().zip(&back.coeffs) {
                proptest::prop_assert!((x - y).abs() < 1e-11);
            }
        }

        #[test]
        fn eval_commutes_with_reframe(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 12),
            c in -1.0f64..1.0, s in 0.2f64..2.0, x0 in -1.0f64..1.0, x1 in -1.0f64..1.0,
            mu0 in 0u32..3, mu1 in 0u32..2,
        ) {
            let p = LocalPoly::from_coeffs(vec![0.1, 0.2], vec![0.5, 0.25], vec![4, 3], coeffs);
            let q = p.reframe(&[c, -c], &[s, s * 0.5]);
            let (u, v) = (p.eval_deriv(&[mu0, mu1], &[x0, x1]), q.eval_deriv(&[mu0, mu1], &[x0, x1]));
            proptest::prop_assert!((u - v).abs() < 1e-11 * (1.0 + u.abs().max(v.abs())));
        }
    }
}
