//! Cardinal B-splines, their tensor products and scaled translates.
//!
//! `psi_m` is the `m`-fold convolution of the indicator of `(0, 1)` with
//! itself; it is supported on `[0, m+1]`. Each order is stored as an exact
//! piecewise-polynomial table (integer numerators over `m!`) in the local
//! variable `t = x - k` on the knot interval `[k, k+1)`.

use std::sync::OnceLock;

use crate::error::{param, Result};
use crate::indexkit::{binomial, MultiIndex, MAX_ORDER};

/// Exact piecewise table of one order.
#[derive(Debug, Clone)]
pub struct PieceTable {
    pub order: u32,
    /// `numer[piece][e]`: coefficient of `t^e` times `m!`.
    pub numer: Vec<Vec<i64>>,
    pub denom: i64,
    /// `deriv[k][piece][e]`: coefficients of the `k`-th derivative in f64.
    deriv: Vec<Vec<Vec<f64>>>,
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

impl PieceTable {
    fn build(m: u32) -> Self {
        let denom = factorial(m);
        let mut numer = vec![vec![0i64; m as usize + 1]; m as usize + 1];
        for (k, row) in numer.iter_mut().enumerate() {
            for i in 0..=k {
                let sign = if i % 2 == 0 { 1 } else { -1 };
                let c = sign * binomial(m + 1, i as u32) as i64;
                let s = (k - i) as i64;
                // (t + s)^m = sum_e C(m, e) s^(m-e) t^e
                for e in 0..=m {
                    row[e as usize] += c * binomial(m, e) as i64 * s.pow(m - e);
                }
            }
        }
        let deriv = (0..=m)
            .map(|kd| {
                numer
                    .iter()
                    .map(|row| {
                        (0..=m)
                            .map(|e| {
                                if e + kd > m {
                                    return 0.0;
                                }
                                let src = (e + kd) as usize;
                                let falling: i64 = ((e + 1)..=(e + kd)).map(|v| v as i64).product();
                                (row[src] as f64 * falling as f64) / denom as f64
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        PieceTable { order: m, numer, denom, deriv }
    }

    /// Coefficients of the `k`-th derivative on knot interval `piece`.
    pub fn deriv_piece(&self, k: u32, piece: usize) -> &[f64] {
        &self.deriv[k as usize][piece]
    }
}

fn tables() -> &'static [PieceTable] {
    static TABLES: OnceLock<Vec<PieceTable>> = OnceLock::new();
    TABLES.get_or_init(|| (0..=MAX_ORDER).map(PieceTable::build).collect())
}

/// Exact table for order `m <= MAX_ORDER`.
pub fn piece_table(m: u32) -> &'static PieceTable {
    assert!(m <= MAX_ORDER, "B-spline order {m} exceeds {MAX_ORDER}");
    &tables()[m as usize]
}

#[inline]
fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * t + v)
}

/// `psi_m(x)`; zero outside the open interval `(0, m+1)`.
pub fn bspline_eval(m: u32, x: f64) -> f64 {
    let tab = piece_table(m);
    if !(x > 0.0 && x < (m + 1) as f64) {
        return 0.0;
    }
    let k = x.floor();
    horner(tab.deriv_piece(0, k as usize), x - k)
}

/// `k`-th derivative of `psi_m`, right-continuous at the knots.
pub fn bspline_deriv(m: u32, k: u32, x: f64) -> Result<f64> {
    if k > m {
        return param(format!("derivative order {k} exceeds B-spline order {m}"));
    }
    if k == 0 {
        return Ok(bspline_eval(m, x));
    }
    let tab = piece_table(m);
    if !(x >= 0.0 && x < (m + 1) as f64) {
        return Ok(0.0);
    }
    let piece = x.floor();
    Ok(horner(tab.deriv_piece(k, piece as usize), x - piece))
}

/// Tensor B-spline family `psi^{d,m}` with per-axis orders.
#[derive(Debug, Clone, PartialEq)]
pub struct BsplineBasis {
    pub m: MultiIndex,
}

impl BsplineBasis {
    pub fn new(m: MultiIndex) -> Self {
        BsplineBasis { m }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.m.iter().zip(x).map(|(&mj, &xj)| bspline_eval(mj, xj)).product()
    }
}

/// `g_{kappa,nu}^{d,m}(x) = psi^{d,m}(2^kappa x - nu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledTranslate {
    pub kappa: MultiIndex,
    pub nu: Vec<i64>,
    pub m: MultiIndex,
}

impl ScaledTranslate {
    pub fn new(kappa: MultiIndex, nu: Vec<i64>, m: MultiIndex) -> Self {
        ScaledTranslate { kappa, nu, m }
    }

    /// Closed support as `(lo, hi)` per axis.
    pub fn support(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = (0..self.nu.len())
            .map(|j| self.nu[j] as f64 / 2f64.powi(self.kappa[j] as i32))
            .collect();
        let hi = (0..self.nu.len())
            .map(|j| (self.nu[j] + self.m[j] as i64 + 1) as f64 / 2f64.powi(self.kappa[j] as i32))
            .collect();
        (lo, hi)
    }
}

/// `D^mu g_{kappa,nu}(x) = 2^{(kappa,mu)} prod_j psi_{m_j}^{(mu_j)}(2^{kappa_j} x_j - nu_j)`.
pub fn g_eval(t: &ScaledTranslate, mu: &[u32], x: &[f64]) -> Result<f64> {
    let mut acc = 1.0;
    for j in 0..x.len() {
        if mu[j] > t.m[j] {
            return param(format!("derivative order {} exceeds order {} on axis {}", mu[j], t.m[j], j + 1));
        }
        let scale = 2f64.powi(t.kappa[j] as i32);
        let arg = scale * x[j] - t.nu[j] as f64;
        acc *= scale.powi(mu[j] as i32) * bspline_deriv(t.m[j], mu[j], arg)?;
        if acc == 0.0 {
            return Ok(0.0);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indexkit::refinement_weight;

    #[test]
    fn value_examples() {
        assert_eq!(bspline_eval(0, 0.5), 1.0);
        assert_eq!(bspline_eval(1, 1.0), 1.0);
        assert!((bspline_eval(2, 1.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(bspline_deriv(1, 1, 0.5).unwrap(), 1.0);
        assert!(bspline_deriv(2, 1, 1.5).unwrap().abs() < 1e-15);
        for x in [-0.3, 0.2, 1.7, 3.9] {
            assert_eq!(bspline_deriv(3, 0, x).unwrap(), bspline_eval(3, x));
        }
        assert!(bspline_deriv(2, 3, 1.0).is_err());
    }

    #[test]
    fn knots_are_right_continuous() {
        // hat slope: +1 on [0,1), -1 on [1,2)
        assert_eq!(bspline_deriv(1, 1, 0.0).unwrap(), 1.0);
        assert_eq!(bspline_deriv(1, 1, 1.0).unwrap(), -1.0);
        assert_eq!(bspline_deriv(1, 1, 2.0).unwrap(), 0.0);
        assert_eq!(bspline_eval(0, 0.0), 0.0);
        assert_eq!(bspline_eval(0, 1.0), 0.0);
    }

    #[test]
    fn support_is_exact() {
        for m in 0..=MAX_ORDER {
            assert_eq!(bspline_eval(m, 0.0), 0.0);
            assert_eq!(bspline_eval(m, -1e-9), 0.0);
            assert_eq!(bspline_eval(m, (m + 1) as f64), 0.0);
            for i in 1..100 {
                let x = (m + 1) as f64 * i as f64 / 100.0;
                assert!(bspline_eval(m, x) > 0.0, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn derivative_recurrence_holds() {
        // psi_m' = psi_{m-1}(x) - psi_{m-1}(x-1), off the knots
        for m in 1..=MAX_ORDER {
            for i in 0..200 {
                let x = -0.5 + (m as f64 + 2.0) * (i as f64 + 0.37) / 200.0;
                let lhs = bspline_deriv(m, 1, x).unwrap();
                let rhs = bspline_eval(m - 1, x) - bspline_eval(m - 1, x - 1.0);
                assert!((lhs - rhs).abs() < 1e-12, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn refinement_relation() {
        for m in 1..=4u32 {
            let mut worst: f64 = 0.0;
            for i in 0..1000 {
                let x = -1.0 + (m as f64 + 3.0) * i as f64 / 999.0;
                let rhs: f64 = (0..=m + 1)
                    .map(|mu| refinement_weight(m, mu) * bspline_eval(m, 2.0 * x - mu as f64))
                    .sum();
                worst = worst.max((bspline_eval(m, x) - rhs).abs());
            }
            assert!(worst < 1e-12, "m={m} residual {worst}");
        }
    }

    #[test]
    fn integral_is_one() {
        // Gauss-Legendre, 5 points per knot interval, exact for degree <= 9
        let (nodes, weights) = crate::quadrature::gauss_legendre(5);
        for m in 0..=MAX_ORDER {
            let mut s = 0.0;
            for k in 0..=m {
                for (t, w) in nodes.iter().zip(&weights) {
                    s += w * bspline_eval(m, k as f64 + t);
                }
            }
            assert!((s - 1.0).abs() < 1e-10, "m={m} integral {s}");
        }
    }

    #[test]
    fn scaled_translate_peak_and_support() {
        let g = ScaledTranslate::new(MultiIndex::new(vec![3]), vec![2], MultiIndex::new(vec![1]));
        assert!((g_eval(&g, &[0], &[3.0 / 8.0]).unwrap() - 1.0).abs() < 1e-15);
        let (lo, hi) = g.support();
        assert_eq!((lo[0], hi[0]), (0.25, 0.5));
        let g0 = ScaledTranslate::new(MultiIndex::zeros(2), vec![0, 0], MultiIndex::new(vec![2, 1]));
        let b = BsplineBasis::new(MultiIndex::new(vec![2, 1]));
        let x = [1.3, 0.6];
        assert_eq!(g_eval(&g0, &[0, 0], &x).unwrap(), b.eval(&x));
    }

    #[test]
    fn derivative_scale_law() {
        // sup|D^mu g_{kappa,nu}| / 2^{(kappa,mu)} does not depend on kappa
        let m = MultiIndex::new(vec![3, 2]);
        let mu = [2u32, 1];
        let sup_for = |kappa: Vec<u32>| {
            let g = ScaledTranslate::new(MultiIndex::new(kappa.clone()), vec![1, 0], m.clone());
            let (lo, _) = g.support();
            let mut best: f64 = 0.0;
            for a in 0..=400 {
                for b in 0..=300 {
                    let x = [
                        lo[0] + 4.0 * a as f64 / 400.0 / 2f64.powi(kappa[0] as i32),
                        lo[1] + 3.0 * b as f64 / 300.0 / 2f64.powi(kappa[1] as i32),
                    ];
                    best = best.max(g_eval(&g, &mu, &x).unwrap().abs());
                }
            }
            best / 2f64.powi((kappa[0] * mu[0] + kappa[1] * mu[1]) as i32)
        };
        let base = sup_for(vec![0, 0]);
        for kappa in [vec![1, 0], vec![2, 3], vec![5, 1]] {
            let r = sup_for(kappa);
            assert!((r - base).abs() <= 1e-12 * base, "{r} vs {base}");
        }
    }
}
