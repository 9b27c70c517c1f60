//! Fooling functions: smooth bumps on the cells of one dyadic level that
//! contain no sample point. Any recovery from those points returns the same
//! answer for the fooling function and for zero, so `||D^lambda f||_q` of the
//! class-normalized bump sum bounds its error from below.

use std::collections::HashSet;

use crate::bspline::bspline_deriv;
use crate::domain::{cell_inside, IndexRange, MType};
use crate::error::{Error, Result};
use crate::indexkit::{MultiIndex, RecoveryParams};
use crate::multiscale::Oracle;
use crate::recovery::{lq_norm, QuadSpec, Rational};
use crate::smoothness::{seminorm_estimate, ClassSpec, McSpec, TGrid};

/// `r = ceil(log2(2n))` and the balanced level `kappa*` on the critical axes.
pub fn choose_level(n: usize, params: &RecoveryParams) -> Result<(u32, MultiIndex)> {
    if n == 0 {
        return Err(Error::Parameter("need at least one sample point".into()));
    }
    let r = (2 * n as u64).next_power_of_two().trailing_zeros();
    let axes = &params.rate.j_min;
    let c = axes.len() as u32;
    let mut kappa = vec![0u32; params.d];
    for (i, &j) in axes.iter().enumerate() {
        kappa[j] = r / c + u32::from((i as u32) < r % c);
    }
    Ok((r, MultiIndex::new(kappa)))
}

/// Sample points, exact or floating.
#[derive(Debug, Clone, Copy)]
pub enum PointSet<'a> {
    Exact(&'a [Vec<Rational>]),
    Float(&'a [Vec<f64>]),
}

impl PointSet<'_> {
    pub fn len(&self) -> usize {
        match self {
            PointSet::Exact(p) => p.len(),
            PointSet::Float(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `floor(2^k x_j)` and whether `2^k x_j` is an integer.
    fn locate(&self, i: usize, j: usize, k: u32) -> (i64, bool) {
        match self {
            PointSet::Exact(p) => {
                let (num, den) = p[i][j];
                let y = (num as i128) << k;
                let q = y.div_euclid(den as i128);
                (q as i64, y.rem_euclid(den as i128) == 0)
            }
            PointSet::Float(p) => {
                let y = p[i][j] * 2f64.powi(k as i32);
                let f = y.floor();
                (f as i64, f == y)
            }
        }
    }
}

/// Cells `Q_{kappa,nu}` inside `D` whose closure contains no point, in
/// lexicographic order.
pub fn find_empty_cells(points: PointSet<'_>, kappa: &[u32], dom: &dyn MType) -> Vec<Vec<i64>> {
    let d = kappa.len();
    let mut hit: HashSet<Vec<i64>> = HashSet::new();
    for i in 0..points.len() {
        // a point on a cell face lies in the closure of both neighbours
        let mut choices: Vec<Vec<i64>> = vec![vec![]];
        for j in 0..d {
            let (c, on_face) = points.locate(i, j, kappa[j]);
            let opts: &[i64] = if on_face { &[c - 1, c] } else { &[c] };
            choices = choices
                .into_iter()
                .flat_map(|pre| {
                    opts.iter().map(move |&o| {
                        let mut v = pre.clone();
                        v.push(o);
                        v
                    })
                })
                .collect();
        }
        hit.extend(choices);
    }
    IndexRange::cells(dom, kappa)
        .iter()
        .filter(|nu| cell_inside(dom, kappa, nu) && !hit.contains(nu))
        .collect()
}

/// `sum_nu u * prod_j psi_o((o+1)(2^kappa x_j - nu_j))` over the empty cells,
/// divided by `gauge`.
#[derive(Debug, Clone)]
pub struct FoolingFunction {
    pub kappa: MultiIndex,
    pub cells: Vec<Vec<i64>>,
    pub coeff: f64,
    /// Bump order `m + lambda + 1` per axis.
    pub order: MultiIndex,
    /// Gauge of the unnormalized sum.
    pub gauge: f64,
    range: IndexRange,
    present: Vec<bool>,
}

impl FoolingFunction {
    pub fn new(kappa: MultiIndex, cells: Vec<Vec<i64>>, coeff: f64, order: MultiIndex, dom: &dyn MType) -> Self {
        let range = IndexRange::cells(dom, &kappa);
        let mut present = vec![false; range.len()];
        for c in &cells {
            if let Some(i) = range.flat(c) {
                present[i] = true;
            }
        }
        FoolingFunction { kappa, cells, coeff, order, gauge: 1.0, range, present }
    }

    /// `D^mu` of the normalized function; every bump vanishes with all
    /// derivatives up to order `m + lambda` on its cell boundary.
    pub fn deriv(&self, mu: &[u32], x: &[f64]) -> f64 {
        let d = x.len();
        let mut cell = vec![0i64; d];
        let mut t = vec![0.0; d];
        for j in 0..d {
            let y = x[j] * 2f64.powi(self.kappa[j] as i32);
            cell[j] = y.floor() as i64;
            t[j] = y - y.floor();
        }
        let Some(i) = self.range.flat(&cell) else { return 0.0 };
        if !self.present[i] {
            return 0.0;
        }
        let mut acc = self.coeff / self.gauge;
        for j in 0..d {
            let o = self.order[j];
            let stretch = (o + 1) as f64;
            let v = bspline_deriv(o, mu[j], stretch * t[j]).unwrap_or(f64::NAN);
            acc *= v * (stretch * 2f64.powi(self.kappa[j] as i32)).powi(mu[j] as i32);
            if acc == 0.0 {
                return 0.0;
            }
        }
        acc
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.deriv(&vec![0; x.len()], x)
    }
}

/// Estimator settings for the class gauge and the lower-bound norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoolingSpec {
    pub mc: McSpec,
    /// `None` picks `max(10, max kappa* + 3)`.
    pub imax: Option<u32>,
    pub quad: QuadSpec,
}

impl FoolingSpec {
    pub fn default_for(d: usize, q: f64) -> Self {
        FoolingSpec { mc: McSpec::default(), imax: None, quad: QuadSpec::default_for(d, q) }
    }
}

#[derive(Debug, Clone)]
pub struct FoolingResult {
    pub r: u32,
    pub function: FoolingFunction,
    pub lower_bound: f64,
    pub warnings: Vec<String>,
}

/// Builds the class-normalized fooling function for `points` and measures
/// `||D^lambda f||_q`.
pub fn build_fooling(points: PointSet<'_>, params: &RecoveryParams, dom: &dyn MType, spec: &FoolingSpec) -> Result<FoolingResult> {
    let (r, kappa) = choose_level(points.len().max(1), params)?;
    let cells = find_empty_cells(points, &kappa, dom);
    if cells.is_empty() {
        return Err(Error::NoFooling { kappa: kappa.to_vec() });
    }
    let k: f64 = kappa.iter().map(|&v| v as f64).sum();
    let ka: f64 = kappa.iter().zip(&params.alpha).map(|(&v, a)| v as f64 * a).sum();
    let coeff = 2f64.powf(-ka) * 2f64.powf(k / params.p);
    let order = MultiIndex::new(params.m.iter().zip(params.lambda.iter()).map(|(m, l)| m + l + 1).collect());
    let mut f = FoolingFunction::new(kappa.clone(), cells, coeff, order, dom);
    let class = ClassSpec { alpha: params.alpha.clone(), p: params.p, theta: params.theta };
    let imax = spec.imax.unwrap_or_else(|| kappa.iter().max().map_or(10, |&m| (m + 3).max(10)));
    let est = seminorm_estimate(&|x: &[f64]| f.value(x), &class, &dom, TGrid { imax }, spec.mc)?;
    if !(est.gauge > 0.0) {
        return Err(Error::Internal("fooling function has zero gauge".into()));
    }
    f.gauge = est.gauge;
    let lambda = params.lambda.to_vec();
    let finest = *kappa.iter().max().unwrap_or(&0);
    let quad = QuadSpec { q: params.q, ..spec.quad };
    let rep = lq_norm(&|x: &[f64]| f.deriv(&lambda, x), &quad, dom, finest)?;
    Ok(FoolingResult { r, function: f, lower_bound: rep.value, warnings: rep.warnings })
}

impl Oracle for FoolingFunction {
    fn value(&self, x: &[f64]) -> f64 {
        FoolingFunction::value(self, x)
    }
}

pub const ADVERSARIAL_HEADER: &str = "r,n,empty_cells,gauge,lower_bound,seed";

/// One CSV line `r,n,empty_cells,gauge,lower_bound,seed`.
pub fn csv_line(res: &FoolingResult, n: usize, seed: u64) -> String {
    format!("{},{},{},{:e},{:e},{}", res.r, n, res.function.cells.len(), res.function.gauge, res.lower_bound, seed)
}
