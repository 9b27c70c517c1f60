//! Sample plans, the recovery pipeline, L_q error measurement, convergence
//! sweeps and log-log rate fitting.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use num_integer::Integer;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{cell_meets, enumerate_n, IndexRange, MType, ScaledBox};
use crate::error::{Error, Result};
use crate::functions::TestFunction;
use crate::indexkit::{hyperbolic_cross, MultiIndex, RecoveryParams};
use crate::multiscale::{cell_frame, CompiledDerivative, checked_value, v_terms, InterpolantCache, Oracle, Reconstruction, VTerm};
use crate::polylag::interpolate_cell;
use crate::quadrature::{gauss_legendre, CompensatedSum};
use crate::smoothness::{batch_rng, mc_moments, pth_root_estimate, volume};

/// Reduced fraction `num / den`, `den > 0`.
pub type Rational = (i64, i64);

/// An interior cell whose tensor nodes are sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanCell {
    pub level: Vec<u32>,
    pub cell: Vec<i64>,
    /// Point index of every tensor node, row-major.
    pub points: Vec<usize>,
}

/// Points at which the oracle is consulted, and how the operator uses them.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePlan {
    pub r: u32,
    pub cross: Vec<MultiIndex>,
    /// Nodes per axis (`l`).
    pub nodes: Vec<usize>,
    pub m: MultiIndex,
    pub exact: Vec<Vec<Rational>>,
    pub points: Vec<Vec<f64>>,
    pub cells: Vec<PlanCell>,
    cell_index: HashMap<(Vec<u32>, Vec<i64>), usize>,
}

fn reduce(num: i64, den: i64) -> Rational {
    let g = num.gcd(&den);
    (num / g, den / g)
}

/// Exact node `(nu_j 2 l_j + 2 rho_j + 1) / (2^{k_j + 1} l_j)` on each axis.
pub fn exact_node(level: &[u32], cell: &[i64], nodes: &[usize], rho: &[usize]) -> Vec<Rational> {
    (0..level.len())
        .map(|j| {
            let l = nodes[j] as i64;
            reduce(cell[j] * 2 * l + 2 * rho[j] as i64 + 1, (1i64 << (level[j] + 1)) * l)
        })
        .collect()
}

impl SamplePlan {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell(&self, level: &[u32], cell: &[i64]) -> Option<&PlanCell> {
        self.cell_index.get(&(level.to_vec(), cell.to_vec())).map(|&i| &self.cells[i])
    }

    /// Weighted cell references of `V_{kappa,nu}` with the point indices of
    /// each referenced cell.
    pub fn refs_for(&self, dom: &dyn MType, kappa: &[u32], nu: &[i64]) -> Result<Vec<(VTerm, &[usize])>> {
        v_terms(dom, kappa, nu)?
            .into_iter()
            .map(|t| {
                let c = self.cell(&t.level, &t.cell).ok_or_else(|| {
                    Error::Internal(format!("cell {:?} at level {:?} missing from the plan", t.cell, t.level))
                })?;
                Ok((t, c.points.as_slice()))
            })
            .collect()
    }

    /// Points as CSV with header `x1,...,xd`.
    pub fn to_csv(&self) -> String {
        let d = self.m.dim();
        let mut out = (1..=d).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for p in &self.points {
            out.push_str(&p.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }
}

/// Enumerates every interior cell referenced by the telescoped operators of
/// the cross `(kappa, beta) <= r` and emits their tensor nodes, deduplicated
/// by exact rational comparison.
pub fn build_sample_plan(dom: &dyn MType, params: &RecoveryParams, r: u32) -> Result<SamplePlan> {
    if r < 1 {
        return Err(Error::Parameter("r must be at least 1".into()));
    }
    if dom.m() != &params.m || dom.dim() != params.d {
        return Err(Error::Contract(format!("domain order {} does not match parameters {}", dom.m(), params.m)));
    }
    let cross = hyperbolic_cross(&params.rate.beta, r);
    let nodes: Vec<usize> = params.l.iter().map(|&v| v as usize).collect();
    let per_cell: usize = nodes.iter().product();
    let node_range = IndexRange { lo: vec![0; nodes.len()], shape: nodes.clone() };
    let mut plan = SamplePlan {
        r,
        cross: cross.clone(),
        nodes: nodes.clone(),
        m: params.m.clone(),
        exact: vec![],
        points: vec![],
        cells: vec![],
        cell_index: HashMap::new(),
    };
    let mut point_index: HashMap<Vec<Rational>, usize> = HashMap::new();
    let k0 = dom.kappa0();
    for kappa in &cross {
        let level = kappa.add(&k0);
        for nu in enumerate_n(dom, &level) {
            for t in v_terms(dom, kappa, &nu)? {
                let key = (t.level.clone(), t.cell.clone());
                if plan.cell_index.contains_key(&key) {
                    continue;
                }
                let mut pts = Vec::with_capacity(per_cell);
                for i in 0..per_cell {
                    let rho: Vec<usize> = node_range.unflat(i).into_iter().map(|v| v as usize).collect();
                    let q = exact_node(&t.level, &t.cell, &nodes, &rho);
                    let next = plan.points.len();
                    let idx = *point_index.entry(q.clone()).or_insert(next);
                    if idx == next {
                        plan.points.push(q.iter().map(|&(a, b)| a as f64 / b as f64).collect());
                        plan.exact.push(q);
                    }
                    pts.push(idx);
                }
                plan.cell_index.insert(key, plan.cells.len());
                plan.cells.push(PlanCell { level: t.level, cell: t.cell, points: pts });
            }
        }
    }
    Ok(plan)
}

/// Oracle wrapper recording every call.
pub struct CountingOracle<'a> {
    inner: &'a dyn Oracle,
    calls: AtomicUsize,
    seen: Mutex<HashMap<Vec<u64>, usize>>,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn Oracle) -> Self {
        CountingOracle { inner, calls: AtomicUsize::new(0), seen: Mutex::new(HashMap::new()) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn distinct(&self) -> usize {
        self.seen.lock().unwrap().len()
    }

    /// Distinct points queried, as bit patterns.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = self
            .seen
            .lock()
            .unwrap()
            .keys()
            .map(|k| k.iter().map(|&b| f64::from_bits(b)).collect())
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

impl Oracle for CountingOracle<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.calls.fetch_add(1, Ordering::SeqCst);
        *self.seen.lock().unwrap().entry(x.iter().map(|v| v.to_bits()).collect()).or_insert(0) += 1;
        self.inner.value(x)
    }
}

/// Evaluates `f` once per plan point, in plan order.
pub fn sample(plan: &SamplePlan, f: &dyn Oracle) -> Result<Vec<f64>> {
    plan.points.par_iter().map(|x| checked_value(f, x)).collect()
}

/// Reconstruction from sample values alone (the map `A`).
pub fn assemble(dom: &dyn MType, params: &RecoveryParams, plan: &SamplePlan, values: &[f64]) -> Result<Reconstruction> {
    if values.len() != plan.len() {
        return Err(Error::Contract(format!("{} values for a plan of {} points", values.len(), plan.len())));
    }
    let nodes: Vec<usize> = params.l.iter().map(|&v| v as usize).collect();
    if nodes != plan.nodes || params.m != plan.m {
        return Err(Error::Contract("plan was built for different parameters".into()));
    }
    let polys = plan
        .cells
        .par_iter()
        .map(|c| {
            let (anchor, scale) = cell_frame(&c.level, &c.cell);
            let vals: Vec<f64> = c.points.iter().map(|&i| values[i]).collect();
            interpolate_cell(&anchor, &scale, &nodes, &vals)
        })
        .collect::<Result<Vec<_>>>()?;
    let cache: InterpolantCache = plan
        .cells
        .iter()
        .zip(polys)
        .map(|(c, p)| ((c.level.clone(), c.cell.clone()), p))
        .collect();
    Reconstruction::assemble(dom, params, &plan.cross, &cache)
}

/// `A(phi(f))`: samples `f` at the plan points, then assembles.
pub fn recover(dom: &dyn MType, params: &RecoveryParams, plan: &SamplePlan, f: &dyn Oracle) -> Result<Reconstruction> {
    let values = sample(plan, f)?;
    assemble(dom, params, plan, &values)
}

/// Builds the plan of level `r` and recovers `f` from it.
pub fn build_reconstruction(dom: &dyn MType, params: &RecoveryParams, r: u32, f: &dyn Oracle) -> Result<(SamplePlan, Reconstruction)> {
    let plan = build_sample_plan(dom, params, r)?;
    let rec = recover(dom, params, &plan, f)?;
    Ok((plan, rec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadMode {
    /// Tensor Gauss rule with `gauss` points per axis on dyadic panels of
    /// side `2^-level`; `None` picks two levels below the finest cell.
    Panels { level: Option<u32>, gauss: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl fmt::Display for QuadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadMode::Panels { .. } => write!(f, "panels"),
            QuadMode::MonteCarlo { .. } => write!(f, "montecarlo"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub mode: QuadMode,
    /// In `(1, inf]`.
    pub q: f64,
    /// Extra random points for `q = inf`.
    pub sup_cloud: usize,
    pub seed: u64,
}

impl QuadSpec {
    /// Panels for `d <= 2`, Monte Carlo otherwise.
    pub fn default_for(d: usize, q: f64) -> Self {
        let mode = if d <= 2 {
            QuadMode::Panels { level: None, gauss: 3 }
        } else {
            QuadMode::MonteCarlo { samples: 200_000, seed: 1 }
        };
        QuadSpec { mode, q, sup_cloud: 10_000, seed: 1 }
    }

    pub fn seed(&self) -> u64 {
        match self.mode {
            QuadMode::MonteCarlo { seed, .. } => seed,
            QuadMode::Panels { .. } => self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub value: f64,
    pub stderr: f64,
    pub warnings: Vec<String>,
}

const PANEL_CHUNK: usize = 1024;

fn finest_level(rec: &Reconstruction) -> u32 {
    rec.layers.iter().flat_map(|l| l.level.iter().copied()).max().unwrap_or(0)
}

/// `||D^lambda f - D^lambda rec||_{L_q(D)}` against the analytic reference.
pub fn lq_error(rec: &Reconstruction, reference: &dyn Oracle, quad: &QuadSpec, dom: &dyn MType) -> Result<ErrorReport> {
    let lambda = rec.params.lambda.to_vec();
    let comp = rec.compile(dom, &lambda)?;
    measure(dom, Some(&comp), reference, quad, finest_level(rec))
}

/// `||g||_{L_q(D)}` with the same quadrature as [`lq_error`]; `finest` is the
/// finest dyadic level at which `g` has breaks.
pub fn lq_norm(g: &dyn Oracle, quad: &QuadSpec, dom: &dyn MType, finest: u32) -> Result<ErrorReport> {
    measure(dom, None, g, quad, finest)
}

fn measure(dom: &dyn MType, comp: Option<&CompiledDerivative>, reference: &dyn Oracle, quad: &QuadSpec, finest: u32) -> Result<ErrorReport> {
    let q = quad.q;
    if !(q > 1.0) {
        return Err(Error::Parameter(format!("q must lie in (1, inf], got {q}")));
    }
    let d = dom.dim();
    let approx = |x: &[f64]| comp.map_or(0.0, |c| c.eval(x));
    let mut warnings = vec![];
    let (value, stderr) = match quad.mode {
        QuadMode::Panels { level, gauss } => {
            let level = level.unwrap_or(finest + 2);
            if level <= finest {
                warnings.push(format!(
                    "panel level {level} does not exceed the finest cell level {finest}; panels straddle cells"
                ));
            }
            if gauss == 0 || gauss > 16 {
                return Err(Error::Parameter(format!("gauss points per axis must lie in [1, 16], got {gauss}")));
            }
            let (nodes, weights) = gauss_legendre(gauss);
            let panels = IndexRange::cells(dom, &vec![level; d]);
            let shift = vec![level; d];
            let vol = 2f64.powi(-((level as usize * d) as i32));
            let g_d = gauss.pow(d as u32);
            let n_chunks = panels.len().div_ceil(PANEL_CHUNK);
            let partial = AtomicUsize::new(0);
            let parts: Vec<(f64, f64)> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut scratch = comp.map(|c| c.scratch());
                    let mut vals = vec![0.0; g_d];
                    let mut x = vec![0.0; d];
                    let mut acc = CompensatedSum::default();
                    let mut mx: f64 = 0.0;
                    for idx in c * PANEL_CHUNK..((c + 1) * PANEL_CHUNK).min(panels.len()) {
                        let p = panels.unflat(idx);
                        let pad: Vec<i64> = p.iter().map(|v| v + 1).collect();
                        let b = ScaledBox { lo: &p, hi: &pad, shift: &shift };
                        let inside = dom.open_box_inside(b);
                        if !inside {
                            let b = ScaledBox { lo: &p, hi: &pad, shift: &shift };
                            if !straddles(dom, b) {
                                continue;
                            }
                            // keep only the Gauss points inside D
                            partial.fetch_add(1, Ordering::Relaxed);
                        }
                        if let (Some(c), Some(sc)) = (comp, scratch.as_mut()) {
                            c.eval_panel(level, &p, &nodes, &mut vals, sc);
                        }
                        for (i, v) in vals.iter().enumerate() {
                            let mut rem = i;
                            let mut w = vol;
                            for j in (0..d).rev() {
                                let k = rem % gauss;
                                rem /= gauss;
                                x[j] = (p[j] as f64 + nodes[k]) * 2f64.powi(-(level as i32));
                                w *= weights[k];
                            }
                            if !inside && !dom.contains(&x) {
                                continue;
                            }
                            let e = (reference.value(&x) - v).abs();
                            if q.is_infinite() {
                                mx = mx.max(e);
                            } else {
                                acc.add(w * e.powf(q));
                            }
                        }
                    }
                    (acc.value(), mx)
                })
                .collect();
            let straddling = partial.load(Ordering::Relaxed);
            if straddling > 0 {
                warnings.push(format!("{straddling} panels straddle the boundary of D; their Gauss points were filtered"));
            }
            if q.is_infinite() {
                let mut mx = parts.iter().map(|p| p.1).fold(0.0, f64::max);
                mx = mx.max(sup_cloud(&approx, reference, dom, quad.sup_cloud, quad.seed));
                (mx, 0.0)
            } else {
                let mut s = CompensatedSum::default();
                for (a, _) in &parts {
                    s.add(*a);
                }
                (s.value().powf(1.0 / q), 0.0)
            }
        }
        QuadMode::MonteCarlo { samples, seed } => {
            if samples < 100 {
                return Err(Error::Parameter(format!("Monte Carlo needs at least 100 samples, got {samples}")));
            }
            if q.is_infinite() {
                (sup_cloud(&approx, reference, dom, samples, seed), 0.0)
            } else {
                let (blo, bhi) = dom.bounds();
                let lo: Vec<f64> = blo.iter().map(|&v| v as f64).collect();
                let hi: Vec<f64> = bhi.iter().map(|&v| v as f64).collect();
                let draw = |rng: &mut ChaCha8Rng| -> Option<f64> {
                    let x: Vec<f64> = (0..d).map(|j| rng.gen_range(lo[j]..hi[j])).collect();
                    dom.contains(&x).then(|| (reference.value(&x) - approx(&x)).abs().powf(q))
                };
                let (s, s2, rejected) = mc_moments(samples, seed, &draw);
                let est = pth_root_estimate(volume(&lo, &hi), s, s2, samples, q, rejected);
                (est.value, est.stderr)
            }
        }
    };
    if !value.is_finite() {
        return Err(Error::Oracle { point: vec![], reason: "non-finite error value; check the reference".into() });
    }
    Ok(ErrorReport { value, stderr, warnings })
}

/// A panel not inside `D` whose interior still meets it. Closed-box contact
/// alone (a shared face or corner) does not count.
fn straddles(dom: &dyn MType, b: ScaledBox<'_>) -> bool {
    // shrink by one level: the closed inner box meets D iff the open panel does
    let lo: Vec<i64> = b.lo.iter().map(|v| 4 * v + 1).collect();
    let hi: Vec<i64> = b.hi.iter().map(|v| 4 * v - 1).collect();
    let shift: Vec<u32> = b.shift.iter().map(|s| s + 2).collect();
    dom.closed_box_meets(ScaledBox { lo: &lo, hi: &hi, shift: &shift })
}

fn sup_cloud(approx: &(dyn Fn(&[f64]) -> f64 + Sync), reference: &dyn Oracle, dom: &dyn MType, n: usize, seed: u64) -> f64 {
    let d = dom.dim();
    let (blo, bhi) = dom.bounds();
    let chunks = n.div_ceil(PANEL_CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = batch_rng(seed, c);
            let mut mx: f64 = 0.0;
            for _ in 0..PANEL_CHUNK.min(n - c * PANEL_CHUNK) {
                let x: Vec<f64> = (0..d).map(|j| rng.gen_range(blo[j] as f64..bhi[j] as f64)).collect();
                if dom.contains(&x) {
                    mx = mx.max((reference.value(&x) - approx(&x)).abs());
                }
            }
            mx
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

/// One row of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r: u32,
    pub n: usize,
    pub error: f64,
    pub stderr: f64,
    pub quad_mode: String,
    pub seed: u64,
    pub warnings: Vec<String>,
}

pub const SWEEP_HEADER: &str = "r,n,error,stderr,quad_mode,seed";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!("{},{},{:e},{:e},{},{}", self.r, self.n, self.error, self.stderr, self.quad_mode, self.seed)
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Recovers `function` for every `r` in `rmin..=rmax` and measures the
/// `L_q` error of `D^lambda`.
pub fn convergence_sweep(
    dom: &dyn MType,
    params: &RecoveryParams,
    rmin: u32,
    rmax: u32,
    function: &TestFunction,
    quad: &QuadSpec,
) -> Result<Vec<SweepRow>> {
    if rmin < 1 || rmin > rmax {
        return Err(Error::Parameter(format!("need 1 <= rmin <= rmax, got {rmin}..{rmax}")));
    }
    function.check(params.d, &params.lambda)?;
    let f = function.oracle();
    let lambda = params.lambda.to_vec();
    let reference = function.deriv_oracle(&lambda);
    (rmin..=rmax)
        .into_par_iter()
        .map(|r| {
            let (plan, rec) = build_reconstruction(dom, params, r, &f)?;
            let rep = lq_error(&rec, &reference, quad, dom)?;
            Ok(SweepRow {
                r,
                n: plan.len(),
                error: rep.value,
                stderr: rep.stderr,
                quad_mode: quad.mode.to_string(),
                seed: quad.seed(),
                warnings: rep.warnings,
            })
        })
        .collect()
}

/// Least-squares fit of `ln e = a + s ln n + E ln ln n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub intercept: f64,
    pub slope: f64,
    pub log_exponent: f64,
    /// Root mean square residual in `ln e`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub free: Fit,
    /// Fit with `E` held at the supplied value.
    pub fixed: Option<Fit>,
}

fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let a = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::DegenerateFit(format!("design matrix is rank deficient (singular values {smin:e} / {smax:e})")));
    }
    let x = svd.solve(&b, 0.0).map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let res = &a * &x - &b;
    Ok((x.iter().copied().collect(), (res.norm_squared() / y.len() as f64).sqrt()))
}

/// Fits the rows `(n, error)`; `fixed_log_exponent` adds the fit with `E`
/// pinned.
pub fn fit_rate(table: &[(f64, f64)], fixed_log_exponent: Option<f64>) -> Result<RateFit> {
    if table.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 rows, got {}", table.len())));
    }
    if let Some((n, e)) = table.iter().find(|(n, e)| !(*n > 1.0 && *e > 0.0 && n.is_finite() && e.is_finite())) {
        return Err(Error::DegenerateFit(format!("row (n={n}, error={e}) has no logarithm")));
    }
    let y: Vec<f64> = table.iter().map(|(_, e)| e.ln()).collect();
    let rows: Vec<Vec<f64>> = table.iter().map(|(n, _)| vec![1.0, n.ln(), n.ln().ln()]).collect();
    let (c, residual) = lstsq(&rows, &y)?;
    let free = Fit { intercept: c[0], slope: c[1], log_exponent: c[2], residual };
    let fixed = match fixed_log_exponent {
        None => None,
        Some(ex) => {
            let y2: Vec<f64> = table.iter().zip(&y).map(|((n, _), v)| v - ex * n.ln().ln()).collect();
            let rows2: Vec<Vec<f64>> = rows.iter().map(|r| r[..2].to_vec()).collect();
            let (c, residual) = lstsq(&rows2, &y2)?;
            Some(Fit { intercept: c[0], slope: c[1], log_exponent: ex, residual })
        }
    };
    Ok(RateFit { free, fixed })
}

/// Cells of the plan as seen by `dom`: every one lies inside `D`.
pub fn plan_cells_inside(dom: &dyn MType, plan: &SamplePlan) -> bool {
    plan.cells.iter().all(|c| crate::domain::cell_inside(dom, &c.level, &c.cell)) && plan.cells.iter().all(|c| cell_meets(dom, &c.level, &c.cell))
}
