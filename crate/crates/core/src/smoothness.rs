//! Mixed differences, sup and averaged mixed moduli of smoothness, and the
//! Nikolskii/Besov gauge estimators built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::MType;
use crate::error::{param, Result};
use crate::indexkit::{binomial, smoothness_order, MultiIndex};
use crate::multiscale::Oracle;
use crate::quadrature::CompensatedSum;

/// Open region the moduli are taken over.
pub trait Region: Sync {
    fn dim(&self) -> usize;
    /// Bounding box `(lo, hi)`.
    fn bbox(&self) -> (Vec<f64>, Vec<f64>);
    fn contains(&self, x: &[f64]) -> bool;
    /// Closed box `[lo, hi]` lies inside the region.
    fn closed_box_inside(&self, lo: &[f64], hi: &[f64]) -> bool;
}

impl<T: MType + ?Sized> Region for T {
    fn dim(&self) -> usize {
        MType::dim(self)
    }

    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.bounds();
        (lo.iter().map(|&v| v as f64).collect(), hi.iter().map(|&v| v as f64).collect())
    }

    fn contains(&self, x: &[f64]) -> bool {
        MType::contains(self, x)
    }

    fn closed_box_inside(&self, lo: &[f64], hi: &[f64]) -> bool {
        MType::closed_box_inside(self, lo, hi)
    }
}

impl Region for &dyn MType {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        Region::bbox(*self)
    }

    fn contains(&self, x: &[f64]) -> bool {
        MType::contains(*self, x)
    }

    fn closed_box_inside(&self, lo: &[f64], hi: &[f64]) -> bool {
        MType::closed_box_inside(*self, lo, hi)
    }
}

/// Open axis-parallel box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    /// `(0,1)^d`.
    pub fn unit(d: usize) -> Self {
        BoxRegion { lo: vec![0.0; d], hi: vec![1.0; d] }
    }
}

impl Region for BoxRegion {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn bbox(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }

    fn contains(&self, x: &[f64]) -> bool {
        (0..x.len()).all(|j| x[j] > self.lo[j] && x[j] < self.hi[j])
    }

    fn closed_box_inside(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..lo.len()).all(|j| lo[j] > self.lo[j] && hi[j] < self.hi[j])
    }
}

/// `sum_k (-1)^{|l-k|} C(l,k) f(x + k h)`, or `None` when the box spanned by
/// `x` and `x + l h` leaves `D`.
pub fn mixed_diff(f: &dyn Oracle, l: &[u32], h: &[f64], x: &[f64], dom: &dyn Region) -> Option<f64> {
    let d = x.len();
    let mut lo = vec![0.0; d];
    let mut hi = vec![0.0; d];
    for j in 0..d {
        let end = x[j] + l[j] as f64 * h[j];
        lo[j] = x[j].min(end);
        hi[j] = x[j].max(end);
    }
    if !dom.closed_box_inside(&lo, &hi) {
        return None;
    }
    Some(diff_unchecked(f, l, h, x))
}

fn diff_unchecked(f: &dyn Oracle, l: &[u32], h: &[f64], x: &[f64]) -> f64 {
    let mut y = x.to_vec();
    let mut acc = 0.0;
    for k in MultiIndex::new(l.to_vec()).box_below() {
        let mut c = 1.0;
        for j in 0..x.len() {
            y[j] = x[j] + k[j] as f64 * h[j];
            c *= binomial(l[j], k[j]) as f64;
        }
        if (l.iter().sum::<u32>() - k.order()) % 2 == 1 {
            c = -c;
        }
        acc += c * f.value(&y);
    }
    acc
}

/// Order `l chi_J` with shift bounds `t` on the axes of `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulusRequest {
    /// Axes of `J`, 0-based, ascending.
    pub axes: Vec<usize>,
    pub l: MultiIndex,
    /// `t_j` for each entry of `axes`.
    pub t: Vec<f64>,
    pub p: f64,
}

impl ModulusRequest {
    pub fn new(axes: Vec<usize>, l: MultiIndex, t: Vec<f64>, p: f64) -> Result<Self> {
        if axes.is_empty() {
            return param("the axis set J must be nonempty");
        }
        if axes.len() != t.len() {
            return param(format!("{} axes but {} shift bounds", axes.len(), t.len()));
        }
        if axes.iter().any(|&j| j >= l.dim()) || axes.windows(2).any(|w| w[0] >= w[1]) {
            return param(format!("axes {axes:?} must be ascending and below {}", l.dim()));
        }
        if let Some(bad) = t.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
            return param(format!("shift bounds must be positive, got {bad}"));
        }
        if !(p >= 1.0) {
            return param(format!("p must be at least 1, got {p}"));
        }
        Ok(ModulusRequest { axes, l, t, p })
    }

    /// `l chi_J`.
    pub fn order(&self) -> Vec<u32> {
        let mut out = vec![0; self.l.dim()];
        for &j in &self.axes {
            out[j] = self.l[j];
        }
        out
    }
}

/// Estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    /// Fraction of draws falling outside `D_xi` (or `D`).
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSpec {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec { samples: 10_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupSpec {
    /// Shifts per axis of `J` on the uniform grid of `[-t, t]`.
    pub grid: usize,
    /// Extra seeded random shifts.
    pub random: usize,
    /// Midpoint rule in `x`: points per axis of the bounding box.
    pub x_points: usize,
    pub seed: u64,
}

impl Default for SupSpec {
    fn default() -> Self {
        SupSpec { grid: 9, random: 16, x_points: 64, seed: 1 }
    }
}

const BATCH: usize = 2048;

pub(crate) fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Moments of `sum w` and `sum w^2` over `samples` seeded draws, in batches
/// reduced in fixed order.
pub(crate) fn mc_moments(samples: usize, seed: u64, draw: &(dyn Fn(&mut ChaCha8Rng) -> Option<f64> + Sync)) -> (f64, f64, usize) {
    let batches = samples.div_ceil(BATCH);
    let parts: Vec<(f64, f64, usize)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(seed, b);
            let count = BATCH.min(samples - b * BATCH);
            let mut s = CompensatedSum::default();
            let mut s2 = CompensatedSum::default();
            let mut rejected = 0;
            for _ in 0..count {
                match draw(&mut rng) {
                    Some(w) => {
                        s.add(w);
                        s2.add(w * w);
                    }
                    None => rejected += 1,
                }
            }
            (s.value(), s2.value(), rejected)
        })
        .collect();
    let mut s = CompensatedSum::default();
    let mut s2 = CompensatedSum::default();
    let mut rejected = 0;
    for (a, b, r) in parts {
        s.add(a);
        s2.add(b);
        rejected += r;
    }
    (s.value(), s2.value(), rejected)
}

/// `(vol * mean)^{1/p}` with the delta-method standard error.
pub(crate) fn pth_root_estimate(vol: f64, sum: f64, sum2: f64, n: usize, p: f64, rejected: usize) -> Estimate {
    let nf = n as f64;
    let mean = sum / nf;
    let var = (sum2 / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
    let m = vol * mean;
    let se_m = vol * (var / nf).sqrt();
    let (value, stderr) = if m > 0.0 {
        let v = m.powf(1.0 / p);
        (v, v / (p * m) * se_m)
    } else {
        (0.0, 0.0)
    };
    Estimate { value, stderr, rejection_rate: rejected as f64 / nf }
}

pub(crate) fn volume(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter().zip(hi).map(|(a, b)| b - a).product()
}

/// Averaged modulus `Omega'`: joint Monte Carlo over `xi in tB` (axes of
/// `J`) and `x` in the bounding box, with rejection for `x notin D_xi`.
pub fn modulus_avg(f: &dyn Oracle, req: &ModulusRequest, dom: &dyn Region, mc: McSpec) -> Result<Estimate> {
    if req.p.is_infinite() {
        return modulus_sup(f, req, dom, SupSpec { seed: mc.seed, ..SupSpec::default() });
    }
    if mc.samples < 100 {
        return param(format!("Monte Carlo needs at least 100 samples, got {}", mc.samples));
    }
    let d = dom.dim();
    let (lo, hi) = dom.bbox();
    let l = req.order();
    // draws outside D_xi contribute zero and count as rejected
    let draw_tracked = |rng: &mut ChaCha8Rng| -> Option<f64> {
        let x: Vec<f64> = (0..d).map(|j| rng.gen_range(lo[j]..hi[j])).collect();
        let mut h = vec![0.0; d];
        for (k, &j) in req.axes.iter().enumerate() {
            h[j] = rng.gen_range(-req.t[k]..req.t[k]);
        }
        mixed_diff(f, &l, &h, &x, dom).map(|v| v.abs().powf(req.p))
    };
    let (s, s2, rejected) = mc_moments(mc.samples, mc.seed, &draw_tracked);
    Ok(pth_root_estimate(volume(&lo, &hi), s, s2, mc.samples, req.p, rejected))
}

/// Shifts used by [`modulus_sup`]: the grid on `[-t, t]^J` then seeded
/// random shifts.
fn sup_shifts(req: &ModulusRequest, d: usize, spec: &SupSpec) -> Vec<Vec<f64>> {
    let k = req.axes.len();
    let g = spec.grid.max(2);
    let mut out = vec![];
    let total = g.pow(k as u32);
    for i in 0..total {
        let mut rem = i;
        let mut h = vec![0.0; d];
        for (a, &j) in req.axes.iter().enumerate().rev() {
            let s = rem % g;
            rem /= g;
            h[j] = req.t[a] * (-1.0 + 2.0 * s as f64 / (g - 1) as f64);
        }
        out.push(h);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.random {
        let mut h = vec![0.0; d];
        for (a, &j) in req.axes.iter().enumerate() {
            h[j] = rng.gen_range(-req.t[a]..req.t[a]);
        }
        out.push(h);
    }
    out
}

/// `||Delta_h f||_{L_p(D_h)}` by the midpoint rule on the bounding box.
fn shifted_norm(f: &dyn Oracle, l: &[u32], h: &[f64], dom: &dyn Region, p: f64, n: usize) -> f64 {
    let d = dom.dim();
    let (lo, hi) = dom.bbox();
    let total = n.pow(d as u32);
    let cell_vol = volume(&lo, &hi) / total as f64;
    let mut x = vec![0.0; d];
    let mut acc = CompensatedSum::default();
    let mut mx: f64 = 0.0;
    for i in 0..total {
        let mut rem = i;
        for j in (0..d).rev() {
            x[j] = lo[j] + (hi[j] - lo[j]) * ((rem % n) as f64 + 0.5) / n as f64;
            rem /= n;
        }
        if let Some(v) = mixed_diff(f, l, h, &x, dom) {
            if p.is_infinite() {
                mx = mx.max(v.abs());
            } else {
                acc.add(v.abs().powf(p));
            }
        }
    }
    if p.is_infinite() {
        mx
    } else {
        (acc.value() * cell_vol).powf(1.0 / p)
    }
}

/// Sup modulus `Omega` estimated as a max over a finite shift set; a lower
/// estimate of the true supremum.
pub fn modulus_sup(f: &dyn Oracle, req: &ModulusRequest, dom: &dyn Region, spec: SupSpec) -> Result<Estimate> {
    if spec.x_points == 0 {
        return param("x_points must be positive");
    }
    let l = req.order();
    let shifts = sup_shifts(req, dom.dim(), &spec);
    let norms: Vec<f64> = shifts
        .par_iter()
        .map(|h| shifted_norm(f, &l, h, dom, req.p, spec.x_points))
        .collect();
    let value = norms.iter().cloned().fold(0.0, f64::max);
    Ok(Estimate { value, stderr: 0.0, rejection_rate: 0.0 })
}

/// Geometric grid `t = 2^-i`, `i = 0..=imax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    pub imax: u32,
}

impl Default for TGrid {
    fn default() -> Self {
        TGrid { imax: 10 }
    }
}

/// Smoothness parameters of a class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub alpha: Vec<f64>,
    pub p: f64,
    /// `f64::INFINITY` for the Nikolskii class.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeminormEstimate {
    /// `max_J` of the per-`J` quantities.
    pub seminorm: f64,
    /// Per-`J` quantity, `J` as 0-based axes.
    pub per_axes: Vec<(Vec<usize>, f64)>,
    pub norm_p: Estimate,
    /// `max(||f||_p, seminorm)`: `f / gauge` satisfies every class
    /// inequality with bound 1.
    pub gauge: f64,
}

fn nonempty_subsets(d: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << d)).map(|mask| (0..d).filter(|&j| mask >> j & 1 == 1).collect()).collect()
}

/// `||f||_p` by Monte Carlo over the bounding box.
pub fn lp_norm_mc(f: &dyn Oracle, dom: &dyn Region, p: f64, mc: McSpec) -> Result<Estimate> {
    if mc.samples < 100 {
        return param(format!("Monte Carlo needs at least 100 samples, got {}", mc.samples));
    }
    let d = dom.dim();
    let (lo, hi) = dom.bbox();
    let draw = |rng: &mut ChaCha8Rng| -> Option<f64> {
        let x: Vec<f64> = (0..d).map(|j| rng.gen_range(lo[j]..hi[j])).collect();
        dom.contains(&x).then(|| f.value(&x).abs().powf(p))
    };
    let (s, s2, rejected) = mc_moments(mc.samples, mc.seed ^ 0x5eed, &draw);
    Ok(pth_root_estimate(volume(&lo, &hi), s, s2, mc.samples, p, rejected))
}

/// Class seminorm of `f`: for `theta = inf` the max over `J` and the
/// t-grid of `t^-alpha Omega'`; otherwise the `theta`-integral over
/// `dt/t` by the trapezoid rule in `log t` on the same grid.
pub fn seminorm_estimate(f: &dyn Oracle, class: &ClassSpec, dom: &dyn Region, grid: TGrid, mc: McSpec) -> Result<SeminormEstimate> {
    let d = dom.dim();
    if class.alpha.len() != d {
        return param(format!("alpha has {} entries for dimension {d}", class.alpha.len()));
    }
    if !(class.theta >= 1.0) {
        return param(format!("theta must lie in [1, inf], got {}", class.theta));
    }
    let l = smoothness_order(&class.alpha)?;
    let n_t = grid.imax as usize + 1;
    let mut per_axes = vec![];
    for axes in nonempty_subsets(d) {
        let k = axes.len();
        let total = n_t.pow(k as u32);
        let mut acc = CompensatedSum::default();
        let mut best: f64 = 0.0;
        for idx in 0..total {
            let mut rem = idx;
            let mut exps = vec![0u32; k];
            for e in exps.iter_mut().rev() {
                *e = (rem % n_t) as u32;
                rem /= n_t;
            }
            let t: Vec<f64> = exps.iter().map(|&i| 2f64.powi(-(i as i32))).collect();
            let req = ModulusRequest::new(axes.clone(), l.clone(), t.clone(), class.p)?;
            // one seed per (J, t) cell of the grid
            let seed = mc.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ ((axes.iter().fold(0u64, |a, &j| a | 1 << j)) << 32) ^ idx as u64;
            let om = modulus_avg(f, &req, dom, McSpec { samples: mc.samples, seed })?.value;
            let weight: f64 = axes.iter().zip(&t).map(|(&j, &tj)| tj.powf(-class.alpha[j])).product();
            let g = weight * om;
            if class.theta.is_infinite() {
                best = best.max(g);
            } else {
                let trap: f64 = exps
                    .iter()
                    .map(|&i| if i == 0 || i == grid.imax { 0.5 } else { 1.0 } * std::f64::consts::LN_2)
                    .product();
                acc.add(trap * g.powf(class.theta));
            }
        }
        let v = if class.theta.is_infinite() { best } else { acc.value().powf(1.0 / class.theta) };
        per_axes.push((axes, v));
    }
    let seminorm = per_axes.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let norm_p = lp_norm_mc(f, dom, class.p, mc)?;
    let gauge = seminorm.max(norm_p.value);
    Ok(SeminormEstimate { seminorm, per_axes, norm_p, gauge })
}
