//! Quasi-interpolants, prolongation, the telescoped per-translate
//! polynomials and the evaluable reconstruction.
//!
//! A layer at level `K0 + kappa` is `sum_nu V_nu(x) g_{K0+kappa,nu}(x)` where
//! `V_nu` is the alternating sum over `eps ⊂ s(kappa)` of refinement-weighted
//! Lagrange interpolants taken on coarser interior cells. Every `V_nu` is
//! stored in the frame of its own translate: anchor `2^-level nu`, scale
//! `2^-level`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::bspline::{g_eval, piece_table, ScaledTranslate};
use crate::domain::{cell_map_nu, cell_meets, enumerate_n, IndexRange, MType};
use crate::error::{Error, Result};
use crate::indexkit::{binomial, eps_subsets, parent_links, MultiIndex, RecoveryParams};
use crate::polylag::{deriv_monomials, interpolate_cell, tensor_node, LocalPoly};

/// Point-evaluation oracle. Must be safe to call concurrently.
pub trait Oracle: Sync {
    fn value(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64 + Sync> Oracle for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

pub(crate) fn checked_value(f: &dyn Oracle, x: &[f64]) -> Result<f64> {
    let v = f.value(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Oracle { point: x.to_vec(), reason: format!("non-finite value {v}") })
    }
}

/// Frame of the translate/cell `nu` at `level`.
pub fn cell_frame(level: &[u32], nu: &[i64]) -> (Vec<f64>, Vec<f64>) {
    let scale: Vec<f64> = level.iter().map(|&k| 2f64.powi(-(k as i32))).collect();
    let anchor = nu.iter().zip(&scale).map(|(&v, &s)| v as f64 * s).collect();
    (anchor, scale)
}

/// Lagrange interpolant of `f` on the interior cell `Q_{level,cell}`.
pub fn cell_interpolant(f: &dyn Oracle, level: &[u32], cell: &[i64], nodes: &[usize]) -> Result<LocalPoly> {
    let (anchor, scale) = cell_frame(level, cell);
    let n: usize = nodes.iter().product();
    let range = IndexRange { lo: vec![0; nodes.len()], shape: nodes.to_vec() };
    let values = (0..n)
        .map(|i| {
            let rho: Vec<usize> = range.unflat(i).into_iter().map(|v| v as usize).collect();
            checked_value(f, &tensor_node(&anchor, &scale, nodes, &rho))
        })
        .collect::<Result<Vec<_>>>()?;
    interpolate_cell(&anchor, &scale, nodes, &values)
}

/// `sum_nu f_nu(x) g_{level,nu}(x)` over the active translates.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineExpansion {
    pub level: MultiIndex,
    pub m: MultiIndex,
    pub terms: BTreeMap<Vec<i64>, LocalPoly>,
}

impl SplineExpansion {
    pub fn translate(&self, nu: &[i64]) -> ScaledTranslate {
        ScaledTranslate::new(self.level.clone(), nu.to_vec(), self.m.clone())
    }

    /// `D^lambda` of the expansion at `x` by the Leibniz rule.
    pub fn eval_deriv(&self, lambda: &[u32], x: &[f64]) -> Result<f64> {
        if let Some(j) = (0..lambda.len()).find(|&j| lambda[j] > self.m[j]) {
            return Err(Error::Parameter(format!(
                "derivative order {} exceeds spline order {} on axis {}",
                lambda[j],
                self.m[j],
                j + 1
            )));
        }
        let d = x.len();
        let base: Vec<i64> = (0..d)
            .map(|j| (x[j] * 2f64.powi(self.level[j] as i32)).floor() as i64)
            .collect();
        let mut acc = 0.0;
        for off in self.m.box_below() {
            let nu: Vec<i64> = (0..d).map(|j| base[j] - off[j] as i64).collect();
            let Some(poly) = self.terms.get(&nu) else { continue };
            acc += leibniz(poly, &self.translate(&nu), lambda, x)?;
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_deriv(&vec![0; x.len()], x)
    }
}

/// `D^lambda (p g)(x) = sum_{mu <= lambda} C(lambda, mu) D^{lambda-mu} p(x) D^mu g(x)`.
pub fn leibniz(p: &LocalPoly, g: &ScaledTranslate, lambda: &[u32], x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for mu in MultiIndex::new(lambda.to_vec()).box_below() {
        let dg = g_eval(g, &mu, x)?;
        if dg == 0.0 {
            continue;
        }
        let rest: Vec<u32> = lambda.iter().zip(mu.iter()).map(|(a, b)| a - b).collect();
        let c: u64 = lambda.iter().zip(mu.iter()).map(|(&a, &b)| binomial(a, b)).product();
        acc += c as f64 * p.eval_deriv(&rest, x) * dg;
    }
    Ok(acc)
}

/// Quasi-interpolant `R_level f`: each active translate carries the
/// Lagrange interpolant of `f` on its selected interior cell.
pub fn quasi_interp_r(dom: &dyn MType, level: &[u32], nodes: &[usize], f: &dyn Oracle) -> Result<SplineExpansion> {
    let mut terms = BTreeMap::new();
    for nu in enumerate_n(dom, level) {
        let cell = cell_map_nu(dom, level, &nu)?;
        terms.insert(nu, cell_interpolant(f, level, &cell, nodes)?);
    }
    Ok(SplineExpansion { level: MultiIndex::new(level.to_vec()), m: dom.m().clone(), terms })
}

/// Prolongation `H`: re-expands `exp` (level `k - eps`) at level `k` using
/// the two-scale relation on the axes in `s(eps)`.
pub fn prolong_h(dom: &dyn MType, exp: &SplineExpansion, eps: &[u32]) -> Result<SplineExpansion> {
    if eps.iter().all(|&e| e == 0) {
        return Ok(exp.clone());
    }
    let level: Vec<u32> = exp.level.iter().zip(eps).map(|(k, e)| k + e).collect();
    let m: Vec<u32> = dom.m().to_vec();
    let mut terms = BTreeMap::new();
    for nu in enumerate_n(dom, &level) {
        let (anchor, scale) = cell_frame(&level, &nu);
        let mut acc: Option<LocalPoly> = None;
        for link in parent_links(&nu, eps, &m) {
            let parent = exp.terms.get(&link.parent).ok_or_else(|| {
                Error::Internal(format!(
                    "missing parent {:?} at level {} for translate {nu:?}",
                    link.parent, exp.level
                ))
            })?;
            let moved = parent.reframe(&anchor, &scale);
            acc = Some(match acc {
                None => LocalPoly::zero(anchor.clone(), scale.clone(), moved.shape.clone()).axpy(link.weight, &moved)?,
                Some(a) => a.axpy(link.weight, &moved)?,
            });
        }
        if let Some(p) = acc {
            terms.insert(nu, p);
        }
    }
    Ok(SplineExpansion { level: MultiIndex::new(level), m: exp.m.clone(), terms })
}

/// One weighted interpolant contributing to `V_{kappa,nu}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VTerm {
    /// `(-1)^{|eps|} A_mu`.
    pub weight: f64,
    pub level: Vec<u32>,
    pub cell: Vec<i64>,
}

/// Expansion of `V_{K0,kappa,nu}` into weighted interior-cell references,
/// in the fixed order `eps` lexicographic, then `mu` lexicographic.
pub fn v_terms(dom: &dyn MType, kappa: &[u32], nu: &[i64]) -> Result<Vec<VTerm>> {
    let k0 = dom.kappa0();
    let level: Vec<u32> = kappa.iter().zip(k0.iter()).map(|(a, b)| a + b).collect();
    let m: Vec<u32> = dom.m().to_vec();
    let mut out = vec![];
    for eps in eps_subsets(kappa) {
        let sign = if eps.order() % 2 == 0 { 1.0 } else { -1.0 };
        let coarse: Vec<u32> = level.iter().zip(eps.iter()).map(|(a, b)| a - b).collect();
        for link in parent_links(nu, &eps, &m) {
            let cell = cell_map_nu(dom, &coarse, &link.parent)?;
            out.push(VTerm { weight: sign * link.weight, level: coarse.clone(), cell });
        }
    }
    Ok(out)
}

fn combine_v(level: &[u32], nu: &[i64], terms: &[VTerm], interp: &mut dyn FnMut(&VTerm) -> Result<LocalPoly>) -> Result<LocalPoly> {
    let (anchor, scale) = cell_frame(level, nu);
    let mut acc: Option<LocalPoly> = None;
    for t in terms {
        let moved = interp(t)?.reframe(&anchor, &scale);
        acc = Some(match acc {
            None => LocalPoly::zero(anchor.clone(), scale.clone(), moved.shape.clone()).axpy(t.weight, &moved)?,
            Some(a) => a.axpy(t.weight, &moved)?,
        });
    }
    acc.ok_or_else(|| Error::Internal(format!("no terms for translate {nu:?}")))
}

/// `V_{K0,kappa,nu} f` evaluated directly from the oracle.
pub fn telescoped_v(dom: &dyn MType, kappa: &[u32], nu: &[i64], nodes: &[usize], f: &dyn Oracle) -> Result<LocalPoly> {
    let level: Vec<u32> = kappa.iter().zip(dom.kappa0().iter()).map(|(a, b)| a + b).collect();
    let terms = v_terms(dom, kappa, nu)?;
    combine_v(&level, nu, &terms, &mut |t| cell_interpolant(f, &t.level, &t.cell, nodes))
}

/// `sum_{kappa in cross} layer_kappa`, each layer the telescoped expansion.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub params: RecoveryParams,
    pub kappa0: MultiIndex,
    pub cross: Vec<MultiIndex>,
    pub layers: Vec<SplineExpansion>,
}

/// Interior-cell interpolants keyed by `(level, cell)`.
pub type InterpolantCache = HashMap<(Vec<u32>, Vec<i64>), LocalPoly>;

impl Reconstruction {
    /// Builds every layer from precomputed interior-cell interpolants.
    pub fn assemble(dom: &dyn MType, params: &RecoveryParams, cross: &[MultiIndex], cache: &InterpolantCache) -> Result<Self> {
        let k0 = dom.kappa0();
        let layers = cross
            .par_iter()
            .map(|kappa| {
                let level: Vec<u32> = kappa.add(&k0).to_vec();
                let mut terms = BTreeMap::new();
                for nu in enumerate_n(dom, &level) {
                    let vt = v_terms(dom, kappa, &nu)?;
                    let poly = combine_v(&level, &nu, &vt, &mut |t| {
                        cache.get(&(t.level.clone(), t.cell.clone())).cloned().ok_or_else(|| {
                            Error::Internal(format!("cell {:?} at level {:?} was not sampled", t.cell, t.level))
                        })
                    })?;
                    terms.insert(nu, poly);
                }
                Ok(SplineExpansion { level: MultiIndex::new(level), m: dom.m().clone(), terms })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Reconstruction { params: params.clone(), kappa0: k0, cross: cross.to_vec(), layers })
    }

    pub fn layer(&self, kappa: &MultiIndex) -> Option<&SplineExpansion> {
        self.cross.iter().position(|k| k == kappa).map(|i| &self.layers[i])
    }

    /// `D^lambda` of the reconstruction at `x`, summed in cross order.
    pub fn eval_deriv(&self, lambda: &[u32], x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for layer in &self.layers {
            acc += layer.eval_deriv(lambda, x)?;
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_deriv(&vec![0; x.len()], x)
    }

    /// Piecewise-polynomial form of `D^lambda` of every layer.
    pub fn compile(&self, dom: &dyn MType, lambda: &[u32]) -> Result<CompiledDerivative> {
        CompiledDerivative::new(self, dom, lambda)
    }
}

/// One layer of [`CompiledDerivative`]: a polynomial per cell of its level.
#[derive(Debug, Clone)]
pub struct CompiledLayer {
    pub level: Vec<u32>,
    pub cells: IndexRange,
    /// Per-axis coefficient count.
    pub shape: Vec<usize>,
    stride: usize,
    coeffs: Vec<f64>,
    present: Vec<bool>,
}

/// `D^lambda` of a reconstruction as cellwise polynomials in the local
/// coordinate `t = 2^level x - cell`, for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledDerivative {
    pub lambda: Vec<u32>,
    pub layers: Vec<CompiledLayer>,
    pub d: usize,
}

impl CompiledDerivative {
    fn new(rec: &Reconstruction, dom: &dyn MType, lambda: &[u32]) -> Result<Self> {
        let m = &rec.params.m;
        if let Some(j) = (0..lambda.len()).find(|&j| lambda[j] > m[j]) {
            return Err(Error::Parameter(format!(
                "derivative order {} exceeds spline order {} on axis {}",
                lambda[j],
                m[j],
                j + 1
            )));
        }
        let d = rec.params.d;
        let layers = rec
            .layers
            .par_iter()
            .map(|layer| compile_layer(layer, dom, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledDerivative { lambda: lambda.to_vec(), layers, d })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Value at `x` (right-continuous at cell faces).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.d;
        let mut acc = 0.0;
        let mut cell = vec![0i64; d];
        let mut basis: Vec<Vec<f64>> = vec![vec![]; d];
        for layer in &self.layers {
            for j in 0..d {
                let y = x[j] * 2f64.powi(layer.level[j] as i32);
                let c = y.floor();
                cell[j] = c as i64;
                basis[j] = deriv_monomials(layer.shape[j], 0, y - c, 1.0);
            }
            let Some(idx) = layer.cells.flat(&cell) else { continue };
            if !layer.present[idx] {
                continue;
            }
            let coeffs = &layer.coeffs[idx * layer.stride..(idx + 1) * layer.stride];
            acc += crate::polylag::contract(coeffs, &layer.shape, &basis);
        }
        acc
    }

    /// Values at the tensor grid `panel + nodes` of a dyadic panel of side
    /// `2^-panel_level`, written row-major into `out` (length `G^d`).
    pub fn eval_panel(&self, panel_level: u32, panel: &[i64], nodes: &[f64], out: &mut [f64], scratch: &mut PanelScratch) {
        let d = self.d;
        let g = nodes.len();
        out.iter_mut().for_each(|v| *v = 0.0);
        let inv = 2f64.powi(-(panel_level as i32));
        for layer in &self.layers {
            if layer.level.iter().any(|&k| k > panel_level) {
                // panel straddles cells of this layer: pointwise
                let mut x = vec![0.0; d];
                for (i, o) in out.iter_mut().enumerate() {
                    let mut rem = i;
                    for j in (0..d).rev() {
                        x[j] = (panel[j] as f64 + nodes[rem % g]) * inv;
                        rem /= g;
                    }
                    *o += self.eval_layer(layer, &x);
                }
                continue;
            }
            let mut cell = vec![0i64; d];
            for j in 0..d {
                let shift = panel_level - layer.level[j];
                cell[j] = panel[j] >> shift;
                let off = (panel[j] - (cell[j] << shift)) as f64;
                let w = 2f64.powi(-(shift as i32));
                let b = &mut scratch.bases[j];
                b.clear();
                for &nd in nodes {
                    let t = (off + nd) * w;
                    let mut pw = 1.0;
                    for _ in 0..layer.shape[j] {
                        b.push(pw);
                        pw *= t;
                    }
                }
            }
            let Some(idx) = layer.cells.flat(&cell) else { continue };
            if !layer.present[idx] {
                continue;
            }
            let coeffs = &layer.coeffs[idx * layer.stride..(idx + 1) * layer.stride];
            grid_contract(coeffs, &layer.shape, g, &scratch.bases, &mut scratch.a, &mut scratch.b);
            for (o, v) in out.iter_mut().zip(&scratch.a) {
                *o += v;
            }
        }
    }

    fn eval_layer(&self, layer: &CompiledLayer, x: &[f64]) -> f64 {
        let d = self.d;
        let mut cell = vec![0i64; d];
        let mut basis = vec![vec![]; d];
        for j in 0..d {
            let y = x[j] * 2f64.powi(layer.level[j] as i32);
            let c = y.floor();
            cell[j] = c as i64;
            basis[j] = deriv_monomials(layer.shape[j], 0, y - c, 1.0);
        }
        match layer.cells.flat(&cell) {
            Some(idx) if layer.present[idx] => {
                crate::polylag::contract(&layer.coeffs[idx * layer.stride..(idx + 1) * layer.stride], &layer.shape, &basis)
            }
            _ => 0.0,
        }
    }

    pub fn scratch(&self) -> PanelScratch {
        PanelScratch { bases: vec![vec![]; self.d], a: vec![], b: vec![] }
    }
}

/// Reusable buffers for [`CompiledDerivative::eval_panel`].
#[derive(Debug, Clone, Default)]
pub struct PanelScratch {
    bases: Vec<Vec<f64>>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Contracts axis by axis: `coeffs[n_0..n_{d-1}]` against `bases[j][g][n_j]`,
/// leaving `G^d` values in `a`.
fn grid_contract(coeffs: &[f64], shape: &[usize], g: usize, bases: &[Vec<f64>], a: &mut Vec<f64>, b: &mut Vec<f64>) {
    let d = shape.len();
    a.clear();
    a.extend_from_slice(coeffs);
    let mut cur: Vec<usize> = shape.to_vec();
    for j in 0..d {
        let outer: usize = cur[..j].iter().product();
        let inner: usize = cur[j + 1..].iter().product();
        let n = cur[j];
        b.clear();
        b.resize(outer * g * inner, 0.0);
        let basis = &bases[j];
        for o in 0..outer {
            for k in 0..g {
                let row = &basis[k * n..(k + 1) * n];
                let dst = &mut b[(o * g + k) * inner..(o * g + k + 1) * inner];
                for (e, &w) in row.iter().enumerate() {
                    let src = &a[(o * n + e) * inner..(o * n + e + 1) * inner];
                    for (dv, sv) in dst.iter_mut().zip(src) {
                        *dv += w * sv;
                    }
                }
            }
        }
        std::mem::swap(a, b);
        cur[j] = g;
    }
}

fn compile_layer(layer: &SplineExpansion, dom: &dyn MType, lambda: &[u32]) -> Result<CompiledLayer> {
    let level: Vec<u32> = layer.level.to_vec();
    let d = level.len();
    let m = &layer.m;
    let cells = IndexRange::cells(dom, &level);
    let deg_v: Vec<usize> = (0..d)
        .map(|j| layer.terms.values().map(|p| p.shape[j]).max().unwrap_or(1))
        .collect();
    let shape: Vec<usize> = (0..d).map(|j| deg_v[j] + m[j] as usize).collect();
    let stride: usize = shape.iter().product();
    let mut coeffs = vec![0.0; cells.len() * stride];
    let mut present = vec![false; cells.len()];
    for (idx, cell) in cells.iter().enumerate() {
        if !cell_meets(dom, &level, &cell) {
            continue;
        }
        let (anchor, scale) = cell_frame(&level, &cell);
        let mut acc = LocalPoly::zero(anchor.clone(), scale.clone(), shape.clone());
        for off in m.box_below() {
            let nu: Vec<i64> = (0..d).map(|j| cell[j] - off[j] as i64).collect();
            let Some(v) = layer.terms.get(&nu) else { continue };
            let pieces: Vec<&[f64]> = (0..d).map(|j| piece_table(m[j]).deriv_piece(0, off[j] as usize)).collect();
            let prod = v.reframe(&anchor, &scale).mul_separable(&pieces).derivative(lambda);
            acc = acc.axpy(1.0, &prod)?;
        }
        let acc = acc.padded(&shape);
        if acc.shape != shape {
            return Err(Error::Internal(format!("compiled cell shape {:?} != {:?}", acc.shape, shape)));
        }
        coeffs[idx * stride..(idx + 1) * stride].copy_from_slice(&acc.coeffs);
        present[idx] = true;
    }
    Ok(CompiledLayer { level, cells, shape, stride, coeffs, present })
}
