//! m-type domains with exact dyadic geometry.
//!
//! Boxes are described by integer numerators over per-axis powers of two,
//! so every classification of cells against the domain is exact.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::indexkit::{eps_subsets, parent_links, MultiIndex};

/// Axis-aligned box `lo_j / 2^shift_j .. hi_j / 2^shift_j`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledBox<'a> {
    pub lo: &'a [i64],
    pub hi: &'a [i64],
    pub shift: &'a [u32],
}

impl ScaledBox<'_> {
    #[inline]
    fn lo_lt(&self, j: usize, b: i64) -> bool {
        self.lo[j] < b << self.shift[j]
    }
    #[inline]
    fn lo_ge(&self, j: usize, b: i64) -> bool {
        !self.lo_lt(j, b)
    }
    #[inline]
    fn hi_gt(&self, j: usize, b: i64) -> bool {
        self.hi[j] > b << self.shift[j]
    }
    #[inline]
    fn hi_le(&self, j: usize, b: i64) -> bool {
        !self.hi_gt(j, b)
    }
}

/// Geometric oracle for a bounded m-type domain `D` (an open set).
///
/// Implementations must be pure; the cell-selection maps are indexed by the
/// absolute level `K0 + kappa`.
pub trait MType: Send + Sync {
    fn dim(&self) -> usize;
    fn m(&self) -> &MultiIndex;
    fn kappa0(&self) -> MultiIndex {
        MultiIndex::zeros(self.dim())
    }
    /// Radius of the neighbourhood in which the selected cells must lie.
    fn gamma0(&self) -> Vec<f64>;
    /// Integer bounding box `[lo, hi]` of `D`.
    fn bounds(&self) -> (Vec<i64>, Vec<i64>);
    /// Does the closed box meet `D`?
    fn closed_box_meets(&self, b: ScaledBox<'_>) -> bool;
    /// Is the open box contained in `D`?
    fn open_box_inside(&self, b: ScaledBox<'_>) -> bool;
    fn contains(&self, x: &[f64]) -> bool;
    /// Is the closed box `[lo, hi]` contained in `D`?
    fn closed_box_inside(&self, lo: &[f64], hi: &[f64]) -> bool;
    /// `nu_kappa(nu)`: a cell inside `D` standing in for `nu`.
    fn map_nu(&self, level: &[u32], nu: &[i64]) -> Vec<i64>;
    /// `n_kappa(nu)`.
    fn map_n(&self, level: &[u32], nu: &[i64]) -> Vec<i64>;
    fn label(&self) -> String;
    fn volume(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// `(0,1)^d`
    Cube,
    /// `(0,2)^d` minus the closed corner cube `[1,2]^d`.
    LShape,
}

impl FromStr for DomainKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cube" => Ok(DomainKind::Cube),
            "lshape" => Ok(DomainKind::LShape),
            other => Err(Error::Config(format!("unknown domain '{other}' (expected cube | lshape)"))),
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Cube => "cube",
            DomainKind::LShape => "lshape",
        })
    }
}

/// One of the two built-in m-type domains.
#[derive(Debug, Clone, PartialEq)]
pub struct MTypeDomain {
    pub kind: DomainKind,
    pub d: usize,
    pub m: MultiIndex,
}

impl MTypeDomain {
    pub fn new(kind: DomainKind, m: MultiIndex) -> Self {
        MTypeDomain { kind, d: m.dim(), m }
    }

    pub fn cube(m: MultiIndex) -> Self {
        Self::new(DomainKind::Cube, m)
    }

    pub fn lshape(m: MultiIndex) -> Self {
        Self::new(DomainKind::LShape, m)
    }
}

fn positive_part(nu: &[i64]) -> Vec<i64> {
    nu.iter().map(|&v| v.max(0)).collect()
}

impl MType for MTypeDomain {
    fn dim(&self) -> usize {
        self.d
    }

    fn m(&self) -> &MultiIndex {
        &self.m
    }

    fn gamma0(&self) -> Vec<f64> {
        self.m.iter().map(|&v| v as f64 + 2.0).collect()
    }

    fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let hi = match self.kind {
            DomainKind::Cube => 1,
            DomainKind::LShape => 2,
        };
        (vec![0; self.d], vec![hi; self.d])
    }

    fn closed_box_meets(&self, b: ScaledBox<'_>) -> bool {
        match self.kind {
            DomainKind::Cube => (0..self.d).all(|j| b.lo_lt(j, 1) && b.hi_gt(j, 0)),
            DomainKind::LShape => {
                (0..self.d).all(|j| b.lo_lt(j, 2) && b.hi_gt(j, 0))
                    && (0..self.d).any(|j| b.lo_lt(j, 1))
            }
        }
    }

    fn open_box_inside(&self, b: ScaledBox<'_>) -> bool {
        match self.kind {
            DomainKind::Cube => (0..self.d).all(|j| b.lo_ge(j, 0) && b.hi_le(j, 1)),
            DomainKind::LShape => {
                (0..self.d).all(|j| b.lo_ge(j, 0) && b.hi_le(j, 2))
                    && (0..self.d).any(|j| b.hi_le(j, 1))
            }
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            DomainKind::Cube => x.iter().all(|&v| v > 0.0 && v < 1.0),
            DomainKind::LShape => {
                x.iter().all(|&v| v > 0.0 && v < 2.0) && x.iter().any(|&v| v < 1.0)
            }
        }
    }

    fn closed_box_inside(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self.kind {
            DomainKind::Cube => (0..self.d).all(|j| lo[j] > 0.0 && hi[j] < 1.0),
            DomainKind::LShape => {
                (0..self.d).all(|j| lo[j] > 0.0 && hi[j] < 2.0) && (0..self.d).any(|j| hi[j] < 1.0)
            }
        }
    }

    fn map_nu(&self, _level: &[u32], nu: &[i64]) -> Vec<i64> {
        positive_part(nu)
    }

    fn map_n(&self, _level: &[u32], nu: &[i64]) -> Vec<i64> {
        positive_part(nu)
    }

    fn label(&self) -> String {
        self.kind.to_string()
    }

    fn volume(&self) -> f64 {
        match self.kind {
            DomainKind::Cube => 1.0,
            DomainKind::LShape => 2f64.powi(self.d as i32) - 1.0,
        }
    }
}

/// Does the closed support of `g_{level,nu}` meet `D`?
pub fn support_meets(dom: &dyn MType, level: &[u32], nu: &[i64]) -> bool {
    let hi: Vec<i64> = nu.iter().zip(dom.m().iter()).map(|(&v, &m)| v + m as i64 + 1).collect();
    dom.closed_box_meets(ScaledBox { lo: nu, hi: &hi, shift: level })
}

/// Is the open cell `Q_{level,nu}` inside `D`?
pub fn cell_inside(dom: &dyn MType, level: &[u32], nu: &[i64]) -> bool {
    let hi: Vec<i64> = nu.iter().map(|&v| v + 1).collect();
    dom.open_box_inside(ScaledBox { lo: nu, hi: &hi, shift: level })
}

/// Does the open cell `Q_{level,nu}` meet `D`?
pub fn cell_meets(dom: &dyn MType, level: &[u32], nu: &[i64]) -> bool {
    // the open cell meets the open domain iff its closure meets it, for the
    // dyadic boxes used here
    let hi: Vec<i64> = nu.iter().map(|&v| v + 1).collect();
    dom.closed_box_meets(ScaledBox { lo: nu, hi: &hi, shift: level })
}

/// Rectangular range of translates that can possibly meet `D` at `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexRange {
    pub lo: Vec<i64>,
    pub shape: Vec<usize>,
}

impl IndexRange {
    /// Candidates for `N_level`: `nu_j` in `[lo_j 2^k - m_j, hi_j 2^k - 1]`.
    pub fn translates(dom: &dyn MType, level: &[u32]) -> Self {
        let (blo, bhi) = dom.bounds();
        let m = dom.m();
        let lo = (0..level.len()).map(|j| (blo[j] << level[j]) - m[j] as i64).collect();
        let shape = (0..level.len())
            .map(|j| (((bhi[j] - blo[j]) << level[j]) + m[j] as i64) as usize)
            .collect();
        IndexRange { lo, shape }
    }

    /// Cells of `level` inside the bounding box.
    pub fn cells(dom: &dyn MType, level: &[u32]) -> Self {
        let (blo, bhi) = dom.bounds();
        let lo = (0..level.len()).map(|j| blo[j] << level[j]).collect();
        let shape = (0..level.len()).map(|j| ((bhi[j] - blo[j]) << level[j]) as usize).collect();
        IndexRange { lo, shape }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major flat index, `None` outside the range.
    #[inline]
    pub fn flat(&self, nu: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for j in 0..nu.len() {
            let o = nu[j] - self.lo[j];
            if o < 0 || o as usize >= self.shape[j] {
                return None;
            }
            idx = idx * self.shape[j] + o as usize;
        }
        Some(idx)
    }

    pub fn unflat(&self, mut idx: usize) -> Vec<i64> {
        let mut nu = vec![0i64; self.shape.len()];
        for j in (0..self.shape.len()).rev() {
            nu[j] = self.lo[j] + (idx % self.shape[j]) as i64;
            idx /= self.shape[j];
        }
        nu
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.unflat(i))
    }
}

/// `N_level = {nu : supp g_{level,nu} ∩ D ≠ ∅}` in lexicographic order.
pub fn enumerate_n(dom: &dyn MType, level: &[u32]) -> Vec<Vec<i64>> {
    IndexRange::translates(dom, level)
        .iter()
        .filter(|nu| support_meets(dom, level, nu))
        .collect()
}

/// `nu_level(nu)` with its containment postcondition checked.
pub fn cell_map_nu(dom: &dyn MType, level: &[u32], nu: &[i64]) -> Result<Vec<i64>> {
    let out = dom.map_nu(level, nu);
    if !cell_inside(dom, level, &out) {
        return Err(Error::DomainModel(format!(
            "selected cell {out:?} at level {level:?} for translate {nu:?} is not inside {}",
            dom.label()
        )));
    }
    Ok(out)
}

/// Which m-type condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Selected cells must lie in `D` near the translate.
    CellContainment,
    /// The rectangle spanned by the fine and the coarse selected cell lies in `D`.
    BoundingRectangle,
    /// Axes untouched by `eps` keep their selected coordinate.
    CoordinatePreservation,
    /// Parents of an active translate are active one level down.
    ChildInclusion,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::CellContainment => "cell containment within the Gamma0 neighbourhood",
            Condition::BoundingRectangle => "bounding rectangle containment",
            Condition::CoordinatePreservation => "coordinate preservation of the cell map",
            Condition::ChildInclusion => "child inclusion of parent translates",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub condition: Condition,
    pub kappa: Vec<u32>,
    pub nu: Vec<i64>,
    pub eps: Vec<u32>,
    pub mu: Vec<Option<u32>>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} failed at kappa={:?} nu={:?} eps={:?} mu={:?}",
            self.condition, self.kappa, self.nu, self.eps, self.mu
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MTypeReport {
    pub levels: usize,
    pub translates: usize,
    pub checks: usize,
    pub violation: Option<Violation>,
}

impl MTypeReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Exhaustive check of the m-type conditions for every `kappa` with
/// `max_j kappa_j <= kappa_max`. Stops at the first violation.
pub fn validate_mtype(dom: &dyn MType, kappa_max: u32) -> Result<MTypeReport> {
    if kappa_max > 8 {
        return Err(Error::Parameter(format!("kappa_max {kappa_max} exceeds 8")));
    }
    let d = dom.dim();
    let k0 = dom.kappa0();
    let gamma = dom.gamma0();
    let m: Vec<u32> = dom.m().to_vec();
    let mut report = MTypeReport { levels: 0, translates: 0, checks: 0, violation: None };
    for kappa in MultiIndex::splat(d, kappa_max).box_below() {
        report.levels += 1;
        let level: Vec<u32> = kappa.add(&k0).to_vec();
        let epses = eps_subsets(&kappa);
        for nu in enumerate_n(dom, &level) {
            report.translates += 1;
            let fail = |condition, eps: &[u32], mu: &[Option<u32>]| Violation {
                condition,
                kappa: kappa.to_vec(),
                nu: nu.clone(),
                eps: eps.to_vec(),
                mu: mu.to_vec(),
            };
            let sel = dom.map_nu(&level, &nu);
            let near = dom.map_n(&level, &nu);
            for cell in [&sel, &near] {
                report.checks += 1;
                let in_ball = (0..d).all(|j| {
                    cell[j] as f64 >= nu[j] as f64 - gamma[j]
                        && (cell[j] + 1) as f64 <= nu[j] as f64 + gamma[j]
                });
                if !in_ball || !cell_inside(dom, &level, cell) {
                    report.violation = Some(fail(Condition::CellContainment, &vec![0; d], &[]));
                    return Ok(report);
                }
            }
            for eps in &epses {
                let coarse: Vec<u32> = (0..d).map(|j| level[j] - eps[j]).collect();
                for link in parent_links(&nu, eps, &m) {
                    report.checks += 1;
                    if !support_meets(dom, &coarse, &link.parent) {
                        report.violation = Some(fail(Condition::ChildInclusion, eps, &link.mu));
                        return Ok(report);
                    }
                    let psel = dom.map_nu(&coarse, &link.parent);
                    if (0..d).any(|j| eps[j] == 0 && psel[j] != sel[j]) {
                        report.violation =
                            Some(fail(Condition::CoordinatePreservation, eps, &link.mu));
                        return Ok(report);
                    }
                    // common scale 2^-level: coarse coordinates double on eps axes
                    let lo: Vec<i64> =
                        (0..d).map(|j| near[j].min(psel[j] << eps[j])).collect();
                    let hi: Vec<i64> =
                        (0..d).map(|j| (near[j] + 1).max((psel[j] + 1) << eps[j])).collect();
                    if !dom.open_box_inside(ScaledBox { lo: &lo, hi: &hi, shift: &level }) {
                        report.violation = Some(fail(Condition::BoundingRectangle, eps, &link.mu));
                        return Ok(report);
                    }
                }
            }
        }
    }
    Ok(report)
}
