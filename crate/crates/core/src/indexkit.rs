//! Multi-index arithmetic, refinement combinatorics, hyperbolic crosses and
//! the rate parameters derived from the smoothness vector.

use std::fmt;
use std::ops::Deref;

use crate::dyadic::Dyadic;
use crate::error::{param, Error, Result};

/// Largest B-spline order with a tabulated refinement mask.
pub const MAX_ORDER: u32 = 8;

/// A `d`-tuple of nonnegative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn splat(d: usize, v: u32) -> Self {
        MultiIndex(vec![v; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|k| = sum of entries`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }

    /// Support set `s(k) = {j : k_j != 0}`.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.0[j] != 0).collect()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Componentwise difference; `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// All `k` with `0 <= k <= self` in lexicographic order.
    pub fn box_below(&self) -> Vec<MultiIndex> {
        let mut out = vec![];
        let mut cur = vec![0u32; self.dim()];
        loop {
            out.push(MultiIndex(cur.clone()));
            let mut j = self.dim();
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                if cur[j] < self.0[j] {
                    cur[j] += 1;
                    break;
                }
                cur[j] = 0;
            }
        }
    }
}

impl Deref for MultiIndex {
    type Target = [u32];
    fn deref(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// `l_j = min{k in N : alpha_j < k}`.
pub fn smoothness_order(alpha: &[f64]) -> Result<MultiIndex> {
    alpha
        .iter()
        .map(|&a| {
            if !(a > 0.0) || !a.is_finite() {
                return param(format!("smoothness alpha must be positive and finite, got {a}"));
            }
            Ok(a.floor() as u32 + 1)
        })
        .collect::<Result<Vec<_>>>()
        .map(MultiIndex)
}

pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Two-scale mask `a_mu^m = 2^-m * C(m+1, mu)`, exact.
pub fn refinement_coeff(m: u32, mu: u32) -> Result<Dyadic> {
    if mu > m + 1 {
        return param(format!("refinement index mu={mu} outside [0, {}]", m + 1));
    }
    Ok(Dyadic::new(binomial(m + 1, mu) as i64, m))
}

/// Floating-point view of [`refinement_coeff`]; `mu` must be in range.
pub fn refinement_weight(m: u32, mu: u32) -> f64 {
    binomial(m + 1, mu) as f64 / 2f64.powi(m as i32)
}

/// Child/parent pairs along one axis: for an active axis every `mu` in
/// `[0, m+1]` with `nu - mu` even, paired with `(nu - mu) / 2`; for an
/// inactive axis the single identity pair.
pub fn child_offsets(nu: i64, eps_active: bool, m: u32) -> Vec<(Option<u32>, i64)> {
    if !eps_active {
        return vec![(None, nu)];
    }
    (0..=m + 1)
        .filter(|&mu| (nu - mu as i64).rem_euclid(2) == 0)
        .map(|mu| (Some(mu), (nu - mu as i64).div_euclid(2)))
        .collect()
}

/// One element of `M_eps^m(nu)` together with its parent index and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentLink {
    pub mu: Vec<Option<u32>>,
    pub parent: Vec<i64>,
    pub weight: f64,
}

/// Enumerates `M_eps^m(nu)`: for every combination the parent index
/// `n_eps(nu, mu)` and the weight `A_mu^m = prod a_{mu_i}^{m_i}`.
pub fn parent_links(nu: &[i64], eps: &[u32], m: &[u32]) -> Vec<ParentLink> {
    let axes: Vec<Vec<(Option<u32>, i64)>> = (0..nu.len())
        .map(|j| child_offsets(nu[j], eps[j] == 1, m[j]))
        .collect();
    let mut out = vec![];
    let mut idx = vec![0usize; nu.len()];
    loop {
        let mut mu = Vec::with_capacity(nu.len());
        let mut parent = Vec::with_capacity(nu.len());
        let mut weight = 1.0;
        for j in 0..nu.len() {
            let (mj, pj) = axes[j][idx[j]];
            if let Some(mu_j) = mj {
                weight *= refinement_weight(m[j], mu_j);
            }
            mu.push(mj);
            parent.push(pj);
        }
        out.push(ParentLink { mu, parent, weight });
        let mut j = nu.len();
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < axes[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// All `eps in {0,1}^d` with `s(eps) ⊂ s(kappa)`, lexicographic.
pub fn eps_subsets(kappa: &[u32]) -> Vec<MultiIndex> {
    let cap = MultiIndex(kappa.iter().map(|&k| u32::from(k > 0)).collect());
    cap.box_below()
}

/// Exact enumeration of `{kappa in Z_+^d : (kappa, beta) <= r}` in
/// lexicographic order.
pub fn hyperbolic_cross(beta: &[f64], r: u32) -> Vec<MultiIndex> {
    const SLACK: f64 = 1e-12;
    let d = beta.len();
    let mut out = vec![];
    let mut cur = vec![0u32; d];
    fn rec(j: usize, budget: f64, beta: &[f64], cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if j == beta.len() {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        let mut k = 0u32;
        while k as f64 * beta[j] <= budget + SLACK {
            cur[j] = k;
            rec(j + 1, budget - k as f64 * beta[j], beta, cur, out);
            k += 1;
        }
        cur[j] = 0;
    }
    rec(0, r as f64, beta, &mut cur, &mut out);
    debug_assert!(out.iter().all(|k| k.dim() == d));
    out
}

/// `(x)_+`.
pub fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Rate parameters derived from `(alpha, p, q, lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateParams {
    /// Effective smoothness `a_j = alpha_j - lambda_j - (1/p - 1/q)_+`.
    pub effective: Vec<f64>,
    /// `min_j a_j`.
    pub mrate: f64,
    /// Multiplicity of the minimum.
    pub crate_: usize,
    /// Zero-based indices attaining the minimum.
    pub j_min: Vec<usize>,
    pub beta: Vec<f64>,
}

/// Tie threshold for membership in the argmin set.
pub const TIE_EPS: f64 = 1e-12;

pub fn derive_rate_params(
    alpha: &[f64],
    p: f64,
    q: f64,
    lambda: &[u32],
) -> Result<RateParams> {
    if alpha.len() != lambda.len() {
        return param("alpha and lambda lengths differ");
    }
    let shift = pos(1.0 / p - 1.0 / q);
    for (j, &a) in alpha.iter().enumerate() {
        if !(a - 1.0 / p > 0.0) {
            return param(format!(
                "condition alpha - 1/p > 0 violated on axis {} (alpha={a}, p={p})",
                j + 1
            ));
        }
    }
    let effective: Vec<f64> = alpha
        .iter()
        .zip(lambda)
        .map(|(&a, &l)| a - l as f64 - shift)
        .collect();
    for (j, &e) in effective.iter().enumerate() {
        if !(e > 0.0) {
            return param(format!(
                "condition alpha - lambda - (1/p - 1/q)_+ > 0 violated on axis {} (value {e})",
                j + 1
            ));
        }
    }
    let mrate = effective.iter().cloned().fold(f64::INFINITY, f64::min);
    let j_min: Vec<usize> = (0..effective.len())
        .filter(|&j| effective[j] - mrate < TIE_EPS)
        .collect();
    let beta = effective
        .iter()
        .enumerate()
        .map(|(j, &a)| if j_min.contains(&j) { 1.0 } else { 0.5 * (1.0 + a / mrate) })
        .collect();
    Ok(RateParams { crate_: j_min.len(), effective, mrate, j_min, beta })
}

/// Full parameter set of the recovery problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryParams {
    pub d: usize,
    pub alpha: Vec<f64>,
    pub p: f64,
    /// `f64::INFINITY` selects the Nikolskii class.
    pub theta: f64,
    pub q: f64,
    pub lambda: MultiIndex,
    pub m: MultiIndex,
    pub l: MultiIndex,
    pub rate: RateParams,
}

impl RecoveryParams {
    pub fn new(
        alpha: Vec<f64>,
        p: f64,
        theta: f64,
        q: f64,
        lambda: MultiIndex,
        m: MultiIndex,
    ) -> Result<Self> {
        let d = alpha.len();
        if d == 0 {
            return param("dimension must be at least 1");
        }
        if lambda.dim() != d || m.dim() != d {
            return param(format!(
                "lengths differ: alpha has {d}, lambda {}, m {}",
                lambda.dim(),
                m.dim()
            ));
        }
        if !(p >= 1.0 && p.is_finite()) {
            return param(format!("p must lie in [1, inf), got {p}"));
        }
        if !(theta >= 1.0) {
            return param(format!("theta must lie in [1, inf], got {theta}"));
        }
        if !(q >= 1.0) {
            return param(format!("q must lie in [1, inf], got {q}"));
        }
        if m.iter().any(|&v| v == 0 || v > MAX_ORDER) {
            return param(format!("m entries must lie in [1, {MAX_ORDER}], got {m}"));
        }
        if !lambda.le(&m) {
            return param(format!("lambda {lambda} must satisfy lambda <= m = {m}"));
        }
        let l = smoothness_order(&alpha)?;
        let rate = derive_rate_params(&alpha, p, q, &lambda)?;
        Ok(RecoveryParams { d, alpha, p, theta, q, lambda, m, l, rate })
    }

    /// Log exponent `(mrate + 1 - 1/max(p, theta)) (crate - 1)` of the upper rate.
    pub fn log_exponent(&self) -> f64 {
        let mx = self.p.max(self.theta);
        (self.rate.mrate + 1.0 - 1.0 / mx) * (self.rate.crate_ as f64 - 1.0)
    }

    /// `mu = min_j (alpha_j - lambda_j)`, the lower-bound exponent base.
    pub fn mu_lower(&self) -> f64 {
        self.alpha
            .iter()
            .zip(self.lambda.iter())
            .map(|(&a, &l)| a - l as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<&str> for MultiIndex {
    type Error = Error;
    fn try_from(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Parameter(format!("bad multi-index entry '{t}'")))
            })
            .collect::<Result<Vec<_>>>()
            .map(MultiIndex)
    }
}
