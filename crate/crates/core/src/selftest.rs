//! Identity checks run by `mixrec selftest`.
//!
//! Each check reports the largest residual it saw against its tolerance.
//! [`run`] stops at the first failing check.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bspline::{bspline_eval, BsplineBasis};
use crate::domain::{enumerate_n, validate_mtype, MType, MTypeDomain};
use crate::dyadic::Dyadic;
use crate::error::Result;
use crate::indexkit::{eps_subsets, refinement_coeff, refinement_weight, MultiIndex, RecoveryParams};
use crate::multiscale::{cell_frame, prolong_h, SplineExpansion};
use crate::polylag::{interpolate_cell, lagrange_matrix, nodes_1d, tensor_node, LocalPoly};
use crate::recovery::build_reconstruction;

/// Deliberate corruption used to confirm that a check can fail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Perturbs one two-scale mask coefficient.
    Refinement,
}

impl std::str::FromStr for Fault {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "refinement" => Ok(Fault::Refinement),
            other => Err(crate::Error::Config(format!("unknown selftest fault '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub identity: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: max residual {:e} (tolerance {:e})",
            if self.passed() { "ok  " } else { "FAIL" },
            self.module,
            self.identity,
            self.max_residual,
            self.tolerance
        )
    }
}

fn outcome(module: &'static str, identity: &'static str, max_residual: f64, tolerance: f64) -> CheckOutcome {
    CheckOutcome { module, identity, max_residual, tolerance }
}

fn mask(m: u32, mu: u32, fault: Option<Fault>) -> f64 {
    let w = refinement_weight(m, mu);
    if fault == Some(Fault::Refinement) && mu == 1 {
        w + 1e-3
    } else {
        w
    }
}

/// `M_m(x) = sum_mu a_mu M_m(2x - mu)` on a grid covering the support.
pub fn refinement(fault: Option<Fault>) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for m in 1..=4u32 {
        for i in 0..1000 {
            let x = -1.0 + (m as f64 + 3.0) * i as f64 / 999.0;
            let rhs: f64 = (0..=m + 1).map(|mu| mask(m, mu, fault) * bspline_eval(m, 2.0 * x - mu as f64)).sum();
            worst = worst.max((bspline_eval(m, x) - rhs).abs());
        }
    }
    outcome("bspline", "refinement identity", worst, 1e-12)
}

/// Even and odd mask coefficients each sum to 1, exactly.
pub fn coefficient_sums() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for m in 0..=crate::indexkit::MAX_ORDER {
        let mut even = Dyadic::from_int(0);
        let mut odd = Dyadic::from_int(0);
        for mu in 0..=m + 1 {
            let a = refinement_coeff(m, mu).expect("mu in range");
            if mu % 2 == 0 {
                even = even + a;
            } else {
                odd = odd + a;
            }
        }
        let one = Dyadic::from_int(1);
        if even != one || odd != one {
            worst = worst.max((even.to_f64() - 1.0).abs().max((odd.to_f64() - 1.0).abs()).max(f64::MIN_POSITIVE));
        }
    }
    outcome("indexkit", "mask coefficient sums", worst, 0.0)
}

/// `sum_nu M_m(x - nu) = 1` at random points, `d <= 3`.
pub fn partition_of_unity(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for d in 1..=3usize {
        for mv in 1..=3u32 {
            let m = MultiIndex::splat(d, mv);
            let basis = BsplineBasis::new(m.clone());
            for _ in 0..1000 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let lo: Vec<i64> = x.iter().map(|v| v.floor() as i64 - mv as i64).collect();
                let count = (mv as usize + 1).pow(d as u32);
                let mut s = 0.0;
                for i in 0..count {
                    let mut rem = i;
                    let y: Vec<f64> = (0..d)
                        .map(|j| {
                            let off = (rem % (mv as usize + 1)) as i64;
                            rem /= mv as usize + 1;
                            x[j] - (lo[j] + off) as f64
                        })
                        .collect();
                    s += basis.eval(&y);
                }
                worst = worst.max((s - 1.0).abs());
            }
        }
    }
    outcome("bspline", "partition of unity", worst, 1e-12)
}

/// Lagrange basis polynomials are dual to the nodes, up to 5 nodes per axis.
pub fn lagrange_duality() -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for count in 1..=5 {
        let w = lagrange_matrix(count);
        for (mu, &x) in nodes_1d(count).iter().enumerate() {
            for lam in 0..count {
                let v: f64 = (0..count).map(|e| w[e][lam] * x.powi(e as i32)).sum();
                worst = worst.max((v - if lam == mu { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    outcome("polylag", "lagrange duality", worst, 1e-13)
}

fn unflat(mut i: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for j in (0..shape.len()).rev() {
        out[j] = i % shape[j];
        i /= shape[j];
    }
    out
}

/// Interpolation reproduces random polynomials of matching degree.
pub fn reproduction(seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for d in 1..=3usize {
        for l in 1..=4usize {
            for _ in 0..100 {
                let anchor: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let scale: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
                let nodes = vec![l; d];
                let n = l.pow(d as u32);
                let coeffs = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let f = LocalPoly::from_coeffs(anchor.clone(), scale.clone(), nodes.clone(), coeffs);
                let values: Vec<f64> =
                    (0..n).map(|i| f.eval(&tensor_node(&anchor, &scale, &nodes, &unflat(i, &nodes)))).collect();
                let p = match interpolate_cell(&anchor, &scale, &nodes, &values) {
                    Ok(p) => p,
                    Err(_) => return outcome("polylag", "polynomial reproduction", f64::INFINITY, 1e-10),
                };
                for _ in 0..10 {
                    let x: Vec<f64> = (0..d).map(|j| anchor[j] + scale[j] * rng.gen_range(0.0..1.0)).collect();
                    worst = worst.max((p.eval(&x) - f.eval(&x)).abs());
                }
            }
        }
    }
    outcome("polylag", "polynomial reproduction", worst, 1e-10)
}

fn random_point(dom: &dyn MType, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = dom.bounds();
    loop {
        let x: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| rng.gen_range(a as f64..b as f64)).collect();
        if dom.contains(&x) {
            return x;
        }
    }
}

/// `H^eps` leaves a random expansion unchanged on the domain.
pub fn prolongation(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let doms = [MTypeDomain::cube(MultiIndex::new(vec![2, 2])), MTypeDomain::lshape(MultiIndex::new(vec![2, 1]))];
    for dom in &doms {
        let level = vec![3u32, 2];
        let mut terms = BTreeMap::new();
        for nu in enumerate_n(dom, &level) {
            let (a, s) = cell_frame(&level, &nu);
            let coeffs = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            terms.insert(nu, LocalPoly::from_coeffs(a, s, vec![2, 2], coeffs));
        }
        let f = SplineExpansion { level: MultiIndex::new(level), m: dom.m.clone(), terms };
        for eps in eps_subsets(&[1, 1]) {
            let h = prolong_h(dom, &f, eps.as_slice())?;
            for _ in 0..200 {
                let x = random_point(dom, &mut rng);
                worst = worst.max((h.eval(&x)? - f.eval(&x)?).abs());
            }
        }
    }
    Ok(outcome("multiscale", "prolongation identity", worst, 1e-11))
}

/// For a polynomial of degree `< l` every layer above the coarsest
/// vanishes and the reconstruction is exact.
pub fn telescoping(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = RecoveryParams::new(
        vec![2.5, 2.5],
        2.0,
        f64::INFINITY,
        2.0,
        MultiIndex::zeros(2),
        MultiIndex::new(vec![3, 3]),
    )?;
    let dom = MTypeDomain::cube(params.m.clone());
    let f = |x: &[f64]| x[0] * x[0] * x[1] - 3.0 * x[1] * x[1] + 0.5 * x[0];
    let (_, rec) = build_reconstruction(&dom, &params, 4, &f)?;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x = random_point(&dom, &mut rng);
        for (kappa, layer) in rec.cross.iter().zip(&rec.layers) {
            if !kappa.is_zero() {
                worst = worst.max(layer.eval(&x)?.abs());
            }
        }
        worst = worst.max((rec.eval(&x)? - f(&x)).abs());
    }
    Ok(outcome("multiscale", "telescoping nullity", worst, 1e-9))
}

/// Both built-in domains satisfy the m-type conditions.
pub fn domain_validation() -> Result<CheckOutcome> {
    let mut violations = 0usize;
    for d in 1..=2usize {
        let m = MultiIndex::splat(d, 2);
        for dom in [MTypeDomain::cube(m.clone()), MTypeDomain::lshape(m)] {
            violations += usize::from(!validate_mtype(&dom, 3)?.passed());
        }
    }
    Ok(outcome("domain", "m-type conditions", violations as f64, 0.0))
}

/// Runs every check in order, stopping after the first failure.
pub fn run(fault: Option<Fault>) -> Result<Vec<CheckOutcome>> {
    type Check = Box<dyn Fn() -> Result<CheckOutcome>>;
    let checks: Vec<Check> = vec![
        Box::new(move || Ok(refinement(fault))),
        Box::new(|| Ok(coefficient_sums())),
        Box::new(|| Ok(partition_of_unity(1))),
        Box::new(|| Ok(lagrange_duality())),
        Box::new(|| Ok(reproduction(2))),
        Box::new(|| telescoping(3)),
        Box::new(|| prolongation(4)),
        Box::new(domain_validation),
    ];
    let mut out = vec![];
    for check in checks {
        let o = check()?;
        let failed = !o.passed();
        out.push(o);
        if failed {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes_every_check() {
        let out = run(None).unwrap();
        assert_eq!(out.len(), 8);
        for o in &out {
            assert!(o.passed(), "{o}");
        }
    }

    #[test]
    fn injected_fault_stops_at_refinement() {
        let out = run(Some(Fault::Refinement)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(!out[0].passed());
        assert!(out[0].to_string().contains("refinement identity"));
        assert!("bogus".parse::<Fault>().is_err());
    }
}
