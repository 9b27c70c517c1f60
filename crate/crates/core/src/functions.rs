//! Test functions with closed-form mixed derivatives.
//!
//! Identifiers:
//! - `prod_sin`: `prod_j sin(pi x_j)`
//! - `poly:<c>@<e1,..,ed>;...`: sum of monomials, e.g. `poly:1@1,1;-0.5@2,0`
//! - `gauss_bump:<c1,..,cd>;<w>`: `exp(-|x - c|^2 / w^2)`
//! - `tensor_bspline:<kappa>;<nu>;<order>`: `g_{kappa,nu}` of the given order

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::bspline::{g_eval, ScaledTranslate};
use crate::error::{Error, Result};
use crate::indexkit::MultiIndex;

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    ProdSin,
    Poly { terms: Vec<(f64, Vec<u32>)> },
    GaussBump { center: Vec<f64>, width: f64 },
    TensorBspline(ScaledTranslate),
}

fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|_| Error::Config(format!("bad {what} entry '{v}'"))))
        .collect()
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        match name.trim() {
            "prod_sin" => Ok(TestFunction::ProdSin),
            "poly" => {
                let mut terms = vec![];
                for t in arg.split(';').filter(|t| !t.trim().is_empty()) {
                    let Some((c, e)) = t.split_once('@') else {
                        return config(format!("poly term '{t}' must look like <coef>@<e1,..,ed>"));
                    };
                    let c: f64 = c.trim().parse().map_err(|_| Error::Config(format!("bad coefficient '{c}'")))?;
                    terms.push((c, parse_list(e, "exponent")?));
                }
                if terms.is_empty() {
                    return config("poly needs at least one term");
                }
                Ok(TestFunction::Poly { terms })
            }
            "gauss_bump" => {
                let Some((c, w)) = arg.split_once(';') else {
                    return config("gauss_bump needs <center>;<width>");
                };
                let width: f64 = w.trim().parse().map_err(|_| Error::Config(format!("bad width '{w}'")))?;
                if !(width > 0.0) {
                    return config(format!("gauss_bump width must be positive, got {width}"));
                }
                Ok(TestFunction::GaussBump { center: parse_list(c, "center")?, width })
            }
            "tensor_bspline" => {
                let parts: Vec<&str> = arg.split(';').collect();
                if parts.len() != 3 {
                    return config("tensor_bspline needs <kappa>;<nu>;<order>");
                }
                let kappa: Vec<u32> = parse_list(parts[0], "kappa")?;
                let nu: Vec<i64> = parse_list(parts[1], "nu")?;
                let mut order: Vec<u32> = parse_list(parts[2], "order")?;
                if order.len() == 1 {
                    order = vec![order[0]; kappa.len()];
                }
                if nu.len() != kappa.len() || order.len() != kappa.len() {
                    return config("tensor_bspline kappa, nu and order lengths differ");
                }
                if order.iter().any(|&o| o > crate::indexkit::MAX_ORDER) {
                    return config(format!("tensor_bspline order must be at most {}", crate::indexkit::MAX_ORDER));
                }
                Ok(TestFunction::TensorBspline(ScaledTranslate::new(
                    MultiIndex::new(kappa),
                    nu,
                    MultiIndex::new(order),
                )))
            }
            other => config(format!(
                "unknown function '{other}' (expected prod_sin, poly:, gauss_bump:, tensor_bspline:)"
            )),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[String]| v.join(",");
        match self {
            TestFunction::ProdSin => write!(f, "prod_sin"),
            TestFunction::Poly { terms } => {
                let parts: Vec<String> = terms
                    .iter()
                    .map(|(c, e)| format!("{c}@{}", join(&e.iter().map(|v| v.to_string()).collect::<Vec<_>>())))
                    .collect();
                write!(f, "poly:{}", parts.join(";"))
            }
            TestFunction::GaussBump { center, width } => {
                write!(f, "gauss_bump:{};{width}", join(&center.iter().map(|v| v.to_string()).collect::<Vec<_>>()))
            }
            TestFunction::TensorBspline(g) => {
                let s = |v: &[String]| v.join(",");
                write!(
                    f,
                    "tensor_bspline:{};{};{}",
                    s(&g.kappa.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
                    s(&g.nu.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
                    s(&g.m.iter().map(|v| v.to_string()).collect::<Vec<_>>())
                )
            }
        }
    }
}

/// Physicists' Hermite polynomial `H_k(u)`.
fn hermite(k: u32, u: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * u);
    if k == 0 {
        return h0;
    }
    for n in 1..k {
        let h2 = 2.0 * u * h1 - 2.0 * n as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

fn falling(e: u32, k: u32) -> f64 {
    (0..k).map(|i| (e - i) as f64).product()
}

impl TestFunction {
    /// Checks the identifier against the dimension and derivative order.
    pub fn check(&self, d: usize, lambda: &[u32]) -> Result<()> {
        let dims = match self {
            TestFunction::ProdSin => d,
            TestFunction::Poly { terms } => {
                if let Some((_, e)) = terms.iter().find(|(_, e)| e.len() != d) {
                    return config(format!("poly term has {} exponents for dimension {d}", e.len()));
                }
                d
            }
            TestFunction::GaussBump { center, .. } => center.len(),
            TestFunction::TensorBspline(g) => {
                if let Some(j) = (0..lambda.len().min(g.m.dim())).find(|&j| lambda[j] > g.m[j]) {
                    return config(format!("tensor_bspline order {} is below lambda {} on axis {}", g.m[j], lambda[j], j + 1));
                }
                g.kappa.dim()
            }
        };
        if dims != d {
            return config(format!("function '{self}' has dimension {dims}, expected {d}"));
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.deriv(&vec![0; x.len()], x)
    }

    /// `D^lambda f(x)`.
    pub fn deriv(&self, lambda: &[u32], x: &[f64]) -> f64 {
        match self {
            TestFunction::ProdSin => x
                .iter()
                .zip(lambda)
                .map(|(&xj, &k)| PI.powi(k as i32) * (PI * xj + k as f64 * PI / 2.0).sin())
                .product(),
            TestFunction::Poly { terms } => terms
                .iter()
                .map(|(c, e)| {
                    c * (0..x.len())
                        .map(|j| if lambda[j] > e[j] { 0.0 } else { falling(e[j], lambda[j]) * x[j].powi((e[j] - lambda[j]) as i32) })
                        .product::<f64>()
                })
                .sum(),
            TestFunction::GaussBump { center, width } => (0..x.len())
                .map(|j| {
                    let u = (x[j] - center[j]) / width;
                    let k = lambda[j];
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * hermite(k, u) * (-u * u).exp() / width.powi(k as i32)
                })
                .product(),
            TestFunction::TensorBspline(g) => g_eval(g, lambda, x).unwrap_or(f64::NAN),
        }
    }

    /// Oracle for `f`.
    pub fn oracle(&self) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
        move |x: &[f64]| self.value(x)
    }

    /// Oracle for `D^lambda f`.
    pub fn deriv_oracle<'a>(&'a self, lambda: &'a [u32]) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
        move |x: &[f64]| self.deriv(lambda, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &TestFunction, lambda: &[u32], x: &[f64]) {
        // central difference of D^{lambda - e_j} along the first axis with lambda_j > 0
        let j = lambda.iter().position(|&v| v > 0).unwrap();
        let mut lower = lambda.to_vec();
        lower[j] -= 1;
        let h = 1e-5;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let fd = (f.deriv(&lower, &xp) - f.deriv(&lower, &xm)) / (2.0 * h);
        let exact = f.deriv(lambda, x);
        assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{f} {lambda:?}: {fd} vs {exact}");
    }

    #[test]
    fn parse_round_trip() {
        for s in ["prod_sin", "poly:1@1,1;-0.5@2,0", "gauss_bump:0.5,0.25;0.2", "tensor_bspline:2,1;1,0;3,3"] {
            let f: TestFunction = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("poly:1,1".parse::<TestFunction>().is_err());
        assert!("sinc".parse::<TestFunction>().is_err());
        assert!("gauss_bump:0.5;0".parse::<TestFunction>().is_err());
        let t: TestFunction = "tensor_bspline:1,1;0,0;2".parse().unwrap();
        assert!(t.check(2, &[2, 2]).is_ok());
        assert!(t.check(2, &[3, 0]).is_err());
        assert!(t.check(3, &[0, 0, 0]).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fs: Vec<TestFunction> = ["prod_sin", "poly:1@1,3;-0.5@2,0;2@0,1", "gauss_bump:0.4,0.6;0.3", "tensor_bspline:1,2;0,1;3"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let x = [0.37, 0.61];
        for f in &fs {
            for lambda in [[1u32, 0], [0, 1], [1, 1], [2, 1], [1, 2]] {
                fd_check(f, &lambda, &x);
            }
        }
    }

    #[test]
    fn known_values() {
        let f = TestFunction::ProdSin;
        assert!((f.value(&[0.5, 0.5]) - 1.0).abs() < 1e-15);
        assert!((f.deriv(&[1, 0], &[0.0, 0.5]) - PI).abs() < 1e-14);
        let p: TestFunction = "poly:3@2,1".parse().unwrap();
        assert_eq!(p.deriv(&[2, 1], &[0.3, 0.9]), 6.0);
        assert_eq!(p.deriv(&[3, 0], &[0.3, 0.9]), 0.0);
        assert_eq!(hermite(3, 0.5), 8.0 * 0.125 - 12.0 * 0.5);
    }
}
