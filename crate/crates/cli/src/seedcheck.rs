//! Optional cross-validation of a computed operator against an independent
//! route, on the exact expression, point and seeds the user supplied.

use jetad::oracle::rel_gap;
use jetad::symtensor::{SymCube, SymMat};

pub struct SeedCheck {
    pub max_gap: f64,
    pub failures: Vec<String>,
}

impl SeedCheck {
    pub fn new() -> Self {
        SeedCheck {
            max_gap: 0.0,
            failures: Vec::new(),
        }
    }

    pub fn compare(&mut self, label: &str, a: f64, b: f64, tol: f64) {
        let gap = rel_gap(a, b);
        if gap > self.max_gap {
            self.max_gap = gap;
        }
        if !(gap <= tol) {
            self.failures
                .push(format!("{label}: gap {gap:.3e} > {tol:.0e} ({a} vs {b})"));
        }
    }

    pub fn compare_vec(&mut self, label: &str, a: &[f64], b: &[f64], tol: f64) {
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            self.compare(&format!("{label}[{i}]"), *x, *y, tol);
        }
    }
}

pub fn hess_vec(h: &SymMat, v: &[f64]) -> Vec<f64> {
    let n = h.dim();
    (0..n)
        .map(|i| (0..n).map(|j| h.get(i, j) * v[j]).sum())
        .collect()
}

pub fn contract_hess(h: &SymMat, v: &[f64], u: &[f64]) -> f64 {
    let n = h.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += v[i] * u[j] * h.get(i, j);
        }
    }
    acc
}

pub fn contract_third_full(t: &SymCube, v: &[f64], u: &[f64], w: &[f64]) -> f64 {
    let n = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                acc += v[i] * u[j] * w[k] * t.get(i, j, k);
            }
        }
    }
    acc
}

pub fn contract_third_once(t: &SymCube, v: &[f64], u: &[f64]) -> Vec<f64> {
    let n = t.dim();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    acc += v[j] * u[k] * t.get(i, j, k);
                }
            }
            acc
        })
        .collect()
}

/// Deterministic unit-scale seed for checks that need one.
pub fn probe_seed(n: usize, salt: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let k = (i * 7 + salt * 13 + 3) % 11;
            (k as f64) / 5.5 - 1.0
        })
        .collect()
}
