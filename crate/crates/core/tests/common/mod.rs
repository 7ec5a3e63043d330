//! Brute-force oracles shared by the integration tests. Everything here works
//! from plain `nalgebra` inverses and explicit permutation sweeps, never from
//! the library's conditional-block or subset-search routines.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const TIE: f64 = 1e-9;

pub fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE * 1f64.max(a.abs()).max(b.abs())
}

/// `m_{r,c|s}` by explicit inversion of the conditioning block.
pub fn schur(m: &DMatrix<f64>, r: usize, c: usize, s: &[usize]) -> f64 {
    if s.is_empty() {
        return m[(r, c)];
    }
    let k = s.len();
    let mss = DMatrix::from_fn(k, k, |a, b| m[(s[a], s[b])]);
    let inv = mss.try_inverse().expect("conditioning block invertible");
    let mut acc = m[(r, c)];
    for a in 0..k {
        for b in 0..k {
            acc -= m[(r, s[a])] * inv[(a, b)] * m[(s[b], c)];
        }
    }
    acc
}

/// All permutations of `0..d`.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; d], &mut out);
    out
}

/// Wishart-type matrix `A Aᵀ / (d+2) + 0.05 I`.
pub fn random_sigma(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000);
    let a = DMatrix::<f64>::from_fn(d, d + 2, |_, _| StandardNormal.sample(&mut rng));
    let mut m = &a * a.transpose() / (d + 2) as f64;
    for k in 0..d {
        m[(k, k)] += 0.05;
    }
    let mt = m.transpose();
    (m + mt) * 0.5
}

/// Distinct query pair varying with the seed.
pub fn query_pair(d: usize, seed: u64) -> (usize, usize) {
    let i = (seed as usize) % d;
    let j = (i + 1 + (seed as usize / d) % (d - 1)) % d;
    (i, j)
}

/// Per-ordering quantities on the covariance side.
pub struct OrderingFit {
    pub perm: Vec<usize>,
    /// `r_k = 1 / Σ_{k,k|pred(k)}`, indexed by node.
    pub r: Vec<f64>,
    /// Total effect `i → j` implied by the ordering.
    pub effect: f64,
    pub i_first: bool,
}

pub fn fit_ordering(sigma: &DMatrix<f64>, perm: &[usize], i: usize, j: usize) -> OrderingFit {
    let d = perm.len();
    let mut r = vec![0.0; d];
    for (pos, &k) in perm.iter().enumerate() {
        r[k] = 1.0 / schur(sigma, k, k, &perm[..pos]);
    }
    let pi = perm.iter().position(|&k| k == i).unwrap();
    let pj = perm.iter().position(|&k| k == j).unwrap();
    let effect = if pi < pj {
        let pred = &perm[..pi];
        schur(sigma, j, i, pred) / schur(sigma, i, i, pred)
    } else {
        0.0
    };
    OrderingFit { perm: perm.to_vec(), r, effect, i_first: pi < pj }
}

pub fn sup_general(f: &OrderingFit) -> f64 {
    -f.r.iter().map(|x| x.ln()).sum::<f64>() - f.r.len() as f64
}

pub fn sup_pev(f: &OrderingFit, i: usize, j: usize) -> f64 {
    let rest: f64 = (0..f.r.len()).filter(|&k| k != i && k != j).map(|k| f.r[k].ln()).sum();
    -rest - 2.0 * (0.5 * (f.r[i] + f.r[j])).ln() - f.r.len() as f64
}

pub fn sup_ev(f: &OrderingFit) -> f64 {
    let d = f.r.len() as f64;
    -d * (f.r.iter().sum::<f64>() / d).ln() - d
}

/// Distinct values at the tie tolerance.
pub fn distinct(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        if !out.iter().any(|&x| ties(x, v)) {
            out.push(v);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Two value sets agree when each member of one lies within `tol` of the other.
pub fn same_values(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().all(|x| b.iter().any(|y| (x - y).abs() <= tol)) && b.iter().all(|y| a.iter().any(|x| (x - y).abs() <= tol))
}

/// `Var_P(X_i + ψ X_j | X_S)` with `P` used as a covariance.
pub fn profiled_variance(p: &DMatrix<f64>, i: usize, j: usize, s: &[usize], psi: f64) -> f64 {
    schur(p, i, i, s) + 2.0 * psi * schur(p, i, j, s) + psi * psi * schur(p, j, j, s)
}

pub fn chi2_1(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + 0.5 * p);
    z * z
}

pub fn chi2_2(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}
