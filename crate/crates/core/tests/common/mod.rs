#![allow(dead_code)]

use bethe_gibbs::groundstate::{build_sigma, Sign};
use bethe_gibbs::{EdgeSet, Tree};

/// `-Σ σ_x σ_y` over every edge, in units of `J`.
pub fn energy_units(tree: &Tree, spins: &[i8]) -> i64 {
    tree.edges()
        .map(|e| {
            let (p, c) = tree.edge_endpoints(e);
            -i64::from(spins[p.index()] * spins[c.index()])
        })
        .sum()
}

pub struct Enumerated {
    pub log_z: f64,
    pub magnetization: Vec<f64>,
}

/// Sums all `2^N` interior configurations with the boundary clamped to
/// `σ^{D,sign}`.
pub fn enumerate(tree: &Tree, d: &EdgeSet, sign: Sign, beta_j: f64, relative: bool) -> Enumerated {
    let reference = build_sigma(tree, d, sign).unwrap();
    let n = tree.interior_count();
    assert!(n <= 22, "{n} interior sites is too many to enumerate");
    let shift = if relative { energy_units(tree, reference.spins()) } else { 0 };
    let mut spins = reference.spins().to_vec();

    let mut exponents = Vec::with_capacity(1 << n);
    let mut configs = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        for (i, s) in spins.iter_mut().take(n).enumerate() {
            *s = if mask >> i & 1 == 1 { 1 } else { -1 };
        }
        exponents.push(-beta_j * (energy_units(tree, &spins) - shift) as f64);
        configs.push(mask);
    }
    let (argmax, top) = exponents
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best });
    let weights: Vec<f64> = exponents.iter().map(|x| (x - top).exp()).collect();
    // ln(1 + rest) keeps full precision when the ground state dominates.
    let rest: f64 = weights.iter().enumerate().filter(|&(i, _)| i != argmax).map(|(_, w)| w).sum();
    let total = 1.0 + rest;

    let mut magnetization: Vec<f64> = reference.spins().iter().map(|&s| f64::from(s)).collect();
    for (i, m) in magnetization.iter_mut().take(n).enumerate() {
        let signed: f64 = configs
            .iter()
            .zip(&weights)
            .map(|(mask, w)| if mask >> i & 1 == 1 { *w } else { -*w })
            .sum();
        *m = signed / total;
    }
    Enumerated {
        log_z: top + rest.ln_1p(),
        magnetization,
    }
}

/// Root magnetization on a ball of depth `r` with every boundary spin `+`
/// and no frustrated bonds, by the scalar cavity-field recursion.
pub fn uniform_plus_root_magnetization(k: u32, r: u32, beta_j: f64) -> f64 {
    let t = beta_j.tanh();
    let mut h = f64::INFINITY;
    for _ in 1..r {
        h = f64::from(k) * (t * h.tanh()).atanh();
    }
    (f64::from(k + 1) * (t * h.tanh()).atanh()).tanh()
}

/// Connected vertex sets of `n + 1` sites containing a fixed vertex of the
/// infinite tree of degree `k + 1`: `(k+1)/(kn+k+1) C(kn+k+1, n)`.
pub fn rooted_subtree_count(k: u64, n: u64) -> u128 {
    let m = u128::from(k * n + k + 1);
    let mut binom: u128 = 1;
    for i in 0..u128::from(n) {
        binom = binom * (m - i) / (i + 1);
    }
    binom * u128::from(k + 1) / m
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
