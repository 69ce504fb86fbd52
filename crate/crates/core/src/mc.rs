//! Single-site Monte Carlo for the finite-volume Gibbs measure with the
//! boundary generation clamped to `σ^{D,±}`. Exists as an independent
//! cross-check of the exact recursion.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dsets::EdgeSet;
use crate::error::{Error, Result};
use crate::gibbs::GibbsParams;
use crate::groundstate::{build_sigma, Sign};
use crate::rng;
use crate::tree::{Tree, VertexId};

/// Number of batches for batch-means error bars.
pub const BATCHES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamics {
    /// Heat-bath updates.
    Glauber,
    Metropolis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Total sweeps, burn-in included.
    pub sweeps: u64,
    pub burn_in: u64,
    pub seed: u64,
    /// Record every `thinning`-th sweep after burn-in.
    pub thinning: u64,
    pub dynamics: Dynamics,
}

impl McConfig {
    pub fn new(sweeps: u64, seed: u64) -> Self {
        Self {
            sweeps,
            burn_in: sweeps / 10,
            seed,
            thinning: 1,
            dynamics: Dynamics::Glauber,
        }
    }

    fn recorded(&self) -> Result<u64> {
        if self.thinning == 0 {
            return Err(Error::InvalidParameter {
                name: "thinning",
                reason: "must be at least 1".into(),
            });
        }
        let n = self.sweeps.saturating_sub(self.burn_in) / self.thinning;
        if n == 0 {
            Err(Error::EmptySample)
        } else {
            Ok(n)
        }
    }
}

/// Probability that a single-site update flips a spin whose flip changes
/// the energy by `delta_h`.
pub fn flip_probability(dynamics: Dynamics, beta: f64, delta_h: f64) -> f64 {
    match dynamics {
        Dynamics::Glauber => 1.0 / (1.0 + (beta * delta_h).exp()),
        Dynamics::Metropolis => (-beta * delta_h).exp().min(1.0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimates {
    pub rng: &'static str,
    pub dynamics: Dynamics,
    pub samples: u64,
    pub batches: usize,
    /// Per-vertex `⟨σ_x⟩` from the conditional-expectation estimator
    /// `tanh(β J Σ_{y~x} σ_y)`; boundary vertices report their clamped spin.
    pub magnetization: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Plain sample means of `σ_x`.
    pub raw_magnetization: Vec<f64>,
    pub raw_std_error: Vec<f64>,
    pub acceptance_rate: f64,
}

struct Chain<'a> {
    tree: &'a Tree,
    spins: Vec<i8>,
    free: Vec<VertexId>,
    beta: f64,
    j: f64,
    dynamics: Dynamics,
    /// Excess energy over the starting ground state, in units of `J`.
    excess_units: i64,
    attempts: u64,
    flips: u64,
}

impl Chain<'_> {
    fn neighbor_sum(&self, v: VertexId) -> i32 {
        self.tree.neighbors_iter(v).map(|w| i32::from(self.spins[w.index()])).sum()
    }

    fn sweep<R: Rng>(&mut self, rng: &mut R) {
        self.free.shuffle(rng);
        for i in 0..self.free.len() {
            let v = self.free[i];
            let s = i32::from(self.spins[v.index()]);
            let field = self.neighbor_sum(v);
            let delta_units = 2 * s * field;
            let p = flip_probability(self.dynamics, self.beta, self.j * f64::from(delta_units));
            self.attempts += 1;
            if rng.gen::<f64>() < p {
                self.spins[v.index()] = -self.spins[v.index()];
                self.excess_units += i64::from(delta_units);
                self.flips += 1;
            }
        }
    }
}

/// Runs one chain started at `σ^{D,sign}` and calls `record` on every
/// recorded sweep with the current chain.
fn run_chain(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams, mc: &McConfig, mut record: impl FnMut(&Chain<'_>)) -> Result<()> {
    mc.recorded()?;
    let sigma = build_sigma(tree, d, sign)?;
    let mut chain = Chain {
        tree,
        spins: sigma.spins().to_vec(),
        free: tree.interior_vertices().collect(),
        beta: params.beta,
        j: params.j.value(),
        dynamics: mc.dynamics,
        excess_units: 0,
        attempts: 0,
        flips: 0,
    };
    let mut rng = rng::stream(mc.seed, 0);
    for sweep in 1..=mc.sweeps {
        chain.sweep(&mut rng);
        if sweep > mc.burn_in && (sweep - mc.burn_in).is_multiple_of(mc.thinning) {
            record(&chain);
        }
    }
    Ok(())
}

/// Mean and batch-means standard error of per-batch sums.
fn batch_stats(batch_sums: &[f64], batch_sizes: &[u64]) -> (f64, f64) {
    let total: f64 = batch_sums.iter().sum();
    let count: u64 = batch_sizes.iter().sum();
    let mean = total / count as f64;
    let b = batch_sums.len();
    if b < 2 {
        return (mean, f64::NAN);
    }
    let means: Vec<f64> = batch_sums.iter().zip(batch_sizes).map(|(s, &n)| s / n as f64).collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Per-vertex magnetization estimates with batch-means error bars.
pub fn sample(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams, mc: &McConfig) -> Result<McEstimates> {
    let n_samples = mc.recorded()?;
    let batches = BATCHES.min(n_samples as usize);
    let n = tree.vertex_count();
    let mut rb_sums = vec![0.0; batches * n];
    let mut raw_sums = vec![0.0; batches * n];
    let mut sizes = vec![0u64; batches];
    let mut index = 0u64;
    let beta_j = params.beta * params.j.value();
    let free: Vec<VertexId> = tree.interior_vertices().collect();
    let mut final_rate = 0.0;

    run_chain(tree, d, sign, params, mc, |chain| {
        let b = (index * batches as u64 / n_samples) as usize;
        index += 1;
        sizes[b] += 1;
        let row = b * n;
        for &v in &free {
            let field = chain.neighbor_sum(v);
            rb_sums[row + v.index()] += (beta_j * f64::from(field)).tanh();
            raw_sums[row + v.index()] += f64::from(chain.spins[v.index()]);
        }
        final_rate = chain.flips as f64 / chain.attempts.max(1) as f64;
    })?;

    let sigma = build_sigma(tree, d, sign)?;
    let mut magnetization = vec![0.0; n];
    let mut std_error = vec![0.0; n];
    let mut raw_magnetization = vec![0.0; n];
    let mut raw_std_error = vec![0.0; n];
    for v in tree.vertices() {
        if !tree.is_interior(v) {
            let s = f64::from(sigma.spin(v));
            magnetization[v.index()] = s;
            raw_magnetization[v.index()] = s;
            continue;
        }
        let column = |sums: &[f64]| -> Vec<f64> { (0..batches).map(|b| sums[b * n + v.index()]).collect() };
        let (m, se) = batch_stats(&column(&rb_sums), &sizes);
        magnetization[v.index()] = m;
        std_error[v.index()] = se;
        let (m, se) = batch_stats(&column(&raw_sums), &sizes);
        raw_magnetization[v.index()] = m;
        raw_std_error[v.index()] = se;
    }
    Ok(McEstimates {
        rng: rng::RNG_ALGORITHM,
        dynamics: mc.dynamics,
        samples: n_samples,
        batches,
        magnetization,
        std_error,
        raw_magnetization,
        raw_std_error,
        acceptance_rate: final_rate,
    })
}

/// `H(σ) - H(σ^D)` at every recorded sweep.
pub fn energy_trace(tree: &Tree, d: &EdgeSet, sign: Sign, params: &GibbsParams, mc: &McConfig) -> Result<Vec<f64>> {
    let mut trace = Vec::new();
    let j = params.j;
    run_chain(tree, d, sign, params, mc, |chain| trace.push(j.energy(chain.excess_units)))?;
    Ok(trace)
}

/// Floor added to `n_sigma` standard errors when comparing estimates with
/// exact values; batch means report a zero error when no excitation was
/// ever observed.
pub const NUMERICAL_FLOOR: f64 = 1e-9;

pub fn within_error(estimate: f64, std_error: f64, exact: f64, n_sigma: f64) -> bool {
    let se = if std_error.is_finite() { std_error } else { 0.0 };
    (estimate - exact).abs() <= n_sigma * se + NUMERICAL_FLOOR
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsets::gen_dimer_cover;
    use crate::groundstate::{excess_energy, flip_connected, Coupling, SpinConfig};
    use crate::tree::{build_ball, TreeSpec};

    fn ball(k: u32, r: u32) -> Tree {
        build_ball(TreeSpec::new(k, r)).unwrap()
    }

    fn params(beta: f64) -> GibbsParams {
        GibbsParams::new(beta, Coupling::new(1.0).unwrap(), true).unwrap()
    }

    #[test]
    fn detailed_balance_ratios() {
        let t = ball(4, 3);
        let j = Coupling::new(0.7).unwrap();
        let mut rng = rng::stream(5, 1);
        for _ in 0..1000 {
            let spins: Vec<i8> = (0..t.vertex_count()).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let sigma = SpinConfig::new(&t, spins).unwrap();
            let interior: Vec<VertexId> = t.interior_vertices().collect();
            let x = interior[rng.gen_range(0..interior.len())];
            let flipped = flip_connected(&t, &sigma, &[x]).unwrap();
            let dh = excess_energy(&t, &flipped, &sigma, j).unwrap();
            let beta = rng.gen_range(0.05..2.0);
            for dynamics in [Dynamics::Glauber, Dynamics::Metropolis] {
                let forward = flip_probability(dynamics, beta, dh);
                let backward = flip_probability(dynamics, beta, -dh);
                let ratio = forward / backward;
                let want = (-beta * dh).exp();
                assert!((ratio - want).abs() <= 1e-12 * want, "{dynamics:?} {ratio} {want}");
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let t = ball(3, 3);
        let d = gen_dimer_cover(&t, 1);
        let mc = McConfig::new(400, 99);
        let a = sample(&t, &d, Sign::Plus, &params(0.7), &mc).unwrap();
        let b = sample(&t, &d, Sign::Plus, &params(0.7), &mc).unwrap();
        assert_eq!(a, b);
        let c = sample(&t, &d, Sign::Plus, &params(0.7), &McConfig::new(400, 100)).unwrap();
        assert_ne!(a.raw_magnetization, c.raw_magnetization);
    }

    #[test]
    fn infinite_temperature_is_unbiased() {
        let t = ball(3, 3);
        let d = EdgeSet::empty(&t);
        let est = sample(&t, &d, Sign::Plus, &params(1e-12), &McConfig::new(3000, 4)).unwrap();
        for v in t.interior_vertices() {
            let (m, se) = (est.raw_magnetization[v.index()], est.raw_std_error[v.index()]);
            assert!(m.abs() <= 4.0 * se + 1e-12, "{v}: {m} ± {se}");
            assert!(est.magnetization[v.index()].abs() < 1e-9);
        }
    }

    #[test]
    fn empty_sample_is_an_error() {
        let t = ball(2, 2);
        let d = EdgeSet::empty(&t);
        let mc = McConfig {
            sweeps: 10,
            burn_in: 10,
            seed: 0,
            thinning: 1,
            dynamics: Dynamics::Metropolis,
        };
        assert_eq!(sample(&t, &d, Sign::Plus, &params(1.0), &mc), Err(Error::EmptySample));
        assert_eq!(energy_trace(&t, &d, Sign::Plus, &params(1.0), &mc), Err(Error::EmptySample));
    }

    #[test]
    fn frozen_trace_returns_to_zero() {
        let t = ball(4, 3);
        let d = gen_dimer_cover(&t, 0);
        let trace = energy_trace(&t, &d, Sign::Plus, &params(20.0), &McConfig::new(2000, 1)).unwrap();
        assert!(trace.iter().all(|&e| e == 0.0 || e >= 6.0));
        assert!(trace.iter().filter(|&&e| e == 0.0).count() as f64 > 0.99 * trace.len() as f64);
    }
}
