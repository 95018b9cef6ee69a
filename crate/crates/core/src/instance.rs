//! Random regular k-NAE-SAT instances: configuration-model generation,
//! Hamiltonian evaluation, and exact ground states at small N.
//!
//! An instance is a labeled bipartite multigraph: N variables each of degree
//! d, M clauses each of arity k, edges carrying literals in {0,1}. A clause
//! is violated by an assignment x iff its k literal values L_e ⊕ x_{v(e)}
//! are all equal (all 0 or all 1).

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{child_seed, rng_from_seed};

/// Default cap on N for exhaustive enumeration (2^28 assignments).
pub const DEFAULT_ENUM_CAP: usize = 28;

/// One edge of the bipartite factor graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    /// Variable endpoint.
    pub var: usize,
    /// Clause endpoint.
    pub clause: usize,
    /// Literal label in {0, 1}; the literal value under x is `lit ⊕ x[var]`.
    pub lit: u8,
}

/// A d-regular k-NAE-SAT instance (multigraph allowed).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    pub params: ModelParams,
    /// Edges in generation order: variable half-edges in order, so edge i
    /// has `var = i / d`.
    pub edges: Vec<Edge>,
    /// Per-variable ordered d-tuple of edge indices.
    pub var_edges: Vec<Vec<usize>>,
    /// Per-clause ordered k-tuple of edge indices.
    pub clause_edges: Vec<Vec<usize>>,
}

/// An assignment of the N variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment(pub Vec<u8>);

impl Instance {
    /// Generate an instance by the configuration model: a uniform random
    /// perfect matching between variable half-edges and clause half-edges
    /// (Fisher–Yates shuffle of the clause side against the fixed variable
    /// half-edge order), with literals independently uniform on {0,1}.
    ///
    /// Identical (params, seed) yields a bit-identical instance.
    pub fn generate(params: ModelParams, seed: u64) -> Result<Self> {
        if params.n * params.d != params.m * params.k {
            return Err(Error::InvalidParameters(
                "half-edge counts disagree: N·d ≠ M·k".into(),
            ));
        }
        let mut rng = rng_from_seed(seed);
        let half_edges = params.n * params.d;

        // Clause half-edge h belongs to clause h / k. Shuffle them uniformly.
        let mut clause_half: Vec<usize> = (0..half_edges).collect();
        // Fisher–Yates, iterating from the end.
        for i in (1..half_edges).rev() {
            let j = rng.gen_range(0..=i);
            clause_half.swap(i, j);
        }

        let mut edges = Vec::with_capacity(half_edges);
        for (i, &h) in clause_half.iter().enumerate() {
            edges.push(Edge {
                var: i / params.d,
                clause: h / params.k,
                lit: rng.gen_range(0..2u8),
            });
        }

        let mut var_edges = vec![Vec::with_capacity(params.d); params.n];
        let mut clause_edges = vec![Vec::with_capacity(params.k); params.m];
        for (idx, e) in edges.iter().enumerate() {
            var_edges[e.var].push(idx);
            clause_edges[e.clause].push(idx);
        }
        debug_assert!(var_edges.iter().all(|v| v.len() == params.d));
        debug_assert!(clause_edges.iter().all(|c| c.len() == params.k));

        Ok(Instance {
            params,
            edges,
            var_edges,
            clause_edges,
        })
    }

    /// True if some clause touches the same variable more than once. Warning
    /// propagation is not defined on such clauses, so WP-based tests skip
    /// these instances.
    pub fn has_repeated_variable_in_clause(&self) -> bool {
        self.clause_edges.iter().any(|edges| {
            let mut vars: Vec<usize> = edges.iter().map(|&e| self.edges[e].var).collect();
            vars.sort_unstable();
            vars.windows(2).any(|w| w[0] == w[1])
        })
    }

    /// Number of violated clauses under `a` (clauses whose literal values are
    /// all equal).
    pub fn hamiltonian(&self, a: &Assignment) -> Result<u64> {
        if a.0.len() != self.params.n {
            return Err(Error::InvalidInput(format!(
                "assignment length {} ≠ N = {}",
                a.0.len(),
                self.params.n
            )));
        }
        let mut violated = 0u64;
        for edges in &self.clause_edges {
            let first = {
                let e = self.edges[edges[0]];
                e.lit ^ a.0[e.var]
            };
            if edges[1..].iter().all(|&i| {
                let e = self.edges[i];
                e.lit ^ a.0[e.var] == first
            }) {
                violated += 1;
            }
        }
        Ok(violated)
    }

    /// Exact ground state by Gray-code enumeration of all 2^N assignments.
    ///
    /// Returns (E_min, number of minimizing assignments). The Gray-code walk
    /// flips one variable per step and updates the energy through that
    /// variable's d incident clauses only, so the cost is O(2^N · d) rather
    /// than O(2^N · M · k).
    pub fn exact_ground_state(&self, cap: usize) -> Result<(u64, u64)> {
        let n = self.params.n;
        if n > cap {
            return Err(Error::ResourceLimit {
                what: "variable count N for exhaustive enumeration",
                requested: n,
                cap,
            });
        }
        let k = self.params.k as u32;

        // ones[a] = number of edges of clause a whose literal value is 1.
        // A clause is violated iff ones == 0 or ones == k.
        let mut ones: Vec<u32> = self
            .clause_edges
            .iter()
            .map(|edges| edges.iter().map(|&i| self.edges[i].lit as u32).sum())
            .collect();
        let mut energy: u64 = ones.iter().filter(|&&o| o == 0 || o == k).count() as u64;

        let mut x = vec![0u8; n];
        let mut e_min = energy;
        let mut count_min: u64 = 1;

        for step in 1u64..(1u64 << n) {
            let v = step.trailing_zeros() as usize; // Gray code: flip bit v
            x[v] ^= 1;
            for &ei in &self.var_edges[v] {
                let e = self.edges[ei];
                let a = e.clause;
                let was_violated = ones[a] == 0 || ones[a] == k;
                // The literal value on this edge toggles with x[v].
                if e.lit ^ x[v] == 1 {
                    ones[a] += 1;
                } else {
                    ones[a] -= 1;
                }
                let is_violated = ones[a] == 0 || ones[a] == k;
                energy = energy + is_violated as u64 - was_violated as u64;
            }
            if energy < e_min {
                e_min = energy;
                count_min = 1;
            } else if energy == e_min {
                count_min += 1;
            }
        }
        Ok((e_min, count_min))
    }
}

/// Summary statistics of exact ground-state energy density over Monte Carlo
/// trials.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EminStats {
    pub trials: usize,
    /// Mean of e_min = E_min / N.
    pub mean: f64,
    /// Sample standard deviation (n−1 denominator; 0 for a single trial).
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

/// Generate `trials` instances with per-trial child seeds and aggregate the
/// exact ground-state energy density. Deterministic for fixed (params, seed)
/// regardless of thread count.
pub fn sample_emin_stats(
    params: ModelParams,
    trials: usize,
    seed: u64,
    cap: usize,
) -> Result<EminStats> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be ≥ 1".into()));
    }
    let emins: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let inst = Instance::generate(params, child_seed(seed, t))?;
            let (e_min, _) = inst.exact_ground_state(cap)?;
            Ok(e_min as f64 / params.n as f64)
        })
        .collect::<Result<_>>()?;

    let n = emins.len() as f64;
    let mean = emins.iter().sum::<f64>() / n;
    let var = if emins.len() > 1 {
        emins.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(EminStats {
        trials,
        mean,
        stddev: var.sqrt(),
        min: emins.iter().cloned().fold(f64::INFINITY, f64::min),
        max: emins.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(k: usize, d: usize, n: usize) -> ModelParams {
        ModelParams::new(k, d, n).unwrap()
    }

    #[test]
    fn d1_single_clause() {
        // k=3, d=1, N=3: one clause touching each variable once.
        let inst = Instance::generate(params(3, 1, 3), 0).unwrap();
        assert_eq!(inst.params.m, 1);
        assert_eq!(inst.clause_edges[0].len(), 3);
        let vars: Vec<usize> = inst.edges.iter().map(|e| e.var).collect();
        let mut sorted = vars.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn generation_deterministic() {
        let a = Instance::generate(params(3, 3, 3), 7).unwrap();
        let b = Instance::generate(params(3, 3, 3), 7).unwrap();
        assert_eq!(a.edges, b.edges);
        let c = Instance::generate(params(3, 3, 3), 8).unwrap();
        assert_ne!(a.edges, c.edges); // overwhelmingly likely
    }

    #[test]
    fn degree_regularity() {
        let inst = Instance::generate(params(4, 8, 10), 123).unwrap();
        assert!(inst.var_edges.iter().all(|v| v.len() == 8));
        assert!(inst.clause_edges.iter().all(|c| c.len() == 4));
    }

    #[test]
    fn hamiltonian_single_clause() {
        // Hand-built single clause with labels (0,0,0) on variables 0,1,2.
        let inst = Instance::generate(params(3, 1, 3), 0).unwrap();
        let mut inst = inst;
        for e in &mut inst.edges {
            e.lit = 0;
        }
        // Mixed literal values satisfy NAE.
        let h = inst.hamiltonian(&Assignment(vec![0, 0, 1])).unwrap();
        assert_eq!(h, 0);
        // All-equal literal values violate.
        let h = inst.hamiltonian(&Assignment(vec![1, 1, 1])).unwrap();
        assert_eq!(h, 1);
        let h = inst.hamiltonian(&Assignment(vec![0, 0, 0])).unwrap();
        assert_eq!(h, 1);
    }

    #[test]
    fn hamiltonian_length_mismatch() {
        let inst = Instance::generate(params(3, 1, 3), 0).unwrap();
        assert!(inst.hamiltonian(&Assignment(vec![0, 1])).is_err());
    }

    /// Independent per-clause re-check of the Hamiltonian.
    #[test]
    fn hamiltonian_matches_per_clause_recheck() {
        let inst = Instance::generate(params(3, 3, 6), 99).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..20 {
            let a = Assignment((0..6).map(|_| rng.gen_range(0..2u8)).collect());
            let mut expected = 0u64;
            for ce in &inst.clause_edges {
                let vals: Vec<u8> = ce
                    .iter()
                    .map(|&i| inst.edges[i].lit ^ a.0[inst.edges[i].var])
                    .collect();
                if vals.iter().all(|&v| v == 0) || vals.iter().all(|&v| v == 1) {
                    expected += 1;
                }
            }
            assert_eq!(inst.hamiltonian(&a).unwrap(), expected);
        }
    }

    #[test]
    fn complement_symmetry() {
        let inst = Instance::generate(params(3, 3, 6), 4).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..10 {
            let a = Assignment((0..6).map(|_| rng.gen_range(0..2u8)).collect());
            let flipped = Assignment(a.0.iter().map(|&b| b ^ 1).collect());
            assert_eq!(
                inst.hamiltonian(&a).unwrap(),
                inst.hamiltonian(&flipped).unwrap()
            );
        }
    }

    #[test]
    fn exact_ground_state_single_clause() {
        let inst = Instance::generate(params(3, 1, 3), 0).unwrap();
        let (e_min, count) = inst.exact_ground_state(DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(e_min, 0);
        // count_min is even by complement symmetry.
        assert_eq!(count % 2, 0);
    }

    /// Gray-code incremental energy must agree with direct evaluation.
    #[test]
    fn gray_code_matches_direct_enumeration() {
        for seed in 0..5 {
            let inst = Instance::generate(params(3, 3, 9), seed).unwrap();
            let (e_min, count) = inst.exact_ground_state(DEFAULT_ENUM_CAP).unwrap();
            let mut direct_min = u64::MAX;
            let mut direct_count = 0u64;
            for bits in 0u64..(1 << 9) {
                let a = Assignment((0..9).map(|v| ((bits >> v) & 1) as u8).collect());
                let h = inst.hamiltonian(&a).unwrap();
                if h < direct_min {
                    direct_min = h;
                    direct_count = 1;
                } else if h == direct_min {
                    direct_count += 1;
                }
            }
            assert_eq!(e_min, direct_min);
            assert_eq!(count, direct_count);
        }
    }

    /// Golden value from full 2^12 enumeration at (k=3, d=6, N=12, seed=1),
    /// frozen on first run of the enumeration oracle.
    #[test]
    fn golden_ground_state_k3_d6_n12() {
        let inst = Instance::generate(params(3, 6, 12), 1).unwrap();
        let (e_min, count) = inst.exact_ground_state(DEFAULT_ENUM_CAP).unwrap();
        let direct: Vec<u64> = (0u64..(1 << 12))
            .map(|bits| {
                let a = Assignment((0..12).map(|v| ((bits >> v) & 1) as u8).collect());
                inst.hamiltonian(&a).unwrap()
            })
            .collect();
        let dmin = *direct.iter().min().unwrap();
        assert_eq!(e_min, dmin);
        assert_eq!(count, direct.iter().filter(|&&h| h == dmin).count() as u64);
        assert_eq!(count % 2, 0);
    }

    #[test]
    fn enum_cap_enforced() {
        let inst = Instance::generate(params(3, 3, 6), 0).unwrap();
        assert!(matches!(
            inst.exact_ground_state(4),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn stats_single_trial() {
        let p = params(3, 3, 6);
        let s = sample_emin_stats(p, 1, 3, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(s.stddev, 0.0);
        assert_eq!(s.mean, s.min);
        assert_eq!(s.mean, s.max);
    }

    #[test]
    fn stats_deterministic() {
        let p = params(3, 3, 8);
        let a = sample_emin_stats(p, 32, 9, DEFAULT_ENUM_CAP).unwrap();
        let b = sample_emin_stats(p, 32, 9, DEFAULT_ENUM_CAP).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stddev.to_bits(), b.stddev.to_bits());
    }

    /// E H(x) at a fixed assignment is M / 2^{k−1}; check within 3 standard
    /// errors over instances.
    #[test]
    fn first_moment_sanity() {
        let p = params(3, 3, 8);
        let trials = 2000;
        let mut vals = Vec::with_capacity(trials);
        let a = Assignment(vec![0; 8]);
        for t in 0..trials as u64 {
            let inst = Instance::generate(p, child_seed(78, t)).unwrap();
            vals.push(inst.hamiltonian(&a).unwrap() as f64);
        }
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let se = (var / trials as f64).sqrt();
        let expected = p.m as f64 / 2f64.powi(p.k as i32 - 1);
        assert!(
            (mean - expected).abs() <= 3.0 * se + 1e-9,
            "mean {mean} vs expected {expected} (se {se})"
        );
    }
}
