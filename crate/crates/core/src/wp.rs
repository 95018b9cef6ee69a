//! Warning propagation on {0, 1, f}, local energy functionals, the tree
//! ground-state formula, and the Bethe energy of a warning configuration.
//!
//! A warning configuration assigns to each edge e a pair (ẇ_e, ŵ_e): the
//! variable-to-clause and clause-to-variable messages. `f` ("free") means
//! both spin values are locally optimal; XOR is extended by x ⊕ f = f.
//!
//! On a tree with frozen boundary (leaf messages pinned in {0,1}) there is a
//! unique valid configuration, and the minimum number of violated clauses
//! over boundary-consistent assignments equals the sum of local penalties
//! Σ_v φ̇ + Σ_a φ̂ − Σ_e φ̄ over internal vertices and edges. The same sum
//! over a whole instance is the Bethe energy of the configuration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Edge, Instance};
use crate::rng::Rng;
use rand::Rng as _;

/// A warning message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Warning {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "f")]
    Free,
}

impl Warning {
    pub fn from_bit(b: u8) -> Warning {
        if b == 0 {
            Warning::Zero
        } else {
            Warning::One
        }
    }

    /// XOR with a bit, extended by f ⊕ x = f.
    pub fn xor_bit(self, b: u8) -> Warning {
        match self {
            Warning::Free => Warning::Free,
            Warning::Zero => Warning::from_bit(b),
            Warning::One => Warning::from_bit(1 ^ b),
        }
    }

    /// XOR of two warnings; f absorbs.
    pub fn xor(self, other: Warning) -> Warning {
        match (self, other) {
            (Warning::Free, _) | (_, Warning::Free) => Warning::Free,
            (Warning::Zero, w) => w,
            (w, Warning::Zero) => w,
            (Warning::One, Warning::One) => Warning::Zero,
        }
    }

    pub fn is_frozen(self) -> bool {
        !matches!(self, Warning::Free)
    }
}

/// Clause update ŴP: returns a forced value for the out-edge when every
/// input's literal value L_g ⊕ ẇ_g is the same frozen bit, otherwise f.
///
/// The forced value is the one that makes the out-edge literal value differ
/// from the inputs (avoiding the all-equal violation): if all inputs have
/// literal value L_e ⊕ 1 the output is 0, if all have L_e ⊕ 0 it is 1.
/// An empty input sequence imposes no constraint and yields f.
pub fn wp_clause(inputs: &[(u8, Warning)], out_lit: u8) -> Warning {
    if inputs.is_empty() {
        return Warning::Free;
    }
    let first = inputs[0].1.xor_bit(inputs[0].0);
    if !first.is_frozen() {
        return Warning::Free;
    }
    for &(lit, w) in &inputs[1..] {
        if w.xor_bit(lit) != first {
            return Warning::Free;
        }
    }
    // All literal values equal `first`; force the out variable to make its
    // literal value the complement: L_e ⊕ out = first ⊕ 1.
    first.xor_bit(out_lit ^ 1)
}

/// Variable update ẆP: majority of frozen inputs; 0-warnings vs 1-warnings,
/// f on a tie (f inputs are ignored in both counts).
pub fn wp_var(inputs: &[Warning]) -> Warning {
    let (l0, l1) = count01(inputs);
    match l0.cmp(&l1) {
        std::cmp::Ordering::Greater => Warning::Zero,
        std::cmp::Ordering::Less => Warning::One,
        std::cmp::Ordering::Equal => Warning::Free,
    }
}

fn count01(inputs: &[Warning]) -> (usize, usize) {
    let l0 = inputs.iter().filter(|&&w| w == Warning::Zero).count();
    let l1 = inputs.iter().filter(|&&w| w == Warning::One).count();
    (l0, l1)
}

/// Variable penalty φ̇ = min(ℓ₀, ℓ₁): number of incoming forcings the
/// variable must disappoint whichever value it takes.
pub fn phi_var(inputs: &[Warning]) -> u64 {
    let (l0, l1) = count01(inputs);
    l0.min(l1) as u64
}

/// Clause penalty φ̂ = 1 iff all literal values L ⊕ ẇ around the clause are
/// the same frozen bit (the clause is forced into violation).
pub fn phi_clause(adjusted: &[Warning]) -> u64 {
    if adjusted.is_empty() {
        return 0;
    }
    let first = adjusted[0];
    (first.is_frozen() && adjusted.iter().all(|&w| w == first)) as u64
}

/// Edge penalty φ̄ = 1 iff ẇ ⊕ ŵ = 1 (both frozen and conflicting).
pub fn phi_edge(wdot: Warning, what: Warning) -> u64 {
    (wdot.xor(what) == Warning::One) as u64
}

// ---------------------------------------------------------------------------
// Boundary trees
// ---------------------------------------------------------------------------

/// A bipartite tree with literals on edges and a frozen boundary: every leaf
/// is a variable whose single edge carries a pinned message ẇ ∈ {0,1}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryTree {
    /// Variable count; variables are 0..nv.
    pub nv: usize,
    /// Clause count; clauses are 0..nc.
    pub nc: usize,
    /// Edges (variable, clause, literal).
    pub edges: Vec<Edge>,
    /// (edge index, frozen bit) for every leaf edge.
    pub boundary: Vec<(usize, u8)>,
}

/// The resolved warning configuration on a boundary tree.
#[derive(Debug, Clone)]
pub struct TreeWarnings {
    /// Per-edge variable-to-clause message ẇ.
    pub wdot: Vec<Warning>,
    /// Per-edge clause-to-variable message ŵ.
    pub what: Vec<Warning>,
}

struct TreeIndex {
    var_edges: Vec<Vec<usize>>,
    clause_edges: Vec<Vec<usize>>,
    /// Variables of degree 1 that appear in the boundary.
    leaf_vars: Vec<bool>,
}

impl BoundaryTree {
    fn index(&self) -> Result<TreeIndex> {
        let mut var_edges = vec![Vec::new(); self.nv];
        let mut clause_edges = vec![Vec::new(); self.nc];
        for (i, e) in self.edges.iter().enumerate() {
            if e.var >= self.nv || e.clause >= self.nc {
                return Err(Error::InvalidInput(format!("edge {i} out of range")));
            }
            var_edges[e.var].push(i);
            clause_edges[e.clause].push(i);
        }
        if self.edges.len() + 1 != self.nv + self.nc {
            return Err(Error::InvalidInput(
                "edge count must be nv + nc − 1 (tree)".into(),
            ));
        }
        // Connectivity check by BFS over the bipartite adjacency.
        let mut seen_v = vec![false; self.nv];
        let mut seen_c = vec![false; self.nc];
        let mut stack = vec![(true, 0usize)];
        seen_v[0] = true;
        while let Some((is_var, idx)) = stack.pop() {
            let edges = if is_var {
                &var_edges[idx]
            } else {
                &clause_edges[idx]
            };
            for &ei in edges {
                let e = self.edges[ei];
                let (other_is_var, other) = if is_var {
                    (false, e.clause)
                } else {
                    (true, e.var)
                };
                let seen = if other_is_var {
                    &mut seen_v[other]
                } else {
                    &mut seen_c[other]
                };
                if !*seen {
                    *seen = true;
                    stack.push((other_is_var, other));
                }
            }
        }
        if !(seen_v.iter().all(|&s| s) && seen_c.iter().all(|&s| s)) {
            return Err(Error::InvalidInput("tree is not connected".into()));
        }
        if clause_edges.iter().any(|c| c.len() < 2) {
            return Err(Error::InvalidInput(
                "every clause must have at least two edges (leaves are variables)".into(),
            ));
        }
        // Boundary must pin exactly the degree-1 variables' edges.
        let mut leaf_vars = vec![false; self.nv];
        let mut pinned = vec![false; self.edges.len()];
        for &(ei, bit) in &self.boundary {
            if ei >= self.edges.len() || bit > 1 {
                return Err(Error::InvalidInput("bad boundary entry".into()));
            }
            let v = self.edges[ei].var;
            if var_edges[v].len() != 1 {
                return Err(Error::InvalidInput(format!(
                    "boundary edge {ei} is not a leaf edge"
                )));
            }
            leaf_vars[v] = true;
            pinned[ei] = true;
        }
        // Variable 0 is by convention the root and may be internal even at
        // degree 1; every other degree-1 variable must be pinned.
        for v in 1..self.nv {
            if var_edges[v].len() == 1 && !leaf_vars[v] {
                return Err(Error::InvalidInput(format!(
                    "leaf variable {v} has no frozen boundary message"
                )));
            }
        }
        Ok(TreeIndex {
            var_edges,
            clause_edges,
            leaf_vars,
        })
    }

    /// Resolve the unique valid warning configuration consistent with the
    /// frozen boundary, by iterating ẆP/ŴP to their fixed point (on a tree
    /// this converges within twice the diameter).
    pub fn tree_wp(&self) -> Result<TreeWarnings> {
        let idx = self.index()?;
        let ne = self.edges.len();
        let mut wdot = vec![Warning::Free; ne];
        let mut what = vec![Warning::Free; ne];
        for &(ei, bit) in &self.boundary {
            wdot[ei] = Warning::from_bit(bit);
        }
        for _round in 0..2 * (ne + 1) {
            let mut changed = false;
            // Clause messages from current variable messages.
            for (ei, e) in self.edges.iter().enumerate() {
                let inputs: Vec<(u8, Warning)> = idx.clause_edges[e.clause]
                    .iter()
                    .filter(|&&g| g != ei)
                    .map(|&g| (self.edges[g].lit, wdot[g]))
                    .collect();
                let new = wp_clause(&inputs, e.lit);
                if new != what[ei] {
                    what[ei] = new;
                    changed = true;
                }
            }
            // Variable messages from current clause messages; leaves stay
            // pinned.
            for (ei, e) in self.edges.iter().enumerate() {
                if idx.leaf_vars[e.var] {
                    continue;
                }
                let inputs: Vec<Warning> = idx.var_edges[e.var]
                    .iter()
                    .filter(|&&g| g != ei)
                    .map(|&g| what[g])
                    .collect();
                let new = wp_var(&inputs);
                if new != wdot[ei] {
                    wdot[ei] = new;
                    changed = true;
                }
            }
            if !changed {
                return Ok(TreeWarnings { wdot, what });
            }
        }
        Err(Error::NonConvergence {
            context: "tree warning propagation did not stabilize (input not a tree?)".into(),
            residual: f64::NAN,
            iterations: 2 * (ne + 1),
            trajectory: vec![],
        })
    }

    /// Tree ground-state energy by the local-penalty formula
    /// Σ_{internal v} φ̇(ŵ_δv) + Σ_a φ̂(L⊕ẇ_δa) − Σ_{internal e} φ̄(ẇ_e, ŵ_e).
    pub fn energy_formula(&self) -> Result<u64> {
        let idx = self.index()?;
        let w = self.tree_wp()?;
        let mut total: i64 = 0;
        for v in 0..self.nv {
            if idx.leaf_vars[v] {
                continue;
            }
            let inputs: Vec<Warning> = idx.var_edges[v].iter().map(|&g| w.what[g]).collect();
            total += phi_var(&inputs) as i64;
        }
        for a in 0..self.nc {
            let adjusted: Vec<Warning> = idx.clause_edges[a]
                .iter()
                .map(|&g| w.wdot[g].xor_bit(self.edges[g].lit))
                .collect();
            total += phi_clause(&adjusted) as i64;
        }
        for (ei, e) in self.edges.iter().enumerate() {
            if idx.leaf_vars[e.var] {
                continue;
            }
            total -= phi_edge(w.wdot[ei], w.what[ei]) as i64;
        }
        debug_assert!(total >= 0, "tree energy formula produced {total}");
        Ok(total as u64)
    }

    /// Tree ground-state energy by brute force: enumerate assignments of the
    /// internal variables with every leaf pinned to its frozen boundary bit,
    /// and minimize the number of clauses whose literal values are all equal.
    pub fn energy_brute_force(&self, cap_bits: u32) -> Result<u64> {
        let idx = self.index()?;
        let internal: Vec<usize> = (0..self.nv).filter(|&v| !idx.leaf_vars[v]).collect();
        if internal.len() as u32 > cap_bits {
            return Err(Error::ResourceLimit {
                what: "internal variables in tree enumeration",
                requested: internal.len(),
                cap: cap_bits as usize,
            });
        }
        let mut x = vec![0u8; self.nv];
        for &(ei, bit) in &self.boundary {
            x[self.edges[ei].var] = bit;
        }
        let mut best = u64::MAX;
        for bits in 0u64..(1 << internal.len()) {
            for (j, &v) in internal.iter().enumerate() {
                x[v] = ((bits >> j) & 1) as u8;
            }
            let mut violated = 0u64;
            for a in 0..self.nc {
                let edges = &idx.clause_edges[a];
                let first = {
                    let e = self.edges[edges[0]];
                    e.lit ^ x[e.var]
                };
                if edges[1..].iter().all(|&g| {
                    let e = self.edges[g];
                    e.lit ^ x[e.var] == first
                }) {
                    violated += 1;
                }
            }
            best = best.min(violated);
        }
        Ok(best)
    }
}

/// Generate a random boundary tree: alternating variable/clause levels, each
/// clause with full arity k (one parent edge plus k−1 child variables), each
/// variable with a random number of clause children. Childless variables
/// become the frozen boundary.
pub fn random_boundary_tree(
    k: usize,
    max_var_children: usize,
    max_nodes: usize,
    rng: &mut Rng,
) -> BoundaryTree {
    let mut edges: Vec<Edge> = Vec::new();
    let mut nv = 1usize;
    let mut nc = 0usize;
    // Queue of variables that may still receive clause children.
    let mut frontier = vec![0usize];
    let mut leaf_candidates: Vec<usize> = Vec::new(); // variables, provisional
    while let Some(v) = frontier.pop() {
        let budget = max_nodes.saturating_sub(nv + nc);
        if budget < k {
            leaf_candidates.push(v);
            continue;
        }
        let max_here = max_var_children.min(budget / k).max(if v == 0 { 1 } else { 0 });
        let min_here = usize::from(v == 0); // root must be internal
        let children = rng.gen_range(min_here..=max_here);
        if children == 0 {
            leaf_candidates.push(v);
            continue;
        }
        for _ in 0..children {
            let a = nc;
            nc += 1;
            edges.push(Edge {
                var: v,
                clause: a,
                lit: rng.gen_range(0..2),
            });
            for _ in 0..k - 1 {
                let child = nv;
                nv += 1;
                edges.push(Edge {
                    var: child,
                    clause: a,
                    lit: rng.gen_range(0..2),
                });
                frontier.push(child);
            }
        }
    }
    // Freeze every degree-1 variable's edge (the root may be degree ≥ 1 but
    // was forced internal, so only true leaves are pinned).
    let mut degree = vec![0usize; nv];
    for e in &edges {
        degree[e.var] += 1;
    }
    let mut boundary = Vec::new();
    for (ei, e) in edges.iter().enumerate() {
        if degree[e.var] == 1 && e.var != 0 {
            boundary.push((ei, rng.gen_range(0..2)));
        }
    }
    BoundaryTree {
        nv,
        nc,
        edges,
        boundary,
    }
}

// ---------------------------------------------------------------------------
// Warning configurations on whole instances
// ---------------------------------------------------------------------------

/// A warning configuration on an instance: per-edge pair (ẇ, ŵ), validated
/// eagerly on construction.
#[derive(Debug, Clone)]
pub struct WarningConfig {
    pub wdot: Vec<Warning>,
    pub what: Vec<Warning>,
}

impl WarningConfig {
    /// Build and validate: every edge must satisfy both the variable relation
    /// ẇ_e = ẆP(ŵ on the variable's other edges) and the clause relation
    /// ŵ_e = ŴP(ẇ on the clause's other edges).
    pub fn new(inst: &Instance, wdot: Vec<Warning>, what: Vec<Warning>) -> Result<Self> {
        let ne = inst.edges.len();
        if wdot.len() != ne || what.len() != ne {
            return Err(Error::InvalidInput("warning vectors must match edge count".into()));
        }
        for (ei, e) in inst.edges.iter().enumerate() {
            let var_inputs: Vec<Warning> = inst.var_edges[e.var]
                .iter()
                .filter(|&&g| g != ei)
                .map(|&g| what[g])
                .collect();
            if wp_var(&var_inputs) != wdot[ei] {
                return Err(Error::InvalidInput(format!(
                    "variable relation violated at edge {ei}"
                )));
            }
            let clause_inputs: Vec<(u8, Warning)> = inst.clause_edges[e.clause]
                .iter()
                .filter(|&&g| g != ei)
                .map(|&g| (inst.edges[g].lit, wdot[g]))
                .collect();
            if wp_clause(&clause_inputs, e.lit) != what[ei] {
                return Err(Error::InvalidInput(format!(
                    "clause relation violated at edge {ei}"
                )));
            }
        }
        Ok(WarningConfig { wdot, what })
    }

    /// Bethe energy φ(w̲) = Σ_V φ̇(ŵ_δv) + Σ_F φ̂(L⊕ẇ_δa) − Σ_E φ̄(w_e).
    pub fn bethe_energy(&self, inst: &Instance) -> i64 {
        let mut total: i64 = 0;
        for v in 0..inst.params.n {
            let inputs: Vec<Warning> =
                inst.var_edges[v].iter().map(|&g| self.what[g]).collect();
            total += phi_var(&inputs) as i64;
        }
        for a in 0..inst.params.m {
            let adjusted: Vec<Warning> = inst.clause_edges[a]
                .iter()
                .map(|&g| self.wdot[g].xor_bit(inst.edges[g].lit))
                .collect();
            total += phi_clause(&adjusted) as i64;
        }
        for ei in 0..inst.edges.len() {
            total -= phi_edge(self.wdot[ei], self.what[ei]) as i64;
        }
        total
    }

    /// Per-variable consensus 𝔶_v = ẆP_d(ŵ over all of v's edges); the
    /// configuration is "near-frozen" if at most N/k² entries are f.
    pub fn consensus(&self, inst: &Instance) -> Vec<Warning> {
        (0..inst.params.n)
            .map(|v| {
                let inputs: Vec<Warning> =
                    inst.var_edges[v].iter().map(|&g| self.what[g]).collect();
                wp_var(&inputs)
            })
            .collect()
    }

    /// Near-frozen predicate: #{v : 𝔶_v = f} ≤ N/k².
    pub fn is_near_frozen(&self, inst: &Instance) -> bool {
        let free = self
            .consensus(inst)
            .iter()
            .filter(|&&w| w == Warning::Free)
            .count();
        free * inst.params.k * inst.params.k <= inst.params.n
    }
}
