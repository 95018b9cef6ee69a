//! Implementations of the analysis subcommands. Each returns the process
//! exit code; library errors propagate and are mapped by `main`.

use std::path::Path;

use naegs_core::firstmoment;
use naegs_core::gardner::{self, ScanPoint};
use naegs_core::instance::{self, Instance};
use naegs_core::onersb;
use naegs_core::params::{alpha_from_c, ModelParams};
use naegs_core::rng::rng_from_seed;
use naegs_core::sp::{self, SolveOpts};
use naegs_core::tworsb::{self, FiniteQ, PerturbationSpec};
use naegs_core::wp::{random_boundary_tree, BoundaryTree};
use naegs_core::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::out::{emit, read_file, sci, to_json, Doc, Provenance};

/// Global output/run options shared by all subcommands.
pub struct Ctx<'a> {
    pub seed: u64,
    pub tol: Option<f64>,
    pub out: Option<&'a Path>,
    pub csv: Option<&'a Path>,
    pub json: bool,
    pub no_timestamp: bool,
}

impl Ctx<'_> {
    fn opts(&self) -> SolveOpts {
        let mut opts = SolveOpts::default();
        if let Some(t) = self.tol {
            opts.tol = t;
        }
        opts
    }

    fn provenance(&self, subcommand: &'static str, params: serde_json::Value) -> Provenance {
        Provenance::new(subcommand, self.seed, params, self.no_timestamp)
    }

    fn emit_json<T: Serialize>(&self, doc: &Doc<T>) -> Result<()> {
        emit(self.out, &to_json(doc))
    }
}

/// Parse a `lo:hi:n` grid specification into `n` evenly spaced values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidInput(format!("grid '{spec}' is not of the form lo:hi:n"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n < 1 || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

// ---------------------------------------------------------------------------
// Instance JSON (flat interchange schema)
// ---------------------------------------------------------------------------

/// Interchange form of an instance: flat counts plus edges in generation
/// order as [var, clause, lit] triples.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceJson {
    k: usize,
    d: usize,
    n: usize,
    m: usize,
    edges: Vec<(usize, usize, u8)>,
}

impl InstanceJson {
    fn from_instance(inst: &Instance) -> Self {
        InstanceJson {
            k: inst.params.k,
            d: inst.params.d,
            n: inst.params.n,
            m: inst.params.m,
            edges: inst
                .edges
                .iter()
                .map(|e| (e.var, e.clause, e.lit))
                .collect(),
        }
    }

    fn into_instance(self) -> Result<Instance> {
        let params = ModelParams::new(self.k, self.d, self.n)?;
        if params.m != self.m {
            return Err(Error::InvalidParameters(format!(
                "clause count m = {} inconsistent with n·d/k = {}",
                self.m, params.m
            )));
        }
        if self.edges.len() != self.n * self.d {
            return Err(Error::InvalidParameters(format!(
                "edge count {} ≠ n·d = {}",
                self.edges.len(),
                self.n * self.d
            )));
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut var_edges = vec![Vec::with_capacity(self.d); self.n];
        let mut clause_edges = vec![Vec::with_capacity(self.k); self.m];
        for (i, &(var, clause, lit)) in self.edges.iter().enumerate() {
            if var >= self.n || clause >= self.m || lit > 1 {
                return Err(Error::InvalidInput(format!(
                    "edge {i} = [{var}, {clause}, {lit}] out of range"
                )));
            }
            edges.push(naegs_core::instance::Edge { var, clause, lit });
            var_edges[var].push(i);
            clause_edges[clause].push(i);
        }
        if var_edges.iter().any(|v| v.len() != self.d)
            || clause_edges.iter().any(|c| c.len() != self.k)
        {
            return Err(Error::InvalidParameters(
                "instance is not (d, k)-biregular".into(),
            ));
        }
        Ok(Instance {
            params,
            edges,
            var_edges,
            clause_edges,
        })
    }
}

pub fn gen(ctx: &Ctx, k: usize, d: usize, n: usize) -> Result<i32> {
    let params = ModelParams::new(k, d, n)?;
    let inst = Instance::generate(params, ctx.seed)?;
    let doc = Doc {
        provenance: ctx.provenance("gen", json!({"k": k, "d": d, "n": n})),
        result: InstanceJson::from_instance(&inst),
    };
    ctx.emit_json(&doc)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SolveResult {
    e_min: u64,
    minimizers: u64,
    e_min_per_var: f64,
    e_min_per_clause: f64,
}

/// The instance file may be a bare `InstanceJson` or a `gen` output document
/// with a provenance wrapper.
fn load_instance(path: &Path) -> Result<Instance> {
    let text = read_file(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: invalid JSON: {e}", path.display())))?;
    let inner = value.get("result").cloned().unwrap_or(value);
    let ij: InstanceJson = serde_json::from_value(inner)
        .map_err(|e| Error::InvalidInput(format!("{}: not an instance: {e}", path.display())))?;
    ij.into_instance()
}

pub fn solve(ctx: &Ctx, input: &Path, cap: usize) -> Result<i32> {
    let inst = load_instance(input)?;
    let (e_min, minimizers) = inst.exact_ground_state(cap)?;
    let doc = Doc {
        provenance: ctx.provenance(
            "solve",
            json!({"in": input.display().to_string(), "cap": cap}),
        ),
        result: SolveResult {
            e_min,
            minimizers,
            e_min_per_var: e_min as f64 / inst.params.n as f64,
            e_min_per_clause: e_min as f64 / inst.params.m as f64,
        },
    };
    ctx.emit_json(&doc)?;
    Ok(0)
}

pub fn mc(ctx: &Ctx, k: usize, d: usize, n: usize, trials: usize, cap: usize) -> Result<i32> {
    let params = ModelParams::new(k, d, n)?;
    let stats = instance::sample_emin_stats(params, trials, ctx.seed, cap)?;
    let prov = ctx.provenance("mc", json!({"k": k, "d": d, "n": n, "trials": trials}));
    if ctx.json {
        return ctx.emit_json(&Doc {
            provenance: prov,
            result: stats,
        }).map(|()| 0);
    }
    let mut s = prov.csv_comments();
    s.push_str("k,d,n,trials,mean_emin,std_emin,min,max\n");
    s.push_str(&format!(
        "{k},{d},{n},{trials},{},{},{},{}\n",
        sci(stats.mean),
        sci(stats.stddev),
        sci(stats.min),
        sci(stats.max)
    ));
    emit(ctx.csv.or(ctx.out), &s)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Boundary trees
// ---------------------------------------------------------------------------

/// Interchange form of a boundary tree: instance-style edge triples plus the
/// pinned leaf messages as [edge_index, bit] pairs.
#[derive(Debug, Serialize, Deserialize)]
struct TreeJson {
    nv: usize,
    nc: usize,
    edges: Vec<(usize, usize, u8)>,
    boundary: Vec<(usize, u8)>,
}

impl TreeJson {
    fn into_tree(self) -> BoundaryTree {
        BoundaryTree {
            nv: self.nv,
            nc: self.nc,
            edges: self
                .edges
                .into_iter()
                .map(|(var, clause, lit)| naegs_core::instance::Edge { var, clause, lit })
                .collect(),
            boundary: self.boundary,
        }
    }
}

#[derive(Debug, Serialize)]
struct TreeCheckResult {
    trials: usize,
    mismatches: usize,
    /// (trial, formula value, brute-force value) for the first mismatches.
    first_failures: Vec<(usize, u64, u64)>,
}

pub fn tree_check(
    ctx: &Ctx,
    input: Option<&Path>,
    trials: usize,
    k: usize,
    max_nodes: usize,
) -> Result<i32> {
    let params = json!({
        "in": input.map(|p| p.display().to_string()),
        "trials": trials, "k": k, "max_nodes": max_nodes,
    });
    let trees: Vec<BoundaryTree> = match input {
        Some(path) => {
            let text = read_file(path)?;
            let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
                Error::InvalidInput(format!("{}: invalid JSON: {e}", path.display()))
            })?;
            let inner = value.get("result").cloned().unwrap_or(value);
            let tj: TreeJson = serde_json::from_value(inner).map_err(|e| {
                Error::InvalidInput(format!("{}: not a boundary tree: {e}", path.display()))
            })?;
            vec![tj.into_tree()]
        }
        None => {
            let mut rng = rng_from_seed(ctx.seed);
            (0..trials)
                .map(|_| random_boundary_tree(k, 3, max_nodes, &mut rng))
                .collect()
        }
    };

    let mut mismatches = 0usize;
    let mut first_failures = Vec::new();
    for (i, tree) in trees.iter().enumerate() {
        let formula = tree.energy_formula()?;
        let brute = tree.energy_brute_force(26)?;
        if formula != brute {
            mismatches += 1;
            if first_failures.len() < 10 {
                first_failures.push((i, formula, brute));
            }
        }
    }
    let ok = mismatches == 0;
    let doc = Doc {
        provenance: ctx.provenance("tree-check", params),
        result: TreeCheckResult {
            trials: trees.len(),
            mismatches,
            first_failures,
        },
    };
    ctx.emit_json(&doc)?;
    Ok(if ok { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// Survey propagation and curves
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SpResult {
    x: f64,
    w: f64,
    residual: f64,
    iterations: u64,
    in_mbullet: bool,
    derivative: f64,
}

pub fn sp_cmd(ctx: &Ctx, k: usize, alpha: f64, y: f64, damping: f64) -> Result<i32> {
    let mut opts = ctx.opts();
    opts.damping = damping;
    let d = alpha * k as f64;
    let pt = sp::sp_solve(k, d, y, &opts)?;
    let derivative = sp::sp_derivative(k, d, &pt)?;
    let doc = Doc {
        provenance: ctx.provenance(
            "sp",
            json!({"k": k, "alpha": alpha, "y": y, "damping": damping, "tol": opts.tol}),
        ),
        result: SpResult {
            x: pt.x,
            w: pt.w,
            residual: pt.residual,
            iterations: pt.iterations,
            in_mbullet: pt.in_mbullet,
            derivative,
        },
    };
    ctx.emit_json(&doc)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct CurveRow {
    k: usize,
    c: f64,
    alpha: f64,
    y_star: f64,
    gamma: f64,
    x: f64,
    w: f64,
    f: f64,
    e_onersb: f64,
    e_lbd: f64,
    gap: f64,
}

#[derive(Debug, Serialize)]
struct CurveResult {
    rows: Vec<CurveRow>,
    failures: Vec<(f64, String)>,
}

pub fn energy_curve(ctx: &Ctx, k: usize, c_grid: &str) -> Result<i32> {
    let grid = parse_grid(c_grid)?;
    let opts = ctx.opts();
    let computed: Vec<(f64, Result<CurveRow>)> = grid
        .par_iter()
        .map(|&c| {
            let row = (|| -> Result<CurveRow> {
                let alpha = alpha_from_c(k, c);
                let d = alpha * k as f64;
                let root = onersb::solve_ystar(k, d, &opts)?;
                let val = onersb::evaluate_at_y(k, d, root.y_star, &opts)?;
                let e_lbd = firstmoment::e_lbd(alpha, k)?;
                Ok(CurveRow {
                    k,
                    c,
                    alpha,
                    y_star: root.y_star,
                    gamma: root.gamma_at_root,
                    x: val.x,
                    w: val.w,
                    f: val.f,
                    e_onersb: root.e_onersb,
                    e_lbd,
                    gap: root.e_onersb - e_lbd,
                })
            })();
            (c, row)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (c, r) in computed {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((c, e.to_string())),
        }
    }
    let prov = ctx.provenance("energy-curve", json!({"k": k, "c_grid": c_grid}));
    if ctx.json {
        return ctx
            .emit_json(&Doc {
                provenance: prov,
                result: CurveResult { rows, failures },
            })
            .map(|()| 0);
    }
    let mut s = prov.csv_comments();
    s.push_str("k,c,alpha,y_star,Gamma,x,w,F,e_onersb,e_lbd,gap\n");
    for r in &rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            sci(r.c),
            sci(r.alpha),
            sci(r.y_star),
            sci(r.gamma),
            sci(r.x),
            sci(r.w),
            sci(r.f),
            sci(r.e_onersb),
            sci(r.e_lbd),
            sci(r.gap)
        ));
    }
    for (c, why) in &failures {
        s.push_str(&format!("# failed: c = {} ({why})\n", sci(*c)));
    }
    emit(ctx.csv.or(ctx.out), &s)?;
    Ok(0)
}

pub fn bounds(ctx: &Ctx, k: usize, alpha: Option<f64>, c: Option<f64>) -> Result<i32> {
    let alpha = match (alpha, c) {
        (Some(a), None) => a,
        (None, Some(c)) => alpha_from_c(k, c),
        _ => {
            return Err(Error::InvalidInput(
                "bounds needs exactly one of --alpha or --c".into(),
            ))
        }
    };
    // The first-moment/1RSB comparison is defined on integer degrees;
    // snap to the nearest realizable d.
    let d = (alpha * k as f64).round().max(1.0) as usize;
    let report = firstmoment::gap(k, d, &ctx.opts())?;
    let doc = Doc {
        provenance: ctx.provenance("bounds", json!({"k": k, "alpha": alpha, "d": d})),
        result: report,
    };
    ctx.emit_json(&doc)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// Gardner threshold and the 2RSB perturbation test
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ThresholdResult {
    k: usize,
    alpha_ga: Option<f64>,
    crossings: Vec<f64>,
    grid_points: usize,
    failures: Vec<(f64, String)>,
}

pub fn gardner_cmd(
    ctx: &Ctx,
    k: usize,
    alpha_grid: Option<&str>,
    find_threshold: bool,
) -> Result<i32> {
    let opts = ctx.opts();
    if find_threshold {
        let scan = gardner::gardner_scan(k, 16, &opts)?;
        let doc = Doc {
            provenance: ctx.provenance("gardner", json!({"k": k, "find_threshold": true})),
            result: ThresholdResult {
                k,
                alpha_ga: scan.alpha_ga,
                crossings: scan.crossings,
                grid_points: scan.points.len(),
                failures: scan.failures,
            },
        };
        ctx.emit_json(&doc)?;
        return Ok(0);
    }

    let (points, failures) = match alpha_grid {
        Some(spec) => {
            let grid = parse_grid(spec)?;
            let computed: Vec<(f64, Result<ScanPoint>)> = grid
                .par_iter()
                .map(|&a| (a, gardner::branch_lambda_at(k, a, &opts)))
                .collect();
            let mut pts = Vec::new();
            let mut fails = Vec::new();
            for (a, r) in computed {
                match r {
                    Ok(p) => pts.push(p),
                    Err(e) => fails.push((a, e.to_string())),
                }
            }
            (pts, fails)
        }
        None => {
            let scan = gardner::gardner_scan(k, 16, &opts)?;
            (scan.points, scan.failures)
        }
    };
    let prov = ctx.provenance("gardner", json!({"k": k, "alpha_grid": alpha_grid}));
    if ctx.json {
        #[derive(Serialize)]
        struct Rows {
            points: Vec<ScanPoint>,
            failures: Vec<(f64, String)>,
        }
        return ctx
            .emit_json(&Doc {
                provenance: prov,
                result: Rows { points, failures },
            })
            .map(|()| 0);
    }
    let mut s = prov.csv_comments();
    s.push_str("alpha,c,y_star,x,w,lambda,branch_lambda\n");
    for p in &points {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sci(p.alpha),
            sci(p.c),
            sci(p.y_star),
            sci(p.x),
            sci(p.w),
            sci(p.lambda),
            sci(p.branch_lambda)
        ));
    }
    for (a, why) in &failures {
        s.push_str(&format!("# failed: alpha = {} ({why})\n", sci(*a)));
    }
    emit(ctx.csv.or(ctx.out), &s)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct PerturbResult {
    phi_base: f64,
    phi_perturbed: f64,
    expansion: f64,
    /// (Φ_perturbed − Φ_base) − expansion when both sides are evaluated
    /// directly (--direct); null when the perturbed value is itself
    /// reconstructed from the expansion.
    residual: Option<f64>,
    branch_lambda: f64,
}

pub fn perturb(ctx: &Ctx, k: usize, d: f64, y: f64, zeta: f64, direct: bool) -> Result<i32> {
    let opts = ctx.opts();
    let pt = tworsb::polished_point(k, d, y, &opts)?;
    let bundle = gardner::build_matrices(k, d, y, &pt)?;
    // k = 2 feeds the (01)/(10) message pairs back, so the zero-embedded
    // closed 7×7 matrices do not apply there; use the enumerated 9×9 forms.
    let inputs = if k == 2 {
        if d.fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "k = 2 requires an integer degree for the enumerated matrices, got d = {d}"
            )));
        }
        tworsb::inputs_brute(k, d as usize, y, &pt)?
    } else {
        tworsb::inputs_from_bundle(&bundle, &pt)
    };
    let spec = PerturbationSpec::from_eigenvector(y, &pt, zeta)?;
    let expansion = tworsb::delta_phi_expansion(k, d, y, &inputs, &spec)?;

    let (phi_base, phi_perturbed, residual) = if direct {
        if d.fract() != 0.0 {
            return Err(Error::InvalidInput(format!(
                "--direct evaluates nested sums over integer degrees, got d = {d}"
            )));
        }
        let du = d as usize;
        let rho0 = (1.0 - pt.x) / 2.0;
        let q_base = FiniteQ::q_ii([pt.x, rho0, rho0])?;
        let base = tworsb::phi_2rsb(spec.y1, spec.y1, &q_base, k, du)?;
        let q_pert = spec.perturbed_q()?;
        let pert = tworsb::phi_2rsb(spec.y1, spec.y2, &q_pert, k, du)?;
        (base, pert, Some((pert - base) - expansion))
    } else {
        let base = onersb::free_energy(k, d, y, pt.x, pt.w)? / y;
        (base, base + expansion, None)
    };

    let doc = Doc {
        provenance: ctx.provenance(
            "perturb",
            json!({"k": k, "d": d, "y": y, "zeta": zeta, "direct": direct}),
        ),
        result: PerturbResult {
            phi_base,
            phi_perturbed,
            expansion,
            residual,
            branch_lambda: bundle.branch_lambda,
        },
    };
    ctx.emit_json(&doc)?;
    Ok(0)
}

pub fn instability(ctx: &Ctx, k: usize, zeta: f64) -> Result<i32> {
    let scan = tworsb::instability_scan(k, zeta, &ctx.opts())?;
    let doc = Doc {
        provenance: ctx.provenance("instability", json!({"k": k, "zeta": zeta})),
        result: scan,
    };
    ctx.emit_json(&doc)?;
    Ok(0)
}
