//! The `verify` subcommand: a fast exact-identity and oracle sweep across
//! every module. Each check either passes or reports the module, the
//! identity, the inputs, and the observed error; the process exits 0 iff
//! all selected checks pass.

use naegs_core::firstmoment;
use naegs_core::gardner;
use naegs_core::instance::{Assignment, Instance};
use naegs_core::kernels::{
    self, big_gamma, binom_at_half_direct, binom_below_half_direct, pqs_tables, safe_ln,
    EnergyParams, KernelTable,
};
use naegs_core::onersb;
use naegs_core::params::ModelParams;
use naegs_core::rng::rng_from_seed;
use naegs_core::sp::{clause_update, composed_map, sp_derivative, SolveOpts, SpPoint};
use naegs_core::tworsb::{self, FiniteQ};
use naegs_core::wp::random_boundary_tree;
use rand::Rng as _;

/// Knobs for the verification run. `corrupt_s` is a test hook that injects
/// an error into the S-table before the clause-kernel identity check, to
/// demonstrate that a broken identity is caught and named.
pub struct VerifyCfg {
    pub filter: Option<String>,
    pub corrupt_s: bool,
}

struct Failure {
    inputs: String,
    observed: String,
}

type CheckResult = Result<(), Failure>;

fn fail(inputs: impl Into<String>, observed: impl Into<String>) -> CheckResult {
    Err(Failure {
        inputs: inputs.into(),
        observed: observed.into(),
    })
}

/// A half-relation message point (w = clause_update(x)); not necessarily a
/// fixed point.
fn half_point(x: f64, k: usize, y: f64) -> SpPoint {
    SpPoint {
        y,
        x,
        w: clause_update(x, k),
        residual: 0.0,
        iterations: 0,
        in_mbullet: true,
        mgamma_ratio: 0.0,
    }
}

fn core_err(e: naegs_core::Error) -> Failure {
    Failure {
        inputs: String::new(),
        observed: format!("library error: {e}"),
    }
}

// ---------------------------------------------------------------------------
// kernels
// ---------------------------------------------------------------------------

fn kernels_aq_gs(cfg: &VerifyCfg) -> CheckResult {
    for y in [0.05, 0.3, 0.8, 1.5, 2.5] {
        for w in [0.01, 0.05, 0.1, 0.2, 0.3] {
            let t = KernelTable::new(150.0, w, y).map_err(core_err)?;
            let mut s = t.s.clone();
            if cfg.corrupt_s {
                for v in s.iter_mut() {
                    *v += 1e-6;
                }
            }
            for l in t.lo..=t.hi {
                let lhs = t.log_a[l - t.lo] + safe_ln(t.q[l]);
                let rhs = t.log_g[l - t.lo] + safe_ln(s[l]);
                let both_tiny = (lhs.exp() - rhs.exp()).abs() < 1e-300;
                if (lhs.is_finite() || rhs.is_finite()) && (lhs - rhs).abs() >= 1e-12 && !both_tiny
                {
                    return fail(
                        format!("n = 150, w = {w}, y = {y}, l = {l}"),
                        format!("ln(A·Q) = {lhs} vs ln(G·S) = {rhs}"),
                    );
                }
            }
        }
    }
    Ok(())
}

fn kernels_pq_recurrences(_cfg: &VerifyCfg) -> CheckResult {
    for y in [0.0, 0.17, 0.5, 1.3, 3.0] {
        let p = EnergyParams::new(y).map_err(core_err)?.p;
        let (pt, qt, st) = pqs_tables(200, p);
        for l in 0..=200usize {
            let pd = binom_below_half_direct(l, p);
            let qd = binom_at_half_direct(l, p);
            let sd = binom_at_half_direct(l, 0.5);
            for (name, got, want) in [("P", pt[l], pd), ("Q", qt[l], qd), ("S", st[l], sd)] {
                if (got - want).abs() > 1e-12 * (1.0 + want) {
                    return fail(
                        format!("y = {y}, l = {l}"),
                        format!("{name} recurrence {got} vs direct sum {want}"),
                    );
                }
            }
        }
    }
    Ok(())
}

fn kernels_gamma_band(_cfg: &VerifyCfg) -> CheckResult {
    for c in [0.5, 1.0, 2.0, 5.0] {
        for i in 0..=200 {
            let y = 20.0 * i as f64 / 200.0;
            let g = kernels::gamma(c, y);
            let gg = big_gamma(c, y);
            if !(g / 2.0 - 1e-14 <= gg && gg <= g + 1e-14) {
                return fail(
                    format!("c = {c}, y = {y}"),
                    format!("Γ = {gg} outside [γ/2, γ] = [{}, {g}]", g / 2.0),
                );
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// wp / instance
// ---------------------------------------------------------------------------

fn wp_tree_formula(_cfg: &VerifyCfg) -> CheckResult {
    let mut rng = rng_from_seed(0x7ee5);
    for trial in 0..100 {
        let k = 2 + trial % 3;
        let tree = random_boundary_tree(k, 3, 20, &mut rng);
        let formula = tree.energy_formula().map_err(core_err)?;
        let brute = tree.energy_brute_force(26).map_err(core_err)?;
        if formula != brute {
            return fail(
                format!("trial {trial}, k = {k}, nv = {}, nc = {}", tree.nv, tree.nc),
                format!("formula {formula} vs brute force {brute}"),
            );
        }
    }
    Ok(())
}

fn instance_ground_state(_cfg: &VerifyCfg) -> CheckResult {
    let params = ModelParams::new(3, 3, 9).map_err(core_err)?;
    let inst = Instance::generate(params, 41).map_err(core_err)?;
    let (e_min, count) = inst.exact_ground_state(20).map_err(core_err)?;
    let mut rng = rng_from_seed(42);
    for trial in 0..50 {
        let a = Assignment((0..9).map(|_| rng.gen_range(0..=1u8)).collect());
        let comp = Assignment(a.0.iter().map(|b| 1 - b).collect());
        let ha = inst.hamiltonian(&a).map_err(core_err)?;
        let hc = inst.hamiltonian(&comp).map_err(core_err)?;
        if ha != hc {
            return fail(
                format!("k=3 d=3 n=9 seed=41, trial {trial}"),
                format!("H(a) = {ha} ≠ H(¬a) = {hc}: NAE complement symmetry broken"),
            );
        }
        if ha < e_min {
            return fail(
                format!("k=3 d=3 n=9 seed=41, trial {trial}"),
                format!("H(a) = {ha} below claimed minimum {e_min}"),
            );
        }
    }
    if count == 0 || count % 2 != 0 {
        return fail(
            "k=3 d=3 n=9 seed=41".to_string(),
            format!("minimizer count {count} not positive and even (complement pairing)"),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sp
// ---------------------------------------------------------------------------

fn sp_stationarity(_cfg: &VerifyCfg) -> CheckResult {
    let opts = SolveOpts::default();
    let k = 8usize;
    for c in [1.5, 10.0] {
        let p = ModelParams::from_k_c(k, c).map_err(core_err)?;
        let d = p.d as f64;
        let y = onersb::y_at_gamma(p.c(), 1.0).ok_or_else(|| Failure {
            inputs: format!("k = {k}, c = {c}"),
            observed: "γ(y) never reaches 1".into(),
        })?;
        let pt = tworsb::polished_point(k, d, y, &opts).map_err(core_err)?;
        let f = onersb::free_energy(k, d, y, pt.x, pt.w).map_err(core_err)?;
        let (dfdx, dfdw) = onersb::stationarity_check(k, d, y, pt.x, pt.w).map_err(core_err)?;
        if dfdx.abs() > 1e-6 * (1.0 + f.abs()) || dfdw.abs() > 1e-6 * (1.0 + f.abs()) {
            return fail(
                format!("k = {k}, c = {c}, y = {y}"),
                format!("|∂F/∂x| = {}, |∂F/∂w| = {}", dfdx.abs(), dfdw.abs()),
            );
        }
        // Derivative of the composed map vs central difference.
        let h = 1e-6;
        let fd = (composed_map(pt.x + h, k, d, y).map_err(core_err)?
            - composed_map(pt.x - h, k, d, y).map_err(core_err)?)
            / (2.0 * h);
        let an = sp_derivative(k, d, &pt).map_err(core_err)?;
        if (an - fd).abs() > 1e-4 * (1.0 + fd.abs()) {
            return fail(
                format!("k = {k}, c = {c}, y = {y}"),
                format!("map derivative {an} vs finite difference {fd}"),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// onersb
// ---------------------------------------------------------------------------

fn onersb_hfz_efz(_cfg: &VerifyCfg) -> CheckResult {
    for k in [3usize, 8, 12] {
        for y in [0.1, 0.8, 2.0] {
            for i in 1..10 {
                let x = i as f64 / 20.0;
                let w = clause_update(x, k);
                let h = onersb::hfz(k, y, x);
                let e = onersb::efz(y, x, w);
                if (h - e).abs() > 1e-12 * (1.0 + h.abs()) {
                    return fail(
                        format!("k = {k}, y = {y}, x = {x}"),
                        format!("hfz = {h} vs efz = {e}"),
                    );
                }
            }
        }
    }
    Ok(())
}

fn onersb_f_zero_at_y0(_cfg: &VerifyCfg) -> CheckResult {
    for (k, d) in [(3usize, 6.0), (8, 24.0)] {
        for i in 0..10 {
            for j in 0..10 {
                let x = i as f64 / 10.0;
                let w = j as f64 / 10.0;
                let f = onersb::free_energy(k, d, 0.0, x, w).map_err(core_err)?;
                if f.abs() > 1e-12 {
                    return fail(
                        format!("k = {k}, d = {d}, x = {x}, w = {w}"),
                        format!("F(x, w, 0) = {f}"),
                    );
                }
            }
        }
    }
    Ok(())
}

fn onersb_dfz_ratio(_cfg: &VerifyCfg) -> CheckResult {
    let d = 7.0f64;
    for y in [0.1, 0.4, 0.7, 1.2, 1.9] {
        for w in [0.02, 0.1, 0.4, 0.9] {
            let td = KernelTable::new(d, w, y).map_err(core_err)?;
            let tdm = KernelTable::new(d - 1.0, w, y).map_err(core_err)?;
            let ratio = (td.log_z - tdm.log_z).exp();
            let expect = 1.0 - w * (1.0 - tdm.x_tilde()) * (1.0 - td.ep.am);
            if (ratio - expect).abs() > 1e-12 {
                return fail(
                    format!("d = {d}, y = {y}, w = {w}"),
                    format!("dfz/Ż = {ratio} vs 1 − w(1−x̃)(1−AM) = {expect}"),
                );
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// firstmoment
// ---------------------------------------------------------------------------

fn firstmoment_gap(_cfg: &VerifyCfg) -> CheckResult {
    // k = 10 at normalized density c = 5 (well inside the bound's domain).
    let k = 10usize;
    let d = (naegs_core::params::alpha_from_c(k, 5.0) * k as f64).round() as usize;
    let report = firstmoment::gap(k, d, &SolveOpts::default()).map_err(core_err)?;
    if !(report.gap > 0.0) {
        return fail(
            format!("k = {k}, d = {d}"),
            format!("gap = {} not positive", report.gap),
        );
    }
    if !(report.x_p <= 2f64.powf(-(k as f64) / 2.0)) {
        return fail(
            format!("k = {k}, d = {d}, p = {}", report.p_ubd),
            format!("x(p) = {} above 2^(−k/2)", report.x_p),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// gardner
// ---------------------------------------------------------------------------

fn gardner_closed_vs_brute(_cfg: &VerifyCfg) -> CheckResult {
    for d in [4usize, 5] {
        let y = 0.8;
        let pt = half_point(0.2, 3, y);
        let brute = gardner::brute_force_b(3, d, y, &pt).map_err(core_err)?;
        let bundle = gardner::build_matrices(3, d as f64, y, &pt).map_err(core_err)?;
        for r in 0..7 {
            for c in 0..7 {
                let (got, want) = (bundle.b[(r, c)], brute[(r, c)]);
                if (got - want).abs() > 1e-10 * want.abs().max(1e-30) {
                    return fail(
                        format!("k = 3, d = {d}, y = {y}, entry ({r}, {c})"),
                        format!("closed form {got} vs brute force {want}"),
                    );
                }
            }
        }
    }
    Ok(())
}

fn gardner_eigen(_cfg: &VerifyCfg) -> CheckResult {
    let (k, c, y) = (8usize, 2.0, 1.0);
    let p = ModelParams::from_k_c(k, c).map_err(core_err)?;
    let d = p.d as f64;
    let pt = tworsb::polished_point(k, d, y, &SolveOpts::default()).map_err(core_err)?;
    let bundle = gardner::build_matrices(k, d, y, &pt).map_err(core_err)?;
    // ‖Bξ − λξ‖∞ against the eigenvector scale.
    let mut resid = 0.0f64;
    let mut xi_max = 0.0f64;
    for r in 0..7 {
        let mut row = 0.0;
        for c in 0..7 {
            row += bundle.b[(r, c)] * bundle.xi[c];
        }
        resid = resid.max((row - bundle.lambda * bundle.xi[r]).abs());
        xi_max = xi_max.max(bundle.xi[r].abs());
    }
    if resid > 1e-10 * xi_max {
        return fail(
            format!("k = {k}, c = {c}, y = {y}"),
            format!("‖Bξ − λξ‖∞ = {resid} (ξ scale {xi_max})"),
        );
    }
    let lam4 = gardner::eigen_lambda(&bundle.b4);
    if (lam4 - bundle.lambda).abs() > 1e-10 * bundle.lambda {
        return fail(
            format!("k = {k}, c = {c}, y = {y}"),
            format!("closed-form λ = {} vs 4×4 eigen-solve {lam4}", bundle.lambda),
        );
    }
    // Diagonal column sums re-assemble the normalizer.
    for r in 0..3 {
        let bh: f64 = (0..3).map(|c| bundle.b_hat[(r, c)]).sum();
        if (bh - 1.0).abs() > 1e-12 {
            return fail(
                format!("k = {k}, c = {c}, y = {y}, B̂ diagonal row {r}"),
                format!("column sum {bh} ≠ 1"),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// tworsb
// ---------------------------------------------------------------------------

fn tworsb_phi_identity(_cfg: &VerifyCfg) -> CheckResult {
    let (k, d) = (3usize, 4usize);
    for (x, y) in [(0.2, 0.7), (0.35, 1.1)] {
        let w = clause_update(x, k);
        let rho0 = (1.0 - x) / 2.0;
        let q = FiniteQ::q_ii([x, rho0, rho0]).map_err(core_err)?;
        let phi = tworsb::phi_2rsb(y, y, &q, k, d).map_err(core_err)?;
        let f_over_y = onersb::free_energy(k, d as f64, y, x, w).map_err(core_err)? / y;
        if (phi - f_over_y).abs() > 1e-10 * (1.0 + f_over_y.abs()) {
            return fail(
                format!("k = {k}, d = {d}, x = {x}, y = {y}"),
                format!("Φ(y, y, Q_II) = {phi} vs F(y)/y = {f_over_y}"),
            );
        }
    }
    Ok(())
}

fn tworsb_aux_identities(_cfg: &VerifyCfg) -> CheckResult {
    let (k, cden, y) = (8usize, 2.0, 1.0);
    let p = ModelParams::from_k_c(k, cden).map_err(core_err)?;
    let d = p.d as f64;
    let pt = tworsb::polished_point(k, d, y, &SolveOpts::default()).map_err(core_err)?;
    let bundle = gardner::build_matrices(k, d, y, &pt).map_err(core_err)?;
    let aux = tworsb::aux_matrices(y, &pt);
    let scale: f64 = (0..9)
        .flat_map(|r| (0..9).map(move |c| (r, c)))
        .map(|(r, c)| aux.cap_pi[(r, c)].abs())
        .fold(0.0, f64::max);
    // P(Π − Ξ) = 0 and PΓP = 0, entrywise.
    for r in 0..9 {
        for c in 0..9 {
            let mut pdiff = 0.0;
            let mut pgp = 0.0;
            for m in 0..9 {
                pdiff += aux.proj[(r, m)] * (aux.cap_pi[(m, c)] - aux.cap_xi[(m, c)]);
                for l in 0..9 {
                    pgp += aux.proj[(r, m)] * aux.cap_gamma[(m, l)] * aux.proj[(l, c)];
                }
            }
            if pdiff.abs() > 1e-12 * scale || pgp.abs() > 1e-12 * scale {
                return fail(
                    format!("k = {k}, c = {cden}, y = {y}, entry ({r}, {c})"),
                    format!("P(Π−Ξ) = {pdiff}, PΓP = {pgp} (scale {scale})"),
                );
            }
        }
    }
    // Πξ = 0 for the stability eigenvector (embedded; (01)/(10) are 0).
    for r in 0..9 {
        let mut v = 0.0;
        for c in 0..7 {
            v += aux.cap_pi[(r, c)] * bundle.xi[c];
        }
        if v.abs() > 1e-12 * scale {
            return fail(
                format!("k = {k}, c = {cden}, y = {y}, row {r}"),
                format!("(Πξ)_{r} = {v} (scale {scale})"),
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

pub fn run(cfg: &VerifyCfg) -> i32 {
    let checks: Vec<(&str, &str, fn(&VerifyCfg) -> CheckResult)> = vec![
        ("kernels", "A_l*Q_l = G_l*S_l across the window", kernels_aq_gs),
        ("kernels", "P/Q/S recurrences vs direct summation", kernels_pq_recurrences),
        ("kernels", "gamma/2 <= Gamma <= gamma on y in [0, 20]", kernels_gamma_band),
        ("wp", "tree energy formula == brute force", wp_tree_formula),
        ("instance", "NAE complement symmetry and ground-state minimality", instance_ground_state),
        ("sp", "fixed-point stationarity and map derivative", sp_stationarity),
        ("onersb", "hfz == efz at the clause half-relation", onersb_hfz_efz),
        ("onersb", "F(x, w, 0) = 0", onersb_f_zero_at_y0),
        ("onersb", "dfz/Zdot ratio identity", onersb_dfz_ratio),
        ("firstmoment", "gap > 0 and x(p) <= 2^(-k/2)", firstmoment_gap),
        ("gardner", "closed-form B vs brute-force enumeration", gardner_closed_vs_brute),
        ("gardner", "eigenpair and diagonal column sums", gardner_eigen),
        ("tworsb", "Phi(y, y, Q_II) = F(y)/y", tworsb_phi_identity),
        ("tworsb", "auxiliary-matrix projector identities", tworsb_aux_identities),
    ];

    let mut failures = 0usize;
    let mut ran = 0usize;
    for (module, identity, check) in &checks {
        if let Some(f) = &cfg.filter {
            if !module.contains(f.as_str()) {
                continue;
            }
        }
        ran += 1;
        match check(cfg) {
            Ok(()) => println!("ok   {module}::{identity}"),
            Err(f) => {
                failures += 1;
                println!(
                    "FAIL {module}::{identity} | inputs: {} | observed: {}",
                    if f.inputs.is_empty() { "-" } else { &f.inputs },
                    f.observed
                );
            }
        }
    }
    if ran == 0 {
        eprintln!(
            "no checks matched filter {:?}",
            cfg.filter.as_deref().unwrap_or("")
        );
        return 2;
    }
    println!("verify: {} checks, {} failed", ran, failures);
    if failures == 0 {
        0
    } else {
        1
    }
}
