//! Acceptance gate: nine end-to-end criteria spanning exact identities,
//! brute-force oracles, scaling laws, and statistical sanity checks. One
//! pass/fail line is printed per criterion; the test fails if any criterion
//! does.

use naegs_core::firstmoment;
use naegs_core::gardner;
use naegs_core::instance::sample_emin_stats;
use naegs_core::kernels::{
    self, big_gamma, binom_at_half_direct, binom_below_half_direct, pqs_tables, safe_ln,
    EnergyParams, KernelTable,
};
use naegs_core::onersb;
use naegs_core::params::ModelParams;
use naegs_core::rng::rng_from_seed;
use naegs_core::sp::{clause_update, SolveOpts, SpPoint};
use naegs_core::tworsb::{self, FiniteQ, PerturbationSpec};
use naegs_core::wp::random_boundary_tree;
use nalgebra::{SMatrix, SVector};

type Outcome = Result<String, String>;

fn matrix_points() -> Vec<(usize, f64)> {
    let mut pts = Vec::new();
    for k in [8usize, 10, 12] {
        for c in [1.5, 3.0, 10.0, 100.0] {
            pts.push((k, c));
        }
    }
    pts
}

/// A message pair obeying the clause half-relation (not a fixed point).
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

// ---------------------------------------------------------------------------
// 1. Exact-identity suite (< 5 s)
// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    // A_l·Q_l = G_l·S_l across the truncation window, 5×5 (w, y) grid.
    for y in [0.05, 0.3, 0.8, 1.5, 2.5] {
        for w in [0.01, 0.05, 0.1, 0.2, 0.3] {
            let t = KernelTable::new(150.0, w, y).map_err(|e| e.to_string())?;
            for l in t.lo..=t.hi {
                let lhs = t.log_a[l - t.lo] + safe_ln(t.q[l]);
                let rhs = t.log_g[l - t.lo] + safe_ln(t.s[l]);
                let both_tiny = (lhs.exp() - rhs.exp()).abs() < 1e-300;
                if (lhs.is_finite() || rhs.is_finite()) && (lhs - rhs).abs() >= 1e-12 && !both_tiny
                {
                    return Err(format!("A·Q ≠ G·S at w={w} y={y} l={l}: {lhs} vs {rhs}"));
                }
            }
        }
    }
    // P/Q/S recurrences vs direct pmf summation up to l = 200.
    for y in [0.0, 0.17, 0.5, 1.3, 3.0] {
        let p = EnergyParams::new(y).map_err(|e| e.to_string())?.p;
        let (pt, qt, st) = pqs_tables(200, p);
        for l in 0..=200usize {
            let checks = [
                ("P", pt[l], binom_below_half_direct(l, p)),
                ("Q", qt[l], binom_at_half_direct(l, p)),
                ("S", st[l], binom_at_half_direct(l, 0.5)),
            ];
            for (name, got, want) in checks {
                if (got - want).abs() > 1e-12 * (1.0 + want) {
                    return Err(format!("{name}-recurrence at y={y} l={l}: {got} vs {want}"));
                }
            }
        }
    }
    // hfz == efz under the clause half-relation.
    for k in [3usize, 8, 12] {
        for y in [0.1, 0.8, 2.0] {
            for i in 1..20 {
                let x = i as f64 / 40.0;
                let h = onersb::hfz(k, y, x);
                let e = onersb::efz(y, x, clause_update(x, k));
                if (h - e).abs() > 1e-12 * (1.0 + h.abs()) {
                    return Err(format!("hfz ≠ efz at k={k} y={y} x={x}: {h} vs {e}"));
                }
            }
        }
    }
    // dfz/Ż ratio identity on a 20-point (w, y) grid.
    let d = 7.0f64;
    for y in [0.1, 0.4, 0.7, 1.2, 1.9] {
        for w in [0.02, 0.1, 0.4, 0.9] {
            let td = KernelTable::new(d, w, y).map_err(|e| e.to_string())?;
            let tdm = KernelTable::new(d - 1.0, w, y).map_err(|e| e.to_string())?;
            let ratio = (td.log_z - tdm.log_z).exp();
            let expect = 1.0 - w * (1.0 - tdm.x_tilde()) * (1.0 - td.ep.am);
            if (ratio - expect).abs() > 1e-12 {
                return Err(format!("dfz/Ż at y={y} w={w}: {ratio} vs {expect}"));
            }
        }
    }
    // γ/2 ≤ Γ ≤ γ on y ∈ [0, 20].
    for c in [0.5, 1.0, 2.0, 5.0] {
        for i in 0..=400 {
            let y = 20.0 * i as f64 / 400.0;
            let g = kernels::gamma(c, y);
            let gg = big_gamma(c, y);
            if !(g / 2.0 - 1e-14 <= gg && gg <= g + 1e-14) {
                return Err(format!("Γ band violated at c={c} y={y}: Γ={gg}, γ={g}"));
            }
        }
    }
    // F(x, w, 0) = 0 on a 10×10 grid.
    for (k, dd) in [(3usize, 6.0), (8, 24.0)] {
        for i in 0..10 {
            for j in 0..10 {
                let (x, w) = (i as f64 / 10.0, j as f64 / 10.0);
                let f = onersb::free_energy(k, dd, 0.0, x, w).map_err(|e| e.to_string())?;
                if f.abs() > 1e-12 {
                    return Err(format!("F(x={x}, w={w}, 0) = {f} at k={k}"));
                }
            }
        }
    }
    Ok("kernel, normalizer, and y=0 identities exact at 1e-12".into())
}

// ---------------------------------------------------------------------------
// 2. Tree formula (< 10 s)
// ---------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let mut rng = rng_from_seed(0xacce97);
    for trial in 0..100 {
        let k = 2 + trial % 3;
        let tree = random_boundary_tree(k, 3, 20, &mut rng);
        let formula = tree.energy_formula().map_err(|e| e.to_string())?;
        let brute = tree.energy_brute_force(26).map_err(|e| e.to_string())?;
        if formula != brute {
            return Err(format!(
                "tree {trial} (k={k}, nv={}, nc={}): formula {formula} ≠ brute {brute}",
                tree.nv, tree.nc
            ));
        }
    }
    Ok("100/100 random boundary trees integer-exact".into())
}

// ---------------------------------------------------------------------------
// 3. SP stationarity and dual energy (< 30 s)
// ---------------------------------------------------------------------------

fn criterion_3() -> Outcome {
    let opts = SolveOpts::default();
    for (k, c) in matrix_points() {
        let p = ModelParams::from_k_c(k, c).map_err(|e| e.to_string())?;
        let d = p.d as f64;
        let y = onersb::y_at_gamma(p.c(), 1.0)
            .ok_or_else(|| format!("γ never reaches 1 at k={k} c={c}"))?;
        let pt = tworsb::polished_point(k, d, y, &opts).map_err(|e| e.to_string())?;
        let f = onersb::free_energy(k, d, y, pt.x, pt.w).map_err(|e| e.to_string())?;
        let (fx, fw) =
            onersb::stationarity_check(k, d, y, pt.x, pt.w).map_err(|e| e.to_string())?;
        let tol = 1e-6 * (1.0 + f.abs());
        if fx > tol || fw > tol {
            return Err(format!("k={k} c={c}: |∂F/∂x|={fx}, |∂F/∂w|={fw} > {tol}"));
        }
        // Dual energy: e(y) = −F′(y) along the fixed-point branch.
        let h = 1e-4 * y.max(1.0);
        let fp = onersb::evaluate_at_y(k, d, y + h, &opts).map_err(|e| e.to_string())?;
        let fm = onersb::evaluate_at_y(k, d, y - h, &opts).map_err(|e| e.to_string())?;
        let fprime = (fp.f - fm.f) / (2.0 * h);
        let e = onersb::evaluate(k, d, &pt).map_err(|e| e.to_string())?.e;
        if ((e + fprime) / e).abs() > 1e-5 {
            return Err(format!("k={k} c={c}: e={e} vs −F′={}", -fprime));
        }
    }
    Ok("partials < 1e-6·(1+|F|) and e = −F′ to 1e-5 at 12 matrix points".into())
}

// ---------------------------------------------------------------------------
// 4. 1RSB root (< 1 min)
// ---------------------------------------------------------------------------

fn criterion_4() -> Outcome {
    let opts = SolveOpts::default();
    for (k, c) in matrix_points() {
        let p = ModelParams::from_k_c(k, c).map_err(|e| e.to_string())?;
        let d = p.d as f64;
        let root = onersb::solve_ystar(k, d, &opts).map_err(|e| e.to_string())?;
        // Exactly one sign change of Σ on the γ ∈ [1/4, 4] bracket.
        let (y_lo, y_hi) = root.bracket;
        let mut prev_sign = 0i32;
        let mut changes = 0usize;
        for i in 0..=40 {
            let y = y_lo + (y_hi - y_lo) * i as f64 / 40.0;
            let s = onersb::evaluate_at_y(k, d, y, &opts)
                .map_err(|e| e.to_string())?
                .sigma;
            let sign = if s > 0.0 { 1 } else { -1 };
            if prev_sign != 0 && sign != prev_sign {
                changes += 1;
            }
            prev_sign = sign;
        }
        if changes != 1 {
            return Err(format!("k={k} c={c}: {changes} sign changes of Σ on bracket"));
        }
        // Γ(y⋆) engineering band, tightening linearly from k=8 to k=14.
        let t = (k as f64 - 8.0) / 6.0;
        let (b_lo, b_hi) = (0.8 + 0.15 * t, 1.2 - 0.15 * t);
        if !(b_lo..=b_hi).contains(&root.gamma_at_root) {
            return Err(format!(
                "k={k} c={c}: Γ(y⋆) = {} outside [{b_lo}, {b_hi}]",
                root.gamma_at_root
            ));
        }
        // F″ > 0 on the convex sub-band γ ∈ [3/4, 4]. γ saturates at 2c,
        // so when 4 is unreachable the band is capped at 0.98·2c: beyond
        // the saturation point F is y-independent to machine precision and
        // a second difference would read exactly 0.
        let y_lo = onersb::y_at_gamma(p.c(), 0.75)
            .ok_or_else(|| format!("γ never reaches 3/4 at k={k} c={c}"))?;
        let gamma_cap = 4f64.min(1.96 * p.c());
        let y_hi = onersb::y_at_gamma(p.c(), gamma_cap)
            .ok_or_else(|| format!("γ never reaches {gamma_cap} at k={k} c={c}"))?;
        let grid: Vec<f64> = (1..=6)
            .map(|i| y_lo + (y_hi - y_lo) * i as f64 / 7.0)
            .collect();
        let out = onersb::convexity_check(k, d, &grid, &opts).map_err(|e| e.to_string())?;
        for (i, &(fpp, _)) in out.iter().enumerate() {
            if !(fpp > 0.0) {
                return Err(format!("k={k} c={c}: F″ = {fpp} ≤ 0 at grid point {i}"));
            }
        }
    }
    Ok("unique Σ root, Γ(y⋆) in band, F″ > 0 at 12 matrix points".into())
}

// ---------------------------------------------------------------------------
// 5. Bound ordering (< 1 min)
// ---------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let opts = SolveOpts::default();
    for (k, c) in matrix_points() {
        let p = ModelParams::from_k_c(k, c).map_err(|e| e.to_string())?;
        let alpha = p.alpha();
        let root = onersb::solve_ystar(k, p.d as f64, &opts).map_err(|e| e.to_string())?;
        let e_lbd = firstmoment::e_lbd(alpha, k).map_err(|e| e.to_string())?;
        if !(e_lbd <= root.e_onersb) {
            return Err(format!("k={k} c={c}: e_lbd={e_lbd} > e1RSB={}", root.e_onersb));
        }
        let report = firstmoment::gap(k, p.d, &opts).map_err(|e| e.to_string())?;
        if !(report.gap > 0.0) {
            return Err(format!("k={k} c={c}: gap = {} ≤ 0", report.gap));
        }
        if !(report.x_p <= 2f64.powf(-(k as f64) / 2.0)) {
            return Err(format!("k={k} c={c}: x(p) = {} > 2^(-k/2)", report.x_p));
        }
    }
    Ok("e_lbd ≤ e1RSB, gap > 0, x(p) ≤ 2^(-k/2) at 12 matrix points".into())
}

// ---------------------------------------------------------------------------
// 6. Stability matrices (< 30 s)
// ---------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let opts = SolveOpts::default();
    // Closed-form B vs brute-force enumeration at k = 3, d ∈ {4, 5}.
    for d in [4usize, 5] {
        for y in [0.4, 1.1] {
            let pt = half_point(0.2, 3, y);
            let brute = gardner::brute_force_b(3, d, y, &pt).map_err(|e| e.to_string())?;
            let bundle =
                gardner::build_matrices(3, d as f64, y, &pt).map_err(|e| e.to_string())?;
            for r in 0..7 {
                for c in 0..7 {
                    let (got, want) = (bundle.b[(r, c)], brute[(r, c)]);
                    if (got - want).abs() > 1e-10 * want.abs().max(1e-30) {
                        return Err(format!(
                            "B[{r}][{c}] at d={d} y={y}: closed {got} vs brute {want}"
                        ));
                    }
                }
            }
        }
    }
    for (k, c, y) in [(8usize, 2.0, 1.0), (10, 3.0, 1.4)] {
        let p = ModelParams::from_k_c(k, c).map_err(|e| e.to_string())?;
        let d = p.d as f64;
        let pt = tworsb::polished_point(k, d, y, &opts).map_err(|e| e.to_string())?;
        let bundle = gardner::build_matrices(k, d, y, &pt).map_err(|e| e.to_string())?;
        // ‖Bξ − λξ‖∞ < 1e−10·‖ξ‖∞.
        let xi = SVector::<f64, 7>::from_row_slice(&bundle.xi);
        let resid = (bundle.b * xi - bundle.lambda * xi).amax();
        let xi_max = xi.amax();
        if resid > 1e-10 * xi_max {
            return Err(format!("k={k}: ‖Bξ − λξ‖∞ = {resid} (scale {xi_max})"));
        }
        // λ vs the 4×4 and 6×6 eigen-solves.
        let lam4 = gardner::eigen_lambda(&bundle.b4);
        if (lam4 - bundle.lambda).abs() > 1e-10 * bundle.lambda {
            return Err(format!("k={k}: λ = {} vs eig(B4) = {lam4}", bundle.lambda));
        }
        let mut b6 = SMatrix::<f64, 6, 6>::zeros();
        for r in 0..4 {
            for cc in 0..4 {
                b6[(r, cc)] = bundle.b4[(r, cc)];
            }
        }
        // Balance by diagonal similarity before the QR eigen-solve.
        for _ in 0..8 {
            for i in 0..6 {
                let cs: f64 = (0..6).filter(|&j| j != i).map(|j| b6[(j, i)].abs()).sum();
                let rs: f64 = (0..6).filter(|&j| j != i).map(|j| b6[(i, j)].abs()).sum();
                if cs > 0.0 && rs > 0.0 {
                    let f = (rs / cs).sqrt();
                    for j in 0..6 {
                        b6[(j, i)] *= f;
                        b6[(i, j)] /= f;
                    }
                }
            }
        }
        let lam6 = b6
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if (lam6 - bundle.lambda).abs() > 1e-10 * bundle.lambda {
            return Err(format!("k={k}: λ = {} vs eig(B6) = {lam6}", bundle.lambda));
        }
        // Diagonal column sums equal 1 at the fixed point.
        for r in 0..3 {
            let bh: f64 = (0..3).map(|cc| bundle.b_hat[(r, cc)]).sum();
            let bb: f64 = (0..3).map(|cc| bundle.b[(r, cc)]).sum();
            if (bh - 1.0).abs() > 1e-8 || (bb - 1.0).abs() > 1e-8 {
                return Err(format!("k={k}: diagonal sums B̂ {bh}, B {bb}"));
            }
        }
    }
    // Ż via S-sums equals Ż via kernel sums.
    for d in [3.0f64, 5.0, 20.0, 500.0] {
        for w in [0.01, 0.1, 0.3] {
            for y in [0.1, 0.8, 2.0] {
                let s = gardner::s_sums(d, w, y).map_err(|e| e.to_string())?;
                let kernel = KernelTable::new(d - 1.0, w, y).map_err(|e| e.to_string())?;
                if (s.log_zdot() - kernel.log_z).abs() > 1e-12 {
                    return Err(format!(
                        "Ż routes differ at d={d} w={w} y={y}: {} vs {}",
                        s.log_zdot(),
                        kernel.log_z
                    ));
                }
            }
        }
    }
    Ok("closed forms = enumeration, eigenpair and Ż cross-checks at 1e-10/1e-12".into())
}

// ---------------------------------------------------------------------------
// 7. Gardner scaling (< 10 min)
// ---------------------------------------------------------------------------

fn criterion_7() -> Outcome {
    let opts = SolveOpts::default();
    let mut ratios = Vec::new();
    for k in 8usize..=14 {
        let scan = gardner::gardner_scan(k, 16, &opts).map_err(|e| e.to_string())?;
        let alpha_ga = scan
            .alpha_ga
            .ok_or_else(|| format!("no Đλ = 1 crossing at k = {k}"))?;
        ratios.push(alpha_ga * (k as f64).powi(3) / 4f64.powi(k as i32));
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &r| (l.min(r), h.max(r)));
    if hi / lo >= 3.0 {
        return Err(format!(
            "α_Ga·k³/4^k varies by factor {:.3} over k = 8..14 (ratios {ratios:?})",
            hi / lo
        ));
    }
    // ΔΦ sign flip vs the Đλ = 1 crossing at k = 8.
    let scan = tworsb::instability_scan(8, 1e-6, &opts).map_err(|e| e.to_string())?;
    if scan.rel_gap > 1e-4 {
        return Err(format!(
            "ΔΦ flip α = {} vs Đλ crossing α = {} (rel gap {})",
            scan.alpha_flip, scan.alpha_lambda, scan.rel_gap
        ));
    }
    Ok(format!(
        "α_Ga·k³/4^k within factor {:.2}; flip/crossing rel gap {:.2e}",
        hi / lo,
        scan.rel_gap
    ))
}

// ---------------------------------------------------------------------------
// 8. 2RSB oracle (< 5 min)
// ---------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    // Φ(y, y, Q_II) = F(y)/y at k = 3, d = 4.
    let (k3, d3) = (3usize, 4usize);
    for (x, y) in [(0.2, 0.7), (0.35, 1.1)] {
        let w = clause_update(x, k3);
        let rho0 = (1.0 - x) / 2.0;
        let q = FiniteQ::q_ii([x, rho0, rho0]).map_err(|e| e.to_string())?;
        let phi = tworsb::phi_2rsb(y, y, &q, k3, d3).map_err(|e| e.to_string())?;
        let f_over_y = onersb::free_energy(k3, d3 as f64, y, x, w).map_err(|e| e.to_string())? / y;
        if (phi - f_over_y).abs() > 1e-10 * (1.0 + f_over_y.abs()) {
            return Err(format!("Φ = {phi} vs F/y = {f_over_y} at x={x} y={y}"));
        }
    }

    // Auxiliary-matrix identities at a k = 8 fixed point.
    let opts = SolveOpts::default();
    let (k, c, y) = (8usize, 2.0, 1.0);
    let p = ModelParams::from_k_c(k, c).map_err(|e| e.to_string())?;
    let d = p.d as f64;
    let pt = tworsb::polished_point(k, d, y, &opts).map_err(|e| e.to_string())?;
    let bundle = gardner::build_matrices(k, d, y, &pt).map_err(|e| e.to_string())?;
    let aux = tworsb::aux_matrices(y, &pt);
    let scale = aux.cap_pi.amax();
    let mut xi = SVector::<f64, 9>::zeros();
    for i in 0..7 {
        xi[i] = bundle.xi[i];
    }
    if (aux.cap_pi * xi).amax() > 1e-12 * scale {
        return Err(format!("Πξ = {} (scale {scale})", (aux.cap_pi * xi).amax()));
    }
    if (aux.proj * aux.cap_gamma * aux.proj).amax() > 1e-12 * scale {
        return Err("PΓP ≠ 0".into());
    }
    if (aux.proj * (aux.cap_pi - aux.cap_xi)).amax() > 1e-12 * scale {
        return Err("P(Π − Ξ) ≠ 0".into());
    }
    // Scalar products against their closed forms.
    let mut bh9 = SMatrix::<f64, 9, 9>::zeros();
    for r in 0..7 {
        for cc in 0..7 {
            bh9[(r, cc)] = bundle.b_hat[(r, cc)];
        }
    }
    let gm = (-y / 2.0).exp();
    let bxi = bh9 * xi;
    let gamma_prod = bxi.dot(&(aux.cap_gamma * xi));
    let xi_prod = bxi.dot(&(aux.cap_xi * xi));
    let gamma_closed = (1.0 - gm) * gm * (1.0 - pt.x) * pt.x * pt.x * pt.w;
    let xi_closed = (1.0 - gm) * (1.0 - (-y).exp()) * (1.0 - pt.x) * pt.x * pt.x * pt.w;
    if (gamma_prod - gamma_closed).abs() > 1e-12 * gamma_closed.abs() {
        return Err(format!("(B̂ξ, Γξ) = {gamma_prod} vs closed {gamma_closed}"));
    }
    if (xi_prod - xi_closed).abs() > 1e-12 * xi_closed.abs() {
        return Err(format!("(B̂ξ, Ξξ) = {xi_prod} vs closed {xi_closed}"));
    }

    // Expansion residual ζ⁶ scaling at an enumerable genuine fixed point
    // (k = 2, d = 5; clause size 2 keeps the nested sums exact while the
    // frozen phase exists), along the instability direction.
    let (k2, d2, y2) = (2usize, 5usize, 0.5f64);
    let mut pt2 = tworsb::polished_point(k2, d2 as f64, y2, &opts).map_err(|e| e.to_string())?;
    if pt2.residual > 1e-13 {
        return Err(format!("k=2 fixed-point residual {}", pt2.residual));
    }
    pt2.in_mbullet = true;
    let rho0 = (1.0 - pt2.x) / 2.0;
    let q_base = FiniteQ::q_ii([pt2.x, rho0, rho0]).map_err(|e| e.to_string())?;
    let inputs = tworsb::inputs_brute(k2, d2, y2, &pt2).map_err(|e| e.to_string())?;
    let mut lnz = Vec::new();
    let mut lnr = Vec::new();
    for zeta in [0.02, 0.03, 0.045, 0.07, 0.1] {
        let spec = PerturbationSpec::from_eigenvector(y2, &pt2, zeta).map_err(|e| e.to_string())?;
        let q_pert = spec.perturbed_q().map_err(|e| e.to_string())?;
        let direct = tworsb::phi_2rsb(spec.y1, spec.y2, &q_pert, k2, d2)
            .map_err(|e| e.to_string())?
            - tworsb::phi_2rsb(spec.y1, spec.y1, &q_base, k2, d2).map_err(|e| e.to_string())?;
        let expansion =
            tworsb::delta_phi_expansion(k2, d2 as f64, y2, &inputs, &spec).map_err(|e| e.to_string())?;
        let residual = (direct - expansion).abs();
        if residual == 0.0 {
            return Err("exact agreement between direct and expansion is implausible".into());
        }
        lnz.push(zeta.ln());
        lnr.push(residual.ln());
    }
    let n = lnz.len() as f64;
    let (sx, sy): (f64, f64) = (lnz.iter().sum(), lnr.iter().sum());
    let sxx: f64 = lnz.iter().map(|v| v * v).sum();
    let sxy: f64 = lnz.iter().zip(&lnr).map(|(a, b)| a * b).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if !(5.5..=6.5).contains(&slope) {
        return Err(format!("expansion residual slope {slope} outside 6 ± 0.5"));
    }
    Ok(format!(
        "Φ = F/y, aux identities exact, residual slope {slope:.2}"
    ))
}

// ---------------------------------------------------------------------------
// 9. Interpolation consistency at desk scale (< 10 min; soft)
// ---------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let k = 3usize;
    let mut summary = Vec::new();
    for d in [3usize, 6] {
        let alpha = d as f64 / k as f64;
        // Below the first-moment floor the annealed bound is vacuous; the
        // binding value of e_lbd there is 0 (e_min ≥ 0 always holds).
        let e_lbd = firstmoment::e_lbd(alpha, k).unwrap_or(0.0).max(0.0);
        for n in [12usize, 18, 24] {
            if n * d % k != 0 {
                return Err(format!("n = {n}, d = {d} not realizable at k = {k}"));
            }
            let params = ModelParams::new(k, d, n).map_err(|e| e.to_string())?;
            let stats =
                sample_emin_stats(params, 200, 0x1117 + n as u64, 24).map_err(|e| e.to_string())?;
            let se = stats.stddev / (stats.trials as f64).sqrt();
            if stats.mean < e_lbd - 3.0 * se {
                return Err(format!(
                    "d={d} N={n}: mean e_min {} < e_lbd {e_lbd} − 3·SE ({se})",
                    stats.mean
                ));
            }
            summary.push(format!("d={d},N={n}: {:.4}±{:.4}", stats.mean, se));
        }
    }
    Ok(format!("mean e_min ≥ e_lbd − 3·SE at all 6 points ({})", summary.join("; ")))
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 exact-identity suite", criterion_1),
        ("2 tree formula", criterion_2),
        ("3 SP stationarity and dual energy", criterion_3),
        ("4 1RSB root", criterion_4),
        ("5 bound ordering", criterion_5),
        ("6 stability matrices", criterion_6),
        ("7 Gardner scaling", criterion_7),
        ("8 2RSB oracle", criterion_8),
        ("9 interpolation consistency", criterion_9),
    ];
    let mut failed = 0usize;
    for (name, run) in criteria {
        let t0 = std::time::Instant::now();
        match run() {
            Ok(msg) => println!(
                "PASS criterion {name} ({:.1} s): {msg}",
                t0.elapsed().as_secs_f64()
            ),
            Err(msg) => {
                failed += 1;
                println!(
                    "FAIL criterion {name} ({:.1} s): {msg}",
                    t0.elapsed().as_secs_f64()
                );
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
