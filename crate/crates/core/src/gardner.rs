//! Bug-proliferation (Gardner) stability of the frozen-cluster description.
//!
//! Perturbing one incoming variable-to-clause message and tracking how the
//! change propagates through (d−1)(k−1) = Đ descendant edges defines a 9×9
//! stability matrix B over message pairs (original, perturbed). Its entries
//! reduce to closed forms in the parity-split sums
//!
//!   S_i = GM^{−i} Σ_{ℓ≡i (2), i≤ℓ≤d−2} C(d−2,ℓ)(wGM)^ℓ(1−w)^{d−2−ℓ}
//!         · C(ℓ,(ℓ−i)/2)·2^{−ℓ},
//!
//! the probability-weight that the frozen in-messages at a variable split
//! with excess i in a fixed direction, energy-tilted. The instability
//! eigenvalue is λ = ρ₀^{k−2}(S₀ + S₁e^{−y/2})/Ż with an explicit
//! eigenvector ξ, and the threshold α_Ga is where Đ·λ at y = y⋆(α) crosses 1.
//!
//! Everything closed-form here is pinned against a direct enumeration of the
//! defining ratio over {0,1,f}^Đ at desk scale.
//!
//! One normalization note: the defining ratio's denominator is the
//! propagated marginal of the root message, which equals Ż·ρ̃ with ρ̃ built
//! from one more application of the recursion to (x, w). At a fixed point
//! ρ̃ = ρ and the textbook form Ż·ρ is recovered; using ρ̃ keeps the closed
//! form equal to the enumeration even when the supplied point is not a fixed
//! point (the bundle records the residual |x̃ − x| as a diagnostic).

use nalgebra::SMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{
    binomial_window, ln_choose, ln_choose_real, log_sum_exp, pqs_tables, safe_ln, xlny,
    EnergyParams,
};
use crate::params::{alpha_sat_approx, normalized_density};
use crate::onersb::solve_ystar;
use crate::sp::{composed_map, sp_solve, SolveOpts, SpPoint};
use crate::wp::{phi_var, wp_clause, wp_var, Warning};

/// Row/column order of the 9×9 message-pair matrices; the first 7 form the
/// materialized block.
pub const PAIR_LABELS: [&str; 9] = ["ff", "00", "11", "f0", "f1", "0f", "1f", "01", "10"];

pub(crate) fn pair_index(v: Warning, r: Warning) -> usize {
    use Warning::*;
    match (v, r) {
        (Free, Free) => 0,
        (Zero, Zero) => 1,
        (One, One) => 2,
        (Free, Zero) => 3,
        (Free, One) => 4,
        (Zero, Free) => 5,
        (One, Free) => 6,
        (Zero, One) => 7,
        (One, Zero) => 8,
    }
}

/// The parity-split sums S₀, S₁, S₂, S_{≥1}, S_{≥2} at (d, w, y), held in
/// log space: at large d·w the common scale underflows f64 while every
/// matrix entry only ever needs ratios against Ż.
#[derive(Debug, Clone, Serialize)]
pub struct SSums {
    pub d: f64,
    pub w: f64,
    pub y: f64,
    pub log_s0: f64,
    pub log_s1: f64,
    pub log_s2: f64,
    pub log_sge1: f64,
    pub log_sge2: f64,
}

impl SSums {
    pub fn s0(&self) -> f64 {
        self.log_s0.exp()
    }
    pub fn s1(&self) -> f64 {
        self.log_s1.exp()
    }
    pub fn s2(&self) -> f64 {
        self.log_s2.exp()
    }
    pub fn sge1(&self) -> f64 {
        self.log_sge1.exp()
    }
    pub fn sge2(&self) -> f64 {
        self.log_sge2.exp()
    }

    /// ln Ż via the split form Ż = S₀ + 2(1 − (1−e^{−y})·w/2)(S₁ + S_{≥2});
    /// an independent route to the kernel-sum normalizer at n = d−1.
    pub fn log_zdot(&self) -> f64 {
        let tail = log_sum_exp([self.log_s1, self.log_sge2].into_iter());
        let factor = 2.0 * (1.0 - (1.0 - (-self.y).exp()) * self.w / 2.0);
        log_sum_exp([self.log_s0, safe_ln(factor) + tail].into_iter())
    }
}

/// ln(e^a − e^b) for b ≤ a, −inf when they cancel to roundoff.
fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    let r = (b - a).exp();
    if r >= 1.0 {
        f64::NEG_INFINITY
    } else {
        a + (-r).ln_1p()
    }
}

/// Compute the S sums, window-truncated the same way as the kernel tables.
///
/// S₀ equals the tie-sum Ż_f and S_{≥1} the strict-majority sum Ż₀ of the
/// (d−2)-index kernels (grouping C(ℓ,j)2^{−ℓ}e^{−y·min} into the tilted
/// binomial), which is how both are evaluated; S₁ and S₂ are direct
/// near-half-point sums.
pub fn s_sums(d: f64, w: f64, y: f64) -> Result<SSums> {
    if !(d >= 2.0) {
        return Err(Error::InvalidInput(format!("s_sums needs d ≥ 2, got {d}")));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidInput(format!("w = {w} outside [0,1]")));
    }
    let ep = EnergyParams::new(y)?;
    let n = d - 2.0;

    // Window: union of the A- and G-weighted windows, as in the kernels.
    let qa = w * ep.am / (1.0 - w + w * ep.am);
    let qg = w * ep.gm / (1.0 - w + w * ep.gm);
    let (lo_a, hi_a) = binomial_window(n, qa);
    let (lo_g, hi_g) = binomial_window(n, qg);
    let (lo, hi) = (lo_a.min(lo_g), hi_a.max(hi_g));

    let ln_w2 = (w / 2.0).ln();
    let ln_1w = (1.0 - w).ln();
    // Base weight C(n,ℓ)(w/2)^ℓ(1−w)^{n−ℓ} in log space.
    let base = |l: usize| ln_choose_real(n, l) + xlny(l as f64, ln_w2) + xlny(n - l as f64, ln_1w);

    // S_i for i ∈ {0, 1, 2}: C(ℓ,(ℓ−i)/2) e^{−y(ℓ−i)/2} on matching parity.
    let s_direct = |i: usize| -> f64 {
        let terms: Vec<f64> = (lo.max(i)..=hi)
            .filter(|l| (l - i) % 2 == 0)
            .map(|l| base(l) + ln_choose(l, (l - i) / 2) - y * ((l - i) / 2) as f64)
            .collect();
        log_sum_exp(terms.into_iter())
    };
    let log_s0 = s_direct(0);
    let log_s1 = s_direct(1);
    let log_s2 = s_direct(2);

    // S_{≥1} = Σ_ℓ C(n,ℓ)(w·AM)^ℓ(1−w)^{n−ℓ}·Pr[Bin(ℓ,p) < ℓ/2].
    let (p_tab, _, _) = pqs_tables(hi, ep.p);
    let ln_wam = (w * ep.am).ln();
    let log_sge1 = log_sum_exp((lo..=hi).map(|l| {
        ln_choose_real(n, l) + xlny(l as f64, ln_wam) + xlny(n - l as f64, ln_1w)
            + safe_ln(p_tab[l])
    }));
    let log_sge2 = log_sub(log_sge1, log_s1);

    Ok(SSums {
        d,
        w,
        y,
        log_s0,
        log_s1,
        log_s2,
        log_sge1,
        log_sge2,
    })
}

/// Closed-form stability data at one (k, d, y, x, w).
#[derive(Debug, Clone, Serialize)]
pub struct StabilityBundle {
    pub k: usize,
    pub d: f64,
    pub y: f64,
    pub x: f64,
    pub w: f64,
    pub s: SSums,
    /// ln Ż from the split form.
    pub log_zdot: f64,
    /// Clause stability matrix B̂ (7×7 block, order [`PAIR_LABELS`]).
    #[serde(skip)]
    pub b_hat: SMatrix<f64, 7, 7>,
    /// Full stability matrix B (7×7 block).
    #[serde(skip)]
    pub b: SMatrix<f64, 7, 7>,
    /// Central 4×4 block of B on (f0, f1, 0f, 1f).
    #[serde(skip)]
    pub b4: SMatrix<f64, 4, 4>,
    /// λ = ρ₀^{k−2}(S₀ + S₁e^{−y/2})/Ż.
    pub lambda: f64,
    /// Right eigenvector of B for λ, first 7 coordinates (01 and 10 are 0).
    pub xi: [f64; 7],
    /// Đ·λ with Đ = (d−1)(k−1); the instability indicator.
    pub branch_lambda: f64,
    /// |x̃(w(x)) − x|: zero at a fixed point. Nonzero input is allowed (the
    /// defining ratio stays well-defined) but flagged here.
    pub fixed_point_residual: f64,
}

/// Assemble the closed-form matrices, eigenvalue, and eigenvector.
pub fn build_matrices(k: usize, d: f64, y: f64, point: &SpPoint) -> Result<StabilityBundle> {
    if k < 2 {
        return Err(Error::InvalidParameters(format!("need k ≥ 2, got {k}")));
    }
    let (x, w) = (point.x, point.w);
    let s = s_sums(d, w, y)?;
    let log_zdot = s.log_zdot();
    let ey = (-y).exp();
    let gm = (-y / 2.0).exp();

    let rho0 = (1.0 - x) / 2.0;
    let rho_f = x;
    let psi0 = w / 2.0;
    let psi_f = 1.0 - w;
    let rk2 = rho0.powi(k as i32 - 2);

    // Ż-normalized S ratios.
    let r0 = (s.log_s0 - log_zdot).exp();
    let r1 = (s.log_s1 - log_zdot).exp();
    let rge2 = (s.log_sge2 - log_zdot).exp();
    let r1ge2 = r1 + rge2;

    // Propagated root marginal for the denominators (equals (x, ρ₀) at a
    // fixed point).
    let x_t = composed_map(x, k, d, y)?;
    let rt0 = (1.0 - x_t) / 2.0;
    let rt_f = x_t;

    // ρ of the column's first (unperturbed) message and ψ/ρ̃ of the row's.
    let rho_col = [rho_f, rho0, rho0, rho_f, rho_f, rho0, rho0];
    let psi_row = [psi_f, psi0, psi0, psi_f, psi_f, psi0, psi0];
    let rt_row = [rt_f, rt0, rt0, rt_f, rt_f, rt0, rt0];

    // Clause-side counting matrix N̂ (unit-normalized numerators).
    let mut nhat = SMatrix::<f64, 7, 7>::zeros();
    nhat[(0, 0)] = 1.0;
    for c in [1, 3, 5] {
        nhat[(0, c)] = 1.0 - rk2;
        nhat[(0, c + 1)] = 1.0 - rk2;
    }
    nhat[(1, 2)] = rk2;
    nhat[(2, 1)] = rk2;
    nhat[(3, 4)] = rk2;
    nhat[(4, 3)] = rk2;
    nhat[(5, 6)] = rk2;
    nhat[(6, 5)] = rk2;
    let mut b_hat = SMatrix::<f64, 7, 7>::zeros();
    for r in 0..7 {
        for c in 0..7 {
            b_hat[(r, c)] = rho_col[c] * nhat[(r, c)] / psi_row[r];
        }
    }

    // Variable-side counting matrix divided by Ż (rows ff, 00, 11 from the
    // explicit list; rows f0..1f from the central 4×4 block).
    let mut m = SMatrix::<f64, 7, 7>::zeros();
    m[(0, 0)] = r0;
    m[(0, 1)] = (1.0 - rk2) * r0 + rk2 * r1 * ey;
    m[(0, 2)] = m[(0, 1)];
    for c in 3..7 {
        m[(0, c)] = (1.0 - rk2) * r0;
    }
    m[(1, 0)] = r1ge2;
    m[(1, 4)] = r1ge2;
    m[(1, 6)] = r1ge2;
    m[(1, 2)] = rk2 * r0 + r1ge2;
    m[(1, 5)] = (1.0 - rk2) * r1 + rge2;
    m[(1, 1)] = (1.0 - rk2) * r1ge2 + rk2 * rge2 * ey;
    m[(1, 3)] = m[(1, 1)];
    // Row 11 is row 00 under the 0↔1 column swap (1↔2, 3↔4, 5↔6).
    let swap = [0usize, 2, 1, 4, 3, 6, 5];
    for c in 0..7 {
        m[(2, c)] = m[(1, swap[c])];
    }
    m[(3, 4)] = rk2 * r0;
    m[(3, 5)] = rk2 * r1;
    m[(4, 3)] = rk2 * r0;
    m[(4, 6)] = rk2 * r1;
    m[(5, 3)] = rk2 * r1 * ey;
    m[(5, 6)] = rk2 * r0;
    m[(6, 4)] = rk2 * r1 * ey;
    m[(6, 5)] = rk2 * r0;

    let mut b = SMatrix::<f64, 7, 7>::zeros();
    for r in 0..7 {
        for c in 0..7 {
            b[(r, c)] = rho_col[c] * m[(r, c)] / rt_row[r];
        }
    }
    let mut b4 = SMatrix::<f64, 4, 4>::zeros();
    for r in 0..4 {
        for c in 0..4 {
            b4[(r, c)] = b[(3 + r, 3 + c)];
        }
    }

    let lambda = ((k as f64 - 2.0) * rho0.ln()
        + log_sum_exp([s.log_s0, s.log_s1 - y / 2.0].into_iter())
        - log_zdot)
        .exp();
    let xi = [
        -2.0 * rho0 * gm,
        -rho_f,
        -rho_f,
        rho0,
        rho0,
        rho_f * gm,
        rho_f * gm,
    ];
    let branch = (d - 1.0) * (k as f64 - 1.0);

    Ok(StabilityBundle {
        k,
        d,
        y,
        x,
        w,
        s,
        log_zdot,
        b_hat,
        b,
        b4,
        lambda,
        xi,
        branch_lambda: branch * lambda,
        fixed_point_residual: (x_t - x).abs(),
    })
}

/// Spectral radius of the 4×4 block by direct eigen-solve; cross-checks the
/// closed-form λ. The block's entries are badly scaled (off-diagonal ratios
/// of order (ρ₀/x)²), which costs the unbalanced QR iteration several
/// digits, so a few Osborne balancing sweeps (diagonal similarity, spectrum
/// unchanged) are applied first.
pub fn eigen_lambda(b4: &SMatrix<f64, 4, 4>) -> f64 {
    let mut a = *b4;
    for _ in 0..8 {
        for i in 0..4 {
            let c: f64 = (0..4).filter(|&j| j != i).map(|j| a[(j, i)].abs()).sum();
            let r: f64 = (0..4).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
            if c > 0.0 && r > 0.0 {
                let f = (r / c).sqrt();
                for j in 0..4 {
                    a[(j, i)] *= f;
                    a[(i, j)] /= f;
                }
            }
        }
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// The 9×9 stability matrix by direct enumeration of the defining ratio
/// over the Đ = (d−1)(k−1) descendant messages: the Đ inputs are grouped
/// into d−1 clauses of k−1 messages each; every clause pushes through the
/// clause update, the variable update of the d−1 results gives the outgoing
/// message, and min(#0, #1) of the results is the penalty. The first input
/// slot is the perturbed one.
pub fn brute_force_b(k: usize, d: usize, y: f64, point: &SpPoint) -> Result<SMatrix<f64, 9, 9>> {
    if k < 2 || d < 2 {
        return Err(Error::InvalidParameters(format!(
            "need k ≥ 2 and d ≥ 2, got k = {k}, d = {d}"
        )));
    }
    let branch = (d - 1) * (k - 1);
    if branch > 16 {
        return Err(Error::ResourceLimit {
            what: "descendant edges in stability enumeration",
            requested: branch,
            cap: 16,
        });
    }
    let x = point.x;
    let rho = |wn: Warning| -> f64 {
        match wn {
            Warning::Free => x,
            _ => (1.0 - x) / 2.0,
        }
    };
    let states = [Warning::Free, Warning::Zero, Warning::One];

    let mut num = [[0.0f64; 9]; 9];
    let mut denom = [0.0f64; 3]; // indexed by pair_index(v, v) of the diagonal → 0,1,2
    let mut slots = vec![Warning::Free; branch];
    let rest_count = 3usize.pow(branch as u32 - 1);
    for code in 0..rest_count {
        let mut c = code;
        let mut weight_rest = 1.0;
        for slot in slots.iter_mut().skip(1) {
            *slot = states[c % 3];
            weight_rest *= rho(*slot);
            c /= 3;
        }
        // Outgoing message and penalty for each choice of the first slot.
        let mut out = [Warning::Free; 3];
        let mut phi = [0.0f64; 3];
        for (si, &st) in states.iter().enumerate() {
            slots[0] = st;
            let hats: Vec<Warning> = (0..d - 1)
                .map(|a| {
                    let inputs: Vec<(u8, Warning)> = slots[a * (k - 1)..(a + 1) * (k - 1)]
                        .iter()
                        .map(|&wd| (0u8, wd))
                        .collect();
                    wp_clause(&inputs, 0)
                })
                .collect();
            out[si] = wp_var(&hats);
            phi[si] = phi_var(&hats) as f64;
        }
        for (si, &st) in states.iter().enumerate() {
            denom[pair_index(out[si], out[si]).min(2)] +=
                rho(st) * (-y * phi[si]).exp() * weight_rest;
        }
        for (i, &wi) in states.iter().enumerate() {
            for (j, &sj) in states.iter().enumerate() {
                let row = pair_index(out[i], out[j]);
                let col = pair_index(wi, sj);
                num[row][col] += (-y * phi[j]).exp() * rho(wi) * weight_rest;
            }
        }
    }

    let mut b = SMatrix::<f64, 9, 9>::zeros();
    let row_denom = [0usize, 1, 2, 0, 0, 1, 2, 1, 2]; // v̇ of each row pair
    for r in 0..9 {
        let dn = denom[row_denom[r]];
        for col in 0..9 {
            b[(r, col)] = if dn > 0.0 { num[r][col] / dn } else { 0.0 };
        }
    }
    Ok(b)
}

/// The clause-side stability matrix B̂ as a full 9×9 array, by direct
/// enumeration: the perturbed input pair (ẇ, ṡ) shares the remaining k−2
/// clause inputs, each pair of clause updates gives the outgoing hat pair
/// (ŵ, ŝ), and B̂ = ρ_ẇ·N̂/ψ_ŵ with N̂ the resulting probability weights.
///
/// Unlike the 7×7 closed form this keeps the (01) and (10) rows/columns,
/// which are genuinely nonzero for k = 2 (a one-input clause maps a 0↔1
/// message flip straight through).
pub fn brute_force_b_hat(k: usize, point: &SpPoint) -> Result<SMatrix<f64, 9, 9>> {
    if k < 2 {
        return Err(Error::InvalidParameters(format!("need k ≥ 2, got {k}")));
    }
    if k > 22 {
        return Err(Error::ResourceLimit {
            what: "shared clause inputs in clause stability enumeration",
            requested: k - 2,
            cap: 20,
        });
    }
    let (x, w) = (point.x, point.w);
    let rho = |wn: Warning| -> f64 {
        match wn {
            Warning::Free => x,
            _ => (1.0 - x) / 2.0,
        }
    };
    let psi = |wn: Warning| -> f64 {
        match wn {
            Warning::Free => 1.0 - w,
            _ => w / 2.0,
        }
    };
    let states = [Warning::Free, Warning::Zero, Warning::One];
    let mut num = [[0.0f64; 9]; 9];
    let shared = 3usize.pow(k as u32 - 2);
    let mut inputs = vec![(0u8, Warning::Free); k - 1];
    for code in 0..shared {
        let mut c = code;
        let mut weight = 1.0;
        for slot in inputs.iter_mut().skip(1) {
            slot.1 = states[c % 3];
            weight *= rho(slot.1);
            c /= 3;
        }
        let mut hat = [Warning::Free; 3];
        for (si, &st) in states.iter().enumerate() {
            inputs[0].1 = st;
            hat[si] = wp_clause(&inputs, 0);
        }
        for (i, &wi) in states.iter().enumerate() {
            for (j, &sj) in states.iter().enumerate() {
                num[pair_index(hat[i], hat[j])][pair_index(wi, sj)] += rho(wi) * weight;
            }
        }
    }
    let mut b_hat = SMatrix::<f64, 9, 9>::zeros();
    let row_hat = [
        Warning::Free,
        Warning::Zero,
        Warning::One,
        Warning::Free,
        Warning::Free,
        Warning::Zero,
        Warning::One,
        Warning::Zero,
        Warning::One,
    ];
    for r in 0..9 {
        for c in 0..9 {
            b_hat[(r, c)] = num[r][c] / psi(row_hat[r]);
        }
    }
    Ok(b_hat)
}

/// One α-point of the Gardner scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanPoint {
    pub alpha: f64,
    pub c: f64,
    pub d: f64,
    pub y_star: f64,
    pub x: f64,
    pub w: f64,
    pub lambda: f64,
    pub branch_lambda: f64,
}

/// Solve y⋆(α) and evaluate Đ·λ there; d = α·k treated as continuous.
pub fn branch_lambda_at(k: usize, alpha: f64, opts: &SolveOpts) -> Result<ScanPoint> {
    let d = alpha * k as f64;
    let root = solve_ystar(k, d, opts)?;
    let pt = sp_solve(k, d, root.y_star, opts)?;
    let bundle = build_matrices(k, d, root.y_star, &pt)?;
    Ok(ScanPoint {
        alpha,
        c: normalized_density(k, alpha),
        d,
        y_star: root.y_star,
        x: pt.x,
        w: pt.w,
        lambda: bundle.lambda,
        branch_lambda: bundle.branch_lambda,
    })
}

/// Result of scanning Đ·λ over an α grid.
#[derive(Debug, Clone, Serialize)]
pub struct GardnerScan {
    pub k: usize,
    pub points: Vec<ScanPoint>,
    /// Grid α values where the y⋆ or fixed-point solve failed, with reasons.
    pub failures: Vec<(f64, String)>,
    /// All refined α where Đ·λ − 1 changes sign, ascending.
    pub crossings: Vec<f64>,
    /// sup{α ≤ 4^k/k : Đ·λ ≤ 1}: the largest crossing, or None if the grid
    /// shows no sign change (reported, never fabricated).
    pub alpha_ga: Option<f64>,
}

/// Scan Đ·λ_{y⋆(α)} on `grid_n` log-spaced α between the approximate
/// satisfiability threshold and 4^k/k, refining each sign change by
/// bisection in continuous α to relative width 1e−6.
pub fn gardner_scan(k: usize, grid_n: usize, opts: &SolveOpts) -> Result<GardnerScan> {
    if grid_n < 2 {
        return Err(Error::InvalidInput("grid_n must be ≥ 2".into()));
    }
    let a_lo = alpha_sat_approx(k);
    let a_hi = 4f64.powi(k as i32) / k as f64;
    if !(a_lo > 0.0 && a_hi > a_lo) {
        return Err(Error::InvalidParameters(format!(
            "empty scan range [{a_lo}, {a_hi}] at k = {k}"
        )));
    }
    let (lo_ln, hi_ln) = (a_lo.ln(), a_hi.ln());
    let grid: Vec<f64> = (0..grid_n)
        .map(|i| (lo_ln + (hi_ln - lo_ln) * i as f64 / (grid_n - 1) as f64).exp())
        .collect();
    let results: Vec<(f64, Result<ScanPoint>)> = grid
        .par_iter()
        .map(|&alpha| (alpha, branch_lambda_at(k, alpha, opts)))
        .collect();

    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (alpha, r) in results {
        match r {
            Ok(p) => points.push(p),
            Err(e) => failures.push((alpha, e.to_string())),
        }
    }

    // Refine every sign change of Đλ − 1 between consecutive solved points.
    let mut crossings = Vec::new();
    for pair in points.windows(2) {
        let (f_lo, f_hi) = (pair[0].branch_lambda - 1.0, pair[1].branch_lambda - 1.0);
        if f_lo == 0.0 {
            crossings.push(pair[0].alpha);
            continue;
        }
        if f_lo * f_hi < 0.0 {
            let (mut lo, mut hi) = (pair[0].alpha, pair[1].alpha);
            let mut g_lo = f_lo;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let g_mid = match branch_lambda_at(k, mid, opts) {
                    Ok(p) => p.branch_lambda - 1.0,
                    Err(_) => break,
                };
                if g_mid * g_lo > 0.0 {
                    lo = mid;
                    g_lo = g_mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-6 * hi {
                    break;
                }
            }
            crossings.push(0.5 * (lo + hi));
        }
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha_ga = crossings.last().copied();
    Ok(GardnerScan {
        k,
        points,
        failures,
        crossings,
        alpha_ga,
    })
}
