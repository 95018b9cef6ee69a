//! The univariate survey-propagation recursion at energy parameter y.
//!
//! On the tree, the distribution of a warning message is summarized by the
//! single number x = q̇(f) (probability a variable-to-clause message is free)
//! and w = 1 − q̂(f) (probability a clause-to-variable message is a forcing
//! warning). The two half-updates are
//!
//! - clause: w(x) = 2(1−x)^{k−1}/2^{k−1}, so w ≤ 4/2^k always;
//! - variable: x̃(w) = Ż_f/(2Ż₀+Ż_f) from the (d−1)-fold binomial kernels.
//!
//! The fixed point of the composed map x ↦ x̃(w(x)) is located by damped
//! iteration with a bisection fallback on the uniqueness region x ∈ [0, 1/k²].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{gamma, KernelTable};

/// A (candidate) fixed point of the survey-propagation recursion.
#[derive(Debug, Clone, Serialize)]
pub struct SpPoint {
    pub y: f64,
    /// x = q̇(f), probability of a free variable-to-clause message.
    pub x: f64,
    /// w = 1 − q̂(f), probability of a forcing clause-to-variable message.
    pub w: f64,
    /// |x − map(x)| at the returned point.
    pub residual: f64,
    pub iterations: u64,
    /// Whether x ≤ 1/k², the region where the fixed point is unique.
    pub in_mbullet: bool,
    /// x divided by the predicted scale 2^{−kγ(y)/2}/max{ck·e^{−y/2}, 1}^{1/2}.
    /// The prediction holds only up to unspecified constants, so this is a
    /// diagnostic ratio, never asserted.
    pub mgamma_ratio: f64,
}

/// Solver knobs for [`sp_solve`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOpts {
    pub x0: Option<f64>,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: u64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            x0: None,
            damping: 0.7,
            tol: 1e-13,
            max_iter: 100_000,
        }
    }
}

/// Clause half-update: w = 2(1−x)^{k−1}/2^{k−1}.
pub fn clause_update(x: f64, k: usize) -> f64 {
    2.0 * (1.0 - x).powi(k as i32 - 1) / 2f64.powi(k as i32 - 1)
}

/// Variable half-update: x̃ = Ż_f/(2Ż₀+Ż_f) with (d−1)-fold kernels.
pub fn var_update(w: f64, y: f64, d: f64) -> Result<f64> {
    if !(d >= 1.0) {
        return Err(Error::InvalidInput("d must be ≥ 1".into()));
    }
    Ok(KernelTable::new(d - 1.0, w, y)?.x_tilde())
}

/// One full sweep of the composed map x ↦ x̃(w(x)).
pub fn composed_map(x: f64, k: usize, d: f64, y: f64) -> Result<f64> {
    var_update(clause_update(x, k), y, d)
}

/// Locate the survey-propagation fixed point for (k, d, y).
///
/// Damped iteration from x₀ (default 1/(2k²)); if it fails to converge
/// within the budget, fall back to bisection of g(x) = map(x) − x on
/// [0, 1/k²], where the fixed point is unique when it exists.
pub fn sp_solve(k: usize, d: f64, y: f64, opts: &SolveOpts) -> Result<SpPoint> {
    if k < 2 || !(d >= 1.0) {
        return Err(Error::InvalidParameters(format!(
            "need k ≥ 2 and d ≥ 1, got k = {k}, d = {d}"
        )));
    }
    let kk = k as f64;
    let cap = 1.0 / (kk * kk);
    let mut x = opts.x0.unwrap_or(cap / 2.0);
    let theta = opts.damping;
    let mut trajectory = Vec::new();
    let mut residual = f64::INFINITY;
    let mut spurious = false;
    for it in 0..opts.max_iter {
        let mapped = composed_map(x, k, d, y)?;
        residual = (mapped - x).abs();
        if residual < opts.tol {
            // x = 1 (w = 0) is always a fixed point but never the physical
            // one; reject anything in its basin and fall through to the
            // bracketed search for an interior root.
            if x <= 0.5 {
                return Ok(finish(x, residual, it + 1, k, d, y));
            }
            spurious = true;
            break;
        }
        if trajectory.len() < 64 {
            trajectory.push(x);
        }
        x = (1.0 - theta) * x + theta * mapped;
    }

    // Bracketed fallback: scan (0, 1/2] for a sign change of
    // g(x) = map(x) − x, preferring the uniqueness region [0, 1/k²] but not
    // limited to it (at desk-scale k the physical fixed point can exceed
    // 1/k² near the lower edge of the admissible y band).
    let g = |x: f64| -> Result<f64> { Ok(composed_map(x, k, d, y)? - x) };
    let (mut lo, mut hi) = (0.0f64, cap);
    let mut g_lo = g(lo)?;
    let mut bracketed = g_lo * g(hi)? <= 0.0;
    if !bracketed {
        let mut prev_x = 0.0;
        let mut prev_g = g_lo;
        for i in 1..=64 {
            let xg = 0.5 * i as f64 / 64.0;
            let gg = g(xg)?;
            if prev_g * gg <= 0.0 {
                lo = prev_x;
                hi = xg;
                g_lo = prev_g;
                bracketed = true;
                break;
            }
            prev_x = xg;
            prev_g = gg;
        }
    }
    if !bracketed {
        return Err(Error::NonConvergence {
            context: format!(
                "sp_solve(k={k}, d={d}, y={y}): {} and g has no sign change on (0, 1/2]",
                if spurious {
                    "iteration collapsed onto the trivial fixed point x = 1".to_string()
                } else {
                    format!("damped iteration stalled at residual {residual:.3e}")
                }
            ),
            residual,
            iterations: opts.max_iter as usize,
            trajectory,
        });
    }
    for it in 0..200u64 {
        let mid = 0.5 * (lo + hi);
        let g_mid = g(mid)?;
        if g_mid.abs() < opts.tol || hi - lo < f64::EPSILON * cap {
            return Ok(finish(mid, g_mid.abs(), opts.max_iter + it + 1, k, d, y));
        }
        if g_mid * g_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let res = g(mid)?.abs();
    Err(Error::NonConvergence {
        context: format!("sp_solve(k={k}, d={d}, y={y}): bisection residual {res:.3e}"),
        residual: res,
        iterations: (opts.max_iter + 200) as usize,
        trajectory,
    })
}

fn finish(x: f64, residual: f64, iterations: u64, k: usize, d: f64, y: f64) -> SpPoint {
    let kk = k as f64;
    let w = clause_update(x, k);
    let c = (d / kk) / (2f64.powi(k as i32 - 1) * 2f64.ln());
    let g = gamma(c, y);
    // Predicted scale 2^{−kγ/2} / max{ck·e^{−y/2}, 1}^{1/2} (up to constants).
    let predicted =
        (-(kk * g / 2.0) * 2f64.ln()).exp() / (c * kk * (-y / 2.0).exp()).max(1.0).sqrt();
    SpPoint {
        y,
        x,
        w,
        residual,
        iterations,
        in_mbullet: x <= 1.0 / (kk * kk),
        mgamma_ratio: x / predicted,
    }
}

/// Exact derivative of the composed map x ↦ x̃(w(x)) at a converged point,
/// by the chain rule:
///
/// dx̃/dw = −x̃(1−x̃)·(E L_AM − E L_GM)/(w(1−w)),
/// dw/dx = −(k−1)·w/(1−x),
///
/// so the contraction factor is
/// (k−1)·x̃(1−x̃)·(E L_AM − E L_GM)/((1−w)(1−x)) ≥ 0,
/// with the L-means taken under the window-normalized kernel weights.
pub fn sp_derivative(k: usize, d: f64, point: &SpPoint) -> Result<f64> {
    let w = point.w;
    let table = KernelTable::new(d - 1.0, w, point.y)?;
    let xt = table.x_tilde();
    let dl = table.mean_l_am() - table.mean_l_gm();
    Ok((k as f64 - 1.0) * xt * (1.0 - xt) * dl / ((1.0 - w) * (1.0 - point.x)))
}
