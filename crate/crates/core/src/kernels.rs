//! Log-space binomial kernels underlying the survey-propagation recursion.
//!
//! For a given (n, w, y) the table holds the binomial weights
//!
//! - A_ℓ = C(n,ℓ)(w·AM)^ℓ(1−w)^{n−ℓ} with AM = (1+e^{−y})/2,
//! - G_ℓ = C(n,ℓ)(w·GM)^ℓ(1−w)^{n−ℓ} with GM = e^{−y/2},
//!
//! and the half-point probabilities of two Bernoulli sums,
//!
//! - P_ℓ = Pr[Bin(ℓ, p) < ℓ/2] and Q_ℓ = Pr[Bin(ℓ, p) = ℓ/2] with
//!   p = 1/(1+e^y),
//! - S_ℓ = Pr[Bin(ℓ, 1/2) = ℓ/2],
//!
//! together with the normalizer sums Ż₀ = Σ A_ℓP_ℓ, Ż_f = Σ A_ℓQ_ℓ =
//! Σ G_ℓS_ℓ, Ż = 2Ż₀ + Ż_f. The weights satisfy A_ℓ·Q_ℓ = G_ℓ·S_ℓ exactly
//! (AM^ℓ·pmf_p(ℓ/2) = GM^ℓ·pmf_{1/2}(ℓ/2)); this and the recurrences
//! relating P_ℓ to P_{ℓ−1} are pinned by tests against direct summation.
//!
//! Since n can reach ~10^8 while the effective support of the sums is a
//! window of width O(√n) around the binomial means, the A/G weights are kept
//! in log space and all sums are truncated to the union of the two windows
//! mean ± 12 standard deviations, clipped to [0, n]; the omitted mass is
//! below e^{−72} relative.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Per-y scalar parameters of the energy-tilted recursion.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParams {
    /// Parisi parameter y ≥ 0.
    pub y: f64,
    /// p = 1/(1+e^y) ∈ (0, 1/2] for y ≥ 0.
    pub p: f64,
    /// Arithmetic mean weight AM = (1+e^{−y})/2 ∈ [1/2, 1].
    pub am: f64,
    /// Geometric mean weight GM = e^{−y/2} ∈ (0, 1].
    pub gm: f64,
}

impl EnergyParams {
    pub fn new(y: f64) -> Result<Self> {
        if !(y >= 0.0) {
            return Err(Error::InvalidInput(format!("y = {y} must be ≥ 0")));
        }
        Ok(EnergyParams {
            y,
            p: 1.0 / (1.0 + y.exp()),
            am: (1.0 + (-y).exp()) / 2.0,
            gm: (-y / 2.0).exp(),
        })
    }
}

/// γ(y) = 2c(1 − e^{−y/2})²; the admissible-y band is γ ≍ 1.
pub fn gamma(c: f64, y: f64) -> f64 {
    2.0 * c * (1.0 - (-y / 2.0).exp()).powi(2)
}

/// Γ(y) = c(1 − (1+y)e^{−y}); satisfies γ/2 ≤ Γ ≤ γ for all y ≥ 0, and
/// Γ(y⋆) ≈ 1 at the complexity root.
pub fn big_gamma(c: f64, y: f64) -> f64 {
    c * (1.0 - (1.0 + y) * (-y).exp())
}

/// ln C(n, ℓ).
pub fn ln_choose(n: usize, l: usize) -> f64 {
    if l > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(l as f64 + 1.0) - ln_gamma((n - l) as f64 + 1.0)
}

/// ln C(n, ℓ) for real n ≥ 0 via the Gamma function; agrees with
/// [`ln_choose`] at integer n. This is the analytic continuation in n used
/// to treat the degree as a continuous parameter when refining thresholds.
pub fn ln_choose_real(n: f64, l: usize) -> f64 {
    if (l as f64) > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n + 1.0) - ln_gamma(l as f64 + 1.0) - ln_gamma(n - l as f64 + 1.0)
}

/// Direct evaluation of Pr[Bin(ℓ, p) < ℓ/2] by summing the pmf; O(ℓ).
/// Used as the independent oracle for the recurrence-built table.
pub fn binom_below_half_direct(l: usize, p: f64) -> f64 {
    let mut total = 0.0;
    let mut j = 0;
    while 2 * j < l {
        total += (ln_choose(l, j) + j as f64 * p.ln() + (l - j) as f64 * (1.0 - p).ln()).exp();
        j += 1;
    }
    total
}

/// Direct evaluation of Pr[Bin(ℓ, p) = ℓ/2] (zero for odd ℓ).
pub fn binom_at_half_direct(l: usize, p: f64) -> f64 {
    if l % 2 != 0 {
        return 0.0;
    }
    let m = l / 2;
    (ln_choose(l, m) + m as f64 * (p.ln() + (1.0 - p).ln())).exp()
}

/// a·ln(v) with the convention 0·(−inf) = 0, so that zero-probability factors
/// raised to the zeroth power contribute nothing instead of NaN.
pub(crate) fn xlny(a: f64, lnv: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * lnv
    }
}

/// The P/Q/S recurrences from ℓ = 0 up to `l_max` for half-point success
/// probability `p_succ`: Q and S by central-binomial-term ratios, P by the
/// parity-split recurrence P_ℓ = P_{ℓ−1} + (1−p)Q_{ℓ−1} (odd ℓ) and
/// P_ℓ = P_{ℓ−1} − Q_ℓ/2 (even ℓ).
pub fn pqs_tables(l_max: usize, p_succ: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; l_max + 1];
    let mut q = vec![0.0; l_max + 1];
    let mut s = vec![0.0; l_max + 1];
    q[0] = 1.0;
    s[0] = 1.0;
    for l in 1..=l_max {
        if l % 2 == 0 {
            // Central-term ratio: pmf(ℓ, ℓ/2) / pmf(ℓ−2, ℓ/2−1).
            let m = (l / 2) as f64;
            let ratio = (l as f64) * (l as f64 - 1.0) / (m * m);
            q[l] = q[l - 2] * ratio * p_succ * (1.0 - p_succ);
            s[l] = s[l - 2] * ratio * 0.25;
            p[l] = p[l - 1] - q[l] / 2.0;
        } else {
            p[l] = p[l - 1] + (1.0 - p_succ) * q[l - 1];
        }
    }
    (p, q, s)
}

/// Mean ± (12σ + 40) window of Bin(n, q), clipped to [0, n]. The additive
/// margin covers the Poisson regime (σ < 1) where a pure multiple of σ
/// understates the tail: at half-width 12σ + 40 the omitted mass is below
/// 1e−16 relative for every μ (Poisson tail beyond μ + 40 when σ ≤ 1,
/// Gaussian-type bound e^{−72}/… otherwise).
pub(crate) fn binomial_window(n: f64, q: f64) -> (usize, usize) {
    let n_floor = n.floor().max(0.0) as usize;
    if q <= 0.0 {
        return (0, 0);
    }
    if q >= 1.0 {
        return (n_floor, n_floor);
    }
    let mu = n * q;
    let sigma = (mu * (1.0 - q)).sqrt();
    let lo = (mu - 12.0 * sigma - 40.0).floor().max(0.0) as usize;
    let hi = (mu + 12.0 * sigma + 40.0).ceil().min(n_floor as f64) as usize;
    (lo, hi)
}

/// Kernel table for fixed (n, w, y). The trial count n may be any
/// nonnegative real: binomial coefficients are continued through the Gamma
/// function (exact at integer n), which lets the degree act as a continuous
/// parameter in threshold refinement.
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub n: f64,
    pub w: f64,
    pub ep: EnergyParams,
    /// Truncation window [lo, hi] covering both the A- and G-weighted sums.
    pub lo: usize,
    pub hi: usize,
    /// ln A_ℓ for ℓ in the window.
    pub log_a: Vec<f64>,
    /// ln G_ℓ for ℓ in the window.
    pub log_g: Vec<f64>,
    /// P_ℓ, Q_ℓ, S_ℓ for 0 ≤ ℓ ≤ hi (scalar recurrences from ℓ = 0).
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    /// ln Ż₀ = ln Σ A_ℓ P_ℓ.
    pub log_z0: f64,
    /// ln Ż_f = ln Σ G_ℓ S_ℓ.
    pub log_zf: f64,
    /// ln Ż = ln(2Ż₀ + Ż_f).
    pub log_z: f64,
}

impl KernelTable {
    pub fn new(n: f64, w: f64, y: f64) -> Result<Self> {
        let ep = EnergyParams::new(y)?;

        // Window: union of the A-weight window (success odds w·AM against
        // 1−w) and the G-weight window.
        let qa = w * ep.am / (1.0 - w + w * ep.am);
        let qg = w * ep.gm / (1.0 - w + w * ep.gm);
        let (lo_a, hi_a) = binomial_window(n, qa);
        let (lo_g, hi_g) = binomial_window(n, qg);
        Self::with_window(n, w, y, lo_a.min(lo_g), hi_a.max(hi_g))
    }

    /// Build the table on an explicitly pinned truncation window.
    ///
    /// Finite-difference probes of quantities built from this table must
    /// evaluate every stencil point on one shared window: the automatic
    /// window of [`KernelTable::new`] jumps by whole units under tiny
    /// parameter changes, and the ln Γ rounding attached to the window base
    /// (absolute ~1e−16·n ln n) would then fail to cancel in the
    /// difference and dominate it.
    pub fn with_window(n: f64, w: f64, y: f64, lo: usize, hi: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidInput(format!("w = {w} outside [0,1]")));
        }
        if !(n >= 0.0) {
            return Err(Error::InvalidInput(format!("n = {n} must be ≥ 0")));
        }
        let ep = EnergyParams::new(y)?;
        let n_floor = n.floor().max(0.0) as usize;
        let (lo, hi) = (lo.min(n_floor), hi.min(n_floor));
        if lo > hi {
            return Err(Error::InvalidInput(format!(
                "empty kernel window [{lo}, {hi}] at n = {n}"
            )));
        }

        // P, Q, S by their exact scalar recurrences from ℓ = 0. (Tests pin
        // these against direct pmf summation so the recurrences are not
        // self-certifying.)
        let (p, q, s) = pqs_tables(hi, ep.p);

        // ln A and ln G across the window by streaming ratio recurrences.
        let mut log_a = Vec::with_capacity(hi - lo + 1);
        let mut log_g = Vec::with_capacity(hi - lo + 1);
        let ln_w = w.ln();
        let ln_1w = (1.0 - w).ln(); // −inf at w = 1 is fine: window is {n}
        let base = ln_choose_real(n, lo);
        log_a.push(base + xlny(lo as f64, ln_w + ep.am.ln()) + xlny(n - lo as f64, ln_1w));
        log_g.push(base + xlny(lo as f64, ln_w + ep.gm.ln()) + xlny(n - lo as f64, ln_1w));
        for l in lo..hi {
            let step = ((n - l as f64) / ((l + 1) as f64)).ln() + ln_w - ln_1w;
            log_a.push(log_a[l - lo] + step + ep.am.ln());
            log_g.push(log_g[l - lo] + step + ep.gm.ln());
        }

        // Log-sum-exp for Ż₀ = Σ A_ℓ P_ℓ and Ż_f = Σ G_ℓ S_ℓ.
        let log_z0 = log_sum_exp((lo..=hi).map(|l| log_a[l - lo] + safe_ln(p[l])));
        let log_zf = log_sum_exp((lo..=hi).map(|l| log_g[l - lo] + safe_ln(s[l])));
        // Ż = 2Ż₀ + Ż_f.
        let log_z = log_sum_exp(
            [log_z0 + 2f64.ln(), log_zf].into_iter(),
        );

        Ok(KernelTable {
            n,
            w,
            ep,
            lo,
            hi,
            log_a,
            log_g,
            p,
            q,
            s,
            log_z0,
            log_zf,
            log_z,
        })
    }

    /// x̃ = Ż_f / (2Ż₀ + Ż_f) ∈ [0, 1].
    pub fn x_tilde(&self) -> f64 {
        (self.log_zf - self.log_z).exp()
    }

    /// E[L_AM], the mean of ℓ under the weight A_ℓP_ℓ/Ż₀.
    pub fn mean_l_am(&self) -> f64 {
        self.window_mean(|l, t| t.log_a[l - t.lo] + safe_ln(t.p[l]), self.log_z0)
    }

    /// E[L_GM], the mean of ℓ under the weight G_ℓS_ℓ/Ż_f.
    pub fn mean_l_gm(&self) -> f64 {
        self.window_mean(|l, t| t.log_g[l - t.lo] + safe_ln(t.s[l]), self.log_zf)
    }

    fn window_mean(&self, log_weight: impl Fn(usize, &Self) -> f64, log_norm: f64) -> f64 {
        (self.lo..=self.hi)
            .map(|l| l as f64 * (log_weight(l, self) - log_norm).exp())
            .sum()
    }

    /// ln Σ_ℓ A_ℓ·M_ℓ, the energy-weighted variable sum used by the 1RSB
    /// energy. Grouping the exact double sum
    /// Σ_{ℓ₀,ℓ₁} min(ℓ₀,ℓ₁) C(n; ℓ₀,ℓ₁,·) (w/2)^{ℓ₀+ℓ₁} (1−w)^{n−ℓ₀−ℓ₁}
    ///   e^{−y·min(ℓ₀,ℓ₁)}
    /// by ℓ = ℓ₀+ℓ₁ and mapping C(ℓ,j)2^{−ℓ}e^{−y·min(j,ℓ−j)} to the tilted
    /// pmf AM^ℓ·Bin(ℓ,p){min(j,ℓ−j)} gives
    /// M_ℓ = 2·Σ_{j<ℓ/2} j·pmf_p(j) + (ℓ/2)·pmf_p(ℓ/2).
    pub fn log_energy_sum(&self) -> f64 {
        log_sum_exp((self.lo..=self.hi).map(|l| {
            let m = tilted_min_moment(l, self.ep.p);
            self.log_a[l - self.lo] + safe_ln(m)
        }))
    }
}

/// M_ℓ = 2·Σ_{j<ℓ/2} j·pmf(j) + (ℓ/2)·pmf(ℓ/2) for Bin(ℓ, p), p ≤ 1/2,
/// evaluated over the lower-tail window mean ± 12σ (exact for small ℓ).
pub fn tilted_min_moment(l: usize, p: f64) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let mu = l as f64 * p;
    let sigma = (mu * (1.0 - p)).sqrt();
    let j_lo = (mu - 12.0 * sigma - 40.0).floor().max(0.0) as usize;
    // Upper cut: the pmf beyond mean + 12σ + 40 is negligible (same margin
    // as the outer window), and only j ≤ ℓ/2 contributes at all.
    let j_hi = ((mu + 12.0 * sigma + 40.0).ceil() as usize).min(l / 2);
    let mut log_pmf = ln_choose(l, j_lo) + j_lo as f64 * p.ln() + (l - j_lo) as f64 * (1.0 - p).ln();
    let mut total = 0.0;
    for j in j_lo..=j_hi {
        let weight = if 2 * j == l { j as f64 } else { 2.0 * j as f64 };
        total += weight * log_pmf.exp();
        if j < j_hi {
            log_pmf += (((l - j) as f64) / ((j + 1) as f64)).ln() + p.ln() - (1.0 - p).ln();
        }
    }
    total
}

/// ln of a probability, mapping 0 to −inf without NaN.
pub fn safe_ln(v: f64) -> f64 {
    if v <= 0.0 {
        f64::NEG_INFINITY
    } else {
        v.ln()
    }
}

/// Numerically stable ln Σ exp(xᵢ).
pub fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + vals.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
