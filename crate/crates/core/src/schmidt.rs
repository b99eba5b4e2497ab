//! Half-chain Schmidt coefficients and entropy from the height recurrence.
//!
//! `M[n][m]` is the weighted count of half-walks of length `n` ending at
//! height `m`: each contributes `s^{closed pairs} t^{area}`. One step of the
//! recurrence is
//!
//! ```text
//! M[k+1][m] = s t^{m+1/2} M[k][m+1] + t^m M[k][m] + t^{m-1/2} M[k][m-1]
//! ```
//!
//! with out-of-range entries read as zero, which also covers the edge cases
//! `m = 0`, `m = k` and `m = k + 1`. Everything is carried in logarithms,
//! since `M` reaches `t^{n^2/2}`.
//!
//! Schmidt values are `p[m] = M[n][m]^2 / N` with `N = sum_m s^m M[n][m]^2`,
//! each appearing `s^m` times.

use crate::error::{Error, Result};
use crate::logweight::{log_add, log_sum_exp, LogWeight};

/// Largest half-chain length accepted by [`profile`] and [`entropy_curve`].
pub const MAX_HALF_LENGTH: usize = 1_000_000;
/// Schmidt terms whose total weight `s^m p[m]` is below this contribute nothing to the entropy.
pub const NEGLIGIBLE_MASS: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtProfile {
    pub n: usize,
    pub s: u32,
    pub t: f64,
    /// `ln M[n][m]` for `m = 0..=n`.
    pub log_m: Vec<f64>,
}

fn check_params(s: u32, t: f64) -> Result<()> {
    if s == 0 {
        return Err(Error::Domain("s must be at least 1".into()));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Domain(format!("t must be positive and finite, got {t}")));
    }
    Ok(())
}

fn check_length(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n > MAX_HALF_LENGTH {
        return Err(Error::CapExceeded {
            what: "half-chain length",
            value: n as u128,
            cap: MAX_HALF_LENGTH as u128,
        });
    }
    Ok(())
}

impl SchmidtProfile {
    /// `M[0][0] = 1`.
    pub fn seed(s: u32, t: f64) -> Result<Self> {
        check_params(s, t)?;
        Ok(SchmidtProfile {
            n: 0,
            s,
            t,
            log_m: vec![0.0],
        })
    }

    pub fn recurrence_step(&self) -> SchmidtProfile {
        let mut next = self.clone();
        next.advance();
        next
    }

    /// In-place [`recurrence_step`](Self::recurrence_step).
    pub fn advance(&mut self) {
        let k = self.n;
        let ln_s = (self.s as f64).ln();
        let ln_t = self.t.ln();
        let old = &self.log_m;
        let at = |m: usize| old.get(m).copied().unwrap_or(f64::NEG_INFINITY);
        let next: Vec<f64> = (0..=k + 1)
            .map(|m| {
                let mf = m as f64;
                let from_above = ln_s + (mf + 0.5) * ln_t + at(m + 1);
                let level = mf * ln_t + at(m);
                let from_below = if m >= 1 {
                    (mf - 0.5) * ln_t + at(m - 1)
                } else {
                    f64::NEG_INFINITY
                };
                log_add(log_add(from_above, level), from_below)
            })
            .collect();
        self.log_m = next;
        self.n = k + 1;
    }

    /// `ln M[n][m]`, zero magnitude for `m > n`.
    pub fn log_m_at(&self, m: usize) -> LogWeight {
        self.log_m
            .get(m)
            .map(|&v| LogWeight::from_ln(v))
            .unwrap_or(LogWeight::ZERO)
    }

    /// `ln N` with `N = sum_m s^m M[n][m]^2`.
    pub fn log_norm(&self) -> f64 {
        let ln_s = (self.s as f64).ln();
        let terms: Vec<f64> = self
            .log_m
            .iter()
            .enumerate()
            .map(|(m, &lm)| m as f64 * ln_s + 2.0 * lm)
            .collect();
        log_sum_exp(&terms)
    }

    /// `ln p[m]`.
    pub fn log_p(&self) -> Vec<f64> {
        let log_n = self.log_norm();
        self.log_m.iter().map(|&lm| 2.0 * lm - log_n).collect()
    }

    pub fn p(&self) -> Vec<f64> {
        self.log_p().into_iter().map(f64::exp).collect()
    }

    /// `sum_m s^m p[m]`, which is 1 up to rounding.
    pub fn total_probability(&self) -> f64 {
        let ln_s = (self.s as f64).ln();
        self.log_p()
            .iter()
            .enumerate()
            .map(|(m, lp)| (m as f64 * ln_s + lp).exp())
            .sum()
    }

    /// `-sum_m s^m p[m] ln p[m]` in nats.
    pub fn entropy(&self) -> f64 {
        let ln_s = (self.s as f64).ln();
        let mut acc = 0.0;
        for (m, lp) in self.log_p().into_iter().enumerate() {
            let mass = (m as f64 * ln_s + lp).exp();
            if mass >= NEGLIGIBLE_MASS {
                acc -= mass * lp;
            }
        }
        acc
    }

    pub fn entropy_bits(&self) -> f64 {
        self.entropy() / std::f64::consts::LN_2
    }

    /// `argmax_m M[n][m]`, ties toward larger `m`.
    pub fn mstar(&self) -> usize {
        argmax_last(self.log_m.iter().copied())
    }

    /// `argmax_m s^m p[m]`, ties toward larger `m`.
    pub fn mstar_weighted(&self) -> usize {
        let ln_s = (self.s as f64).ln();
        argmax_last(
            self.log_m
                .iter()
                .enumerate()
                .map(|(m, &lm)| m as f64 * ln_s + 2.0 * lm),
        )
    }
}

fn argmax_last(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v >= best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Profile after `n` recurrence steps from the seed.
pub fn profile(n: usize, s: u32, t: f64) -> Result<SchmidtProfile> {
    check_length(n)?;
    let mut p = SchmidtProfile::seed(s, t)?;
    for _ in 0..n {
        p.advance();
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub entropy: f64,
    pub mstar: usize,
    pub log_norm: f64,
}

/// Entropy at `n = stride, 2 stride, ... <= n_max` from a single forward pass.
pub fn entropy_curve(n_max: usize, s: u32, t: f64, stride: usize) -> Result<Vec<CurvePoint>> {
    check_length(n_max)?;
    if stride == 0 {
        return Err(Error::Domain("stride must be at least 1".into()));
    }
    let mut p = SchmidtProfile::seed(s, t)?;
    let mut out = Vec::with_capacity(n_max / stride);
    for n in 1..=n_max {
        p.advance();
        if n % stride == 0 {
            out.push(CurvePoint {
                n,
                entropy: p.entropy(),
                mstar: p.mstar(),
                log_norm: p.log_norm(),
            });
        }
    }
    Ok(out)
}

/// Entropy at exactly the requested half-chain lengths (any order, repeats
/// allowed), sharing one forward pass.
pub fn entropy_at(ns: &[usize], s: u32, t: f64) -> Result<Vec<CurvePoint>> {
    let Some(&n_max) = ns.iter().max() else {
        return Ok(Vec::new());
    };
    for &n in ns {
        check_length(n)?;
    }
    let mut p = SchmidtProfile::seed(s, t)?;
    let mut at = vec![None; n_max + 1];
    let mut wanted = vec![false; n_max + 1];
    ns.iter().for_each(|&n| wanted[n] = true);
    for n in 1..=n_max {
        p.advance();
        if wanted[n] {
            at[n] = Some(CurvePoint {
                n,
                entropy: p.entropy(),
                mstar: p.mstar(),
                log_norm: p.log_norm(),
            });
        }
    }
    Ok(ns.iter().map(|&n| at[n].expect("computed above")).collect())
}

// ---------------------------------------------------------------------------
// Closed-form bounds

/// `f(s, t) = exp(3 s t^{3/2} / (t^2 - 1))` for `t > 1`.
fn f_st(s: u32, t: f64) -> f64 {
    (3.0 * s as f64 * t.powf(1.5) / (t * t - 1.0)).exp()
}

/// Width parameter `N0` of the peak window `[n - 2 N0, n]` (requires `t > 1`).
pub fn n0(s: u32, t: f64) -> Result<f64> {
    check_params(s, t)?;
    if t <= 1.0 {
        return Err(Error::Domain(format!("N0 is defined for t > 1, got t = {t}")));
    }
    let f = f_st(s, t);
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    if f < golden {
        return Ok(0.0);
    }
    Ok(-((1.0 / f).ln_1p() / f.ln()).ln() / t.ln())
}

/// `floor(ln(t / (9 e s)) / (2 ln t)) + 1` (requires `0 < t < 1`).
pub fn m0(s: u32, t: f64) -> Result<u64> {
    check_params(s, t)?;
    if t >= 1.0 {
        return Err(Error::Domain(format!("m0 is defined for 0 < t < 1, got t = {t}")));
    }
    let x = (t / (9.0 * std::f64::consts::E * s as f64)).ln() / (2.0 * t.ln());
    Ok(x.floor() as u64 + 1)
}

/// Size-independent entropy bound `C(s, t)` for `0 < t < 1`.
pub fn c_bound(s: u32, t: f64) -> Result<f64> {
    let m0 = m0(s, t)? as f64;
    let sf = s as f64;
    let t2 = t * t;
    let e = std::f64::consts::E;
    Ok((m0 + 1.0) / e
        - 9.0 * sf * t.powf(2.0 * m0 + 1.0) / (1.0 - t2) * (9.0 * sf / t).ln()
        - 18.0 * sf * t.powf(2.0 * m0 + 2.0) * (m0 * (1.0 - t2) + 1.0) / (t2 - 1.0).powi(2) * t.ln()
        + 9.0 * sf * t / (t2 - 1.0).powi(2) * sf.ln())
}

/// `n ln s - ln s * s^{2 N0 + 1} / (s - 1)^2` (requires `s > 1`, `t > 1`).
pub fn linear_lower_bound(n: usize, s: u32, t: f64) -> Result<f64> {
    if s < 2 {
        return Err(Error::Domain("the linear lower bound needs s > 1".into()));
    }
    let n0 = n0(s, t)?;
    let sf = s as f64;
    Ok(n as f64 * sf.ln() - sf.ln() * sf.powf(2.0 * n0 + 1.0) / (sf - 1.0).powi(2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub n: usize,
    pub s: u32,
    pub t: f64,
    /// Present for `t > 1`.
    pub n0: Option<f64>,
    /// Present for `t < 1`.
    pub m0: Option<u64>,
    /// Present for `t < 1`.
    pub c: Option<f64>,
    /// Present for `t > 1`, `s > 1`.
    pub linear_lower_bound: Option<f64>,
    pub mstar: usize,
    pub mstar_weighted: usize,
}

/// Every bound that applies at `(s, t)`, plus the peak positions at `n`.
pub fn bounds(n: usize, s: u32, t: f64) -> Result<BoundsReport> {
    let prof = profile(n, s, t)?;
    Ok(BoundsReport {
        n,
        s,
        t,
        n0: (t > 1.0).then(|| n0(s, t)).transpose()?,
        m0: (t < 1.0).then(|| m0(s, t)).transpose()?,
        c: (t < 1.0).then(|| c_bound(s, t)).transpose()?,
        linear_lower_bound: (t > 1.0 && s > 1)
            .then(|| linear_lower_bound(n, s, t))
            .transpose()?,
        mstar: prof.mstar(),
        mstar_weighted: prof.mstar_weighted(),
    })
}

// ---------------------------------------------------------------------------
// Color-absorbed table

/// `ln Mt[n][m]` with `Mt[n][m] = s^{m/2} M[n][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TildeProfile {
    pub n: usize,
    pub s: u32,
    pub t: f64,
    pub log_m_tilde: Vec<f64>,
}

impl TildeProfile {
    pub fn from_profile(p: &SchmidtProfile) -> Self {
        let half_ln_s = 0.5 * (p.s as f64).ln();
        TildeProfile {
            n: p.n,
            s: p.s,
            t: p.t,
            log_m_tilde: p
                .log_m
                .iter()
                .enumerate()
                .map(|(m, &lm)| m as f64 * half_ln_s + lm)
                .collect(),
        }
    }

    /// `ln sum_{m <= upto} Mt[n][m]^2`.
    pub fn log_sum_sq(&self, upto: usize) -> f64 {
        let terms: Vec<f64> = self.log_m_tilde.iter().take(upto + 1).map(|&l| 2.0 * l).collect();
        log_sum_exp(&terms)
    }
}

pub fn tilde_profile(n: usize, s: u32, t: f64) -> Result<TildeProfile> {
    Ok(TildeProfile::from_profile(&profile(n, s, t)?))
}

#[derive(Debug, Clone, Default)]
pub struct LemmaReport {
    /// `n` with `sum Mt[n+1]^2 <= sum Mt[n]^2`.
    pub monotonicity_failures: Vec<usize>,
    /// `(n, m, ln pt, ln bound)` with `pt[n][m] >= 9 s t^{2m-1}`.
    pub bound_failures: Vec<(usize, usize, f64, f64)>,
    /// Largest `ln pt - ln bound` seen (negative when every bound holds).
    pub worst_bound_margin: f64,
}

impl LemmaReport {
    pub fn all_hold(&self) -> bool {
        self.monotonicity_failures.is_empty() && self.bound_failures.is_empty()
    }
}

/// Checks `sum_m Mt[n+1][m]^2 > sum_m Mt[n][m]^2` and
/// `pt[n][m] = Mt[n+1][m]^2 / sum_{m' <= n} Mt[n+1][m']^2 < 9 s t^{2m-1}`
/// for `n = 0..=n_max` and every `m <= n + 1`.
pub fn check_lemmas(n_max: usize, s: u32, t: f64) -> Result<LemmaReport> {
    check_params(s, t)?;
    let mut report = LemmaReport {
        worst_bound_margin: f64::NEG_INFINITY,
        ..Default::default()
    };
    let ln_9s = (9.0 * s as f64).ln();
    let ln_t = t.ln();
    let mut cur = SchmidtProfile::seed(s, t)?;
    for n in 0..=n_max {
        let next = cur.recurrence_step();
        let (a, b) = (
            TildeProfile::from_profile(&cur),
            TildeProfile::from_profile(&next),
        );
        if b.log_sum_sq(n + 1) <= a.log_sum_sq(n) {
            report.monotonicity_failures.push(n);
        }
        let denom = b.log_sum_sq(n);
        for (m, &lmt) in b.log_m_tilde.iter().enumerate() {
            let ln_pt = 2.0 * lmt - denom;
            let ln_bound = ln_9s + (2.0 * m as f64 - 1.0) * ln_t;
            report.worst_bound_margin = report.worst_bound_margin.max(ln_pt - ln_bound);
            if ln_pt >= ln_bound {
                report.bound_failures.push((n, m, ln_pt, ln_bound));
            }
        }
        cur = next;
    }
    Ok(report)
}
