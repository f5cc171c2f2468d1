//! Sensitivities of the left median and the fixed-threshold breakdown
//! statistic `A_eta(x) = min{k : some x' within Hamming distance k moves the
//! median by more than eta}`.
//!
//! Order statistics that fall outside `1..=n` are treated as `-inf` / `+inf`:
//! changing `l` points is always enough to drag the left median anywhere.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Sample;

/// Largest sample size accepted by [`breakdown_stat_oracle`].
pub const ORACLE_MAX_N: usize = 12;

/// How the shift achievable with `k` changed coordinates is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakdownRule {
    /// `max(x_(l+k) - x_(l), x_(l) - x_(l-k))`, the exact worst-case shift.
    ///
    /// Not Hamming-Lipschitz: `[0,0,3,6,6,9]` and `[0,0,1,6,6,9]` at
    /// `eta = 3.5` give 3 and 1, because the reference median moves with the
    /// data. Do not release it through PTR.
    Endpoint,
    /// `max_{0<=t<=k+1} (x_(l+t) - x_(l+t-k-1))`. Never larger than the
    /// endpoint statistic, and changes by at most one between neighbors since
    /// one replacement shifts every order statistic by at most one rank.
    #[default]
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownResult {
    pub k_star: usize,
    /// `(k, shift)` pairs that were evaluated, sorted by `k`. Shifts are
    /// nondecreasing in `k` and may be `f64::INFINITY`.
    pub probes: Vec<(usize, f64)>,
}

impl BreakdownResult {
    pub fn shift_at(&self, k: usize) -> Option<f64> {
        self.probes
            .binary_search_by_key(&k, |p| p.0)
            .ok()
            .map(|i| self.probes[i].1)
    }
}

/// `LS(x) = max(x_(l+1) - x_(l), x_(l) - x_(l-1))`; infinite when `l = 1`.
pub fn local_sensitivity_median(s: &Sample) -> Result<f64> {
    if s.len() < 3 {
        return Err(Error::SampleTooSmall {
            n: s.len(),
            required: 3,
            what: "local sensitivity of the median",
        });
    }
    Ok(max_shift_median(s, 1))
}

/// Worst-case move of the left median when at most `k` coordinates change.
///
/// Exact: sending `k` points at or below the median to `+inf` makes `x_(l+k)`
/// the new median, and symmetrically for `x_(l-k)`.
pub fn max_shift_median(s: &Sample, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let ell = s.ell() as isize;
    let k = k as isize;
    let (Some(mid), Some(hi), Some(lo)) = (
        s.order_stat_signed(ell),
        s.order_stat_signed(ell + k),
        s.order_stat_signed(ell - k),
    ) else {
        return f64::INFINITY;
    };
    (hi - mid).max(mid - lo)
}

/// `max_{0<=t<=k+1} (x_(l+t) - x_(l+t-k-1))`, infinite when any window leaves
/// the sample.
pub fn window_shift_median(s: &Sample, k: usize) -> f64 {
    let ell = s.ell() as isize;
    let k = k as isize;
    let n = s.len() as isize;
    if ell - k - 1 < 1 || ell + k + 1 > n {
        return f64::INFINITY;
    }
    let x = s.sorted();
    // 0-based: x[ell + t - 1] - x[ell + t - k - 2]
    (0..=k + 1)
        .map(|t| x[(ell + t - 1) as usize] - x[(ell + t - k - 2) as usize])
        .fold(0.0, f64::max)
}

fn shift(s: &Sample, k: usize, rule: BreakdownRule) -> f64 {
    match rule {
        BreakdownRule::Endpoint => max_shift_median(s, k),
        BreakdownRule::Window => window_shift_median(s, k),
    }
}

/// Exact breakdown statistic of the left median (the minimal number of
/// replaced coordinates that moves it by more than `eta`), by bisection over `k`.
///
/// The shift is nondecreasing in `k` and infinite at `k = max(l, 1)`, so the
/// search needs `O(log n)` probes on the already-sorted sample.
pub fn breakdown_stat_median(s: &Sample, eta: f64) -> BreakdownResult {
    breakdown_stat_median_with(s, eta, BreakdownRule::Endpoint)
}

pub fn breakdown_stat_median_with(s: &Sample, eta: f64, rule: BreakdownRule) -> BreakdownResult {
    let mut probes = Vec::new();
    let probe = |probes: &mut Vec<(usize, f64)>, k: usize| {
        let v = shift(s, k, rule);
        probes.push((k, v));
        v > eta
    };
    // Invariant: shift(lo) <= eta < shift(hi).
    let mut lo = 0usize;
    let mut hi = s.ell().max(1);
    if probe(&mut probes, lo) {
        hi = 0;
    } else {
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if probe(&mut probes, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if !probes.iter().any(|p| p.0 == hi) {
            probe(&mut probes, hi);
        }
    }
    probes.sort_by_key(|p| p.0);
    BreakdownResult { k_star: hi, probes }
}

fn left_median_of(values: &mut [f64], ell: usize) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values[ell - 1]
}

/// Exhaustive computation of the breakdown statistic for tiny samples.
///
/// Tries every subset of at most `k` coordinates, replacing each chosen value
/// by `-BIG` or `+BIG`, and reports the first `k` at which the left median
/// moves by more than `eta`. Extreme replacements suffice because each order
/// statistic is monotone in every coordinate.
pub fn breakdown_stat_oracle(s: &Sample, eta: f64) -> Result<BreakdownResult> {
    let n = s.len();
    if n > ORACLE_MAX_N {
        return Err(Error::SampleTooLargeForOracle { n, max: ORACLE_MAX_N });
    }
    if n < 2 {
        return Err(Error::SampleTooSmall {
            n,
            required: 2,
            what: "the breakdown oracle",
        });
    }
    let ell = s.ell();
    let big = 2.0 * (s.max_abs() + eta + 1.0);
    let x = s.values();
    let base = s.order_stat(ell).expect("ell >= 1");
    let mut probes = Vec::new();
    let mut scratch = vec![0.0; n];

    for k in 0..=n {
        let mut worst = 0.0f64;
        for subset in 0u32..(1 << n) {
            if subset.count_ones() as usize != k {
                continue;
            }
            let members: Vec<usize> = (0..n).filter(|i| subset & (1 << i) != 0).collect();
            for signs in 0u32..(1 << k) {
                scratch.copy_from_slice(x);
                for (j, &i) in members.iter().enumerate() {
                    scratch[i] = if signs & (1 << j) != 0 { big } else { -big };
                }
                let m = left_median_of(&mut scratch, ell);
                let d = if m.abs() == big { f64::INFINITY } else { (m - base).abs() };
                worst = worst.max(d);
            }
        }
        probes.push((k, worst));
        if worst > eta {
            return Ok(BreakdownResult { k_star: k, probes });
        }
    }
    unreachable!("changing l >= 1 points always moves the median to +-BIG")
}

/// beta-smooth sensitivity of the left median for data confined to `[a, b]`:
/// `max_k e^{-beta k} max_{0<=t<=k+1} (x_(l+t) - x_(l+t-k-1))`, with order
/// statistics below 1 read as `a` and above `n` read as `b`.
pub fn smooth_sensitivity_median_bounded(s: &Sample, a: f64, b: f64, beta: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid("domain", format!("need finite a < b, got [{a}, {b}]")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("must be finite and > 0, got {beta}")));
    }
    if let Some((index, &value)) = s.values().iter().enumerate().find(|(_, v)| **v < a || **v > b) {
        return Err(Error::ValueOutOfDomain { index, value, lo: a, hi: b });
    }
    let n = s.len() as isize;
    let ell = s.ell() as isize;
    let x = s.sorted();
    let at = |i: isize| -> f64 {
        if i < 1 {
            a
        } else if i > n {
            b
        } else {
            x[(i - 1) as usize]
        }
    };
    let mut best = 0.0f64;
    for k in 0..=n {
        let weight = (-beta * k as f64).exp();
        if weight * (b - a) <= best {
            break;
        }
        let widest = (0..=k + 1)
            .map(|t| at(ell + t) - at(ell + t - k - 1))
            .fold(0.0, f64::max);
        best = best.max(weight * widest);
    }
    Ok(best)
}
