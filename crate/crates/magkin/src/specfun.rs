//! Modified Bessel functions of the first kind and integer order, always
//! returned in the exponentially scaled form `e^{-a} I_n(a)`.
//!
//! Values come from the defining power series with every term evaluated in
//! the log domain, so arguments far beyond the overflow point of `I_n` itself
//! are handled. Tails of sums over the order `n` are certified with the bound
//! `e^{-a} I_n(a) <= 2 (a/2)^n e^{-a/2} / n!`, valid for `n >= a`.

use thiserror::Error;

/// Largest argument accepted by the series evaluator.
pub const MAX_ARGUMENT: f64 = 1.0e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecfunError {
    #[error("Bessel argument must be finite and nonnegative, got {0}")]
    InvalidArgument(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("series for a = {a} cannot be represented even in the log domain")]
    OverflowRisk { a: f64 },
    #[error("n_max = {n_max} is too small for a = {a}: certified tail {tail:.3e} exceeds {tol:.1e}")]
    ToleranceNotAchievable { a: f64, n_max: usize, tail: f64, tol: f64 },
}

/// One evaluation of `e^{-a} I_n(a)` together with the remainder bound of the
/// truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub n: u32,
    pub a: f64,
    pub value_scaled: f64,
    pub truncation_bound: f64,
}

/// Natural log of `n!`.
pub fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Computes `e^{-a} I_n(a)` to absolute accuracy `tol`.
///
/// Summation continues past the maximum of the series terms until the
/// geometric tail is below both `tol` and the double precision resolution of
/// the partial sum, so very small values keep full relative accuracy.
pub fn bessel_i_scaled(n: u32, a: f64, tol: f64) -> Result<BesselEval, SpecfunError> {
    if !a.is_finite() || a < 0.0 {
        return Err(SpecfunError::InvalidArgument(a));
    }
    if !(tol > 0.0) {
        return Err(SpecfunError::InvalidTolerance(tol));
    }
    if a > MAX_ARGUMENT {
        return Err(SpecfunError::OverflowRisk { a });
    }
    if a == 0.0 {
        let value_scaled = if n == 0 { 1.0 } else { 0.0 };
        return Ok(BesselEval { n, a, value_scaled, truncation_bound: 0.0 });
    }
    let half_sq = 0.25 * a * a;
    let nf = n as f64;
    let mut log_term = nf * (0.5 * a).ln() - ln_factorial(n) - a;
    let mut acc = LogAccumulator::default();
    let mut m = 0.0_f64;
    let tail;
    loop {
        acc.push(log_term);
        let ratio = half_sq / ((m + 1.0) * (m + nf + 1.0));
        if ratio < 0.5 {
            let bound_log = log_term + ratio.ln() - (1.0 - ratio).ln();
            let target = tol.ln().min(acc.log_value() + (1.0e-17_f64).ln());
            if bound_log < target || bound_log < -745.0 {
                tail = bound_log.exp();
                break;
            }
        }
        if m > 5.0e7 {
            return Err(SpecfunError::OverflowRisk { a });
        }
        log_term += ratio.ln();
        m += 1.0;
    }
    let value_scaled = acc.log_value().exp();
    if !value_scaled.is_finite() {
        return Err(SpecfunError::OverflowRisk { a });
    }
    Ok(BesselEval { n, a, value_scaled, truncation_bound: tail })
}

/// Running sum of positive terms supplied through their logarithms.
#[derive(Default)]
struct LogAccumulator {
    max: Option<f64>,
    scaled: f64,
}

impl LogAccumulator {
    fn push(&mut self, log_term: f64) {
        match self.max {
            None => {
                self.max = Some(log_term);
                self.scaled = 1.0;
            }
            Some(mx) if log_term > mx => {
                self.scaled = self.scaled * (mx - log_term).exp() + 1.0;
                self.max = Some(log_term);
            }
            Some(mx) => self.scaled += (log_term - mx).exp(),
        }
    }

    fn log_value(&self) -> f64 {
        self.max.map_or(f64::NEG_INFINITY, |mx| mx + self.scaled.ln())
    }
}

/// Upper bound `2 (a/2)^n e^{-a/2} / n!` on `e^{-a} I_n(a)`, valid for `n >= a`.
pub fn scaled_order_bound(n: u32, a: f64) -> f64 {
    if a == 0.0 {
        return if n == 0 { 2.0 } else { 0.0 };
    }
    (2.0_f64.ln() + n as f64 * (0.5 * a).ln() - 0.5 * a - ln_factorial(n)).exp()
}

/// Certified bound on `sum_{n > n_last} n^power e^{-a} I_n(a)`.
///
/// Returns `None` when `n_last + 1 < a` or the weighted bound is not yet
/// geometrically decreasing, so no certificate is available.
pub fn weighted_tail_bound(a: f64, n_last: usize, power: i32) -> Option<f64> {
    let n0 = n_last + 1;
    if (n0 as f64) < a {
        return None;
    }
    let n0f = n0 as f64;
    let q = 0.5 * a / (n0f + 1.0) * ((n0f + 1.0) / n0f).powi(power.max(0));
    if q >= 1.0 {
        return None;
    }
    let first = n0f.powi(power) * scaled_order_bound(n0 as u32, a);
    Some(first / (1.0 - q))
}

/// Smallest order `N >= max(a, floor)` whose certified weighted tail is below `tol`.
pub fn required_order(a: f64, tol: f64, power: i32, floor: usize) -> usize {
    let mut n = floor.max(a.ceil() as usize);
    loop {
        if let Some(t) = weighted_tail_bound(a, n, power) {
            if t < tol {
                return n;
            }
        }
        n += 1;
    }
}

/// Scaled Bessel values `e^{-a} I_n(a)` for `n = 0..=n_max`, where `n_max` is
/// chosen so that the certified tail with weight `n^3` is below `tol`.
#[derive(Debug, Clone)]
pub struct BesselTable {
    pub a: f64,
    pub values: Vec<f64>,
    /// Bound on `sum_{n > n_max} n^3 e^{-a} I_n(a)`.
    pub tail_bound: f64,
}

impl BesselTable {
    pub fn new(a: f64, tol: f64) -> Result<Self, SpecfunError> {
        let n_max = required_order(a, tol, 3, 20);
        Self::with_order(a, n_max, tol)
    }

    pub fn with_order(a: f64, n_max: usize, tol: f64) -> Result<Self, SpecfunError> {
        let values = (0..=n_max)
            .map(|n| bessel_i_scaled(n as u32, a, tol.min(1.0e-16)).map(|e| e.value_scaled))
            .collect::<Result<Vec<_>, _>>()?;
        let tail_bound = weighted_tail_bound(a, n_max, 3).unwrap_or(f64::INFINITY);
        Ok(Self { a, values, tail_bound })
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    /// `e^{-a} I_n(a)` for any integer order, using `I_{-n} = I_n`.
    pub fn get(&self, n: i64) -> f64 {
        self.values.get(n.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }
}

/// Residuals of the three classical identities, all in scaled form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub a: f64,
    pub n_max: usize,
    /// `max_n |I_{n-1} - I_{n+1} - (2n/a) I_n| e^{-a}` over `1 <= n < n_max`.
    pub recurrence: f64,
    /// `|1 - e^{-a}(I_0 + 2 sum_{n>=1} I_n)|`, summed to convergence.
    pub generating: f64,
    /// `|e^{-a}(I_0 + I_1) - e^{-a} sum_{n>=1} (2n/a) I_n|`.
    pub first_moment: f64,
    /// Certified bound on the omitted tail of the weighted sums.
    pub tail_bound: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.recurrence.max(self.generating).max(self.first_moment)
    }
}

/// Evaluates the recurrence for orders below `n_max` and the generating and
/// first moment identities with order sums carried until the certified tail
/// is below `1e-14`.
pub fn check_identities(a: f64, n_max: usize) -> Result<IdentityReport, SpecfunError> {
    const TAIL_TOL: f64 = 1.0e-14;
    const ORDER_LIMIT: usize = 100_000;
    if !(a > 0.0) || !a.is_finite() {
        return Err(SpecfunError::InvalidArgument(a));
    }
    let n_sum = required_order(a, TAIL_TOL * a.min(1.0), 1, n_max.max(2));
    if n_sum > ORDER_LIMIT {
        let tail = weighted_tail_bound(a, ORDER_LIMIT, 1).unwrap_or(f64::INFINITY);
        return Err(SpecfunError::ToleranceNotAchievable { a, n_max: ORDER_LIMIT, tail, tol: TAIL_TOL });
    }
    let tail_bound = weighted_tail_bound(a, n_sum, 1).unwrap_or(f64::INFINITY) * (2.0 / a).max(1.0) * 2.0;
    let table = BesselTable::with_order(a, n_sum + 1, 1.0e-17)?;
    let s = |n: usize| table.values[n];
    let recurrence =
        (1..n_max.max(2)).map(|n| (s(n - 1) - s(n + 1) - 2.0 * n as f64 / a * s(n)).abs()).fold(0.0, f64::max);
    let generating = (1.0 - (s(0) + 2.0 * (1..=n_sum).map(s).sum::<f64>())).abs();
    let moment: f64 = (1..=n_sum).map(|n| 2.0 * n as f64 / a * s(n)).sum();
    let first_moment = (s(0) + s(1) - moment).abs();
    Ok(IdentityReport { a, n_max, recurrence, generating, first_moment, tail_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_arguments() {
        assert_eq!(bessel_i_scaled(0, 0.0, 1e-14).unwrap().value_scaled, 1.0);
        assert_eq!(bessel_i_scaled(3, 0.0, 1e-14).unwrap().value_scaled, 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(bessel_i_scaled(0, -1.0, 1e-12), Err(SpecfunError::InvalidArgument(_))));
        assert!(matches!(bessel_i_scaled(0, 1.0, 0.0), Err(SpecfunError::InvalidTolerance(_))));
        assert!(matches!(bessel_i_scaled(0, 2.0e6, 1e-12), Err(SpecfunError::OverflowRisk { .. })));
    }

    #[test]
    fn small_argument_orders() {
        let a = 1.0e-8;
        let i1 = bessel_i_scaled(1, a, 1e-20).unwrap().value_scaled;
        assert!((i1 / (0.5 * a) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn large_argument_stays_finite() {
        let e = bessel_i_scaled(0, 1.0e4, 1e-14).unwrap();
        let asym = 1.0 / (2.0 * std::f64::consts::PI * 1.0e4).sqrt();
        assert!((e.value_scaled / asym - 1.0).abs() < 1e-4);
    }
}
