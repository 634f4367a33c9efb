//! Reference computations that do not rely on the limit theorems: the exact
//! law of the largest uniform spacing, closed forms at `n = 2`, direct
//! quadrature of `E|E - 1|^q`, and Monte Carlo brute force.
//!
//! Only `sampling` and `quadrature` are used here.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_param, Error, Result};
use crate::quadrature::{integrate, Tolerance};
use crate::sampling::{sample_exponential, sample_simplex, Construction, RandomStream};
use crate::summation::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OracleMethod {
    ClosedForm,
    InclusionExclusion,
    Quadrature,
    MonteCarloBruteforce,
}

/// An oracle value with a bound on its error (a standard error for Monte
/// Carlo methods, zero for closed forms).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleResult {
    pub value: f64,
    pub method: OracleMethod,
    pub error_bound: f64,
}

impl OracleResult {
    pub const fn exact(value: f64) -> Self {
        Self {
            value,
            method: OracleMethod::ClosedForm,
            error_bound: 0.0,
        }
    }
}

/// Series terms smaller than this fraction of the largest one are dropped.
pub const TRUNCATION_RELATIVE: f64 = 1e-15;

/// Largest tolerated absolute rounding error of an inclusion–exclusion
/// probability before the evaluation is rejected as cancelled.
pub const CANCELLATION_BUDGET: f64 = 1e-6;

/// Signed terms `(-1)^k C(n,k) (1 - ks)^{n-1}` of the max-spacing series.
struct Series {
    signed_terms: Vec<f64>,
    rounding: f64,
    truncation: f64,
    abs_sum: f64,
}

fn max_spacing_series(n: u64, s: f64) -> Result<Series> {
    let eps = f64::EPSILON;
    let unit = 0.5 * eps;
    let nf = n as f64;
    let mut signed_terms = Vec::new();
    let mut log_term = NeumaierSum::new(); // ln t_0 = 0
    let mut log_err = 0.0;
    let mut rounding = 0.0;
    let mut abs_sum = 0.0;
    let mut max_term = 1.0f64;
    let mut truncation = 0.0;
    signed_terms.push(1.0);
    abs_sum += 1.0;
    rounding += eps;

    let mut k: u64 = 1;
    while k <= n {
        let remaining_prev = 1.0 - (k - 1) as f64 * s;
        let remaining = 1.0 - k as f64 * s;
        if remaining <= 0.0 {
            break;
        }
        // ln t_k - ln t_{k-1} = ln((n-k+1)/k) + (n-1) ln(1 - s / (1 - (k-1)s))
        let a = libm::log((n - k + 1) as f64 / k as f64);
        let b = (nf - 1.0) * libm::log1p(-s / remaining_prev);
        log_term.add(a);
        log_term.add(b);
        // Unit roundoff per operation: the quotient and its log for `a`; the
        // quotient, log1p and product for `b`.
        log_err += unit * (2.0 + libm::fabs(a) + 4.0 * libm::fabs(b));
        let magnitude = libm::exp(log_term.total());
        let past_peak = a + b < 0.0;
        if past_peak && magnitude < TRUNCATION_RELATIVE * max_term {
            // Alternating with decreasing magnitudes: the tail is bounded by
            // the first omitted term.
            truncation = magnitude;
            break;
        }
        max_term = max_term.max(magnitude);
        if max_term * eps > CANCELLATION_BUDGET {
            return Err(Error::Numerical(format!(
                "catastrophic cancellation in the max-spacing series at n = {n}, s = {s:e}: \
                 terms reach {max_term:e}, beyond the {CANCELLATION_BUDGET:e} precision budget"
            )));
        }
        let signed = if k % 2 == 0 { magnitude } else { -magnitude };
        signed_terms.push(signed);
        abs_sum += magnitude;
        rounding += magnitude * (log_err + eps);
        k += 1;
    }
    Ok(Series {
        signed_terms,
        rounding,
        truncation,
        abs_sum,
    })
}

fn descending_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(|x, y| libm::fabs(*y).total_cmp(&libm::fabs(*x)));
    terms.iter().copied().collect::<NeumaierSum>().total()
}

fn check_max_spacing_args(n: u64, s: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(n as usize, 2));
    }
    check_param("s", s, !s.is_nan(), "must not be NaN")
}

fn finish(value: f64, series: &Series, n: u64, s: f64) -> Result<OracleResult> {
    let error_bound = series.rounding + 2.0 * f64::EPSILON * libm::fabs(value) + series.truncation;
    if series.rounding > CANCELLATION_BUDGET {
        return Err(Error::Numerical(format!(
            "catastrophic cancellation in the max-spacing series at n = {n}, s = {s:e}: \
             sum of |terms| {:e}, estimated rounding error {:e}",
            series.abs_sum, series.rounding
        )));
    }
    Ok(OracleResult {
        value: value.clamp(0.0, 1.0),
        method: OracleMethod::InclusionExclusion,
        error_bound,
    })
}

/// `P[max_i G_{n,i} <= s]` for the `n` spacings of `n - 1` uniforms:
/// `Σ_{k=0}^{⌊1/s⌋} (-1)^k C(n,k) (1 - ks)^{n-1}`.
pub fn max_spacing_cdf(n: u64, s: f64) -> Result<OracleResult> {
    check_max_spacing_args(n, s)?;
    if s <= 1.0 / n as f64 {
        return Ok(OracleResult::exact(0.0));
    }
    if s >= 1.0 {
        return Ok(OracleResult::exact(1.0));
    }
    let mut series = max_spacing_series(n, s)?;
    let value = descending_sum(&mut series.signed_terms);
    finish(value, &series, n, s)
}

/// `P[max_i G_{n,i} > s]`, summed directly so small upper tails keep their
/// relative accuracy.
pub fn max_spacing_sf(n: u64, s: f64) -> Result<OracleResult> {
    check_max_spacing_args(n, s)?;
    if s <= 1.0 / n as f64 {
        return Ok(OracleResult::exact(1.0));
    }
    if s >= 1.0 {
        return Ok(OracleResult::exact(0.0));
    }
    let mut series = max_spacing_series(n, s)?;
    let mut tail: Vec<f64> = series.signed_terms[1..].iter().map(|t| -t).collect();
    let value = descending_sum(&mut tail);
    series.rounding -= f64::EPSILON; // t_0 is not part of this sum
    finish(value, &series, n, s)
}

/// `P[n max_i G_{n,i} - log n <= x]`, the exact finite-`n` law behind the
/// Gumbel limit of the centered sup-norm.
pub fn gumbel_surrogate_cdf(n: u64, x: f64) -> Result<OracleResult> {
    max_spacing_cdf(n, (x + libm::log(n as f64)) / n as f64)
}

/// Tail of `(n / log n) T_n` where `n T_n = n max_i G_{n,i} - 1`:
/// `P[(n / log n) T_n > z]` when `upper`, else `P[(n / log n) T_n < z]`.
pub fn sup_surrogate_tail(n: u64, z: f64, upper: bool) -> Result<OracleResult> {
    let s = (z * libm::log(n as f64) + 1.0) / n as f64;
    if upper {
        max_spacing_sf(n, s)
    } else {
        // The law is continuous, so `<` and `<=` agree.
        max_spacing_cdf(n, s)
    }
}

/// `P[||Z_2||_q <= t]` in closed form: `||Z_2||_q = 2^{1/q} |U - 1/2|`.
pub fn small_n_norm_cdf(n: usize, q: f64, t: f64) -> Result<OracleResult> {
    if n != 2 {
        return Err(Error::Unsupported("closed-form norm law only for n = 2"));
    }
    check_param("q", q, q >= 1.0, "must be at least 1 or infinite")?;
    check_param("t", t, t >= 0.0, "must be nonnegative")?;
    let scale = if q.is_infinite() {
        1.0
    } else {
        libm::pow(2.0, -1.0 / q)
    };
    Ok(OracleResult::exact((2.0 * t * scale).min(1.0)))
}

/// `E|E - 1|^q` by direct quadrature of `∫_0^∞ |x - 1|^q e^{-x} dx` on
/// `[0, 1]` and `[1, 1 + L]`; the omitted tail is bounded by
/// `e^{-1} L^q e^{-L} / (1 - q/L)` and folded into the error bound.
pub fn mu_q_bruteforce(q: f64) -> Result<OracleResult> {
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )?;
    let tol = Tolerance::new(1e-15, 1e-15);
    let integrand = |x: f64| libm::pow(libm::fabs(x - 1.0), q) * libm::exp(-x);
    let head = integrate(integrand, 0.0, 1.0, tol)?;
    let mut span = 2.0 * q + 40.0;
    loop {
        let body = integrate(integrand, 1.0, 1.0 + span, tol)?;
        let log_tail = -1.0 + q * libm::log(span) - span - libm::log(1.0 - q / span);
        let tail = libm::exp(log_tail);
        let value = head.value + body.value;
        if tail <= 1e-16 * value || span > 1e4 {
            return Ok(OracleResult {
                value,
                method: OracleMethod::Quadrature,
                error_bound: head.error + body.error + tail,
            });
        }
        span *= 2.0;
    }
}

/// Sample covariance of `(E, |E - 1|^q)` over `draws` exponential variates,
/// with a jackknife standard error.
pub fn cov_bruteforce(q: f64, draws: usize, stream: RandomStream) -> Result<OracleResult> {
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )?;
    if draws < 10_000 {
        return Err(Error::InvalidParameter {
            name: "draws",
            value: draws as f64,
            reason: "need at least 10^4 draws",
        });
    }
    let mut rng = stream.rng();
    let mut xs = Vec::with_capacity(draws);
    let mut ys = Vec::with_capacity(draws);
    for _ in 0..draws {
        let e = sample_exponential(&mut rng);
        xs.push(e);
        ys.push(libm::pow(libm::fabs(e - 1.0), q));
    }
    let m = draws as f64;
    let mean_x = xs.iter().sum::<f64>() / m;
    let mean_y = ys.iter().sum::<f64>() / m;
    for (x, y) in xs.iter_mut().zip(ys.iter_mut()) {
        *x -= mean_x;
        *y -= mean_y;
    }
    // Centered data: Σx = Σy = 0 up to rounding.
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let cov = (sxy - sx * sy / m) / (m - 1.0);
    let leave_one_out = |i: usize| {
        let (x, y) = (xs[i], ys[i]);
        let (sx_i, sy_i) = (sx - x, sy - y);
        (sxy - x * y - sx_i * sy_i / (m - 1.0)) / (m - 2.0)
    };
    let jack_mean = (0..draws).map(leave_one_out).sum::<f64>() / m;
    let spread: f64 = (0..draws)
        .map(|i| {
            let d = leave_one_out(i) - jack_mean;
            d * d
        })
        .sum();
    Ok(OracleResult {
        value: cov,
        method: OracleMethod::MonteCarloBruteforce,
        error_bound: libm::sqrt((m - 1.0) / m * spread),
    })
}

/// Monte Carlo frequency of `max_i G_{n,i} <= s` over spacing draws, with its
/// binomial standard error.
pub fn max_spacing_frequency(
    n: usize,
    s: f64,
    replicates: usize,
    stream: RandomStream,
) -> Result<OracleResult> {
    if replicates == 0 {
        return Err(Error::InvalidInput("no replicates"));
    }
    let mut rng = stream.rng();
    let mut point = sample_simplex(&mut rng, n, false, Construction::Spacings)?;
    let mut hits = 0usize;
    for r in 0..replicates {
        if r > 0 {
            point.resample(&mut rng);
        }
        if point.coords().iter().all(|g| *g <= s) {
            hits += 1;
        }
    }
    let p = hits as f64 / replicates as f64;
    Ok(OracleResult {
        value: p,
        method: OracleMethod::MonteCarloBruteforce,
        error_bound: libm::sqrt(p * (1.0 - p) / replicates as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_spacings_closed_form() {
        let r = max_spacing_cdf(2, 0.6).unwrap();
        assert!((r.value - 0.2).abs() < 1e-15);
        assert_eq!(r.method, OracleMethod::InclusionExclusion);
        assert_eq!(max_spacing_cdf(2, 0.5).unwrap().value, 0.0);
        let sf = max_spacing_sf(2, 0.6).unwrap();
        assert!((sf.value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn boundary_regions_are_exact() {
        for n in [2u64, 3, 10, 1000] {
            assert_eq!(
                max_spacing_cdf(n, 1.0 / n as f64).unwrap(),
                OracleResult::exact(0.0)
            );
            assert_eq!(max_spacing_cdf(n, 1.0).unwrap(), OracleResult::exact(1.0));
            assert_eq!(max_spacing_cdf(n, -3.0).unwrap().value, 0.0);
        }
        assert!(max_spacing_cdf(1, 0.5).is_err());
        assert!(max_spacing_cdf(5, f64::NAN).is_err());
    }

    #[test]
    fn cdf_and_sf_are_complementary() {
        for (n, s) in [(3u64, 0.5), (10, 0.3), (1000, 0.01), (1_000_000, 1.5e-5)] {
            let c = max_spacing_cdf(n, s).unwrap();
            let f = max_spacing_sf(n, s).unwrap();
            assert!((c.value + f.value - 1.0).abs() < 1e-12, "n = {n}, s = {s}");
        }
    }

    #[test]
    fn three_spacings_closed_form() {
        // 1 - 3(1-s)^2 + 3(1-2s)^2 for 1/3 < s < 1/2.
        let s = 0.4;
        let exact = 1.0 - 3.0 * 0.36 + 3.0 * 0.04;
        assert!((max_spacing_cdf(3, s).unwrap().value - exact).abs() < 1e-14);
    }

    #[test]
    fn cancellation_is_reported_not_hidden() {
        let err = max_spacing_cdf(1_000_000, 2e-6).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref m) if m.contains("cancellation")));
    }

    #[test]
    fn small_n_closed_forms() {
        assert_eq!(small_n_norm_cdf(2, f64::INFINITY, 0.25).unwrap().value, 0.5);
        let t = core::f64::consts::SQRT_2 / 4.0;
        assert!((small_n_norm_cdf(2, 2.0, t).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(small_n_norm_cdf(2, 1.0, 1.0).unwrap().value, 1.0);
        assert_eq!(
            small_n_norm_cdf(3, 2.0, 0.1),
            Err(Error::Unsupported("closed-form norm law only for n = 2"))
        );
    }

    #[test]
    fn bruteforce_moments() {
        let e = core::f64::consts::E;
        let r = mu_q_bruteforce(1.0).unwrap();
        assert!((r.value - 2.0 / e).abs() < 1e-10);
        assert!(r.error_bound < 1e-10);
        assert!((mu_q_bruteforce(2.0).unwrap().value - 1.0).abs() < 1e-10);
        let five = crate::constants::mu_q(5.0).unwrap();
        assert!((mu_q_bruteforce(5.0).unwrap().value - five).abs() < 1e-9);
    }

    #[test]
    fn cov_bruteforce_needs_enough_draws() {
        assert!(cov_bruteforce(1.0, 100, RandomStream::new(1)).is_err());
    }
}
