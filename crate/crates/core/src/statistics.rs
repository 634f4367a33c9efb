//! Norms, the scaled statistics of the limit theorems, reference CDFs,
//! empirical distributions and deviation-rate estimators.
//!
//! Statistics are plain maps from a sampled point to a real number. Fitting
//! against a reference law only happens on an [`EmpiricalSample`].

use alloc::vec::Vec;

use rand::Rng;

use crate::constants::MomentConstants;
use crate::error::{check_param, Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::sampling::{sample_exponential, LpBallPoint, SimplexPoint};

/// `(Σ|x_i|^q)^{1/q}`, or `max|x_i|` when `q` is infinite.
pub fn lq_norm(x: &[f64], q: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidInput("norm of an empty vector"));
    }
    check_param("q", q, q >= 1.0, "must be at least 1 or infinite")?;
    let max = x.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if q.is_infinite() || max == 0.0 || !max.is_finite() {
        return Ok(max);
    }
    if q == 1.0 {
        return Ok(x.iter().map(|v| libm::fabs(*v)).sum());
    }
    // Scaled by the maximum so large q cannot overflow or underflow.
    let inv = 1.0 / max;
    let sum: f64 = if q == 2.0 {
        x.iter().map(|v| (v * inv) * (v * inv)).sum()
    } else if q.fract() == 0.0 && q <= 64.0 {
        let k = q as i32;
        x.iter().map(|v| libm::fabs(v * inv).powi(k)).sum()
    } else {
        x.iter().map(|v| libm::pow(libm::fabs(v * inv), q)).sum()
    };
    Ok(max
        * if q == 2.0 {
            libm::sqrt(sum)
        } else {
            libm::pow(sum, 1.0 / q)
        })
}

fn require_centered(point: &SimplexPoint) -> Result<()> {
    if point.is_centered() {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "statistic is defined on the centered simplex",
        ))
    }
}

fn log_n(n: usize) -> Result<f64> {
    if n < 2 {
        Err(Error::InvalidDimension(n, 2))
    } else {
        Ok(libm::log(n as f64))
    }
}

/// `√n ((n^{1-1/q} ||Z_n||_q μ_q^{-1/q} - 1) / σ_q)`.
pub fn clt_statistic(point: &SimplexPoint, q: f64, mc: &MomentConstants) -> Result<f64> {
    require_centered(point)?;
    if mc.q != q {
        return Err(Error::InvalidParameter {
            name: "q",
            value: q,
            reason: "does not match the moment constants",
        });
    }
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )?;
    let n = point.n() as f64;
    let norm = lq_norm(point.coords(), q)?;
    let scaled = libm::pow(n, 1.0 - 1.0 / q) * norm * libm::pow(mc.mu_q, -1.0 / q);
    Ok(libm::sqrt(n) * (scaled - 1.0) / mc.sigma_q())
}

/// `n ||Z_n||_∞ - (log n - 1)`.
pub fn gumbel_statistic(point: &SimplexPoint) -> Result<f64> {
    require_centered(point)?;
    let n = point.n();
    let sup = lq_norm(point.coords(), f64::INFINITY)?;
    Ok(n as f64 * sup - (libm::log(n as f64) - 1.0))
}

/// Standard Gumbel CDF `exp(-e^{-x})`.
pub fn gumbel_cdf(x: f64) -> f64 {
    libm::exp(-libm::exp(-x))
}

/// Standard normal CDF.
pub fn gaussian_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}

/// `(n / log n) ||Z_n||_∞`.
pub fn ldp_statistic(point: &SimplexPoint) -> Result<f64> {
    require_centered(point)?;
    let ln = log_n(point.n())?;
    Ok(point.n() as f64 / ln * lq_norm(point.coords(), f64::INFINITY)?)
}

/// `(log n / s_n) ((n / log n) ||Z_n||_∞ - 1)` for a speed `1 < s_n < log n`.
pub fn mdp_statistic(point: &SimplexPoint, s_n: f64) -> Result<f64> {
    let ln = log_n(point.n())?;
    check_param(
        "s_n",
        s_n,
        s_n > 1.0 && s_n < ln,
        "must satisfy 1 < s_n < log n",
    )?;
    Ok(ln / s_n * (ldp_statistic(point)? - 1.0))
}

/// `(n / (p log n))^{1/p} ||Z_n||_∞` for a point of the lp-ball.
pub fn lp_ldp_statistic(point: &LpBallPoint, p: f64) -> Result<f64> {
    if point.p() != p {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "does not match the ball the point was drawn from",
        });
    }
    let ln = log_n(point.n())?;
    let n = point.n() as f64;
    Ok(libm::pow(n / (p * ln), 1.0 / p) * lq_norm(point.coords(), f64::INFINITY)?)
}

/// `n ||Y_n||_∞ - log n`, Gumbel in the limit for the l1-ball.
pub fn lp_gumbel_statistic(point: &LpBallPoint) -> Result<f64> {
    let ln = log_n(point.n())?;
    Ok(point.n() as f64 * lq_norm(point.coords(), f64::INFINITY)? - ln)
}

/// Whether `||Z_n||_∞ ≠ T_n = max_i (E_i/S_n - 1/n)` for the point built from
/// the exponential vector `e`, i.e. whether the sup-norm is attained strictly
/// on the negative side.
///
/// Evaluated as `2 S_n / n > max E_i + min E_i`, which is the same inequality
/// multiplied through by `S_n`; at `n = 2` both sides are the same rounded sum,
/// so the symmetric case is never misreported. Ties count as equal.
pub fn equivalence_indicator(e: &[f64]) -> Result<bool> {
    let n = e.len();
    if n < 2 {
        return Err(Error::InvalidDimension(n, 2));
    }
    let total: f64 = e.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::InvalidInput(
            "exponential vector must have a positive sum",
        ));
    }
    let (lo, hi) = e
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    Ok(2.0 * total / n as f64 > hi + lo)
}

/// Label for what an [`EmpiricalSample`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StatisticKind {
    Clt,
    Gumbel,
    Ldp,
    Mdp,
    LpLdp,
    LpGumbel,
    GeneralClt,
    Custom,
}

/// Sorted replicated values of one statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    n: usize,
    kind: StatisticKind,
    seed: u64,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>, n: usize, kind: StatisticKind, seed: u64) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("sample contains NaN"));
        }
        values.sort_unstable_by(f64::total_cmp);
        Ok(Self {
            values,
            n,
            kind,
            seed,
        })
    }

    /// Merges per-substream blocks. The result depends only on the multiset
    /// of values, never on how they were split.
    pub fn from_blocks<I>(blocks: I, n: usize, kind: StatisticKind, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let values: Vec<f64> = blocks.into_iter().flatten().collect();
        Self::new(values, n, kind, seed)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn replicates(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.values.len();
        if m < 2 {
            return f64::NAN;
        }
        let mean = self.mean();
        self.values
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / (m - 1) as f64
    }

    pub fn median(&self) -> f64 {
        let m = self.values.len();
        if m == 0 {
            return f64::NAN;
        }
        if m % 2 == 1 {
            self.values[m / 2]
        } else {
            0.5 * (self.values[m / 2 - 1] + self.values[m / 2])
        }
    }

    /// Applies `f` to every value, keeping the metadata.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| f(*v)).collect(),
            self.n,
            self.kind,
            self.seed,
        )
    }
}

/// Reference law in a goodness-of-fit check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Reference {
    Gaussian,
    Gumbel,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoodnessOfFit {
    pub ks_distance: f64,
    pub replicates: usize,
    pub reference: Reference,
}

/// Kolmogorov–Smirnov distance `sup_x |F̂(x) - F(x)|`, evaluated on both sides
/// of every jump of the empirical CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(
    sample: &EmpiricalSample,
    cdf: F,
    reference: Reference,
) -> Result<GoodnessOfFit> {
    let values = sample.values();
    if values.is_empty() {
        return Err(Error::InvalidInput("empty sample"));
    }
    let m = values.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in values.iter().enumerate() {
        let f = cdf(x);
        let above = (i + 1) as f64 / m - f;
        let below = f - i as f64 / m;
        d = d.max(above).max(below);
    }
    Ok(GoodnessOfFit {
        ks_distance: d.clamp(0.0, 1.0),
        replicates: values.len(),
        reference,
    })
}

/// Two-sample Kolmogorov–Smirnov distance between empirical laws.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<f64> {
    let (x, y) = (a.values(), b.values());
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("empty sample"));
    }
    let (m, n) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max(libm::fabs(i as f64 / m - j as f64 / n));
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    Above,
    Below,
}

/// A normalized tail log-probability `-(1/speed) log P̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DeviationEstimate {
    pub threshold: f64,
    pub speed: f64,
    pub direction: Direction,
    pub hit_count: usize,
    pub replicates: usize,
    /// `None` when no replicate fell in the tail.
    pub normalized_log_prob: Option<f64>,
    pub std_error: Option<f64>,
}

impl DeviationEstimate {
    /// Builds the estimate from a count; the standard error is the delta
    /// method `(1/speed) √((1 - p̂) / (p̂ m))`.
    pub fn from_counts(
        threshold: f64,
        speed: f64,
        direction: Direction,
        hit_count: usize,
        replicates: usize,
    ) -> Result<Self> {
        check_param(
            "speed",
            speed,
            speed > 0.0 && speed.is_finite(),
            "must be positive",
        )?;
        if replicates == 0 {
            return Err(Error::InvalidInput("no replicates"));
        }
        if hit_count > replicates {
            return Err(Error::InvalidInput("hit count exceeds replicates"));
        }
        let (estimate, se) = if hit_count == 0 {
            (None, None)
        } else {
            let p = hit_count as f64 / replicates as f64;
            (
                Some(-libm::log(p) / speed),
                Some(libm::sqrt((1.0 - p) / (p * replicates as f64)) / speed),
            )
        };
        Ok(Self {
            threshold,
            speed,
            direction,
            hit_count,
            replicates,
            normalized_log_prob: estimate,
            std_error: se,
        })
    }

    pub fn is_empty_tail(&self) -> bool {
        self.hit_count == 0
    }

    pub fn probability(&self) -> f64 {
        self.hit_count as f64 / self.replicates as f64
    }

    /// Binomial standard error of the raw probability.
    pub fn probability_std_error(&self) -> f64 {
        let p = self.probability();
        libm::sqrt(p * (1.0 - p) / self.replicates as f64)
    }
}

/// Counts the replicates strictly beyond `z` in the given direction.
pub fn tail_log_prob(
    sample: &EmpiricalSample,
    z: f64,
    speed: f64,
    direction: Direction,
) -> Result<DeviationEstimate> {
    let values = sample.values();
    if values.is_empty() {
        return Err(Error::InvalidInput("empty sample"));
    }
    let hits = match direction {
        Direction::Above => values.len() - values.partition_point(|v| *v <= z),
        Direction::Below => values.partition_point(|v| *v < z),
    };
    DeviationEstimate::from_counts(z, speed, direction, hits, values.len())
}

/// `√n ((1/n) Σ |X_i - X̄_n|^q - m_q)`.
pub fn general_central_moment_stat(data: &[f64], q: f64, mq: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidInput("empty data"));
    }
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )?;
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let moment = if q == 2.0 {
        data.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
    } else if q == 1.0 {
        data.iter().map(|x| libm::fabs(x - mean)).sum::<f64>()
    } else {
        data.iter()
            .map(|x| libm::pow(libm::fabs(x - mean), q))
            .sum::<f64>()
    } / n;
    Ok(libm::sqrt(n) * (moment - mq))
}

/// Step of the central difference for `d/dt E|X - t|^q`.
pub const DERIVATIVE_STEP: f64 = 1e-4;

/// Named source laws for the general central-moment CLT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SourceDistribution {
    Exponential,
    Uniform01,
}

impl SourceDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SourceDistribution::Exponential => sample_exponential(rng),
            SourceDistribution::Uniform01 => rng.random::<f64>(),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            SourceDistribution::Exponential => 1.0,
            SourceDistribution::Uniform01 => 0.5,
        }
    }

    /// `E g(X)` by quadrature, with the range split at `kink`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, kink: f64) -> Result<f64> {
        let tol = Tolerance::new(1e-14, 1e-14);
        match self {
            SourceDistribution::Exponential => {
                let density = |x: f64| g(x) * libm::exp(-x);
                let split = kink.max(0.0);
                let head = integrate(density, 0.0, split, tol)?.value;
                Ok(head + integrate_to_infinity(density, split, tol)?.value)
            }
            SourceDistribution::Uniform01 => {
                let split = kink.clamp(0.0, 1.0);
                Ok(integrate(&g, 0.0, split, tol)?.value + integrate(&g, split, 1.0, tol)?.value)
            }
        }
    }

    /// `E|X - t|^q`.
    pub fn abs_moment(&self, t: f64, q: f64) -> Result<f64> {
        self.expect(|x| libm::pow(libm::fabs(x - t), q), t)
    }
}

/// `Var(D X + |X - μ|^q)` where `D` is the derivative of `t ↦ E|X - t|^q` at
/// `μ`, taken by central differences of quadrature evaluations.
pub fn general_clt_variance(source: SourceDistribution, q: f64) -> Result<f64> {
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )?;
    let mu = source.mean();
    let h = DERIVATIVE_STEP;
    let slope = (source.abs_moment(mu + h, q)? - source.abs_moment(mu - h, q)?) / (2.0 * h);
    let g = |x: f64| slope * x + libm::pow(libm::fabs(x - mu), q);
    let first = source.expect(g, mu)?;
    let second = source.expect(|x| g(x) * g(x), mu)?;
    let variance = second - first * first;
    if variance > 0.0 {
        Ok(variance)
    } else {
        Err(Error::DegenerateVariance(variance))
    }
}

/// Monte Carlo version of [`general_clt_variance`] for a black-box law given
/// by its draws: the slope uses common random numbers at `X̄ ± h`.
pub fn general_clt_variance_from_draws(draws: &[f64], q: f64) -> Result<f64> {
    if draws.len() < 2 {
        return Err(Error::InvalidInput("need at least two draws"));
    }
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )?;
    let m = draws.len() as f64;
    let mu = draws.iter().sum::<f64>() / m;
    let h = DERIVATIVE_STEP;
    let mean_abs = |t: f64| {
        draws
            .iter()
            .map(|x| libm::pow(libm::fabs(x - t), q))
            .sum::<f64>()
            / m
    };
    let slope = (mean_abs(mu + h) - mean_abs(mu - h)) / (2.0 * h);
    let g: Vec<f64> = draws
        .iter()
        .map(|x| slope * x + libm::pow(libm::fabs(x - mu), q))
        .collect();
    let g_mean = g.iter().sum::<f64>() / m;
    let variance = g.iter().map(|v| (v - g_mean) * (v - g_mean)).sum::<f64>() / (m - 1.0);
    if variance > 0.0 {
        Ok(variance)
    } else {
        Err(Error::DegenerateVariance(variance))
    }
}
