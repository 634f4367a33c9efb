//! Exact and quadrature-evaluated constants: absolute central moments of the
//! standard exponential law, the scaled variance of the lq-norm CLT, the
//! p-generalized Gaussian normalization and tail quantile, and the rate
//! functions of the deviation principles.

use core::f64::consts::E;
use core::fmt;

use crate::error::{check_param, Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, Integral, Tolerance};

const INV_E: f64 = 1.0 / E;

/// `Γ(x)` for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Domain {
            what: "gamma function",
            value: x,
        });
    }
    Ok(libm::tgamma(x))
}

fn check_q(q: f64) -> Result<()> {
    check_param(
        "q",
        q,
        q >= 1.0 && q.is_finite(),
        "must be finite and at least 1",
    )
}

fn check_p(p: f64) -> Result<()> {
    check_param(
        "p",
        p,
        p >= 1.0 && p.is_finite(),
        "must be finite and at least 1",
    )
}

/// `μ_q = E|E - 1|^q = e^{-1} (Γ(q + 1) + ∫_0^1 x^q e^x dx)`.
pub fn mu_q(q: f64) -> Result<f64> {
    check_q(q)?;
    let finite_part = integrate(
        |x| libm::pow(x, q) * libm::exp(x),
        0.0,
        1.0,
        Tolerance::new(1e-15, 1e-15),
    )?;
    Ok(INV_E * (libm::tgamma(q + 1.0) + finite_part.value))
}

/// Largest `q` for which [`subfactorial`] fits in a `u128`.
pub const MAX_SUBFACTORIAL: u32 = 34;

/// The number of derangements `!q = q! Σ_{i=0}^q (-1)^i / i!`.
pub fn subfactorial(q: u32) -> Result<u128> {
    let mut prev: u128 = 1; // !0
    if q == 0 {
        return Ok(prev);
    }
    let mut cur: u128 = 0; // !1
    for k in 2..=q {
        // !k = (k - 1) (!(k-1) + !(k-2))
        let next = (k as u128 - 1)
            .checked_mul(
                cur.checked_add(prev)
                    .ok_or(Error::Overflow("subfactorial"))?,
            )
            .ok_or(Error::Overflow("subfactorial"))?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

fn factorial(q: u32) -> f64 {
    (1..=q).map(f64::from).product()
}

/// Closed form of `μ_q` for integer `q`: `!q` when `q` is even,
/// `2 e^{-1} q! - !q` when it is odd.
pub fn mu_q_closed_form(q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidParameter {
            name: "q",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let derangements = subfactorial(q)? as f64;
    if q % 2 == 0 {
        Ok(derangements)
    } else {
        Ok(2.0 * INV_E * factorial(q) - derangements)
    }
}

fn sigma_sq_from(q: f64, mu: f64, mu_2q: f64) -> f64 {
    (mu_2q - (q * q + 2.0 * q + 2.0) * mu * mu + 2.0 * (q + 1.0) * mu - 1.0) / (q * q * mu * mu)
}

/// `σ_q² = q^{-2} μ_q^{-2} (μ_{2q} - (q² + 2q + 2) μ_q² + 2(q + 1) μ_q - 1)`.
pub fn sigma_q_sq(q: f64) -> Result<f64> {
    Ok(sigma_sq_from(q, mu_q(q)?, mu_q(2.0 * q)?))
}

/// `Cov(E, |E - 1|^q) = (q + 1) μ_q - 1`.
pub fn cov_e_absq(q: f64) -> Result<f64> {
    Ok((q + 1.0) * mu_q(q)? - 1.0)
}

/// Derivative of `t ↦ E|E - t|^q` at `t = 1`, namely `1 - μ_q`.
pub fn moment_derivative(q: f64) -> Result<f64> {
    Ok(1.0 - mu_q(q)?)
}

/// How a [`MomentConstants`] bundle was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MomentMethod {
    ClosedFormIntegerQ,
    Quadrature,
}

/// The per-`q` constants of the lq-norm central limit theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MomentConstants {
    pub q: f64,
    pub mu_q: f64,
    pub mu_2q: f64,
    pub sigma_q_sq: f64,
    pub cov_e_absq: f64,
    pub method: MomentMethod,
}

impl MomentConstants {
    /// Closed forms when `q` and `2q` are small integers, quadrature otherwise.
    pub fn new(q: f64) -> Result<Self> {
        check_q(q)?;
        if q.fract() == 0.0 && 2.0 * q <= MAX_SUBFACTORIAL as f64 {
            let qi = q as u32;
            Ok(Self::assemble(
                q,
                mu_q_closed_form(qi)?,
                mu_q_closed_form(2 * qi)?,
                MomentMethod::ClosedFormIntegerQ,
            ))
        } else {
            Self::by_quadrature(q)
        }
    }

    pub fn by_quadrature(q: f64) -> Result<Self> {
        Ok(Self::assemble(
            q,
            mu_q(q)?,
            mu_q(2.0 * q)?,
            MomentMethod::Quadrature,
        ))
    }

    fn assemble(q: f64, mu: f64, mu_2q: f64, method: MomentMethod) -> Self {
        Self {
            q,
            mu_q: mu,
            mu_2q,
            sigma_q_sq: sigma_sq_from(q, mu, mu_2q),
            cov_e_absq: (q + 1.0) * mu - 1.0,
            method,
        }
    }

    pub fn sigma_q(&self) -> f64 {
        libm::sqrt(self.sigma_q_sq)
    }
}

/// `c_p = 1 / (2 p^{1/p} Γ(1 + 1/p))`, the normalization of `exp(-|y|^p / p)`.
pub fn c_p(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(1.0 / (2.0 * libm::pow(p, 1.0 / p) * libm::tgamma(1.0 + 1.0 / p)))
}

/// `M_1(q) = Γ(q + 1)`.
pub fn m1_q(q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(libm::tgamma(q + 1.0))
}

/// `C_1(q, q) = q^{-2} (Γ(2q + 1) / Γ(q + 1)² - 1) - 1`; informational only.
pub fn c1_qq(q: f64) -> Result<f64> {
    check_q(q)?;
    let g = libm::tgamma(q + 1.0);
    Ok((libm::tgamma(2.0 * q + 1.0) / (g * g) - 1.0) / (q * q) - 1.0)
}

/// The lp-ball comparison constants for a given `p` and `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpConstants {
    pub p: f64,
    pub q: f64,
    pub c_p: f64,
    pub m1_q: f64,
    pub c1_qq: f64,
}

impl LpConstants {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Ok(Self {
            p,
            q,
            c_p: c_p(p)?,
            m1_q: m1_q(q)?,
            c1_qq: c1_qq(q)?,
        })
    }
}

/// `∫_x^∞ exp(-y^p / p) dy` split as `exp(-x^p/p) · ∫_0^∞ exp(-((x+u)^p - x^p)/p) du`.
///
/// Returns `(log of the prefactor, inner integral)` so callers can work in
/// log space far into the tail.
fn pgen_tail_parts(p: f64, x: f64) -> Result<(f64, Integral)> {
    let xp_over_p = libm::pow(x, p) / p;
    let inner = integrate_to_infinity(
        |u| {
            let excess = if x > 0.0 {
                // (x+u)^p - x^p without cancellation for small u.
                libm::pow(x, p) * libm::expm1(p * libm::log1p(u / x))
            } else {
                libm::pow(u, p)
            };
            libm::exp(-excess / p)
        },
        0.0,
        Tolerance::new(1e-300, 1e-14),
    )?;
    Ok((-xp_over_p, inner))
}

/// `∫_x^∞ exp(-y^p / p) dy` by quadrature.
pub fn pgen_tail_integral(p: f64, x: f64) -> Result<Integral> {
    check_p(p)?;
    check_param(
        "x",
        x,
        x >= 0.0 && x.is_finite(),
        "must be finite and nonnegative",
    )?;
    let (log_prefactor, inner) = pgen_tail_parts(p, x)?;
    let scale = libm::exp(log_prefactor);
    Ok(Integral {
        value: scale * inner.value,
        error: scale * inner.error,
    })
}

/// `ln P[|Y| > m]` for a p-generalized Gaussian `Y`.
pub fn pgen_log_two_sided_tail(p: f64, m: f64) -> Result<f64> {
    check_p(p)?;
    let (log_prefactor, inner) = pgen_tail_parts(p, m)?;
    Ok(libm::log(2.0 * c_p(p)?) + log_prefactor + libm::log(inner.value))
}

/// The level `m_n(p)` with `P[|Y| > m_n(p)] = 1/n`, found by bisection.
pub fn m_n(p: f64, n: u64) -> Result<f64> {
    check_p(p)?;
    if n < 2 {
        return Err(Error::InvalidDimension(n as usize, 2));
    }
    let log_target = -libm::log(n as f64);
    let mut lo = 1e-6;
    let mut hi = 2.0 * libm::pow(p, 1.0 / p) * libm::pow(libm::log(n as f64), 1.0 / p) + 10.0;
    if pgen_log_two_sided_tail(p, lo)? < log_target || pgen_log_two_sided_tail(p, hi)? > log_target
    {
        return Err(Error::Numerical(alloc::format!(
            "m_n bracket [{lo}, {hi}] does not contain the root for p = {p}, n = {n}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * hi {
            return Ok(mid);
        }
        if pgen_log_two_sided_tail(p, mid)? > log_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(alloc::format!(
        "m_n bisection did not converge for p = {p}, n = {n}"
    )))
}

/// Bounds `x/(x^p + p) e^{-x^p/p} <= ∫_x^∞ e^{-y^p/p} dy <= x^{1-p} e^{-x^p/p}`
/// together with the quadrature value they enclose.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailSandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
}

impl TailSandwich {
    pub fn holds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

pub fn tail_sandwich(p: f64, x: f64) -> Result<TailSandwich> {
    check_p(p)?;
    check_param(
        "x",
        x,
        x > 0.0 && x.is_finite(),
        "must be finite and positive",
    )?;
    let xp = libm::pow(x, p);
    let weight = libm::exp(-xp / p);
    Ok(TailSandwich {
        lower: x / (xp + p) * weight,
        value: pgen_tail_integral(p, x)?.value,
        upper: weight / libm::pow(x, p - 1.0),
    })
}

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::PosInfinity)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => f.write_str("inf"),
        }
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInfinity => s.serialize_str("inf"),
        }
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = ExtReal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or \"inf\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> core::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> core::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> core::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> core::result::Result<ExtReal, E> {
                if v == "inf" {
                    Ok(ExtReal::PosInfinity)
                } else {
                    Err(E::invalid_value(serde::de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(Visitor)
    }
}

/// Which deviation principle a rate function belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RateKind {
    /// LDP of `(n / log n) ||Z_n||_∞`: `z - 1` on `[1, ∞)`.
    SimplexSup,
    /// MDP of the recentred sup-norm: `z` on `[0, ∞)`.
    Mdp,
    /// LDP of `(n / (p log n))^{1/p} ||Z_n||_∞` in the lp-ball: `z^p - 1` on `[1, ∞)`.
    LpSup,
}

pub fn rate_function(kind: RateKind, z: f64, p: Option<f64>) -> Result<ExtReal> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter {
            name: "z",
            value: z,
            reason: "must be finite",
        });
    }
    match (kind, p) {
        (RateKind::LpSup, None) => Err(Error::InvalidParameter {
            name: "p",
            value: f64::NAN,
            reason: "required for the lp-ball rate function",
        }),
        (RateKind::LpSup, Some(p)) => {
            check_p(p)?;
            Ok(if z >= 1.0 {
                ExtReal::Finite(libm::pow(z, p) - 1.0)
            } else {
                ExtReal::PosInfinity
            })
        }
        (_, Some(p)) => Err(Error::InvalidParameter {
            name: "p",
            value: p,
            reason: "only the lp-ball rate function takes p",
        }),
        (RateKind::SimplexSup, None) => Ok(if z >= 1.0 {
            ExtReal::Finite(z - 1.0)
        } else {
            ExtReal::PosInfinity
        }),
        (RateKind::Mdp, None) => Ok(if z >= 0.0 {
            ExtReal::Finite(z)
        } else {
            ExtReal::PosInfinity
        }),
    }
}
