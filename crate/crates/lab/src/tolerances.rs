//! Pass/fail bands for the finite-n checks.
//!
//! The limit theorems behind the experiments converge at speed `log n` or
//! slower, so most bands are wide and one-sided towards the direction the
//! finite-n bias pushes.

/// Largest KS distance to the standard Gaussian for the lq-norm CLT.
pub const CLT_KS: f64 = 0.02;
/// Relative error allowed on `σ_q²`.
pub const CLT_VARIANCE_REL: f64 = 0.05;
/// `D_n √n / log n` may grow at most by this factor over the sweep.
pub const BERRY_ESSEEN_RATIO: f64 = 2.0;

pub const GUMBEL_KS: f64 = 0.05;
/// Distance from the Gumbel median `-log log 2`.
pub const GUMBEL_MEDIAN: f64 = 0.1;
/// Largest gap between the exact max-spacing CDF and `exp(-e^{-x})`.
pub const GUMBEL_ORACLE: f64 = 0.01;

/// Band `[theory + lo, theory + hi]` for sup-norm LDP rate estimates. The
/// finite-n rate sits above the limit and approaches it from there.
pub const LDP_BAND: (f64, f64) = (-0.2, 0.3);
/// Gap to the limiting rate allowed at the largest oracle dimension.
pub const LDP_ORACLE_GAP: f64 = 0.1;
/// A normalized log-probability above this counts as `+∞` behaviour.
pub const INFINITE_RATE_FLOOR: f64 = 3.0;

/// Half-width of the band around the MDP rate `x`.
pub const MDP_BAND: f64 = 0.4;

/// Band for the lp-ball LDP rate `z^p - 1`.
pub const LP_LDP_BAND: (f64, f64) = (-0.39, 0.51);
pub const LP_GUMBEL_KS: f64 = 0.05;

/// Slack, in binomial standard errors, for the decay of the equivalence frequency.
pub const EQUIVALENCE_SE: f64 = 3.0;
pub const EQUIVALENCE_BOUND: f64 = 1e-4;
/// Dimensions at or above this must meet [`EQUIVALENCE_BOUND`].
pub const EQUIVALENCE_BOUND_N: u64 = 100;

pub const GENERAL_VARIANCE_REL: f64 = 0.10;
pub const GENERAL_KS: f64 = 0.05;

/// Allowed distance of a Monte Carlo mean from its target, in standard errors.
pub const MEAN_SE: f64 = 4.0;
/// `P[sup |F̂ - F| > 1.63 / √m] ≈ 0.01` for the Kolmogorov distribution.
pub const KOLMOGOROV_99: f64 = 1.63;
