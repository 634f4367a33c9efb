use std::time::Instant;

use simplex_core::constants::{rate_function, sigma_q_sq, ExtReal, MomentConstants, RateKind};
use simplex_core::oracle::{gumbel_surrogate_cdf, sup_surrogate_tail};
use simplex_core::sampling::fill_exponentials;
use simplex_core::statistics::{
    clt_statistic, equivalence_indicator, gaussian_cdf, general_central_moment_stat,
    general_clt_variance, gumbel_cdf, gumbel_statistic, ks_distance, ldp_statistic,
    lp_gumbel_statistic, lp_ldp_statistic, mdp_statistic, tail_log_prob, Direction,
    EmpiricalSample, Reference, StatisticKind,
};
use simplex_core::Error as CoreError;

use crate::parallel::{ball_samples, block_rng, run_blocks, simplex_samples};
use crate::tolerances as tol;
use crate::{ExperimentConfig, ExperimentKind, ExperimentReport, ReportRow, Result, Verdict};

/// Validates `config` and runs the experiment it names.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let rows = match config.kind {
        ExperimentKind::Clt => clt_rows(config)?,
        ExperimentKind::BerryEsseenSweep => berry_esseen_rows(config)?,
        ExperimentKind::Gumbel => gumbel_rows(config)?,
        ExperimentKind::Ldp => ldp_rows(config)?,
        ExperimentKind::Mdp => mdp_rows(config)?,
        ExperimentKind::LpLdp => lp_ldp_rows(config)?,
        ExperimentKind::LpGumbel => lp_gumbel_rows(config)?,
        ExperimentKind::EquivalenceDecay => equivalence_rows(config)?,
        ExperimentKind::GeneralClt => general_clt_rows(config)?,
    };
    Ok(ExperimentReport::new(
        config.clone(),
        rows,
        start.elapsed().as_secs_f64(),
    ))
}

fn run_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentReport> {
    if config.kind != kind {
        let mut c = config.clone();
        c.kind = kind;
        return run(&c);
    }
    run(config)
}

pub fn run_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Clt)
}

pub fn run_berry_esseen_sweep(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::BerryEsseenSweep)
}

pub fn run_gumbel(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Gumbel)
}

pub fn run_ldp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Ldp)
}

pub fn run_mdp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::Mdp)
}

pub fn run_lp_ldp(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::LpLdp)
}

pub fn run_lp_gumbel(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::LpGumbel)
}

pub fn run_equivalence_decay(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::EquivalenceDecay)
}

pub fn run_general_clt(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_kind(config, ExperimentKind::GeneralClt)
}

/// Accumulates rows for one experiment.
struct Rows {
    experiment: &'static str,
    rows: Vec<ReportRow>,
}

impl Rows {
    fn new(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind.name(),
            rows: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        n: u64,
        param: String,
        threshold: Option<f64>,
        estimate: ExtReal,
        theory: Option<ExtReal>,
        std_error: Option<f64>,
        verdict: Verdict,
    ) {
        self.rows.push(ReportRow {
            experiment: self.experiment.into(),
            n,
            param,
            threshold,
            estimate,
            theory,
            std_error,
            verdict,
        });
    }
}

fn fmt_param(x: f64) -> String {
    format!("{x}")
}

fn mean_se(s: &EmpiricalSample) -> f64 {
    (s.variance() / s.replicates() as f64).sqrt()
}

/// Standard error of an unbiased variance estimate under near-Gaussian data.
fn variance_se(s: &EmpiricalSample) -> f64 {
    s.variance() * (2.0 / (s.replicates() as f64 - 1.0)).sqrt()
}

fn kolmogorov_bound(s: &EmpiricalSample) -> f64 {
    tol::KOLMOGOROV_99 / (s.replicates() as f64).sqrt()
}

/// `+∞` when the tail is empty.
fn ext(x: Option<f64>) -> ExtReal {
    x.map_or(ExtReal::PosInfinity, ExtReal::Finite)
}

/// Verdict for a rate estimate against a finite or infinite theory value.
fn rate_verdict(estimate: Option<f64>, theory: ExtReal, band: (f64, f64)) -> Verdict {
    match (estimate, theory) {
        (None, _) => Verdict::EmptyTail,
        (Some(e), ExtReal::Finite(t)) => Verdict::from_check(e >= t + band.0 && e <= t + band.1),
        (Some(e), ExtReal::PosInfinity) => Verdict::from_check(e > tol::INFINITE_RATE_FLOOR),
    }
}

fn clt_samples(config: &ExperimentConfig, q: f64, n: u64) -> Result<EmpiricalSample> {
    let mc = MomentConstants::new(q)?;
    let stat = |z: &_| clt_statistic(z, q, &mc);
    let mut s = simplex_samples(
        config.seed,
        n,
        config.replicates,
        config.workers,
        StatisticKind::Clt,
        &[&stat],
    )?;
    Ok(s.remove(0))
}

fn gaussian_ks(s: &EmpiricalSample) -> Result<f64> {
    Ok(ks_distance(s, gaussian_cdf, Reference::Gaussian)?.ks_distance)
}

fn clt_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let q = config.q()?;
    let sigma2 = sigma_q_sq(q)?;
    let mut out = Rows::new(ExperimentKind::Clt);
    let mut ks_seq = Vec::new();
    for &n in &config.n_list {
        let s = clt_samples(config, q, n)?;
        let ks = gaussian_ks(&s)?;
        ks_seq.push((n, ks));
        let qs = fmt_param(q);
        out.push(
            n,
            format!("ks:q={qs}"),
            None,
            ExtReal::Finite(ks),
            Some(ExtReal::Finite(0.0)),
            Some(kolmogorov_bound(&s)),
            Verdict::from_check(ks <= tol::CLT_KS),
        );
        out.push(
            n,
            format!("mean:q={qs}"),
            None,
            ExtReal::Finite(s.mean()),
            Some(ExtReal::Finite(0.0)),
            Some(mean_se(&s)),
            Verdict::Info,
        );
        let var = s.variance() * sigma2;
        out.push(
            n,
            format!("variance:q={qs}"),
            None,
            ExtReal::Finite(var),
            Some(ExtReal::Finite(sigma2)),
            Some(variance_se(&s) * sigma2),
            Verdict::from_check((var / sigma2 - 1.0).abs() <= tol::CLT_VARIANCE_REL),
        );
    }
    push_ks_trend(&mut out, &ks_seq, &format!("q={}", fmt_param(q)));
    Ok(out.rows)
}

/// Change of the KS distance from the smallest to the largest dimension.
fn push_ks_trend(out: &mut Rows, seq: &[(u64, f64)], detail: &str) {
    let (Some(first), Some(last)) = (
        seq.iter().min_by_key(|s| s.0),
        seq.iter().max_by_key(|s| s.0),
    ) else {
        return;
    };
    if first.0 == last.0 {
        return;
    }
    out.push(
        last.0,
        format!("ks_change:{detail};from={}", first.0),
        None,
        ExtReal::Finite(last.1 - first.1),
        None,
        None,
        Verdict::from_check(last.1 < first.1),
    );
}

fn berry_esseen_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let q = config.q()?;
    let qs = fmt_param(q);
    let mut out = Rows::new(ExperimentKind::BerryEsseenSweep);
    let mut sweep = Vec::new();
    for &n in &config.n_list {
        let s = clt_samples(config, q, n)?;
        let d = gaussian_ks(&s)?;
        out.push(
            n,
            format!("ks:q={qs}"),
            None,
            ExtReal::Finite(d),
            Some(ExtReal::Finite(0.0)),
            Some(kolmogorov_bound(&s)),
            Verdict::from_check((0.0..=1.0).contains(&d)),
        );
        sweep.push((n, d * (n as f64).sqrt() / (n as f64).ln()));
    }
    let base = sweep.iter().min_by_key(|s| s.0).map(|s| s.1).unwrap_or(0.0);
    let bound = tol::BERRY_ESSEEN_RATIO * base;
    for (n, ratio) in sweep {
        out.push(
            n,
            format!("ratio:q={qs}"),
            Some(bound),
            ExtReal::Finite(ratio),
            None,
            None,
            Verdict::from_check(ratio <= bound),
        );
    }
    Ok(out.rows)
}

fn gumbel_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let mut out = Rows::new(ExperimentKind::Gumbel);
    let median = -(2f64.ln()).ln();
    let mut ks_seq = Vec::new();
    for &n in &config.n_list {
        let stat = |z: &_| gumbel_statistic(z);
        let s = simplex_samples(
            config.seed,
            n,
            config.replicates,
            config.workers,
            StatisticKind::Gumbel,
            &[&stat],
        )?
        .remove(0);
        let ks = ks_distance(&s, gumbel_cdf, Reference::Gumbel)?.ks_distance;
        ks_seq.push((n, ks));
        out.push(
            n,
            "ks:".into(),
            None,
            ExtReal::Finite(ks),
            Some(ExtReal::Finite(0.0)),
            Some(kolmogorov_bound(&s)),
            Verdict::from_check(ks <= tol::GUMBEL_KS),
        );
        // Asymptotic standard error of the median: 1 / (2 f(m) √m) with f(m) = ln 2 / 2.
        let median_se = 1.0 / (2f64.ln() * (s.replicates() as f64).sqrt());
        out.push(
            n,
            "median:".into(),
            None,
            ExtReal::Finite(s.median()),
            Some(ExtReal::Finite(median)),
            Some(median_se),
            Verdict::from_check((s.median() - median).abs() <= tol::GUMBEL_MEDIAN),
        );
    }
    push_ks_trend(&mut out, &ks_seq, "");
    for &n in &config.oracle_n_list {
        for &x in &config.thresholds {
            let f = gumbel_surrogate_cdf(n, x)?;
            let g = gumbel_cdf(x);
            out.push(
                n,
                "oracle_cdf:".into(),
                Some(x),
                ExtReal::Finite(f.value),
                Some(ExtReal::Finite(g)),
                Some(f.error_bound),
                Verdict::from_check((f.value - g).abs() + f.error_bound <= tol::GUMBEL_ORACLE),
            );
        }
    }
    Ok(out.rows)
}

fn direction_of(z: f64, lower_edge: f64) -> (Direction, &'static str) {
    if z >= lower_edge {
        (Direction::Above, "above")
    } else {
        (Direction::Below, "below")
    }
}

/// Rows for one Monte Carlo sample of a deviation statistic.
#[allow(clippy::too_many_arguments)]
fn push_rate_rows(
    out: &mut Rows,
    s: &EmpiricalSample,
    n: u64,
    speed: f64,
    thresholds: &[f64],
    lower_edge: f64,
    theory: impl Fn(f64) -> Result<ExtReal>,
    band: (f64, f64),
) -> Result<()> {
    for &z in thresholds {
        let (dir, label) = direction_of(z, lower_edge);
        let est = tail_log_prob(s, z, speed, dir)?;
        let t = theory(z)?;
        out.push(
            n,
            format!("rate:{label}"),
            Some(z),
            ext(est.normalized_log_prob),
            Some(t),
            est.std_error,
            rate_verdict(est.normalized_log_prob, t, band),
        );
    }
    Ok(())
}

/// `-(1/speed) log p`, or `None` for an exact zero.
fn oracle_rate(p: f64, speed: f64) -> Option<f64> {
    (p > 0.0).then(|| -p.ln() / speed)
}

/// Propagates the oracle's absolute error bound through `-(1/speed) log p`.
fn oracle_rate_bound(p: f64, bound: f64, speed: f64) -> Option<f64> {
    (p > bound).then(|| (p / (p - bound)).ln() / speed)
}

fn ldp_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let mut out = Rows::new(ExperimentKind::Ldp);
    let theory = |z: f64| Ok(rate_function(RateKind::SimplexSup, z, None)?);
    for &n in &config.n_list {
        let stat = |z: &_| ldp_statistic(z);
        let s = simplex_samples(
            config.seed,
            n,
            config.replicates,
            config.workers,
            StatisticKind::Ldp,
            &[&stat],
        )?
        .remove(0);
        push_rate_rows(
            &mut out,
            &s,
            n,
            (n as f64).ln(),
            &config.thresholds,
            1.0,
            theory,
            tol::LDP_BAND,
        )?;
    }
    // The surrogate only bounds the lower tail of the sup-norm, so oracle rows cover z >= 1.
    for &z in config.thresholds.iter().filter(|z| **z >= 1.0) {
        let t = theory(z)?;
        let mut gaps = Vec::new();
        for &n in &config.oracle_n_list {
            let speed = (n as f64).ln();
            let r = sup_surrogate_tail(n, z, true)?;
            let rate = oracle_rate(r.value, speed);
            out.push(
                n,
                "oracle_rate:above".into(),
                Some(z),
                ext(rate),
                Some(t),
                oracle_rate_bound(r.value, r.error_bound, speed),
                rate_verdict(rate, t, tol::LDP_BAND),
            );
            gaps.push((n, rate.map_or(f64::INFINITY, |e| (e - t.to_f64()).abs())));
        }
        gaps.sort_by_key(|g| g.0);
        if let Some(&(n_max, gap)) = gaps.last() {
            let monotone = gaps.windows(2).all(|w| w[1].1 <= w[0].1);
            out.push(
                n_max,
                "oracle_gap:above".into(),
                Some(z),
                ExtReal::Finite(gap),
                Some(ExtReal::Finite(0.0)),
                None,
                Verdict::from_check(monotone && gap <= tol::LDP_ORACLE_GAP),
            );
        }
    }
    Ok(out.rows)
}

fn mdp_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let mut out = Rows::new(ExperimentKind::Mdp);
    let theory = |x: f64| Ok(rate_function(RateKind::Mdp, x, None)?);
    let band = (-tol::MDP_BAND, tol::MDP_BAND);
    for &n in &config.n_list {
        let s_n = config.s_n(n)?;
        let stat = move |z: &_| mdp_statistic(z, s_n);
        let s = simplex_samples(
            config.seed,
            n,
            config.replicates,
            config.workers,
            StatisticKind::Mdp,
            &[&stat],
        )?
        .remove(0);
        push_rate_rows(&mut out, &s, n, s_n, &config.thresholds, 0.0, theory, band)?;
    }
    for &n in &config.oracle_n_list {
        let s_n = config.s_n(n)?;
        let ln = (n as f64).ln();
        for &x in &config.thresholds {
            let t = theory(x)?;
            let (_, label) = direction_of(x, 0.0);
            let r = sup_surrogate_tail(n, 1.0 + x * s_n / ln, x >= 0.0)?;
            let (rate, verdict) = if x >= 0.0 {
                let rate = oracle_rate(r.value, s_n);
                (rate, rate_verdict(rate, t, band))
            } else {
                // Worst case over the error bound; the sup-norm tail is no larger than this.
                let upper = r.value + r.error_bound;
                let rate = oracle_rate(upper, s_n);
                (rate, rate_verdict(rate, t, band))
            };
            out.push(
                n,
                format!("oracle_rate:{label}"),
                Some(x),
                ext(rate),
                Some(t),
                oracle_rate_bound(r.value, r.error_bound, s_n),
                verdict,
            );
        }
    }
    Ok(out.rows)
}

fn push_membership(out: &mut Rows, n: u64, p: f64, outside: usize, replicates: usize) {
    out.push(
        n,
        format!("outside_ball:p={}", fmt_param(p)),
        None,
        ExtReal::Finite(outside as f64),
        Some(ExtReal::Finite(0.0)),
        None,
        Verdict::from_check(outside == 0 && replicates > 0),
    );
}

fn lp_ldp_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let p = config.p()?;
    let mut out = Rows::new(ExperimentKind::LpLdp);
    let theory = |z: f64| Ok(rate_function(RateKind::LpSup, z, Some(p))?);
    for &n in &config.n_list {
        let stat = move |y: &_| lp_ldp_statistic(y, p);
        let b = ball_samples(
            config.seed,
            n,
            p,
            config.replicates,
            config.workers,
            StatisticKind::LpLdp,
            &[&stat],
        )?;
        push_membership(&mut out, n, p, b.outside, config.replicates);
        let s = &b.samples[0];
        push_rate_rows(
            &mut out,
            s,
            n,
            (n as f64).ln(),
            &config.thresholds,
            1.0,
            theory,
            tol::LP_LDP_BAND,
        )?;
    }
    Ok(out.rows)
}

fn lp_gumbel_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let p = config.p()?;
    let mut out = Rows::new(ExperimentKind::LpGumbel);
    for &n in &config.n_list {
        let stat = |y: &_| lp_gumbel_statistic(y);
        let b = ball_samples(
            config.seed,
            n,
            p,
            config.replicates,
            config.workers,
            StatisticKind::LpGumbel,
            &[&stat],
        )?;
        push_membership(&mut out, n, p, b.outside, config.replicates);
        let s = &b.samples[0];
        let ks = ks_distance(s, gumbel_cdf, Reference::Gumbel)?.ks_distance;
        out.push(
            n,
            "ks:p=1".into(),
            None,
            ExtReal::Finite(ks),
            Some(ExtReal::Finite(0.0)),
            Some(kolmogorov_bound(s)),
            Verdict::from_check(ks <= tol::LP_GUMBEL_KS),
        );
    }
    Ok(out.rows)
}

fn equivalence_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let mut out = Rows::new(ExperimentKind::EquivalenceDecay);
    let mut previous: Option<(f64, f64)> = None;
    let m = config.replicates as f64;
    for &n in &config.n_list {
        let hits: Vec<usize> = run_blocks(config.replicates, config.workers, |b, count| {
            let mut rng = block_rng(config.seed, n, b);
            let mut e = vec![0.0; n as usize];
            let mut hits = 0usize;
            for _ in 0..count {
                fill_exponentials(&mut rng, &mut e);
                hits += usize::from(equivalence_indicator(&e)?);
            }
            Ok(hits)
        })?;
        let freq = hits.iter().sum::<usize>() as f64 / m;
        let se = (freq * (1.0 - freq) / m).sqrt();
        let ok = previous.map_or(true, |(prev, prev_se)| {
            freq <= prev + tol::EQUIVALENCE_SE * (se * se + prev_se * prev_se).sqrt()
        });
        out.push(
            n,
            "frequency:".into(),
            None,
            ExtReal::Finite(freq),
            Some(ExtReal::Finite(0.0)),
            Some(se),
            Verdict::from_check(ok),
        );
        if n >= tol::EQUIVALENCE_BOUND_N {
            out.push(
                n,
                "bound:".into(),
                Some(tol::EQUIVALENCE_BOUND),
                ExtReal::Finite(freq),
                Some(ExtReal::Finite(0.0)),
                Some(se),
                Verdict::from_check(freq <= tol::EQUIVALENCE_BOUND),
            );
        }
        previous = Some((freq, se));
    }
    Ok(out.rows)
}

fn general_clt_rows(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let q = config.q()?;
    let source = config.source.expect("validated");
    let detail = format!("q={};source={}", fmt_param(q), source_name(source));
    let mut out = Rows::new(ExperimentKind::GeneralClt);
    let mean = source.mean();
    let mq = source.expect(|x| (x - mean).abs().powf(q), mean)?;
    let theory = match general_clt_variance(source, q) {
        Ok(v) => Ok(v),
        Err(CoreError::DegenerateVariance(v)) => Err(v),
        Err(e) => return Err(e.into()),
    };
    for &n in &config.n_list {
        let blocks = run_blocks(config.replicates, config.workers, |b, count| {
            let mut rng = block_rng(config.seed, n, b);
            let mut data = vec![0.0; n as usize];
            (0..count)
                .map(|_| {
                    data.iter_mut().for_each(|x| *x = source.sample(&mut rng));
                    Ok(general_central_moment_stat(&data, q, mq)?)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        let s = EmpiricalSample::from_blocks(
            blocks,
            n as usize,
            StatisticKind::GeneralClt,
            config.seed,
        )?;
        let var = s.variance();
        let sigma2 = match theory {
            Ok(v) => v,
            Err(v) => {
                out.push(
                    n,
                    format!("variance:{detail}"),
                    None,
                    ExtReal::Finite(var),
                    Some(ExtReal::Finite(v)),
                    Some(variance_se(&s)),
                    Verdict::Fail,
                );
                continue;
            }
        };
        out.push(
            n,
            format!("variance:{detail}"),
            None,
            ExtReal::Finite(var),
            Some(ExtReal::Finite(sigma2)),
            Some(variance_se(&s)),
            Verdict::from_check((var / sigma2 - 1.0).abs() <= tol::GENERAL_VARIANCE_REL),
        );
        let sd = var.sqrt();
        let studentized = s.map(|v| v / sd)?;
        let ks = gaussian_ks(&studentized)?;
        out.push(
            n,
            format!("studentized_ks:{detail}"),
            None,
            ExtReal::Finite(ks),
            Some(ExtReal::Finite(0.0)),
            Some(kolmogorov_bound(&studentized)),
            Verdict::from_check(ks <= tol::GENERAL_KS),
        );
        let se = mean_se(&studentized);
        out.push(
            n,
            format!("studentized_mean:{detail}"),
            None,
            ExtReal::Finite(studentized.mean()),
            Some(ExtReal::Finite(0.0)),
            Some(se),
            Verdict::from_check(studentized.mean().abs() <= tol::MEAN_SE * se),
        );
    }
    Ok(out.rows)
}

fn source_name(s: simplex_core::statistics::SourceDistribution) -> &'static str {
    match s {
        simplex_core::statistics::SourceDistribution::Exponential => "exponential",
        simplex_core::statistics::SourceDistribution::Uniform01 => "uniform01",
    }
}
