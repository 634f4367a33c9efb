//! Block-parallel replicate generation.

use rayon::prelude::*;
use simplex_core::sampling::{
    sample_simplex, Construction, LpBallSampler, RandomStream, StreamRng,
};
use simplex_core::statistics::{lq_norm, EmpiricalSample, StatisticKind};
use simplex_core::{LpBallPoint, SimplexPoint};

use crate::Result;

/// Replicates per block. Fixed, so the partition never depends on `workers`.
pub const BLOCK_SIZE: usize = 4096;

/// Substream of block `block` at dimension `n`.
pub fn stream_id(n: u64, block: u64) -> u64 {
    debug_assert!(n < 1 << 32 && block < 1 << 32);
    (n << 32) | block
}

pub fn block_rng(seed: u64, n: u64, block: u64) -> StreamRng {
    RandomStream::with_stream(seed, stream_id(n, block)).rng()
}

/// Runs `f(block, count)` over all blocks on a pool of `workers` threads and
/// returns the results in block order.
pub fn run_blocks<T, F>(replicates: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, usize) -> Result<T> + Sync,
{
    let blocks = replicates.div_ceil(BLOCK_SIZE);
    let count = |b: usize| BLOCK_SIZE.min(replicates - b * BLOCK_SIZE);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(|b| f(b as u64, count(b)))
            .collect()
    })
}

pub type SimplexStat<'a> = &'a (dyn Fn(&SimplexPoint) -> simplex_core::Result<f64> + Sync);
pub type BallStat<'a> = &'a (dyn Fn(&LpBallPoint) -> simplex_core::Result<f64> + Sync);

/// Merges per-block columns into one sorted sample per statistic.
fn merge(
    blocks: Vec<Vec<Vec<f64>>>,
    columns: usize,
    n: u64,
    kind: StatisticKind,
    seed: u64,
) -> Result<Vec<EmpiricalSample>> {
    let mut per_stat: Vec<Vec<Vec<f64>>> = (0..columns)
        .map(|_| Vec::with_capacity(blocks.len()))
        .collect();
    for block in blocks {
        for (dst, col) in per_stat.iter_mut().zip(block) {
            dst.push(col);
        }
    }
    per_stat
        .into_iter()
        .map(|cols| Ok(EmpiricalSample::from_blocks(cols, n as usize, kind, seed)?))
        .collect()
}

/// Draws centered simplex points and evaluates every statistic on each.
pub fn simplex_samples(
    seed: u64,
    n: u64,
    replicates: usize,
    workers: usize,
    kind: StatisticKind,
    stats: &[SimplexStat<'_>],
) -> Result<Vec<EmpiricalSample>> {
    let blocks = run_blocks(replicates, workers, |b, count| {
        let mut rng = block_rng(seed, n, b);
        let mut point = sample_simplex(&mut rng, n as usize, true, Construction::Exponential)?;
        let mut cols: Vec<Vec<f64>> = stats.iter().map(|_| Vec::with_capacity(count)).collect();
        for r in 0..count {
            if r > 0 {
                point.resample(&mut rng);
            }
            for (col, stat) in cols.iter_mut().zip(stats) {
                col.push(stat(&point)?);
            }
        }
        Ok(cols)
    })?;
    merge(blocks, stats.len(), n, kind, seed)
}

/// Ball samples plus the number of points that fell outside the unit lp-ball.
pub struct BallSamples {
    pub samples: Vec<EmpiricalSample>,
    pub outside: usize,
}

pub fn ball_samples(
    seed: u64,
    n: u64,
    p: f64,
    replicates: usize,
    workers: usize,
    kind: StatisticKind,
    stats: &[BallStat<'_>],
) -> Result<BallSamples> {
    let blocks = run_blocks(replicates, workers, |b, count| {
        let mut rng = block_rng(seed, n, b);
        let mut sampler = LpBallSampler::new(n as usize, p)?;
        let mut cols: Vec<Vec<f64>> = stats.iter().map(|_| Vec::with_capacity(count)).collect();
        let mut outside = 0usize;
        for _ in 0..count {
            let point = sampler.sample(&mut rng);
            if lq_norm(point.coords(), p)? > 1.0 {
                outside += 1;
            }
            for (col, stat) in cols.iter_mut().zip(stats) {
                col.push(stat(point)?);
            }
        }
        Ok((cols, outside))
    })?;
    let outside = blocks.iter().map(|(_, o)| o).sum();
    let cols = blocks.into_iter().map(|(c, _)| c).collect();
    Ok(BallSamples {
        samples: merge(cols, stats.len(), n, kind, seed)?,
        outside,
    })
}
