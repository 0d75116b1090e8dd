//! The log-speed random walk `S_n = ln V_n`, its ascending ladder heights and
//! the stationary overshoot law.
//!
//! Under the conditioned law the walk drifts to `+∞`. Its strict ascending
//! ladder heights are i.i.d., and the overshoot over a high level converges
//! to the law with density `P(H₁ > y) / E[H₁]`. That law is realized exactly
//! (given a table of ladder heights) as `U · H*`, with `H*` size-biased.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::ModelParams;
use crate::error::{Error, Result};
use crate::rng;
use crate::skeleton::{sample_tilted_v, sample_v};

/// Walk steps allowed while searching for one ladder epoch or level crossing.
pub const STEP_CAP: usize = 10_000_000;

/// Default number of ladder heights in a table.
pub const DEFAULT_TABLE_SIZE: usize = 100_000;

/// Default crossing level as a multiple of the conditioned drift.
pub const LEVEL_DRIFTS: f64 = 20.0;

/// One increment `ln(c · ρ)` of the log-speed walk.
pub fn walk_increment<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams, tilted: bool) -> Result<f64> {
    let v = if tilted {
        sample_tilted_v(rng, params)?
    } else {
        sample_v(rng)?
    };
    Ok((params.c * v).ln())
}

pub fn walk_increments<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams, n: usize, tilted: bool) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one increment".into()));
    }
    (0..n).map(|_| walk_increment(rng, params, tilted)).collect()
}

/// Strict ascending ladder heights `H₁ < H₂ < ...` of the conditioned walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderSample {
    /// Cumulative heights `H_j = S_{n_j}`.
    pub heights: Vec<f64>,
    /// Ladder epochs `n_j`.
    pub epochs: Vec<usize>,
    /// Mean ladder increment.
    pub mu_h_hat: f64,
}

impl LadderSample {
    /// The i.i.d. ladder increments `H_j − H_{j−1}`.
    pub fn increments(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.heights
            .iter()
            .map(|&h| {
                let d = h - prev;
                prev = h;
                d
            })
            .collect()
    }

    /// Mean walk increment over the steps used, `H_last / n_last`.
    pub fn walk_mean(&self) -> f64 {
        match (self.heights.last(), self.epochs.last()) {
            (Some(h), Some(&n)) => h / n as f64,
            _ => f64::NAN,
        }
    }
}

/// Run the conditioned walk until it has produced `n_ladders` ladder heights.
pub fn ladder_heights<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams, n_ladders: usize) -> Result<LadderSample> {
    if n_ladders == 0 {
        return Err(Error::InvalidArgument("need at least one ladder height".into()));
    }
    let mut heights = Vec::with_capacity(n_ladders);
    let mut epochs = Vec::with_capacity(n_ladders);
    let (mut s, mut record, mut n) = (0.0, 0.0, 0usize);
    while heights.len() < n_ladders {
        let mut searched = 0;
        loop {
            s += walk_increment(rng, params, true)?;
            n += 1;
            searched += 1;
            if s > record {
                break;
            }
            if searched >= STEP_CAP {
                return Err(Error::StepCap(STEP_CAP));
            }
        }
        record = s;
        heights.push(s);
        epochs.push(n);
    }
    let mu_h_hat = record / n_ladders as f64;
    Ok(LadderSample {
        heights,
        epochs,
        mu_h_hat,
    })
}

/// Overshoots `S_τ − level` over a fixed level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvershootSample {
    pub values: Vec<f64>,
    pub level: f64,
}

/// First passage of the conditioned walk (from 0) above a level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub overshoot: f64,
    pub steps: usize,
    /// Largest value of the walk before it first exceeded `level − margin`.
    pub early_max: f64,
}

/// Walk from 0 until the first value above `level`, tracking the running
/// maximum up to the first passage above `level − margin`.
pub fn cross_level<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams, level: f64, margin: f64) -> Result<Crossing> {
    let (mut s, mut steps) = (0.0f64, 0usize);
    let mut early_max = 0.0f64;
    let mut early_done = level - margin < 0.0;
    while s <= level {
        if steps >= STEP_CAP {
            return Err(Error::StepCap(STEP_CAP));
        }
        s += walk_increment(rng, params, true)?;
        steps += 1;
        if !early_done {
            if s > level - margin {
                early_done = true;
            } else {
                early_max = early_max.max(s);
            }
        }
    }
    Ok(Crossing {
        overshoot: s - level,
        steps,
        early_max,
    })
}

pub fn overshoot_at_level<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams, level: f64, n: usize) -> Result<OvershootSample> {
    check_level(level, n)?;
    let values = (0..n)
        .map(|_| cross_level(rng, params, level, 0.0).map(|c| c.overshoot))
        .collect::<Result<_>>()?;
    Ok(OvershootSample { values, level })
}

/// `n` crossings in parallel, crossing `i` on stream `i` of `seed`.
pub fn crossing_batch(params: &ModelParams, level: f64, margin: f64, n: usize, seed: u64) -> Result<Vec<Crossing>> {
    check_level(level, n)?;
    (0..n)
        .into_par_iter()
        .map(|i| cross_level(&mut rng::stream(seed, i as u64), params, level, margin))
        .collect()
}

fn check_level(level: f64, n: usize) -> Result<()> {
    if !(level >= 0.0 && level.is_finite()) || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "need a finite level ≥ 0 and n ≥ 1 (got {level}, {n})"
        )));
    }
    Ok(())
}

/// Frozen table of ladder increments, the input of the stationary overshoot sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderTable {
    increments: Vec<f64>,
    cumulative: Vec<f64>,
}

impl LadderTable {
    pub fn from_increments(increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::EmptyTable);
        }
        if let Some(bad) = increments.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(Error::InvalidArgument(format!("ladder heights must be positive, found {bad}")));
        }
        let mut total = 0.0;
        let cumulative = increments
            .iter()
            .map(|h| {
                total += h;
                total
            })
            .collect();
        Ok(Self {
            increments,
            cumulative,
        })
    }

    /// Table of `size` ladder increments of the conditioned walk, drawn from stream 0 of `seed`.
    pub fn build(params: &ModelParams, size: usize, seed: u64) -> Result<Self> {
        let sample = ladder_heights(&mut rng::stream(seed, 0), params, size)?;
        Self::from_increments(sample.increments())
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(f64::NAN) / self.len() as f64
    }

    /// `E[H²] / (2 E[H])`, the mean of the stationary overshoot law.
    pub fn overshoot_mean(&self) -> f64 {
        let m2 = self.increments.iter().map(|h| h * h).sum::<f64>() / self.len() as f64;
        m2 / (2.0 * self.mean())
    }

    /// A table entry picked with probability proportional to its value.
    pub fn sample_size_biased<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("table is never empty");
        let target = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= target);
        self.increments[i.min(self.len() - 1)]
    }

    /// A draw from the stationary overshoot law `P(H₁ > y) dy / E[H₁]`.
    pub fn sample_overshoot<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let h = self.sample_size_biased(rng);
        rng.random::<f64>() * h
    }

    /// Cache file name for a table built with [`LadderTable::build`].
    pub fn cache_path(dir: &Path, c: f64, seed: u64, size: usize) -> PathBuf {
        dir.join(format!("ladder_c{c}_seed{seed}_n{size}.csv"))
    }

    /// Write the increments as a one-column CSV.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "ladder_height")?;
        for h in &self.increments {
            writeln!(out, "{h}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let h = line
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Io(format!("{}:{}: {e}", path.display(), i + 1)))?;
            values.push(h);
        }
        Self::from_increments(values)
    }

    /// Load the table from `dir` if cached there, otherwise build and cache it.
    pub fn build_cached(dir: &Path, params: &ModelParams, size: usize, seed: u64) -> Result<Self> {
        let path = Self::cache_path(dir, params.c, seed, size);
        if path.exists() {
            if let Ok(table) = Self::load_csv(&path) {
                if table.len() == size {
                    return Ok(table);
                }
            }
        }
        let table = Self::build(params, size, seed)?;
        std::fs::create_dir_all(dir)?;
        table.save_csv(&path)?;
        Ok(table)
    }
}

/// Stationary overshoot draw; errors if the table was never filled.
pub fn stationary_overshoot_sampler<R: Rng + ?Sized>(rng: &mut R, table: Option<&LadderTable>) -> Result<f64> {
    table.map(|t| t.sample_overshoot(rng)).ok_or(Error::EmptyTable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn increments_have_the_right_means() {
        let p = ModelParams::reference();
        let mut rng = rng::stream(1, 0);
        let killed = walk_increments(&mut rng, &p, 1_000_000, false).unwrap();
        let (m, se) = stats::mean_and_stderr(&killed);
        assert!((m - p.drift).abs() < 3.0 * se, "{m}");
        let tilted = walk_increments(&mut rng, &p, 1_000_000, true).unwrap();
        let (m, se) = stats::mean_and_stderr(&tilted);
        assert!((m - p.mu_up).abs() < 3.0 * se, "{m}");
        let again = walk_increments(&mut rng::stream(1, 0), &p, 10, false).unwrap();
        assert_eq!(&killed[..10], &again[..]);
    }

    #[test]
    fn ladder_structure() {
        let p = ModelParams::reference();
        let sample = ladder_heights(&mut rng::stream(2, 0), &p, 20_000).unwrap();
        assert!(sample.heights.windows(2).all(|w| w[1] > w[0]));
        assert!(sample.epochs.windows(2).all(|w| w[1] > w[0]));
        assert!(sample.heights[0] > 0.0);
        assert!(sample.mu_h_hat >= sample.walk_mean());
        assert!(sample.mu_h_hat >= p.mu_up * 0.95);
        let inc = sample.increments();
        let (a, b) = inc.split_at(inc.len() / 2);
        assert!(stats::ks_two_sample(a, b).unwrap().p_value > 0.01);
    }

    #[test]
    fn overshoot_is_level_free_and_matches_renewal_mean() {
        let p = ModelParams::reference();
        let level = LEVEL_DRIFTS * p.mu_up;
        let at = |l: f64, seed: u64| -> Vec<f64> {
            crossing_batch(&p, l, 0.0, 10_000, seed)
                .unwrap()
                .iter()
                .map(|c| c.overshoot)
                .collect()
        };
        let low = at(level, 3);
        let high = at(2.0 * level, 4);
        assert!(low.iter().all(|&o| o >= 0.0));
        assert!(stats::ks_two_sample(&low, &high).unwrap().p_value > 0.01);

        let table = LadderTable::build(&p, DEFAULT_TABLE_SIZE, 5).unwrap();
        let (m, se) = stats::mean_and_stderr(&high);
        // delta-method error of E[H²]/(2E[H]) from the table
        let h = table.increments();
        let n = h.len() as f64;
        let m1 = table.mean();
        let m2 = h.iter().map(|x| x * x).sum::<f64>() / n;
        let r = m2 / (2.0 * m1);
        let influence: Vec<f64> = h.iter().map(|x| (x * x - m2) / (2.0 * m1) - r * (x - m1) / m1).collect();
        let se_table = stats::std_dev(&influence) / n.sqrt();
        let joint = (se * se + se_table * se_table).sqrt();
        assert!((m - r).abs() < 3.0 * joint, "{m} vs {r} (joint se {joint})");

        // the density of a stationary overshoot is a survival function, hence nonincreasing
        let width = 0.5;
        let mut hist = [0usize; 6];
        for o in &high {
            let b = (o / width) as usize;
            if b < hist.len() {
                hist[b] += 1;
            }
        }
        for w in hist.windows(2) {
            let slack = 3.0 * (w[0] as f64 + w[1] as f64).sqrt();
            assert!(w[1] as f64 <= w[0] as f64 + slack, "{hist:?}");
        }
    }

    #[test]
    fn size_biased_sampler_matches_level_crossing() {
        let p = ModelParams::reference();
        let table = LadderTable::build(&p, DEFAULT_TABLE_SIZE, 6).unwrap();
        let mut rng = rng::stream(7, 0);
        let stationary: Vec<f64> = (0..10_000).map(|_| table.sample_overshoot(&mut rng)).collect();
        assert!(stationary.iter().all(|&o| o >= 0.0));
        let crossing: Vec<f64> = crossing_batch(&p, 2.0 * LEVEL_DRIFTS * p.mu_up, 0.0, 10_000, 8)
            .unwrap()
            .iter()
            .map(|c| c.overshoot)
            .collect();
        assert!(stats::ks_two_sample(&stationary, &crossing).unwrap().p_value > 0.01);
    }

    #[test]
    fn degenerate_table_gives_uniform() {
        let table = LadderTable::from_increments(vec![2.0; 10]).unwrap();
        let mut rng = rng::stream(9, 0);
        let draws: Vec<f64> = (0..5000).map(|_| table.sample_overshoot(&mut rng)).collect();
        assert!(stats::ks_test(&draws, |y| (y / 2.0).clamp(0.0, 1.0)).unwrap().p_value > 0.01);
        assert_eq!(LadderTable::from_increments(vec![]), Err(Error::EmptyTable));
        assert_eq!(stationary_overshoot_sampler(&mut rng, None), Err(Error::EmptyTable));
    }

    #[test]
    fn overshoot_forgets_the_early_walk() {
        let p = ModelParams::reference();
        let mut rng = rng::stream(10, 0);
        let pilot = walk_increments(&mut rng, &p, 100_000, true).unwrap();
        let d = pilot.iter().cloned().fold(f64::MIN, f64::max);
        let level = 100.0 * p.mu_up;
        let crossings = crossing_batch(&p, level, d, 10_000, 11).unwrap();
        let o: Vec<f64> = crossings.iter().map(|c| c.overshoot).collect();
        let m: Vec<f64> = crossings.iter().map(|c| c.early_max).collect();
        assert!(stats::correlation(&o, &m).abs() < 0.05);
    }

    #[test]
    fn csv_cache_roundtrip() {
        let p = ModelParams::reference();
        let dir = std::env::temp_dir().join(format!("ladder-cache-{}", std::process::id()));
        let built = LadderTable::build_cached(&dir, &p, 500, 12).unwrap();
        let path = LadderTable::cache_path(&dir, p.c, 12, 500);
        assert!(path.exists());
        let loaded = LadderTable::build_cached(&dir, &p, 500, 12).unwrap();
        assert_eq!(built, loaded);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
