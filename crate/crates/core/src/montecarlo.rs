//! Pair-history sampling and coincidence-window post-selection.
//!
//! Every pair draws from its own ChaCha8 stream keyed on `(seed, pair_id)`,
//! so a run is bit-identical for any number of worker threads.

use std::io::Write;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{Channel, RatePair, WindowConfig, WindowMode};
use crate::error::{Error, Result};
use crate::series::{format_f64, BinnedSeries};

/// One simulated pair: which atom emitted first and when each photon left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub pair_id: u64,
    pub t_first: f64,
    pub channel_first: Channel,
    pub t_second: f64,
    pub channel_second: Channel,
}

impl EmissionRecord {
    pub fn time_of(&self, which: Channel) -> f64 {
        if self.channel_first == which {
            self.t_first
        } else {
            self.t_second
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Entangled,
    Product,
}

impl std::str::FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entangled" => Ok(PairKind::Entangled),
            "product" => Ok(PairKind::Product),
            other => Err(Error::InvalidParameter(format!("unknown pair kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_pairs: u64,
    pub rates: RatePair,
    pub kind: PairKind,
    pub window: WindowConfig,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(
        n_pairs: u64,
        rates: RatePair,
        kind: PairKind,
        window: WindowConfig,
        seed: u64,
    ) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::InvalidParameter("n_pairs must be positive".into()));
        }
        Ok(Self {
            n_pairs,
            rates,
            kind,
            window,
            seed,
        })
    }
}

/// Random stream for one pair.
pub fn pair_rng(seed: u64, pair_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair_id);
    rng
}

/// Inverse-CDF exponential draw, `-ln(u) / rate` with `u` in (0, 1).
pub fn sample_exponential<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}

/// Entangled pair: the first photon comes after an exponential wait at
/// `Gamma_A + Gamma_B`; its channel is picked with probability proportional
/// to the channel rate (probabilities add, the channels being distinguishable).
/// The survivor, now disentangled, waits at its own single-atom rate.
pub fn sample_entangled_pair<R: Rng + ?Sized>(
    rates: &RatePair,
    rng: &mut R,
    pair_id: u64,
) -> EmissionRecord {
    let gamma_f = rates.gamma_f();
    let t_first = sample_exponential(gamma_f, rng);
    let u: f64 = rng.sample(Open01);
    let channel_first = if u * gamma_f < rates.channel_rate(Channel::A) {
        Channel::A
    } else {
        Channel::B
    };
    let channel_second = channel_first.other();
    let t_second = t_first + sample_exponential(rates.rate(channel_second), rng);
    EmissionRecord {
        pair_id,
        t_first,
        channel_first,
        t_second,
        channel_second,
    }
}

/// Product-state pair: two independent exponential emissions.
pub fn sample_product_pair<R: Rng + ?Sized>(
    rates: &RatePair,
    rng: &mut R,
    pair_id: u64,
) -> EmissionRecord {
    let t_a = sample_exponential(rates.gamma_a(), rng);
    let t_b = sample_exponential(rates.gamma_b(), rng);
    if t_a <= t_b {
        EmissionRecord {
            pair_id,
            t_first: t_a,
            channel_first: Channel::A,
            t_second: t_b,
            channel_second: Channel::B,
        }
    } else {
        EmissionRecord {
            pair_id,
            t_first: t_b,
            channel_first: Channel::B,
            t_second: t_a,
            channel_second: Channel::A,
        }
    }
}

fn sample_pair(cfg: &SimConfig, pair_id: u64) -> EmissionRecord {
    let mut rng = pair_rng(cfg.seed, pair_id);
    match cfg.kind {
        PairKind::Entangled => sample_entangled_pair(&cfg.rates, &mut rng, pair_id),
        PairKind::Product => sample_product_pair(&cfg.rates, &mut rng, pair_id),
    }
}

/// Samples every pair of `cfg` on `workers` threads; output is ordered by `pair_id`.
pub fn simulate(cfg: &SimConfig, workers: usize) -> Result<Vec<EmissionRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        (0..cfg.n_pairs)
            .into_par_iter()
            .map(|id| sample_pair(cfg, id))
            .collect()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostSelectionSummary {
    pub kept: u64,
    pub discarded: u64,
    pub empirical_coincidence_rate: f64,
}

/// Whether both photons of `record` fall in one detection window.
pub fn is_coincident(record: &EmissionRecord, window: &WindowConfig) -> bool {
    let tau = window.tau();
    match window.mode() {
        WindowMode::GridBin => (record.t_first / tau).floor() == (record.t_second / tau).floor(),
        WindowMode::Pairwise => record.t_second - record.t_first < tau,
    }
}

/// Drops pairs whose photons share a window; no first photon is defined for them.
pub fn postselect(
    records: &[EmissionRecord],
    window: &WindowConfig,
) -> (Vec<EmissionRecord>, PostSelectionSummary) {
    let kept: Vec<EmissionRecord> = records
        .iter()
        .filter(|r| !is_coincident(r, window))
        .copied()
        .collect();
    let total = records.len() as u64;
    let n_kept = kept.len() as u64;
    let discarded = total - n_kept;
    let rate = if total == 0 {
        0.0
    } else {
        discarded as f64 / total as f64
    };
    (
        kept,
        PostSelectionSummary {
            kept: n_kept,
            discarded,
            empirical_coincidence_rate: rate,
        },
    )
}

/// Fraction of samples `<= t` at each grid point.
pub fn empirical_cdf(name: &str, samples: &[f64], grid: &[f64]) -> BinnedSeries {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1) as f64;
    BinnedSeries::from_fn(name, grid, |t| sorted.partition_point(|&x| x <= t) as f64 / n)
}

pub fn empirical_first_cdf(kept: &[EmissionRecord], grid: &[f64]) -> BinnedSeries {
    let times: Vec<f64> = kept.iter().map(|r| r.t_first).collect();
    empirical_cdf("empirical_first_cdf", &times, grid)
}

/// Both photon times of every record, pooled. After post-selection these are
/// the single-emission events the product-state window law describes.
pub fn one_emission_times(kept: &[EmissionRecord]) -> Vec<f64> {
    kept.iter().flat_map(|r| [r.t_first, r.t_second]).collect()
}

pub fn empirical_one_emission_cdf(kept: &[EmissionRecord], grid: &[f64]) -> BinnedSeries {
    empirical_cdf("empirical_one_emission_cdf", &one_emission_times(kept), grid)
}

/// Fractions of records whose first photon came from A and from B.
pub fn channel_fractions(records: &[EmissionRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0);
    }
    let a = records
        .iter()
        .filter(|r| r.channel_first == Channel::A)
        .count() as f64;
    let n = records.len() as f64;
    (a / n, (n - a) / n)
}

pub const RECORD_HEADER: [&str; 5] = [
    "pair_id",
    "t_first",
    "channel_first",
    "t_second",
    "channel_second",
];

pub fn write_records_csv<W: Write>(records: &[EmissionRecord], out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    wtr.write_record(RECORD_HEADER)?;
    for r in records {
        wtr.write_record([
            r.pair_id.to_string(),
            format_f64(r.t_first),
            r.channel_first.to_string(),
            format_f64(r.t_second),
            r.channel_second.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<EmissionRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        if row.len() != RECORD_HEADER.len() {
            return Err(Error::InvalidData(format!("record row has {} fields", row.len())));
        }
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad number {:?}", &row[i])))
        };
        out.push(EmissionRecord {
            pair_id: row[0]
                .parse()
                .map_err(|_| Error::InvalidData(format!("bad pair id {:?}", &row[0])))?,
            t_first: num(1)?,
            channel_first: row[2].parse()?,
            t_second: num(3)?,
            channel_second: row[4].parse()?,
        });
    }
    Ok(out)
}
