use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::stats::clopper_pearson;
use super::{BerRecord, SimConfig};
use crate::error::{Error, Result};
use crate::mimo::{
    apply_channel_awgn, count_bit_errors, detect, gen_rayleigh_channel, map_bits, unmap_symbols, NoiseModel, QamConstellation,
    SymbolBlock,
};
use crate::precoder::Precoder;
use crate::rng::RngStream;

/// Share of failed trials in a cell above which the sweep is aborted.
const MAX_FAILURE_RATE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub total_bits: u64,
    pub runtime_ms: f64,
    /// Set when the precoder returned an error; counts are then zero.
    pub failure: Option<String>,
}

/// Progress after each finished `(trial, snr)` cell.
#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub completed: usize,
    pub total: usize,
}

/// One channel realization at one SNR for one precoder.
///
/// All randomness comes from the stream of `(base_seed, trial, snr)`: the
/// channel first, then the payload bits, then the noise. Every precoder
/// therefore sees the same channel, symbols and noise in a given cell.
pub fn run_trial(
    cfg: &SimConfig,
    trial_index: u32,
    snr_index: u32,
    precoder: &dyn Precoder,
) -> Result<TrialOutcome> {
    let snr_db = *cfg
        .snr_db_grid
        .get(snr_index as usize)
        .ok_or_else(|| Error::InvalidArgument(format!("SNR index {snr_index} outside the grid")))?;
    let c = QamConstellation::new(cfg.qam_order)?;
    let mut rng = RngStream::for_cell(cfg.base_seed, trial_index, snr_index);
    let h = gen_rayleigh_channel(cfg.users, cfg.antennas, &mut rng)?;
    let bits: Vec<bool> = (0..cfg.bits_per_block()).map(|_| rng.random()).collect();
    let s = map_bits(&bits, cfg.users, &c)?;

    let start = Instant::now();
    let result = precoder.precode(&h, &s, &c, cfg.power);
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            return Ok(TrialOutcome { bit_errors: 0, total_bits: 0, runtime_ms, failure: Some(e.to_string()) })
        }
    };

    let noise = NoiseModel::from_snr_db(cfg.power, snr_db)?;
    let y = apply_channel_awgn(&h, &result.transmit, &noise, &mut rng)?;
    // a zero gain cannot be divided by; the smallest positive one pushes
    // every decision to the outer levels instead
    let d = if result.gain > 0.0 { result.gain } else { f64::MIN_POSITIVE };
    let detected = y.map(|v| detect(v, d, &c).expect("positive gain"));
    let detected = SymbolBlock::new(detected, &c)?;
    let bit_errors = count_bit_errors(&unmap_symbols(&detected, &c), &bits)?;
    Ok(TrialOutcome { bit_errors, total_bits: bits.len() as u64, runtime_ms, failure: None })
}

/// Full sweep over the configured precoders, SNR grid and trials.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    let precoders: Vec<Box<dyn Precoder>> = cfg.precoders.iter().map(|k| k.build(&cfg.bcd)).collect();
    run_sweep_with(cfg, &precoders, &|_| {})
}

/// Sweep with explicit precoder objects (built-in or not) and a progress
/// callback. Records come out ordered by precoder, then SNR.
pub fn run_sweep_with(
    cfg: &SimConfig,
    precoders: &[Box<dyn Precoder>],
    progress: &(dyn Fn(Progress) + Sync),
) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let n_snr = cfg.snr_db_grid.len();
    let cells: Vec<(u32, u32)> = (0..n_snr as u32)
        .flat_map(|s| (0..cfg.trials as u32).map(move |t| (cfg.trial_offset + t, s)))
        .collect();
    let done = AtomicUsize::new(0);
    let total = cells.len();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.threads())
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;

    let outcomes: Vec<Vec<TrialOutcome>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(trial, snr)| {
                let row = precoders
                    .iter()
                    .map(|p| run_trial(cfg, trial, snr, p.as_ref()))
                    .collect::<Result<Vec<_>>>();
                let completed = done.fetch_add(1, Ordering::Relaxed) + 1;
                progress(Progress { completed, total });
                row
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let c = QamConstellation::new(cfg.qam_order)?;
    let mut records = Vec::with_capacity(precoders.len() * n_snr);
    for (pi, p) in precoders.iter().enumerate() {
        for (si, &snr_db) in cfg.snr_db_grid.iter().enumerate() {
            let mut rec = BerRecord {
                precoder: p.name().to_string(),
                snr_db,
                antennas: cfg.antennas,
                users: cfg.users,
                block_len: cfg.block_len,
                qam: c.size(),
                trials: 0,
                bit_errors: 0,
                total_bits: 0,
                ber: 0.0,
                ci95_low: 0.0,
                ci95_high: 1.0,
                mean_runtime_ms: 0.0,
                failed_trials: 0,
            };
            let mut runtime = 0.0;
            let mut first_failure = None;
            for (ci, &(_, s)) in cells.iter().enumerate() {
                if s as usize != si {
                    continue;
                }
                let o = &outcomes[ci][pi];
                match &o.failure {
                    Some(msg) => {
                        rec.failed_trials += 1;
                        first_failure.get_or_insert_with(|| msg.clone());
                    }
                    None => {
                        rec.trials += 1;
                        rec.bit_errors += o.bit_errors;
                        rec.total_bits += o.total_bits;
                        runtime += o.runtime_ms;
                    }
                }
            }
            if rec.failed_trials as f64 > MAX_FAILURE_RATE * cfg.trials as f64 {
                return Err(Error::Aborted(format!(
                    "{} failed {} of {} trials at {snr_db} dB; first failure: {}",
                    rec.precoder,
                    rec.failed_trials,
                    cfg.trials,
                    first_failure.unwrap_or_default()
                )));
            }
            if rec.total_bits > 0 {
                rec.ber = rec.bit_errors as f64 / rec.total_bits as f64;
                let (lo, hi) = clopper_pearson(rec.bit_errors, rec.total_bits, 0.05);
                rec.ci95_low = lo.min(rec.ber);
                rec.ci95_high = hi.max(rec.ber);
            }
            if cfg.record_timing && rec.trials > 0 {
                rec.mean_runtime_ms = runtime / rec.trials as f64;
            }
            records.push(rec);
        }
    }
    Ok(records)
}
