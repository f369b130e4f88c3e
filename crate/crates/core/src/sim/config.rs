//! Simulation configuration and its flat `key = value` file format.
//!
//! ```text
//! # desk-scale 16-QAM sweep
//! N = 64
//! K = 8
//! T = 10
//! qam_order = 2
//! snr_db_grid = 10, 15, 20, 25, 30
//! trials = 200
//! base_seed = 1
//! precoder_list = zf, onebit-zf, bcd-fista
//! ```
//!
//! Solver keys (`lambda0`, `delta`, `period_M`, `sigma_smooth`, ...) sit in
//! the same flat namespace. `lambda0` and `gamma0` accept `auto`.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::precoder::{BcdConfig, PrecoderKind};

/// Environment variable overriding the default worker count.
pub const PARALLELISM_ENV: &str = "ONEBIT_PARALLELISM";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    /// One worker per available core, or `ONEBIT_PARALLELISM` when set.
    Auto,
    Threads(usize),
}

impl Parallelism {
    pub fn threads(self) -> usize {
        match self {
            Parallelism::Threads(n) => n.max(1),
            Parallelism::Auto => std::env::var(PARALLELISM_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&n| n > 0)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

impl FromStr for Parallelism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "auto" => Ok(Parallelism::Auto),
            v => match v.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Parallelism::Threads(n)),
                _ => Err(Error::Config(format!("parallelism must be 'auto' or a positive integer, got '{v}'"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub antennas: usize,
    pub users: usize,
    pub block_len: usize,
    pub qam_order: usize,
    /// `P / sigma_n^2` in dB, strictly increasing.
    pub snr_db_grid: Vec<f64>,
    pub trials: usize,
    /// Index of the first trial, so that shards of one sweep can run
    /// separately and be summed.
    pub trial_offset: u32,
    pub base_seed: u64,
    pub precoders: Vec<PrecoderKind>,
    pub power: f64,
    pub bcd: BcdConfig,
    pub parallelism: Parallelism,
    /// When off, `mean_runtime_ms` is written as 0 so that CSV output is a
    /// pure function of the configuration.
    pub record_timing: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            antennas: 64,
            users: 8,
            block_len: 10,
            qam_order: 2,
            snr_db_grid: vec![10.0, 15.0, 20.0, 25.0, 30.0],
            trials: 200,
            trial_offset: 0,
            base_seed: 1,
            precoders: PrecoderKind::ALL.to_vec(),
            power: 1.0,
            bcd: BcdConfig::default(),
            parallelism: Parallelism::Auto,
            record_timing: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.antennas == 0 || self.users == 0 || self.block_len == 0 {
            return err("N, K and T must be positive".into());
        }
        if self.users > self.antennas {
            return err(format!("K = {} exceeds N = {}", self.users, self.antennas));
        }
        if self.qam_order == 0 || !self.qam_order.is_power_of_two() {
            return err(format!("qam_order must be a power of two, got {}", self.qam_order));
        }
        if self.trials == 0 || self.trial_offset as u64 + self.trials as u64 > u32::MAX as u64 + 1 {
            return err(format!(
                "trials must be >= 1 and trial_offset + trials <= 2^32, got {} + {}",
                self.trial_offset, self.trials
            ));
        }
        if self.snr_db_grid.is_empty() {
            return err("snr_db_grid is empty".into());
        }
        if self.snr_db_grid.iter().any(|x| !x.is_finite()) || self.snr_db_grid.windows(2).any(|w| w[1] <= w[0]) {
            return err(format!("snr_db_grid must be finite and strictly increasing, got {:?}", self.snr_db_grid));
        }
        if self.precoders.is_empty() {
            return err("precoder_list is empty".into());
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return err(format!("power must be positive, got {}", self.power));
        }
        self.bcd.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses the flat key–value format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{raw}'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "N" => self.antennas = num(key, value)?,
            "K" => self.users = num(key, value)?,
            "T" => self.block_len = num(key, value)?,
            "qam_order" => self.qam_order = num(key, value)?,
            "snr_db_grid" => self.snr_db_grid = list(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "trial_offset" => self.trial_offset = num(key, value)?,
            "base_seed" => self.base_seed = num(key, value)?,
            "precoder_list" => self.precoders = list(key, value)?,
            "power" => self.power = num(key, value)?,
            "parallelism" => self.parallelism = value.parse()?,
            "record_timing" => self.record_timing = num(key, value)?,
            "lambda0" => self.bcd.lambda0 = auto(key, value)?,
            "delta" => self.bcd.delta = num(key, value)?,
            "period_M" => self.bcd.period_m = num(key, value)?,
            "sigma_smooth" => self.bcd.sigma_smooth = num(key, value)?,
            "fista_max_iters" => self.bcd.fista_max_iters = num(key, value)?,
            "fista_tol" => self.bcd.fista_tol = num(key, value)?,
            "bcd_max_iters" => self.bcd.bcd_max_iters = num(key, value)?,
            "bt_shrink" => self.bcd.bt_shrink = num(key, value)?,
            "bt_grow" => self.bcd.bt_grow = num(key, value)?,
            "gamma0" => self.bcd.gamma0 = auto(key, value)?,
            "refit_gain" => self.bcd.refit_gain = num(key, value)?,
            "stop_rule" => self.bcd.stop_rule = value.parse()?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Number of bits carried by one block.
    pub fn bits_per_block(&self) -> usize {
        self.users * self.block_len * 2 * (2 * self.qam_order).trailing_zeros() as usize
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{value}' for {key}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

fn auto(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}
