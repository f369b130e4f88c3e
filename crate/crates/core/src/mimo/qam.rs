use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dims, invalid, Result};

/// Square QAM constellation of order `L`: per-dimension levels
/// `±1, ±3, ..., ±(2L-1)` with the reflected Gray code on each dimension.
///
/// Points are kept unnormalized; the precoder gain absorbs all scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_per_dim: usize,
    levels: Vec<f64>,
    points: Vec<Complex64>,
    labels: Vec<u32>,
}

impl QamConstellation {
    /// `order = 1` is QPSK, `2` is 16-QAM, `4` is 64-QAM.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 || !order.is_power_of_two() || order > 1 << 14 {
            return Err(invalid(format!("QAM order must be a power of two, got {order}")));
        }
        let m = 2 * order;
        let bits_per_dim = m.trailing_zeros() as usize;
        let levels: Vec<f64> = (0..m).map(|j| level_value(j, order)).collect();
        let mut points = Vec::with_capacity(m * m);
        let mut labels = Vec::with_capacity(m * m);
        for (jr, &re) in levels.iter().enumerate() {
            for (ji, &im) in levels.iter().enumerate() {
                points.push(Complex64::new(re, im));
                labels.push(((gray(jr) << bits_per_dim) | gray(ji)) as u32);
            }
        }
        Ok(QamConstellation { order, bits_per_dim, levels, points, labels })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of points, e.g. 16 for `order = 2`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Gray label of `points()[i]`; the in-phase bits are the high half.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn bits_per_dim(&self) -> usize {
        self.bits_per_dim
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_dim
    }

    /// Largest level magnitude, `2L - 1`.
    pub fn max_level(&self) -> f64 {
        (2 * self.order - 1) as f64
    }

    /// Mean symbol energy under uniform symbols, `2(4L^2 - 1)/3`.
    pub fn mean_energy(&self) -> f64 {
        let l = self.order as f64;
        2.0 * (4.0 * l * l - 1.0) / 3.0
    }

    /// Index of the level nearest to `v`, clamped to the outermost levels.
    pub fn nearest_level_index(&self, v: f64) -> usize {
        let top = 2 * self.order - 1;
        let j = ((v + self.max_level()) / 2.0).round();
        if j.is_nan() || j <= 0.0 {
            0
        } else if j >= top as f64 {
            top
        } else {
            j as usize
        }
    }

    pub fn contains(&self, s: Complex64) -> bool {
        self.level_index(s.re).is_some() && self.level_index(s.im).is_some()
    }

    fn level_index(&self, v: f64) -> Option<usize> {
        let j = self.nearest_level_index(v);
        (self.levels[j] == v).then_some(j)
    }

    fn symbol_from_level_indices(&self, jr: usize, ji: usize) -> Complex64 {
        Complex64::new(self.levels[jr], self.levels[ji])
    }
}

fn level_value(j: usize, order: usize) -> f64 {
    2.0 * j as f64 - (2 * order - 1) as f64
}

fn gray(j: usize) -> usize {
    j ^ (j >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut j = g;
    while g > 0 {
        g >>= 1;
        j ^= g;
    }
    j
}

/// Symbols `s_{i,t}` for one block: `K` users by `T` symbol times.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolBlock {
    entries: DMatrix<Complex64>,
}

impl SymbolBlock {
    pub fn new(entries: DMatrix<Complex64>, constellation: &QamConstellation) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("symbol block must be non-empty"));
        }
        if let Some(bad) = entries.iter().find(|s| !constellation.contains(**s)) {
            return Err(invalid(format!("{bad} is not a point of the {}-QAM constellation", constellation.size())));
        }
        Ok(SymbolBlock { entries })
    }

    pub fn users(&self) -> usize {
        self.entries.nrows()
    }

    pub fn len(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }
}

/// Per-antenna transmit signals `x_t` stacked as an `N x T` block.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmitBlock {
    entries: DMatrix<Complex64>,
    power: f64,
    onebit: bool,
}

impl TransmitBlock {
    /// When `onebit` is set, every entry must be exactly `sqrt(P/2N)(±1 ± j)`.
    pub fn new(entries: DMatrix<Complex64>, power: f64, onebit: bool) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(invalid(format!("power must be positive, got {power}")));
        }
        if onebit {
            let a = (power / (2.0 * entries.nrows() as f64)).sqrt();
            if entries.iter().any(|z| z.re.abs() != a || z.im.abs() != a) {
                return Err(invalid("one-bit transmit block has entries off the ±sqrt(P/2N) grid"));
            }
        }
        Ok(TransmitBlock { entries, power, onebit })
    }

    pub fn antennas(&self) -> usize {
        self.entries.nrows()
    }

    pub fn len(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn is_onebit(&self) -> bool {
        self.onebit
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Per-dimension one-bit amplitude `sqrt(P/2N)`.
    pub fn onebit_amplitude(&self) -> f64 {
        (self.power / (2.0 * self.antennas() as f64)).sqrt()
    }
}

/// Decision rule `dec(y/d)`: nearest constellation point, decided
/// independently on each real dimension.
pub fn detect(y: Complex64, d: f64, c: &QamConstellation) -> Result<Complex64> {
    if !(d > 0.0) {
        return Err(invalid(format!("gain must be positive for detection, got {d}")));
    }
    let z = y / d;
    Ok(c.symbol_from_level_indices(c.nearest_level_index(z.re), c.nearest_level_index(z.im)))
}

/// Gray-maps a bit string onto a block of `users` rows. Symbols are filled in
/// column-major order (all users of time 0, then time 1, ...), each taking
/// `bits_per_symbol` bits with the in-phase bits first, MSB first.
pub fn map_bits(bits: &[bool], users: usize, c: &QamConstellation) -> Result<SymbolBlock> {
    let bps = c.bits_per_symbol();
    if users == 0 || bits.is_empty() || !bits.len().is_multiple_of(bps * users) {
        return Err(invalid(format!(
            "bit string of length {} does not fill whole symbols ({bps} bits) for {users} users",
            bits.len()
        )));
    }
    let bpd = c.bits_per_dim();
    let symbols: Vec<Complex64> = bits
        .chunks_exact(bps)
        .map(|chunk| {
            let (re_bits, im_bits) = chunk.split_at(bpd);
            let jr = gray_inverse(bits_to_usize(re_bits));
            let ji = gray_inverse(bits_to_usize(im_bits));
            c.symbol_from_level_indices(jr, ji)
        })
        .collect();
    let t = symbols.len() / users;
    SymbolBlock::new(DMatrix::from_vec(users, t, symbols), c)
}

/// Inverse of [`map_bits`].
pub fn unmap_symbols(symbols: &SymbolBlock, c: &QamConstellation) -> Vec<bool> {
    let bpd = c.bits_per_dim();
    let mut out = Vec::with_capacity(symbols.matrix().len() * c.bits_per_symbol());
    for s in symbols.matrix().iter() {
        push_bits(&mut out, gray(c.nearest_level_index(s.re)), bpd);
        push_bits(&mut out, gray(c.nearest_level_index(s.im)), bpd);
    }
    out
}

fn bits_to_usize(bits: &[bool]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

fn push_bits(out: &mut Vec<bool>, value: usize, width: usize) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

/// Number of positions where two equal-length bit strings differ.
pub fn count_bit_errors(a: &[bool], b: &[bool]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(dims(format!("bit strings of length {} and {}", a.len(), b.len())));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x != y).count() as u64)
}
