//! Transmit chain and channel: Gray-mapped square QAM, pilot framing, the
//! Wiener phase walk, and the complex AWGN observation model.
//!
//! A frame holds `N + 1` symbols indexed `0..=N` with pilots at every multiple
//! of the spacing `L` (so `F + 1` pilots and `Ns = F (L - 1)` payload slots,
//! `N = F L`). Pilots are drawn from a seeded 4-QAM stream; payload symbols
//! fill the remaining slots in stream order.

use crate::circmath::TikhonovParam;
use crate::seed::mix64;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SigModelError {
    #[error("unsupported constellation order {0}; expected 4, 16 or 64")]
    UnsupportedOrder(usize),
    #[error("bit stream length {0} is not a multiple of {1} bits per symbol")]
    BitLengthMismatch(usize, usize),
    #[error("payload length {payload} does not fill pilot spacing {spacing}: need a multiple of {}", spacing - 1)]
    FrameLayout { payload: usize, spacing: usize },
    #[error("pilot spacing must be at least 2, got {0}")]
    SpacingTooSmall(usize),
    #[error("sequence length {0} does not match frame length {1}")]
    LengthMismatch(usize, usize),
    #[error("noise variance must be positive, got {0}")]
    InvalidNoiseVariance(f64),
    #[error("phase step variance must be positive, got {0}")]
    InvalidPhaseVariance(f64),
}

/// Zero-mean, unit-energy square QAM with per-axis binary-reflected Gray
/// labels: the first `m/2` label bits (MSB first) select the I level, the
/// last `m/2` the Q level, levels ascending.
#[derive(Debug, Clone)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

fn gray_decode(mut g: usize) -> usize {
    let mut b = 0usize;
    while g != 0 {
        b ^= g;
        g >>= 1;
    }
    b
}

impl Constellation {
    /// Builds the `M`-ary constellation; `M` must be 4, 16 or 64.
    pub fn build(order: usize) -> Result<Self, SigModelError> {
        if !matches!(order, 4 | 16 | 64) {
            return Err(SigModelError::UnsupportedOrder(order));
        }
        let m = order.trailing_zeros() as usize;
        let side = 1usize << (m / 2);
        // Mean per-axis level energy of {±1, ±3, ...} is (side^2 - 1)/3.
        let energy = 2.0 * ((side * side - 1) as f64) / 3.0;
        let scale = 1.0 / energy.sqrt();
        let mut points = vec![Complex64::new(0.0, 0.0); order];
        for (label, point) in points.iter_mut().enumerate() {
            let gi = label >> (m / 2);
            let gq = label & (side - 1);
            let li = (2 * gray_decode(gi)) as f64 - (side - 1) as f64;
            let lq = (2 * gray_decode(gq)) as f64 - (side - 1) as f64;
            *point = Complex64::new(li * scale, lq * scale);
        }
        let c = Self { order, bits_per_symbol: m, points };
        c.assert_invariants();
        Ok(c)
    }

    fn assert_invariants(&self) {
        let sum: Complex64 = self.points.iter().sum();
        assert!(sum.norm() <= 1e-12 * self.order as f64, "constellation not zero mean");
        let energy: f64 =
            self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order as f64;
        assert!((energy - 1.0).abs() <= 1e-12, "constellation not unit energy");
        // Gray property: nearest neighbours along each axis differ in one bit.
        let side = 1 << (self.bits_per_symbol / 2);
        let step = 2.0 / (2.0 * ((side * side - 1) as f64) / 3.0).sqrt();
        for a in 0..self.order {
            for b in (a + 1)..self.order {
                let d = self.points[a] - self.points[b];
                let axis_neighbour = (d.re.abs() < 1e-9 && (d.im.abs() - step).abs() < 1e-9)
                    || (d.im.abs() < 1e-9 && (d.re.abs() - step).abs() < 1e-9);
                if axis_neighbour {
                    assert_eq!((a ^ b).count_ones(), 1, "Gray violation between {a} and {b}");
                }
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Point for a label given as an MSB-first integer.
    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Value of bit `k` (0 = MSB) in the label of point index `label`.
    pub fn bit_of_label(&self, label: usize, k: usize) -> u8 {
        ((label >> (self.bits_per_symbol - 1 - k)) & 1) as u8
    }

    /// Maps a bit stream onto symbols, `m` bits per symbol, MSB first.
    pub fn map_bits(&self, bits: &[u8]) -> Result<Vec<Complex64>, SigModelError> {
        let m = self.bits_per_symbol;
        if bits.len() % m != 0 {
            return Err(SigModelError::BitLengthMismatch(bits.len(), m));
        }
        Ok(bits
            .chunks(m)
            .map(|chunk| {
                let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.points[label]
            })
            .collect())
    }

    /// Label of the nearest constellation point.
    pub fn hard_label(&self, y: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        best
    }

    /// Exact inverse of [`map_bits`] for noiseless symbols.
    pub fn demap_hard(&self, symbols: &[Complex64]) -> Vec<u8> {
        let m = self.bits_per_symbol;
        let mut bits = Vec::with_capacity(symbols.len() * m);
        for &s in symbols {
            let label = self.hard_label(s);
            for k in 0..m {
                bits.push(self.bit_of_label(label, k));
            }
        }
        bits
    }
}

/// Pilot/payload frame layout with its transmitted symbols.
#[derive(Debug, Clone)]
pub struct Frame {
    spacing: usize,
    segments: usize,
    symbols: Vec<Complex64>,
    payload_indices: Vec<usize>,
}

impl Frame {
    /// Interleaves `payload` with pilots every `spacing` symbols. The payload
    /// length must be an exact multiple of `spacing - 1`; pilots are drawn
    /// from the seeded 4-QAM stream.
    pub fn build(
        payload: &[Complex64],
        spacing: usize,
        pilot_seed: u64,
    ) -> Result<Self, SigModelError> {
        if spacing < 2 {
            return Err(SigModelError::SpacingTooSmall(spacing));
        }
        if payload.is_empty() || payload.len() % (spacing - 1) != 0 {
            return Err(SigModelError::FrameLayout { payload: payload.len(), spacing });
        }
        let segments = payload.len() / (spacing - 1);
        let last = segments * spacing;
        let pilot_points = Constellation::build(4).expect("4-QAM is always supported");
        let mut symbols = Vec::with_capacity(last + 1);
        let mut payload_indices = Vec::with_capacity(payload.len());
        let mut next_payload = 0usize;
        for n in 0..=last {
            if n % spacing == 0 {
                let label = (mix64(pilot_seed ^ mix64((n / spacing) as u64)) & 3) as usize;
                symbols.push(pilot_points.point(label));
            } else {
                symbols.push(payload[next_payload]);
                payload_indices.push(n);
                next_payload += 1;
            }
        }
        Ok(Self { spacing, segments, symbols, payload_indices })
    }

    /// Frame from an explicit symbol vector (test support for symmetry
    /// checks that need transformed pilots).
    #[cfg(test)]
    pub(crate) fn from_parts(spacing: usize, symbols: Vec<Complex64>) -> Self {
        assert!(spacing >= 2 && (symbols.len() - 1) % spacing == 0);
        let segments = (symbols.len() - 1) / spacing;
        let payload_indices =
            (0..symbols.len()).filter(|n| n % spacing != 0).collect();
        Self { spacing, segments, symbols, payload_indices }
    }

    /// Pilot spacing `L`.
    pub fn spacing(&self) -> usize {
        self.spacing
    }

    /// Number of pilot-to-pilot segments `F`.
    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Index of the final symbol, `N = F L`; the frame holds `N + 1` symbols.
    pub fn last_index(&self) -> usize {
        self.segments * self.spacing
    }

    /// All transmitted symbols, pilots included.
    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    pub fn is_pilot(&self, n: usize) -> bool {
        n % self.spacing == 0
    }

    /// Frame index of the `j`-th payload symbol (the map `n'(j)`).
    pub fn payload_index(&self, j: usize) -> usize {
        self.payload_indices[j]
    }

    pub fn payload_indices(&self) -> &[usize] {
        &self.payload_indices
    }

    pub fn payload_len(&self) -> usize {
        self.payload_indices.len()
    }

    pub fn pilot_count(&self) -> usize {
        self.segments + 1
    }
}

/// One realization of the phase walk and the observed sequence.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Unwrapped phases `theta_0..=theta_N`.
    pub phases: Vec<f64>,
    /// Observations `y_0..=y_N`.
    pub observations: Vec<Complex64>,
    /// Total complex noise variance `N0`.
    pub noise_variance: f64,
    /// Wiener step variance `sigma_w^2`.
    pub phase_step_variance: f64,
}

/// Samples the Wiener phase walk: `theta_0 ~ U(-pi, pi]`, i.i.d. Gaussian
/// increments of variance `sigma_w2`. Phases are kept unwrapped.
pub fn wiener_phase(last_index: usize, sigma_w2: f64, seed: u64) -> Result<Vec<f64>, SigModelError> {
    if !(sigma_w2 > 0.0) || !sigma_w2.is_finite() {
        return Err(SigModelError::InvalidPhaseVariance(sigma_w2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = Normal::new(0.0, sigma_w2.sqrt()).expect("valid sigma");
    let mut phases = Vec::with_capacity(last_index + 1);
    let mut theta = PI - rng.random::<f64>() * 2.0 * PI; // U(-pi, pi]
    phases.push(theta);
    for _ in 0..last_index {
        theta += step.sample(&mut rng);
        phases.push(theta);
    }
    Ok(phases)
}

/// Applies the phase rotation and adds circular complex Gaussian noise of
/// total variance `n0` (`n0/2` per real dimension).
pub fn apply_channel(
    symbols: &[Complex64],
    phases: &[f64],
    n0: f64,
    seed: u64,
) -> Result<Vec<Complex64>, SigModelError> {
    if symbols.len() != phases.len() {
        return Err(SigModelError::LengthMismatch(symbols.len(), phases.len()));
    }
    if !(n0 > 0.0) || !n0.is_finite() {
        return Err(SigModelError::InvalidNoiseVariance(n0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, (0.5 * n0).sqrt()).expect("valid n0");
    Ok(symbols
        .iter()
        .zip(phases)
        .map(|(&x, &theta)| {
            x * Complex64::from_polar(1.0, theta)
                + Complex64::new(noise.sample(&mut rng), noise.sample(&mut rng))
        })
        .collect())
}

/// `N0` for a configured SNR in dB at unit symbol energy.
pub fn n0_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Tikhonov parameter of the observation factor at a known symbol:
/// `z = 2 snr y conj(x)`.
pub fn pilot_observation(y: Complex64, x: Complex64, snr: f64) -> TikhonovParam {
    TikhonovParam::new(2.0 * snr * y * x.conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam4_points_and_table() {
        let c = Constellation::build(4).unwrap();
        let s = 1.0 / 2f64.sqrt();
        // Labels (b1 b2): first bit -> I, second -> Q, 0 -> -1 level.
        assert_eq!(c.point(0b00), Complex64::new(-s, -s));
        assert_eq!(c.point(0b01), Complex64::new(-s, s));
        assert_eq!(c.point(0b10), Complex64::new(s, -s));
        assert_eq!(c.point(0b11), Complex64::new(s, s));
    }

    #[test]
    fn qam16_levels() {
        let c = Constellation::build(16).unwrap();
        let scale = 1.0 / 10f64.sqrt();
        for p in c.points() {
            let li = (p.re / scale).round();
            let lq = (p.im / scale).round();
            assert!((p.re / scale - li).abs() < 1e-12);
            assert!([-3.0, -1.0, 1.0, 3.0].contains(&li));
            assert!([-3.0, -1.0, 1.0, 3.0].contains(&lq));
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        assert_eq!(Constellation::build(8).unwrap_err(), SigModelError::UnsupportedOrder(8));
        assert_eq!(Constellation::build(2).unwrap_err(), SigModelError::UnsupportedOrder(2));
    }

    #[test]
    fn map_bits_roundtrip() {
        let c = Constellation::build(16).unwrap();
        let mut rng_state = 0xDEADBEEFu64;
        let bits: Vec<u8> = (0..4032)
            .map(|_| {
                rng_state = mix64(rng_state);
                (rng_state & 1) as u8
            })
            .collect();
        let symbols = c.map_bits(&bits).unwrap();
        assert_eq!(symbols.len(), 1008);
        assert_eq!(c.demap_hard(&symbols), bits);
        assert!(c.map_bits(&bits[..7]).is_err());
        assert!(c.map_bits(&[]).unwrap().is_empty());
    }

    #[test]
    fn frame_layout_examples() {
        let payload = vec![Complex64::new(1.0, 0.0); 1008];
        let f = Frame::build(&payload, 25, 1).unwrap();
        assert_eq!(f.segments(), 42);
        assert_eq!(f.last_index(), 1050);
        assert_eq!(f.pilot_count(), 43);
        assert_eq!(f.symbols().len(), 1051);

        let f = Frame::build(&payload, 17, 1).unwrap();
        assert_eq!(f.segments(), 63);
        assert_eq!(f.last_index(), 1071);
        assert_eq!(f.pilot_count(), 64);

        assert!(Frame::build(&payload, 24, 1).is_err());
    }

    #[test]
    fn frame_partition_and_payload_map() {
        let payload: Vec<Complex64> =
            (0..48).map(|i| Complex64::new(i as f64, -(i as f64))).collect();
        let f = Frame::build(&payload, 5, 99).unwrap();
        let n = f.last_index();
        let pilots: Vec<usize> = (0..=n).filter(|&i| f.is_pilot(i)).collect();
        assert_eq!(pilots, vec![0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60]);
        assert_eq!(pilots.len() + f.payload_len(), n + 1);
        for (j, &idx) in f.payload_indices().iter().enumerate() {
            assert!(!f.is_pilot(idx));
            assert_eq!(f.symbols()[idx], payload[j]);
        }
        // Deterministic given the same inputs.
        let f2 = Frame::build(&payload, 5, 99).unwrap();
        assert_eq!(f.symbols(), f2.symbols());
        let f3 = Frame::build(&payload, 5, 100).unwrap();
        assert_ne!(f.symbols(), f3.symbols());
    }

    #[test]
    fn wiener_increments_statistics() {
        let n = 1_000_000;
        let sigma_w2 = 0.01;
        let phases = wiener_phase(n, sigma_w2, 7).unwrap();
        assert!(phases[0] > -PI && phases[0] <= PI);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for w in phases.windows(2) {
            let d = w[1] - w[0];
            sum += d;
            sumsq += d * d;
        }
        let var = sumsq / n as f64 - (sum / n as f64).powi(2);
        assert!((var - sigma_w2).abs() < 0.05 * sigma_w2, "var = {var}");
        assert_eq!(phases, wiener_phase(n, sigma_w2, 7).unwrap());
        assert_ne!(phases[1], wiener_phase(n, sigma_w2, 8).unwrap()[1]);
    }

    #[test]
    fn awgn_variance_statistics() {
        let n = 1_000_000;
        let symbols = vec![Complex64::new(0.0, 0.0); n];
        let phases = vec![0.0; n];
        let n0 = 0.25;
        let y = apply_channel(&symbols, &phases, n0, 3).unwrap();
        let mean: Complex64 = y.iter().sum::<Complex64>() / n as f64;
        let var: f64 = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!(mean.norm() < 5e-3);
        assert!((var - n0).abs() < 0.05 * n0, "var = {var}");
    }

    #[test]
    fn channel_noiseless_limit() {
        let symbols = vec![Complex64::new(1.0, 1.0), Complex64::new(-1.0, 0.5)];
        let phases = vec![0.3, -1.2];
        let y = apply_channel(&symbols, &phases, 1e-12, 5).unwrap();
        for (i, &v) in y.iter().enumerate() {
            let clean = symbols[i] * Complex64::from_polar(1.0, phases[i]);
            assert!((v - clean).norm() < 1e-5);
        }
        assert!(apply_channel(&symbols, &phases[..1], 0.1, 5).is_err());
        assert!(apply_channel(&symbols, &phases, 0.0, 5).is_err());
    }
}
