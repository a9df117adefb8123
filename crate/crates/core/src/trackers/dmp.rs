//! Discretized message passing: the exact forward/backward phase tracker on a
//! uniform circular grid, used as the performance oracle for the parametric
//! algorithms. Circular convolutions with the phase-step kernel run through
//! the FFT.

use super::{
    grid_theta, validate_inputs, GridPdf, LogPriors, MessageSet, SymbolBeliefs, TrackerError,
    TrackerOutput,
};
use crate::sigmodel::{Constellation, Frame};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Arc;

struct Convolver {
    fft: Arc<dyn rustfft::Fft<f64>>,
    ifft: Arc<dyn rustfft::Fft<f64>>,
    kernel_fft: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Convolver {
    fn new(n: usize, sigma_w2: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        // The wrapped Gaussian enters through its exact Fourier coefficients
        // exp(-k^2 sigma^2 / 2). Sampling the kernel in the angle domain
        // instead aliases its spectrum once sigma approaches the cell width,
        // which visibly distorts coarse-grid beliefs.
        let kernel_fft: Vec<Complex64> = (0..n)
            .map(|k| {
                let harmonic = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                Complex64::new((-0.5 * harmonic * harmonic * sigma_w2).exp(), 0.0)
            })
            .collect();
        Self { fft, ifft, kernel_fft, scratch: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Circularly convolves `values` with the kernel and renormalizes to a
    /// unit-mass density (FFT ringing is clamped at zero).
    fn convolve_normalize(&mut self, values: &[f64], out: &mut [f64]) {
        let n = values.len();
        for (s, &v) in self.scratch.iter_mut().zip(values) {
            *s = Complex64::new(v, 0.0);
        }
        self.fft.process(&mut self.scratch);
        for (s, k) in self.scratch.iter_mut().zip(&self.kernel_fft) {
            *s *= k;
        }
        self.ifft.process(&mut self.scratch);
        let dth = 2.0 * PI / n as f64;
        let mut mass = 0.0;
        for (o, s) in out.iter_mut().zip(&self.scratch) {
            *o = s.re.max(0.0);
            mass += *o * dth;
        }
        for o in out.iter_mut() {
            *o /= mass;
        }
    }
}

/// Log-domain observation exponents `Re[z_g(a) e^{-j theta_k}]` for one
/// position, written into `scratch[a][k]`.
fn observation_exponents(
    y_n: Complex64,
    constellation: &Constellation,
    snr: f64,
    cos_t: &[f64],
    sin_t: &[f64],
    scratch: &mut [Vec<f64>],
) {
    for (a, point) in constellation.points().iter().enumerate() {
        let z = 2.0 * snr * y_n * point.conj();
        let bias = -snr * point.norm_sqr();
        for k in 0..cos_t.len() {
            scratch[a][k] = bias + z.re * cos_t[k] + z.im * sin_t[k];
        }
    }
}

/// Exact grid-based tracker. Returns unit-mass `alpha * beta` posteriors for
/// every position alongside the extrinsic beliefs; the parametric message
/// set stays empty.
pub fn dmp_track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    n_theta: usize,
    sigma_w2: f64,
    snr: f64,
) -> Result<TrackerOutput, TrackerError> {
    if n_theta < 8 || !n_theta.is_power_of_two() {
        return Err(TrackerError::GridTooSmall(n_theta));
    }
    validate_inputs(y, frame, constellation, priors)?;

    let n_sym = frame.symbols().len();
    let m = constellation.order();
    let dth = 2.0 * PI / n_theta as f64;
    let cos_t: Vec<f64> = (0..n_theta).map(|k| grid_theta(n_theta, k).cos()).collect();
    let sin_t: Vec<f64> = (0..n_theta).map(|k| grid_theta(n_theta, k).sin()).collect();
    let mut conv = Convolver::new(n_theta, sigma_w2);
    let mut slot_of = vec![usize::MAX; n_sym];
    for (j, &n) in frame.payload_indices().iter().enumerate() {
        slot_of[n] = j;
    }

    // Per-position gamma densities on the grid. Pilots carry the plain
    // observation factor; payload positions the prior-weighted mixture,
    // which stays informative on the grid even under uniform priors.
    let mut scratch = vec![vec![0.0; n_theta]; m];
    let mut gamma = vec![vec![0.0; n_theta]; n_sym];
    for n in 0..n_sym {
        observation_exponents(y[n], constellation, snr, &cos_t, &sin_t, &mut scratch);
        let g = &mut gamma[n];
        if frame.is_pilot(n) {
            // Pilots come from the 4-QAM pilot stream, not from the payload
            // constellation: evaluate the observation factor at the known
            // symbol directly.
            let z = 2.0 * snr * y[n] * frame.symbols()[n].conj();
            let mut max = f64::NEG_INFINITY;
            for k in 0..n_theta {
                g[k] = z.re * cos_t[k] + z.im * sin_t[k];
                max = max.max(g[k]);
            }
            for v in g.iter_mut() {
                *v = (*v - max).exp();
            }
        } else {
            let j = slot_of[n];
            let mut max = f64::NEG_INFINITY;
            for (a, row) in scratch.iter_mut().enumerate() {
                let lp = priors.map_or(0.0, |p| p[j][a]);
                for v in row.iter_mut() {
                    *v += lp;
                    max = max.max(*v);
                }
            }
            for row in &scratch {
                for k in 0..n_theta {
                    g[k] += (row[k] - max).exp();
                }
            }
        }
        let mass: f64 = g.iter().sum::<f64>() * dth;
        for v in g.iter_mut() {
            *v /= mass;
        }
    }

    // Forward/backward sweeps with renormalization after every step.
    let uniform = vec![1.0 / (2.0 * PI); n_theta];
    let mut alpha = vec![uniform.clone(); n_sym];
    let mut beta = vec![uniform.clone(); n_sym];
    let mut prod = vec![0.0; n_theta];
    for n in 1..n_sym {
        for k in 0..n_theta {
            prod[k] = alpha[n - 1][k] * gamma[n - 1][k];
        }
        conv.convolve_normalize(&prod, &mut alpha[n]);
    }
    for n in (0..n_sym - 1).rev() {
        for k in 0..n_theta {
            prod[k] = beta[n + 1][k] * gamma[n + 1][k];
        }
        conv.convolve_normalize(&prod, &mut beta[n]);
    }

    // Extrinsic beliefs by grid quadrature of alpha * beta * g_n(theta, a).
    let mut log_probs = Vec::with_capacity(frame.payload_len());
    for &n in frame.payload_indices() {
        observation_exponents(y[n], constellation, snr, &cos_t, &sin_t, &mut scratch);
        let mut log_w = vec![f64::NEG_INFINITY; n_theta];
        for k in 0..n_theta {
            let w = alpha[n][k] * beta[n][k];
            if w > 0.0 {
                log_w[k] = w.ln();
            }
        }
        let mut lp = Vec::with_capacity(m);
        let mut best = f64::NEG_INFINITY;
        for row in &scratch {
            let mut max = f64::NEG_INFINITY;
            for k in 0..n_theta {
                let v = log_w[k] + row[k];
                if v > max {
                    max = v;
                }
            }
            let p = if max == f64::NEG_INFINITY {
                f64::NEG_INFINITY
            } else {
                let sum: f64 = (0..n_theta).map(|k| (log_w[k] + row[k] - max).exp()).sum();
                max + sum.ln()
            };
            best = best.max(p);
            lp.push(p);
        }
        for v in &mut lp {
            *v = (*v - best).max(-super::BELIEF_FLOOR);
        }
        log_probs.push(lp);
    }

    let posterior_grids: Vec<GridPdf> = (0..n_sym)
        .map(|n| {
            let samples: Vec<f64> =
                (0..n_theta).map(|k| alpha[n][k] * beta[n][k]).collect();
            if samples.iter().sum::<f64>() > 0.0 {
                GridPdf::from_samples(samples)
            } else {
                GridPdf::from_samples(vec![1.0; n_theta])
            }
        })
        .collect();

    Ok(TrackerOutput {
        beliefs: SymbolBeliefs { log_probs, z_sigma: Vec::new() },
        messages: MessageSet::default(),
        cmm_calls: 0,
        saturated: false,
        posterior_grids: Some(posterior_grids),
        snapshots: None,
    })
}
