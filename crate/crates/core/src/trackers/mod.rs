//! Phase-tracking algorithms over one pilot-framed block: the discretized
//! oracle (DMP), the parametric CBC and SKR recursions, their expectation-
//! propagation refinements, and the CBC+SKR hybrid.
//!
//! All trackers consume the observed sequence `y`, the frame layout, optional
//! per-payload log-priors from the decoder, and the channel parameters
//! `(sigma_w^2, snr)`. They emit extrinsic per-symbol log-probabilities and
//! the final forward/backward message parameters. Every tracker is a pure
//! function of its inputs; frames can be processed concurrently.

mod dmp;
mod parametric;
mod skr;

pub use dmp::dmp_track;
pub use parametric::{all_pilots_track, cbc_ep_track, cbc_track, project_gamma_cmm, project_gamma_ga};
pub use skr::{hybrid_cbc_skr_track, skr_ep_track, skr_track};

use crate::circmath::{
    self, convolve_wrapped_gaussian, TikhonovParam, WeightedTikhonov, WrappedGaussianParam,
};
use crate::sigmodel::{Constellation, Frame};
use num_complex::Complex64;

/// Cap on message concentrations; far above any operating point but keeps
/// noiseless corner cases finite.
pub const MESSAGE_CAP: f64 = 1e6;

/// Extrinsic log-probabilities are clipped at `-BELIEF_FLOOR` after
/// max-normalization. Deeper tails sit below the dynamic range of the
/// double-precision FFT used by the grid tracker, so no algorithm is asked
/// to resolve them; LLR magnitudes saturate accordingly.
pub const BELIEF_FLOOR: f64 = 25.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrackerError {
    #[error("smoothing parameter zeta must lie in (0, 1], got {0}")]
    InvalidZeta(f64),
    #[error("EP iteration count must be at least 1")]
    InvalidIterations,
    #[error("DMP grid must be a power of two with at least 8 samples, got {0}")]
    GridTooSmall(usize),
    #[error("priors cover {got} payload positions, frame has {want}")]
    PriorLength { want: usize, got: usize },
    #[error("observation length {got} does not match frame length {want}")]
    ObservationLength { want: usize, got: usize },
}

/// Selects a phase-tracking algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Dmp,
    CbcGa,
    CbcCmm,
    Skr,
    CbcEp,
    SkrEp,
    CbcSkr,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Dmp => "dmp",
            Algorithm::CbcGa => "cbc_ga",
            Algorithm::CbcCmm => "cbc_cmm",
            Algorithm::Skr => "skr",
            Algorithm::CbcEp => "cbc_ep",
            Algorithm::SkrEp => "skr_ep",
            Algorithm::CbcSkr => "cbc_skr",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "dmp" => Algorithm::Dmp,
            "cbc_ga" => Algorithm::CbcGa,
            "cbc_cmm" | "cbc" => Algorithm::CbcCmm,
            "skr" => Algorithm::Skr,
            "cbc_ep" => Algorithm::CbcEp,
            "skr_ep" => Algorithm::SkrEp,
            "cbc_skr" => Algorithm::CbcSkr,
            _ => return None,
        })
    }

    pub const ALL: [Algorithm; 7] = [
        Algorithm::Dmp,
        Algorithm::CbcGa,
        Algorithm::CbcCmm,
        Algorithm::Skr,
        Algorithm::CbcEp,
        Algorithm::SkrEp,
        Algorithm::CbcSkr,
    ];
}

/// Tracker selection plus its tuning knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub algorithm: Algorithm,
    /// Number of EP self-iterations `I_ep` (EP algorithms only).
    pub ep_iterations: usize,
    /// Smoothing weight `zeta` in `(0, 1]`.
    pub zeta: f64,
    /// Grid size for the DMP oracle.
    pub n_theta: usize,
}

impl TrackerConfig {
    /// Defaults per algorithm: `zeta = 0.4` for CBC+EP, `0.8` for SKR+EP and
    /// the hybrid, `I_ep = 2`, `N_theta = 64`.
    pub fn new(algorithm: Algorithm) -> Self {
        let zeta = match algorithm {
            Algorithm::CbcEp => 0.4,
            Algorithm::SkrEp | Algorithm::CbcSkr => 0.8,
            _ => 1.0,
        };
        Self { algorithm, ep_iterations: 2, zeta, n_theta: 64 }
    }

    pub fn validate(&self) -> Result<(), TrackerError> {
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(TrackerError::InvalidZeta(self.zeta));
        }
        if matches!(self.algorithm, Algorithm::CbcEp | Algorithm::SkrEp) && self.ep_iterations < 1
        {
            return Err(TrackerError::InvalidIterations);
        }
        if self.algorithm == Algorithm::Dmp
            && (self.n_theta < 8 || !self.n_theta.is_power_of_two())
        {
            return Err(TrackerError::GridTooSmall(self.n_theta));
        }
        Ok(())
    }
}

/// Forward/backward Tikhonov parameters over one frame, plus the projected
/// gamma parameters and, for the SKR family, the intra-recursion projections.
#[derive(Debug, Clone, Default)]
pub struct MessageSet {
    pub z_alpha: Vec<TikhonovParam>,
    pub z_beta: Vec<TikhonovParam>,
    pub z_gamma_tilde: Vec<TikhonovParam>,
    pub z_check_alpha: Option<Vec<TikhonovParam>>,
    pub z_check_beta: Option<Vec<TikhonovParam>>,
}

impl MessageSet {
    /// Combined extrinsic parameter `z_alpha + z_beta` at position `n`.
    pub fn combined(&self, n: usize) -> TikhonovParam {
        TikhonovParam::new(self.z_alpha[n].z + self.z_beta[n].z)
    }
}

/// Extrinsic symbol information per payload position: max-normalized
/// log-probabilities over the constellation and the underlying `z_Sigma`.
#[derive(Debug, Clone, Default)]
pub struct SymbolBeliefs {
    pub log_probs: Vec<Vec<f64>>,
    pub z_sigma: Vec<Vec<Complex64>>,
}

/// A circular density sampled on `N_theta` cell-centered grid points
/// `theta_k = -pi + 2 pi (k + 1/2) / N_theta`, held at unit mass.
#[derive(Debug, Clone)]
pub struct GridPdf {
    samples: Vec<f64>,
}

impl GridPdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        let dth = 2.0 * std::f64::consts::PI / samples.len() as f64;
        let mass: f64 = samples.iter().sum::<f64>() * dth;
        assert!(mass > 0.0, "grid pdf has no mass");
        for s in &mut samples {
            *s /= mass;
        }
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn theta(&self, k: usize) -> f64 {
        grid_theta(self.samples.len(), k)
    }

    pub fn mass(&self) -> f64 {
        let dth = 2.0 * std::f64::consts::PI / self.samples.len() as f64;
        self.samples.iter().sum::<f64>() * dth
    }
}

/// Cell-centered grid angle `theta_k = -pi + 2 pi (k + 1/2) / n`.
pub fn grid_theta(n: usize, k: usize) -> f64 {
    use std::f64::consts::PI;
    -PI + 2.0 * PI * (k as f64 + 0.5) / n as f64
}

/// Everything a tracker run produces.
#[derive(Debug, Clone, Default)]
pub struct TrackerOutput {
    pub beliefs: SymbolBeliefs,
    pub messages: MessageSet,
    /// Number of circular-moment-matching projections performed.
    pub cmm_calls: usize,
    /// Set when any message hit [`MESSAGE_CAP`].
    pub saturated: bool,
    /// Per-position `alpha * beta` posteriors (DMP only).
    pub posterior_grids: Option<Vec<GridPdf>>,
    /// Per-EP-iteration message snapshots, when requested.
    pub snapshots: Option<Vec<MessageSet>>,
}

/// Observation factor at hypothesis `a`: Tikhonov parameter
/// `z = 2 snr y conj(a)` with log-weight `-snr |a|^2` (the symbol prior is
/// added by the caller).
pub fn observation_factor(y_n: Complex64, a: Complex64, snr: f64) -> WeightedTikhonov {
    WeightedTikhonov::new(
        -snr * a.norm_sqr(),
        TikhonovParam::new(2.0 * snr * y_n * a.conj()),
    )
}

/// EP update of a projected gamma parameter, Eq. form
/// `zeta (z_post - z_ab_prev) + (1 - zeta) z_gamma_prev`; the first iteration
/// keeps the plain projection.
pub fn ep_gamma_update(
    z_post: TikhonovParam,
    z_ab_prev: TikhonovParam,
    z_gamma_prev: TikhonovParam,
    zeta: f64,
    first_iteration: bool,
) -> TikhonovParam {
    if first_iteration {
        z_post
    } else {
        TikhonovParam::new(zeta * (z_post.z - z_ab_prev.z) + (1.0 - zeta) * z_gamma_prev.z)
    }
}

/// Clamps a message concentration at [`MESSAGE_CAP`], recording saturation.
pub(crate) fn cap_message(p: TikhonovParam, saturated: &mut bool) -> TikhonovParam {
    let r = p.concentration();
    if r > MESSAGE_CAP {
        *saturated = true;
        TikhonovParam::new(p.z * (MESSAGE_CAP / r))
    } else {
        p
    }
}

/// One forward or backward step of the parametric recursion: multiply by the
/// projected gamma, then convolve with the phase-step kernel.
pub(crate) fn predict_step(
    message: TikhonovParam,
    gamma: TikhonovParam,
    walk: WrappedGaussianParam,
    saturated: &mut bool,
) -> TikhonovParam {
    let merged = circmath::tikhonov_multiply(message, gamma);
    cap_message(convolve_wrapped_gaussian(merged, walk), saturated)
}

/// Forward/backward recursion of the CBC family over precomputed projected
/// gamma parameters: `z_alpha[0] = z_beta[N] = 0`, each step a multiply
/// followed by the wrapped-Gaussian convolution.
pub fn cbc_forward_backward(z_gamma_tilde: &[TikhonovParam], sigma_w2: f64) -> MessageSet {
    let n_last = z_gamma_tilde.len() - 1;
    let walk = WrappedGaussianParam { variance: sigma_w2 };
    let mut saturated = false;
    let mut z_alpha = vec![TikhonovParam::uniform(); n_last + 1];
    let mut z_beta = vec![TikhonovParam::uniform(); n_last + 1];
    for n in 1..=n_last {
        z_alpha[n] = predict_step(z_alpha[n - 1], z_gamma_tilde[n - 1], walk, &mut saturated);
    }
    for n in (0..n_last).rev() {
        z_beta[n] = predict_step(z_beta[n + 1], z_gamma_tilde[n + 1], walk, &mut saturated);
    }
    MessageSet {
        z_alpha,
        z_beta,
        z_gamma_tilde: z_gamma_tilde.to_vec(),
        z_check_alpha: None,
        z_check_beta: None,
    }
}

/// Extrinsic symbol log-probabilities from forward/backward messages:
/// `P(a) = -snr |a|^2 + hat_I0(|z_alpha + z_beta + z_g(a)|)`, max-normalized
/// per payload position.
pub fn extrinsic_logprobs(
    ms: &MessageSet,
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    snr: f64,
) -> SymbolBeliefs {
    let m = constellation.order();
    let mut log_probs = Vec::with_capacity(frame.payload_len());
    let mut z_sigma = Vec::with_capacity(frame.payload_len());
    for &n in frame.payload_indices() {
        let z_ab = ms.z_alpha[n].z + ms.z_beta[n].z;
        let mut lp = Vec::with_capacity(m);
        let mut zs = Vec::with_capacity(m);
        let mut best = f64::NEG_INFINITY;
        for a in constellation.points() {
            let z = z_ab + 2.0 * snr * y[n] * a.conj();
            let v = -snr * a.norm_sqr() + circmath::hat_i0(z.norm());
            best = best.max(v);
            lp.push(v);
            zs.push(z);
        }
        for v in &mut lp {
            *v = (*v - best).max(-BELIEF_FLOOR);
        }
        log_probs.push(lp);
        z_sigma.push(zs);
    }
    SymbolBeliefs { log_probs, z_sigma }
}

/// Quadrature KL distance from a DMP posterior grid to the Tikhonov density
/// with parameter `combined = z_alpha + z_beta`, evaluated on the same grid.
pub fn kl_to_reference(reference: &GridPdf, combined: TikhonovParam) -> f64 {
    let n = reference.len();
    let dth = 2.0 * std::f64::consts::PI / n as f64;
    let mut q = vec![0.0; n];
    let mut qmax = f64::NEG_INFINITY;
    for (k, qk) in q.iter_mut().enumerate() {
        *qk = (combined.z * Complex64::from_polar(1.0, -reference.theta(k))).re;
        qmax = qmax.max(*qk);
    }
    let mut mass = 0.0;
    for qk in &mut q {
        *qk = (*qk - qmax).exp();
        mass += *qk * dth;
    }
    let mut kl = 0.0;
    for k in 0..n {
        let p = reference.samples()[k];
        if p > 0.0 {
            kl += p * (p / (q[k] / mass).max(1e-300)).ln() * dth;
        }
    }
    kl.max(0.0)
}

/// Per-payload log-priors (one `M`-vector per payload position), or `None`
/// for the non-informative one-shot case.
pub type LogPriors<'a> = Option<&'a [Vec<f64>]>;

pub(crate) fn validate_inputs(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
) -> Result<(), TrackerError> {
    if y.len() != frame.symbols().len() {
        return Err(TrackerError::ObservationLength {
            want: frame.symbols().len(),
            got: y.len(),
        });
    }
    if let Some(p) = priors {
        if p.len() != frame.payload_len() {
            return Err(TrackerError::PriorLength { want: frame.payload_len(), got: p.len() });
        }
        for row in p {
            debug_assert_eq!(row.len(), constellation.order());
        }
    }
    Ok(())
}

/// Runs the configured tracker.
pub fn track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    sigma_w2: f64,
    snr: f64,
    cfg: &TrackerConfig,
    keep_snapshots: bool,
) -> Result<TrackerOutput, TrackerError> {
    cfg.validate()?;
    validate_inputs(y, frame, constellation, priors)?;
    match cfg.algorithm {
        Algorithm::Dmp => dmp_track(y, frame, constellation, priors, cfg.n_theta, sigma_w2, snr),
        Algorithm::CbcGa => Ok(cbc_track(
            y,
            frame,
            constellation,
            priors,
            sigma_w2,
            snr,
            parametric::GammaProjection::Gaussian,
        )),
        Algorithm::CbcCmm => Ok(cbc_track(
            y,
            frame,
            constellation,
            priors,
            sigma_w2,
            snr,
            parametric::GammaProjection::MomentMatching,
        )),
        Algorithm::Skr => Ok(skr_track(y, frame, constellation, priors, sigma_w2, snr)),
        Algorithm::CbcEp => cbc_ep_track(
            y,
            frame,
            constellation,
            priors,
            sigma_w2,
            snr,
            cfg.ep_iterations,
            cfg.zeta,
            keep_snapshots,
        ),
        Algorithm::SkrEp => skr_ep_track(
            y,
            frame,
            constellation,
            priors,
            sigma_w2,
            snr,
            cfg.ep_iterations,
            cfg.zeta,
            keep_snapshots,
        ),
        Algorithm::CbcSkr => {
            Ok(hybrid_cbc_skr_track(y, frame, constellation, priors, sigma_w2, snr, cfg.zeta))
        }
    }
}

pub use parametric::GammaProjection;
