//! The CBC family: out-of-recursion projection of the symbol mixture (either
//! Gaussian-matched or circular-moment-matched), the plain forward/backward
//! recursion, its iterative EP refinement, and the all-pilots reference
//! tracker.

use super::{
    cbc_forward_backward, cap_message, ep_gamma_update, extrinsic_logprobs, observation_factor,
    LogPriors, MessageSet, TrackerError, TrackerOutput,
};
use crate::circmath::{cmm, TikhonovParam, WeightedTikhonov};
use crate::sigmodel::{pilot_observation, Constellation, Frame};
use num_complex::Complex64;

/// How the payload symbol mixture is reduced to one Tikhonov parameter
/// before the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaProjection {
    /// Match a Gaussian to the payload observation: `z = 2 y m* / (N0 + v)`.
    Gaussian,
    /// KL-optimal circular moment matching of the observation mixture.
    MomentMatching,
}

/// Normalizes max-normalized log-priors into the probability domain.
fn prior_probs(log_priors: &[f64]) -> Vec<f64> {
    let max = log_priors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p: Vec<f64> = log_priors.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    p
}

/// Gaussian-approximation projection of a payload position's mixture.
///
/// `priors_n` holds the position's log-priors; `None` is the non-informative
/// case, which for a zero-mean constellation projects to the uniform
/// distribution without any computation.
pub fn project_gamma_ga(
    y_n: Complex64,
    priors_n: Option<&[f64]>,
    constellation: &Constellation,
    snr: f64,
) -> TikhonovParam {
    let Some(log_priors) = priors_n else {
        return TikhonovParam::uniform();
    };
    let p = prior_probs(log_priors);
    let mut mean = Complex64::new(0.0, 0.0);
    let mut power = 0.0;
    for (a, &pa) in constellation.points().iter().zip(&p) {
        mean += a * pa;
        power += a.norm_sqr() * pa;
    }
    let var = (power - mean.norm_sqr()).max(0.0);
    let n0 = 1.0 / snr;
    TikhonovParam::new(2.0 * y_n * mean.conj() / (n0 + var))
}

/// Circular-moment-matching projection of a payload position's mixture.
///
/// Returns the projected parameter and whether a CMM projection was actually
/// performed; the non-informative case short-circuits to the uniform
/// distribution (its moment vanishes for QAM constellations), keeping the CBC
/// complexity accounting at zero.
pub fn project_gamma_cmm(
    y_n: Complex64,
    priors_n: Option<&[f64]>,
    constellation: &Constellation,
    snr: f64,
) -> (TikhonovParam, bool) {
    let Some(log_priors) = priors_n else {
        return (TikhonovParam::uniform(), false);
    };
    let components: Vec<WeightedTikhonov> = constellation
        .points()
        .iter()
        .zip(log_priors)
        .map(|(&a, &lp)| {
            let mut w = observation_factor(y_n, a, snr);
            w.log_weight += lp;
            w
        })
        .collect();
    let z = cmm(&components).expect("constellation mixture is never empty");
    (z, true)
}

/// Projected gamma parameters for a whole frame: observation parameters at
/// the pilots, projected mixtures at the payload.
fn project_gamma_frame(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    snr: f64,
    projection: GammaProjection,
    cmm_calls: &mut usize,
) -> Vec<TikhonovParam> {
    let mut gamma = vec![TikhonovParam::uniform(); frame.symbols().len()];
    let mut payload_j = 0usize;
    for (n, g) in gamma.iter_mut().enumerate() {
        if frame.is_pilot(n) {
            *g = pilot_observation(y[n], frame.symbols()[n], snr);
        } else {
            let priors_n = priors.map(|p| p[payload_j].as_slice());
            *g = match projection {
                GammaProjection::Gaussian => {
                    project_gamma_ga(y[n], priors_n, constellation, snr)
                }
                GammaProjection::MomentMatching => {
                    let (z, used) = project_gamma_cmm(y[n], priors_n, constellation, snr);
                    if used {
                        *cmm_calls += 1;
                    }
                    z
                }
            };
            payload_j += 1;
        }
    }
    gamma
}

/// The plain CBC tracker: project every position once, then run the
/// forward/backward recursion.
pub fn cbc_track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    sigma_w2: f64,
    snr: f64,
    projection: GammaProjection,
) -> TrackerOutput {
    let mut cmm_calls = 0;
    let gamma =
        project_gamma_frame(y, frame, constellation, priors, snr, projection, &mut cmm_calls);
    let messages = cbc_forward_backward(&gamma, sigma_w2);
    let saturated = messages_saturated(&messages);
    let beliefs = extrinsic_logprobs(&messages, y, frame, constellation, snr);
    TrackerOutput { beliefs, messages, cmm_calls, saturated, ..TrackerOutput::default() }
}

/// Reference tracker where every payload symbol is treated as a pilot in the
/// recursion; the extrinsic beliefs still exclude the own-symbol knowledge,
/// so this bounds every payload-blind algorithm from below.
pub fn all_pilots_track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    sigma_w2: f64,
    snr: f64,
) -> TrackerOutput {
    let gamma: Vec<TikhonovParam> = (0..frame.symbols().len())
        .map(|n| pilot_observation(y[n], frame.symbols()[n], snr))
        .collect();
    let messages = cbc_forward_backward(&gamma, sigma_w2);
    let saturated = messages_saturated(&messages);
    let beliefs = extrinsic_logprobs(&messages, y, frame, constellation, snr);
    TrackerOutput { beliefs, messages, saturated, ..TrackerOutput::default() }
}

/// CBC refined by expectation propagation: at each iteration the posterior
/// mixture at every payload position is projected, the previous extrinsic
/// parameters are divided out, and the result is smoothed into the running
/// gamma estimate. The first iteration reproduces plain CBC with the
/// moment-matching projection.
#[allow(clippy::too_many_arguments)]
pub fn cbc_ep_track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    sigma_w2: f64,
    snr: f64,
    ep_iterations: usize,
    zeta: f64,
    keep_snapshots: bool,
) -> Result<TrackerOutput, TrackerError> {
    if ep_iterations < 1 {
        return Err(TrackerError::InvalidIterations);
    }
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(TrackerError::InvalidZeta(zeta));
    }
    let m = constellation.order();
    let n_sym = frame.symbols().len();
    let payload = frame.payload_indices();
    let mut cmm_calls = 0usize;
    let mut saturated = false;
    let mut snapshots = keep_snapshots.then(Vec::new);

    // Fixed weights eta(a) and observation parameters z_g(a) per payload slot.
    let etas: Vec<Vec<f64>> = (0..payload.len())
        .map(|j| {
            (0..m)
                .map(|a| {
                    -snr * constellation.point(a).norm_sqr() + priors.map_or(0.0, |p| p[j][a])
                })
                .collect()
        })
        .collect();
    let z_g: Vec<Vec<Complex64>> = payload
        .iter()
        .map(|&n| constellation.points().iter().map(|a| 2.0 * snr * y[n] * a.conj()).collect())
        .collect();

    // Pilot gammas are fixed across iterations; z_Sigma^{(0)}(a) = z_g(a).
    let mut gamma = vec![TikhonovParam::uniform(); n_sym];
    for n in 0..n_sym {
        if frame.is_pilot(n) {
            gamma[n] = pilot_observation(y[n], frame.symbols()[n], snr);
        }
    }
    let mut z_sigma: Vec<Vec<Complex64>> = z_g.clone();
    let mut z_ab_prev = vec![TikhonovParam::uniform(); n_sym];
    let mut messages = MessageSet::default();

    for i in 1..=ep_iterations {
        let first = i == 1;
        for (j, &n) in payload.iter().enumerate() {
            if first && priors.is_none() {
                // Non-informative first projection: the mixture moment is
                // zero for QAM, no CMM spent.
                gamma[n] = TikhonovParam::uniform();
                continue;
            }
            let comps: Vec<WeightedTikhonov> = (0..m)
                .map(|a| WeightedTikhonov::new(etas[j][a], TikhonovParam::new(z_sigma[j][a])))
                .collect();
            let z_post = cmm(&comps).expect("payload mixture is never empty");
            cmm_calls += 1;
            gamma[n] = cap_message(
                ep_gamma_update(z_post, z_ab_prev[n], gamma[n], zeta, first),
                &mut saturated,
            );
        }
        messages = cbc_forward_backward(&gamma, sigma_w2);
        saturated |= messages_saturated(&messages);
        for (j, &n) in payload.iter().enumerate() {
            let ab = messages.z_alpha[n].z + messages.z_beta[n].z;
            z_ab_prev[n] = TikhonovParam::new(ab);
            for a in 0..m {
                z_sigma[j][a] = z_g[j][a] + ab;
            }
        }
        if let Some(s) = snapshots.as_mut() {
            s.push(messages.clone());
        }
    }

    let beliefs = extrinsic_logprobs(&messages, y, frame, constellation, snr);
    Ok(TrackerOutput {
        beliefs,
        messages,
        cmm_calls,
        saturated,
        posterior_grids: None,
        snapshots,
    })
}

fn messages_saturated(ms: &MessageSet) -> bool {
    ms.z_alpha
        .iter()
        .chain(ms.z_beta.iter())
        .any(|p| p.concentration() >= super::MESSAGE_CAP)
}
