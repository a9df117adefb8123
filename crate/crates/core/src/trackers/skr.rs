//! The SKR family: intra-recursion projection (one CMM per payload position
//! and direction), its EP refinement, and the CBC+SKR hybrid that seeds one
//! SKR pass with the pilot-only CBC messages.

use super::{
    cap_message, cbc_track, extrinsic_logprobs, GammaProjection, LogPriors, MessageSet,
    TrackerError, TrackerOutput,
};
use crate::circmath::{cmm, convolve_wrapped_gaussian, TikhonovParam, WeightedTikhonov,
    WrappedGaussianParam};
use crate::sigmodel::{pilot_observation, Constellation, Frame};
use num_complex::Complex64;

/// Per-frame constants shared by the forward and backward sweeps.
struct SkrContext<'a> {
    y: &'a [Complex64],
    frame: &'a Frame,
    constellation: &'a Constellation,
    /// `eta(a) = -snr |a|^2 + prior`, indexed by payload slot.
    etas: Vec<Vec<f64>>,
    /// Payload slot for each frame index (usize::MAX at pilots).
    slot_of: Vec<usize>,
    walk: WrappedGaussianParam,
    snr: f64,
}

impl<'a> SkrContext<'a> {
    fn new(
        y: &'a [Complex64],
        frame: &'a Frame,
        constellation: &'a Constellation,
        priors: LogPriors,
        sigma_w2: f64,
        snr: f64,
    ) -> Self {
        let m = constellation.order();
        let etas = (0..frame.payload_len())
            .map(|j| {
                (0..m)
                    .map(|a| {
                        -snr * constellation.point(a).norm_sqr()
                            + priors.map_or(0.0, |p| p[j][a])
                    })
                    .collect()
            })
            .collect();
        let mut slot_of = vec![usize::MAX; frame.symbols().len()];
        for (j, &n) in frame.payload_indices().iter().enumerate() {
            slot_of[n] = j;
        }
        Self {
            y,
            frame,
            constellation,
            etas,
            slot_of,
            walk: WrappedGaussianParam { variance: sigma_w2 },
            snr,
        }
    }

    /// Projects `message * gamma_n` onto one Tikhonov parameter. At a pilot
    /// the mixture is a singleton and no CMM is spent; at a payload position
    /// the optional `extra` parameter (the opposite-direction message from
    /// the previous iteration) joins the mixture and is subtracted from the
    /// projection afterwards.
    fn project(
        &self,
        n: usize,
        message: TikhonovParam,
        extra: Option<Complex64>,
        cmm_calls: &mut usize,
    ) -> TikhonovParam {
        if self.frame.is_pilot(n) {
            let z_g = pilot_observation(self.y[n], self.frame.symbols()[n], self.snr);
            return TikhonovParam::new(message.z + z_g.z);
        }
        let j = self.slot_of[n];
        let shift = extra.unwrap_or(Complex64::new(0.0, 0.0));
        let comps: Vec<WeightedTikhonov> = self
            .constellation
            .points()
            .iter()
            .enumerate()
            .map(|(a, point)| {
                let z_g = 2.0 * self.snr * self.y[n] * point.conj();
                WeightedTikhonov::new(
                    self.etas[j][a],
                    TikhonovParam::new(message.z + z_g + shift),
                )
            })
            .collect();
        let projected = cmm(&comps).expect("payload mixture is never empty");
        *cmm_calls += 1;
        TikhonovParam::new(projected.z - shift)
    }
}

/// One full forward/backward SKR sweep. `prev` carries the previous
/// iteration's `(z_alpha, z_beta)`; when present, the opposite message is
/// folded into each projection and the convolution output is smoothed with
/// weight `zeta` against the previous messages.
#[allow(clippy::type_complexity)]
fn skr_sweep(
    ctx: &SkrContext,
    prev: Option<(&[TikhonovParam], &[TikhonovParam])>,
    zeta: f64,
    cmm_calls: &mut usize,
    saturated: &mut bool,
) -> (Vec<TikhonovParam>, Vec<TikhonovParam>, Vec<TikhonovParam>, Vec<TikhonovParam>) {
    let n_last = ctx.frame.last_index();
    let uniform = TikhonovParam::uniform();
    let mut z_alpha = vec![uniform; n_last + 1];
    let mut z_beta = vec![uniform; n_last + 1];
    let mut z_check_alpha = vec![uniform; n_last + 1];
    let mut z_check_beta = vec![uniform; n_last + 1];

    z_check_alpha[0] = ctx.project(0, uniform, None, cmm_calls);
    for n in 1..=n_last {
        let raw = convolve_wrapped_gaussian(z_check_alpha[n - 1], ctx.walk);
        let smoothed = match prev {
            Some((pa, _)) => TikhonovParam::new(zeta * raw.z + (1.0 - zeta) * pa[n].z),
            None => raw,
        };
        z_alpha[n] = cap_message(smoothed, saturated);
        let extra = prev.map(|(_, pb)| pb[n].z);
        z_check_alpha[n] = cap_message(ctx.project(n, z_alpha[n], extra, cmm_calls), saturated);
    }

    z_check_beta[n_last] = ctx.project(n_last, uniform, None, cmm_calls);
    for n in (0..n_last).rev() {
        let raw = convolve_wrapped_gaussian(z_check_beta[n + 1], ctx.walk);
        let smoothed = match prev {
            Some((_, pb)) => TikhonovParam::new(zeta * raw.z + (1.0 - zeta) * pb[n].z),
            None => raw,
        };
        z_beta[n] = cap_message(smoothed, saturated);
        let extra = prev.map(|(pa, _)| pa[n].z);
        z_check_beta[n] = cap_message(ctx.project(n, z_beta[n], extra, cmm_calls), saturated);
    }

    (z_alpha, z_check_alpha, z_beta, z_check_beta)
}

fn output_from_sweep(
    ctx: &SkrContext,
    sweep: (Vec<TikhonovParam>, Vec<TikhonovParam>, Vec<TikhonovParam>, Vec<TikhonovParam>),
    gamma: Vec<TikhonovParam>,
    cmm_calls: usize,
    saturated: bool,
    snapshots: Option<Vec<MessageSet>>,
) -> TrackerOutput {
    let (z_alpha, z_check_alpha, z_beta, z_check_beta) = sweep;
    let messages = MessageSet {
        z_alpha,
        z_beta,
        z_gamma_tilde: gamma,
        z_check_alpha: Some(z_check_alpha),
        z_check_beta: Some(z_check_beta),
    };
    let beliefs = extrinsic_logprobs(&messages, ctx.y, ctx.frame, ctx.constellation, ctx.snr);
    TrackerOutput { beliefs, messages, cmm_calls, saturated, posterior_grids: None, snapshots }
}

/// The plain SKR tracker: the projection runs inside each recursion step,
/// two CMM projections per payload symbol in total.
pub fn skr_track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    sigma_w2: f64,
    snr: f64,
) -> TrackerOutput {
    let ctx = SkrContext::new(y, frame, constellation, priors, sigma_w2, snr);
    let mut cmm_calls = 0;
    let mut saturated = false;
    let sweep = skr_sweep(&ctx, None, 1.0, &mut cmm_calls, &mut saturated);
    let gamma = vec![TikhonovParam::uniform(); frame.symbols().len()];
    output_from_sweep(&ctx, sweep, gamma, cmm_calls, saturated, None)
}

/// SKR refined by expectation propagation: each iteration folds the
/// opposite-direction messages of the previous iteration into the
/// projections and smooths the recursion output with weight `zeta`. The
/// first iteration is exactly [`skr_track`].
#[allow(clippy::too_many_arguments)]
pub fn skr_ep_track(
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
    let ctx = SkrContext::new(y, frame, constellation, priors, sigma_w2, snr);
    let mut cmm_calls = 0;
    let mut saturated = false;
    let mut snapshots = keep_snapshots.then(Vec::new);

    let mut sweep = skr_sweep(&ctx, None, zeta, &mut cmm_calls, &mut saturated);
    push_snapshot(&mut snapshots, &sweep);
    for _ in 2..=ep_iterations {
        let prev = (sweep.0.clone(), sweep.2.clone());
        sweep = skr_sweep(&ctx, Some((&prev.0, &prev.1)), zeta, &mut cmm_calls, &mut saturated);
        push_snapshot(&mut snapshots, &sweep);
    }

    let gamma = vec![TikhonovParam::uniform(); frame.symbols().len()];
    Ok(output_from_sweep(&ctx, sweep, gamma, cmm_calls, saturated, snapshots))
}

fn push_snapshot(
    snapshots: &mut Option<Vec<MessageSet>>,
    sweep: &(Vec<TikhonovParam>, Vec<TikhonovParam>, Vec<TikhonovParam>, Vec<TikhonovParam>),
) {
    if let Some(s) = snapshots.as_mut() {
        s.push(MessageSet {
            z_alpha: sweep.0.clone(),
            z_beta: sweep.2.clone(),
            z_gamma_tilde: Vec::new(),
            z_check_alpha: Some(sweep.1.clone()),
            z_check_beta: Some(sweep.3.clone()),
        });
    }
}

/// Hybrid CBC+SKR: a pilot-only CBC stage provides the seed messages, then a
/// single smoothed SKR iteration consumes them. Costs two CMM projections
/// per payload symbol, like plain SKR, but uses both past and future
/// information at every position.
pub fn hybrid_cbc_skr_track(
    y: &[Complex64],
    frame: &Frame,
    constellation: &Constellation,
    priors: LogPriors,
    sigma_w2: f64,
    snr: f64,
    zeta: f64,
) -> TrackerOutput {
    let stage1 = cbc_track(
        y,
        frame,
        constellation,
        priors,
        sigma_w2,
        snr,
        GammaProjection::MomentMatching,
    );
    let ctx = SkrContext::new(y, frame, constellation, priors, sigma_w2, snr);
    let mut cmm_calls = stage1.cmm_calls;
    let mut saturated = stage1.saturated;
    let sweep = skr_sweep(
        &ctx,
        Some((&stage1.messages.z_alpha, &stage1.messages.z_beta)),
        zeta,
        &mut cmm_calls,
        &mut saturated,
    );
    let gamma = stage1.messages.z_gamma_tilde.clone();
    output_from_sweep(&ctx, sweep, gamma, cmm_calls, saturated, None)
}
