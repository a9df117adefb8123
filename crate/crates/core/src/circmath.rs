//! Circular-distribution primitives: Tikhonov algebra, Bessel-ratio
//! approximations, circular moment matching, and the Tikhonov/wrapped-Gaussian
//! convolution rule.
//!
//! The Tikhonov distribution is carried in its unnormalized form
//! `T(theta; z) = exp(Re[z * e^{-j*theta}])`, so a distribution is fully
//! described by one complex parameter `z`: `arg z` is the circular mean and
//! `|z|` the concentration. `z = 0` is the uniform distribution on the circle.
//! Multiplication of densities is addition of parameters, which is what makes
//! the family attractive for message passing.
//!
//! Two tiers of Bessel evaluation coexist here on purpose:
//!
//! * [`bessel_ratio`], [`bessel_ratio_inv`] and [`log_bessel_i0`] are the
//!   cheap piecewise forms used inside the tracking recursions (they are also
//!   baked into the closed-form convolution rule). The pair
//!   `bessel_ratio_inv(bessel_ratio(x)) = x` is exact by construction.
//! * [`cmm`] and the pdf evaluations use accurate series/asymptotic kernels
//!   (`log_i0`, `bessel_ratio_accurate`), because moment matching is only the
//!   KL-optimal projection when the true first circular moment is matched;
//!   the piecewise forms displace the projected parameter by up to ~0.25 in
//!   `|z|`, which is far outside the tolerance of the projection oracle.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Errors from the circular-math primitives.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CircMathError {
    /// Argument outside the function domain (negative or non-finite).
    #[error("expected a finite value in the function domain, got {0}")]
    Domain(f64),
    /// CMM invoked with no usable mixture component.
    #[error("circular moment matching needs at least one component with finite weight")]
    EmptyMixture,
}

/// Parameter of an unnormalized Tikhonov distribution `exp(Re[z e^{-j theta}])`.
///
/// `arg z` is the circular mean, `|z|` the concentration; `z = 0` is the
/// uniform distribution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TikhonovParam {
    pub z: Complex64,
}

impl TikhonovParam {
    pub fn new(z: Complex64) -> Self {
        debug_assert!(z.re.is_finite() && z.im.is_finite());
        Self { z }
    }

    /// The uniform circular distribution.
    pub fn uniform() -> Self {
        Self { z: Complex64::new(0.0, 0.0) }
    }

    /// Concentration `|z|`.
    pub fn concentration(&self) -> f64 {
        self.z.norm()
    }

    /// Circular mean `arg z` in `(-pi, pi]`.
    pub fn mean(&self) -> f64 {
        self.z.arg()
    }
}

/// One component of a Tikhonov mixture, weighted in the natural-log domain.
///
/// `log_weight = -inf` marks an absent component; it contributes nothing to
/// the mixture moment.
#[derive(Debug, Clone, Copy)]
pub struct WeightedTikhonov {
    pub log_weight: f64,
    pub param: TikhonovParam,
}

impl WeightedTikhonov {
    pub fn new(log_weight: f64, param: TikhonovParam) -> Self {
        debug_assert!(!log_weight.is_nan());
        Self { log_weight, param }
    }
}

/// Parameter of a zero-mean wrapped Gaussian on the circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedGaussianParam {
    /// Variance of the underlying line Gaussian, in radians^2. Must be > 0.
    pub variance: f64,
}

impl WrappedGaussianParam {
    pub fn new(variance: f64) -> Result<Self, CircMathError> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(CircMathError::Domain(variance));
        }
        Ok(Self { variance })
    }
}

/// Result of inverting the Bessel ratio; `saturated` flags an input clamped
/// at the top of the domain (`y >= 1 - 1e-12`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Concentration {
    pub value: f64,
    pub saturated: bool,
}

/// Inputs `y >= 1 - SATURATION_MARGIN` are clamped before inversion.
pub const SATURATION_MARGIN: f64 = 1e-12;

/// Piecewise approximation of `B(x) = I1(x)/I0(x)`: `x/2` for `x <= 1`,
/// `1 - 1/(2x)` for `x > 1`. The two branches meet at `x = 1`.
pub fn bessel_ratio(x: f64) -> Result<f64, CircMathError> {
    if !x.is_finite() || x < 0.0 {
        return Err(CircMathError::Domain(x));
    }
    Ok(if x <= 1.0 { 0.5 * x } else { 1.0 - 0.5 / x })
}

/// Exact two-sided inverse of [`bessel_ratio`]: `2y` for `y <= 1/2`,
/// `1/(2(1-y))` for `y > 1/2`. Inputs at or above `1 - 1e-12` are clamped and
/// flagged as saturated.
pub fn bessel_ratio_inv(y: f64) -> Result<Concentration, CircMathError> {
    if !y.is_finite() || y < 0.0 {
        return Err(CircMathError::Domain(y));
    }
    let saturated = y >= 1.0 - SATURATION_MARGIN;
    let y = if saturated { 1.0 - SATURATION_MARGIN } else { y };
    let value = if y <= 0.5 { 2.0 * y } else { 0.5 / (1.0 - y) };
    Ok(Concentration { value, saturated })
}

/// Log-domain `I0` in the form used by the tracking recursions:
/// `x - 0.5*ln(2 pi x)` for `x > 1/(2 pi)`, plain `x` otherwise.
///
/// This is the large-argument form truncated so that the value is exact at
/// `x = 0`; it never overflows. Where an accurate `ln I0` matters (pdf
/// normalization, mixture weights in [`cmm`]) the series kernel `log_i0` is
/// used instead.
pub fn log_bessel_i0(x: f64) -> Result<f64, CircMathError> {
    if !x.is_finite() || x < 0.0 {
        return Err(CircMathError::Domain(x));
    }
    Ok(hat_i0(x))
}

/// Unchecked [`log_bessel_i0`] for the recursion hot paths.
pub(crate) fn hat_i0(x: f64) -> f64 {
    let delta = if x > 0.5 / PI { -0.5 * (2.0 * PI * x).ln() } else { 0.0 };
    x + delta
}

// ---------------------------------------------------------------------------
// Accurate Bessel kernels (series for small arguments, asymptotic beyond).
// ---------------------------------------------------------------------------

const SERIES_LIMIT: f64 = 30.0;

/// `I0(x)` by power series; valid for `0 <= x <= SERIES_LIMIT`.
fn i0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut m = 1.0;
    loop {
        term *= q / (m * m);
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
        m += 1.0;
    }
}

/// `I1(x)` by power series; valid for `0 <= x <= SERIES_LIMIT`.
fn i1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    let mut m = 1.0;
    loop {
        term *= q / (m * (m + 1.0));
        sum += term;
        if term < sum * 1e-17 {
            return sum;
        }
        m += 1.0;
    }
}

/// Asymptotic correction polynomials: `I0(x) ~ e^x/sqrt(2 pi x) * P0(1/x)`,
/// `I1(x) ~ e^x/sqrt(2 pi x) * P1(1/x)`.
fn asymptotic_p0_p1(x: f64) -> (f64, f64) {
    // Coefficients of ((2k-1)!!)^2 / (8^k k!) and its I1 counterpart.
    const C0: [f64; 9] = [
        1.0,
        1.25e-1,
        7.03125e-2,
        7.32421875e-2,
        1.1215209960937e-1,
        2.2710800170898e-1,
        5.7250142097473e-1,
        1.7277275025845,
        6.0740420012735,
    ];
    const C1: [f64; 9] = [
        1.0,
        -3.75e-1,
        -1.171875e-1,
        -1.025390625e-1,
        -1.4419555664062e-1,
        -2.7757644653320e-1,
        -6.7659258842468e-1,
        -1.9935317337513,
        -6.8839142681099,
    ];
    let u = 1.0 / x;
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    for k in (0..9).rev() {
        p0 = p0 * u + C0[k];
        p1 = p1 * u + C1[k];
    }
    (p0, p1)
}

/// Accurate `ln I0(x)`; never overflows.
pub(crate) fn log_i0(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= SERIES_LIMIT {
        i0_series(x).ln()
    } else {
        let (p0, _) = asymptotic_p0_p1(x);
        x - 0.5 * (2.0 * PI * x).ln() + p0.ln()
    }
}

/// Accurate `B(x) = I1(x)/I0(x)`.
pub(crate) fn bessel_ratio_accurate(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x == 0.0 {
        0.0
    } else if x <= SERIES_LIMIT {
        i1_series(x) / i0_series(x)
    } else {
        let (p0, p1) = asymptotic_p0_p1(x);
        p1 / p0
    }
}

/// Accurate inverse of `B` by Newton iteration seeded with the piecewise
/// inverse; `B'(x) = 1 - B/x - B^2` from the Bessel recurrences.
pub(crate) fn bessel_ratio_inv_accurate(y: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&y));
    if y == 0.0 {
        return 0.0;
    }
    let mut x = if y <= 0.5 { 2.0 * y } else { 0.5 / (1.0 - y) };
    for _ in 0..64 {
        let b = bessel_ratio_accurate(x);
        let slope = 1.0 - b / x - b * b;
        if slope <= 0.0 {
            break;
        }
        let step = (b - y) / slope;
        x = (x - step).max(x * 0.1).max(1e-300);
        if step.abs() <= 1e-15 * x.max(1.0) {
            break;
        }
    }
    x
}

// ---------------------------------------------------------------------------
// Tikhonov algebra
// ---------------------------------------------------------------------------

/// First circular moment of the normalized Tikhonov distribution:
/// `B(|z|) * z/|z|`, with the piecewise `B` of the recursions.
pub fn tikhonov_moment(p: TikhonovParam) -> Complex64 {
    let r = p.concentration();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let b = if r <= 1.0 { 0.5 * r } else { 1.0 - 0.5 / r };
    p.z * (b / r)
}

/// Product of two Tikhonov densities: parameters add.
pub fn tikhonov_multiply(a: TikhonovParam, b: TikhonovParam) -> TikhonovParam {
    TikhonovParam::new(a.z + b.z)
}

/// Moment-matched convolution of a Tikhonov density with a zero-mean wrapped
/// Gaussian: `z/(1 + sigma^2 |z|)` for `|z| > 1`, `z (1 - sigma^2/2)` for
/// `|z| <= 1`. The angle is preserved and the concentration never grows.
pub fn convolve_wrapped_gaussian(p: TikhonovParam, w: WrappedGaussianParam) -> TikhonovParam {
    let r = p.concentration();
    let s2 = w.variance;
    let z = if r > 1.0 {
        p.z / (1.0 + s2 * r)
    } else {
        p.z * (1.0 - 0.5 * s2)
    };
    TikhonovParam::new(z)
}

/// KL-optimal projection of a Tikhonov mixture onto a single Tikhonov
/// distribution via circular moment matching.
///
/// Weights arrive in the log domain; they are combined with the component
/// normalizations `ln I0(|z(a)|)`, max-subtracted, and exponentiated. The
/// matched parameter is `B^{-1}(|mu|) * mu/|mu|` where `mu` is the mixture's
/// first circular moment. A single active component is returned unchanged,
/// and a zero moment maps to the uniform distribution.
pub fn cmm(components: &[WeightedTikhonov]) -> Result<TikhonovParam, CircMathError> {
    let mut last_active = None;
    let mut n_active = 0usize;
    let mut eta_max = f64::NEG_INFINITY;
    for (i, c) in components.iter().enumerate() {
        if c.log_weight == f64::NEG_INFINITY {
            continue;
        }
        if !c.log_weight.is_finite() {
            return Err(CircMathError::Domain(c.log_weight));
        }
        n_active += 1;
        last_active = Some(i);
        let eta = c.log_weight + log_i0(c.param.concentration());
        if eta > eta_max {
            eta_max = eta;
        }
    }
    let Some(last) = last_active else {
        return Err(CircMathError::EmptyMixture);
    };
    if n_active == 1 {
        return Ok(components[last].param);
    }

    let mut mu = Complex64::new(0.0, 0.0);
    let mut total = 0.0;
    for c in components {
        if c.log_weight == f64::NEG_INFINITY {
            continue;
        }
        let r = c.param.concentration();
        let xi = (c.log_weight + log_i0(r) - eta_max).exp();
        total += xi;
        if r > 0.0 {
            // B(0) = 0: a concentration-zero component adds mass but no moment.
            mu += c.param.z * (xi * bessel_ratio_accurate(r) / r);
        }
    }
    mu /= total;

    let m = mu.norm();
    if m == 0.0 {
        return Ok(TikhonovParam::uniform());
    }
    let m = m.min(1.0 - SATURATION_MARGIN);
    let conc = bessel_ratio_inv_accurate(m);
    Ok(TikhonovParam::new(mu * (conc / mu.norm())))
}

/// Normalized Tikhonov density at `theta`.
pub fn tikhonov_pdf(theta: f64, p: TikhonovParam) -> f64 {
    let r = p.concentration();
    ((p.z * Complex64::from_polar(1.0, -theta)).re - log_i0(r)).exp() / (2.0 * PI)
}

/// Zero-mean wrapped Gaussian density at `theta`, truncated at
/// `|k| <= max(2, ceil(4 sigma / (2 pi)) + 1)` wrap terms.
pub fn wrapped_gaussian_pdf(theta: f64, w: WrappedGaussianParam) -> f64 {
    let sigma = w.variance.sqrt();
    let kmax = ((4.0 * sigma / (2.0 * PI)).ceil() as i64 + 1).max(2);
    let norm = 1.0 / (2.0 * PI * w.variance).sqrt();
    let mut sum = 0.0;
    for k in -kmax..=kmax {
        let d = theta - 2.0 * PI * k as f64;
        sum += (-0.5 * d * d / w.variance).exp();
    }
    norm * sum
}
