//! Generalized mutual information of a demapper LLR stream against the
//! transmitted coded bits, with the mismatched-decoding scale search.

use super::FecError;

/// `log2(1 + e^u)` without overflow.
fn log2_1p_exp(u: f64) -> f64 {
    if u > 36.0 {
        u / std::f64::consts::LN_2
    } else if u < -36.0 {
        u.exp() / std::f64::consts::LN_2
    } else {
        u.exp().ln_1p() / std::f64::consts::LN_2
    }
}

fn objective(llr: &[f64], bits: &[u8], s: f64) -> f64 {
    let sum: f64 = llr
        .iter()
        .zip(bits)
        .map(|(&l, &c)| log2_1p_exp(s * l * (1.0 - 2.0 * c as f64)))
        .sum();
    sum / llr.len() as f64
}

/// GMI per coded bit in `[0, 1]`:
/// `1 - min_s (1/Nc) sum log2(1 + exp(s lambda (1 - 2c)))`, the minimum
/// taken over `s in [0, 8]` by golden-section search (the objective is
/// convex in `s`).
pub fn gmi(llr: &[f64], coded_bits: &[u8]) -> Result<f64, FecError> {
    if llr.len() != coded_bits.len() {
        return Err(FecError::LengthMismatch { want: coded_bits.len(), got: llr.len() });
    }
    if llr.is_empty() {
        return Ok(0.0);
    }
    let golden: f64 = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 8.0f64);
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let mut fc = objective(llr, coded_bits, c);
    let mut fd = objective(llr, coded_bits, d);
    while b - a > 1e-5 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = objective(llr, coded_bits, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = objective(llr, coded_bits, d);
        }
    }
    let s = 0.5 * (a + b);
    let best = objective(llr, coded_bits, s)
        .min(objective(llr, coded_bits, 0.0))
        .min(objective(llr, coded_bits, 8.0));
    Ok((1.0 - best).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_and_zero_llrs() {
        let bits: Vec<u8> = (0..64).map(|i| (i % 2) as u8).collect();
        let perfect: Vec<f64> =
            bits.iter().map(|&c| if c == 1 { 1e3 } else { -1e3 }).collect();
        assert!((gmi(&perfect, &bits).unwrap() - 1.0).abs() < 1e-9);

        let zeros = vec![0.0; 64];
        assert!(gmi(&zeros, &bits).unwrap().abs() < 1e-9);

        assert!(gmi(&zeros, &bits[..10]).is_err());
    }

    #[test]
    fn matches_dense_grid_search_with_flipped_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bits: Vec<u8> = (0..256).map(|_| rng.random_range(0..2u8)).collect();
        let mag = 1.7;
        // Half the bits carry a wrong-sign LLR of the same magnitude.
        let llr: Vec<f64> = bits
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let sign = if c == 1 { 1.0 } else { -1.0 };
                if i % 2 == 0 {
                    sign * mag
                } else {
                    -sign * mag
                }
            })
            .collect();
        let fast = gmi(&llr, &bits).unwrap();
        let dense = (0..=800_000)
            .map(|i| objective(&llr, &bits, 8.0 * i as f64 / 800_000.0))
            .fold(f64::INFINITY, f64::min);
        let dense_gmi = (1.0 - dense).clamp(0.0, 1.0);
        assert!((fast - dense_gmi).abs() < 1e-4, "fast={fast} dense={dense_gmi}");
    }

    #[test]
    fn consistent_magnitude_never_decreases_gmi() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bits: Vec<u8> = (0..128).map(|_| rng.random_range(0..2u8)).collect();
        let base: Vec<f64> = bits
            .iter()
            .map(|&c| {
                let sign = if c == 1 { 1.0 } else { -1.0 };
                sign * rng.random::<f64>() * 2.0 + rng.random::<f64>() - 0.5
            })
            .collect();
        let g0 = gmi(&base, &bits).unwrap();
        let boosted: Vec<f64> = base
            .iter()
            .zip(&bits)
            .map(|(&l, &c)| l + if c == 1 { 0.8 } else { -0.8 })
            .collect();
        let g1 = gmi(&boosted, &bits).unwrap();
        assert!(g1 >= g0 - 1e-9, "g0={g0} g1={g1}");
    }
}
