//! Max-log demapping of tracker beliefs into bit LLRs and the reverse
//! direction: damped decoder LLRs into symbol log-priors.

use super::FecError;
use crate::sigmodel::Constellation;
use crate::trackers::SymbolBeliefs;

/// Max-log bit LLRs from extrinsic symbol log-probabilities, ordered by
/// payload stream index, `m` LLRs per symbol, positive favouring bit 1:
/// `llr_k = max over labels with bit k = 1 minus max over labels with
/// bit k = 0`.
pub fn llr_from_logprobs(beliefs: &SymbolBeliefs, constellation: &Constellation) -> Vec<f64> {
    let m = constellation.bits_per_symbol();
    let mut llrs = Vec::with_capacity(beliefs.log_probs.len() * m);
    for lp in &beliefs.log_probs {
        for k in 0..m {
            let mut best_one = f64::NEG_INFINITY;
            let mut best_zero = f64::NEG_INFINITY;
            for (label, &v) in lp.iter().enumerate() {
                if constellation.bit_of_label(label, k) == 1 {
                    best_one = best_one.max(v);
                } else {
                    best_zero = best_zero.max(v);
                }
            }
            llrs.push(best_one - best_zero);
        }
    }
    llrs
}

/// Symbol log-priors from damped prior LLRs:
/// `P(a) ∝ sum_k psi * llr_k * bit_k(a)`, max-normalized per position.
/// `psi = 0` yields uniform priors.
pub fn symbol_priors_from_llrs(
    prior_llrs: &[f64],
    psi: f64,
    constellation: &Constellation,
    payload_len: usize,
) -> Result<Vec<Vec<f64>>, FecError> {
    let m = constellation.bits_per_symbol();
    if prior_llrs.len() != payload_len * m {
        return Err(FecError::LengthMismatch { want: payload_len * m, got: prior_llrs.len() });
    }
    if !(0.0..=1.0).contains(&psi) {
        return Err(FecError::InvalidDamping(psi));
    }
    let order = constellation.order();
    let mut priors = Vec::with_capacity(payload_len);
    for j in 0..payload_len {
        let bits = &prior_llrs[j * m..(j + 1) * m];
        let mut row = Vec::with_capacity(order);
        let mut best = f64::NEG_INFINITY;
        for label in 0..order {
            let mut v = 0.0;
            for (k, &l) in bits.iter().enumerate() {
                if constellation.bit_of_label(label, k) == 1 {
                    v += psi * l;
                }
            }
            best = best.max(v);
            row.push(v);
        }
        for v in &mut row {
            *v -= best;
        }
        priors.push(row);
    }
    Ok(priors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn beliefs_from(rows: Vec<Vec<f64>>) -> SymbolBeliefs {
        SymbolBeliefs { log_probs: rows, z_sigma: Vec::new() }
    }

    #[test]
    fn llr_two_max_rule_4qam() {
        let c = Constellation::build(4).unwrap();
        let beliefs = beliefs_from(vec![vec![0.0, -1.0, -2.0, -3.0]]);
        let llrs = llr_from_logprobs(&beliefs, &c);
        // Bit 0 (MSB): ones = labels {2, 3}, zeros = {0, 1}.
        assert_eq!(llrs[0], (-2.0f64).max(-3.0) - 0.0f64.max(-1.0));
        // Bit 1 (LSB): ones = labels {1, 3}, zeros = {0, 2}.
        assert_eq!(llrs[1], (-1.0f64).max(-3.0) - 0.0f64.max(-2.0));

        // All-equal beliefs give zero LLRs; a common shift changes nothing.
        let flat = beliefs_from(vec![vec![-0.5; 4]]);
        assert!(llr_from_logprobs(&flat, &c).iter().all(|&l| l == 0.0));
        let shifted = beliefs_from(vec![vec![7.0, 6.0, 5.0, 4.0]]);
        let base = beliefs_from(vec![vec![3.0, 2.0, 1.0, 0.0]]);
        assert_eq!(llr_from_logprobs(&shifted, &c), llr_from_logprobs(&base, &c));
    }

    #[test]
    fn priors_from_llrs_cases() {
        let c = Constellation::build(16).unwrap();
        let zeros = vec![0.0; 8];
        let uniform = symbol_priors_from_llrs(&zeros, 0.7, &c, 2).unwrap();
        assert!(uniform.iter().all(|row| row.iter().all(|&v| v == 0.0)));

        let some = vec![3.0, -2.0, 1.0, -4.0];
        let damped_out = symbol_priors_from_llrs(&some, 0.0, &c, 1).unwrap();
        assert!(damped_out[0].iter().all(|&v| v == 0.0));

        // Huge consistent LLRs concentrate on one label.
        let label = 0b1010usize;
        let huge: Vec<f64> = (0..4)
            .map(|k| if c.bit_of_label(label, k) == 1 { 1e3 } else { -1e3 })
            .collect();
        let point = symbol_priors_from_llrs(&huge, 1.0, &c, 1).unwrap();
        assert_eq!(point[0][label], 0.0);
        for (l, &v) in point[0].iter().enumerate() {
            if l != label {
                assert!(v <= -1e3);
            }
        }

        assert!(symbol_priors_from_llrs(&zeros, 1.5, &c, 2).is_err());
        assert!(symbol_priors_from_llrs(&zeros, 0.7, &c, 3).is_err());
    }

    #[test]
    fn noiseless_roundtrip_preserves_decisions() {
        // Beliefs with a clear winner survive llr -> prior -> best-label.
        let c = Constellation::build(16).unwrap();
        let mut lp = vec![-20.0; 16];
        lp[9] = 0.0;
        let beliefs = beliefs_from(vec![lp]);
        let llrs = llr_from_logprobs(&beliefs, &c);
        let priors = symbol_priors_from_llrs(&llrs, 0.7, &c, 1).unwrap();
        let best = priors[0]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(best, 9);
    }
}
