//! LDPC code container with a systematic encoder derived from the
//! parity-check matrix, and the scaled min-sum flooding decoder.
//!
//! The encoder reduces `H` to reduced row-echelon form over GF(2) once at
//! construction; the pivot columns become parity positions, the free columns
//! carry information bits. A rank-deficient `H` is accepted with a warning
//! and yields `k = n - rank` information positions.

use super::{parse_alist, AlistMatrix, FecError};

const WORD: usize = 64;

/// Binary LDPC code defined by a sparse parity-check matrix.
#[derive(Debug, Clone)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    /// Flattened row adjacency: variables of row r are
    /// `edge_var[row_ptr[r]..row_ptr[r+1]]`.
    row_ptr: Vec<usize>,
    edge_var: Vec<usize>,
    /// Incident edge ids per variable.
    var_edges: Vec<Vec<usize>>,
    rank: usize,
    pivot_cols: Vec<usize>,
    info_cols: Vec<usize>,
    /// RREF rows as column bitmasks, one per pivot.
    solve_rows: Vec<Vec<u64>>,
}

impl LdpcCode {
    pub fn from_alist(h: &AlistMatrix) -> Self {
        let words = h.n.div_ceil(WORD);
        let mut rows: Vec<Vec<u64>> = h
            .row_cols
            .iter()
            .map(|cols| {
                let mut bits = vec![0u64; words];
                for &c in cols {
                    bits[c / WORD] |= 1 << (c % WORD);
                }
                bits
            })
            .collect();

        // Reduced row echelon form over GF(2).
        let mut pivot_cols = Vec::new();
        let mut pivot_row = 0usize;
        for col in 0..h.n {
            let (w, b) = (col / WORD, col % WORD);
            let Some(hit) = (pivot_row..h.m).find(|&r| rows[r][w] >> b & 1 == 1) else {
                continue;
            };
            rows.swap(pivot_row, hit);
            for r in 0..h.m {
                if r != pivot_row && rows[r][w] >> b & 1 == 1 {
                    let (src, dst) = if r < pivot_row {
                        let (a, b2) = rows.split_at_mut(pivot_row);
                        (&b2[0], &mut a[r])
                    } else {
                        let (a, b2) = rows.split_at_mut(r);
                        (&a[pivot_row], &mut b2[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= s;
                    }
                }
            }
            pivot_cols.push(col);
            pivot_row += 1;
            if pivot_row == h.m {
                break;
            }
        }
        let rank = pivot_cols.len();
        if rank < h.m {
            log::warn!(
                "parity-check matrix has rank {rank} < {} rows; k = {}",
                h.m,
                h.n - rank
            );
        }
        let pivot_set: Vec<bool> = {
            let mut s = vec![false; h.n];
            for &c in &pivot_cols {
                s[c] = true;
            }
            s
        };
        let info_cols: Vec<usize> = (0..h.n).filter(|&c| !pivot_set[c]).collect();
        let solve_rows = rows[..rank].to_vec();

        let mut row_ptr = Vec::with_capacity(h.m + 1);
        let mut edge_var = Vec::new();
        row_ptr.push(0);
        for cols in &h.row_cols {
            edge_var.extend_from_slice(cols);
            row_ptr.push(edge_var.len());
        }
        let mut var_edges = vec![Vec::new(); h.n];
        for (e, &v) in edge_var.iter().enumerate() {
            var_edges[v].push(e);
        }

        Self {
            n: h.n,
            m: h.m,
            row_ptr,
            edge_var,
            var_edges,
            rank,
            pivot_cols,
            info_cols,
            solve_rows,
        }
    }

    pub fn from_alist_str(text: &str) -> Result<Self, FecError> {
        Ok(Self::from_alist(&parse_alist(text)?))
    }

    pub fn from_alist_file(path: &std::path::Path) -> Result<Self, FecError> {
        let text = std::fs::read_to_string(path).map_err(|e| FecError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_alist_str(&text)
    }

    /// Code length (number of coded bits).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of parity checks (rows of `H`).
    pub fn num_checks(&self) -> usize {
        self.m
    }

    /// Information length `k = n - rank(H)`.
    pub fn k(&self) -> usize {
        self.n - self.rank
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Systematic encoding: information bits fill the free columns, parity
    /// bits solve the reduced parity equations.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>, FecError> {
        if info.len() != self.k() {
            return Err(FecError::LengthMismatch { want: self.k(), got: info.len() });
        }
        let words = self.n.div_ceil(WORD);
        let mut cw = vec![0u64; words];
        for (&col, &bit) in self.info_cols.iter().zip(info) {
            if bit & 1 == 1 {
                cw[col / WORD] |= 1 << (col % WORD);
            }
        }
        // Each RREF row holds exactly one pivot plus free columns, so each
        // parity bit is a direct XOR of information bits.
        for (row, &pivot) in self.solve_rows.iter().zip(&self.pivot_cols) {
            let mut acc = 0u32;
            for (w, (&r, &c)) in row.iter().zip(&cw).enumerate() {
                let mut masked = r & c;
                if w == pivot / WORD {
                    masked &= !(1 << (pivot % WORD));
                }
                acc ^= masked.count_ones() & 1;
            }
            if acc & 1 == 1 {
                cw[pivot / WORD] |= 1 << (pivot % WORD);
            }
        }
        Ok((0..self.n).map(|c| (cw[c / WORD] >> (c % WORD) & 1) as u8).collect())
    }

    /// Information bits of a codeword (the free-column positions).
    pub fn extract_info(&self, codeword: &[u8]) -> Vec<u8> {
        self.info_cols.iter().map(|&c| codeword[c] & 1).collect()
    }

    /// True when `H c = 0`.
    pub fn parity_ok(&self, bits: &[u8]) -> bool {
        (0..self.m).all(|r| {
            self.edge_var[self.row_ptr[r]..self.row_ptr[r + 1]]
                .iter()
                .fold(0u8, |acc, &v| acc ^ (bits[v] & 1))
                == 0
        })
    }
}

/// Check-to-variable messages carried across decoder invocations, one per
/// edge of `H` in row-major order.
#[derive(Debug, Clone)]
pub struct DecoderState {
    check_msgs: Vec<f64>,
}

impl DecoderState {
    pub fn new(code: &LdpcCode) -> Self {
        Self { check_msgs: vec![0.0; code.num_edges()] }
    }
}

/// Result of one [`minsum_decode`] call.
#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    /// Hard decisions on all coded bits.
    pub hard_bits: Vec<u8>,
    /// Extrinsic LLRs (check-message sums), positive favouring bit 1.
    pub extrinsic: Vec<f64>,
    /// Flooding iterations actually executed.
    pub iterations: usize,
    /// Whether the hard decisions satisfy every parity check.
    pub converged: bool,
}

/// Scaled min-sum update of one check node: the message to each edge is
/// `rho * (product of the other edges' signs) * (minimum of the other
/// edges' magnitudes)`.
pub(crate) fn check_update(incoming: &[f64], rho: f64, out: &mut [f64]) {
    let mut sign = 1.0f64;
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut argmin = 0usize;
    for (i, &v) in incoming.iter().enumerate() {
        if v < 0.0 {
            sign = -sign;
        }
        let mag = v.abs();
        if mag < min1 {
            min2 = min1;
            min1 = mag;
            argmin = i;
        } else if mag < min2 {
            min2 = mag;
        }
    }
    for (i, (&v, o)) in incoming.iter().zip(out.iter_mut()).enumerate() {
        let excl_sign = if v < 0.0 { -sign } else { sign };
        let excl_min = if i == argmin { min2 } else { min1 };
        *o = rho * excl_sign * excl_min;
    }
}

/// Flooding min-sum decoding with check-message scaling and early exit on
/// parity satisfaction. `state` carries the check messages across calls so
/// outer demodulation/decoding loops can resume where they stopped.
pub fn minsum_decode(
    llr: &[f64],
    code: &LdpcCode,
    iters: usize,
    rho: f64,
    state: &mut DecoderState,
) -> Result<DecodeOutcome, FecError> {
    if llr.len() != code.n() {
        return Err(FecError::LengthMismatch { want: code.n(), got: llr.len() });
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(FecError::InvalidScale(rho));
    }
    if state.check_msgs.len() != code.num_edges() {
        return Err(FecError::StateMismatch {
            want: code.num_edges(),
            got: state.check_msgs.len(),
        });
    }

    // Internal convention: positive favours bit 0.
    let lam: Vec<f64> = llr.iter().map(|&v| -v).collect();
    let mut colsum = vec![0.0f64; code.n()];
    let recompute_colsum = |msgs: &[f64], colsum: &mut [f64]| {
        colsum.iter_mut().for_each(|v| *v = 0.0);
        for (e, &v) in code.edge_var.iter().enumerate() {
            colsum[v] += msgs[e];
        }
    };
    recompute_colsum(&state.check_msgs, &mut colsum);
    let hard = |colsum: &[f64]| -> Vec<u8> {
        lam.iter().zip(colsum).map(|(&l, &s)| u8::from(l + s < 0.0)).collect()
    };

    let mut bits = hard(&colsum);
    let mut converged = code.parity_ok(&bits);
    let mut executed = 0usize;
    let mut v2c = vec![0.0f64; 16];
    let mut out = vec![0.0f64; 16];
    for _ in 0..iters {
        if converged {
            break;
        }
        executed += 1;
        for r in 0..code.m {
            let lo = code.row_ptr[r];
            let hi = code.row_ptr[r + 1];
            let deg = hi - lo;
            if v2c.len() < deg {
                v2c.resize(deg, 0.0);
                out.resize(deg, 0.0);
            }
            for (i, e) in (lo..hi).enumerate() {
                let v = code.edge_var[e];
                v2c[i] = lam[v] + colsum[v] - state.check_msgs[e];
            }
            check_update(&v2c[..deg], rho, &mut out[..deg]);
            // Defer the column-sum refresh to the end of the flooding pass.
            state.check_msgs[lo..hi].copy_from_slice(&out[..deg]);
        }
        recompute_colsum(&state.check_msgs, &mut colsum);
        bits = hard(&colsum);
        converged = code.parity_ok(&bits);
    }

    let extrinsic: Vec<f64> = colsum.iter().map(|&s| -s).collect();
    Ok(DecodeOutcome { hard_bits: bits, extrinsic, iterations: executed, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn small_code() -> LdpcCode {
        // H = [1 1 0 1 0 0; 0 1 1 0 1 0; 1 0 1 0 0 1], full rank, k = 3.
        let text =
            "6 3\n2 4\n2 2 2 1 1 1\n3 3 3\n1 3\n1 2\n2 3\n1\n2\n3\n1 2 4\n2 3 5\n1 3 6\n";
        LdpcCode::from_alist_str(text).unwrap()
    }

    #[test]
    fn encoder_satisfies_parity() {
        let code = small_code();
        assert_eq!(code.k(), 3);
        assert_eq!(code.encode(&[0, 0, 0]).unwrap(), vec![0; 6]);
        for info in 0..8u8 {
            let bits = [(info >> 2) & 1, (info >> 1) & 1, info & 1];
            let cw = code.encode(&bits).unwrap();
            assert!(code.parity_ok(&cw));
            assert_eq!(code.extract_info(&cw), bits);
        }
        assert!(code.encode(&[0, 1]).is_err());
    }

    #[test]
    fn check_update_pinned_example() {
        let mut out = [0.0; 3];
        check_update(&[2.0, -3.0, 4.0], 0.7, &mut out);
        assert!((out[0] - (-2.1)).abs() < 1e-12, "{out:?}");
        assert!((out[1] - 0.7 * 2.0).abs() < 1e-12);
        assert!((out[2] - (-0.7 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn clean_input_converges_without_iterations() {
        let code = small_code();
        let cw = code.encode(&[1, 0, 1]).unwrap();
        // Positive LLR = bit 1.
        let llr: Vec<f64> = cw.iter().map(|&b| if b == 1 { 20.0 } else { -20.0 }).collect();
        let mut state = DecoderState::new(&code);
        let out = minsum_decode(&llr, &code, 10, 0.7, &mut state).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 1);
        assert_eq!(out.hard_bits, cw);
    }

    #[test]
    fn zero_iterations_passes_through_input_signs() {
        let code = small_code();
        let llr = vec![1.0, -2.0, 3.0, -4.0, 5.0, -6.0];
        let mut state = DecoderState::new(&code);
        let out = minsum_decode(&llr, &code, 0, 0.7, &mut state).unwrap();
        assert_eq!(out.hard_bits, vec![1, 0, 1, 0, 1, 0]);
        assert!(out.extrinsic.iter().all(|&v| v == 0.0));
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn decode_rejects_bad_arguments() {
        let code = small_code();
        let mut state = DecoderState::new(&code);
        assert!(minsum_decode(&[0.0; 5], &code, 1, 0.7, &mut state).is_err());
        assert!(minsum_decode(&[0.0; 6], &code, 1, 0.0, &mut state).is_err());
        assert!(minsum_decode(&[0.0; 6], &code, 1, 1.5, &mut state).is_err());
        let mut bad_state = DecoderState { check_msgs: vec![0.0; 3] };
        assert!(minsum_decode(&[0.0; 6], &code, 1, 0.7, &mut bad_state).is_err());
    }

    #[test]
    fn decode_idempotent_on_clean_output() {
        let code = test_code_96();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
        let cw = code.encode(&info).unwrap();
        let noise = Normal::new(0.0, 0.8).unwrap();
        let llr: Vec<f64> = cw
            .iter()
            .map(|&b| {
                let s = 1.0 - 2.0 * b as f64; // BPSK, bit 1 -> -1
                let y = s + noise.sample(&mut rng);
                -2.0 * y / 0.64
            })
            .collect();
        let mut state = DecoderState::new(&code);
        let first = minsum_decode(&llr, &code, 50, 0.7, &mut state).unwrap();
        if first.converged {
            let clean: Vec<f64> =
                first.hard_bits.iter().map(|&b| if b == 1 { 30.0 } else { -30.0 }).collect();
            let mut state2 = DecoderState::new(&code);
            let second = minsum_decode(&clean, &code, 50, 0.7, &mut state2).unwrap();
            assert_eq!(second.hard_bits, first.hard_bits);
        }
    }

    fn test_code_96() -> LdpcCode {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../codes/regular_3_6_n96.alist");
        LdpcCode::from_alist_file(&path).unwrap()
    }

    #[test]
    fn shipped_code_roundtrip() {
        let code = test_code_96();
        assert_eq!(code.n(), 96);
        assert_eq!(code.k(), 48);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let info: Vec<u8> = (0..48).map(|_| rng.random_range(0..2u8)).collect();
            let cw = code.encode(&info).unwrap();
            assert!(code.parity_ok(&cw));
            assert_eq!(code.extract_info(&cw), info);
        }
    }

    /// Independent scalar flooding min-sum over a dense H, used as the
    /// reference for the production decoder.
    fn oracle_decode(
        h: &[Vec<u8>],
        llr: &[f64],
        iters: usize,
        rho: f64,
    ) -> (Vec<u8>, bool) {
        let m = h.len();
        let n = llr.len();
        let lam: Vec<f64> = llr.iter().map(|&v| -v).collect();
        let mut msgs = vec![vec![0.0f64; n]; m];
        let colsum = |msgs: &Vec<Vec<f64>>| -> Vec<f64> {
            (0..n)
                .map(|v| (0..m).filter(|&r| h[r][v] == 1).map(|r| msgs[r][v]).sum())
                .collect()
        };
        let hard = |cs: &[f64]| -> Vec<u8> {
            lam.iter().zip(cs).map(|(&l, &s)| u8::from(l + s < 0.0)).collect()
        };
        let parity = |bits: &[u8]| -> bool {
            (0..m).all(|r| (0..n).filter(|&v| h[r][v] == 1).fold(0u8, |a, v| a ^ bits[v]) == 0)
        };
        let mut cs = colsum(&msgs);
        let mut bits = hard(&cs);
        let mut ok = parity(&bits);
        for _ in 0..iters {
            if ok {
                break;
            }
            let mut next = vec![vec![0.0f64; n]; m];
            for r in 0..m {
                let vars: Vec<usize> = (0..n).filter(|&v| h[r][v] == 1).collect();
                for &v in &vars {
                    let mut sign = 1.0;
                    let mut minimum = f64::INFINITY;
                    for &u in &vars {
                        if u == v {
                            continue;
                        }
                        let inc = lam[u] + cs[u] - msgs[r][u];
                        if inc < 0.0 {
                            sign = -sign;
                        }
                        minimum = minimum.min(inc.abs());
                    }
                    next[r][v] = rho * sign * minimum;
                }
            }
            msgs = next;
            cs = colsum(&msgs);
            bits = hard(&cs);
            ok = parity(&bits);
        }
        (bits, ok)
    }

    #[test]
    fn decoder_matches_independent_oracle() {
        let code = test_code_96();
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../codes/regular_3_6_n96.alist");
        let h_sparse = parse_alist(&std::fs::read_to_string(path).unwrap()).unwrap();
        let mut h = vec![vec![0u8; h_sparse.n]; h_sparse.m];
        for (r, cols) in h_sparse.row_cols.iter().enumerate() {
            for &c in cols {
                h[r][c] = 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        // Noise level chosen so a nontrivial fraction of frames fail.
        let sigma: f64 = 0.9;
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut failures = 0;
        for _ in 0..100 {
            let info: Vec<u8> = (0..48).map(|_| rng.random_range(0..2u8)).collect();
            let cw = code.encode(&info).unwrap();
            let llr: Vec<f64> = cw
                .iter()
                .map(|&b| {
                    let s = 1.0 - 2.0 * b as f64;
                    let y = s + noise.sample(&mut rng);
                    -2.0 * y / (sigma * sigma)
                })
                .collect();
            let mut state = DecoderState::new(&code);
            let ours = minsum_decode(&llr, &code, 10, 0.7, &mut state).unwrap();
            let (oracle_bits, oracle_ok) = oracle_decode(&h, &llr, 10, 0.7);
            assert_eq!(ours.hard_bits, oracle_bits);
            assert_eq!(ours.converged, oracle_ok);
            if !ours.converged {
                failures += 1;
            }
        }
        assert!(failures > 0, "noise level should produce some failures");
    }
}
