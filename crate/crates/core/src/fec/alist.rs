//! Parser for the MacKay alist sparse-matrix format.
//!
//! Layout: line 1 `n m` (columns, rows), line 2 the maximum column and row
//! degrees, line 3 the `n` column degrees, line 4 the `m` row degrees, then
//! `n` lines of 1-based row indices per column and `m` lines of 1-based
//! column indices per row. Zero entries pad fixed-width files and are
//! ignored.

use super::FecError;

/// Sparse binary matrix from an alist file.
#[derive(Debug, Clone)]
pub struct AlistMatrix {
    /// Number of columns (code length).
    pub n: usize,
    /// Number of rows (parity checks).
    pub m: usize,
    /// Row indices per column, 0-based, sorted.
    pub col_rows: Vec<Vec<usize>>,
    /// Column indices per row, 0-based, sorted.
    pub row_cols: Vec<Vec<usize>>,
}

fn parse_values(line: &str, line_no: usize) -> Result<Vec<usize>, FecError> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| FecError::AlistParse {
                line: line_no,
                message: format!("expected an unsigned integer, got {tok:?}"),
            })
        })
        .collect()
}

pub fn parse_alist(text: &str) -> Result<AlistMatrix, FecError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    let fail = |line: usize, message: String| FecError::AlistParse { line, message };
    let get = |idx: usize| -> Result<(usize, &str), FecError> {
        lines
            .get(idx)
            .copied()
            .ok_or_else(|| fail(lines.last().map_or(1, |l| l.0), "file truncated".into()))
    };

    let (ln, header) = get(0)?;
    let header = parse_values(header, ln)?;
    if header.len() != 2 || header[0] == 0 || header[1] == 0 {
        return Err(fail(ln, "header must hold the two positive sizes `n m`".into()));
    }
    let (n, m) = (header[0], header[1]);

    let (ln, maxdeg) = get(1)?;
    let maxdeg = parse_values(maxdeg, ln)?;
    if maxdeg.len() != 2 {
        return Err(fail(ln, "expected the two maximum degrees".into()));
    }

    let (ln, coldeg_line) = get(2)?;
    let col_deg = parse_values(coldeg_line, ln)?;
    if col_deg.len() != n {
        return Err(fail(ln, format!("expected {n} column degrees, got {}", col_deg.len())));
    }
    let (ln, rowdeg_line) = get(3)?;
    let row_deg = parse_values(rowdeg_line, ln)?;
    if row_deg.len() != m {
        return Err(fail(ln, format!("expected {m} row degrees, got {}", row_deg.len())));
    }

    if lines.len() < 4 + n + m {
        return Err(fail(
            lines.last().map_or(1, |l| l.0),
            format!("expected {} index lines, file holds {}", n + m, lines.len() - 4),
        ));
    }

    let read_index_lines = |offset: usize,
                            count: usize,
                            degrees: &[usize],
                            bound: usize,
                            what: &str|
     -> Result<Vec<Vec<usize>>, FecError> {
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let (ln, line) = get(offset + i)?;
            let mut vals = parse_values(line, ln)?;
            vals.retain(|&v| v != 0); // fixed-width padding
            if vals.len() != degrees[i] {
                return Err(fail(
                    ln,
                    format!("{what} {i} has degree {} but lists {} indices", degrees[i], vals.len()),
                ));
            }
            let mut zero_based: Vec<usize> = Vec::with_capacity(vals.len());
            for v in vals.drain(..) {
                if v > bound {
                    return Err(fail(ln, format!("index {v} out of range 1..={bound}")));
                }
                zero_based.push(v - 1);
            }
            zero_based.sort_unstable();
            zero_based.dedup();
            if zero_based.len() != degrees[i] {
                return Err(fail(ln, format!("{what} {i} repeats an index")));
            }
            out.push(zero_based);
        }
        Ok(out)
    };

    let col_rows = read_index_lines(4, n, &col_deg, m, "column")?;
    let row_cols = read_index_lines(4 + n, m, &row_deg, n, "row")?;

    // The two adjacency lists must describe the same matrix.
    let mut from_cols: Vec<(usize, usize)> = Vec::new();
    for (c, rows) in col_rows.iter().enumerate() {
        for &r in rows {
            from_cols.push((r, c));
        }
    }
    let mut from_rows: Vec<(usize, usize)> = Vec::new();
    for (r, cols) in row_cols.iter().enumerate() {
        for &c in cols {
            from_rows.push((r, c));
        }
    }
    from_cols.sort_unstable();
    from_rows.sort_unstable();
    if from_cols != from_rows {
        return Err(fail(ln_of_first_mismatch(&lines), "row and column lists disagree".into()));
    }

    Ok(AlistMatrix { n, m, col_rows, row_cols })
}

fn ln_of_first_mismatch(lines: &[(usize, &str)]) -> usize {
    lines.get(4).map_or(1, |l| l.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // H = [1 1 0 1 0 0; 0 1 1 0 1 0; 1 0 1 0 0 1]
    const SMALL: &str = "6 3\n2 4\n2 2 2 1 1 1\n3 3 3\n1 3\n1 2\n2 3\n1\n2\n3\n1 2 4 0\n2 3 5 0\n1 3 6 0\n";

    #[test]
    fn parses_small_matrix_with_padding() {
        let h = parse_alist(SMALL).unwrap();
        assert_eq!((h.n, h.m), (6, 3));
        assert_eq!(h.row_cols[0], vec![0, 1, 3]);
        assert_eq!(h.row_cols[2], vec![0, 2, 5]);
        assert_eq!(h.col_rows[1], vec![0, 1]);
    }

    #[test]
    fn reports_line_numbers_on_malformed_input() {
        let bad_header = "x 3\n";
        match parse_alist(bad_header).unwrap_err() {
            FecError::AlistParse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }

        let bad_degree = "6 3\n2 4\n2 2 2 1 1 1\n3 3 3\n1 3\n1 2\n2 3\n1\n2\n3\n1 2 4\n2 3 5\n1 3\n";
        match parse_alist(bad_degree).unwrap_err() {
            FecError::AlistParse { line, message } => {
                assert_eq!(line, 13);
                assert!(message.contains("degree"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        let out_of_range = "2 2\n1 1\n1 1\n1 1\n3\n1\n1\n2\n";
        match parse_alist(out_of_range).unwrap_err() {
            FecError::AlistParse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("out of range"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        match parse_alist("6 3\n2 4\n").unwrap_err() {
            FecError::AlistParse { message, .. } => assert!(message.contains("truncated")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_inconsistent_adjacency() {
        let inconsistent = "2 2\n1 1\n1 1\n1 1\n1\n2\n2\n1\n";
        assert!(matches!(parse_alist(inconsistent), Err(FecError::AlistParse { .. })));
    }
}
