//! Single-pass loopy belief propagation collapsed to one vector-valued
//! message.
//!
//! With identical edge potentials across rows, the full message exchange
//! reduces to q_e = Π_ρ (L·S)_{ρ,e} followed by C = L ∘ q: each row's
//! outgoing message is its prior smeared through the similarity matrix,
//! and every row then receives the product of all messages.

use crate::error::{Error, Result};

/// Row-sparse matrix: per row, (column, value) pairs with ascending
/// column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            let mut last = None;
            for (c, v) in row {
                if *c >= n_cols {
                    return Err(Error::Contract(format!(
                        "sparse row {i} references column {c} of {n_cols}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::Contract(format!("non-finite entry in sparse row {i}")));
                }
                if last.is_some_and(|p| p >= *c) {
                    return Err(Error::Contract(format!("unsorted columns in sparse row {i}")));
                }
                last = Some(*c);
            }
        }
        Ok(SparseMatrix { n_cols, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|row| {
                let mut dense = vec![0.0; self.n_cols];
                for (c, v) in row {
                    dense[*c] = *v;
                }
                dense
            })
            .collect()
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = SquareMatrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "square matrix rows must have length n");
            for (j, v) in row.iter().enumerate() {
                m.data[i * n + j] = *v;
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbpOptions {
    /// Row-normalize L·S before the across-row product. Scales q by a
    /// global constant per entity, so argmaxes survive; keeps the product
    /// from underflowing on wide tables.
    pub normalize: bool,
    /// Number of passes; each extra pass feeds the row-normalized C back
    /// in as the next prior. More than one can hurt, hence the default.
    pub iterations: usize,
    /// Accumulate the product in log-space above this many rows.
    pub log_space_threshold: usize,
}

impl Default for LbpOptions {
    fn default() -> Self {
        LbpOptions {
            normalize: true,
            iterations: 1,
            log_space_threshold: 64,
        }
    }
}

/// One message pass: q_e = Π_ρ (L·S)_{ρ,e}, C_{ρ,e} = L_{ρ,e} · q_e.
///
/// In normalized mode an all-zero (L·S) row is treated as an
/// uninformative message and skipped; in raw mode the product is literal,
/// so such a row zeroes q. C is returned dense, n_rows × n_cols.
pub fn lbp_pass(l: &SparseMatrix, s: &SquareMatrix, opts: &LbpOptions) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if l.n_cols != s.n {
        return Err(Error::Contract(format!(
            "prior matrix has {} entity columns but similarity matrix is {}x{}",
            l.n_cols, s.n, s.n
        )));
    }
    if opts.iterations == 0 {
        return Err(Error::Contract("lbp iterations must be >= 1".into()));
    }
    let mut prior = l.clone();
    let mut result = pass_once(&prior, s, opts);
    for _ in 1..opts.iterations {
        let (_, c) = &result;
        let rows = c
            .iter()
            .map(|row| {
                let sum: f64 = row.iter().sum();
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, if sum > 0.0 { *v / sum } else { *v }))
                    .collect()
            })
            .collect();
        prior = SparseMatrix {
            n_cols: l.n_cols,
            rows,
        };
        result = pass_once(&prior, s, opts);
    }
    Ok(result)
}

fn pass_once(l: &SparseMatrix, s: &SquareMatrix, opts: &LbpOptions) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n_cols = l.n_cols;
    // messages m_ρ = L_ρ · S
    let mut messages: Vec<Vec<f64>> = Vec::with_capacity(l.n_rows());
    for row in &l.rows {
        let mut m = vec![0.0; n_cols];
        for (e_prime, weight) in row {
            let base = e_prime * n_cols;
            for (e, slot) in m.iter_mut().enumerate() {
                *slot += weight * s.data[base + e];
            }
        }
        if opts.normalize {
            let sum: f64 = m.iter().sum();
            if sum > 0.0 {
                for v in &mut m {
                    *v /= sum;
                }
            }
        }
        messages.push(m);
    }
    // q = across-row product of messages
    let q = if l.n_rows() > opts.log_space_threshold {
        product_log_space(&messages, n_cols, opts.normalize)
    } else {
        let mut q = vec![1.0; n_cols];
        for m in &messages {
            let skip = opts.normalize && m.iter().all(|v| *v == 0.0);
            if skip {
                continue;
            }
            for (e, v) in m.iter().enumerate() {
                q[e] *= v;
            }
        }
        q
    };
    // C = L ∘ q
    let c = l
        .rows
        .iter()
        .map(|row| {
            let mut dense = vec![0.0; n_cols];
            for (e, v) in row {
                dense[*e] = v * q[*e];
            }
            dense
        })
        .collect();
    (q, c)
}

/// Log-domain product, rescaled so the largest entry is 1. The rescaling
/// is a uniform positive factor, invisible to argmax and to row-normalized
/// confidences.
fn product_log_space(messages: &[Vec<f64>], n_cols: usize, normalize: bool) -> Vec<f64> {
    let mut logs = vec![0.0f64; n_cols];
    for m in messages {
        if normalize && m.iter().all(|v| *v == 0.0) {
            continue;
        }
        for (e, v) in m.iter().enumerate() {
            logs[e] += v.ln(); // ln(0) = -inf marks a dead entity
        }
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; n_cols];
    }
    logs.iter().map(|lg| (lg - max).exp()).collect()
}

/// Literal triple-loop evaluation of the same formulas, for oracle tests.
pub fn lbp_pass_naive(l: &[Vec<f64>], s: &SquareMatrix, normalize: bool) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n_cols = s.n;
    let mut q = vec![1.0; n_cols];
    for row in l {
        let mut m = vec![0.0; n_cols];
        for e in 0..n_cols {
            for e_prime in 0..n_cols {
                m[e] += row[e_prime] * s.get(e_prime, e);
            }
        }
        if normalize {
            let sum: f64 = m.iter().sum();
            if sum > 0.0 {
                for v in &mut m {
                    *v /= sum;
                }
            } else {
                continue;
            }
        }
        for e in 0..n_cols {
            q[e] *= m[e];
        }
    }
    let c = l
        .iter()
        .map(|row| (0..n_cols).map(|e| row[e] * q[e]).collect())
        .collect();
    (q, c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw() -> LbpOptions {
        LbpOptions {
            normalize: false,
            ..LbpOptions::default()
        }
    }

    fn sparse(rows: &[Vec<f64>], n_cols: usize) -> SparseMatrix {
        let rows = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        SparseMatrix::new(n_cols, rows).unwrap()
    }

    /// Prior favors e1 on row 0, but rows 1's certain e3 is similar only
    /// to e2, so coherence flips row 0's winner to e2.
    #[test]
    fn coherence_flips_prior_winner() {
        let l = sparse(&[vec![0.6, 0.4, 0.0], vec![0.0, 0.0, 1.0]], 3);
        let s = SquareMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ]);
        let (q, c) = lbp_pass(&l, &s, &raw()).unwrap();
        assert_eq!(q, vec![0.0, 0.4, 0.4]);
        assert_eq!(c[0], vec![0.0, 0.4 * 0.4, 0.0]);
        assert_eq!(c[1], vec![0.0, 0.0, 0.4]);
        // prior argmax of row 0 is e0; coherence argmax is e1
        assert_eq!(argmax(&c[0]), 1);

        // normalization preserves both rows' argmax
        let (_, c_norm) = lbp_pass(&l, &s, &LbpOptions::default()).unwrap();
        assert_eq!(argmax(&c_norm[0]), 1);
        assert_eq!(argmax(&c_norm[1]), 2);
    }

    #[test]
    fn identity_similarity_gives_prior_product() {
        let l = sparse(&[vec![0.2, 0.8], vec![0.5, 0.5]], 2);
        let mut s = SquareMatrix::zeros(2);
        s.set(0, 0, 1.0);
        s.set(1, 1, 1.0);
        let (q, _) = lbp_pass(&l, &s, &raw()).unwrap();
        assert_eq!(q, vec![0.2 * 0.5, 0.8 * 0.5]);
    }

    #[test]
    fn single_row_coherence_is_l_times_ls() {
        let l = sparse(&[vec![0.3, 0.7]], 2);
        let s = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (q, c) = lbp_pass(&l, &s, &raw()).unwrap();
        // L·S = [0.3*2+0.7*1, 0.3*1+0.7*2] = [1.3, 1.7]
        for (got, want) in q.iter().zip([1.3, 1.7]) {
            assert!((got - want).abs() < 1e-12);
        }
        for (got, want) in c[0].iter().zip([0.3 * 1.3, 0.7 * 1.7]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_oracle() {
        let cases: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = vec![
            (
                vec![vec![0.6, 0.4, 0.0], vec![0.0, 0.0, 1.0]],
                vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 1.0],
                    vec![0.0, 1.0, 1.0],
                ],
            ),
            (
                vec![vec![0.1, 0.2, 0.7], vec![0.5, 0.5, 0.0], vec![0.0, 1.0, 0.0]],
                vec![
                    vec![3.0, 1.0, 0.5],
                    vec![1.0, 2.0, 0.0],
                    vec![0.5, 0.0, 1.0],
                ],
            ),
        ];
        for (l_rows, s_rows) in cases {
            let s = SquareMatrix::from_rows(&s_rows);
            let l = sparse(&l_rows, s.n);
            for normalize in [false, true] {
                let opts = LbpOptions {
                    normalize,
                    ..LbpOptions::default()
                };
                let (q, c) = lbp_pass(&l, &s, &opts).unwrap();
                let (q_ref, c_ref) = lbp_pass_naive(&l_rows, &s, normalize);
                for (a, b) in q.iter().zip(&q_ref) {
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
                }
                for (row_a, row_b) in c.iter().zip(&c_ref) {
                    for (a, b) in row_a.iter().zip(row_b) {
                        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn log_space_path_preserves_argmax_and_confidence() {
        // 70 rows forces the log-space product
        let n = 70;
        let l_rows: Vec<Vec<f64>> = (0..n).map(|_| vec![0.6, 0.4]).collect();
        let s = SquareMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]);
        let l = sparse(&l_rows, 2);
        let (q, c) = lbp_pass(&l, &s, &LbpOptions::default()).unwrap();
        assert!(q.iter().all(|v| v.is_finite()));
        assert_eq!(argmax(&c[0]), 0);
        // linear-space reference on the same instance, double precision
        // survives 70 rows here because entries stay near 0.5
        let small = LbpOptions {
            log_space_threshold: 1000,
            ..LbpOptions::default()
        };
        let (_, c_ref) = lbp_pass(&l, &s, &small).unwrap();
        let conf = |row: &[f64]| row[0] / (row[0] + row[1]);
        assert!((conf(&c[0]) - conf(&c_ref[0])).abs() < 1e-9);
    }

    #[test]
    fn zero_rows_skipped_only_when_normalizing() {
        let l = sparse(&[vec![0.0, 0.0], vec![0.5, 0.5]], 2);
        let s = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let (q_raw, _) = lbp_pass(&l, &s, &raw()).unwrap();
        assert_eq!(q_raw, vec![0.0, 0.0]);
        let (q_norm, _) = lbp_pass(&l, &s, &LbpOptions::default()).unwrap();
        assert_eq!(q_norm, vec![0.5, 0.5]);
    }

    #[test]
    fn dimension_mismatch_is_a_contract_violation() {
        let l = sparse(&[vec![1.0, 0.0]], 2);
        let s = SquareMatrix::zeros(3);
        assert!(lbp_pass(&l, &s, &LbpOptions::default()).is_err());
        assert!(SparseMatrix::new(1, vec![vec![(2, 0.5)]]).is_err());
        assert!(SparseMatrix::new(3, vec![vec![(1, 0.5), (1, 0.2)]]).is_err());
    }

    #[test]
    fn extra_iterations_feed_coherence_back() {
        let l = sparse(&[vec![0.6, 0.4, 0.0], vec![0.0, 0.0, 1.0]], 3);
        let s = SquareMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ]);
        let two = LbpOptions {
            iterations: 2,
            ..LbpOptions::default()
        };
        let (_, c) = lbp_pass(&l, &s, &two).unwrap();
        // after the flip, iteration 2 starts from a prior concentrated on
        // e1 and keeps it
        assert_eq!(argmax(&c[0]), 1);
        let zero = LbpOptions {
            iterations: 0,
            ..LbpOptions::default()
        };
        assert!(lbp_pass(&l, &s, &zero).is_err());
    }

    fn argmax(row: &[f64]) -> usize {
        row.iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .map(|(i, _)| i)
            .unwrap()
    }
}
