//! Connectionist temporal classification: the collapse map, path-sum
//! probability via log-space forward–backward, loss gradient and best-path
//! decoding. Class 0 is the blank.
//!
//! Two collapse rules are supported. [`CollapseRule::BlanksFirst`] (the
//! default) deletes blanks and then merges runs, so `--jj-a-a-nn-ee--` reads
//! `jane` and a label can never hold the same symbol twice in a row.
//! [`CollapseRule::RunsFirst`] merges runs and then deletes blanks, the usual
//! formulation in which a blank separates doubled letters.

use thiserror::Error;

pub const BLANK: usize = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtcError {
    #[error("row {row} sums to {sum}, expected 1")]
    NotNormalized { row: usize, sum: f64 },
    #[error("entry ({row},{col}) is negative or not finite")]
    BadEntry { row: usize, col: usize },
    #[error("matrix data has {got} entries, expected {expected}")]
    Shape { got: usize, expected: usize },
    #[error("label {0} is the blank or outside the alphabet")]
    BadLabel(usize),
    #[error("label sequence has probability zero under this matrix (infinite loss)")]
    Infeasible,
}

/// Row-stochastic `T x K` matrix; column 0 is the blank.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    t: usize,
    k: usize,
    data: Vec<f64>,
}

impl ProbMatrix {
    pub fn new(t: usize, k: usize, data: Vec<f64>) -> Result<Self, CtcError> {
        let m = Self::unnormalized(t, k, data)?;
        for row in 0..t {
            let sum: f64 = m.row(row).iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(CtcError::NotNormalized { row, sum });
            }
        }
        Ok(m)
    }

    /// Nonnegative entries without the row-sum check. The CTC sums are
    /// defined for any nonnegative emissions; gradient checks need this.
    pub fn unnormalized(t: usize, k: usize, data: Vec<f64>) -> Result<Self, CtcError> {
        if data.len() != t * k || k < 1 {
            return Err(CtcError::Shape {
                got: data.len(),
                expected: t * k,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(CtcError::BadEntry { row: i / k, col: i % k });
        }
        Ok(ProbMatrix { t, k, data })
    }

    /// Normalizes each row of nonnegative scores.
    pub fn from_scores(t: usize, k: usize, mut scores: Vec<f64>) -> Result<Self, CtcError> {
        for row in scores.chunks_mut(k.max(1)) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|v| *v /= sum);
            }
        }
        Self::new(t, k, scores)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CtcError> {
        let k = rows.first().map_or(1, Vec::len);
        Self::new(rows.len(), k, rows.concat())
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.k..(t + 1) * self.k]
    }

    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.k + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollapseRule {
    #[default]
    BlanksFirst,
    RunsFirst,
}

impl CollapseRule {
    /// Whether some path can collapse to `label` at all.
    fn representable(self, label: &[usize]) -> bool {
        self == CollapseRule::RunsFirst || label.windows(2).all(|w| w[0] != w[1])
    }
}

pub fn collapse(path: &[usize]) -> Vec<usize> {
    collapse_with(path, CollapseRule::default())
}

pub fn collapse_with(path: &[usize], rule: CollapseRule) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &c in path {
        match rule {
            CollapseRule::RunsFirst => {
                if prev != Some(c) && c != BLANK {
                    out.push(c);
                }
                prev = Some(c);
            }
            CollapseRule::BlanksFirst => {
                if c != BLANK && prev != Some(c) {
                    out.push(c);
                    prev = Some(c);
                }
            }
        }
    }
    out
}

fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn lse3(a: f64, b: f64, c: f64) -> f64 {
    lse2(lse2(a, b), c)
}

/// Forward–backward tables over the blank-extended label sequence.
/// `pre_a[t][s]` excludes the emission at `t`; `post_b[t][s]` as well, so
/// `pre_a + post_b + log y_t(ext s)` is the log mass of paths through `(t,s)`.
struct Lattice {
    ext: Vec<usize>,
    pre_a: Vec<f64>,
    post_b: Vec<f64>,
    log_p: f64,
}

fn lattice(y: &ProbMatrix, label: &[usize], rule: CollapseRule) -> Result<Lattice, CtcError> {
    if let Some(&bad) = label.iter().find(|&&c| c == BLANK || c >= y.k) {
        return Err(CtcError::BadLabel(bad));
    }
    let s_len = 2 * label.len() + 1;
    let mut ext = vec![BLANK; s_len];
    for (i, &c) in label.iter().enumerate() {
        ext[2 * i + 1] = c;
    }
    let t_len = y.t;
    let ninf = f64::NEG_INFINITY;
    let ly = |t: usize, s: usize| y.get(t, ext[s]).ln();
    let skip = |s: usize| s >= 2 && ext[s] != BLANK && ext[s] != ext[s - 2];
    // Under BlanksFirst a symbol after a blank can repeat the previous label
    // symbol without advancing: blank state 2i feeds symbol state 2i-1.
    let back = rule == CollapseRule::BlanksFirst;

    if t_len == 0 || !rule.representable(label) {
        let log_p = if label.is_empty() && t_len == 0 { 0.0 } else { ninf };
        return Ok(Lattice {
            ext,
            pre_a: vec![],
            post_b: vec![],
            log_p,
        });
    }

    let mut pre_a = vec![ninf; t_len * s_len];
    let mut alpha = vec![ninf; s_len];
    pre_a[0] = 0.0;
    if s_len > 1 {
        pre_a[1] = 0.0;
    }
    for t in 0..t_len {
        if t > 0 {
            for s in 0..s_len {
                let a1 = alpha[s];
                let a2 = if s >= 1 { alpha[s - 1] } else { ninf };
                let a3 = if skip(s) { alpha[s - 2] } else { ninf };
                let a4 = if back && ext[s] != BLANK { alpha[s + 1] } else { ninf };
                pre_a[t * s_len + s] = lse2(lse3(a1, a2, a3), a4);
            }
        }
        for s in 0..s_len {
            alpha[s] = pre_a[t * s_len + s] + ly(t, s);
        }
    }
    let log_p = if s_len > 1 {
        lse2(alpha[s_len - 1], alpha[s_len - 2])
    } else {
        alpha[0]
    };

    let mut post_b = vec![ninf; t_len * s_len];
    let mut beta = vec![ninf; s_len];
    let last = (t_len - 1) * s_len;
    post_b[last + s_len - 1] = 0.0;
    if s_len > 1 {
        post_b[last + s_len - 2] = 0.0;
    }
    for t in (0..t_len).rev() {
        if t + 1 < t_len {
            for s in 0..s_len {
                let b1 = beta[s];
                let b2 = if s + 1 < s_len { beta[s + 1] } else { ninf };
                let b3 = if s + 2 < s_len && skip(s + 2) { beta[s + 2] } else { ninf };
                let b4 = if back && s >= 2 && ext[s] == BLANK { beta[s - 1] } else { ninf };
                post_b[t * s_len + s] = lse2(lse3(b1, b2, b3), b4);
            }
        }
        for s in 0..s_len {
            beta[s] = post_b[t * s_len + s] + ly(t, s);
        }
    }
    Ok(Lattice {
        ext,
        pre_a,
        post_b,
        log_p,
    })
}

/// `log p(label | y)`; negative infinity when no path collapses to `label`.
pub fn ctc_log_prob(y: &ProbMatrix, label: &[usize]) -> Result<f64, CtcError> {
    ctc_log_prob_with(y, label, CollapseRule::default())
}

pub fn ctc_log_prob_with(y: &ProbMatrix, label: &[usize], rule: CollapseRule) -> Result<f64, CtcError> {
    Ok(lattice(y, label, rule)?.log_p)
}

/// Sum over all paths `π` with `collapse(π) == label` of `Π_t y_t(π_t)`.
pub fn ctc_prob(y: &ProbMatrix, label: &[usize]) -> Result<f64, CtcError> {
    ctc_prob_with(y, label, CollapseRule::default())
}

pub fn ctc_prob_with(y: &ProbMatrix, label: &[usize], rule: CollapseRule) -> Result<f64, CtcError> {
    ctc_log_prob_with(y, label, rule).map(f64::exp)
}

pub fn ctc_loss(y: &ProbMatrix, label: &[usize]) -> Result<f64, CtcError> {
    ctc_loss_with(y, label, CollapseRule::default())
}

pub fn ctc_loss_with(y: &ProbMatrix, label: &[usize], rule: CollapseRule) -> Result<f64, CtcError> {
    let lp = ctc_log_prob_with(y, label, rule)?;
    if lp == f64::NEG_INFINITY {
        return Err(CtcError::Infeasible);
    }
    Ok(-lp)
}

/// `∂ loss / ∂ y_t(k)`, row-major `T x K`. Entries whose class never occurs in
/// the extended label are exactly zero.
pub fn ctc_loss_grad(y: &ProbMatrix, label: &[usize]) -> Result<Vec<f64>, CtcError> {
    ctc_loss_grad_with(y, label, CollapseRule::default())
}

pub fn ctc_loss_grad_with(y: &ProbMatrix, label: &[usize], rule: CollapseRule) -> Result<Vec<f64>, CtcError> {
    let lat = lattice(y, label, rule)?;
    if lat.log_p == f64::NEG_INFINITY {
        return Err(CtcError::Infeasible);
    }
    let s_len = lat.ext.len();
    let mut grad = vec![0.0; y.t * y.k];
    for t in 0..y.t {
        for s in 0..s_len {
            let lw = lat.pre_a[t * s_len + s] + lat.post_b[t * s_len + s] - lat.log_p;
            if lw > f64::NEG_INFINITY {
                grad[t * y.k + lat.ext[s]] -= lw.exp();
            }
        }
    }
    Ok(grad)
}

/// Per-row argmax (ties go to the lowest class index), collapsed. The
/// confidence is the geometric mean of the selected probabilities.
pub fn best_path_decode(y: &ProbMatrix) -> (Vec<usize>, f64) {
    best_path_decode_with(y, CollapseRule::default())
}

pub fn best_path_decode_with(y: &ProbMatrix, rule: CollapseRule) -> (Vec<usize>, f64) {
    if y.t == 0 {
        return (Vec::new(), 1.0);
    }
    let mut path = Vec::with_capacity(y.t);
    let mut log_sum = 0.0;
    for t in 0..y.t {
        let row = y.row(t);
        let mut best = 0;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        path.push(best);
        log_sum += row[best].ln();
    }
    (collapse_with(&path, rule), (log_sum / y.t as f64).exp())
}

/// Maps characters to classes `1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    chars: Vec<char>,
}

impl Alphabet {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Self {
        let mut v: Vec<char> = Vec::new();
        for c in chars {
            if !v.contains(&c) {
                v.push(c);
            }
        }
        Alphabet { chars: v }
    }

    /// Number of classes including the blank.
    pub fn classes(&self) -> usize {
        self.chars.len() + 1
    }

    pub fn class_of(&self, c: char) -> Option<usize> {
        self.chars.iter().position(|&x| x == c).map(|i| i + 1)
    }

    pub fn char_of(&self, class: usize) -> Option<char> {
        class.checked_sub(1).and_then(|i| self.chars.get(i)).copied()
    }

    pub fn encode(&self, s: &str) -> Option<Vec<usize>> {
        s.chars().map(|c| self.class_of(c)).collect()
    }

    pub fn decode(&self, label: &[usize]) -> String {
        label.iter().filter_map(|&c| self.char_of(c)).collect()
    }

    /// Reads a path written with `blank` for the blank symbol.
    pub fn path(&self, s: &str, blank: char) -> Option<Vec<usize>> {
        s.chars()
            .map(|c| if c == blank { Some(BLANK) } else { self.class_of(c) })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_examples() {
        let ab = Alphabet::new("jane".chars());
        let p = ab.path("--jj-a-a-nn-ee--", '-').unwrap();
        assert_eq!(ab.decode(&collapse(&p)), "jane");
        assert_eq!(ab.decode(&collapse_with(&p, CollapseRule::RunsFirst)), "jaane");
        assert!(collapse(&[0, 0, 0]).is_empty());
        assert_eq!(collapse(&[1, 1, 2, 2]), vec![1, 2]);
        assert_eq!(collapse(&[1, 0, 1]), vec![1]);
        assert_eq!(collapse_with(&[1, 0, 1], CollapseRule::RunsFirst), vec![1, 1]);
    }

    #[test]
    fn single_step() {
        let y = ProbMatrix::from_rows(&[vec![0.3, 0.7]]).unwrap();
        assert!((ctc_prob(&y, &[1]).unwrap() - 0.7).abs() < 1e-15);
        let g = ctc_loss_grad(&y, &[1]).unwrap();
        assert!((g[1] + 1.0 / 0.7).abs() < 1e-12);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn two_uniform_steps() {
        let y = ProbMatrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((ctc_prob(&y, &[1]).unwrap() - 0.75).abs() < 1e-15);
        assert!((ctc_prob(&y, &[]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(ctc_prob(&y, &[1, 1]).unwrap(), 0.0);
        assert_eq!(ctc_prob_with(&y, &[1, 1], CollapseRule::RunsFirst).unwrap(), 0.0);
        // BlanksFirst: a-a also reads "a", which RunsFirst would not allow
        let y = ProbMatrix::from_rows(&vec![vec![0.5, 0.5]; 3]).unwrap();
        assert!((ctc_prob(&y, &[1]).unwrap() - 7.0 / 8.0).abs() < 1e-15);
        assert!((ctc_prob_with(&y, &[1], CollapseRule::RunsFirst).unwrap() - 6.0 / 8.0).abs() < 1e-15);
        assert_eq!(ctc_loss(&y, &[1, 1]), Err(CtcError::Infeasible));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ProbMatrix::from_rows(&[vec![0.5, 0.6]]),
            Err(CtcError::NotNormalized { .. })
        ));
        assert!(matches!(
            ProbMatrix::from_rows(&[vec![-0.5, 1.5]]),
            Err(CtcError::BadEntry { .. })
        ));
        let y = ProbMatrix::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert_eq!(ctc_prob(&y, &[0]), Err(CtcError::BadLabel(0)));
        assert_eq!(ctc_prob(&y, &[2]), Err(CtcError::BadLabel(2)));
    }

    #[test]
    fn best_path_examples() {
        let one_hot = |c: usize| {
            let mut r = vec![0.0; 3];
            r[c] = 1.0;
            r
        };
        let y = ProbMatrix::from_rows(&[one_hot(0), one_hot(0), one_hot(1), one_hot(0), one_hot(2)]).unwrap();
        assert_eq!(best_path_decode(&y), (vec![1, 2], 1.0));
        let y = ProbMatrix::from_rows(&[vec![0.1, 0.6, 0.3], vec![0.1, 0.6, 0.3]]).unwrap();
        let (l, conf) = best_path_decode(&y);
        assert_eq!(l, vec![1]);
        assert!((conf - 0.6).abs() < 1e-12);
        // tie goes to the lower index
        let y = ProbMatrix::from_rows(&[vec![0.25, 0.375, 0.375]]).unwrap();
        assert_eq!(best_path_decode(&y).0, vec![1]);
    }
}
