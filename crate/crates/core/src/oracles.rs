//! Brute-force reference implementations used as ground truth in every
//! differential test. Elementary loops and integer arithmetic only; nothing
//! in this module touches the interpreter or any builder.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("symbol {0:?} outside the expected alphabet")]
    BadSymbol(char),
    #[error("scores are not tieless")]
    TiedScores,
    #[error("query {q} outside 1..={n}")]
    BadQuery { q: usize, n: usize },
}

/// Bracket alphabet for k pair types: pair `p` (1-based) opens with
/// `OPEN_BRACKETS[p-1]` and closes with `CLOSE_BRACKETS[p-1]`.
pub const OPEN_BRACKETS: [char; 4] = ['(', '[', '{', '<'];
pub const CLOSE_BRACKETS: [char; 4] = [')', ']', '}', '>'];

/// Signed bracket code: +p for the p-th opener, −p for the p-th closer.
pub fn bracket_code(c: char, k: usize) -> Result<i32, OracleError> {
    for p in 0..k {
        if c == OPEN_BRACKETS[p] {
            return Ok(p as i32 + 1);
        }
        if c == CLOSE_BRACKETS[p] {
            return Ok(-(p as i32 + 1));
        }
    }
    Err(OracleError::BadSymbol(c))
}

/// Stack-simulation membership test for Dyck-k, optionally depth-bounded.
/// Exceeding the depth bound rejects (it is a language restriction, not an
/// error).
pub fn oracle_dyck(w: &str, k: usize, depth: Option<usize>) -> Result<bool, OracleError> {
    let mut stack: Vec<i32> = Vec::new();
    for c in w.chars() {
        let code = bracket_code(c, k)?;
        if code > 0 {
            stack.push(code);
            if let Some(d) = depth {
                if stack.len() > d {
                    return Ok(false);
                }
            }
        } else {
            match stack.pop() {
                Some(open) if open == -code => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(stack.is_empty())
}

/// The classical two-condition formulation for Dyck-1: every prefix balance
/// is non-negative and the total balance is zero. Used as a
/// self-consistency check against the stack simulation.
pub fn oracle_dyck1_balance(w: &str) -> Result<bool, OracleError> {
    let mut balance: i64 = 0;
    for c in w.chars() {
        match c {
            '(' => balance += 1,
            ')' => balance -= 1,
            _ => return Err(OracleError::BadSymbol(c)),
        }
        if balance < 0 {
            return Ok(false);
        }
    }
    Ok(balance == 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InductionVariant {
    /// The symbol after the rightmost previous occurrence of the current
    /// symbol; the current symbol itself if there is none.
    Rightmost,
    /// The symbol most frequently following the current symbol so far, ties
    /// broken alphabetically; the current symbol if it has not occurred
    /// before.
    Frequent,
}

/// Direct scan implementing the induction-head prediction rules.
pub fn oracle_induction(
    w: &str,
    variant: InductionVariant,
    alphabet: &[char],
) -> Result<String, OracleError> {
    let chars: Vec<char> = w.chars().collect();
    for &c in &chars {
        if !alphabet.contains(&c) {
            return Err(OracleError::BadSymbol(c));
        }
    }
    let mut sorted: Vec<char> = alphabet.to_vec();
    sorted.sort_unstable();

    let mut out = String::with_capacity(chars.len());
    for i in 0..chars.len() {
        let cur = chars[i];
        match variant {
            InductionVariant::Rightmost => {
                // Rightmost j < i with w_j = w_i; predict w_{j+1}.
                let prev = (0..i).rev().find(|&j| chars[j] == cur);
                out.push(match prev {
                    Some(j) => chars[j + 1],
                    None => cur,
                });
            }
            InductionVariant::Frequent => {
                let mut best: Option<(usize, char)> = None;
                for &cand in &sorted {
                    // Count bigrams (cur, cand) among pairs (j-1, j), j ≤ i.
                    let count = (1..=i).filter(|&j| chars[j - 1] == cur && chars[j] == cand).count();
                    if count > 0 && best.map_or(true, |(c, _)| count > c) {
                        best = Some((count, cand));
                    }
                }
                out.push(best.map_or(cur, |(_, c)| c));
            }
        }
    }
    Ok(out)
}

/// Prefix means: output i is the average of the first i values.
pub fn oracle_prefix_average<S: Scalar>(values: &[S]) -> Vec<S> {
    let mut sums = S::zero();
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            sums += v;
            sums / S::of((i + 1) as f64)
        })
        .collect()
}

/// Index lookup: output i is `values[queries[i] - 1]` (queries are
/// 1-based positions).
pub fn oracle_lookup<S: Scalar>(queries: &[usize], values: &[S]) -> Result<Vec<S>, OracleError> {
    let n = values.len();
    queries
        .iter()
        .map(|&q| {
            if q < 1 || q > n {
                return Err(OracleError::BadQuery { q, n });
            }
            Ok(values[q - 1])
        })
        .collect()
}

/// Shift right by one with a zero sentinel at position 1.
pub fn oracle_predecessor<S: Scalar>(values: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(values.len());
    if !values.is_empty() {
        out.push(S::zero());
        out.extend_from_slice(&values[..values.len() - 1]);
    }
    out
}

/// Measured hardmax/softmax divergence against the 2n·e^{−γ} bound.
#[derive(Debug, Clone, Copy)]
pub struct GapReport {
    /// ‖hardmax(s) − softmax(s)‖₁ computed directly.
    pub measured: f64,
    /// The score gap between the unique maximum and the runner-up.
    pub gamma: f64,
    /// 2n·e^{−γ}.
    pub bound: f64,
}

/// Evaluates both sides of the gap lemma for a tieless score vector.
pub fn hardmax_softmax_gap(scores: &[f64]) -> Result<GapReport, OracleError> {
    let n = scores.len();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.iter().filter(|&&s| s == max).count() != 1 {
        return Err(OracleError::TiedScores);
    }
    let runner_up = scores.iter().copied().filter(|&s| s != max).fold(f64::NEG_INFINITY, f64::max);
    let gamma = max - runner_up;

    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let measured: f64 = scores
        .iter()
        .zip(&exps)
        .map(|(&s, &e)| {
            let soft = e / total;
            let hard = if s == max { 1.0 } else { 0.0 };
            (hard - soft).abs()
        })
        .sum();
    Ok(GapReport { measured, gamma, bound: 2.0 * n as f64 * (-gamma).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyck_paper_strings() {
        assert!(oracle_dyck("()(())", 1, None).unwrap());
        assert!(!oracle_dyck("())(()", 1, None).unwrap());
        assert!(!oracle_dyck("((()))", 1, Some(2)).unwrap());
        assert!(oracle_dyck("((()))", 1, Some(3)).unwrap());
        assert!(oracle_dyck("([])", 2, None).unwrap());
        assert!(!oracle_dyck("([)]", 2, None).unwrap());
        // Σ⁺ inputs only; the empty string never reaches the oracle in
        // differential tests, but the stack simulation itself accepts it.
        assert!(oracle_dyck("", 1, None).unwrap());
    }

    #[test]
    fn dyck_formulations_agree_to_len_14() {
        for len in 1..=14usize {
            for bits in 0..(1u32 << len) {
                let w: String =
                    (0..len).map(|i| if bits >> i & 1 == 0 { '(' } else { ')' }).collect();
                assert_eq!(
                    oracle_dyck(&w, 1, None).unwrap(),
                    oracle_dyck1_balance(&w).unwrap(),
                    "disagree on {w}"
                );
            }
        }
    }

    #[test]
    fn induction_paper_examples() {
        let sigma: Vec<char> = "ABCD".chars().collect();
        assert_eq!(
            oracle_induction("ACABDACDCA", InductionVariant::Rightmost, &sigma).unwrap(),
            "ACCBDBAADC"
        );
        assert_eq!(
            oracle_induction("ACABDACDCA", InductionVariant::Frequent, &sigma).unwrap(),
            "ACCBDBAAAC"
        );
    }

    #[test]
    fn induction_small_cases() {
        let sigma: Vec<char> = ('A'..='Z').collect();
        assert_eq!(oracle_induction("AA", InductionVariant::Rightmost, &sigma).unwrap(), "AA");
        assert_eq!(oracle_induction("ZZ", InductionVariant::Rightmost, &sigma).unwrap(), "ZZ");
        assert_eq!(oracle_induction("Q", InductionVariant::Rightmost, &sigma).unwrap(), "Q");
        // Position 3 sees bigram AB once; position 4 (current B) sees BA once.
        assert_eq!(oracle_induction("ABAB", InductionVariant::Frequent, &sigma).unwrap(), "ABBA");
    }

    #[test]
    fn prefix_average_matches_direct_sums() {
        let avg = oracle_prefix_average(&[1.0f64, 0.0, 1.0]);
        assert_eq!(avg, vec![1.0, 0.5, 2.0 / 3.0]);
    }

    #[test]
    fn lookup_and_predecessor() {
        assert_eq!(oracle_lookup(&[2, 1, 3], &[10.0f64, 20.0, 30.0]).unwrap(), vec![20.0, 10.0, 30.0]);
        assert_eq!(
            oracle_lookup(&[4], &[1.0f64]).unwrap_err(),
            OracleError::BadQuery { q: 4, n: 1 }
        );
        assert_eq!(oracle_predecessor(&[0.1f64, 0.2, 0.3]), vec![0.0, 0.1, 0.2]);
        assert_eq!(oracle_predecessor(&[0.5f64]), vec![0.0]);
    }

    #[test]
    fn gap_lemma_examples() {
        let r = hardmax_softmax_gap(&[5.0, 1.0, 1.0]).unwrap();
        assert!((r.gamma - 4.0).abs() < 1e-12);
        assert!((r.bound - 6.0 * (-4.0f64).exp()).abs() < 1e-12);
        assert!(r.measured <= r.bound);

        let r2 = hardmax_softmax_gap(&[0.0, -10.0]).unwrap();
        let expect = 2.0 * (-10.0f64).exp() / (1.0 + (-10.0f64).exp());
        assert!((r2.measured - expect).abs() < 1e-15);
        assert!(r2.measured <= r2.bound);

        assert_eq!(hardmax_softmax_gap(&[3.0, 3.0, 1.0]).unwrap_err(), OracleError::TiedScores);
    }
}
