//! Token-overlap baselines.
//!
//! Both metrics share one tokenizer: lowercase, split on Unicode whitespace,
//! trim non-alphanumeric characters from both ends of each token, drop tokens
//! that become empty.

use std::collections::HashMap;

/// Smoothing added to n-gram match counts that are zero.
pub const BLEU_EPSILON: f64 = 1e-9;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
        .collect()
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Sentence-level BLEU of `candidate` against a single `reference`.
///
/// Modified (clipped) n-gram precisions for n = 1..=max_n are combined by
/// geometric mean and multiplied by the brevity penalty `exp(1 − r/c)` when
/// the candidate is shorter than the reference. A zero match count is
/// replaced by [`BLEU_EPSILON`]; an order with no candidate n-grams at all
/// contributes precision `BLEU_EPSILON`. An empty candidate scores 0.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    let cand = tokenize(candidate);
    let refs = tokenize(reference);
    if cand.is_empty() {
        return 0.0;
    }
    let max_n = max_n.max(1);
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand_counts = ngram_counts(&cand, n);
        let ref_counts = ngram_counts(&refs, n);
        let total: usize = cand_counts.values().sum();
        let matched: usize = cand_counts.iter().map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0))).sum();
        let numerator = if matched == 0 { BLEU_EPSILON } else { matched as f64 };
        let precision = numerator / total.max(1) as f64;
        log_sum += precision.ln();
    }
    let c = cand.len() as f64;
    let r = refs.len() as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    bp * (log_sum / max_n as f64).exp()
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F1 (β = 1).
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refs = tokenize(reference);
    if cand.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&cand, &refs) as f64;
    let p = lcs / cand.len() as f64;
    let r = lcs / refs.len() as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_rules() {
        assert_eq!(tokenize("  The CAT, sat... (on) the-mat! "), ["the", "cat", "sat", "on", "the-mat"]);
        assert!(tokenize("-- ... !!").is_empty());
    }

    #[test]
    fn bleu_self_match_and_empty() {
        let s = "the quick brown fox jumps";
        assert_eq!(bleu(s, s, 4), 1.0);
        assert_eq!(bleu("", s, 4), 0.0);
        assert_eq!(bleu("...", s, 4), 0.0);
    }

    #[test]
    fn bleu_clipping_fixture() {
        // Hand counts: p1 = 1/3 (three "the", clipped to one), p2 = ε/2,
        // p3 = ε/1, p4 has no candidate 4-grams -> ε. c = 3 > r = 2 -> BP = 1.
        let eps: f64 = 1e-9;
        let expected = ((1.0f64 / 3.0).ln() + (eps / 2.0).ln() + eps.ln() + eps.ln()) / 4.0;
        let got = bleu("the the the", "the cat", 4);
        assert!((got - expected.exp()).abs() < 1e-15, "{got} vs {}", expected.exp());
        assert!((bleu("the the the", "the cat", 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bleu_brevity_penalty() {
        let got = bleu("a b", "a b c d", 1);
        assert!((got - (1.0f64 - 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn rouge_l_examples() {
        assert_eq!(rouge_l("a b c", "a b c"), 1.0);
        assert!((rouge_l("a b c d", "a c d") - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(rouge_l("x y", "a b"), 0.0);
        assert_eq!(rouge_l("", "a b"), 0.0);
    }
}
