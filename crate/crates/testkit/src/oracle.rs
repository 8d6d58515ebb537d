//! Brute-force oracles.

/// Matched character count of the recursive block decomposition, found by
/// trying every block length from longest to shortest and every start pair
/// in row-major order.
pub fn matched_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    for len in (1..=a.len().min(b.len())).rev() {
        for i in 0..=a.len() - len {
            for j in 0..=b.len() - len {
                if a[i..i + len] == b[j..j + len] {
                    return len + matched_chars(&a[..i], &b[..j]) + matched_chars(&a[i + len..], &b[j + len..]);
                }
            }
        }
    }
    0
}

/// `(2M, |a| + |b|)`; both-empty is reported as `(1, 1)`.
pub fn similarity_fraction(a: &str, b: &str) -> (u64, u64) {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = (a.len() + b.len()) as u64;
    if total == 0 {
        return (1, 1);
    }
    (2 * matched_chars(&a, &b) as u64, total)
}

/// Cohen's κ straight from the definition over category indices.
pub fn cohen(pairs: &[(usize, usize)], categories: usize) -> f64 {
    let n = pairs.len() as f64;
    let po = pairs.iter().filter(|(a, b)| a == b).count() as f64 / n;
    let mut pe = 0.0;
    for k in 0..categories {
        let pa = pairs.iter().filter(|(a, _)| *a == k).count() as f64 / n;
        let pb = pairs.iter().filter(|(_, b)| *b == k).count() as f64 / n;
        pe += pa * pb;
    }
    if pe == 1.0 {
        return 1.0;
    }
    (po - pe) / (1.0 - pe)
}

/// Fleiss' κ from the textbook per-item agreement formula.
pub fn fleiss(votes: &[Vec<u64>]) -> f64 {
    let items = votes.len() as f64;
    let raters: u64 = votes[0].iter().sum();
    let n = raters as f64;
    let mut p_bar = 0.0;
    for row in votes {
        let agreeing: f64 = row.iter().map(|&c| (c * c.saturating_sub(1)) as f64).sum();
        p_bar += agreeing / (n * (n - 1.0));
    }
    p_bar /= items;
    let mut pe = 0.0;
    for j in 0..votes[0].len() {
        let pj = votes.iter().map(|r| r[j] as f64).sum::<f64>() / (items * n);
        pe += pj * pj;
    }
    if pe == 1.0 {
        return 1.0;
    }
    (p_bar - pe) / (1.0 - pe)
}

/// Harmonic mean of precision and recall.
pub fn f1(p: f64, r: f64) -> f64 {
    2.0 * p * r / (p + r)
}
