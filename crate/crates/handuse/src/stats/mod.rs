//! Nonparametric statistics: Wilcoxon signed-rank, Friedman with Dunn-Šidák
//! post-hoc comparisons, Spearman rank correlation, and the supporting
//! quantile and labeling helpers.
//!
//! Conventions, fixed here and relied on by the report layer:
//!
//! - Wilcoxon drops zero differences, ranks |d| with average ranks for ties,
//!   and reports Z = (W - mu) / sigma with tie-corrected sigma and a 0.5
//!   continuity correction toward the mean (positive Z when x tends to
//!   exceed y). The two-sided p-value is exact (symmetric-tail, computed by
//!   convolution over the signed-rank distribution) for n <= 12 nonzero
//!   differences and the normal approximation above that.
//! - Spearman ranks with average ranks, takes the product-moment correlation
//!   of the ranks, and gets p from t = rho * sqrt((n-2)/(1-rho^2)) against
//!   the t distribution with n-2 df; |rho| = 1 maps to p = 0.
//! - Friedman uses within-block average ranks and the tie-corrected
//!   chi-square statistic with k-1 df.
//! - Dunn-Šidák compares mean ranks pairwise with
//!   z = |R_i - R_j| / sqrt(k(k+1)/(6n)) and adjusts each two-sided normal
//!   p as 1 - (1-p)^m over the m = k(k-1)/2 comparisons.

pub mod kernels;

use crate::error::{Error, Result};
use kernels::{chi2_sf, normal_sf, student_t_two_sided};

/// Outcome of a hypothesis test: the standardized statistic (Z or
/// chi-square), optional degrees of freedom, the two-sided p-value, and how
/// many observations actually entered the test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Option<usize>,
    pub p: f64,
    pub n_effective: usize,
}

/// Qualitative bands for |rho|.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strength {
    Negligible,
    VeryWeak,
    Weak,
    Moderate,
    Strong,
    VeryStrong,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Negligible => "negligible",
            Strength::VeryWeak => "very-weak",
            Strength::Weak => "weak",
            Strength::Moderate => "moderate",
            Strength::Strong => "strong",
            Strength::VeryStrong => "very-strong",
        }
    }

    pub fn parse(s: &str) -> Option<Strength> {
        match s {
            "negligible" => Some(Strength::Negligible),
            "very-weak" => Some(Strength::VeryWeak),
            "weak" => Some(Strength::Weak),
            "moderate" => Some(Strength::Moderate),
            "strong" => Some(Strength::Strong),
            "very-strong" => Some(Strength::VeryStrong),
            _ => None,
        }
    }
}

/// Significance markers at the .05/.01/.001 thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stars {
    None,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }

    pub fn parse(s: &str) -> Option<Stars> {
        match s {
            "" => Some(Stars::None),
            "*" => Some(Stars::One),
            "**" => Some(Stars::Two),
            "***" => Some(Stars::Three),
            _ => None,
        }
    }
}

/// Stars for a p-value.
pub fn stars_for_p(p: f64) -> Stars {
    if p < 0.001 {
        Stars::Three
    } else if p < 0.01 {
        Stars::Two
    } else if p < 0.05 {
        Stars::One
    } else {
        Stars::None
    }
}

/// Qualitative strength band for a correlation coefficient.
pub fn strength_label(rho: f64) -> Result<Strength> {
    if !rho.is_finite() || rho.abs() > 1.0 {
        return Err(Error::Argument(format!("|rho| must be <= 1, got {rho}")));
    }
    let a = rho.abs();
    Ok(if a < 0.10 {
        Strength::Negligible
    } else if a < 0.20 {
        Strength::VeryWeak
    } else if a < 0.40 {
        Strength::Weak
    } else if a < 0.60 {
        Strength::Moderate
    } else if a < 0.80 {
        Strength::Strong
    } else {
        Strength::VeryStrong
    })
}

/// One correlation between an outcome measure and a clinical score.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCell {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
    pub strength: Strength,
    pub stars: Stars,
}

/// One pairwise comparison from the Dunn-Šidák post-hoc test.
#[derive(Debug, Clone, PartialEq)]
pub struct PosthocResult {
    /// Indices of the two compared treatments (columns).
    pub pair: (usize, usize),
    pub mean_rank_diff: f64,
    pub z: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub significant: bool,
}

/// Average ranks (1-based) with tie groups sharing their mean rank. Ties are
/// exact value equality.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Quantile by linear interpolation between order statistics (the common
/// statistical-package default): position q*(n-1) in the sorted sample.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Argument("quantile of an empty sample".to_string()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Argument(format!("quantile level {q} outside [0,1]")));
    }
    let mut sorted = values.to_vec();
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument(
            "quantile requires finite values".to_string(),
        ));
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        Ok(sorted[lo])
    } else {
        Ok(sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]))
    }
}

/// Largest nonzero-difference count for which the signed-rank p-value is
/// computed exactly rather than by normal approximation.
pub const WILCOXON_EXACT_LIMIT: usize = 12;

/// Wilcoxon signed-rank test for paired samples.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Argument(
            "signed-rank test needs at least 2 pairs".to_string(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("samples must be finite".to_string()));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::DegenerateSample(
            "all paired differences are zero".to_string(),
        ));
    }
    let abs_diffs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs_diffs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let tie_sum = tie_correction_sum(&abs_diffs);
    let sigma2 = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_sum / 48.0;
    let sigma = sigma2.sqrt();
    let centered = w_plus - mu;
    let z = if centered == 0.0 {
        0.0
    } else {
        (centered - 0.5 * centered.signum()) / sigma
    };
    let p = if n <= WILCOXON_EXACT_LIMIT {
        signed_rank_exact_p(&ranks, w_plus)
    } else {
        (2.0 * normal_sf(z.abs())).min(1.0)
    };
    Ok(TestResult {
        statistic: z,
        df: None,
        p,
        n_effective: n,
    })
}

/// Sum of (t^3 - t) over the tie groups of `values`.
fn tie_correction_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Exact two-sided signed-rank p-value: P(W >= mu + d) + P(W <= mu - d) with
/// d = |w - mu|, computed by convolving the doubled (hence integer) ranks.
fn signed_rank_exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|&r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum(); // n(n+1), always even
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &r2 in &doubled {
        for w in (r2..=total).rev() {
            counts[w] += counts[w - r2];
        }
    }
    let center2 = (total / 2) as i64;
    let w2 = (2.0 * w_plus).round() as i64;
    let d2 = (w2 - center2).abs();
    if d2 == 0 {
        return 1.0;
    }
    let upper: u64 = counts[(center2 + d2) as usize..].iter().sum();
    let lower: u64 = counts[..=(center2 - d2) as usize].iter().sum();
    (upper + lower) as f64 / (1u64 << n) as f64
}

/// Spearman rank correlation with p-value, stars and strength band.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationCell> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Argument(format!(
            "correlation needs at least 3 pairs, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Argument("samples must be finite".to_string()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        let da = a - mean;
        let db = b - mean;
        sxx += da * da;
        syy += db * db;
        sxy += da * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "constant input vector".to_string(),
        ));
    }
    let rho = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p = if rho.abs() == 1.0 {
        0.0
    } else {
        let t = rho * ((n as f64 - 2.0) / (1.0 - rho * rho)).sqrt();
        student_t_two_sided(t, n - 2)?
    };
    Ok(CorrelationCell {
        rho,
        p,
        n,
        strength: strength_label(rho)?,
        stars: stars_for_p(p),
    })
}

/// Spearman with pairwise deletion: entries where either side is missing are
/// dropped before ranking.
pub fn spearman_with_missing(x: &[Option<f64>], y: &[Option<f64>]) -> Result<CorrelationCell> {
    if x.len() != y.len() {
        return Err(Error::Argument(format!(
            "samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    spearman(&xs, &ys)
}

fn validate_score_matrix(scores: &[Vec<f64>]) -> Result<(usize, usize)> {
    let n = scores.len();
    if n < 2 {
        return Err(Error::Argument(format!("need at least 2 blocks, got {n}")));
    }
    let k = scores[0].len();
    if k < 2 {
        return Err(Error::Argument(format!(
            "need at least 2 treatments, got {k}"
        )));
    }
    for (i, row) in scores.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Argument(format!(
                "block {i} has {} cells, expected {k} (missing cell?)",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "block {i} contains non-finite cells"
            )));
        }
    }
    Ok((n, k))
}

/// Friedman test over an n-blocks x k-treatments score matrix, with the
/// standard tie correction. A matrix where every block is fully tied yields
/// statistic 0 and p = 1.
pub fn friedman(scores: &[Vec<f64>]) -> Result<TestResult> {
    let (n, k) = validate_score_matrix(scores)?;
    let mut rank_sums = vec![0.0; k];
    let mut tie_sum = 0.0;
    for row in scores {
        let ranks = average_ranks(row);
        for (j, r) in ranks.iter().enumerate() {
            rank_sums[j] += r;
        }
        tie_sum += tie_correction_sum(row);
    }
    let nf = n as f64;
    let kf = k as f64;
    let ssq: f64 = rank_sums.iter().map(|r| r * r).sum();
    let raw = 12.0 / (nf * kf * (kf + 1.0)) * ssq - 3.0 * nf * (kf + 1.0);
    let correction = 1.0 - tie_sum / (nf * kf * (kf * kf - 1.0));
    let (statistic, p) = if correction == 0.0 {
        (0.0, 1.0)
    } else {
        let statistic = (raw / correction).max(0.0);
        (statistic, chi2_sf(statistic, k - 1)?)
    };
    Ok(TestResult {
        statistic,
        df: Some(k - 1),
        p,
        n_effective: n,
    })
}

/// Šidák family-wise adjustment of a raw p-value over m comparisons.
pub fn sidak_adjust(p_raw: f64, m: usize) -> f64 {
    debug_assert!(m >= 1);
    if m == 1 {
        return p_raw;
    }
    (1.0 - (1.0 - p_raw).powi(m as i32)).clamp(p_raw, 1.0)
}

/// Pairwise Dunn-Šidák comparisons of mean ranks after a Friedman test.
/// Pure: callers are expected to run it only when the omnibus test was
/// significant, but nothing here enforces that.
pub fn dunn_sidak(scores: &[Vec<f64>], alpha: f64) -> Result<Vec<PosthocResult>> {
    let (n, k) = validate_score_matrix(scores)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Argument(format!("alpha {alpha} outside [0,1]")));
    }
    let mut rank_sums = vec![0.0; k];
    for row in scores {
        for (j, r) in average_ranks(row).iter().enumerate() {
            rank_sums[j] += r;
        }
    }
    let nf = n as f64;
    let kf = k as f64;
    let mean_ranks: Vec<f64> = rank_sums.iter().map(|r| r / nf).collect();
    let se = (kf * (kf + 1.0) / (6.0 * nf)).sqrt();
    let m = k * (k - 1) / 2;
    let mut results = Vec::with_capacity(m);
    for i in 0..k {
        for j in (i + 1)..k {
            let diff = mean_ranks[i] - mean_ranks[j];
            let z = diff.abs() / se;
            let p_raw = (2.0 * normal_sf(z)).min(1.0);
            let p_adjusted = sidak_adjust(p_raw, m);
            results.push(PosthocResult {
                pair: (i, j),
                mean_rank_diff: diff,
                z,
                p_raw,
                p_adjusted,
                significant: p_adjusted < alpha,
            });
        }
    }
    Ok(results)
}
