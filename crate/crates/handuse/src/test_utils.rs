//! Independent reference computations used by the test suites.
//!
//! Everything here deliberately takes a different route from the main
//! implementation — explicit quadrature instead of special-function series,
//! full 2^n enumeration instead of closed forms, per-block counting loops
//! instead of iterator pipelines — so tests compare two genuinely separate
//! derivations. Production code must never call into this module.

/// Adaptive Simpson quadrature with the standard Richardson error estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Standard normal survival function by integrating the density over a
/// finite interval from 0 (avoids truncated tails entirely).
pub fn normal_sf_quadrature(z: f64) -> f64 {
    let density = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mass = adaptive_simpson(density, 0.0, z.abs(), 1e-13);
    if z >= 0.0 {
        0.5 - mass
    } else {
        0.5 + mass
    }
}

fn factorial_f64(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Exact Gamma(two_a / 2) for integer and half-integer arguments.
fn gamma_exact_half(two_a: u64) -> f64 {
    assert!(two_a >= 1);
    if two_a.is_multiple_of(2) {
        factorial_f64(two_a / 2 - 1)
    } else {
        let m = (two_a - 1) / 2;
        factorial_f64(2 * m) / (4f64.powi(m as i32) * factorial_f64(m))
            * std::f64::consts::PI.sqrt()
    }
}

/// Chi-square survival function by integrating the density tail. The
/// normalizing constant uses exact factorial-based gamma values, so the
/// route shares nothing with the Lanczos-based implementation.
pub fn chi2_sf_quadrature(x: f64, df: usize) -> f64 {
    assert!(df >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    let k = df as f64;
    let norm = 2f64.powf(k / 2.0) * gamma_exact_half(df as u64);
    let density = move |t: f64| t.powf(k / 2.0 - 1.0) * (-t / 2.0).exp() / norm;
    let upper = (x.max(k) + 300.0).max(x + 60.0);
    adaptive_simpson(density, x, upper, 1e-13)
}

/// Two-sided Student-t p-value by integrating the density over [0, |t|]
/// (again no truncated tails, which matters for df = 1).
pub fn t_two_sided_quadrature(t: f64, df: usize) -> f64 {
    assert!(df >= 1);
    let v = df as f64;
    // Gamma((v+1)/2) / Gamma(v/2), both exact for integer df.
    let ratio = gamma_exact_half(df as u64 + 1) / gamma_exact_half(df as u64);
    let norm = ratio / (v * std::f64::consts::PI).sqrt();
    let density = move |u: f64| norm * (1.0 + u * u / v).powf(-(v + 1.0) / 2.0);
    let central = adaptive_simpson(density, 0.0, t.abs(), 1e-13);
    (1.0 - 2.0 * central).max(0.0)
}

/// Exact two-sided signed-rank p-value by enumerating all 2^n sign
/// assignments. `ranks` are the (possibly tie-averaged) ranks of |d|;
/// `w_obs` is the observed positive-rank sum. The two-sided tail is the
/// symmetric one: P(W >= mu + d) + P(W <= mu - d) with d = |w_obs - mu|.
pub fn wilcoxon_exact_p(ranks: &[f64], w_obs: f64) -> f64 {
    let n = ranks.len();
    assert!(
        (1..=22).contains(&n),
        "enumeration oracle supports n in 1..=22"
    );
    // Doubled ranks are integers even with tie averaging.
    let doubled: Vec<i64> = ranks.iter().map(|&r| (2.0 * r).round() as i64).collect();
    let total: i64 = doubled.iter().sum();
    assert_eq!(total, (n * (n + 1)) as i64);
    let center2 = total / 2; // n(n+1) is even
    let w2_obs = (2.0 * w_obs).round() as i64;
    let d2 = (w2_obs - center2).abs();
    let mut extreme: u64 = 0;
    for mask in 0u64..(1u64 << n) {
        let mut w2 = 0i64;
        for (i, r2) in doubled.iter().enumerate() {
            if mask & (1 << i) != 0 {
                w2 += r2;
            }
        }
        if w2 >= center2 + d2 || w2 <= center2 - d2 {
            extreme += 1;
        }
    }
    extreme as f64 / (1u64 << n) as f64
}

/// Average ranks (1-based, tie groups share their mean), the oracle-side
/// ranking routine.
pub fn rank_average(values: &[f64]) -> Vec<f64> {
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

/// Friedman statistic by the direct sum-of-squares formula
/// T = (k-1) * sum_j (R_j - n(k+1)/2)^2 / (A - C) with A the sum of squared
/// ranks and C = n k (k+1)^2 / 4. Handles ties through the rank sums alone.
pub fn friedman_direct_statistic(scores: &[Vec<f64>]) -> f64 {
    let n = scores.len();
    let k = scores[0].len();
    let mut column_rank_sums = vec![0.0; k];
    let mut sum_sq_ranks = 0.0;
    for row in scores {
        assert_eq!(row.len(), k);
        let ranks = rank_average(row);
        for (j, r) in ranks.iter().enumerate() {
            column_rank_sums[j] += r;
            sum_sq_ranks += r * r;
        }
    }
    let nf = n as f64;
    let kf = k as f64;
    let c = nf * kf * (kf + 1.0) * (kf + 1.0) / 4.0;
    let denom = sum_sq_ranks - c;
    if denom == 0.0 {
        return 0.0;
    }
    let mean_rank_sum = nf * (kf + 1.0) / 2.0;
    let numer: f64 = column_rank_sums
        .iter()
        .map(|&rj| (rj - mean_rank_sum) * (rj - mean_rank_sum))
        .sum();
    (kf - 1.0) * numer / denom
}

/// Spearman rho by ranking then applying the raw-moment Pearson formula
/// (n*Sxy - Sx*Sy) / sqrt((n*Sxx - Sx^2)(n*Syy - Sy^2)).
pub fn spearman_rank_pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let rx = rank_average(x);
    let ry = rank_average(y);
    let n = x.len() as f64;
    let sx: f64 = rx.iter().sum();
    let sy: f64 = ry.iter().sum();
    let sxx: f64 = rx.iter().map(|v| v * v).sum();
    let syy: f64 = ry.iter().map(|v| v * v).sum();
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Majority-vote pooling by explicit per-block counting of ones and zeros.
pub fn pool_majority_brute_force(bits: &[u8], window: usize, tie_is_one: bool) -> Vec<u8> {
    assert!(window >= 1);
    let mut out = Vec::with_capacity(bits.len());
    let mut start = 0;
    while start < bits.len() {
        let end = (start + window).min(bits.len());
        let mut ones = 0usize;
        let mut zeros = 0usize;
        for &b in &bits[start..end] {
            if b == 1 {
                ones += 1;
            } else {
                zeros += 1;
            }
        }
        let label = if ones > zeros {
            1
        } else if zeros > ones {
            0
        } else if tie_is_one {
            1
        } else {
            0
        };
        for _ in start..end {
            out.push(label);
        }
        start = end;
    }
    out
}

/// Expected frame-level F1 of a perfect predictor scored against labels that
/// were flipped independently with probability `eps`, given the true
/// positive-class fraction `rho`.
pub fn expected_f1_under_label_noise(rho: f64, eps: f64) -> f64 {
    2.0 * (1.0 - eps) * rho / (2.0 * (1.0 - eps) * rho + eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_integrates_polynomials_exactly() {
        // Simpson is exact for cubics.
        let got = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 1e-13);
        let expected = (81.0 / 4.0 - 9.0 + 3.0) - (1.0 / 4.0 - 1.0 - 1.0);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_half_gammas() {
        assert_eq!(gamma_exact_half(2), 1.0); // Gamma(1)
        assert_eq!(gamma_exact_half(8), 6.0); // Gamma(4) = 3!
        assert!((gamma_exact_half(1) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        // Gamma(3/2) = sqrt(pi)/2
        assert!((gamma_exact_half(3) - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn wilcoxon_enumeration_tiny_case() {
        // n = 2, ranks {1, 2}, observed W = 3 -> tails {0, 3} -> p = 0.5.
        let p = wilcoxon_exact_p(&[1.0, 2.0], 3.0);
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn brute_force_pool_tail_block() {
        let bits = vec![1, 1, 1, 0, 0, 1, 1];
        // window 5: block1 = 3 ones/2 zeros -> 1; tail = [1,1] -> 1.
        assert_eq!(
            pool_majority_brute_force(&bits, 5, false),
            vec![1, 1, 1, 1, 1, 1, 1]
        );
    }
}
