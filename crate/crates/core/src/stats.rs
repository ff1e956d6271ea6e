//! Small statistics helpers: quantiles, ranks, Spearman correlation and a
//! χ² goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};

/// Linearly interpolated quantile between order statistics (type 7).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return invalid("quantile of an empty sample");
    }
    if !(0.0..=1.0).contains(&q) {
        return invalid(format!("quantile level {q} outside [0, 1]"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    crate::par::pairwise_sum(values) / values.len() as f64
}

/// 1-based ranks, ties sharing their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank;
        }
        start = end;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation and its two-sided p-value from the Student t
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spearman {
    pub rho: f64,
    pub p_value: f64,
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Spearman> {
    if x.len() != y.len() || x.len() < 3 {
        return invalid("Spearman correlation needs two samples of equal length >= 3");
    }
    let rho = pearson(&ranks(x), &ranks(y)).clamp(-1.0, 1.0);
    let dof = (x.len() - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (dof / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };
    Ok(Spearman { rho, p_value })
}

/// Pearson χ² goodness-of-fit p-value of `observed` counts against
/// `expected` probabilities. Cells with expected count below `min_expected`
/// are pooled into one cell.
pub fn chi_square_p_value(observed: &[u64], expected: &[f64], min_expected: f64) -> Result<f64> {
    if observed.len() != expected.len() {
        return invalid("observed and expected cell counts differ in length");
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return invalid("no observations");
    }
    let t = total as f64;
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * t;
        if e < min_expected {
            pool_obs += o as f64;
            pool_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        cells += 1;
    } else if pool_obs > 0.0 {
        return Ok(0.0);
    }
    if cells < 2 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new((cells - 1) as f64).expect("positive degrees of freedom");
    Ok(1.0 - dist.cdf(stat))
}
