//! Small statistical helpers shared by the estimators and the test suites.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Upper tail `P(χ²_dof > x)`.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if dof == 0 || x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64)
        .map(|d| d.sf(x))
        .unwrap_or(f64::NAN)
}

/// Pooled cell of a two-sample count comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountCell {
    /// Smallest and largest state pooled into this cell.
    pub states: (i64, i64),
    pub a: u64,
    pub b: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub cells: Vec<CountCell>,
}

/// Minimum expected count per pooled cell.
pub const MIN_EXPECTED: f64 = 5.0;

/// Two-sample chi-square homogeneity test on integer-valued samples of
/// equal size. Adjacent states are pooled until each cell's expected count
/// `(a + b)/2` reaches [`MIN_EXPECTED`]; an underfilled tail joins the last
/// full cell.
pub fn two_sample_chi_square(a: &[i64], b: &[i64]) -> Result<ChiSquareResult> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidInput(format!(
            "chi-square needs two nonempty samples of equal size, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut states: std::collections::BTreeMap<i64, (u64, u64)> = Default::default();
    for &s in a {
        states.entry(s).or_default().0 += 1;
    }
    for &s in b {
        states.entry(s).or_default().1 += 1;
    }
    let mut cells: Vec<CountCell> = Vec::new();
    let mut open: Option<CountCell> = None;
    for (&s, &(ca, cb)) in &states {
        let c = open.get_or_insert(CountCell {
            states: (s, s),
            a: 0,
            b: 0,
        });
        c.states.1 = s;
        c.a += ca;
        c.b += cb;
        if (c.a + c.b) as f64 / 2.0 >= MIN_EXPECTED {
            cells.push(open.take().expect("cell is open"));
        }
    }
    if let Some(rest) = open {
        match cells.last_mut() {
            Some(last) => {
                last.states.1 = rest.states.1;
                last.a += rest.a;
                last.b += rest.b;
            }
            None => {
                return Err(Error::Underpowered(format!(
                    "{} observations cannot fill one cell with expected count {MIN_EXPECTED}",
                    a.len()
                )))
            }
        }
    }
    let statistic: f64 = cells
        .iter()
        .map(|c| {
            let d = c.a as f64 - c.b as f64;
            d * d / (c.a + c.b) as f64
        })
        .sum();
    let dof = cells.len() - 1;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
        cells,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{j-1} e^{-2 j² λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value and the
/// usual small-sample correction of the scaling factor.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("KS test needs nonempty samples".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = x[i].min(y[j]);
        while i < n && x[i] <= t {
            i += 1;
        }
        while j < m && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    let s = ne.sqrt();
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q((s + 0.12 + 0.11 / s) * d),
    })
}

/// `sqrt(p (1 - p) / n)`.
pub fn binomial_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Mean and batch-means standard error of a stationary but correlated
/// series, using `batches` contiguous batches.
pub fn batch_means(series: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || series.len() < batches {
        return Err(Error::InvalidInput(format!(
            "need at least {batches} ≥ 2 observations for batch means, got {}",
            series.len()
        )));
    }
    let size = series.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok((grand, (var / batches as f64).sqrt()))
}

/// Median of a nonempty slice; the mean of the two central values for even
/// length.
pub fn median(xs: &[f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty slice");
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chi_square_tail_values() {
        // P(χ²_1 > 3.841459) = 0.05, P(χ²_10 > 18.307) = 0.05
        assert!((chi_square_sf(3.841_458_820_694_124, 1) - 0.05).abs() < 1e-9);
        assert!((chi_square_sf(18.307_038_053_275_146, 10) - 0.05).abs() < 1e-9);
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
    }

    #[test]
    fn chi_square_pools_sparse_states() {
        let a = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 7];
        let b = [0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 9];
        let r = two_sample_chi_square(&a, &b).unwrap();
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.cells[1].states, (1, 9));
        let total: u64 = r.cells.iter().map(|c| c.a + c.b).sum();
        assert_eq!(total, 22);
        assert_eq!(r.statistic, 0.0);
        assert!(matches!(
            two_sample_chi_square(&[1, 2], &[3, 4]),
            Err(Error::Underpowered(_))
        ));
    }

    #[test]
    fn chi_square_detects_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<i64> = (0..20_000).map(|_| rng.random_range(0..10)).collect();
        let b: Vec<i64> = (0..20_000).map(|_| rng.random_range(0..10)).collect();
        let c: Vec<i64> = (0..20_000).map(|_| rng.random_range(0..11)).collect();
        assert!(two_sample_chi_square(&a, &b).unwrap().p_value > 1e-3);
        assert!(two_sample_chi_square(&a, &c).unwrap().p_value < 1e-6);
    }

    #[test]
    fn kolmogorov_series() {
        // Q(1.358) ≈ 0.05
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!(kolmogorov_q(0.0) == 1.0);
        assert!(kolmogorov_q(3.0) < 1e-6);
    }

    #[test]
    fn ks_same_and_shifted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random()).collect();
        let c: Vec<f64> = b.iter().map(|x| x * 0.9).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 1e-3);
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
    }

    #[test]
    fn batch_means_of_iid_matches_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 })
            .collect();
        let (m, se) = batch_means(&xs, 50).unwrap();
        let b = binomial_se(m, xs.len() as f64);
        assert!((se / b - 1.0).abs() < 0.5, "{se} vs {b}");
        assert!((m - 0.3).abs() < 4.0 * b);
    }

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
