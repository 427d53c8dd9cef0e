//! Cross-run aggregation and the rank statistics used to compare regimes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::experiment::GenerationStats;

/// Five-number summary plus mean.
///
/// Quartiles use the median-of-halves rule: the median splits the sorted
/// sample, the middle element (odd sizes) belongs to neither half, and each
/// quartile is the median of its half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

impl Aggregate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyStats);
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let (q1, q3) = if n == 1 {
            (v[0], v[0])
        } else {
            (median_sorted(&v[..n / 2]), median_sorted(&v[n.div_ceil(2)..]))
        };
        Ok(Self {
            n,
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            q1,
            median: median_sorted(&v),
            q3,
            max: v[n - 1],
        })
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Across-run aggregates for one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationAggregate {
    pub generation: usize,
    pub best: Aggregate,
    pub mean: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_generation: Vec<GenerationAggregate>,
    /// Aggregates over the last generation of every run.
    pub final_generation: GenerationAggregate,
    /// Per run, the highest best fitness and highest mean fitness reached
    /// in any generation.
    pub run_peak: GenerationAggregate,
}

pub fn summarize(stats: &[GenerationStats]) -> Result<Summary> {
    if stats.is_empty() {
        return Err(Error::EmptyStats);
    }
    let mut by_generation: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut peaks: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for s in stats {
        let entry = by_generation.entry(s.generation).or_default();
        entry.0.push(s.best_fitness as f64);
        entry.1.push(s.mean_fitness);
        let peak = peaks.entry(s.run_id).or_insert((f64::MIN, f64::MIN));
        peak.0 = peak.0.max(s.best_fitness as f64);
        peak.1 = peak.1.max(s.mean_fitness);
    }
    let per_generation = by_generation
        .into_iter()
        .map(|(generation, (best, mean))| {
            Ok(GenerationAggregate {
                generation,
                best: Aggregate::from_values(&best)?,
                mean: Aggregate::from_values(&mean)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let final_generation = per_generation.last().cloned().ok_or(Error::EmptyStats)?;
    let (peak_best, peak_mean): (Vec<f64>, Vec<f64>) = peaks.into_values().unzip();
    let run_peak = GenerationAggregate {
        generation: final_generation.generation,
        best: Aggregate::from_values(&peak_best)?,
        mean: Aggregate::from_values(&peak_mean)?,
    };
    Ok(Summary {
        per_generation,
        final_generation,
        run_peak,
    })
}

/// 1-based ranks, ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Spearman rank correlation; `None` when either series is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    /// One-sided p-value for "first sample tends to be larger".
    pub p_greater: f64,
    pub exact: bool,
}

/// Wilcoxon rank-sum (Mann-Whitney) test of `x > y`.
///
/// Exact null distribution when there are no ties and both samples are
/// smaller than 50; otherwise the normal approximation with tie and
/// continuity corrections.
pub fn rank_sum_greater(x: &[f64], y: &[f64]) -> RankSumTest {
    let (n1, n2) = (x.len(), y.len());
    assert!(n1 > 0 && n2 > 0, "rank-sum test needs two non-empty samples");
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = average_ranks(&pooled);
    let w: f64 = ranks[..n1].iter().sum();
    let u = w - (n1 * (n1 + 1)) as f64 / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut has_ties = false;
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        if group.len() > 1 {
            has_ties = true;
        }
        tie_term += t * t * t - t;
    }

    if !has_ties && n1 < 50 && n2 < 50 {
        return RankSumTest {
            u,
            p_greater: exact_upper_tail(n1, n2, u.round() as usize),
            exact: true,
        };
    }

    let n = (n1 + n2) as f64;
    let (f1, f2) = (n1 as f64, n2 as f64);
    let var = f1 * f2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p_greater = if var <= 0.0 {
        1.0
    } else {
        let z = (u - f1 * f2 / 2.0 - 0.5) / var.sqrt();
        let normal = Normal::standard();
        1.0 - normal.cdf(z)
    };
    RankSumTest {
        u,
        p_greater,
        exact: false,
    }
}

/// P(U >= u) under the null, counting U over all ways to place the first
/// sample among `n1 + n2` distinct ranks.
fn exact_upper_tail(n1: usize, n2: usize, u: usize) -> f64 {
    // ways[k][s]: k items from the processed elements with U-contribution s
    let max_u = n1 * n2;
    let mut ways = vec![vec![0.0f64; max_u + 1]; n1 + 1];
    ways[0][0] = 1.0;
    // element j of the pooled order (0-based) placed in x contributes the
    // number of y elements below it: j - (number of x elements already placed)
    for j in 0..(n1 + n2) {
        for k in (1..=n1.min(j + 1)).rev() {
            let contrib = j + 1 - k;
            if contrib > n2 {
                continue;
            }
            for s in (contrib..=max_u).rev() {
                let add = ways[k - 1][s - contrib];
                if add != 0.0 {
                    ways[k][s] += add;
                }
            }
        }
    }
    let total: f64 = ways[n1].iter().sum();
    let tail: f64 = ways[n1][u.min(max_u + 1)..].iter().sum();
    tail / total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Mode;
    use crate::world::MapKind;

    fn row(run_id: usize, generation: usize, best: u64, mean: f64) -> GenerationStats {
        GenerationStats {
            run_id,
            generation,
            mode: Mode::Evo,
            map: MapKind::A,
            best_fitness: best,
            mean_fitness: mean,
        }
    }

    #[test]
    fn quartiles_by_median_of_halves() {
        let a = Aggregate::from_values(&[7.0, 1.0, 3.0, 5.0, 9.0]).unwrap();
        assert_eq!((a.min, a.q1, a.median, a.q3, a.max), (1.0, 2.0, 5.0, 8.0, 9.0));
        let a = Aggregate::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((a.q1, a.median, a.q3), (1.5, 2.5, 3.5));
        assert_eq!(a.mean, 2.5);
    }

    #[test]
    fn single_value_has_zero_iqr() {
        let a = Aggregate::from_values(&[4.0]).unwrap();
        assert_eq!((a.mean, a.q1, a.median, a.q3), (4.0, 4.0, 4.0, 4.0));
        assert_eq!(a.iqr(), 0.0);
    }

    #[test]
    fn constant_series_has_equal_quartiles() {
        let a = Aggregate::from_values(&[2.5; 7]).unwrap();
        assert_eq!((a.min, a.q1, a.median, a.q3, a.max), (2.5, 2.5, 2.5, 2.5, 2.5));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(summarize(&[]), Err(Error::EmptyStats)));
        assert!(Aggregate::from_values(&[]).is_err());
    }

    #[test]
    fn summary_groups_by_generation() {
        let stats = vec![
            row(0, 0, 3, 1.0),
            row(0, 1, 5, 2.0),
            row(1, 0, 1, 0.5),
            row(1, 1, 9, 4.0),
        ];
        let s = summarize(&stats).unwrap();
        assert_eq!(s.per_generation.len(), 2);
        assert_eq!(s.per_generation[0].best.mean, 2.0);
        assert_eq!(s.final_generation.generation, 1);
        assert_eq!(s.final_generation.best.mean, 7.0);
        assert_eq!(s.final_generation.mean.median, 3.0);
        assert_eq!(s.run_peak.best.min, 5.0);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 5.0]), vec![2.5, 4.0, 2.5, 1.0]);
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&x, &[10.0, 20.0, 30.0, 100.0]), Some(1.0));
        assert_eq!(spearman(&x, &[4.0, 3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&x, &[1.0; 4]), None);
    }

    #[test]
    fn exact_rank_sum_small_case() {
        // complete separation with 3 vs 3: one arrangement out of C(6,3) = 20
        let t = rank_sum_greater(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]);
        assert!(t.exact);
        assert_eq!(t.u, 9.0);
        assert!((t.p_greater - 0.05).abs() < 1e-12);
        let t = rank_sum_greater(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(t.p_greater, 1.0);
    }

    #[test]
    fn exact_tail_matches_enumeration() {
        // brute force over all C(8,4) placements
        let (n1, n2) = (4usize, 4usize);
        let n = n1 + n2;
        let mut us = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let mut u = 0;
            let mut below = 0;
            for pos in 0..n {
                if mask & (1 << pos) != 0 {
                    u += below;
                } else {
                    below += 1;
                }
            }
            us.push(u);
        }
        for threshold in 0..=16 {
            let brute = us.iter().filter(|&&u| u >= threshold).count() as f64 / us.len() as f64;
            assert!((exact_upper_tail(n1, n2, threshold) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn tied_samples_use_normal_approximation() {
        let t = rank_sum_greater(&[0.0, 0.0, 5.0, 6.0], &[0.0, 0.0, 1.0, 2.0]);
        assert!(!t.exact);
        assert!(t.p_greater > 0.0 && t.p_greater < 0.5);
        let t = rank_sum_greater(&[0.0; 5], &[0.0; 5]);
        assert_eq!(t.p_greater, 1.0);
    }
}
