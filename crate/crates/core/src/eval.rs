//! Correlation statistics and grouped k-fold cross-validation.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{fit, TrainConfig, TrainRow};
use crate::rng::DetRng;

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Length(format!("lengths differ: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Length(format!("need at least 2 values, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite value in correlation input".into()));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if v.iter().all(|&a| a == v[0]) {
            return Err(Error::Degenerate(format!("{name} is constant")));
        }
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    Ok(pearson_unchecked(x, y))
}

fn pearson_unchecked(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// 1-based ranks, ties sharing the average rank.
pub fn rank_average(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && v[order[end]] == v[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    Ok(pearson_unchecked(&rank_average(x), &rank_average(y)))
}

/// Number of pairs inside runs of equal consecutive keys.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort returning the number of inversions (strictly greater before smaller).
fn sort_counting_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], &mut buf[..mid]);
    swaps += sort_counting_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..].copy_from_slice(&v[j..]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall tau-b in O(n log n) (Knight's algorithm).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as u64;
    // `+ 0.0` folds -0.0 into 0.0 so the sort agrees with `==`
    let mut pairs: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a + 0.0, b + 0.0)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let tx = tied_pairs(&xs);
    let txy = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = sort_counting_swaps(&mut ys, &mut buf);
    let ty = tied_pairs(&ys);

    let n0 = n * (n - 1) / 2;
    // concordant - discordant = n0 - tx - ty + txy - 2 * discordant
    let num = n0 as i64 - tx as i64 - ty as i64 + txy as i64 - 2 * discordant as i64;
    Ok(tau_b(num, n0 - tx, n0 - ty))
}

pub(crate) fn tau_b(num: i64, untied_x: u64, untied_y: u64) -> f64 {
    (num as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt()).clamp(-1.0, 1.0)
}

/// PLCC, SRCC and KRCC of one pairing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub plcc: f64,
    pub srcc: f64,
    pub krcc: f64,
}

impl Correlations {
    /// All three statistics over the pooled rows.
    pub fn pooled(x: &[f64], y: &[f64]) -> Result<Self> {
        Ok(Self {
            plcc: pearson(x, y)?,
            srcc: spearman(x, y)?,
            krcc: kendall_tau_b(x, y)?,
        })
    }

    /// Unweighted mean of per-group statistics. Groups with fewer than two
    /// rows or a constant column are skipped; the count used is returned.
    pub fn per_group_mean(x: &[f64], y: &[f64], groups: &[String]) -> Result<(Self, usize)> {
        if x.len() != y.len() || x.len() != groups.len() {
            return Err(Error::Length(format!(
                "lengths differ: {} / {} / {} groups",
                x.len(),
                y.len(),
                groups.len()
            )));
        }
        let mut by_group: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for ((a, b), g) in x.iter().zip(y).zip(groups) {
            let e = by_group.entry(g).or_default();
            e.0.push(*a);
            e.1.push(*b);
        }
        let mut sum = Self {
            plcc: 0.0,
            srcc: 0.0,
            krcc: 0.0,
        };
        let mut used = 0;
        for (gx, gy) in by_group.values() {
            match Self::pooled(gx, gy) {
                Ok(c) => {
                    sum.plcc += c.plcc;
                    sum.srcc += c.srcc;
                    sum.krcc += c.krcc;
                    used += 1;
                }
                Err(Error::Degenerate(_) | Error::Length(_)) => {}
                Err(e) => return Err(e),
            }
        }
        if used == 0 {
            return Err(Error::Degenerate("no group has two distinct values in both columns".into()));
        }
        let k = used as f64;
        Ok((
            Self {
                plcc: sum.plcc / k,
                srcc: sum.srcc / k,
                krcc: sum.krcc / k,
            },
            used,
        ))
    }
}

/// Row-to-fold assignment. Rows sharing a group land in the same fold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    /// Distinct groups are sorted, shuffled with `seed` and dealt to folds
    /// round-robin. Without groups every row is its own group.
    pub fn new(n_rows: usize, k: usize, groups: Option<&[String]>, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 folds, got {k}")));
        }
        let keys: Vec<String> = match groups {
            Some(g) if g.len() != n_rows => {
                return Err(Error::Length(format!("{} group keys for {n_rows} rows", g.len())))
            }
            Some(g) => g.to_vec(),
            None => (0..n_rows).map(|i| i.to_string()).collect(),
        };
        let distinct: BTreeSet<&str> = keys.iter().map(String::as_str).collect();
        if distinct.len() < k {
            return Err(Error::Data(format!(
                "{} groups cannot fill {k} folds",
                distinct.len()
            )));
        }
        let mut order: Vec<&str> = distinct.into_iter().collect();
        DetRng::new(seed).shuffle(&mut order);
        let fold_of: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, &g)| (g, i % k)).collect();
        let assignments = keys.iter().map(|g| fold_of[g.as_str()]).collect();
        Ok(Self { k, assignments })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Row indices of the held-out fold.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n: usize,
    pub plcc: f64,
    pub srcc: f64,
    pub krcc: f64,
}

/// Unweighted fold means plus the per-fold values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub plcc: f64,
    pub srcc: f64,
    pub krcc: f64,
    pub n: usize,
    pub folds: Vec<FoldResult>,
}

/// Trains on k-1 folds and scores the held-out one, for each fold.
pub fn kfold_cv(
    rows: &[TrainRow],
    k: usize,
    config: &TrainConfig,
    groups: Option<&[String]>,
    seed: u64,
) -> Result<CvReport> {
    let plan = FoldPlan::new(rows.len(), k, groups, seed)?;
    kfold_with_plan(rows, &plan, config, CorrelationMode::Pooled)
}

/// How held-out predictions are scored within a fold.
#[derive(Clone, Copy, Debug)]
pub enum CorrelationMode<'a> {
    /// One correlation over all held-out rows.
    Pooled,
    /// Mean of per-group correlations, one group label per row.
    PerGroup(&'a [String]),
}

pub fn kfold_with_plan(
    rows: &[TrainRow],
    plan: &FoldPlan,
    config: &TrainConfig,
    mode: CorrelationMode,
) -> Result<CvReport> {
    if let CorrelationMode::PerGroup(g) = mode {
        if g.len() != rows.len() {
            return Err(Error::Length(format!("{} group labels for {} rows", g.len(), rows.len())));
        }
    }
    if plan.assignments().len() != rows.len() {
        return Err(Error::Length(format!(
            "fold plan covers {} rows, got {}",
            plan.assignments().len(),
            rows.len()
        )));
    }
    let folds = (0..plan.k())
        .into_par_iter()
        .map(|fold| {
            let test_idx = plan.test_rows(fold);
            let train: Vec<TrainRow> = rows
                .iter()
                .zip(plan.assignments())
                .filter(|(_, &f)| f != fold)
                .map(|(r, _)| *r)
                .collect();
            let model = fit(&train, config)?;
            let pred: Vec<f64> = test_idx.iter().map(|&i| model.predict(&rows[i].features)).collect();
            let truth: Vec<f64> = test_idx.iter().map(|&i| rows[i].target).collect();
            let c = match mode {
                CorrelationMode::Pooled => Correlations::pooled(&pred, &truth)?,
                CorrelationMode::PerGroup(g) => {
                    let labels: Vec<String> = test_idx.iter().map(|&i| g[i].clone()).collect();
                    Correlations::per_group_mean(&pred, &truth, &labels)?.0
                }
            };
            Ok(FoldResult {
                fold,
                n: test_idx.len(),
                plcc: c.plcc,
                srcc: c.srcc,
                krcc: c.krcc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = folds.len() as f64;
    Ok(CvReport {
        plcc: folds.iter().map(|f| f.plcc).sum::<f64>() / k,
        srcc: folds.iter().map(|f| f.srcc).sum::<f64>() / k,
        krcc: folds.iter().map(|f| f.krcc).sum::<f64>() / k,
        n: rows.len(),
        folds,
    })
}
