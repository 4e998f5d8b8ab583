//! Bradley-Terry aggregation of pairwise subjective comparisons.
//!
//! `P(i beats j) = p_i / (p_i + p_j)`. A tie counts as half a win for each
//! side. Abilities are fitted by the minorization-maximization iteration
//!
//! ```text
//! p_i <- W_i / sum_{j != i} n_ij / (p_i + p_j)
//! ```
//!
//! applied to all methods simultaneously and renormalized to `sum p = 1`
//! after every sweep. Scores are reported as natural-log abilities shifted
//! so that the weakest method sits at 0.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Outcome counts between two methods.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseTally {
    pub a: String,
    pub b: String,
    pub wins_a: u64,
    pub wins_b: u64,
    pub ties: u64,
}

impl PairwiseTally {
    pub fn new(a: impl Into<String>, b: impl Into<String>, wins_a: u64, wins_b: u64, ties: u64) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            wins_a,
            wins_b,
            ties,
        }
    }
}

/// Per-method log-ability, minimum shifted to 0.
#[derive(Clone, Debug, PartialEq)]
pub struct BtScores {
    scores: BTreeMap<String, f64>,
}

impl BtScores {
    pub fn from_map(scores: BTreeMap<String, f64>) -> Self {
        Self { scores }
    }

    pub fn get(&self, method: &str) -> Option<f64> {
        self.scores.get(method).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.scores
    }

    /// Methods sorted by descending score, ties by name.
    pub fn ranked(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<(&str, f64)> = self.scores.iter().map(|(k, &s)| (k.as_str(), s)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v
    }
}

/// Aggregated comparison data over a fixed method ordering.
struct Comparisons {
    names: Vec<String>,
    /// `half_wins[i][j]` = wins of i over j plus half the ties.
    half_wins: Vec<Vec<f64>>,
}

impl Comparisons {
    fn build(tallies: &[PairwiseTally]) -> Result<Self> {
        let mut index = BTreeMap::new();
        for t in tallies {
            if t.a == t.b {
                return Err(Error::Data(format!("method '{}' compared with itself", t.a)));
            }
            index.entry(t.a.clone()).or_insert(0);
            index.entry(t.b.clone()).or_insert(0);
        }
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let m = index.len();
        let mut half_wins = vec![vec![0.0; m]; m];
        for t in tallies {
            let (i, j) = (index[&t.a], index[&t.b]);
            let half_tie = t.ties as f64 / 2.0;
            half_wins[i][j] += t.wins_a as f64 + half_tie;
            half_wins[j][i] += t.wins_b as f64 + half_tie;
        }
        Ok(Self {
            names: index.into_keys().collect(),
            half_wins,
        })
    }

    fn len(&self) -> usize {
        self.names.len()
    }

    fn games(&self, i: usize, j: usize) -> f64 {
        self.half_wins[i][j] + self.half_wins[j][i]
    }

    fn names_of(&self, set: impl IntoIterator<Item = usize>) -> String {
        let v: Vec<&str> = set.into_iter().map(|i| self.names[i].as_str()).collect();
        format!("{{{}}}", v.join(", "))
    }

    fn reach(&self, start: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..self.len() {
                if !seen[j] && edge(i, j) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// Checks that the maximum-likelihood abilities exist and are finite.
    fn check_identifiable(&self) -> Result<()> {
        let m = self.len();
        if m == 0 {
            return Err(Error::Degenerate("no methods to rank".into()));
        }

        let mut unassigned: BTreeSet<usize> = (0..m).collect();
        let mut components = Vec::new();
        while let Some(&start) = unassigned.iter().next() {
            let seen = self.reach(start, |i, j| self.games(i, j) > 0.0);
            let comp: Vec<usize> = (0..m).filter(|&i| seen[i]).collect();
            comp.iter().for_each(|i| {
                unassigned.remove(i);
            });
            components.push(comp);
        }
        if components.len() > 1 {
            let parts: Vec<String> = components.into_iter().map(|c| self.names_of(c)).collect();
            return Err(Error::Degenerate(format!(
                "comparison graph is disconnected: {}",
                parts.join(" | ")
            )));
        }

        let losers: Vec<usize> = (0..m)
            .filter(|&i| self.half_wins[i].iter().sum::<f64>() == 0.0)
            .collect();
        if !losers.is_empty() {
            return Err(Error::Degenerate(format!(
                "methods never win or tie: {}",
                self.names_of(losers)
            )));
        }

        // Every split of the methods must see a win across it in both
        // directions, i.e. the "beats" digraph is strongly connected.
        let beats = |i: usize, j: usize| self.half_wins[i][j] > 0.0;
        for (seen, dominated_first) in [
            (self.reach(0, beats), true),
            (self.reach(0, |i, j| beats(j, i)), false),
        ] {
            if seen.iter().all(|&s| s) {
                continue;
            }
            let inside: Vec<usize> = (0..m).filter(|&i| seen[i]).collect();
            let outside: Vec<usize> = (0..m).filter(|&i| !seen[i]).collect();
            let (winners, losers) = if dominated_first {
                (outside, inside)
            } else {
                (inside, outside)
            };
            return Err(Error::Degenerate(format!(
                "no method in {} ever beats a method in {}; abilities diverge",
                self.names_of(losers),
                self.names_of(winners)
            )));
        }
        Ok(())
    }

    /// `loglik(new) - loglik(old)` from per-term log-ratios. Near the optimum
    /// the gain is far below the rounding error of two full evaluations,
    /// while the ratio form keeps its relative precision.
    fn loglik_gain(&self, old: &[f64], new: &[f64]) -> f64 {
        // differences of nearby floats are exact; summing them before
        // dividing avoids the rounding of `new[i] + new[j]`
        let step: Vec<f64> = new.iter().zip(old).map(|(n, o)| n - o).collect();
        let mut gain = 0.0;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let w = self.half_wins[i][j];
                if w > 0.0 {
                    let own = (step[i] / old[i]).ln_1p();
                    let pair = ((step[i] + step[j]) / (old[i] + old[j])).ln_1p();
                    gain += w * (own - pair);
                }
            }
        }
        gain
    }

    fn loglik(&self, p: &[f64]) -> f64 {
        let mut ll = 0.0;
        for i in 0..self.len() {
            for j in 0..self.len() {
                let w = self.half_wins[i][j];
                if w > 0.0 {
                    ll += w * (p[i] / (p[i] + p[j])).ln();
                }
            }
        }
        ll
    }
}

/// Fits Bradley-Terry scores. See [`bt_fit_traced`] for the per-sweep
/// log-likelihood.
pub fn bt_fit(tallies: &[PairwiseTally], tol: f64, max_iter: usize) -> Result<BtScores> {
    bt_fit_traced(tallies, tol, max_iter).map(|(s, _)| s)
}

/// Like [`bt_fit`], also returning the log-likelihood before the first
/// sweep and after every sweep.
pub fn bt_fit_traced(tallies: &[PairwiseTally], tol: f64, max_iter: usize) -> Result<(BtScores, Vec<f64>)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    let cmp = Comparisons::build(tallies)?;
    cmp.check_identifiable()?;
    let m = cmp.len();
    let wins: Vec<f64> = cmp.half_wins.iter().map(|row| row.iter().sum()).collect();

    let mut p = vec![1.0 / m as f64; m];
    let mut trace = vec![cmp.loglik(&p)];
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next: Vec<f64> = (0..m)
            .map(|i| {
                let denom: f64 = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| cmp.games(i, j) / (p[i] + p[j]))
                    .sum();
                wins[i] / denom
            })
            .collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);

        delta = p
            .iter()
            .zip(&next)
            .map(|(a, b)| (b.ln() - a.ln()).abs())
            .fold(0.0, f64::max);
        let gain = cmp.loglik_gain(&p, &next);
        debug_assert!(gain >= -1e-12, "MM sweep decreased log-likelihood by {gain}");
        p = next;
        // accumulate gains rather than re-evaluating the full sum
        let prev = *trace.last().unwrap();
        trace.push(prev + gain);

        if delta < tol {
            let logs: Vec<f64> = p.iter().map(|v| v.ln()).collect();
            let min = logs.iter().copied().fold(f64::INFINITY, f64::min);
            let scores = cmp
                .names
                .into_iter()
                .zip(logs)
                .map(|(n, l)| (n, l - min))
                .collect();
            return Ok((BtScores { scores }, trace));
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last_delta: delta,
    })
}

/// `ln P(a beats b)` for log-abilities `sa`, `sb`.
fn log_win_prob(sa: f64, sb: f64) -> f64 {
    let d = sb - sa;
    if d > 0.0 {
        -(d + (-d).exp().ln_1p())
    } else {
        -d.exp().ln_1p()
    }
}

/// Log-likelihood of the tallies under the given scores, ties as half wins.
pub fn bt_loglik(tallies: &[PairwiseTally], scores: &BtScores) -> Result<f64> {
    let score = |m: &str| {
        scores
            .get(m)
            .ok_or_else(|| Error::Data(format!("no score for method '{m}'")))
    };
    let mut ll = 0.0;
    for t in tallies {
        let (sa, sb) = (score(&t.a)?, score(&t.b)?);
        let half = t.ties as f64 / 2.0;
        let (wa, wb) = (t.wins_a as f64 + half, t.wins_b as f64 + half);
        if wa > 0.0 {
            ll += wa * log_win_prob(sa, sb);
        }
        if wb > 0.0 {
            ll += wb * log_win_prob(sb, sa);
        }
    }
    Ok(ll)
}

const PAIRS_HEADER: [&str; 5] = ["a", "b", "wins_a", "wins_b", "ties"];

/// Reads a `a,b,wins_a,wins_b,ties` CSV.
pub fn read_pairs_csv(path: impl AsRef<Path>) -> Result<Vec<PairwiseTally>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Validation {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().ne(PAIRS_HEADER) {
        return Err(Error::Validation {
            row: 1,
            message: format!(
                "expected header '{}', got '{}'",
                PAIRS_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in reader.deserialize::<PairwiseTally>().enumerate() {
        out.push(rec.map_err(|e| Error::Validation {
            row: i + 2,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Writes `method,score` rows sorted by descending score.
pub fn write_scores_csv(path: impl AsRef<Path>, scores: &BtScores) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["method", "score"]).map_err(|e| Error::csv(path, e))?;
    for (m, s) in scores.ranked() {
        w.write_record([m, &s.to_string()]).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
