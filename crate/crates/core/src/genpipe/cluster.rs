//! Average-linkage agglomerative clustering under cosine distance.

use nalgebra::DMatrix;

use super::{Cluster, GenError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop once the closest pair of clusters is farther apart than this.
    Threshold(f64),
    /// Stop once this many clusters remain.
    TargetCount(usize),
}

const NONE: (f64, usize) = (f64::INFINITY, usize::MAX);

fn cosine_distances(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows();
    let norms: Vec<f64> = (0..n).map(|i| x.row(i).norm()).collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = if norms[i] == 0.0 || norms[j] == 0.0 {
                1.0
            } else {
                (1.0 - x.row(i).dot(&x.row(j)) / (norms[i] * norms[j])).clamp(0.0, 2.0)
            };
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

struct State {
    n: usize,
    dist: Vec<f64>,
    active: Vec<bool>,
    size: Vec<usize>,
    /// Closest active partner `j > i` for each row, ties to the smaller `j`.
    row_min: Vec<(f64, usize)>,
}

impl State {
    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    fn recompute(&mut self, i: usize) {
        let mut best = NONE;
        for j in i + 1..self.n {
            if self.active[j] {
                let d = self.d(i, j);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        self.row_min[i] = best;
    }

    fn closest_pair(&self) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.n {
            let (d, j) = self.row_min[i];
            if !self.active[i] || j == usize::MAX {
                continue;
            }
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, i, j));
            }
        }
        best
    }

    fn merge(&mut self, i: usize, j: usize) {
        let (si, sj) = (self.size[i] as f64, self.size[j] as f64);
        for k in 0..self.n {
            if !self.active[k] || k == i || k == j {
                continue;
            }
            let v = (si * self.d(i, k) + sj * self.d(j, k)) / (si + sj);
            self.dist[i * self.n + k] = v;
            self.dist[k * self.n + i] = v;
        }
        self.active[j] = false;
        self.size[i] += self.size[j];

        self.recompute(i);
        for k in 0..i {
            if !self.active[k] {
                continue;
            }
            let (best_d, best_j) = self.row_min[k];
            if best_j == i || best_j == j {
                self.recompute(k);
            } else {
                let v = self.d(k, i);
                if v < best_d || (v == best_d && i < best_j) {
                    self.row_min[k] = (v, i);
                }
            }
        }
        for k in i + 1..j {
            if self.active[k] && self.row_min[k].1 == j {
                self.recompute(k);
            }
        }
    }
}

/// Groups row indices. Each group is sorted ascending and groups are ordered
/// by their smallest member. Ties between equally close pairs go to the
/// lexicographically smallest `(i, j)`.
pub fn cluster_rows(x: &DMatrix<f64>, rule: StopRule) -> Result<Vec<Vec<usize>>, GenError> {
    let n = x.nrows();
    if n < 2 {
        return Err(GenError::TooFewRows(n));
    }
    match rule {
        StopRule::Threshold(t) if !t.is_finite() || t < 0.0 => {
            return Err(GenError::InvalidThreshold(format!(
                "distance threshold must be a finite non-negative number, got {t}"
            )))
        }
        StopRule::TargetCount(c) if c == 0 || c > n => {
            return Err(GenError::InvalidThreshold(format!(
                "target count must be in 1..={n}, got {c}"
            )))
        }
        _ => {}
    }
    let mut st = State {
        n,
        dist: cosine_distances(x),
        active: vec![true; n],
        size: vec![1; n],
        row_min: vec![NONE; n],
    };
    for i in 0..n {
        st.recompute(i);
    }
    // slot s always holds row s as its smallest member
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut count = n;
    while let Some((d, i, j)) = st.closest_pair() {
        match rule {
            StopRule::TargetCount(c) if count <= c => break,
            StopRule::Threshold(t) if d > t => break,
            _ => {}
        }
        st.merge(i, j);
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        count -= 1;
    }
    Ok(members
        .into_iter()
        .zip(&st.active)
        .filter(|(_, &a)| a)
        .map(|(mut m, _)| {
            m.sort_unstable();
            m
        })
        .collect())
}

pub fn cluster_passages(
    reduced: &DMatrix<f64>,
    passage_ids: &[String],
    rule: StopRule,
) -> Result<Vec<Cluster>, GenError> {
    assert_eq!(reduced.nrows(), passage_ids.len(), "one id per row");
    Ok(cluster_rows(reduced, rule)?
        .into_iter()
        .enumerate()
        .map(|(cluster_id, rows)| Cluster {
            cluster_id,
            passage_ids: rows.into_iter().map(|r| passage_ids[r].clone()).collect(),
        })
        .collect())
}
