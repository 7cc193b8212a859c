//! Lloyd's k-means with seeded farthest-first initialization.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const DEFAULT_MAX_ITER: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KMeansError {
    #[error("k must be at least 1")]
    ZeroClusters,
    #[error("cannot form {k} clusters from {points} points")]
    TooManyClusters { k: usize, points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// Point id -> cluster index.
    pub members: BTreeMap<String, usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after every assignment step, starting with the initial one.
    pub inertia_history: Vec<f64>,
    pub converged: bool,
}

impl ClusterAssignment {
    pub fn cluster_members(&self, cluster: usize) -> impl Iterator<Item = &str> {
        self.members
            .iter()
            .filter(move |(_, &c)| c == cluster)
            .map(|(id, _)| id.as_str())
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, squared_distance(point, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(points: &[&Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(points.len());
    let mut inertia = 0.0;
    for p in points {
        let (c, d) = nearest(p, centroids);
        labels.push(c);
        inertia += d;
    }
    (labels, inertia)
}

/// Clusters `coords` (iterated in id order) into `k` groups.
///
/// The first centroid is the point picked by `seed`; each further one is
/// the point farthest from all centroids chosen so far. A cluster that
/// empties during iteration is reseeded at the point farthest from its own
/// centroid.
pub fn kmeans(
    coords: &BTreeMap<String, Vec<f64>>,
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment, KMeansError> {
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    let n = coords.len();
    if k > n {
        return Err(KMeansError::TooManyClusters { k, points: n });
    }
    let ids: Vec<&String> = coords.keys().collect();
    let points: Vec<&Vec<f64>> = coords.values().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centroids = vec![points[first].clone()];
    let mut closest: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let mut far = 0;
        for (i, &d) in closest.iter().enumerate() {
            if d > closest[far] {
                far = i;
            }
        }
        centroids.push(points[far].clone());
        for (i, p) in points.iter().enumerate() {
            closest[i] = closest[i].min(squared_distance(p, points[far]));
        }
    }

    let (mut labels, mut inertia) = assign(&points, &centroids);
    let mut history = vec![inertia];
    let mut converged = false;
    for _ in 0..max_iter {
        centroids = update(&points, &labels, &centroids);
        let (next, next_inertia) = assign(&points, &centroids);
        history.push(next_inertia);
        inertia = next_inertia;
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }

    Ok(ClusterAssignment {
        k,
        centroids,
        members: ids
            .into_iter()
            .cloned()
            .zip(labels.iter().copied())
            .collect(),
        inertia,
        inertia_history: history,
        converged,
    })
}

fn update(points: &[&Vec<f64>], labels: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points.first().map(|p| p.len()).unwrap_or(0);
    let k = old.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(labels) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p.iter()) {
            *s += x;
        }
    }
    let mut centroids: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| {
            if n == 0 {
                s
            } else {
                s.into_iter().map(|x| x / n as f64).collect()
            }
        })
        .collect();

    let mut taken = vec![false; points.len()];
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, (p, &l)) in points.iter().zip(labels).enumerate() {
            if taken[i] {
                continue;
            }
            let d = squared_distance(p, &centroids[l]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        match far {
            Some((i, _)) => {
                taken[i] = true;
                centroids[c] = points[i].clone();
            }
            None => centroids[c] = old[c].clone(),
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(raw: &[(&str, &[f64])]) -> BTreeMap<String, Vec<f64>> {
        raw.iter().map(|(id, p)| (id.to_string(), p.to_vec())).collect()
    }

    #[test]
    fn k_equals_n_is_exact() {
        let p = pts(&[("a", &[0.0, 0.0]), ("b", &[1.0, 0.0]), ("c", &[5.0, 5.0])]);
        let res = kmeans(&p, 3, 1, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(res.inertia, 0.0);
        let mut labels: Vec<usize> = res.members.values().copied().collect();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2]);
    }

    #[test]
    fn k_one_is_the_mean() {
        let p = pts(&[("a", &[0.0, 0.0]), ("b", &[2.0, 0.0]), ("c", &[1.0, 3.0])]);
        let res = kmeans(&p, 1, 9, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(res.centroids[0], vec![1.0, 1.0]);
        // 2 + 2 + 4
        assert!((res.inertia - 8.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_k() {
        let p = pts(&[("a", &[0.0])]);
        assert_eq!(kmeans(&p, 0, 0, 10).unwrap_err(), KMeansError::ZeroClusters);
        assert_eq!(
            kmeans(&p, 2, 0, 10).unwrap_err(),
            KMeansError::TooManyClusters { k: 2, points: 1 }
        );
    }

    #[test]
    fn duplicate_points_leave_no_nan() {
        let p = pts(&[("a", &[1.0]), ("b", &[1.0]), ("c", &[1.0])]);
        let res = kmeans(&p, 2, 3, DEFAULT_MAX_ITER).unwrap();
        assert!(res.centroids.iter().flatten().all(|x| x.is_finite()));
        assert_eq!(res.inertia, 0.0);
    }

    proptest! {
        #[test]
        fn inertia_nonincreasing_and_fixed_point(
            raw in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 2), 2..30),
            k in 1usize..6,
            seed in any::<u64>(),
        ) {
            let k = k.min(raw.len());
            let coords: BTreeMap<String, Vec<f64>> =
                raw.into_iter().enumerate().map(|(i, p)| (format!("p{i:03}"), p)).collect();
            let res = kmeans(&coords, k, seed, 200).unwrap();
            for w in res.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9);
            }
            prop_assert_eq!(&res, &kmeans(&coords, k, seed, 200).unwrap());
            if res.converged {
                for (id, &c) in &res.members {
                    let p = &coords[id];
                    let own = squared_distance(p, &res.centroids[c]);
                    for centroid in &res.centroids {
                        prop_assert!(own <= squared_distance(p, centroid) + 1e-9);
                    }
                }
            }
            let recomputed: f64 = res.members.iter()
                .map(|(id, &c)| squared_distance(&coords[id], &res.centroids[c]))
                .sum();
            prop_assert!((recomputed - res.inertia).abs() < 1e-9);
        }
    }
}
