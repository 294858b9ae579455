//! Seeded k-means++ with Lloyd iterations and best-of-restarts selection.

use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const DEFAULT_RESTARTS: usize = 50;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centers: Array2<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub history: Vec<f64>,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_init(data: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut centers = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&data.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(data.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&data.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(data.row(i), centers.row(c)));
        }
    }
    centers
}

fn assign(data: &Array2<f64>, centers: &Array2<f64>, labels: &mut [usize]) -> (f64, bool) {
    let mut inertia = 0.0;
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let (best, dist) = centers
            .rows()
            .into_iter()
            .enumerate()
            .map(|(c, center)| (c, sq_dist(data.row(i), center)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        if *label != best {
            *label = best;
            changed = true;
        }
        inertia += dist;
    }
    (inertia, changed)
}

fn update_centers(data: &Array2<f64>, labels: &[usize], centers: &mut Array2<f64>) {
    let k = centers.nrows();
    let mut sums = Array2::<f64>::zeros(centers.dim());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        sums.row_mut(l).scaled_add(1.0, &data.row(i));
        counts[l] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        // An empty cluster keeps its previous center.
        if count > 0 {
            centers.row_mut(c).assign(&(&sums.row(c) / count as f64));
        }
    }
}

/// One k-means++ seeding followed by Lloyd iterations until the assignment
/// stops changing or `max_iter` is reached.
pub fn lloyd(data: &Array2<f64>, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let mut centers = plus_plus_init(data, k, rng);
    let mut labels = vec![usize::MAX; data.nrows()];
    let mut history = Vec::new();
    for _ in 0..max_iter.max(1) {
        let (inertia, changed) = assign(data, &centers, &mut labels);
        history.push(inertia);
        if !changed {
            break;
        }
        update_centers(data, &labels, &mut centers);
    }
    KMeansResult {
        labels,
        inertia: *history.last().expect("at least one iteration"),
        centers,
        history,
    }
}

/// Best-inertia result over `restarts` independent runs. Restart `r` draws
/// from ChaCha stream `r` of `seed`, so the result does not depend on
/// thread scheduling.
pub fn kmeans(data: &Array2<f64>, k: usize, restarts: usize, max_iter: usize, seed: u64) -> KMeansResult {
    assert!(k >= 1 && k <= data.nrows(), "k must lie in 1..=n");
    (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            (r, lloyd(data, k, max_iter, &mut rng))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|(ra, a), (rb, b)| a.inertia.total_cmp(&b.inertia).then(ra.cmp(rb)))
        .map(|(_, res)| res)
        .expect("at least one restart")
}
