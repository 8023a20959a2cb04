//! Seeded k-means with k-means++ seeding; restart `r` draws from child
//! stream `r`, so the result does not depend on scheduling.

use nalgebra::DMatrix;

use crate::rng::{PortableRng, RngSpec};

pub const RESTARTS: usize = 10;
pub const MAX_ITER: usize = 300;

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols())
        .map(|k| (points[(i, k)] - centers[(c, k)]).powi(2))
        .sum()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut PortableRng) -> DMatrix<f64> {
    let n = points.nrows();
    let mut centers = DMatrix::zeros(k, points.ncols());
    centers.set_row(0, &points.row(rng.below(n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.uniform() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.below(n)
        };
        centers.set_row(c, &points.row(pick));
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn assign(points: &DMatrix<f64>, centers: &DMatrix<f64>, labels: &mut [usize]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let (best, dist) = (0..centers.nrows())
            .map(|c| (c, sq_dist(points, i, centers, c)))
            .fold(
                (0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
        changed |= *label != best;
        *label = best;
        inertia += dist;
    }
    (changed, inertia)
}

fn update(points: &DMatrix<f64>, labels: &[usize], centers: &mut DMatrix<f64>) {
    let k = centers.nrows();
    let mut sums = DMatrix::zeros(k, points.ncols());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for j in 0..points.ncols() {
            sums[(l, j)] += points[(i, j)];
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            centers.set_row(c, &(sums.row(c) / counts[c] as f64));
        } else {
            // an empty cluster takes the point farthest from its center
            let far = (0..points.nrows())
                .map(|i| (i, sq_dist(points, i, centers, labels[i])))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                .0;
            centers.set_row(c, &points.row(far));
        }
    }
}

fn single_run(points: &DMatrix<f64>, k: usize, rng: &mut PortableRng) -> (Vec<usize>, f64) {
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; points.nrows()];
    let mut inertia = assign(points, &centers, &mut labels).1;
    for _ in 0..MAX_ITER {
        update(points, &labels, &mut centers);
        let (changed, value) = assign(points, &centers, &mut labels);
        inertia = value;
        if !changed {
            break;
        }
    }
    (labels, inertia)
}

/// Rows of `points` are the observations. Returns the labels of the restart
/// with the smallest inertia (earliest restart on ties).
pub fn kmeans(points: &DMatrix<f64>, k: usize, rng: &RngSpec) -> Vec<usize> {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..RESTARTS {
        let run = single_run(points, k, &mut rng.child(r as u64).rng());
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    best.map(|b| b.0).unwrap_or_default()
}
