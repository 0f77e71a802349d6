use rand::seq::SliceRandom;
use rand::Rng;

use super::{Bounds, ControlPointSet};

/// Latin hypercube design: in every dimension each of the `count`
/// equal-width strata holds exactly one sample.
pub fn latin_hypercube<R: Rng + ?Sized>(count: usize, bounds: &Bounds, rng: &mut R) -> Vec<ControlPointSet> {
    let dim = bounds.dim();
    let mut points = vec![vec![0.0; dim]; count];
    let mut strata: Vec<usize> = (0..count).collect();
    for d in 0..dim {
        strata.shuffle(rng);
        let width = bounds.range(d) / count as f64;
        for (p, &s) in points.iter_mut().zip(&strata) {
            let offset: f64 = rng.random();
            p[d] = (bounds.lower[d] + (s as f64 + offset) * width).min(bounds.upper[d]);
        }
    }
    points.into_iter().map(ControlPointSet).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stratum_counts(points: &[ControlPointSet], bounds: &Bounds, d: usize) -> Vec<usize> {
        let n = points.len();
        let mut counts = vec![0; n];
        for p in points {
            let k = (((p.0[d] - bounds.lower[d]) / bounds.range(d)) * n as f64).floor() as usize;
            counts[k.min(n - 1)] += 1;
        }
        counts
    }

    #[test]
    fn four_strata_one_dimension() {
        let b = Bounds::uniform(1, 0.0, 4.0);
        let pts = latin_hypercube(4, &b, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(stratum_counts(&pts, &b, 0), vec![1, 1, 1, 1]);
    }

    #[test]
    fn deterministic_for_seed() {
        let b = Bounds::uniform(3, -1.0, 1.0);
        let a = latin_hypercube(10, &b, &mut ChaCha8Rng::seed_from_u64(5));
        let c = latin_hypercube(10, &b, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, c);
    }

    #[test]
    fn hundred_points_four_dimensions() {
        let b = Bounds::new(vec![-1000.0, 0.0, 5.0, -2.0], vec![1000.0, 1.0, 6.0, 2.0]);
        let pts = latin_hypercube(100, &b, &mut ChaCha8Rng::seed_from_u64(11));
        for d in 0..4 {
            assert!(stratum_counts(&pts, &b, d).iter().all(|&c| c == 1));
        }
    }
}
