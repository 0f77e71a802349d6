//! Gaussian-process posterior and likelihood against dense nalgebra solves.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::f64::consts::PI;

use trajopt::bayesopt::{gp_fit, ControlPointSet, GpHyperparams, KernelKind};
use trajopt::rng;

fn correlation(kind: KernelKind, a: &[f64], b: &[f64], lengths: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).zip(lengths).map(|((x, y), l)| ((x - y) / l).powi(2)).sum();
    let r = d2.sqrt();
    match kind {
        KernelKind::Matern52Ard => (1.0 + 5f64.sqrt() * r + 5.0 * d2 / 3.0) * (-(5f64.sqrt()) * r).exp(),
        KernelKind::Matern32Ard => (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp(),
        KernelKind::SquaredExpArd => (-0.5 * d2).exp(),
    }
}

struct Instance {
    xs: Vec<ControlPointSet>,
    ys: Vec<f64>,
    hyper: GpHyperparams,
    tests: Vec<ControlPointSet>,
}

fn instance(i: u64) -> Instance {
    let mut r = rng::stream(2024, "gp-oracle", i);
    let dim = 2 * r.random_range(1..=2usize);
    let n = r.random_range(1..=20usize);
    let point = |r: &mut rng::StreamRng| ControlPointSet((0..dim).map(|_| r.random_range(-1000.0..1000.0)).collect());
    let xs: Vec<ControlPointSet> = (0..n).map(|_| point(&mut r)).collect();
    let ys: Vec<f64> = (0..n).map(|_| r.random_range(1.0..8.0)).collect();
    let amplitude = r.random_range(0.1..3.0);
    let hyper = GpHyperparams {
        mean: r.random_range(2.0..6.0),
        amplitude,
        length_scales: (0..dim).map(|_| r.random_range(50.0..1500.0)).collect(),
        noise: amplitude * r.random_range(1e-3..0.3),
        kernel: KernelKind::ALL[(i % 3) as usize],
    };
    let mut tests: Vec<ControlPointSet> = (0..5).map(|_| point(&mut r)).collect();
    tests.push(xs[0].clone());
    Instance { xs, ys, hyper, tests }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn posterior_and_likelihood_match_dense_solves() {
    for i in 0..100 {
        let inst = instance(i);
        let model = gp_fit(&inst.xs, &inst.ys, &inst.hyper).unwrap();
        let h = &inst.hyper;
        let n = inst.xs.len();
        let sv = h.amplitude * h.amplitude;
        let diag = h.noise * h.noise + model.jitter();
        let k = DMatrix::from_fn(n, n, |a, b| {
            sv * correlation(h.kernel, &inst.xs[a].0, &inst.xs[b].0, &h.length_scales) + if a == b { diag } else { 0.0 }
        });
        let resid = DVector::from_iterator(n, inst.ys.iter().map(|y| y - h.mean));
        let lu = k.clone().lu();
        let alpha = lu.solve(&resid).unwrap();

        let lml = -0.5 * resid.dot(&alpha) - 0.5 * lu.determinant().ln() - 0.5 * n as f64 * (2.0 * PI).ln();
        assert!(close(model.log_marginal_likelihood(), lml, 1e-8), "instance {i}: {} vs {lml}", model.log_marginal_likelihood());

        for t in &inst.tests {
            let ks = DVector::from_iterator(n, inst.xs.iter().map(|x| sv * correlation(h.kernel, &t.0, &x.0, &h.length_scales)));
            let mean = h.mean + ks.dot(&alpha);
            let var = (sv - ks.dot(&lu.solve(&ks).unwrap())).max(0.0);
            let (m, s) = model.predict(t);
            assert!(close(m, mean, 1e-8), "instance {i}: mean {m} vs {mean}");
            assert!(close(s * s, var, 1e-8), "instance {i}: variance {} vs {var}", s * s);
        }
    }
}
