//! Database queries against exhaustive scans and storage round trips.

use rand::Rng;

use trajopt::bayesopt::{ControlPointSet, GpHyperparams, KernelKind};
use trajopt::prior_db::{
    build_database, knn_query, load, plan_online, save, Database, FeatureVector, OnlineSettings, PlanningContext,
    PlanningScenario, PriorRecord, RecordMeta, FEATURE_DIM,
};
use trajopt::rng;
use trajopt::Vec2;

fn random_record(id: u64, r: &mut rng::StreamRng) -> PriorRecord {
    let j = r.random_range(1..=2usize);
    let point = |r: &mut rng::StreamRng| Vec2::new(r.random_range(-1000.0..1000.0), r.random_range(-1000.0..1000.0));
    let scenario = PlanningScenario {
        sp: point(r),
        ep: point(r),
        sv: Vec2::new(r.random_range(-100.0..100.0), r.random_range(-100.0..100.0)),
        ev: Vec2::new(r.random_range(-100.0..100.0), r.random_range(-100.0..100.0)),
        obstacles: (0..r.random_range(0..=5)).map(|_| point(r)).collect(),
        j,
    };
    let features = FeatureVector((0..FEATURE_DIM).map(|_| (r.random_range(0..8) as f64) * 0.25).collect());
    let n = r.random_range(1..12usize);
    let history_x: Vec<ControlPointSet> =
        (0..n).map(|_| ControlPointSet((0..2 * j).map(|_| r.random_range(-1000.0..1000.0)).collect())).collect();
    let history_y: Vec<f64> = (0..n).map(|_| r.random_range(1.0..110.0) / 3.0).collect();
    let best = (0..n).min_by(|a, b| history_y[*a].total_cmp(&history_y[*b])).unwrap();
    PriorRecord {
        id,
        scenario,
        features,
        best_point: history_x[best].clone(),
        best_value: history_y[best],
        hyper: GpHyperparams {
            mean: r.random_range(1.0..10.0),
            amplitude: r.random::<f64>() + 1e-3,
            length_scales: (0..2 * j).map(|_| r.random_range(1.0..2000.0)).collect(),
            noise: r.random::<f64>() * 1e-2,
            kernel: KernelKind::ALL[r.random_range(0..3)],
        },
        history_x,
        history_y,
        meta: RecordMeta { seed: r.random(), budget: n },
    }
}

fn random_db(count: usize, seed: u64) -> Database {
    let mut r = rng::stream(seed, "db", 0);
    let mut db = Database::new(Vec2::new(1000.0, 1000.0));
    db.records = (0..count as u64).map(|id| random_record(id, &mut r)).collect();
    db
}

#[test]
fn knn_matches_exhaustive_scan() {
    // Features on a coarse lattice, so equal distances are common.
    let db = random_db(500, 3);
    let mut r = rng::stream(3, "queries", 0);
    for q in 0..20 {
        let query = FeatureVector((0..FEATURE_DIM).map(|_| (r.random_range(0..8) as f64) * 0.25).collect());
        let mut brute: Vec<(f64, usize)> =
            db.records.iter().enumerate().map(|(i, rec)| (rec.features.l1_distance(&query), i)).collect();
        brute.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for k in [1, 2, 6, 37, 499, 500, 600] {
            let got: Vec<(f64, usize)> = knn_query(&db, &query, k).unwrap().iter().map(|n| (n.distance, n.index)).collect();
            assert_eq!(got, brute[..k.min(500)].to_vec(), "query {q} k {k}");
        }
    }
}

#[test]
fn floats_survive_round_trip() {
    let db = random_db(200, 11);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("db.jsonl");
    save(&db, &path).unwrap();
    let back = load(&path).unwrap();
    assert_eq!(back, db);
    assert_eq!(back.to_jsonl(), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn stored_best_replays_exactly() {
    let ctx = PlanningContext::new(Vec2::new(1000.0, 1000.0));
    let db = build_database(&ctx, &ctx.generator(), 4, 12, 5).unwrap();
    for rec in &db.records {
        let again = ctx.objective(&rec.scenario).evaluate(rec.best_point.as_slice());
        assert!((again - rec.best_value).abs() <= 1e-9, "record {}: {again} vs {}", rec.id, rec.best_value);
    }
}

#[test]
fn planning_a_stored_scenario_starts_from_its_best() {
    let ctx = PlanningContext::new(Vec2::new(1000.0, 1000.0));
    let db = build_database(&ctx, &ctx.generator().with_j(1), 6, 15, 8).unwrap();
    let rec = &db.records[2];
    let settings = OnlineSettings { k: 1, ..Default::default() };
    let out = plan_online(&rec.scenario, &db, &ctx, &settings, 1).unwrap();
    assert!(out.result.evaluations_used <= settings.budget);
    assert_eq!(out.neighbors, vec![2]);
    assert!((out.result.history[0].1 - rec.best_value).abs() < 1e-9 * rec.best_value.max(1.0));
    assert!(out.result.best_value <= rec.best_value);
}
