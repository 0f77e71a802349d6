use std::path::Path;

use anyhow::{bail, Context, Result};

use trajopt::experiments::{self, PriorBenchSettings};
use trajopt::prior_db::{self, PlanningScenario};
use trajopt::simulator::{simulate_tracking, tracking_error};
use trajopt::table::{format_g, Table};
use trajopt::Vec2;

use crate::config::RunConfig;
use crate::PlanArgs;

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn build_db(cfg: &RunConfig, count: usize, path: &Path) -> Result<()> {
    if count == 0 {
        bail!("count must be at least 1");
    }
    let ctx = cfg.context();
    let generator = ctx.generator();
    let db = prior_db::build_database_with(&ctx, &generator, count, cfg.budget, cfg.seed, |i, r| {
        println!(
            "record {i}: j={} obstacles={} best_value={}",
            r.scenario.j,
            r.scenario.obstacles.len(),
            format_g(r.best_value)
        );
    })?;
    prior_db::save(&db, path)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn plan(cfg: &RunConfig, args: &PlanArgs, out: &Path) -> Result<()> {
    let db = prior_db::load(&args.db).with_context(|| format!("loading {}", args.db.display()))?;
    let ctx = cfg.context();
    let pair = |p: (f64, f64)| Vec2::new(p.0, p.1);
    let scenario = PlanningScenario {
        sp: pair(args.sp),
        ep: pair(args.ep),
        sv: pair(args.sv),
        ev: pair(args.ev),
        obstacles: args.obstacles.iter().copied().map(pair).collect(),
        j: cfg.j,
    };
    scenario.validate(ctx.field_half_extents)?;
    let outcome = prior_db::plan_online(&scenario, &db, &ctx, &cfg.online(), cfg.seed)?;
    let cps: Vec<String> =
        outcome.result.best_point.points().iter().map(|p| format!("{},{}", format_g(p.x), format_g(p.y))).collect();
    println!("control_points: {}", cps.join(";"));
    println!("traversal_time: {}", format_g(outcome.trajectory.profile.total_time));
    println!("objective: {}", format_g(outcome.result.best_value));
    println!("first_evaluation: {}", format_g(outcome.result.history[0].1));
    println!("evaluations_used: {}", outcome.result.evaluations_used);
    println!(
        "neighbors: {}",
        outcome.neighbors.iter().map(|n| db.records[*n].id.to_string()).collect::<Vec<_>>().join(",")
    );
    if args.export {
        let t = &outcome.trajectory;
        let mut poly = Table::new(&["s", "x", "y", "kappa"]);
        for p in &t.points {
            poly.push_numbers(&[p.arc_s, p.position.x, p.position.y, p.kappa]);
        }
        write(&out.join("plan_polyline.csv"), &poly.to_csv())?;
        let mut profile = Table::new(&["s", "v", "t"]);
        for (i, (v, time)) in t.profile.velocities.iter().zip(&t.profile.times).enumerate() {
            profile.push_numbers(&[t.profile.arc_at(i), *v, *time]);
        }
        write(&out.join("plan_profile.csv"), &profile.to_csv())?;
        let trace = simulate_tracking(t, &ctx.limits, &cfg.tracker(), &cfg.sim());
        println!("tracking_error: {}", format_g(tracking_error(&trace)));
        write(&out.join("plan_trace.csv"), &trace.to_csv())?;
    }
    Ok(())
}

pub fn bench_prior(cfg: &RunConfig, db_path: &Path, holdout: usize, out: &Path) -> Result<()> {
    let db = prior_db::load(db_path).with_context(|| format!("loading {}", db_path.display()))?;
    let settings = PriorBenchSettings {
        holdout,
        budget: cfg.budget,
        reference_budget: cfg.reference_budget,
        online: cfg.online(),
        j: cfg.j,
        ..Default::default()
    };
    let report = experiments::bench_prior(&cfg.context(), &db, &settings, cfg.seed, |i, c| {
        println!("scenario {i}: cold={} warm={}", c.cold_iterations, c.warm_iterations);
    })?;
    println!(
        "median iterations: cold={} warm={} ratio={}",
        format_g(report.cold_median),
        format_g(report.warm_median),
        format_g(report.ratio())
    );
    write(&out.join("bench_prior_curves.csv"), &report.curves_table().to_csv())?;
    write(&out.join("bench_prior_summary.csv"), &report.summary_table().to_csv())
}

pub fn sweep(cfg: &RunConfig, scenarios: usize, out: &Path) -> Result<()> {
    let report = experiments::sweep(&cfg.context(), scenarios, cfg.budget, cfg.j, cfg.seed);
    for c in &report.cells {
        println!(
            "{} + {}: mean_time={} mean_iterations={} mean_iterations_to_overall={}",
            c.acquisition.name(),
            c.kernel.name(),
            format_g(c.mean_time),
            format_g(c.mean_iterations),
            format_g(c.mean_iterations_to_overall)
        );
    }
    write(&out.join("sweep.csv"), &report.table().to_csv())
}

pub fn density(cfg: &RunConfig, combos: usize, out: &Path) -> Result<()> {
    let report = experiments::density(&cfg.context(), combos, cfg.budget, cfg.seed);
    println!(
        "clearance > 0: {}  clearance > -1 cm: {}",
        format_g(report.fraction_clear(0.0)),
        format_g(report.fraction_clear(-1.0))
    );
    write(&out.join("density_points.csv"), &report.points_table().to_csv())?;
    write(&out.join("density_obstacles.csv"), &report.obstacles_table().to_csv())
}

pub fn contour(cfg: &RunConfig, grid: usize, out: &Path) -> Result<()> {
    let report = experiments::contour(&cfg.context(), &experiments::contour_scenario(), grid, cfg.budget, cfg.seed);
    let (x, y, v) = report.grid_min();
    println!("grid minimum: {} at ({}, {})", format_g(v), format_g(x), format_g(y));
    println!(
        "bo choice: {} at ({}, {})",
        format_g(report.bo_value),
        format_g(report.bo_point.x),
        format_g(report.bo_point.y)
    );
    write(&out.join("contour.csv"), &report.table().to_csv())
}
