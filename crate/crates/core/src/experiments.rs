//! Benchmark harnesses: prior reuse against cold starts, the kernel ×
//! acquisition sweep, the particle-swarm baseline, obstacle-avoidance density
//! runs and the single-control-point contour scan.
//!
//! Every harness is deterministic under its seed and returns plain report
//! structs that render to delimited text.

use crate::bayesopt::{
    bayesopt_minimize, pso_minimize, AcquisitionKind, BoSettings, Initialization, KernelKind, OptimizationResult,
    PsoSettings,
};
use crate::error::Result;
use crate::geometry::Vec2;
use crate::prior_db::{prior_for, Database, OnlineSettings, PlanningContext, PlanningScenario, ScenarioGenerator};
use crate::rng;
use crate::simulator;
use crate::table::{format_g, Table};

/// Median of `values` (mean of the two middle values for even counts).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Held-out scenarios for benchmarks, drawn from their own sub-stream.
pub fn holdout_scenarios(generator: &ScenarioGenerator, count: usize, seed: u64, name: &str) -> Vec<PlanningScenario> {
    (0..count).map(|i| generator.generate(&mut rng::stream(seed, name, i as u64))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorBenchSettings {
    pub holdout: usize,
    /// Evaluations per warm and per cold run.
    pub budget: usize,
    /// Budget of the cold run whose best value is the reference.
    pub reference_budget: usize,
    /// Relative gap to the reference counted as converged.
    pub tolerance: f64,
    pub online: OnlineSettings,
    pub j: usize,
}

impl Default for PriorBenchSettings {
    fn default() -> Self {
        PriorBenchSettings {
            holdout: 20,
            budget: 60,
            reference_budget: 200,
            tolerance: 0.05,
            online: OnlineSettings::default(),
            j: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorBenchCase {
    pub scenario: PlanningScenario,
    pub reference: f64,
    pub cold_curve: Vec<f64>,
    pub warm_curve: Vec<f64>,
    /// Evaluations until the incumbent is within tolerance of the
    /// reference; `budget + 1` when never reached.
    pub cold_iterations: usize,
    pub warm_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorBenchReport {
    pub cases: Vec<PriorBenchCase>,
    pub budget: usize,
    pub cold_median: f64,
    pub warm_median: f64,
}

impl PriorBenchReport {
    /// Warm median over cold median.
    pub fn ratio(&self) -> f64 {
        self.warm_median / self.cold_median
    }

    pub fn curves_table(&self) -> Table {
        let mut t = Table::new(&["iteration", "cold_best", "warm_best", "scenario_id"]);
        for (id, c) in self.cases.iter().enumerate() {
            for it in 0..self.budget {
                t.push(vec![
                    (it + 1).to_string(),
                    format_g(c.cold_curve[it]),
                    format_g(c.warm_curve[it]),
                    id.to_string(),
                ]);
            }
        }
        t
    }

    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["scenario_id", "reference", "cold_iterations", "warm_iterations"]);
        for (id, c) in self.cases.iter().enumerate() {
            t.push(vec![
                id.to_string(),
                format_g(c.reference),
                c.cold_iterations.to_string(),
                c.warm_iterations.to_string(),
            ]);
        }
        t.push(vec!["median".into(), String::new(), format_g(self.cold_median), format_g(self.warm_median)]);
        t.push(vec!["ratio".into(), String::new(), String::new(), format_g(self.ratio())]);
        t
    }
}

fn iterations_to(result_curve: &[f64], threshold: f64, budget: usize) -> usize {
    result_curve.iter().take(budget).position(|b| *b <= threshold).map_or(budget + 1, |i| i + 1)
}

/// Warm (prior reuse) against cold (Latin hypercube) optimisation on
/// held-out scenarios. The cold curve is the prefix of the reference run,
/// which is exactly what a cold run with the shorter budget produces.
pub fn bench_prior(
    ctx: &PlanningContext,
    db: &Database,
    settings: &PriorBenchSettings,
    seed: u64,
    mut progress: impl FnMut(usize, &PriorBenchCase),
) -> Result<PriorBenchReport> {
    let generator = ScenarioGenerator::new(db.field_half_extents, ctx.limits.v_max).with_j(settings.j);
    let scenarios = holdout_scenarios(&generator, settings.holdout, seed, "holdout");
    let online = OnlineSettings { budget: settings.budget, ..settings.online };
    let mut cases = Vec::with_capacity(scenarios.len());
    for (i, scenario) in scenarios.into_iter().enumerate() {
        let run_seed = rng::derive_seed(seed, "bench-run", i as u64);
        let objective = ctx.objective(&scenario);
        let bounds = ctx.bounds(scenario.j);
        let cold = bayesopt_minimize(
            &objective,
            &bounds,
            settings.reference_budget.max(settings.budget),
            &Initialization::default(),
            &ctx.bo,
            run_seed,
        );
        let (init, _) = prior_for(db, &scenario, ctx, &online)?;
        let warm = bayesopt_minimize(&objective, &bounds, settings.budget, &Initialization::Prior(init), &ctx.bo, run_seed);
        let reference = cold.best_value;
        let threshold = reference * (1.0 + settings.tolerance);
        let cold_curve: Vec<f64> = cold.incumbent_curve().into_iter().take(settings.budget).collect();
        let warm_curve = warm.incumbent_curve();
        let case = PriorBenchCase {
            cold_iterations: iterations_to(&cold_curve, threshold, settings.budget),
            warm_iterations: iterations_to(&warm_curve, threshold, settings.budget),
            scenario,
            reference,
            cold_curve,
            warm_curve,
        };
        progress(i, &case);
        cases.push(case);
    }
    let cold: Vec<f64> = cases.iter().map(|c| c.cold_iterations as f64).collect();
    let warm: Vec<f64> = cases.iter().map(|c| c.warm_iterations as f64).collect();
    Ok(PriorBenchReport { budget: settings.budget, cold_median: median(&cold), warm_median: median(&warm), cases })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub kernel: KernelKind,
    pub acquisition: AcquisitionKind,
    pub mean_time: f64,
    /// Mean evaluations until the run is within tolerance of its own final
    /// best value.
    pub mean_iterations: f64,
    /// Mean evaluations until the run is within tolerance of the best value
    /// any combination found on the scenario (`budget` when never reached).
    pub mean_iterations_to_overall: f64,
    pub best_values: Vec<f64>,
    pub iterations: Vec<usize>,
    pub iterations_to_overall: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    pub budget: usize,
}

impl SweepReport {
    pub fn cell(&self, kernel: KernelKind, acquisition: AcquisitionKind) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.kernel == kernel && c.acquisition == acquisition)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["kernel", "acquisition", "mean_time", "mean_iterations", "mean_iterations_to_overall"]);
        for c in &self.cells {
            t.push(vec![
                c.kernel.name().into(),
                c.acquisition.name().into(),
                format_g(c.mean_time),
                format_g(c.mean_iterations),
                format_g(c.mean_iterations_to_overall),
            ]);
        }
        t
    }
}

/// Relative gap to the per-scenario best value counted as converged in the
/// sweep.
pub const SWEEP_CONVERGENCE_TOLERANCE: f64 = 0.01;

/// Runs every kernel × acquisition combination on the same scenarios and
/// seeds. A run has converged at the first evaluation whose incumbent is
/// within 1% of its own final best value. The report also carries the
/// evaluations needed to come within 1% of the best value any combination
/// found on that scenario.
pub fn sweep(ctx: &PlanningContext, scenarios: usize, budget: usize, j: usize, seed: u64) -> SweepReport {
    let generator = ctx.generator().with_j(j);
    let scenarios = holdout_scenarios(&generator, scenarios, seed, "sweep");
    let combos: Vec<(KernelKind, AcquisitionKind)> = KernelKind::ALL
        .into_iter()
        .flat_map(|k| AcquisitionKind::ALL.into_iter().map(move |a| (k, a)))
        .collect();
    // results[scenario][combo]
    let results: Vec<Vec<OptimizationResult>> = scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let objective = ctx.objective(s);
            let bounds = ctx.bounds(s.j);
            let run_seed = rng::derive_seed(seed, "sweep-run", i as u64);
            combos
                .iter()
                .map(|&(kernel, acquisition)| {
                    let bo = BoSettings { kernel, acquisition, ..ctx.bo.clone() };
                    bayesopt_minimize(&objective, &bounds, budget, &Initialization::default(), &bo, run_seed)
                })
                .collect()
        })
        .collect();
    let cells = combos
        .iter()
        .enumerate()
        .map(|(c, &(kernel, acquisition))| {
            let mut best_values = Vec::new();
            let mut iterations = Vec::new();
            let mut iterations_to_overall = Vec::new();
            for per_scenario in &results {
                let overall = per_scenario.iter().map(|r| r.best_value).fold(f64::INFINITY, f64::min);
                let r = &per_scenario[c];
                best_values.push(r.best_value);
                let own = r.best_value * (1.0 + SWEEP_CONVERGENCE_TOLERANCE);
                iterations.push(r.evaluations_to_reach(own).unwrap_or(budget));
                let threshold = overall * (1.0 + SWEEP_CONVERGENCE_TOLERANCE);
                iterations_to_overall.push(r.evaluations_to_reach(threshold).unwrap_or(budget));
            }
            let as_mean = |v: &[usize]| mean(&v.iter().map(|i| *i as f64).collect::<Vec<_>>());
            SweepCell {
                kernel,
                acquisition,
                mean_time: mean(&best_values),
                mean_iterations: as_mean(&iterations),
                mean_iterations_to_overall: as_mean(&iterations_to_overall),
                best_values,
                iterations,
                iterations_to_overall,
            }
        })
        .collect();
    SweepReport { cells, budget }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoComparison {
    pub bo_values: Vec<f64>,
    pub pso_values: Vec<f64>,
    pub bo_evaluations: usize,
    pub pso_evaluations: usize,
}

impl PsoComparison {
    pub fn bo_mean(&self) -> f64 {
        mean(&self.bo_values)
    }

    pub fn pso_mean(&self) -> f64 {
        mean(&self.pso_values)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["scenario_id", "bo_best", "pso_best", "bo_evaluations", "pso_evaluations"]);
        for (i, (b, p)) in self.bo_values.iter().zip(&self.pso_values).enumerate() {
            t.push(vec![
                i.to_string(),
                format_g(*b),
                format_g(*p),
                self.bo_evaluations.to_string(),
                self.pso_evaluations.to_string(),
            ]);
        }
        t
    }
}

/// Cold BO against the particle-swarm baseline on the same scenarios.
pub fn pso_comparison(
    ctx: &PlanningContext,
    scenarios: usize,
    bo_budget: usize,
    pso: &PsoSettings,
    j: usize,
    seed: u64,
) -> PsoComparison {
    let generator = ctx.generator().with_j(j);
    let mut bo_values = Vec::new();
    let mut pso_values = Vec::new();
    for (i, s) in holdout_scenarios(&generator, scenarios, seed, "pso-bench").iter().enumerate() {
        let objective = ctx.objective(s);
        let bounds = ctx.bounds(s.j);
        let run_seed = rng::derive_seed(seed, "pso-bench-run", i as u64);
        bo_values.push(bayesopt_minimize(&objective, &bounds, bo_budget, &Initialization::default(), &ctx.bo, run_seed).best_value);
        pso_values.push(pso_minimize(&objective, &bounds, pso, run_seed).best_value);
    }
    PsoComparison { bo_values, pso_values, bo_evaluations: bo_budget, pso_evaluations: pso.particles * pso.iterations }
}

/// Obstacles used by the density experiment, cm.
pub fn density_obstacles() -> Vec<Vec2> {
    vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(-250.0, 200.0),
        Vec2::new(250.0, -200.0),
        Vec2::new(200.0, 300.0),
        Vec2::new(-300.0, -250.0),
    ]
}

/// Samples per trajectory in the density clearance check.
pub const DENSE_CLEARANCE_SAMPLES: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub scenario: PlanningScenario,
    pub control_point: Vec2,
    pub best_value: f64,
    /// Minimum clearance along the whole trajectory, cm.
    pub clearance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub obstacles: Vec<Vec2>,
    pub rows: Vec<DensityRow>,
}

impl DensityReport {
    pub fn fraction_clear(&self, margin: f64) -> f64 {
        self.rows.iter().filter(|r| r.clearance > margin).count() as f64 / self.rows.len() as f64
    }

    pub fn points_table(&self) -> Table {
        let mut t = Table::new(&["sp_x", "sp_y", "ep_x", "ep_y", "cp_x", "cp_y", "best_value", "clearance"]);
        for r in &self.rows {
            t.push_numbers(&[
                r.scenario.sp.x,
                r.scenario.sp.y,
                r.scenario.ep.x,
                r.scenario.ep.y,
                r.control_point.x,
                r.control_point.y,
                r.best_value,
                r.clearance,
            ]);
        }
        t
    }

    pub fn obstacles_table(&self) -> Table {
        let mut t = Table::new(&["x", "y"]);
        for o in &self.obstacles {
            t.push_numbers(&[o.x, o.y]);
        }
        t
    }
}

/// Optimises a single control point for `combos` random start/end pairs
/// around a fixed obstacle layout.
pub fn density(ctx: &PlanningContext, combos: usize, budget: usize, seed: u64) -> DensityReport {
    let obstacles = density_obstacles();
    let generator = ctx.generator().with_j(1).with_fixed_obstacles(obstacles.clone());
    let rows = holdout_scenarios(&generator, combos, seed, "density")
        .into_iter()
        .enumerate()
        .map(|(i, scenario)| {
            let objective = ctx.objective(&scenario);
            let run_seed = rng::derive_seed(seed, "density-run", i as u64);
            let r = bayesopt_minimize(&objective, &ctx.bounds(1), budget, &Initialization::default(), &ctx.bo, run_seed);
            let clearance = objective
                .trajectory(r.best_point.as_slice())
                .map(|t| simulator::clearance(&t.spline, &obstacles, DENSE_CLEARANCE_SAMPLES))
                .unwrap_or(f64::NEG_INFINITY);
            let control_point = r.best_point.points()[0];
            DensityRow { scenario, control_point, best_value: r.best_value, clearance }
        })
        .collect();
    DensityReport { obstacles, rows }
}

/// Scenario scanned by the contour experiment.
pub fn contour_scenario() -> PlanningScenario {
    PlanningScenario {
        sp: Vec2::new(-500.0, -300.0),
        ep: Vec2::new(500.0, 250.0),
        sv: Vec2::new(60.0, 0.0),
        ev: Vec2::ZERO,
        obstacles: vec![Vec2::new(0.0, 0.0), Vec2::new(-200.0, -150.0)],
        j: 1,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourReport {
    pub scenario: PlanningScenario,
    /// `(x, y, value)` for every lattice node, row-major in y.
    pub grid: Vec<(f64, f64, f64)>,
    pub grid_size: usize,
    pub bo_point: Vec2,
    pub bo_value: f64,
}

impl ContourReport {
    pub fn grid_min(&self) -> (f64, f64, f64) {
        let mut best = self.grid[0];
        for g in &self.grid {
            if g.2 < best.2 {
                best = *g;
            }
        }
        best
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["x", "y", "time", "bo_choice"]);
        for (x, y, v) in &self.grid {
            t.push(vec![format_g(*x), format_g(*y), format_g(*v), "0".into()]);
        }
        t.push(vec![format_g(self.bo_point.x), format_g(self.bo_point.y), format_g(self.bo_value), "1".into()]);
        t
    }
}

/// Evaluates the objective on a `grid × grid` lattice spanning the field and
/// runs BO on the same scenario.
pub fn contour(ctx: &PlanningContext, scenario: &PlanningScenario, grid: usize, budget: usize, seed: u64) -> ContourReport {
    let objective = ctx.objective(scenario);
    let h = ctx.field_half_extents;
    let n = grid.max(2);
    let at = |i: usize, half: f64| -half + 2.0 * half * i as f64 / (n - 1) as f64;
    let mut cells = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = (at(ix, h.x), at(iy, h.y));
            cells.push((x, y, objective.evaluate(&[x, y])));
        }
    }
    let r = bayesopt_minimize(
        &objective,
        &ctx.bounds(1),
        budget,
        &Initialization::default(),
        &ctx.bo,
        rng::derive_seed(seed, "contour-run", 0),
    );
    ContourReport {
        scenario: scenario.clone(),
        grid: cells,
        grid_size: n,
        bo_point: r.best_point.points()[0],
        bo_value: r.best_value,
    }
}
