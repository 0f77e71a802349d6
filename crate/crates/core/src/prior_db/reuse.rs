use serde::{Deserialize, Serialize};

use crate::bayesopt::{
    bayesopt_minimize, cold_hyper, BoSettings, Bounds, ControlPointSet, GpHyperparams, Initialization, Objective,
    OptimizationResult, Trajectory,
};
use crate::error::{PlannerError, Result};
use crate::geometry::Vec2;
use crate::kinodynamics::KinodynamicLimits;
use crate::rng;

use super::database::{knn_query_where, Database, Neighbor, PriorRecord, RecordMeta};
use super::scenario::{PlanningScenario, ScenarioGenerator};

pub const DEFAULT_K: usize = 6;
pub const DEFAULT_MAX_SEED_POINTS: usize = 10;
pub const DEFAULT_ONLINE_BUDGET: usize = 15;

/// Averaged neighbour hyperparameters and the warm initial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorInit {
    pub hyper: GpHyperparams,
    pub seed_points: Vec<ControlPointSet>,
}

/// Field size, robot limits and optimiser settings shared by every
/// optimisation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanningContext {
    pub field_half_extents: Vec2,
    pub limits: KinodynamicLimits,
    pub bo: BoSettings,
}

impl PlanningContext {
    pub fn new(field_half_extents: Vec2) -> Self {
        PlanningContext { field_half_extents, limits: KinodynamicLimits::default(), bo: BoSettings::default() }
    }

    pub fn objective(&self, scenario: &PlanningScenario) -> Objective {
        Objective::new(scenario.clone(), self.limits, self.field_half_extents)
    }

    pub fn bounds(&self, j: usize) -> Bounds {
        Bounds::for_control_points(j, self.field_half_extents)
    }

    pub fn generator(&self) -> ScenarioGenerator {
        ScenarioGenerator::new(self.field_half_extents, self.limits.v_max)
    }
}

/// Averages the neighbours' hyperparameters (arithmetic mean of mean,
/// amplitude and noise, geometric mean of length scales) and collects seed
/// points: every neighbour's best point first, then the neighbours' next-best
/// history points in round-robin order until `max_seed_points` is reached.
/// Points are clipped to `bounds` and exact duplicates dropped.
pub fn average_priors(records: &[&PriorRecord], max_seed_points: usize, bounds: &Bounds) -> Result<PriorInit> {
    average_priors_mapped(records, max_seed_points, bounds, |_, p| p.clone())
}

/// [`average_priors`] with every stored point passed through `map` before
/// clipping.
pub fn average_priors_mapped(
    records: &[&PriorRecord],
    max_seed_points: usize,
    bounds: &Bounds,
    map: impl Fn(&PriorRecord, &ControlPointSet) -> ControlPointSet,
) -> Result<PriorInit> {
    let first = records.first().ok_or(PlannerError::EmptyDatabase)?;
    let dim = first.best_point.dim();
    if records.iter().any(|r| r.best_point.dim() != dim || r.hyper.dim() != dim) {
        return Err(PlannerError::invalid("neighbours have different control-point counts"));
    }
    if bounds.dim() != dim {
        return Err(PlannerError::invalid(format!("bounds of dimension {} for {dim}-dimensional priors", bounds.dim())));
    }
    let n = records.len() as f64;
    let mean_of = |f: &dyn Fn(&PriorRecord) -> f64| records.iter().map(|r| f(r)).sum::<f64>() / n;
    let hyper = GpHyperparams {
        mean: mean_of(&|r| r.hyper.mean),
        amplitude: mean_of(&|r| r.hyper.amplitude),
        length_scales: (0..dim)
            .map(|i| records.iter().map(|r| r.hyper.length_scales[i]).product::<f64>().powf(1.0 / n))
            .collect(),
        noise: mean_of(&|r| r.hyper.noise),
        kernel: first.hyper.kernel,
    };

    let mut seeds: Vec<ControlPointSet> = Vec::new();
    let push = |r: &PriorRecord, p: &ControlPointSet, seeds: &mut Vec<ControlPointSet>| {
        let mut q = map(r, p);
        bounds.clip(&mut q.0);
        if !seeds.contains(&q) {
            seeds.push(q);
        }
    };
    for r in records {
        push(r, &r.best_point, &mut seeds);
    }
    let ranked: Vec<Vec<usize>> = records
        .iter()
        .map(|r| {
            let mut order: Vec<usize> = (0..r.history_y.len()).collect();
            order.sort_by(|&a, &b| r.history_y[a].total_cmp(&r.history_y[b]).then(a.cmp(&b)));
            order
        })
        .collect();
    let longest = ranked.iter().map(Vec::len).max().unwrap_or(0);
    'fill: for rank in 0..longest {
        for (r, order) in records.iter().zip(&ranked) {
            if seeds.len() >= max_seed_points {
                break 'fill;
            }
            if let Some(&i) = order.get(rank) {
                push(r, &r.history_x[i], &mut seeds);
            }
        }
    }
    Ok(PriorInit { hyper, seed_points: seeds })
}

/// Runs a cold optimisation for `count` generated scenarios.
pub fn build_database(
    ctx: &PlanningContext,
    generator: &ScenarioGenerator,
    count: usize,
    budget: usize,
    seed: u64,
) -> Result<Database> {
    build_database_with(ctx, generator, count, budget, seed, |_, _| {})
}

/// [`build_database`] with a callback after each record.
pub fn build_database_with(
    ctx: &PlanningContext,
    generator: &ScenarioGenerator,
    count: usize,
    budget: usize,
    seed: u64,
    mut progress: impl FnMut(usize, &PriorRecord),
) -> Result<Database> {
    if count == 0 || budget == 0 {
        return Err(PlannerError::invalid("count and budget must be positive"));
    }
    let mut db = Database::new(ctx.field_half_extents);
    for i in 0..count {
        let scenario = generator.generate(&mut rng::stream(seed, "scenario", i as u64));
        let run_seed = rng::derive_seed(seed, "build", i as u64);
        let bounds = ctx.bounds(scenario.j);
        let result = bayesopt_minimize(
            &ctx.objective(&scenario),
            &bounds,
            budget,
            &Initialization::default(),
            &ctx.bo,
            run_seed,
        );
        let hyper = result.hyper.clone().unwrap_or_else(|| {
            let ys: Vec<f64> = result.history.iter().map(|h| h.1).collect();
            cold_hyper(&ys, &bounds, &ctx.bo)
        });
        let features = scenario.features(ctx.field_half_extents, ctx.limits.v_max);
        let record = PriorRecord::from_result(
            i as u64,
            scenario,
            features,
            &result,
            hyper,
            RecordMeta { seed: run_seed, budget },
        );
        progress(i, &record);
        db.records.push(record);
    }
    Ok(db)
}

/// How stored sample locations are carried over to a new scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedTransfer {
    /// Reuse the stored field coordinates unchanged.
    Absolute,
    /// Express stored points in the stored scenario's start-to-end frame
    /// (fraction along the segment, offset across it relative to its length)
    /// and place them at the same frame coordinates in the new scenario.
    ScenarioFrame,
}

/// Maps `p` from the frame of `from` into the frame of `to`.
pub fn transfer_point(p: Vec2, from: &PlanningScenario, to: &PlanningScenario) -> Vec2 {
    let e = from.ep - from.sp;
    let len2 = e.dot(e);
    if len2 == 0.0 {
        return p;
    }
    let d = p - from.sp;
    let along = d.dot(e) / len2;
    let across = e.cross(d) / len2;
    let f = to.ep - to.sp;
    to.sp + f * along + Vec2::new(-f.y, f.x) * across
}

/// Settings of one warm-started online optimisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnlineSettings {
    pub k: usize,
    pub max_seed_points: usize,
    pub budget: usize,
    pub transfer: SeedTransfer,
}

impl Default for OnlineSettings {
    fn default() -> Self {
        OnlineSettings {
            k: DEFAULT_K,
            max_seed_points: DEFAULT_MAX_SEED_POINTS,
            budget: DEFAULT_ONLINE_BUDGET,
            transfer: SeedTransfer::ScenarioFrame,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub trajectory: Trajectory,
    pub result: OptimizationResult,
    /// Database indices of the neighbours used.
    pub neighbors: Vec<usize>,
}

/// The `k` nearest records with the same control-point count as `scenario`.
pub fn neighbors_for<'a>(db: &'a Database, scenario: &PlanningScenario, v_max: f64, k: usize) -> Result<Vec<Neighbor<'a>>> {
    let features = scenario.features(db.field_half_extents, v_max);
    knn_query_where(db, &features, k, |r| r.scenario.j == scenario.j)
}

/// Warm prior for `scenario` from its nearest same-`j` neighbours.
pub fn prior_for(
    db: &Database,
    scenario: &PlanningScenario,
    ctx: &PlanningContext,
    settings: &OnlineSettings,
) -> Result<(PriorInit, Vec<usize>)> {
    let hits = neighbors_for(db, scenario, ctx.limits.v_max, settings.k)?;
    let records: Vec<&PriorRecord> = hits.iter().map(|h| h.record).collect();
    let bounds = ctx.bounds(scenario.j);
    let init = match settings.transfer {
        SeedTransfer::Absolute => average_priors(&records, settings.max_seed_points, &bounds)?,
        SeedTransfer::ScenarioFrame => average_priors_mapped(&records, settings.max_seed_points, &bounds, |r, p| {
            let moved: Vec<Vec2> = p.points().into_iter().map(|q| transfer_point(q, &r.scenario, scenario)).collect();
            ControlPointSet::from_points(&moved)
        })?,
    };
    Ok((init, hits.iter().map(|h| h.index).collect()))
}

/// Optimises `scenario` warm-started from the database and returns the best
/// trajectory found.
pub fn plan_online(
    scenario: &PlanningScenario,
    db: &Database,
    ctx: &PlanningContext,
    settings: &OnlineSettings,
    seed: u64,
) -> Result<PlanOutcome> {
    scenario.validate(ctx.field_half_extents)?;
    if settings.budget == 0 {
        return Err(PlannerError::invalid("budget must be positive"));
    }
    let (init, neighbors) = prior_for(db, scenario, ctx, settings)?;
    let objective = ctx.objective(scenario);
    let result = bayesopt_minimize(
        &objective,
        &ctx.bounds(scenario.j),
        settings.budget,
        &Initialization::Prior(init),
        &ctx.bo,
        seed,
    );
    let trajectory = objective.trajectory(result.best_point.as_slice())?;
    Ok(PlanOutcome { trajectory, result, neighbors })
}
