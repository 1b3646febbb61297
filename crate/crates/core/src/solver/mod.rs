//! Iterative batched repair of constraint violations.
//!
//! A solve places every object, relaxes the layout into a physically stable
//! state, then runs up to `max_iterations` rounds. Each round picks a small
//! batch of unsatisfied constraints, lets a [`BatchSolver`] move only the
//! objects those constraints involve, and pushes moved objects back inside
//! their rooms. The layout with the highest satisfaction ratio seen is
//! returned (earliest on ties).

mod local;
mod placement;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::constraints::{ratio, ConstraintSet, EvalContext, EvalError};
use crate::scene::SceneLayout;

pub use local::{affected_constraints, candidate_moves, improve_batch, violation, LocalSearch, GRID_RADIUS};
pub use placement::{drop_pass, enforce_bounds, initial_placement, moved_objects, physics_relaxation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Constraints repaired per iteration (k).
    pub batch_size: usize,
    /// Iteration limit (T).
    pub max_iterations: usize,
    pub seed: u64,
    pub moves_per_proposal: usize,
    pub candidate_samples: usize,
    /// Grid spacing for translation moves (m).
    pub translation_step: f64,
    /// Yaw angles (degrees) tried besides the current one.
    pub rotation_steps: Vec<f64>,
    pub relaxation_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            batch_size: 3,
            max_iterations: 5,
            seed: 0,
            moves_per_proposal: 8,
            candidate_samples: 64,
            translation_step: 0.1,
            rotation_steps: vec![0.0, 90.0, 180.0, 270.0],
            relaxation_sweeps: 32,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.batch_size < 1 {
            return Err(SolveError::Config("batch size must be at least 1".into()));
        }
        if !(self.translation_step > 0.0 && self.translation_step.is_finite()) {
            return Err(SolveError::Config("translation step must be positive".into()));
        }
        if self.rotation_steps.iter().any(|r| !r.is_finite()) {
            return Err(SolveError::Config("rotation steps must be finite".into()));
        }
        Ok(())
    }
}

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum SolveError {
    #[error("object `{object}` does not fit in region `{region}`")]
    Placement { object: String, region: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("batch solver failed: {0}")]
    BatchSolver(String),
}

/// Proposes a new layout that repairs a batch of constraints. `batch` holds
/// constraint ids and `movable` the indices (into `cs.objects`) of the only
/// objects the proposal may change; changes to any other object are undone.
pub trait BatchSolver {
    fn propose(
        &mut self,
        layout: &SceneLayout,
        cs: &ConstraintSet,
        batch: &[usize],
        movable: &[usize],
    ) -> Result<SceneLayout, SolveError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    AllSatisfied,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub layout: SceneLayout,
    /// Ids of the constraints violated by `layout`.
    pub unsatisfied: Vec<usize>,
    pub ratio: f64,
    /// Constraint ids repaired in this iteration (empty for the initial layout).
    pub batch: Vec<usize>,
    /// Objects the batch was allowed to move.
    pub batch_objects: Vec<String>,
    /// Objects whose transform changed during the iteration.
    pub moved: Vec<String>,
    /// Objects whose out-of-batch changes were undone.
    pub reverted: Vec<String>,
    /// Best ratio over this and all earlier iterations.
    pub best_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestSolution {
    pub iteration: usize,
    pub ratio: f64,
    pub layout: SceneLayout,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: Vec<IterationRecord>,
    pub best: BestSolution,
    pub terminated: Termination,
    pub constraint_count: usize,
}

/// Record of one past iteration, as seen by [`select_batch`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchHistory {
    pub unsatisfied: Vec<usize>,
    pub batch: Vec<usize>,
}

/// Chooses up to `k` constraint ids from `unsatisfied`, ordered by number of
/// involved objects then id. Constraints left unsatisfied through each of the
/// last two iterations without being picked in either go first.
pub fn select_batch(unsatisfied: &[usize], cs: &ConstraintSet, k: usize, history: &[BatchHistory]) -> Vec<usize> {
    let size = |id: usize| cs.get(id).map_or(usize::MAX, |c| c.involved.len());
    let stale = |id: usize| {
        history.len() >= 2
            && history[history.len() - 2..].iter().all(|h| h.unsatisfied.contains(&id) && !h.batch.contains(&id))
    };
    let mut ids: Vec<usize> = unsatisfied.to_vec();
    ids.sort_by_key(|&id| (!stale(id), size(id), id));
    ids.dedup();
    ids.truncate(k);
    ids
}

/// Solves from scratch with the default local-search batch solver.
pub fn solve(layout: &SceneLayout, cs: &ConstraintSet, cfg: &SolverConfig) -> Result<SolveReport, SolveError> {
    solve_with(layout, cs, cfg, &mut LocalSearch::new(cfg), None)
}

/// Re-solves only the objects whose home region is `region`; every other
/// object keeps its transform exactly.
pub fn solve_region(
    layout: &SceneLayout,
    cs: &ConstraintSet,
    cfg: &SolverConfig,
    region: &str,
) -> Result<SolveReport, SolveError> {
    let movable: BTreeSet<String> = layout.objects.iter().filter(|o| o.region == region).map(|o| o.id.clone()).collect();
    solve_with(layout, cs, cfg, &mut LocalSearch::new(cfg), Some(&movable))
}

/// Full solve loop. With `movable` set, only the named objects are placed and
/// moved, and only constraints involving one of them are repaired.
pub fn solve_with(
    layout: &SceneLayout,
    cs: &ConstraintSet,
    cfg: &SolverConfig,
    batch_solver: &mut dyn BatchSolver,
    movable: Option<&BTreeSet<String>>,
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    let mask: Vec<bool> = cs.objects.iter().map(|o| movable.is_none_or(|m| m.contains(o))).collect();
    let mut ctx = EvalContext::new(layout, cs)?;
    initial_placement(&mut ctx, cs, cfg, &mask)?;
    physics_relaxation(&mut ctx, cs, cfg, &mask);

    let unsatisfied_of = |ctx: &EvalContext| -> Result<(Vec<usize>, f64), SolveError> {
        let verdicts = cs.evaluate_all(ctx)?;
        let ids = cs.constraints.iter().zip(&verdicts).filter(|(_, v)| !**v).map(|(c, _)| c.id).collect();
        Ok((ids, ratio(&verdicts)))
    };
    let (mut unsatisfied, r0) = unsatisfied_of(&ctx)?;
    let mut records = vec![IterationRecord {
        iteration: 0,
        layout: ctx.layout().clone(),
        unsatisfied: unsatisfied.clone(),
        ratio: r0,
        batch: Vec::new(),
        batch_objects: Vec::new(),
        moved: Vec::new(),
        reverted: Vec::new(),
        best_ratio: r0,
    }];
    let mut best = BestSolution { iteration: 0, ratio: r0, layout: ctx.layout().clone() };
    let mut history: Vec<BatchHistory> = Vec::new();
    let mut terminated = Termination::IterationLimit;

    for t in 1..=cfg.max_iterations {
        if unsatisfied.is_empty() {
            terminated = Termination::AllSatisfied;
            break;
        }
        let repairable: Vec<usize> = unsatisfied
            .iter()
            .copied()
            .filter(|&id| cs.get(id).is_some_and(|c| c.involved.iter().any(|&o| mask[o])))
            .collect();
        if repairable.is_empty() {
            break;
        }
        let batch = select_batch(&repairable, cs, cfg.batch_size, &history);
        let objects: BTreeSet<usize> =
            batch.iter().filter_map(|&id| cs.get(id)).flat_map(|c| c.involved.iter().copied()).filter(|&o| mask[o]).collect();
        let objects: Vec<usize> = objects.into_iter().collect();

        let before = ctx.clone();
        let proposed = batch_solver.propose(ctx.layout(), cs, &batch, &objects)?;
        let mut reverted = Vec::new();
        for i in 0..ctx.object_count() {
            let id = &cs.objects[i];
            let Some(t) = proposed.object(id).map(|o| o.transform) else { continue };
            if objects.contains(&i) {
                ctx.set_transform(i, t);
            } else if t != before.transform(i) {
                reverted.push(id.clone());
            }
        }
        let in_batch: Vec<bool> = (0..ctx.object_count()).map(|i| objects.contains(&i)).collect();
        enforce_bounds(&mut ctx, cs, &in_batch);

        let (now, r) = unsatisfied_of(&ctx)?;
        if r > best.ratio {
            best = BestSolution { iteration: t, ratio: r, layout: ctx.layout().clone() };
        }
        history.push(BatchHistory { unsatisfied: unsatisfied.clone(), batch: batch.clone() });
        records.push(IterationRecord {
            iteration: t,
            layout: ctx.layout().clone(),
            unsatisfied: now.clone(),
            ratio: r,
            batch,
            batch_objects: objects.iter().map(|&o| cs.objects[o].clone()).collect(),
            moved: moved_objects(&before, &ctx).into_iter().map(|o| cs.objects[o].clone()).collect(),
            reverted,
            best_ratio: best.ratio,
        });
        unsatisfied = now;
    }
    if unsatisfied.is_empty() {
        terminated = Termination::AllSatisfied;
    }
    Ok(SolveReport { iterations: records, best, terminated, constraint_count: cs.len() })
}

impl SolveReport {
    /// Per-iteration ratios followed by the verdict table of the best layout.
    pub fn to_text(&self, cs: &ConstraintSet) -> Result<String, EvalError> {
        let mut out = String::new();
        for r in &self.iterations {
            let batch = if r.batch.is_empty() {
                "-".to_string()
            } else {
                r.batch.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(",")
            };
            let _ = writeln!(
                out,
                "iteration {} ratio {:.4} unsatisfied {} batch {batch}",
                r.iteration,
                r.ratio,
                r.unsatisfied.len()
            );
        }
        let terminated = match self.terminated {
            Termination::AllSatisfied => "all-satisfied",
            Termination::IterationLimit => "iteration-limit",
        };
        let _ = writeln!(out, "best iteration {} ratio {:.4}", self.best.iteration, self.best.ratio);
        let _ = writeln!(out, "terminated {terminated}");
        out.push('\n');
        let ctx = EvalContext::new(&self.best.layout, cs)?;
        out.push_str(&cs.report(&ctx)?);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::compile;
    use crate::dsl::check;
    use crate::geom::Vec3;
    use crate::scene::{Region, SceneObject};

    fn layout(objects: &[(&str, Vec3)]) -> SceneLayout {
        SceneLayout {
            regions: vec![Region::rectangle("room", 0.0, 0.0, 6.0, 5.0, 3.0).unwrap()],
            objects: objects.iter().map(|(id, d)| SceneObject::new(id, *d, "room")).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn trivial_scene_converges_immediately() {
        let cs = compile(&check("region room; object cube;").unwrap(), 0);
        let r = solve(&layout(&[("cube", Vec3::ONE)]), &cs, &SolverConfig::default()).unwrap();
        assert_eq!(r.terminated, Termination::AllSatisfied);
        assert!(r.iterations.len() <= 2);
        assert_eq!(r.best.ratio, 1.0);
    }

    #[test]
    fn contradiction_hits_the_limit() {
        let cs = compile(&check("region room; object a; assert a.pos.x > 1 && a.pos.x < 0;").unwrap(), 0);
        let r = solve(&layout(&[("a", Vec3::ONE)]), &cs, &SolverConfig::default()).unwrap();
        assert_eq!(r.terminated, Termination::IterationLimit);
        assert_eq!(r.iterations.len(), 6);
        assert!((r.best.ratio - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn best_is_running_max_and_moves_stay_in_batch() {
        let src = "region room; object sofa; object table; object lamp; object tv;
            assert sofa.pos.x < table.pos.x - 1; assert tv.pos.x > table.pos.x + 1;
            assert lamp.pos.y > table.pos.y + 0.3; assert dot(sofa.pos - tv.pos, sofa.pos - tv.pos) > 9;";
        let cs = compile(&check(src).unwrap(), 0);
        let l = layout(&[
            ("sofa", Vec3::new(2.0, 0.8, 0.9)),
            ("table", Vec3::new(1.0, 0.45, 0.6)),
            ("lamp", Vec3::new(0.3, 0.4, 0.3)),
            ("tv", Vec3::new(1.2, 0.7, 0.3)),
        ]);
        for seed in 0..4 {
            let r = solve(&l, &cs, &SolverConfig { seed, ..Default::default() }).unwrap();
            let mut running = 0.0f64;
            for rec in &r.iterations {
                running = running.max(rec.ratio);
                assert_eq!(rec.best_ratio, running);
                assert!(rec.moved.iter().all(|m| rec.batch_objects.contains(m)));
                assert!(rec.reverted.is_empty());
            }
            assert_eq!(r.best.ratio, running);
            let first = r.iterations.iter().find(|x| x.ratio == running).unwrap();
            assert_eq!(r.best.iteration, first.iteration);
            assert!(r.best.ratio >= 0.9, "seed {seed}: {}", r.best.ratio);
        }
    }

    #[test]
    fn deterministic() {
        let cs = compile(&check("region room; object a; object b; assert a.pos.z > b.pos.z + 1;").unwrap(), 0);
        let l = layout(&[("a", Vec3::ONE), ("b", Vec3::ONE)]);
        let cfg = SolverConfig { seed: 9, ..Default::default() };
        let x = serde_json::to_string(&solve(&l, &cs, &cfg).unwrap()).unwrap();
        let y = serde_json::to_string(&solve(&l, &cs, &cfg).unwrap()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn batch_selection() {
        let cs = compile(
            &check("region room; object a; object b; object c; object d; assert a.pos.x = b.pos.x + c.pos.x + d.pos.x; assert a.pos.x > 0;").unwrap(),
            0,
        );
        let unsat: Vec<usize> = (0..cs.len()).collect();
        assert_eq!(select_batch(&unsat, &cs, 3, &[]), vec![1, 8, 9]);
        assert_eq!(select_batch(&unsat, &cs, 3, &[]), select_batch(&unsat, &cs, 3, &[]));
        let h = BatchHistory { unsatisfied: vec![0, 1, 8, 9], batch: vec![1, 8, 9] };
        assert_eq!(select_batch(&unsat, &cs, 3, &[h.clone(), h.clone()]), vec![0, 1, 8]);
        assert_eq!(select_batch(&unsat[..2], &cs, 3, &[]).len(), 2);
    }

    struct Rogue;

    impl BatchSolver for Rogue {
        fn propose(&mut self, layout: &SceneLayout, _: &ConstraintSet, _: &[usize], _: &[usize]) -> Result<SceneLayout, SolveError> {
            let mut l = layout.clone();
            for o in &mut l.objects {
                o.transform.pos.x += 0.01;
            }
            Ok(l)
        }
    }

    #[test]
    fn out_of_batch_changes_are_undone() {
        let cs = compile(&check("region room; object a; object b; assert a.pos.x > 100;").unwrap(), 0);
        let l = layout(&[("a", Vec3::ONE), ("b", Vec3::ONE)]);
        let r = solve_with(&l, &cs, &SolverConfig::default(), &mut Rogue, None).unwrap();
        for rec in &r.iterations[1..] {
            assert_eq!(rec.reverted, vec!["b".to_string()]);
            assert!(!rec.moved.contains(&"b".to_string()));
        }
    }

    #[test]
    fn region_resolve_keeps_other_rooms() {
        let src = "region a; region b; object x; object y; assert inside(x, a); assert inside(y, b); assert x.pos.x > 0.5;";
        let cs = compile(&check(src).unwrap(), 0);
        let l = SceneLayout {
            regions: vec![
                Region::rectangle("a", 0.0, 0.0, 4.0, 4.0, 3.0).unwrap(),
                Region::rectangle("b", 5.0, 0.0, 4.0, 4.0, 3.0).unwrap(),
            ],
            objects: vec![SceneObject::new("x", Vec3::ONE, "a"), SceneObject::new("y", Vec3::ONE, "b")],
            ..Default::default()
        };
        let first = solve(&l, &cs, &SolverConfig::default()).unwrap().best.layout;
        let again = solve_region(&first, &cs, &SolverConfig { seed: 3, ..Default::default() }, "a").unwrap();
        assert_eq!(again.best.layout.object("y"), first.object("y"));
    }
}
