use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{CAssert, CompiledConstraint, ConstraintKind, ConstraintSet, EvalContext, EvalError, Value, EPS_EQ};
use crate::dsl::CmpOp;
use crate::geom::{bounds2, convex_overlap_area, Vec3};
use crate::scene::{sat_overlap, SceneLayout, Transform};

use super::{BatchSolver, SolveError, SolverConfig};

/// Grid moves reach this many translation steps from the current position.
pub const GRID_RADIUS: usize = 10;

/// Violation magnitude of a constraint: 0 when satisfied, otherwise a
/// positive distance-like amount (metres or degrees for numeric comparisons,
/// overlap depth for collisions, 1 for all-or-nothing predicates).
pub fn violation(ctx: &EvalContext, c: &CompiledConstraint) -> f64 {
    match &c.kind {
        ConstraintKind::Explicit { compiled, .. } => assert_violation(ctx, compiled),
        ConstraintKind::NoCollision(a, b) => {
            if ctx.collide(*a, *b) {
                sat_overlap(&ctx.geometry(*a).bx, &ctx.geometry(*b).bx).max(1e-3)
            } else {
                0.0
            }
        }
        ConstraintKind::Supported(a) => {
            if ctx.is_supported(*a) {
                return 0.0;
            }
            let g = ctx.geometry(*a);
            let mut gap = (g.min_y - ctx.home_region(*a).floor_y).abs();
            for j in (0..ctx.object_count()).filter(|&j| j != *a) {
                let o = ctx.geometry(j);
                if convex_overlap_area(&g.footprint, &o.footprint) > 1e-9 {
                    gap = gap.min((g.min_y - o.max_y).abs());
                }
            }
            gap.max(1e-3)
        }
        ConstraintKind::WithinRegion(a) => {
            if ctx.inside_home(*a) {
                0.0
            } else {
                1.0
            }
        }
    }
}

fn assert_violation(ctx: &EvalContext, a: &CAssert) -> f64 {
    match a {
        CAssert::Compare(l, op, r) => {
            let (Some(l), Some(r)) = (ctx.eval_expr(l), ctx.eval_expr(r)) else { return 1.0 };
            match (&l, &r) {
                (Value::Num(x), Value::Num(y)) => {
                    let (x, y) = (*x, *y);
                    match op {
                        CmpOp::Lt if x >= y => x - y + 1e-6,
                        CmpOp::Le if x > y => x - y,
                        CmpOp::Gt if x <= y => y - x + 1e-6,
                        CmpOp::Ge if x < y => y - x,
                        CmpOp::Eq if (x - y).abs() > EPS_EQ => (x - y).abs(),
                        CmpOp::Ne if (x - y).abs() <= EPS_EQ => 1e-3,
                        _ => 0.0,
                    }
                }
                (Value::Vec3(x) | Value::Rot(x), Value::Vec3(y) | Value::Rot(y)) => {
                    let d: f64 = (0..3).map(|k| ((x[k] - y[k]).abs() - EPS_EQ).max(0.0)).sum();
                    match op {
                        CmpOp::Eq => d,
                        _ if d == 0.0 => 1e-3,
                        _ => 0.0,
                    }
                }
                _ => match crate::constraints::compare(*op, &l, &r) {
                    Some(true) => 0.0,
                    _ => 1.0,
                },
            }
        }
        CAssert::Inside { .. } => match ctx.eval_assert(a) {
            Some(true) => 0.0,
            _ => 1.0,
        },
        CAssert::And(x, y) => assert_violation(ctx, x) + assert_violation(ctx, y),
        CAssert::Or(x, y) => assert_violation(ctx, x).min(assert_violation(ctx, y)),
        CAssert::Not(x) => match ctx.eval_assert(x) {
            Some(false) => 0.0,
            _ => 1.0,
        },
    }
}

/// For each object, the constraint positions whose truth can change when it
/// moves: everything it is involved in, plus every support constraint (a
/// moved object can start or stop carrying another one).
pub fn affected_constraints(cs: &ConstraintSet) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cs.objects.len()];
    for (p, c) in cs.constraints.iter().enumerate() {
        if matches!(c.kind, ConstraintKind::Supported(_)) {
            out.iter_mut().for_each(|v| v.push(p));
        } else {
            for &o in &c.involved {
                out[o].push(p);
            }
        }
    }
    out
}

/// Height of the object's center when its box rests on `surface_y`.
pub fn resting_height(ctx: &EvalContext, i: usize, surface_y: f64) -> f64 {
    let g = ctx.geometry(i);
    surface_y + (ctx.transform(i).pos.y - g.min_y)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn rotation_change(a: &Transform, b: &Transform) -> f64 {
    angle_gap(a.rot.x, b.rot.x) + angle_gap(a.rot.y, b.rot.y) + angle_gap(a.rot.z, b.rot.z)
}

/// Candidate transforms for one object: translation grid (horizontal and
/// vertical), a drop to the floor, yaw changes, random jumps within the
/// region and jumps onto the top of every other object.
pub fn candidate_moves(ctx: &EvalContext, i: usize, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> Vec<Transform> {
    let cur = ctx.transform(i);
    let g = ctx.geometry(i);
    let region = ctx.home_region(i);
    let half_h = cur.pos.y - g.min_y;
    let step = cfg.translation_step;
    let mut out = Vec::new();
    let with_pos = |p: Vec3| Transform { pos: p, ..cur };
    const DIRS: [(f64, f64); 8] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    for d in 1..=GRID_RADIUS {
        let s = d as f64 * step;
        for (dx, dz) in DIRS {
            out.push(with_pos(Vec3::new(cur.pos.x + dx * s, cur.pos.y, cur.pos.z + dz * s)));
        }
    }
    for d in 1..=GRID_RADIUS {
        for sign in [1.0, -1.0] {
            let y = cur.pos.y + sign * d as f64 * step;
            if y - half_h >= region.floor_y - 1e-9 {
                out.push(with_pos(Vec3::new(cur.pos.x, y, cur.pos.z)));
            }
        }
    }
    let floor_y = region.floor_y + half_h;
    if (cur.pos.y - floor_y).abs() > 1e-9 {
        out.push(with_pos(Vec3::new(cur.pos.x, floor_y, cur.pos.z)));
    }
    for &yaw in &cfg.rotation_steps {
        if angle_gap(yaw, cur.rot.y) > 1e-9 {
            out.push(Transform { rot: Vec3::new(cur.rot.x, yaw, cur.rot.z), ..cur });
        }
    }
    let (lo, hi) = region.bounds();
    let (flo, fhi) = bounds2(&g.footprint);
    let (hx, hz) = ((fhi[0] - flo[0]) / 2.0, (fhi[1] - flo[1]) / 2.0);
    let sample = |rng: &mut ChaCha8Rng, a: f64, b: f64| if a < b { rng.gen_range(a..=b) } else { (a + b) / 2.0 };
    for _ in 0..cfg.candidate_samples {
        let x = sample(rng, lo[0] + hx, hi[0] - hx);
        let z = sample(rng, lo[1] + hz, hi[1] - hz);
        let yaw = if cfg.rotation_steps.is_empty() || rng.gen_bool(0.5) {
            cur.rot.y
        } else {
            cfg.rotation_steps[rng.gen_range(0..cfg.rotation_steps.len())]
        };
        out.push(Transform { pos: Vec3::new(x, floor_y, z), rot: Vec3::new(cur.rot.x, yaw, cur.rot.z), scale: cur.scale });
    }
    for j in (0..ctx.object_count()).filter(|&j| j != i) {
        let o = ctx.geometry(j);
        out.push(with_pos(Vec3::new(o.bx.center.x, o.max_y + half_h, o.bx.center.z)));
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Scored {
    object: usize,
    transform: Transform,
    delta: i64,
    magnitude: f64,
    displacement: f64,
    rotation: f64,
}

impl Scored {
    fn better_than(&self, o: &Scored) -> bool {
        if self.delta != o.delta {
            return self.delta > o.delta;
        }
        if (self.magnitude - o.magnitude).abs() > 1e-12 {
            return self.magnitude < o.magnitude;
        }
        if (self.displacement - o.displacement).abs() > 1e-12 {
            return self.displacement < o.displacement;
        }
        if (self.rotation - o.rotation).abs() > 1e-12 {
            return self.rotation < o.rotation;
        }
        self.object < o.object
    }
}

/// Greedy repair of one batch. Each round scores every candidate move of
/// every movable object by the change in the global satisfied count, then
/// by the batch's total violation magnitude, displacement, rotation change
/// and object index, and applies the best one if it gains satisfied
/// constraints or keeps the count while shrinking the batch violation.
/// Returns the number of moves applied.
pub fn improve_batch(
    ctx: &mut EvalContext,
    cs: &ConstraintSet,
    batch: &[usize],
    movable: &[usize],
    cfg: &SolverConfig,
    rng: &mut ChaCha8Rng,
) -> Result<usize, EvalError> {
    let affected = affected_constraints(cs);
    let mut verdicts = cs.evaluate_all(ctx)?;
    let batch_magnitude = |ctx: &EvalContext| batch.iter().map(|&p| violation(ctx, &cs.constraints[p])).sum::<f64>();
    let mut applied = 0;
    for _ in 0..cfg.moves_per_proposal {
        if batch.iter().all(|&p| verdicts[p]) {
            break;
        }
        let base = batch_magnitude(ctx);
        let mut best: Option<Scored> = None;
        for &i in movable {
            let cur = ctx.transform(i);
            for t in candidate_moves(ctx, i, cfg, rng) {
                ctx.set_transform(i, t);
                let mut delta = 0i64;
                for &p in &affected[i] {
                    delta += ctx.evaluate(&cs.constraints[p])? as i64 - verdicts[p] as i64;
                }
                let s = Scored {
                    object: i,
                    transform: t,
                    delta,
                    magnitude: batch_magnitude(ctx),
                    displacement: (t.pos - cur.pos).norm(),
                    rotation: rotation_change(&t, &cur),
                };
                if best.as_ref().is_none_or(|b| s.better_than(b)) {
                    best = Some(s);
                }
            }
            ctx.set_transform(i, cur);
        }
        let Some(b) = best else { break };
        if !(b.delta > 0 || (b.delta == 0 && b.magnitude < base - 1e-9)) {
            break;
        }
        ctx.set_transform(b.object, b.transform);
        for &p in &affected[b.object] {
            verdicts[p] = ctx.evaluate(&cs.constraints[p])?;
        }
        applied += 1;
    }
    Ok(applied)
}

/// Default batch solver: seeded greedy local search.
pub struct LocalSearch {
    cfg: SolverConfig,
    rng: ChaCha8Rng,
}

impl LocalSearch {
    pub fn new(cfg: &SolverConfig) -> Self {
        LocalSearch { cfg: cfg.clone(), rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15)) }
    }
}

impl BatchSolver for LocalSearch {
    fn propose(
        &mut self,
        layout: &SceneLayout,
        cs: &ConstraintSet,
        batch: &[usize],
        movable: &[usize],
    ) -> Result<SceneLayout, SolveError> {
        let mut ctx = EvalContext::new(layout, cs)?;
        let positions: Vec<usize> = batch.iter().filter_map(|&id| cs.constraints.iter().position(|c| c.id == id)).collect();
        improve_batch(&mut ctx, cs, &positions, movable, &self.cfg, &mut self.rng)?;
        Ok(ctx.into_layout())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::compile;
    use crate::dsl::check;
    use crate::scene::{Region, SceneObject};

    fn room() -> Region {
        Region::rectangle("room", 0.0, 0.0, 6.0, 6.0, 3.0).unwrap()
    }

    #[test]
    fn lamp_moves_above_table() {
        let src = "region room; object table; object lamp; assert lamp.pos.y > table.pos.y + table.scale.y;";
        let cs = compile(&check(src).unwrap(), 0);
        let mut table = SceneObject::new("table", Vec3::ONE, "room").at(Vec3::new(0.0, 0.375, 0.0));
        table.transform.scale = Vec3::new(1.0, 0.75, 1.0);
        let mut lamp = SceneObject::new("lamp", Vec3::ONE, "room").at(Vec3::new(2.0, 0.15, 2.0));
        lamp.transform.scale = Vec3::new(0.3, 0.3, 0.3);
        let layout = SceneLayout { regions: vec![room()], objects: vec![table, lamp], ..Default::default() };
        let mut ctx = EvalContext::new(&layout, &cs).unwrap();
        let before = cs.evaluate_all(&ctx).unwrap().iter().filter(|&&v| v).count();
        assert!(!ctx.evaluate(&cs.constraints[0]).unwrap());
        let cfg = SolverConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        improve_batch(&mut ctx, &cs, &[0], &[0, 1], &cfg, &mut rng).unwrap();
        let lamp = ctx.layout().object("lamp").unwrap().transform;
        let table = ctx.layout().object("table").unwrap().transform;
        assert!(lamp.pos.y > table.pos.y + table.scale.y);
        let after = cs.evaluate_all(&ctx).unwrap().iter().filter(|&&v| v).count();
        assert!(after >= before);
    }

    #[test]
    fn satisfied_batch_leaves_layout_unchanged() {
        let cs = compile(&check("region room; object a; assert a.pos.x > -5;").unwrap(), 0);
        let layout = SceneLayout {
            regions: vec![room()],
            objects: vec![SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(0.0, 3.0, 0.0))],
            ..Default::default()
        };
        let mut solver = LocalSearch::new(&SolverConfig::default());
        let out = solver.propose(&layout, &cs, &[0], &[0]).unwrap();
        assert_eq!(out, layout);
    }

    #[test]
    fn tight_room_count_never_drops() {
        let cs = compile(&check("region room; object a; object b;").unwrap(), 0);
        let tight = Region::rectangle("room", 0.0, 0.0, 1.5, 1.0, 3.0).unwrap();
        let layout = SceneLayout {
            regions: vec![tight],
            objects: vec![
                SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(-0.2, 0.5, 0.0)),
                SceneObject::new("b", Vec3::ONE, "room").at(Vec3::new(0.2, 0.5, 0.0)),
            ],
            ..Default::default()
        };
        let mut ctx = EvalContext::new(&layout, &cs).unwrap();
        let count = |ctx: &EvalContext| cs.evaluate_all(ctx).unwrap().iter().filter(|&&v| v).count();
        let before = count(&ctx);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        improve_batch(&mut ctx, &cs, &[0], &[0, 1], &SolverConfig::default(), &mut rng).unwrap();
        assert!(count(&ctx) >= before);
    }

    #[test]
    fn violation_magnitudes() {
        let cs = compile(&check("region room; object a; assert a.pos.x > 2; assert a.pos.x = 1 || a.pos.z = 0;").unwrap(), 0);
        let layout = SceneLayout {
            regions: vec![room()],
            objects: vec![SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(0.5, 0.5, 3.0))],
            ..Default::default()
        };
        let ctx = EvalContext::new(&layout, &cs).unwrap();
        assert!((violation(&ctx, &cs.constraints[0]) - 1.5).abs() < 1e-5);
        assert!((violation(&ctx, &cs.constraints[1]) - 0.5).abs() < 1e-12);
        assert_eq!(violation(&ctx, &cs.constraints[2]), 0.0);
    }
}
