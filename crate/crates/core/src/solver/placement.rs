use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constraints::{ConstraintSet, EvalContext};
use crate::geom::{bounds2, closest_on_segment, convex_overlap_area, polygon_edges, Vec3};
use crate::scene::{footprint_mtv, Transform, SUPPORT_TOLERANCE};

use super::local::{resting_height, violation};
use super::{SolveError, SolverConfig};

/// Gap left between separated boxes.
const SEPARATION_MARGIN: f64 = 1e-4;
/// Unplaced objects wait far below every room so they touch nothing.
const PARKING_Y: f64 = -1.0e6;

fn footprint_area(ctx: &EvalContext, i: usize) -> f64 {
    let e = ctx.object(i).extents();
    e.x * e.z
}

/// Places every movable object, largest footprint first. Each object takes
/// the best of: its position hint (if any), `candidate_samples` seeded random
/// floor positions with a yaw drawn from the rotation steps, and the top of
/// every already placed object. Candidates are ranked by the number of
/// violated constraints among those whose objects are all placed, then by
/// violation magnitude; the first candidate wins ties.
pub fn initial_placement(
    ctx: &mut EvalContext,
    cs: &ConstraintSet,
    cfg: &SolverConfig,
    movable: &[bool],
) -> Result<(), SolveError> {
    let n = ctx.object_count();
    for i in (0..n).filter(|&i| movable[i]) {
        let e = ctx.object(i).extents();
        let (lo, hi) = ctx.home_region(i).bounds();
        let (w, d) = (hi[0] - lo[0] + 1e-9, hi[1] - lo[1] + 1e-9);
        if !((e.x <= w && e.z <= d) || (e.z <= w && e.x <= d)) {
            return Err(SolveError::Placement {
                object: ctx.object(i).id.clone(),
                region: ctx.home_region(i).id.clone(),
            });
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&i| movable[i]).collect();
    order.sort_by(|&a, &b| footprint_area(ctx, b).total_cmp(&footprint_area(ctx, a)).then(a.cmp(&b)));
    for &i in &order {
        let mut t = ctx.transform(i);
        t.pos = Vec3::new(0.0, PARKING_Y - 10.0 * i as f64, 0.0);
        ctx.set_transform(i, t);
    }
    let mut placed: Vec<bool> = movable.iter().map(|m| !m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for &i in &order {
        placed[i] = true;
        let active: Vec<usize> = cs
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.involved.contains(&i) && c.involved.iter().all(|&o| placed[o]))
            .map(|(p, _)| p)
            .collect();
        let obj = ctx.object(i);
        let region = ctx.home_region(i).clone();
        let base = obj.transform;
        let mut candidates = Vec::new();
        if let Some(pos) = obj.pos_hint {
            candidates.push(Transform { pos, rot: obj.rot_hint.unwrap_or(base.rot), scale: base.scale });
        }
        let (lo, hi) = region.bounds();
        for _ in 0..cfg.candidate_samples {
            let yaw = if cfg.rotation_steps.is_empty() {
                base.rot.y
            } else {
                cfg.rotation_steps[rng.gen_range(0..cfg.rotation_steps.len())]
            };
            let mut t = Transform { rot: Vec3::new(base.rot.x, yaw, base.rot.z), ..base };
            t.pos = Vec3::new(0.0, 0.0, 0.0);
            ctx.set_transform(i, t);
            let g = ctx.geometry(i);
            let (flo, fhi) = bounds2(&g.footprint);
            let (hx, hz) = ((fhi[0] - flo[0]) / 2.0, (fhi[1] - flo[1]) / 2.0);
            let y = region.floor_y - g.min_y;
            let mut pick = |a: f64, b: f64| if a < b { rng.gen_range(a..=b) } else { (a + b) / 2.0 };
            let x = pick(lo[0] + hx, hi[0] - hx);
            let z = pick(lo[1] + hz, hi[1] - hz);
            t.pos = Vec3::new(x, y, z);
            candidates.push(t);
        }
        ctx.set_transform(i, base);
        for j in (0..n).filter(|&j| j != i && placed[j]) {
            let top = ctx.geometry(j).max_y;
            let c = ctx.geometry(j).bx.center;
            let mut t = base;
            t.pos = Vec3::new(c.x, 0.0, c.z);
            ctx.set_transform(i, t);
            t.pos.y = resting_height(ctx, i, top);
            candidates.push(t);
        }
        let mut best: Option<(usize, f64, Transform)> = None;
        for t in candidates {
            ctx.set_transform(i, t);
            let mut violated = 0;
            let mut magnitude = 0.0;
            for &p in &active {
                if !ctx.evaluate(&cs.constraints[p])? {
                    violated += 1;
                    magnitude += violation(ctx, &cs.constraints[p]);
                }
            }
            if best.as_ref().is_none_or(|&(v, m, _)| violated < v || (violated == v && magnitude < m - 1e-12)) {
                best = Some((violated, magnitude, t));
            }
        }
        ctx.set_transform(i, best.map(|b| b.2).unwrap_or(base));
    }
    Ok(())
}

/// Lowers every unsupported movable object onto the highest surface below
/// it (its room floor or the top of an overlapping object), and lifts
/// objects sunk below the floor back onto it.
pub fn drop_pass(ctx: &mut EvalContext, movable: &[bool]) {
    let n = ctx.object_count();
    let mut order: Vec<usize> = (0..n).filter(|&i| movable[i]).collect();
    order.sort_by(|&a, &b| ctx.geometry(a).min_y.total_cmp(&ctx.geometry(b).min_y).then(a.cmp(&b)));
    for i in order {
        if ctx.is_supported(i) {
            continue;
        }
        let g = ctx.geometry(i).clone();
        let floor = ctx.home_region(i).floor_y;
        let surface = if g.min_y < floor {
            floor
        } else {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| ctx.geometry(j))
                .filter(|o| o.max_y <= g.min_y + SUPPORT_TOLERANCE && convex_overlap_area(&g.footprint, &o.footprint) > 1e-9)
                .map(|o| o.max_y)
                .fold(floor, f64::max)
        };
        let mut t = ctx.transform(i);
        t.pos.y = resting_height(ctx, i, surface);
        ctx.set_transform(i, t);
    }
}

fn allowed_pair(cs: &ConstraintSet, a: usize, b: usize) -> bool {
    let (x, y) = (&cs.objects[a], &cs.objects[b]);
    let key = if x <= y { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
    cs.allow_collide.contains(&key)
}

fn shift(ctx: &mut EvalContext, i: usize, d: Vec3) {
    let mut t = ctx.transform(i);
    t.pos = t.pos + d;
    ctx.set_transform(i, t);
}

/// Separates one colliding pair along the cheaper of the vertical overlap
/// and the floor-plane minimum translation, splitting the push evenly when
/// both objects may move.
fn separate(ctx: &mut EvalContext, a: usize, b: usize, movable: &[bool]) {
    let (ga, gb) = (ctx.geometry(a).clone(), ctx.geometry(b).clone());
    let Some((dir, depth)) = footprint_mtv(&ga.footprint, &gb.footprint) else { return };
    let vertical = ga.max_y.min(gb.max_y) - ga.min_y.max(gb.min_y);
    if vertical < depth {
        let (upper, lower) = if gb.bx.center.y >= ga.bx.center.y { (b, a) } else { (a, b) };
        let amount = vertical + SEPARATION_MARGIN;
        if movable[upper] {
            shift(ctx, upper, Vec3::new(0.0, amount, 0.0));
        } else if movable[lower] {
            shift(ctx, lower, Vec3::new(0.0, -amount, 0.0));
        }
        return;
    }
    let amount = depth + SEPARATION_MARGIN;
    let push = |s: f64| Vec3::new(dir[0] * s, 0.0, dir[1] * s);
    match (movable[a], movable[b]) {
        (true, true) => {
            shift(ctx, a, push(-amount / 2.0));
            shift(ctx, b, push(amount / 2.0));
        }
        (true, false) => shift(ctx, a, push(-amount)),
        (false, true) => shift(ctx, b, push(amount)),
        (false, false) => {}
    }
}

/// Drop pass, then up to `relaxation_sweeps` sweeps that separate every
/// colliding pair not exempted by `allowCollide`, each sweep followed by
/// bounds enforcement and another drop pass. Best effort.
pub fn physics_relaxation(ctx: &mut EvalContext, cs: &ConstraintSet, cfg: &SolverConfig, movable: &[bool]) {
    drop_pass(ctx, movable);
    let n = ctx.object_count();
    for _ in 0..cfg.relaxation_sweeps {
        let mut any = false;
        for a in 0..n {
            for b in (a + 1)..n {
                if (!movable[a] && !movable[b]) || allowed_pair(cs, a, b) || !ctx.collide(a, b) {
                    continue;
                }
                any = true;
                separate(ctx, a, b, movable);
            }
        }
        if !any {
            break;
        }
        enforce_bounds(ctx, cs, movable);
        drop_pass(ctx, movable);
    }
}

/// Moves each movable object (except `allowOutside` ones) back into its
/// region: a vertical clamp to the floor-ceiling span, then repeated minimal
/// pushes of the farthest outlying footprint corner onto the boundary.
pub fn enforce_bounds(ctx: &mut EvalContext, cs: &ConstraintSet, movable: &[bool]) {
    for i in 0..ctx.object_count() {
        if !movable[i] || cs.allow_outside.contains(&cs.objects[i]) || ctx.inside_home(i) {
            continue;
        }
        let region = ctx.home_region(i).clone();
        let g = ctx.geometry(i);
        let (lo, hi) = (g.min_y, g.max_y);
        let dy = if lo < region.floor_y {
            region.floor_y - lo
        } else if hi > region.ceiling_y() {
            (region.ceiling_y() - hi).max(region.floor_y - lo)
        } else {
            0.0
        };
        if dy != 0.0 {
            shift(ctx, i, Vec3::new(0.0, dy, 0.0));
        }
        for _ in 0..16 {
            let g = ctx.geometry(i);
            let mut worst: Option<(f64, [f64; 2], [f64; 2])> = None;
            for &p in &g.footprint {
                if region.contains_point(p, 0.0) {
                    continue;
                }
                let target = polygon_edges(&region.vertices)
                    .map(|(a, b)| closest_on_segment(p, a, b))
                    .min_by(|x, y| dist(p, *x).total_cmp(&dist(p, *y)))
                    .expect("region has edges");
                let d = dist(p, target);
                if worst.is_none_or(|w| d > w.0) {
                    worst = Some((d, p, target));
                }
            }
            let Some((d, p, target)) = worst else { break };
            if d <= 0.0 {
                break;
            }
            shift(ctx, i, Vec3::new(target[0] - p[0], 0.0, target[1] - p[1]));
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Indices of objects whose transform differs between two contexts.
pub fn moved_objects(before: &EvalContext, after: &EvalContext) -> Vec<usize> {
    (0..before.object_count()).filter(|&i| before.transform(i) != after.transform(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::compile;
    use crate::dsl::check;
    use crate::scene::{Region, SceneLayout, SceneObject};

    fn ctx_of(src: &str, room: Region, objects: Vec<SceneObject>) -> (ConstraintSet, EvalContext) {
        let cs = compile(&check(src).unwrap(), 0);
        let layout = SceneLayout { regions: vec![room], objects, ..Default::default() };
        let ctx = EvalContext::new(&layout, &cs).unwrap();
        (cs, ctx)
    }

    fn room(w: f64) -> Region {
        Region::rectangle("room", 0.0, 0.0, w, w, 3.0).unwrap()
    }

    #[test]
    fn single_cube_is_placed_inside() {
        let (cs, mut ctx) = ctx_of("region room; object cube;", room(10.0), vec![SceneObject::new("cube", Vec3::ONE, "room")]);
        initial_placement(&mut ctx, &cs, &SolverConfig::default(), &[true]).unwrap();
        assert!(ctx.inside_home(0));
        assert!(ctx.is_supported(0));
    }

    #[test]
    fn placement_is_deterministic_and_mostly_collision_free() {
        let mut clean = 0;
        for seed in 0..100 {
            let run = || {
                let (cs, mut ctx) = ctx_of(
                    "region room; object a; object b;",
                    room(4.0),
                    vec![SceneObject::new("a", Vec3::ONE, "room"), SceneObject::new("b", Vec3::ONE, "room")],
                );
                let cfg = SolverConfig { seed, ..SolverConfig::default() };
                initial_placement(&mut ctx, &cs, &cfg, &[true, true]).unwrap();
                ctx
            };
            let (x, y) = (run(), run());
            assert_eq!(x.layout(), y.layout());
            if !x.collide(0, 1) {
                clean += 1;
            }
        }
        assert!(clean >= 95, "{clean}");
    }

    #[test]
    fn oversized_object_is_rejected() {
        let (cs, mut ctx) =
            ctx_of("region room; object bed;", room(2.0), vec![SceneObject::new("bed", Vec3::new(2.5, 0.5, 1.0), "room")]);
        assert!(matches!(initial_placement(&mut ctx, &cs, &SolverConfig::default(), &[true]), Err(SolveError::Placement { .. })));
        // Fits once rotated.
        let (cs, mut ctx) =
            ctx_of("region room; object bed;", Region::rectangle("room", 0.0, 0.0, 1.5, 3.0, 3.0).unwrap(), vec![SceneObject::new("bed", Vec3::new(2.5, 0.5, 1.0), "room")]);
        assert!(initial_placement(&mut ctx, &cs, &SolverConfig::default(), &[true]).is_ok());
    }

    #[test]
    fn floating_cube_falls_to_floor() {
        let (cs, mut ctx) =
            ctx_of("region room; object cube;", room(10.0), vec![SceneObject::new("cube", Vec3::ONE, "room").at(Vec3::new(0.0, 3.0, 0.0))]);
        physics_relaxation(&mut ctx, &cs, &SolverConfig::default(), &[true]);
        assert!((ctx.geometry(0).min_y - 0.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_cubes_are_separated() {
        let (cs, mut ctx) = ctx_of(
            "region room; object a; object b;",
            room(10.0),
            vec![
                SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(0.0, 0.5, 0.0)),
                SceneObject::new("b", Vec3::ONE, "room").at(Vec3::new(0.4, 0.5, 0.1)),
            ],
        );
        physics_relaxation(&mut ctx, &cs, &SolverConfig::default(), &[true, true]);
        assert!(!ctx.collide(0, 1));
        assert!(ctx.is_supported(0) && ctx.is_supported(1));
    }

    #[test]
    fn book_lands_on_table() {
        let mut table = SceneObject::new("table", Vec3::new(1.2, 0.75, 0.8), "room").at(Vec3::new(0.0, 0.375, 0.0));
        table.category = "table".into();
        let book = SceneObject::new("book", Vec3::new(0.2, 0.05, 0.15), "room").at(Vec3::new(0.1, 1.2, 0.0));
        let (cs, mut ctx) = ctx_of("region room; object table; object book;", room(10.0), vec![table, book]);
        physics_relaxation(&mut ctx, &cs, &SolverConfig::default(), &[true, true]);
        assert!((ctx.geometry(1).min_y - 0.75).abs() < 1e-9);
        assert!(ctx.is_supported(1));
        assert!(!ctx.collide(0, 1));
    }

    #[test]
    fn bounds_clamp() {
        let (cs, mut ctx) = ctx_of(
            "region room; object a; object bird; object c; allowOutside(bird);",
            room(4.0),
            vec![
                SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(1.8, 0.5, 0.0)),
                SceneObject::new("bird", Vec3::ONE, "room").at(Vec3::new(5.0, 0.5, 0.0)),
                SceneObject::new("c", Vec3::ONE, "room").at(Vec3::new(-1.0, 0.5, -1.0)),
            ],
        );
        let before = ctx.clone();
        enforce_bounds(&mut ctx, &cs, &[true, true, true]);
        assert!(ctx.inside_home(0));
        assert!((ctx.transform(0).pos.x - 1.5).abs() < 1e-9);
        assert_eq!(ctx.transform(1), before.transform(1));
        assert_eq!(ctx.transform(2), before.transform(2));
    }
}
