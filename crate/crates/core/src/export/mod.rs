//! Scene packages: the solved layout with asset references, wall slabs,
//! lights and physics flags (`scene.json`), the asset manifest
//! (`manifest.tsv`), the canonical program (`metadata.sthl`) and a text
//! report (`report.txt`). Coordinates are written in the toolchain's
//! left-handed convention unchanged.
//!
//! A package can be read back, queried for constraint verdicts by object,
//! and partially regenerated one region at a time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::assets::{AssetDecision, QueryKind, Verdict};
use crate::constraints::{compile_program, ConstraintSet, EvalContext, EvalError};
use crate::dsl::{parse, print_program, typecheck, Program};
use crate::geom::{convex_overlap_area, Point2, Vec3};
use crate::scene::{
    build_layout, thicken_walls, Connection, Light, ObjectSpec, Region, RegionSpec, SceneError, SceneLayout, SceneObject,
    SceneSpec, Surface, Transform, WallSlab, SUPPORT_OVERLAP, SUPPORT_TOLERANCE,
};
use crate::solver::{solve_region, SolveError, SolveReport, SolverConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const SCENE_FILE: &str = "scene.json";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const METADATA_FILE: &str = "metadata.sthl";
pub const REPORT_FILE: &str = "report.txt";
const MANIFEST_HEADER: &str = "#target\tkind\tasset_ref\tverdict\tscore\tbelow_threshold\tnative_extents\tquery";

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum ExportError {
    #[error("asset for `{0}` is missing or has no native extents")]
    AssetMismatch(String),
    #[error("{file}:{line}: {message}")]
    Format { file: String, line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("embedded program does not round-trip: {0}")]
    Metadata(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub collider: ColliderKind,
    /// Rests directly on its room floor; objects carried by other objects
    /// are dynamic.
    #[serde(rename = "static")]
    pub is_static: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColliderKind {
    Box,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ObjectEntry {
    pub id: String,
    pub category: String,
    pub asset_ref: String,
    pub position: [f64; 3],
    /// Degrees in application order: about x, then z, then y.
    #[serde(rename = "rotationXZY")]
    pub rotation_xzy: [f64; 3],
    /// Scale applied to the asset: declared extents over native extents.
    pub scale: [f64; 3],
    pub region: String,
    pub dimensions: [f64; 3],
    pub layout_scale: [f64; 3],
    pub color: String,
    pub material: String,
    pub features: String,
    pub physics: Physics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SurfaceEntry {
    pub color: String,
    pub material: String,
    pub features: String,
    pub asset_ref: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RegionEntry {
    pub id: String,
    pub vertices: Vec<Point2>,
    pub floor_y: f64,
    pub height: f64,
    pub wall_thickness: f64,
    pub frame: Transform,
    pub floor: SurfaceEntry,
    pub wall: SurfaceEntry,
    pub walls: Vec<WallSlab>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictEntry {
    pub id: usize,
    pub provenance: String,
    pub satisfied: bool,
    pub constraint: String,
    pub objects: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PackageMetadata {
    pub program_file: String,
    pub seed: u64,
    pub solver: SolverConfig,
    pub satisfaction_ratio: f64,
    pub verdicts: Vec<VerdictEntry>,
    /// Objects whose support snap was undone because it broke a constraint.
    pub snap_reverted: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneDocument {
    pub schema_version: u32,
    pub objects: Vec<ObjectEntry>,
    pub regions: Vec<RegionEntry>,
    pub connections: Vec<Connection>,
    pub lights: Vec<Light>,
    pub metadata: PackageMetadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Object id, or `<region>.floor` / `<region>.wall`.
    pub target: String,
    pub kind: QueryKind,
    pub asset_ref: String,
    pub verdict: Verdict,
    pub score: Option<f64>,
    pub below_threshold: bool,
    pub native_extents: Option<Vec3>,
    pub query: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenePackage {
    pub document: SceneDocument,
    pub manifest: Vec<ManifestEntry>,
    /// Canonical program text.
    pub metadata: String,
    pub report: String,
}

/// Everything needed to assemble a package.
pub struct ExportInput<'a> {
    pub program: &'a Program,
    pub layout: &'a SceneLayout,
    pub cs: &'a ConstraintSet,
    pub decisions: &'a [AssetDecision],
    pub solver: &'a SolverConfig,
    pub report: Option<&'a SolveReport>,
    /// Restrict the support snap to these objects (all when `None`).
    pub snap_only: Option<&'a BTreeSet<String>>,
}

/// Height of the surface an object rests on: its floor, or the nearest top
/// face within tolerance covering at least half its footprint.
fn support_surface(ctx: &EvalContext, i: usize) -> Option<f64> {
    let g = ctx.geometry(i);
    let floor = ctx.home_region(i).floor_y;
    let mut best: Option<f64> = ((g.min_y - floor).abs() <= SUPPORT_TOLERANCE).then_some(floor);
    for j in (0..ctx.object_count()).filter(|&j| j != i) {
        let o = ctx.geometry(j);
        if (g.min_y - o.max_y).abs() <= SUPPORT_TOLERANCE
            && convex_overlap_area(&g.footprint, &o.footprint) >= SUPPORT_OVERLAP * g.footprint_area - 1e-12
            && best.is_none_or(|b| (g.min_y - o.max_y).abs() < (g.min_y - b).abs())
        {
            best = Some(o.max_y);
        }
    }
    best
}

/// Snaps each supported object's bottom onto its supporting surface by
/// adjusting only its height. A snap that turns any satisfied constraint
/// into a violated one is undone; the ids of undone snaps are returned.
pub fn snap_to_support(
    ctx: &mut EvalContext,
    cs: &ConstraintSet,
    only: Option<&BTreeSet<String>>,
) -> Result<Vec<String>, EvalError> {
    let mut verdicts = cs.evaluate_all(ctx)?;
    let mut reverted = Vec::new();
    for i in 0..ctx.object_count() {
        if only.is_some_and(|s| !s.contains(&cs.objects[i])) {
            continue;
        }
        let Some(surface) = support_surface(ctx, i) else { continue };
        let delta = surface - ctx.geometry(i).min_y;
        if delta == 0.0 {
            continue;
        }
        let before = ctx.transform(i);
        let mut t = before;
        t.pos.y += delta;
        ctx.set_transform(i, t);
        let now = cs.evaluate_all(ctx)?;
        if verdicts.iter().zip(&now).any(|(b, a)| *b && !*a) {
            ctx.set_transform(i, before);
            reverted.push(cs.objects[i].clone());
        } else {
            verdicts = now;
        }
    }
    Ok(reverted)
}

fn surface_entry(s: &Surface, asset_ref: Option<String>) -> SurfaceEntry {
    SurfaceEntry { color: s.color.clone(), material: s.material.clone(), features: s.features.clone(), asset_ref }
}

fn manifest_entry(d: &AssetDecision) -> ManifestEntry {
    ManifestEntry {
        target: d.target.clone(),
        kind: d.query.kind,
        asset_ref: d.model_ref.clone(),
        verdict: d.verdict,
        score: d.best.as_ref().map(|c| c.score),
        below_threshold: d.below_threshold,
        native_extents: d.native_extents,
        query: d.query.text.clone(),
    }
}

/// Verdict table for a layout.
pub fn verdict_entries(cs: &ConstraintSet, ctx: &EvalContext) -> Result<Vec<VerdictEntry>, EvalError> {
    cs.constraints
        .iter()
        .map(|c| {
            Ok(VerdictEntry {
                id: c.id,
                provenance: c.provenance.name().to_string(),
                satisfied: ctx.evaluate(c)?,
                constraint: cs.describe(c, Some(ctx)),
                objects: cs.involved_names(c).into_iter().map(String::from).collect(),
            })
        })
        .collect()
}

/// Builds a package from a solved layout and one asset decision per object
/// (surface decisions are optional).
pub fn assemble(input: &ExportInput) -> Result<ScenePackage, ExportError> {
    let cs = input.cs;
    let mut ctx = EvalContext::new(input.layout, cs)?;
    let snap_reverted = snap_to_support(&mut ctx, cs, input.snap_only)?;
    let by_target: BTreeMap<&str, &AssetDecision> = input.decisions.iter().map(|d| (d.target.as_str(), d)).collect();

    let mut objects = Vec::new();
    for o in &ctx.layout().objects {
        let d = by_target.get(o.id.as_str()).ok_or_else(|| ExportError::AssetMismatch(o.id.clone()))?;
        let native = d.native_extents.ok_or_else(|| ExportError::AssetMismatch(o.id.clone()))?;
        let i = cs.object_index(&o.id).expect("layout objects come from the constraint set");
        let floor = ctx.home_region(i).floor_y;
        let t = o.transform;
        objects.push(ObjectEntry {
            id: o.id.clone(),
            category: o.category.clone(),
            asset_ref: d.model_ref.clone(),
            position: t.pos.to_array(),
            rotation_xzy: [t.rot.x, t.rot.z, t.rot.y],
            scale: o.extents().div_elem(native).to_array(),
            region: o.region.clone(),
            dimensions: o.dimensions.to_array(),
            layout_scale: t.scale.to_array(),
            color: o.color.clone(),
            material: o.material.clone(),
            features: o.features.clone(),
            physics: Physics {
                collider: ColliderKind::Box,
                is_static: (ctx.geometry(i).min_y - floor).abs() <= SUPPORT_TOLERANCE,
            },
        });
    }
    let mut regions = Vec::new();
    for r in &ctx.layout().regions {
        let surface_ref = |suffix: &str| by_target.get(format!("{}.{suffix}", r.id).as_str()).map(|d| d.model_ref.clone());
        regions.push(RegionEntry {
            id: r.id.clone(),
            vertices: r.vertices.clone(),
            floor_y: r.floor_y,
            height: r.height,
            wall_thickness: r.wall_thickness,
            frame: r.frame,
            floor: surface_entry(&r.floor, surface_ref("floor")),
            wall: surface_entry(&r.wall, surface_ref("wall")),
            walls: thicken_walls(r, r.wall_thickness)?.walls,
        });
    }
    let verdicts = verdict_entries(cs, &ctx)?;
    let satisfied: Vec<bool> = verdicts.iter().map(|v| v.satisfied).collect();
    let metadata = print_program(input.program);
    match parse(&metadata) {
        Ok(p) if &p == input.program => {}
        Ok(_) => return Err(ExportError::Metadata("re-parsed program differs".into())),
        Err(e) => return Err(ExportError::Metadata(e.to_string())),
    }
    let mut report = match input.report {
        Some(r) => r.to_text(cs)?,
        None => cs.report(&ctx)?,
    };
    for id in &snap_reverted {
        let _ = writeln!(report, "snap reverted {id}");
    }
    let document = SceneDocument {
        schema_version: SCHEMA_VERSION,
        objects,
        regions,
        connections: ctx.layout().connections.clone(),
        lights: ctx.layout().lights.clone(),
        metadata: PackageMetadata {
            program_file: METADATA_FILE.to_string(),
            seed: input.solver.seed,
            solver: input.solver.clone(),
            satisfaction_ratio: crate::constraints::ratio(&satisfied),
            verdicts,
            snap_reverted,
        },
    };
    let manifest = input.decisions.iter().map(manifest_entry).collect();
    Ok(ScenePackage { document, manifest, metadata, report })
}

fn fmt_extents(v: Option<Vec3>) -> String {
    v.map_or("-".into(), |v| format!("{},{},{}", v.x, v.y, v.z))
}

impl ScenePackage {
    pub fn scene_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.document).expect("scene document serializes");
        s.push('\n');
        s
    }

    pub fn manifest_tsv(&self) -> String {
        let mut out = format!("{MANIFEST_HEADER}\n");
        for m in &self.manifest {
            let kind = match m.kind {
                QueryKind::Object => "object",
                QueryKind::Floor => "floor",
                QueryKind::Wall => "wall",
            };
            let verdict = match m.verdict {
                Verdict::Retrieved => "retrieved",
                Verdict::Generated => "generated",
            };
            let score = m.score.map_or("-".into(), |s| s.to_string());
            let _ = writeln!(
                out,
                "{}\t{kind}\t{}\t{verdict}\t{score}\t{}\t{}\t{}",
                m.target,
                m.asset_ref,
                m.below_threshold,
                fmt_extents(m.native_extents),
                m.query
            );
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), ExportError> {
        std::fs::create_dir_all(dir).map_err(|e| ExportError::Io(format!("{}: {e}", dir.display())))?;
        for (name, body) in [
            (SCENE_FILE, self.scene_json()),
            (MANIFEST_FILE, self.manifest_tsv()),
            (METADATA_FILE, self.metadata.clone()),
            (REPORT_FILE, self.report.clone()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| ExportError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, ExportError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| ExportError::Io(format!("{}: {e}", path.display())))
        };
        let scene = read(SCENE_FILE)?;
        let document: SceneDocument = serde_json::from_str(&scene)
            .map_err(|e| ExportError::Format { file: SCENE_FILE.into(), line: e.line(), message: e.to_string() })?;
        if document.schema_version != SCHEMA_VERSION {
            return Err(ExportError::Format {
                file: SCENE_FILE.into(),
                line: 1,
                message: format!("unsupported schemaVersion {}", document.schema_version),
            });
        }
        let manifest = parse_manifest(&read(MANIFEST_FILE)?)?;
        let metadata = read(METADATA_FILE)?;
        let report = read(REPORT_FILE)?;
        let pkg = ScenePackage { document, manifest, metadata, report };
        pkg.check_references()?;
        Ok(pkg)
    }

    /// Cross-file integrity: manifest and scene agree on the object set and
    /// the embedded program declares exactly those objects.
    fn check_references(&self) -> Result<(), ExportError> {
        let scene_ids: BTreeSet<&str> = self.document.objects.iter().map(|o| o.id.as_str()).collect();
        for (n, m) in self.manifest.iter().enumerate() {
            if m.kind == QueryKind::Object && !scene_ids.contains(m.target.as_str()) {
                return Err(ExportError::Format {
                    file: MANIFEST_FILE.into(),
                    line: self.manifest_line(n),
                    message: format!("object `{}` is in the manifest but not in {SCENE_FILE}", m.target),
                });
            }
        }
        let listed: BTreeSet<&str> =
            self.manifest.iter().filter(|m| m.kind == QueryKind::Object).map(|m| m.target.as_str()).collect();
        if let Some(id) = scene_ids.iter().find(|id| !listed.contains(*id)) {
            return Err(ExportError::Format {
                file: SCENE_FILE.into(),
                line: 1,
                message: format!("object `{id}` is not listed in {MANIFEST_FILE}"),
            });
        }
        let program = parse(&self.metadata).map_err(|e| {
            let line = e.0.first().map_or(1, |d| d.line.max(1));
            ExportError::Format { file: METADATA_FILE.into(), line, message: e.to_string() }
        })?;
        let declared: BTreeSet<&str> = program.objects().into_iter().collect();
        if declared != scene_ids {
            let diff: Vec<&str> = declared.symmetric_difference(&scene_ids).copied().collect();
            return Err(ExportError::Format {
                file: METADATA_FILE.into(),
                line: 1,
                message: format!("declared objects differ from {SCENE_FILE}: {}", diff.join(", ")),
            });
        }
        Ok(())
    }

    fn manifest_line(&self, index: usize) -> usize {
        index + 2
    }

    pub fn program(&self) -> Result<Program, ExportError> {
        parse(&self.metadata).map_err(|e| ExportError::Format { file: METADATA_FILE.into(), line: 1, message: e.to_string() })
    }

    /// Constraint verdicts that involve an object.
    pub fn verdicts_for(&self, object: &str) -> Vec<&VerdictEntry> {
        self.document.metadata.verdicts.iter().filter(|v| v.objects.iter().any(|o| o == object)).collect()
    }

    /// Reconstructs the solved layout.
    pub fn to_layout(&self) -> Result<SceneLayout, ExportError> {
        let mut regions = Vec::new();
        for r in &self.document.regions {
            let mut region = Region::new(&r.id, r.vertices.clone(), r.floor_y, r.height)?;
            region.wall_thickness = r.wall_thickness;
            region.frame = r.frame;
            region.floor = Surface { color: r.floor.color.clone(), material: r.floor.material.clone(), features: r.floor.features.clone() };
            region.wall = Surface { color: r.wall.color.clone(), material: r.wall.material.clone(), features: r.wall.features.clone() };
            regions.push(region);
        }
        let objects = self
            .document
            .objects
            .iter()
            .map(|o| SceneObject {
                id: o.id.clone(),
                category: o.category.clone(),
                dimensions: o.dimensions.into(),
                color: o.color.clone(),
                material: o.material.clone(),
                features: o.features.clone(),
                transform: Transform {
                    pos: o.position.into(),
                    rot: Vec3::new(o.rotation_xzy[0], o.rotation_xzy[2], o.rotation_xzy[1]),
                    scale: o.layout_scale.into(),
                },
                region: o.region.clone(),
                pos_hint: None,
                rot_hint: None,
            })
            .collect();
        let layout = SceneLayout {
            regions,
            objects,
            connections: self.document.connections.clone(),
            lights: self.document.lights.clone(),
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Scene file equivalent of the package's regions and objects.
    pub fn scene_spec(&self) -> SceneSpec {
        let mut spec = SceneSpec::default();
        for r in &self.document.regions {
            let surface = |s: &SurfaceEntry| Surface { color: s.color.clone(), material: s.material.clone(), features: s.features.clone() };
            spec.regions.insert(
                r.id.clone(),
                RegionSpec {
                    vertices: r.vertices.clone(),
                    floor_y: r.floor_y,
                    height: r.height,
                    wall_thickness: Some(r.wall_thickness),
                    floor: surface(&r.floor),
                    wall: surface(&r.wall),
                },
            );
        }
        for o in &self.document.objects {
            spec.objects.insert(
                o.id.clone(),
                ObjectSpec {
                    category: Some(o.category.clone()),
                    dimensions: Some(o.dimensions),
                    region: Some(o.region.clone()),
                    color: Some(o.color.clone()),
                    material: Some(o.material.clone()),
                    features: Some(o.features.clone()),
                },
            );
        }
        spec
    }

    /// Asset decisions recorded in the manifest, for re-assembly.
    pub fn decisions(&self) -> Vec<AssetDecision> {
        self.manifest
            .iter()
            .map(|m| AssetDecision {
                target: m.target.clone(),
                query: crate::assets::AssetQuery {
                    text: m.query.clone(),
                    kind: m.kind,
                    color: String::new(),
                    category: String::new(),
                    material: String::new(),
                    features: String::new(),
                },
                best: m.score.map(|score| crate::assets::Candidate { id: m.asset_ref.clone(), score }),
                verdict: m.verdict,
                below_threshold: m.below_threshold,
                model_ref: m.asset_ref.clone(),
                native_extents: m.native_extents,
            })
            .collect()
    }

    /// Re-solves one region for a possibly edited program. Objects outside
    /// `region` keep their packaged transforms exactly; objects the edited
    /// program no longer declares are dropped from the manifest.
    pub fn regenerate_region(&self, program: &Program, region: &str, cfg: &SolverConfig) -> Result<ScenePackage, ExportError> {
        let typed = typecheck(program).map_err(|e| ExportError::Metadata(e.to_string()))?;
        let compiled = compile_program(&typed, cfg.seed).map_err(|e| ExportError::Metadata(e.to_string()))?;
        let old = self.to_layout()?;
        let mut spec = self.scene_spec();
        let declared: BTreeSet<&str> = program.objects().into_iter().collect();
        spec.objects.retain(|id, _| declared.contains(id.as_str()));
        let mut layout = build_layout(program, &compiled.props, &spec)?;
        for o in &mut layout.objects {
            if let Some(prev) = old.object(&o.id) {
                o.transform = prev.transform;
            }
        }
        layout.connections = old.connections.clone();
        layout.lights = old.lights.clone();
        for o in layout.objects.iter().filter(|o| o.region != region) {
            if old.object(&o.id).is_none() {
                return Err(ExportError::Metadata(format!("new object `{}` must be placed in region `{region}`", o.id)));
            }
        }
        let report = solve_region(&layout, &compiled.constraints, cfg, region)?;
        let decisions: Vec<AssetDecision> =
            self.decisions().into_iter().filter(|d| d.query.kind != QueryKind::Object || declared.contains(d.target.as_str())).collect();
        let movable: BTreeSet<String> =
            report.best.layout.objects.iter().filter(|o| o.region == region).map(|o| o.id.clone()).collect();
        assemble(&ExportInput {
            program,
            layout: &report.best.layout,
            cs: &compiled.constraints,
            decisions: &decisions,
            solver: cfg,
            report: Some(&report),
            snap_only: Some(&movable),
        })
    }
}

fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ExportError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ExportError::Format { file: MANIFEST_FILE.into(), line: line_no, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 8 {
            return Err(err(format!("expected 8 columns, found {}", cols.len())));
        }
        let kind = match cols[1] {
            "object" => QueryKind::Object,
            "floor" => QueryKind::Floor,
            "wall" => QueryKind::Wall,
            k => return Err(err(format!("unknown kind `{k}`"))),
        };
        let verdict = match cols[3] {
            "retrieved" => Verdict::Retrieved,
            "generated" => Verdict::Generated,
            v => return Err(err(format!("unknown verdict `{v}`"))),
        };
        let score = match cols[4] {
            "-" => None,
            s => Some(s.parse::<f64>().map_err(|e| err(format!("bad score `{s}`: {e}")))?),
        };
        let below_threshold = cols[5].parse::<bool>().map_err(|e| err(format!("bad flag `{}`: {e}", cols[5])))?;
        let native_extents = match cols[6] {
            "-" => None,
            s => {
                let v: Vec<f64> = s
                    .split(',')
                    .map(str::parse::<f64>)
                    .collect::<Result<_, _>>()
                    .map_err(|e| err(format!("bad extents `{s}`: {e}")))?;
                if v.len() != 3 {
                    return Err(err(format!("bad extents `{s}`")));
                }
                Some(Vec3::new(v[0], v[1], v[2]))
            }
        };
        out.push(ManifestEntry {
            target: cols[0].to_string(),
            kind,
            asset_ref: cols[2].to_string(),
            verdict,
            score,
            below_threshold,
            native_extents,
            query: cols[7].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{formulate_query, Candidate};
    use crate::constraints::compile;
    use crate::dsl::check;

    fn decision(target: &str, native: Option<Vec3>) -> AssetDecision {
        AssetDecision {
            target: target.into(),
            query: formulate_query(QueryKind::Object, "", target, "", ""),
            best: Some(Candidate { id: format!("{target}-asset"), score: 0.8 }),
            verdict: Verdict::Retrieved,
            below_threshold: false,
            model_ref: format!("models/{target}.glb"),
            native_extents: native,
        }
    }

    fn scene(src: &str, objects: Vec<SceneObject>) -> (Program, ConstraintSet, SceneLayout) {
        let typed = check(src).unwrap();
        let cs = compile(&typed, 0);
        let layout = SceneLayout {
            regions: vec![Region::rectangle("room", 0.0, 0.0, 6.0, 6.0, 3.0).unwrap()],
            objects,
            ..Default::default()
        };
        (typed.program, cs, layout)
    }

    fn package(program: &Program, cs: &ConstraintSet, layout: &SceneLayout, decisions: &[AssetDecision]) -> Result<ScenePackage, ExportError> {
        assemble(&ExportInput {
            program,
            layout,
            cs,
            decisions,
            solver: &SolverConfig::default(),
            report: None,
            snap_only: None,
        })
    }

    #[test]
    fn asset_scale_is_extents_over_native() {
        let mut table = SceneObject::new("table", Vec3::ONE, "room").at(Vec3::new(0.0, 0.375, 0.0));
        table.transform.scale = Vec3::new(1.0, 0.75, 1.0);
        let (p, cs, l) = scene("region room; object table;", vec![table]);
        let pkg = package(&p, &cs, &l, &[decision("table", Some(Vec3::new(2.0, 1.5, 2.0)))]).unwrap();
        assert_eq!(pkg.document.objects[0].scale, [0.5, 0.5, 0.5]);
        assert!(pkg.document.objects[0].physics.is_static);
        assert!(matches!(package(&p, &cs, &l, &[decision("table", None)]), Err(ExportError::AssetMismatch(_))));
        assert!(matches!(package(&p, &cs, &l, &[]), Err(ExportError::AssetMismatch(_))));
    }

    #[test]
    fn snap_is_identity_when_exactly_supported_and_closes_small_gaps() {
        let (p, cs, l) = scene(
            "region room; object a; object b;",
            vec![
                SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(0.0, 0.5, 0.0)),
                SceneObject::new("b", Vec3::ONE, "room").at(Vec3::new(2.0, 0.503, 0.0)),
            ],
        );
        let pkg = package(&p, &cs, &l, &[decision("a", Some(Vec3::ONE)), decision("b", Some(Vec3::ONE))]).unwrap();
        assert_eq!(pkg.document.objects[0].position, [0.0, 0.5, 0.0]);
        assert!((pkg.document.objects[1].position[1] - 0.5).abs() < 1e-12);
        assert!(pkg.document.metadata.snap_reverted.is_empty());
    }

    #[test]
    fn snap_that_breaks_a_constraint_is_reverted() {
        let (p, cs, l) = scene(
            "region room; object a; assert a.pos.y > 0.502;",
            vec![SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(0.0, 0.504, 0.0))],
        );
        let pkg = package(&p, &cs, &l, &[decision("a", Some(Vec3::ONE))]).unwrap();
        assert_eq!(pkg.document.objects[0].position[1], 0.504);
        assert_eq!(pkg.document.metadata.snap_reverted, vec!["a".to_string()]);
        assert!(pkg.report.contains("snap reverted a"));
    }

    #[test]
    fn write_read_round_trip_and_tampering() {
        let (p, cs, l) = scene(
            "region room; object lamp; object desk; lamp.color <- \"red\"; assert lamp.pos.x < desk.pos.x;",
            vec![
                SceneObject::new("lamp", Vec3::new(0.3, 0.5, 0.3), "room").at(Vec3::new(-1.0, 0.25, 0.1234567)).rotated(Vec3::new(0.0, 90.0, 0.0)),
                SceneObject::new("desk", Vec3::new(1.2, 0.75, 0.6), "room").at(Vec3::new(1.0, 0.375, 0.0)),
            ],
        );
        let pkg = package(&p, &cs, &l, &[decision("lamp", Some(Vec3::ONE)), decision("desk", Some(Vec3::new(1.2, 0.75, 0.6)))]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        pkg.write(dir.path()).unwrap();
        let back = ScenePackage::read(dir.path()).unwrap();
        assert_eq!(back, pkg);
        assert_eq!(back.to_layout().unwrap().object("lamp").unwrap().transform, l.objects[0].transform);
        assert_eq!(parse(&back.metadata).unwrap(), p);
        assert_eq!(back.verdicts_for("desk").len(), 4);

        let mut doc = pkg.document.clone();
        doc.objects.retain(|o| o.id != "desk");
        std::fs::write(dir.path().join(SCENE_FILE), serde_json::to_string(&doc).unwrap()).unwrap();
        let e = ScenePackage::read(dir.path()).unwrap_err();
        assert!(e.to_string().contains("`desk`"), "{e}");
    }

    #[test]
    fn empty_scene_package() {
        let (p, cs, l) = scene("region room;", vec![]);
        let pkg = package(&p, &cs, &l, &[]).unwrap();
        assert!(pkg.document.objects.is_empty());
        assert_eq!(pkg.document.regions[0].walls.len(), 4);
        let dir = tempfile::tempdir().unwrap();
        pkg.write(dir.path()).unwrap();
        assert_eq!(ScenePackage::read(dir.path()).unwrap(), pkg);
    }
}
