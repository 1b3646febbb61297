//! Asset acquisition: query formulation, hybrid retrieval scoring, the
//! retrieve-or-generate decision and canonical-orientation check plans.
//! Similarity models, generators and orientation judges are traits; the
//! crate ships deterministic implementations.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::scene::{Region, SceneLayout, SceneObject};

/// Retrieval threshold used when none is given.
pub const DEFAULT_TAU: f64 = 0.652;
pub const DEFAULT_VISUAL_WEIGHT: f64 = 100.0;
pub const DEFAULT_SEMANTIC_WEIGHT: f64 = 1.0;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum AssetError {
    #[error("retrieval weights must be non-negative and not both zero (got {visual}, {semantic})")]
    Weight { visual: f64, semantic: f64 },
    #[error("no asset available for \"{0}\": database is empty and no generator is configured")]
    NoAsset(String),
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    Object,
    Floor,
    Wall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetQuery {
    pub text: String,
    pub kind: QueryKind,
    pub color: String,
    pub category: String,
    pub material: String,
    pub features: String,
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Builds the query text. Objects read
/// `a 3D model of a <color> <category> made with <material> that is <features>`,
/// surfaces `a <color> floor|wall made of <material> that is <features>`.
/// Empty fields are dropped together with their connective.
pub fn formulate_query(kind: QueryKind, color: &str, category: &str, material: &str, features: &str) -> AssetQuery {
    let (color, category, material, features) = (squash(color), squash(category), squash(material), squash(features));
    let mut words: Vec<String> = Vec::new();
    let mut push = |s: &str| {
        if !s.is_empty() {
            words.push(s.to_string())
        }
    };
    match kind {
        QueryKind::Object => {
            push("a 3D model of a");
            push(&color);
            push(&category);
            if !material.is_empty() {
                push("made with");
                push(&material);
            }
        }
        QueryKind::Floor | QueryKind::Wall => {
            push("a");
            push(&color);
            push(if kind == QueryKind::Floor { "floor" } else { "wall" });
            if !material.is_empty() {
                push("made of");
                push(&material);
            }
        }
    }
    if !features.is_empty() {
        push("that is");
        push(&features);
    }
    AssetQuery { text: words.join(" "), kind, color, category, material, features }
}

pub fn object_query(obj: &SceneObject) -> AssetQuery {
    formulate_query(QueryKind::Object, &obj.color, &obj.category, &obj.material, &obj.features)
}

pub fn surface_query(region: &Region, kind: QueryKind) -> AssetQuery {
    let s = if kind == QueryKind::Wall { &region.wall } else { &region.floor };
    formulate_query(kind, &s.color, "", &s.material, &s.features)
}

/// One database entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub id: String,
    pub model_path: String,
    pub thumbnail_path: String,
    pub description: String,
    /// Bounding-box extents of the model as authored, if known.
    pub native_extents: Option<Vec3>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetDatabase {
    pub records: Vec<AssetRecord>,
}

impl AssetDatabase {
    /// Parses an index: one asset per line,
    /// `id<TAB>model_path<TAB>thumbnail_path<TAB>description[<TAB>x,y,z]`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str, path: &str) -> Result<Self, AssetError> {
        let mut records = Vec::new();
        let mut ids = BTreeSet::new();
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| AssetError::Format { path: path.to_string(), line: line_no, message };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 && cols.len() != 5 {
                return Err(err(format!("expected 4 or 5 tab-separated columns, found {}", cols.len())));
            }
            if cols[0].is_empty() {
                return Err(err("empty asset id".into()));
            }
            if !ids.insert(cols[0].to_string()) {
                return Err(err(format!("duplicate asset id `{}`", cols[0])));
            }
            let native_extents = match cols.get(4) {
                None => None,
                Some(s) => {
                    let parts: Vec<f64> = s
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| err(format!("bad extents `{s}`: {e}")))?;
                    if parts.len() != 3 || parts.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                        return Err(err(format!("extents must be three positive numbers, got `{s}`")));
                    }
                    Some(Vec3::new(parts[0], parts[1], parts[2]))
                }
            };
            records.push(AssetRecord {
                id: cols[0].to_string(),
                model_path: cols[1].to_string(),
                thumbnail_path: cols[2].to_string(),
                description: cols[3].to_string(),
                native_extents,
            });
        }
        Ok(AssetDatabase { records })
    }

    pub fn load(path: &Path) -> Result<Self, AssetError> {
        let text = std::fs::read_to_string(path).map_err(|e| AssetError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Visual and semantic similarity between a candidate and a query, each in [0, 1].
pub trait SimilarityProvider {
    fn visual(&self, candidate: &AssetRecord, query: &AssetQuery) -> f64;
    fn semantic(&self, candidate: &AssetRecord, query: &AssetQuery) -> f64;
}

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for b in p.bytes().chain(std::iter::once(0)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

fn unit_interval(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic stand-in scores in [0, 1), hashed from the candidate id and
/// the query text.
#[derive(Clone, Copy, Debug, Default)]
pub struct HashSimilarity;

impl SimilarityProvider for HashSimilarity {
    fn visual(&self, c: &AssetRecord, q: &AssetQuery) -> f64 {
        unit_interval(fnv1a(&["visual", &c.id, &q.text]))
    }

    fn semantic(&self, c: &AssetRecord, q: &AssetQuery) -> f64 {
        unit_interval(fnv1a(&["semantic", &c.id, &q.text]))
    }
}

/// Character-trigram cosine similarity between the query and the candidate
/// description (used for both scores).
#[derive(Clone, Copy, Debug, Default)]
pub struct TrigramSimilarity;

pub fn trigram_cosine(a: &str, b: &str) -> f64 {
    fn grams(s: &str) -> std::collections::BTreeMap<String, f64> {
        let padded: Vec<char> = format!("  {} ", s.to_lowercase()).chars().collect();
        let mut m = std::collections::BTreeMap::new();
        for w in padded.windows(3) {
            *m.entry(w.iter().collect::<String>()).or_insert(0.0) += 1.0;
        }
        m
    }
    let (ga, gb) = (grams(a), grams(b));
    let dot: f64 = ga.iter().filter_map(|(k, v)| gb.get(k).map(|w| v * w)).sum();
    let na: f64 = ga.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = gb.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

impl SimilarityProvider for TrigramSimilarity {
    fn visual(&self, c: &AssetRecord, q: &AssetQuery) -> f64 {
        trigram_cosine(&c.description, &q.text)
    }

    fn semantic(&self, c: &AssetRecord, q: &AssetQuery) -> f64 {
        trigram_cosine(&c.description, &q.text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub visual: f64,
    pub semantic: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { visual: DEFAULT_VISUAL_WEIGHT, semantic: DEFAULT_SEMANTIC_WEIGHT }
    }
}

/// Weighted mean `(λv·visual + λt·semantic) / (λv + λt)`.
pub fn score_retrieval(visual: f64, semantic: f64, w: Weights) -> Result<f64, AssetError> {
    let total = w.visual + w.semantic;
    if !(w.visual >= 0.0 && w.semantic >= 0.0 && total > 0.0) {
        return Err(AssetError::Weight { visual: w.visual, semantic: w.semantic });
    }
    Ok((w.visual * visual + w.semantic * semantic) / total)
}

/// A generated model and its authored extents.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedAsset {
    pub model_ref: String,
    pub native_extents: Vec3,
}

pub trait Generator {
    fn generate(&self, query: &AssetQuery) -> GeneratedAsset;
}

/// Produces a unit-cube placeholder whose handle is derived from the query.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlaceholderGenerator;

impl Generator for PlaceholderGenerator {
    fn generate(&self, query: &AssetQuery) -> GeneratedAsset {
        GeneratedAsset { model_ref: format!("generated/{:016x}.glb", fnv1a(&[&query.text])), native_extents: Vec3::ONE }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Retrieved,
    Generated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetDecision {
    /// Object id, or `<region>.floor` / `<region>.wall` for surfaces.
    pub target: String,
    pub query: AssetQuery,
    pub best: Option<Candidate>,
    pub verdict: Verdict,
    /// Retrieved although the best score is under the threshold, because no
    /// generator was available.
    pub below_threshold: bool,
    pub model_ref: String,
    pub native_extents: Option<Vec3>,
}

/// Best-scoring candidate; the first one wins ties.
pub fn best_candidate<'a>(
    query: &AssetQuery,
    db: &'a AssetDatabase,
    weights: Weights,
    provider: &dyn SimilarityProvider,
) -> Result<Option<(&'a AssetRecord, f64)>, AssetError> {
    let mut best: Option<(&AssetRecord, f64)> = None;
    for r in &db.records {
        let s = score_retrieval(provider.visual(r, query), provider.semantic(r, query), weights)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((r, s));
        }
    }
    Ok(best)
}

/// Retrieves the best candidate when its score reaches `tau`, otherwise
/// generates. Without a generator the best candidate is used anyway and
/// flagged `below_threshold`.
pub fn decide(
    target: &str,
    query: AssetQuery,
    db: &AssetDatabase,
    tau: f64,
    weights: Weights,
    provider: &dyn SimilarityProvider,
    generator: Option<&dyn Generator>,
) -> Result<AssetDecision, AssetError> {
    score_retrieval(0.0, 0.0, weights)?;
    let best = best_candidate(&query, db, weights, provider)?;
    let retrieved = |r: &AssetRecord, s: f64, below: bool, query: AssetQuery| AssetDecision {
        target: target.to_string(),
        query,
        best: Some(Candidate { id: r.id.clone(), score: s }),
        verdict: Verdict::Retrieved,
        below_threshold: below,
        model_ref: r.model_path.clone(),
        native_extents: r.native_extents,
    };
    match (best, generator) {
        (Some((r, s)), _) if s >= tau => Ok(retrieved(r, s, false, query)),
        (best, Some(g)) => {
            let out = g.generate(&query);
            Ok(AssetDecision {
                target: target.to_string(),
                query,
                best: best.map(|(r, s)| Candidate { id: r.id.clone(), score: s }),
                verdict: Verdict::Generated,
                below_threshold: false,
                model_ref: out.model_ref,
                native_extents: Some(out.native_extents),
            })
        }
        (Some((r, s)), None) => Ok(retrieved(r, s, true, query)),
        (None, None) => Err(AssetError::NoAsset(query.text)),
    }
}

/// Settings shared by every decision of a scene.
pub struct AssetSelector<'a> {
    pub db: &'a AssetDatabase,
    pub tau: f64,
    pub weights: Weights,
    pub provider: &'a dyn SimilarityProvider,
    pub generator: Option<&'a dyn Generator>,
}

impl AssetSelector<'_> {
    /// One decision per object in layout order, then floor and wall per
    /// region. Surfaces are only retrieved, and are skipped when the
    /// database is empty.
    pub fn decide_scene(&self, layout: &SceneLayout) -> Result<Vec<AssetDecision>, AssetError> {
        let mut out = Vec::new();
        for o in &layout.objects {
            out.push(decide(&o.id, object_query(o), self.db, self.tau, self.weights, self.provider, self.generator)?);
        }
        if self.db.is_empty() {
            return Ok(out);
        }
        for r in &layout.regions {
            for (kind, suffix) in [(QueryKind::Floor, "floor"), (QueryKind::Wall, "wall")] {
                let target = format!("{}.{suffix}", r.id);
                out.push(decide(&target, surface_query(r, kind), self.db, self.tau, self.weights, self.provider, None)?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
    Y,
}

/// Axes checked, in order.
pub const ORIENTATION_AXES: [Axis; 3] = [Axis::X, Axis::Z, Axis::Y];
pub const ORIENTATION_ANGLES: [f64; 4] = [0.0, 90.0, 180.0, 270.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisCheck {
    pub axis: Axis,
    /// Views to render, one per rotation angle.
    pub views: [f64; 4],
    /// Row-major 2×2 arrangement of the views in the composite image.
    pub grid: [[f64; 2]; 2],
    /// Correction chosen for this axis (degrees).
    pub correction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationPlan {
    pub asset: String,
    pub checks: Vec<AxisCheck>,
    /// Accumulated corrective rotation (x, y, z degrees).
    pub correction: Vec3,
}

/// Picks the rotation about `axis` that makes the asset upright and
/// front-facing, given the composite grid and the corrections chosen so far.
pub trait OrientationProvider {
    fn choose(&self, asset: &str, axis: Axis, grid: &[[f64; 2]; 2], applied: Vec3) -> f64;
}

/// Check plan for one asset: for each axis (x, z, y) four views at 0°, 90°,
/// 180° and 270° arranged in a 2×2 grid. Provider answers are snapped to the
/// nearest view angle; with no provider every correction is 0.
pub fn orientation_check_plan(asset: &str, provider: Option<&dyn OrientationProvider>) -> OrientationPlan {
    let mut correction = Vec3::ZERO;
    let mut checks = Vec::new();
    for axis in ORIENTATION_AXES {
        let grid = [[ORIENTATION_ANGLES[0], ORIENTATION_ANGLES[1]], [ORIENTATION_ANGLES[2], ORIENTATION_ANGLES[3]]];
        let chosen = provider.map_or(0.0, |p| p.choose(asset, axis, &grid, correction));
        let snapped = ((chosen / 90.0).round() * 90.0).rem_euclid(360.0);
        match axis {
            Axis::X => correction.x = snapped,
            Axis::Y => correction.y = snapped,
            Axis::Z => correction.z = snapped,
        }
        checks.push(AxisCheck { axis, views: ORIENTATION_ANGLES, grid, correction: snapped });
    }
    OrientationPlan { asset: asset.to_string(), checks, correction }
}

/// Resolves a model path relative to the index file's directory.
pub fn resolve_model_path(index: &Path, model_ref: &str) -> PathBuf {
    let p = Path::new(model_ref);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        index.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;

    #[test]
    fn query_templates() {
        let q = formulate_query(QueryKind::Object, "red", "armchair", "velvet", "plush and modern");
        assert_eq!(q.text, "a 3D model of a red armchair made with velvet that is plush and modern");
        assert_eq!(formulate_query(QueryKind::Object, "", "lamp", "", "").text, "a 3D model of a lamp");
        assert_eq!(formulate_query(QueryKind::Wall, "white", "", "plaster", "matte").text, "a white wall made of plaster that is matte");
        assert_eq!(formulate_query(QueryKind::Floor, " dark  brown", "", "oak", "").text, "a dark brown floor made of oak");
    }

    #[test]
    fn weighted_score() {
        let w = Weights::default();
        assert_eq!(score_retrieval(1.0, 1.0, w).unwrap(), 1.0);
        assert!((score_retrieval(0.5, 0.9, w).unwrap() - 50.9 / 101.0).abs() < 1e-15);
        assert_eq!(score_retrieval(0.2, 0.7, Weights { visual: 0.0, semantic: 1.0 }).unwrap(), 0.7);
        assert!(matches!(score_retrieval(0.2, 0.7, Weights { visual: 0.0, semantic: 0.0 }), Err(AssetError::Weight { .. })));
    }

    struct Fixed(f64);

    impl SimilarityProvider for Fixed {
        fn visual(&self, _: &AssetRecord, _: &AssetQuery) -> f64 {
            self.0
        }
        fn semantic(&self, _: &AssetRecord, _: &AssetQuery) -> f64 {
            self.0
        }
    }

    fn db() -> AssetDatabase {
        AssetDatabase::parse("a\tm/a.glb\tt/a.png\ta lamp\t1,2,1\nb\tm/b.glb\tt/b.png\ta chair\n", "index.tsv").unwrap()
    }

    #[test]
    fn threshold_rule() {
        let q = formulate_query(QueryKind::Object, "", "lamp", "", "");
        let gen = PlaceholderGenerator;
        let run = |s: f64, tau: f64| decide("lamp", q.clone(), &db(), tau, Weights::default(), &Fixed(s), Some(&gen)).unwrap();
        let d = run(0.7, DEFAULT_TAU);
        assert_eq!(d.verdict, Verdict::Retrieved);
        assert_eq!(d.model_ref, "m/a.glb");
        assert_eq!(d.native_extents, Some(Vec3::new(1.0, 2.0, 1.0)));
        assert_eq!(run(0.6, DEFAULT_TAU).verdict, Verdict::Generated);
        assert_eq!(run(0.0, 0.0).verdict, Verdict::Retrieved);
        assert_eq!(run(0.999, 1.0).verdict, Verdict::Generated);
        let none = decide("lamp", q.clone(), &db(), 0.9, Weights::default(), &Fixed(0.5), None).unwrap();
        assert!(none.below_threshold && none.verdict == Verdict::Retrieved);
        let empty = AssetDatabase::default();
        assert_eq!(
            decide("lamp", q.clone(), &empty, 0.5, Weights::default(), &HashSimilarity, None),
            Err(AssetError::NoAsset("a 3D model of a lamp".into()))
        );
        assert_eq!(decide("lamp", q, &empty, 0.5, Weights::default(), &HashSimilarity, Some(&gen)).unwrap().verdict, Verdict::Generated);
    }

    #[test]
    fn index_errors_name_the_line() {
        let e = AssetDatabase::parse("# header\na\tb\tc\td\nx\ty\n", "db.tsv").unwrap_err();
        assert_eq!(e.to_string(), "db.tsv:3: expected 4 or 5 tab-separated columns, found 2");
        assert!(AssetDatabase::parse("a\tb\tc\td\t1,0,1\n", "db.tsv").is_err());
        assert!(AssetDatabase::parse("a\tb\tc\td\na\tb\tc\td\n", "db.tsv").is_err());
    }

    #[test]
    fn hash_scores_are_below_one() {
        let q = formulate_query(QueryKind::Object, "red", "sofa", "", "");
        for r in &db().records {
            for s in [HashSimilarity.visual(r, &q), HashSimilarity.semantic(r, &q)] {
                assert!((0.0..1.0).contains(&s));
            }
        }
        assert_eq!(HashSimilarity.visual(&db().records[0], &q), HashSimilarity.visual(&db().records[0], &q));
    }

    #[test]
    fn trigram_similarity() {
        assert!((trigram_cosine("wooden table", "wooden table") - 1.0).abs() < 1e-12);
        assert!(trigram_cosine("wooden table", "a 3D model of a wooden table") > trigram_cosine("blue sofa", "a 3D model of a wooden table"));
        assert_eq!(trigram_cosine("", "x"), 0.0);
    }

    struct Scripted(RefCell<Vec<Axis>>);

    impl OrientationProvider for Scripted {
        fn choose(&self, _: &str, axis: Axis, _: &[[f64; 2]; 2], applied: Vec3) -> f64 {
            self.0.borrow_mut().push(axis);
            match axis {
                Axis::X => 90.0,
                Axis::Z => {
                    assert_eq!(applied.x, 90.0);
                    0.0
                }
                Axis::Y => 268.0,
            }
        }
    }

    #[test]
    fn orientation_plans() {
        let p = orientation_check_plan("m/a.glb", None);
        assert_eq!(p.correction, Vec3::ZERO);
        assert_eq!(p.checks.iter().map(|c| c.axis).collect::<Vec<_>>(), vec![Axis::X, Axis::Z, Axis::Y]);
        let s = Scripted(RefCell::new(Vec::new()));
        let p = orientation_check_plan("m/a.glb", Some(&s));
        assert_eq!(*s.0.borrow(), vec![Axis::X, Axis::Z, Axis::Y]);
        assert_eq!(p.checks[0].correction, 90.0);
        assert_eq!(p.correction, Vec3::new(90.0, 270.0, 0.0));
    }
}
