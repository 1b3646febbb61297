//! Stage wiring: formalized program (parse, check, compile) → asset
//! selection → layout solving → package export. Each stage's output is a
//! plain serializable artifact, so any stage can be re-run from the kept
//! output of the one before it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assets::{
    AssetDatabase, AssetDecision, AssetError, AssetSelector, HashSimilarity, PlaceholderGenerator, SimilarityProvider,
    TrigramSimilarity, Weights, DEFAULT_TAU,
};
use crate::constraints::{compile_program, CompiledProgram, EvalContext};
use crate::dsl::{check, print_program, Diagnostics, TypedProgram};
use crate::export::{assemble, ExportError, ExportInput, ScenePackage};
use crate::scene::{build_layout, SceneError, SceneLayout, SceneSpec};
use crate::solver::{solve, SolveError, SolveReport, SolverConfig};

pub const CONSTRAINTS_FILE: &str = "constraints.txt";
pub const LAYOUT_FILE: &str = "layout.json";
pub const ASSETS_FILE: &str = "assets.json";
pub const SOLVE_FILE: &str = "solve.json";
pub const ITERATIONS_DIR: &str = "iterations";

#[derive(thiserror::Error, Debug)]
pub enum PipelineError {
    #[error("{0}")]
    Program(Diagnostics),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Asset(#[from] AssetError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Artifact { path: PathBuf, message: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    Hash,
    #[default]
    Trigram,
}

impl Similarity {
    pub fn provider(self) -> &'static dyn SimilarityProvider {
        match self {
            Similarity::Hash => &HashSimilarity,
            Similarity::Trigram => &TrigramSimilarity,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetOptions {
    pub tau: f64,
    pub weights: Weights,
    pub similarity: Similarity,
}

impl Default for AssetOptions {
    fn default() -> Self {
        AssetOptions { tau: DEFAULT_TAU, weights: Weights::default(), similarity: Similarity::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineOptions {
    pub solver: SolverConfig,
    pub assets: AssetOptions,
    /// Wall thickness override for every region.
    pub eta: Option<f64>,
    /// Directory for per-stage artifacts.
    pub intermediates: Option<PathBuf>,
}

/// Output of asset selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetsArtifact {
    pub options: AssetOptions,
    pub decisions: Vec<AssetDecision>,
}

/// Output of solving: everything export needs besides assets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveArtifact {
    /// Canonical program text.
    pub program: String,
    pub solver: SolverConfig,
    pub report: SolveReport,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io { path: path.to_path_buf(), message: e.to_string() }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Artifact { path: path.to_path_buf(), message: e.to_string() })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Parses, checks and compiles a program.
pub fn formalize(source: &str, seed: u64) -> Result<(TypedProgram, CompiledProgram), PipelineError> {
    let typed = check(source).map_err(PipelineError::Program)?;
    let compiled = compile_program(&typed, seed).map_err(|mut d| {
        d.locate(source);
        PipelineError::Program(d)
    })?;
    Ok((typed, compiled))
}

/// Initial layout from the program and its scene file.
pub fn initial_layout(
    typed: &TypedProgram,
    compiled: &CompiledProgram,
    spec: &SceneSpec,
    eta: Option<f64>,
) -> Result<SceneLayout, PipelineError> {
    let mut layout = build_layout(&typed.program, &compiled.props, spec)?;
    if let Some(eta) = eta {
        layout.regions.iter_mut().for_each(|r| r.wall_thickness = eta);
    }
    layout.validate()?;
    Ok(layout)
}

pub fn select_assets(layout: &SceneLayout, db: &AssetDatabase, opts: &AssetOptions) -> Result<AssetsArtifact, PipelineError> {
    let selector = AssetSelector {
        db,
        tau: opts.tau,
        weights: opts.weights,
        provider: opts.similarity.provider(),
        generator: Some(&PlaceholderGenerator),
    };
    Ok(AssetsArtifact { options: opts.clone(), decisions: selector.decide_scene(layout)? })
}

pub fn solve_stage(
    typed: &TypedProgram,
    compiled: &CompiledProgram,
    layout: &SceneLayout,
    cfg: &SolverConfig,
) -> Result<SolveArtifact, PipelineError> {
    let report = solve(layout, &compiled.constraints, cfg)?;
    Ok(SolveArtifact { program: print_program(&typed.program), solver: cfg.clone(), report })
}

/// Package from a solve artifact and asset decisions. The program is
/// recompiled from its canonical text with the recorded seed.
pub fn export_stage(solved: &SolveArtifact, decisions: &[AssetDecision]) -> Result<ScenePackage, PipelineError> {
    let (typed, compiled) = formalize(&solved.program, solved.solver.seed)?;
    Ok(assemble(&ExportInput {
        program: &typed.program,
        layout: &solved.report.best.layout,
        cs: &compiled.constraints,
        decisions,
        solver: &solved.solver,
        report: Some(&solved.report),
        snap_only: None,
    })?)
}

/// One line per compiled constraint with its provenance and verdict on
/// `layout`.
pub fn constraints_listing(compiled: &CompiledProgram, layout: &SceneLayout) -> Result<String, PipelineError> {
    let ctx = EvalContext::new(layout, &compiled.constraints).map_err(ExportError::from)?;
    Ok(compiled.constraints.report(&ctx).map_err(ExportError::from)?)
}

/// Runs every stage and writes the package to `out`.
pub fn run(
    source: &str,
    spec: &SceneSpec,
    db: &AssetDatabase,
    opts: &PipelineOptions,
    out: &Path,
) -> Result<ScenePackage, PipelineError> {
    opts.solver.validate()?;
    let (typed, compiled) = formalize(source, opts.solver.seed)?;
    let layout = initial_layout(&typed, &compiled, spec, opts.eta)?;
    let assets = select_assets(&layout, db, &opts.assets)?;
    let solved = solve_stage(&typed, &compiled, &layout, &opts.solver)?;
    if let Some(dir) = &opts.intermediates {
        write_text(&dir.join(CONSTRAINTS_FILE), &constraints_listing(&compiled, &layout)?)?;
        write_json(&dir.join(LAYOUT_FILE), &layout)?;
        write_json(&dir.join(ASSETS_FILE), &assets)?;
        write_json(&dir.join(SOLVE_FILE), &solved)?;
        for it in &solved.report.iterations {
            write_json(&dir.join(ITERATIONS_DIR).join(format!("iter-{:03}.json", it.iteration)), &it.layout)?;
        }
    }
    let package = export_stage(&solved, &assets.decisions)?;
    package.write(out)?;
    Ok(package)
}

/// Scene file next to a program: `<stem>.scene.toml`.
pub fn sidecar_scene_path(program: &Path) -> PathBuf {
    let stem = program.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    program.with_file_name(format!("{stem}.scene.toml"))
}

/// Loads the sidecar scene file when present, otherwise an empty spec.
pub fn load_sidecar(program: &Path) -> Result<SceneSpec, PipelineError> {
    let path = sidecar_scene_path(program);
    if path.exists() {
        Ok(SceneSpec::load(&path)?)
    } else {
        Ok(SceneSpec::default())
    }
}

/// Asset decisions keyed by target.
pub fn decisions_by_target(decisions: &[AssetDecision]) -> BTreeMap<&str, &AssetDecision> {
    decisions.iter().map(|d| (d.target.as_str(), d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = r#"region room; object desk; object lamp; object chair;
        allowCollide(desk, chair);
        assert lamp.pos.y > desk.pos.y;
        assert chair.pos.z < desk.pos.z;"#;
    const SCENE: &str = r#"
[regions.room]
vertices = [[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0]]
floor_y = 0.0
height = 2.5

[objects.desk]
dimensions = [1.2, 0.75, 0.6]

[objects.lamp]
dimensions = [0.2, 0.4, 0.2]

[objects.chair]
dimensions = [0.5, 0.9, 0.5]
"#;

    #[test]
    fn stages_reproduce_the_package_from_artifacts() {
        let spec = SceneSpec::parse(SCENE).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let opts = PipelineOptions { intermediates: Some(dir.path().join("mid")), ..Default::default() };
        let pkg = run(SRC, &spec, &AssetDatabase::default(), &opts, &dir.path().join("out")).unwrap();
        assert!(pkg.document.metadata.satisfaction_ratio == 1.0, "{}", pkg.report);
        for f in [CONSTRAINTS_FILE, LAYOUT_FILE, ASSETS_FILE, SOLVE_FILE] {
            assert!(dir.path().join("mid").join(f).exists(), "{f}");
        }
        assert!(dir.path().join("mid").join(ITERATIONS_DIR).join("iter-000.json").exists());

        let solved: SolveArtifact = read_json(&dir.path().join("mid").join(SOLVE_FILE)).unwrap();
        let assets: AssetsArtifact = read_json(&dir.path().join("mid").join(ASSETS_FILE)).unwrap();
        let again = export_stage(&solved, &assets.decisions).unwrap();
        assert_eq!(again.scene_json(), pkg.scene_json());
        assert_eq!(again.manifest_tsv(), pkg.manifest_tsv());

        let second = run(SRC, &spec, &AssetDatabase::default(), &PipelineOptions::default(), &dir.path().join("out2")).unwrap();
        assert_eq!(second.scene_json(), pkg.scene_json());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_scene_path(Path::new("fixtures/livingroom.sthl")), Path::new("fixtures/livingroom.scene.toml"));
    }
}
