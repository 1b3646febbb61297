use std::path::{Path, PathBuf};

use sthl_core::assets::AssetDatabase;
use sthl_core::dsl::{check, parse};
use sthl_core::export::{ExportError, ScenePackage};
use sthl_core::pipeline::{self, PipelineOptions};
use sthl_core::scene::SceneSpec;
use sthl_core::solver::{solve, SolverConfig, Termination};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn scene(stem: &str) -> (String, SceneSpec) {
    let base = fixtures().join(stem);
    let src = std::fs::read_to_string(base.with_extension("sthl")).unwrap();
    let spec = SceneSpec::load(&base.with_extension("scene.toml")).unwrap();
    (src, spec)
}

#[test]
fn corpus_type_checks() {
    let mut n = 0;
    for entry in std::fs::read_dir(fixtures().join("corpus")).unwrap() {
        let p = entry.unwrap().path();
        let src = std::fs::read_to_string(&p).unwrap();
        check(&src).unwrap_or_else(|d| panic!("{}: {d}", p.display()));
        n += 1;
    }
    assert!(n >= 30);
}

#[test]
fn livingroom_solves_fully() {
    let (src, spec) = scene("livingroom");
    let (typed, compiled) = pipeline::formalize(&src, 0).unwrap();
    let layout = pipeline::initial_layout(&typed, &compiled, &spec, None).unwrap();
    let report = solve(&layout, &compiled.constraints, &SolverConfig::default()).unwrap();
    assert_eq!(report.best.ratio, 1.0);
    assert_eq!(report.terminated, Termination::AllSatisfied);
}

#[test]
fn contradiction_keeps_best_partial_layout() {
    let (src, spec) = scene("contradiction");
    let (typed, compiled) = pipeline::formalize(&src, 0).unwrap();
    let layout = pipeline::initial_layout(&typed, &compiled, &spec, None).unwrap();
    let report = solve(&layout, &compiled.constraints, &SolverConfig::default()).unwrap();
    assert_eq!(report.terminated, Termination::IterationLimit);
    assert!(report.best.ratio < 1.0 && report.best.ratio > 0.5);
}

#[test]
fn package_with_unknown_manifest_target_is_rejected() {
    let (src, spec) = scene("livingroom");
    let db = AssetDatabase::load(&fixtures().join("assets/index.tsv")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    pipeline::run(&src, &spec, &db, &PipelineOptions::default(), dir.path()).unwrap();
    let manifest = dir.path().join("manifest.tsv");
    let mut text = std::fs::read_to_string(&manifest).unwrap();
    text.push_str("ghost\tobject\tmodels/x.glb\tretrieved\t0.9\tfalse\t1,1,1\ta ghost\n");
    std::fs::write(&manifest, text).unwrap();
    match ScenePackage::read(dir.path()) {
        Err(ExportError::Format { file, line, message }) => {
            assert_eq!((file.as_str(), line), ("manifest.tsv", 13));
            assert!(message.contains("`ghost`"), "{message}");
        }
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn regenerating_a_region_with_an_edited_program() {
    let (src, spec) = scene("solver/scene_04");
    let dir = tempfile::tempdir().unwrap();
    let pkg = pipeline::run(&src, &spec, &AssetDatabase::default(), &PipelineOptions::default(), dir.path()).unwrap();
    let edited = parse(&format!("{src}\nassert sofa.pos.x > 8;\n")).unwrap();
    let again = pkg.regenerate_region(&edited, "study", &SolverConfig::default()).unwrap();
    assert_eq!(again.program().unwrap(), edited);
    let sofa = again.document.objects.iter().find(|o| o.id == "sofa").unwrap();
    assert!(sofa.position[0] > 8.0, "{:?}", sofa.position);
    for (old, new) in pkg.document.objects.iter().zip(&again.document.objects).filter(|(o, _)| o.region != "study") {
        assert_eq!((old.position, old.rotation_xzy), (new.position, new.rotation_xzy), "{}", old.id);
    }
}
