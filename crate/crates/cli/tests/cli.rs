use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn sthl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sthl")).args(args).env_remove("STHL_SEED").output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn parse_reports_statement_count() {
    let f = fixtures().join("livingroom.sthl");
    let o = sthl(&["parse", path(&f)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("statements"));
}

#[test]
fn syntax_error_exits_1_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.sthl");
    std::fs::write(&f, "object a;\nassert a.pos.x < ;\n").unwrap();
    let o = sthl(&["check", path(&f)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.sthl:2:"), "{}", stderr(&o));
}

#[test]
fn type_error_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("typed.sthl");
    std::fs::write(&f, "object a;\nassert a.color < 2;\n").unwrap();
    assert_eq!(sthl(&["check", path(&f)]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(sthl(&["solve"]).status.code(), Some(2));
    assert_eq!(sthl(&["frobnicate"]).status.code(), Some(2));
    let f = fixtures().join("livingroom.sthl");
    assert_eq!(sthl(&["solve", path(&f), "--k", "0"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let o = sthl(&["pipeline", "--from-text", "a cosy room", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("not supported"));
}

#[test]
fn help_exits_0() {
    assert_eq!(sthl(&["--help"]).status.code(), Some(0));
}

#[test]
fn fmt_output_is_a_fixed_point() {
    let f = fixtures().join("corpus").join("33_kitchen.sthl");
    let once = sthl(&["fmt", path(&f)]);
    assert!(once.status.success());
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("k.sthl");
    std::fs::write(&g, &once.stdout).unwrap();
    let twice = sthl(&["fmt", path(&g)]);
    assert_eq!(once.stdout, twice.stdout);
}

#[test]
fn check_writes_constraint_listing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.txt");
    let f = fixtures().join("livingroom.sthl");
    let o = sthl(&["check", path(&f), "--constraints", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 61);
    assert!(text.contains("hidden-collision"));
}

#[test]
fn contradiction_reaches_iteration_limit_and_still_succeeds() {
    let f = fixtures().join("contradiction.sthl");
    let o = sthl(&["solve", path(&f)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("terminated iteration-limit"), "{}", stderr(&o));
}

#[test]
fn staged_commands_match_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let f = fixtures().join("livingroom.sthl");
    let db = fixtures().join("assets").join("index.tsv");
    let (solve_json, assets_json) = (d.join("solve.json"), d.join("assets.json"));
    assert!(sthl(&["solve", path(&f), "--seed", "5", "--out", path(&solve_json)]).status.success());
    assert!(sthl(&["assets", path(&f), "--db", path(&db), "--out", path(&assets_json)]).status.success());
    let o = sthl(&["export", path(&solve_json), "--asset-decisions", path(&assets_json), "--out", path(&d.join("staged"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = sthl(&["pipeline", path(&f), "--seed", "5", "--db", path(&db), "--out", path(&d.join("whole")), "--keep-intermediates"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for file in ["scene.json", "manifest.tsv", "metadata.sthl"] {
        assert_eq!(std::fs::read(d.join("staged").join(file)).unwrap(), std::fs::read(d.join("whole").join(file)).unwrap(), "{file}");
    }
    assert!(d.join("whole/intermediates/solve.json").exists());

    let o = sthl(&["eval", "--package", path(&d.join("whole")), "--out", path(&d.join("eval.json"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("eval.json")).unwrap()).unwrap();
    assert_eq!(v["total"], 61);
}

#[test]
fn eval_scores_program_pair() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scores.json");
    let (gen, gt) = (fixtures().join("eval/gen.sthl"), fixtures().join("eval/gt.sthl"));
    let o = sthl(&["eval", "--gen", path(&gen), "--gt", path(&gt), "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    for part in ["objects", "layout", "overall"] {
        let f1 = v[part]["f1"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&f1), "{part}");
    }
    let o = sthl(&["eval", "--gen", path(&gen), "--gt", path(&gt), "--tau-o", "0.5", "--tau-l", "0.6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixtures().join("livingroom.sthl");
    let run = |name: &str, env_seed: Option<&str>, flag: &[&str]| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_sthl"));
        cmd.args(["solve", path(&f), "--out", path(&out)]).args(flag).env_remove("STHL_SEED");
        if let Some(s) = env_seed {
            cmd.env("STHL_SEED", s);
        }
        assert!(cmd.output().unwrap().status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("env.json", Some("8"), &[]), run("flag.json", None, &["--seed", "8"]));
}
