use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sthl_core::assets::{AssetDatabase, Weights};
use sthl_core::dsl::{check, parse, print_program, Diagnostics};
use sthl_core::export::ScenePackage;
use sthl_core::metrics::{program_resemblance, satisfaction_counts, Embedder, TableEmbedder, TrigramEmbedder};
use sthl_core::pipeline::{
    self, export_stage, formalize, initial_layout, load_sidecar, read_json, select_assets, solve_stage,
    write_json, write_text, AssetOptions, AssetsArtifact, PipelineError, PipelineOptions, Similarity, SolveArtifact,
};
use sthl_core::scene::SceneSpec;
use sthl_core::solver::SolverConfig;

/// Toolchain for constraint-described 3D scenes: parse and check programs,
/// solve layouts, select assets, export scene packages and score results.
#[derive(Parser, Debug)]
#[command(name = "sthl", version)]
struct Cli {
    /// Print more detail to standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a program and report syntax errors.
    Parse {
        file: PathBuf,
        /// Write the syntax tree as JSON.
        #[arg(long)]
        ast: Option<PathBuf>,
    },
    /// Print a program in canonical form.
    Fmt {
        file: PathBuf,
        /// Rewrite the file in place instead of printing.
        #[arg(long)]
        write: bool,
    },
    /// Parse, type-check and compile a program.
    Check {
        file: PathBuf,
        #[command(flatten)]
        seed: SeedArgs,
        /// Write the compiled constraint list.
        #[arg(long)]
        constraints: Option<PathBuf>,
    },
    /// Solve a layout for a program.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the solve artifact (JSON) used by `export`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide between retrieving and generating each asset.
    Assets {
        file: PathBuf,
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        assets: AssetArgs,
        #[command(flatten)]
        seed: SeedArgs,
        /// Write the decisions (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assemble a scene package from a solve artifact.
    Export {
        solve_output: PathBuf,
        /// Asset decisions from `assets`; selected from `--db` when absent.
        #[arg(long = "asset-decisions")]
        decisions: Option<PathBuf>,
        #[command(flatten)]
        assets: AssetArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a generated program against a ground truth, or the constraint
    /// satisfaction of a package.
    Eval {
        #[arg(long, requires = "gt")]
        gen: Option<PathBuf>,
        #[arg(long, requires = "gen")]
        gt: Option<PathBuf>,
        /// Shared threshold for object and layout matching.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long = "tau-o")]
        tau_o: Option<f64>,
        #[arg(long = "tau-l")]
        tau_l: Option<f64>,
        /// Precomputed vectors, one `text<TAB>v1,v2,...` per line.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        /// Package directory to score for solution correctness.
        #[arg(long, conflicts_with_all = ["gen", "gt"])]
        package: Option<PathBuf>,
        /// Write scores (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage and write a scene package.
    Pipeline {
        file: Option<PathBuf>,
        #[command(flatten)]
        scene: SceneArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        assets: AssetArgs,
        /// Wall thickness for every region (m).
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write constraints.txt, stage artifacts and per-iteration
        /// layouts under `<out>/intermediates`.
        #[arg(long)]
        keep_intermediates: bool,
        /// Natural-language input (not supported).
        #[arg(long, conflicts_with = "file")]
        from_text: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SeedArgs {
    /// Seed for `rand` and the solver.
    #[arg(long, env = "STHL_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Scene file with region geometry and object dimensions; defaults to
    /// `<stem>.scene.toml` beside the program.
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[command(flatten)]
    seed: SeedArgs,
    /// Constraints repaired per iteration.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Iteration limit.
    #[arg(long = "iterations", short = 't', default_value_t = 5)]
    iterations: usize,
    /// Candidate random positions per object.
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SimilarityArg {
    Hash,
    Trigram,
}

#[derive(Args, Debug)]
struct AssetArgs {
    /// Asset index: `id<TAB>model<TAB>thumbnail<TAB>description[<TAB>x,y,z]`.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Retrieval threshold.
    #[arg(long = "asset-tau", default_value_t = sthl_core::assets::DEFAULT_TAU)]
    asset_tau: f64,
    #[arg(long = "lambda-v", default_value_t = sthl_core::assets::DEFAULT_VISUAL_WEIGHT)]
    lambda_v: f64,
    #[arg(long = "lambda-t", default_value_t = sthl_core::assets::DEFAULT_SEMANTIC_WEIGHT)]
    lambda_t: f64,
    #[arg(long, value_enum, default_value = "trigram")]
    similarity: SimilarityArg,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn domain(msg: impl Into<String>) -> Failure {
    Failure::Domain(msg.into())
}

fn unit_interval(name: &str, v: f64) -> Result<f64, Failure> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(usage(format!("{name} must be in [0, 1], got {v}")))
    }
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        if self.k < 1 {
            return Err(usage("--k must be at least 1"));
        }
        if self.iterations < 1 {
            return Err(usage("--iterations must be at least 1"));
        }
        let cfg = SolverConfig {
            batch_size: self.k,
            max_iterations: self.iterations,
            seed: self.seed.seed,
            candidate_samples: self.samples,
            ..SolverConfig::default()
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
        Ok(cfg)
    }
}

impl AssetArgs {
    fn options(&self) -> Result<AssetOptions, Failure> {
        let tau = unit_interval("--asset-tau", self.asset_tau)?;
        let (v, t) = (self.lambda_v, self.lambda_t);
        if !(v >= 0.0 && t >= 0.0 && v + t > 0.0) {
            return Err(usage(format!("--lambda-v and --lambda-t must be non-negative and not both zero (got {v}, {t})")));
        }
        let similarity = match self.similarity {
            SimilarityArg::Hash => Similarity::Hash,
            SimilarityArg::Trigram => Similarity::Trigram,
        };
        Ok(AssetOptions { tau, weights: Weights { visual: v, semantic: t }, similarity })
    }

    fn database(&self) -> Result<AssetDatabase, Failure> {
        match &self.db {
            Some(p) => AssetDatabase::load(p).map_err(|e| domain(e.to_string())),
            None => Ok(AssetDatabase::default()),
        }
    }
}

fn read_source(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn located(path: &Path, d: &Diagnostics) -> String {
    d.iter().map(|d| format!("{}:{d}", path.display())).collect::<Vec<_>>().join("\n")
}

fn program_error(path: &Path, e: PipelineError) -> Failure {
    match e {
        PipelineError::Program(d) => domain(located(path, &d)),
        e => domain(e.to_string()),
    }
}

fn scene_spec(program: &Path, args: &SceneArgs) -> Result<SceneSpec, Failure> {
    match &args.scene {
        Some(p) => SceneSpec::load(p).map_err(|e| domain(format!("{}: {e}", p.display()))),
        None => load_sidecar(program).map_err(Failure::from),
    }
}

fn run(cli: Cli) -> Outcome {
    let verbose = cli.verbose > 0;
    match cli.command {
        Command::Parse { file, ast } => {
            let src = read_source(&file)?;
            let program = parse(&src).map_err(|d| domain(located(&file, &d)))?;
            if let Some(out) = ast {
                write_json(&out, &program)?;
            }
            eprintln!("{}: {} statements", file.display(), program.statements.len());
        }
        Command::Fmt { file, write } => {
            let src = read_source(&file)?;
            let program = parse(&src).map_err(|d| domain(located(&file, &d)))?;
            let text = print_program(&program);
            if write {
                write_text(&file, &text)?;
            } else {
                print!("{text}");
            }
        }
        Command::Check { file, seed, constraints } => {
            let src = read_source(&file)?;
            let (typed, compiled) = formalize(&src, seed.seed).map_err(|e| program_error(&file, e))?;
            let cs = &compiled.constraints;
            eprintln!(
                "{}: {} objects, {} regions, {} constraints ({} explicit, {} hidden)",
                file.display(),
                typed.program.objects().len(),
                typed.program.regions().len(),
                cs.len(),
                cs.count(sthl_core::constraints::Provenance::Explicit),
                cs.len() - cs.count(sthl_core::constraints::Provenance::Explicit),
            );
            if let Some(out) = constraints {
                let lines: String = cs.constraints.iter().map(|c| format!("{} {} {}\n", c.id, c.provenance, cs.describe(c, None))).collect();
                write_text(&out, &lines)?;
            }
        }
        Command::Solve { file, scene, solver, out } => {
            let cfg = solver.config()?;
            let src = read_source(&file)?;
            let spec = scene_spec(&file, &scene)?;
            let (typed, compiled) = formalize(&src, cfg.seed).map_err(|e| program_error(&file, e))?;
            let layout = initial_layout(&typed, &compiled, &spec, None)?;
            let solved = solve_stage(&typed, &compiled, &layout, &cfg)?;
            let report = &solved.report;
            if verbose {
                eprint!("{}", report.to_text(&compiled.constraints).map_err(|e| domain(e.to_string()))?);
            }
            let terminated = serde_json::to_value(report.terminated).expect("termination serializes");
            eprintln!(
                "{}: terminated {} after {} iterations, best ratio {:.4} at iteration {} ({} constraints)",
                file.display(),
                terminated.as_str().unwrap_or_default(),
                report.iterations.len().saturating_sub(1),
                report.best.ratio,
                report.best.iteration,
                report.constraint_count,
            );
            if let Some(out) = out {
                write_json(&out, &solved)?;
            }
        }
        Command::Assets { file, scene, assets, seed, out } => {
            let opts = assets.options()?;
            let db = assets.database()?;
            let src = read_source(&file)?;
            let spec = scene_spec(&file, &scene)?;
            let (typed, compiled) = formalize(&src, seed.seed).map_err(|e| program_error(&file, e))?;
            let layout = initial_layout(&typed, &compiled, &spec, None)?;
            let artifact = select_assets(&layout, &db, &opts)?;
            for d in &artifact.decisions {
                let score = d.best.as_ref().map_or("-".to_string(), |c| format!("{:.3}", c.score));
                eprintln!("{}\t{:?}\t{}\t{}", d.target, d.verdict, score, d.model_ref);
            }
            if let Some(out) = out {
                write_json(&out, &artifact)?;
            }
        }
        Command::Export { solve_output, decisions, assets, out } => {
            let solved: SolveArtifact = read_json(&solve_output)?;
            let artifact = match decisions {
                Some(p) => read_json::<AssetsArtifact>(&p)?,
                None => {
                    let opts = assets.options()?;
                    let db = assets.database()?;
                    select_assets(&solved.report.best.layout, &db, &opts)?
                }
            };
            let pkg = export_stage(&solved, &artifact.decisions)?;
            pkg.write(&out).map_err(|e| domain(e.to_string()))?;
            eprintln!(
                "{}: {} objects, satisfaction ratio {:.4}",
                out.display(),
                pkg.document.objects.len(),
                pkg.document.metadata.satisfaction_ratio
            );
        }
        Command::Eval { gen, gt, tau, tau_o, tau_l, embeddings, package, out } => {
            if let Some(dir) = package {
                let pkg = ScenePackage::read(&dir).map_err(|e| domain(e.to_string()))?;
                let program = pkg.program().map_err(|e| domain(e.to_string()))?;
                let layout = pkg.to_layout().map_err(|e| domain(e.to_string()))?;
                let (sat, total) =
                    satisfaction_counts(&program, &layout, pkg.document.metadata.seed).map_err(|e| domain(e.to_string()))?;
                let ratio = if total == 0 { 1.0 } else { sat as f64 / total as f64 };
                eprintln!("{}: {sat}/{total} constraints satisfied ({ratio:.4})", dir.display());
                if let Some(out) = out {
                    write_json(&out, &serde_json::json!({ "satisfied": sat, "total": total, "correctness": ratio }))?;
                }
                return Ok(());
            }
            let (Some(gen), Some(gt)) = (gen, gt) else {
                return Err(usage("eval needs --gen and --gt, or --package"));
            };
            let tau = match (tau, tau_o, tau_l) {
                (Some(t), None, None) => t,
                (None, Some(o), Some(l)) if o == l => o,
                (None, Some(o), Some(l)) => return Err(usage(format!("--tau-o ({o}) and --tau-l ({l}) must be equal"))),
                (None, Some(t), None) | (None, None, Some(t)) => t,
                (None, None, None) => sthl_core::metrics::DEFAULT_TAU,
                _ => return Err(usage("give either --tau or --tau-o/--tau-l")),
            };
            let tau = unit_interval("--tau", tau)?;
            let embedder: Box<dyn Embedder> = match embeddings {
                Some(p) => Box::new(TableEmbedder::load(&p).map_err(|e| domain(e.to_string()))?),
                None => Box::new(TrigramEmbedder::default()),
            };
            let load = |p: &Path| -> Result<_, Failure> {
                let src = read_source(p)?;
                Ok(check(&src).map_err(|d| domain(located(p, &d)))?.program)
            };
            let scores = program_resemblance(&load(&gen)?, &load(&gt)?, embedder.as_ref(), tau).map_err(|e| domain(e.to_string()))?;
            for (name, p, r, f) in [
                ("objects", scores.objects.precision, scores.objects.recall, scores.objects.f1),
                ("layout", scores.layout.precision, scores.layout.recall, scores.layout.f1),
                ("overall", scores.overall.precision, scores.overall.recall, scores.overall.f1),
            ] {
                eprintln!("{name:8} P={p:.4} R={r:.4} F1={f:.4}");
            }
            if let Some(out) = out {
                write_json(&out, &scores)?;
            }
        }
        Command::Pipeline { file, scene, solver, assets, eta, out, keep_intermediates, from_text } => {
            if let Some(p) = from_text {
                return Err(usage(format!(
                    "{}: natural-language input is not supported; write the scene as a .sthl program and pass it as FILE",
                    p.display()
                )));
            }
            let Some(file) = file else {
                return Err(usage("pipeline needs a program FILE"));
            };
            if let Some(e) = eta {
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(usage(format!("--eta must be a non-negative length, got {e}")));
                }
            }
            let opts = PipelineOptions {
                solver: solver.config()?,
                assets: assets.options()?,
                eta,
                intermediates: keep_intermediates.then(|| out.join("intermediates")),
            };
            let db = assets.database()?;
            let src = read_source(&file)?;
            let spec = scene_spec(&file, &scene)?;
            let pkg = pipeline::run(&src, &spec, &db, &opts, &out).map_err(|e| program_error(&file, e))?;
            if let (Some(dir), true) = (&opts.intermediates, verbose) {
                eprintln!("intermediates in {}", dir.display());
            }
            eprintln!(
                "{}: {} objects, satisfaction ratio {:.4}",
                out.display(),
                pkg.document.objects.len(),
                pkg.document.metadata.satisfaction_ratio
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
    }
}
