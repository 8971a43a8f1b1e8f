use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use surfparc::data::{
    evaluate_model, load_checkpoint, load_dataset, prepare_subjects, save_checkpoint, train_models,
    write_metrics_log, write_prediction, write_synthetic_dataset, DatasetManifest, LoadedSubject, RunConfig,
    OUTPUT_DIR_ENV,
};
use surfparc::error::DataError;
use surfparc::gradcheck::run_suite;
use surfparc::mesh::io::write_atomic;
use surfparc::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "surfparc", version, about = "Per-vertex surface parcellation with B-spline graph convolutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an icosphere dataset with geodesic-Voronoi labels.
    Synth(SynthArgs),
    /// Two-stage training; writes coarse.ckpt, refined.ckpt and metrics.log.
    Train(TrainArgs),
    /// Predict labels and export label, probability and VTK files.
    Infer(InferArgs),
    /// Hard-Dice report as JSON on stdout.
    Evaluate(EvaluateArgs),
    /// Finite-difference check of every layer's backward pass.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    level: u32,
    #[arg(long, default_value_t = 8)]
    regions: usize,
    #[arg(long, default_value_t = 20)]
    subjects: usize,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory [env: SURFPARC_OUT, default: out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// JSON run configuration; missing fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Hold out this fold id and train on the rest.
    #[arg(long)]
    fold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    coarse_epochs: Option<usize>,
    #[arg(long)]
    refine_epochs: Option<usize>,
    /// Output directory [env: SURFPARC_OUT, default: from config]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Label paths may be `-`.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory [env: SURFPARC_OUT, default: out]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Only score subjects in this fold.
    #[arg(long)]
    fold: Option<usize>,
    /// Also write the report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn output_dir(flag: Option<PathBuf>, fallback: &Path) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| fallback.to_path_buf())
}

fn select_fold(subjects: Vec<LoadedSubject>, fold: Option<usize>, keep: bool) -> Result<Vec<LoadedSubject>, Error> {
    let Some(k) = fold else { return Ok(subjects) };
    if subjects.iter().any(|s| s.fold.is_none()) {
        return Err(DataError::Invalid("--fold given but the manifest has no fold ids".into()).into());
    }
    let picked: Vec<_> = subjects.into_iter().filter(|s| (s.fold == Some(k)) == keep).collect();
    if picked.is_empty() {
        return Err(DataError::Invalid(format!("no subjects selected by fold {k}")).into());
    }
    Ok(picked)
}

fn synth(a: SynthArgs) -> Result<(), Error> {
    let dir = output_dir(a.out, Path::new("out"));
    let manifest = write_synthetic_dataset(&dir, a.level, a.regions, a.subjects, a.folds, a.seed)?;
    println!("{}", manifest.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<(), Error> {
    let mut run = match &a.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = a.seed {
        run.seed = s;
    }
    if let Some(c) = a.classes {
        run.model.classes = c;
    }
    if let Some(e) = a.coarse_epochs {
        run.schedule.coarse_epochs = e;
    }
    if let Some(e) = a.refine_epochs {
        run.schedule.refine_epochs = e;
    }
    run.validate()?;
    let dir = output_dir(a.out, &run.output_dir);

    let manifest = DatasetManifest::read(&a.manifest)?;
    let subjects = select_fold(load_dataset(&manifest, run.model.classes)?, a.fold, false)?;
    let prepared = prepare_subjects(&subjects, &run.model, run.seed)?;
    info!("training on {} subjects", prepared.len());
    let mut trained = train_models(&run, &prepared, &mut |m| info!("{m}"))?;

    std::fs::create_dir_all(&dir).map_err(|source| DataError::Io { path: dir.clone(), source })?;
    write_atomic(&dir.join("config.json"), run.to_json().as_bytes())?;
    save_checkpoint(&dir.join("coarse.ckpt"), &mut trained.coarse)?;
    save_checkpoint(&dir.join("refined.ckpt"), &mut trained.refined)?;
    write_metrics_log(&dir.join("metrics.log"), &trained.history)?;
    println!("{}", dir.display());
    Ok(())
}

fn infer(a: InferArgs) -> Result<(), Error> {
    let model = load_checkpoint(&a.checkpoint)?;
    let dir = output_dir(a.out, Path::new("out"));
    let manifest = DatasetManifest::read(&a.manifest)?;
    let subjects = load_dataset(&manifest, model.classes())?;
    let prepared = prepare_subjects(&subjects, model.config(), model.seed())?;
    for (s, p) in subjects.iter().zip(&prepared) {
        let pred = model.predict(p)?;
        let files = write_prediction(&dir, &s.id, &s.mesh, &pred)?;
        println!("{} {}", s.id, files.labels.display());
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), Error> {
    let model = load_checkpoint(&a.checkpoint)?;
    let manifest = DatasetManifest::read(&a.manifest)?;
    let subjects = select_fold(load_dataset(&manifest, model.classes())?, a.fold, true)?;
    let prepared = prepare_subjects(&subjects, model.config(), model.seed())?;
    let (coarse, refined) = evaluate_model(&model, &prepared)?;
    let json = refined.unwrap_or(coarse).to_json();
    if let Some(p) = &a.report {
        write_atomic(p, json.as_bytes())?;
    }
    println!("{json}");
    Ok(())
}

fn gradcheck(a: GradcheckArgs) -> Result<(), Error> {
    let results = run_suite(a.instances, a.seed);
    for r in &results {
        println!("{r}");
    }
    match results.iter().find(|r| !r.passed()) {
        Some(r) => Err(Error::NonFinite(format!("gradient check failed for {}", r.name))),
        None => Ok(()),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn kind_name(e: &Error) -> &'static str {
    match e.kind() {
        ErrorKind::Config => "config",
        ErrorKind::Data => "data",
        ErrorKind::Numeric => "numeric",
    }
}

fn fail(kind: &str, msg: &str, code: u8) -> ExitCode {
    let line = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error: {kind}: {line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            return fail("usage", first, 2);
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Infer(a) => infer(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Gradcheck(a) => gradcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(kind_name(&e), &e.to_string(), exit_code(&e)),
    }
}
