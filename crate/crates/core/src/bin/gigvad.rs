use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gigvad::inference::{evaluate_series, score_dataset, score_video};
use gigvad::io::files::{
    format_loss_log, format_report, format_scores, load_dataset, parse_scores, save_dataset,
};
use gigvad::io::{read_text, write_atomic, Checkpoint, Config};
use gigvad::training::{generate, train, DatasetSpec, GeneratorParams};
use gigvad::{Error, Result};

#[derive(Parser)]
#[command(name = "gigvad", version, about = "Weakly-supervised video anomaly detection head")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset descriptor.
    GenerateData(GenerateArgs),
    /// Train a head and write checkpoint.bin and loss_log.tsv.
    Train(TrainArgs),
    /// Score a dataset and write a metrics report.
    Eval(EvalArgs),
    /// Write per-frame scores for one video.
    Score(ScoreArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 200)]
    videos: usize,
    #[arg(long, default_value_t = 80)]
    normal: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    min_frames: usize,
    #[arg(long, default_value_t = 320)]
    max_frames: usize,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `train_data`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Defaults to `<output_dir>/checkpoint.bin`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Overrides `test_data`.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Read `video_<id>.tsv` score files from this directory instead of running the model.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Defaults to `<output_dir>/metrics.tsv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Overrides `test_data`.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    video: usize,
    /// Defaults to `<output_dir>/scores/video_<id>.tsv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gigvad: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenerateData(a) => generate_data(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Score(a) => run_score(a),
    }
}

fn load_config(args: &ConfigArgs) -> Result<Config> {
    match &args.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
}

fn echo(cfg: &Config) {
    print!("# resolved config\n{}", cfg.render());
}

fn required(path: Option<PathBuf>, key: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::Config(format!("no `{key}` in config and no --data flag")))
}

fn generate_data(a: GenerateArgs) -> Result<()> {
    let params = GeneratorParams {
        videos: a.videos,
        normal: a.normal,
        classes: a.classes,
        seed: a.seed,
        min_frames: a.min_frames,
        max_frames: a.max_frames,
        ..GeneratorParams::default()
    };
    println!(
        "# generator\nvideos = {}\nnormal = {}\nclasses = {}\nseed = {}\nmin_frames = {}\nmax_frames = {}",
        params.videos, params.normal, params.classes, params.seed, params.min_frames, params.max_frames
    );
    let ds = generate(&params)?;
    save_dataset(&ds, &a.out)?;
    println!("wrote {} videos to {}", ds.len(), a.out.display());
    Ok(())
}

fn run_train(a: TrainArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.train.seed = seed;
    }
    if a.data.is_some() {
        cfg.train_data = a.data;
    }
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    echo(&cfg);
    let data = required(cfg.train_data.clone(), "train_data")?;
    let ds = load_dataset(&data)?;
    let outcome = train(&ds, &cfg.train)?;
    let ckpt = Checkpoint {
        k: outcome.k,
        p: outcome.p,
        params: outcome.params,
    };
    let ckpt_path = cfg.output_dir.join("checkpoint.bin");
    let log_path = cfg.output_dir.join("loss_log.tsv");
    ckpt.save(&ckpt_path)?;
    write_atomic(&log_path, format_loss_log(&outcome.log).as_bytes())?;
    if let Some(last) = outcome.log.last() {
        println!("epoch {} total loss {}", last.epoch, last.losses.total);
    }
    println!("wrote {} and {}", ckpt_path.display(), log_path.display());
    Ok(())
}

fn checkpoint_path(cfg: &Config, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.output_dir.join("checkpoint.bin"))
}

fn load_test_data(cfg: &mut Config, flag: Option<PathBuf>) -> Result<DatasetSpec> {
    if flag.is_some() {
        cfg.test_data = flag;
    }
    load_dataset(&required(cfg.test_data.clone(), "test_data")?)
}

fn score_file(dir: &Path, id: usize) -> PathBuf {
    dir.join(format!("video_{id}.tsv"))
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    let ds = load_test_data(&mut cfg, a.data)?;
    echo(&cfg);
    let series = match &a.scores {
        Some(dir) => ds
            .videos
            .iter()
            .map(|v| {
                let path = score_file(dir, v.id);
                parse_scores(&read_text(&path)?, &path.display().to_string())
            })
            .collect::<Result<Vec<_>>>()?,
        None => {
            let ckpt = Checkpoint::load(&checkpoint_path(&cfg, a.checkpoint))?;
            score_dataset(&ds, &ckpt.params, &cfg.score_config(ckpt.k))?
        }
    };
    let report = evaluate_series(&ds, &series, &cfg.eval_config())?;
    let text = format_report(&report);
    let out = a.out.unwrap_or_else(|| cfg.output_dir.join("metrics.tsv"));
    write_atomic(&out, text.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn run_score(a: ScoreArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    let ds = load_test_data(&mut cfg, a.data)?;
    echo(&cfg);
    let video = ds
        .video(a.video)
        .ok_or_else(|| Error::Config(format!("dataset has no video {}", a.video)))?;
    let ckpt = Checkpoint::load(&checkpoint_path(&cfg, a.checkpoint))?;
    let series = score_video(video, &ckpt.params, ds.seed, &cfg.score_config(ckpt.k))?;
    let out = a
        .out
        .unwrap_or_else(|| score_file(&cfg.output_dir.join("scores"), a.video));
    write_atomic(&out, format_scores(&series).as_bytes())?;
    println!("wrote {} frames to {}", series.frames(), out.display());
    Ok(())
}
