//! The `docdecomp` command line: argument parsing, config layering and
//! subcommand dispatch.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use docdecomp::DecompositionConfig;
use serde_json::{Map, Value};

pub mod commands;
pub mod report;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "DECOMPOSE_CONFIG";

#[derive(Debug, Parser)]
#[command(name = "docdecomp", version, about = "Decompose printed pages into images, headlines, sub-headlines and columns")]
pub struct Cli {
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label the regions of one page.
    Decompose {
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip de-skew and orientation correction.
        #[arg(long)]
        no_orient: bool,
        /// Also write one PNG crop per region.
        #[arg(long)]
        save_crops: bool,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Correct skew and quarter-turn orientation only.
    Deskew {
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Render synthetic pages with ground truth.
    Synth {
        /// JSON array of page specs. Omit to use a built-in corpus.
        spec_file: Option<PathBuf>,
        #[arg(long, default_value = "corpus")]
        out: PathBuf,
        /// Built-in corpus to generate when no spec file is given.
        #[arg(long, value_enum, conflicts_with = "spec_file")]
        corpus: Option<CorpusKind>,
        /// Pages in a built-in corpus.
        #[arg(long, default_value_t = 70)]
        count: usize,
        /// Seed of a built-in corpus; with a spec file, page `i` gets seed + i.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score the pipeline on a directory of page_NNN / truth_NNN pairs.
    Eval {
        corpus_dir: PathBuf,
        /// Where report.json goes; defaults to the corpus directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iou_min: Option<f64>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CorpusKind {
    Deskew,
    Rotation,
    Layout,
}

#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file; falls back to $DECOMPOSE_CONFIG.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub canny_low: Option<f32>,
    #[arg(long)]
    pub canny_high: Option<f32>,
    #[arg(long)]
    pub canny_sigma: Option<f32>,
    /// Override any config field, e.g. `--set gap1=0.9L` or `--set binarize_threshold=120`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    Failure = 1,
    /// Finished, but the page carries flags worth a look.
    Flagged = 2,
}

/// A fatal error, reported on stderr with exit status 1.
#[derive(Debug)]
pub struct Failure(pub String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<docdecomp::Error> for Failure {
    fn from(e: docdecomp::Error) -> Self {
        Failure(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

impl ConfigArgs {
    fn overrides(&self) -> CliResult<Map<String, Value>> {
        let mut map = Map::new();
        for (key, v) in [
            ("canny_low", self.canny_low),
            ("canny_high", self.canny_high),
            ("canny_sigma", self.canny_sigma),
        ] {
            if let Some(v) = v {
                map.insert(key.into(), Value::from(v));
            }
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Failure(format!("--set expects KEY=VALUE, got {item:?}")))?;
            // bare words such as 0.8L are strings
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
            map.insert(k.trim().to_string(), value);
        }
        Ok(map)
    }

    /// Built-in defaults, then the config file, then command-line flags.
    pub fn load(&self) -> CliResult<DecompositionConfig> {
        let path = self
            .config
            .clone()
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        let base = match &path {
            Some(p) => {
                log::info!("config file {}", p.display());
                DecompositionConfig::load(p)?
            }
            None => DecompositionConfig::default(),
        };
        Ok(base.with_overrides(&self.overrides()?)?)
    }
}

/// Parses `args`, runs the command and returns the exit status. Usage
/// errors exit with 1; `--help` and `--version` with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(status) => status as i32,
        Err(e) => {
            eprintln!("error: {e}");
            Status::Failure as i32
        }
    }
}

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

pub fn run(cli: Cli) -> CliResult<Status> {
    match cli.command {
        Command::Decompose {
            input,
            out,
            no_orient,
            save_crops,
            config,
        } => commands::cmd_decompose(&input, &out, &config.load()?, !no_orient, save_crops),
        Command::Deskew { input, out, config } => commands::cmd_deskew(&input, &out, &config.load()?),
        Command::Synth {
            spec_file,
            out,
            corpus,
            count,
            seed,
        } => {
            let specs = match (spec_file, corpus) {
                (Some(path), _) => commands::read_specs(&path, seed)?,
                (None, Some(kind)) => commands::builtin_corpus(kind, seed.unwrap_or(1), count),
                (None, None) => return Err(Failure("give a spec file or --corpus".into())),
            };
            commands::cmd_synth(&specs, &out)
        }
        Command::Eval {
            corpus_dir,
            out,
            iou_min,
            config,
        } => {
            let mut cfg = config.load()?;
            if let Some(v) = iou_min {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Failure(format!("--iou-min must lie in (0, 1], got {v}")));
                }
                cfg.iou_min = v;
            }
            let out = out.unwrap_or_else(|| corpus_dir.clone());
            commands::cmd_eval(&corpus_dir, &out, &cfg)
        }
    }
}

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}
