//! Argument parsing, config layering and the JSON status/error protocol.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::commands::{self, AdaptInputs, EmbedOutputs};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::formats::wav::WavEncoding;

#[derive(Debug, Parser)]
#[command(name = "nse", version, about = "Neural speech embeddings from EEG")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker cap. Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output file, or directory for synth and adapt-eval.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic imagined/spoken recordings with planted ground truth.
    Synth(SynthArgs),
    /// Notch + bandpass (zero phase), then baseline correction per event.
    Preprocess(PreprocessArgs),
    /// FastICA with reference-guided component rejection.
    IcaClean(IcaCleanArgs),
    /// Fit the multi-class spatial filter bank.
    CspFit(CspFitArgs),
    /// Project epochs and write windowed log-variance embeddings.
    Embed(EmbedArgs),
    /// Shared vs per-domain banks: distances and t-SNE tables.
    AdaptEval(AdaptEvalArgs),
    /// Band-by-time ERD/ERS grid.
    Erders(ErdersArgs),
    /// Two-dimensional t-SNE of an embeddings file.
    Tsne(TsneArgs),
    /// Resample a WAV file.
    AudioResample(AudioResampleArgs),
    /// Spectral-gate denoising of a WAV file.
    AudioDenoise(AudioDenoiseArgs),
    /// Describe a file produced by this tool.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Write an artifact mixture (sources, mixture, EOG/EMG references) instead.
    #[arg(long)]
    pub artifact: bool,
    #[arg(long, default_value_t = 8)]
    pub artifact_channels: usize,
    #[arg(long, default_value_t = 4)]
    pub artifact_sources: usize,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub trials_per_class: Option<usize>,
    #[arg(long)]
    pub boost: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long, value_name = "EEGB")]
    pub input: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IcaCleanArgs {
    #[arg(long, value_name = "EEGB")]
    pub input: PathBuf,
    #[arg(long, value_name = "EEGB")]
    pub references: PathBuf,
    #[arg(long, value_name = "JSON")]
    pub model_out: Option<PathBuf>,
    /// Absolute correlation above which a component is rejected.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CspFitArgs {
    #[arg(long, value_name = "EEGB")]
    pub epochs: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub patterns_per_class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long, value_name = "EEGB")]
    pub epochs: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub events: Option<PathBuf>,
    #[arg(long, value_name = "JSON")]
    pub bank: PathBuf,
    /// Also write every embedding as CSV rows.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Also write the column-mean masked display values as CSV.
    #[arg(long, value_name = "PATH")]
    pub masked_csv: Option<PathBuf>,
    #[arg(long)]
    pub n_windows: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AdaptEvalArgs {
    #[arg(long, value_name = "EEGB")]
    pub imagined: PathBuf,
    #[arg(long, value_name = "EEGB")]
    pub spoken: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub imagined_events: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub spoken_events: Option<PathBuf>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ErdersArgs {
    #[arg(long, value_name = "EEGB")]
    pub epochs: PathBuf,
    #[arg(long, value_name = "CSV")]
    pub events: Option<PathBuf>,
    /// Single channel instead of the channel average.
    #[arg(long)]
    pub channel: Option<usize>,
    #[arg(long)]
    pub band_width_hz: Option<f64>,
    #[arg(long)]
    pub bin_seconds: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TsneArgs {
    #[arg(long, value_name = "BIN")]
    pub input: PathBuf,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AudioResampleArgs {
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    #[arg(long)]
    pub target_hz: Option<u32>,
    /// Write 32-bit float samples instead of 16-bit PCM.
    #[arg(long)]
    pub float: bool,
}

#[derive(Debug, Args)]
pub struct AudioDenoiseArgs {
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    /// Noise-only recording; without it a spectral percentile is used.
    #[arg(long, value_name = "WAV")]
    pub noise_profile: Option<PathBuf>,
    /// Resample input (and profile) to this rate before gating.
    #[arg(long)]
    pub target_hz: Option<u32>,
    #[arg(long)]
    pub percentile: Option<f64>,
    #[arg(long)]
    pub float: bool,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub path: PathBuf,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Layers built-in defaults, the config file and command-line flags.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.global.config.as_deref())?;
    set(&mut cfg.seed, cli.global.seed);
    match &cli.command {
        Command::Synth(a) => {
            set(&mut cfg.synth.n_channels, a.channels);
            set(&mut cfg.synth.n_classes, a.classes);
            set(&mut cfg.synth.trials_per_class, a.trials_per_class);
            set(&mut cfg.synth.boost, a.boost);
            set(&mut cfg.synth.epsilon, a.epsilon);
        }
        Command::IcaClean(a) => set(&mut cfg.ica.threshold, a.threshold),
        Command::CspFit(a) => set(&mut cfg.patterns_per_class, a.patterns_per_class),
        Command::Embed(a) => set(&mut cfg.n_windows, a.n_windows),
        Command::AdaptEval(a) => {
            set(&mut cfg.tsne.perplexity, a.perplexity);
            set(&mut cfg.tsne.iterations, a.iterations);
        }
        Command::Erders(a) => {
            if a.channel.is_some() {
                cfg.erders.channel = a.channel;
            }
            set(&mut cfg.erders.band_width_hz, a.band_width_hz);
            set(&mut cfg.erders.bin_seconds, a.bin_seconds);
        }
        Command::Tsne(a) => {
            set(&mut cfg.tsne.perplexity, a.perplexity);
            set(&mut cfg.tsne.iterations, a.iterations);
        }
        Command::AudioResample(a) => set(&mut cfg.audio.target_hz, a.target_hz),
        Command::AudioDenoise(a) => set(&mut cfg.audio.percentile, a.percentile),
        Command::Preprocess(_) | Command::Info(_) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn required_out(out: Option<&Path>, command: &str) -> Result<PathBuf> {
    out.map(Path::to_path_buf).ok_or_else(|| Error::Usage(format!("{command} requires --out PATH")))
}

fn encoding(float: bool) -> WavEncoding {
    if float {
        WavEncoding::Float32
    } else {
        WavEncoding::Pcm16
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Preprocess(_) => "preprocess",
            Command::IcaClean(_) => "ica-clean",
            Command::CspFit(_) => "csp-fit",
            Command::Embed(_) => "embed",
            Command::AdaptEval(_) => "adapt-eval",
            Command::Erders(_) => "erders",
            Command::Tsne(_) => "tsne",
            Command::AudioResample(_) => "audio-resample",
            Command::AudioDenoise(_) => "audio-denoise",
            Command::Info(_) => "info",
        }
    }
}

/// Runs a parsed command and returns its status summary.
pub fn execute(cli: &Cli) -> Result<Value> {
    let cfg = resolve_config(cli)?;
    let threads = cli.global.threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
    if threads == 0 {
        return Err(Error::Usage("--threads must be at least 1".into()));
    }
    log::debug!("worker cap {threads}; computation is sequential");
    let out = cli.global.out.as_deref();
    let name = cli.command.name();
    match &cli.command {
        Command::Synth(a) => {
            let dir = out.unwrap_or(Path::new("."));
            if a.artifact {
                commands::synth_artifact(&cfg, dir, a.artifact_channels, a.artifact_sources)
            } else {
                commands::synth(&cfg, dir)
            }
        }
        Command::Preprocess(a) => commands::preprocess(&cfg, &a.input, a.events.as_deref(), &required_out(out, name)?),
        Command::IcaClean(a) => {
            commands::ica_clean(&cfg, &a.input, &a.references, &required_out(out, name)?, a.model_out.as_deref())
        }
        Command::CspFit(a) => commands::csp_fit(&cfg, &a.epochs, a.events.as_deref(), &required_out(out, name)?),
        Command::Embed(a) => {
            let out = required_out(out, name)?;
            let outs = EmbedOutputs { out: &out, csv: a.csv.as_deref(), masked_csv: a.masked_csv.as_deref() };
            commands::embed_cmd(&cfg, &a.epochs, a.events.as_deref(), &a.bank, outs)
        }
        Command::AdaptEval(a) => {
            let inputs = AdaptInputs {
                imagined: &a.imagined,
                spoken: &a.spoken,
                imagined_events: a.imagined_events.as_deref(),
                spoken_events: a.spoken_events.as_deref(),
            };
            commands::adapt_eval(&cfg, inputs, out.unwrap_or(Path::new(".")))
        }
        Command::Erders(a) => commands::erders(&cfg, &a.epochs, a.events.as_deref(), &required_out(out, name)?),
        Command::Tsne(a) => commands::tsne_cmd(&cfg, &a.input, &required_out(out, name)?),
        Command::AudioResample(a) => {
            commands::audio_resample(&a.input, &required_out(out, name)?, cfg.audio.target_hz, encoding(a.float))
        }
        Command::AudioDenoise(a) => commands::audio_denoise(
            &cfg,
            &a.input,
            a.noise_profile.as_deref(),
            &required_out(out, name)?,
            a.target_hz,
            encoding(a.float),
        ),
        Command::Info(a) => commands::info(&a.path),
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("NSE_LOG", "warn");
    // A second init in the same process (tests) is harmless.
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn error_line(err: &Error) -> String {
    json!({"status": "error", "kind": err.kind(), "code": err.exit_code(), "message": err.to_string()}).to_string()
}

/// Parses `args` (program name first), runs the command and prints the
/// status line. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let err = Error::Usage(e.render().to_string().trim_end().to_string());
            eprintln!("{}", error_line(&err));
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(mut summary) => {
            let mut line = serde_json::Map::new();
            line.insert("status".into(), json!("ok"));
            line.insert("command".into(), json!(cli.command.name()));
            if let Value::Object(fields) = summary.take() {
                line.extend(fields);
            }
            println!("{}", Value::Object(line));
            0
        }
        Err(err) => {
            eprintln!("{}", error_line(&err));
            err.exit_code()
        }
    }
}
