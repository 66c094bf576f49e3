use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corpusforge::pipeline::{self, PipelineConfig, PipelineError};
use corpusforge::vocab::{Vocabulary, DEFAULT_CONTINUATION_PREFIX};

#[derive(Parser)]
#[command(name = "corpusforge", version, about = "Multilingual pretraining-corpus pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML pipeline config.
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Per (language, source) document, word and character counts as CSV.
    Stats(Common),
    /// Upsampling multipliers for the Wikipedia corpora as CSV.
    Plan(Common),
    /// Writes romanized pair files for the Wikipedia corpora.
    Translit(Common),
    /// Trains a vocabulary and writes vocab.txt and script.csv.
    TrainVocab(Common),
    /// Tokenizes stdin line by line.
    Tokenize {
        #[arg(long)]
        vocab: PathBuf,
        /// Print ids instead of token strings.
        #[arg(long)]
        ids: bool,
    },
    /// Fertility of a vocabulary over the configured corpora as CSV.
    Fertility {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        vocab: PathBuf,
    },
    /// Runs the full pipeline and prints the manifest.
    Build(Common),
}

fn load(c: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(a) = c.alpha {
        cfg.alpha = a;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn load_vocab(path: &std::path::Path) -> Result<Vocabulary, PipelineError> {
    Vocabulary::load(path, DEFAULT_CONTINUATION_PREFIX).map_err(|e| PipelineError::Config(e.to_string()))
}

fn tokenize_stdin(vocab: &Vocabulary, ids: bool) -> io::Result<()> {
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    for line in io::stdin().lock().lines() {
        let toks = vocab.tokenize(&corpusforge::corpus::normalize_text(&line?));
        let words: Vec<String> = toks
            .iter()
            .map(|&id| if ids { id.to_string() } else { vocab.token(id).unwrap_or_default().to_string() })
            .collect();
        writeln!(out, "{}", words.join(" "))?;
    }
    out.flush()
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let stdout = io::stdout();
    match cli.command {
        Command::Stats(c) => {
            pipeline::cmd_stats(&load(&c)?, stdout.lock())?;
        }
        Command::Plan(c) => {
            pipeline::cmd_plan(&load(&c)?, stdout.lock())?;
        }
        Command::Translit(c) => {
            let cfg = load(&c)?;
            let report = pipeline::cmd_translit(&cfg)?;
            eprintln!(
                "wrote pairs to {}; {} documents without a table, {} rejected",
                cfg.out.display(),
                report.skipped_total(),
                report.rejected
            );
        }
        Command::TrainVocab(c) => {
            let cfg = load(&c)?;
            let v = pipeline::cmd_train_vocab(&cfg)?;
            eprintln!("{} tokens written to {}", v.len(), cfg.out.join("vocab.txt").display());
        }
        Command::Tokenize { vocab, ids } => {
            let v = load_vocab(&vocab)?;
            tokenize_stdin(&v, ids).map_err(|e| PipelineError::Stage {
                stage: "tokenize",
                source: e.into(),
            })?;
        }
        Command::Fertility { common, vocab } => {
            let v = load_vocab(&vocab)?;
            pipeline::cmd_fertility(&load(&common)?, &v, stdout.lock())?;
        }
        Command::Build(c) => {
            let m = pipeline::cmd_build(&load(&c)?)?;
            print!("{}", m.to_json());
        }
    }
    Ok(())
}

fn init_threads() {
    let Ok(v) = std::env::var("CORPUSFORGE_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("ignoring CORPUSFORGE_THREADS={v:?}: expected a positive integer"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
