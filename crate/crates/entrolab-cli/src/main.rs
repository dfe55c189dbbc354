//! Command-line front end: entropy reports, compression, sequence
//! generation, and Monte Carlo experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data/format error.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use entrolab::codec::{compress, decompress, CompressedContainer, Mode};
use entrolab::entropy::{empirical_entropy, entropy_profile};
use entrolab::generators::{
    champernowne_digits, copeland_erdos_digits, enumerate_de_bruijn, random_de_bruijn,
    random_string,
};
use entrolab::threshold::{
    dominance_experiment, threshold_experiment, DominanceConfig, ExperimentConfig,
};
use entrolab::Sequence;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const SCHEMA_VERSION: &str = "entrolab-cli-v1";

#[derive(Parser)]
#[command(name = "entrolab", version, about = "Empirical entropy toolkit for large alphabets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CodecMode {
    Quantized,
    Exact,
}

impl From<CodecMode> for Mode {
    fn from(m: CodecMode) -> Mode {
        match m {
            CodecMode::Quantized => Mode::Quantized,
            CodecMode::Exact => Mode::ExactTable,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Sequence file (binary header {n, m} + body)
    #[arg(long, conflicts_with_all = ["raw", "text"])]
    input: Option<PathBuf>,
    /// Raw byte file, read over the 256-symbol alphabet
    #[arg(long, conflicts_with = "text")]
    raw: Option<PathBuf>,
    /// Literal text; code points map to ranks in first-appearance order
    #[arg(long)]
    text: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy profile H_0..H_lmax of a sequence
    Entropy {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 2)]
        lmax: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Compress a sequence under an order-l Markov model
    Compress {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short = 'l', long, default_value_t = 1)]
        order: usize,
        #[arg(short = 'c', long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
        #[arg(long, value_enum, default_value_t = CodecMode::Quantized)]
        mode: CodecMode,
        #[arg(short = 'o', long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decompress a container back into a sequence file
    Decompress {
        #[arg(long)]
        input: PathBuf,
        #[arg(short = 'o', long)]
        output: PathBuf,
        /// Write raw bytes instead of the sequence format (needs n <= 256)
        #[arg(long)]
        raw: bool,
    },
    /// Generate sequences
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Run an experiment described by a JSON config
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (0 = all cores); results do not depend on this
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Uniformly random string
    Random {
        #[arg(short = 'n', long)]
        n: u32,
        #[arg(short = 'm', long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Linear de Bruijn sequence (every l-tuple exactly once)
    Debruijn {
        #[arg(short = 'n', long)]
        n: u32,
        #[arg(short = 'l', long)]
        order: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// List every sequence instead of sampling one
        #[arg(long)]
        enumerate: bool,
        #[arg(short = 'o', long, conflicts_with = "enumerate")]
        output: Option<PathBuf>,
    },
    /// Digits of the Champernowne number in a given base
    Champernowne {
        #[arg(short = 'b', long)]
        base: u32,
        #[arg(short = 'm', long)]
        m: usize,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Digits of the Copeland-Erdos number in a given base
    CopelandErdos {
        #[arg(short = 'b', long)]
        base: u32,
        #[arg(short = 'm', long)]
        m: usize,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

enum CliError {
    Io(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(msg) | CliError::Data(msg) => msg,
        }
    }
}

fn io_err(path: &Path, err: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Loads the sequence plus, in text mode, the rank mapping.
fn load_input(input: &InputArgs) -> Result<(Sequence, Option<Vec<char>>), CliError> {
    if let Some(path) = &input.input {
        let seq = Sequence::from_bytes(&read_file(path)?)
            .map_err(|e| CliError::Data(e.to_string()))?;
        Ok((seq, None))
    } else if let Some(path) = &input.raw {
        Ok((Sequence::from_raw_bytes(&read_file(path)?), None))
    } else if let Some(text) = &input.text {
        let (seq, alphabet) = Sequence::from_text(text);
        Ok((seq, Some(alphabet)))
    } else {
        Err(CliError::Data("no input given; use --input, --raw or --text".into()))
    }
}

#[derive(Serialize)]
struct EntropyReport {
    schema_version: &'static str,
    n: u32,
    m: usize,
    distinct_symbols: usize,
    profile: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alphabet: Option<Vec<char>>,
}

fn cmd_entropy(input: &InputArgs, lmax: usize, format: Format) -> Result<String, CliError> {
    let (seq, alphabet) = load_input(input)?;
    let profile =
        entropy_profile(&seq, lmax).map_err(|e| CliError::Data(e.to_string()))?;
    let report = EntropyReport {
        schema_version: SCHEMA_VERSION,
        n: seq.n(),
        m: seq.m(),
        distinct_symbols: seq.distinct_symbols(),
        profile,
        alphabet,
    };
    let mut out = String::new();
    match format {
        Format::Json => out = serde_json::to_string_pretty(&report).expect("serializes"),
        Format::Csv => {
            out.push_str("order,entropy\n");
            for (l, h) in report.profile.iter().enumerate() {
                let _ = writeln!(out, "{l},{h}");
            }
        }
        Format::Text => {
            let _ = writeln!(
                out,
                "n = {}, m = {}, distinct symbols = {}",
                report.n, report.m, report.distinct_symbols
            );
            if let Some(alphabet) = &report.alphabet {
                let mapping: Vec<String> = alphabet
                    .iter()
                    .enumerate()
                    .map(|(rank, ch)| format!("{ch:?} -> {rank}"))
                    .collect();
                let _ = writeln!(out, "rank mapping: {}", mapping.join(", "));
            }
            for (l, h) in report.profile.iter().enumerate() {
                let _ = writeln!(out, "H_{l} = {h:.6}");
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct CompressStats {
    schema_version: &'static str,
    n: u32,
    m: usize,
    order: usize,
    c: f64,
    eps: f64,
    entropy: f64,
    model_bits: u64,
    payload_bits: u64,
    total_bits: u64,
    budget_bits: f64,
    budget_met: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_compress(
    input: &InputArgs,
    order: usize,
    c: f64,
    eps: f64,
    mode: Mode,
    output: &Path,
    format: Format,
) -> Result<String, CliError> {
    let (seq, _) = load_input(input)?;
    let container =
        compress(&seq, order, c, eps, mode).map_err(|e| CliError::Data(e.to_string()))?;
    write_file(output, &container.to_bytes())?;
    let entropy =
        empirical_entropy(&seq, order).map_err(|e| CliError::Data(e.to_string()))?;
    let budget_bits = (c * entropy + eps) * seq.m() as f64;
    let stats = CompressStats {
        schema_version: SCHEMA_VERSION,
        n: seq.n(),
        m: seq.m(),
        order,
        c,
        eps,
        entropy,
        model_bits: container.model_bits(),
        payload_bits: container.payload_bits(),
        total_bits: container.total_bits(),
        budget_bits,
        budget_met: (container.total_bits() as f64) < budget_bits,
    };
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&stats).expect("serializes"),
        Format::Csv => format!(
            "n,m,order,c,eps,entropy,model_bits,payload_bits,total_bits,budget_bits,budget_met\n\
             {},{},{},{},{},{},{},{},{},{},{}\n",
            stats.n,
            stats.m,
            stats.order,
            stats.c,
            stats.eps,
            stats.entropy,
            stats.model_bits,
            stats.payload_bits,
            stats.total_bits,
            stats.budget_bits,
            stats.budget_met
        ),
        Format::Text => format!(
            "H_{} = {:.6}; model {} bits + payload {} bits = {} bits; \
             budget (c H + eps) m = {:.1} bits; budget met: {}\n",
            stats.order,
            stats.entropy,
            stats.model_bits,
            stats.payload_bits,
            stats.total_bits,
            stats.budget_bits,
            stats.budget_met
        ),
    })
}

fn cmd_decompress(input: &Path, output: &Path, raw: bool) -> Result<String, CliError> {
    let container = CompressedContainer::from_bytes(&read_file(input)?)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let seq = decompress(&container).map_err(|e| CliError::Data(e.to_string()))?;
    if raw {
        if seq.n() > 256 {
            return Err(CliError::Data(format!(
                "alphabet size {} does not fit raw bytes",
                seq.n()
            )));
        }
        let bytes: Vec<u8> = seq.symbols().iter().map(|&s| s as u8).collect();
        write_file(output, &bytes)?;
    } else {
        write_file(output, &seq.to_bytes())?;
    }
    Ok(format!("wrote {} symbols over alphabet {}\n", seq.m(), seq.n()))
}

fn render_sequence(seq: &Sequence) -> String {
    if seq.n() <= 10 {
        seq.symbols().iter().map(|s| s.to_string()).collect()
    } else {
        let parts: Vec<String> = seq.symbols().iter().map(|s| s.to_string()).collect();
        parts.join(" ")
    }
}

fn emit_sequence(seq: &Sequence, output: Option<&PathBuf>) -> Result<String, CliError> {
    match output {
        Some(path) => {
            write_file(path, &seq.to_bytes())?;
            Ok(String::new())
        }
        None => Ok(format!("{}\n", render_sequence(seq))),
    }
}

fn cmd_gen(kind: &GenKind) -> Result<String, CliError> {
    match kind {
        GenKind::Random { n, m, seed, output } => {
            if *n == 0 {
                return Err(CliError::Data("alphabet size must be at least 1".into()));
            }
            emit_sequence(&random_string(*n, *m, *seed), output.as_ref())
        }
        GenKind::Debruijn { n, order, seed, enumerate, output } => {
            if *enumerate {
                let all = enumerate_de_bruijn(*n, *order)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                let mut out = String::new();
                for seq in &all {
                    let _ = writeln!(out, "{}", render_sequence(seq));
                }
                Ok(out)
            } else {
                let seq = random_de_bruijn(*n, *order, *seed)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                emit_sequence(&seq, output.as_ref())
            }
        }
        GenKind::Champernowne { base, m, output } => {
            let seq =
                champernowne_digits(*base, *m).map_err(|e| CliError::Data(e.to_string()))?;
            emit_sequence(&seq, output.as_ref())
        }
        GenKind::CopelandErdos { base, m, output } => {
            let seq =
                copeland_erdos_digits(*base, *m).map_err(|e| CliError::Data(e.to_string()))?;
            emit_sequence(&seq, output.as_ref())
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ExperimentSpec {
    Threshold {
        #[serde(flatten)]
        config: ExperimentConfig,
    },
    Dominance {
        #[serde(flatten)]
        config: DominanceConfig,
    },
}

fn cmd_experiment(
    config_path: &Path,
    workers: usize,
    out_json: Option<&PathBuf>,
    out_csv: Option<&PathBuf>,
) -> Result<String, CliError> {
    let raw = read_file(config_path)?;
    let spec: ExperimentSpec = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Data(format!("config: {e}")))?;
    let (json, csv) = match spec {
        ExperimentSpec::Threshold { config } => {
            let report = threshold_experiment(&config, workers)
                .map_err(|e| CliError::Data(e.to_string()))?;
            (report.to_json(), report.to_csv())
        }
        ExperimentSpec::Dominance { config } => {
            let report =
                dominance_experiment(&config).map_err(|e| CliError::Data(e.to_string()))?;
            (report.to_json(), report.to_csv())
        }
    };
    if let Some(path) = out_json {
        write_file(path, json.as_bytes())?;
    }
    if let Some(path) = out_csv {
        write_file(path, csv.as_bytes())?;
    }
    if out_json.is_none() && out_csv.is_none() {
        Ok(json)
    } else {
        Ok(String::new())
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Entropy { input, lmax, format } => cmd_entropy(input, *lmax, *format),
        Command::Compress { input, order, c, eps, mode, output, format } => {
            cmd_compress(input, *order, *c, *eps, (*mode).into(), output, *format)
        }
        Command::Decompress { input, output, raw } => cmd_decompress(input, output, *raw),
        Command::Gen { kind } => cmd_gen(kind),
        Command::Experiment { config, workers, out_json, out_csv } => {
            cmd_experiment(config, *workers, out_json.as_ref(), out_csv.as_ref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.code())
        }
    }
}
