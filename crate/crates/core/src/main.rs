use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wordfuse::pipeline::{self, Overrides, PipelineConfig, PipelineError, CACHE_DIR_ENV};

#[derive(Parser, Debug)]
#[command(name = "wordfuse", version)]
#[command(
    about = "Fuse pretrained word vectors with ConceptNet knowledge, refine, project and evaluate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full fusion pipeline and write a word2vec text file plus a JSON manifest
    Build(BuildArgs),
    /// Spearman correlation of an embedding file against SimLex-999 style ratings
    Eval(EvalArgs),
    /// List the ConceptNet neighbors of a word
    Neighbors(NeighborsArgs),
    /// Write 3-D PCA coordinates of selected words as CSV
    Export3d(ExportArgs),
}

#[derive(Args, Debug, Default)]
struct SourceArgs {
    /// TOML config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// ConceptNet assertions dump (TSV)
    #[arg(long, conflicts_with = "conceptnet_api")]
    conceptnet_dump: Option<PathBuf>,

    /// ConceptNet API base URL, e.g. http://api.conceptnet.io
    #[arg(long)]
    conceptnet_api: Option<String>,

    /// Cache directory for API responses (also WORDFUSE_CACHE_DIR)
    #[arg(long)]
    cache_dir: Option<PathBuf>,

    /// Never hit the network; cache misses are errors
    #[arg(long)]
    offline: bool,

    /// Maximum number of related words per word
    #[arg(long)]
    neighbor_cap: Option<usize>,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Pretrained embeddings in word2vec text format
    #[arg(long)]
    embeddings: Option<PathBuf>,

    #[arg(long)]
    som_iterations: Option<usize>,

    #[arg(long)]
    som_lr: Option<f64>,

    /// Nearest vocabulary neighbors used by the SOM update
    #[arg(long)]
    som_k: Option<usize>,

    /// Rows of the 2-D grid each vector is reshaped into
    #[arg(long)]
    grid_rows: Option<usize>,

    /// Output dimension of the final PCA (default: input dimension)
    #[arg(long)]
    pca_dim: Option<usize>,

    /// Word list file restricting the vocabulary
    #[arg(long)]
    words: Option<PathBuf>,

    /// Output embedding file
    #[arg(long)]
    out: Option<PathBuf>,

    /// Manifest path (default: <out>.manifest.json)
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// Process words on a single thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    embeddings: PathBuf,

    /// Similarity ratings (SimLex-999 TSV layout)
    #[arg(long)]
    simlex: PathBuf,

    /// Print the report as JSON instead of text
    #[arg(long)]
    json: bool,

    /// Also write the JSON report to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NeighborsArgs {
    word: String,

    #[command(flatten)]
    source: SourceArgs,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    embeddings: PathBuf,

    /// Word list file, or inline words separated by commas/spaces
    #[arg(long)]
    words: String,

    /// Output CSV
    #[arg(long)]
    out: PathBuf,

    /// Lowercase the words before lookup
    #[arg(long)]
    lowercase: bool,
}

fn source_overrides(s: &SourceArgs) -> Overrides {
    Overrides {
        conceptnet_dump: s.conceptnet_dump.clone(),
        conceptnet_api: s.conceptnet_api.clone(),
        cache_dir: s.cache_dir.clone(),
        offline: s.offline,
        neighbor_cap: s.neighbor_cap,
        ..Overrides::default()
    }
}

fn env_cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn run_build(args: BuildArgs) -> Result<(), PipelineError> {
    let overrides = Overrides {
        embeddings: args.embeddings,
        som_iterations: args.som_iterations,
        som_lr: args.som_lr,
        som_k: args.som_k,
        grid_rows: args.grid_rows,
        pca_dim: args.pca_dim,
        words: args.words,
        out: args.out,
        manifest: args.manifest,
        sequential: args.sequential,
        ..source_overrides(&args.source)
    };
    let cfg = PipelineConfig::resolve(args.source.config.as_deref(), &overrides, env_cache_dir())?;
    let built = pipeline::build(&cfg)?;
    let c = &built.manifest.counts;
    if c.dump_malformed_lines > 0 {
        eprintln!(
            "warning: {} malformed ConceptNet lines ignored",
            c.dump_malformed_lines
        );
    }
    if !c.oov_words.is_empty() {
        eprintln!(
            "warning: {} listed words not in the embeddings",
            c.oov_words.len()
        );
    }
    println!(
        "wrote {} words (dim {}) to {}",
        built.table.len(),
        built.table.dim(),
        cfg.output_path
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_default()
    );
    println!("digest {}", built.manifest.output_digest);
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), PipelineError> {
    let report = pipeline::evaluate_files(&args.embeddings, &args.simlex)?;
    if args.json {
        println!("{}", report.to_json());
    } else {
        println!("{}", report.render_text());
        if !report.missing_words.is_empty() {
            println!("missing: {}", report.missing_words.join(" "));
        }
    }
    if let Some(out) = args.out {
        fs::write(&out, report.to_json())
            .map_err(|e| PipelineError::io(pipeline::Stage::Write, &out, e))?;
    }
    Ok(())
}

fn run_neighbors(args: NeighborsArgs) -> Result<(), PipelineError> {
    let overrides = source_overrides(&args.source);
    let cfg = PipelineConfig::resolve(args.source.config.as_deref(), &overrides, env_cache_dir())?;
    let ns = pipeline::neighbors_of(&cfg, &args.word)?;
    print!("{}", ns.render());
    Ok(())
}

fn run_export(args: ExportArgs) -> Result<(), PipelineError> {
    let path = PathBuf::from(&args.words);
    let text = if path.is_file() {
        fs::read_to_string(&path).map_err(|e| PipelineError::io(pipeline::Stage::Load, &path, e))?
    } else {
        args.words.clone()
    };
    let text = if args.lowercase {
        text.to_lowercase()
    } else {
        text
    };
    let words = pipeline::parse_word_list(&text);
    let export = pipeline::export3d_files(&args.embeddings, &words, &args.out)?;
    if !export.missing.is_empty() {
        eprintln!("skipped (not embeddable): {}", export.missing.join(" "));
    }
    println!("wrote {} rows to {}", export.rows.len(), args.out.display());
    Ok(())
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
    let result = match cli.command {
        Command::Build(a) => run_build(a),
        Command::Eval(a) => run_eval(a),
        Command::Neighbors(a) => run_neighbors(a),
        Command::Export3d(a) => run_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
