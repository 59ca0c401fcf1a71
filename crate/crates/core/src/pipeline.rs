//! End-to-end orchestration: load -> neighbors -> combine -> SOM -> PCA -> write.
//!
//! Configuration comes from an optional TOML file plus overrides (command
//! line flags, then the cache-dir environment variable). Relative paths in
//! the file are resolved against the file's directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::combiner::{combine_word, CombineConfig, MissingNeighborPolicy, NoNeighborFallback};
use crate::conceptnet::{self, normalize_term, ApiClient, ConceptGraph, NeighborSet};
use crate::embedding::{EmbeddingError, EmbeddingTable};
use crate::eval::{self, EvalReport};
use crate::pca::{self, PcaModel};
use crate::som::{self, SomConfig};

/// Environment variable overriding the API cache directory.
pub const CACHE_DIR_ENV: &str = "WORDFUSE_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Config,
    Load,
    Neighbors,
    Combine,
    Som,
    Pca,
    Write,
    Eval,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Neighbors => "neighbors",
            Stage::Combine => "combine",
            Stage::Som => "som",
            Stage::Pca => "pca",
            Stage::Write => "write",
            Stage::Eval => "eval",
            Stage::Export => "export",
        };
        f.write_str(name)
    }
}

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {source}")]
    Data {
        stage: Stage,
        #[source]
        source: BoxError,
    },
    #[error("{stage}: {source}")]
    Io {
        stage: Stage,
        #[source]
        source: io::Error,
    },
}

impl PipelineError {
    fn data(stage: Stage, source: impl Into<BoxError>) -> Self {
        PipelineError::Data {
            stage,
            source: source.into(),
        }
    }

    pub fn io(stage: Stage, path: &Path, source: io::Error) -> Self {
        PipelineError::Io {
            stage,
            source: io::Error::new(source.kind(), format!("{}: {source}", path.display())),
        }
    }

    fn embedding(stage: Stage, path: &Path, e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::Io(source) => Self::io(stage, path, source),
            other => Self::data(stage, format!("{}: {other}", path.display())),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            PipelineError::Config(_) => Stage::Config,
            PipelineError::Data { stage, .. } | PipelineError::Io { stage, .. } => *stage,
        }
    }

    /// 1 usage/validation, 2 data, 3 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data { .. } => 2,
            PipelineError::Io { .. } => 3,
        }
    }
}

/// Where related words come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ConceptNetSource {
    Dump {
        path: PathBuf,
        language: String,
    },
    Api {
        endpoint: String,
        cache_dir: PathBuf,
        offline: bool,
        request_interval_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VocabularySource {
    /// Every table word with at least one ConceptNet neighbor.
    AllEmbeddableConceptnetTerms,
    WordList(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub embeddings_path: Option<PathBuf>,
    pub conceptnet: Option<ConceptNetSource>,
    pub relations: Option<BTreeSet<String>>,
    pub combine: CombineConfig,
    pub som: SomConfig,
    pub pca_dim: Option<usize>,
    pub vocabulary: VocabularySource,
    pub output_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
    pub parallel: bool,
}

// On-disk layout of the TOML config.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    embeddings: Option<PathBuf>,
    output: Option<PathBuf>,
    manifest: Option<PathBuf>,
    vocabulary: Option<String>,
    neighbor_cap: Option<usize>,
    pca_dim: Option<usize>,
    parallel: Option<bool>,
    #[serde(default)]
    conceptnet: ConceptNetSection,
    #[serde(default)]
    combine: CombineSection,
    #[serde(default)]
    som: SomSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptNetSection {
    dump: Option<PathBuf>,
    api: Option<String>,
    cache_dir: Option<PathBuf>,
    offline: Option<bool>,
    language: Option<String>,
    relations: Option<BTreeSet<String>>,
    request_interval_ms: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombineSection {
    missing_neighbor_policy: Option<MissingNeighborPolicy>,
    fallback_when_no_neighbors: Option<NoNeighborFallback>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SomSection {
    iterations: Option<usize>,
    learning_rate: Option<f64>,
    k_neighbors: Option<usize>,
    grid_rows: Option<usize>,
}

/// Command-line values that win over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub embeddings: Option<PathBuf>,
    pub conceptnet_dump: Option<PathBuf>,
    pub conceptnet_api: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub neighbor_cap: Option<usize>,
    pub som_iterations: Option<usize>,
    pub som_lr: Option<f64>,
    pub som_k: Option<usize>,
    pub grid_rows: Option<usize>,
    pub pca_dim: Option<usize>,
    pub words: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub sequential: bool,
}

fn resolve_path(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    /// Merges, in increasing priority: defaults, `config_file`, `env_cache_dir`
    /// (cache directory only) and `overrides`.
    pub fn resolve(
        config_file: Option<&Path>,
        overrides: &Overrides,
        env_cache_dir: Option<PathBuf>,
    ) -> Result<Self, PipelineError> {
        let (file, base) = match config_file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                let parsed: ConfigFile = toml::from_str(&text)
                    .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (parsed, base)
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let rel = |p: PathBuf| resolve_path(&base, p);

        let section = file.conceptnet;
        if section.dump.is_some() && section.api.is_some() {
            return Err(PipelineError::Config(
                "[conceptnet] sets both `dump` and `api`".into(),
            ));
        }
        let cache_dir = overrides
            .cache_dir
            .clone()
            .or(env_cache_dir)
            .or_else(|| section.cache_dir.map(&rel));
        let offline = overrides.offline || section.offline.unwrap_or(false);
        let interval = section.request_interval_ms.unwrap_or(1000);
        let language = section.language.unwrap_or_else(|| "en".to_owned());
        let api_source = |endpoint: String| -> Result<ConceptNetSource, PipelineError> {
            let cache_dir = cache_dir.clone().ok_or_else(|| {
                PipelineError::Config("API mode needs a cache directory (--cache-dir)".into())
            })?;
            Ok(ConceptNetSource::Api {
                endpoint,
                cache_dir,
                offline,
                request_interval_ms: interval,
            })
        };
        let conceptnet = if let Some(path) = overrides.conceptnet_dump.clone() {
            Some(ConceptNetSource::Dump { path, language })
        } else if let Some(endpoint) = overrides.conceptnet_api.clone() {
            Some(api_source(endpoint)?)
        } else if let Some(path) = section.dump {
            Some(ConceptNetSource::Dump {
                path: rel(path),
                language,
            })
        } else if let Some(endpoint) = section.api {
            Some(api_source(endpoint)?)
        } else {
            None
        };

        let vocabulary = match overrides.words.clone() {
            Some(p) => VocabularySource::WordList(p),
            None => match file.vocabulary.as_deref() {
                None | Some("all") | Some("all-embeddable-conceptnet-terms") => {
                    VocabularySource::AllEmbeddableConceptnetTerms
                }
                Some(p) => VocabularySource::WordList(rel(PathBuf::from(p))),
            },
        };

        let defaults = SomConfig::default();
        let som = SomConfig {
            iterations: overrides
                .som_iterations
                .or(file.som.iterations)
                .unwrap_or(defaults.iterations),
            learning_rate: overrides
                .som_lr
                .or(file.som.learning_rate)
                .unwrap_or(defaults.learning_rate),
            k_neighbors: overrides
                .som_k
                .or(file.som.k_neighbors)
                .unwrap_or(defaults.k_neighbors),
            grid_rows: overrides.grid_rows.or(file.som.grid_rows),
        };
        let combine = CombineConfig {
            neighbor_cap: overrides
                .neighbor_cap
                .or(file.neighbor_cap)
                .unwrap_or(conceptnet::DEFAULT_NEIGHBOR_CAP),
            missing_neighbor_policy: file.combine.missing_neighbor_policy.unwrap_or_default(),
            fallback_when_no_neighbors: file.combine.fallback_when_no_neighbors.unwrap_or_default(),
        };

        Ok(PipelineConfig {
            embeddings_path: overrides.embeddings.clone().or(file.embeddings.map(&rel)),
            conceptnet,
            relations: section.relations,
            combine,
            som,
            pca_dim: overrides.pca_dim.or(file.pca_dim),
            vocabulary,
            output_path: overrides.out.clone().or(file.output.map(&rel)),
            manifest_path: overrides.manifest.clone().or(file.manifest.map(&rel)),
            parallel: !overrides.sequential && file.parallel.unwrap_or(true),
        })
    }

    fn require_file(what: &str, path: &Path) -> Result<(), PipelineError> {
        if !path.is_file() {
            return Err(PipelineError::Config(format!(
                "{what} {} does not exist",
                path.display()
            )));
        }
        Ok(())
    }

    fn validate_source(&self) -> Result<&ConceptNetSource, PipelineError> {
        let source = self.conceptnet.as_ref().ok_or_else(|| {
            PipelineError::Config(
                "no ConceptNet source (--conceptnet-dump or --conceptnet-api)".into(),
            )
        })?;
        if let ConceptNetSource::Dump { path, .. } = source {
            Self::require_file("ConceptNet dump", path)?;
        }
        if self.combine.validate().is_err() {
            return Err(PipelineError::Config(
                "neighbor_cap must be at least 1".into(),
            ));
        }
        Ok(source)
    }

    /// Checks everything `build` needs before any real work starts,
    /// including the embedding dimension read from the file header.
    pub fn validate_for_build(&self) -> Result<(), PipelineError> {
        let embeddings = self
            .embeddings_path
            .as_ref()
            .ok_or_else(|| PipelineError::Config("no embeddings path (--embeddings)".into()))?;
        Self::require_file("embeddings file", embeddings)?;
        self.validate_source()?;
        if let VocabularySource::WordList(p) = &self.vocabulary {
            Self::require_file("word list", p)?;
        }
        if self.output_path.is_none() {
            return Err(PipelineError::Config("no output path (--out)".into()));
        }
        let dim = header_dim(embeddings)?;
        self.som
            .validate(dim)
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(d) = self.pca_dim {
            if d < 1 || d > dim {
                return Err(PipelineError::Config(format!(
                    "pca_dim {d} outside 1..={dim}"
                )));
            }
        }
        Ok(())
    }

    pub fn manifest_path(&self) -> Option<PathBuf> {
        self.manifest_path.clone().or_else(|| {
            self.output_path.as_ref().map(|o| {
                let mut s = o.clone().into_os_string();
                s.push(".manifest.json");
                PathBuf::from(s)
            })
        })
    }
}

fn header_dim(path: &Path) -> Result<usize, PipelineError> {
    let file = fs::File::open(path)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let mut header = String::new();
    BufReader::new(file)
        .read_line(&mut header)
        .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    header
        .split_whitespace()
        .nth(1)
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| {
            PipelineError::Config(format!(
                "{}: malformed header {:?}",
                path.display(),
                header.trim_end()
            ))
        })
}

/// Splits free text into distinct word tokens, first occurrence first.
/// Separators are whitespace and commas; leading/trailing punctuation is
/// dropped ("Mary?" -> "Mary").
pub fn parse_word_list(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    text.split(|c: char| c.is_whitespace() || c == ',')
        .map(|t| t.trim_matches(|c: char| !(c.is_alphanumeric() || c == '_')))
        .filter(|t| !t.is_empty())
        .filter(|t| seen.insert(t.to_string()))
        .map(str::to_owned)
        .collect()
}

pub fn read_word_list(path: &Path) -> Result<Vec<String>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(Stage::Load, path, e))?;
    Ok(parse_word_list(&text))
}

/// A ready-to-query ConceptNet source.
pub enum NeighborProvider {
    Dump {
        graph: ConceptGraph,
        malformed_lines: usize,
        skipped_lines: usize,
    },
    Api(ApiClient),
}

impl NeighborProvider {
    pub fn open(source: &ConceptNetSource) -> Result<Self, PipelineError> {
        match source {
            ConceptNetSource::Dump { path, language } => {
                let file = fs::File::open(path)
                    .map_err(|e| PipelineError::io(Stage::Neighbors, path, e))?;
                let parsed = conceptnet::parse_dump(BufReader::new(file), language);
                Ok(NeighborProvider::Dump {
                    graph: ConceptGraph::new(parsed.edges),
                    malformed_lines: parsed.errors.len(),
                    skipped_lines: parsed.skipped,
                })
            }
            ConceptNetSource::Api {
                endpoint,
                cache_dir,
                offline,
                request_interval_ms,
            } => Ok(NeighborProvider::Api(
                ApiClient::builder(cache_dir)
                    .endpoint(endpoint.clone())
                    .offline(*offline)
                    .min_interval(Duration::from_millis(*request_interval_ms))
                    .build(),
            )),
        }
    }

    pub fn neighbors(
        &self,
        word: &str,
        cap: usize,
        relations: Option<&BTreeSet<String>>,
    ) -> Result<NeighborSet, PipelineError> {
        match self {
            NeighborProvider::Dump { graph, .. } => Ok(graph.neighbors(word, cap, relations)),
            NeighborProvider::Api(client) => client
                .fetch_neighbors(word, cap, relations)
                .map_err(|e| PipelineError::data(Stage::Neighbors, e)),
        }
    }

    /// Cheap pre-check: can `word` have any neighbors at all?
    fn may_have_neighbors(&self, word: &str) -> bool {
        match self {
            NeighborProvider::Dump { graph, .. } => graph.contains_term(word),
            NeighborProvider::Api(_) => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunCounts {
    pub embeddings_loaded: usize,
    pub duplicate_embedding_rows: usize,
    pub dump_edges: usize,
    pub dump_skipped_lines: usize,
    pub dump_malformed_lines: usize,
    pub candidate_words: usize,
    pub vocab_size: usize,
    pub fallback_words: usize,
    pub excluded_words: usize,
    pub neighbor_misses: usize,
    pub oov_words: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub counts: RunCounts,
    /// Wall-clock milliseconds per stage.
    pub timings_ms: BTreeMap<String, f64>,
    /// `sha256:<hex>` of the output embedding file.
    pub output_digest: String,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Debug)]
pub struct BuildOutput {
    pub table: EmbeddingTable,
    pub manifest: RunManifest,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0
            .insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        out
    }
}

fn map_items<I, T, F>(items: &[I], parallel: bool, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Runs the whole pipeline and writes the output table and manifest.
pub fn build(cfg: &PipelineConfig) -> Result<BuildOutput, PipelineError> {
    cfg.validate_for_build()?;
    let embeddings_path = cfg.embeddings_path.as_deref().expect("validated");
    let output_path = cfg.output_path.as_deref().expect("validated");
    let source = cfg.conceptnet.as_ref().expect("validated");
    let cap = cfg.combine.neighbor_cap;
    let relations = cfg.relations.as_ref();

    let mut timer = Timer(BTreeMap::new());
    let mut counts = RunCounts::default();

    let (table, report) = timer.time(Stage::Load, || {
        EmbeddingTable::load_file(embeddings_path)
            .map_err(|e| PipelineError::embedding(Stage::Load, embeddings_path, e))
    })?;
    counts.embeddings_loaded = table.len();
    counts.duplicate_embedding_rows = report.duplicates;

    // Candidate words, each paired with its ConceptNet query term.
    let candidates: Vec<String> = match &cfg.vocabulary {
        VocabularySource::WordList(path) => {
            let listed = read_word_list(path)?;
            let (known, oov): (Vec<String>, Vec<String>) =
                listed.into_iter().partition(|w| table.contains(w));
            counts.oov_words = oov;
            known
        }
        VocabularySource::AllEmbeddableConceptnetTerms => {
            table.words().map(str::to_owned).collect()
        }
    };

    let provider = timer.time(Stage::Neighbors, || NeighborProvider::open(source))?;
    if let NeighborProvider::Dump {
        graph,
        malformed_lines,
        skipped_lines,
    } = &provider
    {
        counts.dump_edges = graph.edges().len();
        counts.dump_malformed_lines = *malformed_lines;
        counts.dump_skipped_lines = *skipped_lines;
    }
    let restrict = matches!(
        cfg.vocabulary,
        VocabularySource::AllEmbeddableConceptnetTerms
    );
    let neighbor_sets: Vec<(String, NeighborSet)> = timer.time(Stage::Neighbors, || {
        let mut out = Vec::new();
        for word in &candidates {
            let term = match normalize_term(word) {
                Ok(t) => t,
                Err(_) => continue,
            };
            if restrict && !provider.may_have_neighbors(&term) {
                continue;
            }
            let ns = provider.neighbors(&term, cap, relations)?;
            if restrict && ns.is_empty() {
                continue;
            }
            out.push((word.clone(), ns));
        }
        Ok::<_, PipelineError>(out)
    })?;
    counts.candidate_words = neighbor_sets.len();

    let fused = timer.time(Stage::Combine, || {
        map_items(&neighbor_sets, cfg.parallel, |(word, ns)| {
            combine_word(word, &table, ns, &cfg.combine)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::data(Stage::Combine, e))
    })?;
    let mut fused_entries = Vec::with_capacity(fused.len());
    for f in fused {
        match f {
            Some(f) => {
                counts.neighbor_misses += f.missing_neighbors.len();
                if f.used_neighbors.is_empty() {
                    counts.fallback_words += 1;
                }
                fused_entries.push((f.word, f.v_cm));
            }
            None => counts.excluded_words += 1,
        }
    }
    let fused_table = EmbeddingTable::from_entries(table.dim(), fused_entries)
        .map_err(|e| PipelineError::data(Stage::Combine, e))?;
    counts.vocab_size = fused_table.len();

    let refined = timer.time(Stage::Som, || {
        som::refine_vocabulary(&fused_table, &cfg.som, cfg.parallel)
            .map_err(|e| PipelineError::data(Stage::Som, e))
    })?;

    let d_out = cfg.pca_dim.unwrap_or(refined.dim());
    let projected = timer.time(Stage::Pca, || {
        pca::project_embeddings(&refined, d_out).map_err(|e| PipelineError::data(Stage::Pca, e))
    })?;

    let bytes = projected.to_text_bytes();
    let output_digest = digest(&bytes);
    timer.time(Stage::Write, || {
        if let Some(parent) = output_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| PipelineError::io(Stage::Write, parent, e))?;
        }
        fs::write(output_path, &bytes).map_err(|e| PipelineError::io(Stage::Write, output_path, e))
    })?;

    let manifest = RunManifest {
        config: cfg.clone(),
        counts,
        timings_ms: timer.0,
        output_digest,
    };
    if let Some(path) = cfg.manifest_path() {
        fs::write(&path, manifest.to_json())
            .map_err(|e| PipelineError::io(Stage::Write, &path, e))?;
    }
    Ok(BuildOutput {
        table: projected,
        manifest,
    })
}

/// Loads an embedding file and scores it against a similarity file.
pub fn evaluate_files(embeddings: &Path, simlex: &Path) -> Result<EvalReport, PipelineError> {
    let (table, _) = EmbeddingTable::load_file(embeddings)
        .map_err(|e| PipelineError::embedding(Stage::Load, embeddings, e))?;
    let file = fs::File::open(simlex).map_err(|e| PipelineError::io(Stage::Eval, simlex, e))?;
    let pairs = eval::parse_simlex(BufReader::new(file))
        .map_err(|e| PipelineError::data(Stage::Eval, format!("{}: {e}", simlex.display())))?;
    Ok(eval::evaluate(&table, &pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Export3d {
    /// `(word, [x, y, z])` in request order.
    pub rows: Vec<(String, [f64; 3])>,
    pub missing: Vec<String>,
}

impl Export3d {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("word,x,y,z\n");
        for (w, [x, y, z]) in &self.rows {
            out.push_str(&format!("{w},{x},{y},{z}\n"));
        }
        out
    }
}

/// 3-D coordinates for `words` from a PCA fit over exactly those words.
pub fn export3d(table: &EmbeddingTable, words: &[String]) -> Result<Export3d, PipelineError> {
    let mut present = Vec::new();
    let mut missing = Vec::new();
    for w in words {
        match table.lookup(w) {
            Some(v) => present.push((w.clone(), v.clone())),
            None => missing.push(w.clone()),
        }
    }
    if present.len() < 2 {
        return Err(PipelineError::data(
            Stage::Export,
            format!(
                "need at least 2 embeddable words, found {} (missing: {})",
                present.len(),
                missing.join(", ")
            ),
        ));
    }
    let data: Vec<_> = present.iter().map(|(_, v)| v.clone()).collect();
    let model = PcaModel::fit(&data, 3).map_err(|e| PipelineError::data(Stage::Export, e))?;
    let rows = present
        .into_iter()
        .map(|(w, v)| {
            let p = model.transform(&v).expect("dimension checked by fit");
            let s = p.as_slice();
            (w, [s[0], s[1], s[2]])
        })
        .collect();
    Ok(Export3d { rows, missing })
}

pub fn export3d_files(
    embeddings: &Path,
    words: &[String],
    out: &Path,
) -> Result<Export3d, PipelineError> {
    let (table, _) = EmbeddingTable::load_file(embeddings)
        .map_err(|e| PipelineError::embedding(Stage::Load, embeddings, e))?;
    let export = export3d(&table, words)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(Stage::Write, parent, e))?;
    }
    fs::write(out, export.to_csv()).map_err(|e| PipelineError::io(Stage::Write, out, e))?;
    Ok(export)
}

/// Neighbor listing for one raw word under `cfg`'s ConceptNet source.
pub fn neighbors_of(cfg: &PipelineConfig, raw_word: &str) -> Result<NeighborSet, PipelineError> {
    let source = cfg.validate_source()?;
    let word = normalize_term(raw_word).map_err(|e| PipelineError::Config(e.to_string()))?;
    let provider = NeighborProvider::open(source)?;
    provider.neighbors(&word, cfg.combine.neighbor_cap, cfg.relations.as_ref())
}
