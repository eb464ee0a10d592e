mod args;
mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser};
use serde::Serialize;

use semtext::dataset::{load_dataset, write_dataset};
use semtext::dom::{DomError, TagGroups};
use semtext::embedding::{EmbeddingStore, SubwordConfig};
use semtext::labeler::Label;
use semtext::lexicalizer::Lexicon;
use semtext::metrics::evaluate_pages;
use semtext::model::{FeatureMask, ModelConfig, ModelParams};
use semtext::persist::{load_model, save_model};
use semtext::pipeline::Extractor;
use semtext::resources::DataDir;
use semtext::segmenter::{Segmenter, TextBlock};
use semtext::synth::{toy_corpus, ToyCorpusConfig};
use semtext::trainer::{train, TrainConfig, TrainError};
use semtext::Error;

pub use args::Cli;
use args::{Command, EvalArgs, ExtractArgs, Format, InputArgs, SynthArgs, TrainArgs};

/// A failed run, by exit-code class.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Model(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Input(_) => 2,
            Failure::Model(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Model(m) => m,
        }
    }
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        let msg = e.to_string();
        match e {
            Error::Model(_) | Error::Persist(_) => Failure::Model(msg),
            Error::Train(TrainError::Config(_)) => Failure::Usage(msg),
            Error::Train(TrainError::Divergence { .. } | TrainError::Model(_)) => Failure::Model(msg),
            _ => Failure::Input(msg),
        }
    }
}

fn io_failure(what: &Path, e: std::io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", what.display()))
}

/// Parses `argv` (after config-file expansion). `Ok(None)` means help or
/// version text was printed.
pub fn parse(argv: Vec<OsString>) -> Result<Option<Cli>, Failure> {
    let argv = config::expand(argv, &Cli::command()).map_err(Failure::Usage)?;
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(Some(cli)),
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            Ok(None)
        }
        Err(e) => Err(Failure::Usage(e.render().to_string().trim_end().to_string())),
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract(a) => extract(a),
        Command::Segment(a) => extract(ExtractArgs {
            input: a.input,
            model: None,
            embeddings: None,
            format: Format::Jsonl,
            all: true,
            blocks_only: true,
            include_ids: a.include_ids,
        }),
        Command::Train(a) => train_cmd(a, cli.quiet),
        Command::Eval(a) => eval(a, cli.quiet),
        Command::Synth(a) => synth(a),
    }
}

enum Source {
    Stdin,
    File(PathBuf),
}

impl Source {
    fn name(&self) -> String {
        match self {
            Source::Stdin => "-".into(),
            Source::File(p) => p.display().to_string(),
        }
    }

    fn read(&self) -> Result<Vec<u8>, Failure> {
        let mut buf = Vec::new();
        match self {
            Source::Stdin => std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::Input(format!("stdin: {e}")))?,
            Source::File(p) => File::open(p)
                .and_then(|mut f| f.read_to_end(&mut buf))
                .map_err(|e| io_failure(p, e))?,
        };
        Ok(buf)
    }
}

/// Input documents in order; directories contribute their files sorted by
/// path.
fn sources(inputs: &[PathBuf]) -> Result<Vec<Source>, Failure> {
    if inputs.is_empty() {
        return Ok(vec![Source::Stdin]);
    }
    let mut out = Vec::new();
    for input in inputs {
        if input.as_os_str() == "-" {
            out.push(Source::Stdin);
        } else if input.is_dir() {
            for entry in walkdir::WalkDir::new(input).sort_by_file_name() {
                let entry = entry.map_err(|e| Failure::Input(e.to_string()))?;
                if entry.file_type().is_file() {
                    out.push(Source::File(entry.into_path()));
                }
            }
        } else if input.is_file() {
            out.push(Source::File(input.clone()))
        } else {
            return Err(Failure::Input(format!("{}: no such file or directory", input.display())));
        }
    }
    Ok(out)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct BlockLine<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    doc: Option<&'a str>,
    i: usize,
    tags: &'a [String],
    classes: &'a [String],
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

struct Labeling<'a> {
    extractor: Option<&'a Extractor>,
    segmenter: &'a Segmenter,
    args: &'a ExtractArgs,
    multi: bool,
}

impl Labeling<'_> {
    /// The rendered output for one document.
    fn render(&self, source: &Source) -> Result<String, Failure> {
        let name = source.name();
        let bytes = source.read()?;
        let hint = self.args.input.encoding.as_deref();
        let root = match semtext::dom::parse_html(&bytes, hint) {
            Ok(root) => root,
            Err(DomError::EmptyDocument) => {
                log::warn!("{name}: empty document");
                return Ok(String::new());
            }
            Err(e) => return Err(Failure::Input(format!("{name}: {}", Error::from(e)))),
        };
        let blocks = match self.extractor {
            Some(x) => x.segment_tree(&root),
            None => self.segmenter.segment(&root),
        }
        .blocks;
        let labeled: Vec<(&TextBlock, Option<(Label, f64)>)> = match self.extractor {
            Some(x) => {
                let labels = x.label(&blocks).map_err(|e| Failure::from(Error::from(e)))?;
                blocks
                    .iter()
                    .zip(labels)
                    .map(|(b, l)| (b, Some((l.label, l.score))))
                    .collect()
            }
            None => blocks.iter().map(|b| (b, None)).collect(),
        };
        let mut out = String::new();
        for (i, (block, label)) in labeled.into_iter().enumerate() {
            let keep = self.args.all || label.is_none_or(|(l, _)| l == Label::Main);
            if !keep {
                continue;
            }
            match self.args.format {
                Format::Text => {
                    out.push_str(&block.text);
                    out.push('\n');
                }
                Format::Jsonl => {
                    let line = BlockLine {
                        doc: self.multi.then_some(name.as_str()),
                        i,
                        tags: &block.tag_seq,
                        classes: &block.class_seq,
                        text: &block.text,
                        label: label.map(|(l, _)| l),
                        score: label.map(|(_, s)| s),
                    };
                    out.push_str(&serde_json::to_string(&line).expect("block serializes"));
                    out.push('\n');
                }
            }
        }
        Ok(out)
    }
}

fn resources() -> Result<(TagGroups, Lexicon), Failure> {
    let data = DataDir::from_env();
    Ok((data.tag_groups()?, data.lexicon()?))
}

/// The vector store for a loaded model: the explicit file, else the file
/// named in the model (as given, or next to the model file), else an empty
/// subword-only store.
fn model_store(
    params: &ModelParams,
    flag: Option<&Path>,
    model_path: &Path,
) -> Result<EmbeddingStore, Failure> {
    let subword = params.config.subword;
    if let Some(path) = flag {
        return Ok(EmbeddingStore::load(path, subword)?);
    }
    let Some(named) = &params.config.embeddings else {
        return Ok(EmbeddingStore::empty(params.config.k, subword));
    };
    let named = Path::new(named);
    let beside = model_path.parent().map(|d| d.join(named));
    let found = std::iter::once(named.to_path_buf())
        .chain(beside)
        .find(|p| p.is_file())
        .ok_or_else(|| {
            Failure::Model(format!(
                "embedding: model was trained with {}, which was not found; pass --embeddings",
                named.display()
            ))
        })?;
    Ok(EmbeddingStore::load(&found, subword)?)
}

fn load_extractor(model: &Path, embeddings: Option<&Path>) -> Result<Extractor, Failure> {
    let params = load_model(model)?;
    let store = model_store(&params, embeddings, model)?;
    let (groups, lexicon) = resources()?;
    Ok(Extractor::new(params, store, lexicon, groups)?)
}

fn in_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        Ok(f())
    }
}

fn extract(args: ExtractArgs) -> Result<(), Failure> {
    let InputArgs { inputs, jobs, output: out_path, .. } = &args.input;
    if *jobs == 0 {
        return Err(Failure::Usage("--jobs must be at least 1".into()));
    }
    let extractor = match (&args.model, args.blocks_only) {
        (Some(model), false) => Some(load_extractor(model, args.embeddings.as_deref())?),
        _ => None,
    };
    let (groups, _) = resources()?;
    let segmenter = Segmenter {
        groups,
        include_ids: args.include_ids,
    };
    let multi = inputs.len() > 1 || inputs.iter().any(|p| p.is_dir());
    let docs = sources(inputs)?;
    let labeling = Labeling {
        extractor: extractor.as_ref(),
        segmenter: &segmenter,
        args: &args,
        multi,
    };
    let mut out = output(out_path.as_deref())?;
    let write_err = |e: std::io::Error| Failure::Input(format!("output: {e}"));
    for window in docs.chunks(*jobs) {
        let rendered: Vec<Result<String, Failure>> = in_pool(*jobs, || {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                window.par_iter().map(|s| labeling.render(s)).collect()
            }
            #[cfg(not(feature = "parallel"))]
            window.iter().map(|s| labeling.render(s)).collect()
        })?;
        for text in rendered {
            out.write_all(text?.as_bytes()).map_err(write_err)?;
        }
    }
    out.flush().map_err(write_err)
}

fn train_cmd(a: TrainArgs, quiet: bool) -> Result<(), Failure> {
    let corpus = load_dataset(&a.data)?;
    let subword = SubwordConfig {
        buckets: a.buckets,
        ..SubwordConfig::default()
    };
    let store = match &a.embeddings {
        Some(p) => EmbeddingStore::load(p, subword)?,
        None => {
            if a.k == 0 {
                return Err(Failure::Usage("--k must be positive".into()));
            }
            EmbeddingStore::empty(a.k, subword)
        }
    };
    let init = a.init_from.as_deref().map(load_model).transpose()?;
    if let Some(p) = &init {
        log::info!("continuing from {} parameters; shape flags are ignored", p.param_count());
    }
    let model = ModelConfig {
        n: a.n,
        k: store.dim(),
        max_blocks: a.m,
        widths: a.widths.clone(),
        counts: a.counts.clone(),
        hidden: a.hidden,
        relu: a.relu,
        include_ids: a.include_ids,
        mask: if a.text_only { FeatureMask::TEXT_ONLY } else { FeatureMask::ALL },
        subword,
        embeddings: a.embeddings.as_ref().map(|p| p.display().to_string()),
    };
    let config = TrainConfig {
        model,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        epochs: a.epochs,
        seed: a.seed,
        validation_ratio: a.validation_ratio,
        momentum: a.momentum,
        clip_norm: a.clip,
        jobs: a.jobs,
    };
    let (_, lexicon) = resources()?;
    let outcome = train(&corpus, &store, &lexicon, &config, init)?;
    save_model(&outcome.params, &a.out)?;
    if let Some(path) = &a.log {
        let text = serde_json::to_string_pretty(&outcome.log).expect("log serializes");
        std::fs::write(path, text + "\n").map_err(|e| io_failure(path, e))?;
    }
    if !quiet {
        let f1 = outcome
            .log
            .get(outcome.best_epoch.wrapping_sub(1))
            .map_or(String::from("n/a"), |e| format!("{:.4}", e.f1));
        eprintln!(
            "semtext: best epoch {} of {} (validation F1 {f1}); wrote {}",
            outcome.best_epoch,
            a.epochs,
            a.out.display()
        );
    }
    Ok(())
}

fn eval(a: EvalArgs, quiet: bool) -> Result<(), Failure> {
    let extractor = load_extractor(&a.model, a.embeddings.as_deref())?;
    let pages = load_dataset(&a.data)?;
    let mut predicted = Vec::with_capacity(pages.len());
    for page in &pages {
        let labels = extractor.label(&page.blocks).map_err(|e| Failure::from(Error::from(e)))?;
        predicted.push(labels.into_iter().map(|b| b.label).collect::<Vec<_>>());
    }
    let ids: Vec<String> = pages.iter().map(|p| p.id.clone()).collect();
    let gold: Vec<&[Label]> = pages.iter().map(|p| p.labels.as_slice()).collect();
    let report = evaluate_pages(&ids, &predicted, &gold)?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &a.report {
        Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Input(format!("output: {e}")))?;
        }
    }
    if !quiet {
        eprintln!(
            "semtext: P {:.4} R {:.4} F1 {:.4} over {} blocks",
            report.precision,
            report.recall,
            report.f1,
            report.counts.total()
        );
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<(), Failure> {
    if !(0.0..1.0).contains(&a.ambiguous) {
        return Err(Failure::Usage("--ambiguous must lie in [0, 1)".into()));
    }
    let pages = toy_corpus(&ToyCorpusConfig {
        pages: a.pages,
        seed: a.seed,
        ambiguous_ratio: a.ambiguous,
    });
    let out = output(a.out.as_deref())?;
    write_dataset(out, &pages).map_err(|e| Failure::Input(format!("output: {e}")))
}
