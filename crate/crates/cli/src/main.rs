use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use venuerec::bundle::{load_bundle, save_bundle};
use venuerec::corpus::{fingerprint_file, load_corpus, PaperCorpus};
use venuerec::eval::render_table;
use venuerec::pipeline::{evaluate_methods, train, Method, ReportFile, RunConfig};
use venuerec::recommend::{recommend, Query, RecommendOptions, Recommendation};

#[derive(Parser)]
#[command(name = "venuerec", version, about = "Explainable scientific venue recommendation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSON-lines corpus and print its fingerprint.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        /// Write the ingest summary as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model bundle and report held-out metrics.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Bundle output path (default: output.bundle from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare methods on the held-out split.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        /// Method to evaluate; repeat for several. Defaults to all methods.
        #[arg(long = "method")]
        methods: Vec<Method>,
        /// Seeded runs averaged for the uniform-random baseline.
        #[arg(long)]
        runs: Option<usize>,
        /// Cutoff for Acc@k; repeat for several.
        #[arg(long = "k")]
        ks: Vec<usize>,
        /// Report output path (default: output.report from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank venues for one paper.
    Recommend {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long = "abstract", default_value = "")]
        abstract_text: String,
        /// Comma-separated keywords.
        #[arg(long, value_delimiter = ',')]
        keywords: Vec<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        top_topics: usize,
        #[arg(long, default_value_t = 5)]
        terms_per_topic: usize,
        /// Print the full recommendation as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Serve a bundle over HTTP.
    Serve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "127.0.0.1")]
        addr: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus path, overriding the config.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Seed for the split, NMF initialization and random baseline.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(corpus) = &self.corpus {
            config.corpus = Some(corpus.clone());
        }
        if let Some(seed) = self.seed {
            config.split.seed = seed;
            config.nmf.seed = seed;
            config.eval.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }
}

fn read_corpus(config: &RunConfig) -> Result<(PaperCorpus, String)> {
    let path = config
        .corpus
        .as_deref()
        .context("no corpus given (use --corpus or set corpus in the config)")?;
    let (corpus, report) = load_corpus(path)?;
    if report.rejected > 0 {
        eprintln!(
            "warning: skipped {} invalid record(s) in {}",
            report.rejected,
            path.display()
        );
    }
    Ok((corpus, fingerprint_file(path)?))
}

fn write_report(path: &Path, report: &ReportFile) -> Result<()> {
    report
        .write(path)
        .with_context(|| format!("cannot write report {}", path.display()))
}

fn print_recommendation(rec: &Recommendation) {
    for (i, r) in rec.recommendations.iter().enumerate() {
        let topics: Vec<String> = r
            .topics
            .topics
            .iter()
            .map(|t| format!("#{} ({:.3}): {}", t.topic_id, t.weight, t.terms.join(", ")))
            .collect();
        println!("{}. {} {:.4} | {}", i + 1, r.venue, r.score, topics.join(" | "));
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { corpus, out } => {
            let (loaded, report) = load_corpus(&corpus)?;
            let fingerprint = fingerprint_file(&corpus)?;
            for (line, reason) in &report.rejections {
                eprintln!("line {line}: {reason}");
            }
            println!(
                "{} papers, {} venues, {} rejected, fingerprint {fingerprint}",
                report.accepted,
                loaded.venues().len(),
                report.rejected
            );
            if let Some(out) = out {
                let venues: serde_json::Map<String, serde_json::Value> = loaded
                    .venues()
                    .labels()
                    .iter()
                    .zip(loaded.venues().counts())
                    .map(|(v, c)| (v.clone(), json!(c)))
                    .collect();
                let summary = json!({
                    "corpus": corpus,
                    "fingerprint": fingerprint,
                    "accepted": report.accepted,
                    "rejected": report.rejected,
                    "rejections": report.rejections,
                    "venues": venues,
                });
                std::fs::write(&out, serde_json::to_string_pretty(&summary)? + "\n")
                    .with_context(|| format!("cannot write {}", out.display()))?;
            }
        }
        Command::Train { run, out } => {
            let config = run.resolve()?;
            let (corpus, fingerprint) = read_corpus(&config)?;
            let outcome = train(&corpus, &fingerprint, &config)?;
            let bundle_path = out.unwrap_or_else(|| config.output.bundle.clone());
            save_bundle(&outcome.bundle, &bundle_path)?;
            print!("{}", render_table(std::slice::from_ref(&outcome.report)));
            let report = ReportFile::new(&fingerprint, &config, vec![outcome.report]);
            write_report(&config.output.report, &report)?;
            println!(
                "trained on {} papers, evaluated on {}; bundle {}, report {}",
                outcome.train_size,
                outcome.test_size,
                bundle_path.display(),
                config.output.report.display()
            );
        }
        Command::Evaluate {
            run,
            methods,
            runs,
            ks,
            out,
        } => {
            let mut config = run.resolve()?;
            if let Some(runs) = runs {
                config.eval.random_runs = runs;
            }
            if !ks.is_empty() {
                config.eval.ks = ks;
            }
            config.validate()?;
            let methods = if methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                methods
            };
            let (corpus, fingerprint) = read_corpus(&config)?;
            let reports = evaluate_methods(&corpus, &config, &methods)?;
            print!("{}", render_table(&reports));
            let path = out.unwrap_or_else(|| config.output.report.clone());
            write_report(&path, &ReportFile::new(&fingerprint, &config, reports))?;
        }
        Command::Recommend {
            model,
            title,
            abstract_text,
            keywords,
            k,
            top_topics,
            terms_per_topic,
            json,
        } => {
            if title.trim().is_empty() && abstract_text.trim().is_empty() {
                bail!("give --title or --abstract");
            }
            let bundle = load_bundle(&model)?;
            let query = Query {
                title,
                abstract_text,
                keywords: keywords.into_iter().filter(|k| !k.trim().is_empty()).collect(),
            };
            let options = RecommendOptions {
                k,
                top_topics,
                terms_per_topic,
            };
            let rec = recommend(&query, &options, &bundle)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rec)?);
            } else {
                print_recommendation(&rec);
            }
        }
        Command::Serve { model, addr, port } => {
            let bundle = load_bundle(&model)?;
            let runtime = tokio::runtime::Runtime::new()?;
            eprintln!("serving {} venues on http://{addr}:{port}", bundle.venues().len());
            runtime
                .block_on(venuerec_service::serve(bundle, &addr, port))
                .with_context(|| format!("cannot serve on {addr}:{port}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
