use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scholarlens::config::ServiceConfig;
use scholarlens::extraction::{extract_entries, MediaKind, RawDocument};
use scholarlens::ontology::{Ontology, DEFAULT_GAMMA, DEFAULT_MAX_DEPTH};
use scholarlens::query::{federate_search, SearchRequest, DEFAULT_DEPTH, DEFAULT_LIMIT};
use scholarlens::serialize::{format_float, render, OutputFormat};
use scholarlens::text::normalize;

#[derive(Parser)]
#[command(name = "scholarlens", version, about = "Ontology-expanded search over research portals")]
struct Cli {
    /// Service configuration file; defaults to ./service.conf when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a federated search and print the results.
    Search(SearchArgs),
    /// Inspect the loaded ontology.
    #[command(subcommand)]
    Ontology(OntologyCommand),
    /// Run the HTTP service until interrupted.
    Serve(ServeArgs),
    /// Check shipped fixture pages.
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Args)]
struct SearchArgs {
    query: String,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, default_value_t = scholarlens::query::DEFAULT_GAMMA)]
    gamma: f64,
    /// Comma-separated source ids; all sources when omitted.
    #[arg(long, value_delimiter = ',')]
    sources: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    #[arg(long, default_value = "json")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum OntologyCommand {
    /// Print the class hierarchy, indented two spaces per level.
    Tree {
        #[arg(long)]
        root: Option<String>,
    },
    /// Print expansion weights, heaviest first.
    Expand {
        term: String,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_GAMMA)]
        gamma: f64,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    port: Option<u16>,
    #[arg(long)]
    bind: Option<String>,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Re-extract every page listed in the manifest and compare entry counts.
    Validate {
        /// Directory the manifest paths are relative to.
        #[arg(long, default_value = ".")]
        root: PathBuf,
        /// Defaults to `<root>/fixtures/manifest.txt`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

/// Runtime failure (exit 1) or usage error (exit 2).
enum Failure {
    Runtime(String),
    Usage(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<ServiceConfig, Failure> {
    let mut cfg = match path {
        Some(p) => ServiceConfig::load(p)?,
        None if Path::new("service.conf").is_file() => ServiceConfig::load("service.conf")?,
        None => ServiceConfig::default(),
    };
    cfg.apply_process_env()?;
    Ok(cfg)
}

fn search(cfg: ServiceConfig, args: SearchArgs) -> Result<(), Failure> {
    let req = SearchRequest {
        raw_query: args.query,
        depth: args.depth,
        gamma: args.gamma,
        sources: args.sources.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        limit: args.limit,
        format: args.format,
    };
    if let Err(e) = req.validate() {
        return Err(Failure::Usage(e.to_string()));
    }
    let ontology = cfg.load_ontology()?;
    let registry = cfg.load_registry()?;
    let rs = federate_search(&req, &ontology, &registry, &cfg.fetch_context())?;
    for (source, stats) in &rs.per_source_stats {
        if stats.errors > 0 {
            eprintln!("warning: {source}: {} page error(s)", stats.errors);
        }
    }
    let mut out = std::io::stdout().lock();
    out.write_all(&render(&rs, req.format))?;
    if req.format != OutputFormat::Table {
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn print_tree(o: &Ontology, id: &str, level: usize, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{}{id}", "  ".repeat(level))?;
    for child in o.children_of(id).expect("known id") {
        print_tree(o, child, level + 1, out)?;
    }
    Ok(())
}

fn ontology(cfg: ServiceConfig, cmd: OntologyCommand) -> Result<(), Failure> {
    let o = cfg.load_ontology()?;
    let mut out = std::io::stdout().lock();
    match cmd {
        OntologyCommand::Tree { root } => {
            let roots: Vec<String> = match root {
                Some(r) => {
                    let id = normalize(&r);
                    o.node(&id)?;
                    vec![id]
                }
                None => o.roots().iter().cloned().collect(),
            };
            for r in roots {
                print_tree(&o, &r, 0, &mut out)?;
            }
        }
        OntologyCommand::Expand { term, depth, gamma } => {
            let eq = o.expand_query(&[term], depth, gamma).map_err(|e| match e {
                scholarlens::ontology::OntologyError::EmptyQuery | scholarlens::ontology::OntologyError::InvalidParameter(_) => {
                    Failure::Usage(e.to_string())
                }
                other => other.into(),
            })?;
            for (t, w) in eq.ranked() {
                writeln!(out, "{t} {}", format_float(w))?;
            }
        }
    }
    Ok(())
}

fn serve(mut cfg: ServiceConfig, args: ServeArgs) -> Result<(), Failure> {
    if let Some(p) = args.port {
        cfg.port = p;
    }
    if let Some(b) = args.bind {
        cfg.bind = b;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(scholarlens_service::serve(cfg))?;
    Ok(())
}

fn validate_fixtures(cfg: &ServiceConfig, root: &Path, manifest: Option<PathBuf>) -> Result<(), Failure> {
    let manifest = manifest.unwrap_or_else(|| root.join("fixtures/manifest.txt"));
    let text = std::fs::read_to_string(&manifest).map_err(|e| format!("{}: {e}", manifest.display()))?;
    let mut sources_cfg = cfg.clone();
    sources_cfg.sources_dir = root.join("sources");
    let registry = sources_cfg.load_registry()?;

    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    let mut checked = 0;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [source, rel, expected] = fields[..] else {
            return Err(format!("{}:{}: expected `source path count`", manifest.display(), n + 1).into());
        };
        let expected: usize = expected
            .parse()
            .map_err(|_| format!("{}:{}: bad count `{expected}`", manifest.display(), n + 1))?;
        checked += 1;
        let result = (|| -> Result<usize, String> {
            let adapter = registry.get(source).ok_or_else(|| format!("unknown source `{source}`"))?;
            let body = std::fs::read(root.join(rel)).map_err(|e| e.to_string())?;
            let doc = RawDocument {
                source_id: source.to_string(),
                url: format!("fixture:{rel}"),
                media_kind: MediaKind::detect(None, &body),
                body,
                fetched_at: 0,
            };
            Ok(extract_entries(&doc, &adapter.rules).map_err(|e| e.to_string())?.entries.len())
        })();
        match result {
            Ok(got) if got == expected => writeln!(out, "ok    {rel} ({got})")?,
            Ok(got) => {
                failed += 1;
                writeln!(out, "FAIL  {rel}: expected {expected} entries, got {got}")?;
            }
            Err(e) => {
                failed += 1;
                writeln!(out, "FAIL  {rel}: {e}")?;
            }
        }
    }
    writeln!(out, "{checked} checked, {failed} failed")?;
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} fixture file(s) do not match the manifest")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Search(args) => search(cfg, args),
        Command::Ontology(cmd) => ontology(cfg, cmd),
        Command::Serve(args) => serve(cfg, args),
        Command::Fixtures(FixturesCommand::Validate { root, manifest }) => validate_fixtures(&cfg, &root, manifest),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve(_)) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("SCHOLARLENS_LOG")
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
