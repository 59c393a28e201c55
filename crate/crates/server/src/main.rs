use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sma_core::activity::{Activity, ActivityCollection};
use sma_core::adapters::default_capabilities;
use sma_core::fixtures::{write_fixture_dir, DEFAULT_SEED, DEFAULT_SIZE};
use sma_core::gathering::{explain_plan, SearchRequest};
use sma_core::query::{parse_query, to_dnf};
use sma_core::Platform;
use sma_server::{router, App, Config};

#[derive(Parser)]
#[command(
    name = "sma",
    version,
    about = "Cross-platform social media gathering service"
)]
struct Cli {
    /// Config file (default: $SMA_CONFIG or config/sma.toml).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base URL of a running service (default: from config).
    #[arg(long, global = true, env = "SMA_SERVER")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
    /// One-time search; prints the resulting collection.
    Search(GatherArgs),
    #[command(subcommand)]
    Crawl(CrawlCommand),
    /// Write a job's activities to a file.
    Export {
        job_id: String,
        #[arg(long, value_enum, default_value_t = ExportFormat::Jsonl)]
        format: ExportFormat,
        /// Output file (default: <jobId>.jsonl or <jobId>.json).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print per-platform rewrite plans and their request cost.
    Explain {
        query: String,
        /// Platforms, comma separated or repeated.
        #[arg(
            long = "platform",
            value_delimiter = ',',
            default_value = "facebook,googleplus,instagram,twitter,youtube"
        )]
        platforms: Vec<Platform>,
        #[arg(long, default_value_t = 1)]
        pages: usize,
    },
    #[command(subcommand)]
    Fixtures(FixturesCommand),
}

#[derive(Subcommand)]
enum CrawlCommand {
    /// Start a crawl job; prints its crawljobId.
    Start {
        #[command(flatten)]
        gather: GatherArgs,
        /// Milliseconds between gathering rounds.
        #[arg(long = "wait", alias = "waitBetweenRequests")]
        wait: u64,
        #[arg(long)]
        start: Option<i64>,
        #[arg(long)]
        end: Option<i64>,
    },
    Stop {
        job_id: String,
    },
    List,
    Status {
        job_id: String,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Generate the synthetic per-platform corpora.
    Generate {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIZE)]
        size: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct GatherArgs {
    #[arg(long)]
    keyword: String,
    #[arg(long, value_delimiter = ',', required = true)]
    platforms: Vec<Platform>,
    #[arg(long)]
    since: Option<i64>,
    #[arg(long)]
    until: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    latitude: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    longitude: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
}

impl GatherArgs {
    fn to_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("keyword".into(), json!(self.keyword));
        m.insert("platforms".into(), json!(self.platforms));
        let opt = [
            ("since", self.since.map(Value::from)),
            ("until", self.until.map(Value::from)),
            ("latitude", self.latitude.map(Value::from)),
            ("longitude", self.longitude.map(Value::from)),
            ("radius", self.radius.map(Value::from)),
        ];
        for (k, v) in opt {
            if let Some(v) = v {
                m.insert(k.into(), v);
            }
        }
        m
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Jsonl,
    Collection,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    fn url(&self, path: &str) -> String {
        format!(
            "{}{}{path}",
            self.base.trim_end_matches('/'),
            sma_server::api::BASE
        )
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> CliResult<Value> {
        let resp = req
            .send()
            .await
            .map_err(|e| CliError(format!("cannot reach {}: {e}", self.base)))?;
        let status = resp.status();
        let body: Value = resp.json().await.unwrap_or(Value::Null);
        if !status.is_success() {
            let msg = body["message"].as_str().unwrap_or("request failed");
            let mut text = format!("{} {msg}", status.as_u16());
            if let Some(fields) = body["fields"].as_object() {
                for (k, v) in fields {
                    text.push_str(&format!("\n  {k}: {}", v.as_str().unwrap_or_default()));
                }
            }
            return Err(CliError(text));
        }
        Ok(body)
    }

    async fn get(&self, path: &str) -> CliResult<Value> {
        self.send(self.http.get(self.url(path))).await
    }

    async fn post(&self, path: &str, body: &Value) -> CliResult<Value> {
        self.send(self.http.post(self.url(path)).json(body)).await
    }
}

fn print_json(v: &impl serde::Serialize) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

async fn export(
    client: &Client,
    job_id: &str,
    format: ExportFormat,
    out: Option<PathBuf>,
) -> CliResult<()> {
    const PAGE: usize = 1000;
    let mut items: Vec<Activity> = Vec::new();
    loop {
        let page = client
            .get(&format!(
                "/crawlService/{job_id}?count={PAGE}&offset={}",
                items.len()
            ))
            .await?;
        let page: ActivityCollection = serde_json::from_value(page)?;
        let n = page.total_items();
        items.extend(page.into_items());
        if n < PAGE {
            break;
        }
    }
    let path = out.unwrap_or_else(|| {
        PathBuf::from(match format {
            ExportFormat::Jsonl => format!("{job_id}.jsonl"),
            ExportFormat::Collection => format!("{job_id}.json"),
        })
    });
    let mut w = BufWriter::new(File::create(&path)?);
    let count = items.len();
    match format {
        ExportFormat::Jsonl => {
            for a in &items {
                serde_json::to_writer(&mut w, a)?;
                w.write_all(b"\n")?;
            }
        }
        ExportFormat::Collection => {
            serde_json::to_writer_pretty(&mut w, &ActivityCollection::new(items))?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    println!("wrote {count} activities to {}", path.display());
    Ok(())
}

fn explain(cfg: &Config, query: &str, platforms: &[Platform], pages: usize) -> CliResult<()> {
    let dnf = to_dnf(&parse_query(query)?)?;
    let profiles = cfg.capability_profiles()?;
    let req = SearchRequest::new(query, platforms.iter().copied());
    let mut report = Map::new();
    for p in platforms {
        let caps = profiles
            .get(p)
            .cloned()
            .unwrap_or_else(|| default_capabilities(*p));
        report.insert(
            p.to_string(),
            serde_json::to_value(explain_plan(&dnf, &caps, &req.scope(), pages))?,
        );
    }
    print_json(&report)
}

async fn serve(cfg: Config) -> CliResult<()> {
    let app = Arc::new(App::from_config(&cfg)?);
    let resumed = app.driver.resume_all();
    let addr = format!("{}:{}", cfg.host, cfg.port);
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    tracing::info!(%addr, resumed, "listening");
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    let client = || Client {
        base: cli.server.clone().unwrap_or_else(|| cfg.base_url()),
        http: reqwest::Client::new(),
    };
    match cli.command {
        Command::Serve { port } => {
            if let Some(p) = port {
                cfg.port = p;
            }
            serve(cfg).await
        }
        Command::Search(args) => {
            let body = client()
                .post("/searchService", &Value::Object(args.to_json()))
                .await?;
            print_json(&body)
        }
        Command::Crawl(CrawlCommand::Start {
            gather,
            wait,
            start,
            end,
        }) => {
            let mut g = gather.to_json();
            g.insert("waitBetweenRequests".into(), json!(wait));
            if let Some(s) = start {
                g.insert("start".into(), json!(s));
            }
            if let Some(e) = end {
                g.insert("end".into(), json!(e));
            }
            let body = client()
                .post("/crawlService", &json!({ "gathering": g }))
                .await?;
            println!("{}", body["crawljobId"].as_str().unwrap_or_default());
            Ok(())
        }
        Command::Crawl(CrawlCommand::Stop { job_id }) => print_json(
            &client()
                .post(&format!("/crawlService/{job_id}/stop"), &json!({}))
                .await?,
        ),
        Command::Crawl(CrawlCommand::List) => {
            print_json(&client().get("/crawlService/allJobs").await?)
        }
        Command::Crawl(CrawlCommand::Status { job_id }) => print_json(
            &client()
                .get(&format!("/crawlService/{job_id}/status"))
                .await?,
        ),
        Command::Export {
            job_id,
            format,
            out,
        } => export(&client(), &job_id, format, out).await,
        Command::Explain {
            query,
            platforms,
            pages,
        } => explain(&cfg, &query, &platforms, pages),
        Command::Fixtures(FixturesCommand::Generate { out, size, seed }) => {
            write_fixture_dir(&out, size, seed)?;
            println!("wrote {size} items per platform to {}", out.display());
            Ok(())
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
