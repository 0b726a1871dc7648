use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use scholarlib::api::ErrorBody;
use scholarlib::config::{load_weights, WeightOverrides};
use scholarlib::db::{Db, DEFAULT_DB_PATH};
use scholarlib::fixture::Fixture;
use scholarlib::mock_dl::encode_corpus;
use scholarlib::{GatewayConfig, GatewayError};
use scholarlib_core::graph::parse_edge_list;
use scholarlib_core::{DlStatus, RankWeights, Timestamp};
use serde_json::{json, Value};

/// Fixed start of the seeded timeline, so seeded stores are reproducible.
const SEED_EPOCH: Timestamp = Timestamp(1_340_000_000_000);

#[derive(Parser)]
#[command(name = "scholarlib", version, about = "Federated scholarly search with social annotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ApiArgs {
    /// Base URL of a running gateway.
    #[arg(long, env = "SCHOLARLIB_API", default_value = "http://127.0.0.1:8080")]
    api: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the gateway HTTP API.
    Serve {
        #[arg(long, env = "SCHOLARLIB_BIND", default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long, env = "SCHOLARLIB_DB", default_value = DEFAULT_DB_PATH)]
        db: PathBuf,
        /// Ranking weights file (key=value lines).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Per-library search budget.
        #[arg(long, default_value_t = 3000)]
        dl_timeout_ms: u64,
    },
    /// Register a digital library by its search endpoint.
    RegisterDl {
        name: String,
        base_url: String,
        #[command(flatten)]
        api: ApiArgs,
        #[arg(long)]
        json: bool,
    },
    /// Federated search with social re-ranking.
    Search {
        query: String,
        #[arg(long, default_value_t = 0)]
        offset: u32,
        #[arg(long, default_value_t = 10)]
        limit: u32,
        #[arg(long)]
        user: Option<String>,
        /// Comma-separated library names.
        #[arg(long)]
        sources: Option<String>,
        #[command(flatten)]
        api: ApiArgs,
        #[arg(long)]
        json: bool,
    },
    /// Comment on, rate, file or forward an item.
    Annotate {
        item: String,
        #[arg(long)]
        user: String,
        #[arg(long, group = "kind", required = true)]
        comment: Option<String>,
        #[arg(long, group = "kind")]
        rating: Option<i64>,
        #[arg(long, group = "kind")]
        folder: Option<String>,
        #[arg(long, group = "kind")]
        forward_to: Option<String>,
        /// Parent forward id when continuing a chain.
        #[arg(long, requires = "forward_to")]
        parent: Option<String>,
        #[command(flatten)]
        api: ApiArgs,
        #[arg(long)]
        json: bool,
    },
    /// Write the fixture corpus and load the mock graph into a store file.
    Seed {
        #[arg(long, env = "SCHOLARLIB_DB", default_value = DEFAULT_DB_PATH)]
        db: PathBuf,
        #[arg(long, default_value_t = 20)]
        users: u32,
        #[arg(long, default_value_t = 0.15)]
        edge_prob: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Where to write the generated corpus (JSON lines) for the mock library.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Extra contact edges, one "user_a user_b" pair per line.
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, default_value = "mock-dl")]
        dl_name: String,
        /// Register the mock library at this URL and apply the scripted annotations.
        #[arg(long)]
        dl_url: Option<String>,
    },
    /// Run every stored alert once.
    RunAlerts {
        #[command(flatten)]
        api: ApiArgs,
        #[arg(long)]
        json: bool,
    },
    /// Show how an item spread through the contact graph.
    Trace {
        item: String,
        #[command(flatten)]
        api: ApiArgs,
        #[arg(long)]
        json: bool,
    },
    /// Write the store dump to stdout or a file.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        api: ApiArgs,
    },
    /// Replace the store with a dump.
    Import {
        file: PathBuf,
        #[command(flatten)]
        api: ApiArgs,
        #[arg(long)]
        json: bool,
    },
    /// Serve a JSON-lines corpus as a reference digital library.
    MockDl {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "127.0.0.1:9001")]
        bind: SocketAddr,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl From<GatewayError> for Failure {
    fn from(e: GatewayError) -> Self {
        Failure::Domain(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    fn new(api: &ApiArgs) -> Client {
        Client { http: reqwest::Client::new(), base: api.api.trim_end_matches('/').to_string() }
    }

    async fn send(&self, req: reqwest::RequestBuilder) -> Result<String, Failure> {
        let resp = req.send().await.map_err(|e| Failure::Domain(format!("cannot reach {}: {e}", self.base)))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| Failure::Domain(e.to_string()))?;
        if status.is_success() {
            return Ok(text);
        }
        Err(Failure::Domain(match serde_json::from_str::<ErrorBody>(&text) {
            Ok(b) => format!("{} ({}): {}", b.error, status.as_u16(), b.message),
            Err(_) => format!("status {status}: {text}"),
        }))
    }

    async fn get(&self, path: &str, query: &[(&str, String)]) -> Result<String, Failure> {
        let mut url = url::Url::parse(&format!("{}{path}", self.base))
            .map_err(|e| Failure::Usage(format!("bad --api url {}: {e}", self.base)))?;
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(query);
        }
        self.send(self.http.get(url)).await
    }

    async fn post(&self, path: &str, body: &Value) -> Result<String, Failure> {
        self.send(self.http.post(format!("{}{path}", self.base)).json(body)).await
    }
}

fn as_json(text: &str) -> Result<Value, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Domain(format!("unexpected response: {e}")))
}

fn emit(raw: bool, text: &str, human: impl FnOnce(&Value)) -> CliResult {
    if raw {
        println!("{text}");
    } else {
        human(&as_json(text)?);
    }
    Ok(())
}

fn weights(config: Option<&Path>, overrides: WeightOverrides) -> Result<RankWeights, Failure> {
    let base = match config {
        Some(p) => load_weights(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => RankWeights::default(),
    };
    overrides.apply(base).map_err(|e| Failure::Usage(e.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn seed(
    db: &Path,
    users: u32,
    edge_prob: f64,
    seed: u64,
    corpus: Option<&Path>,
    edges: Option<&Path>,
    dl_name: &str,
    dl_url: Option<&str>,
) -> CliResult {
    let fixture = Fixture::with_params(seed, users, edge_prob).map_err(|e| Failure::Usage(e.to_string()))?;
    let extra = match edges {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            parse_edge_list(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => Vec::new(),
    };
    if let Some(url) = dl_url {
        scholarlib::connector::parse_base_url(url).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    if let Some(p) = corpus {
        std::fs::write(p, encode_corpus(&fixture.corpus)).map_err(|e| Failure::Domain(format!("{}: {e}", p.display())))?;
    }
    let db = Db::open(db)?;
    db.write(|s| {
        match dl_url {
            Some(url) => {
                if s.registration(dl_name).is_none() {
                    s.register_dl(dl_name, url, DlStatus::Active, SEED_EPOCH)?;
                }
                fixture.apply(s, dl_name, SEED_EPOCH)?;
            }
            None => fixture.apply_graph(s)?,
        }
        for (u, v) in &extra {
            for id in [u, v] {
                if s.user(id).is_err() {
                    s.upsert_user(scholarlib_core::UserProfile::new(id.as_str()))?;
                }
            }
        }
        s.load_edges(&extra)
    })?;
    db.flush()?;
    let (n_users, n_edges, n_items) = db.read(|s| (s.users().count(), s.contact_edges().len(), s.items().count()));
    println!("seeded {n_users} users, {n_edges} contact edges, {n_items} items");
    Ok(())
}

async fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve { bind, db, config, alpha, beta, gamma, delta, lambda, dl_timeout_ms } => {
            let weights = weights(config.as_deref(), WeightOverrides { alpha, beta, gamma, delta, lambda })?;
            let config = GatewayConfig { weights, dl_timeout: Duration::from_millis(dl_timeout_ms.max(1)) };
            scholarlib::api::serve(bind, &db, config).await?;
            Ok(())
        }
        Command::MockDl { corpus, bind } => Ok(scholarlib::mock_dl::serve(&corpus, bind).await?),
        Command::Seed { db, users, edge_prob, seed: s, corpus, edges, dl_name, dl_url } => seed(
            &db,
            users,
            edge_prob,
            s,
            corpus.as_deref(),
            edges.as_deref(),
            &dl_name,
            dl_url.as_deref(),
        ),
        Command::RegisterDl { name, base_url, api, json } => {
            let text = Client::new(&api).post("/registry/dls", &json!({ "name": name, "base_url": base_url })).await?;
            emit(json, &text, |v| println!("{} {} {}", v["name"], v["base_url"], v["status"]))
        }
        Command::Search { query, offset, limit, user, sources, api, json } => {
            let mut params = vec![("q", query), ("offset", offset.to_string()), ("limit", limit.to_string())];
            params.extend(user.map(|u| ("user", u)));
            params.extend(sources.map(|s| ("sources", s)));
            let text = Client::new(&api).get("/search", &params).await?;
            emit(json, &text, |page| {
                for r in page["results"].as_array().into_iter().flatten() {
                    let s = &r["summary"];
                    println!(
                        "{:>3}  {:.3}  {}  [{}] comments={} forwards={} library={} id={}",
                        r["base_rank"],
                        r["final_score"].as_f64().unwrap_or_default(),
                        r["record"]["title"].as_str().unwrap_or_default(),
                        r["source"].as_str().unwrap_or_default(),
                        s["comment_count"],
                        s["forward_count"],
                        s["library_count"],
                        r["item_id"].as_str().unwrap_or_default(),
                    );
                }
                for e in page["source_errors"].as_array().into_iter().flatten() {
                    eprintln!("source {} failed: {}", e["source"], e["error"]);
                }
            })
        }
        Command::Annotate { item, user, comment, rating, folder, forward_to, parent, api, json } => {
            let client = Client::new(&api);
            let (path, body) = if let Some(text) = comment {
                ("comments", json!({ "user": user, "text": text }))
            } else if let Some(value) = rating {
                ("ratings", json!({ "user": user, "value": value }))
            } else if let Some(folder) = folder {
                ("library", json!({ "user": user, "folder": folder }))
            } else if let Some(to) = forward_to {
                ("forwards", json!({ "from": user, "to": to, "parent": parent }))
            } else {
                return Err(Failure::Usage("one of --comment, --rating, --folder, --forward-to is required".into()));
            };
            let text = client.post(&format!("/items/{item}/{path}"), &body).await?;
            emit(json, &text, |a| println!("{}", a["annotation_id"].as_str().unwrap_or_default()))
        }
        Command::RunAlerts { api, json } => {
            let text = Client::new(&api).post("/alerts/run", &json!({})).await?;
            emit(json, &text, |v| {
                for n in v.as_array().into_iter().flatten() {
                    println!("{} {}", n["recipient"].as_str().unwrap_or_default(), n["item"].as_str().unwrap_or_default());
                }
            })
        }
        Command::Trace { item, api, json } => {
            let text = Client::new(&api).get(&format!("/items/{item}/spread"), &[]).await?;
            emit(json, &text, |t| {
                println!("reach={} max_depth={}", t["reach"], t["max_depth"]);
                for e in t["edges"].as_array().into_iter().flatten() {
                    println!("{} -> {}", e[0].as_str().unwrap_or_default(), e[1].as_str().unwrap_or_default());
                }
            })
        }
        Command::Export { out, api } => {
            let text = Client::new(&api).get("/admin/export", &[]).await?;
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| Failure::Domain(format!("{}: {e}", p.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Import { file, api, json } => {
            let dump = std::fs::read_to_string(&file).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
            let client = Client::new(&api);
            let text = client
                .send(client.http.post(format!("{}/admin/import", client.base)).body(dump))
                .await?;
            emit(json, &text, |v| println!("imported {} entities", v["entities"]))
        }
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "scholarlib=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
