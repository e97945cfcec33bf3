use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;
use dor_api::{router, AppState, Config};

/// Serves planning sessions over HTTP. There is no authentication; put a
/// reverse proxy in front when exposing it beyond localhost.
#[derive(Parser)]
#[command(name = "dor-api", version)]
struct Args {
    /// Directory holding one event log per session.
    #[arg(long, default_value = "sessions")]
    data_dir: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Seconds a generation may run before the request turns into a job.
    #[arg(long, default_value_t = 2.0)]
    async_after: f64,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Err(e) = std::fs::create_dir_all(&args.data_dir) {
        eprintln!("error: {}: {e}", args.data_dir.display());
        std::process::exit(4);
    }
    let mut config = Config::new(&args.data_dir);
    config.async_after = Duration::from_secs_f64(args.async_after.max(0.0));
    let listener = match tokio::net::TcpListener::bind(&args.bind).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot bind {}: {e}", args.bind);
            std::process::exit(4);
        }
    };
    log::info!("listening on {}, sessions in {}", args.bind, args.data_dir.display());
    let app = router(AppState::new(config));
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, app).with_graceful_shutdown(shutdown).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
