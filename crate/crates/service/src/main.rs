use std::path::PathBuf;

use lfsearch_service::{init_tracing, serve, Settings};

#[tokio::main]
async fn main() {
    init_tracing();
    let addr = std::env::var("BIND_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let data_dir = std::env::var_os("DATA_DIR").map(PathBuf::from);
    let ui_dir = std::env::var_os("UI_DIR").map(PathBuf::from).or_else(|| Some(PathBuf::from("ui")));
    if let Err(e) = serve(&addr, data_dir, ui_dir, Settings::default()).await {
        eprintln!("lfsearch-service: {e}");
        std::process::exit(3);
    }
}
