//! Serves the curalens HTTP API.
//!
//! Configuration comes from the environment: `CURALENS_STORE` (store root,
//! default `./curalens-store`) and `CURALENS_ADDR` (listen address, default
//! `127.0.0.1:8080`).

use std::env;
use std::process::ExitCode;

use curalens_core::Store;

#[tokio::main]
async fn main() -> ExitCode {
    let root = env::var("CURALENS_STORE").unwrap_or_else(|_| "curalens-store".into());
    let addr = env::var("CURALENS_ADDR").unwrap_or_else(|_| "127.0.0.1:8080".into());
    let store = match Store::open(&root) {
        Ok(store) => store,
        Err(e) => {
            eprintln!("cannot open store {root}: {e}");
            return ExitCode::FAILURE;
        }
    };
    let listener = match tokio::net::TcpListener::bind(&addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("cannot listen on {addr}: {e}");
            return ExitCode::FAILURE;
        }
    };
    eprintln!("curalens-server listening on {addr}, store {root}");
    if let Err(e) = axum::serve(listener, curalens_server::router(store)).await {
        eprintln!("server error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
