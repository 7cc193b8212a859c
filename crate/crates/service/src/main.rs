use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tagconcept_service::{serve, ServeOptions, DEFAULT_BIND};

/// Serve a built index over HTTP.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Index directory written by `tagconcept ingest`.
    #[arg(long)]
    index: PathBuf,
    #[arg(long, default_value = DEFAULT_BIND)]
    bind: String,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    match serve(ServeOptions {
        index: args.index,
        bind: args.bind,
    })
    .await
    {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
