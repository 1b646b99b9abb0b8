use std::process::ExitCode;

use clap::Parser;

use bfnflow_cli::{run, Cli};

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("BFNFLOW_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("BFNFLOW_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // one line, causes joined by ": "
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
