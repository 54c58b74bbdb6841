//! `hintkit` command-line interface.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let result = match &cli.command {
        Command::Hints(a) => commands::hints(a),
        Command::Render(a) => commands::render_cmd(a),
        Command::Dataset(a) => commands::dataset(a),
        Command::Pack(a) => commands::pack(a),
        Command::Backplate(a) => commands::backplate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.to_string(), "kind": e.kind() });
            eprintln!("{report}");
            ExitCode::from(1)
        }
    }
}
