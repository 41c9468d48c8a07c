use std::process::ExitCode;

use clap::Parser;
use paramp_cli::{init_thread_pool, run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_thread_pool().and_then(|()| run(cli));
    match result {
        Ok(report) => {
            for line in &report.summary {
                println!("{line}");
            }
            for f in &report.manifest.outputs {
                println!("wrote {}", report.manifest_path.with_file_name(&f.name).display());
            }
            println!("wrote {}", report.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
