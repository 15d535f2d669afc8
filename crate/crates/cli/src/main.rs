mod cli;
mod commands;
mod output;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use crate::cli::Cli;
use crate::commands::UsageError;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn classify(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<quillen_core::Error>() {
            return match core {
                quillen_core::Error::Numerical { .. } => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

fn report_error(e: &anyhow::Error) -> ExitCode {
    let code = classify(e);
    if code == EXIT_NUMERICAL {
        let core = e.chain().find_map(|c| c.downcast_ref::<quillen_core::Error>());
        let diag = match core {
            Some(quillen_core::Error::Numerical { context, diagnostic }) => json!({
                "error": "numerical",
                "context": context,
                "diagnostic": diagnostic,
                "message": format!("{e:#}"),
            }),
            _ => json!({ "error": "numerical", "message": format!("{e:#}") }),
        };
        eprintln!("{}", serde_json::to_string_pretty(&diag).unwrap_or_default());
    } else {
        let msg: Vec<String> = e
            .chain()
            .map(|c| c.to_string())
            .filter(|m| *m != UsageError.to_string())
            .collect();
        eprintln!("error: {}", msg.join(": "));
    }
    ExitCode::from(code)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let settings = settings::resolve(&cli.global).map_err(commands::usage)?;
    if let Some(n) = settings.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let report = commands::run(&cli.command, &settings.numeric)?;
    let meta = (!cli.global.no_meta).then(|| output::meta(cli.command.name()));
    let bytes = output::render(&report, settings.format, meta)?;
    output::write(&bytes, cli.global.output.as_deref())?;
    let mut ok = true;
    if cli.global.verify {
        for (name, passed) in &report.checks {
            eprintln!("{} {name}", if *passed { "PASS" } else { "FAIL" });
            ok &= passed;
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFY),
        Err(e) => report_error(&e),
    }
}
