#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use crate::commands::Context;
use crate::config::{Cli, Command, CommonArgs, Format};
use crate::error::{CliError, CliResult};
use crate::output::{target_path, write_file, write_stdout, Document};

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Structured => "json",
    }
}

fn emit(args: &CommonArgs, config: &serde_json::Value, docs: &[Document], dir: Option<&Path>) -> CliResult<()> {
    let render = |d: &Document| match args.format {
        Format::Csv => d.render_text(config),
        Format::Structured => d.render_structured(config),
    };
    if let Some(dir) = dir {
        for d in docs {
            let name = d.name.as_deref().unwrap_or("out");
            write_file(&dir.join(format!("{name}.{}", extension(args.format))), &render(d))?;
        }
        return Ok(());
    }
    match &args.out {
        Some(base) => {
            for d in docs {
                write_file(&target_path(base, d.name.as_deref()), &render(d))?;
            }
            Ok(())
        }
        None => {
            for (i, d) in docs.iter().enumerate() {
                if i > 0 {
                    write_stdout("\n")?;
                }
                write_stdout(&render(d))?;
            }
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config = serde_json::to_value(&cli.command).map_err(|e| CliError::Config(e.to_string()))?;
    let (args, dir) = match &cli.command {
        Command::Spectrum(a)
        | Command::Otoc(a)
        | Command::Saturation(a)
        | Command::OracleCompare(a) => (a, None),
        Command::Lyapunov(l) => (&l.common, None),
        Command::Figures(f) => {
            (&f.common, Some(f.common.out.clone().unwrap_or_else(|| PathBuf::from("figures"))))
        }
    };
    let mut ctx = Context::new(args);
    let docs = match &cli.command {
        Command::Spectrum(_) => commands::spectrum(&mut ctx)?,
        Command::Otoc(_) => commands::otoc(&mut ctx)?,
        Command::Saturation(_) => commands::saturation(&mut ctx)?,
        Command::OracleCompare(_) => commands::oracle_compare(&mut ctx)?,
        Command::Lyapunov(l) => commands::lyapunov(&mut ctx, l.input.as_deref())?,
        Command::Figures(f) => commands::figures(&mut ctx, &f.only)?,
    };
    ctx.check_strict()?;
    emit(args, &config, &docs, dir.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otoc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
