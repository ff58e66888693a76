use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use sqpc_cli::args::Cli;
use sqpc_cli::commands;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are successes; everything else is a usage
            // error and exits 1.
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{err}");
                    ExitCode::from(1)
                }
            };
        }
    };

    match commands::execute(&cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.json);
            if let Err(err) = write_outputs(&cli.command, &outcome) {
                eprintln!("error: {err:#}");
                return ExitCode::from(1);
            }
            ExitCode::from(u8::try_from(outcome.exit_code).unwrap_or(1))
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn write_outputs(command: &sqpc_cli::args::Command, outcome: &commands::Outcome) -> anyhow::Result<()> {
    use sqpc_cli::args::Command;
    let (out, csv) = match command {
        Command::Run(a) => (a.out.as_ref(), a.csv.as_ref()),
        Command::AttackSweep(a) => (a.out.as_ref(), a.csv.as_ref()),
        Command::Oracle(a) => (a.out.as_ref(), a.csv.as_ref()),
        Command::Theorem1(a) => (a.out.as_ref(), None),
        Command::Sqkd(a) => (a.out.as_ref(), None),
    };
    if let Some(path) = out {
        let mut file = std::fs::File::create(path)?;
        file.write_all(outcome.json.as_bytes())?;
    }
    if let (Some(path), Some(csv)) = (csv, outcome.csv.as_ref()) {
        let mut file = std::fs::File::create(path)?;
        file.write_all(csv.as_bytes())?;
    }
    Ok(())
}
