//! `graph-ok`: run, sweep and verify graph Ohta-Kawasaki experiments.
//!
//! Exit codes: 0 on success, 1 on a configuration or I/O error, 2 on a
//! numerical failure (including a failed `verify` check).

mod config;
mod error;
mod experiment;
mod verify;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use graph_ok::graph_builders::{stitched_with_positions, to_edgelist, torus_positions};

use crate::config::{ConfigArgs, GraphKind};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "graph-ok", version, about = "Graph Ohta-Kawasaki threshold dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one mcOKMBO (or OKMBO) experiment and write its trace files.
    Run(ConfigArgs),
    /// Run one experiment per tau and tabulate the final energies.
    Sweep(ConfigArgs),
    /// Check spectral, potential-theoretic and class properties of a graph.
    Verify(ConfigArgs),
    /// Write a graph as a weighted edge list.
    Generate {
        #[command(flatten)]
        args: ConfigArgs,
        /// Destination file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write node coordinates (`index x y`), for torus and stitched graphs.
        #[arg(long)]
        positions: Option<PathBuf>,
    },
}

fn write_file(p: &PathBuf, text: &str) -> Result<(), CliError> {
    std::fs::write(p, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display())))
}

fn generate(args: &ConfigArgs, output: &Option<PathBuf>, positions: &Option<PathBuf>) -> Result<(), CliError> {
    let c = args.resolve()?;
    let g = c.graph.build()?;
    let text = to_edgelist(&g);
    match output {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    if let Some(p) = positions {
        let pos = match c.graph.kind {
            GraphKind::Torus => torus_positions(g.n())?,
            GraphKind::Stitched => stitched_with_positions(g.n())?.1,
            k => return Err(CliError::config(format!("no node coordinates for graph kind {k:?}"))),
        };
        let body = pos.iter().enumerate().fold(String::new(), |mut s, (i, (x, y))| {
            let _ = writeln!(s, "{i} {x} {y}");
            s
        });
        write_file(p, &body)?;
    }
    Ok(())
}

fn execute(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(args) => {
            let c = args.resolve()?;
            let t = experiment::run(&c)?;
            let last = t.final_record();
            println!(
                "{} after {} iterations: F0 = {}, F_interface = {}, J_tau = {}, mass = {}",
                t.reason, t.terminated_at, last.f0, last.f_interface, last.j_tau, last.mass
            );
            println!("outputs written to {}", c.output_dir.display());
        }
        Command::Sweep(args) => {
            let c = args.resolve()?;
            let rows = experiment::sweep(&c)?;
            println!("{:>12} {:>16} {:>16} {:>6} {:>7}", "tau", "F0", "F_interface", "iters", "pinned");
            for r in &rows {
                println!("{:>12} {:>16.6} {:>16.6} {:>6} {:>7}", r.tau, r.f0, r.f_interface, r.iterations, r.pinned);
            }
            println!("outputs written to {}", c.output_dir.display());
        }
        Command::Verify(args) => {
            let rep = verify::verify(&args.resolve()?)?;
            println!("{rep}");
            if !rep.all_pass() {
                return Err(CliError::Numerical("verification checks failed".into()));
            }
        }
        Command::Generate { args, output, positions } => generate(args, output, positions)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("graph-ok: {e}");
            e.exit_code()
        }
    }
}
