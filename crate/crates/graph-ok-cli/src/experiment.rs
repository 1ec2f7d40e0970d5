//! The `run` and `sweep` subcommands and their output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use graph_ok::graph_core::{Calculus, Graph};
use graph_ok::mbo_solver::{initial_condition, mcokmbo_run, okmbo_run, MboConfig, MboTrace};
use graph_ok::spectral_engine::{OperatorL, Spectrum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Scheme};
use crate::error::CliError;

pub const TRACE_FILE: &str = "trace.csv";
pub const FINAL_STATE_FILE: &str = "final_state.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const PLOT_FILE: &str = "sweep.gp";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn hash_floats<'a>(parts: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut h = Sha256::new();
    for part in parts {
        for x in part {
            h.update(x.to_le_bytes());
        }
    }
    hex(&h.finalize())
}

/// SHA-256 over `r`, the eigenvalues and the eigenfunctions, little endian.
pub fn spectrum_hash(s: &Spectrum) -> String {
    hash_floats([&[s.r()][..], s.eigenvalues(), s.eigenfunctions()])
}

pub fn graph_hash(g: &Graph) -> String {
    hash_floats([g.weights()])
}

/// Graph and spectrum shared by every solve of one invocation.
pub struct Setup {
    pub graph: Graph,
    pub spectrum: Spectrum,
    /// Neighbour count of a two-moons graph.
    pub effective_k: Option<usize>,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self, CliError> {
        let (graph, effective_k) = config.graph.build_with_k()?;
        let calc = Calculus::new(&graph, config.calculus_params()?);
        let spectrum = Spectrum::decompose(&calc)?;
        Ok(Self { graph, spectrum, effective_k })
    }

    pub fn calculus(&self, config: &ExperimentConfig) -> Calculus<'_> {
        Calculus::new(&self.graph, config.calculus_params().expect("validated"))
    }

    fn graph_json(&self, config: &ExperimentConfig) -> serde_json::Value {
        let mut info = json!({
            "description": config.graph.describe(),
            "nodes": self.graph.n(),
            "edges": self.graph.edge_count(),
            "weights_sha256": graph_hash(&self.graph),
        });
        if let Some(k) = self.effective_k {
            info["effective_k_nearest"] = json!(k);
        }
        info
    }
}

/// One solve at a fixed τ. OKMBO starts from the nodes where the
/// mass-thresholded initial condition is at least ½.
pub fn solve(setup: &Setup, config: &ExperimentConfig, tau: f64) -> Result<MboTrace, CliError> {
    let calc = setup.calculus(config);
    let mass = config.require_mass()?;
    let op = OperatorL::new(&setup.spectrum, config.gamma)?;
    let v0 = initial_condition(&calc, &op, mass, config.initial_condition())?;
    let mbo = MboConfig {
        gamma: config.gamma,
        tau,
        mass: Some(mass),
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
        seed: config.seed,
    };
    Ok(match config.scheme {
        Scheme::Mcokmbo => mcokmbo_run(&calc, &setup.spectrum, &mbo, &v0)?,
        Scheme::Okmbo => {
            let s0: Vec<bool> = v0.iter().map(|&x| x >= 0.5).collect();
            okmbo_run(&calc, &setup.spectrum, &mbo, &s0)?
        }
    })
}

pub fn trace_csv(trace: &MboTrace, description: &str) -> String {
    let mut s = format!("# graph: {description}\nk,J_tau,F0,mass,diff_norm\n");
    for r in &trace.records {
        let diff = r.diff_norm.map(|d| d.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", r.k, r.j_tau, r.f0, r.mass, diff);
    }
    s
}

/// One `index value` line per node, in shortest round-trip form.
pub fn final_state_text(v: &[f64]) -> String {
    v.iter().enumerate().fold(String::new(), |mut s, (i, x)| {
        let _ = writeln!(s, "{i} {x}");
        s
    })
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))
}

fn write(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let p = dir.join(name);
    fs::write(&p, content).map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display())))?;
    Ok(p)
}

fn manifest(
    subcommand: &str,
    setup: &Setup,
    config: &ExperimentConfig,
    results: serde_json::Value,
) -> Result<String, CliError> {
    let m = json!({
        "tool": "graph-ok",
        "subcommand": subcommand,
        "library_version": env!("CARGO_PKG_VERSION"),
        "graph": setup.graph_json(config),
        "spectrum_sha256": spectrum_hash(&setup.spectrum),
        "config": config,
        "results": results,
    });
    Ok(serde_json::to_string_pretty(&m)? + "\n")
}

pub fn run(config: &ExperimentConfig) -> Result<MboTrace, CliError> {
    let taus = config.tau.values();
    if taus.len() != 1 {
        return Err(CliError::config(format!("run takes one tau, got {}; use sweep for lists", taus.len())));
    }
    config.require_mass()?;
    let setup = Setup::new(config)?;
    let trace = solve(&setup, config, taus[0])?;
    let dir = &config.output_dir;
    prepare_dir(dir)?;
    write(dir, TRACE_FILE, &trace_csv(&trace, &config.graph.describe()))?;
    write(dir, FINAL_STATE_FILE, &final_state_text(trace.final_state()))?;
    write(dir, CONFIG_FILE, &config.to_toml())?;
    let last = trace.final_record();
    let results = json!({
        "termination": trace.reason.to_string(),
        "iterations": trace.terminated_at,
        "best_iteration": trace.best,
        "final": {
            "J_tau": last.j_tau,
            "F0": last.f0,
            "F_interface": last.f_interface,
            "mass": last.mass,
        },
    });
    write(dir, MANIFEST_FILE, &manifest("run", &setup, config, results)?)?;
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub f0: f64,
    pub f_interface: f64,
    pub j_tau: f64,
    pub iterations: usize,
    pub termination: String,
    /// The final state equals the initial one.
    pub pinned: bool,
}

impl SweepRow {
    fn from_trace(tau: f64, t: &MboTrace) -> Self {
        let last = t.final_record();
        Self {
            tau,
            f0: last.f0,
            f_interface: last.f_interface,
            j_tau: last.j_tau,
            iterations: t.terminated_at,
            termination: t.reason.to_string(),
            pinned: t.final_state() == t.states[0].as_slice(),
        }
    }
}

pub fn sweep_csv(rows: &[SweepRow], description: &str) -> String {
    let mut s = format!("# graph: {description}\ntau,F0,F_interface,J_tau,iterations,termination,pinned\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.tau, r.f0, r.f_interface, r.j_tau, r.iterations, r.termination, r.pinned
        );
    }
    s
}

pub fn gnuplot_script(description: &str) -> String {
    format!(
        "# final F0 against tau for: {description}\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key autotitle columnhead\n\
         set logscale x\n\
         set xlabel 'tau'\n\
         set ylabel 'F0 at the final iterate'\n\
         set grid\n\
         plot '{SWEEP_FILE}' using 1:2 with linespoints pt 7 title 'F0'\n"
    )
}

/// Solves every τ, in parallel over the shared spectrum.
pub fn sweep_rows(setup: &Setup, config: &ExperimentConfig, taus: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(taus.len()).max(1);
    let mut slots: Vec<Option<Result<SweepRow, CliError>>> = (0..taus.len()).map(|_| None).collect();
    thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..taus.len())
                        .step_by(workers)
                        .map(|i| (i, solve(setup, config, taus[i]).map(|t| SweepRow::from_trace(taus[i], &t))))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, row) in h.join().expect("sweep worker panicked") {
                slots[i] = Some(row);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every tau is solved")).collect()
}

pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    config.require_mass()?;
    let setup = Setup::new(config)?;
    let rows = sweep_rows(&setup, config, &config.tau.values())?;
    let dir = &config.output_dir;
    prepare_dir(dir)?;
    let description = config.graph.describe();
    write(dir, SWEEP_FILE, &sweep_csv(&rows, &description))?;
    write(dir, PLOT_FILE, &gnuplot_script(&description))?;
    write(dir, CONFIG_FILE, &config.to_toml())?;
    write(dir, MANIFEST_FILE, &manifest("sweep", &setup, config, json!({ "rows": rows }))?)?;
    Ok(rows)
}
