//! Experiment configuration.
//!
//! A config file is TOML with flat top-level keys and one `[graph]` table:
//!
//! ```toml
//! r = 0.0
//! q = 1.0
//! gamma = 1.0
//! mass = 200.0
//! tau = 5.0            # or a list, e.g. [1.0, 2.0, 5.0], for `sweep`
//! init = "eig"         # "eig" | "structured" | "random"
//! seed = 0
//! scheme = "mcokmbo"   # "mcokmbo" | "okmbo"
//! max_iterations = 500
//! tolerance = 1e-24
//! output_dir = "out"
//!
//! [graph]
//! kind = "torus"       # star | complete | bipartite | path | torus | stitched | moons | edgelist
//! n = 900
//! ```
//!
//! Command-line flags with the same names override file values.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use graph_ok::graph_builders::{
    complete, complete_bipartite, load_weighted_edgelist, path, star, stitched, torus_grid, two_moons_with_k, TwoMoonsParams,
};
use graph_ok::graph_core::{CalculusParams, Graph};
use graph_ok::mbo_solver::{InitialCondition, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    Star,
    Complete,
    Bipartite,
    Path,
    Torus,
    Stitched,
    Moons,
    Edgelist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Eig,
    Structured,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Mcokmbo,
    Okmbo,
}

/// A single τ or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Taus {
    One(f64),
    Many(Vec<f64>),
}

impl Taus {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Taus::One(t) => vec![*t],
            Taus::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphSpec {
    pub kind: GraphKind,
    /// Node count; for `bipartite`, the first side.
    pub n: Option<usize>,
    /// Second side of `bipartite`.
    pub n2: Option<usize>,
    /// Edge-list file for `edgelist`.
    pub path: Option<PathBuf>,
    /// Replace edge-list weights by `(A + Aᵀ)/2`.
    pub symmetrize: bool,
    pub samples_per_moon: usize,
    pub dimension: usize,
    pub noise_sigma: f64,
    pub k_nearest: usize,
    /// Seed of the two-moons point cloud.
    pub seed: u64,
}

impl Default for GraphSpec {
    fn default() -> Self {
        let m = TwoMoonsParams::default();
        Self {
            kind: GraphKind::Torus,
            n: None,
            n2: None,
            path: None,
            symmetrize: true,
            samples_per_moon: m.samples_per_moon,
            dimension: m.dimension,
            noise_sigma: m.noise_sigma,
            k_nearest: m.k_nearest,
            seed: m.seed,
        }
    }
}

impl GraphSpec {
    fn moons(&self) -> TwoMoonsParams {
        TwoMoonsParams {
            samples_per_moon: self.samples_per_moon,
            dimension: self.dimension,
            noise_sigma: self.noise_sigma,
            k_nearest: self.k_nearest,
            seed: self.seed,
        }
    }

    fn size(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| CliError::config(format!("graph kind {:?} needs n", self.kind)))
    }

    pub fn build(&self) -> Result<Graph, CliError> {
        self.build_with_k().map(|(g, _)| g)
    }

    /// The graph and, for two-moons, the neighbour count actually used.
    pub fn build_with_k(&self) -> Result<(Graph, Option<usize>), CliError> {
        let g = match self.kind {
            GraphKind::Moons => {
                let (g, k) = two_moons_with_k(&self.moons())?;
                return Ok((g, Some(k)));
            }
            GraphKind::Star => star(self.size()?)?,
            GraphKind::Complete => complete(self.size()?)?,
            GraphKind::Path => path(self.size()?)?,
            GraphKind::Torus => torus_grid(self.size()?)?,
            GraphKind::Stitched => stitched(self.n.unwrap_or(402))?,
            GraphKind::Bipartite => {
                let n2 = self.n2.ok_or_else(|| CliError::config("graph kind bipartite needs n2"))?;
                complete_bipartite(self.size()?, n2)?
            }
            GraphKind::Edgelist => {
                let p = self.path.as_ref().ok_or_else(|| CliError::config("graph kind edgelist needs path"))?;
                load_weighted_edgelist(p, self.symmetrize)?.0
            }
        };
        Ok((g, None))
    }

    /// One-line description recorded in every output file.
    pub fn describe(&self) -> String {
        let mut s = format!("{:?}", self.kind).to_lowercase();
        match self.kind {
            GraphKind::Moons => {
                let _ = write!(s, " {}", self.moons());
            }
            GraphKind::Edgelist => {
                let p = self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
                let _ = write!(s, " path={p} symmetrize={}", self.symmetrize);
            }
            GraphKind::Stitched => {
                let _ = write!(s, " n={}", self.n.unwrap_or(402));
            }
            _ => {
                if let Some(n) = self.n {
                    let _ = write!(s, " n={n}");
                }
                if let Some(n2) = self.n2 {
                    let _ = write!(s, " n2={n2}");
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub r: f64,
    pub q: f64,
    pub gamma: f64,
    pub mass: Option<f64>,
    pub tau: Taus,
    pub init: InitKind,
    pub seed: u64,
    pub scheme: Scheme,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub output_dir: PathBuf,
    pub graph: GraphSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            r: 0.0,
            q: 1.0,
            gamma: 1.0,
            mass: None,
            tau: Taus::One(1.0),
            init: InitKind::Structured,
            seed: 0,
            scheme: Scheme::Mcokmbo,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
            output_dir: PathBuf::from("out"),
            graph: GraphSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn calculus_params(&self) -> Result<CalculusParams, CliError> {
        Ok(CalculusParams::new(self.q, self.r)?)
    }

    pub fn initial_condition(&self) -> InitialCondition {
        match self.init {
            InitKind::Eig => InitialCondition::EigenBased,
            InitKind::Structured => InitialCondition::Structured,
            InitKind::Random => InitialCondition::Random(self.seed),
        }
    }

    /// Checks shared by all subcommands.
    pub fn validate(&self) -> Result<(), CliError> {
        self.calculus_params()?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(CliError::config(format!("gamma must be finite and nonnegative, got {}", self.gamma)));
        }
        if let Some(t) = self.tau.values().iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(CliError::config(format!("tau must be positive and finite, got {t}")));
        }
        if self.tau.values().is_empty() {
            return Err(CliError::config("tau list is empty"));
        }
        if self.max_iterations == 0 {
            return Err(CliError::config("max_iterations must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(CliError::config("tolerance must be nonnegative"));
        }
        if let Some(m) = self.mass {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(CliError::config(format!("mass must be finite and nonnegative, got {m}")));
            }
        }
        Ok(())
    }

    pub fn require_mass(&self) -> Result<f64, CliError> {
        self.mass.ok_or_else(|| CliError::config("mass is required"))
    }
}

/// Config file plus per-field overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub graph: Option<GraphKind>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    /// Edge-list file (implies --graph edgelist).
    #[arg(long)]
    pub edgelist: Option<PathBuf>,
    /// Keep edge-list weights as read instead of symmetrizing.
    #[arg(long)]
    pub no_symmetrize: bool,
    #[arg(long)]
    pub samples_per_moon: Option<usize>,
    #[arg(long)]
    pub dimension: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub k_nearest: Option<usize>,
    /// Seed of the two-moons point cloud.
    #[arg(long)]
    pub graph_seed: Option<u64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    /// One value, or a comma-separated list for `sweep`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub tau: Vec<f64>,
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Seed of the random initial condition.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::config(format!("cannot read {}: {e}", p.display())))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let g = &mut c.graph;
        set(&mut g.kind, &self.graph);
        if self.n.is_some() {
            g.n = self.n;
        }
        if self.n2.is_some() {
            g.n2 = self.n2;
        }
        if let Some(p) = &self.edgelist {
            g.path = Some(p.clone());
            if self.graph.is_none() {
                g.kind = GraphKind::Edgelist;
            }
        }
        if self.no_symmetrize {
            g.symmetrize = false;
        }
        set(&mut g.samples_per_moon, &self.samples_per_moon);
        set(&mut g.dimension, &self.dimension);
        set(&mut g.noise_sigma, &self.noise_sigma);
        set(&mut g.k_nearest, &self.k_nearest);
        set(&mut g.seed, &self.graph_seed);
        set(&mut c.r, &self.r);
        set(&mut c.q, &self.q);
        set(&mut c.gamma, &self.gamma);
        if self.mass.is_some() {
            c.mass = self.mass;
        }
        match self.tau.len() {
            0 => {}
            1 => c.tau = Taus::One(self.tau[0]),
            _ => c.tau = Taus::Many(self.tau.clone()),
        }
        set(&mut c.init, &self.init);
        set(&mut c.seed, &self.seed);
        set(&mut c.scheme, &self.scheme);
        set(&mut c.max_iterations, &self.max_iterations);
        set(&mut c.tolerance, &self.tolerance);
        set(&mut c.output_dir, &self.output_dir);
        c.validate()?;
        Ok(c)
    }
}
