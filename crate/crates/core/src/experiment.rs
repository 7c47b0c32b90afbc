//! Run configuration, error metrics and the experiment drivers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::adaptive::{strategy_registry, AdaptParams, History};
use crate::assembly::FineSystem;
use crate::error::{Error, Result};
use crate::fields::{example_source, generate_contrast_field, CellField, PatternParams};
use crate::grid::{CoarseGrid, FineGrid};
use crate::linsolve::{solver_registry, SpdSolver, DEFAULT_TOL};
use crate::offline::MultiscaleProblem;
use crate::snapshot::{solve_in_space, SnapshotSpace};

/// Flat `key = value` configuration. Every key has a default.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Fine cells per side.
    pub n: usize,
    /// Coarse cells per side.
    pub coarse: usize,
    /// The curl coefficient is `kappa^power`.
    pub power: i32,
    pub pattern: String,
    pub seed: u64,
    pub density: f64,
    pub channels: usize,
    pub kappa_background: f64,
    pub kappa_high: f64,
    /// Read `kappa` from a raster instead of generating it.
    pub kappa_raster: Option<PathBuf>,
    pub example: u32,
    /// Constant mass coefficient, unless `b_raster` is set.
    pub b: f64,
    pub b_raster: Option<PathBuf>,
    pub solver: String,
    pub theta: f64,
    pub delta0: f64,
    pub delta: f64,
    pub percentage: f64,
    pub initial: usize,
    pub online_iterations: usize,
    pub stop_tol: f64,
    /// 0 means the snapshot dimension.
    pub dof_cap: usize,
    pub max_iterations: usize,
    /// Coarse sizes of the convergence study.
    pub coarse_list: Vec<usize>,
    /// Contrast powers of the convergence study.
    pub power_list: Vec<i32>,
    /// 0 picks the uniform level `initial + 3` for the adaptive-vs-uniform comparison.
    pub compare_dof: usize,
    pub record_time: bool,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 64,
            coarse: 8,
            power: 4,
            pattern: "inclusions".into(),
            seed: 1,
            density: 0.2,
            channels: 8,
            kappa_background: 1.0,
            kappa_high: 10.0,
            kappa_raster: None,
            example: 1,
            b: 1.0,
            b_raster: None,
            solver: "cholesky".into(),
            theta: 0.2,
            delta0: 0.7,
            delta: 0.5,
            percentage: 0.25,
            initial: 1,
            online_iterations: 4,
            stop_tol: 1e-10,
            dof_cap: 0,
            max_iterations: 200,
            coarse_list: vec![4, 8, 16],
            power_list: vec![2, 4, 6],
            compare_dof: 0,
            record_time: false,
            output: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn optional_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "n",
        "coarse",
        "power",
        "pattern",
        "seed",
        "density",
        "channels",
        "kappa_background",
        "kappa_high",
        "kappa_raster",
        "example",
        "b",
        "b_raster",
        "solver",
        "theta",
        "delta0",
        "delta",
        "percentage",
        "initial",
        "online_iterations",
        "stop_tol",
        "dof_cap",
        "max_iterations",
        "coarse_list",
        "power_list",
        "compare_dof",
        "record_time",
        "output",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "n" => self.n = parse(key, value)?,
            "coarse" => self.coarse = parse(key, value)?,
            "power" => self.power = parse(key, value)?,
            "pattern" => self.pattern = value.to_string(),
            "seed" => self.seed = parse(key, value)?,
            "density" => self.density = parse(key, value)?,
            "channels" => self.channels = parse(key, value)?,
            "kappa_background" => self.kappa_background = parse(key, value)?,
            "kappa_high" => self.kappa_high = parse(key, value)?,
            "kappa_raster" => self.kappa_raster = optional_path(value),
            "example" => self.example = parse(key, value)?,
            "b" => self.b = parse(key, value)?,
            "b_raster" => self.b_raster = optional_path(value),
            "solver" => self.solver = value.to_string(),
            "theta" => self.theta = parse(key, value)?,
            "delta0" => self.delta0 = parse(key, value)?,
            "delta" => self.delta = parse(key, value)?,
            "percentage" => self.percentage = parse(key, value)?,
            "initial" => self.initial = parse(key, value)?,
            "online_iterations" => self.online_iterations = parse(key, value)?,
            "stop_tol" => self.stop_tol = parse(key, value)?,
            "dof_cap" => self.dof_cap = parse(key, value)?,
            "max_iterations" => self.max_iterations = parse(key, value)?,
            "coarse_list" => self.coarse_list = parse_list(key, value)?,
            "power_list" => self.power_list = parse_list(key, value)?,
            "compare_dof" => self.compare_dof = parse(key, value)?,
            "record_time" => self.record_time = parse(key, value)?,
            "output" => self.output = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key=value` (or `key = value`).
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    /// Parses config text on top of the defaults. `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.apply_assignment(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        Some(match key {
            "n" => self.n.to_string(),
            "coarse" => self.coarse.to_string(),
            "power" => self.power.to_string(),
            "pattern" => self.pattern.clone(),
            "seed" => self.seed.to_string(),
            "density" => self.density.to_string(),
            "channels" => self.channels.to_string(),
            "kappa_background" => self.kappa_background.to_string(),
            "kappa_high" => self.kappa_high.to_string(),
            "kappa_raster" => path(&self.kappa_raster),
            "example" => self.example.to_string(),
            "b" => self.b.to_string(),
            "b_raster" => path(&self.b_raster),
            "solver" => self.solver.clone(),
            "theta" => self.theta.to_string(),
            "delta0" => self.delta0.to_string(),
            "delta" => self.delta.to_string(),
            "percentage" => self.percentage.to_string(),
            "initial" => self.initial.to_string(),
            "online_iterations" => self.online_iterations.to_string(),
            "stop_tol" => format!("{:e}", self.stop_tol),
            "dof_cap" => self.dof_cap.to_string(),
            "max_iterations" => self.max_iterations.to_string(),
            "coarse_list" => join(&self.coarse_list),
            "power_list" => join(&self.power_list),
            "compare_dof" => self.compare_dof.to_string(),
            "record_time" => self.record_time.to_string(),
            "output" => self.output.display().to_string(),
            _ => return None,
        })
    }

    /// All keys in `key = value` form; parses back to the same config.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.coarse == 0 || self.n % self.coarse != 0 {
            return Err(Error::IncompatibleGrids {
                fine: self.n,
                coarse: self.coarse,
            });
        }
        if !(self.kappa_background >= 1.0) {
            return Err(Error::OutOfRange {
                what: "kappa_background",
                value: self.kappa_background.to_string(),
                range: "[1, inf)".into(),
            });
        }
        if self.power < 0 {
            return Err(Error::OutOfRange {
                what: "power",
                value: self.power.to_string(),
                range: "[0, inf)".into(),
            });
        }
        solver_registry().create(&self.solver)?;
        self.adapt_params().validate()
    }

    pub fn adapt_params(&self) -> AdaptParams {
        AdaptParams {
            theta: self.theta,
            delta0: self.delta0,
            delta: self.delta,
            percentage: self.percentage,
            initial: self.initial,
            online_iterations: self.online_iterations,
            stop_tol: self.stop_tol,
            dof_cap: (self.dof_cap > 0).then_some(self.dof_cap),
            max_iterations: self.max_iterations,
            record_time: self.record_time,
        }
    }

    pub fn fine_grid(&self) -> Result<FineGrid> {
        FineGrid::new(self.n)
    }

    pub fn coarse_grid(&self) -> Result<CoarseGrid> {
        CoarseGrid::new(self.fine_grid()?, self.coarse)
    }

    pub fn solver(&self) -> Result<Box<dyn SpdSolver>> {
        solver_registry().create(&self.solver)
    }

    /// The two-valued field `kappa`, generated or read from a raster.
    pub fn kappa(&self, grid: &FineGrid) -> Result<CellField> {
        match &self.kappa_raster {
            Some(path) => CellField::read_raster(path, grid),
            None => generate_contrast_field(
                grid,
                &self.pattern,
                self.seed,
                self.kappa_background,
                self.kappa_high,
                &PatternParams {
                    density: self.density,
                    channels: self.channels,
                },
            ),
        }
    }

    pub fn mass_coefficient(&self, grid: &FineGrid) -> Result<CellField> {
        match &self.b_raster {
            Some(path) => CellField::read_raster(path, grid),
            None => Ok(CellField::constant(grid, self.b)),
        }
    }

    /// Fine system with curl coefficient `kappa^power`.
    pub fn system_with_power(&self, kappa: &CellField, power: i32) -> Result<FineSystem> {
        let grid = self.fine_grid()?;
        FineSystem::assemble(
            grid,
            kappa.contrast_power(power),
            self.mass_coefficient(&grid)?,
            &example_source(self.example, &grid)?,
        )
    }

    pub fn system(&self) -> Result<FineSystem> {
        let grid = self.fine_grid()?;
        self.system_with_power(&self.kappa(&grid)?, self.power)
    }

    pub fn problem(&self) -> Result<MultiscaleProblem> {
        self.validate()?;
        MultiscaleProblem::build(self.coarse_grid()?, self.system()?, self.solver()?)
    }
}

/// Relative errors reported by the experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// Energy error of the snapshot solution against the fine solution.
    pub e1_snapshot: f64,
    /// Energy error of the multiscale solution against the snapshot solution.
    pub e1: f64,
    /// Unweighted L2 error of the multiscale solution against the snapshot solution.
    pub e2: f64,
}

fn relative(num_sq: f64, den_sq: f64, what: &'static str) -> Result<f64> {
    if den_sq > 0.0 {
        Ok((num_sq.max(0.0) / den_sq).sqrt())
    } else {
        Err(Error::ZeroNorm(what))
    }
}

fn diff(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(p, q)| p - q).collect()
}

pub fn energy_relative_error(sys: &FineSystem, reference: &[f64], u: &[f64]) -> Result<f64> {
    relative(
        sys.energy_sq(&diff(reference, u)),
        sys.energy_sq(reference),
        "energy norm of the reference solution",
    )
}

pub fn compute_metrics(sys: &FineSystem, u_h: &[f64], u_snap: &[f64], u_ms: &[f64]) -> Result<ErrorMetrics> {
    let n = sys.num_dofs();
    for v in [u_h, u_snap, u_ms] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    Ok(ErrorMetrics {
        e1_snapshot: energy_relative_error(sys, u_h, u_snap)?,
        e1: energy_relative_error(sys, u_snap, u_ms)?,
        e2: relative(
            sys.l2_sq(&diff(u_snap, u_ms)),
            sys.l2_sq(u_snap),
            "L2 norm of the snapshot solution",
        )?,
    })
}

/// Reduced fine-scale solution.
pub fn solve_fine(sys: &FineSystem, solver: &dyn SpdSolver) -> Result<Vec<f64>> {
    solver.prepare(&sys.matrix, DEFAULT_TOL)?.solve(&sys.load)
}

/// Snapshot solution on a coarse grid of `coarse` cells per side.
pub fn snapshot_solution(sys: &FineSystem, coarse: usize, solver: &dyn SpdSolver) -> Result<Vec<f64>> {
    let coarse = CoarseGrid::new(sys.grid, coarse)?;
    let space = SnapshotSpace::build(&coarse, sys)?;
    Ok(solve_in_space(&space.basis, &sys.matrix, &sys.load, solver)?.u)
}

/// Relative energy error of the snapshot solution for one configuration.
pub fn snapshot_error(cfg: &RunConfig) -> Result<f64> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let solver = cfg.solver()?;
    let u_h = solve_fine(&sys, solver.as_ref())?;
    let u_snap = snapshot_solution(&sys, cfg.coarse, solver.as_ref())?;
    energy_relative_error(&sys, &u_h, &u_snap)
}

/// Snapshot errors for every coarse size (rows) and contrast power (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub coarse_sizes: Vec<usize>,
    pub powers: Vec<i32>,
    /// Contrast `(kappa_high / kappa_background)^power` of each column.
    pub contrasts: Vec<f64>,
    pub errors: Vec<Vec<f64>>,
}

impl ConvergenceTable {
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        let header: Vec<String> = self.contrasts.iter().map(|c| format!("{c:e}")).collect();
        writeln!(w, "H,{}", header.join(","))?;
        for (nc, row) in self.coarse_sizes.iter().zip(&self.errors) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{:e},{}", 1.0 / *nc as f64, vals.join(","))?;
        }
        Ok(())
    }

    /// `errors[k][p] / errors[k+1][p]` for consecutive coarse sizes.
    pub fn rates(&self) -> Vec<Vec<f64>> {
        self.errors
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a / b).collect())
            .collect()
    }
}

pub fn convergence_study(cfg: &RunConfig, coarse_sizes: &[usize], powers: &[i32]) -> Result<ConvergenceTable> {
    cfg.validate()?;
    for &nc in coarse_sizes {
        if nc == 0 || cfg.n % nc != 0 {
            return Err(Error::IncompatibleGrids { fine: cfg.n, coarse: nc });
        }
    }
    let grid = cfg.fine_grid()?;
    let kappa = cfg.kappa(&grid)?;
    let solver = cfg.solver()?;
    let mut errors = vec![vec![0.0; powers.len()]; coarse_sizes.len()];
    for (col, &p) in powers.iter().enumerate() {
        let sys = cfg.system_with_power(&kappa, p)?;
        let u_h = solve_fine(&sys, solver.as_ref())?;
        for (row, &nc) in coarse_sizes.iter().enumerate() {
            let u_snap = snapshot_solution(&sys, nc, solver.as_ref())?;
            errors[row][col] = energy_relative_error(&sys, &u_h, &u_snap)?;
        }
    }
    let ratio = kappa.max() / kappa.min();
    Ok(ConvergenceTable {
        coarse_sizes: coarse_sizes.to_vec(),
        powers: powers.to_vec(),
        contrasts: powers.iter().map(|&p| ratio.powi(p)).collect(),
        errors,
    })
}

/// Runs a registered enrichment strategy.
pub fn run_strategy(problem: &MultiscaleProblem, cfg: &RunConfig, name: &str) -> Result<History> {
    strategy_registry().create(name)?.run(problem, &cfg.adapt_params())
}

/// Offline adaptive and uniform runs with the DOF at which they are compared.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub adaptive: History,
    pub uniform: History,
    pub compare_dof: usize,
    pub adaptive_e1: f64,
    pub uniform_e1: f64,
}

/// Both runs share the DOF budget `compare_dof`; each is read off at its last
/// record not exceeding it.
pub fn adaptive_vs_uniform(problem: &MultiscaleProblem, cfg: &RunConfig) -> Result<Comparison> {
    let compare_dof = if cfg.compare_dof > 0 {
        cfg.compare_dof
    } else {
        let level = cfg.initial + 3;
        problem
            .spectra
            .iter()
            .map(|s| level.min(s.num_modes()))
            .sum()
    };
    let mut budget = cfg.clone();
    budget.dof_cap = compare_dof;
    let adaptive = run_strategy(problem, &budget, "offline-adaptive")?;
    let uniform = run_strategy(problem, &budget, "uniform")?;
    let missing = || Error::Config(format!("no record at or below {compare_dof} DOF"));
    let adaptive_e1 = adaptive.e1_at_dof(compare_dof).ok_or_else(missing)?;
    let uniform_e1 = uniform.e1_at_dof(compare_dof).ok_or_else(missing)?;
    Ok(Comparison {
        adaptive,
        uniform,
        compare_dof,
        adaptive_e1,
        uniform_e1,
    })
}

pub fn offline_online_experiment(problem: &MultiscaleProblem, cfg: &RunConfig) -> Result<History> {
    run_strategy(problem, cfg, "offline-online")
}
