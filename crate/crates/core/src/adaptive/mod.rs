//! Residual-driven enrichment of the multiscale space.
//!
//! The offline loop enriches neighborhoods with more eigenfunctions where the
//! indicator `||R_i||^2 / lambda_{l_i+1}` is large; the online loop adds Riesz
//! representers of the residual on square coarse regions; the coupled run
//! switches from the first to the second once enough neighborhoods show a
//! flat spectrum.

pub mod marking;
pub mod regions;
pub mod residual;
pub mod strategy;

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linsolve::GRAM_DROP_TOL;
use crate::offline::{MultiscaleProblem, MultiscaleSpace};

pub use marking::{descending_order, offline_enrich_count, offline_mark};
pub use regions::{build_online_regions, parity_group, region_block, OnlineRegion, OnlineRegions, NUM_GROUPS};
pub use residual::{global_residual, neighborhood_blocks, residual_norm, ResidualBlock, ResidualReport};
pub use strategy::{
    strategy_registry, EnrichmentStrategy, OfflineAdaptive, OfflineOnline, OnlineEnrichment, UniformEnrichment,
};

/// Parameters shared by all enrichment strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptParams {
    /// Bulk marking fraction.
    pub theta: f64,
    /// Eigenvalue ratio controlling how many functions a marked neighborhood gains.
    pub delta0: f64,
    /// Eigenvalue ratio above which a neighborhood counts as saturated.
    pub delta: f64,
    /// Saturated fraction of neighborhoods that triggers the online stage.
    pub percentage: f64,
    /// Initial eigenfunctions per neighborhood.
    pub initial: usize,
    pub online_iterations: usize,
    /// Relative stop tolerance on the indicator sum.
    pub stop_tol: f64,
    /// DOF cap; `None` means the snapshot dimension.
    pub dof_cap: Option<usize>,
    pub max_iterations: usize,
    /// Record wall-clock time per iteration (breaks byte-identical output).
    pub record_time: bool,
}

impl Default for AdaptParams {
    fn default() -> Self {
        Self {
            theta: 0.2,
            delta0: 0.7,
            delta: 0.5,
            percentage: 0.25,
            initial: 1,
            online_iterations: 4,
            stop_tol: 1e-10,
            dof_cap: None,
            max_iterations: 200,
            record_time: false,
        }
    }
}

impl AdaptParams {
    pub fn validate(&self) -> Result<()> {
        let check = |what: &'static str, v: f64, ok: bool, range: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::OutOfRange {
                    what,
                    value: v.to_string(),
                    range: range.into(),
                })
            }
        };
        check("theta", self.theta, (0.0..1.0).contains(&self.theta), "[0, 1)")?;
        check("delta0", self.delta0, (0.0..1.0).contains(&self.delta0), "[0, 1)")?;
        check("delta", self.delta, self.delta > 0.0 && self.delta < 1.0, "(0, 1)")?;
        check(
            "percentage",
            self.percentage,
            self.percentage > 0.0 && self.percentage <= 1.0,
            "(0, 1]",
        )?;
        check("stop_tol", self.stop_tol, self.stop_tol >= 0.0, "[0, inf)")?;
        if self.initial == 0 {
            return Err(Error::OutOfRange {
                what: "initial",
                value: "0".into(),
                range: ">= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Offline,
    Online,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Offline => "offline",
            Phase::Online => "online",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub dof: usize,
    pub e1: f64,
    pub e2: f64,
    pub sum_eta2: f64,
    pub wall_ms: f64,
    /// Neighborhoods flagged saturated so far.
    pub saturated: usize,
}

/// What one online iteration did.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineStep {
    /// Iteration whose solution was used to evaluate the residuals.
    pub from_iteration: usize,
    pub group: usize,
    pub group_sums: [f64; NUM_GROUPS],
    /// Region indices that received a new basis function.
    pub regions: Vec<usize>,
    /// `||R_Omega||^2` of those regions.
    pub residual_sq: Vec<f64>,
    /// Positions of the new functions in `MultiscaleSpace::online`.
    pub added: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct History {
    pub strategy: String,
    pub records: Vec<IterationRecord>,
    /// Reduced multiscale solution of every record.
    pub iterates: Vec<Vec<f64>>,
    pub online_steps: Vec<OnlineStep>,
    /// Index of the last offline record before the online stage, if any.
    pub switch_iteration: Option<usize>,
    pub final_space: MultiscaleSpace,
}

impl History {
    pub const CSV_HEADER: &'static str = "iteration,phase,dof,e1,e2,sum_eta2,wall_ms";

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{:e},{:e},{:e},{:.3}",
                r.iteration, r.phase, r.dof, r.e1, r.e2, r.sum_eta2, r.wall_ms
            )?;
        }
        Ok(())
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("history starts with the initial record")
    }

    /// `e1` of the last record whose DOF does not exceed `dof`.
    pub fn e1_at_dof(&self, dof: usize) -> Option<f64> {
        self.records.iter().rev().find(|r| r.dof <= dof).map(|r| r.e1)
    }
}

/// Relative errors `(energy, L2)` of `u` against `reference`; zero when both vanish.
pub fn relative_errors(problem: &MultiscaleProblem, reference: &[f64], u: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = reference.iter().zip(u).map(|(p, q)| p - q).collect();
    let sys = &problem.system;
    let ratio = |num: f64, den: f64| if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    (
        ratio(sys.energy_sq(&d).max(0.0), sys.energy_sq(reference).max(0.0)),
        ratio(sys.l2_sq(&d), sys.l2_sq(reference)),
    )
}

/// Mutable state of an enrichment run.
pub struct AdaptiveRun<'a> {
    pub problem: &'a MultiscaleProblem,
    pub params: AdaptParams,
    blocks: Vec<residual::ResidualBlock>,
    regions: Option<OnlineRegions>,
    pub space: MultiscaleSpace,
    pub u: Vec<f64>,
    pub report: ResidualReport,
    /// Neighborhoods found saturated by the spectral-gap test.
    pub saturated: BTreeSet<usize>,
    history: History,
    initial_sum: f64,
    start: Instant,
}

impl<'a> AdaptiveRun<'a> {
    pub fn new(problem: &'a MultiscaleProblem, params: AdaptParams, strategy: &str) -> Result<Self> {
        params.validate()?;
        let start = Instant::now();
        let blocks = neighborhood_blocks(problem)?;
        let space = MultiscaleSpace::uniform(problem, params.initial);
        let u = problem.solve(&space)?.u;
        let report = ResidualReport::compute(problem, &blocks, &space, &u);
        let initial_sum = report.sum_indicator_sq();
        let mut run = Self {
            problem,
            params,
            blocks,
            regions: None,
            history: History {
                strategy: strategy.to_string(),
                records: Vec::new(),
                iterates: Vec::new(),
                online_steps: Vec::new(),
                switch_iteration: None,
                final_space: space.clone(),
            },
            space,
            u,
            report,
            saturated: BTreeSet::new(),
            initial_sum,
            start,
        };
        run.record(Phase::Offline);
        Ok(run)
    }

    pub fn iteration(&self) -> usize {
        self.history.records.len() - 1
    }

    pub fn dof_cap(&self) -> usize {
        self.params.dof_cap.unwrap_or(self.problem.snapshots.dim())
    }

    /// Indicator sum small enough, or DOF budget used up.
    pub fn stop_reached(&self) -> bool {
        self.report.sum_indicator_sq() <= self.params.stop_tol * self.initial_sum
            || self.space.dim() >= self.dof_cap()
            || self.iteration() >= self.params.max_iterations
    }

    pub fn saturated_fraction(&self) -> f64 {
        self.saturated.len() as f64 / self.problem.num_neighborhoods().max(1) as f64
    }

    fn record(&mut self, phase: Phase) {
        let (e1, e2) = relative_errors(self.problem, &self.problem.u_snap, &self.u);
        let wall_ms = if self.params.record_time {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let iteration = self.history.records.len();
        self.history.records.push(IterationRecord {
            iteration,
            phase,
            dof: self.space.dim(),
            e1,
            e2,
            sum_eta2: self.report.sum_indicator_sq(),
            wall_ms,
            saturated: self.saturated.len(),
        });
        self.history.iterates.push(self.u.clone());
    }

    fn resolve(&mut self, phase: Phase) -> Result<()> {
        self.u = self.problem.solve(&self.space)?.u;
        self.report = ResidualReport::compute(self.problem, &self.blocks, &self.space, &self.u);
        self.record(phase);
        Ok(())
    }

    /// Mark, enrich and re-solve. Returns `false` when nothing could be added.
    pub fn offline_step(&mut self) -> Result<bool> {
        let marked = offline_mark(&self.report.indicator_sq, self.params.theta);
        let mut changed = false;
        for i in marked {
            let lambdas = &self.problem.spectra[i].pairs.values;
            let l = self.space.counts[i];
            let s = offline_enrich_count(lambdas, l, self.params.delta0);
            if s == 0 {
                continue;
            }
            let new_l = l + s;
            let lam = |k: usize| lambdas.get(k).copied().unwrap_or(f64::INFINITY);
            if lam(new_l - 1) / lam(new_l) >= self.params.delta {
                self.saturated.insert(i);
            }
            self.space.counts[i] = new_l;
            changed = true;
        }
        if changed {
            self.resolve(Phase::Offline)?;
        }
        Ok(changed)
    }

    /// One more eigenfunction in every neighborhood that has one left.
    pub fn uniform_step(&mut self) -> Result<bool> {
        let mut changed = false;
        for (i, l) in self.space.counts.iter_mut().enumerate() {
            if *l < self.problem.spectra[i].num_modes() {
                *l += 1;
                changed = true;
            }
        }
        if changed {
            self.resolve(Phase::Offline)?;
        }
        Ok(changed)
    }

    /// Adds residual representers on the parity group with the largest residual.
    pub fn online_step(&mut self) -> Result<bool> {
        if self.regions.is_none() {
            self.regions = Some(OnlineRegions::build(self.problem)?);
        }
        let regions = self.regions.as_ref().expect("built above");
        let r = global_residual(&self.problem.system.matrix, &self.problem.system.load, &self.u);
        let res_sq: Vec<f64> = regions.blocks.par_iter().map(|b| b.norm_sq(&r)).collect();
        let mut group_sums = [0.0; NUM_GROUPS];
        for (reg, &v) in regions.regions.iter().zip(&res_sq) {
            group_sums[reg.group] += v;
        }
        let mut group = 0;
        for g in 1..NUM_GROUPS {
            if group_sums[g] > group_sums[group] {
                group = g;
            }
        }
        let max_res = res_sq.iter().fold(0.0f64, |m, v| m.max(*v));
        if !(group_sums[group] > 0.0) {
            return Ok(false);
        }
        let threshold = GRAM_DROP_TOL * max_res;
        let members: Vec<usize> = regions
            .group_members(group)
            .into_iter()
            .filter(|&k| res_sq[k] > threshold)
            .collect();
        let from_iteration = self.iteration();
        let mut step = OnlineStep {
            from_iteration,
            group,
            group_sums,
            regions: Vec::new(),
            residual_sq: Vec::new(),
            added: Vec::new(),
        };
        for k in members {
            let (phi, norm_sq) = regions.blocks[k].representer(&r);
            step.regions.push(k);
            step.residual_sq.push(norm_sq);
            step.added.push(self.space.online.len());
            self.space.online.push(phi);
        }
        if step.added.is_empty() {
            return Ok(false);
        }
        self.history.online_steps.push(step);
        self.resolve(Phase::Online)?;
        Ok(true)
    }

    pub fn online_regions(&mut self) -> Result<&OnlineRegions> {
        if self.regions.is_none() {
            self.regions = Some(OnlineRegions::build(self.problem)?);
        }
        Ok(self.regions.as_ref().expect("built above"))
    }

    pub fn mark_switch(&mut self) {
        self.history.switch_iteration = Some(self.iteration());
    }

    pub fn finish(mut self) -> History {
        self.history.final_space = self.space;
        self.history
    }
}
