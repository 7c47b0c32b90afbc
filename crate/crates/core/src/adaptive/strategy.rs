//! Named enrichment strategies.

use crate::adaptive::{AdaptParams, AdaptiveRun, History};
use crate::error::Result;
use crate::offline::MultiscaleProblem;
use crate::registry::Registry;

pub trait EnrichmentStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, problem: &MultiscaleProblem, params: &AdaptParams) -> Result<History>;
}

/// Indicator-driven offline enrichment until the stop condition fires.
pub struct OfflineAdaptive;

impl EnrichmentStrategy for OfflineAdaptive {
    fn name(&self) -> &'static str {
        "offline-adaptive"
    }

    fn run(&self, problem: &MultiscaleProblem, params: &AdaptParams) -> Result<History> {
        let mut run = AdaptiveRun::new(problem, params.clone(), self.name())?;
        while !run.stop_reached() && run.offline_step()? {}
        Ok(run.finish())
    }
}

/// One more eigenfunction in every neighborhood per level.
pub struct UniformEnrichment;

impl EnrichmentStrategy for UniformEnrichment {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn run(&self, problem: &MultiscaleProblem, params: &AdaptParams) -> Result<History> {
        let mut run = AdaptiveRun::new(problem, params.clone(), self.name())?;
        while !run.stop_reached() && run.uniform_step()? {}
        Ok(run.finish())
    }
}

/// Online enrichment from the initial offline space.
pub struct OnlineEnrichment;

impl EnrichmentStrategy for OnlineEnrichment {
    fn name(&self) -> &'static str {
        "online"
    }

    fn run(&self, problem: &MultiscaleProblem, params: &AdaptParams) -> Result<History> {
        let mut run = AdaptiveRun::new(problem, params.clone(), self.name())?;
        run.mark_switch();
        for _ in 0..params.online_iterations {
            if run.space.dim() >= run.dof_cap() || !run.online_step()? {
                break;
            }
        }
        Ok(run.finish())
    }
}

/// Offline enrichment until enough neighborhoods are saturated, then online.
///
/// If the offline loop stops before the saturation threshold is met, the
/// online stage starts from wherever it stopped.
pub struct OfflineOnline;

impl EnrichmentStrategy for OfflineOnline {
    fn name(&self) -> &'static str {
        "offline-online"
    }

    fn run(&self, problem: &MultiscaleProblem, params: &AdaptParams) -> Result<History> {
        let mut run = AdaptiveRun::new(problem, params.clone(), self.name())?;
        while run.saturated_fraction() < params.percentage && !run.stop_reached() {
            if !run.offline_step()? {
                break;
            }
        }
        run.mark_switch();
        for _ in 0..params.online_iterations {
            if run.space.dim() >= run.dof_cap() || !run.online_step()? {
                break;
            }
        }
        Ok(run.finish())
    }
}

pub fn strategy_registry() -> Registry<dyn EnrichmentStrategy> {
    let mut r: Registry<dyn EnrichmentStrategy> = Registry::new("enrichment strategy");
    r.register("offline-adaptive", || Box::new(OfflineAdaptive));
    r.register("uniform", || Box::new(UniformEnrichment));
    r.register("online", || Box::new(OnlineEnrichment));
    r.register("offline-online", || Box::new(OfflineOnline));
    r
}
