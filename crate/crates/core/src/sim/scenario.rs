use crate::error::Result;
use crate::model::{AdCatalog, PoA, VehicleProfile};
use crate::sim::config::SimConfig;
use crate::sim::engine::{CandidateLists, Simulation, StepMetrics};
use crate::sim::population::{gen_ads, gen_poas, gen_profiles};
use crate::sim::trace::{gen_synthetic, MobilityTrace};

/// Everything a run needs besides its parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub poas: Vec<PoA>,
    pub catalog: AdCatalog,
    pub profiles: Vec<VehicleProfile>,
    pub trace: MobilityTrace,
}

impl Scenario {
    /// Synthetic scenario drawn from `config.seed`.
    pub fn generate(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let poas = gen_poas(&config.scenario, config.seed)?;
        let catalog = AdCatalog::new(gen_ads(config, &poas, config.seed)?)?;
        let profiles = gen_profiles(config.n, config.scenario.num_vehicles, config.seed)?;
        let trace = gen_synthetic(&config.synthetic_trace(), config.seed)?;
        Ok(Scenario { poas, catalog, profiles, trace })
    }

    pub fn candidates(&self, config: &SimConfig) -> Result<CandidateLists> {
        CandidateLists::for_config(config, &self.catalog, &self.poas)
    }

    pub fn simulation<'a>(&'a self, config: &SimConfig) -> Result<Simulation<'a>> {
        Simulation::new(config, &self.catalog, self.poas.clone(), &self.profiles, &self.trace)
    }

    pub fn run(&self, config: &SimConfig) -> Result<Vec<StepMetrics>> {
        Ok(self.simulation(config)?.run())
    }
}
