use std::fs;

use volfied_core::sim::{SimConfig, CALIBRATED_ANGULAR_D_MAX};
use volfied_core::DistanceMetric;

use crate::args::{ConfigArgs, Overrides};
use crate::error::{CliError, Result};

/// The file configuration (or the defaults) with command-line overrides on top.
pub fn resolve(args: &ConfigArgs) -> Result<SimConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.clone(), source })?
        }
        None => SimConfig::default(),
    };
    apply(&mut config, &args.overrides);
    Ok(config)
}

fn apply(c: &mut SimConfig, o: &Overrides) {
    macro_rules! set {
        ($($field:ident => $target:expr),* $(,)?) => {
            $(if let Some(v) = o.$field { $target = v; })*
        };
    }
    set! {
        k => c.k,
        m => c.m,
        d_max => c.d_max,
        epsilon => c.epsilon,
        n => c.n,
        metric => c.metric,
        cache => c.cache_capacity,
        detection => c.detection_accuracy,
        num_ads => c.num_ads,
        global_fraction => c.global_fraction,
        steps => c.steps,
        num_vehicles => c.scenario.num_vehicles,
        num_poas => c.scenario.num_poas,
        poa_layout => c.scenario.poa_layout,
    }
    if o.metric == Some(DistanceMetric::Angular) && o.d_max.is_none() {
        c.d_max = CALIBRATED_ANGULAR_D_MAX;
    }
    if o.no_sparse {
        c.use_sparse = false;
    }
}

/// Validates and reports warnings on stderr.
pub fn check(config: &SimConfig, label: &str) -> Result<()> {
    for w in config.validate()? {
        eprintln!("warning{label}: {w}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_without_threshold_uses_calibration() {
        let mut c = SimConfig::default();
        apply(&mut c, &Overrides { metric: Some(DistanceMetric::Angular), ..Overrides::default() });
        assert_eq!(c.d_max, CALIBRATED_ANGULAR_D_MAX);

        let mut c = SimConfig::default();
        apply(&mut c, &Overrides { metric: Some(DistanceMetric::Angular), d_max: Some(0.2), ..Overrides::default() });
        assert_eq!(c.d_max, 0.2);
    }

    #[test]
    fn overrides_leave_other_fields() {
        let mut c = SimConfig::default();
        apply(&mut c, &Overrides { k: Some(2), cache: Some(3), no_sparse: true, ..Overrides::default() });
        assert_eq!((c.k, c.cache_capacity, c.use_sparse), (2, 3, false));
        assert_eq!(c.m, SimConfig::default().m);
    }
}
