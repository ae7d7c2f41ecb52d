//! Named experiment definitions; a config may start from one and override any key.

use super::config::{
    ExperimentConfig, GridConfig, HamiltonianConfig, InitialConfig, Model, ProfileKind, SigmaChoice,
    TimeConfig,
};
use crate::hybrid::figure1_coupling;
use crate::koopman::QuadraticForm;
use crate::phasespace::GridSpec;

pub const NAMES: &[&str] = &[
    "figure1",
    "figure1_quantum",
    "nqcle_figure1",
    "kvh_oscillator",
    "kvn_oscillator",
    "free_particle",
];

fn figure1_base(name: &str, model: Model) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(model);
    c.preset = Some(name.into());
    c.output = format!("runs/{name}");
    c.grid = GridSpec::square(128, 16.0, 1.0).into();
    c.hamiltonian = HamiltonianConfig {
        h0: QuadraticForm::oscillator().coefficients(),
        h_i: figure1_coupling().coefficients(),
        sigma: SigmaChoice::Z,
        terms: Vec::new(),
    };
    c.initial = InitialConfig::default();
    c.time = TimeConfig {
        dt: 1e-3,
        t_final: 10.0,
        checkpoint_interval: Some(1.0),
    };
    c
}

fn oscillator(name: &str, model: Model) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(model);
    c.preset = Some(name.into());
    c.output = format!("runs/{name}");
    c.grid = GridSpec::square(128, 8.0, 1.0).into();
    c.initial = InitialConfig::gaussian(1.5, 0.0, 1.0);
    c.time = TimeConfig {
        dt: 1e-3,
        t_final: 10.0,
        checkpoint_interval: Some(1.0),
    };
    c
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    Some(match name {
        "figure1" => figure1_base(name, Model::Qcwe),
        "figure1_quantum" => figure1_base(name, Model::QuantumRef),
        "nqcle_figure1" => {
            let mut c = figure1_base(name, Model::Nqcle);
            c.initial.profile = ProfileKind::Figure1Real;
            c.time = TimeConfig {
                dt: 1e-3,
                t_final: 2.0,
                checkpoint_interval: Some(0.5),
            };
            c
        }
        "kvh_oscillator" => oscillator(name, Model::Kvh),
        "kvn_oscillator" => oscillator(name, Model::Kvn),
        "free_particle" => {
            let mut c = oscillator(name, Model::Kvh);
            c.grid = GridConfig::from(GridSpec::square(128, 12.0, 1.0));
            c.hamiltonian.h0 = QuadraticForm::new(0.0, 0.5, 0.0, 0.0, 0.0, 0.0).coefficients();
            c.initial = InitialConfig::gaussian(-3.0, 1.0, 1.0);
            // by t ≈ 3 the sheared tail reaches the edge of the box
            c.time = TimeConfig {
                dt: 1e-3,
                t_final: 2.0,
                checkpoint_interval: Some(0.5),
            };
            c
        }
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in NAMES {
            let c = preset(name).unwrap();
            assert!(c.violations().is_empty(), "{name}: {:?}", c.violations());
            assert_eq!(c.preset.as_deref(), Some(*name));
        }
        assert!(preset("missing").is_none());
    }
}
