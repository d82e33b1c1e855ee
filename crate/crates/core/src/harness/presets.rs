//! Named experiment presets, one per evaluation figure plus a quick suite.

use super::config::{CsiMode, ExperimentConfig, LinkKind, PowerScaling, SweepVar};
use crate::channel::dbm_to_mw;
use crate::error::{Error, Result};
use crate::pzf::PzfParams;

pub const PRESET_NAMES: [&str; 7] = [
    "fig2",
    "fig3",
    "fig4",
    "fig5",
    "fig7",
    "fig8",
    "props-suite",
];

/// Default configuration for `name`.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig {
        preset: name.to_string(),
        ..ExperimentConfig::default()
    };
    let cfg = match name {
        "fig2" => ExperimentConfig {
            sweep: SweepVar::Antennas,
            values: vec![20.0, 40.0, 60.0, 80.0, 100.0, 150.0, 200.0, 250.0, 300.0],
            bs: PzfParams::new(3, 2, 100),
            ..base
        },
        "fig3" => ExperimentConfig {
            link: LinkKind::D2d,
            sweep: SweepVar::UeAntennas,
            values: (4..=12).map(f64::from).collect(),
            ue: PzfParams::new(0, 2, 4),
            ..base
        },
        "fig4" => {
            let mut cfg = ExperimentConfig {
                sweep: SweepVar::Antennas,
                values: vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0],
                bs: PzfParams::new(0, 2, 100),
                power: PowerScaling::PerAntenna,
                ..base
            };
            cfg.budget.p_d = dbm_to_mw(3.0);
            cfg
        }
        "fig5" => ExperimentConfig {
            link: LinkKind::D2d,
            sweep: SweepVar::UesPerCell,
            values: vec![1.0, 2.0, 5.0, 10.0, 15.0, 20.0],
            ue: PzfParams::mrc(4),
            ..base
        },
        "fig7" => {
            let mut cfg = ExperimentConfig {
                sweep: SweepVar::Density,
                values: vec![0.0, 2.0, 4.0, 8.0, 12.0, 16.0, 22.0, 30.0],
                bs: PzfParams::mrc(1024),
                csi: CsiMode::EstimatedActive,
                drops: 100,
                fades: 4,
                ..base
            };
            cfg.budget.t_c = 4;
            cfg
        }
        "fig8" => ExperimentConfig {
            sweep: SweepVar::CancelD2d,
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0],
            bs: PzfParams::new(3, 2, 100),
            ..base
        },
        "props-suite" => {
            let mut cfg = ExperimentConfig {
                sweep: SweepVar::Antennas,
                values: vec![16.0, 32.0, 64.0],
                bs: PzfParams::new(1, 2, 16),
                drops: 16,
                fades: 8,
                ..base
            };
            cfg.geometry.num_rings = 1;
            cfg.geometry.density = 4.0;
            cfg
        }
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            });
        }
    };
    Ok(cfg)
}
