use crate::config::ExperimentConfig;
use crate::error::Result;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        name: "fig2",
        description: "BER vs SNR without phase noise, SPMC and coherent 16-PSK, M = 3",
        json: include_str!("../presets/fig2.json"),
    },
    Preset {
        name: "fig3",
        description: "BER vs SNR for phase noise of 1, 3 and 10 degrees per symbol",
        json: include_str!("../presets/fig3.json"),
    },
    Preset {
        name: "fig4",
        description: "direction error densities for M in {2, 4, 8, 16} at 10 dB",
        json: include_str!("../presets/fig4.json"),
    },
    Preset {
        name: "fig5",
        description: "direction RMSE against the CRLB over SNR and M",
        json: include_str!("../presets/fig5.json"),
    },
    Preset {
        name: "peb-demo",
        description: "position error bound map over a four-anchor square",
        json: include_str!("../presets/peb-demo.json"),
    },
];

const SCENES: [(&str, &str); 1] = [("scenes/square.json", include_str!("../scenes/square.json"))];

impl Preset {
    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::from_json(self.json, &format!("preset {}", self.name))
    }
}

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Scene text shipped with the binary, addressed by its repository path.
pub fn builtin_scene(path: &str) -> Option<&'static str> {
    SCENES.iter().find(|(p, _)| *p == path).map(|(_, s)| *s)
}
