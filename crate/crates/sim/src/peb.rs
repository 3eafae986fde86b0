use serde::{Deserialize, Serialize};
use spmc_core::{bearing, crlb_doa, peb, position_fim, AnchorSet, ArrayGeometry, Bound, Concentration, Error, Position};

use crate::calibration::KappaTable;
use crate::config::ExperimentConfig;
use crate::error::{Result, SimError};
use crate::output::{Cell, SweepResult};

/// Anchor layout, bearing noise and evaluation grid for a PEB map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub anchors: Vec<[f64; 2]>,
    /// Anchor index per bearing measurement; each anchor once if omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_position: Option<[f64; 2]>,
    pub sigma_phi: SigmaPhi,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub array: Option<SceneArray>,
    pub grid: GridSpec,
}

/// Bearing std in radians, or `"from_crlb"` to derive it from the array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaPhi {
    Radians(f64),
    Rule(SigmaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    FromCrlb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneArray {
    pub num_rx: usize,
    #[serde(default = "half")]
    pub spacing_over_lambda: f64,
    /// Broadside direction. Omitted means the array faces each anchor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Calibrated to a concentration when `kappa` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    fn axis(lim: [f64; 2], n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lim[0]];
        }
        (0..n).map(|i| lim[0] + (lim[1] - lim[0]) * i as f64 / (n - 1) as f64).collect()
    }
}

impl Scene {
    /// Parse errors carry the line and column; validation errors name fields.
    pub fn from_json(text: &str, what: &str) -> Result<Self> {
        let s: Scene =
            serde_json::from_str(text).map_err(|source| SimError::Parse { what: what.to_string(), source })?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.anchors.is_empty() {
            issues.push("anchors: at least one anchor required".to_string());
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if !a.iter().all(|v| v.is_finite()) {
                issues.push(format!("anchors[{i}]: coordinates must be finite"));
            }
        }
        if let Some(s) = &self.schedule {
            if s.is_empty() {
                issues.push("schedule: must be nonempty".to_string());
            }
            for (i, &a) in s.iter().enumerate() {
                if a >= self.anchors.len() {
                    issues.push(format!("schedule[{i}]: anchor {a} does not exist"));
                }
            }
        }
        match (self.sigma_phi, &self.array) {
            (SigmaPhi::Radians(s), _) if !(s > 0.0 && s.is_finite()) => {
                issues.push(format!("sigma_phi: must be > 0, got {s}"));
            }
            (SigmaPhi::Rule(SigmaRule::FromCrlb), None) => {
                issues.push("array: required when sigma_phi is \"from_crlb\"".to_string());
            }
            (SigmaPhi::Rule(SigmaRule::FromCrlb), Some(a)) => {
                if a.num_rx < 2 {
                    issues.push(format!("array.num_rx: must be >= 2, got {}", a.num_rx));
                }
                if !(a.spacing_over_lambda > 0.0) {
                    issues.push("array.spacing_over_lambda: must be > 0".to_string());
                }
                match (a.kappa, a.snr_db) {
                    (Some(_), Some(_)) | (None, None) => {
                        issues.push("array: give exactly one of kappa or snr_db".to_string())
                    }
                    (Some(k), None) if !(k >= 0.0) => issues.push(format!("array.kappa: must be >= 0, got {k}")),
                    _ => {}
                }
            }
            _ => {}
        }
        if self.grid.nx < 1 || self.grid.ny < 1 {
            issues.push("grid: nx and ny must be >= 1".to_string());
        }
        for (name, lim) in [("grid.x", self.grid.x), ("grid.y", self.grid.y)] {
            if !(lim[0] <= lim[1]) || !lim.iter().all(|v| v.is_finite()) {
                issues.push(format!("{name}: need finite [min, max] with min <= max"));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(SimError::Scene(issues))
        }
    }

    pub fn anchor_set(&self) -> Result<AnchorSet<f64>> {
        let pos: Vec<Position> = self.anchors.iter().map(|a| Position::new(a[0], a[1])).collect();
        Ok(match &self.schedule {
            Some(s) => AnchorSet::new(pos, s.clone())?,
            None => AnchorSet::each_once(pos)?,
        })
    }
}

/// Bearing variances at a candidate position.
struct Noise {
    fixed: Option<f64>,
    kappas: Vec<Concentration<f64>>,
    geom: Option<ArrayGeometry<f64>>,
    orientation: Option<f64>,
}

impl Noise {
    fn new(scene: &Scene, cfg: &ExperimentConfig) -> Result<Self> {
        match (scene.sigma_phi, &scene.array) {
            (SigmaPhi::Radians(s), _) => Ok(Noise { fixed: Some(s * s), kappas: vec![], geom: None, orientation: None }),
            (SigmaPhi::Rule(SigmaRule::FromCrlb), Some(a)) => {
                let kappa = match a.kappa {
                    Some(k) => Concentration::new(k)?,
                    None => {
                        let snr = a.snr_db.expect("validated");
                        let mut c = cfg.clone();
                        c.geometry.spacing_over_lambda = a.spacing_over_lambda;
                        KappaTable::new(&c)?.kappa(snr)?.kappa
                    }
                };
                Ok(Noise {
                    fixed: None,
                    kappas: vec![kappa; a.num_rx - 1],
                    geom: Some(ArrayGeometry::new(a.num_rx, a.spacing_over_lambda, cfg.geometry.carrier_hz)?),
                    orientation: a.orientation_deg.map(f64::to_radians),
                })
            }
            _ => unreachable!("validated scene"),
        }
    }

    /// The ULA only senses `sin` of the angle off broadside, so arrivals
    /// from behind fold onto the front half-plane.
    fn variance(&self, p: Position, anchor: Position) -> Result<f64> {
        if let Some(v) = self.fixed {
            return Ok(v);
        }
        let phi = match self.orientation {
            None => 0.0,
            Some(o) => (bearing(p, anchor)?.value() - o).sin().asin(),
        };
        match crlb_doa(&self.kappas, self.geom.as_ref().expect("crlb rule"), phi) {
            Ok(r) => Ok(r.var_phi.value()),
            Err(Error::OutOfSector(_)) => Ok(f64::INFINITY),
            Err(e) => Err(e.into()),
        }
    }
}

pub const PEB_COLUMNS: [&str; 4] = ["x", "y", "peb", "peb_stderr"];

/// PEB at a position, `None` when it coincides with an anchor.
pub fn peb_at(scene: &Scene, cfg: &ExperimentConfig, p: Position) -> Result<Option<Bound<f64>>> {
    peb_with(&scene.anchor_set()?, &Noise::new(scene, cfg)?, p)
}

fn peb_with(anchors: &AnchorSet<f64>, noise: &Noise, p: Position) -> Result<Option<Bound<f64>>> {
    let vars = anchors
        .scheduled()
        .map(|a| noise.variance(p, a))
        .collect::<Result<Vec<_>>>();
    let vars = match vars {
        Err(SimError::Core(Error::DegenerateGeometry(_))) => return Ok(None),
        v => v?,
    };
    match position_fim(p, anchors, &vars) {
        Ok(j) => Ok(Some(peb(&j))),
        Err(Error::DegenerateGeometry(_)) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// PEB over the scene grid, rows sorted by `x` then `y`. Analytic values
/// carry a zero standard error; singular points print the `inf` sentinel.
pub fn run_peb_map(cfg: &ExperimentConfig, scene: &Scene) -> Result<SweepResult> {
    cfg.validate()?;
    scene.validate()?;
    let anchors = scene.anchor_set()?;
    let noise = Noise::new(scene, cfg)?;
    let mut out = SweepResult::new(cfg, PEB_COLUMNS.to_vec());
    out.note("scene_sha256", scene_hash(scene));
    if let Some(t) = scene.true_position {
        if let Some(b) = peb_with(&anchors, &noise, Position::new(t[0], t[1]))? {
            out.note("peb_at_true_position", format!("{:.16e}", b.value()));
        }
    }
    let mut skipped = 0;
    for x in GridSpec::axis(scene.grid.x, scene.grid.nx) {
        for y in GridSpec::axis(scene.grid.y, scene.grid.ny) {
            match peb_with(&anchors, &noise, Position::new(x, y))? {
                Some(Bound::Finite(v)) => out.push(vec![x.into(), y.into(), v.into(), 0.0.into()]),
                Some(Bound::Infinite) => out.push(vec![x.into(), y.into(), f64::INFINITY.into(), Cell::from("")]),
                None => skipped += 1,
            }
        }
    }
    if skipped > 0 {
        out.note("skipped_at_anchor", skipped);
    }
    Ok(out)
}

fn scene_hash(scene: &Scene) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(serde_json::to_vec(scene).expect("scene serializes")))
}
