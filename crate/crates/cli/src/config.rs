use crate::error::CliError;
use dect_core::imaging::AffineTransform2D;
use dect_core::models::RepTreeParams;
use dect_core::phantom::{workstation_transform, Insert, Material, PhantomSpec, PhantomVariant};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Slice variants as they appear in config files and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Brain,
    Skull,
    Lung,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        PhantomVariant::from(*self).name()
    }
}

impl From<Variant> for PhantomVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Brain => PhantomVariant::Brain,
            Variant::Skull => PhantomVariant::Skull,
            Variant::Lung => PhantomVariant::Lung,
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "brain" => Ok(Variant::Brain),
            "skull" => Ok(Variant::Skull),
            "lung" => Ok(Variant::Lung),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ols,
    Blend,
    Reptree,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Ols => "ols",
            ModelKind::Blend => "blend",
            ModelKind::Reptree => "reptree",
        }
    }

    /// Headline pass thresholds when the config does not pin its own:
    /// 0.999 for the linear models, 0.98 for the tree.
    pub fn default_threshold(&self) -> f64 {
        match self {
            ModelKind::Ols | ModelKind::Blend => 0.999,
            ModelKind::Reptree => 0.98,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(ModelKind::Ols),
            "blend" => Ok(ModelKind::Blend),
            "reptree" => Ok(ModelKind::Reptree),
            other => Err(format!("unknown model {other:?} (expected ols, blend or reptree)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Monoenergetic,
    Iodine,
}

/// One concrete prediction target: either a virtual energy or the iodine map.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Monoenergetic { kev: f64 },
    Iodine,
}

impl Target {
    /// Stable label used in file names and result tables.
    pub fn label(&self) -> String {
        match self {
            Target::Monoenergetic { kev } => {
                if kev.fract() == 0.0 {
                    format!("mono{kev:.0}")
                } else {
                    format!("mono{kev}")
                }
            }
            Target::Iodine => "iodine".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetConfig {
    pub kind: TargetKind,
    /// Virtual energies in keV, mono-energetic targets only.
    pub kev: Vec<f64>,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            kind: TargetKind::Monoenergetic,
            kev: vec![40.0, 60.0, 80.0, 100.0, 120.0, 140.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub reptree: RepTreeConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Blend,
            reptree: RepTreeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepTreeConfig {
    pub min_instances: usize,
    pub min_variance_proportion: f64,
    pub max_depth: Option<usize>,
    pub num_folds: usize,
    pub seed: u64,
}

impl Default for RepTreeConfig {
    fn default() -> Self {
        let p = RepTreeParams::default();
        Self {
            min_instances: p.min_instances,
            min_variance_proportion: p.min_variance_proportion,
            max_depth: p.max_depth,
            num_folds: p.num_folds,
            seed: p.seed,
        }
    }
}

impl RepTreeConfig {
    pub fn params(&self) -> RepTreeParams {
        RepTreeParams {
            min_instances: self.min_instances,
            min_variance_proportion: self.min_variance_proportion,
            max_depth: self.max_depth,
            num_folds: self.num_folds,
            seed: self.seed,
        }
    }
}

/// Custom insert, replacing the variant's preset layout when any are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsertConfig {
    pub variant: Variant,
    pub center_x: f64,
    pub center_y: f64,
    pub radius_x: f64,
    pub radius_y: f64,
    pub material: String,
    #[serde(default)]
    pub concentration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub width: usize,
    pub height: usize,
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub noise_sigma_hu: f64,
    pub inserts: Vec<InsertConfig>,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        Self {
            width: 512,
            height: 512,
            spacing_x: 0.5,
            spacing_y: 0.5,
            noise_sigma_hu: 5.0,
            inserts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkstationConfig {
    /// Simulate the export/re-register detour for iodine targets.
    pub enabled: bool,
    pub out_width: usize,
    pub out_height: usize,
    pub rotation_deg: f64,
}

impl Default for WorkstationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            out_width: 1200,
            out_height: 1024,
            rotation_deg: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    /// Explicit output-to-export transform (a, b, tx, c, d, ty). Absent
    /// means "inverse of the export transform", the manual-registration
    /// stand-in.
    pub coefficients: Option<[f64; 6]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Fixed dynamic range; absent means max - min of the ground truth.
    pub dynamic_range: Option<f64>,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DicomConfig {
    /// Route the dual-energy slices through DICOM export + re-extraction
    /// instead of handing them to the fit in memory.
    pub roundtrip: bool,
    pub min_payload_bytes: usize,
}

impl Default for DicomConfig {
    fn default() -> Self {
        Self {
            roundtrip: false,
            min_payload_bytes: dect_core::phantom::PRIVATE_PAYLOAD_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdConfig {
    pub r: Option<f64>,
    pub ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScatterConfig {
    pub max_points: usize,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        Self { max_points: 4096 }
    }
}

/// Everything one experiment needs, loadable from TOML; CLI flags override
/// individual fields afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub train_variant: Variant,
    pub test_variants: Vec<Variant>,
    /// Also evaluate on the training slice. Defaults to true for iodine
    /// (the reference tables include the training slice) and false for
    /// mono-energetic targets.
    pub eval_on_train: Option<bool>,
    pub target: TargetConfig,
    pub model: ModelConfig,
    pub phantom: PhantomConfig,
    pub workstation: WorkstationConfig,
    pub registration: RegistrationConfig,
    pub ssim: SsimConfig,
    pub dicom: DicomConfig,
    pub thresholds: ThresholdConfig,
    pub scatter: ScatterConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            train_variant: Variant::Brain,
            test_variants: vec![Variant::Skull, Variant::Lung],
            eval_on_train: None,
            target: TargetConfig::default(),
            model: ModelConfig::default(),
            phantom: PhantomConfig::default(),
            workstation: WorkstationConfig::default(),
            registration: RegistrationConfig::default(),
            ssim: SsimConfig::default(),
            dicom: DicomConfig::default(),
            thresholds: ThresholdConfig::default(),
            scatter: ScatterConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.test_variants.contains(&self.train_variant) {
            return Err(CliError::Usage(format!(
                "train variant {} must not appear in test variants",
                self.train_variant.name()
            )));
        }
        if self.test_variants.is_empty() && self.eval_on_train == Some(false) {
            return Err(CliError::Usage("nothing to evaluate on".into()));
        }
        if self.target.kind == TargetKind::Monoenergetic {
            if self.target.kev.is_empty() {
                return Err(CliError::Usage("mono-energetic target needs a keV list".into()));
            }
            for &kev in &self.target.kev {
                if !(40.0..=140.0).contains(&kev) {
                    return Err(CliError::Usage(format!(
                        "keV {kev} outside the supported [40, 140] range"
                    )));
                }
            }
        }
        if self.phantom.width < 64 || self.phantom.height < 64 {
            return Err(CliError::Usage(format!(
                "phantom {}x{} is too small; inserts need at least 64x64",
                self.phantom.width, self.phantom.height
            )));
        }
        if let Some(c) = self.registration.coefficients {
            AffineTransform2D::new(c[0], c[1], c[2], c[3], c[4], c[5])
                .map_err(|e| CliError::Usage(format!("bad registration transform: {e}")))?;
        }
        for insert in &self.phantom.inserts {
            insert
                .material
                .parse::<Material>()
                .map_err(CliError::Usage)?;
        }
        Ok(())
    }

    /// The targets this experiment fits and evaluates, in order.
    pub fn targets(&self) -> Vec<Target> {
        match self.target.kind {
            TargetKind::Monoenergetic => self
                .target
                .kev
                .iter()
                .map(|&kev| Target::Monoenergetic { kev })
                .collect(),
            TargetKind::Iodine => vec![Target::Iodine],
        }
    }

    /// Slices that get generated: train, tests, and eval extras, deduplicated.
    pub fn all_variants(&self) -> Vec<Variant> {
        let mut out = vec![self.train_variant];
        for &v in &self.test_variants {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    /// Slices evaluation reports on.
    pub fn eval_variants(&self) -> Vec<Variant> {
        let include_train = self
            .eval_on_train
            .unwrap_or(self.target.kind == TargetKind::Iodine);
        let mut out = Vec::new();
        if include_train {
            out.push(self.train_variant);
        }
        out.extend(self.test_variants.iter().copied());
        out
    }

    /// Deterministic per-variant seed so the three slices draw independent
    /// noise but the whole experiment reproduces from one seed.
    pub fn variant_seed(&self, variant: Variant) -> u64 {
        let offset = match variant {
            Variant::Brain => 0,
            Variant::Skull => 1,
            Variant::Lung => 2,
        };
        self.seed.wrapping_mul(3).wrapping_add(offset)
    }

    pub fn phantom_spec(&self, variant: Variant) -> PhantomSpec {
        let mut spec = PhantomSpec::for_variant_sized(
            variant.into(),
            self.phantom.width,
            self.phantom.height,
            self.variant_seed(variant),
        );
        spec.spacing_x = self.phantom.spacing_x;
        spec.spacing_y = self.phantom.spacing_y;
        spec.noise_sigma_hu = self.phantom.noise_sigma_hu;

        let custom: Vec<Insert> = self
            .phantom
            .inserts
            .iter()
            .filter(|i| i.variant == variant)
            .map(|i| Insert {
                center_x: i.center_x,
                center_y: i.center_y,
                radius_x: i.radius_x,
                radius_y: i.radius_y,
                material: i.material.parse().expect("validated"),
                concentration: i.concentration,
            })
            .collect();
        if !custom.is_empty() {
            spec.inserts = custom;
        }
        spec
    }

    /// The transform the simulated workstation applies on export.
    pub fn export_transform(&self) -> AffineTransform2D {
        workstation_transform(
            self.phantom.width,
            self.phantom.height,
            self.workstation.out_width,
            self.workstation.out_height,
            self.workstation.rotation_deg,
        )
    }

    /// The registration resample used to pull exported maps back onto the
    /// acquisition grid.
    pub fn registration_transform(&self) -> Result<AffineTransform2D, CliError> {
        match self.registration.coefficients {
            Some(c) => AffineTransform2D::new(c[0], c[1], c[2], c[3], c[4], c[5])
                .map_err(|e| CliError::Usage(format!("bad registration transform: {e}"))),
            None => self
                .export_transform()
                .invert()
                .map_err(|e| CliError::stage("registration", e)),
        }
    }

    pub fn threshold_r(&self) -> f64 {
        self.thresholds.r.unwrap_or(self.model.kind.default_threshold())
    }

    pub fn threshold_ssim(&self) -> f64 {
        self.thresholds
            .ssim
            .unwrap_or(self.model.kind.default_threshold())
    }

    /// Whether the iodine path goes through the workstation export.
    pub fn uses_workstation(&self) -> bool {
        self.target.kind == TargetKind::Iodine && self.workstation.enabled
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_has_six_energies() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.targets().len(), 6);
        assert_eq!(cfg.eval_variants().len(), 2); // mono: tests only
        assert_eq!(cfg.all_variants().len(), 3);
    }

    #[test]
    fn iodine_evaluates_on_train_by_default() {
        let mut cfg = ExperimentConfig::default();
        cfg.target.kind = TargetKind::Iodine;
        assert_eq!(cfg.eval_variants().len(), 3);
        assert_eq!(cfg.targets(), vec![Target::Iodine]);
    }

    #[test]
    fn train_in_test_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.test_variants = vec![Variant::Brain, Variant::Lung];
        assert!(matches!(cfg.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn kev_outside_range_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.target.kev = vec![60.0, 150.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            r#"
            seed = 11
            [target]
            kind = "iodine"
            [model]
            kind = "reptree"
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 11);
        assert_eq!(cfg.model.kind, ModelKind::Reptree);
        assert_eq!(cfg.threshold_r(), 0.98);
        assert!(cfg.uses_workstation());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("bogus_field = 1").unwrap_err();
        assert!(err.to_string().contains("bogus_field"));
    }

    #[test]
    fn custom_inserts_replace_variant_presets() {
        let mut cfg = ExperimentConfig::default();
        cfg.phantom.inserts.push(InsertConfig {
            variant: Variant::Brain,
            center_x: 100.0,
            center_y: 100.0,
            radius_x: 20.0,
            radius_y: 20.0,
            material: "water".into(),
            concentration: 0.0,
        });
        let brain = cfg.phantom_spec(Variant::Brain);
        assert_eq!(brain.inserts.len(), 1);
        let skull = cfg.phantom_spec(Variant::Skull);
        assert!(skull.inserts.len() > 1, "presets remain for other variants");
    }

    #[test]
    fn mono_target_labels() {
        assert_eq!(Target::Monoenergetic { kev: 60.0 }.label(), "mono60");
        assert_eq!(Target::Monoenergetic { kev: 62.5 }.label(), "mono62.5");
        assert_eq!(Target::Iodine.label(), "iodine");
    }

    #[test]
    fn registration_defaults_to_export_inverse() {
        let cfg = ExperimentConfig::default();
        let reg = cfg.registration_transform().unwrap();
        let export = cfg.export_transform();
        let composed = reg.compose(&export);
        // Export then register lands every point back where it started.
        let (x, y) = composed.apply(100.0, 200.0);
        assert!((x - 100.0).abs() < 1e-9 && (y - 200.0).abs() < 1e-9);
    }
}
