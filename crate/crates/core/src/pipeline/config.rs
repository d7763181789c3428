use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::forest::{ForestConfig, GridScore, ParamGrid};
use crate::imaging::DetectionParams;
use crate::inference::{McmcConfig, DEFAULT_PRIOR_PRECISION};

pub const SCHEMA_VERSION: u32 = 1;

/// Input files. Unset paths default to the synth output under the output
/// directory, so `synth` followed by the later stages needs no config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputPaths {
    pub participants: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    /// Base for relative `image_path` values; defaults to the posts file's directory.
    pub images_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    pub cascade: Option<PathBuf>,
    pub detection: DetectionParams,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig { cascade: None, detection: DetectionParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Diagonal prior precision on every coefficient; the prior mean is zero.
    pub prior_precision: f64,
    pub ppc_replicates: usize,
    /// Any parameter with R-hat above this fails the fit.
    pub max_rhat: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { prior_precision: DEFAULT_PRIOR_PRECISION, ppc_replicates: 500, max_rhat: 1.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridChoice {
    Full,
    Reduced,
    /// Skip the search and use `forest.fixed`.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub grid: GridChoice,
    /// Replaces the named grid when set.
    pub custom_grid: Option<ParamGrid>,
    pub fixed: ForestConfig,
    pub folds: usize,
    pub runs: usize,
    pub train_fraction: f64,
    pub score: GridScore,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            grid: GridChoice::Reduced,
            custom_grid: None,
            fixed: ForestConfig { n_estimators: 120, ..ForestConfig::default() },
            folds: 5,
            runs: 5,
            train_fraction: 0.7,
            score: GridScore::F1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// Preset name (`replica`, `desk`, `planted`, `null`) or a path to a JSON spec.
    pub spec: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { spec: "replica".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgreementConfig {
    pub folds: usize,
}

impl Default for AgreementConfig {
    fn default() -> Self {
        AgreementConfig { folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub inputs: InputPaths,
    pub extract: ExtractConfig,
    pub model: ModelConfig,
    /// The `seed` field is ignored; chains derive their seeds from the top-level seed.
    pub mcmc: McmcConfig,
    pub forest: ClassifyConfig,
    pub synth: SynthConfig,
    pub agreement: AgreementConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            out_dir: PathBuf::from("out"),
            inputs: InputPaths::default(),
            extract: ExtractConfig::default(),
            model: ModelConfig::default(),
            mcmc: McmcConfig::desk(0),
            forest: ClassifyConfig::default(),
            synth: SynthConfig::default(),
            agreement: AgreementConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str, source: &str) -> Result<Self, PipelineError> {
        let de = toml::Deserializer::parse(text).map_err(|e| PipelineError::Config(format!("{source}: {e}")))?;
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| PipelineError::Config(format!("{source}: {}: {}", e.path(), e.inner())))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(PipelineError::Config(format!(
                "{source}: schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_relative(base);
        Ok(cfg)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        if self.out_dir.is_relative() {
            self.out_dir = base.join(&self.out_dir);
        }
        rebase(base, &mut self.inputs.participants);
        rebase(base, &mut self.inputs.posts);
        rebase(base, &mut self.inputs.ratings);
        rebase(base, &mut self.inputs.images_dir);
        rebase(base, &mut self.extract.cascade);
        if !crate::cohort::synth::CohortSpec::preset(&self.synth.spec).is_some() {
            let p = Path::new(&self.synth.spec);
            if p.is_relative() {
                self.synth.spec = base.join(p).display().to_string();
            }
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.mcmc.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.extract.detection.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        let f = &self.forest;
        if f.folds < 2 || f.runs == 0 || !(f.train_fraction > 0.0 && f.train_fraction < 1.0) {
            return Err(PipelineError::Config("forest: need folds >= 2, runs >= 1, 0 < train_fraction < 1".into()));
        }
        f.fixed.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.model.prior_precision > 0.0) || self.model.ppc_replicates == 0 {
            return Err(PipelineError::Config("model: prior_precision must be positive and ppc_replicates >= 1".into()));
        }
        if self.agreement.folds == 0 {
            return Err(PipelineError::Config("agreement.folds must be at least 1".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical TOML form of the effective configuration.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn grid(&self) -> Option<ParamGrid> {
        if let Some(g) = &self.forest.custom_grid {
            return Some(g.clone());
        }
        match self.forest.grid {
            GridChoice::Full => Some(ParamGrid::full()),
            GridChoice::Reduced => Some(ParamGrid::reduced()),
            GridChoice::Fixed => None,
        }
    }

    pub fn cohort_dir(&self) -> PathBuf {
        self.out_dir.join("cohort")
    }

    pub fn participants_path(&self) -> PathBuf {
        self.inputs.participants.clone().unwrap_or_else(|| self.cohort_dir().join("participants.jsonl"))
    }

    pub fn posts_path(&self) -> PathBuf {
        self.inputs.posts.clone().unwrap_or_else(|| self.cohort_dir().join("posts.jsonl"))
    }

    /// Ratings are optional: an unset path falls back to the synth output only if it exists.
    pub fn ratings_path(&self) -> Option<PathBuf> {
        match &self.inputs.ratings {
            Some(p) => Some(p.clone()),
            None => Some(self.cohort_dir().join("ratings.jsonl")).filter(|p| p.exists()),
        }
    }

    /// Extracted features when `extract` has run, otherwise the raw posts file.
    pub fn featured_posts_path(&self) -> PathBuf {
        let extracted = self.out_dir.join("features").join("posts.jsonl");
        if extracted.exists() {
            extracted
        } else {
            self.posts_path()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_and_hash_is_stable() {
        let c = PipelineConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back = PipelineConfig::from_toml(&text, "t").unwrap();
        assert_eq!(back, c);
        assert_eq!(c.hash(), back.hash());
        assert_eq!(c.hash().len(), 64);
        let other = PipelineConfig { seed: 1, ..c.clone() };
        assert_ne!(other.hash(), c.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let e = PipelineConfig::from_toml("seed = 1\nbogus = 2\n", "c.toml").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        assert!(PipelineConfig::from_toml("schema_version = 9\n", "c.toml").is_err());
        let e = PipelineConfig::from_toml("[mcmc]\nchains = \"two\"\n", "c.toml").unwrap_err();
        assert!(e.to_string().contains("mcmc.chains"), "{e}");
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = PipelineConfig::from_toml(
            "out_dir = \"run\"\n[inputs]\nposts = \"data/posts.jsonl\"\n[extract]\ncascade = \"/abs/c.json\"\n",
            "c",
        )
        .unwrap();
        c.resolve_relative(Path::new("/cfg"));
        assert_eq!(c.out_dir, PathBuf::from("/cfg/run"));
        assert_eq!(c.posts_path(), PathBuf::from("/cfg/data/posts.jsonl"));
        assert_eq!(c.extract.cascade, Some(PathBuf::from("/abs/c.json")));
        assert_eq!(c.participants_path(), PathBuf::from("/cfg/run/cohort/participants.jsonl"));
        assert_eq!(c.synth.spec, "replica");
    }
}
