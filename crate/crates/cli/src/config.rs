use std::path::Path;

use glfock::fock_space::{QuadratureScheme, WeightForm, WeightKernel};
use glfock::gl_core::PhiDescriptor;
use glfock::weierstrass::GVariant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    #[serde(default = "Truncation::default_series")]
    pub series_n: usize,
    #[serde(default = "Truncation::default_lattice")]
    pub lattice_m: usize,
    #[serde(default = "Truncation::default_basis")]
    pub basis_n: usize,
}

impl Truncation {
    fn default_series() -> usize {
        80
    }
    fn default_lattice() -> usize {
        10
    }
    fn default_basis() -> usize {
        12
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self { series_n: 80, lattice_m: 10, basis_n: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phi: PhiDescriptor,
    /// Defaults to the form registered for the family.
    #[serde(default)]
    pub weight: Option<WeightForm>,
    #[serde(default)]
    pub quadrature: QuadratureScheme,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default = "RunConfig::default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub g_variant: GVariant,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    fn default_seed() -> u64 {
        42
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let t = &self.truncation;
        if t.series_n == 0 || t.lattice_m == 0 || t.basis_n == 0 {
            return Err("truncation: series_n, lattice_m and basis_n must be positive".into());
        }
        Ok(())
    }

    pub fn weight_kernel(&self) -> Result<WeightKernel, glfock::Error> {
        match self.weight {
            Some(form) => Ok(WeightKernel::new(self.phi.clone(), form)),
            None => WeightKernel::registered(&self.phi),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            phi: PhiDescriptor::exponential(),
            weight: None,
            quadrature: QuadratureScheme::default(),
            truncation: Truncation::default(),
            seed: 42,
            g_variant: GVariant::Printed,
            output: OutputSpec::default(),
        }
    }
}
