//! Run configuration: JSON schema and problem construction.

use anyhow::{anyhow, bail, Context};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use diraction_core::clifford::CliffordModuleJson;
use diraction_core::hamiltonian::TrigTerm;
use diraction_core::{
    CliffordModule, Lattice, ReducedProblem, ReductionOptions, SearchParams, TimeDomain,
    TrigHamiltonian,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Torus,
    Su2,
}

/// Either `{"auto": r}` or an inline module with explicit matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModuleSpec {
    Auto { auto: usize },
    Inline(CliffordModuleJson),
}

/// `"auto"` or an explicit truncation degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truncation {
    Fixed(usize),
    Auto(String),
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto("auto".into())
    }
}

/// Optional overrides of the search defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dedup_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_newton_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneracy_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber_seed_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escalate: Option<bool>,
}

/// One experiment as data; see the repository README for examples.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainTag,
    /// Time dimension (torus only; SU(2) fixes r = 3).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    pub module: ModuleSpec,
    #[serde(default)]
    pub hamiltonian: Vec<TrigTerm>,
    /// Target lattice basis rows; identity when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub rng_seed: u64,
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text).context("parsing config JSON")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match self.domain {
            DomainTag::Torus => {
                let r = self.r.ok_or_else(|| anyhow!("torus domain requires \"r\""))?;
                if r == 0 {
                    bail!("time dimension r must be positive");
                }
            }
            DomainTag::Su2 => {
                if let Some(r) = self.r {
                    if r != 3 {
                        bail!("su2 domain fixes r = 3, got {r}");
                    }
                }
            }
        }
        if let Truncation::Auto(tag) = &self.truncation {
            if tag != "auto" {
                bail!("truncation must be an integer or \"auto\", got {tag:?}");
            }
        }
        Ok(())
    }

    pub fn time_dim(&self) -> usize {
        match self.domain {
            DomainTag::Torus => self.r.unwrap_or(1),
            DomainTag::Su2 => 3,
        }
    }

    pub fn build_module(&self) -> anyhow::Result<Arc<CliffordModule>> {
        let hyperkahler = self.domain == DomainTag::Su2;
        let module = match &self.module {
            ModuleSpec::Auto { auto } => {
                if *auto != self.time_dim() {
                    bail!(
                        "module rank {} does not match the time dimension {}",
                        auto,
                        self.time_dim()
                    );
                }
                CliffordModule::build(*auto, hyperkahler)?
            }
            ModuleSpec::Inline(json) => {
                let module = CliffordModule::try_from(json.clone())?;
                if module.rank() != self.time_dim() {
                    bail!(
                        "module rank {} does not match the time dimension {}",
                        module.rank(),
                        self.time_dim()
                    );
                }
                module
            }
        };
        if hyperkahler && !module.is_hyperkahler() {
            bail!("su2 domain requires a hyperkähler module (r = 3, J1*J2 = J3)");
        }
        Ok(Arc::new(module))
    }

    pub fn build_lattice(&self, dim: usize) -> anyhow::Result<Lattice> {
        match &self.lattice {
            None => Ok(Lattice::identity(dim)),
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|row| row.len() != dim) {
                    bail!("lattice basis must be {dim}x{dim}");
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok(Lattice::new(DMatrix::from_row_slice(dim, dim, &flat))?)
            }
        }
    }

    pub fn build_hamiltonian(
        &self,
        module: &CliffordModule,
        lattice: &Lattice,
    ) -> anyhow::Result<TrigHamiltonian> {
        let domain = match self.domain {
            DomainTag::Torus => TimeDomain::Torus(self.time_dim()),
            DomainTag::Su2 => TimeDomain::Su2,
        };
        Ok(TrigHamiltonian::with_lattice(
            module.dim(),
            domain,
            self.hamiltonian.clone(),
            lattice,
        )?)
    }

    /// Assemble the reduced problem (auto truncation uses ρ = 0.5).
    pub fn build_problem(&self) -> anyhow::Result<ReducedProblem> {
        let module = self.build_module()?;
        let lattice = self.build_lattice(module.dim())?;
        let hamiltonian = self.build_hamiltonian(&module, &lattice)?;
        let truncation = match self.truncation {
            Truncation::Fixed(n) => Some(n),
            Truncation::Auto(_) => None,
        };
        Ok(ReducedProblem::new(
            module,
            hamiltonian,
            lattice,
            truncation,
            ReductionOptions::default(),
        )?)
    }

    pub fn search_params(&self, seed_override: Option<u64>, threads: usize) -> SearchParams {
        let mut params = SearchParams {
            rng_seed: seed_override.unwrap_or(self.rng_seed),
            threads,
            ..Default::default()
        };
        let s = &self.search;
        if let Some(v) = s.seed_count {
            params.seed_count = v;
        }
        if let Some(v) = s.grad_tol {
            params.grad_tol = v;
        }
        if let Some(v) = s.dedup_radius {
            params.dedup_radius = v;
        }
        if let Some(v) = s.max_newton_steps {
            params.max_newton_steps = v;
        }
        if let Some(v) = s.residual_tol {
            params.residual_tol = v;
        }
        if let Some(v) = s.degeneracy_tol {
            params.degeneracy_tol = v;
        }
        if let Some(v) = s.fiber_seed_scale {
            params.fiber_seed_scale = v;
        }
        if let Some(v) = s.escalate {
            params.escalate = v;
        }
        params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t2_config_json() -> &'static str {
        r#"{
            "domain": "torus",
            "r": 1,
            "module": {"auto": 1},
            "hamiltonian": [
                {"time": {"type": "const"}, "nu": [1, 0], "amp": 0.05},
                {"time": {"type": "const"}, "nu": [0, 1], "amp": 0.05}
            ],
            "truncation": "auto",
            "rng_seed": 42
        }"#
    }

    #[test]
    fn parse_serialize_parse_is_identity() {
        let config: RunConfig = serde_json::from_str(t2_config_json()).unwrap();
        config.validate().unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let reparsed: RunConfig = serde_json::from_str(&text).unwrap();
        let text2 = serde_json::to_string_pretty(&reparsed).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn builds_the_t2_problem() {
        let config: RunConfig = serde_json::from_str(t2_config_json()).unwrap();
        let problem = config.build_problem().unwrap();
        assert_eq!(problem.n_trunc(), 2);
        assert_eq!(problem.w_dim(), 2);
    }

    #[test]
    fn su2_requires_hyperkahler_module() {
        let json = r#"{
            "domain": "su2",
            "module": {"auto": 3},
            "hamiltonian": []
        }"#;
        let config: RunConfig = serde_json::from_str(json).unwrap();
        let problem = config.build_problem().unwrap();
        assert!(problem.module().is_hyperkahler());

        // Mis-declared rank is rejected.
        let bad = r#"{"domain": "su2", "r": 2, "module": {"auto": 3}}"#;
        let config: RunConfig = serde_json::from_str(bad).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = r#"{"domain": "torus", "r": 1, "module": {"auto": 1}, "typo": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }
}
