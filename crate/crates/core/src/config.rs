//! Flat solver configuration read from `key = value` files.
//!
//! Every key is optional and falls back to its default; unknown keys are
//! rejected. Overrides given as `key=value` strings are merged on top of the
//! file before validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{CoarseTestSpace, HierarchyConfig};
use crate::krylov::PcgOptions;
use crate::prolongation::DplsConfig;
use crate::smoother::SmootherConfig;
use crate::test_space::SrqcgConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// aFSAI adaptive steps.
    pub k_g: usize,
    /// aFSAI entries added per step.
    pub rho_g: usize,
    /// aFSAI exit tolerance.
    pub eps_g: f64,
    /// Test-space width.
    pub n_tv: usize,
    /// SRQCG iterations.
    pub n_rq: usize,
    /// Connections kept per row by the strength filter.
    pub theta: usize,
    /// Interpolatory coarse nodes per fine node.
    pub n_max: usize,
    /// Conditioning cap in the prolongation QR.
    pub kappa_p: f64,
    pub d_p: usize,
    pub eps_p: f64,
    pub omega_bar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_bar: Option<f64>,
    pub nu1: usize,
    pub nu2: usize,
    pub max_levels: usize,
    pub min_coarse_size: usize,
    pub rel_tol: f64,
    pub max_it: usize,
    pub seed: u64,
    pub coarse_test_space: CoarseTestSpace,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let h = HierarchyConfig::default();
        let pcg = PcgOptions::default();
        Self {
            k_g: h.smoother.k0,
            rho_g: h.smoother.rho0,
            eps_g: h.smoother.eps0,
            n_tv: h.srqcg.n_tv,
            n_rq: h.srqcg.k_max,
            theta: h.theta,
            n_max: h.dpls.n_max,
            kappa_p: h.dpls.kappa_p,
            d_p: h.dpls.d_p,
            eps_p: h.dpls.eps_p,
            omega_bar: h.smoother.omega_bar,
            rho_bar: h.smoother.rho_bar,
            nu1: h.nu1,
            nu2: h.nu2,
            max_levels: h.max_levels,
            min_coarse_size: h.min_coarse_size,
            rel_tol: pcg.rel_tol,
            max_it: pcg.max_it,
            seed: h.srqcg.seed,
            coarse_test_space: h.coarse_test_space,
        }
    }
}

/// Parses a single override value as TOML, treating anything unparsable as
/// a bare string.
fn override_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl SolverConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides in order.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            table.insert(k.trim().to_string(), override_value(v.trim()));
        }
        let cfg: SolverConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_with_overrides(&text, overrides)
    }

    pub fn to_text(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tv < 1 {
            return Err(Error::Config("n_tv must be at least 1".into()));
        }
        if i64::try_from(self.seed).is_err() {
            return Err(Error::Config(format!("seed must not exceed {}", i64::MAX)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config("rel_tol must be positive".into()));
        }
        self.hierarchy().validate()
    }

    pub fn hierarchy(&self) -> HierarchyConfig {
        HierarchyConfig {
            max_levels: self.max_levels,
            min_coarse_size: self.min_coarse_size,
            nu1: self.nu1,
            nu2: self.nu2,
            theta: self.theta,
            smoother: SmootherConfig {
                k0: self.k_g,
                rho0: self.rho_g,
                eps0: self.eps_g,
                rhoi: self.rho_g,
                epsi: self.eps_g,
                omega_bar: self.omega_bar,
                rho_bar: self.rho_bar,
                seed: self.seed,
                ..SmootherConfig::default()
            },
            srqcg: SrqcgConfig {
                n_tv: self.n_tv,
                k_max: self.n_rq,
                seed: self.seed,
                ..SrqcgConfig::default()
            },
            dpls: DplsConfig {
                d_p: self.d_p,
                eps_p: self.eps_p,
                kappa_p: self.kappa_p,
                n_max: self.n_max,
            },
            coarse_test_space: self.coarse_test_space,
        }
    }

    pub fn pcg(&self) -> PcgOptions {
        PcgOptions {
            rel_tol: self.rel_tol,
            max_it: self.max_it,
        }
    }
}
