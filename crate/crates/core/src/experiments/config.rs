//! Experiment configuration, stored as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfa::{default_exclusions, LFA_SAMPLES};
use crate::mgrit::{Cycle, MgritConfig};
use crate::stepping::{cfl_limit, ButcherTableau, Family};

/// Coarse-grid operator used on levels below the finest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseKind {
    /// Semi-Lagrangian step with the implicit truncation-error correction.
    Modified,
    /// The fine method-of-lines scheme with step `m dt` (implicit only).
    Rediscretized,
    /// Semi-Lagrangian step without correction.
    PlainSl,
    /// `Phi^m`, applied step by step.
    Ideal,
}

/// How the correction systems of the modified operator are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPolicy {
    /// Direct for implicit fine schemes and two-level explicit runs, GMRES
    /// for multilevel explicit runs.
    Auto,
    Direct,
    Gmres,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    pub family: Family,
    pub p: usize,
    /// Absolute CFL number (implicit and SL schemes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// CFL number as a fraction of the stability limit (explicit schemes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseSection {
    pub kind: CoarseKind,
    pub solver: SolverPolicy,
    pub gmres_tol: f64,
    /// Defaults to 10 for `p = 1` and 20 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gmres_max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgritSection {
    /// Coarsening factors to run; each experiment uses one factor on every level.
    pub m: Vec<usize>,
    pub nu: usize,
    pub cycle: Cycle,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LfaSection {
    pub samples: usize,
    /// Defaults to 2 for `p <= 2` and 10 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusions: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_x: usize,
    pub n_t: usize,
    /// Grids for iteration tables, as `[n_x, n_t]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<[usize; 2]>,
}

/// CFL samples for sweeps, in the same units as the discretization's CFL
/// (fractions of the limit for explicit schemes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub measure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    /// Worker threads; 0 uses the available parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub discretization: DiscretizationSection,
    pub coarse: CoarseSection,
    pub mgrit: MgritSection,
    pub lfa: LfaSection,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    /// Two-level FCF for SDIRK3+U3 at `c = 5` with the modified coarse operator.
    fn default() -> Self {
        Self {
            discretization: DiscretizationSection {
                family: Family::Sdirk,
                p: 3,
                c: Some(5.0),
                c_fraction: None,
            },
            coarse: CoarseSection {
                kind: CoarseKind::Modified,
                solver: SolverPolicy::Auto,
                gmres_tol: 1e-2,
                gmres_max_iters: None,
            },
            mgrit: MgritSection {
                m: vec![2, 4, 8, 16],
                nu: 1,
                cycle: Cycle::TwoLevel,
                max_iters: 30,
                rel_tol: 1e-10,
                seed: 0,
            },
            lfa: LfaSection {
                samples: LFA_SAMPLES,
                exclusions: None,
            },
            grid: GridSection {
                n_x: 1024,
                n_t: 4096,
                table: Vec::new(),
            },
            sweep: SweepSection {
                start: 0.0,
                stop: 8.0,
                points: 512,
                measure: false,
            },
            output: OutputSection { path: None, threads: 0 },
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let config: Self = toml::from_str(s).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.discretization;
        if !(1..=5).contains(&d.p) {
            return Err(Error::config(format!("order p = {} outside 1..=5", d.p)));
        }
        match (d.family, d.c, d.c_fraction) {
            (_, Some(_), Some(_)) => {
                return Err(Error::config("give either c or c_fraction, not both"));
            }
            (Family::Erk, None, None) | (Family::Sdirk | Family::SemiLagrangian, None, _) => {
                return Err(Error::config(match d.family {
                    Family::Erk => "explicit schemes need c or c_fraction",
                    _ => "implicit and semi-Lagrangian schemes need an absolute c",
                }));
            }
            _ => {}
        }
        if let Some(c) = d.c {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::config(format!("c = {c} must be positive")));
            }
        }
        if let Some(f) = d.c_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::config(format!("c_fraction = {f} must be positive")));
            }
        }
        if d.family == Family::SemiLagrangian {
            return Err(Error::config(
                "semi-Lagrangian fine grids are not part of the experiment suite",
            ));
        }
        if self.coarse.kind == CoarseKind::Rediscretized && d.family == Family::Erk {
            return Err(Error::config(
                "rediscretizing an explicit scheme with step m dt violates its CFL limit \
                 and gives an unstable coarse operator; use the modified operator",
            ));
        }
        if !(self.coarse.gmres_tol > 0.0 && self.coarse.gmres_tol < 1.0) {
            return Err(Error::config("gmres_tol must lie in (0, 1)"));
        }
        if self.coarse.gmres_max_iters == Some(0) {
            return Err(Error::config("gmres_max_iters must be positive"));
        }
        if self.mgrit.m.is_empty() || self.mgrit.m.iter().any(|&m| m < 2) {
            return Err(Error::config("coarsening factors must be at least 2"));
        }
        if self.mgrit.max_iters == 0 {
            return Err(Error::config("max_iters must be at least 1"));
        }
        if !(self.mgrit.rel_tol > 0.0 && self.mgrit.rel_tol < 1.0) {
            return Err(Error::config("rel_tol must lie in (0, 1)"));
        }
        if self.lfa.samples < 4 || self.lfa.samples % 2 != 0 {
            return Err(Error::config("lfa samples must be even and at least 4"));
        }
        if self.lfa.exclusions.is_some_and(|e| e > 10) {
            return Err(Error::config("at most 10 frequencies may be excluded"));
        }
        if self.grid.n_x < 8 || self.grid.n_t < 2 {
            return Err(Error::config("grid too small"));
        }
        if self.sweep.points == 0 || !(self.sweep.start <= self.sweep.stop) || self.sweep.stop <= 0.0 {
            return Err(Error::config("sweep needs points >= 1 and 0 < stop, start <= stop"));
        }
        Ok(())
    }

    pub fn exclusions(&self) -> usize {
        self.lfa
            .exclusions
            .unwrap_or_else(|| default_exclusions(self.discretization.p))
    }

    pub fn gmres_max_iters(&self) -> usize {
        self.coarse
            .gmres_max_iters
            .unwrap_or(if self.discretization.p == 1 { 10 } else { 20 })
    }

    /// The explicit stability limit, or 1 for other families.
    pub fn cfl_scale(&self) -> Result<f64> {
        match self.discretization.family {
            Family::Erk => cfl_limit(self.discretization.p, &ButcherTableau::erk(self.discretization.p)?),
            _ => Ok(1.0),
        }
    }

    /// Absolute fine-grid CFL number.
    pub fn resolve_c(&self) -> Result<f64> {
        let d = &self.discretization;
        match (d.c, d.c_fraction) {
            (Some(c), _) => Ok(c),
            (None, Some(f)) => Ok(f * self.cfl_scale()?),
            (None, None) => Err(Error::config("no CFL number given")),
        }
    }

    /// Sweep samples in configuration units. A start of 0 is skipped, so a
    /// sweep over `[0, b]` with `n` points samples `b/n, 2b/n, ..., b`.
    pub fn sweep_values(&self) -> Vec<f64> {
        let s = &self.sweep;
        if s.points == 1 {
            return vec![s.stop];
        }
        if s.start <= 0.0 {
            return (1..=s.points)
                .map(|i| s.stop * i as f64 / s.points as f64)
                .collect();
        }
        (0..s.points)
            .map(|i| s.start + (s.stop - s.start) * i as f64 / (s.points - 1) as f64)
            .collect()
    }

    pub fn mgrit_config(&self, cycle: Cycle) -> MgritConfig {
        MgritConfig {
            nu: self.mgrit.nu,
            cycle,
            rel_tol: self.mgrit.rel_tol,
            max_iters: self.mgrit.max_iters,
            seed: self.mgrit.seed,
            threads: self.output.threads,
        }
    }
}
