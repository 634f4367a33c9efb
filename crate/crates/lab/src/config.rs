use serde::{Deserialize, Serialize};
use simplex_core::statistics::SourceDistribution;

use crate::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Clt,
    BerryEsseenSweep,
    Gumbel,
    Ldp,
    Mdp,
    LpLdp,
    LpGumbel,
    EquivalenceDecay,
    GeneralClt,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Clt => "clt",
            ExperimentKind::BerryEsseenSweep => "berry_esseen_sweep",
            ExperimentKind::Gumbel => "gumbel",
            ExperimentKind::Ldp => "ldp",
            ExperimentKind::Mdp => "mdp",
            ExperimentKind::LpLdp => "lp_ldp",
            ExperimentKind::LpGumbel => "lp_gumbel",
            ExperimentKind::EquivalenceDecay => "equivalence_decay",
            ExperimentKind::GeneralClt => "general_clt",
        }
    }
}

/// How the MDP speed `s_n` is chosen at dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnRule {
    /// `√(log n)`
    #[default]
    SqrtLog,
    /// `log log n`
    LogLog,
    /// The fixed value in [`ExperimentConfig::s_n_custom`].
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n_list: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Vec<f64>,
    #[serde(default)]
    pub s_n_rule: SnRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_n_custom: Option<f64>,
    /// Dimensions evaluated with the exact max-spacing oracle instead of sampling.
    #[serde(default)]
    pub oracle_n_list: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceDistribution>,
    /// Never serialized: reports must not depend on it.
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

pub const DEFAULT_SEED: u64 = 42;

impl ExperimentConfig {
    /// The stock grid for each experiment.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = Self {
            kind,
            n_list: vec![],
            q: None,
            p: None,
            replicates: 100_000,
            seed: DEFAULT_SEED,
            thresholds: vec![],
            s_n_rule: SnRule::SqrtLog,
            s_n_custom: None,
            oracle_n_list: vec![],
            source: None,
            workers: default_workers(),
        };
        match kind {
            ExperimentKind::Clt => {
                c.n_list = vec![100, 10_000];
                c.q = Some(2.0);
            }
            ExperimentKind::BerryEsseenSweep => {
                c.n_list = vec![100, 1000, 10_000];
                c.q = Some(2.0);
            }
            ExperimentKind::Gumbel => {
                c.n_list = vec![100, 10_000];
                c.thresholds = vec![-1.0, 0.0, 1.0, 2.0];
                c.oracle_n_list = vec![1_000_000];
            }
            ExperimentKind::Ldp => {
                c.n_list = vec![1000];
                c.replicates = 1_000_000;
                c.thresholds = vec![1.5, 0.5];
                c.oracle_n_list = vec![10_000, 100_000, 1_000_000];
            }
            ExperimentKind::Mdp => {
                c.n_list = vec![1000];
                c.replicates = 1_000_000;
                c.thresholds = vec![1.0, -1.0];
                c.oracle_n_list = vec![1_000_000];
            }
            ExperimentKind::LpLdp => {
                c.n_list = vec![1000];
                c.p = Some(2.0);
                c.thresholds = vec![1.3];
            }
            ExperimentKind::LpGumbel => {
                c.n_list = vec![10_000];
                c.p = Some(1.0);
            }
            ExperimentKind::EquivalenceDecay => {
                c.n_list = vec![5, 10, 20, 50, 100];
                c.replicates = 1_000_000;
            }
            ExperimentKind::GeneralClt => {
                c.n_list = vec![10_000];
                c.q = Some(2.0);
                c.replicates = 10_000;
                c.source = Some(SourceDistribution::Exponential);
            }
        }
        c
    }

    /// `s_n` at dimension `n` under the configured rule.
    pub fn s_n(&self, n: u64) -> Result<f64> {
        let ln = (n as f64).ln();
        let s = match self.s_n_rule {
            SnRule::SqrtLog => ln.sqrt(),
            SnRule::LogLog => ln.ln(),
            SnRule::Custom => self
                .s_n_custom
                .ok_or_else(|| LabError::usage("s_n_rule = custom needs s_n_custom"))?,
        };
        if !(s > 1.0 && s < ln) {
            return Err(LabError::usage(format!(
                "s_n = {s} at n = {n} must lie strictly between 1 and log n = {ln}"
            )));
        }
        Ok(s)
    }

    pub fn q(&self) -> Result<f64> {
        self.q
            .ok_or_else(|| LabError::usage(format!("{} needs q", self.kind.name())))
    }

    pub fn p(&self) -> Result<f64> {
        self.p
            .ok_or_else(|| LabError::usage(format!("{} needs p", self.kind.name())))
    }

    /// Checks every precondition before any sampling starts.
    pub fn validate(&self) -> Result<()> {
        use ExperimentKind::*;
        let usage = |msg: String| Err(LabError::usage(msg));
        if self.replicates == 0 {
            return usage("replicates must be at least 1".into());
        }
        let oracle_only = matches!(self.kind, Gumbel | Ldp | Mdp) && !self.oracle_n_list.is_empty();
        if self.n_list.is_empty() && !oracle_only {
            return usage("n list is empty".into());
        }
        if self.workers == 0 {
            return usage("workers must be at least 1".into());
        }
        for &n in self.n_list.iter().chain(&self.oracle_n_list) {
            if !(2..1 << 32).contains(&n) {
                return usage(format!("n = {n} out of range [2, 2^32)"));
            }
        }
        if let Some(t) = self.thresholds.iter().find(|t| !t.is_finite()) {
            return usage(format!("threshold {t} is not finite"));
        }
        match self.kind {
            Clt | BerryEsseenSweep | GeneralClt => {
                let q = self.q()?;
                if !(q >= 1.0 && q.is_finite()) {
                    return usage(format!("q = {q} must be finite and at least 1"));
                }
            }
            LpLdp | LpGumbel => {
                let p = self.p()?;
                if !(p >= 1.0 && p.is_finite()) {
                    return usage(format!("p = {p} must be finite and at least 1"));
                }
                if self.kind == LpGumbel && p != 1.0 {
                    return usage(format!(
                        "lp_gumbel has a Gumbel limit only for p = 1, got p = {p}"
                    ));
                }
            }
            _ => {}
        }
        match self.kind {
            BerryEsseenSweep if self.n_list.len() < 3 => {
                return usage("berry_esseen_sweep needs at least three dimensions".into());
            }
            EquivalenceDecay => {
                if let Some(n) = self.n_list.iter().find(|n| **n > 200) {
                    return usage(format!("equivalence_decay takes n in [2, 200], got {n}"));
                }
            }
            Ldp | Mdp | LpLdp if self.thresholds.is_empty() => {
                return usage(format!("{} needs at least one threshold", self.kind.name()));
            }
            Gumbel if self.thresholds.is_empty() && !self.oracle_n_list.is_empty() => {
                return usage("gumbel oracle rows need thresholds".into());
            }
            _ => {}
        }
        if self.kind == Mdp {
            for &n in self.n_list.iter().chain(&self.oracle_n_list) {
                self.s_n(n)?;
            }
        }
        if self.kind == GeneralClt && self.source.is_none() {
            return usage("general_clt needs a source distribution".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        use ExperimentKind::*;
        for kind in [
            Clt,
            BerryEsseenSweep,
            Gumbel,
            Ldp,
            Mdp,
            LpLdp,
            LpGumbel,
            EquivalenceDecay,
            GeneralClt,
        ] {
            ExperimentConfig::new(kind).validate().unwrap();
        }
    }

    #[test]
    fn echo_omits_workers() {
        let mut c = ExperimentConfig::new(ExperimentKind::Gumbel);
        c.workers = 7;
        let json = serde_json::to_string(&c).unwrap();
        assert!(!json.contains("workers"));
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.n_list, c.n_list);
    }

    #[test]
    fn rejects_bad_speed() {
        let mut c = ExperimentConfig::new(ExperimentKind::Mdp);
        c.s_n_rule = SnRule::Custom;
        c.s_n_custom = Some(0.5);
        assert_eq!(c.validate().unwrap_err().exit_code(), 2);
        c.s_n_rule = SnRule::LogLog;
        c.n_list = vec![10];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_out_of_domain() {
        let mut c = ExperimentConfig::new(ExperimentKind::LpGumbel);
        c.p = Some(2.0);
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(ExperimentKind::Clt);
        c.q = Some(0.5);
        assert!(c.validate().is_err());
        c.q = Some(2.0);
        c.n_list = vec![1];
        assert!(c.validate().is_err());
    }
}
