//! JSON instance and mapping file formats.
//!
//! Instances carry individuals, the metric, outcomes, the loss matrix, and
//! optional base weights and named groups. Mappings carry one probability
//! row per individual. All floats are written with 12 significant digits so
//! identical inputs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use fairlip::{FairnessInstance, GroupDistribution, MetricSpace, StochasticMap};

use crate::{CliError, Result};

/// Round to 12 significant digits; the shortest decimal form of the rounded
/// value is what gets printed and serialized.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 {
        return 0.0; // also canonicalizes -0.0
    }
    if !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor();
    if !(-250.0..=250.0).contains(&mag) {
        return v;
    }
    let factor = 10f64.powf(11.0 - mag);
    (v * factor).round() / factor
}

/// Fixed-precision report formatting ("opt=0.5", not "opt=0.50000000000012").
pub fn fmt_sig(v: f64) -> String {
    format!("{}", round_sig(v))
}

/// A named group: either a member list (ids) or an explicit weight vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub individuals: Vec<String>,
    pub metric: Vec<Vec<f64>>,
    pub outcomes: Vec<String>,
    pub loss: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub groups: BTreeMap<String, GroupSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingFile {
    pub individuals: Vec<String>,
    pub outcomes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// A loaded, validated instance with resolved id lookups.
pub struct LoadedInstance {
    pub instance: FairnessInstance,
    pub groups: BTreeMap<String, GroupSpec>,
}

impl LoadedInstance {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let file: InstanceFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let space = MetricSpace::new(file.individuals.clone(), file.metric)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let instance = match file.base_weights {
            Some(weights) => {
                let base = GroupDistribution::new(weights)
                    .map_err(|e| CliError::Input(format!("{}: base_weights: {e}", path.display())))?;
                FairnessInstance::with_base(space, file.outcomes, file.loss, base)
            }
            None => FairnessInstance::new(space, file.outcomes, file.loss),
        }
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(LoadedInstance {
            instance,
            groups: file.groups,
        })
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.instance
            .space()
            .ids()
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| CliError::Input(format!("unknown individual id {id:?}")))
    }

    fn group_spec(&self, name: &str) -> Result<&GroupSpec> {
        self.groups
            .get(name)
            .ok_or_else(|| CliError::Input(format!("unknown group {name:?}")))
    }

    /// Group as a distribution over individuals (uniform over members, or
    /// the explicit weights).
    pub fn group_distribution(&self, name: &str) -> Result<GroupDistribution> {
        let n = self.instance.space().len();
        let spec = self.group_spec(name)?;
        match (&spec.members, &spec.weights) {
            (Some(members), None) => {
                let indices = members
                    .iter()
                    .map(|id| self.index_of(id))
                    .collect::<Result<Vec<_>>>()?;
                GroupDistribution::uniform_over(n, &indices)
                    .map_err(|e| CliError::Input(format!("group {name:?}: {e}")))
            }
            (None, Some(weights)) => GroupDistribution::new(weights.clone())
                .map_err(|e| CliError::Input(format!("group {name:?}: {e}"))),
            _ => Err(CliError::Input(format!(
                "group {name:?} must define exactly one of \"members\" or \"weights\""
            ))),
        }
    }

    /// Group as a member index set; requires a members-based declaration.
    pub fn group_members(&self, name: &str) -> Result<Vec<usize>> {
        let spec = self.group_spec(name)?;
        match &spec.members {
            Some(members) => members.iter().map(|id| self.index_of(id)).collect(),
            None => Err(CliError::Input(format!(
                "group {name:?} must be declared with \"members\" for this command"
            ))),
        }
    }

    /// All indices not in `members`, in index order.
    pub fn complement(&self, members: &[usize]) -> Vec<usize> {
        let n = self.instance.space().len();
        let mut inside = vec![false; n];
        for &x in members {
            inside[x] = true;
        }
        (0..n).filter(|&x| !inside[x]).collect()
    }

    pub fn group_names(&self) -> Vec<&String> {
        self.groups.keys().collect()
    }
}

impl MappingFile {
    /// Validation on load: shapes line up and every row sums to 1 within
    /// 1e-6. Rows are renormalized exactly before use.
    pub fn read(path: &Path) -> Result<(Self, StochasticMap)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let file: MappingFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if file.rows.len() != file.individuals.len() {
            return Err(CliError::Input(format!(
                "{}: {} rows for {} individuals",
                path.display(),
                file.rows.len(),
                file.individuals.len()
            )));
        }
        let mut normalized = Vec::with_capacity(file.rows.len());
        for (x, row) in file.rows.iter().enumerate() {
            if row.len() != file.outcomes.len() {
                return Err(CliError::Input(format!(
                    "{}: row {x} has {} entries for {} outcomes",
                    path.display(),
                    row.len(),
                    file.outcomes.len()
                )));
            }
            let mut sum = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(CliError::Input(format!(
                        "{}: rows[{x}][{a}] = {p}",
                        path.display()
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-6 {
                return Err(CliError::Input(format!(
                    "{}: row {x} sums to {sum}",
                    path.display()
                )));
            }
            normalized.push(row.iter().map(|p| p / sum).collect::<Vec<f64>>());
        }
        let map = StochasticMap::from_rows(normalized)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok((file, map))
    }

    pub fn from_map(individuals: &[String], outcomes: &[String], map: &StochasticMap) -> Self {
        MappingFile {
            individuals: individuals.to_vec(),
            outcomes: outcomes.to_vec(),
            rows: map
                .rows()
                .iter()
                .map(|r| r.probs().iter().map(|&p| round_sig(p)).collect())
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Internal(format!("serialize mapping: {e}")))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_rounding_is_stable() {
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(0.3000000000001942), "0.3");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(12345.6789), "12345.6789");
        assert_eq!(fmt_sig(2.0f64.ln() / 3.0), "0.231049060187");
    }
}
