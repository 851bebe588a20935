//! Outlier groups of the top eigenvectors.
//!
//! Secondary factors e_2..e_K contribute their large-magnitude entries
//! (|e_ki| above a multiple of the entry spread) to the strongly correlated
//! union G23. The top factor contributes its lower outliers of |e_1i| to the
//! weakly correlated group G1. Everything else is the bulk group G⊥.

use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::EigenSystem;

pub const G23: &str = "G23";
pub const G23_PLUS: &str = "G23+";
pub const G23_MINUS: &str = "G23-";
pub const G_PERP: &str = "Gperp";
pub const G1: &str = "G1";

/// Share of assets taken as G1 when the outlier threshold selects nothing.
pub const G1_FALLBACK_FRACTION: f64 = 0.10;
pub const DEFAULT_THRESHOLD_MULT: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    /// Sorted asset indices.
    pub members: Vec<usize>,
}

impl Group {
    pub fn new(name: impl Into<String>, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self {
            name: name.into(),
            members,
        }
    }

    pub fn degeneracy(&self) -> usize {
        self.members.len()
    }
}

/// Threshold applied to one eigenvector (1-based factor index).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub factor: usize,
    pub value: f64,
}

/// Disjoint, exhaustive, non-empty groups of asset indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPartition {
    groups: Vec<Group>,
    thresholds: Vec<Threshold>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Group>, thresholds: Vec<Threshold>, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut names = BTreeSet::new();
        for g in &groups {
            if g.members.is_empty() {
                return Err(Error::EmptyGroup(g.name.clone()));
            }
            if !names.insert(g.name.as_str()) {
                return Err(Error::InvalidPartition(format!("duplicate group name {}", g.name)));
            }
            for &i in &g.members {
                if i >= n {
                    return Err(Error::IndexOutOfRange { index: i, len: n });
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidPartition(format!(
                        "asset {i} belongs to more than one group"
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("asset {missing} has no group")));
        }
        Ok(Self { groups, thresholds })
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn thresholds(&self) -> &[Threshold] {
        &self.thresholds
    }

    pub fn n_assets(&self) -> usize {
        self.groups.iter().map(Group::degeneracy).sum()
    }

    pub fn group(&self, name: &str) -> Option<&Group> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Group index of every asset.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n_assets()];
        for (gi, g) in self.groups.iter().enumerate() {
            for &i in &g.members {
                labels[i] = gi;
            }
        }
        labels
    }

    /// Replaces the named group by `parts`, which must cover it exactly.
    pub fn replace_group(&self, name: &str, parts: Vec<Group>) -> Result<Self> {
        let pos = self
            .groups
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| Error::InvalidPartition(format!("no group named {name}")))?;
        let mut groups = self.groups.clone();
        groups.splice(pos..=pos, parts);
        Self::new(groups, self.thresholds.clone(), self.n_assets())
    }
}

/// Outlier sets before overlaps between G1 and G23 are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RawOutlierGroups {
    pub n: usize,
    pub g1: Vec<usize>,
    pub g23: Vec<usize>,
    /// (factor, positive outliers, negative outliers) for each secondary factor.
    pub by_factor: Vec<(usize, Vec<usize>, Vec<usize>)>,
    pub thresholds: Vec<Threshold>,
    pub g1_fallback: bool,
}

fn population_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Computes G1 and G23 without enforcing disjointness.
pub fn raw_outlier_groups(es: &EigenSystem, k_factors: usize, threshold_mult: f64) -> Result<RawOutlierGroups> {
    let n = es.dim();
    if k_factors < 2 || k_factors > n {
        return Err(Error::InvalidParameter(format!(
            "k_factors must be in [2, {n}], got {k_factors}"
        )));
    }
    if !(threshold_mult > 0.0 && threshold_mult.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "threshold multiplier must be positive, got {threshold_mult}"
        )));
    }

    let mut thresholds = Vec::with_capacity(k_factors);
    let mut by_factor = Vec::with_capacity(k_factors - 1);
    let mut g23 = BTreeSet::new();
    for k in 1..k_factors {
        let e: Vec<f64> = es.vector(k).iter().copied().collect();
        let (_, sd) = population_std(&e);
        let cut = threshold_mult * sd;
        thresholds.push(Threshold { factor: k + 1, value: cut });
        let plus: Vec<usize> = (0..n).filter(|&i| e[i] > cut).collect();
        let minus: Vec<usize> = (0..n).filter(|&i| e[i] < -cut).collect();
        g23.extend(plus.iter().chain(&minus).copied());
        by_factor.push((k + 1, plus, minus));
    }

    let abs_top: Vec<f64> = es.vector(0).iter().map(|x| x.abs()).collect();
    let (mean, sd) = population_std(&abs_top);
    let cut = mean - threshold_mult * sd;
    thresholds.insert(0, Threshold { factor: 1, value: cut });
    let mut g1: Vec<usize> = (0..n).filter(|&i| abs_top[i] < cut).collect();
    let g1_fallback = g1.is_empty();
    if g1_fallback {
        let count = ((G1_FALLBACK_FRACTION * n as f64).round() as usize).max(1);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| abs_top[a].total_cmp(&abs_top[b]));
        g1 = order[..count].to_vec();
        g1.sort_unstable();
    }

    Ok(RawOutlierGroups {
        n,
        g1,
        g23: g23.into_iter().collect(),
        by_factor,
        thresholds,
        g1_fallback,
    })
}

/// Size of the intersection of two index sets.
pub fn overlap_count(a: &[usize], b: &[usize]) -> usize {
    let b: BTreeSet<usize> = b.iter().copied().collect();
    a.iter().collect::<BTreeSet<_>>().into_iter().filter(|i| b.contains(i)).count()
}

/// |G1 ∩ G23| before overlap resolution.
pub fn overlap_report(raw: &RawOutlierGroups) -> usize {
    overlap_count(&raw.g1, &raw.g23)
}

/// Partition {G23, G⊥, G1}. Assets qualifying for both G1 and G23 go to G23.
pub fn partition_from_raw(raw: &RawOutlierGroups) -> Result<GroupPartition> {
    let g23: BTreeSet<usize> = raw.g23.iter().copied().collect();
    let g1: Vec<usize> = raw.g1.iter().copied().filter(|i| !g23.contains(i)).collect();
    if g23.is_empty() {
        return Err(Error::EmptyGroup(G23.into()));
    }
    if g1.is_empty() {
        return Err(Error::EmptyGroup(G1.into()));
    }
    let g1_set: BTreeSet<usize> = g1.iter().copied().collect();
    let perp: Vec<usize> = (0..raw.n)
        .filter(|i| !g23.contains(i) && !g1_set.contains(i))
        .collect();
    if perp.is_empty() {
        return Err(Error::EmptyGroup(G_PERP.into()));
    }
    GroupPartition::new(
        vec![
            Group::new(G23, g23.into_iter().collect()),
            Group::new(G_PERP, perp),
            Group::new(G1, g1),
        ],
        raw.thresholds.clone(),
        raw.n,
    )
}

pub fn extract_outlier_groups(es: &EigenSystem, k_factors: usize, threshold_mult: f64) -> Result<GroupPartition> {
    partition_from_raw(&raw_outlier_groups(es, k_factors, threshold_mult)?)
}

/// Writes `asset_id,group_name` rows.
pub fn write_partition_csv<W: Write>(writer: W, partition: &GroupPartition, assets: &[String]) -> Result<()> {
    if assets.len() != partition.n_assets() {
        return Err(Error::DimensionMismatch(format!(
            "{} asset labels for a partition of {} assets",
            assets.len(),
            partition.n_assets()
        )));
    }
    let labels = partition.labels();
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["asset_id", "group_name"])?;
    for (i, asset) in assets.iter().enumerate() {
        wtr.write_record([asset.as_str(), partition.groups()[labels[i]].name.as_str()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a partition CSV against the given asset ordering. Groups appear in
/// order of first occurrence.
pub fn read_partition_csv<R: Read>(reader: R, assets: &[String]) -> Result<GroupPartition> {
    let index: std::collections::HashMap<&str, usize> =
        assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse("partition rows need asset_id,group_name".into()));
        }
        let i = *index
            .get(&record[0])
            .ok_or_else(|| Error::Parse(format!("unknown asset '{}'", &record[0])))?;
        match groups.iter_mut().find(|(name, _)| name == &record[1]) {
            Some((_, members)) => members.push(i),
            None => groups.push((record[1].to_string(), vec![i])),
        }
    }
    let groups = groups.into_iter().map(|(name, m)| Group::new(name, m)).collect();
    GroupPartition::new(groups, Vec::new(), assets.len())
}
