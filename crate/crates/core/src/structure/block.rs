//! Coarse-grained block correlation models.
//!
//! Assets are split into B groups. Inside group g every pair has correlation
//! ρ_g, so the diagonal block is (1 − ρ_g)I + ρ_g·J; between groups g and h
//! every pair has the constant correlation `inter[g][h]`.
//!
//! The spectrum follows from the block structure without a dense solve:
//! each group contributes a (D_g − 1)-fold level at 1 − ρ_g (vectors summing
//! to zero inside the group), and the remaining B eigenvalues are those of
//! the B×B quotient matrix M_gg = 1 + (D_g − 1)ρ_g, M_gh = inter_gh·√(D_g D_h).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::CorrelationMatrix;
use crate::spectral::symmetric_eigenvalues;

use super::groups::{Group, GroupPartition, G1, G23_MINUS, G23_PLUS, G_PERP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGroup {
    pub name: String,
    pub degeneracy: usize,
    pub rho: f64,
}

/// On-disk form: `{ "groups": [{ "name", "degeneracy", "rho" }], "inter": [[..]] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModelSpec {
    pub groups: Vec<BlockGroup>,
    pub inter: Vec<Vec<f64>>,
}

/// Validated block model; the expanded matrix is positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockModelSpec", into = "BlockModelSpec")]
pub struct BlockModel {
    groups: Vec<BlockGroup>,
    inter: Vec<Vec<f64>>,
}

impl TryFrom<BlockModelSpec> for BlockModel {
    type Error = Error;

    fn try_from(spec: BlockModelSpec) -> Result<Self> {
        BlockModel::new(spec.groups, spec.inter)
    }
}

impl From<BlockModel> for BlockModelSpec {
    fn from(m: BlockModel) -> Self {
        BlockModelSpec {
            groups: m.groups,
            inter: m.inter,
        }
    }
}

/// Spectrum of an expanded block model.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    /// Eigenvalues of the quotient matrix, descending.
    pub factors: Vec<f64>,
    /// (group name, level 1 − ρ_g, multiplicity D_g − 1) for groups with D_g ≥ 2.
    pub levels: Vec<(String, f64, usize)>,
}

impl BlockSpectrum {
    pub fn min_eigenvalue(&self) -> f64 {
        self.factors
            .iter()
            .copied()
            .chain(self.levels.iter().map(|l| l.1))
            .fold(f64::INFINITY, f64::min)
    }

    /// Full spectrum with multiplicities, descending.
    pub fn all_eigenvalues(&self) -> Vec<f64> {
        let mut v = self.factors.clone();
        for (_, value, mult) in &self.levels {
            v.extend(std::iter::repeat_n(*value, *mult));
        }
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

fn check_rho(rho: f64, d: usize) -> Result<()> {
    let lower = if d >= 2 { -1.0 / (d as f64 - 1.0) } else { -1.0 };
    let ok = if d >= 2 {
        rho > lower && rho < 1.0
    } else {
        (-1.0..=1.0).contains(&rho)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidRho { rho, d })
    }
}

impl BlockModel {
    /// Validates shapes and ranges, sets `inter[g][g] = ρ_g`, and rejects
    /// models whose expansion is not positive definite.
    pub fn new(groups: Vec<BlockGroup>, mut inter: Vec<Vec<f64>>) -> Result<Self> {
        let b = groups.len();
        if b == 0 {
            return Err(Error::InvalidShape("block model needs at least one group".into()));
        }
        if inter.len() != b || inter.iter().any(|row| row.len() != b) {
            return Err(Error::DimensionMismatch(format!(
                "inter must be {b}x{b} for {b} groups"
            )));
        }
        for g in &groups {
            if g.degeneracy == 0 {
                return Err(Error::EmptyGroup(g.name.clone()));
            }
            check_rho(g.rho, g.degeneracy)?;
        }
        for (g, grp) in groups.iter().enumerate() {
            inter[g][g] = grp.rho;
            for h in 0..g {
                let v = inter[g][h];
                if !v.is_finite() || (v - inter[h][g]).abs() > 1e-12 || v.abs() > 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "inter[{g}][{h}] = {v} must be symmetric and within [-1, 1]"
                    )));
                }
                inter[h][g] = v;
            }
        }
        let model = Self { groups, inter };
        let min = model.spectrum().min_eigenvalue();
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite(min));
        }
        Ok(model)
    }

    /// Four-group effective model of a 484-asset market, in the order
    /// G23+, G23−, G⊥, G1: two strongly correlated sector groups, a bulk
    /// group, and a weakly correlated group.
    pub fn four_group_reference() -> Self {
        let groups = [
            (G23_PLUS, 29, 0.59),
            (G23_MINUS, 32, 0.48),
            (G_PERP, 377, 0.32),
            (G1, 46, 0.13),
        ]
        .into_iter()
        .map(|(name, degeneracy, rho)| BlockGroup {
            name: name.to_string(),
            degeneracy,
            rho,
        })
        .collect();
        let inter = vec![
            vec![0.59, 0.36, 0.35, 0.22],
            vec![0.36, 0.48, 0.33, 0.20],
            vec![0.35, 0.33, 0.32, 0.20],
            vec![0.22, 0.20, 0.20, 0.13],
        ];
        Self::new(groups, inter).expect("reference model is positive definite")
    }

    pub fn groups(&self) -> &[BlockGroup] {
        &self.groups
    }

    pub fn inter(&self) -> &[Vec<f64>] {
        &self.inter
    }

    pub fn n_assets(&self) -> usize {
        self.groups.iter().map(|g| g.degeneracy).sum()
    }

    pub fn spec(&self) -> BlockModelSpec {
        self.clone().into()
    }

    /// Group index of each expanded asset (contiguous blocks).
    pub fn labels(&self) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(g, grp)| std::iter::repeat_n(g, grp.degeneracy))
            .collect()
    }

    pub fn asset_names(&self) -> Vec<String> {
        self.groups
            .iter()
            .flat_map(|g| (0..g.degeneracy).map(move |i| format!("{}_{}", g.name, i)))
            .collect()
    }

    /// The generating partition: contiguous index blocks in group order.
    pub fn partition(&self) -> GroupPartition {
        let mut start = 0;
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let grp = Group::new(g.name.clone(), (start..start + g.degeneracy).collect());
                start += g.degeneracy;
                grp
            })
            .collect();
        GroupPartition::new(groups, Vec::new(), self.n_assets()).expect("contiguous blocks")
    }

    /// Spectrum from the block structure (quotient matrix plus flat levels).
    pub fn spectrum(&self) -> BlockSpectrum {
        let b = self.groups.len();
        let d: Vec<f64> = self.groups.iter().map(|g| g.degeneracy as f64).collect();
        let quotient = DMatrix::from_fn(b, b, |g, h| {
            if g == h {
                1.0 + (d[g] - 1.0) * self.groups[g].rho
            } else {
                self.inter[g][h] * (d[g] * d[h]).sqrt()
            }
        });
        let levels = self
            .groups
            .iter()
            .filter(|g| g.degeneracy >= 2)
            .map(|g| (g.name.clone(), 1.0 - g.rho, g.degeneracy - 1))
            .collect();
        BlockSpectrum {
            factors: symmetric_eigenvalues(&quotient),
            levels,
        }
    }
}

/// N×N matrix with (1 − ρ_g)I + ρ_g·J diagonal blocks and constant
/// off-diagonal blocks.
pub fn expand_block_model(m: &BlockModel) -> CorrelationMatrix {
    let labels = m.labels();
    let n = labels.len();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            m.inter[labels[i]][labels[j]]
        }
    });
    CorrelationMatrix::new(m.asset_names(), entries).expect("validated block model")
}

/// Block averages of `c` over the partition's groups.
pub fn estimate_block_model(c: &CorrelationMatrix, p: &GroupPartition) -> Result<BlockModel> {
    if p.n_assets() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} assets, correlation has {}",
            p.n_assets(),
            c.dim()
        )));
    }
    let e = c.entries();
    let gs = p.groups();
    let b = gs.len();
    let mut inter = vec![vec![0.0; b]; b];
    for g in 0..b {
        for h in 0..=g {
            let (mut sum, mut count) = (0.0, 0usize);
            for &i in &gs[g].members {
                for &j in &gs[h].members {
                    if g == h && j >= i {
                        continue;
                    }
                    sum += e[(i, j)];
                    count += 1;
                }
            }
            let mean = if count > 0 { sum / count as f64 } else { 0.0 };
            inter[g][h] = mean;
            inter[h][g] = mean;
        }
    }
    let groups = gs
        .iter()
        .enumerate()
        .map(|(g, grp)| BlockGroup {
            name: grp.name.clone(),
            degeneracy: grp.degeneracy(),
            rho: inter[g][g],
        })
        .collect();
    BlockModel::new(groups, inter)
}

/// Top eigenvalue and (d − 1)-fold level of a single d×d block with
/// constant correlation ρ.
pub fn block_spectrum_analytic(d: usize, rho: f64) -> Result<(f64, f64)> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("block size must be at least 2, got {d}")));
    }
    check_rho(rho, d)?;
    Ok((1.0 + (d as f64 - 1.0) * rho, 1.0 - rho))
}
