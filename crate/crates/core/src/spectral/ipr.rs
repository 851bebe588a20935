//! Inverse participation ratios.
//!
//! For a unit vector e, I = Σ e_i⁴ and the participation P = 1/I counts the
//! effective number of non-trivial entries (N for equal weights, 1 for a
//! single entry). The relative IPR of a group G is the share of I coming
//! from the group's entries.

use nalgebra::DVectorView;
use serde::{Deserialize, Serialize};

use super::eigen::EigenSystem;
use crate::error::{Error, Result};
use crate::structure::GroupPartition;

const NORM_TOL: f64 = 1e-8;

fn check_unit<'a, I: IntoIterator<Item = &'a f64>>(e: I) -> Result<()> {
    let norm = e.into_iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }
    Ok(())
}

pub fn ipr(e: &[f64]) -> Result<f64> {
    check_unit(e)?;
    Ok(e.iter().map(|x| x.powi(4)).sum())
}

pub fn participation(e: &[f64]) -> Result<f64> {
    Ok(1.0 / ipr(e)?)
}

/// I^(G) / I for the entries indexed by `group`.
pub fn relative_ipr(e: &[f64], group: &[usize]) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::EmptyGroup("relative IPR group".into()));
    }
    let total = ipr(e)?;
    let mut part = 0.0;
    for &i in group {
        let x = e.get(i).ok_or(Error::IndexOutOfRange { index: i, len: e.len() })?;
        part += x.powi(4);
    }
    Ok(part / total)
}

/// Flat participation level N/3 of Gaussian random eigenvectors.
pub fn grmt_participation_baseline(n: usize) -> f64 {
    n as f64 / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipationPoint {
    /// 1-based rank of the eigenvalue, largest first.
    pub k: usize,
    #[serde(rename = "lambda_k")]
    pub lambda: f64,
    #[serde(rename = "P_k")]
    pub participation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeIprPoint {
    pub k: usize,
    #[serde(rename = "lambda_k")]
    pub lambda: f64,
    pub group: String,
    #[serde(rename = "R")]
    pub r: f64,
}

fn column(es: &EigenSystem, k: usize) -> Vec<f64> {
    let v: DVectorView<'_, f64> = es.vector(k);
    v.iter().copied().collect()
}

pub fn participation_series(es: &EigenSystem) -> Result<Vec<ParticipationPoint>> {
    (0..es.dim())
        .map(|k| {
            Ok(ParticipationPoint {
                k: k + 1,
                lambda: es.values()[k],
                participation: participation(&column(es, k))?,
            })
        })
        .collect()
}

/// R_k^(G) for every eigenvector and every group of the partition.
pub fn relative_ipr_series(es: &EigenSystem, partition: &GroupPartition) -> Result<Vec<RelativeIprPoint>> {
    let mut out = Vec::with_capacity(es.dim() * partition.groups().len());
    for k in 0..es.dim() {
        let e = column(es, k);
        for g in partition.groups() {
            out.push(RelativeIprPoint {
                k: k + 1,
                lambda: es.values()[k],
                group: g.name.clone(),
                r: relative_ipr(&e, &g.members)?,
            });
        }
    }
    Ok(out)
}

/// Relative IPR of each eigenvector for one group of indices.
pub fn relative_ipr_profile(es: &EigenSystem, group: &[usize]) -> Result<Vec<f64>> {
    (0..es.dim()).map(|k| relative_ipr(&column(es, k), group)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn equal_weights_and_single_entry() {
        let n = 16;
        let e = vec![1.0 / (n as f64).sqrt(); n];
        assert_abs_diff_eq!(ipr(&e).unwrap(), 1.0 / n as f64, epsilon = 1e-15);
        assert_abs_diff_eq!(participation(&e).unwrap(), n as f64, epsilon = 1e-12);
        let mut s = vec![0.0; n];
        s[3] = 1.0;
        assert_eq!(ipr(&s).unwrap(), 1.0);
        assert_eq!(participation(&s).unwrap(), 1.0);
    }

    #[test]
    fn two_entry_vector() {
        let h = 0.5f64.sqrt();
        let e = [h, h, 0.0, 0.0];
        assert_abs_diff_eq!(ipr(&e).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(participation(&e).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_unnormalized_and_empty() {
        assert!(matches!(ipr(&[1.0, 1.0]), Err(Error::NotNormalized(_))));
        assert!(matches!(relative_ipr(&[1.0, 0.0], &[]), Err(Error::EmptyGroup(_))));
        assert!(matches!(
            relative_ipr(&[1.0, 0.0], &[5]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn relative_ipr_full_and_disjoint() {
        let e = [0.6, 0.8, 0.0, 0.0];
        assert_abs_diff_eq!(relative_ipr(&e, &[0, 1, 2, 3]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(relative_ipr(&e, &[2, 3]).unwrap(), 0.0);
    }

    #[test]
    fn baseline() {
        assert_abs_diff_eq!(grmt_participation_baseline(484), 161.333333333333, epsilon = 1e-9);
        assert_eq!(grmt_participation_baseline(3), 1.0);
    }

    fn unit_vector(raw: Vec<f64>) -> Option<Vec<f64>> {
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        (norm > 1e-3).then(|| raw.iter().map(|x| x / norm).collect())
    }

    proptest! {
        #[test]
        fn participation_bounded(raw in proptest::collection::vec(-1.0f64..1.0, 2..40)) {
            if let Some(e) = unit_vector(raw) {
                let p = participation(&e).unwrap();
                prop_assert!(p >= 1.0 - 1e-12 && p <= e.len() as f64 + 1e-9);
            }
        }

        #[test]
        fn relative_ipr_additive(raw in proptest::collection::vec(-1.0f64..1.0, 4..40), cut in 1usize..3) {
            if let Some(e) = unit_vector(raw) {
                let n = e.len();
                let idx: Vec<usize> = (0..n).collect();
                let a = &idx[..cut];
                let b = &idx[cut..n / 2 + cut];
                let c = &idx[n / 2 + cut..];
                let mut total = relative_ipr(&e, a).unwrap() + relative_ipr(&e, b).unwrap();
                if !c.is_empty() {
                    total += relative_ipr(&e, c).unwrap();
                }
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
