use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{relative_ipr, EigenSystem};
use crate::structure::GroupPartition;

/// Ω² = wᵀCw.
pub fn portfolio_risk(w: &DVector<f64>, c: &DMatrix<f64>) -> Result<f64> {
    if !c.is_square() || c.nrows() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "weights of length {} against a {}x{} matrix",
            w.len(),
            c.nrows(),
            c.ncols()
        )));
    }
    Ok(w.dot(&(c * w)))
}

/// Eigenvectors (0-based ranks) forming one noise subband.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subband {
    pub name: String,
    pub members: Vec<usize>,
}

/// `G23+` → `K23+`, `Gperp` → `Kperp`; other names get a `K_` prefix.
pub fn subband_name(group: &str) -> String {
    match group.strip_prefix('G') {
        Some(rest) => format!("K{rest}"),
        None => format!("K_{group}"),
    }
}

/// Assigns each noise-band eigenvector (rank ≥ `n_factors`) to the group
/// with the largest relative IPR; ties go to the earlier group.
pub fn assign_subbands(es: &EigenSystem, p: &GroupPartition, n_factors: usize) -> Result<Vec<Subband>> {
    if p.n_assets() != es.dim() {
        return Err(Error::DimensionMismatch(format!(
            "partition of {} assets for a {}-dimensional eigensystem",
            p.n_assets(),
            es.dim()
        )));
    }
    if n_factors >= es.dim() {
        return Err(Error::InvalidK { k: n_factors, n: es.dim() });
    }
    let mut subbands: Vec<Subband> = p
        .groups()
        .iter()
        .map(|g| Subband {
            name: subband_name(&g.name),
            members: Vec::new(),
        })
        .collect();
    for k in n_factors..es.dim() {
        let e: Vec<f64> = es.vector(k).iter().copied().collect();
        let mut best = (0, f64::NEG_INFINITY);
        for (gi, g) in p.groups().iter().enumerate() {
            let r = relative_ipr(&e, &g.members)?;
            if r > best.1 {
                best = (gi, r);
            }
        }
        subbands[best.0].members.push(k);
    }
    if let Some(empty) = subbands.iter().find(|s| s.members.is_empty()) {
        return Err(Error::EmptySubband(empty.name.clone()));
    }
    Ok(subbands)
}

/// Replaces the listed subbands by their union, placed where the first of
/// them was.
pub fn merge_subbands(subbands: &[Subband], name: &str, parts: &[&str]) -> Result<Vec<Subband>> {
    let mut out = Vec::with_capacity(subbands.len());
    let mut merged: Option<usize> = None;
    for s in subbands {
        if parts.contains(&s.name.as_str()) {
            match merged {
                Some(pos) => out[pos] = union(&out[pos], s),
                None => {
                    merged = Some(out.len());
                    out.push(Subband {
                        name: name.to_string(),
                        members: s.members.clone(),
                    });
                }
            }
        } else {
            out.push(s.clone());
        }
    }
    let found = subbands.iter().filter(|s| parts.contains(&s.name.as_str())).count();
    if found != parts.len() {
        return Err(Error::InvalidPartition(format!(
            "cannot merge {parts:?}: only {found} of them exist"
        )));
    }
    Ok(out)
}

fn union(a: &Subband, b: &Subband) -> Subband {
    let mut members = a.members.clone();
    members.extend(&b.members);
    members.sort_unstable();
    Subband {
        name: a.name.clone(),
        members,
    }
}

/// w_K = Σ_{k∈K} e_k, scaled to unit norm.
pub fn subband_portfolio(es: &EigenSystem, members: &[usize]) -> Result<DVector<f64>> {
    let mut w = DVector::zeros(es.dim());
    for &k in members {
        if k >= es.dim() {
            return Err(Error::IndexOutOfRange { index: k, len: es.dim() });
        }
        w += es.vector(k);
    }
    let norm = w.norm();
    if !(norm > 0.0) {
        return Err(Error::EmptySubband(format!("{members:?}")));
    }
    Ok(w / norm)
}

/// One unit-norm portfolio per group's subband, with `n_factors` leading
/// eigenvectors treated as factors.
pub fn subband_portfolios(
    es: &EigenSystem,
    p: &GroupPartition,
    n_factors: usize,
) -> Result<Vec<(String, DVector<f64>)>> {
    assign_subbands(es, p, n_factors)?
        .into_iter()
        .map(|s| Ok((s.name.clone(), subband_portfolio(es, &s.members)?)))
        .collect()
}
