//! Average-linkage agglomerative clustering on the correlation distance
//! d_ij = √(2(1 − C_ij)).

use crate::error::{Error, Result};
use crate::panel::CorrelationMatrix;

use super::groups::{Group, GroupPartition};

fn correlation_distance(c: f64) -> f64 {
    (2.0 * (1.0 - c)).max(0.0).sqrt()
}

/// Splits `subset` into `n_clusters` clusters of original indices, ordered
/// by decreasing mean intra-cluster correlation. Merge ties go to the pair
/// with the lowest slot indices, so the result depends only on input order.
pub fn hierarchical_split(c: &CorrelationMatrix, subset: &[usize], n_clusters: usize) -> Result<Vec<Vec<usize>>> {
    let m = subset.len();
    if n_clusters < 2 || m < n_clusters {
        return Err(Error::SubsetTooSmall {
            size: m,
            clusters: n_clusters,
        });
    }
    let n = c.dim();
    if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let entries = c.entries();

    let mut dist = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..a {
            let d = correlation_distance(entries[(subset[a], subset[b])]);
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let mut members: Vec<Option<Vec<usize>>> = subset.iter().map(|&i| Some(vec![i])).collect();
    let mut active = m;

    while active > n_clusters {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..m {
            if members[a].is_none() {
                continue;
            }
            for b in (a + 1)..m {
                if members[b].is_none() {
                    continue;
                }
                if best.is_none_or(|(_, _, d)| dist[a][b] < d) {
                    best = Some((a, b, dist[a][b]));
                }
            }
        }
        let (a, b, _) = best.expect("at least two active clusters");
        let taken = members[b].take().expect("active slot");
        let (na, nb) = (members[a].as_ref().map_or(0, Vec::len) as f64, taken.len() as f64);
        for k in 0..m {
            if k == a || members[k].is_none() {
                continue;
            }
            let d = (na * dist[a][k] + nb * dist[b][k]) / (na + nb);
            dist[a][k] = d;
            dist[k][a] = d;
        }
        if let Some(ma) = members[a].as_mut() {
            ma.extend(taken);
        }
        active -= 1;
    }

    let mut clusters: Vec<(f64, Vec<usize>)> = members
        .into_iter()
        .flatten()
        .map(|mut cl| {
            cl.sort_unstable();
            (mean_intra_correlation(c, &cl), cl)
        })
        .collect();
    clusters.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1[0].cmp(&y.1[0])));
    Ok(clusters.into_iter().map(|(_, cl)| cl).collect())
}

/// Mean off-diagonal correlation inside `members`; 1 for a singleton.
pub fn mean_intra_correlation(c: &CorrelationMatrix, members: &[usize]) -> f64 {
    let d = members.len();
    if d < 2 {
        return 1.0;
    }
    let e = c.entries();
    let mut sum = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[..a] {
            sum += e[(i, j)];
        }
    }
    sum / (d * (d - 1) / 2) as f64
}

/// Replaces `group` in the partition by its clustering split, naming the
/// pieces in order of decreasing mean correlation.
pub fn split_group(
    c: &CorrelationMatrix,
    partition: &GroupPartition,
    group: &str,
    names: &[&str],
) -> Result<GroupPartition> {
    let members = &partition
        .group(group)
        .ok_or_else(|| Error::InvalidPartition(format!("no group named {group}")))?
        .members;
    let clusters = hierarchical_split(c, members, names.len())?;
    let parts = clusters
        .into_iter()
        .zip(names)
        .map(|(cl, name)| Group::new(*name, cl))
        .collect();
    partition.replace_group(group, parts)
}
