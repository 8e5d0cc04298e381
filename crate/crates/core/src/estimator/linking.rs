//! Pairing of per-subspace estimates into paths through the transformed core.

use crate::error::{invalid, Result};
use crate::linalg::median;
use crate::tensor::{msvd, Tensor3};

/// One path as a triple of support positions (one per subspace).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLink {
    /// Positions into the receive, transmit and distance supports.
    pub support: [usize; 3],
    /// Magnitude of the core entry that produced the link.
    pub core_energy: f64,
}

/// Links subspace estimates into paths.
///
/// Takes the multilinear SVD of `core` (dims = estimated ranks) and keeps its
/// `max(ranks)` largest-magnitude core entries, except those not exceeding
/// `multiplier` times the median magnitude of the remaining entries (the
/// strongest entry is always kept). Each kept entry `(i1, i2, i3)` maps to
/// support positions `m_k = argmax_m |D_k[m, i_k]|`. Duplicate triples
/// collapse to their strongest occurrence. Output is strongest first.
pub fn link_paths(core: &Tensor3, multiplier: f64) -> Result<Vec<PathLink>> {
    if !(multiplier.is_finite() && multiplier >= 0.0) {
        return invalid(format!("linking multiplier must be non-negative, got {multiplier}"));
    }
    let dims = core.dims();
    let dec = msvd(core)?;
    let s = dec.core();
    let sd = s.dims();
    let mut entries: Vec<(usize, f64)> = s.as_slice().iter().map(|z| z.norm()).enumerate().collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let n_candidates = dims.iter().copied().max().unwrap_or(1).min(entries.len());
    let (candidates, rest) = entries.split_at(n_candidates);
    let threshold = if rest.is_empty() {
        0.0
    } else {
        multiplier * median(&rest.iter().map(|e| e.1).collect::<Vec<_>>())
    };

    let mut links: Vec<PathLink> = Vec::new();
    for (rank, &(lin, mag)) in candidates.iter().enumerate() {
        if rank > 0 && mag <= threshold {
            continue;
        }
        let idx = [lin % sd[0], (lin / sd[0]) % sd[1], lin / (sd[0] * sd[1])];
        let mut support = [0usize; 3];
        for k in 0..3 {
            let d = &dec.tucker.factors[k];
            let col = d.column(idx[k]);
            let mut best = (0, f64::NEG_INFINITY);
            for (m, z) in col.iter().enumerate() {
                if z.norm() > best.1 {
                    best = (m, z.norm());
                }
            }
            support[k] = best.0;
        }
        if links.iter().any(|l| l.support == support) {
            continue;
        }
        links.push(PathLink {
            support,
            core_energy: mag,
        });
    }
    Ok(links)
}
