//! Exhaustive and hierarchical codeword selection.
//!
//! Every gain evaluation goes through a [`Probe`], so the number of beam
//! trainings is counted where it happens. Ties are broken towards the lowest
//! `(ring, angle)` index.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::BeamVector;
use crate::error::{Error, Result};
use crate::lower::{Level, LowerCodebook};
use crate::upper::HierarchicalCodebook;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CodewordIndex {
    pub ring: usize,
    pub angle: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCodeword {
    pub index: CodewordIndex,
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Chosen bottom-level codeword.
    pub selected: CodewordIndex,
    /// Gain evaluations over all levels.
    pub steps: usize,
    /// Evaluations spent above the bottom level.
    pub upper_steps: usize,
    /// Winner on each level, top first.
    pub trace: Vec<CodewordIndex>,
    pub achieved_gain: f64,
    /// Bottom-level candidates evaluated, best first (possibly truncated).
    pub ranking: Vec<RankedCodeword>,
}

/// One beam training: measure the gain of `w` against the current channel.
pub trait Probe {
    fn measure(&mut self, w: &BeamVector) -> f64;
}

/// `|w^H h|` with a call counter.
#[derive(Clone, Debug)]
pub struct ChannelProbe<'a> {
    h: &'a [Complex64],
    count: usize,
}

impl<'a> ChannelProbe<'a> {
    pub fn new(h: &'a [Complex64]) -> Self {
        Self { h, count: 0 }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl Probe for ChannelProbe<'_> {
    fn measure(&mut self, w: &BeamVector) -> f64 {
        self.count += 1;
        w.inner(self.h).norm()
    }
}

fn better(a: &RankedCodeword, b: &RankedCodeword) -> Ordering {
    b.gain.total_cmp(&a.gain).then(a.index.cmp(&b.index))
}

fn check_channel(n: usize, h: &[Complex64]) -> Result<()> {
    if h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.len(),
        });
    }
    Ok(())
}

/// Evaluate `candidates` (flat indices) on `level`, best first.
fn rank(level: &Level, candidates: impl Iterator<Item = usize>, probe: &mut impl Probe) -> Vec<RankedCodeword> {
    let grid = level.grid();
    let mut out: Vec<RankedCodeword> = candidates
        .map(|i| {
            let (ring, angle) = grid.unflat(i);
            RankedCodeword {
                index: CodewordIndex { ring, angle },
                gain: probe.measure(&level.codewords()[i]),
            }
        })
        .collect();
    out.sort_by(better);
    out
}

/// Every codeword of `lower` against `h`, with the full ranking.
pub fn exhaustive_search(lower: &LowerCodebook, h: &[Complex64]) -> Result<SearchResult> {
    exhaustive_search_top(lower, h, usize::MAX)
}

/// As [`exhaustive_search`], keeping only the `keep` best entries of the ranking.
pub fn exhaustive_search_top(lower: &LowerCodebook, h: &[Complex64], keep: usize) -> Result<SearchResult> {
    check_channel(lower.cfg().n_elements(), h)?;
    let mut probe = ChannelProbe::new(h);
    let mut result = exhaustive_search_with(lower, &mut probe);
    result.ranking.truncate(keep.max(1));
    Ok(result)
}

pub fn exhaustive_search_with(lower: &LowerCodebook, probe: &mut impl Probe) -> SearchResult {
    let ranking = rank(lower.level(), 0..lower.len(), probe);
    let best = ranking[0];
    SearchResult {
        selected: best.index,
        steps: ranking.len(),
        upper_steps: 0,
        trace: vec![best.index],
        achieved_gain: best.gain,
        ranking,
    }
}

/// Top-down search: all of level 1, then only the children of each winner.
pub fn hierarchical_search(hier: &HierarchicalCodebook, h: &[Complex64]) -> Result<SearchResult> {
    check_channel(hier.cfg().n_elements(), h)?;
    hierarchical_search_with(hier, &mut ChannelProbe::new(h))
}

pub fn hierarchical_search_with(hier: &HierarchicalCodebook, probe: &mut impl Probe) -> Result<SearchResult> {
    let last = hier.n_levels() - 1;
    let mut candidates: Vec<usize> = (0..hier.level(0).len()).collect();
    let mut trace = Vec::with_capacity(hier.n_levels());
    let mut steps = 0;
    let mut upper_steps = 0;
    for l in 0..=last {
        let level = hier.level(l);
        if candidates.is_empty() {
            return Err(Error::Hierarchy(format!("empty candidate set on level {}", l + 1)));
        }
        if let Some(&bad) = candidates.iter().find(|&&i| i >= level.len()) {
            return Err(Error::Hierarchy(format!(
                "candidate {bad} out of range on level {}",
                l + 1
            )));
        }
        let ranking = rank(level, candidates.iter().copied(), probe);
        steps += ranking.len();
        let best = ranking[0];
        trace.push(best.index);
        if l == last {
            return Ok(SearchResult {
                selected: best.index,
                steps,
                upper_steps,
                trace,
                achieved_gain: best.gain,
                ranking,
            });
        }
        upper_steps += ranking.len();
        let flat = level.grid().flat(best.index.ring, best.index.angle);
        candidates = hier.children(l, flat).to_vec();
    }
    unreachable!("loop returns on the bottom level")
}

/// Share of trials whose selection is among the oracle's `k` best, ties included.
pub fn topk_agreement(results: &[SearchResult], oracle: &[SearchResult], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if results.len() != oracle.len() {
        return Err(Error::DimensionMismatch {
            expected: oracle.len(),
            got: results.len(),
        });
    }
    if results.is_empty() {
        return Err(Error::InvalidParameter("no trials to compare".into()));
    }
    let mut hits = 0usize;
    for (res, orc) in results.iter().zip(oracle) {
        let top = orc.ranking.get(..k).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "oracle ranking holds {} entries, fewer than k = {k}",
                orc.ranking.len()
            ))
        })?;
        let kth = top[k - 1].gain;
        if top.iter().any(|r| r.index == res.selected) || res.achieved_gain >= kth {
            hits += 1;
        }
    }
    Ok(hits as f64 / results.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayConfig;

    #[test]
    fn exact_codeword_is_selected() {
        let cfg = ArrayConfig::new(32, 40e9).unwrap();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 64, 3).unwrap();
        let h: Vec<Complex64> = cb.codeword(2, 17).weights().to_vec();
        let res = exhaustive_search(&cb, &h).unwrap();
        assert_eq!(res.selected, CodewordIndex { ring: 2, angle: 17 });
        assert!((res.achieved_gain - 1.0).abs() < 1e-12);
        assert_eq!(res.steps, 192);
        assert_eq!(res.ranking.len(), 192);
    }

    #[test]
    fn ties_prefer_lowest_index() {
        let cfg = ArrayConfig::new(8, 40e9).unwrap();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 8, 1).unwrap();
        let h = vec![Complex64::new(0.0, 0.0); 8];
        let res = exhaustive_search(&cb, &h).unwrap();
        assert_eq!(res.selected, CodewordIndex { ring: 0, angle: 0 });
    }

    #[test]
    fn rejects_wrong_channel_length() {
        let cfg = ArrayConfig::new(8, 40e9).unwrap();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 8, 1).unwrap();
        assert!(matches!(
            exhaustive_search(&cb, &[Complex64::new(1.0, 0.0); 4]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn topk_self_and_bounds() {
        let cfg = ArrayConfig::new(16, 40e9).unwrap();
        let cb = LowerCodebook::with_grid(&cfg, 0.64, 16, 1).unwrap();
        let h: Vec<Complex64> = cb.codeword(0, 5).weights().to_vec();
        let res = exhaustive_search(&cb, &h).unwrap();
        let all = [res.clone()];
        assert_eq!(topk_agreement(&all, &all, 1).unwrap(), 1.0);
        assert_eq!(topk_agreement(&all, &all, cb.len()).unwrap(), 1.0);
        assert!(topk_agreement(&all, &all, 0).is_err());
        assert!(topk_agreement(&all, &all, cb.len() + 1).is_err());
    }
}
