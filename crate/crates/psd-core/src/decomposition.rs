//! Decompositions of a state vector and the refinement order between them.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::state::{self, State};
use crate::tree::Propagator;
use crate::{tol, C64};

/// Finite set of linearly independent states summing to a parent state.
///
/// Element order is incidental (the set is conceptually unordered) but kept
/// stable so witnesses and lineage maps can refer to indices.
#[derive(Debug, Clone)]
pub struct Decomposition<S: State> {
    elements: Vec<S>,
    parent: S,
}

/// Born weights of a decomposition.
///
/// Weights are `‖Ψ_i‖²/‖Ψ‖²`; they form a probability distribution exactly
/// when the elements are orthogonal.  `max_pairwise_overlap` is the largest
/// normalized overlap seen and `orthogonal` says whether it stays below
/// [`tol::ORTHO_WARN`]; weights are still reported otherwise, flagged.
#[derive(Debug, Clone)]
pub struct BornReport {
    pub weights: Vec<f64>,
    pub max_pairwise_overlap: f64,
    pub orthogonal: bool,
}

/// Surjective lineage map exhibiting one decomposition as finer than
/// another: `fine_to_coarse[k]` is the coarse element that fine element `k`
/// contributes to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseningMap {
    pub fine_to_coarse: Vec<usize>,
    pub coarse_len: usize,
}

impl CoarseningMap {
    pub fn new(fine_to_coarse: Vec<usize>, coarse_len: usize) -> Result<Self> {
        let mut hit = vec![false; coarse_len];
        for &j in &fine_to_coarse {
            if j >= coarse_len {
                return Err(Error::InvalidInput(String::from("lineage target out of range")));
            }
            hit[j] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(Error::InvalidInput(String::from("lineage map is not surjective")));
        }
        Ok(Self { fine_to_coarse, coarse_len })
    }

    /// Fine indices feeding coarse element `j`.
    pub fn group(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.fine_to_coarse
            .iter()
            .enumerate()
            .filter_map(move |(k, &t)| (t == j).then_some(k))
    }

    /// Composition `self ∘ earlier`: lineage across two refinement steps.
    pub fn compose(&self, coarser: &CoarseningMap) -> Result<Self> {
        if self.coarse_len != coarser.fine_to_coarse.len() {
            return Err(Error::InvalidInput(String::from("lineage maps do not chain")));
        }
        CoarseningMap::new(
            self.fine_to_coarse
                .iter()
                .map(|&j| coarser.fine_to_coarse[j])
                .collect(),
            coarser.coarse_len,
        )
    }
}

impl<S: State> Decomposition<S> {
    /// Builds a decomposition from its elements, checking linear
    /// independence at the [`tol::RANK_REL`] singular-value threshold.  The
    /// parent is the element sum.
    pub fn new(elements: Vec<S>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyDecomposition);
        }
        let rank = state::family_rank(&elements, tol::RANK_REL);
        if rank < elements.len() {
            return Err(Error::LinearlyDependent { rank, n: elements.len() });
        }
        let parent = state::sum_states(&elements).expect("nonempty");
        Ok(Self { elements, parent })
    }

    /// Trivial decomposition `{Ψ}`.
    pub fn trivial(parent: S) -> Result<Self> {
        Self::new(vec![parent])
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[S] {
        &self.elements
    }

    pub fn parent(&self) -> &S {
        &self.parent
    }

    /// Element-wise evolution `U(t)D`.  Unitarity preserves independence, so
    /// no rank re-check happens here.
    pub fn evolve<P: Propagator<State = S>>(&self, propagator: &P, t: f64) -> Self {
        let elements: Vec<S> = self.elements.iter().map(|e| propagator.evolve(e, t)).collect();
        let parent = state::sum_states(&elements).expect("nonempty");
        Self { elements, parent }
    }

    /// Born weights; errors on a zero parent.
    pub fn born(&self) -> Result<BornReport> {
        let total = self.parent.norm2();
        if total <= 0.0 {
            return Err(Error::InvalidInput(String::from(
                "parent state has zero norm, Born weights undefined",
            )));
        }
        let weights = self.elements.iter().map(|e| e.norm2() / total).collect();
        let mut worst = 0.0f64;
        for i in 0..self.elements.len() {
            for j in (i + 1)..self.elements.len() {
                worst = worst.max(self.elements[i].overlap(&self.elements[j]));
            }
        }
        Ok(BornReport {
            weights,
            max_pairwise_overlap: worst,
            orthogonal: worst <= tol::ORTHO_WARN,
        })
    }
}

/// Decides whether `fine ⪯ coarse`, i.e. every coarse element is the sum of
/// a group of fine elements, the groups partitioning the fine index set.
///
/// Because the fine elements are linearly independent, each coarse element
/// has a unique expansion in them; the map exists exactly when every
/// expansion coefficient is 0 or 1 and the supports partition.  The
/// expansion is solved through the fine Gram matrix, then certified by a
/// direct residual check at relative tolerance [`tol::SUM_MATCH_REL`]; on
/// certification failure with an ill-conditioned Gram matrix a bounded
/// assignment search takes over.
pub fn is_finer<S: State>(
    fine: &Decomposition<S>,
    coarse: &Decomposition<S>,
) -> Result<Option<CoarseningMap>> {
    let nf = fine.len();
    let nc = coarse.len();
    if nc > nf {
        return Ok(None);
    }
    if fine.parent().rel_distance(coarse.parent()) > tol::SUM_MATCH_REL {
        return Ok(None);
    }

    let gram = state::gram(fine.elements());
    let mut assignment: Vec<Option<usize>> = vec![None; nf];
    let mut ok = true;
    'coarse: for (j, cj) in coarse.elements().iter().enumerate() {
        let b = nalgebra::DVector::from_vec(
            fine.elements().iter().map(|f| f.inner(cj)).collect::<Vec<C64>>(),
        );
        let alpha = crate::linalg::psd_solve(&gram, &b, 1e-14);
        for (k, a) in alpha.iter().enumerate() {
            let is_one = (a - C64::new(1.0, 0.0)).norm() < 1e-4;
            let is_zero = a.norm() < 1e-4;
            if is_one {
                if assignment[k].is_some() {
                    ok = false;
                    break 'coarse;
                }
                assignment[k] = Some(j);
            } else if !is_zero {
                ok = false;
                break 'coarse;
            }
        }
    }
    if ok && assignment.iter().all(|a| a.is_some()) {
        let map = CoarseningMap::new(
            assignment.into_iter().map(|a| a.expect("checked")).collect(),
            nc,
        )?;
        if verify_coarsening(fine, coarse, &map) {
            return Ok(Some(map));
        }
    }

    // Either no clean 0/1 expansion or the residual check failed; fall back
    // to searching when the Gram solve cannot be trusted.
    if crate::linalg::psd_condition(&gram) < 1e12 {
        return Ok(None);
    }
    search_coarsening(fine, coarse)
}

/// Residual certification of a candidate lineage map.
pub fn verify_coarsening<S: State>(
    fine: &Decomposition<S>,
    coarse: &Decomposition<S>,
    map: &CoarseningMap,
) -> bool {
    if map.fine_to_coarse.len() != fine.len() || map.coarse_len != coarse.len() {
        return false;
    }
    for (j, cj) in coarse.elements().iter().enumerate() {
        let members: Vec<&S> = map.group(j).map(|k| &fine.elements()[k]).collect();
        if members.is_empty() {
            return false;
        }
        let mut sum = members[0].clone();
        for m in &members[1..] {
            sum = sum.add(m);
        }
        if sum.rel_distance(cj) > tol::SUM_MATCH_REL {
            return false;
        }
    }
    true
}

fn search_coarsening<S: State>(
    fine: &Decomposition<S>,
    coarse: &Decomposition<S>,
) -> Result<Option<CoarseningMap>> {
    let nf = fine.len();
    let nc = coarse.len();
    let states = (nc as u64).checked_pow(u32::try_from(nf).unwrap_or(u32::MAX));
    match states {
        Some(s) if s <= tol::ENUMERATION_CAP => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "lineage search over {nc}^{nf} assignments exceeds the cap"
            )))
        }
    }
    let mut assignment = vec![0usize; nf];
    loop {
        if let Ok(map) = CoarseningMap::new(assignment.clone(), nc) {
            if verify_coarsening(fine, coarse, &map) {
                return Ok(Some(map));
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == nf {
                return Ok(None);
            }
            assignment[k] += 1;
            if assignment[k] < nc {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}
