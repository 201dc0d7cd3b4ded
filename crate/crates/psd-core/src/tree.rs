//! Decomposition trees: families of decompositions refining one another
//! along an evolution, and the branches they define.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::decomposition::{CoarseningMap, Decomposition};
use crate::error::{Error, Result};
use crate::proximity::{w_general, MeasureBackend, WMode, WReport};
use crate::state::State;
use crate::tol;

/// Unitary evolution family `U(t)`; `t` may be negative and
/// `U(s)U(t) = U(s+t)` is expected to hold to numerical accuracy.
pub trait Propagator {
    type State: State;

    fn evolve(&self, s: &Self::State, t: f64) -> Self::State;
}

/// One refinement stage of a tree: the decomposition holding from `time`
/// on, with the lineage map into the previous stage (the root counts as a
/// one-element stage).
#[derive(Debug, Clone)]
pub struct TreeStage<S: State> {
    pub time: f64,
    pub decomposition: Decomposition<S>,
    pub lineage: CoarseningMap,
}

/// Root state at time zero plus successively finer decompositions at
/// strictly increasing times.
///
/// The defining property, checked by [`SpatialTree::validate`]: evolving
/// stage `i` forward to the next stage time makes each of its elements the
/// sum of its lineage group in stage `i+1`, and every stage sums to the
/// evolved root.
#[derive(Debug, Clone)]
pub struct SpatialTree<S: State> {
    root: S,
    stages: Vec<TreeStage<S>>,
}

/// One validation item: a named residual against its tolerance.
#[derive(Debug, Clone)]
pub struct TreeCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Outcome of [`SpatialTree::validate`].
#[derive(Debug, Clone)]
pub struct TreeValidation {
    pub checks: Vec<TreeCheck>,
    pub ok: bool,
}

/// A branch: one leaf of the final stage together with its ancestor element
/// at every stage and its Born weight.
#[derive(Debug, Clone)]
pub struct Branch {
    pub leaf: usize,
    /// `ancestors[i]` is the element index at stage `i` this branch
    /// occupies; the last entry equals `leaf`.
    pub ancestors: Vec<usize>,
    pub weight: f64,
}

impl<S: State> SpatialTree<S> {
    /// Assembles a tree, checking shapes: strictly increasing positive stage
    /// times and lineage maps chaining stage sizes (the first stage maps
    /// onto the trivial root decomposition).
    pub fn new(root: S, stages: Vec<TreeStage<S>>) -> Result<Self> {
        let mut prev_time = 0.0;
        let mut prev_len = 1usize;
        for (i, stage) in stages.iter().enumerate() {
            if !(stage.time > prev_time) {
                return Err(Error::InvalidInput(format!(
                    "stage {i} time {} does not increase past {}",
                    stage.time, prev_time
                )));
            }
            if stage.lineage.coarse_len != prev_len
                || stage.lineage.fine_to_coarse.len() != stage.decomposition.len()
            {
                return Err(Error::InvalidInput(format!("stage {i} lineage shape mismatch")));
            }
            if stage.decomposition.len() < prev_len {
                return Err(Error::InvalidInput(format!(
                    "stage {i} is coarser than its predecessor"
                )));
            }
            prev_time = stage.time;
            prev_len = stage.decomposition.len();
        }
        Ok(Self { root, stages })
    }

    pub fn root(&self) -> &S {
        &self.root
    }

    pub fn stages(&self) -> &[TreeStage<S>] {
        &self.stages
    }

    pub fn leaf_count(&self) -> usize {
        self.stages.last().map_or(1, |s| s.decomposition.len())
    }

    /// Full numerical validation against a propagator.
    ///
    /// Residuals are relative; sums are checked at [`tol::SUM_MATCH_REL`].
    /// Orthogonality propagation is reported as a check: when the final
    /// stage is orthogonal every earlier stage must be as well, so a
    /// violation indicates an inconsistent tree rather than a mere warning.
    pub fn validate<P>(&self, propagator: &P) -> TreeValidation
    where
        P: Propagator<State = S>,
    {
        let mut checks = Vec::new();
        let mut push = |name: String, residual: f64, tolerance: f64| {
            checks.push(TreeCheck { name, residual, tolerance, passed: residual <= tolerance });
        };

        for (i, stage) in self.stages.iter().enumerate() {
            let evolved_root = propagator.evolve(&self.root, stage.time);
            let sum = stage.decomposition.parent();
            push(
                format!("stage {i}: elements sum to evolved root"),
                sum.rel_distance(&evolved_root),
                tol::SUM_MATCH_REL,
            );

            let (coarse_elements, dt): (Vec<S>, f64) = if i == 0 {
                (vec![self.root.clone()], stage.time)
            } else {
                let prev = &self.stages[i - 1];
                (
                    prev.decomposition.elements().to_vec(),
                    stage.time - prev.time,
                )
            };
            for (j, coarse) in coarse_elements.iter().enumerate() {
                let target = propagator.evolve(coarse, dt);
                let mut members = stage.lineage.group(j);
                let sum = match members.next() {
                    None => continue, // surjectivity guaranteed at construction
                    Some(first) => {
                        let mut acc = stage.decomposition.elements()[first].clone();
                        for k in members {
                            acc = acc.add(&stage.decomposition.elements()[k]);
                        }
                        acc
                    }
                };
                push(
                    format!("stage {i}: lineage group {j} sums to evolved parent element"),
                    sum.rel_distance(&target),
                    tol::SUM_MATCH_REL,
                );
            }
        }

        if let Some(last) = self.stages.last() {
            let leaf_overlap = max_overlap(last.decomposition.elements());
            if leaf_overlap <= tol::ORTHO_WARN {
                for (i, stage) in self.stages.iter().enumerate().rev().skip(1) {
                    push(
                        format!("stage {i}: orthogonality propagates from the final stage"),
                        max_overlap(stage.decomposition.elements()),
                        tol::ORTHO_WARN * 10.0,
                    );
                }
            }
        }

        let ok = checks.iter().all(|c| c.passed);
        TreeValidation { checks, ok }
    }

    /// Index of the stage in force at time `t`, `None` before the first
    /// stage time.
    pub fn stage_at(&self, t: f64) -> Option<usize> {
        let mut current = None;
        for (i, stage) in self.stages.iter().enumerate() {
            if t >= stage.time {
                current = Some(i);
            } else {
                break;
            }
        }
        current
    }

    /// The decomposition-valued trajectory of the tree: the stage in force
    /// at `t`, evolved from its stage time to `t`; before the first stage
    /// the trivial decomposition of the evolved root.
    pub fn snapshot<P>(&self, propagator: &P, t: f64) -> Result<Decomposition<S>>
    where
        P: Propagator<State = S>,
    {
        match self.stage_at(t) {
            None => Decomposition::trivial(propagator.evolve(&self.root, t)),
            Some(i) => {
                let stage = &self.stages[i];
                Ok(stage.decomposition.evolve(propagator, t - stage.time))
            }
        }
    }

    /// Branches in leaf order: each leaf of the final stage with its chain
    /// of ancestor indices and Born weight.  The correspondence between
    /// leaves and branches is a bijection by construction.
    pub fn branches(&self) -> Result<Vec<Branch>> {
        let Some(last) = self.stages.last() else {
            return Ok(vec![Branch { leaf: 0, ancestors: Vec::new(), weight: 1.0 }]);
        };
        let born = last.decomposition.born()?;
        let n_leaves = last.decomposition.len();
        let mut out = Vec::with_capacity(n_leaves);
        for leaf in 0..n_leaves {
            let mut ancestors = vec![0usize; self.stages.len()];
            ancestors[self.stages.len() - 1] = leaf;
            let mut idx = leaf;
            for i in (1..self.stages.len()).rev() {
                idx = self.stages[i].lineage.fine_to_coarse[idx];
                ancestors[i - 1] = idx;
            }
            out.push(Branch { leaf, ancestors, weight: born.weights[leaf] });
        }
        Ok(out)
    }

    /// State occupied by a branch at time `t`: its ancestor element at the
    /// stage in force, evolved to `t` (the evolved root before branching).
    pub fn branch_state<P>(&self, propagator: &P, branch: &Branch, t: f64) -> S
    where
        P: Propagator<State = S>,
    {
        match self.stage_at(t) {
            None => propagator.evolve(&self.root, t),
            Some(i) => {
                let stage = &self.stages[i];
                let element = &stage.decomposition.elements()[branch.ancestors[i]];
                propagator.evolve(element, t - stage.time)
            }
        }
    }
}

fn max_overlap<S: State>(elements: &[S]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..elements.len() {
        for j in (i + 1)..elements.len() {
            worst = worst.max(elements[i].overlap(&elements[j]));
        }
    }
    worst
}

/// Time-supremum proximity of a whole tree, sampled on `times`.
#[derive(Debug, Clone)]
pub struct TreeWPlus {
    /// Maximum of the snapshot proximity over the samples.
    pub report: WReport,
    /// The same supremum computed stage-wise: every stage decomposition
    /// evolved across all later sample times.  Agrees with the direct value
    /// when the tree is consistent (coarsening can only lower proximity).
    pub stage_max: f64,
    /// `stage_max − report.value` (nonnegative up to roundoff).
    pub discrepancy: f64,
}

/// Computes the sampled tree proximity supremum along with its stage-wise
/// cross-check.
pub fn w_plus_tree<B, P, S>(
    backend: &B,
    tree: &SpatialTree<S>,
    propagator: &P,
    times: &[f64],
    mode: WMode,
) -> Result<TreeWPlus>
where
    S: State,
    B: MeasureBackend<State = S>,
    P: Propagator<State = S>,
{
    if times.is_empty() {
        return Err(Error::InvalidInput(String::from("need at least one sample time")));
    }
    let mut direct = WReport {
        value: 0.0,
        method: crate::proximity::WMethod::ExactTwo,
        certified: false,
        witness: Vec::new(),
        achieving_time: None,
        sampled: true,
    };
    let mut have_direct = false;
    let mut stage_max = 0.0f64;
    for (i, stage) in tree.stages().iter().enumerate() {
        for &t in times.iter().filter(|&&t| t >= stage.time) {
            let evolved = stage.decomposition.evolve(propagator, t - stage.time);
            let mut r = w_general(backend, &evolved, mode)?;
            stage_max = stage_max.max(r.value);
            if tree.stage_at(t) == Some(i) && (!have_direct || r.value > direct.value) {
                r.achieving_time = Some(t);
                r.sampled = true;
                r.certified = false;
                direct = r;
                have_direct = true;
            }
        }
    }
    let discrepancy = stage_max - direct.value;
    Ok(TreeWPlus { report: direct, stage_max, discrepancy })
}
