//! Inner-product state abstraction.

use alloc::vec::Vec;
use nalgebra::DMatrix;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::C64;

/// A vector in a complex inner-product space.
///
/// Implementations are value types: operations return fresh states.  The
/// inner product is conjugate-linear in `self` and linear in `other`.
pub trait State: Clone {
    fn inner(&self, other: &Self) -> C64;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, factor: C64) -> Self;

    fn norm2(&self) -> f64 {
        self.inner(self).re.max(0.0)
    }

    fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// Normalized overlap `|⟨a|b⟩| / (‖a‖·‖b‖)`; zero states overlap nothing.
    fn overlap(&self, other: &Self) -> f64 {
        let d = self.norm() * other.norm();
        if d == 0.0 {
            0.0
        } else {
            self.inner(other).norm() / d
        }
    }

    /// Relative distance `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
    fn rel_distance(&self, other: &Self) -> f64 {
        let scale = self.norm().max(other.norm()).max(f64::MIN_POSITIVE);
        self.sub(other).norm() / scale
    }
}

/// Sum of a nonempty slice of states.
pub fn sum_states<S: State>(items: &[S]) -> Option<S> {
    let (first, rest) = items.split_first()?;
    let mut acc = first.clone();
    for s in rest {
        acc = acc.add(s);
    }
    Some(acc)
}

/// Gram matrix `G[i][j] = ⟨items[i], items[j]⟩`.
pub fn gram<S: State>(items: &[S]) -> DMatrix<C64> {
    let n = items.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = items[i].inner(&items[j]);
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
    }
    g
}

/// Numerical rank of a state family via its Gram matrix.
///
/// Singular values of the family are the square roots of the Gram
/// eigenvalues; a direction counts toward the rank while its singular value
/// stays above `rel_tol` times the largest one.  The eigensolve itself
/// carries `O(n·ε)` relative noise, so the effective floor on the
/// eigenvalue ratio is clamped above that noise; families are resolved as
/// dependent only when a relative singular value drops below roughly `1e-7`.
pub fn family_rank<S: State>(items: &[S], rel_tol: f64) -> usize {
    let g = gram(items);
    let eig = crate::linalg::hermitian_eigenvalues(&g);
    let top = eig.iter().fold(0.0f64, |a, &b| a.max(b.max(0.0)));
    if top == 0.0 {
        return 0;
    }
    let noise = 64.0 * items.len() as f64 * f64::EPSILON;
    let floor = (rel_tol * rel_tol).max(noise);
    eig.iter().filter(|&&l| l.max(0.0) > floor * top).count()
}

/// Norms `‖Σ_{i∈I} items[i]‖` for every subset bitmask `I` of the family,
/// computed from the Gram matrix.  Index `0` is the empty set (norm zero).
pub fn subset_norms<S: State>(items: &[S]) -> Vec<f64> {
    let n = items.len();
    let g = gram(items);
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0u32..(1 << n) {
        let mut acc = 0.0;
        for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    acc += g[(i, j)].re;
                }
            }
        }
        out.push(acc.max(0.0).sqrt());
    }
    out
}
