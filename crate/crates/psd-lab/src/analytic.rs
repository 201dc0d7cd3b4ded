//! Closed-form reference curves for a symmetric pair of free Gaussian
//! packets launched from the origin with momenta `±p0`.
//!
//! Width conventions: densities are `(√π σ)^{−1} e^{−x²/σ²}`, so the
//! position and momentum widths obey `σx·σp = ħ` exactly.

use crate::grid::HBAR;

/// `sqrt(erfc(x))`: the decay profile of the pair proximity.
pub fn sqrt_erfc(x: f64) -> f64 {
    libm::erfc(x).sqrt()
}

/// Symmetric two-packet configuration.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPair {
    pub p0: f64,
    pub sigma_p: f64,
    pub mass: f64,
}

impl GaussianPair {
    pub fn new(p0: f64, sigma_p: f64, mass: f64) -> Self {
        assert!(sigma_p > 0.0 && mass > 0.0 && p0 >= 0.0);
        Self { p0, sigma_p, mass }
    }

    pub fn sigma_x(&self) -> f64 {
        HBAR / self.sigma_p
    }

    /// Center of the right-moving packet, `p0·t/m`.
    pub fn center(&self, t: f64) -> f64 {
        self.p0 * t / self.mass
    }

    /// Spreading width `σ(t) = √(σx² + (ħt/(mσx))²)`.
    pub fn width(&self, t: f64) -> f64 {
        let sx = self.sigma_x();
        let drift = HBAR * t / (self.mass * sx);
        (sx * sx + drift * drift).sqrt()
    }

    /// Evolved density of one packet centered at `sign·center(t)`.
    pub fn packet_density(&self, x: f64, t: f64, sign: f64) -> f64 {
        let s = self.width(t);
        let u = (x - sign * self.center(t)) / s;
        (-u * u).exp() / (core::f64::consts::PI.sqrt() * s)
    }

    /// Separation parameter `f(t) = center(t)/width(t)`, written as
    /// `(p0/σp)·t/√(m²ħ²/σp⁴ + t²)`.
    ///
    /// `f(0) = 0` exactly, `f` is strictly increasing, and
    /// `f(t) → p0/σp` as `t → ∞`.
    pub fn separation(&self, t: f64) -> f64 {
        let a = self.mass * HBAR / (self.sigma_p * self.sigma_p);
        (self.p0 / self.sigma_p) * t / (a * a + t * t).sqrt()
    }

    /// The same function rearranged as `center(t)/width(t)` evaluated
    /// through the packet kinematics; an independent float path used to
    /// cross-check [`Self::separation`].
    pub fn separation_alt(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.center(t) / self.width(t)
    }

    /// Limit of the separation parameter: `p0/σp`.
    pub fn separation_limit(&self) -> f64 {
        self.p0 / self.sigma_p
    }

    /// Overlapping mass of the two evolved densities, `erfc(f(t))`.
    pub fn overlap_mass(&self, t: f64) -> f64 {
        libm::erfc(self.separation(t))
    }

    /// Pair proximity `w_E(t) = √(erfc(f(t)))`: nonincreasing in `t`,
    /// starting at 1 and saturating at `√(erfc(p0/σp))`.
    pub fn decay(&self, t: f64) -> f64 {
        self.overlap_mass(t).sqrt()
    }

    pub fn asymptote(&self) -> f64 {
        sqrt_erfc(self.separation_limit())
    }

    /// First time the decay curve crosses `threshold`, by bisection on
    /// `[0, t_hi]`; `None` when the asymptote stays above the threshold.
    pub fn branch_time(&self, threshold: f64, t_hi: f64) -> Option<f64> {
        assert!(threshold > 0.0 && t_hi > 0.0);
        if self.decay(t_hi) > threshold {
            return None;
        }
        let (mut lo, mut hi) = (0.0f64, t_hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.decay(mid) > threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}
