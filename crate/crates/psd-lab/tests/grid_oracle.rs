//! The grid backend against closed-form packet kinematics: evolved
//! densities, centroid motion, and spreading width, each recomputed from
//! the raw samples rather than through the scenario layer.

use psd_core::state::State;
use psd_core::tree::Propagator;
use psd_lab::analytic::GaussianPair;
use psd_lab::formats::grid_centroid;
use psd_lab::grid::{make_gaussian, FourierKit, FreePropagator, GridSpec};

const P0: f64 = 3.0;
const SIGMA_P: f64 = 1.0;
const MASS: f64 = 1.0;

fn setup() -> (GridSpec, FreePropagator, psd_lab::grid::GridWavefunction, GaussianPair) {
    let spec = GridSpec::centered(4096, 256.0);
    let kit = FourierKit::new(spec);
    let (psi, defect) = make_gaussian(&kit, 0.0, P0, SIGMA_P).expect("packet fits the box");
    assert!(defect < 1e-12);
    let prop = FreePropagator::new(kit, MASS);
    (spec, prop, psi, GaussianPair::new(P0, SIGMA_P, MASS))
}

#[test]
fn evolved_density_matches_closed_form_pointwise() {
    let (spec, prop, psi, pair) = setup();
    for &t in &[0.0, 0.7, 2.5, 6.0, 12.0] {
        let evolved = prop.evolve(&psi, t);
        let mut worst = 0.0f64;
        for j in 0..spec.n {
            let want = pair.packet_density(spec.x(j), t, 1.0);
            worst = worst.max((evolved.density(j) - want).abs());
        }
        assert!(worst < 1e-4, "density off by {worst:.3e} at t = {t}");
    }
}

#[test]
fn centroid_rides_the_classical_trajectory() {
    let (spec, prop, psi, pair) = setup();
    for &t in &[0.0, 1.0, 4.0, 9.0] {
        let x = grid_centroid(&prop.evolve(&psi, t)).expect("unit mass");
        assert!(
            (x - pair.center(t)).abs() < 2.0 * spec.dx(),
            "centroid {x} vs {} at t = {t}",
            pair.center(t)
        );
    }
}

#[test]
fn second_moment_tracks_the_spreading_width() {
    let (spec, prop, psi, pair) = setup();
    for &t in &[0.0, 2.0, 8.0] {
        let evolved = prop.evolve(&psi, t);
        let center = grid_centroid(&evolved).unwrap();
        let mut var = 0.0;
        for j in 0..spec.n {
            let u = spec.x(j) - center;
            var += u * u * evolved.density(j) * spec.dx();
        }
        // density `exp(-u^2/s^2)/(sqrt(pi) s)` has variance `s^2 / 2`
        let width = (2.0 * var).sqrt();
        let rel = (width - pair.width(t)).abs() / pair.width(t);
        assert!(rel < 1e-6, "width {width} vs {} at t = {t}", pair.width(t));
    }
}

#[test]
fn norm_is_preserved_over_long_horizons() {
    let (_, prop, psi, _) = setup();
    let n0 = psi.norm2();
    for &t in &[5.0, 50.0, 500.0] {
        let drift = (prop.evolve(&psi, t).norm2() - n0).abs() / n0;
        assert!(drift < 1e-12, "norm drift {drift:.3e} at t = {t}");
    }
}
