//! Shared fixtures for the benchmarks.

use jetblend_core::flatpoly::{auto_lambda, find_flat_poly};
use jetblend_core::jet::Jet;
use jetblend_core::jetcover::JetCoveringSystem;
use jetblend_core::scalar::ratio;
use jetblend_core::Scalar;

/// Jet covering system for `N` vanishing conditions at the automatic λ.
pub fn jet_system(n_jet: usize) -> JetCoveringSystem {
    let q = find_flat_poly(n_jet, &ratio(1, 16), 64).expect("flat polynomial exists");
    JetCoveringSystem::from_flat(&q, &auto_lambda(&q).expect("threshold below 1")).expect("system builds")
}

/// Jet of `π u` for `u` at fraction `f` of every Δ half-width.
pub fn interior_target(sys: &JetCoveringSystem, f: &Scalar) -> Jet {
    let u: Vec<Scalar> = (0..sys.degree()).map(|k| sys.delta.axis(k).hi() * f).collect();
    let mut x = sys.pi.mul_vec(&u).expect("shapes agree");
    x.reverse();
    Jet::scalar(x).expect("non-empty")
}
