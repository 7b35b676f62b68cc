//! Seeded fixtures shared by the benches.

use e1lab_core::corpus::random_potential;
use e1lab_core::rng::SplitMix64;
use e1lab_core::{CircleGrid, Form, Potential};

pub fn form(n: usize) -> Form {
    Form::cosine(CircleGrid::new(n).expect("bench grids are large enough"), 1.6).expect("cosine form is valid")
}

/// Two pole-free random potentials on `form` with maximum 0, so their graphs cross.
pub fn pair(form: &Form, seed: u64) -> (Potential, Potential) {
    let rng = SplitMix64::new(seed);
    let draw = |k| random_potential(form, &mut rng.fork(k), None, (0.0, 0.0)).expect("corpus potential");
    (draw(0), draw(1))
}
