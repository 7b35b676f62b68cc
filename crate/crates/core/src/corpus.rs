//! Seeded generators for measures, potentials and obstacles.

use std::f64::consts::PI;

use crate::error::Result;
use crate::grid::{solve_periodic, Form, Pole, Potential};
use crate::rng::SplitMix64;

/// Squared random trigonometric polynomial of degree `modes`, scaled to `mass`.
pub fn random_measure(rng: &mut SplitMix64, n: usize, modes: usize, mass: f64) -> Vec<f64> {
    let c0 = rng.uniform(0.3, 1.0);
    let coef: Vec<(f64, f64)> = (0..modes)
        .map(|k| {
            let amp = 1.0 / (k + 1) as f64;
            (amp * rng.uniform(-1.0, 1.0), amp * rng.uniform(-1.0, 1.0))
        })
        .collect();
    let raw: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let p = coef.iter().enumerate().fold(c0, |acc, (k, (a, b))| {
                let w = 2.0 * PI * (k + 1) as f64 * x;
                acc + a * w.cos() + b * w.sin()
            });
            p * p
        })
        .collect();
    let total = raw.iter().sum::<f64>() / n as f64;
    raw.into_iter().map(|v| v * mass / total).collect()
}

/// Potential whose measure is a random density, with an optional pole.
///
/// The regular part solves `L(g) = m − (θ − c)` so the cone holds with the
/// density `m`; the full maximum is moved to a random level in `shift`.
pub fn random_potential(
    form: &Form,
    rng: &mut SplitMix64,
    pole: Option<(usize, f64)>,
    shift: (f64, f64),
) -> Result<Potential> {
    let n = form.n();
    let c = pole.map_or(0.0, |p| p.1);
    let m = random_measure(rng, n, 4, 1.0 - c);
    let rhs: Vec<f64> = m.iter().zip(form.density()).map(|(a, t)| a - t + c).collect();
    let g = solve_periodic(&rhs)?;
    let poles: Vec<Pole> = pole.map(|(node, mass)| Pole { node, mass }).into_iter().collect();
    let u = Potential::new(g, poles)?;
    let top = u.full_values().into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(u.add_constant(rng.uniform(shift.0, shift.1) - top))
}

/// Mixed corpus item: with probability `pole_prob` a pole of mass in
/// `[0.1, 0.6]` sits at a random marked node.
pub fn corpus_potential(form: &Form, rng: &mut SplitMix64, marked: &[usize], pole_prob: f64) -> Result<Potential> {
    let pole = if !marked.is_empty() && rng.next_f64() < pole_prob {
        Some((marked[rng.index(marked.len())], rng.uniform(0.1, 0.6)))
    } else {
        None
    };
    random_potential(form, rng, pole, (-0.5, 0.5))
}

/// Random trigonometric obstacle of size about `amp`, plus per-node noise of
/// size `noise·amp`. With `noise = 0` the samples come from one continuous
/// function, so the same seed gives consistent obstacles across `n`.
pub fn random_obstacle(rng: &mut SplitMix64, n: usize, amp: f64, noise: f64) -> Vec<f64> {
    let a: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let b: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
    (0..n)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / n as f64;
            let s: f64 = (0..3)
                .map(|k| (a[k] * ((k + 1) as f64 * x).cos() + b[k] * ((k + 1) as f64 * x).sin()) / (k + 1) as f64)
                .sum();
            amp * s + noise * amp * rng.uniform(-1.0, 1.0)
        })
        .collect()
}
