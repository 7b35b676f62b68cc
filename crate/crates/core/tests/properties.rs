//! Invariants over seeded random inputs.

use e1lab_core::corpus::{corpus_potential, random_measure, random_potential};
use e1lab_core::energy::{d1, i1};
use e1lab_core::envelopes::tol_env;
use e1lab_core::geodesics::{segment_solve_with, tol_geo, GeodesicOptions};
use e1lab_core::grid::{rotate, sup_norm_diff};
use e1lab_core::oracle::{dense_solve, enumerate_envelope};
use e1lab_core::rng::SplitMix64;
use e1lab_core::*;
use proptest::prelude::*;

const MARKED: [usize; 2] = [0, 5];

fn form(n: usize, a: f64) -> Form {
    Form::cosine(CircleGrid::new(n).unwrap(), a).unwrap()
}

fn pot(f: &Form, seed: u64) -> Potential {
    random_potential(f, &mut SplitMix64::new(seed), None, (-0.5, 0.5)).unwrap()
}

fn crossing(f: &Form, seed: u64) -> Potential {
    random_potential(f, &mut SplitMix64::new(seed), None, (0.0, 0.0)).unwrap()
}

fn mixed(f: &Form, seed: u64) -> Potential {
    corpus_potential(f, &mut SplitMix64::new(seed), &MARKED, 0.5).unwrap()
}

/// `L(g) = m − θ` with `Σg = 0`, by dense elimination.
fn dense_poisson(f: &Form, m: &[f64]) -> Vec<f64> {
    let n = f.n();
    let inv_h2 = (n * n) as f64;
    let mut a = vec![vec![0.0; n]; n];
    let mut b: Vec<f64> = m.iter().zip(f.density()).map(|(m, t)| m - t).collect();
    for i in 0..n - 1 {
        a[i][(i + n - 1) % n] += inv_h2;
        a[i][i] -= 2.0 * inv_h2;
        a[i][(i + 1) % n] += inv_h2;
    }
    a[n - 1] = vec![1.0; n];
    b[n - 1] = 0.0;
    let g = dense_solve(a, b).unwrap();
    let top = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    g.into_iter().map(|x| x - top).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn poisson_matches_dense_solve(seed in any::<u64>(), n in 8usize..=24, a in 0.0f64..3.0) {
        let f = form(n, a);
        let m = random_measure(&mut SplitMix64::new(seed), n, 3, 1.0);
        let g = poisson_solve(&f, &m).unwrap();
        prop_assert!(sup_norm_diff(g.values(), &dense_poisson(&f, &m)) <= 1e-10);
    }

    #[test]
    fn green_is_translation_equivariant(n in 8usize..=64, p in 0usize..64, k in 0usize..64) {
        let (p, k) = (p % n, k % n);
        let grid = CircleGrid::new(n).unwrap();
        let g0 = green_function(grid, 0).unwrap();
        let gp = green_function(grid, p).unwrap();
        let gk = green_function(grid, (p + k) % n).unwrap();
        prop_assert!(sup_norm_diff(&rotate(&g0, p as isize), &gp) <= 1e-12);
        prop_assert!(sup_norm_diff(&rotate(&gp, k as isize), &gk) <= 1e-12);
    }

    #[test]
    fn measure_mass_is_conserved(seed in any::<u64>(), n in 8usize..=64) {
        let f = form(n, 1.6);
        let u = mixed(&f, seed);
        let m = ma_measure(&f, &u).unwrap();
        prop_assert!((m.mass + u.total_pole_mass() + m.mass_defect - 1.0).abs() <= 1e-12);
        prop_assert!(m.density.iter().all(|&d| d >= -f.tol_pos()));
    }

    #[test]
    fn envelope_matches_enumeration(seed in any::<u64>(), n in 8usize..=11, a in 0.0f64..2.5) {
        let f = form(n, a);
        let mut rng = SplitMix64::new(seed);
        let obstacle: Vec<f64> = (0..n).map(|_| rng.uniform(-0.05, 0.05)).collect();
        let w = envelope_below(&f, &Obstacle::from_values(obstacle.clone())).into_potential().unwrap();
        let oracle = enumerate_envelope(f.density(), &obstacle).unwrap();
        prop_assert!(sup_norm_diff(w.values(), &oracle) <= 1e-9);
    }

    #[test]
    fn envelope_is_below_and_subharmonic(seed in any::<u64>(), n in 16usize..=128) {
        let f = form(n, 1.6);
        let (u, v) = (mixed(&f, seed), mixed(&f, seed ^ 1));
        let ob = min_obstacle(&u, &v);
        if let Some(w) = envelope_below(&f, &ob).potential {
            let full = w.full_values();
            prop_assert!(full.iter().zip(&ob.values).all(|(a, b)| *a <= b + tol_env(&ob.values)));
            prop_assert!(theta_sh_check(&f, &w, f.tol_pos()).ok);
        }
    }

    #[test]
    fn hull_and_psor_agree(seed in any::<u64>(), n in 16usize..=64) {
        let f = form(n, 1.6);
        let ob = min_obstacle(&crossing(&f, seed), &crossing(&f, seed ^ 7));
        let hull = envelope_below(&f, &ob).into_potential().unwrap();
        let opts = EnvelopeOptions { method: EnvelopeMethod::ProjectedSor, ..Default::default() };
        let psor = envelope_below_with(&f, &ob, &opts).into_potential().unwrap();
        prop_assert!(sup_norm_diff(hull.values(), psor.values()) <= 1e-7);
    }

    #[test]
    fn metric_axioms(seed in any::<u64>(), n in 16usize..=128) {
        let f = form(n, 1.6);
        let (u, v, w) = (mixed(&f, seed), mixed(&f, seed ^ 1), mixed(&f, seed ^ 2));
        let duv = d1(&f, &u, &v).unwrap();
        prop_assert_eq!(duv, d1(&f, &v, &u).unwrap());
        prop_assert!(duv >= -1e-12);
        prop_assert!(d1(&f, &u, &u).unwrap().abs() <= 1e-12);
        prop_assert!(duv <= d1(&f, &u, &w).unwrap() + d1(&f, &w, &v).unwrap() + 1e-8);
        let i = i1(&f, &u, &v);
        prop_assert!(i / 24.0 <= duv && duv <= i + 1e-9);
    }

    #[test]
    fn distance_is_rotation_invariant(seed in any::<u64>(), n in 16usize..=64, k in 0isize..64) {
        let f = form(n, 1.6);
        let (u, v) = (pot(&f, seed), pot(&f, seed ^ 3));
        let d = d1(&f, &u, &v).unwrap();
        let dr = d1(&f.rotated(k), &u.rotated(k), &v.rotated(k)).unwrap();
        prop_assert!((d - dr).abs() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn geodesic_endpoints_and_convexity(seed in any::<u64>(), n in 16usize..=48) {
        let f = form(n, 1.6);
        let (u, v) = (pot(&f, seed), pot(&f, seed ^ 5));
        let field = segment_solve_with(&f, &u, &v, 1.0, 8, &GeodesicOptions::default()).unwrap();
        let tol = tol_geo(u.values(), v.values());
        prop_assert!(sup_norm_diff(&field.values[0], u.values()) <= tol);
        prop_assert!(sup_norm_diff(&field.values[8], v.values()) <= tol);
        for k in 1..8 {
            for i in 0..n {
                let second = field.values[k - 1][i] - 2.0 * field.values[k][i] + field.values[k + 1][i];
                prop_assert!(second >= -tol);
            }
            prop_assert!(theta_sh_check(&f, &field.slice(k), f.tol_pos()).ok);
        }
    }

    #[test]
    fn forks_are_reproducible(seed in any::<u64>(), k in any::<u64>()) {
        let a: Vec<u64> = { let mut r = SplitMix64::new(seed).fork(k); (0..4).map(|_| r.next_u64()).collect() };
        let b: Vec<u64> = { let mut r = SplitMix64::new(seed).fork(k); (0..4).map(|_| r.next_u64()).collect() };
        prop_assert_eq!(a, b);
    }
}
