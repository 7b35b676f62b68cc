//! Weak geodesic segments on the `(x, t)` grid.
//!
//! With `F = U + Q` and `L(Q) = θ`, a subgeodesic is a function of `(x, t)`
//! whose `F` is jointly convex. The default scheme returns the lower convex
//! hull of the two piecewise-linear boundary curves sampled on the grid,
//! which is the largest convex function with those boundary values; in slope
//! variables it is the linear interpolation of the Legendre transforms.
//!
//! [`GeodesicScheme::LatticeStencil`] instead computes the maximal grid
//! function whose second differences along `(1, 0)` and `(a, 1)`, `|a| ≤ N/2`,
//! are nonnegative, by Gauss–Seidel sweeps upward from the hull. Its
//! constraints couple adjacent rows only, so it restricts exactly to
//! sub-intervals, but it stays a fixed distance above the geodesic when `N`
//! and `N_t` are refined together.

use serde::{Deserialize, Serialize};

use crate::energy::{d1_values, energy_of_values};
use crate::envelopes::lattice_primitive;
use crate::error::{Error, Result};
use crate::grid::{osc, Form, Potential};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpacetimeField {
    pub length: f64,
    /// `N_t + 1` rows of `N` values; row `k` is time `k·ℓ/N_t`.
    pub values: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub residual: f64,
}

impl SpacetimeField {
    pub fn n_t(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.length / self.n_t() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn slice(&self, k: usize) -> Potential {
        Potential::pole_free(self.values[k].clone()).expect("slices are finite")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicScheme {
    Hull,
    LatticeStencil,
}

#[derive(Clone, Debug)]
pub struct GeodesicOptions {
    pub scheme: GeodesicScheme,
    /// Stop when the sup-update of a sweep falls below `stop_factor · tol_geo`.
    pub stop_factor: f64,
    pub max_sweeps: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        Self {
            scheme: GeodesicScheme::Hull,
            stop_factor: 1e-2,
            max_sweeps: 2_000_000,
        }
    }
}

pub fn tol_geo(phi0: &[f64], phi1: &[f64]) -> f64 {
    let both: Vec<f64> = phi0.iter().chain(phi1).copied().collect();
    1e-10 * (1.0 + osc(&both))
}

fn validate(form: &Form, phi0: &Potential, phi1: &Potential, length: f64, n_t: usize) -> Result<()> {
    if !phi0.is_pole_free() || !phi1.is_pole_free() {
        return Err(Error::PoleNotAllowed("geodesic endpoints"));
    }
    for u in [phi0, phi1] {
        if u.len() != form.n() {
            return Err(Error::Length {
                expected: form.n(),
                got: u.len(),
            });
        }
    }
    if !(length > 0.0) || n_t < 2 {
        return Err(Error::Parameter(format!(
            "need ℓ > 0 and N_t ≥ 2, got ℓ = {length}, N_t = {n_t}"
        )));
    }
    Ok(())
}

pub fn segment_solve(
    form: &Form,
    phi0: &Potential,
    phi1: &Potential,
    length: f64,
    n_t: usize,
) -> Result<SpacetimeField> {
    segment_solve_with(form, phi0, phi1, length, n_t, &GeodesicOptions::default())
}

pub fn segment_solve_with(
    form: &Form,
    phi0: &Potential,
    phi1: &Potential,
    length: f64,
    n_t: usize,
    opts: &GeodesicOptions,
) -> Result<SpacetimeField> {
    validate(form, phi0, phi1, length, n_t)?;
    let (a, b) = (phi0.values(), phi1.values());
    let mut rows = hull_geodesic(form, a, b, n_t);
    let init = initializer(a, b, length, n_t);
    for (row, lower) in rows.iter_mut().zip(&init) {
        for (u, l) in row.iter_mut().zip(lower) {
            *u = u.max(*l);
        }
    }
    rows[0] = a.to_vec();
    rows[n_t] = b.to_vec();
    if opts.scheme == GeodesicScheme::Hull {
        return Ok(SpacetimeField {
            length,
            values: rows,
            sweeps: 0,
            residual: 0.0,
        });
    }
    let stop = opts.stop_factor * tol_geo(a, b);
    let mut solver = Sweeper::new(form);
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        residual = solver.sweep(&mut rows, sweeps % 2 == 1);
        sweeps += 1;
        if residual < stop {
            return Ok(SpacetimeField {
                length,
                values: rows,
                sweeps,
                residual,
            });
        }
    }
    Err(Error::Divergence {
        what: "segment_solve",
        iterations: sweeps,
        residual,
    })
}

/// `max(φ₀ − A·t, φ₁ − A·(ℓ − t))` with `A = sup|φ₀ − φ₁|/ℓ`.
pub fn initializer(phi0: &[f64], phi1: &[f64], length: f64, n_t: usize) -> Vec<Vec<f64>> {
    let a = phi0.iter().zip(phi1).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / length;
    (0..=n_t)
        .map(|k| {
            let t = k as f64 * length / n_t as f64;
            phi0.iter()
                .zip(phi1)
                .map(|(x, y)| (x - a * t).max(y - a * (length - t)))
                .collect()
        })
        .collect()
}

/// Lower convex hull of the two boundary curves in `(x, t)`, sampled on the grid.
///
/// Vertex pairs sharing a supporting slope are found by merging the two slope
/// sequences; each time row interpolates between the paired vertices.
pub fn hull_geodesic(form: &Form, phi0: &[f64], phi1: &[f64], n_t: usize) -> Vec<Vec<f64>> {
    let n = phi0.len() as isize;
    let mut k = 1isize;
    loop {
        let lo = -k * n;
        let hi = (k + 1) * n;
        let q = lattice_primitive(form.density(), lo, hi);
        let lift = |phi: &[f64]| -> Vec<f64> {
            (lo..=hi)
                .map(|j| phi[j.rem_euclid(n) as usize] + q[(j - lo) as usize])
                .collect()
        };
        let (f0, f1) = (lift(phi0), lift(phi1));
        let slopes = |f: &[f64]| -> Vec<f64> {
            let mut s: Vec<f64> = f.windows(2).map(|w| w[1] - w[0]).collect();
            for i in 1..s.len() {
                s[i] = s[i].max(s[i - 1]);
            }
            s
        };
        let (s0, s1) = (slopes(&f0), slopes(&f1));
        let last = s0.len();
        let mut pairs = Vec::with_capacity(2 * last);
        let (mut i0, mut i1) = (0usize, 0usize);
        while i0 < last && i1 < last {
            if s0[i0] <= s1[i1] {
                i0 += 1;
            } else {
                i1 += 1;
            }
            if i0 > 0 && i1 > 0 && i0 < last && i1 < last {
                pairs.push((i0, i1));
            }
        }
        let covered = match (pairs.first(), pairs.last()) {
            (Some(&(a0, a1)), Some(&(b0, b1))) => lo + (a0.max(a1) as isize) <= -1 && lo + (b0.min(b1) as isize) >= n,
            _ => false,
        };
        if !covered {
            k *= 2;
            continue;
        }
        let mut rows = Vec::with_capacity(n_t + 1);
        rows.push(phi0.to_vec());
        for r in 1..n_t {
            let sigma = r as f64 / n_t as f64;
            let pts: Vec<(f64, f64)> = pairs
                .iter()
                .map(|&(a, b)| {
                    let x = (1.0 - sigma) * (lo + a as isize) as f64 + sigma * (lo + b as isize) as f64;
                    (x, (1.0 - sigma) * f0[a] + sigma * f1[b])
                })
                .collect();
            let mut row = vec![0.0; n as usize];
            let mut seg = 0;
            for j in 0..n {
                let x = j as f64;
                while pts[seg + 1].0 < x {
                    seg += 1;
                }
                let (xa, ya) = pts[seg];
                let (xb, yb) = pts[seg + 1];
                let y = if xb > xa {
                    ya + (yb - ya) * (x - xa) / (xb - xa)
                } else {
                    ya.min(yb)
                };
                row[j as usize] = y - q[(j - lo) as usize];
            }
            rows.push(row);
        }
        rows.push(phi1.to_vec());
        return rows;
    }
}

/// Gauss–Seidel on the t-local wide stencil, with per-node cached argmin.
struct Sweeper {
    n: usize,
    half: isize,
    h2theta: Vec<f64>,
    /// `Q` on indices `−N..2N`.
    q: Vec<f64>,
    argmin: Vec<Vec<isize>>,
}

impl Sweeper {
    fn new(form: &Form) -> Self {
        let n = form.n();
        let h2 = form.h() * form.h();
        Self {
            n,
            half: (n / 2) as isize,
            h2theta: form.density().iter().map(|t| t * h2).collect(),
            q: lattice_primitive(form.density(), -(n as isize), 2 * n as isize),
            argmin: Vec::new(),
        }
    }

    #[inline]
    fn lifted(&self, row: &[f64], j: isize) -> f64 {
        let n = self.n as isize;
        row[j.rem_euclid(n) as usize] + self.q[(j + n) as usize]
    }

    fn sweep(&mut self, rows: &mut [Vec<f64>], backward: bool) -> f64 {
        let n = self.n;
        let n_t = rows.len() - 1;
        if self.argmin.len() != rows.len() {
            self.argmin = vec![vec![0; n]; rows.len()];
        }
        let mut update = 0.0_f64;
        let order: Vec<usize> = if backward {
            (1..n_t).rev().collect()
        } else {
            (1..n_t).collect()
        };
        for r in order {
            let (before, rest) = rows.split_at_mut(r);
            let (mid, after) = rest.split_at_mut(1);
            let prev = &before[r - 1];
            let next = &after[0];
            let cur = &mut mid[0];
            for step in 0..n {
                let i = if backward { n - 1 - step } else { step };
                let ii = i as isize;
                let g = |a: isize| 0.5 * (self.lifted(next, ii + a) + self.lifted(prev, ii - a));
                let mut a = self.argmin[r][i];
                let mut ga = g(a);
                while a < self.half {
                    let gn = g(a + 1);
                    if gn < ga {
                        a += 1;
                        ga = gn;
                    } else {
                        break;
                    }
                }
                while a > -self.half {
                    let gn = g(a - 1);
                    if gn < ga {
                        a -= 1;
                        ga = gn;
                    } else {
                        break;
                    }
                }
                self.argmin[r][i] = a;
                let tb = ga - self.q[i + n];
                let xb = 0.5 * (cur[(i + n - 1) % n] + cur[(i + 1) % n] + self.h2theta[i]);
                let new = tb.min(xb);
                update = update.max((new - cur[i]).abs());
                cur[i] = new;
            }
        }
        update
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedConstants {
    pub m: f64,
    pub big_m: f64,
    pub pair_min: Vec<f64>,
    pub pair_max: Vec<f64>,
    /// Spread of the per-pair infima and suprema.
    pub spread_min: f64,
    pub spread_max: f64,
}

pub fn speed_constants(field: &SpacetimeField) -> SpeedConstants {
    let dt = field.dt();
    let mut pair_min = Vec::with_capacity(field.n_t());
    let mut pair_max = Vec::with_capacity(field.n_t());
    for w in field.values.windows(2) {
        let (lo, hi) = w[1]
            .iter()
            .zip(&w[0])
            .map(|(b, a)| (b - a) / dt)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q)));
        pair_min.push(lo);
        pair_max.push(hi);
    }
    SpeedConstants {
        m: pair_min.iter().copied().fold(f64::INFINITY, f64::min),
        big_m: pair_max.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        spread_min: osc(&pair_min),
        spread_max: osc(&pair_max),
        pair_min,
        pair_max,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicReport {
    pub d1_endpoints: f64,
    /// `max |d₁(φ_t, φ_s) − |t − s|/ℓ · d₁(φ₀, φ_ℓ)|` over slice pairs.
    pub metric_deviation: f64,
    /// `max |I(φ_t) − chord|`.
    pub energy_chord_deviation: f64,
    pub energies: Vec<f64>,
    pub lipschitz_t: f64,
    /// `sup|φ₀ − φ_ℓ|/ℓ`.
    pub lipschitz_bound: f64,
    pub min_t_convexity: f64,
}

pub fn verify_geodesic(form: &Form, field: &SpacetimeField) -> GeodesicReport {
    let rows = &field.values;
    let n_t = field.n_t();
    let d = d1_values(form, &rows[0], &rows[n_t]);
    let mut metric_deviation = 0.0_f64;
    for j in 0..=n_t {
        for k in j + 1..=n_t {
            let want = (k - j) as f64 / n_t as f64 * d;
            metric_deviation = metric_deviation.max((d1_values(form, &rows[j], &rows[k]) - want).abs());
        }
    }
    let energies: Vec<f64> = rows.iter().map(|r| energy_of_values(form, r)).collect();
    let energy_chord_deviation = energies
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let s = k as f64 / n_t as f64;
            (e - ((1.0 - s) * energies[0] + s * energies[n_t])).abs()
        })
        .fold(0.0, f64::max);
    let dt = field.dt();
    let lipschitz_t = rows
        .windows(2)
        .flat_map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (b - a).abs() / dt)
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    let lipschitz_bound = rows[0]
        .iter()
        .zip(&rows[n_t])
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / field.length;
    let min_t_convexity = rows
        .windows(3)
        .flat_map(|w| {
            (0..w[0].len())
                .map(|i| w[0][i] + w[2][i] - 2.0 * w[1][i])
                .collect::<Vec<_>>()
        })
        .fold(f64::INFINITY, f64::min);
    GeodesicReport {
        d1_endpoints: d,
        metric_deviation,
        energy_chord_deviation,
        energies,
        lipschitz_t,
        lipschitz_bound,
        min_t_convexity: if n_t >= 2 { min_t_convexity } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{poisson_solve, CircleGrid};

    #[test]
    fn shift_geodesic_is_affine() {
        let form = Form::cosine(CircleGrid::new(32).unwrap(), 0.8).unwrap();
        let m: Vec<f64> = (0..32).map(|i| 1.0 + 0.5 * (i as f64 * 0.3).sin()).collect();
        let mass = m.iter().sum::<f64>() / 32.0;
        let m: Vec<f64> = m.iter().map(|v| v / mass).collect();
        let phi = poisson_solve(&form, &m).unwrap();
        let field = segment_solve(&form, &phi, &phi.add_constant(0.7), 1.0, 8).unwrap();
        for (k, row) in field.values.iter().enumerate() {
            let want = 0.7 * k as f64 / 8.0;
            for (u, p) in row.iter().zip(phi.values()) {
                assert!((u - p - want).abs() < 1e-9);
            }
        }
        let sc = speed_constants(&field);
        assert!((sc.m - 0.7).abs() < 1e-8 && (sc.big_m - 0.7).abs() < 1e-8);
        assert!(verify_geodesic(&form, &field).metric_deviation < 1e-9);
    }

    #[test]
    fn lattice_stencil_restricts_exactly() {
        let form = Form::cosine(CircleGrid::new(24).unwrap(), 1.5).unwrap();
        let m0: Vec<f64> = (0..24).map(|i| 1.0 + 0.6 * (i as f64 * 0.5).cos()).collect();
        let m1: Vec<f64> = (0..24).map(|i| 1.0 + 0.8 * (i as f64 * 0.26).sin()).collect();
        let norm = |m: Vec<f64>| {
            let mass = m.iter().sum::<f64>() / 24.0;
            m.into_iter().map(|v| v / mass).collect::<Vec<_>>()
        };
        let a = poisson_solve(&form, &norm(m0)).unwrap();
        let b = poisson_solve(&form, &norm(m1)).unwrap().add_constant(-0.3);
        let opts = GeodesicOptions {
            scheme: GeodesicScheme::LatticeStencil,
            ..Default::default()
        };
        let full = segment_solve_with(&form, &a, &b, 1.0, 8, &opts).unwrap();
        let half = segment_solve_with(&form, &a, &full.slice(4), 0.5, 4, &opts).unwrap();
        let tol = tol_geo(a.values(), b.values());
        for k in 0..=4 {
            assert!(crate::grid::sup_norm_diff(&full.values[k], &half.values[k]) <= 2.0 * tol);
        }
    }
}
