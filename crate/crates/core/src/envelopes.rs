//! Obstacle problems: `P(f)`, `V_θ`, rooftops and `P[ψ](φ)`.
//!
//! Poles are handled by reduction: with total obstacle pole mass `c`, the
//! envelope is `g + Σ c_p G_p` where `g` is the pole-free envelope of
//! `f − Σ c_p G_p` for the form `θ − c`.
//!
//! The default solver is exact. Writing `F = w + Q` with `L(Q) = θ` on the
//! unrolled lattice, the cone condition says `F` is discrete convex, so the
//! envelope is the lower convex hull of `f + Q` minus `Q`. `Q` is
//! quasi-periodic, so the hull is taken over a window of `2K + 1` periods and
//! `K` is doubled until the periodized central period is feasible; a feasible
//! candidate that dominates the envelope is the envelope. A few projected SOR
//! sweeps then certify the fixed point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{add_pole_parts, min_obstacle, min_obstacle_many, osc, Form, Obstacle, Potential};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMethod {
    /// Convex hull on the unrolled lattice, then a projected SOR polish.
    Hull,
    /// Projected SOR from the obstacle down, with drift-based infeasibility detection.
    ProjectedSor,
}

#[derive(Clone, Debug)]
pub struct EnvelopeOptions {
    pub method: EnvelopeMethod,
    pub omega: f64,
    pub max_sweeps: usize,
    pub drift_floor: f64,
    pub k_div: usize,
    pub polish_sweeps: usize,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            method: EnvelopeMethod::Hull,
            omega: 1.5,
            max_sweeps: 1_000_000,
            drift_floor: 1e-6,
            k_div: 50,
            polish_sweeps: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeResult {
    /// `None` is BOTTOM.
    pub potential: Option<Potential>,
    pub contact_mask: Vec<bool>,
    pub iterations: usize,
    pub residual: f64,
}

impl EnvelopeResult {
    pub fn is_bottom(&self) -> bool {
        self.potential.is_none()
    }

    pub fn potential(&self) -> Result<&Potential> {
        self.potential.as_ref().ok_or(Error::Bottom)
    }

    pub fn into_potential(self) -> Result<Potential> {
        self.potential.ok_or(Error::Bottom)
    }
}

pub fn tol_env(f: &[f64]) -> f64 {
    1e-12 * (1.0 + osc(f))
}

pub fn tol_contact(f: &[f64]) -> f64 {
    1e-8 * (1.0 + osc(f))
}

pub fn envelope_below(form: &Form, f: &Obstacle) -> EnvelopeResult {
    envelope_below_with(form, f, &EnvelopeOptions::default())
}

pub fn envelope_below_with(form: &Form, f: &Obstacle, opts: &EnvelopeOptions) -> EnvelopeResult {
    let n = form.n();
    assert_eq!(f.len(), n, "obstacle length must match the grid");
    let c_total = f.total_pole_mass();
    let theta: Vec<f64> = form.density().iter().map(|t| t - c_total).collect();
    let mut reduced = f.values.clone();
    add_pole_parts(&mut reduced, &f.poles, -1.0);
    let tol = tol_env(&f.values);

    let (w, iterations, residual) = match opts.method {
        EnvelopeMethod::Hull => match hull_envelope(&theta, &reduced) {
            HullOutcome::Bottom => (None, 1, 0.0),
            HullOutcome::Solved(w, attempts) => {
                let (w, sweeps, res) = polish(&theta, &reduced, w, opts.omega, tol, opts.polish_sweeps);
                (Some(w), attempts + sweeps, res)
            }
            HullOutcome::WindowExhausted => {
                let out = psor(&theta, &reduced, reduced.clone(), opts, tol, false);
                (out.0, out.1, out.2)
            }
        },
        EnvelopeMethod::ProjectedSor => psor(&theta, &reduced, reduced.clone(), opts, tol, true),
    };

    match w {
        None => EnvelopeResult {
            potential: None,
            contact_mask: vec![false; n],
            iterations,
            residual,
        },
        Some(w) => {
            let tc = tol_contact(&f.values);
            let contact_mask = w.iter().zip(&reduced).map(|(a, b)| *a >= b - tc).collect();
            let potential = Potential::new(w, f.poles.clone()).expect("envelope potential is valid");
            EnvelopeResult {
                potential: Some(potential),
                contact_mask,
                iterations,
                residual,
            }
        }
    }
}

/// Pole-free envelope of plain values for the unreduced form (always feasible).
pub(crate) fn envelope_values(form: &Form, f: &[f64]) -> Vec<f64> {
    match hull_envelope(form.density(), f) {
        HullOutcome::Solved(w, _) => w,
        _ => envelope_below(form, &Obstacle::from_values(f.to_vec()))
            .into_potential()
            .expect("unit mass envelope is feasible")
            .values()
            .to_vec(),
    }
}

enum HullOutcome {
    Bottom,
    Solved(Vec<f64>, usize),
    WindowExhausted,
}

const MAX_WINDOW: usize = 1 << 24;

/// `Q` on lattice indices `lo..=hi` with `Q_{j+1} − 2Q_j + Q_{j−1} = h²θ_j`,
/// `Q_0 = 0`, and central-period slopes of zero mean.
pub(crate) fn lattice_primitive(theta: &[f64], lo: isize, hi: isize) -> Vec<f64> {
    let n = theta.len() as isize;
    let h2 = 1.0 / (n * n) as f64;
    let th = |j: isize| theta[j.rem_euclid(n) as usize] * h2;
    // s_j = Q_{j+1} − Q_j.
    let mut central = vec![0.0; n as usize];
    for j in 1..n as usize {
        central[j] = central[j - 1] + th(j as isize);
    }
    let base = -central.iter().sum::<f64>() / n as f64;
    let len = (hi - lo + 1) as usize;
    let mut q = vec![0.0; len];
    let idx = |j: isize| (j - lo) as usize;
    let mut s = base;
    for j in 0..hi {
        if j > 0 {
            s += th(j);
        }
        q[idx(j + 1)] = q[idx(j)] + s;
    }
    let mut s = base;
    for j in (lo..0).rev() {
        // s currently holds s_{j+1}; step back to s_j.
        s -= th(j + 1);
        q[idx(j)] = q[idx(j + 1)] - s;
    }
    q
}

fn hull_envelope(theta: &[f64], f: &[f64]) -> HullOutcome {
    let n = theta.len();
    let h = 1.0 / n as f64;
    let mass = h * theta.iter().sum::<f64>();
    let scale = 1.0 + theta.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    if mass < -1e-12 * scale {
        return HullOutcome::Bottom;
    }
    if mass.abs() <= 1e-13 * scale {
        return HullOutcome::Solved(zero_mass_envelope(theta, f), 1);
    }
    let mut k = 1usize;
    let mut attempts = 0;
    while (2 * k + 1) * n <= MAX_WINDOW {
        attempts += 1;
        let (w, qscale) = windowed_hull(theta, f, k);
        if seams_feasible(theta, &w, qscale) {
            return HullOutcome::Solved(w, attempts);
        }
        k *= 2;
    }
    HullOutcome::WindowExhausted
}

fn zero_mass_envelope(theta: &[f64], f: &[f64]) -> Vec<f64> {
    let n = theta.len();
    let q = lattice_primitive(theta, 0, n as isize);
    let b = q[n] / n as f64;
    let a = (0..n).map(|j| f[j] - b * j as f64 + q[j]).fold(f64::INFINITY, f64::min);
    (0..n).map(|j| a + b * j as f64 - q[j]).collect()
}

/// Returns the periodized candidate and the magnitude of `Q` on the window.
fn windowed_hull(theta: &[f64], f: &[f64], k: usize) -> (Vec<f64>, f64) {
    let n = f.len() as isize;
    let lo = -(k as isize) * n;
    let hi = (k as isize + 1) * n;
    let q = lattice_primitive(theta, lo, hi);
    let y = |j: isize| f[j.rem_euclid(n) as usize] + q[(j - lo) as usize];

    let mut hull: Vec<(isize, f64)> = Vec::new();
    for j in lo..=hi {
        let p = (j, y(j));
        while hull.len() >= 2 {
            let (ox, oy) = hull[hull.len() - 2];
            let (ax, ay) = hull[hull.len() - 1];
            let cross = (ax - ox) as f64 * (p.1 - oy) - (ay - oy) * (p.0 - ox) as f64;
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let mut w = vec![0.0; n as usize];
    let mut seg = hull.partition_point(|v| v.0 <= 0) - 1;
    for j in 0..n {
        while hull[seg + 1].0 <= j {
            seg += 1;
        }
        let (ax, ay) = hull[seg];
        let ju = j as usize;
        if ax == j {
            w[ju] = f[ju];
        } else {
            let (bx, by) = hull[seg + 1];
            let s = (j - ax) as f64 / (bx - ax) as f64;
            w[ju] = ay + (by - ay) * s - q[(j - lo) as usize];
        }
    }
    let qscale = q.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (w, qscale)
}

/// Cone condition at the two nodes where the periodization glues.
fn seams_feasible(theta: &[f64], w: &[f64], qscale: f64) -> bool {
    let n = w.len();
    let h2 = 1.0 / (n * n) as f64;
    let wmax = w.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tmax = theta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * (1.0 + tmax) * h2 + 64.0 * f64::EPSILON * (1.0 + wmax + qscale);
    [0, n - 1].iter().all(|&i| {
        let l = w[(i + n - 1) % n];
        let r = w[(i + 1) % n];
        l - 2.0 * w[i] + r + h2 * theta[i] >= -tol
    })
}

fn sweep(theta: &[f64], f: &[f64], w: &mut [f64], omega: f64) -> f64 {
    let n = w.len();
    let h2 = 1.0 / (n * n) as f64;
    let mut update = 0.0_f64;
    for i in 0..n {
        let l = w[(i + n - 1) % n];
        let r = w[(i + 1) % n];
        let gs = 0.5 * (l + r + h2 * theta[i]);
        let new = (w[i] + omega * (gs - w[i])).min(f[i]);
        update = update.max((new - w[i]).abs());
        w[i] = new;
    }
    update
}

fn polish(theta: &[f64], f: &[f64], mut w: Vec<f64>, omega: f64, tol: f64, max: usize) -> (Vec<f64>, usize, f64) {
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < max {
        sweeps += 1;
        residual = sweep(theta, f, &mut w, omega);
        if residual < tol {
            break;
        }
    }
    (w, sweeps, residual)
}

/// Projected SOR. Each outer cycle is `N` sweeps; a cycle drifts when `sup w`
/// falls by more than `drift_floor` and by at least 95% of the previous fall.
fn psor(
    theta: &[f64],
    f: &[f64],
    mut w: Vec<f64>,
    opts: &EnvelopeOptions,
    tol: f64,
    detect_drift: bool,
) -> (Option<Vec<f64>>, usize, f64) {
    let n = w.len();
    let sup = |w: &[f64]| w.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let mut last_sup = sup(&w);
    let mut last_drop = 0.0;
    let mut drifting = 0;
    let mut residual = f64::INFINITY;
    for s in 1..=opts.max_sweeps {
        residual = sweep(theta, f, &mut w, opts.omega);
        if residual < tol {
            return (Some(w), s, residual);
        }
        if detect_drift && s % n == 0 {
            let now = sup(&w);
            let drop = last_sup - now;
            if drop > opts.drift_floor && drop >= 0.95 * last_drop {
                drifting += 1;
            } else {
                drifting = 0;
            }
            if drifting >= opts.k_div {
                return (None, s, residual);
            }
            last_sup = now;
            last_drop = drop;
        }
    }
    (Some(w), opts.max_sweeps, residual)
}

/// `V_θ = P(0)`, computed once per form.
pub fn v_theta(form: &Form) -> &Potential {
    form.v_theta_cell().get_or_init(|| {
        let zero = Obstacle::from_values(vec![0.0; form.n()]);
        envelope_below(form, &zero)
            .into_potential()
            .expect("unit mass form admits V_θ")
    })
}

pub fn rooftop(form: &Form, u: &Potential, v: &Potential) -> EnvelopeResult {
    envelope_below(form, &min_obstacle(u, v))
}

pub fn multi_rooftop(form: &Form, list: &[Potential]) -> EnvelopeResult {
    assert!(!list.is_empty(), "multi_rooftop needs at least one potential");
    let refs: Vec<&Potential> = list.iter().collect();
    envelope_below(form, &min_obstacle_many(&refs))
}

/// Largest C tried by [`envelope_singularity`]: 2^20.
pub const SINGULARITY_MAX_EXPONENT: u32 = 20;

/// `P[ψ](φ)`: limit of `P(ψ + C, φ)` over `C = 1, 2, 4, …`.
pub fn envelope_singularity(form: &Form, psi: &Potential, phi: &Potential) -> Result<Potential> {
    if !phi.is_pole_free() {
        return Err(Error::PoleNotAllowed("envelope_singularity base"));
    }
    let mut last: Option<Potential> = None;
    let mut change = f64::INFINITY;
    for e in 0..=SINGULARITY_MAX_EXPONENT {
        let c = (1u64 << e) as f64;
        let r = rooftop(form, &psi.add_constant(c), phi).into_potential()?;
        if let Some(prev) = &last {
            change = crate::grid::sup_norm_diff(prev.values(), r.values());
            if change < tol_env(&phi.full_values()) {
                return Ok(r);
            }
        }
        last = Some(r);
    }
    Err(Error::SingularityDiverged(change))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cone_density, CircleGrid};

    #[test]
    fn nonnegative_form_gives_zero_v() {
        let form = Form::cosine(CircleGrid::new(64).unwrap(), 0.9).unwrap();
        assert!(v_theta(&form).values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn big_form_v_touches_zero() {
        let form = Form::cosine(CircleGrid::new(128).unwrap(), 2.0).unwrap();
        let v = v_theta(&form);
        let max = v.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(max.abs() < 1e-14);
        assert!(v.values().iter().any(|&x| x < -1e-3));
        assert!(cone_density(&form, v).iter().all(|&d| d > -1e-9));
    }

    #[test]
    fn overloaded_pole_is_bottom() {
        let form = Form::uniform(CircleGrid::new(32).unwrap());
        let f = Obstacle {
            values: crate::grid::green_function(form.grid(), 3)
                .unwrap()
                .iter()
                .map(|g| 1.2 * g)
                .collect(),
            poles: vec![crate::grid::Pole { node: 3, mass: 1.2 }],
        };
        assert!(envelope_below(&form, &f).is_bottom());
        let opts = EnvelopeOptions {
            method: EnvelopeMethod::ProjectedSor,
            ..Default::default()
        };
        assert!(envelope_below_with(&form, &f, &opts).is_bottom());
    }

    #[test]
    fn hull_and_psor_agree() {
        let form = Form::cosine(CircleGrid::new(32).unwrap(), 1.7).unwrap();
        let f: Vec<f64> = (0..32)
            .map(|i| (i as f64 * 0.7).sin() * 0.05 + (i as f64 * 1.9).cos() * 0.02)
            .collect();
        let obstacle = Obstacle::from_values(f);
        let a = envelope_below(&form, &obstacle).into_potential().unwrap();
        let opts = EnvelopeOptions {
            method: EnvelopeMethod::ProjectedSor,
            ..Default::default()
        };
        let b = envelope_below_with(&form, &obstacle, &opts).into_potential().unwrap();
        assert!(crate::grid::sup_norm_diff(a.values(), b.values()) < 1e-9);
    }

    #[test]
    fn zero_mass_reduction_is_linear_minus_primitive() {
        let form = Form::uniform(CircleGrid::new(16).unwrap());
        let u = Potential::green(16, 5, 1.0).unwrap();
        let r = rooftop(&form, &u, &Potential::constant(16, 0.0).unwrap());
        let p = r.into_potential().unwrap();
        assert!((p.total_pole_mass() - 1.0).abs() < 1e-15);
        assert!(cone_density(&form, &p).iter().all(|&d| d > -1e-9));
    }
}
