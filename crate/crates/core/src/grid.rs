//! Discrete circle, forms, potentials with poles, and the cone they live in.
//!
//! A potential is `u = g + Σ c_p G_p` where `G_p` is the Green vector of the
//! periodic Laplacian with its maximum normalized to zero. Pole masses are
//! hard constraints: the atom of `θ + L(u)` at `p` is at least `c_p`, which
//! is the same as `θ + L(g) − Σc ≥ 0` at every node, pole nodes included.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::envelopes;
use crate::error::{Error, Result};

/// Masses below this are treated as absent.
const MASS_EPS: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CircleGrid {
    n: usize,
}

impl CircleGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn wrap(&self, i: isize) -> usize {
        i.rem_euclid(self.n as isize) as usize
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node < self.n {
            Ok(())
        } else {
            Err(Error::Node { node, n: self.n })
        }
    }
}

/// Background form: a signed density of unit mass. Caches `V_θ`.
#[derive(Clone, Debug)]
pub struct Form {
    grid: CircleGrid,
    density: Vec<f64>,
    renormalization: f64,
    v_theta: OnceLock<Potential>,
}

impl Form {
    /// Renormalizes `samples` to unit mass; the applied factor is kept.
    pub fn new(grid: CircleGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::Length {
                expected: grid.n(),
                got: samples.len(),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mass = grid.h() * samples.iter().sum::<f64>();
        if !(mass > 0.0) {
            return Err(Error::FormMass(mass));
        }
        let factor = 1.0 / mass;
        let density = samples.into_iter().map(|v| v * factor).collect();
        Ok(Self {
            grid,
            density,
            renormalization: factor,
            v_theta: OnceLock::new(),
        })
    }

    pub fn uniform(grid: CircleGrid) -> Self {
        Self::new(grid, vec![1.0; grid.n()]).expect("uniform form is valid")
    }

    /// `θ_i = 1 + a·cos(2πx_i)`.
    pub fn cosine(grid: CircleGrid, a: f64) -> Result<Self> {
        let samples = (0..grid.n()).map(|i| 1.0 + a * (2.0 * PI * grid.x(i)).cos()).collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> CircleGrid {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn mass(&self) -> f64 {
        self.h() * self.density.iter().sum::<f64>()
    }

    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    pub fn max_abs(&self) -> f64 {
        self.density.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn tol_pos(&self) -> f64 {
        1e-9 * (1.0 + self.max_abs())
    }

    /// Circular shift by `k` nodes.
    pub fn rotated(&self, k: isize) -> Self {
        let density = rotate(&self.density, k);
        Self {
            grid: self.grid,
            density,
            renormalization: self.renormalization,
            v_theta: OnceLock::new(),
        }
    }

    pub(crate) fn v_theta_cell(&self) -> &OnceLock<Potential> {
        &self.v_theta
    }
}

/// `out[(i + k) mod N] = v[i]`.
pub fn rotate(v: &[f64], k: isize) -> Vec<f64> {
    let n = v.len() as isize;
    let mut out = vec![0.0; v.len()];
    for (i, &x) in v.iter().enumerate() {
        out[(i as isize + k).rem_euclid(n) as usize] = x;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub node: usize,
    pub mass: f64,
}

/// Sorts by node, merges duplicates with `merge`, drops negligible masses.
fn normalize_poles(mut poles: Vec<Pole>, merge: fn(f64, f64) -> f64) -> Vec<Pole> {
    poles.sort_by_key(|p| p.node);
    let mut out: Vec<Pole> = Vec::with_capacity(poles.len());
    for p in poles {
        match out.last_mut() {
            Some(last) if last.node == p.node => last.mass = merge(last.mass, p.mass),
            _ => out.push(p),
        }
    }
    out.retain(|p| p.mass > MASS_EPS);
    out
}

/// Componentwise combination of two pole lists; absent nodes count as zero.
fn combine_poles(a: &[Pole], b: &[Pole], f: fn(f64, f64) -> f64) -> Vec<Pole> {
    let mut nodes: Vec<usize> = a.iter().chain(b).map(|p| p.node).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mass = |list: &[Pole], node| list.iter().find(|p| p.node == node).map_or(0.0, |p| p.mass);
    let poles = nodes
        .into_iter()
        .map(|node| Pole {
            node,
            mass: f(mass(a, node), mass(b, node)),
        })
        .collect();
    normalize_poles(poles, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: Vec<f64>,
    poles: Vec<Pole>,
}

impl Potential {
    /// Validates finiteness, node range and `0 ≤ Σc ≤ 1`. Cone membership is
    /// not checked here; see [`theta_sh_check`].
    pub fn new(values: Vec<f64>, poles: Vec<Pole>) -> Result<Self> {
        let n = values.len();
        CircleGrid::new(n)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        for p in &poles {
            if p.node >= n {
                return Err(Error::Node { node: p.node, n });
            }
            if !(p.mass >= 0.0) || !p.mass.is_finite() {
                return Err(Error::PoleMass(format!("mass {} at node {}", p.mass, p.node)));
            }
        }
        let poles = normalize_poles(poles, |a, b| a + b);
        let total: f64 = poles.iter().map(|p| p.mass).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::PoleMass(format!("total mass {total} exceeds 1")));
        }
        Ok(Self { values, poles })
    }

    pub fn pole_free(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Vec::new())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::pole_free(vec![c; n])
    }

    /// `mass · G_p` with zero regular part.
    pub fn green(n: usize, node: usize, mass: f64) -> Result<Self> {
        Self::new(vec![0.0; n], vec![Pole { node, mass }])
    }

    pub(crate) fn from_parts_unchecked(values: Vec<f64>, poles: Vec<Pole>) -> Self {
        Self { values, poles }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn grid(&self) -> CircleGrid {
        CircleGrid { n: self.len() }
    }

    /// Regular part `g`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    pub fn is_pole_free(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn total_pole_mass(&self) -> f64 {
        self.poles.iter().map(|p| p.mass).sum()
    }

    pub fn pole_mass_at(&self, node: usize) -> f64 {
        self.poles.iter().find(|p| p.node == node).map_or(0.0, |p| p.mass)
    }

    /// `g + Σ c_p G_p`.
    pub fn full_values(&self) -> Vec<f64> {
        let mut out = self.values.clone();
        add_pole_parts(&mut out, &self.poles, 1.0);
        out
    }

    /// The pole-free potential with the same full values.
    pub fn bounded(&self) -> Potential {
        if self.is_pole_free() {
            self.clone()
        } else {
            Self::from_parts_unchecked(self.full_values(), Vec::new())
        }
    }

    pub fn add_constant(&self, c: f64) -> Potential {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            poles: self.poles.clone(),
        }
    }

    /// Circular shift by `k` nodes (values and poles).
    pub fn rotated(&self, k: isize) -> Potential {
        let n = self.len() as isize;
        let poles = self
            .poles
            .iter()
            .map(|p| Pole {
                node: (p.node as isize + k).rem_euclid(n) as usize,
                mass: p.mass,
            })
            .collect();
        Self {
            values: rotate(&self.values, k),
            poles: normalize_poles(poles, |a, b| a + b),
        }
    }

    /// `(1−s)·self + s·other`; pole masses interpolate linearly.
    pub fn lerp(&self, other: &Potential, s: f64) -> Potential {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect();
        let scaled = |list: &[Pole], w: f64| -> Vec<Pole> {
            list.iter()
                .map(|p| Pole {
                    node: p.node,
                    mass: w * p.mass,
                })
                .collect()
        };
        let poles = combine_poles(&scaled(&self.poles, 1.0 - s), &scaled(&other.poles, s), |a, b| a + b);
        Self { values, poles }
    }
}

/// `out += sign · Σ c_p G_p`.
pub(crate) fn add_pole_parts(out: &mut [f64], poles: &[Pole], sign: f64) {
    if poles.is_empty() {
        return;
    }
    let grid = CircleGrid { n: out.len() };
    let g0 = green_function(grid, 0).expect("green function solve");
    for p in poles {
        let n = out.len();
        for (i, o) in out.iter_mut().enumerate() {
            *o += sign * p.mass * g0[(i + n - p.node) % n];
        }
    }
}

/// Obstacle for envelope problems: finite values plus effective pole masses
/// standing in for `−∞` at the marked nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub values: Vec<f64>,
    pub poles: Vec<Pole>,
}

impl Obstacle {
    pub fn from_values(values: Vec<f64>) -> Self {
        Self {
            values,
            poles: Vec::new(),
        }
    }

    pub fn from_potential(u: &Potential) -> Self {
        Self {
            values: u.full_values(),
            poles: u.poles.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total_pole_mass(&self) -> f64 {
        self.poles.iter().map(|p| p.mass).sum()
    }

    pub fn osc(&self) -> f64 {
        osc(&self.values)
    }

    /// Nodes that carry the `−∞` sentinel.
    pub fn sentinel_nodes(&self) -> Vec<usize> {
        self.poles.iter().map(|p| p.node).collect()
    }
}

pub fn osc(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    if v.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

pub fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Periodic 3-point Laplacian with `h = 1/len`.
pub fn laplacian(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let inv_h2 = (n * n) as f64;
    (0..n)
        .map(|i| {
            let l = u[(i + n - 1) % n];
            let r = u[(i + 1) % n];
            (l - 2.0 * u[i] + r) * inv_h2
        })
        .collect()
}

/// Solves `L(u) = rhs` on the circle with the gauge `u_0 = 0`.
///
/// The mean of `rhs` is removed first. Pinning node 0 turns the cyclic system
/// into a Dirichlet tridiagonal system on the remaining nodes, solved by the
/// Thomas algorithm; the equation at node 0 is then checked as a residual.
pub fn solve_periodic(rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    CircleGrid::new(n)?;
    let h2 = 1.0 / (n * n) as f64;
    let mean = rhs.iter().sum::<f64>() / n as f64;
    let d: Vec<f64> = rhs.iter().map(|r| (r - mean) * h2).collect();

    // Unknowns u_1..u_{n-1}: u_{i-1} - 2u_i + u_{i+1} = d_i, u_0 = u_n = 0.
    let m = n - 1;
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = 1.0 / -2.0;
    dp[0] = d[1] / -2.0;
    for k in 1..m {
        let denom = -2.0 - cp[k - 1];
        cp[k] = 1.0 / denom;
        dp[k] = (d[k + 1] - dp[k - 1]) / denom;
    }
    let mut u = vec![0.0; n];
    u[m] = dp[m - 1];
    for k in (0..m - 1).rev() {
        u[k + 1] = dp[k] - cp[k] * u[k + 2];
    }

    let residual = (u[1] - 2.0 * u[0] + u[n - 1] - d[0]).abs();
    let scale = d.iter().fold(0.0_f64, |a, v| a.max(v.abs())) * n as f64;
    if residual > 1e-9 * (1.0 + scale) {
        return Err(Error::Singular(residual));
    }
    Ok(u)
}

fn shift_max_to_zero(mut u: Vec<f64>) -> Vec<f64> {
    let max = u.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    u.iter_mut().for_each(|v| *v -= max);
    u
}

/// `G` with `L(G) = e_p/h − 1` and `max G = 0`.
pub fn green_function(grid: CircleGrid, p: usize) -> Result<Vec<f64>> {
    grid.check_node(p)?;
    let mut rhs = vec![-1.0; grid.n()];
    rhs[p] += grid.n() as f64;
    Ok(shift_max_to_zero(solve_periodic(&rhs)?))
}

/// `θ + L(g) − Σc` at every node.
pub fn cone_density(form: &Form, u: &Potential) -> Vec<f64> {
    let c = u.total_pole_mass();
    laplacian(&u.values)
        .into_iter()
        .zip(form.density())
        .map(|(l, t)| t + l - c)
        .collect()
}

/// `θ + L(v)` for a plain array of full values.
pub fn full_density(form: &Form, values: &[f64]) -> Vec<f64> {
    laplacian(values)
        .into_iter()
        .zip(form.density())
        .map(|(l, t)| t + l)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShReport {
    pub ok: bool,
    pub worst_node: usize,
    pub worst_violation: f64,
}

pub fn theta_sh_check(form: &Form, u: &Potential, tol: f64) -> ShReport {
    let dens = cone_density(form, u);
    let (worst_node, min) = dens.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(k, m), (i, &d)| if d < m { (i, d) } else { (k, m) },
    );
    let worst_violation = (-min).max(0.0);
    ShReport {
        ok: worst_violation <= tol,
        worst_node,
        worst_violation,
    }
}

/// Non-pluripolar Monge–Ampère measure: atom-stripped density.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measure {
    pub density: Vec<f64>,
    pub mass: f64,
    pub pole_nodes: Vec<usize>,
    /// `1 − Σc − mass`: the part of the regular density sitting on pole nodes.
    pub mass_defect: f64,
}

pub fn ma_measure(form: &Form, u: &Potential) -> Result<Measure> {
    let report = theta_sh_check(form, u, form.tol_pos());
    if !report.ok {
        return Err(Error::Cone {
            node: report.worst_node,
            violation: report.worst_violation,
        });
    }
    let mut density = cone_density(form, u);
    let pole_nodes: Vec<usize> = u.poles.iter().map(|p| p.node).collect();
    for &p in &pole_nodes {
        density[p] = 0.0;
    }
    let mass = form.h() * density.iter().sum::<f64>();
    let mass_defect = 1.0 - u.total_pole_mass() - mass;
    Ok(Measure {
        density,
        mass,
        pole_nodes,
        mass_defect,
    })
}

/// Pole-free potential with `L(g) = m − θ` and `max g = 0`.
pub fn poisson_solve(form: &Form, m: &[f64]) -> Result<Potential> {
    if m.len() != form.n() {
        return Err(Error::Length {
            expected: form.n(),
            got: m.len(),
        });
    }
    let tol = form.tol_pos();
    if let Some((node, &value)) = m.iter().enumerate().find(|(_, v)| !(**v >= -tol)) {
        return Err(Error::NegativeMeasure { node, value });
    }
    let mass = form.h() * m.iter().sum::<f64>();
    if (mass - form.mass()).abs() > 1e-10 {
        return Err(Error::MassMismatch {
            measure: mass,
            form: form.mass(),
        });
    }
    let rhs: Vec<f64> = m.iter().zip(form.density()).map(|(a, t)| a - t).collect();
    Potential::pole_free(shift_max_to_zero(solve_periodic(&rhs)?))
}

/// `max(u, V_θ − C)` as a pole-free potential.
pub fn truncate(form: &Form, u: &Potential, c: f64) -> Potential {
    let v = envelopes::v_theta(form);
    let values = u
        .full_values()
        .into_iter()
        .zip(v.values())
        .map(|(a, b)| a.max(b - c))
        .collect();
    Potential::from_parts_unchecked(values, Vec::new())
}

pub fn sup_potential(u: &Potential) -> f64 {
    u.full_values().into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Pointwise max; pole masses merge by componentwise min.
pub fn max_pot(u: &Potential, v: &Potential) -> Potential {
    let values: Vec<f64> = u
        .full_values()
        .into_iter()
        .zip(v.full_values())
        .map(|(a, b)| a.max(b))
        .collect();
    let poles = combine_poles(&u.poles, &v.poles, f64::min);
    let mut g = values;
    add_pole_parts(&mut g, &poles, -1.0);
    Potential::from_parts_unchecked(g, poles)
}

/// Pointwise min as an obstacle; pole masses merge by componentwise max.
pub fn min_obstacle(u: &Potential, v: &Potential) -> Obstacle {
    min_obstacle_many(&[u, v])
}

pub fn min_obstacle_many(list: &[&Potential]) -> Obstacle {
    let mut values = list[0].full_values();
    let mut poles = list[0].poles.clone();
    for u in &list[1..] {
        for (a, b) in values.iter_mut().zip(u.full_values()) {
            *a = a.min(b);
        }
        poles = combine_poles(&poles, &u.poles, f64::max);
    }
    Obstacle { values, poles }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_periodic_solve(rhs: &[f64]) -> Vec<f64> {
        // Gaussian elimination on L with the row of node 0 replaced by u_0 = 0.
        let n = rhs.len();
        let inv_h2 = (n * n) as f64;
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][(i + n - 1) % n] += inv_h2;
            a[i][i] -= 2.0 * inv_h2;
            a[i][(i + 1) % n] += inv_h2;
            a[i][n] = rhs[i];
        }
        a[0] = vec![0.0; n + 1];
        a[0][0] = 1.0;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n] / a[i][i]).collect()
    }

    #[test]
    fn green_matches_dense_solve() {
        let grid = CircleGrid::new(8).unwrap();
        let g = green_function(grid, 0).unwrap();
        let mut rhs = vec![-1.0; 8];
        rhs[0] += 8.0;
        let dense = shift_max_to_zero(dense_periodic_solve(&rhs));
        assert!(sup_norm_diff(&g, &dense) < 1e-12);
    }

    #[test]
    fn green_closed_form_and_depth() {
        // On the lattice G(j) = x(1−x)/2 − max, x = j/N, which peaks at 1/8.
        let grid = CircleGrid::new(64).unwrap();
        let g = green_function(grid, 5).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let x = ((i + 64 - 5) % 64) as f64 / 64.0;
            assert!((gi - (x * (1.0 - x) / 2.0 - 0.125)).abs() < 1e-13);
        }
        let lap = laplacian(&g);
        for (i, l) in lap.iter().enumerate() {
            let want = if i == 5 { 63.0 } else { -1.0 };
            assert!((l - want).abs() < 1e-9, "{i}: {l}");
        }
    }

    #[test]
    fn green_shift_equivariance() {
        let grid = CircleGrid::new(32).unwrap();
        let g3 = green_function(grid, 3).unwrap();
        let g10 = green_function(grid, 10).unwrap();
        assert!(sup_norm_diff(&rotate(&g3, 7), &g10) < 1e-14);
    }

    #[test]
    fn laplacian_of_cosine() {
        let n = 256;
        let h = 1.0 / n as f64;
        let u: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 * h).cos()).collect();
        let l = laplacian(&u);
        let bound = (2.0 * PI).powi(4) * h * h / 12.0 * 2.0;
        for (li, ui) in l.iter().zip(&u) {
            assert!((li + 4.0 * PI * PI * ui).abs() <= bound);
        }
        assert!(l.iter().sum::<f64>().abs() * h < 1e-9);
    }

    #[test]
    fn poisson_matches_dense_solve() {
        let grid = CircleGrid::new(8).unwrap();
        let form = Form::cosine(grid, 2.0).unwrap();
        let u = poisson_solve(&form, &[1.0; 8]).unwrap();
        let rhs: Vec<f64> = form.density().iter().map(|t| 1.0 - t).collect();
        let dense = shift_max_to_zero(dense_periodic_solve(&rhs));
        assert!(sup_norm_diff(u.values(), &dense) < 1e-12);
    }

    #[test]
    fn poisson_trivial_and_mismatch() {
        let grid = CircleGrid::new(16).unwrap();
        let form = Form::uniform(grid);
        let u = poisson_solve(&form, form.density()).unwrap();
        assert!(u.values().iter().all(|v| v.abs() < 1e-15));
        assert!(matches!(
            poisson_solve(&form, &[2.0; 16]),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn cone_examples() {
        let grid = CircleGrid::new(32).unwrap();
        let uniform = Form::uniform(grid);
        let zero = Potential::constant(32, 0.0).unwrap();
        assert!(theta_sh_check(&uniform, &zero, 1e-9).ok);
        let cosine = Form::cosine(grid, 2.0).unwrap();
        assert!(!theta_sh_check(&cosine, &zero, 1e-9).ok);
        let half = Potential::green(32, 4, 0.5).unwrap();
        assert!(theta_sh_check(&uniform, &half, 1e-9).ok);
    }

    #[test]
    fn measure_of_half_pole_by_summation() {
        let grid = CircleGrid::new(8).unwrap();
        let form = Form::uniform(grid);
        let u = Potential::green(8, 2, 0.5).unwrap();
        let m = ma_measure(&form, &u).unwrap();
        // Off the pole θ + L(u) = 1 − 0.5 on 7 nodes.
        let h = 1.0 / 8.0;
        let direct: f64 = (0..8).filter(|&i| i != 2).map(|_| h * (1.0 - 0.5)).sum();
        assert!((m.mass - direct).abs() < 1e-14);
        assert!((m.mass - (0.5 - h * (1.0 - 0.5))).abs() < 1e-14);
        assert!((m.mass_defect - h * 0.5).abs() < 1e-14);
    }

    #[test]
    fn full_pole_has_no_regular_mass() {
        let grid = CircleGrid::new(16).unwrap();
        let form = Form::uniform(grid);
        let u = Potential::green(16, 0, 1.0).unwrap();
        assert!(ma_measure(&form, &u).unwrap().mass.abs() < 1e-12);
    }

    #[test]
    fn min_obstacle_takes_larger_mass() {
        let a = Potential::green(16, 3, 0.5).unwrap();
        let b = Potential::green(16, 3, 0.7).unwrap();
        let o = min_obstacle(&a, &b);
        assert_eq!(o.poles, vec![Pole { node: 3, mass: 0.7 }]);
        let m = max_pot(&a, &b);
        assert_eq!(m.poles(), &[Pole { node: 3, mass: 0.5 }]);
        assert!(sup_norm_diff(&m.full_values(), &a.full_values()) < 1e-15);
    }

    #[test]
    fn max_with_lower_copy() {
        let grid = CircleGrid::new(16).unwrap();
        let form = Form::cosine(grid, 0.5).unwrap();
        let u = poisson_solve(&form, &[1.0; 16]).unwrap();
        let m = max_pot(&u, &u.add_constant(-1.0));
        assert_eq!(m.values(), u.values());
        assert_eq!(sup_potential(&Potential::constant(16, 2.5).unwrap()), 2.5);
    }
}
