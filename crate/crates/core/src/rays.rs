//! Test curves, maximization, and the partial Legendre transforms that turn
//! them into geodesic rays.

use rayon::prelude::*;
use serde::Serialize;

use crate::envelopes::{envelope_singularity, rooftop, v_theta};
use crate::error::{Error, Result};
use crate::grid::{sup_norm_diff, Form, Potential};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestCurve {
    pub taus: Vec<f64>,
    /// `None` is BOTTOM.
    pub entries: Vec<Option<Potential>>,
    pub base: Potential,
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub c_psi: f64,
}

impl TestCurve {
    pub fn h_tau(&self) -> f64 {
        if self.taus.len() < 2 {
            0.0
        } else {
            self.taus[1] - self.taus[0]
        }
    }

    /// Index of the largest τ with a finite entry.
    pub fn top_finite(&self) -> Option<usize> {
        self.entries.iter().rposition(Option::is_some)
    }

    fn finite_full_values(&self) -> Vec<(f64, Vec<f64>)> {
        self.taus
            .iter()
            .zip(&self.entries)
            .filter_map(|(&t, e)| e.as_ref().map(|p| (t, p.full_values())))
            .collect()
    }
}

/// `M` uniform samples of `[τ⁻ − 0.1, τ⁺ + 0.1]`.
pub fn tau_grid(tau_minus: f64, tau_plus: f64, m: usize) -> Vec<f64> {
    let (a, b) = (tau_minus - 0.1, tau_plus + 0.1);
    (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect()
}

/// `ψ_τ = P(V_θ, λ(τ)·G_p)` with `λ(τ) = s·max(0, τ − τ⁻)`.
pub fn preset_pole_curve(form: &Form, p: usize, tau_minus: f64, s: f64, m: usize) -> Result<TestCurve> {
    form.grid().check_node(p)?;
    if !(s > 0.0) || m < 3 {
        return Err(Error::Parameter(format!("need s > 0 and M ≥ 3, got s = {s}, M = {m}")));
    }
    let tau_plus = tau_minus + 1.0 / s;
    let taus = tau_grid(tau_minus, tau_plus, m);
    let phi = v_theta(form).clone();
    let entries = taus
        .par_iter()
        .map(|&tau| {
            let lambda = s * (tau - tau_minus).max(0.0);
            if lambda > 1.0 + 1e-12 {
                return Ok(None);
            }
            if lambda == 0.0 {
                return Ok(Some(phi.clone()));
            }
            let pole = Potential::green(form.n(), p, lambda.min(1.0))?;
            Ok(Some(rooftop(form, &phi, &pole).into_potential()?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestCurve {
        taus,
        entries,
        base: phi,
        tau_minus,
        tau_plus,
        c_psi: (-tau_minus).max(tau_plus).max(0.0),
    })
}

/// Lowers the top finite entry to the pointwise minimum of itself and its
/// left neighbour; every other entry is kept.
pub fn usc_regularize(curve: &TestCurve) -> TestCurve {
    let mut out = curve.clone();
    let Some(top) = curve.top_finite() else {
        return out;
    };
    if top == 0 {
        return out;
    }
    let (Some(left), Some(cur)) = (&curve.entries[top - 1], &curve.entries[top]) else {
        return out;
    };
    let lf = left.full_values();
    let cf = cur.full_values();
    if cf.iter().zip(&lf).all(|(c, l)| c <= l) {
        return out;
    }
    // The lowered entry keeps the larger pole masses, which the minimum inherits.
    let mut values: Vec<f64> = cf.iter().zip(&lf).map(|(c, l)| c.min(*l)).collect();
    let mut poles = cur.poles().to_vec();
    for p in left.poles() {
        match poles.iter_mut().find(|q| q.node == p.node) {
            Some(q) => q.mass = q.mass.max(p.mass),
            None => poles.push(*p),
        }
    }
    crate::grid::add_pole_parts(&mut values, &poles, -1.0);
    out.entries[top] = Some(Potential::new(values, poles).expect("lowered entry is valid"));
    out
}

/// `ψ_τ ← P[ψ_τ](φ)` for every finite entry, then [`usc_regularize`].
pub fn maximize_curve(form: &Form, curve: &TestCurve) -> Result<TestCurve> {
    let entries = curve
        .entries
        .par_iter()
        .map(|e| match e {
            None => Ok(None),
            Some(psi) => envelope_singularity(form, psi, &curve.base).map(Some),
        })
        .collect::<Result<Vec<_>>>()?;
    let out = TestCurve {
        entries,
        ..curve.clone()
    };
    Ok(usc_regularize(&out))
}

/// `sup|P[ψ_τ](φ) − ψ_τ|` per finite entry; zero certifies maximality.
pub fn maximality_defects(form: &Form, curve: &TestCurve) -> Result<Vec<f64>> {
    curve
        .entries
        .par_iter()
        .filter_map(|e| e.as_ref())
        .map(|psi| {
            let again = envelope_singularity(form, psi, &curve.base)?;
            Ok(sup_norm_diff(&again.full_values(), &psi.full_values()))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveDefects {
    /// Largest violation of `ψ_k ≥ (ψ_{k−1} + ψ_{k+1})/2`.
    pub concavity: f64,
    /// Largest increase `ψ_{k+1} − ψ_k`.
    pub monotonicity: f64,
}

pub fn curve_defects(curve: &TestCurve) -> CurveDefects {
    let full: Vec<Option<Vec<f64>>> = curve
        .entries
        .iter()
        .map(|e| e.as_ref().map(Potential::full_values))
        .collect();
    let mut concavity = 0.0_f64;
    let mut monotonicity = 0.0_f64;
    for k in 0..full.len() {
        if let (Some(a), Some(b)) = (&full[k], full.get(k + 1).and_then(|x| x.as_ref())) {
            monotonicity = monotonicity.max(b.iter().zip(a).fold(0.0, |m, (x, y)| m.max(x - y)));
        }
        if k == 0 || k + 1 >= full.len() {
            continue;
        }
        if let (Some(l), Some(c), Some(r)) = (&full[k - 1], &full[k], &full[k + 1]) {
            for i in 0..c.len() {
                concavity = concavity.max(0.5 * (l[i] + r[i]) - c[i]);
            }
        }
    }
    CurveDefects {
        concavity,
        monotonicity,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ray {
    pub times: Vec<f64>,
    /// Full values of each slice; slices are pole-free.
    pub slices: Vec<Vec<f64>>,
    pub origin: Potential,
    /// Index into the curve's τ grid attaining the maximum, per slice and node.
    pub argmax: Vec<Vec<usize>>,
}

impl Ray {
    pub fn slice(&self, k: usize) -> Potential {
        Potential::pole_free(self.slices[k].clone()).expect("slices are finite")
    }
}

/// `[0, T]` with `N_t + 1` uniform samples.
pub fn time_grid(t_max: f64, n_t: usize) -> Vec<f64> {
    (0..=n_t).map(|k| t_max * k as f64 / n_t as f64).collect()
}

/// `slice(t) = max_k (ψ_k + t·τ_k)`, ties to the smallest τ.
pub fn inverse_legendre(curve: &TestCurve, times: &[f64]) -> Result<Ray> {
    let finite = curve.finite_full_values();
    if finite.is_empty() {
        return Err(Error::AllBottom);
    }
    let index: Vec<usize> = curve
        .entries
        .iter()
        .enumerate()
        .filter_map(|(k, e)| e.as_ref().map(|_| k))
        .collect();
    let n = curve.base.len();
    let mut slices = Vec::with_capacity(times.len());
    let mut argmax = Vec::with_capacity(times.len());
    for &t in times {
        let mut best = vec![f64::NEG_INFINITY; n];
        let mut arg = vec![0usize; n];
        for ((tau, vals), &k) in finite.iter().zip(&index) {
            for i in 0..n {
                let v = vals[i] + t * tau;
                if v > best[i] {
                    best[i] = v;
                    arg[i] = k;
                }
            }
        }
        slices.push(best);
        argmax.push(arg);
    }
    Ok(Ray {
        times: times.to_vec(),
        slices,
        origin: curve.base.clone(),
        argmax,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HatResult {
    pub curve: TestCurve,
    /// τ whose infimum is not attained on `[0, T]` at some node.
    pub unattained: Vec<bool>,
    /// Per-node slope over the last time step.
    pub terminal_slopes: Vec<f64>,
}

/// `entry(τ) = min_t (slice(t) − t·τ)` over the ray's time grid.
pub fn hat_transform(ray: &Ray, taus: &[f64]) -> Result<HatResult> {
    let nt = ray.times.len();
    if nt < 2 {
        return Err(Error::Parameter("hat_transform needs at least two slices".into()));
    }
    let n = ray.origin.len();
    let dt = ray.times[nt - 1] - ray.times[nt - 2];
    let terminal_slopes: Vec<f64> = (0..n)
        .map(|i| (ray.slices[nt - 1][i] - ray.slices[nt - 2][i]) / dt)
        .collect();
    let top = terminal_slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slope_tol = 1e-9 * (1.0 + top.abs());
    let mut entries = Vec::with_capacity(taus.len());
    let mut unattained = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut vals = vec![0.0; n];
        let mut open = false;
        for i in 0..n {
            let mut best = f64::INFINITY;
            for (k, &t) in ray.times.iter().enumerate() {
                best = best.min(ray.slices[k][i] - t * tau);
            }
            vals[i] = best;
            if terminal_slopes[i] < tau - slope_tol {
                open = true;
            }
        }
        if open && tau <= top - slope_tol {
            return Err(Error::TTooSmall(format!(
                "infimum at τ = {tau} not attained by T = {}",
                ray.times[nt - 1]
            )));
        }
        unattained.push(open);
        entries.push(if open { None } else { Some(Potential::pole_free(vals)?) });
    }
    let base = ray.slice(0);
    let finite: Vec<usize> = (0..taus.len()).filter(|&k| entries[k].is_some()).collect();
    let tau_plus = finite.last().map_or(f64::NEG_INFINITY, |&k| taus[k]);
    let tol = 1e-9 * (1.0 + crate::grid::osc(base.values()));
    let tau_minus = finite
        .iter()
        .copied()
        .filter(|&k| sup_norm_diff(entries[k].as_ref().unwrap().values(), base.values()) <= tol)
        .map(|k| taus[k])
        .fold(f64::NEG_INFINITY, f64::max);
    let c_psi = taus.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    Ok(HatResult {
        curve: TestCurve {
            taus: taus.to_vec(),
            entries,
            base,
            tau_minus,
            tau_plus,
            c_psi,
        },
        unattained,
        terminal_slopes,
    })
}

/// Smallest `T` from which the top finite entry attains the maximum of
/// [`inverse_legendre`] at every node.
pub fn attainment_time(curve: &TestCurve) -> f64 {
    let Some(top) = curve.top_finite() else {
        return 0.0;
    };
    let ft = curve.entries[top].as_ref().expect("finite").full_values();
    let mut t = 0.0_f64;
    for (k, e) in curve.entries.iter().enumerate().take(top) {
        if let Some(p) = e {
            let gap = curve.taus[top] - curve.taus[k];
            for (a, b) in p.full_values().iter().zip(&ft) {
                t = t.max((a - b) / gap);
            }
        }
    }
    t
}

/// Sup-errors of `hat ∘ check` on the curve and of `check ∘ hat` on its ray.
pub fn round_trip_errors(curve: &TestCurve, times: &[f64]) -> Result<(f64, f64)> {
    let ray = inverse_legendre(curve, times)?;
    let hat = hat_transform(&ray, &curve.taus)?;
    let mut err = 0.0_f64;
    for (a, b) in curve.entries.iter().zip(&hat.curve.entries) {
        err = err.max(match (a, b) {
            (Some(a), Some(b)) => sup_norm_diff(&a.full_values(), &b.full_values()),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        });
    }
    let back = inverse_legendre(&hat.curve, times)?;
    let err_back = ray
        .slices
        .iter()
        .zip(&back.slices)
        .map(|(a, b)| sup_norm_diff(a, b))
        .fold(0.0, f64::max);
    Ok((err, err_back))
}

pub fn construct_ray(form: &Form, curve: &TestCurve, times: &[f64]) -> Result<Ray> {
    inverse_legendre(&maximize_curve(form, curve)?, times)
}

/// `w^D_t = sup_τ (P(φ, ψ_τ + D) + tτ)`, which increases to the constructed ray.
pub fn capped_ray(form: &Form, curve: &TestCurve, depth: f64, times: &[f64]) -> Result<Ray> {
    let entries = curve
        .entries
        .par_iter()
        .map(|e| match e {
            None => Ok(None),
            Some(psi) => rooftop(form, &curve.base, &psi.add_constant(depth))
                .into_potential()
                .map(Some),
        })
        .collect::<Result<Vec<_>>>()?;
    let capped = TestCurve {
        entries,
        ..curve.clone()
    };
    inverse_legendre(&capped, times)
}
