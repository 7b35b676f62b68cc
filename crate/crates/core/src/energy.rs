//! Monge–Ampère energy, `I₁`, `d₁` and the rooftop derivative.
//!
//! Metric quantities act on full values: a potential with poles enters
//! through its truncation limit `u^C → u` (see [`energy`]), which on the
//! grid is the pole-free potential with the same full values, and whose
//! measure `θ + L(u)` keeps the atoms.

use serde::Serialize;

use crate::envelopes::{envelope_values, v_theta};
use crate::error::{Error, Result};
use crate::grid::{full_density, theta_sh_check, truncate, Form, Potential};

pub fn tol_e(value: f64) -> f64 {
    1e-10 * (1.0 + value.abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyValue {
    /// `f64::NEG_INFINITY` when the truncation sequence drains.
    pub value: f64,
    /// `(C, I(u^C))` when computed as a limit.
    pub truncation_trace: Vec<(f64, f64)>,
}

impl EnergyValue {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }

    pub fn finite(&self) -> Result<f64> {
        if self.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::InfiniteEnergy)
        }
    }
}

/// `½·h·Σ (u − V)(θ_u + θ_V)` for full values `u`.
pub fn energy_of_values(form: &Form, u: &[f64]) -> f64 {
    let v = v_theta(form).values();
    let mv = full_density(form, v);
    let mu = full_density(form, u);
    let s: f64 = (0..u.len()).map(|i| (u[i] - v[i]) * (mu[i] + mv[i])).sum();
    0.5 * form.h() * s
}

const MAX_DOUBLINGS: u32 = 62;

pub fn energy(form: &Form, u: &Potential) -> Result<EnergyValue> {
    let report = theta_sh_check(form, u, form.tol_pos());
    if !report.ok {
        return Err(Error::Cone {
            node: report.worst_node,
            violation: report.worst_violation,
        });
    }
    if u.is_pole_free() {
        return Ok(EnergyValue {
            value: energy_of_values(form, u.values()),
            truncation_trace: Vec::new(),
        });
    }
    let mut trace = Vec::new();
    let mut last_step: Option<f64> = None;
    let mut slow = 0;
    for e in 0..=MAX_DOUBLINGS {
        let c = (1u64 << e) as f64;
        let value = energy_of_values(form, truncate(form, u, c).values());
        if let Some(&(_, prev)) = trace.last() {
            let step: f64 = prev - value;
            if step.abs() < tol_e(value) {
                trace.push((c, value));
                return Ok(EnergyValue {
                    value,
                    truncation_trace: trace,
                });
            }
            if let Some(ls) = last_step {
                slow = if step.abs() > 0.9 * ls { slow + 1 } else { 0 };
                if slow >= 10 {
                    trace.push((c, value));
                    return Ok(EnergyValue {
                        value: f64::NEG_INFINITY,
                        truncation_trace: trace,
                    });
                }
            }
            last_step = Some(step.abs());
        }
        trace.push((c, value));
    }
    Ok(EnergyValue {
        value: f64::NEG_INFINITY,
        truncation_trace: trace,
    })
}

/// `½·h·Σ (u − v)(θ_u + θ_v)`.
pub fn energy_difference(form: &Form, u: &Potential, v: &Potential) -> f64 {
    energy_difference_values(form, &u.full_values(), &v.full_values())
}

pub fn energy_difference_values(form: &Form, u: &[f64], v: &[f64]) -> f64 {
    let mu = full_density(form, u);
    let mv = full_density(form, v);
    let s: f64 = (0..u.len()).map(|i| (u[i] - v[i]) * (mu[i] + mv[i])).sum();
    0.5 * form.h() * s
}

/// `h·Σ |u − v|(θ_u + θ_v)`.
pub fn i1(form: &Form, u: &Potential, v: &Potential) -> f64 {
    i1_values(form, &u.full_values(), &v.full_values())
}

pub fn i1_values(form: &Form, u: &[f64], v: &[f64]) -> f64 {
    let mu = full_density(form, u);
    let mv = full_density(form, v);
    let s: f64 = (0..u.len()).map(|i| (u[i] - v[i]).abs() * (mu[i] + mv[i])).sum();
    form.h() * s
}

/// Pole-free rooftop of full values.
pub fn rooftop_values(form: &Form, u: &[f64], v: &[f64]) -> Vec<f64> {
    let m: Vec<f64> = u.iter().zip(v).map(|(a, b)| a.min(*b)).collect();
    envelope_values(form, &m)
}

/// The rooftop that [`d1`] uses: the pole-free envelope of `min(u, v)` on
/// full values.
pub fn metric_rooftop(form: &Form, u: &Potential, v: &Potential) -> Potential {
    Potential::pole_free(rooftop_values(form, &u.full_values(), &v.full_values())).expect("envelopes are finite")
}

/// `d₁(u, v) = I(u) + I(v) − 2I(P(u, v))` with `P` from [`metric_rooftop`].
pub fn d1(form: &Form, u: &Potential, v: &Potential) -> Result<f64> {
    Ok(d1_values(form, &u.full_values(), &v.full_values()))
}

/// The two energy gaps to the rooftop are summed, which is the defining
/// expression rearranged.
pub fn d1_values(form: &Form, u: &[f64], v: &[f64]) -> f64 {
    let p = rooftop_values(form, u, v);
    energy_difference_values(form, u, &p) + energy_difference_values(form, v, &p)
}

fn require_pole_free(u: &Potential, what: &'static str) -> Result<()> {
    if u.is_pole_free() {
        Ok(())
    } else {
        Err(Error::PoleNotAllowed(what))
    }
}

/// `φ_t = P((1−t)u + tv, v)`.
pub fn rooftop_path(form: &Form, u: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    let m: Vec<f64> = u.iter().zip(v).map(|(a, b)| ((1.0 - t) * a + t * b).min(*b)).collect();
    envelope_values(form, &m)
}

/// `h·Σ (v − min(u, v))·θ_{φ_t}`.
pub fn rooftop_derivative(form: &Form, u: &Potential, v: &Potential, t: f64) -> Result<f64> {
    require_pole_free(u, "rooftop_derivative")?;
    require_pole_free(v, "rooftop_derivative")?;
    let (u, v) = (u.values(), v.values());
    let phi = rooftop_path(form, u, v, t);
    let m = full_density(form, &phi);
    let s: f64 = (0..u.len()).map(|i| (v[i] - u[i].min(v[i])) * m[i]).sum();
    Ok(form.h() * s)
}

/// Composite midpoint rule for `∫₀¹` of [`rooftop_derivative`].
pub fn energy_gap_quadrature(form: &Form, u: &Potential, v: &Potential, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Parameter("quadrature needs K ≥ 1".into()));
    }
    let mut sum = 0.0;
    for j in 0..k {
        sum += rooftop_derivative(form, u, v, (j as f64 + 0.5) / k as f64)?;
    }
    Ok(sum / k as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    /// `θ_v({u > v + tol}) ≤ tol`.
    pub hypothesis: bool,
    /// `u ≤ v + tol` everywhere.
    pub conclusion: bool,
    pub exceptional_mass: f64,
    pub max_excess: f64,
}

pub fn domination_check(form: &Form, u: &Potential, v: &Potential, tol: f64) -> DominationReport {
    let (u, v) = (u.full_values(), v.full_values());
    let mv = full_density(form, &v);
    let exceptional_mass = form.h()
        * (0..u.len())
            .filter(|&i| u[i] > v[i] + tol)
            .map(|i| mv[i].max(0.0))
            .sum::<f64>();
    let max_excess = (0..u.len()).map(|i| u[i] - v[i]).fold(f64::NEG_INFINITY, f64::max);
    DominationReport {
        hypothesis: exceptional_mass <= tol,
        conclusion: max_excess <= tol,
        exceptional_mass,
        max_excess,
    }
}

/// `θ_u({u ≤ V_θ − c})` with the full measure.
pub fn sublevel_mass(form: &Form, u: &Potential, c: f64) -> f64 {
    let v = v_theta(form).values();
    let u = u.full_values();
    let m = full_density(form, &u);
    form.h() * (0..u.len()).filter(|&i| u[i] <= v[i] - c).map(|i| m[i]).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CircleGrid;

    fn constant(n: usize, c: f64) -> Potential {
        Potential::constant(n, c).unwrap()
    }

    #[test]
    fn constants() {
        let form = Form::uniform(CircleGrid::new(32).unwrap());
        assert!((energy(&form, &constant(32, 0.3)).unwrap().value - 0.3).abs() < 1e-14);
        let (a, b) = (constant(32, 0.0), constant(32, -1.0));
        assert!((d1(&form, &a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert!((i1(&form, &a, &b) - 2.0).abs() < 1e-14);
        assert!((energy_difference(&form, &a, &b) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shifted_v_theta_energy() {
        let form = Form::cosine(CircleGrid::new(64).unwrap(), 2.0).unwrap();
        let v = v_theta(&form).clone();
        let i0 = energy(&form, &v).unwrap().value;
        assert!(i0.abs() < 1e-15);
        let i1v = energy(&form, &v.add_constant(0.4)).unwrap().value;
        assert!((i1v - 0.4).abs() < 1e-13);
    }

    #[test]
    fn pole_energy_is_a_finite_limit() {
        let form = Form::uniform(CircleGrid::new(64).unwrap());
        let e = energy(&form, &Potential::green(64, 7, 0.5).unwrap()).unwrap();
        assert!(e.is_finite());
        assert!(e.truncation_trace.len() >= 2);
        let direct = energy_of_values(&form, &Potential::green(64, 7, 0.5).unwrap().full_values());
        assert!((e.value - direct).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_comparable_constants() {
        let form = Form::uniform(CircleGrid::new(16).unwrap());
        let v = constant(16, 0.0);
        let below = constant(16, -0.5);
        assert!((rooftop_derivative(&form, &below, &v, 0.3).unwrap() - 0.5).abs() < 1e-13);
        let above = constant(16, 0.5);
        assert_eq!(rooftop_derivative(&form, &above, &v, 0.3).unwrap(), 0.0);
        assert!((energy_gap_quadrature(&form, &below, &v, 8).unwrap() - 0.5).abs() < 1e-13);
    }

    #[test]
    fn domination_examples() {
        let form = Form::uniform(CircleGrid::new(16).unwrap());
        let v = constant(16, 0.0);
        let r = domination_check(&form, &constant(16, -1.0), &v, 1e-9);
        assert!(r.hypothesis && r.conclusion);
        let r = domination_check(&form, &constant(16, 1.0), &v, 1e-9);
        assert!(!r.hypothesis);
    }
}
