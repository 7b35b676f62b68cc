//! The property suite run by `check`: twelve criteria, each a list of claims.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{Claim, RecordBuilder, ResultRecord};
use crate::corpus::{corpus_potential, random_obstacle, random_potential};
use crate::energy::{
    d1, energy, energy_difference, energy_difference_values, energy_gap_quadrature, energy_of_values, i1, i1_values,
    metric_rooftop, rooftop_derivative, rooftop_path, sublevel_mass,
};
use crate::envelopes::{envelope_below, multi_rooftop, rooftop, tol_contact, v_theta};
use crate::error::Result;
use crate::geodesics::{segment_solve, tol_geo, verify_geodesic, SpacetimeField};
use crate::grid::{
    full_density, green_function, max_pot, osc, sup_norm_diff, truncate, CircleGrid, Form, Obstacle, Pole, Potential,
};
use crate::oracle::enumerate_envelope;
use crate::rays::{
    attainment_time, construct_ray, maximality_defects, maximize_curve, preset_pole_curve, round_trip_errors,
    time_grid, TestCurve,
};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckLevel {
    Fast,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub level: CheckLevel,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub claims: Vec<Claim>,
}

impl CriterionReport {
    fn new(id: u32, claims: Vec<Claim>) -> Self {
        Self {
            id,
            title: TITLES[id as usize - 1],
            pass: claims.iter().all(|c| c.pass),
            claims,
        }
    }

    /// One summary line: `[PASS] 3 d1/I1 double bound`.
    pub fn line(&self) -> String {
        let mut s = format!(
            "[{}] {:>2} {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title
        );
        for c in self.claims.iter().filter(|c| !c.pass) {
            s.push_str(&format!(
                "\n        failed: {} = {:.3e} vs bound {:.3e} (tol {:.1e})",
                c.name, c.value, c.bound, c.tolerance
            ));
        }
        s
    }
}

pub const TITLES: [&str; 12] = [
    "metric axioms",
    "Pythagorean formula",
    "d1/I1 double bound",
    "halfway estimate",
    "contraction and rooftop-max inequalities",
    "rooftop derivative and quadrature",
    "envelope correctness",
    "energy estimates, truncation and sublevel mass",
    "geodesic segments",
    "rays and Legendre duality",
    "completeness construction",
    "determinism",
];

struct Sizes {
    n: usize,
    triples: usize,
    pairs: usize,
    obstacles: usize,
    geo_pairs: usize,
    n_t: usize,
    m: usize,
}

impl Sizes {
    fn of(level: CheckLevel) -> Self {
        match level {
            CheckLevel::Full => Self {
                n: 256,
                triples: 500,
                pairs: 20,
                obstacles: 50,
                geo_pairs: 8,
                n_t: 64,
                m: 101,
            },
            CheckLevel::Fast => Self {
                n: 64,
                triples: 40,
                pairs: 5,
                obstacles: 12,
                geo_pairs: 2,
                n_t: 16,
                m: 41,
            },
        }
    }
}

/// Cosine form `1 + 1.6·cos(2πx)`, negative on part of the circle.
pub fn corpus_form(n: usize) -> Result<Form> {
    Form::cosine(CircleGrid::new(n)?, 1.6)
}

pub fn marked_nodes(n: usize) -> Vec<usize> {
    vec![0, n / 4, n / 2, 3 * n / 4]
}

const POLE_PROB: f64 = 0.5;

fn stream(seed: u64, family: u64, k: u64) -> SplitMix64 {
    SplitMix64::new(seed).fork(family << 32 | k)
}

fn triples(form: &Form, seed: u64, count: usize) -> Result<Vec<[Potential; 3]>> {
    let marked = marked_nodes(form.n());
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, 1, k);
            Ok([
                corpus_potential(form, &mut rng, &marked, POLE_PROB)?,
                corpus_potential(form, &mut rng, &marked, POLE_PROB)?,
                corpus_potential(form, &mut rng, &marked, POLE_PROB)?,
            ])
        })
        .collect()
}

fn pole_free_pair(form: &Form, seed: u64, family: u64, k: u64) -> Result<(Potential, Potential)> {
    let mut rng = stream(seed, family, k);
    let u = random_potential(form, &mut rng, None, (-0.5, 0.5))?;
    let v = random_potential(form, &mut rng, None, (-0.5, 0.5))?;
    Ok((u, v))
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, f64::min)
}

fn bottom_free(r: crate::envelopes::EnvelopeResult) -> Result<Potential> {
    r.into_potential()
}

pub fn criterion(id: u32, cfg: SuiteConfig) -> Result<CriterionReport> {
    let sizes = Sizes::of(cfg.level);
    let claims = match id {
        1 => metric_axioms(&sizes, cfg.seed)?,
        2 => pythagorean(&sizes, cfg.seed)?,
        3 => double_bound(&sizes, cfg.seed)?,
        4 => halfway(&sizes, cfg.seed)?,
        5 => contraction(&sizes, cfg.seed)?,
        6 => derivative(&sizes, cfg.seed)?,
        7 => envelope_correctness(&sizes, cfg.seed)?,
        8 => energy_estimates(&sizes, cfg.seed)?,
        9 => geodesic_segments(&sizes, cfg.seed)?,
        10 => rays(&sizes)?,
        11 => completeness(&sizes, cfg.seed)?,
        12 => determinism(cfg.seed)?,
        _ => return Err(crate::Error::Parameter(format!("no criterion {id}"))),
    };
    Ok(CriterionReport::new(id, claims))
}

/// Runs every criterion in order.
pub fn run_suite(cfg: SuiteConfig) -> Result<Vec<CriterionReport>> {
    (1..=12).map(|id| criterion(id, cfg)).collect()
}

pub fn suite_record(cfg: SuiteConfig, inputs_digest: String, reports: &[CriterionReport]) -> ResultRecord {
    let mut b = RecordBuilder::new("check", inputs_digest);
    b.output("level", &cfg.level).output("seed", &cfg.seed);
    let summary: Vec<_> = reports
        .iter()
        .map(|r| serde_json::json!({"id": r.id, "title": r.title, "pass": r.pass}))
        .collect();
    b.output("criteria", &summary);
    for r in reports {
        b.claims(r.claims.iter().map(|c| Claim {
            name: format!("{}: {}", r.id, c.name),
            ..c.clone()
        }));
    }
    b.finish()
}

fn metric_axioms(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let rows: Vec<[f64; 7]> = triples(&form, seed, s.triples)?
        .par_iter()
        .map(|[u, v, w]| {
            let uv = d1(&form, u, v)?;
            let vu = d1(&form, v, u)?;
            let uw = d1(&form, u, w)?;
            let wv = d1(&form, w, v)?;
            let uu = d1(&form, u, u)?;
            let near = u.add_constant(1e-9);
            let unear = d1(&form, u, &near)?;
            // Largest sup-distance among pairs with d1 ≤ 1e-8, relative to scale.
            let mut indiscernible = 0.0_f64;
            for (d, a, b) in [(uv, u, v), (uw, u, w), (wv, w, v), (uu, u, u), (unear, u, &near)] {
                if d <= 1e-8 {
                    let (fa, fb) = (a.full_values(), b.full_values());
                    let scale = 1.0 + osc(&fa).max(osc(&fb));
                    indiscernible = indiscernible.max(sup_norm_diff(&fa, &fb) / scale);
                }
            }
            Ok([
                (uv - vu).abs(),
                uv.min(uw).min(wv),
                uv - uw - wv,
                uu,
                indiscernible,
                unear,
                uv,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        Claim::at_most(
            "symmetry |d(u,v) - d(v,u)|",
            max_of(rows.iter().map(|r| r[0])),
            0.0,
            0.0,
        ),
        Claim::at_least("nonnegativity min d", min_of(rows.iter().map(|r| r[1])), 0.0, 1e-8),
        Claim::at_most(
            "triangle d(u,v) - d(u,w) - d(w,v)",
            max_of(rows.iter().map(|r| r[2])),
            0.0,
            1e-8,
        ),
        Claim::at_most("identity d(u,u)", max_of(rows.iter().map(|r| r[3])), 0.0, 1e-8),
        Claim::at_most(
            "indiscernibles sup|u-v|/scale where d <= 1e-8",
            max_of(rows.iter().map(|r| r[4])),
            0.0,
            1e-6,
        ),
    ])
}

fn pythagorean(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let gaps: Vec<f64> = triples(&form, seed, s.triples)?
        .par_iter()
        .map(|[u, v, _]| {
            let p = metric_rooftop(&form, u, v);
            Ok((d1(&form, u, v)? - d1(&form, u, &p)? - d1(&form, v, &p)?).abs())
        })
        .collect::<Result<_>>()?;
    Ok(vec![Claim::at_most(
        "|d(u,v) - d(u,P) - d(v,P)|",
        max_of(gaps),
        0.0,
        1e-9,
    )])
}

/// `I₁/24 ≤ d₁ ≤ I₁`.
pub const COMPARISON_CONSTANT: f64 = 24.0;

fn double_bound(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let rows: Vec<(f64, f64)> = triples(&form, seed, s.triples)?
        .par_iter()
        .map(|[u, v, _]| {
            let d = d1(&form, u, v)?;
            let i = i1(&form, u, v);
            Ok((i / COMPARISON_CONSTANT - d, d - i))
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        Claim::at_most("I1/24 - d1", max_of(rows.iter().map(|r| r.0)), 0.0, 0.0),
        Claim::at_most("d1 - I1", max_of(rows.iter().map(|r| r.1)), 0.0, 1e-9),
    ])
}

fn halfway(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let excess: Vec<f64> = triples(&form, seed, s.triples)?
        .par_iter()
        .map(|[u, v, _]| {
            let mid = u.lerp(v, 0.5);
            Ok(d1(&form, u, &mid)? - 3.0 * d1(&form, u, v)?)
        })
        .collect::<Result<_>>()?;
    Ok(vec![Claim::at_most(
        "d(u,(u+v)/2) - 3 d(u,v)",
        max_of(excess),
        0.0,
        1e-9,
    )])
}

fn contraction(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let rows: Vec<(f64, f64)> = triples(&form, seed, s.triples)?
        .par_iter()
        .map(|[u, v, phi]| {
            let pu = metric_rooftop(&form, u, phi);
            let pv = metric_rooftop(&form, v, phi);
            let contract = d1(&form, &pu, &pv)? - d1(&form, u, v)?;
            let p = metric_rooftop(&form, u, v);
            let roof = d1(&form, v, &p)? - d1(&form, &max_pot(u, v), u)?;
            Ok((contract, roof))
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        Claim::at_most(
            "d(P(u,phi),P(v,phi)) - d(u,v)",
            max_of(rows.iter().map(|r| r.0)),
            0.0,
            1e-9,
        ),
        Claim::at_most(
            "d(v,P(u,v)) - d(max(u,v),u)",
            max_of(rows.iter().map(|r| r.1)),
            0.0,
            1e-9,
        ),
    ])
}

fn derivative(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let dt = 1e-3;
    let rows: Vec<(f64, f64)> = (0..s.pairs as u64)
        .into_par_iter()
        .map(|k| {
            let (u, v) = pole_free_pair(&form, seed, 6, k)?;
            let mut fd_err = 0.0_f64;
            for t in [0.25, 0.5, 0.75] {
                let a = rooftop_derivative(&form, &u, &v, t)?;
                let plus = energy_of_values(&form, &rooftop_path(&form, u.values(), v.values(), t + dt));
                let minus = energy_of_values(&form, &rooftop_path(&form, u.values(), v.values(), t - dt));
                let fd = (plus - minus) / (2.0 * dt);
                fd_err = fd_err.max((a - fd).abs() / (1.0 + a.abs()));
            }
            let q = energy_gap_quadrature(&form, &u, &v, 32)?;
            let p = bottom_free(rooftop(&form, &u, &v))?;
            let exact = energy_difference(&form, &v, &p);
            Ok((fd_err, (q - exact).abs() / (1.0 + exact.abs())))
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        Claim::at_most(
            "relative |derivative - central difference|, dt = 1e-3",
            max_of(rows.iter().map(|r| r.0)),
            0.0,
            1e-2,
        ),
        Claim::at_most(
            "relative |quadrature K=32 - (I(v) - I(P(u,v)))|",
            max_of(rows.iter().map(|r| r.1)),
            0.0,
            1e-3,
        ),
    ])
}

/// `h·Σ |θ + L(w)|` over nodes where the envelope is off the obstacle.
pub fn contact_defect(form: &Form, f: &[f64]) -> Result<f64> {
    let w = envelope_below(form, &Obstacle::from_values(f.to_vec())).into_potential()?;
    let dens = full_density(form, w.values());
    let tc = tol_contact(f);
    Ok(form.h()
        * (0..f.len())
            .filter(|&i| w.values()[i] < f[i] - tc)
            .map(|i| dens[i].abs())
            .sum::<f64>())
}

/// Floor below which a contact defect is rounding noise: `L` carries a
/// factor `N²`, so rounding in `w` shows up amplified by it.
pub fn defect_floor(form: &Form, f: &[f64]) -> f64 {
    let n = form.n() as f64;
    64.0 * f64::EPSILON * n * n * (1.0 + osc(f) + form.max_abs())
}

fn envelope_correctness(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let rows: Vec<f64> = (0..s.obstacles as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, 7, k);
            let n = 8 + rng.index(5);
            let form = Form::cosine(CircleGrid::new(n)?, rng.uniform(0.0, 2.5))?;
            let amp = rng.uniform(0.01, 0.5);
            let mut f = random_obstacle(&mut rng, n, amp, 0.2);
            let mut poles = Vec::new();
            if k % 3 == 2 {
                let node = rng.index(n);
                let mass = rng.uniform(0.1, 0.9);
                let g = green_function(form.grid(), node)?;
                f.iter_mut().zip(&g).for_each(|(a, b)| *a += mass * b);
                poles.push(Pole { node, mass });
            }
            let c: f64 = poles.iter().map(|p| p.mass).sum();
            let obstacle = Obstacle {
                values: f.clone(),
                poles: poles.clone(),
            };
            let got = envelope_below(&form, &obstacle);
            let theta: Vec<f64> = form.density().iter().map(|t| t - c).collect();
            let mut reduced = f.clone();
            for p in &poles {
                let g = green_function(form.grid(), p.node)?;
                reduced.iter_mut().zip(&g).for_each(|(a, b)| *a -= p.mass * b);
            }
            let want = enumerate_envelope(&theta, &reduced);
            Ok(match (got.potential, want) {
                (None, None) => 0.0,
                (Some(p), Some(w)) => sup_norm_diff(p.values(), &w),
                _ => f64::INFINITY,
            })
        })
        .collect::<Result<_>>()?;
    let mut claims = vec![Claim::at_most(
        "sup |envelope - contact-set oracle|, N in 8..=12",
        max_of(rows),
        0.0,
        1e-9,
    )];
    let mut defects = Vec::new();
    for n in [s.n, 2 * s.n] {
        let form = corpus_form(n)?;
        let f = random_obstacle(&mut stream(seed, 7, 1 << 20), n, 0.3, 0.0);
        defects.push((contact_defect(&form, &f)?, defect_floor(&form, &f)));
    }
    claims.push(Claim::at_most(
        format!("contact defect at N = {}", s.n),
        defects[0].0,
        0.0,
        1e-6,
    ));
    claims.push(Claim::at_most(
        format!(
            "contact defect at N = {} vs N = {} (rounding floor as tolerance)",
            2 * s.n,
            s.n
        ),
        defects[1].0,
        defects[0].0,
        defects[1].1,
    ));
    Ok(claims)
}

fn energy_estimates(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let h = form.h();
    let integral = |a: &[f64], b: &[f64], m: &[f64]| h * (0..a.len()).map(|i| (a[i] - b[i]) * m[i]).sum::<f64>();
    let rows: Vec<[f64; 4]> = triples(&form, seed, s.triples)?
        .par_iter()
        .map(|[u, v, _]| {
            let (fu, fv) = (u.full_values(), v.full_values());
            let (mu, mv) = (full_density(&form, &fu), full_density(&form, &fv));
            let diff = energy_difference(&form, u, v);
            let lower = integral(&fu, &fv, &mu) - diff;
            let upper = diff - integral(&fu, &fv, &mv);
            let fp = metric_rooftop(&form, u, v).full_values();
            let mp = full_density(&form, &fp);
            let dp = energy_difference_values(&form, &fu, &fp);
            let half = 0.5 * integral(&fu, &fp, &mp) - dp;
            let upper_p = dp - integral(&fu, &fp, &mp);
            Ok([lower, upper, half, upper_p])
        })
        .collect::<Result<_>>()?;
    let mut claims = vec![
        Claim::at_most(
            "int (u-v) MA(u) - (I(u) - I(v))",
            max_of(rows.iter().map(|r| r[0])),
            0.0,
            1e-9,
        ),
        Claim::at_most(
            "(I(u) - I(v)) - int (u-v) MA(v)",
            max_of(rows.iter().map(|r| r[1])),
            0.0,
            1e-9,
        ),
        Claim::at_most(
            "v <= u: int (u-v) MA(v) / 2 - (I(u) - I(v))",
            max_of(rows.iter().map(|r| r[2])),
            0.0,
            1e-9,
        ),
        Claim::at_most(
            "v <= u: (I(u) - I(v)) - int (u-v) MA(v)",
            max_of(rows.iter().map(|r| r[3])),
            0.0,
            1e-9,
        ),
    ];

    let marked = marked_nodes(s.n);
    let items: Vec<Potential> = (0..(s.triples / 10).max(8) as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, 8, k);
            let node = marked[rng.index(marked.len())];
            let mass = rng.uniform(0.1, 0.6);
            random_potential(&form, &mut rng, Some((node, mass)), (-0.5, 0.5))
        })
        .collect::<Result<_>>()?;
    let v_th = v_theta(&form).values().to_vec();
    let tails: Vec<[f64; 6]> = items
        .par_iter()
        .enumerate()
        .map(|(k, u)| {
            let fu = u.full_values();
            let e = energy(&form, u)?.finite()?;
            let mut last_i = f64::INFINITY;
            let mut last_i1 = f64::INFINITY;
            let mut mono_i = f64::NEG_INFINITY;
            let mut mono_i1 = f64::NEG_INFINITY;
            let mut below = f64::NEG_INFINITY;
            let mut decay = Vec::new();
            let mut final_gap = 0.0;
            for j in 0..=24 {
                let c = (1u64 << j) as f64 * 1e-3;
                let uc = truncate(&form, u, c);
                let ic = energy_of_values(&form, uc.values());
                let gap = i1_values(&form, uc.values(), &fu);
                mono_i = mono_i.max(ic - last_i);
                mono_i1 = mono_i1.max(gap - last_i1);
                below = below.max(e - ic);
                last_i = ic;
                last_i1 = gap;
                final_gap = gap.max((ic - e).abs());
                let mc = full_density(&form, uc.values());
                let mass = h
                    * (0..fu.len())
                        .filter(|&i| fu[i] <= v_th[i] - c)
                        .map(|i| mc[i])
                        .sum::<f64>();
                decay.push(c * mass);
            }
            // Sublevel masses for u ≤ v ≤ 0, both carrying poles.
            let mut rng = stream(seed, 18, k as u64);
            let v = u.add_constant(-max_of(fu.iter().copied()) - rng.uniform(0.0, 0.3));
            let node = u.poles()[0].node;
            let mass = rng.uniform(0.1, 0.6);
            let other = random_potential(&form, &mut rng, Some((node, mass)), (-0.5, 0.5))?;
            let w = bottom_free(rooftop(&form, &v, &other.add_constant(-0.2)))?;
            let (fv, fw) = (v.full_values(), w.full_values());
            let depth = max_of((0..fw.len()).map(|i| v_th[i] - fw[i]));
            let mut sublevel = f64::NEG_INFINITY;
            for q in 1..=8 {
                let c = depth * q as f64 / 8.0;
                if !(0..fv.len()).any(|i| fv[i] <= v_th[i] - c) {
                    continue;
                }
                sublevel = sublevel.max(sublevel_mass(&form, &v, c) - 2.0 * sublevel_mass(&form, &w, c / 2.0));
            }
            let decay_tail = decay
                .windows(2)
                .skip(decay.len() / 2)
                .map(|p| p[1] - p[0])
                .fold(f64::NEG_INFINITY, f64::max);
            Ok([
                mono_i.max(below),
                mono_i1,
                final_gap,
                decay_tail.max(*decay.last().expect("nonempty")),
                sublevel,
                0.0,
            ])
        })
        .collect::<Result<_>>()?;
    claims.push(Claim::at_most(
        "truncation: increase of I(u_C) or I(u) - I(u_C)",
        max_of(tails.iter().map(|r| r[0])),
        0.0,
        1e-9,
    ));
    claims.push(Claim::at_most(
        "truncation: increase of I1(u_C, u)",
        max_of(tails.iter().map(|r| r[1])),
        0.0,
        1e-9,
    ));
    claims.push(Claim::at_most(
        "truncation: final |I(u_C) - I(u)| and I1(u_C, u)",
        max_of(tails.iter().map(|r| r[2])),
        0.0,
        1e-9,
    ));
    claims.push(Claim::at_most(
        "C * MA(u_C)(u <= V - C): tail increase and final value",
        max_of(tails.iter().map(|r| r[3])),
        0.0,
        1e-9,
    ));
    claims.push(Claim::at_most(
        "MA(v)(v <= V - C) - 2 MA(u)(u <= V - C/2)",
        max_of(tails.iter().map(|r| r[4])),
        0.0,
        1e-9,
    ));
    Ok(claims)
}

struct GeodesicStats {
    metric_rel: f64,
    chord_rel: f64,
}

fn geodesic_stats(n: usize, n_t: usize, seed: u64, k: u64) -> Result<GeodesicStats> {
    let form = corpus_form(n)?;
    let (u, v) = pole_free_pair(&form, seed, 9, k)?;
    let field = segment_solve(&form, &u, &v, 1.0, n_t)?;
    let report = verify_geodesic(&form, &field);
    let both: Vec<f64> = u.values().iter().chain(v.values()).copied().collect();
    Ok(GeodesicStats {
        metric_rel: report.metric_deviation / report.d1_endpoints.max(f64::MIN_POSITIVE),
        chord_rel: report.energy_chord_deviation / osc(&both).max(f64::MIN_POSITIVE),
    })
}

fn geodesic_segments(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let runs: Vec<(GeodesicStats, GeodesicStats)> = (0..s.geo_pairs as u64)
        .into_par_iter()
        .map(|k| {
            Ok((
                geodesic_stats(s.n, s.n_t, seed, k)?,
                geodesic_stats(2 * s.n, 2 * s.n_t, seed, k)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut claims = vec![
        Claim::at_most(
            "metric-speed deviation / d1",
            max_of(runs.iter().map(|r| r.0.metric_rel)),
            0.0,
            5e-2,
        ),
        Claim::at_most(
            "energy-chord deviation / osc",
            max_of(runs.iter().map(|r| r.0.chord_rel)),
            0.0,
            2e-2,
        ),
        Claim::at_most(
            "metric deviation ratio after doubling N and N_t",
            max_of(runs.iter().map(|r| r.1.metric_rel / r.0.metric_rel)),
            0.5,
            0.0,
        ),
        Claim::at_most(
            "energy-chord ratio after doubling N and N_t",
            max_of(runs.iter().map(|r| r.1.chord_rel / r.0.chord_rel)),
            0.5,
            0.0,
        ),
    ];
    let form = corpus_form(s.n)?;
    let (u, v) = pole_free_pair(&form, seed, 9, 0)?;
    let tol = tol_geo(u.values(), v.values());
    let full = segment_solve(&form, &u, &v, 1.0, s.n_t)?;
    let half_n = s.n_t / 2;
    let half = segment_solve(&form, &u, &full.slice(half_n), 0.5, half_n)?;
    let restriction = (0..=half_n)
        .map(|k| sup_norm_diff(&full.values[k], &half.values[k]))
        .fold(0.0, f64::max);
    let boundary = sup_norm_diff(&full.values[0], u.values()).max(sup_norm_diff(&full.values[s.n_t], v.values()));
    claims.push(Claim::at_most("restriction to [0, l/2]", restriction, 0.0, 2.0 * tol));
    claims.push(Claim::at_most("boundary slices", boundary, 0.0, 2.0 * tol));
    Ok(claims)
}

fn maximal_pole_curve(form: &Form, m: usize) -> Result<TestCurve> {
    maximize_curve(form, &preset_pole_curve(form, form.n() / 2, -0.25, 2.0, m)?)
}

fn rays(s: &Sizes) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let phi = v_theta(&form);
    let tol = 1e-9 * (1.0 + osc(phi.values()));
    let curve = preset_pole_curve(&form, s.n / 2, -0.25, 2.0, s.m)?;
    let maximal = maximal_pole_curve(&form, s.m)?;
    let defect = max_of(maximality_defects(&form, &maximal)?);
    let mut claims = vec![Claim::at_most("maximality defect per tau", defect, 0.0, tol)];

    let fine = maximal_pole_curve(&form, 2 * s.m - 1)?;
    let t_max = 1.0 + attainment_time(&maximal).max(attainment_time(&fine));
    let budget = maximal.h_tau() * t_max;
    let budget_fine = fine.h_tau() * t_max;
    let (err, err_back) = round_trip_errors(&maximal, &time_grid(t_max, (t_max / 0.05).ceil() as usize))?;
    let (err_fine, err_back_fine) = round_trip_errors(&fine, &time_grid(t_max, (t_max / 0.05).ceil() as usize))?;
    claims.push(Claim::at_most("hat(check(psi)) - psi", err, 0.0, budget + tol));
    claims.push(Claim::at_most("check(hat(ray)) - ray", err_back, 0.0, budget + tol));
    claims.push(Claim::at_most(
        "hat(check(psi)) - psi, M doubled",
        err_fine,
        0.0,
        budget_fine + tol,
    ));
    claims.push(Claim::at_most(
        "check(hat(ray)) - ray, M doubled",
        err_back_fine,
        0.0,
        budget_fine + tol,
    ));
    claims.push(Claim::at_most(
        "round-trip budget ratio after doubling M",
        budget_fine / budget,
        0.5,
        1e-12,
    ));

    let ray = construct_ray(&form, &curve, &time_grid(1.0, s.n_t))?;
    let field = SpacetimeField {
        length: 1.0,
        values: ray.slices.clone(),
        sweeps: 0,
        residual: 0.0,
    };
    let end = ray.slices.len() - 1;
    let seg = segment_solve(&form, &ray.slice(0), &ray.slice(end), 1.0, s.n_t)?;
    let both: Vec<f64> = ray.slices[0].iter().chain(&ray.slices[end]).copied().collect();
    let scale = osc(&both);
    let restriction = ray
        .slices
        .iter()
        .zip(&seg.values)
        .map(|(a, b)| sup_norm_diff(a, b))
        .fold(0.0, f64::max);
    claims.push(Claim::at_most(
        "ray on [0,1] vs segment_solve",
        restriction,
        0.0,
        5e-2 * scale,
    ));
    let report = verify_geodesic(&form, &field);
    claims.push(Claim::at_most(
        "energy-chord deviation along the ray",
        report.energy_chord_deviation,
        0.0,
        2e-2 * scale,
    ));
    claims.push(Claim::at_most(
        "metric-speed deviation along the ray / d1",
        report.metric_deviation / report.d1_endpoints.max(f64::MIN_POSITIVE),
        0.0,
        5e-2,
    ));
    Ok(claims)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyReport {
    /// `d₁(φ_j, φ_{j+1})`.
    pub steps: Vec<f64>,
    /// `d₁(φ_j, ψ_{j,k})` for `j ≤ j_max`, `k ≤ k_max`.
    pub tails: Vec<Vec<f64>>,
    /// `d₁(φ_j, ψ)` for `j ≤ 3·j_max`, with `ψ = ψ_{3·j_max}`.
    pub limit_distances: Vec<f64>,
    /// Largest pointwise decrease `ψ_j − ψ_{j+1}`, where `ψ_j` is the rooftop of
    /// `φ_j, …, φ_last`.
    pub limit_decrease: f64,
    /// `1 + osc` of the limit point, the scale for `limit_decrease`.
    pub scale: f64,
    pub j_max: usize,
}

/// Seeded sequence `φ_j = (1 − ρ_j)·w + ρ_j·a` with non-increasing
/// `ρ_j ∝ 2^{−j}` small enough that `d₁(φ_j, φ_{j+1}) ≤ 2^{−j}`;
/// `ψ_{j,k}` is the rooftop of `φ_j, …, φ_{j+k}`.
pub fn cauchy_construction(form: &Form, rng: &mut SplitMix64, j_max: usize, k_max: usize) -> Result<CauchyReport> {
    let tail = 3 * j_max;
    let w = random_potential(form, rng, None, (-0.5, 0.5))?;
    let a = random_potential(form, rng, None, (-0.5, 0.5))?;
    let kappa = 1.0 / (3.0 * sup_norm_diff(a.values(), w.values()));
    let seq: Vec<Potential> = (0..=tail + k_max)
        .map(|j| {
            let rho = kappa * 0.5f64.powi(j as i32) * rng.uniform(0.5, 1.0);
            w.lerp(&a, rho)
        })
        .collect();
    let steps: Vec<f64> = seq
        .par_windows(2)
        .map(|p| d1(form, &p[0], &p[1]))
        .collect::<Result<_>>()?;
    let tails: Vec<Vec<f64>> = (0..=j_max)
        .into_par_iter()
        .map(|j| {
            (0..=k_max)
                .map(|k| d1(form, &seq[j], &bottom_free(multi_rooftop(form, &seq[j..=j + k]))?))
                .collect()
        })
        .collect::<Result<_>>()?;
    let end = seq.len() - 1;
    let limits: Vec<Potential> = (0..=tail)
        .into_par_iter()
        .map(|j| bottom_free(multi_rooftop(form, &seq[j..=end])))
        .collect::<Result<_>>()?;
    let limit_decrease = max_of(
        limits
            .windows(2)
            .map(|p| max_of(p[0].values().iter().zip(p[1].values()).map(|(x, y)| x - y))),
    );
    let psi = &limits[tail];
    let limit_distances: Vec<f64> = (0..=tail).map(|j| d1(form, &seq[j], psi)).collect::<Result<_>>()?;
    Ok(CauchyReport {
        steps,
        tails,
        limit_distances,
        limit_decrease,
        scale: 1.0 + osc(psi.values()),
        j_max,
    })
}

pub fn cauchy_claims(r: &CauchyReport) -> Vec<Claim> {
    let pow = |e: i32| 0.5f64.powi(e);
    let tail = r.limit_distances.len() - 1;
    vec![
        Claim::at_most(
            "d(phi_j, phi_j+1) - 2^-j",
            max_of(r.steps.iter().enumerate().map(|(j, d)| d - pow(j as i32))),
            0.0,
            0.0,
        ),
        Claim::at_most(
            format!(
                "d(phi_j, psi_jk) - 2^(1-j), j <= {}, k <= {}",
                r.j_max,
                r.tails[0].len() - 1
            ),
            max_of(
                r.tails
                    .iter()
                    .enumerate()
                    .flat_map(|(j, row)| row.iter().map(move |d| d - pow(j as i32 - 1))),
            ),
            0.0,
            1e-8,
        ),
        Claim::at_most("psi_j - psi_j+1", r.limit_decrease, 0.0, 1e-12 * r.scale),
        Claim::at_most(
            "d(phi_j, psi) tail increase",
            max_of(r.limit_distances[r.j_max..].windows(2).map(|p| p[1] - p[0])),
            0.0,
            1e-12,
        ),
        Claim::at_most(
            format!("d(phi_{tail}, psi)"),
            r.limit_distances[tail],
            0.0,
            pow(tail as i32 - 1),
        ),
    ]
}

fn completeness(s: &Sizes, seed: u64) -> Result<Vec<Claim>> {
    let form = corpus_form(s.n)?;
    let report = cauchy_construction(&form, &mut stream(seed, 11, 0), 6, 12)?;
    Ok(cauchy_claims(&report))
}

fn determinism(seed: u64) -> Result<Vec<Claim>> {
    let cfg = SuiteConfig {
        level: CheckLevel::Fast,
        seed,
    };
    let run = || -> Result<String> {
        let reports = vec![criterion(1, cfg)?, criterion(9, cfg)?];
        Ok(suite_record(cfg, String::new(), &reports).digest)
    };
    let same = run()? == run()?;
    Ok(vec![Claim::at_most(
        "digest mismatches over two fast reruns",
        if same { 0.0 } else { 1.0 },
        0.0,
        0.0,
    )])
}
