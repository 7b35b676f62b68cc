//! Subcommands: build inputs from a scenario, compute, and return a record
//! plus CSV tables.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use super::record::{Claim, RecordBuilder, ResultRecord, Table};
use super::scenario::Scenario;
use super::suite::{cauchy_claims, cauchy_construction, run_suite, suite_record, CriterionReport, SuiteConfig};
use crate::energy::{d1, energy, energy_of_values, i1, metric_rooftop, tol_e};
use crate::envelopes::{envelope_below_with, tol_contact, tol_env, v_theta, EnvelopeOptions};
use crate::error::{Error, Result};
use crate::geodesics::{
    segment_solve_with, speed_constants, tol_geo, verify_geodesic, GeodesicOptions, SpacetimeField,
};
use crate::grid::{min_obstacle_many, osc, sup_norm_diff, theta_sh_check, Form, Obstacle, Potential};
use crate::rays::{
    attainment_time, curve_defects, inverse_legendre, maximality_defects, maximize_curve, preset_pole_curve,
    round_trip_errors, time_grid,
};
use crate::rng::SplitMix64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Venv,
    Envelope,
    Energy,
    Dist,
    Geodesic,
    Ray,
    Cauchy,
    Check,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Venv,
        Command::Envelope,
        Command::Energy,
        Command::Dist,
        Command::Geodesic,
        Command::Ray,
        Command::Cauchy,
        Command::Check,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Venv => "venv",
            Command::Envelope => "envelope",
            Command::Energy => "energy",
            Command::Dist => "dist",
            Command::Geodesic => "geodesic",
            Command::Ray => "ray",
            Command::Cauchy => "cauchy",
            Command::Check => "check",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: ResultRecord,
    pub tables: Vec<Table>,
    /// Per-criterion reports of `check`; empty for other commands.
    pub criteria: Vec<CriterionReport>,
}

/// Process exit code for an error: 2 for invalid input, 3 for numerical
/// divergence, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Scenario(_)
        | Error::GridTooSmall(_)
        | Error::Length { .. }
        | Error::FormMass(_)
        | Error::Node { .. }
        | Error::PoleMass(_)
        | Error::MassMismatch { .. }
        | Error::NegativeMeasure { .. }
        | Error::Cone { .. }
        | Error::NonFinite
        | Error::PoleNotAllowed(_)
        | Error::Parameter(_) => 2,
        Error::Divergence { .. } | Error::SingularityDiverged(_) | Error::Singular(_) => 3,
        Error::Bottom | Error::InfiniteEnergy | Error::AllBottom | Error::TTooSmall(_) => 1,
    }
}

/// JSON description of a failed run, written next to the results when a
/// solver diverges.
pub fn error_dump(command: Command, e: &Error) -> String {
    let mut map = serde_json::Map::new();
    map.insert("command".into(), json!(command.name()));
    map.insert("exit_code".into(), json!(exit_code(e)));
    map.insert("error".into(), json!(e.to_string()));
    match e {
        Error::Divergence {
            what,
            iterations,
            residual,
        } => {
            map.insert("solver".into(), json!(what));
            map.insert("iterations".into(), json!(iterations));
            map.insert("residual".into(), super::record::number17(*residual));
        }
        Error::Singular(r) | Error::SingularityDiverged(r) => {
            map.insert("residual".into(), super::record::number17(*r));
        }
        _ => {}
    }
    super::record::pretty(&serde_json::Value::Object(map))
}

pub fn run(command: Command, scenario: &Scenario) -> Result<RunOutput> {
    let mut b = RecordBuilder::new(command.name(), scenario.digest());
    if command == Command::Check {
        return check(scenario);
    }
    let form = scenario.build_form()?;
    let pots = scenario.build_potentials(&form)?;
    b.output("n", &form.n())
        .output("renormalization", &form.renormalization());
    let tables = match command {
        Command::Venv => venv(&form, &mut b),
        Command::Envelope => envelope(scenario, &form, &pots, &mut b)?,
        Command::Energy => energies(scenario, &form, &pots, &mut b)?,
        Command::Dist => dist(scenario, &form, &pots, &mut b)?,
        Command::Geodesic => geodesic(scenario, &form, &pots, &mut b)?,
        Command::Ray => ray(scenario, &form, &mut b)?,
        Command::Cauchy => cauchy(scenario, &form, &mut b)?,
        Command::Check => unreachable!("handled above"),
    };
    Ok(RunOutput {
        record: b.finish(),
        tables,
        criteria: Vec::new(),
    })
}

fn lookup<'a>(pots: &'a BTreeMap<String, Potential>, name: &str) -> Result<&'a Potential> {
    pots.get(name)
        .ok_or_else(|| Error::Scenario(format!("no potential named '{name}'")))
}

fn x_column(form: &Form) -> Vec<f64> {
    (0..form.n()).map(|i| form.grid().x(i)).collect()
}

/// Table with an `x` column followed by one column per labelled function.
fn x_table(name: &str, form: &Form, columns: &[(&str, &[f64])]) -> Table {
    let x = x_column(form);
    let mut header = vec!["x".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    let rows = (0..form.n())
        .map(|i| {
            let mut row = vec![x[i]];
            row.extend(columns.iter().map(|(_, c)| c[i]));
            row
        })
        .collect();
    Table {
        name: name.into(),
        columns: header,
        rows,
    }
}

fn cone_tol(scenario: &Scenario, form: &Form) -> f64 {
    scenario.tolerances.cone.unwrap_or_else(|| form.tol_pos())
}

fn venv(form: &Form, b: &mut RecordBuilder) -> Vec<Table> {
    let v = v_theta(form);
    let zero = vec![0.0; form.n()];
    let tc = tol_contact(&zero);
    let contact: Vec<bool> = v.values().iter().map(|&x| x >= -tc).collect();
    let top = v.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sh = theta_sh_check(form, v, form.tol_pos());
    b.output("theta", form.density())
        .output("v_theta", v.values())
        .output("contact", &contact)
        .output("energy", &energy_of_values(form, v.values()));
    b.claim(Claim::at_most(
        "cone violation of V",
        sh.worst_violation,
        0.0,
        form.tol_pos(),
    ))
    .claim(Claim::at_most("max V", top, 0.0, tol_env(&zero)))
    .claim(Claim::at_least("max V (touches 0)", top, 0.0, tc));
    vec![x_table(
        "venv",
        form,
        &[("theta", form.density()), ("v_theta", v.values())],
    )]
}

fn envelope(
    scenario: &Scenario,
    form: &Form,
    pots: &BTreeMap<String, Potential>,
    b: &mut RecordBuilder,
) -> Result<Vec<Table>> {
    let p = &scenario.envelope;
    let obstacle = match &p.obstacle {
        Some(values) => {
            if values.len() != form.n() {
                return Err(Error::Scenario(format!(
                    "envelope.obstacle has {} values for a grid of {}",
                    values.len(),
                    form.n()
                )));
            }
            Obstacle::from_values(values.clone())
        }
        None => {
            if p.inputs.is_empty() {
                return Err(Error::Scenario("envelope.inputs is empty".into()));
            }
            let list = p.inputs.iter().map(|n| lookup(pots, n)).collect::<Result<Vec<_>>>()?;
            min_obstacle_many(&list)
        }
    };
    let opts = EnvelopeOptions {
        method: p.method,
        ..Default::default()
    };
    let r = envelope_below_with(form, &obstacle, &opts);
    b.output("method", &p.method)
        .output("bottom", &r.is_bottom())
        .output("iterations", &r.iterations)
        .output("residual", &r.residual)
        .output("obstacle", &obstacle.values)
        .output("obstacle_poles", &obstacle.poles);
    let Some(w) = &r.potential else {
        return Ok(vec![x_table("envelope", form, &[("obstacle", &obstacle.values)])]);
    };
    let full = w.full_values();
    let excess = full
        .iter()
        .zip(&obstacle.values)
        .map(|(a, f)| a - f)
        .fold(f64::NEG_INFINITY, f64::max);
    let sh = theta_sh_check(form, w, cone_tol(scenario, form));
    b.output("envelope", &full)
        .output("poles", w.poles())
        .output("contact", &r.contact_mask);
    b.claim(Claim::at_most(
        "envelope - obstacle",
        excess,
        0.0,
        tol_env(&obstacle.values),
    ))
    .claim(Claim::at_most(
        "cone violation",
        sh.worst_violation,
        0.0,
        cone_tol(scenario, form),
    ));
    Ok(vec![x_table(
        "envelope",
        form,
        &[("obstacle", &obstacle.values), ("envelope", &full)],
    )])
}

fn energies(
    scenario: &Scenario,
    form: &Form,
    pots: &BTreeMap<String, Potential>,
    b: &mut RecordBuilder,
) -> Result<Vec<Table>> {
    let names: Vec<String> = if scenario.energy.inputs.is_empty() {
        pots.keys().cloned().collect()
    } else {
        scenario.energy.inputs.clone()
    };
    let mut out = serde_json::Map::new();
    let mut columns = Vec::new();
    for name in &names {
        let u = lookup(pots, name)?;
        let e = energy(form, u)?;
        if let [.., (_, prev), (_, last)] = e.truncation_trace[..] {
            b.claim(Claim::at_most(
                format!("{name}: last truncation step"),
                (last - prev).abs(),
                0.0,
                tol_e(last),
            ));
        }
        out.insert(
            name.clone(),
            json!({
                "value": super::record::number17(e.value),
                "truncation_trace": super::record::json17(&e.truncation_trace),
                "pole_mass": super::record::number17(u.total_pole_mass()),
            }),
        );
        columns.push((name.clone(), u.full_values()));
    }
    b.output("energies", &out);
    let cols: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
    Ok(vec![x_table("potentials", form, &cols)])
}

fn dist(
    scenario: &Scenario,
    form: &Form,
    pots: &BTreeMap<String, Potential>,
    b: &mut RecordBuilder,
) -> Result<Vec<Table>> {
    let u = lookup(pots, &scenario.dist.u)?;
    let v = lookup(pots, &scenario.dist.v)?;
    let tol = scenario.tolerances.bound;
    let d = d1(form, u, v)?;
    let d_rev = d1(form, v, u)?;
    let i = i1(form, u, v);
    let p = metric_rooftop(form, u, v);
    b.output("d1", &d)
        .output("i1", &i)
        .output("energy_u", &energy(form, u)?.value)
        .output("energy_v", &energy(form, v)?.value)
        .output("energy_rooftop", &energy_of_values(form, p.values()))
        .output(
            "bound",
            &json!({"lower": i / super::suite::COMPARISON_CONSTANT, "d1": d, "upper": i}),
        );
    b.claim(Claim::at_most("|d(u,v) - d(v,u)|", (d - d_rev).abs(), 0.0, 0.0))
        .claim(Claim::at_least("d1", d, 0.0, tol))
        .claim(Claim::at_least(
            "d1 (lower bound I1/24)",
            d,
            i / super::suite::COMPARISON_CONSTANT,
            0.0,
        ))
        .claim(Claim::at_most("d1 (upper bound I1)", d, i, tol));
    let (fu, fv) = (u.full_values(), v.full_values());
    Ok(vec![x_table(
        "dist",
        form,
        &[("u", &fu), ("v", &fv), ("rooftop", p.values())],
    )])
}

fn field_tables(prefix: &str, form: &Form, field: &SpacetimeField, energies: &[f64]) -> Vec<Table> {
    let t_rows = (0..=field.n_t())
        .map(|k| {
            let r = &field.values[k];
            vec![
                field.time(k),
                energies[k],
                r.iter().copied().fold(f64::INFINITY, f64::min),
                r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ]
        })
        .collect();
    let names: Vec<String> = (0..=field.n_t()).map(|k| format!("t{k}")).collect();
    let cols: Vec<(&str, &[f64])> = names
        .iter()
        .zip(&field.values)
        .map(|(n, r)| (n.as_str(), r.as_slice()))
        .collect();
    vec![
        Table {
            name: format!("{prefix}_t"),
            columns: vec!["t".into(), "energy".into(), "min".into(), "max".into()],
            rows: t_rows,
        },
        x_table(&format!("{prefix}_slices"), form, &cols),
    ]
}

fn geodesic(
    scenario: &Scenario,
    form: &Form,
    pots: &BTreeMap<String, Potential>,
    b: &mut RecordBuilder,
) -> Result<Vec<Table>> {
    let p = &scenario.geodesic;
    let u = lookup(pots, &p.u)?;
    let v = lookup(pots, &p.v)?;
    let opts = GeodesicOptions {
        scheme: p.scheme,
        ..Default::default()
    };
    let field = segment_solve_with(form, u, v, p.length, p.n_t, &opts)?;
    let report = verify_geodesic(form, &field);
    let speeds = speed_constants(&field);
    let both: Vec<f64> = u.values().iter().chain(v.values()).copied().collect();
    let tol = tol_geo(u.values(), v.values());
    let cone = cone_tol(scenario, form);
    let worst_cone = (0..=field.n_t())
        .map(|k| theta_sh_check(form, &field.slice(k), cone).worst_violation)
        .fold(0.0, f64::max);
    let boundary = sup_norm_diff(&field.values[0], u.values()).max(sup_norm_diff(&field.values[p.n_t], v.values()));
    b.output("scheme", &p.scheme)
        .output("length", &p.length)
        .output("n_t", &p.n_t)
        .output("sweeps", &field.sweeps)
        .output("residual", &field.residual)
        .output("report", &report)
        .output("speed_constants", &speeds);
    b.claim(Claim::at_most(
        "metric-speed deviation",
        report.metric_deviation,
        0.0,
        scenario.tolerances.metric_speed * report.d1_endpoints,
    ))
    .claim(Claim::at_most(
        "energy-chord deviation",
        report.energy_chord_deviation,
        0.0,
        scenario.tolerances.energy_chord * osc(&both),
    ))
    .claim(Claim::at_least("t-convexity", report.min_t_convexity, 0.0, tol))
    .claim(Claim::at_most("slice cone violation", worst_cone, 0.0, cone))
    .claim(Claim::at_most("boundary slices", boundary, 0.0, 2.0 * tol));
    Ok(field_tables("geodesic", form, &field, &report.energies))
}

fn ray(scenario: &Scenario, form: &Form, b: &mut RecordBuilder) -> Result<Vec<Table>> {
    let p = &scenario.ray;
    let pole = p.pole.or_else(|| scenario.marked.first().copied()).unwrap_or(0);
    if !scenario.marked.is_empty() && !scenario.marked.contains(&pole) {
        return Err(Error::Scenario(format!("ray.pole {pole} is not in the marked set")));
    }
    if !(p.dt > 0.0) || !(p.length > 0.0) || p.n_t < 2 {
        return Err(Error::Scenario("ray needs dt > 0, length > 0 and n_t >= 2".into()));
    }
    let curve = preset_pole_curve(form, pole, p.tau_minus, p.slope, p.m)?;
    let maximal = maximize_curve(form, &curve)?;
    let phi = v_theta(form);
    let tol = 1e-9 * (1.0 + osc(phi.values()));
    let defects = maximality_defects(form, &maximal)?;
    let shape = curve_defects(&maximal);

    let t_max = 1.0 + attainment_time(&maximal);
    let long = time_grid(t_max, (t_max / p.dt).ceil() as usize);
    let (err, err_back) = round_trip_errors(&maximal, &long)?;
    let budget = maximal.h_tau() * t_max;

    let times = time_grid(p.length, p.n_t);
    let ray = inverse_legendre(&maximal, &times)?;
    let field = SpacetimeField {
        length: p.length,
        values: ray.slices.clone(),
        sweeps: 0,
        residual: 0.0,
    };
    let report = verify_geodesic(form, &field);
    let seg = segment_solve_with(
        form,
        &ray.slice(0),
        &ray.slice(p.n_t),
        p.length,
        p.n_t,
        &GeodesicOptions::default(),
    )?;
    let gap_to_segment = ray
        .slices
        .iter()
        .zip(&seg.values)
        .map(|(a, s)| sup_norm_diff(a, s))
        .fold(0.0, f64::max);
    let c_psi = maximal.taus.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let cone = cone_tol(scenario, form);
    let worst_cone = (0..=p.n_t)
        .map(|k| theta_sh_check(form, &ray.slice(k), cone).worst_violation)
        .fold(0.0, f64::max);
    let cone_band = ray
        .slices
        .iter()
        .zip(&times)
        .map(|(s, &t)| {
            s.iter()
                .zip(phi.values())
                .map(|(a, f)| (a - f).abs() - c_psi * t)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let origin = sup_norm_diff(&ray.slices[0], phi.values());
    let finite: Vec<bool> = maximal.entries.iter().map(Option::is_some).collect();
    let pole_masses: Vec<f64> = maximal
        .entries
        .iter()
        .map(|e| e.as_ref().map_or(f64::NAN, Potential::total_pole_mass))
        .collect();

    b.output("pole", &pole)
        .output("taus", &maximal.taus)
        .output("finite", &finite)
        .output("pole_masses", &pole_masses)
        .output("maximality_defects", &defects)
        .output("curve_defects", &shape)
        .output("t_max", &t_max)
        .output(
            "round_trip",
            &json!({"hat_check": err, "check_hat": err_back, "budget": budget}),
        )
        .output("geodesic_report", &report)
        .output("gap_to_segment", &gap_to_segment);
    b.claim(Claim::at_most(
        "maximality defect",
        defects.iter().copied().fold(0.0, f64::max),
        0.0,
        tol,
    ))
    .claim(Claim::at_most("tau-concavity defect", shape.concavity, 0.0, tol))
    .claim(Claim::at_most("tau-monotonicity defect", shape.monotonicity, 0.0, tol))
    .claim(Claim::at_most("hat(check(psi)) - psi", err, 0.0, budget + tol))
    .claim(Claim::at_most("check(hat(ray)) - ray", err_back, 0.0, budget + tol))
    .claim(Claim::at_most("slice(0) - phi", origin, 0.0, tol))
    .claim(Claim::at_least("t-convexity", report.min_t_convexity, 0.0, tol))
    .claim(Claim::at_most("t-Lipschitz constant", report.lipschitz_t, c_psi, tol))
    .claim(Claim::at_most("|slice(t) - phi| - C t", cone_band, 0.0, tol))
    .claim(Claim::at_most("slice cone violation", worst_cone, 0.0, cone));
    Ok(field_tables("ray", form, &field, &report.energies))
}

fn cauchy(scenario: &Scenario, form: &Form, b: &mut RecordBuilder) -> Result<Vec<Table>> {
    let p = &scenario.cauchy;
    if p.j_max == 0 || p.k_max == 0 {
        return Err(Error::Scenario("cauchy needs j_max >= 1 and k_max >= 1".into()));
    }
    let mut rng = SplitMix64::new(scenario.seed).fork(11);
    let report = cauchy_construction(form, &mut rng, p.j_max, p.k_max)?;
    b.output("report", &report).claims(cauchy_claims(&report));
    let rows = report
        .limit_distances
        .iter()
        .enumerate()
        .map(|(j, d)| vec![j as f64, report.steps[j], *d])
        .collect();
    Ok(vec![Table {
        name: "cauchy".into(),
        columns: vec!["j".into(), "step".into(), "distance_to_limit".into()],
        rows,
    }])
}

fn check(scenario: &Scenario) -> Result<RunOutput> {
    let cfg = SuiteConfig {
        level: scenario.check.level,
        seed: scenario.seed,
    };
    let criteria = run_suite(cfg)?;
    let record = suite_record(cfg, scenario.digest(), &criteria);
    let rows = criteria
        .par_iter()
        .map(|r| vec![r.id as f64, if r.pass { 1.0 } else { 0.0 }, r.claims.len() as f64])
        .collect();
    Ok(RunOutput {
        record,
        tables: vec![Table {
            name: "check".into(),
            columns: vec!["criterion".into(), "pass".into(), "claims".into()],
            rows,
        }],
        criteria,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_json(text).unwrap()
    }

    #[test]
    fn dist_of_constants() {
        let s = scenario(
            r#"{"n": 32, "form": {"kind": "uniform"},
                "potentials": {"u": {"kind": "constant", "value": 0},
                               "v": {"kind": "constant", "value": -1}}}"#,
        );
        let out = run(Command::Dist, &s).unwrap();
        let o = &out.record.outputs;
        assert_eq!(o["d1"].as_f64().unwrap(), 1.0);
        assert_eq!(o["i1"].as_f64().unwrap(), 2.0);
        assert!(out.record.pass());
    }

    #[test]
    fn missing_potential_is_a_schema_error() {
        let s = scenario(r#"{"n": 16}"#);
        let e = run(Command::Dist, &s).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn pole_endpoints_are_rejected_by_geodesic() {
        let s = scenario(
            r#"{"n": 16, "marked": [4],
                "potentials": {"u": {"kind": "green", "node": 4, "mass": 0.3},
                               "v": {"kind": "constant", "value": 0}}}"#,
        );
        assert_eq!(exit_code(&run(Command::Geodesic, &s).unwrap_err()), 2);
    }

    #[test]
    fn records_are_reproducible() {
        let s = scenario(
            r#"{"n": 32, "potentials": {"u": {"kind": "random", "seed": 1},
                                         "v": {"kind": "random", "seed": 2}}}"#,
        );
        let a = run(Command::Geodesic, &s).unwrap();
        let b = run(Command::Geodesic, &s).unwrap();
        assert_eq!(a.record.digest, b.record.digest);
        assert!(a.record.pass(), "{:?}", a.record.failed_claims().collect::<Vec<_>>());
    }

    #[test]
    fn divergence_exits_3_with_a_residual_dump() {
        let e = Error::Divergence {
            what: "projected SOR",
            iterations: 10,
            residual: 0.5,
        };
        assert_eq!(exit_code(&e), 3);
        let dump: serde_json::Value = serde_json::from_str(&error_dump(Command::Envelope, &e)).unwrap();
        assert_eq!(dump["residual"].as_f64(), Some(0.5));
        assert_eq!(dump["exit_code"].as_i64(), Some(3));
    }
}
