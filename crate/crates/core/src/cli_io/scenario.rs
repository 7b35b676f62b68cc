//! Scenario files: a JSON description of the grid, the form, the marked pole
//! nodes, named potentials and per-command parameters.
//!
//! Every section has defaults, so `{}` is a valid scenario for `venv` and
//! `check`. Unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::{canonical, json17, sha256_hex};
use super::suite::CheckLevel;
use crate::corpus::random_potential;
use crate::envelopes::{v_theta, EnvelopeMethod};
use crate::error::{Error, Result};
use crate::geodesics::GeodesicScheme;
use crate::grid::{theta_sh_check, CircleGrid, Form, Pole, Potential};
use crate::rng::SplitMix64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "defaults::n")]
    pub n: usize,
    #[serde(default)]
    pub form: FormSpec,
    /// Nodes allowed to carry poles.
    #[serde(default)]
    pub marked: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub potentials: BTreeMap<String, PotentialSpec>,
    #[serde(default)]
    pub envelope: EnvelopeParams,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub dist: PairParams,
    #[serde(default)]
    pub geodesic: GeodesicParams,
    #[serde(default)]
    pub ray: RayParams,
    #[serde(default)]
    pub cauchy: CauchyParams,
    #[serde(default)]
    pub check: CheckParams,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl Default for Scenario {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty scenario is valid")
    }
}

mod defaults {
    pub fn n() -> usize {
        256
    }
    pub fn u() -> String {
        "u".into()
    }
    pub fn v() -> String {
        "v".into()
    }
    pub fn inputs() -> Vec<String> {
        vec!["u".into()]
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn n_t() -> usize {
        64
    }
    pub fn tau_minus() -> f64 {
        -0.25
    }
    pub fn slope() -> f64 {
        2.0
    }
    pub fn m() -> usize {
        101
    }
    pub fn shift() -> (f64, f64) {
        (-0.5, 0.5)
    }
    pub fn j_max() -> usize {
        6
    }
    pub fn k_max() -> usize {
        12
    }
    pub fn bound() -> f64 {
        1e-9
    }
    pub fn metric_speed() -> f64 {
        5e-2
    }
    pub fn energy_chord() -> f64 {
        2e-2
    }
    pub fn ray_dt() -> f64 {
        0.05
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormSpec {
    Uniform,
    /// `1 + a·cos(2πx)`.
    Cosine {
        a: f64,
    },
    /// Samples at the nodes, renormalized to unit mass.
    Custom {
        samples: Vec<f64>,
    },
}

impl Default for FormSpec {
    fn default() -> Self {
        Self::Cosine { a: 1.6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    /// `V_θ + shift`.
    VTheta {
        #[serde(default)]
        shift: f64,
    },
    /// `mass·G_node + shift`.
    Green {
        node: usize,
        mass: f64,
        #[serde(default)]
        shift: f64,
    },
    /// Seeded random potential from the corpus generator; its maximum lands
    /// in `shift`.
    Random {
        seed: u64,
        #[serde(default)]
        pole: Option<Pole>,
        #[serde(default = "defaults::shift")]
        shift: (f64, f64),
    },
    /// Regular part `values` plus poles.
    Samples {
        values: Vec<f64>,
        #[serde(default)]
        poles: Vec<Pole>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeParams {
    /// Named potentials whose minimum is the obstacle.
    #[serde(default = "defaults::inputs")]
    pub inputs: Vec<String>,
    /// Plain obstacle values; replaces `inputs` when present.
    #[serde(default)]
    pub obstacle: Option<Vec<f64>>,
    #[serde(default = "EnvelopeParams::hull")]
    pub method: EnvelopeMethod,
}

impl EnvelopeParams {
    fn hull() -> EnvelopeMethod {
        EnvelopeMethod::Hull
    }
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            inputs: defaults::inputs(),
            obstacle: None,
            method: EnvelopeMethod::Hull,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Names to evaluate; empty means every potential.
    #[serde(default)]
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairParams {
    #[serde(default = "defaults::u")]
    pub u: String,
    #[serde(default = "defaults::v")]
    pub v: String,
}

impl Default for PairParams {
    fn default() -> Self {
        Self {
            u: defaults::u(),
            v: defaults::v(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicParams {
    #[serde(default = "defaults::u")]
    pub u: String,
    #[serde(default = "defaults::v")]
    pub v: String,
    #[serde(default = "defaults::one")]
    pub length: f64,
    #[serde(default = "defaults::n_t")]
    pub n_t: usize,
    #[serde(default = "GeodesicParams::hull")]
    pub scheme: GeodesicScheme,
}

impl GeodesicParams {
    fn hull() -> GeodesicScheme {
        GeodesicScheme::Hull
    }
}

impl Default for GeodesicParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty section is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayParams {
    /// Pole node of the preset curve; defaults to the first marked node.
    #[serde(default)]
    pub pole: Option<usize>,
    #[serde(default = "defaults::tau_minus")]
    pub tau_minus: f64,
    /// Growth rate `s` of the pole mass `s·(τ − τ⁻)`.
    #[serde(default = "defaults::slope")]
    pub slope: f64,
    #[serde(default = "defaults::m")]
    pub m: usize,
    /// Length of the segment compared with `segment_solve`.
    #[serde(default = "defaults::one")]
    pub length: f64,
    #[serde(default = "defaults::n_t")]
    pub n_t: usize,
    /// Time step of the long grid used for the Legendre round trip.
    #[serde(default = "defaults::ray_dt")]
    pub dt: f64,
}

impl Default for RayParams {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty section is valid")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchyParams {
    #[serde(default = "defaults::j_max")]
    pub j_max: usize,
    #[serde(default = "defaults::k_max")]
    pub k_max: usize,
}

impl Default for CauchyParams {
    fn default() -> Self {
        Self {
            j_max: defaults::j_max(),
            k_max: defaults::k_max(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default = "CheckParams::full")]
    pub level: CheckLevel,
}

impl CheckParams {
    fn full() -> CheckLevel {
        CheckLevel::Full
    }
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            level: CheckLevel::Full,
        }
    }
}

/// Tolerances used by the single-run commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Slack for exact inequalities between energies and distances.
    #[serde(default = "defaults::bound")]
    pub bound: f64,
    /// Metric-speed deviation relative to `d₁` of the endpoints.
    #[serde(default = "defaults::metric_speed")]
    pub metric_speed: f64,
    /// Energy-chord deviation relative to the oscillation of the endpoints.
    #[serde(default = "defaults::energy_chord")]
    pub energy_chord: f64,
    /// Cone tolerance; `tol_pos` of the form when absent.
    #[serde(default)]
    pub cone: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty section is valid")
    }
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| schema(e.to_string()))
    }

    /// Digest of the canonical JSON of the scenario after overrides.
    pub fn digest(&self) -> String {
        sha256_hex(&canonical(&json17(self)))
    }

    pub fn build_form(&self) -> Result<Form> {
        let grid = CircleGrid::new(self.n).map_err(|e| schema(e.to_string()))?;
        let form = match &self.form {
            FormSpec::Uniform => Ok(Form::uniform(grid)),
            FormSpec::Cosine { a } => Form::cosine(grid, *a),
            FormSpec::Custom { samples } => Form::new(grid, samples.clone()),
        };
        form.map_err(|e| schema(format!("form: {e}")))
    }

    fn check_pole(&self, what: &str, node: usize) -> Result<()> {
        if node >= self.n {
            return Err(schema(format!("{what}: node {node} outside the grid of {}", self.n)));
        }
        if !self.marked.contains(&node) {
            return Err(schema(format!("{what}: pole node {node} is not in the marked set")));
        }
        Ok(())
    }

    /// Validates marked nodes and builds every named potential.
    pub fn build_potentials(&self, form: &Form) -> Result<BTreeMap<String, Potential>> {
        for &p in &self.marked {
            if p >= self.n {
                return Err(schema(format!("marked node {p} outside the grid of {}", self.n)));
            }
        }
        let tol = self.tolerances.cone.unwrap_or_else(|| form.tol_pos());
        let mut out = BTreeMap::new();
        for (name, spec) in &self.potentials {
            let what = format!("potential '{name}'");
            let u = match spec {
                PotentialSpec::Constant { value } => Potential::constant(self.n, *value),
                PotentialSpec::VTheta { shift } => Ok(v_theta(form).add_constant(*shift)),
                PotentialSpec::Green { node, mass, shift } => {
                    self.check_pole(&what, *node)?;
                    Potential::green(self.n, *node, *mass).map(|g| g.add_constant(*shift))
                }
                PotentialSpec::Random { seed, pole, shift } => {
                    if let Some(p) = pole {
                        self.check_pole(&what, p.node)?;
                        if !(0.0..1.0).contains(&p.mass) {
                            return Err(schema(format!("{what}: random pole mass must lie in [0, 1)")));
                        }
                    }
                    let mut rng = SplitMix64::new(self.seed).fork(*seed);
                    random_potential(form, &mut rng, pole.map(|p| (p.node, p.mass)), *shift)
                }
                PotentialSpec::Samples { values, poles } => {
                    for p in poles {
                        self.check_pole(&what, p.node)?;
                    }
                    Potential::new(values.clone(), poles.clone())
                }
            }
            .map_err(|e| schema(format!("{what}: {e}")))?;
            if u.len() != self.n {
                return Err(schema(format!("{what}: {} values for a grid of {}", u.len(), self.n)));
            }
            let report = theta_sh_check(form, &u, tol);
            if !report.ok {
                return Err(schema(format!(
                    "{what} is not θ-subharmonic: violation {:.3e} at node {}",
                    report.worst_violation, report.worst_node
                )));
            }
            out.insert(name.clone(), u);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scenario_uses_defaults() {
        let s = Scenario::from_json("{}").unwrap();
        assert_eq!(s.n, 256);
        assert_eq!(s.form, FormSpec::Cosine { a: 1.6 });
        assert_eq!(s.geodesic.n_t, 64);
        assert_eq!(s.check.level, CheckLevel::Full);
    }

    #[test]
    fn unknown_keys_are_schema_errors() {
        assert!(matches!(Scenario::from_json(r#"{"grid": 8}"#), Err(Error::Scenario(_))));
        assert!(matches!(
            Scenario::from_json(r#"{"form": {"kind": "square"}}"#),
            Err(Error::Scenario(_))
        ));
    }

    #[test]
    fn poles_must_be_marked() {
        let s = Scenario::from_json(
            r#"{"n": 16, "form": {"kind": "uniform"},
                "potentials": {"g": {"kind": "green", "node": 3, "mass": 0.5}}}"#,
        )
        .unwrap();
        let form = s.build_form().unwrap();
        assert!(matches!(s.build_potentials(&form), Err(Error::Scenario(_))));
        let s = Scenario { marked: vec![3], ..s };
        assert_eq!(s.build_potentials(&form).unwrap()["g"].total_pole_mass(), 0.5);
    }

    #[test]
    fn non_subharmonic_samples_are_rejected() {
        let mut values = vec![0.0; 16];
        values[5] = 1.0;
        let s = Scenario {
            n: 16,
            form: FormSpec::Uniform,
            potentials: [("s".to_string(), PotentialSpec::Samples { values, poles: vec![] })].into(),
            ..Scenario::default()
        };
        let form = s.build_form().unwrap();
        assert!(matches!(s.build_potentials(&form), Err(Error::Scenario(_))));
    }
}
