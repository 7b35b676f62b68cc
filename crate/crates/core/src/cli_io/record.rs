//! Result records: named claims, canonical JSON and digests.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// A checked inequality. `pass` is `value ≤ bound + tolerance` for
/// [`Relation::AtMost`] and `value ≥ bound − tolerance` for [`Relation::AtLeast`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Claim {
    pub name: String,
    pub relation: Relation,
    pub value: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Claim {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtMost,
            value,
            bound,
            tolerance,
            pass: value <= bound + tolerance,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            relation: Relation::AtLeast,
            value,
            bound,
            tolerance,
            pass: value >= bound - tolerance,
        }
    }
}

/// A CSV table: one header row, then numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub command: String,
    pub inputs_digest: String,
    pub outputs: BTreeMap<String, Value>,
    pub claims: Vec<Claim>,
    pub digest: String,
}

impl ResultRecord {
    pub fn pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn failed_claims(&self) -> impl Iterator<Item = &Claim> {
        self.claims.iter().filter(|c| !c.pass)
    }

    fn body(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("command".into(), Value::String(self.command.clone()));
        map.insert("inputs_digest".into(), Value::String(self.inputs_digest.clone()));
        map.insert(
            "outputs".into(),
            Value::Object(self.outputs.clone().into_iter().collect()),
        );
        map.insert("claims".into(), json17(&self.claims));
        map.insert("pass".into(), Value::Bool(self.pass()));
        Value::Object(map)
    }

    pub fn to_value(&self) -> Value {
        let mut v = self.body();
        v.as_object_mut()
            .expect("record body is an object")
            .insert("digest".into(), Value::String(self.digest.clone()));
        v
    }

    pub fn to_json_pretty(&self) -> String {
        pretty(&self.to_value())
    }
}

pub struct RecordBuilder {
    command: String,
    inputs_digest: String,
    outputs: BTreeMap<String, Value>,
    claims: Vec<Claim>,
}

impl RecordBuilder {
    pub fn new(command: &str, inputs_digest: String) -> Self {
        Self {
            command: command.into(),
            inputs_digest,
            outputs: BTreeMap::new(),
            claims: Vec::new(),
        }
    }

    pub fn output<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) -> &mut Self {
        self.outputs.insert(key.into(), json17(value));
        self
    }

    pub fn claim(&mut self, claim: Claim) -> &mut Self {
        self.claims.push(claim);
        self
    }

    pub fn claims(&mut self, claims: impl IntoIterator<Item = Claim>) -> &mut Self {
        self.claims.extend(claims);
        self
    }

    pub fn finish(&mut self) -> ResultRecord {
        let mut record = ResultRecord {
            command: std::mem::take(&mut self.command),
            inputs_digest: std::mem::take(&mut self.inputs_digest),
            outputs: std::mem::take(&mut self.outputs),
            claims: std::mem::take(&mut self.claims),
            digest: String::new(),
        };
        record.digest = sha256_hex(&canonical(&record.body()));
        record
    }
}

/// An `f64` as a JSON value; non-finite values become the strings `"inf"`,
/// `"-inf"` and `"nan"`. Finite floats are written with 17 significant
/// digits by [`canonical`] and [`pretty`].
pub fn number17(x: f64) -> Value {
    if x.is_nan() {
        Value::String("nan".into())
    } else if x.is_infinite() {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        Value::from(x)
    }
}

/// Serializes `value` to a [`Value`]. Non-finite floats nested in `value`
/// become `null`.
pub fn json17<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(value).expect("value serializes")
}

/// Writes floats as `{:.16e}` and delegates everything else.
struct Float17<F>(F);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl<F: Formatter> Formatter for Float17<F> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, x: f64) -> io::Result<()> {
        write!(w, "{x:.16e}")
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

fn write_with<F: Formatter>(v: &Value, f: F) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Float17(f));
    v.serialize(&mut ser).expect("values serialize");
    String::from_utf8(out).expect("JSON is UTF-8")
}

/// Compact JSON with sorted keys and 17-digit floats.
pub fn canonical(v: &Value) -> String {
    write_with(v, CompactFormatter)
}

/// Indented JSON with sorted keys and 17-digit floats.
pub fn pretty(v: &Value) -> String {
    write_with(v, PrettyFormatter::new())
}

pub fn sha256_hex(s: &str) -> String {
    Sha256::digest(s.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(canonical(&number17(0.1)), "1.0000000000000001e-1");
        assert_eq!(canonical(&number17(-2.0)), "-2.0000000000000000e0");
        assert_eq!(number17(f64::NEG_INFINITY), Value::String("-inf".into()));
        let back: f64 = canonical(&number17(std::f64::consts::PI)).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn integers_stay_integers() {
        assert_eq!(canonical(&json17(&vec![3usize, 4])), "[3,4]");
    }

    #[test]
    fn digest_tracks_content() {
        let a = RecordBuilder::new("dist", "x".into()).output("d1", &1.0).finish();
        let b = RecordBuilder::new("dist", "x".into()).output("d1", &1.0).finish();
        let c = RecordBuilder::new("dist", "x".into()).output("d1", &1.5).finish();
        assert_eq!(a.digest, b.digest);
        assert_ne!(a.digest, c.digest);
        assert_eq!(a.digest.len(), 64);
    }
}
