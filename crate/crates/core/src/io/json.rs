use std::io;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};

use super::{read_text, write_text};
use crate::dof::{DofEntry, DofMap};
use crate::error::{Error, Result};
use crate::fem::{mesh_notch_hinge, mesh_parallel_guide, GuideParams, Model, NotchHingeParams};

pub const SCHEMA_VERSION: u64 = 1;

/// Treatment of fields a reader does not know.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unknown fields are errors.
    #[default]
    Strict,
    /// Unknown fields are reported as warnings and skipped.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    /// JSON pointers of skipped fields (lenient mode only).
    pub warnings: Vec<String>,
}

/// A model file: either an explicit node/element model or the parameters of
/// a built-in generator.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Explicit(Model),
    NotchHinge(NotchHingeParams),
    ParallelGuide(GuideParams),
}

impl ModelSource {
    pub fn build(&self) -> Result<Model> {
        match self {
            ModelSource::Explicit(m) => {
                m.validate()?;
                Ok(m.clone())
            }
            ModelSource::NotchHinge(p) => mesh_notch_hinge(p),
            ModelSource::ParallelGuide(p) => mesh_parallel_guide(p),
        }
    }
}

/// Pretty printer that writes floats with 17 significant digits.
struct Precise<'a>(PrettyFormatter<'a>);

impl Formatter for Precise<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(super::format_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn escape_pointer(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn ignored_pointer(path: &serde_ignored::Path<'_>) -> String {
    use serde_ignored::Path as P;
    match path {
        P::Root => String::new(),
        P::Seq { parent, index } => format!("{}/{index}", ignored_pointer(parent)),
        P::Map { parent, key } => format!("{}/{}", ignored_pointer(parent), escape_pointer(key)),
        P::Some { parent } | P::NewtypeStruct { parent } | P::NewtypeVariant { parent } => ignored_pointer(parent),
    }
}

fn tracked_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    path.iter()
        .filter_map(|seg| match seg {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{}", escape_pointer(key))),
            Segment::Enum { .. } | Segment::Unknown => None,
        })
        .collect()
}

fn schema_error(path: &Path, pointer: impl Into<String>, message: impl Into<String>) -> Error {
    let pointer = pointer.into();
    Error::Schema {
        path: path.to_path_buf(),
        pointer: if pointer.is_empty() { "/".into() } else { pointer },
        message: message.into(),
    }
}

/// Typed decoding with path tracking and unknown-field detection.
fn decode<T: DeserializeOwned>(
    value: Value,
    path: &Path,
    strictness: Strictness,
    warnings: &mut Vec<String>,
) -> Result<T> {
    let mut unknown = Vec::new();
    let mut track = serde_path_to_error::Track::new();
    let de = serde_path_to_error::Deserializer::new(value, &mut track);
    let result: std::result::Result<T, _> = serde_ignored::deserialize(de, |p| unknown.push(ignored_pointer(&p)));
    let value = result.map_err(|e| {
        let mut pointer = tracked_pointer(&track.path());
        let message = e.to_string();
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|m| m.strip_suffix('`'))
        {
            pointer.push('/');
            pointer.push_str(&escape_pointer(field));
        }
        schema_error(path, pointer, message)
    })?;
    if let Some(first) = unknown.first() {
        if strictness == Strictness::Strict {
            return Err(schema_error(path, first.clone(), "unknown field"));
        }
    }
    warnings.extend(
        unknown
            .into_iter()
            .map(|p| format!("{}: {p}: unknown field ignored", path.display())),
    );
    Ok(value)
}

/// Parses the top-level object and checks `schema_version`.
fn versioned_object(text: &str, path: &Path) -> Result<Map<String, Value>> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let Value::Object(mut obj) = value else {
        return Err(schema_error(path, "", "expected a JSON object"));
    };
    match obj.remove("schema_version") {
        None => Err(schema_error(path, "/schema_version", "missing field `schema_version`")),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => Ok(obj),
        Some(v) => Err(schema_error(
            path,
            "/schema_version",
            format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"),
        )),
    }
}

#[derive(Deserialize)]
struct GeneratorDoc<P> {
    #[serde(default)]
    params: P,
}

pub fn read_model(path: impl AsRef<Path>, strictness: Strictness) -> Result<Parsed<ModelSource>> {
    let path = path.as_ref();
    parse_model(&read_text(path)?, path, strictness)
}

/// Parses a model document. With a `generator` field (`"notch_hinge"` or
/// `"parallel_guide"`) only `params` may follow, and missing parameters take
/// their defaults; otherwise the document is an explicit model.
pub fn parse_model(text: &str, path: &Path, strictness: Strictness) -> Result<Parsed<ModelSource>> {
    let mut obj = versioned_object(text, path)?;
    let mut warnings = Vec::new();
    let value = match obj.remove("generator") {
        None => ModelSource::Explicit(decode(Value::Object(obj), path, strictness, &mut warnings)?),
        Some(Value::String(g)) => match g.as_str() {
            "notch_hinge" => {
                let doc: GeneratorDoc<NotchHingeParams> = decode(Value::Object(obj), path, strictness, &mut warnings)?;
                ModelSource::NotchHinge(doc.params)
            }
            "parallel_guide" => {
                let doc: GeneratorDoc<GuideParams> = decode(Value::Object(obj), path, strictness, &mut warnings)?;
                ModelSource::ParallelGuide(doc.params)
            }
            other => {
                return Err(schema_error(
                    path,
                    "/generator",
                    format!("unknown generator '{other}', expected notch_hinge or parallel_guide"),
                ))
            }
        },
        Some(_) => return Err(schema_error(path, "/generator", "expected a string")),
    };
    Ok(Parsed { value, warnings })
}

fn versioned<T: Serialize>(value: &T) -> Value {
    let mut v = serde_json::to_value(value).expect("serializable");
    if let Value::Object(obj) = &mut v {
        obj.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    }
    v
}

/// Explicit-model document of `model`.
pub fn model_to_json(model: &Model) -> String {
    to_json_string(&versioned(model))
}

pub fn write_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &model_to_json(model))
}

#[derive(Serialize, Deserialize)]
struct DofMapDoc {
    dofs: Vec<DofEntry>,
    #[serde(default)]
    constrained: Vec<usize>,
}

pub fn read_dofmap(path: impl AsRef<Path>, strictness: Strictness) -> Result<Parsed<DofMap>> {
    let path = path.as_ref();
    parse_dofmap(&read_text(path)?, path, strictness)
}

pub fn parse_dofmap(text: &str, path: &Path, strictness: Strictness) -> Result<Parsed<DofMap>> {
    let obj = versioned_object(text, path)?;
    let mut warnings = Vec::new();
    let doc: DofMapDoc = decode(Value::Object(obj), path, strictness, &mut warnings)?;
    let value = DofMap::new(doc.dofs, doc.constrained).map_err(|e| schema_error(path, "/dofs", e.to_string()))?;
    Ok(Parsed { value, warnings })
}

pub fn dofmap_to_json(map: &DofMap) -> String {
    to_json_string(&versioned(&DofMapDoc {
        dofs: map.entries().to_vec(),
        constrained: map.constrained().iter().copied().collect(),
    }))
}

pub fn write_dofmap(map: &DofMap, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &dofmap_to_json(map))
}

/// Reference kinematics as raw vectors over a DOF map's free DOFs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFile {
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

pub fn read_reference(path: impl AsRef<Path>, strictness: Strictness) -> Result<Parsed<ReferenceFile>> {
    let path = path.as_ref();
    parse_reference(&read_text(path)?, path, strictness)
}

pub fn parse_reference(text: &str, path: &Path, strictness: Strictness) -> Result<Parsed<ReferenceFile>> {
    let obj = versioned_object(text, path)?;
    let mut warnings = Vec::new();
    let value: ReferenceFile = decode(Value::Object(obj), path, strictness, &mut warnings)?;
    if value.vectors.is_empty() {
        return Err(schema_error(path, "/vectors", "at least one vector is required"));
    }
    Ok(Parsed { value, warnings })
}

pub fn reference_to_json(reference: &ReferenceFile) -> String {
    to_json_string(&versioned(reference))
}

pub fn write_reference(reference: &ReferenceFile, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &reference_to_json(reference))
}
