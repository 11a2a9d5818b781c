//! Instance files and structured certificate documents.
//!
//! Instances are TOML with the sections `delta`, `gamma` (optional), `graph`
//! and `elements` (optional); unknown fields are rejected and errors carry the
//! line and field. Structured output is JSON Lines: a header line
//! `{"schema":"gwrf","version":1,"kind":...}` followed by one payload line.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Spanned, Value};

use crate::gamma_graph::{DifferenceFamily, FiniteGraph, GammaElement, GammaGraph, TranslationGraph, Vertex};
use crate::graph_product::{Syllable, Word};
use crate::groups::{GroupElement, GroupSpec};
use crate::wreath::{Instance, WreathElement};

pub const SCHEMA: &str = "gwrf";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}, field `{field}`: {message}")]
    Field { line: usize, field: String, message: String },
    #[error("structured document: {0}")]
    Document(String),
}

fn line_of(text: &str, span: Option<Range<usize>>) -> usize {
    span.map_or(1, |s| text[..s.start.min(text.len())].matches('\n').count() + 1)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    delta: Spanned<RawDelta>,
    gamma: Option<Spanned<RawGamma>>,
    graph: Spanned<RawGraph>,
    #[serde(default)]
    elements: BTreeMap<String, Spanned<RawElement>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    kind: String,
    order: Option<u64>,
    degree: Option<usize>,
    table: Option<Vec<Vec<usize>>>,
    identity: Option<usize>,
    rank: Option<usize>,
    modulus: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGamma {
    kind: Option<String>,
    rank: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    mode: String,
    labels: Option<Vec<String>>,
    families: Option<Vec<Spanned<RawFamily>>>,
    vertices: Option<usize>,
    edges: Option<Vec<(usize, usize)>>,
    generators: Option<Vec<Vec<usize>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    between: Option<(String, String)>,
    kind: String,
    offsets: Option<Vec<i64>>,
    shift: Option<u64>,
    start: Option<u64>,
    step: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    #[serde(default)]
    word: Vec<RawSyllable>,
    gamma: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSyllable {
    v: Value,
    g: Value,
}

/// A parsed instance file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub elements: BTreeMap<String, WreathElement>,
}

struct Ctx<'a> {
    text: &'a str,
    line: usize,
    section: String,
}

impl Ctx<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> FormatError {
        let field = if field.is_empty() { self.section.clone() } else { format!("{}.{field}", self.section) };
        FormatError::Field { line: self.line, field, message: message.into() }
    }

    fn at<T>(&self, section: &str, spanned: &Spanned<T>) -> Ctx<'_> {
        Ctx { text: self.text, line: line_of(self.text, Some(spanned.span())), section: section.to_string() }
    }

    /// Every field set must belong to `allowed`, every field of `required` must be set.
    fn fields(&self, kind: &str, present: &[(&str, bool)], allowed: &[&str]) -> Result<(), FormatError> {
        for (name, set) in present {
            if *set && !allowed.contains(name) {
                return Err(self.err(name, format!("not used by kind {kind:?}")));
            }
            if !*set && allowed.contains(name) {
                return Err(self.err(name, format!("required by kind {kind:?}")));
            }
        }
        Ok(())
    }
}

fn parse_delta(ctx: &Ctx, raw: &RawDelta) -> Result<GroupSpec, FormatError> {
    let present = [
        ("order", raw.order.is_some()),
        ("degree", raw.degree.is_some()),
        ("table", raw.table.is_some()),
        ("identity", raw.identity.is_some()),
        ("rank", raw.rank.is_some()),
        ("modulus", raw.modulus.is_some()),
    ];
    let kind = raw.kind.as_str();
    let spec = match kind {
        "cyclic" => {
            ctx.fields(kind, &present, &["order"])?;
            GroupSpec::cyclic(raw.order.unwrap_or_default())
        }
        "symmetric" => {
            ctx.fields(kind, &present, &["degree"])?;
            GroupSpec::symmetric(raw.degree.unwrap_or_default())
        }
        "table" => {
            ctx.fields(kind, &present, &["table", "identity"])?;
            GroupSpec::table(raw.table.clone().unwrap_or_default(), raw.identity.unwrap_or_default())
        }
        "free-abelian" => {
            ctx.fields(kind, &present, &["rank"])?;
            Ok(GroupSpec::free_abelian(raw.rank.unwrap_or_default()))
        }
        "cyclic-power" => {
            ctx.fields(kind, &present, &["modulus", "rank"])?;
            GroupSpec::cyclic_power(raw.modulus.unwrap_or_default(), raw.rank.unwrap_or_default())
        }
        other => return Err(ctx.err("kind", format!("unknown group kind {other:?}"))),
    };
    spec.map_err(|e| ctx.err("", e.to_string()))
}

fn parse_family(ctx: &Ctx, raw: &RawFamily) -> Result<DifferenceFamily, FormatError> {
    let present = [
        ("offsets", raw.offsets.is_some()),
        ("shift", raw.shift.is_some()),
        ("start", raw.start.is_some()),
        ("step", raw.step.is_some()),
    ];
    let kind = raw.kind.as_str();
    let family = match kind {
        "finite" => {
            ctx.fields(kind, &present, &["offsets"])?;
            DifferenceFamily::finite(raw.offsets.clone().unwrap_or_default())
        }
        "factorial" => {
            ctx.fields(kind, &present, &["shift"])?;
            Ok(DifferenceFamily::factorial(raw.shift.unwrap_or_default()))
        }
        "arithmetic" => {
            ctx.fields(kind, &present, &["start", "step"])?;
            DifferenceFamily::arithmetic(raw.start.unwrap_or_default(), raw.step.unwrap_or_default())
        }
        other => return Err(ctx.err("kind", format!("unknown family kind {other:?}"))),
    };
    family.map_err(|e| ctx.err("", e.to_string()))
}

fn parse_graph(ctx: &Ctx, raw: &RawGraph) -> Result<GammaGraph, FormatError> {
    let present = [
        ("labels", raw.labels.is_some()),
        ("families", raw.families.is_some()),
        ("vertices", raw.vertices.is_some()),
        ("edges", raw.edges.is_some()),
        ("generators", raw.generators.is_some()),
    ];
    let unexpected = |allowed: &[&str]| {
        present.iter().find(|(name, set)| *set && !allowed.contains(name)).map(|(name, _)| *name)
    };
    match raw.mode.as_str() {
        "translation" => {
            if let Some(name) = unexpected(&["labels", "families"]) {
                return Err(ctx.err(name, "not used by mode \"translation\""));
            }
            let labels = raw.labels.clone().unwrap_or_else(|| vec!["a".to_string()]);
            let mut graph = TranslationGraph::new(labels).map_err(|e| ctx.err("labels", e.to_string()))?;
            for (i, spanned) in raw.families.iter().flatten().enumerate() {
                let fctx = ctx.at(&format!("graph.families[{i}]"), spanned);
                let fam = spanned.get_ref();
                let family = parse_family(&fctx, fam)?;
                let (c, c2) = match &fam.between {
                    Some((x, y)) => {
                        let find = |name: &str| {
                            graph.label_index(name).ok_or_else(|| fctx.err("between", format!("unknown label {name:?}")))
                        };
                        (find(x)?, find(y)?)
                    }
                    None if graph.labels().len() == 1 => (0, 0),
                    None => return Err(fctx.err("between", "required when there is more than one label")),
                };
                graph.add_family(c, c2, family).map_err(|e| fctx.err("", e.to_string()))?;
            }
            Ok(GammaGraph::Translation(graph))
        }
        "finite" => {
            if let Some(name) = unexpected(&["vertices", "edges", "generators"]) {
                return Err(ctx.err(name, "not used by mode \"finite\""));
            }
            let n = raw.vertices.ok_or_else(|| ctx.err("vertices", "required by mode \"finite\""))?;
            FiniteGraph::new(n, raw.edges.clone().unwrap_or_default(), raw.generators.clone().unwrap_or_default())
                .map(GammaGraph::Finite)
                .map_err(|e| ctx.err("", e.to_string()))
        }
        other => Err(ctx.err("mode", format!("unknown graph mode {other:?}"))),
    }
}

/// Parses `label:position` (translation graphs) or a vertex id (finite graphs).
pub fn parse_vertex(instance: &Instance, text: &str) -> Result<Vertex, String> {
    let text = text.trim();
    let v = match &instance.graph {
        GammaGraph::Translation(t) => {
            let (label, pos) = text.rsplit_once(':').ok_or_else(|| format!("vertex {text:?} is not label:position"))?;
            let label = t.label_index(label).ok_or_else(|| format!("unknown label {label:?}"))?;
            let pos = pos.parse::<i64>().map_err(|_| format!("bad position in {text:?}"))?;
            Vertex::at(label, pos)
        }
        GammaGraph::Finite(_) => Vertex::Finite(text.parse().map_err(|_| format!("vertex {text:?} is not an id"))?),
    };
    instance.graph.check_vertex(&v).map_err(|e| e.to_string())?;
    Ok(v)
}

fn vertex_from_value(instance: &Instance, v: &Value) -> Result<Vertex, String> {
    match v {
        Value::String(s) => parse_vertex(instance, s),
        Value::Integer(i) => parse_vertex(instance, &i.to_string()),
        other => Err(format!("expected a vertex, found {other}")),
    }
}

fn ints(v: &Value) -> Result<Vec<i64>, String> {
    match v {
        Value::Array(xs) => xs.iter().map(|x| x.as_integer().ok_or_else(|| format!("expected an integer, found {x}"))).collect(),
        other => Err(format!("expected an array of integers, found {other}")),
    }
}

fn group_element_from_value(delta: &GroupSpec, v: &Value) -> Result<GroupElement, String> {
    let int = || v.as_integer().ok_or_else(|| format!("expected an integer, found {v}"));
    let nonneg = |x: i64| u64::try_from(x).map_err(|_| format!("{x} is negative"));
    let g = match delta {
        GroupSpec::Cyclic { .. } => GroupElement::Residue(nonneg(int()?)?),
        GroupSpec::FiniteTable(_) => GroupElement::Index(nonneg(int()?)? as usize),
        GroupSpec::Symmetric { .. } => {
            GroupElement::Perm(ints(v)?.into_iter().map(|x| nonneg(x).map(|x| x as usize)).collect::<Result<_, _>>()?)
        }
        GroupSpec::FreeAbelian { rank } | GroupSpec::CyclicPower { rank, .. } => match v {
            Value::Integer(x) if *rank == 1 => GroupElement::Vector(vec![*x]),
            _ => GroupElement::Vector(ints(v)?),
        },
    };
    delta.check(&g).map_err(|e| e.to_string())?;
    Ok(g)
}

fn gamma_from_value(rank: usize, v: Option<&Value>) -> Result<GammaElement, String> {
    let gamma = match v {
        None => GammaElement::zero(rank),
        Some(Value::Integer(x)) => GammaElement(vec![*x]),
        Some(v) => GammaElement(ints(v)?),
    };
    if gamma.rank() != rank {
        return Err(format!("acting element needs {rank} coordinates, found {}", gamma.rank()));
    }
    Ok(gamma)
}

fn parse_raw_element(ctx: &Ctx, instance: &Instance, raw: &RawElement) -> Result<WreathElement, FormatError> {
    let mut syllables = Vec::new();
    for (i, s) in raw.word.iter().enumerate() {
        let v = vertex_from_value(instance, &s.v).map_err(|m| ctx.err(&format!("word[{i}].v"), m))?;
        let g = group_element_from_value(&instance.delta, &s.g).map_err(|m| ctx.err(&format!("word[{i}].g"), m))?;
        if instance.delta.is_identity(&g) {
            return Err(ctx.err(&format!("word[{i}].g"), "syllables must be nontrivial"));
        }
        syllables.push(Syllable::new(v, g));
    }
    let gamma = gamma_from_value(instance.graph.rank(), raw.gamma.as_ref()).map_err(|m| ctx.err("gamma", m))?;
    let word = Word::new(&instance.delta, syllables).map_err(|e| ctx.err("word", e.to_string()))?;
    instance.element(word, gamma).map_err(|e| ctx.err("", e.to_string()))
}

fn syntax(text: &str, e: toml::de::Error) -> FormatError {
    FormatError::Syntax { line: line_of(text, e.span()), message: e.message().to_string() }
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let raw: RawInstance = toml::from_str(text).map_err(|e| syntax(text, e))?;
    let root = Ctx { text, line: 1, section: String::new() };
    let delta = parse_delta(&root.at("delta", &raw.delta), raw.delta.get_ref())?;
    let gctx = root.at("graph", &raw.graph);
    let graph = parse_graph(&gctx, raw.graph.get_ref())?;
    if let Some(gamma) = &raw.gamma {
        let ctx = root.at("gamma", gamma);
        let g = gamma.get_ref();
        if g.kind.as_deref().is_some_and(|k| k != "free-abelian") {
            return Err(ctx.err("kind", "the acting group must be free-abelian"));
        }
        if g.rank != graph.rank() {
            return Err(ctx.err("rank", format!("the graph needs rank {}", graph.rank())));
        }
    }
    let instance = Instance::new(delta, graph).map_err(|e| gctx.err("", e.to_string()))?;
    let mut elements = BTreeMap::new();
    for (name, spanned) in &raw.elements {
        let ctx = root.at(&format!("elements.{name}"), spanned);
        elements.insert(name.clone(), parse_raw_element(&ctx, &instance, spanned.get_ref())?);
    }
    Ok(InstanceFile { instance, elements })
}

/// Parses an inline element such as `{ word = [{ v = "a:0", g = 1 }], gamma = 2 }`.
pub fn parse_element_literal(instance: &Instance, literal: &str) -> Result<WreathElement, FormatError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Holder {
        element: Spanned<RawElement>,
    }
    let text = format!("element = {literal}");
    let holder: Holder = toml::from_str(&text).map_err(|e| syntax(&text, e))?;
    let ctx = Ctx { text: &text, line: 1, section: "element".into() };
    parse_raw_element(&ctx, instance, holder.element.get_ref())
}

pub fn parse_gamma(instance: &Instance, literal: &str) -> Result<GammaElement, String> {
    let value: Value = format!("x = {literal}")
        .parse::<toml::Table>()
        .map_err(|e| e.message().to_string())?
        .remove("x")
        .expect("key present");
    gamma_from_value(instance.graph.rank(), Some(&value))
}

// ---------------------------------------------------------------------------
// Rendering

pub fn vertex_name(instance: &Instance, v: &Vertex) -> String {
    match (&instance.graph, v) {
        (GammaGraph::Translation(t), Vertex::Translation { label, position }) => match t.labels().get(*label) {
            Some(name) => format!("{name}:{position}"),
            None => v.to_string(),
        },
        _ => v.to_string(),
    }
}

fn list<T: std::fmt::Display>(xs: &[T]) -> String {
    format!("[{}]", xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))
}

/// The literal form used in instance files.
pub fn group_element_literal(g: &GroupElement) -> String {
    match g {
        GroupElement::Residue(r) => r.to_string(),
        GroupElement::Index(i) => i.to_string(),
        GroupElement::Perm(p) => list(p),
        GroupElement::Vector(v) => list(v),
    }
}

pub fn gamma_literal(gamma: &GammaElement) -> String {
    match gamma.0.as_slice() {
        [x] => x.to_string(),
        xs => list(xs),
    }
}

pub fn show_word<V>(w: &Word<V>, name: impl Fn(&V) -> String) -> String {
    if w.is_empty() {
        return "e".into();
    }
    w.syllables().iter().map(|s| format!("{}@{}", group_element_literal(&s.value), name(&s.vertex))).collect::<Vec<_>>().join(" ")
}

pub fn show_element(instance: &Instance, x: &WreathElement) -> String {
    format!("({}; {})", show_word(&x.word, |v| vertex_name(instance, v)), gamma_literal(&x.gamma))
}

/// An inline literal that [`parse_element_literal`] reads back.
pub fn element_literal(instance: &Instance, x: &WreathElement) -> String {
    let word: Vec<String> = x
        .word
        .syllables()
        .iter()
        .map(|s| {
            let v = match &instance.graph {
                GammaGraph::Translation(_) => format!("{:?}", vertex_name(instance, &s.vertex)),
                GammaGraph::Finite(_) => s.vertex.to_string(),
            };
            format!("{{ v = {v}, g = {} }}", group_element_literal(&s.value))
        })
        .collect();
    format!("{{ word = [{}], gamma = {} }}", word.join(", "), gamma_literal(&x.gamma))
}

// ---------------------------------------------------------------------------
// Structured documents

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub schema: String,
    pub version: u32,
    pub kind: String,
}

/// Header line and payload line, each terminated by a newline.
pub fn write_document<T: Serialize>(kind: &str, payload: &T) -> String {
    let header = Header { schema: SCHEMA.into(), version: VERSION, kind: kind.into() };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    out.push_str(&serde_json::to_string(payload).expect("payload serializes"));
    out.push('\n');
    out
}

pub fn read_header(text: &str) -> Result<Header, FormatError> {
    let first = text.lines().next().ok_or_else(|| FormatError::Document("empty document".into()))?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| FormatError::Document(format!("line 1: bad header: {e}")))?;
    if header.schema != SCHEMA || header.version != VERSION {
        return Err(FormatError::Document(format!(
            "line 1: unsupported schema {} version {}",
            header.schema, header.version
        )));
    }
    Ok(header)
}

pub fn read_document<T: DeserializeOwned>(text: &str, kind: &str) -> Result<T, FormatError> {
    let header = read_header(text)?;
    if header.kind != kind {
        return Err(FormatError::Document(format!("line 1: expected kind {kind:?}, found {:?}", header.kind)));
    }
    let mut lines = text.lines().skip(1).filter(|l| !l.trim().is_empty());
    let payload = lines.next().ok_or_else(|| FormatError::Document("line 2: missing payload".into()))?;
    if lines.next().is_some() {
        return Err(FormatError::Document("trailing lines after the payload".into()));
    }
    serde_json::from_str(payload).map_err(|e| FormatError::Document(format!("line 2: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"
[delta]
kind = "cyclic"
order = 2

[gamma]
rank = 1

[graph]
mode = "translation"
labels = ["a"]

[[graph.families]]
between = ["a", "a"]
kind = "finite"
offsets = [1]

[elements]
w1 = { word = [{ v = "a:0", g = 1 }, { v = "a:2", g = 1 }], gamma = 0 }
t5 = { gamma = 5 }
"#;

    #[test]
    fn parses_line_instance() {
        let file = parse_instance(LINE).unwrap();
        assert_eq!(file.instance.graph, GammaGraph::line());
        assert_eq!(file.instance.delta, GroupSpec::cyclic(2).unwrap());
        let w1 = &file.elements["w1"];
        assert_eq!(show_element(&file.instance, w1), "(1@a:0 1@a:2; 0)");
        assert_eq!(file.elements["t5"].gamma, GammaElement::scalar(5));
        let lit = element_literal(&file.instance, w1);
        assert_eq!(&parse_element_literal(&file.instance, &lit).unwrap(), w1);
    }

    #[test]
    fn errors_name_line_and_field() {
        let bad = LINE.replace("offsets = [1]", "offsets = [1]\ncolour = 3");
        let err = parse_instance(&bad).unwrap_err();
        assert!(matches!(err, FormatError::Syntax { .. }), "{err}");
        assert!(err.to_string().contains("colour"), "{err}");

        let bad = LINE.replace("\"a:2\", g = 1", "\"b:2\", g = 1");
        let err = parse_instance(&bad).unwrap_err();
        assert_eq!(
            err,
            FormatError::Field { line: 19, field: "elements.w1.word[1].v".into(), message: "unknown label \"b\"".into() }
        );

        let bad = LINE.replace("order = 2", "order = 2\ndegree = 3");
        let err = parse_instance(&bad).unwrap_err();
        assert!(matches!(&err, FormatError::Field { line: 2, field, .. } if field == "delta.degree"), "{err}");

        let bad = LINE.replace("rank = 1", "rank = 2");
        assert!(matches!(parse_instance(&bad).unwrap_err(), FormatError::Field { line: 6, .. }));
    }

    #[test]
    fn parses_finite_instance() {
        let text = r#"
[delta]
kind = "symmetric"
degree = 3

[graph]
mode = "finite"
vertices = 5
edges = [[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]]
generators = [[1, 2, 3, 4, 0]]

[elements]
x = { word = [{ v = 0, g = [1, 0, 2] }], gamma = 2 }
"#;
        let file = parse_instance(text).unwrap();
        assert_eq!(file.instance.graph.rank(), 1);
        let x = &file.elements["x"];
        assert_eq!(x.word.syllables()[0].vertex, Vertex::Finite(0));
        assert_eq!(x.word.syllables()[0].value, GroupElement::Perm(vec![1, 0, 2]));
    }

    #[test]
    fn documents_round_trip() {
        let file = parse_instance(LINE).unwrap();
        let doc = write_document("element", &file.elements["w1"]);
        assert!(doc.starts_with("{\"schema\":\"gwrf\",\"version\":1,\"kind\":\"element\"}\n"));
        let back: WreathElement = read_document(&doc, "element").unwrap();
        assert_eq!(back, file.elements["w1"]);
        assert!(read_document::<WreathElement>(&doc, "lef").is_err());
        let instance_doc = write_document("instance", &file.instance);
        assert_eq!(read_document::<Instance>(&instance_doc, "instance").unwrap(), file.instance);
    }
}
