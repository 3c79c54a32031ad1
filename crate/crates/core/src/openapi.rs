//! OpenAPI 3.x documents: parsing (JSON or YAML), endpoint enumeration and
//! endpoint lookup.
//!
//! Documents are kept as a generic JSON tree with source key order preserved,
//! so everything downstream is independent of the input format.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Json,
    Yaml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HttpVerb {
    Get,
    Post,
    Put,
    Patch,
    Delete,
    Head,
    Options,
    Trace,
}

impl HttpVerb {
    pub const ALL: [HttpVerb; 8] = [
        HttpVerb::Get,
        HttpVerb::Post,
        HttpVerb::Put,
        HttpVerb::Patch,
        HttpVerb::Delete,
        HttpVerb::Head,
        HttpVerb::Options,
        HttpVerb::Trace,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HttpVerb::Get => "GET",
            HttpVerb::Post => "POST",
            HttpVerb::Put => "PUT",
            HttpVerb::Patch => "PATCH",
            HttpVerb::Delete => "DELETE",
            HttpVerb::Head => "HEAD",
            HttpVerb::Options => "OPTIONS",
            HttpVerb::Trace => "TRACE",
        }
    }

    /// Key of the operation object inside a path item.
    pub fn operation_key(self) -> &'static str {
        match self {
            HttpVerb::Get => "get",
            HttpVerb::Post => "post",
            HttpVerb::Put => "put",
            HttpVerb::Patch => "patch",
            HttpVerb::Delete => "delete",
            HttpVerb::Head => "head",
            HttpVerb::Options => "options",
            HttpVerb::Trace => "trace",
        }
    }

    fn from_operation_key(key: &str) -> Option<HttpVerb> {
        HttpVerb::ALL.into_iter().find(|v| v.operation_key() == key)
    }
}

impl fmt::Display for HttpVerb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HttpVerb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        HttpVerb::ALL.into_iter().find(|v| v.as_str() == upper).ok_or_else(|| Error::InvalidEndpointId(s.to_string()))
    }
}

/// An operation's identity: uppercase verb plus the path template exactly as
/// written in the document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EndpointId {
    pub verb: HttpVerb,
    pub path: String,
}

impl EndpointId {
    pub fn new(verb: HttpVerb, path: impl Into<String>) -> Self {
        EndpointId { verb, path: path.into() }
    }

    /// Builds an id from a verb given in any case.
    pub fn parse_parts(verb: &str, path: &str) -> Result<Self> {
        let path = path.trim();
        if !path.starts_with('/') {
            return Err(Error::InvalidEndpointId(format!("{verb} {path}")));
        }
        Ok(EndpointId { verb: verb.parse()?, path: path.to_string() })
    }
}

impl fmt::Display for EndpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.verb, self.path)
    }
}

impl FromStr for EndpointId {
    type Err = Error;

    /// Parses `"VERB /path"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (verb, path) = s.split_once(char::is_whitespace).ok_or_else(|| Error::InvalidEndpointId(s.to_string()))?;
        EndpointId::parse_parts(verb, path)
    }
}

impl Serialize for EndpointId {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EndpointId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub id: EndpointId,
    pub summary: Option<String>,
    pub description: Option<String>,
    pub parameters: Vec<Value>,
    pub request_body: Option<Value>,
    pub responses: Value,
    /// The operation object, with shared path-item fields folded in.
    pub raw: Value,
}

impl Endpoint {
    fn from_raw(id: EndpointId, raw: Value) -> Self {
        let text = |key: &str| raw.get(key).and_then(Value::as_str).map(str::to_string);
        Endpoint {
            summary: text("summary"),
            description: text("description"),
            parameters: raw.get("parameters").and_then(Value::as_array).cloned().unwrap_or_default(),
            request_body: raw.get("requestBody").cloned(),
            responses: raw.get("responses").cloned().unwrap_or(Value::Null),
            id,
            raw,
        }
    }

    /// Description, falling back to the summary.
    pub fn best_description(&self) -> &str {
        self.description.as_deref().or(self.summary.as_deref()).unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Inline local `#/...` references before enumerating endpoints.
    pub resolve_refs: bool,
}

/// A parsed OpenAPI document. Immutable after parsing.
#[derive(Debug, Clone)]
pub struct SpecDocument {
    pub source_name: String,
    pub format: SourceFormat,
    pub root: Value,
    pub title: String,
    pub description: Option<String>,
    endpoints: Vec<Endpoint>,
}

impl SpecDocument {
    pub fn endpoints(&self) -> &[Endpoint] {
        &self.endpoints
    }

    pub fn endpoint_ids(&self) -> impl Iterator<Item = &EndpointId> {
        self.endpoints.iter().map(|e| &e.id)
    }

    /// Looks up an endpoint by verb and path. Paths are matched exactly; on a
    /// miss the error carries the path sharing the longest prefix with the
    /// requested one.
    pub fn get_endpoint(&self, id: &EndpointId) -> Result<&Endpoint> {
        self.endpoints.iter().find(|e| &e.id == id).ok_or_else(|| Error::EndpointNotFound {
            id: id.clone(),
            nearest: self.nearest_path(&id.path).map(str::to_string),
        })
    }

    /// Like [`SpecDocument::get_endpoint`] but accepts the verb in any case.
    pub fn find_endpoint(&self, verb: &str, path: &str) -> Result<&Endpoint> {
        self.get_endpoint(&EndpointId::parse_parts(verb, path)?)
    }

    pub fn contains(&self, id: &EndpointId) -> bool {
        self.endpoints.iter().any(|e| &e.id == id)
    }

    fn nearest_path(&self, path: &str) -> Option<&str> {
        let mut best: Option<(&str, usize)> = None;
        for ep in &self.endpoints {
            let common = ep.id.path.bytes().zip(path.bytes()).take_while(|(a, b)| a == b).count();
            if best.is_none_or(|(_, n)| common > n) {
                best = Some((&ep.id.path, common));
            }
        }
        best.map(|(p, _)| p)
    }

    /// Compact JSON rendering of the whole document.
    pub fn to_compact_json(&self) -> String {
        self.root.to_string()
    }
}

pub fn parse_spec(bytes: &[u8], source_name: &str) -> Result<SpecDocument> {
    parse_spec_with(bytes, source_name, ParseOptions::default())
}

pub fn parse_spec_with(bytes: &[u8], source_name: &str, opts: ParseOptions) -> Result<SpecDocument> {
    let malformed = |reason: String| Error::MalformedDocument { source_name: source_name.to_string(), reason };
    let not_openapi =
        |reason: &str| Error::NotOpenApi { source_name: source_name.to_string(), reason: reason.to_string() };

    let text = std::str::from_utf8(bytes).map_err(|e| malformed(format!("not UTF-8: {e}")))?;
    let (mut root, format) = match serde_json::from_str::<Value>(text) {
        Ok(v) => (v, SourceFormat::Json),
        Err(json_err) => {
            let yaml: serde_yaml::Value = serde_yaml::from_str(text)
                .map_err(|yaml_err| malformed(format!("not JSON ({json_err}) and not YAML ({yaml_err})")))?;
            (yaml_to_json(yaml).map_err(malformed)?, SourceFormat::Yaml)
        }
    };

    if !root.is_object() {
        return Err(not_openapi("document root is not an object"));
    }
    if opts.resolve_refs {
        root = resolve_local_refs(&root);
    }

    let info = root.get("info");
    let title = info
        .and_then(|i| i.get("title"))
        .and_then(Value::as_str)
        .ok_or_else(|| not_openapi("missing info.title"))?
        .to_string();
    let description = info.and_then(|i| i.get("description")).and_then(Value::as_str).map(str::to_string);

    let paths = root
        .get("paths")
        .ok_or_else(|| not_openapi("missing `paths`"))?
        .as_object()
        .ok_or_else(|| not_openapi("`paths` is not an object"))?;
    let endpoints = enumerate_endpoints(paths).map_err(|r| not_openapi(&r))?;

    Ok(SpecDocument { source_name: source_name.to_string(), format, root, title, description, endpoints })
}

/// All endpoints of a document, in path order then verb order as written.
pub fn list_endpoints(doc: &SpecDocument) -> &[Endpoint] {
    doc.endpoints()
}

/// Deterministic compact rendering of `{verb, path, operation}`.
pub fn serialize_endpoint(ep: &Endpoint) -> String {
    serialize_operation(&ep.id, &ep.raw)
}

pub(crate) fn serialize_operation(id: &EndpointId, operation: &Value) -> String {
    let mut obj = Map::new();
    obj.insert("verb".into(), Value::String(id.verb.to_string()));
    obj.insert("path".into(), Value::String(id.path.clone()));
    obj.insert("operation".into(), operation.clone());
    Value::Object(obj).to_string()
}

fn enumerate_endpoints(paths: &Map<String, Value>) -> std::result::Result<Vec<Endpoint>, String> {
    let mut endpoints = Vec::new();
    let mut seen = HashSet::new();
    for (path, item) in paths {
        if path.starts_with("x-") {
            continue;
        }
        if !path.starts_with('/') {
            return Err(format!("path key `{path}` does not start with `/`"));
        }
        let item = item.as_object().ok_or_else(|| format!("path item `{path}` is not an object"))?;

        let shared: Vec<(&String, &Value)> =
            item.iter().filter(|(k, _)| HttpVerb::from_operation_key(k).is_none() && k.as_str() != "$ref").collect();

        for (key, op) in item {
            let Some(verb) = HttpVerb::from_operation_key(key) else {
                continue;
            };
            let op = op.as_object().ok_or_else(|| format!("operation `{key} {path}` is not an object"))?;
            let id = EndpointId::new(verb, path.clone());
            if !seen.insert(id.clone()) {
                return Err(format!("duplicate operation {id}"));
            }
            let raw = fold_shared_fields(op, &shared);
            endpoints.push(Endpoint::from_raw(id, Value::Object(raw)));
        }
    }
    Ok(endpoints)
}

/// Copies path-item level fields into an operation. Operation-level values
/// win; shared parameters are appended unless the operation redefines the
/// same (name, in) pair.
fn fold_shared_fields(op: &Map<String, Value>, shared: &[(&String, &Value)]) -> Map<String, Value> {
    let mut raw = op.clone();
    for (key, value) in shared {
        if key.as_str() == "parameters" {
            let Some(shared_params) = value.as_array() else {
                continue;
            };
            match raw.get_mut("parameters").and_then(Value::as_array_mut) {
                Some(own) => {
                    let own_keys: HashSet<(Option<String>, Option<String>)> = own.iter().map(param_key).collect();
                    for p in shared_params {
                        if !own_keys.contains(&param_key(p)) {
                            own.push(p.clone());
                        }
                    }
                }
                None => {
                    raw.insert("parameters".into(), Value::Array(shared_params.clone()));
                }
            }
        } else if !raw.contains_key(key.as_str()) {
            raw.insert((*key).clone(), (*value).clone());
        }
    }
    raw
}

fn param_key(p: &Value) -> (Option<String>, Option<String>) {
    let field = |k: &str| p.get(k).and_then(Value::as_str).map(str::to_string);
    match field("$ref") {
        Some(r) => (Some(r), None),
        None => (field("name"), field("in")),
    }
}

fn yaml_to_json(value: serde_yaml::Value) -> std::result::Result<Value, String> {
    use serde_yaml::Value as Y;
    Ok(match value {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(b),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                serde_json::Number::from_f64(f).map(Value::Number).unwrap_or_else(|| Value::String(n.to_string()))
            }
        }
        Y::String(s) => Value::String(s),
        Y::Sequence(seq) => Value::Array(seq.into_iter().map(yaml_to_json).collect::<std::result::Result<_, _>>()?),
        Y::Mapping(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                let key = match k {
                    Y::String(s) => s,
                    Y::Number(n) => n.to_string(),
                    Y::Bool(b) => b.to_string(),
                    Y::Null => "null".to_string(),
                    other => return Err(format!("unsupported mapping key {other:?}")),
                };
                out.insert(key, yaml_to_json(v)?);
            }
            Value::Object(out)
        }
        Y::Tagged(tagged) => yaml_to_json(tagged.value)?,
    })
}

/// Inlines local `{"$ref": "#/..."}` objects. Cyclic references are left in
/// place at the point where the cycle closes.
pub fn resolve_local_refs(root: &Value) -> Value {
    fn walk(node: &Value, root: &Value, stack: &mut Vec<String>) -> Value {
        match node {
            Value::Object(map) => {
                if let Some(Value::String(target)) = map.get("$ref") {
                    if let Some(pointer) = target.strip_prefix('#') {
                        if !stack.contains(target) {
                            if let Some(resolved) = root.pointer(pointer) {
                                stack.push(target.clone());
                                let out = walk(resolved, root, stack);
                                stack.pop();
                                return out;
                            }
                        }
                    }
                }
                Value::Object(map.iter().map(|(k, v)| (k.clone(), walk(v, root, stack))).collect())
            }
            Value::Array(items) => Value::Array(items.iter().map(|v| walk(v, root, stack)).collect()),
            other => other.clone(),
        }
    }
    walk(root, root, &mut Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_OPS: &str = r#"{
        "openapi": "3.0.0",
        "info": {"title": "Demo", "description": "demo api"},
        "paths": {
            "/a": {
                "parameters": [{"name": "lang", "in": "query"}],
                "get": {"summary": "get a", "parameters": [{"name": "id", "in": "query"}]},
                "post": {"description": "post a", "requestBody": {"content": {}}}
            },
            "/a/{id}": {"delete": {"responses": {"204": {"description": "gone"}}}}
        }
    }"#;

    #[test]
    fn minimal_document_has_no_endpoints() {
        let doc = parse_spec(br#"{"openapi":"3.0.0","info":{"title":"T"},"paths":{}}"#, "min").unwrap();
        assert_eq!(doc.title, "T");
        assert_eq!(doc.format, SourceFormat::Json);
        assert!(doc.endpoints().is_empty());
    }

    #[test]
    fn endpoints_follow_document_order() {
        let doc = parse_spec(TWO_OPS.as_bytes(), "demo").unwrap();
        let ids: Vec<String> = doc.endpoint_ids().map(|i| i.to_string()).collect();
        assert_eq!(ids, ["GET /a", "POST /a", "DELETE /a/{id}"]);
        assert_eq!(doc.description.as_deref(), Some("demo api"));
    }

    #[test]
    fn shared_parameters_are_folded_into_each_operation() {
        let doc = parse_spec(TWO_OPS.as_bytes(), "demo").unwrap();
        let get = &doc.endpoints()[0];
        let names: Vec<&str> = get.parameters.iter().map(|p| p["name"].as_str().unwrap()).collect();
        assert_eq!(names, ["id", "lang"]);
        let post = &doc.endpoints()[1];
        assert_eq!(post.parameters.len(), 1);
        assert!(post.request_body.is_some());
        assert_eq!(post.best_description(), "post a");
    }

    #[test]
    fn operation_parameter_overrides_shared_one() {
        let src = r#"{"info":{"title":"T"},"paths":{"/x":{
            "parameters":[{"name":"q","in":"query","description":"shared"}],
            "get":{"parameters":[{"name":"q","in":"query","description":"own"}]}}}}"#;
        let doc = parse_spec(src.as_bytes(), "t").unwrap();
        let params = &doc.endpoints()[0].parameters;
        assert_eq!(params.len(), 1);
        assert_eq!(params[0]["description"], "own");
    }

    #[test]
    fn yaml_documents_parse_to_the_same_tree() {
        let yaml = "openapi: 3.0.0\ninfo:\n  title: Y\npaths:\n  /z:\n    get:\n      responses:\n        200:\n          description: ok\n";
        let doc = parse_spec(yaml.as_bytes(), "y.yaml").unwrap();
        assert_eq!(doc.format, SourceFormat::Yaml);
        assert_eq!(doc.endpoints()[0].responses["200"]["description"], "ok");
    }

    #[test]
    fn missing_title_or_paths_is_rejected() {
        let no_title = parse_spec(br#"{"info":{},"paths":{}}"#, "x").unwrap_err();
        assert!(matches!(no_title, Error::NotOpenApi { .. }));
        let no_paths = parse_spec(br#"{"info":{"title":"a"}}"#, "x").unwrap_err();
        assert!(matches!(no_paths, Error::NotOpenApi { .. }));
        let bad_path = parse_spec(br#"{"info":{"title":"a"},"paths":{"a":{}}}"#, "x").unwrap_err();
        assert!(matches!(bad_path, Error::NotOpenApi { .. }));
    }

    #[test]
    fn unparseable_bytes_are_malformed() {
        let err = parse_spec(b"{\"info\": [", "x").unwrap_err();
        assert!(matches!(err, Error::MalformedDocument { .. }));
        let err = parse_spec(&[0xff, 0xfe, 0x00], "x").unwrap_err();
        assert!(matches!(err, Error::MalformedDocument { .. }));
    }

    #[test]
    fn lookup_normalizes_verb_and_reports_nearest_path() {
        let doc = parse_spec(TWO_OPS.as_bytes(), "demo").unwrap();
        let ep = doc.find_endpoint("get", "/a").unwrap();
        assert_eq!(ep.id.to_string(), "GET /a");
        match doc.find_endpoint("GET", "/a/{idx}/more").unwrap_err() {
            Error::EndpointNotFound { nearest, .. } => assert_eq!(nearest.as_deref(), Some("/a/{id}")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn serialization_is_compact_and_ordered() {
        let doc = parse_spec(br#"{"info":{"title":"T"},"paths":{"/a":{"get":{"summary":"s"}}}}"#, "t").unwrap();
        let ep = &doc.endpoints()[0];
        let s = serialize_endpoint(ep);
        assert_eq!(s, r#"{"verb":"GET","path":"/a","operation":{"summary":"s"}}"#);
        assert_eq!(s, serialize_endpoint(ep));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["operation"], ep.raw);
    }

    #[test]
    fn endpoint_id_parsing() {
        let id: EndpointId = "get  /movie/{movie_id}/credits".parse().unwrap();
        assert_eq!(id.verb, HttpVerb::Get);
        assert_eq!(id.path, "/movie/{movie_id}/credits");
        assert!("GET movie".parse::<EndpointId>().is_err());
        assert!("FETCH /x".parse::<EndpointId>().is_err());
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"GET /movie/{movie_id}/credits\"");
    }

    #[test]
    fn local_refs_are_inlined_and_cycles_survive() {
        let src = r##"{"info":{"title":"T"},"paths":{"/a":{"get":{"responses":{"200":{"$ref":"#/components/responses/ok"}}}}},
            "components":{"responses":{"ok":{"description":"fine","schema":{"$ref":"#/components/schemas/node"}}},
            "schemas":{"node":{"properties":{"next":{"$ref":"#/components/schemas/node"}}}}}}"##;
        let doc = parse_spec_with(src.as_bytes(), "t", ParseOptions { resolve_refs: true }).unwrap();
        let resp = &doc.endpoints()[0].responses["200"];
        assert_eq!(resp["description"], "fine");
        assert_eq!(resp["schema"]["properties"]["next"]["$ref"], "#/components/schemas/node");
        let plain = parse_spec(src.as_bytes(), "t").unwrap();
        assert!(plain.endpoints()[0].responses["200"].get("$ref").is_some());
    }
}
