//! The predefined API set: typed schemas, intent tagging, argument
//! validation and deterministic execution against [`Document`].

mod exec;
mod schemas;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::doc::{round3, Document};

pub use exec::{ExecError, ExecErrorKind, ExecOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentCategory {
    ContentCreation,
    ContentModification,
    TableOperation,
    ImageOperation,
    ChartOperation,
    FormatStyleEditing,
    DocumentStructureUpdate,
    DocumentLifecycleUpdate,
}

impl IntentCategory {
    pub const ALL: [IntentCategory; 8] = [
        IntentCategory::ContentCreation,
        IntentCategory::ContentModification,
        IntentCategory::TableOperation,
        IntentCategory::ImageOperation,
        IntentCategory::ChartOperation,
        IntentCategory::FormatStyleEditing,
        IntentCategory::DocumentStructureUpdate,
        IntentCategory::DocumentLifecycleUpdate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IntentCategory::ContentCreation => "content_creation",
            IntentCategory::ContentModification => "content_modification",
            IntentCategory::TableOperation => "table_operation",
            IntentCategory::ImageOperation => "image_operation",
            IntentCategory::ChartOperation => "chart_operation",
            IntentCategory::FormatStyleEditing => "format_style_editing",
            IntentCategory::DocumentStructureUpdate => "document_structure_update",
            IntentCategory::DocumentLifecycleUpdate => "document_lifecycle_update",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for IntentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Semantic parameter types. Validation is static: it never looks at a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    /// Zero-based position, integer ≥ 0.
    Index,
    /// Integer ≥ 1.
    Count,
    Text,
    NonEmptyText,
    /// Non-empty list of strings.
    TextList,
    Bool,
    /// Float > 0.
    PosFloat,
    /// Float ≥ 0.
    NonNegFloat,
    Float,
    /// Six hex digits.
    Color,
    Choice(&'static [&'static str]),
}

impl ParamType {
    pub fn name(self) -> &'static str {
        match self {
            ParamType::Index => "index",
            ParamType::Count => "count",
            ParamType::Text => "text",
            ParamType::NonEmptyText => "non_empty_text",
            ParamType::TextList => "text_list",
            ParamType::Bool => "bool",
            ParamType::PosFloat => "positive_float",
            ParamType::NonNegFloat => "non_negative_float",
            ParamType::Float => "float",
            ParamType::Color => "color",
            ParamType::Choice(_) => "choice",
        }
    }

    pub fn is_integer(self) -> bool {
        matches!(self, ParamType::Index | ParamType::Count)
    }

    pub fn is_float(self) -> bool {
        matches!(
            self,
            ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float
        )
    }

    /// Check a value and return its normalized form: integers as `u64`,
    /// floats rounded to three decimals, colors upper-cased.
    pub fn normalize(self, v: &Value) -> Option<Value> {
        match self {
            ParamType::Index | ParamType::Count => {
                let n = as_integer(v)?;
                if self == ParamType::Count && n < 1 {
                    return None;
                }
                Some(Value::from(n))
            }
            ParamType::Text => v.as_str().map(Value::from),
            ParamType::NonEmptyText => v.as_str().filter(|s| !s.trim().is_empty()).map(Value::from),
            ParamType::TextList => {
                let items = v.as_array()?;
                if items.is_empty() || items.iter().any(|x| !x.is_string()) {
                    return None;
                }
                Some(v.clone())
            }
            ParamType::Bool => v.as_bool().map(Value::from),
            ParamType::PosFloat | ParamType::NonNegFloat | ParamType::Float => {
                let x = v.as_f64()?;
                if !x.is_finite() {
                    return None;
                }
                let x = round3(x);
                let ok = match self {
                    ParamType::PosFloat => x > 0.0,
                    ParamType::NonNegFloat => x >= 0.0,
                    _ => true,
                };
                ok.then(|| float_value(x))
            }
            ParamType::Color => {
                let s = v.as_str()?.trim_start_matches('#');
                (s.len() == 6 && s.chars().all(|c| c.is_ascii_hexdigit()))
                    .then(|| Value::from(s.to_ascii_uppercase()))
            }
            ParamType::Choice(options) => {
                v.as_str().filter(|s| options.contains(s)).map(Value::from)
            }
        }
    }

    /// A type-correct filler value, used when a caller must instantiate a
    /// required parameter without any other information.
    pub fn placeholder(self) -> Value {
        match self {
            ParamType::Index => Value::from(0u64),
            ParamType::Count => Value::from(1u64),
            ParamType::Text | ParamType::NonEmptyText => Value::from("text"),
            ParamType::TextList => Value::from(vec!["text"]),
            ParamType::Bool => Value::from(true),
            ParamType::PosFloat => float_value(10.0),
            ParamType::NonNegFloat | ParamType::Float => float_value(0.0),
            ParamType::Color => Value::from("000000"),
            ParamType::Choice(options) => Value::from(options[0]),
        }
    }
}

fn as_integer(v: &Value) -> Option<u64> {
    if let Some(n) = v.as_u64() {
        return Some(n);
    }
    let x = v.as_f64()?;
    (x >= 0.0 && x.fract() == 0.0 && x < 9.0e15).then_some(x as u64)
}

pub(crate) fn float_value(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub ty: ParamType,
    pub required: bool,
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiSchema {
    pub name: &'static str,
    pub intent_categories: Vec<IntentCategory>,
    pub params: Vec<ParamSpec>,
    pub description: &'static str,
}

impl ApiSchema {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn has_category(&self, c: IntentCategory) -> bool {
        self.intent_categories.contains(&c)
    }

    /// Entry of the machine-readable registry dump.
    pub fn to_json(&self) -> Value {
        let params: Vec<Value> = self
            .params
            .iter()
            .map(|p| {
                let mut m = serde_json::Map::new();
                m.insert("name".into(), p.name.into());
                m.insert("type".into(), p.ty.name().into());
                if let ParamType::Choice(opts) = p.ty {
                    m.insert("choices".into(), Value::from(opts.to_vec()));
                }
                m.insert("required".into(), p.required.into());
                m.insert("default".into(), p.default.clone().unwrap_or(Value::Null));
                Value::Object(m)
            })
            .collect();
        serde_json::json!({
            "name": self.name,
            "categories": self.intent_categories,
            "params": params,
            "description": self.description,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Planned,
    ArgRollback,
    ApiRollback,
}

pub type Args = BTreeMap<String, Value>;

/// One atomic action: an API name plus its arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiCall {
    pub api_name: String,
    pub args: Args,
    #[serde(default)]
    pub provenance: Provenance,
    #[serde(default)]
    pub token_cost: u64,
}

impl ApiCall {
    pub fn new(api_name: impl Into<String>, args: Args) -> Self {
        ApiCall {
            api_name: api_name.into(),
            args,
            provenance: Provenance::Planned,
            token_cost: 0,
        }
    }

    /// Build from a JSON object of arguments; panics if `args` is not an object.
    pub fn from_json(api_name: &str, args: Value) -> Self {
        let map = match args {
            Value::Object(m) => m.into_iter().collect(),
            Value::Null => Args::new(),
            other => panic!("arguments must be a JSON object, got {other}"),
        };
        ApiCall::new(api_name, map)
    }

    /// Same API and arguments, ignoring provenance and token cost.
    pub fn same_action(&self, other: &ApiCall) -> bool {
        self.api_name == other.api_name && self.args == other.args
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
}

impl fmt::Display for ApiCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.api_name)?;
        for (i, (k, v)) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={}", crate::doc::value_to_canonical_string(v))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArgError {
    #[error("unknown API `{0}`")]
    UnknownApi(String),
    #[error("`{api}` is missing required argument `{param}`")]
    MissingArg { api: String, param: String },
    #[error("`{api}` argument `{param}` expects {expected}")]
    TypeMismatch {
        api: String,
        param: String,
        expected: &'static str,
    },
    #[error("`{api}` has no parameter `{param}`")]
    UnexpectedArg { api: String, param: String },
}

/// The API set. Immutable after construction; share it freely.
#[derive(Debug)]
pub struct Registry {
    apis: Vec<ApiSchema>,
    by_name: HashMap<&'static str, usize>,
}

impl Registry {
    pub fn standard() -> Self {
        Self::from_schemas(schemas::standard())
    }

    /// Process-wide instance of [`Registry::standard`].
    pub fn shared() -> &'static Registry {
        static SHARED: OnceLock<Registry> = OnceLock::new();
        SHARED.get_or_init(Registry::standard)
    }

    pub fn from_schemas(apis: Vec<ApiSchema>) -> Self {
        let mut by_name = HashMap::new();
        for (i, a) in apis.iter().enumerate() {
            let prev = by_name.insert(a.name, i);
            assert!(prev.is_none(), "duplicate API name {}", a.name);
            for p in &a.params {
                if let Some(d) = &p.default {
                    assert!(
                        p.ty.normalize(d).is_some(),
                        "default of {}.{} violates its type",
                        a.name,
                        p.name
                    );
                }
            }
        }
        Registry { apis, by_name }
    }

    pub fn get(&self, name: &str) -> Option<&ApiSchema> {
        self.by_name.get(name).map(|&i| &self.apis[i])
    }

    pub fn len(&self) -> usize {
        self.apis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.apis.is_empty()
    }

    pub fn all(&self) -> &[ApiSchema] {
        &self.apis
    }

    /// Registration order; with a filter, the union over the given categories.
    pub fn list_apis(&self, filter: Option<&[IntentCategory]>) -> Vec<&ApiSchema> {
        match filter {
            None => self.apis.iter().collect(),
            Some(cats) => self
                .apis
                .iter()
                .filter(|a| a.intent_categories.iter().any(|c| cats.contains(c)))
                .collect(),
        }
    }

    /// Union of the APIs of the first `k` intents, deduplicated, in registration order.
    pub fn apis_for_intents(&self, intents: &[IntentCategory], k: usize) -> Vec<&ApiSchema> {
        assert!((1..=8).contains(&k), "k must be within 1..=8");
        let top: Vec<IntentCategory> = intents.iter().copied().take(k).collect();
        self.list_apis(Some(&top))
    }

    pub fn validate_args(&self, call: &ApiCall) -> Result<(), ArgError> {
        self.canonicalize(call).map(|_| ())
    }

    /// Validate and return the call with normalized argument values.
    pub fn canonicalize(&self, call: &ApiCall) -> Result<ApiCall, ArgError> {
        let schema = self
            .get(&call.api_name)
            .ok_or_else(|| ArgError::UnknownApi(call.api_name.clone()))?;
        let mut args = Args::new();
        for (k, v) in &call.args {
            let spec = schema.param(k).ok_or_else(|| ArgError::UnexpectedArg {
                api: call.api_name.clone(),
                param: k.clone(),
            })?;
            let norm = spec.ty.normalize(v).ok_or(ArgError::TypeMismatch {
                api: call.api_name.clone(),
                param: k.clone(),
                expected: spec.ty.name(),
            })?;
            args.insert(k.clone(), norm);
        }
        for p in &schema.params {
            if p.required && !args.contains_key(p.name) {
                return Err(ArgError::MissingArg {
                    api: call.api_name.clone(),
                    param: p.name.to_string(),
                });
            }
        }
        Ok(ApiCall {
            api_name: call.api_name.clone(),
            args,
            provenance: call.provenance,
            token_cost: call.token_cost,
        })
    }

    /// Run one call. On error the document is left byte-identical.
    pub fn execute(&self, call: &ApiCall, doc: &mut Document) -> ExecOutcome {
        exec::execute(self, call, doc)
    }

    /// JSON dump consumed by the retrieval and reasoning planners.
    pub fn dump_json(&self) -> Value {
        Value::Array(self.apis.iter().map(ApiSchema::to_json).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn registry_has_forty_apis_covering_every_category() {
        let r = Registry::standard();
        assert_eq!(r.len(), 40);
        for c in IntentCategory::ALL {
            let n = r.list_apis(Some(&[c])).len();
            assert!(n >= 4, "{c} has only {n} APIs");
        }
        assert!(r.all().iter().all(|a| !a.intent_categories.is_empty()));
    }

    #[test]
    fn table_filter_includes_figure_apis() {
        let r = Registry::standard();
        let names: Vec<_> = r
            .list_apis(Some(&[IntentCategory::TableOperation]))
            .iter()
            .map(|a| a.name)
            .collect();
        for n in ["add_table", "add_table_header", "merge_cell_table"] {
            assert!(names.contains(&n), "{n}");
        }
        assert_eq!(r.list_apis(Some(&IntentCategory::ALL)).len(), r.len());
        assert!(r.list_apis(Some(&[])).is_empty());
    }

    #[test]
    fn apis_for_intents_dedupes_and_respects_k() {
        let r = Registry::standard();
        let intents = [
            IntentCategory::TableOperation,
            IntentCategory::ContentCreation,
            IntentCategory::FormatStyleEditing,
        ];
        let got = r.apis_for_intents(&intents, 3);
        let mut names: Vec<_> = got.iter().map(|a| a.name).collect();
        let before = names.len();
        names.dedup();
        assert_eq!(before, names.len());
        // add_table is in two of the three categories but appears once
        assert_eq!(names.iter().filter(|n| **n == "add_table").count(), 1);
        let union = r.list_apis(Some(&intents));
        assert_eq!(got, union);
        assert_eq!(
            r.apis_for_intents(&intents, 1),
            r.list_apis(Some(&[IntentCategory::TableOperation]))
        );
    }

    #[test]
    fn validate_args_cases() {
        let r = Registry::standard();
        assert!(r
            .validate_args(&ApiCall::from_json("add_paragraph", json!({"text": "hi"})))
            .is_ok());
        assert!(matches!(
            r.validate_args(&ApiCall::from_json(
                "merge_cell_table",
                json!({"row": 0, "col": 0})
            )),
            Err(ArgError::MissingArg { param, .. }) if param == "table_index"
        ));
        assert!(matches!(
            r.validate_args(&ApiCall::from_json(
                "set_font_size",
                json!({"paragraph_index": 0, "size_pt": -3})
            )),
            Err(ArgError::TypeMismatch { .. })
        ));
        assert!(matches!(
            r.validate_args(&ApiCall::from_json("nope", json!({}))),
            Err(ArgError::UnknownApi(_))
        ));
    }

    #[test]
    fn canonicalize_normalizes_numbers() {
        let r = Registry::standard();
        let c = r
            .canonicalize(&ApiCall::from_json(
                "set_row_height",
                json!({"table_index": 0.0, "row": 1, "height_pt": 20}),
            ))
            .unwrap();
        assert_eq!(c.args["table_index"], json!(0));
        assert!(c.args["height_pt"].is_f64());
    }

    #[test]
    fn dump_has_expected_shape() {
        let d = Registry::standard().dump_json();
        let first = &d[0];
        for key in ["name", "categories", "params", "description"] {
            assert!(first.get(key).is_some(), "{key}");
        }
    }
}
