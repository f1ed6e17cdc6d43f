//! OpenAI-compatible chat client with token accounting, plus prompt rendering
//! and the JSON-only reply protocol shared by every model-backed component.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub const ENDPOINT_VAR: &str = "DOCFLOW_LLM_ENDPOINT";
pub const KEY_VAR: &str = "DOCFLOW_LLM_KEY";
pub const MODEL_VAR: &str = "DOCFLOW_LLM_MODEL";
pub const DEFAULT_TEMPERATURE: f64 = 0.1;
pub const DEFAULT_TIMEOUT_SECS: u64 = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("model unavailable: {0}")]
    ModelUnavailable(String),
    #[error("malformed model output: {0}")]
    MalformedModelOutput(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub content: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl ChatReply {
    pub fn tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Prompt/completion counters, safe to share across sessions.
#[derive(Debug, Default)]
pub struct TokenMeter {
    prompt: AtomicU64,
    completion: AtomicU64,
}

impl TokenMeter {
    pub fn record(&self, prompt: u64, completion: u64) {
        self.prompt.fetch_add(prompt, Ordering::Relaxed);
        self.completion.fetch_add(completion, Ordering::Relaxed);
    }

    pub fn prompt_tokens(&self) -> u64 {
        self.prompt.load(Ordering::Relaxed)
    }

    pub fn completion_tokens(&self) -> u64 {
        self.completion.load(Ordering::Relaxed)
    }

    pub fn total(&self) -> u64 {
        self.prompt_tokens() + self.completion_tokens()
    }
}

pub trait ChatModel: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<ChatReply, LlmError>;

    fn meter(&self) -> &TokenMeter;
}

/// Rough token estimate, four characters per token.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

pub struct HttpChatModel {
    endpoint: String,
    key: Option<String>,
    pub model_name: String,
    pub temperature: f64,
    client: reqwest::blocking::Client,
    meter: TokenMeter,
}

impl HttpChatModel {
    pub fn new(
        endpoint: &str,
        key: Option<String>,
        model_name: &str,
        timeout: Duration,
    ) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::ModelUnavailable(e.to_string()))?;
        Ok(HttpChatModel {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            key,
            model_name: model_name.to_string(),
            temperature: DEFAULT_TEMPERATURE,
            client,
            meter: TokenMeter::default(),
        })
    }

    /// Reads `DOCFLOW_LLM_ENDPOINT`, `DOCFLOW_LLM_KEY` and optionally `DOCFLOW_LLM_MODEL`.
    pub fn from_env(timeout: Duration) -> Result<Self, LlmError> {
        let endpoint = std::env::var(ENDPOINT_VAR)
            .map_err(|_| LlmError::ModelUnavailable(format!("{ENDPOINT_VAR} is not set")))?;
        let key = std::env::var(KEY_VAR).ok();
        let model = std::env::var(MODEL_VAR).unwrap_or_else(|_| "default".into());
        Self::new(&endpoint, key, &model, timeout)
    }

    fn url(&self) -> String {
        if self.endpoint.ends_with("/chat/completions") {
            self.endpoint.clone()
        } else {
            format!("{}/chat/completions", self.endpoint)
        }
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl ChatModel for HttpChatModel {
    fn complete(&self, messages: &[ChatMessage]) -> Result<ChatReply, LlmError> {
        let body = json!({
            "model": self.model_name,
            "messages": messages,
            "temperature": self.temperature,
        });
        let mut req = self.client.post(self.url()).json(&body);
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let resp = req
            .send()
            .map_err(|e| LlmError::ModelUnavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(LlmError::ModelUnavailable(format!("HTTP {status}: {text}")));
        }
        let wire: WireResponse = resp
            .json()
            .map_err(|e| LlmError::MalformedModelOutput(e.to_string()))?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::MalformedModelOutput("response has no choices".into()))?;
        // Servers that omit usage still get counted, by estimate.
        let (prompt_tokens, completion_tokens) = match wire.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (
                messages.iter().map(|m| estimate_tokens(&m.content)).sum(),
                estimate_tokens(&content),
            ),
        };
        self.meter.record(prompt_tokens, completion_tokens);
        Ok(ChatReply {
            content,
            prompt_tokens,
            completion_tokens,
        })
    }

    fn meter(&self) -> &TokenMeter {
        &self.meter
    }
}

/// Replays canned replies in order; for tests and offline demos.
pub struct CannedModel {
    replies: Mutex<std::collections::VecDeque<Result<String, LlmError>>>,
    requests: Mutex<Vec<Vec<ChatMessage>>>,
    meter: TokenMeter,
}

impl CannedModel {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_results(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn with_results(replies: impl IntoIterator<Item = Result<String, LlmError>>) -> Self {
        CannedModel {
            replies: Mutex::new(replies.into_iter().collect()),
            requests: Mutex::new(Vec::new()),
            meter: TokenMeter::default(),
        }
    }

    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.requests.lock().expect("poisoned").clone()
    }
}

impl ChatModel for CannedModel {
    fn complete(&self, messages: &[ChatMessage]) -> Result<ChatReply, LlmError> {
        self.requests
            .lock()
            .expect("poisoned")
            .push(messages.to_vec());
        let next = self
            .replies
            .lock()
            .expect("poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(LlmError::ModelUnavailable("no canned reply left".into())))?;
        let prompt_tokens = messages.iter().map(|m| estimate_tokens(&m.content)).sum();
        let completion_tokens = estimate_tokens(&next);
        self.meter.record(prompt_tokens, completion_tokens);
        Ok(ChatReply {
            content: next,
            prompt_tokens,
            completion_tokens,
        })
    }

    fn meter(&self) -> &TokenMeter {
        &self.meter
    }
}

pub type SharedModel = Arc<dyn ChatModel>;

/// Prompt templates, version-pinned alongside the code.
pub mod prompts {
    pub const SYSTEM: &str = include_str!("../prompts/system.txt");
    pub const NEXT_STEP: &str = include_str!("../prompts/next_step.txt");
    pub const GENERATE_API: &str = include_str!("../prompts/generate_api.txt");
    pub const REVISE_ARGUMENTS: &str = include_str!("../prompts/revise_arguments.txt");
    pub const REGENERATE_API: &str = include_str!("../prompts/regenerate_api.txt");
    pub const FULL_PLAN: &str = include_str!("../prompts/full_plan.txt");
    pub const VALIDATE: &str = include_str!("../prompts/validate.txt");
    pub const SUMMARIZE: &str = include_str!("../prompts/summarize.txt");
    pub const JUDGE: &str = include_str!("../prompts/judge.txt");
}

/// Fill `{{name}}` placeholders. Unknown placeholders are left untouched.
pub fn render_prompt(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

/// Pull the first JSON object out of a reply, tolerating code fences and prose.
pub fn extract_json_object(text: &str) -> Option<Value> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, ch) in text[start..].char_indices() {
        if in_str {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_str = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    let v: Value = serde_json::from_str(&text[start..start + i + 1]).ok()?;
                    return v.is_object().then_some(v);
                }
            }
            _ => {}
        }
    }
    None
}

/// One JSON-object exchange: on a malformed reply the model is asked once more,
/// then the call fails. Returns the object and the tokens spent.
pub fn complete_json(model: &dyn ChatModel, user_prompt: &str) -> Result<(Value, u64), LlmError> {
    complete_json_checked(model, user_prompt, |_| Ok(()))
}

/// Like [`complete_json`], with an extra shape check that also triggers the re-prompt.
pub fn complete_json_checked(
    model: &dyn ChatModel,
    user_prompt: &str,
    check: impl Fn(&Value) -> Result<(), String>,
) -> Result<(Value, u64), LlmError> {
    let mut messages = vec![
        ChatMessage::system(prompts::SYSTEM),
        ChatMessage::user(user_prompt),
    ];
    let mut spent = 0;
    let mut last_problem = String::new();
    for attempt in 0..2 {
        let reply = model.complete(&messages)?;
        spent += reply.tokens();
        let problem = match extract_json_object(&reply.content) {
            Some(v) => match check(&v) {
                Ok(()) => return Ok((v, spent)),
                Err(e) => e,
            },
            None => "reply is not a single JSON object".to_string(),
        };
        if attempt == 0 {
            messages.push(ChatMessage::assistant(reply.content));
            messages.push(ChatMessage::user(format!(
                "Your reply could not be used: {problem}. Answer again with exactly one JSON object and nothing else."
            )));
        }
        last_problem = problem;
    }
    Err(LlmError::MalformedModelOutput(last_problem))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_object_from_fenced_reply() {
        let v =
            extract_json_object("sure:\n```json\n{\"a\": \"}\", \"b\": {\"c\": 1}}\n```").unwrap();
        assert_eq!(v["b"]["c"], 1);
        assert_eq!(v["a"], "}");
        assert!(extract_json_object("no json here").is_none());
    }

    #[test]
    fn one_reprompt_then_failure() {
        let m = CannedModel::new(["nope", "{\"ok\": true}"]);
        let (v, _) = complete_json(&m, "q").unwrap();
        assert_eq!(v["ok"], true);
        assert_eq!(m.requests()[1].len(), 4);

        let m = CannedModel::new(["nope", "still nope", "{}"]);
        assert!(matches!(
            complete_json(&m, "q"),
            Err(LlmError::MalformedModelOutput(_))
        ));
    }

    #[test]
    fn meter_matches_reported_tokens() {
        let m = CannedModel::new(["{\"x\": 1}"]);
        let (_, spent) = complete_json(&m, "hello there").unwrap();
        assert_eq!(spent, m.meter().total());
    }

    #[test]
    fn render_fills_placeholders() {
        assert_eq!(
            render_prompt("a {{x}} b {{y}}", &[("x", "1")]),
            "a 1 b {{y}}"
        );
        assert_eq!(estimate_tokens("abcde"), 2);
    }
}
