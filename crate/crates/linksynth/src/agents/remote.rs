//! Chat-completions-style HTTP backend, configured via environment.

use super::backends::{AgentBackend, AgentError, AgentRole};
use serde::Deserialize;
use serde_json::json;
use std::time::Duration;

/// Environment variable naming the endpoint URL.
pub const ENV_URL: &str = "LINKSYNTH_API_URL";
/// Environment variable naming the model.
pub const ENV_MODEL: &str = "LINKSYNTH_MODEL";
/// Environment variable holding the bearer token (optional).
pub const ENV_KEY: &str = "LINKSYNTH_API_KEY";

const TEMPERATURE: f64 = 0.8;
const TIMEOUT: Duration = Duration::from_secs(120);
const MAX_5XX_RETRIES: usize = 3;

pub struct RemoteBackend {
    url: String,
    model: String,
    key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl RemoteBackend {
    /// Build from `LINKSYNTH_API_URL`, `LINKSYNTH_MODEL`, and the
    /// optional `LINKSYNTH_API_KEY`.
    pub fn from_env() -> Result<RemoteBackend, AgentError> {
        let url = std::env::var(ENV_URL)
            .map_err(|_| AgentError::Config(format!("{ENV_URL} not set")))?;
        let model = std::env::var(ENV_MODEL)
            .map_err(|_| AgentError::Config(format!("{ENV_MODEL} not set")))?;
        let key = std::env::var(ENV_KEY).ok();
        Ok(RemoteBackend::new(url, model, key))
    }

    pub fn new(url: String, model: String, key: Option<String>) -> RemoteBackend {
        let client = reqwest::blocking::Client::builder()
            .timeout(TIMEOUT)
            .build()
            .expect("reqwest client");
        RemoteBackend {
            url,
            model,
            key,
            client,
        }
    }

    fn post_once(&self, role: AgentRole, prompt: &str) -> Result<reqwest::blocking::Response, AgentError> {
        let body = json!({
            "model": self.model,
            "temperature": TEMPERATURE,
            "messages": [
                {"role": "system", "content": format!("You are the {role} agent for planar linkage synthesis.")},
                {"role": "user", "content": prompt},
            ],
        });
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.key {
            req = req.bearer_auth(key);
        }
        req.send().map_err(|e| AgentError::Transport(e.to_string()))
    }
}

impl AgentBackend for RemoteBackend {
    fn name(&self) -> &str {
        &self.model
    }

    fn temperature(&self) -> f64 {
        TEMPERATURE
    }

    fn complete(&self, role: AgentRole, prompt: &str) -> Result<String, AgentError> {
        let mut backoff = Duration::from_millis(250);
        let mut last_err = String::new();
        for attempt in 0..=MAX_5XX_RETRIES {
            let resp = self.post_once(role, prompt)?;
            let status = resp.status();
            if status.is_success() {
                let parsed: ChatResponse = resp
                    .json()
                    .map_err(|e| AgentError::Transport(format!("malformed response: {e}")))?;
                return parsed
                    .choices
                    .into_iter()
                    .next()
                    .map(|c| c.message.content)
                    .ok_or_else(|| AgentError::Transport("empty choices".into()));
            }
            if status.is_client_error() {
                // 4xx is not retried
                return Err(AgentError::Transport(format!("HTTP {status}")));
            }
            last_err = format!("HTTP {status}");
            if attempt < MAX_5XX_RETRIES {
                std::thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(AgentError::Transport(format!(
            "gave up after {MAX_5XX_RETRIES} retries: {last_err}"
        )))
    }
}
