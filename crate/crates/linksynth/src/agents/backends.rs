//! Backend contract shared by the scripted and remote implementations.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentRole {
    Topology,
    Critic,
    Planner,
    Refiner,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AgentRole::Topology => "topology",
            AgentRole::Critic => "critic",
            AgentRole::Planner => "planner",
            AgentRole::Refiner => "refiner",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("{role} response unparseable: {detail}")]
    Parse { role: AgentRole, detail: String },
    #[error("{role} produced no compliant output in {attempts} attempts")]
    RetriesExhausted { role: AgentRole, attempts: usize },
    #[error("backend misconfigured: {0}")]
    Config(String),
}

/// A text backend: (role, prompt) → response text. Implementations must
/// be total (text or a transport error) and never mutate pipeline state.
pub trait AgentBackend: Send + Sync {
    fn name(&self) -> &str;
    fn temperature(&self) -> f64;
    fn complete(&self, role: AgentRole, prompt: &str) -> Result<String, AgentError>;
}

/// Extract the first balanced JSON object from free-form text.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_nested_object_amid_prose() {
        let text = r#"rationale here {"a": {"b": [1, 2]}, "s": "x } y"} trailing"#;
        assert_eq!(
            extract_json_object(text),
            Some(r#"{"a": {"b": [1, 2]}, "s": "x } y"}"#)
        );
    }

    #[test]
    fn no_object_returns_none() {
        assert_eq!(extract_json_object("no json here"), None);
        assert_eq!(extract_json_object("{unbalanced"), None);
    }
}
