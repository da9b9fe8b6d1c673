//! Prompt templates with named placeholders, and persona endowments.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::grid::DesignError;

/// A point of view given to an agent by prepending text to its prompt.
/// An empty `endowment_text` is legal and denotes the un-endowed agent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Persona {
    pub persona_id: String,
    pub endowment_text: String,
}

impl Persona {
    pub fn new(persona_id: impl Into<String>, endowment_text: impl Into<String>) -> Persona {
        Persona {
            persona_id: persona_id.into(),
            endowment_text: endowment_text.into(),
        }
    }

    pub fn unendowed(persona_id: impl Into<String>) -> Persona {
        Persona::new(persona_id, "")
    }
}

/// Template text with `{name}` placeholders. Every placeholder found in the
/// text is required at render time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_text: String,
    required_placeholders: BTreeSet<String>,
}

impl PromptTemplate {
    pub fn new(template_text: impl Into<String>) -> PromptTemplate {
        let template_text = template_text.into();
        let required_placeholders = scan_placeholders(&template_text);
        PromptTemplate {
            template_text,
            required_placeholders,
        }
    }

    pub fn required_placeholders(&self) -> &BTreeSet<String> {
        &self.required_placeholders
    }
}

/// Finds `{name}` tokens where `name` is an identifier
/// (`[A-Za-z_][A-Za-z0-9_]*`). Other brace uses pass through untouched.
fn scan_placeholders(text: &str) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some((name, end)) = placeholder_at(text, i) {
                names.insert(name.to_string());
                i = end;
                continue;
            }
        }
        i += 1;
    }
    names
}

/// If `text[start..]` begins a placeholder, returns its name and the byte
/// index just past the closing brace.
fn placeholder_at(text: &str, start: usize) -> Option<(&str, usize)> {
    let rest = &text[start + 1..];
    let close = rest.find('}')?;
    let name = &rest[..close];
    let mut chars = name.chars();
    let first = chars.next()?;
    if !(first.is_ascii_alphabetic() || first == '_') {
        return None;
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    Some((name, start + 1 + close + 1))
}

/// Renders a template with strict placeholder checking: every placeholder
/// must be bound and every binding must match a placeholder.
///
/// The persona's endowment text is prepended, separated from the body by a
/// single blank line; an empty endowment contributes nothing. Substitution
/// is literal and single-pass: braces inside binding values are not
/// re-expanded.
pub fn render_prompt(
    template: &PromptTemplate,
    bindings: &BTreeMap<String, String>,
    persona: &Persona,
) -> Result<String, DesignError> {
    for name in bindings.keys() {
        if !template.required_placeholders.contains(name) {
            return Err(DesignError::UnknownPlaceholder(name.clone()));
        }
    }
    render_prompt_lenient(template, bindings, persona)
}

/// Like [`render_prompt`] but tolerates bindings that match no placeholder.
/// Unbound placeholders are still an error in both modes.
pub fn render_prompt_lenient(
    template: &PromptTemplate,
    bindings: &BTreeMap<String, String>,
    persona: &Persona,
) -> Result<String, DesignError> {
    let text = &template.template_text;
    let mut body = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some((name, end)) = placeholder_at(text, i) {
                let value = bindings
                    .get(name)
                    .ok_or_else(|| DesignError::MissingPlaceholder(name.to_string()))?;
                body.push_str(value);
                i = end;
                continue;
            }
        }
        // Push the full UTF-8 character starting here.
        let ch_len = text[i..].chars().next().map(char::len_utf8).unwrap_or(1);
        body.push_str(&text[i..i + ch_len]);
        i += ch_len;
    }

    if persona.endowment_text.is_empty() {
        Ok(body)
    } else {
        Ok(format!("{}\n\n{}", persona.endowment_text, body))
    }
}
