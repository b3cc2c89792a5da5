//! Minimal prompt template engine: `{name}` placeholders, extraction and
//! substitution. Placeholder names are `[a-z_]+`; anything else inside braces
//! is left alone.

use std::collections::BTreeSet;

use regex::Regex;
use std::sync::OnceLock;

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_]+)\}").unwrap())
}

/// Distinct placeholder names appearing in a template, in sorted order.
pub fn placeholders(template: &str) -> Vec<String> {
    let set: BTreeSet<String> = placeholder_re()
        .captures_iter(template)
        .map(|c| c[1].to_string())
        .collect();
    set.into_iter().collect()
}

/// Substitute every `{name}` for which a value is provided; unprovided
/// placeholders are replaced with the empty string.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    placeholder_re()
        .replace_all(template, |caps: &regex::Captures| {
            let name = &caps[1];
            values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| v.to_string())
                .unwrap_or_default()
        })
        .into_owned()
}
