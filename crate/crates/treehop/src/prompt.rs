//! Versioned prompt template store.
//!
//! Templates are plain text files with `{{slot}}` placeholders, versioned as
//! a set. The engine ships a built-in `v1` set; an alternative set can be
//! loaded from a directory. The transport layer treats rendered prompts as
//! opaque; callers identify requests by template name, and the set version
//! is recorded in run manifests and traces.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const BUILTIN_VERSION: &str = "v1";

const BUILTIN: &[(&str, &str)] = &[
    ("analyze", include_str!("../templates/analyze.txt")),
    ("decompose", include_str!("../templates/decompose.txt")),
    ("answer", include_str!("../templates/answer.txt")),
    ("rewrite", include_str!("../templates/rewrite.txt")),
    ("support", include_str!("../templates/support.txt")),
    ("aggregate", include_str!("../templates/aggregate.txt")),
    ("reformulate", include_str!("../templates/reformulate.txt")),
];

#[derive(Debug, Clone)]
pub struct TemplateStore {
    version: String,
    templates: BTreeMap<String, String>,
}

impl TemplateStore {
    pub fn builtin() -> Self {
        TemplateStore {
            version: BUILTIN_VERSION.to_string(),
            templates: BUILTIN
                .iter()
                .map(|(name, text)| (name.to_string(), text.to_string()))
                .collect(),
        }
    }

    /// Load `<name>.txt` files from a directory as a complete template set.
    /// Every built-in template name must be present.
    pub fn from_dir(dir: impl AsRef<Path>, version: impl Into<String>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut templates = BTreeMap::new();
        for (name, _) in BUILTIN {
            let path = dir.join(format!("{name}.txt"));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            templates.insert(name.to_string(), text);
        }
        Ok(TemplateStore {
            version: version.into(),
            templates,
        })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    /// Render template `name`, filling every `{{slot}}`. Unknown templates
    /// and unfilled slots are errors.
    pub fn render(&self, name: &str, slots: &[(&str, &str)]) -> Result<String> {
        let template = self.templates.get(name).ok_or_else(|| Error::Template {
            id: name.to_string(),
            message: "unknown template".into(),
        })?;
        let mut out = template.clone();
        for (slot, value) in slots {
            out = out.replace(&format!("{{{{{slot}}}}}"), value);
        }
        if let Some(start) = out.find("{{") {
            let tail: String = out[start..].chars().take(40).collect();
            return Err(Error::Template {
                id: name.to_string(),
                message: format!("unfilled slot near `{tail}`"),
            });
        }
        Ok(out)
    }
}

impl Default for TemplateStore {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_set_is_complete() {
        let store = TemplateStore::builtin();
        assert_eq!(store.version(), "v1");
        for (name, _) in BUILTIN {
            assert!(store.templates.contains_key(*name));
        }
    }

    #[test]
    fn render_fills_slots() {
        let store = TemplateStore::builtin();
        let prompt = store
            .render(
                "answer",
                &[
                    ("question", "Where is Vienna?"),
                    ("context", "some evidence"),
                ],
            )
            .unwrap();
        assert!(prompt.contains("Where is Vienna?"));
        assert!(prompt.contains("some evidence"));
    }

    #[test]
    fn unfilled_slot_is_an_error() {
        let store = TemplateStore::builtin();
        let err = store.render("answer", &[("question", "q")]).unwrap_err();
        assert!(err.to_string().contains("unfilled slot"));
    }

    #[test]
    fn unknown_template_is_an_error() {
        let store = TemplateStore::builtin();
        assert!(store.render("nope", &[]).is_err());
    }

    #[test]
    fn directory_set_overrides_builtin() {
        let dir = tempfile::tempdir().unwrap();
        let store = TemplateStore::builtin();
        for name in [
            "analyze",
            "decompose",
            "answer",
            "rewrite",
            "support",
            "aggregate",
            "reformulate",
        ] {
            std::fs::write(
                dir.path().join(format!("{name}.txt")),
                format!("custom {name}: {{{{question}}}}"),
            )
            .unwrap();
        }
        drop(store);
        let custom = TemplateStore::from_dir(dir.path(), "v2-custom").unwrap();
        assert_eq!(custom.version(), "v2-custom");
        let prompt = custom.render("analyze", &[("question", "q")]).unwrap();
        assert_eq!(prompt, "custom analyze: q");
    }
}
