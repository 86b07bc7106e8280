//! Navigation goals in their three modalities.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GoalError {
    #[error("goal text is empty")]
    EmptyText,
    #[error("description goal needs at least one attribute or relation hint")]
    BareDescription,
    #[error("instance goal needs a nonempty attribute signature")]
    EmptySignature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "modality", rename_all = "snake_case")]
pub enum GoalModality {
    /// Object category label, e.g. "toilet".
    Name { category: String },
    /// Category plus attributes and free-form relation hints.
    Description {
        category: String,
        #[serde(default)]
        attributes: Vec<String>,
        #[serde(default)]
        relation_hints: Vec<String>,
    },
    /// A specific instance identified only by its attribute signature
    /// (stands in for image goals).
    Instance { attribute_signature: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    #[serde(flatten)]
    pub modality: GoalModality,
    pub text: String,
}

/// Lowercases and turns `_` into spaces, so `"charging_station_2"` matches
/// `"charging station"`.
pub fn normalize_term(s: &str) -> String {
    s.trim().to_lowercase().replace('_', " ")
}

impl GoalSpec {
    pub fn name(category: impl Into<String>) -> Self {
        let category = category.into();
        GoalSpec {
            text: category.replace('_', " "),
            modality: GoalModality::Name { category },
        }
    }

    pub fn description(
        category: impl Into<String>,
        attributes: Vec<String>,
        relation_hints: Vec<String>,
    ) -> Self {
        let category = category.into();
        let mut text = String::from("the ");
        for a in &attributes {
            text.push_str(a);
            text.push(' ');
        }
        text.push_str(&category.replace('_', " "));
        for h in &relation_hints {
            text.push(' ');
            text.push_str(h);
        }
        GoalSpec {
            text,
            modality: GoalModality::Description {
                category,
                attributes,
                relation_hints,
            },
        }
    }

    pub fn instance(attribute_signature: Vec<String>) -> Self {
        GoalSpec {
            text: format!("the object that is {}", attribute_signature.join(", ")),
            modality: GoalModality::Instance {
                attribute_signature,
            },
        }
    }

    pub fn validate(&self) -> Result<(), GoalError> {
        if self.text.trim().is_empty() {
            return Err(GoalError::EmptyText);
        }
        match &self.modality {
            GoalModality::Description {
                attributes,
                relation_hints,
                ..
            } if attributes.is_empty() && relation_hints.is_empty() => {
                Err(GoalError::BareDescription)
            }
            GoalModality::Instance {
                attribute_signature,
            } if attribute_signature.is_empty() => Err(GoalError::EmptySignature),
            _ => Ok(()),
        }
    }

    pub fn category(&self) -> Option<&str> {
        match &self.modality {
            GoalModality::Name { category } | GoalModality::Description { category, .. } => {
                Some(category)
            }
            GoalModality::Instance { .. } => None,
        }
    }

    /// Attributes a matching object must carry.
    pub fn required_attributes(&self) -> &[String] {
        match &self.modality {
            GoalModality::Name { .. } => &[],
            GoalModality::Description { attributes, .. } => attributes,
            GoalModality::Instance {
                attribute_signature,
            } => attribute_signature,
        }
    }

    /// Category used for per-category report breakdowns.
    pub fn report_category(&self) -> String {
        match self.category() {
            Some(c) => c.to_string(),
            None => "instance".to_string(),
        }
    }

    /// Does an object with this category and these attributes satisfy the goal?
    pub fn matches(&self, category: &str, attributes: &[String]) -> bool {
        if let Some(c) = self.category() {
            if normalize_term(c) != normalize_term(category) {
                return false;
            }
        }
        has_all(attributes, self.required_attributes())
    }

    /// Matching for memory nodes, which carry a name but no category.
    pub fn matches_node<'a>(
        &self,
        name: &str,
        attributes: impl IntoIterator<Item = &'a String> + Clone,
    ) -> bool {
        if let Some(c) = self.category() {
            if !normalize_term(name).contains(&normalize_term(c)) {
                return false;
            }
        }
        self.required_attributes().iter().all(|req| {
            let req = normalize_term(req);
            attributes.clone().into_iter().any(|a| normalize_term(a) == req)
        })
    }
}

fn has_all(have: &[String], need: &[String]) -> bool {
    need.iter().all(|n| {
        let n = normalize_term(n);
        have.iter().any(|h| normalize_term(h) == n)
    })
}
