//! Prompt templates.
//!
//! Three templates cover the pipeline's chat calls:
//!
//! * **task-adaptive**: instruction-formatted classification input, used
//!   when encoding node text with instruction-tuned embedding models;
//! * **node-label**: asks the model to pick a category for one node's text
//!   (zero-shot anchor construction);
//! * **pair**: asks whether two nodes' texts belong to the same class
//!   (homophily estimation). This template is versioned because estimates
//!   are only comparable across runs when the wording is identical.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Current wording of the pair template. Bump when the wording changes;
/// cached estimates record the version they were produced with.
pub const PAIR_TEMPLATE_VERSION: &str = "pair-v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("task description must not be empty")]
    EmptyTaskDescription,
    #[error("class list must not be empty")]
    NoClasses,
    #[error("class name at index {0} is empty")]
    EmptyClassName(usize),
    #[error("node text for {which} must not be empty")]
    EmptyNodeText { which: &'static str },
}

/// A prompt ready to send: optional system message plus user message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    pub user: String,
}

fn check_task_description(task_description: &str) -> Result<(), PromptError> {
    if task_description.trim().is_empty() {
        return Err(PromptError::EmptyTaskDescription);
    }
    Ok(())
}

fn check_classes(class_names: &[String]) -> Result<(), PromptError> {
    if class_names.is_empty() {
        return Err(PromptError::NoClasses);
    }
    if let Some(idx) = class_names.iter().position(|c| c.trim().is_empty()) {
        return Err(PromptError::EmptyClassName(idx));
    }
    Ok(())
}

/// Instruction-formatted classification input for instruction-tuned text
/// encoders. The node text may be empty (an unlabeled stub still encodes);
/// the task description and class list may not.
pub fn build_task_adaptive_prompt(
    task_description: &str,
    class_names: &[String],
    node_text: &str,
) -> Result<RenderedPrompt, PromptError> {
    check_task_description(task_description)?;
    check_classes(class_names)?;
    let user = format!(
        "<Instruct>\nGiven the {task_description}, classify it into one of the following {k} classes:\n{classes}\n<query>\n{node_text}\n<response>",
        k = class_names.len(),
        classes = class_names.join(", "),
    );
    Ok(RenderedPrompt { system: None, user })
}

/// Asks a chat model to assign one node's text to a category. The answer is
/// mapped back to a class id with [`super::parse::parse_class_label`].
pub fn build_node_label_prompt(
    task_description: &str,
    class_names: &[String],
    node_text: &str,
) -> Result<RenderedPrompt, PromptError> {
    check_task_description(task_description)?;
    check_classes(class_names)?;
    let user = format!(
        "We have {task_description} from the following {k} categories: {classes}\nThe text is as follows:\n{node_text}\nPlease tell which category the text belongs to:",
        k = class_names.len(),
        classes = class_names.join(", "),
    );
    Ok(RenderedPrompt {
        system: Some("You are a chatbot who is an expert in text classification".into()),
        user,
    })
}

/// Asks whether two nodes' texts belong to the same class (template
/// [`PAIR_TEMPLATE_VERSION`]). Both texts must be non-empty; an empty side
/// would make the question unanswerable and silently bias the estimate.
pub fn build_pair_prompt(
    task_description: &str,
    text_a: &str,
    text_b: &str,
) -> Result<RenderedPrompt, PromptError> {
    check_task_description(task_description)?;
    if text_a.trim().is_empty() {
        return Err(PromptError::EmptyNodeText { which: "node A" });
    }
    if text_b.trim().is_empty() {
        return Err(PromptError::EmptyNodeText { which: "node B" });
    }
    let user = format!(
        "We have {task_description} for two nodes of a graph.\nNode A:\n{text_a}\nNode B:\n{text_b}\nAnswer strictly Yes or No: do these two belong to the same class?",
    );
    Ok(RenderedPrompt {
        system: Some("You are a chatbot who is an expert in text classification".into()),
        user,
    })
}

/// Truncates text to at most `budget` characters on a char boundary,
/// appending an ellipsis when anything was cut. Applied to node texts
/// before pair prompts so two long documents still fit a context window.
pub fn truncate_text(text: &str, budget: usize) -> String {
    if text.chars().count() <= budget {
        return text.to_string();
    }
    let kept: String = text.chars().take(budget).collect();
    format!("{kept}…")
}
