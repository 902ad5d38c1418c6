//! Prompt rendering from versioned template files.
//!
//! Templates live as plain text files, one per (task, mode), plus one risk
//! paragraph shared across tasks. Placeholders: `{{text}}` for the item
//! (always the final element), `{{risk_paragraph}}` on its own line (removed
//! entirely under the no-risk configuration), and `{{risk_digit}}` /
//! `{{risk_name}}` inside the risk paragraph. The crate ships the default
//! set compiled in; a directory of overrides can replace it at run time.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use metacog_core::StimulusClass;

use crate::error::{HarnessError, Result};
use crate::task::TaskKind;

/// Which response, if any, the prompt declares high-risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskConfig {
    S1,
    #[default]
    None,
    S2,
}

impl RiskConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RiskConfig::S1 => "s1",
            RiskConfig::None => "none",
            RiskConfig::S2 => "s2",
        }
    }

    pub fn parse(name: &str) -> Option<RiskConfig> {
        match name {
            "s1" | "S1" => Some(RiskConfig::S1),
            "none" | "None" => Some(RiskConfig::None),
            "s2" | "S2" => Some(RiskConfig::S2),
            _ => None,
        }
    }

    pub fn target(&self) -> Option<StimulusClass> {
        match self {
            RiskConfig::S1 => Some(StimulusClass::S1),
            RiskConfig::None => None,
            RiskConfig::S2 => Some(StimulusClass::S2),
        }
    }
}

impl fmt::Display for RiskConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether the trial asks for a confidence rating after the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    #[default]
    WithConfidence,
    Type1Only,
}

impl PromptMode {
    pub fn name(&self) -> &'static str {
        match self {
            PromptMode::WithConfidence => "with_confidence",
            PromptMode::Type1Only => "type1_only",
        }
    }

    pub fn parse(name: &str) -> Option<PromptMode> {
        match name {
            "with_confidence" => Some(PromptMode::WithConfidence),
            "type1_only" => Some(PromptMode::Type1Only),
            _ => None,
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const ALL_TASKS: [TaskKind; 3] =
    [TaskKind::ASentiment, TaskKind::BOralWritten, TaskKind::CWordDepletion];
const ALL_MODES: [PromptMode; 2] = [PromptMode::WithConfidence, PromptMode::Type1Only];

fn template_file_name(task: TaskKind, mode: PromptMode) -> String {
    format!("{}.{}.txt", task.name(), mode.name())
}

/// Loaded prompt templates.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    task_templates: HashMap<(TaskKind, PromptMode), String>,
    risk_template: String,
}

impl TemplateRegistry {
    /// The templates compiled into the crate.
    pub fn builtin() -> TemplateRegistry {
        let mut task_templates = HashMap::new();
        task_templates.insert(
            (TaskKind::ASentiment, PromptMode::WithConfidence),
            include_str!("../templates/a_sentiment.with_confidence.txt").to_string(),
        );
        task_templates.insert(
            (TaskKind::ASentiment, PromptMode::Type1Only),
            include_str!("../templates/a_sentiment.type1_only.txt").to_string(),
        );
        task_templates.insert(
            (TaskKind::BOralWritten, PromptMode::WithConfidence),
            include_str!("../templates/b_oral_written.with_confidence.txt").to_string(),
        );
        task_templates.insert(
            (TaskKind::BOralWritten, PromptMode::Type1Only),
            include_str!("../templates/b_oral_written.type1_only.txt").to_string(),
        );
        task_templates.insert(
            (TaskKind::CWordDepletion, PromptMode::WithConfidence),
            include_str!("../templates/c_word_depletion.with_confidence.txt").to_string(),
        );
        task_templates.insert(
            (TaskKind::CWordDepletion, PromptMode::Type1Only),
            include_str!("../templates/c_word_depletion.type1_only.txt").to_string(),
        );
        TemplateRegistry {
            task_templates,
            risk_template: include_str!("../templates/risk.txt").to_string(),
        }
    }

    /// Load every template from a directory; all seven files must be
    /// present.
    pub fn from_dir(dir: &Path) -> Result<TemplateRegistry> {
        let mut task_templates = HashMap::new();
        for task in ALL_TASKS {
            for mode in ALL_MODES {
                let name = template_file_name(task, mode);
                let path = dir.join(&name);
                let text = std::fs::read_to_string(&path)
                    .map_err(|_| HarnessError::MissingTemplate(path.display().to_string()))?;
                task_templates.insert((task, mode), text);
            }
        }
        let risk_path = dir.join("risk.txt");
        let risk_template = std::fs::read_to_string(&risk_path)
            .map_err(|_| HarnessError::MissingTemplate(risk_path.display().to_string()))?;
        Ok(TemplateRegistry { task_templates, risk_template })
    }

    /// Render the prompt for one trial. Pure in its inputs: no trial
    /// history, no clock, no randomness.
    pub fn render_prompt(
        &self,
        task: TaskKind,
        risk: RiskConfig,
        mode: PromptMode,
        item_text: &str,
    ) -> Result<String> {
        let template = self
            .task_templates
            .get(&(task, mode))
            .ok_or_else(|| HarnessError::MissingTemplate(template_file_name(task, mode)))?;

        let rendered = match risk.target() {
            Option::None => template
                .replace("{{risk_paragraph}}\n", "")
                .replace("{{risk_paragraph}}", ""),
            Some(class) => {
                let paragraph = self
                    .risk_template
                    .replace("{{risk_digit}}", &class.binary_label().to_string())
                    .replace("{{risk_name}}", task.response_name(class));
                template.replace("{{risk_paragraph}}", paragraph.trim_end())
            }
        };
        Ok(rendered.replace("{{text}}", item_text))
    }
}
