use serde::{Deserialize, Serialize};

use super::prompts::{self, render};
use super::{parse_lines, ChatConfig, ChatMessage, ChatProvider, ExtractionRecord, LlmError};

pub const LABEL_NONE: &str = "None";
pub const LABEL_OTHER: &str = "Other";

/// Lowercase words separated by single spaces, padded with one space on
/// each side so that `" pattern "` matches whole words only.
fn canonical(text: &str) -> String {
    let words: Vec<String> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    format!(" {} ", words.join(" "))
}

/// A closed vocabulary with a deterministic synonym table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub labels: Vec<String>,
    /// `(pattern, label)`; patterns match whole words, case-insensitively.
    pub synonyms: Vec<(String, String)>,
}

impl LabelSet {
    fn new(labels: &[&str], synonyms: &[(&str, &str)]) -> Self {
        LabelSet {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            synonyms: synonyms.iter().map(|(p, l)| (p.to_string(), l.to_string())).collect(),
        }
    }

    /// The label whose pattern (or the label's own name) occurs earliest in
    /// `value`; at equal positions the longer pattern, then table order, wins.
    pub fn lookup(&self, value: &str) -> Option<&str> {
        let text = canonical(value);
        let own = self.labels.iter().map(|l| (l.as_str(), l.as_str()));
        let table = self.synonyms.iter().map(|(p, l)| (p.as_str(), l.as_str()));
        let mut best: Option<(usize, std::cmp::Reverse<usize>, &str)> = None;
        for (pattern, label) in table.chain(own) {
            let pat = canonical(pattern);
            if pat.trim().is_empty() {
                continue;
            }
            if let Some(pos) = text.find(&pat) {
                let cand = (pos, std::cmp::Reverse(pat.len()), label);
                if best.is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                    best = Some(cand);
                }
            }
        }
        best.map(|b| b.2)
    }

    /// Map a model answer onto the vocabulary (plus Other and, when
    /// `allow_none`, None) by exact canonical comparison.
    pub fn validate(&self, answer: &str, allow_none: bool) -> Option<String> {
        let a = canonical(answer.trim().trim_matches(|c| c == '"' || c == '\'' || c == '.'));
        let extra = [LABEL_OTHER].into_iter().chain(allow_none.then_some(LABEL_NONE));
        self.labels
            .iter()
            .map(String::as_str)
            .chain(extra)
            .find(|l| canonical(l) == a)
            .map(str::to_string)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.labels.iter().any(|l| l == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NormalizeConfig {
    pub ai: LabelSet,
    pub lca_stage: LabelSet,
    pub lcia: LabelSet,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        let ai = LabelSet::new(
            &["ANN", "SVM", "LLM", "Decision Trees", "Reinforcement Learning", "PCA", "Regression"],
            &[
                ("neural network", "ANN"),
                ("neural networks", "ANN"),
                ("neural net", "ANN"),
                ("anns", "ANN"),
                ("deep learning", "ANN"),
                ("deep neural", "ANN"),
                ("cnn", "ANN"),
                ("convolutional", "ANN"),
                ("lstm", "ANN"),
                ("rnn", "ANN"),
                ("recurrent", "ANN"),
                ("gru", "ANN"),
                ("mlp", "ANN"),
                ("perceptron", "ANN"),
                ("multilayer perceptron", "ANN"),
                ("autoencoder", "ANN"),
                ("bpnn", "ANN"),
                ("back propagation", "ANN"),
                ("backpropagation", "ANN"),
                ("support vector", "SVM"),
                ("svr", "SVM"),
                ("large language model", "LLM"),
                ("large language models", "LLM"),
                ("llms", "LLM"),
                ("language model", "LLM"),
                ("gpt", "LLM"),
                ("chatgpt", "LLM"),
                ("bert", "LLM"),
                ("decision tree", "Decision Trees"),
                ("random forest", "Decision Trees"),
                ("random forests", "Decision Trees"),
                ("xgboost", "Decision Trees"),
                ("gradient boosting", "Decision Trees"),
                ("gradient boosted", "Decision Trees"),
                ("gbdt", "Decision Trees"),
                ("gbm", "Decision Trees"),
                ("lightgbm", "Decision Trees"),
                ("catboost", "Decision Trees"),
                ("adaboost", "Decision Trees"),
                ("extra trees", "Decision Trees"),
                ("tree based", "Decision Trees"),
                ("reinforcement learning", "Reinforcement Learning"),
                ("q learning", "Reinforcement Learning"),
                ("deep q", "Reinforcement Learning"),
                ("policy gradient", "Reinforcement Learning"),
                ("principal component", "PCA"),
                ("principal components", "PCA"),
                ("regression", "Regression"),
                ("lasso", "Regression"),
                ("ridge", "Regression"),
            ],
        );
        let lca_stage = LabelSet::new(
            &["Goal & Scope Definition", "LCI", "LCIA", "Interpretation"],
            &[
                ("goal and scope", "Goal & Scope Definition"),
                ("goal scope", "Goal & Scope Definition"),
                ("scope definition", "Goal & Scope Definition"),
                ("functional unit", "Goal & Scope Definition"),
                ("system boundary", "Goal & Scope Definition"),
                ("system boundaries", "Goal & Scope Definition"),
                ("life cycle inventory", "LCI"),
                ("inventory", "LCI"),
                ("data collection", "LCI"),
                ("life cycle impact assessment", "LCIA"),
                ("impact assessment", "LCIA"),
                ("characterization", "LCIA"),
                ("characterisation", "LCIA"),
                ("midpoint", "LCIA"),
                ("endpoint", "LCIA"),
                ("interpretation", "Interpretation"),
                ("sensitivity analysis", "Interpretation"),
                ("uncertainty analysis", "Interpretation"),
                ("hotspot", "Interpretation"),
                ("decision support", "Interpretation"),
                ("decision making", "Interpretation"),
            ],
        );
        let lcia = LabelSet::new(
            &["TRACI", "ReCiPe", "CML", "IMPACT 2002+", "Eco-indicator 99", "ILCD", "EF", "IPCC GWP", "USEtox", "CED"],
            &[
                ("cml baseline", "CML"),
                ("cml ia", "CML"),
                ("impact 2002", "IMPACT 2002+"),
                ("eco indicator", "Eco-indicator 99"),
                ("ei99", "Eco-indicator 99"),
                ("environmental footprint", "EF"),
                ("pef", "EF"),
                ("ipcc", "IPCC GWP"),
                ("gwp", "IPCC GWP"),
                ("global warming potential", "IPCC GWP"),
                ("cumulative energy demand", "CED"),
            ],
        );
        NormalizeConfig { ai, lca_stage, lcia }
    }
}

impl NormalizeConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        for set in [&self.ai, &self.lca_stage, &self.lcia] {
            if let Some((p, l)) = set.synonyms.iter().find(|(_, l)| !set.contains(l)) {
                return Err(LlmError::InvalidConfig(format!("synonym {p:?} maps to unknown label {l:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRecord {
    pub doc_id: String,
    pub ai_label: String,
    pub lca_stage_label: String,
    pub lcia_label: String,
    pub model_calls: u32,
    /// A transport failure forced at least one label to Other.
    pub fallback: bool,
}

struct Resolver<'a> {
    provider: Option<&'a dyn ChatProvider>,
    chat: &'a ChatConfig,
    calls: u32,
    fallback: bool,
}

impl Resolver<'_> {
    fn resolve(&mut self, field: &str, value: Option<&str>, set: &LabelSet, allow_none: bool) -> Result<String, LlmError> {
        let Some(value) = value else {
            return Ok(LABEL_NONE.to_string());
        };
        if let Some(l) = set.lookup(value) {
            return Ok(l.to_string());
        }
        let Some(provider) = self.provider else {
            return Ok(LABEL_OTHER.to_string());
        };
        let mut choices: Vec<&str> = set.labels.iter().map(String::as_str).collect();
        choices.push(LABEL_OTHER);
        if allow_none {
            choices.push(LABEL_NONE);
        }
        let prompt = render(
            prompts::NORMALIZE_LABEL,
            &[("field", field), ("value", value), ("labels", &choices.join(", "))],
        );
        self.calls += 1;
        match provider.complete(self.chat, &[ChatMessage::user(prompt)]) {
            Ok(answer) => Ok(parse_lines(&answer, 1, None)
                .ok()
                .and_then(|v| set.validate(&v[0], allow_none))
                .unwrap_or_else(|| LABEL_OTHER.to_string())),
            Err(LlmError::Transport(e)) => {
                log::warn!("label model unreachable for {field:?}: {e}; using Other");
                self.fallback = true;
                Ok(LABEL_OTHER.to_string())
            }
            Err(e) => Err(e),
        }
    }
}

/// Synonym table first, then a closed-choice question to the chat model for
/// whatever the table cannot place. Absent values become None without a
/// model call; answers outside the vocabulary become Other.
pub fn normalize_labels(
    record: &ExtractionRecord,
    cfg: &NormalizeConfig,
    provider: Option<&dyn ChatProvider>,
    chat: &ChatConfig,
) -> Result<NormalizedRecord, LlmError> {
    let mut r = Resolver { provider, chat, calls: 0, fallback: false };
    let ai_label = r.resolve("AI/ML technology", record.ai_technology.as_deref(), &cfg.ai, false)?;
    let lca_stage_label = r.resolve("LCA stage", record.lca_stage.as_deref(), &cfg.lca_stage, true)?;
    let lcia_label = r.resolve("LCIA method", record.lcia_method.as_deref(), &cfg.lcia, true)?;
    Ok(NormalizedRecord {
        doc_id: record.doc_id.clone(),
        ai_label,
        lca_stage_label,
        lcia_label,
        model_calls: r.calls,
        fallback: r.fallback,
    })
}
