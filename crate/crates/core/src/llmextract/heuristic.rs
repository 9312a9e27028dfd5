use super::{ChatConfig, ChatMessage, ChatProvider, LlmError, NormalizeConfig};
use crate::termstats::{extract_phrases, PhraseOptions};

const AI_TERMS: &[&str] = &[
    "artificial neural network",
    "neural network",
    "deep learning",
    "convolutional neural network",
    "lstm",
    "support vector machine",
    "support vector regression",
    "random forest",
    "decision tree",
    "gradient boosting",
    "xgboost",
    "reinforcement learning",
    "principal component analysis",
    "linear regression",
    "regression",
    "large language model",
    "k-means",
    "genetic algorithm",
    "bayesian network",
    "machine learning",
];

const TASKS: &[(&str, &str)] = &[
    ("predict", "prediction"),
    ("forecast", "forecasting"),
    ("classif", "classification"),
    ("optimi", "optimization"),
    ("surrogate", "surrogate modelling"),
    ("cluster", "clustering"),
    ("estimat", "estimation"),
];

const FILLER: &[&str] = &[
    "applies", "apply", "applied", "using", "used", "study", "studies", "examine", "models", "model", "results",
    "show", "approach", "method", "methods", "paper", "papers",
];

const METRICS: &[&str] = &[
    "global warming potential",
    "carbon emissions",
    "ghg emissions",
    "co2 emissions",
    "energy consumption",
    "water use",
    "acidification",
    "eutrophication",
    "human health",
    "embodied carbon",
];

const STAGES: &[(&str, &str)] = &[
    ("goal and scope", "Goal and scope definition"),
    ("functional unit", "Goal and scope definition"),
    ("inventory", "Life cycle inventory (LCI)"),
    ("impact assessment", "Life cycle impact assessment (LCIA)"),
    ("characterization", "Life cycle impact assessment (LCIA)"),
    ("interpretation", "Interpretation"),
    ("sensitivity analysis", "Interpretation"),
];

/// Deterministic stand-in for a chat model. It recognizes the three shipped
/// prompt kinds and answers from simple keyword and phrase statistics of
/// the text embedded in the prompt, always in the requested format.
#[derive(Debug, Clone, Default)]
pub struct HeuristicResponder {
    normalize: NormalizeConfig,
}

fn after<'a>(prompt: &'a str, marker: &str) -> Option<&'a str> {
    prompt.find(marker).map(|i| &prompt[i + marker.len()..])
}

fn title_case(s: &str) -> String {
    s.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn earliest<'a>(lower: &str, terms: &[&'a str]) -> Option<&'a str> {
    terms
        .iter()
        .filter_map(|t| lower.find(t).map(|p| (p, std::cmp::Reverse(t.len()), *t)))
        .min()
        .map(|x| x.2)
}

fn top_phrases(texts: &[&str], k: usize) -> Vec<String> {
    let mut c = extract_phrases(texts, &PhraseOptions::default());
    c.retain(|p| !AI_TERMS.iter().any(|a| p.phrase.contains(a)) && !p.phrase.contains("learning"));
    c.sort_by(|a, b| b.doc_freq.cmp(&a.doc_freq).then(b.count.cmp(&a.count)).then_with(|| a.phrase.cmp(&b.phrase)));
    c.into_iter().take(k).map(|p| p.phrase).collect()
}

impl HeuristicResponder {
    pub fn new() -> Self {
        Self::default()
    }

    fn cluster_card(&self, body: &str) -> String {
        let abstracts: Vec<&str> = body.split("\n\n").map(str::trim).filter(|a| !a.is_empty()).collect();
        let mut phrases: Vec<String> = Vec::new();
        for cand in top_phrases(&abstracts, 20) {
            let overlaps = phrases.iter().any(|p| p.split(' ').any(|w| cand.split(' ').any(|c| c == w)));
            let filler = cand.split(' ').any(|w| FILLER.contains(&w));
            if !overlaps && !filler && phrases.len() < 3 {
                phrases.push(cand);
            }
        }
        let lower = body.to_lowercase();
        let ai = AI_TERMS
            .iter()
            .map(|t| (lower.matches(t).count(), *t))
            .filter(|(n, _)| *n > 0)
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(a.1)))
            .map_or("machine learning", |x| x.1);
        let p = |i: usize| phrases.get(i).cloned().unwrap_or_else(|| "emerging topics".into());
        format!(
            "Title: {} and {}\nDescription: Studies of {}, {} and {} in environmental assessment.\nAI: Papers apply {} to model {}.",
            title_case(&p(0)),
            title_case(&p(1)),
            p(0),
            p(1),
            p(2),
            ai,
            p(0)
        )
    }

    fn extraction(&self, excerpt: &str) -> String {
        let lower = excerpt.to_lowercase();
        let none = || "None".to_string();
        let mut stages: Vec<(usize, &str)> = STAGES
            .iter()
            .filter_map(|(k, label)| lower.find(k).map(|p| (p, *label)))
            .collect();
        stages.sort();
        let mut seen = Vec::new();
        for (_, l) in stages {
            if !seen.contains(&l) {
                seen.push(l);
            }
        }
        let stage = if seen.is_empty() { none() } else { seen.join(", ") };
        let lcia = self.normalize.lcia.lookup(excerpt).map_or_else(none, str::to_string);
        let area = top_phrases(&[excerpt], 1).pop().unwrap_or_else(none);
        let task = TASKS
            .iter()
            .filter_map(|(k, v)| lower.find(k).map(|p| (p, *v)))
            .min()
            .map_or_else(none, |x| x.1.to_string());
        let tech = earliest(&lower, AI_TERMS).map_or_else(none, str::to_string);
        let metrics: Vec<&str> = METRICS.iter().copied().filter(|m| lower.contains(m)).take(3).collect();
        let metrics = if metrics.is_empty() { none() } else { metrics.join(", ") };
        let benefit = excerpt
            .split(['.', '\n'])
            .map(str::trim)
            .find(|s| {
                let l = s.to_lowercase();
                l.contains("reduc") || l.contains("improv") || l.contains("accura")
            })
            .map_or_else(none, |s| crate::llmextract::prompts::truncate_at_whitespace(s, 160).to_string());
        format!(
            "LCA stage: {stage}\nLCIA method: {lcia}\nApplication area: {area}\nAI/ML task: {task}\nAI/ML technology: {tech}\nImpact metrics: {metrics}\nClaimed benefit: {benefit}"
        )
    }

    fn label_choice(&self, prompt: &str) -> String {
        let value = after(prompt, "Annotation: ").and_then(|s| s.lines().next()).unwrap_or("");
        let choices: Vec<&str> = after(prompt, "Choose exactly one label from this list: ")
            .and_then(|s| s.lines().next())
            .map(|s| s.trim_end_matches('.').split(", ").collect())
            .unwrap_or_default();
        let lower = value.to_lowercase();
        choices
            .iter()
            .find(|c| **c != "Other" && **c != "None" && lower.contains(&c.to_lowercase()))
            .map_or("Other", |c| *c)
            .to_string()
    }
}

impl ChatProvider for HeuristicResponder {
    fn complete(&self, _: &ChatConfig, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let prompt = messages.first().map_or("", |m| m.content.as_str());
        if let Some(body) = after(prompt, "PAPER EXCERPT:\n") {
            Ok(self.extraction(body))
        } else if let Some(body) = after(prompt, "ABSTRACTS:\n") {
            Ok(self.cluster_card(body))
        } else if prompt.contains("Choose exactly one label") {
            Ok(self.label_choice(prompt))
        } else {
            Err(LlmError::Protocol("unrecognized prompt".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{extract_fields, label_cluster, normalize_labels, ChatConfig};
    use super::*;

    #[test]
    fn answers_are_conformant() {
        let h = HeuristicResponder::new();
        let abstracts = [
            "Recycled aggregates lower carbon emissions of concrete; an artificial neural network predicts strength.",
            "Carbon emissions of recycled aggregates in road construction are estimated with random forest models.",
        ];
        let card = label_cluster(&h, 0, &abstracts, &ChatConfig::labeling()).unwrap();
        assert_eq!(card.retry_count, 0);
        assert!(card.title.contains("Carbon Emissions") || card.title.contains("Recycled Aggregates"), "{}", card.title);

        let text = "We build a life cycle inventory of cement plants and train a random forest to predict clinker \
                    energy consumption. Impact assessment uses ReCiPe. The model reduces data collection effort.";
        let r = extract_fields(&h, "d", text, &[], &ChatConfig::default()).unwrap();
        assert_eq!(r.ai_technology.as_deref(), Some("random forest"));
        assert_eq!(r.lcia_method.as_deref(), Some("ReCiPe"));
        assert_eq!(r.ai_task.as_deref(), Some("prediction"));
        assert!(r.claimed_benefit.unwrap().starts_with("The model reduces"));

        let plain = extract_fields(&h, "e", "A survey of wind farms.", &[], &ChatConfig::default()).unwrap();
        assert_eq!(plain.ai_technology, None);
        assert_eq!(plain.lca_stage, None);
    }

    #[test]
    fn closed_choice() {
        let h = HeuristicResponder::new();
        let rec = crate::llmextract::ExtractionRecord::from_values(
            "d",
            &["LCI".into(), "None".into(), "x".into(), "x".into(), "machine learning".into(), "x".into(), "x".into()],
            0,
        );
        let n = normalize_labels(&rec, &NormalizeConfig::default(), Some(&h), &ChatConfig::default()).unwrap();
        assert_eq!(n.ai_label, "Other");
        assert_eq!(n.model_calls, 1);
    }
}
