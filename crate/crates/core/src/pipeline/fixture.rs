//! A small, fully offline corpus exercising every stage: three topics of
//! sixteen full-text papers each, plus records that drop out at screening,
//! lack a DOI, have no free copy or are paywalled at the publisher.

use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use super::config::RunConfig;
use super::stages::{run, RunOptions};
use super::PipelineError;

pub const PER_TOPIC: usize = 16;
pub const EXCLUDED: usize = 4;
pub const NO_DOI: usize = 2;
pub const CLOSED: usize = 2;
pub const PAYWALLED: usize = 3;
pub const YEARS: [i32; 9] = [2015, 2016, 2017, 2018, 2020, 2021, 2022, 2023, 2024];

struct Topic {
    name: &'static str,
    words: &'static [&'static str],
    subjects: &'static [&'static str],
}

const TOPICS: [Topic; 3] = [
    Topic {
        name: "construction materials",
        words: &[
            "concrete", "cement", "clinker", "aggregate", "masonry", "timber", "steel", "rebar", "facade",
            "insulation", "mortar", "brick", "formwork", "slab", "retrofit", "demolition",
        ],
        subjects: &["recycled concrete", "building envelope", "cement kiln", "timber frame"],
    },
    Topic {
        name: "renewable energy",
        words: &[
            "photovoltaic", "turbine", "battery", "inverter", "wafer", "silicon", "lithium", "grid", "hydrogen",
            "electrolyser", "blade", "wind", "solar", "storage", "module", "charging",
        ],
        subjects: &["solar panel", "wind farm", "battery pack", "hydrogen production"],
    },
    Topic {
        name: "agriculture",
        words: &[
            "crop", "wheat", "maize", "fertilizer", "irrigation", "livestock", "manure", "soil", "tillage",
            "harvest", "dairy", "pesticide", "yield", "orchard", "grazing", "compost",
        ],
        subjects: &["crop rotation", "dairy farm", "nitrogen fertilizer", "rice paddy"],
    },
];

const METHODS: [&str; 6] = [
    "artificial neural network",
    "random forest",
    "support vector machine",
    "gradient boosting",
    "deep learning",
    "decision tree",
];
const TASKS: [&str; 4] = ["predict", "optimize", "classify", "estimate"];
const STAGES: [&str; 4] = ["inventory", "impact assessment", "goal and scope", "sensitivity analysis"];
const METRICS: [&str; 4] = ["global warming potential", "energy consumption", "water use", "acidification"];
const NS: &str = r#"xmlns="http://www.elsevier.com/xml/svapi/article/dtd" xmlns:dc="http://purl.org/dc/elements/1.1/" xmlns:ce="http://www.elsevier.com/xml/common/dtd""#;
const LCIA: [&str; 3] = ["ReCiPe", "CML", "IPCC"];

struct Gen(ChaCha8Rng);

impl Gen {
    fn pick<'a>(&mut self, xs: &[&'a str]) -> &'a str {
        xs[(self.0.next_u64() % xs.len() as u64) as usize]
    }

    fn words(&mut self, t: &Topic, n: usize) -> String {
        (0..n).map(|_| self.pick(t.words)).collect::<Vec<_>>().join(" ")
    }
}

struct Paper {
    id: String,
    title: String,
    abstract_text: String,
    body: String,
    year: i32,
    keywords: String,
}

fn paper(g: &mut Gen, i: usize, t: &Topic) -> Paper {
    let subject = g.pick(t.subjects);
    let method = METHODS[i % METHODS.len()];
    let task = TASKS[i % TASKS.len()];
    let stage = STAGES[(i / 3) % STAGES.len()];
    let metric = if i.is_multiple_of(3) { METRICS[(i / 3) % METRICS.len()] } else { METRICS[i % METHODS.len() % METRICS.len()] };
    let impacts = match i % 4 {
        3 => format!("Impacts were reported as {metric}."),
        _ => format!("Impacts were characterised with the {} method, reporting {metric}.", LCIA[i % LCIA.len()]),
    };
    let title = format!("Life cycle assessment of {subject} in {}", t.name);
    let abstract_text = format!(
        "This study applies {method} models to {task} the environmental impacts of {subject} systems. \
         We examine {} {} in {} {} and {}. Results on {} {} show the {metric} of {} {}.",
        t.name,
        g.words(t, 3),
        subject,
        g.words(t, 4),
        g.words(t, 3),
        subject,
        g.words(t, 3),
        subject,
        g.words(t, 2),
    );
    let body = format!(
        "Introduction. {abstract_text}\n\nMethods. The life cycle {stage} was compiled for {} {}. \
         {impacts} \
         A {method} was trained to {task} impacts from {} inputs.\n\n\
         Results. The surrogate reduced the {metric} estimate error by {}% across {} cases. \
         Discussion of {} {} follows.",
        subject,
        g.words(t, 5),
        g.words(t, 3),
        10 + i % 25,
        g.words(t, 2),
        t.name,
        g.words(t, 4),
    );
    let keywords = format!("{}; {}; life cycle assessment; {method}", t.name, subject);
    Paper { id: String::new(), title, abstract_text, body, year: 0, keywords }
}

fn write(path: &Path, body: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| PipelineError::io(path, e))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn config_json(mode: &str, provider: &str) -> String {
    format!(
        r#"{{
  "corpus": "metadata.csv",
  "decisions": "decisions.csv",
  "output_dir": "out",
  "cache_dir": "cache",
  "seed": 42,
  "harvest": {{
    "open_access": {{"base_url": "file://oa"}},
    "publisher": {{"base_url": "file://publisher", "auth_token": "fixture"}},
    "workers": 4
  }},
  "embedding": {{"provider": "hashing", "include_title": true}},
  "cluster": {{"min_cluster_size": 8}},
  "chat": {{"provider": "{provider}", "transcripts": "transcripts.json", "mode": "{mode}"}}
}}
"#
    )
}

/// Write the corpus inputs under `dir`, record chat transcripts with the
/// heuristic responder, and leave a replay-mode `config.json`. Returns the
/// config path.
pub fn write_mini_corpus(dir: &Path) -> Result<PathBuf, PipelineError> {
    let mut g = Gen(ChaCha8Rng::seed_from_u64(7));
    let mut papers = Vec::new();
    for i in 0..PER_TOPIC * TOPICS.len() {
        let mut p = paper(&mut g, i, &TOPICS[i % TOPICS.len()]);
        p.id = format!("m{:03}", papers.len() + 1);
        p.year = YEARS[(i * 4 + i / 3) % YEARS.len()];
        papers.push(p);
    }
    let full = papers.len();
    for k in 0..EXCLUDED + NO_DOI + CLOSED + PAYWALLED {
        let mut p = paper(&mut g, k, &TOPICS[k % TOPICS.len()]);
        p.id = format!("m{:03}", papers.len() + 1);
        p.year = YEARS[k % YEARS.len()];
        papers.push(p);
    }

    let mut meta = csv::Writer::from_writer(Vec::new());
    meta.write_record(["ID", "Title", "Abstract", "Year", "DOI", "Author Keywords", "Source title"])?;
    let mut decisions = csv::Writer::from_writer(Vec::new());
    decisions.write_record(["doc_id", "verdict", "reason"])?;
    for (i, p) in papers.iter().enumerate() {
        let extra = i.checked_sub(full);
        let doi = match extra {
            None if i % 2 == 0 => Some(format!("10.5281/mini.{i:03}")),
            None => Some(format!("10.1016/j.mini.{i:03}")),
            Some(k) if k < EXCLUDED => Some(format!("10.5281/mini.{i:03}")),
            Some(k) if k < EXCLUDED + NO_DOI => None,
            Some(k) if k < EXCLUDED + NO_DOI + CLOSED => Some(format!("10.5281/mini.{i:03}")),
            Some(_) => Some(format!("10.1016/j.mini.{i:03}")),
        };
        match (extra, &doi) {
            (None, Some(d)) if i % 2 == 0 => {
                write(&dir.join("oa/files").join(format!("{}.txt", p.id)), &p.body)?;
                write(
                    &dir.join("oa").join(d),
                    &format!(r#"{{"is_oa": true, "best_oa_location": {{"url_for_pdf": "file://files/{}.txt"}}}}"#, p.id),
                )?;
            }
            (None, Some(d)) => {
                let paras: String =
                    p.body.split("\n\n").map(|s| format!("<ce:para>{}</ce:para>", xml_escape(s))).collect();
                write(
                    &dir.join("publisher").join(d),
                    &format!(
                        "<full-text-retrieval-response {NS}><coredata><dc:title>{}</dc:title></coredata>\
                         <originalText><body>{paras}</body></originalText></full-text-retrieval-response>\n",
                        xml_escape(&p.title)
                    ),
                )?;
            }
            (Some(k), Some(d)) if k >= EXCLUDED + NO_DOI + CLOSED => {
                write(
                    &dir.join("publisher").join(d),
                    &format!(
                        "<full-text-retrieval-response {NS}><coredata><dc:description>{}</dc:description></coredata></full-text-retrieval-response>\n",
                        xml_escape(&p.abstract_text)
                    ),
                )?;
            }
            (Some(k), Some(d)) if k >= EXCLUDED => {
                write(&dir.join("oa").join(d), r#"{"is_oa": false, "best_oa_location": null}"#)?;
            }
            _ => {}
        }
        let year = p.year.to_string();
        meta.write_record([&p.id, &p.title, &p.abstract_text, &year, doi.as_deref().unwrap_or(""), &p.keywords, "Mini Journal"])?;
        match extra {
            Some(k) if k < EXCLUDED => decisions.write_record([p.id.as_str(), "exclude", "off_topic"])?,
            _ => decisions.write_record([p.id.as_str(), "include", ""])?,
        }
    }
    let flush = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| PipelineError::io("csv", e.into_error()));
    write(&dir.join("metadata.csv"), &String::from_utf8_lossy(&flush(meta)?))?;
    write(&dir.join("decisions.csv"), &String::from_utf8_lossy(&flush(decisions)?))?;

    let transcripts = dir.join("transcripts.json");
    if transcripts.exists() {
        std::fs::remove_file(&transcripts).map_err(|e| PipelineError::io(&transcripts, e))?;
    }
    let record = dir.join("record.json");
    write(&record, &config_json("record", "heuristic"))?;
    let mut cfg = RunConfig::load(&record)?;
    let scratch = dir.join("record-out");
    cfg.output_dir = scratch.clone();
    cfg.cache_dir = scratch.join("cache");
    let recorded = run(&cfg, &RunOptions::default());
    let _ = std::fs::remove_dir_all(&scratch);
    std::fs::remove_file(&record).map_err(|e| PipelineError::io(&record, e))?;
    recorded?;
    let config = dir.join("config.json");
    write(&config, &config_json("replay", "none"))?;
    Ok(config)
}
