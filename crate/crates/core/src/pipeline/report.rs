use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::densclust::ClusterAssignment;
use crate::llmextract::{ClusterCard, NormalizeConfig, NormalizedRecord, LABEL_NONE, LABEL_OTHER};
use crate::manifold::Projection;

pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];
const NOISE_COLOR: &str = "#c8c8c8";
const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 640.0;
const PLOT: f64 = 600.0;
const MARGIN: f64 = 20.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        MARGIN + (v - lo) / (hi - lo) * PLOT
    } else {
        MARGIN + PLOT / 2.0
    }
}

/// Scatter of a 2-d projection: one circle per document colored by
/// cluster, noise in gray, and a legend of cluster titles.
pub fn emit_scatter(projection: &Projection, assignment: &ClusterAssignment, cards: &[ClusterCard]) -> Result<String, PipelineError> {
    let k = projection.n_components();
    if k != 2 {
        return Err(PipelineError::DimensionMismatch(k));
    }
    let n = projection.coords.len();
    if assignment.labels.len() != n {
        return Err(PipelineError::Misaligned(n, assignment.labels.len()));
    }
    let xs = span(projection.coords.iter().map(|c| c[0]));
    let ys = span(projection.coords.iter().map(|c| c[1]));
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, "<desc>projection seed {}; placement is illustrative</desc>", projection.config.seed);
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<g id="points">"#);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (assignment.labels[i] >= 0, i));
    for i in order {
        let c = &projection.coords[i];
        let label = assignment.labels[i];
        let color = if label < 0 { NOISE_COLOR } else { PALETTE[label as usize % PALETTE.len()] };
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}" data-doc="{}"/>"#,
            scale(c[0], xs),
            MARGIN + PLOT - (scale(c[1], ys) - MARGIN),
            escape(&projection.doc_ids[i])
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
    let titles: BTreeMap<usize, &str> = cards.iter().map(|c| (c.cluster_id, c.title.as_str())).collect();
    let mut entries: Vec<(String, &str)> = (0..assignment.n_clusters())
        .map(|c| {
            let t = titles.get(&c).map_or_else(|| format!("Cluster {c}"), |t| format!("{c}: {t}"));
            (t, PALETTE[c % PALETTE.len()])
        })
        .collect();
    if assignment.noise_count() > 0 {
        entries.push(("Noise".into(), NOISE_COLOR));
    }
    let x0 = MARGIN * 2.0 + PLOT;
    for (j, (text, color)) in entries.iter().enumerate() {
        let y = MARGIN + 18.0 * j as f64;
        let _ = writeln!(svg, r#"<rect class="legend-entry" x="{x0}" y="{y}" width="10" height="10" fill="{color}"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x0 + 16.0, y + 10.0, escape(text));
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// `label`, or Other when it is one of the `generic` labels.
pub fn group_generic<'a>(label: &'a str, generic: &[String]) -> &'a str {
    if generic.iter().any(|g| g.eq_ignore_ascii_case(label)) {
        LABEL_OTHER
    } else {
        label
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCount {
    pub dimension: String,
    pub year: i32,
    pub label: String,
    pub count: u64,
}

/// Label counts per publication year for the AI, LCA-stage and LCIA
/// dimensions. Every year between the first and last is present, with
/// zero counts where nothing was published; generic AI labels are counted
/// as Other.
pub fn ai_topics_by_year(records: &[(i32, &NormalizedRecord)], vocab: &NormalizeConfig, generic: &[String]) -> Vec<TopicCount> {
    let Some((first, last)) = records.iter().map(|r| r.0).fold(None, |acc: Option<(i32, i32)>, y| {
        Some(acc.map_or((y, y), |(lo, hi)| (lo.min(y), hi.max(y))))
    }) else {
        return Vec::new();
    };
    type Pick = fn(&NormalizedRecord) -> &str;
    let dims: [(&str, &crate::llmextract::LabelSet, Pick); 3] = [
        ("ai", &vocab.ai, |r| r.ai_label.as_str()),
        ("lca_stage", &vocab.lca_stage, |r| r.lca_stage_label.as_str()),
        ("lcia", &vocab.lcia, |r| r.lcia_label.as_str()),
    ];
    let mut out = Vec::new();
    for (dim, set, pick) in dims {
        let grouping: &[String] = if dim == "ai" { generic } else { &[] };
        let mut labels: Vec<String> = Vec::new();
        for l in set.labels.iter().map(String::as_str).chain([LABEL_OTHER, LABEL_NONE]) {
            let g = group_generic(l, grouping).to_string();
            if !labels.contains(&g) {
                labels.push(g);
            }
        }
        let mut counts: BTreeMap<(i32, String), u64> = BTreeMap::new();
        for (year, r) in records {
            let l = group_generic(pick(r), grouping).to_string();
            if !labels.contains(&l) {
                labels.push(l.clone());
            }
            *counts.entry((*year, l)).or_default() += 1;
        }
        for year in first..=last {
            for l in &labels {
                out.push(TopicCount {
                    dimension: dim.into(),
                    year,
                    label: l.clone(),
                    count: counts.get(&(year, l.clone())).copied().unwrap_or(0),
                });
            }
        }
    }
    out
}
