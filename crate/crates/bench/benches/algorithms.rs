use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use litscape_bench::grouped_points;
use litscape_core::densclust::{cluster, ClusterConfig};
use litscape_core::embedding::{EmbeddingMatrix, EmbeddingProvider, HashingProvider};
use litscape_core::llmextract::parse_lines;
use litscape_core::manifold::{knn_graph, project, Metric, ProjectionConfig};
use litscape_core::termstats::{chi_square, tfidf_cluster_terms, tokenize};

fn bench_knn(c: &mut Criterion) {
    let mut g = c.benchmark_group("knn_graph");
    for n in [200, 800] {
        let pts = grouped_points(n, 32, 4);
        g.bench_with_input(BenchmarkId::from_parameter(n), &pts, |b, pts| {
            b.iter(|| knn_graph(black_box(pts), 10, Metric::Cosine).unwrap())
        });
    }
    g.finish();
}

fn bench_project(c: &mut Criterion) {
    let pts = grouped_points(300, 32, 4);
    let ids = (0..pts.len()).map(|i| format!("d{i}")).collect();
    let m = EmbeddingMatrix::new("bench", ids, pts).unwrap();
    let cfg = ProjectionConfig { n_epochs: 100, ..ProjectionConfig::default() };
    let mut g = c.benchmark_group("project");
    g.sample_size(10);
    g.bench_function("300x32_to_10", |b| b.iter(|| project(black_box(&m), &cfg).unwrap()));
    g.finish();
}

fn bench_cluster(c: &mut Criterion) {
    let mut g = c.benchmark_group("hdbscan");
    for n in [500, 2000] {
        let pts = grouped_points(n, 10, 8);
        let cfg = ClusterConfig { min_cluster_size: 15, ..ClusterConfig::default() };
        g.bench_with_input(BenchmarkId::from_parameter(n), &pts, |b, pts| {
            b.iter(|| cluster(black_box(pts), &cfg).unwrap())
        });
    }
    g.finish();
}

fn bench_chi_square(c: &mut Criterion) {
    let table: Vec<Vec<u64>> = (0..6).map(|i| (0..6).map(|j| 5 + (i * 7 + j * 3) % 11).collect()).collect();
    c.bench_function("chi_square_6x6", |b| b.iter(|| chi_square(black_box(&table)).unwrap()));
}

fn bench_tfidf(c: &mut Criterion) {
    let words = ["concrete", "battery", "crop", "neural", "network", "impact", "carbon", "soil", "solar", "steel"];
    let corpus: Vec<Vec<String>> = (0..500)
        .map(|i| {
            let text: Vec<&str> = (0..120).map(|j| words[(i * 31 + j * 17 + j * j) % words.len()]).collect();
            tokenize(&text.join(" "))
        })
        .collect();
    let members: Vec<usize> = (0..500).step_by(3).collect();
    c.bench_function("tfidf_cluster_terms", |b| {
        b.iter(|| tfidf_cluster_terms(black_box(&members), &corpus, 10).unwrap())
    });
}

fn bench_parse(c: &mut Criterion) {
    let response = "LCA stage: Life cycle inventory (LCI)\nLCIA method: ReCiPe\nApplication area: cement\n\
                    AI/ML task: prediction\nAI/ML technology: random forest\nImpact metrics: global warming potential\n\
                    Claimed benefit: None";
    c.bench_function("parse_lines", |b| b.iter(|| parse_lines(black_box(response), 7, None).unwrap()));
}

fn bench_embed(c: &mut Criterion) {
    let p = HashingProvider::new(384, 0);
    let texts: Vec<String> =
        (0..64).map(|i| format!("life cycle assessment of recycled concrete with neural network {i}")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    c.bench_function("hashing_embed_64", |b| b.iter(|| p.embed(black_box(&refs)).unwrap()));
}

criterion_group!(benches, bench_knn, bench_project, bench_cluster, bench_chi_square, bench_tfidf, bench_parse, bench_embed);
criterion_main!(benches);
