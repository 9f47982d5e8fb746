use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use space_core::export::{build_catalog, export_csv, ExportMode, ExportRequest};
use space_core::sessionlog::{ingest_bytes, read_session, write_archive, write_session, SessionLog};
use space_core::stats::{icc_two_way, spearman_rho, wilcoxon_signed_rank};
use space_core::studysim::{analysis_table, analyze_study, simulate_cohort, CohortConfig, StudyDataset};

fn cohort(n_per_cell: usize) -> CohortConfig {
    let mut config = CohortConfig::default();
    config.n_per_cell = n_per_cell;
    config.reliability_target = None;
    config.supervised = None;
    config
}

fn logs(dataset: &StudyDataset, n: usize) -> Vec<SessionLog> {
    dataset.logs().take(n).cloned().collect()
}

fn parse_and_export(c: &mut Criterion) {
    let dataset = simulate_cohort(&cohort(22)).unwrap();
    let sessions = logs(&dataset, 400);
    let one = write_session(&sessions[0]).unwrap();
    let zip = write_archive(sessions.iter().map(|l| (l.entry_name(), write_session(l).unwrap()))).unwrap();

    let mut g = c.benchmark_group("sessionlog");
    g.throughput(Throughput::Bytes(one.len() as u64));
    g.bench_function("read_session", |b| b.iter(|| read_session(black_box(&one)).unwrap()));
    g.finish();

    let mut g = c.benchmark_group("export_400_logs");
    g.sample_size(20);
    g.throughput(Throughput::Elements(400));
    g.bench_function("ingest_zip", |b| b.iter(|| ingest_bytes("batch.zip", black_box(&zip)).unwrap()));
    for mode in [ExportMode::QuickSummary, ExportMode::Detailed] {
        let catalog = build_catalog(&sessions, mode).unwrap();
        let request = ExportRequest::all(&catalog);
        g.bench_function(format!("csv_{mode}"), |b| b.iter(|| export_csv(black_box(&sessions), &request).unwrap()));
    }
    g.finish();
}

fn stats(c: &mut Criterion) {
    let dataset = simulate_cohort(&cohort(15)).unwrap();
    let table = analysis_table(&dataset).unwrap();
    let x: Vec<f64> = table.iter().map(|r| r.perspective_error_deg).collect();
    let y: Vec<f64> = table.iter().map(|r| r.movement_time_s).collect();
    let matrix: Vec<Vec<f64>> = x.chunks_exact(3).map(<[f64]>::to_vec).collect();

    let mut g = c.benchmark_group("stats");
    g.bench_function("spearman_rho", |b| b.iter(|| spearman_rho(black_box(&x), black_box(&y)).unwrap()));
    g.bench_function("wilcoxon_signed_rank", |b| b.iter(|| wilcoxon_signed_rank(black_box(&x), 60.0).unwrap()));
    g.bench_function("icc_two_way", |b| b.iter(|| icc_two_way(black_box(&matrix)).unwrap()));
    g.finish();

    let mut g = c.benchmark_group("study");
    g.sample_size(10);
    g.bench_function("analyze_unsupervised", |b| b.iter(|| analyze_study(black_box(&dataset))));
    g.bench_function("simulate_default_n15", |b| {
        b.iter_batched(|| cohort(15), |config| simulate_cohort(&config).unwrap(), BatchSize::SmallInput)
    });
    g.finish();
}

criterion_group!(benches, parse_and_export, stats);
criterion_main!(benches);
