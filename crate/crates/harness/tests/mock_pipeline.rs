//! End-to-end runner tests against the in-process mock endpoint: round
//! trips, validity accounting, resumability, and the abort policies.

use std::path::PathBuf;
use std::sync::Arc;

use metacog_core::counts::{CountsData, StimulusClass};
use metacog_harness::{
    run_experiment, tally, read_log, HarnessError, RunConfig, TaskConfig, TaskKind,
};
use metacog_mockllm::{fixed_content, MockLlm, MockReply};

fn toy_dataset(dir: &std::path::Path, n: usize) -> PathBuf {
    let mut text = String::from("text\tlabel\n");
    for i in 0..n {
        text.push_str(&format!("probe item #{i}\t{}\n", i % 2));
    }
    let path = dir.join("items.tsv");
    std::fs::write(&path, text).unwrap();
    path
}

fn config(endpoint: String, dataset: PathBuf, out: PathBuf, n_trials: u64) -> RunConfig {
    let mut cfg = RunConfig::new(endpoint, "mock-model", TaskConfig::new(TaskKind::BOralWritten, dataset));
    cfg.n_trials = Some(n_trials);
    cfg.concurrency = 8;
    cfg.retry.max = 1;
    cfg.retry.backoff_ms = 10;
    cfg.out = Some(out);
    cfg
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn echo_endpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 100);
    let mock = MockLlm::start(fixed_content(r#"{"decision":1,"confidence":4}"#)).await;
    let cfg = config(mock.endpoint_url(), dataset, dir.path().join("t.jsonl"), 100);

    let summary = run_experiment(&cfg).await.unwrap();
    assert_eq!(summary.attempted, 100);
    assert_eq!(summary.valid, 100);
    assert_eq!(summary.invalid, 0);
    assert!(summary.transport_failures.is_empty());

    let (_, records) = read_log(&summary.log_path).unwrap();
    let tallied = tally(&records).unwrap();
    assert_eq!(tallied.valid, 100);
    match tallied.data {
        CountsData::Rated(counts) => {
            // everything answered S2 at confidence 4, split by true label
            assert_eq!(counts.get(StimulusClass::S1, StimulusClass::S2, 4), 50.0);
            assert_eq!(counts.get(StimulusClass::S2, StimulusClass::S2, 4), 50.0);
            assert_eq!(counts.n_total(), 100.0);
        }
        other => panic!("expected rated tally, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_replies_are_recorded_not_retried() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 100);
    // three scripted trials answer prose; the validity report must list them
    let mock = MockLlm::start(Arc::new(|prompt: &str, _| {
        for k in [3, 41, 77] {
            if prompt.contains(&format!("probe item #{k}\n")) || prompt.ends_with(&format!("probe item #{k}")) {
                return MockReply::Content("hmm, hard to say".to_string());
            }
        }
        MockReply::Content(r#"{"decision":0,"confidence":2}"#.to_string())
    }))
    .await;
    let mut cfg = config(mock.endpoint_url(), dataset, dir.path().join("t.jsonl"), 100);
    cfg.invalid_ceiling = 0.10; // above the scripted 3%

    let summary = run_experiment(&cfg).await.unwrap();
    assert_eq!(summary.attempted, 100);
    assert_eq!(summary.valid, 97);
    assert_eq!(summary.invalid, 3);
    assert_eq!(summary.by_reason["not_json"], 3);
    // exactly one request per item: no re-asks for invalid replies
    assert_eq!(mock.request_count(), 100);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn killed_run_resumes_to_full_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 100);
    let out = dir.path().join("t.jsonl");

    // session 1: the endpoint dies (500) for every trial index >= 50
    let mock = MockLlm::start(Arc::new(|_: &str, index| {
        if index >= 50 {
            MockReply::Status(500)
        } else {
            MockReply::Content(r#"{"decision":1,"confidence":3}"#.to_string())
        }
    }))
    .await;
    let mut cfg = config(mock.endpoint_url(), dataset.clone(), out.clone(), 100);
    cfg.concurrency = 1; // deterministic request order
    cfg.retry.max = 0;

    let summary = run_experiment(&cfg).await.unwrap();
    assert_eq!(summary.attempted, 50);
    assert_eq!(summary.transport_failures.len(), 50);
    drop(mock);

    // session 2: healthy endpoint, same config resumes the missing half
    let mock = MockLlm::start(fixed_content(r#"{"decision":1,"confidence":3}"#)).await;
    let mut cfg = config(mock.endpoint_url(), dataset, out.clone(), 100);
    cfg.concurrency = 1;
    cfg.retry.max = 0;
    cfg.endpoint_url = mock.endpoint_url();

    let summary = run_experiment(&cfg).await.unwrap();
    assert_eq!(summary.attempted, 100);
    assert_eq!(summary.resumed, 50);
    assert_eq!(mock.request_count(), 50, "resume must not repeat persisted trials");

    let (_, records) = read_log(&out).unwrap();
    let mut ids: Vec<u64> = records.iter().map(|r| r.trial_id).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), 100, "final file must hold every unique trial id");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn invalid_rate_ceiling_aborts_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 200);
    let mock = MockLlm::start(fixed_content("not json at all")).await;
    let mut cfg = config(mock.endpoint_url(), dataset, dir.path().join("t.jsonl"), 200);
    cfg.concurrency = 4;

    match run_experiment(&cfg).await {
        Err(HarnessError::InvalidRateExceeded { rate, ceiling, attempted }) => {
            assert!(rate > ceiling);
            assert!(attempted >= 20);
        }
        other => panic!("expected invalid-rate abort, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn rejected_credentials_abort_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 50);
    let mock = MockLlm::start(Arc::new(|_: &str, _| MockReply::Status(401))).await;
    let cfg = config(mock.endpoint_url(), dataset, dir.path().join("t.jsonl"), 50);

    match run_experiment(&cfg).await {
        Err(HarnessError::CredentialsRejected(401)) => {}
        other => panic!("expected credentials abort, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn trial_budget_must_fit_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 10);
    let mock = MockLlm::start(fixed_content(r#"{"decision":1,"confidence":3}"#)).await;
    let cfg = config(mock.endpoint_url(), dataset, dir.path().join("t.jsonl"), 100);
    match run_experiment(&cfg).await {
        Err(HarnessError::NotEnoughItems { requested: 100, available: 10 }) => {}
        other => panic!("expected budget error, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn shapeless_endpoint_payload_counts_as_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = toy_dataset(dir.path(), 30);
    let mock = MockLlm::start(Arc::new(|_: &str, _| MockReply::MalformedEnvelope)).await;
    let mut cfg = config(mock.endpoint_url(), dataset, dir.path().join("t.jsonl"), 30);
    cfg.invalid_ceiling = 1.0; // let it run to completion

    let summary = run_experiment(&cfg).await.unwrap();
    assert_eq!(summary.invalid, 30);
    assert_eq!(summary.by_reason["endpoint_shape"], 30);
}
