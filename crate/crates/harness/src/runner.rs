//! Experiment execution against a chat-completions endpoint.
//!
//! One request per trial, each its own conversation. Requests run under a
//! bounded work pool with an optional global rate cap; transport-level
//! failures retry with exponential backoff, while protocol-invalid replies
//! are recorded and never re-asked (a re-ask would contaminate the
//! single-turn design). A single writer task owns the append-only JSONL
//! log, and a run can resume from whatever ids the log already holds.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use tokio::sync::{mpsc, Mutex, Semaphore};
use tokio::task::JoinSet;

use metacog_core::StimulusClass;

use crate::config::RunConfig;
use crate::depletion::make_depletion_corpus;
use crate::error::{HarnessError, Result};
use crate::prompt::TemplateRegistry;
use crate::protocol::{parse_response, InvalidReason, ParsedResponse};
use crate::task::{load_dataset, TaskKind};
use crate::trial::{
    append_record, create_log, now_unix_ms, persisted_ids, read_log, RunHeader, TrialRecord,
    TRIAL_SCHEMA,
};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub log_path: PathBuf,
    /// Records in the final log (all sessions).
    pub attempted: u64,
    pub valid: u64,
    pub invalid: u64,
    /// Records that already existed when this session started.
    pub resumed: u64,
    /// Trial ids that exhausted their transport retries this session; they
    /// are absent from the log and picked up by the next resume.
    pub transport_failures: Vec<u64>,
    pub by_reason: BTreeMap<String, u64>,
}

/// The items a run presents, in trial order.
pub fn prepare_items(config: &RunConfig) -> Result<Vec<(String, StimulusClass)>> {
    let spec = config.task.spec();
    match config.task.kind {
        TaskKind::ASentiment | TaskKind::BOralWritten => {
            Ok(load_dataset(&spec)?.into_iter().map(|i| (i.text, i.label)).collect())
        }
        TaskKind::CWordDepletion => {
            // source labels are irrelevant; the depletion construction
            // assigns the ground truth
            let texts: Vec<String> =
                load_dataset(&spec)?.into_iter().map(|i| i.text).collect();
            let corpus = make_depletion_corpus(
                &texts,
                &config.task.target_word,
                config.task.p_delete,
                config.seed,
            )?;
            Ok(corpus
                .into_iter()
                .map(|d| {
                    let label =
                        if d.deleted { StimulusClass::S2 } else { StimulusClass::S1 };
                    (d.presented_text, label)
                })
                .collect())
        }
    }
}

struct RateLimiter {
    next_slot: Mutex<tokio::time::Instant>,
    interval: Duration,
}

impl RateLimiter {
    fn new(rps: f64) -> RateLimiter {
        RateLimiter {
            next_slot: Mutex::new(tokio::time::Instant::now()),
            interval: Duration::from_secs_f64(1.0 / rps),
        }
    }

    async fn wait(&self) {
        let slot = {
            let mut next = self.next_slot.lock().await;
            let now = tokio::time::Instant::now();
            let slot = (*next).max(now);
            *next = slot + self.interval;
            slot
        };
        tokio::time::sleep_until(slot).await;
    }
}

enum AttemptError {
    /// Connection problems, timeouts, 429 and 5xx: worth retrying.
    Retryable,
    /// 401/403: abort the whole run.
    Auth(u16),
    /// Other non-success statuses: retrying cannot help.
    Permanent,
}

enum AttemptOutcome {
    /// Completion text extracted from the response.
    Content(String),
    /// HTTP 200 whose body did not carry a completion.
    Shapeless(String),
}

async fn send_once(
    client: &reqwest::Client,
    url: &str,
    api_key: Option<&str>,
    body: &serde_json::Value,
) -> std::result::Result<AttemptOutcome, AttemptError> {
    let mut request = client.post(url).json(body);
    if let Some(key) = api_key {
        request = request.bearer_auth(key);
    }
    let response = request.send().await.map_err(|_| AttemptError::Retryable)?;
    let status = response.status();
    if status.as_u16() == 401 || status.as_u16() == 403 {
        return Err(AttemptError::Auth(status.as_u16()));
    }
    if status.as_u16() == 429 || status.is_server_error() {
        return Err(AttemptError::Retryable);
    }
    if !status.is_success() {
        return Err(AttemptError::Permanent);
    }
    let text = response.text().await.map_err(|_| AttemptError::Retryable)?;
    let content = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| {
            v.get("choices")?
                .get(0)?
                .get("message")?
                .get("content")?
                .as_str()
                .map(str::to_string)
        });
    match content {
        Some(c) => Ok(AttemptOutcome::Content(c)),
        None => Ok(AttemptOutcome::Shapeless(text)),
    }
}

struct RunState {
    abort: AtomicBool,
    fatal: Mutex<Option<HarnessError>>,
    attempted: AtomicU64,
    invalid: AtomicU64,
}

impl RunState {
    async fn record_fatal(&self, err: HarnessError) {
        let mut slot = self.fatal.lock().await;
        if slot.is_none() {
            *slot = Some(err);
        }
        self.abort.store(true, Ordering::SeqCst);
    }
}

/// Run (or resume) the configured experiment; returns the validity summary
/// over the full log.
pub async fn run_experiment(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let registry = match &config.template_dir {
        Some(dir) => TemplateRegistry::from_dir(dir)?,
        None => TemplateRegistry::builtin(),
    };
    let registry = Arc::new(registry);

    let items = Arc::new(prepare_items(config)?);
    let n_trials = config.n_trials();
    if (items.len() as u64) < n_trials {
        return Err(HarnessError::NotEnoughItems {
            requested: n_trials,
            available: items.len() as u64,
        });
    }

    let log_path = config.out.clone().unwrap_or_else(|| PathBuf::from("trials.jsonl"));
    let header = RunHeader {
        schema: TRIAL_SCHEMA.to_string(),
        task: config.task.kind,
        risk: config.risk,
        mode: config.mode,
        model_id: config.model_id.clone(),
        endpoint_url: config.endpoint_url.clone(),
        n_trials,
        seed: config.seed,
        label_mapping: "dataset label 0 = S1, 1 = S2".to_string(),
        created_unix_ms: now_unix_ms(),
    };

    let (existing_ids, resumed) = if log_path.exists() {
        let (old_header, records) = read_log(&log_path)?;
        if !old_header.compatible_with(&header) {
            return Err(HarnessError::TrialLog {
                path: log_path.clone(),
                msg: "existing log belongs to a different run configuration".into(),
            });
        }
        let ids = persisted_ids(&records);
        (ids, records)
    } else {
        create_log(&log_path, &header)?;
        (Default::default(), Vec::new())
    };

    let state = Arc::new(RunState {
        abort: AtomicBool::new(false),
        fatal: Mutex::new(None),
        attempted: AtomicU64::new(resumed.len() as u64),
        invalid: AtomicU64::new(resumed.iter().filter(|r| !r.is_valid()).count() as u64),
    });

    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(config.request_timeout_s))
        .build()?;
    let url = format!("{}/chat/completions", config.endpoint_url.trim_end_matches('/'));
    let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
    let limiter = config.rate_limit_rps.map(|rps| Arc::new(RateLimiter::new(rps)));
    let semaphore = Arc::new(Semaphore::new(config.concurrency));

    // single-writer persistence
    let (tx, mut rx) = mpsc::channel::<TrialRecord>(256);
    let writer_path = log_path.clone();
    let writer_state = Arc::clone(&state);
    let writer = tokio::spawn(async move {
        while let Some(record) = rx.recv().await {
            if let Err(e) = append_record(&writer_path, &record) {
                writer_state.record_fatal(e).await;
                break;
            }
        }
    });

    let transport_failures = Arc::new(std::sync::Mutex::new(Vec::<u64>::new()));
    let mut tasks = JoinSet::new();

    for trial_id in 0..n_trials {
        if existing_ids.contains(&trial_id) {
            continue;
        }
        let registry = Arc::clone(&registry);
        let items = Arc::clone(&items);
        let state = Arc::clone(&state);
        let semaphore = Arc::clone(&semaphore);
        let limiter = limiter.clone();
        let client = client.clone();
        let url = url.clone();
        let api_key = api_key.clone();
        let tx = tx.clone();
        let failures = Arc::clone(&transport_failures);
        let config = config.clone();

        tasks.spawn(async move {
            let _permit = semaphore.acquire_owned().await.expect("semaphore open");
            if state.abort.load(Ordering::SeqCst) {
                return;
            }
            let (text, label) = items[trial_id as usize].clone();
            let prompt = match registry.render_prompt(config.task.kind, config.risk, config.mode, &text)
            {
                Ok(p) => p,
                Err(e) => {
                    state.record_fatal(e).await;
                    return;
                }
            };
            let mut body = serde_json::json!({
                "model": config.model_id,
                "messages": [{"role": "user", "content": prompt}],
            });
            for (k, v) in &config.params {
                body[k] = v.clone();
            }

            let mut attempt = 0u32;
            loop {
                if state.abort.load(Ordering::SeqCst) {
                    return;
                }
                if let Some(l) = &limiter {
                    l.wait().await;
                }
                let started = now_unix_ms();
                let t0 = std::time::Instant::now();
                match send_once(&client, &url, api_key.as_deref(), &body).await {
                    Ok(outcome) => {
                        let (raw, parsed) = match outcome {
                            AttemptOutcome::Content(raw) => {
                                let parsed = parse_response(&raw, config.mode);
                                (raw, parsed)
                            }
                            AttemptOutcome::Shapeless(raw) => {
                                (raw, ParsedResponse::Invalid(InvalidReason::EndpointShape))
                            }
                        };
                        let (decision, confidence, invalid_reason) = match parsed {
                            ParsedResponse::Valid { decision, confidence } => {
                                (Some(decision), confidence, None)
                            }
                            ParsedResponse::Invalid(reason) => (None, None, Some(reason)),
                        };
                        let record = TrialRecord {
                            trial_id,
                            task: config.task.kind,
                            risk: config.risk,
                            mode: config.mode,
                            input_text: text.clone(),
                            true_label: label,
                            raw_response: raw,
                            decision,
                            confidence,
                            invalid_reason,
                            model_id: config.model_id.clone(),
                            request_timestamp: started,
                            latency_ms: t0.elapsed().as_millis() as u64,
                            attempt_count: attempt + 1,
                        };
                        let attempted = state.attempted.fetch_add(1, Ordering::SeqCst) + 1;
                        let invalid = if record.is_valid() {
                            state.invalid.load(Ordering::SeqCst)
                        } else {
                            state.invalid.fetch_add(1, Ordering::SeqCst) + 1
                        };
                        if tx.send(record).await.is_err() {
                            return; // writer gone; fatal already recorded
                        }
                        if attempted >= 20 {
                            let rate = invalid as f64 / attempted as f64;
                            if rate > config.invalid_ceiling {
                                state
                                    .record_fatal(HarnessError::InvalidRateExceeded {
                                        rate,
                                        ceiling: config.invalid_ceiling,
                                        attempted,
                                    })
                                    .await;
                            }
                        }
                        return;
                    }
                    Err(AttemptError::Auth(status)) => {
                        state.record_fatal(HarnessError::CredentialsRejected(status)).await;
                        return;
                    }
                    Err(AttemptError::Permanent) => {
                        failures.lock().expect("mutex").push(trial_id);
                        return;
                    }
                    Err(AttemptError::Retryable) => {
                        if attempt >= config.retry.max {
                            failures.lock().expect("mutex").push(trial_id);
                            return;
                        }
                        let backoff = config.retry.backoff_ms.saturating_mul(1 << attempt.min(16));
                        tokio::time::sleep(Duration::from_millis(backoff)).await;
                        attempt += 1;
                    }
                }
            }
        });
    }
    drop(tx);

    while let Some(joined) = tasks.join_next().await {
        if let Err(e) = joined {
            state.record_fatal(HarnessError::Config(format!("worker panic: {e}"))).await;
        }
    }
    writer.await.ok();

    if let Some(fatal) = state.fatal.lock().await.take() {
        return Err(fatal);
    }

    // validity report over the whole log
    let (_, records) = read_log(&log_path)?;
    let mut by_reason: BTreeMap<String, u64> = BTreeMap::new();
    let mut valid = 0u64;
    for r in &records {
        if r.is_valid() {
            valid += 1;
        } else {
            let reason =
                r.invalid_reason.map(|x| x.code().to_string()).unwrap_or_else(|| "unrecorded".into());
            *by_reason.entry(reason).or_insert(0) += 1;
        }
    }
    let mut failures = Arc::try_unwrap(transport_failures)
        .map(|m| m.into_inner().expect("mutex"))
        .unwrap_or_default();
    failures.sort_unstable();

    Ok(RunSummary {
        log_path,
        attempted: records.len() as u64,
        valid,
        invalid: records.len() as u64 - valid,
        resumed: resumed.len() as u64,
        transport_failures: failures,
        by_reason,
    })
}
