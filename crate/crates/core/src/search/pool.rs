use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;

use super::{EvaluationResult, Job, Scheduler, SearchBudget, SearchSpace, Task};
use crate::error::{Error, Result};
use crate::eval::{prequential_step, MetricKind, PrequentialMetric};
use crate::stream::Instance;

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Builds a fresh model and scores it prequentially on the first
/// `n_samples` of `window`. Errors and panics become failed results with
/// score 0.
pub fn evaluate_candidate<S: SearchSpace>(
    space: &S,
    genotype: &S::Genotype,
    seed: u64,
    window: &[Instance],
    n_samples: usize,
    task: &Task,
    kind: MetricKind,
) -> (f64, usize, Option<String>) {
    let n = n_samples.min(window.len());
    let run = || -> Result<f64> {
        if n == 0 {
            return Err(Error::EmptyWindow);
        }
        let mut model = space.build(genotype, task, seed)?;
        let mut metric = PrequentialMetric::new(kind);
        for inst in &window[..n] {
            prequential_step(&mut *model, &mut metric, inst)?;
        }
        let score = metric.value();
        if score.is_finite() {
            Ok(score)
        } else {
            Err(Error::Model(format!("non-finite score {score}")))
        }
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(score)) => (score, n, None),
        Ok(Err(e)) => (0.0, n, Some(e.to_string())),
        Err(payload) => (0.0, n, Some(format!("panicked: {}", panic_message(&*payload)))),
    }
}

struct Done<G> {
    job: Job<G>,
    score: f64,
    samples: usize,
    error: Option<String>,
    duration: Duration,
    finished: Instant,
}

fn run_job<S: SearchSpace>(
    space: &S,
    job: Job<S::Genotype>,
    window: &[Instance],
    task: &Task,
    kind: MetricKind,
) -> Done<S::Genotype> {
    let started = Instant::now();
    let (score, samples, error) =
        evaluate_candidate(space, &job.genotype, job.seed, window, job.n_samples, task, kind);
    Done {
        job,
        score,
        samples,
        error,
        duration: started.elapsed(),
        finished: Instant::now(),
    }
}

/// Runs evaluations until the budget is spent and returns them in
/// completion order.
pub(super) fn drive<S: SearchSpace>(
    space: &S,
    window: &[Instance],
    task: &Task,
    kind: MetricKind,
    budget: &SearchBudget,
    scheduler: &mut dyn Scheduler<S>,
    rng: &mut ChaCha8Rng,
) -> Vec<EvaluationResult<S::Genotype>> {
    let start = Instant::now();
    let deadline = budget.t_max.map(|t| start + t);
    let past_deadline = |now: Instant| deadline.is_some_and(|d| now >= d);
    let mut started = 0usize;
    let may_start = |started: usize| {
        budget.max_evaluations.is_none_or(|m| started < m) && !past_deadline(Instant::now())
    };
    let mut results = Vec::new();
    let mut record = |done: Done<S::Genotype>, scheduler: &mut dyn Scheduler<S>| {
        let result = EvaluationResult {
            genotype: done.job.genotype,
            seed: done.job.seed,
            score: done.score,
            samples_used: done.samples,
            rung: done.job.rung,
            duration: done.duration,
            finished_at: done.finished - start,
            order: results.len(),
            error: done.error,
        };
        scheduler.on_result(&result);
        results.push(result);
    };

    if budget.worker_count <= 1 {
        while may_start(started) {
            let job = scheduler.next_job(space, rng);
            started += 1;
            let done = run_job(space, job, window, task, kind);
            record(done, scheduler);
        }
        return results;
    }

    std::thread::scope(|scope| {
        let (job_tx, job_rx) = mpsc::channel::<Job<S::Genotype>>();
        let (done_tx, done_rx) = mpsc::channel::<Option<Done<S::Genotype>>>();
        let job_rx = Arc::new(Mutex::new(job_rx));
        for _ in 0..budget.worker_count {
            let job_rx = Arc::clone(&job_rx);
            let done_tx = done_tx.clone();
            scope.spawn(move || loop {
                let job = match job_rx.lock() {
                    Ok(rx) => rx.recv(),
                    Err(_) => return,
                };
                let Ok(job) = job else { return };
                // A job picked up after the deadline is dropped unstarted.
                let done = if past_deadline(Instant::now()) {
                    None
                } else {
                    Some(run_job(space, job, window, task, kind))
                };
                if done_tx.send(done).is_err() {
                    return;
                }
            });
        }
        drop(done_tx);
        let mut in_flight = 0usize;
        while in_flight < budget.worker_count && may_start(started) {
            if job_tx.send(scheduler.next_job(space, rng)).is_err() {
                break;
            }
            started += 1;
            in_flight += 1;
        }
        while in_flight > 0 {
            let Ok(done) = done_rx.recv() else { break };
            in_flight -= 1;
            if let Some(done) = done {
                record(done, scheduler);
            }
            if may_start(started) && job_tx.send(scheduler.next_job(space, rng)).is_ok() {
                started += 1;
                in_flight += 1;
            }
        }
        drop(job_tx);
    });
    results
}
