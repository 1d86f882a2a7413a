//! In-memory optimize jobs run one at a time, in submission order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Sender};
use std::sync::{Arc, Mutex, RwLock};
use std::thread;
use std::time::{SystemTime, UNIX_EPOCH};

use acouforge_core::optimize::{optimize, OptimizationResult, SearchConfig, TargetSpec};
use acouforge_core::FilterDesign;
use serde::{Deserialize, Serialize};

use crate::store::{content_id, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: JobKind,
    pub state: JobState,
    pub progress: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<OptimizationResult>,
    /// Store id of the optimized design once done.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result_design_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub created_unix_ms: u64,
    pub updated_unix_ms: u64,
}

struct Task {
    id: String,
    design: FilterDesign,
    target: TargetSpec,
    config: SearchConfig,
}

type JobTable = Arc<RwLock<HashMap<String, Job>>>;

pub struct JobQueue {
    jobs: JobTable,
    tx: Mutex<Sender<Task>>,
    counter: AtomicU64,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn update(jobs: &JobTable, id: &str, f: impl FnOnce(&mut Job)) {
    if let Some(job) = jobs.write().unwrap_or_else(|e| e.into_inner()).get_mut(id) {
        f(job);
        job.updated_unix_ms = now_ms().max(job.updated_unix_ms);
    }
}

impl JobQueue {
    /// Starts the single worker thread. Finished designs go into `store`.
    pub fn start(store: Arc<Store>) -> Self {
        let jobs: JobTable = Arc::default();
        let (tx, rx) = mpsc::channel::<Task>();
        let table = Arc::clone(&jobs);
        thread::Builder::new()
            .name("optimize-worker".into())
            .spawn(move || {
                for task in rx {
                    run(&table, &store, task);
                }
            })
            .expect("spawn optimize worker");
        Self {
            jobs,
            tx: Mutex::new(tx),
            counter: AtomicU64::new(0),
        }
    }

    /// Queues an already validated request and returns the new job.
    pub fn submit(&self, design: FilterDesign, target: TargetSpec, config: SearchConfig) -> Job {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let created = now_ms();
        let id = content_id(&format!("job:{n}:{created}"));
        let job = Job {
            id: id.clone(),
            kind: JobKind::Optimize,
            state: JobState::Queued,
            progress: 0.0,
            result: None,
            result_design_id: None,
            error: None,
            created_unix_ms: created,
            updated_unix_ms: created,
        };
        self.jobs
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.clone(), job.clone());
        let sent = self
            .tx
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .send(Task {
                id: id.clone(),
                design,
                target,
                config,
            });
        if sent.is_err() {
            update(&self.jobs, &id, |j| {
                j.state = JobState::Failed;
                j.error = Some("optimize worker is not running".into());
            });
        }
        job
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
    }
}

fn run(jobs: &JobTable, store: &Store, task: Task) {
    update(jobs, &task.id, |j| j.state = JobState::Running);
    let mut progress = |p: f64| {
        update(jobs, &task.id, |j| {
            j.progress = j.progress.max(p.clamp(0.0, 1.0))
        })
    };
    let outcome = optimize(&task.design, &task.target, &task.config, &mut progress)
        .map_err(|e| e.to_string())
        .and_then(|r| {
            store
                .create_design(&r.design)
                .map(|s| (r, s.id))
                .map_err(|e| format!("{e:#}"))
        });
    update(jobs, &task.id, |j| match outcome {
        Ok((result, design_id)) => {
            j.state = JobState::Done;
            j.progress = 1.0;
            j.result = Some(result);
            j.result_design_id = Some(design_id);
        }
        Err(e) => {
            log::warn!("job {} failed: {e}", j.id);
            j.state = JobState::Failed;
            j.error = Some(e);
        }
    });
}
