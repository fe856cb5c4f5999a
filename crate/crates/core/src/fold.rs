//! Whole-collection discovery: a left fold over a document stream, or a
//! parallel per-batch fold followed by a pairwise tree reduction.

use std::panic::{self, AssertUnwindSafe};
use std::thread;

use crate::config::DiscoveryConfig;
use crate::json::JsonValue;
use crate::schema::{MergeContext, SchemaError, SchemaNode};

/// Random-stream offset for the reduction phase, keeping it disjoint from
/// the per-batch streams.
const REDUCE_STREAM_BASE: u64 = 1 << 40;

/// Incremental discovery holding one accumulated schema.
pub struct StreamingFold {
    cfg: DiscoveryConfig,
    ctx: MergeContext,
    acc: SchemaNode,
    count: u64,
}

impl StreamingFold {
    pub fn new(cfg: &DiscoveryConfig) -> StreamingFold {
        Self::with_stream(cfg, 0)
    }

    fn with_stream(cfg: &DiscoveryConfig, stream: u64) -> StreamingFold {
        StreamingFold {
            cfg: cfg.clone(),
            ctx: MergeContext::with_stream(cfg.equivalence, cfg.seed, stream),
            acc: SchemaNode::Any,
            count: 0,
        }
    }

    pub fn push(&mut self, doc: &JsonValue) -> Result<(), SchemaError> {
        let node = SchemaNode::discover(doc, &self.cfg, &mut self.ctx)?;
        let acc = std::mem::replace(&mut self.acc, SchemaNode::Any);
        self.acc = acc.merge(node, &mut self.ctx)?;
        self.count += 1;
        Ok(())
    }

    /// Documents folded so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn schema(&self) -> &SchemaNode {
        &self.acc
    }

    pub fn finish(self) -> SchemaNode {
        self.acc
    }
}

/// Left-folds the documents in order.
pub fn fold_streaming<'a>(
    docs: impl IntoIterator<Item = &'a JsonValue>,
    cfg: &DiscoveryConfig,
) -> Result<SchemaNode, SchemaError> {
    let mut fold = StreamingFold::new(cfg);
    for doc in docs {
        fold.push(doc)?;
    }
    Ok(fold.finish())
}

/// Folds every batch on up to `workers` threads, then merges the batch
/// schemas pairwise, level by level.
///
/// Batch `i` draws randomness from stream `i + 1` of the configured seed and
/// each reduction step from its own stream, so the result depends only on
/// the batches and the seed, not on thread scheduling or `workers`.
pub fn fold_tree(batches: &[Vec<JsonValue>], cfg: &DiscoveryConfig, workers: usize) -> Result<SchemaNode, SchemaError> {
    let workers = workers.max(1);
    let leaves = run_parallel(batches.len(), workers, |i| {
        let mut fold = StreamingFold::with_stream(cfg, i as u64 + 1);
        for doc in &batches[i] {
            fold.push(doc)?;
        }
        Ok(fold.finish())
    })?;
    reduce_tree(leaves, cfg, workers)
}

/// Pairwise reduction of already-built schemas.
pub fn reduce_tree(mut level: Vec<SchemaNode>, cfg: &DiscoveryConfig, workers: usize) -> Result<SchemaNode, SchemaError> {
    let mut depth = 0u64;
    while level.len() > 1 {
        let mut pairs: Vec<(SchemaNode, Option<SchemaNode>)> = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            pairs.push((a, it.next()));
        }
        let slots: Vec<std::sync::Mutex<Option<(SchemaNode, Option<SchemaNode>)>>> =
            pairs.into_iter().map(|p| std::sync::Mutex::new(Some(p))).collect();
        let level_index = depth;
        level = run_parallel(slots.len(), workers, |j| {
            let (a, b) = slots[j].lock().expect("pair slot").take().expect("pair taken once");
            match b {
                None => Ok(a),
                Some(b) => {
                    let stream = REDUCE_STREAM_BASE + (level_index << 24) + j as u64;
                    let mut ctx = MergeContext::with_stream(cfg.equivalence, cfg.seed, stream);
                    Ok(a.merge(b, &mut ctx)?)
                }
            }
        })?;
        depth += 1;
    }
    Ok(level.pop().unwrap_or(SchemaNode::Any))
}

/// Runs `task(0..n)` on up to `workers` scoped threads, returning results in
/// index order. A panicking task becomes a single [`SchemaError::WorkerPanic`].
fn run_parallel<T, F>(n: usize, workers: usize, task: F) -> Result<Vec<T>, SchemaError>
where
    T: Send,
    F: Fn(usize) -> Result<T, SchemaError> + Sync,
{
    if n == 0 {
        return Ok(Vec::new());
    }
    let threads = workers.min(n);
    if threads == 1 {
        return (0..n).map(|i| guarded(&task, i)).collect();
    }
    let task = &task;
    let per_thread: Vec<Result<Vec<(usize, T)>, SchemaError>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                thread::Builder::new()
                    .stack_size(256 << 20)
                    .spawn_scoped(scope, move || {
                        (t..n).step_by(threads).map(|i| guarded(task, i).map(|r| (i, r))).collect()
                    })
                    .expect("spawn discovery worker")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| Err(SchemaError::WorkerPanic(panic_message(&*p)))))
            .collect()
    });
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for chunk in per_thread {
        for (i, r) in chunk? {
            slots[i] = Some(r);
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("every index computed")).collect())
}

fn guarded<T>(task: &(impl Fn(usize) -> Result<T, SchemaError> + Sync), i: usize) -> Result<T, SchemaError> {
    panic::catch_unwind(AssertUnwindSafe(|| task(i))).unwrap_or_else(|p| Err(SchemaError::WorkerPanic(panic_message(&*p))))
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "worker panicked".to_owned()
    }
}
