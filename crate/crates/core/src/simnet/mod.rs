//! A deterministic in-process master/worker network.
//!
//! Workers only see their own data block and the messages the master
//! addressed to them. All traffic passes through [`Cluster::run_round`],
//! which charges every payload to the [`CommLedger`].
//!
//! A worker function has no handle on any other worker:
//!
//! ```compile_fail
//! use diskpca_core::simnet::{Cluster, WorkerView};
//! fn peek(view: &WorkerView<'_>, cluster: &Cluster) -> usize {
//!     cluster.workers[1 - view.id()].data.n_cols()
//! }
//! ```

mod ledger;
mod partition;
mod payload;

pub use ledger::{CommLedger, RoundRecord};
pub use partition::{partition_even, partition_powerlaw, powerlaw_sizes, Partition};
pub use payload::{Payload, PointBatch};

use rand_chacha::ChaCha8Rng;
use std::any::Any;
use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::ColumnMatrix;
use crate::rng::{lane_rng, MASTER};

type Message = Arc<dyn Any + Send + Sync>;

#[derive(Default)]
struct Inbox {
    messages: HashMap<String, Message>,
}

struct Worker {
    data: ColumnMatrix,
    indices: Vec<usize>,
    inbox: Inbox,
}

/// The part of the cluster visible to worker code.
pub struct WorkerView<'a> {
    id: usize,
    seed: u64,
    data: &'a ColumnMatrix,
    indices: &'a [usize],
    inbox: &'a Inbox,
}

impl<'a> WorkerView<'a> {
    pub fn id(&self) -> usize {
        self.id
    }

    /// The local block `A^i`.
    pub fn data(&self) -> &'a ColumnMatrix {
        self.data
    }

    /// Global column index of each local column.
    pub fn indices(&self) -> &'a [usize] {
        self.indices
    }

    /// The most recent message sent to this worker under `label`.
    pub fn recv<T: Any + Send + Sync>(&self, label: &str) -> Result<&'a T> {
        let missing = || Error::MissingMessage { label: label.to_string(), worker: self.id };
        let msg = self.inbox.messages.get(label).ok_or_else(missing)?;
        msg.downcast_ref::<T>().ok_or_else(missing)
    }

    /// This worker's random stream for `label`.
    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        lane_rng(self.seed, label, self.id as u64)
    }
}

/// The master's side of a round: outgoing messages and its own random lanes.
pub struct Master<'a> {
    seed: u64,
    round: &'a str,
    inboxes: Vec<&'a mut Inbox>,
    down: &'a mut [usize],
}

impl Master<'_> {
    pub fn n_workers(&self) -> usize {
        self.inboxes.len()
    }

    pub fn rng(&self, label: &str) -> ChaCha8Rng {
        lane_rng(self.seed, label, MASTER)
    }

    fn check<T: Payload>(&self, payload: &T) -> Result<()> {
        if payload.all_finite() {
            Ok(())
        } else {
            Err(Error::NonFinitePayload { round: self.round.to_string() })
        }
    }

    /// Sends the same payload to every worker; each link is charged in full.
    pub fn broadcast<T: Payload + Any + Send + Sync>(&mut self, label: &str, payload: T) -> Result<()> {
        self.check(&payload)?;
        let words = payload.word_count();
        let msg: Message = Arc::new(payload);
        for (inbox, down) in self.inboxes.iter_mut().zip(self.down.iter_mut()) {
            inbox.messages.insert(label.to_string(), Arc::clone(&msg));
            *down += words;
        }
        Ok(())
    }

    pub fn send_to<T: Payload + Any + Send + Sync>(&mut self, worker: usize, label: &str, payload: T) -> Result<()> {
        self.check(&payload)?;
        let s = self.inboxes.len();
        let inbox = self
            .inboxes
            .get_mut(worker)
            .ok_or_else(|| Error::InvalidArgument(format!("no worker {worker} among {s}")))?;
        self.down[worker] += payload.word_count();
        inbox.messages.insert(label.to_string(), Arc::new(payload));
        Ok(())
    }
}

pub struct Cluster {
    workers: Vec<Worker>,
    n_rows: usize,
    seed: u64,
    ledger: CommLedger,
    parallel: bool,
}

impl Cluster {
    /// Distributes the columns of `a` according to `partition`.
    pub fn new(a: &ColumnMatrix, partition: &Partition, seed: u64) -> Result<Self> {
        if partition.n() != a.n_cols() {
            return Err(Error::InvalidArgument(format!(
                "partition covers {} columns, data has {}",
                partition.n(),
                a.n_cols()
            )));
        }
        let blocks = partition
            .worker_indices()
            .into_iter()
            .map(|idx| (a.select_columns(&idx), idx))
            .collect();
        Self::from_blocks(blocks, seed)
    }

    /// Builds a cluster from per-worker blocks and their global indices.
    pub fn from_blocks(blocks: Vec<(ColumnMatrix, Vec<usize>)>, seed: u64) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Empty("cluster needs at least one worker"));
        }
        let n_rows = blocks[0].0.n_rows();
        let mut workers = Vec::with_capacity(blocks.len());
        for (data, indices) in blocks {
            if data.n_rows() != n_rows {
                return Err(Error::InvalidArgument("worker blocks differ in dimension".into()));
            }
            if data.n_cols() != indices.len() {
                return Err(Error::InvalidArgument("one global index per local column required".into()));
            }
            workers.push(Worker { data, indices, inbox: Inbox::default() });
        }
        Ok(Cluster { workers, n_rows, seed, ledger: CommLedger::default(), parallel: cfg!(feature = "parallel") })
    }

    pub fn s(&self) -> usize {
        self.workers.len()
    }

    pub fn n(&self) -> usize {
        self.workers.iter().map(|w| w.indices.len()).sum()
    }

    pub fn dim(&self) -> usize {
        self.n_rows
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn local_sizes(&self) -> Vec<usize> {
        self.workers.iter().map(|w| w.indices.len()).collect()
    }

    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    /// Returns the ledger accumulated so far and starts a fresh one.
    pub fn take_ledger(&mut self) -> CommLedger {
        std::mem::take(&mut self.ledger)
    }

    /// Drops all pending worker messages.
    pub fn clear_inboxes(&mut self) {
        for w in &mut self.workers {
            w.inbox.messages.clear();
        }
    }

    /// Runs worker functions sequentially even when the `parallel` feature is on.
    pub fn set_parallel(&mut self, parallel: bool) {
        self.parallel = parallel && cfg!(feature = "parallel");
    }

    /// Reassembles the global data matrix (columns in global index order).
    pub fn gather_global(&self) -> Result<ColumnMatrix> {
        let parts: Vec<&ColumnMatrix> = self.workers.iter().map(|w| &w.data).collect();
        let stacked = ColumnMatrix::hconcat(&parts)?;
        let order: Vec<usize> = self.workers.iter().flat_map(|w| w.indices.iter().copied()).collect();
        let mut pos = vec![usize::MAX; order.len()];
        for (p, &g) in order.iter().enumerate() {
            if g >= pos.len() || pos[g] != usize::MAX {
                return Err(Error::Invariant("global indices are not a permutation".into()));
            }
            pos[g] = p;
        }
        Ok(stacked.select_columns(&pos))
    }

    pub fn run_round_stateless<U, T>(
        &mut self,
        label: &str,
        worker_fn: impl Fn(&WorkerView<'_>) -> Result<U> + Sync,
        master_fn: impl FnOnce(&mut Master<'_>, Vec<U>) -> Result<T>,
    ) -> Result<T>
    where
        U: Payload + Send,
    {
        let mut states = vec![(); self.s()];
        self.run_round(label, &mut states, |v, _| worker_fn(v), master_fn)
    }

    /// One communication round: every worker runs `worker_fn` and its return
    /// value is sent to the master, then `master_fn` folds the messages in
    /// worker-id order and may send messages back down.
    pub fn run_round<S, U, T>(
        &mut self,
        label: &str,
        states: &mut [S],
        worker_fn: impl Fn(&WorkerView<'_>, &mut S) -> Result<U> + Sync,
        master_fn: impl FnOnce(&mut Master<'_>, Vec<U>) -> Result<T>,
    ) -> Result<T>
    where
        S: Send,
        U: Payload + Send,
    {
        let s = self.s();
        if states.len() != s {
            return Err(Error::InvalidArgument(format!("{} worker states for {s} workers", states.len())));
        }
        let seed = self.seed;
        let run_one = |id: usize, w: &Worker, state: &mut S| -> Result<U> {
            let view = WorkerView { id, seed, data: &w.data, indices: &w.indices, inbox: &w.inbox };
            match catch_unwind(AssertUnwindSafe(|| worker_fn(&view, state))) {
                Ok(Ok(up)) if up.all_finite() => Ok(up),
                Ok(Ok(_)) => Err(Error::NonFinitePayload { round: label.to_string() }),
                Ok(Err(e)) => Err(Error::Round { round: label.to_string(), source: Box::new(e) }),
                Err(_) => Err(Error::WorkerPanic { round: label.to_string(), worker: id }),
            }
        };
        let results: Vec<Result<U>> = if self.parallel {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                self.workers
                    .par_iter()
                    .zip(states.par_iter_mut())
                    .enumerate()
                    .map(|(id, (w, st))| run_one(id, w, st))
                    .collect()
            }
            #[cfg(not(feature = "parallel"))]
            unreachable!("parallel execution requires the `parallel` feature")
        } else {
            self.workers.iter().zip(states.iter_mut()).enumerate().map(|(id, (w, st))| run_one(id, w, st)).collect()
        };
        let ups = results.into_iter().collect::<Result<Vec<U>>>()?;
        let up_words: Vec<usize> = ups.iter().map(Payload::word_count).collect();
        let mut down_words = vec![0; s];
        let out = {
            let mut master = Master {
                seed,
                round: label,
                inboxes: self.workers.iter_mut().map(|w| &mut w.inbox).collect(),
                down: &mut down_words,
            };
            master_fn(&mut master, ups).map_err(|e| match e {
                e @ (Error::Round { .. } | Error::NonFinitePayload { .. }) => e,
                e => Error::Round { round: label.to_string(), source: Box::new(e) },
            })?
        };
        let record = RoundRecord { label: label.to_string(), up_words, down_words };
        if record.total() > 0 {
            self.ledger.rounds.push(record);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Mat;

    fn cluster(s: usize) -> Cluster {
        let a = ColumnMatrix::from_dense(Mat::from_fn(3, 10, |i, j| (i * 10 + j) as f64));
        let p = partition_even(10, s, 1).unwrap();
        Cluster::new(&a, &p, 42).unwrap()
    }

    #[test]
    fn noop_round_leaves_ledger_unchanged() {
        let mut c = cluster(3);
        c.run_round_stateless("noop", |_| Ok(()), |_, _| Ok(())).unwrap();
        assert_eq!(c.ledger().total_words(), 0);
        assert!(c.ledger().rounds.is_empty());
    }

    #[test]
    fn one_scalar_per_worker() {
        let mut c = cluster(4);
        let sum = c
            .run_round_stateless("count", |v| Ok(v.data().n_cols() as f64), |_, ups| Ok(ups.iter().sum::<f64>()))
            .unwrap();
        assert_eq!(sum, 10.0);
        assert_eq!(c.ledger().round("count").unwrap().up_words, vec![1; 4]);
        assert_eq!(c.ledger().total_words(), 4);
    }

    #[test]
    fn broadcast_charges_every_link() {
        let mut c = cluster(3);
        c.run_round_stateless("z", |_| Ok(()), |m, _| m.broadcast("z", Mat::zeros(2, 2))).unwrap();
        assert_eq!(c.ledger().total_words(), 12);
        c.run_round_stateless("empty", |_| Ok(()), |m, _| m.broadcast("e", Vec::<f64>::new())).unwrap();
        assert_eq!(c.ledger().total_words(), 12);
        let shapes = c.run_round_stateless("read", |v| Ok(v.recv::<Mat>("z")?.len()), |_, ups| Ok(ups)).unwrap();
        assert_eq!(shapes, vec![4; 3]);
    }

    #[test]
    fn direct_messages_stay_private() {
        let mut c = cluster(2);
        c.run_round_stateless("a", |_| Ok(()), |m, _| m.send_to(0, "secret", 7.0)).unwrap();
        let seen = c
            .run_round_stateless("b", |v| Ok(v.recv::<f64>("secret").map(|x| *x).ok()), |_, ups| Ok(ups))
            .unwrap();
        assert_eq!(seen, vec![Some(7.0), None]);
        assert_eq!(c.ledger().round("b").unwrap().up_words, vec![1, 0]);
    }

    #[test]
    fn non_finite_payload_is_rejected() {
        let mut c = cluster(2);
        let err = c.run_round_stateless("bad", |_| Ok(f64::NAN), |_, _| Ok(())).unwrap_err();
        assert!(matches!(err, Error::NonFinitePayload { .. }));
        let err = c
            .run_round_stateless("bad-down", |_| Ok(()), |m, _| m.broadcast("x", vec![f64::INFINITY]))
            .unwrap_err();
        assert!(matches!(err, Error::NonFinitePayload { .. }));
    }

    #[test]
    fn panic_names_the_worker() {
        let mut c = cluster(3);
        let err = c
            .run_round_stateless(
                "boom",
                |v| {
                    if v.id() == 2 {
                        panic!("worker failure");
                    }
                    Ok(())
                },
                |_, _| Ok(()),
            )
            .unwrap_err();
        match err {
            Error::WorkerPanic { round, worker } => {
                assert_eq!(round, "boom");
                assert_eq!(worker, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gather_restores_global_order() {
        let a = ColumnMatrix::from_dense(Mat::from_fn(2, 9, |i, j| (i * 9 + j) as f64));
        let p = partition_powerlaw(9, 3, 2.0, 5).unwrap();
        let c = Cluster::new(&a, &p, 0).unwrap();
        assert_eq!(c.gather_global().unwrap(), a);
    }

    #[test]
    fn ledger_jsonl_round_trip() {
        let mut c = cluster(2);
        c.run_round_stateless("up", |v| Ok(vec![v.id() as f64; 3]), |m, _| m.broadcast("d", 1.0)).unwrap();
        let text = c.ledger().to_jsonl().unwrap();
        assert_eq!(text, "{\"label\":\"up\",\"up_words\":[3,3],\"down_words\":[1,1]}\n");
        assert_eq!(CommLedger::from_jsonl(&text).unwrap(), *c.ledger());
    }
}
