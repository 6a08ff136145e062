use std::thread::JoinHandle;
use std::time::Instant;

use crossbeam_channel::{Sender, TrySendError};
use tokio::sync::oneshot;

use crate::protocol::{PageOfResults, QueryRequest};
use crate::service::{QueryService, ServiceError};

pub type Reply = Result<PageOfResults, ServiceError>;

struct Job {
    request: QueryRequest,
    enqueued: Instant,
    reply: oneshot::Sender<Reply>,
}

/// Fixed set of worker threads fed by one bounded FIFO queue. New and resumed
/// queries share the queue without priority; each job gets one quantum.
pub struct WorkerPool {
    queue: Sender<Job>,
    workers: Vec<JoinHandle<()>>,
}

/// Cloneable submission side of a [`WorkerPool`].
#[derive(Clone)]
pub struct Submitter {
    queue: Sender<Job>,
}

impl WorkerPool {
    pub fn start(service: QueryService, workers: usize, queue_capacity: usize) -> Self {
        assert!(workers >= 1, "at least one worker");
        assert!(queue_capacity >= 1, "queue capacity must be positive");
        let (queue, jobs) = crossbeam_channel::bounded::<Job>(queue_capacity);
        let workers = (0..workers)
            .map(|i| {
                let jobs = jobs.clone();
                let service = service.clone();
                std::thread::Builder::new()
                    .name(format!("worker-{i}"))
                    .spawn(move || {
                        for job in jobs {
                            // nobody is waiting for this one any more
                            if job.reply.is_closed() {
                                continue;
                            }
                            let waited = job.enqueued.elapsed();
                            let reply = service.execute(&job.request).map(|mut page| {
                                page.stats.queue_wait_ms = waited.as_secs_f64() * 1000.0;
                                page
                            });
                            // the client may have gone away
                            let _ = job.reply.send(reply);
                        }
                    })
                    .expect("spawn worker thread")
            })
            .collect();
        Self { queue, workers }
    }

    pub fn submitter(&self) -> Submitter {
        Submitter { queue: self.queue.clone() }
    }

    /// Closes the queue and waits for queued jobs to drain. Outstanding
    /// submitters must be dropped first.
    pub fn join(self) {
        drop(self.queue);
        for w in self.workers {
            let _ = w.join();
        }
    }
}

impl Submitter {
    pub fn submit(&self, request: QueryRequest) -> Result<oneshot::Receiver<Reply>, ServiceError> {
        let (reply, rx) = oneshot::channel();
        match self.queue.try_send(Job { request, enqueued: Instant::now(), reply }) {
            Ok(()) => Ok(rx),
            Err(TrySendError::Full(_)) => Err(ServiceError::Overloaded),
            Err(TrySendError::Disconnected(_)) => Err(ServiceError::Unavailable),
        }
    }
}
