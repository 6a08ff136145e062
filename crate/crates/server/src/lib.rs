//! Stateless HTTP front end: every request runs one quantum of one plan and
//! returns a page of results with a continuation token.

mod http;
pub mod pool;
pub mod protocol;
pub mod service;

use std::io;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::sync::Arc;
use std::time::Duration;

use bgp_core::{Dataset, Quantum};
use tokio::runtime::Runtime;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use pool::WorkerPool;
pub use protocol::{ErrorBody, Health, PageOfResults, PageStats, QueryRequest};
pub use service::{QueryService, ServiceError};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub quantum: Quantum,
    pub workers: usize,
    pub queue_capacity: usize,
    pub max_page_results: Option<usize>,
    pub host: IpAddr,
    /// 0 picks a free port.
    pub port: u16,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            quantum: Quantum::Finite(Duration::from_millis(75)),
            workers: 1,
            queue_capacity: 1024,
            max_page_results: None,
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 0,
        }
    }
}

/// A running server. Dropping the handle kills it.
pub struct ServerHandle {
    addr: SocketAddr,
    runtime: Option<Runtime>,
    serve: Option<JoinHandle<io::Result<()>>>,
    shutdown: Option<oneshot::Sender<()>>,
    pool: Option<WorkerPool>,
}

impl ServerHandle {
    pub fn start(config: &ServerConfig, dataset: Arc<Dataset>) -> io::Result<Self> {
        if config.workers == 0 || config.queue_capacity == 0 || config.max_page_results == Some(0) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                "workers, queue capacity and page size must be positive",
            ));
        }
        let health = Health { digest: dataset.digest().to_owned(), triple_count: dataset.triple_count() };
        let service = QueryService::new(dataset, config.quantum, config.max_page_results);
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build()?;
        let listener = runtime.block_on(bind((config.host, config.port).into()))?;
        let addr = listener.local_addr()?;

        let pool = WorkerPool::start(service, config.workers, config.queue_capacity);
        let app = http::router(Arc::new(http::AppState { submitter: pool.submitter(), health }));
        let (shutdown, signal) = oneshot::channel::<()>();
        let serve = runtime.spawn(async move {
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = signal.await;
                })
                .await
        });
        log::info!("listening on {addr}");
        Ok(Self { addr, runtime: Some(runtime), serve: Some(serve), shutdown: Some(shutdown), pool: Some(pool) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) -> io::Result<()> {
        let serve = self.serve.take().expect("server running");
        let result = self.runtime.as_ref().expect("server running").block_on(serve);
        result.map_err(io::Error::other)?
    }

    /// Stops accepting connections, lets in-flight requests finish and joins
    /// the workers.
    pub fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let (Some(rt), Some(serve)) = (self.runtime.as_ref(), self.serve.take()) {
            let _ = rt.block_on(async { tokio::time::timeout(Duration::from_secs(5), serve).await });
        }
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_timeout(Duration::from_secs(1));
        }
        if let Some(pool) = self.pool.take() {
            pool.join();
        }
    }

    /// Drops every connection at once, as a crash would. Workers finish their
    /// current quantum in the background and their replies are discarded.
    pub fn kill(mut self) {
        self.abort();
    }

    fn abort(&mut self) {
        if let Some(rt) = self.runtime.take() {
            rt.shutdown_background();
        }
        self.pool.take();
    }
}

/// Binds `addr`, waiting briefly for a port released by a killed server.
async fn bind(addr: SocketAddr) -> io::Result<tokio::net::TcpListener> {
    let mut attempts = 0;
    loop {
        match tokio::net::TcpListener::bind(addr).await {
            Err(e) if e.kind() == io::ErrorKind::AddrInUse && addr.port() != 0 && attempts < 40 => {
                attempts += 1;
                tokio::time::sleep(Duration::from_millis(50)).await;
            }
            other => return other,
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.abort();
    }
}
