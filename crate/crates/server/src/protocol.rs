//! JSON bodies exchanged on `POST /sparql`.

use bgp_core::{Bgp, SolutionMapping};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Either a new query or the continuation of a preempted one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryRequest {
    Query(Bgp),
    Next(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    bgp: Bgp,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query: Option<QueryBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    next: Option<String>,
}

impl Serialize for QueryRequest {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = match self {
            QueryRequest::Query(bgp) => RawRequest { query: Some(QueryBody { bgp: bgp.clone() }), next: None },
            QueryRequest::Next(token) => RawRequest { query: None, next: Some(token.clone()) },
        };
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QueryRequest {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawRequest::deserialize(d)? {
            RawRequest { query: Some(q), next: None } => Ok(QueryRequest::Query(q.bgp)),
            RawRequest { query: None, next: Some(t) } => Ok(QueryRequest::Next(t)),
            _ => Err(serde::de::Error::custom("expected exactly one of \"query\" and \"next\"")),
        }
    }
}

/// Server-side measurements for one quantum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PageStats {
    /// Time spent executing the plan.
    pub quantum_used_ms: f64,
    /// Time spent loading, stopping and saving the plan.
    pub preemption_overhead_ms: f64,
    pub load_ms: f64,
    pub save_ms: f64,
    /// Time the request waited for a worker.
    pub queue_wait_ms: f64,
    /// Unbound cardinality of each pattern, in pipeline order.
    pub cardinalities: Vec<usize>,
    /// Worker start and finish, in microseconds since server start.
    pub started_us: u64,
    pub finished_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageOfResults {
    pub bindings: Vec<SolutionMapping>,
    /// Absent exactly when the query is complete.
    pub next: Option<String>,
    pub stats: PageStats,
}

impl PageOfResults {
    pub fn is_last(&self) -> bool {
        self.next.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub digest: String,
    pub triple_count: usize,
}
