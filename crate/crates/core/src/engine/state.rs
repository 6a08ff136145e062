//! Serialized form of a suspended plan.
//!
//! The canonical document is JSON:
//!
//! ```json
//! {"digest": "<dataset sha-256>",
//!  "plan": {"type": "nested_loop", "pattern": ["?v0", "<p>", "?v1"], "mu": null, "offset": 0,
//!           "source": {"type": "scan", "pattern": ["?v1", "<q>", "?v3"], "offset": 224}}}
//! ```
//!
//! On the wire it travels as an unpadded base64url token.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::algebra::{SolutionMapping, TriplePattern};
use crate::optimizer::{PlanDescriptor, PlanNode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SavedNode {
    /// Left-most pattern; `offset` counts index entries already read.
    Scan { pattern: TriplePattern, offset: u64 },
    /// Join with a base pattern. `mu` holds the outer mapping being joined,
    /// absent when the iterator was stopped while pulling from its source;
    /// `offset` counts inner index entries consumed under it.
    ///
    /// Only the bindings the outer mapping adds to the source node's own
    /// outer mapping are stored; the rest are recovered from the source on
    /// load. A node therefore holds at most three bindings whatever its depth.
    NestedLoop { pattern: TriplePattern, mu: Option<SolutionMapping>, offset: u64, source: Box<SavedNode> },
}

impl SavedNode {
    fn fresh(node: &PlanNode) -> Self {
        match node {
            PlanNode::Leaf { pattern } => SavedNode::Scan { pattern: pattern.clone(), offset: 0 },
            PlanNode::NestedLoop { source, inner } => SavedNode::NestedLoop {
                pattern: inner.clone(),
                mu: None,
                offset: 0,
                source: Box::new(SavedNode::fresh(source)),
            },
        }
    }

    pub fn pattern(&self) -> &TriplePattern {
        match self {
            SavedNode::Scan { pattern, .. } | SavedNode::NestedLoop { pattern, .. } => pattern,
        }
    }

    pub fn offset(&self) -> u64 {
        match self {
            SavedNode::Scan { offset, .. } | SavedNode::NestedLoop { offset, .. } => *offset,
        }
    }

    /// Nodes from the left-most scan up to this node.
    pub fn chain(&self) -> Vec<&SavedNode> {
        let mut out = match self {
            SavedNode::Scan { .. } => Vec::new(),
            SavedNode::NestedLoop { source, .. } => source.chain(),
        };
        out.push(self);
        out
    }

    /// The plan shape this state was saved from.
    pub fn to_plan_node(&self) -> PlanNode {
        match self {
            SavedNode::Scan { pattern, .. } => PlanNode::Leaf { pattern: pattern.clone() },
            SavedNode::NestedLoop { pattern, source, .. } => {
                PlanNode::NestedLoop { source: Box::new(source.to_plan_node()), inner: pattern.clone() }
            }
        }
    }
}

/// A suspended plan bound to the dataset it ran against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedPlanState {
    pub digest: String,
    pub plan: SavedNode,
}

impl SavedPlanState {
    /// State of a plan that has not produced anything yet.
    pub fn fresh(digest: &str, plan: &PlanDescriptor) -> Self {
        Self { digest: digest.to_owned(), plan: SavedNode::fresh(&plan.root) }
    }

    pub fn plan_descriptor(&self) -> PlanDescriptor {
        PlanDescriptor { root: self.plan.to_plan_node() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("saved state serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EngineError> {
        serde_json::from_str(text).map_err(|e| EngineError::InvalidSavedState(format!("malformed state: {e}")))
    }

    pub fn to_token(&self) -> String {
        URL_SAFE_NO_PAD.encode(self.to_json())
    }

    pub fn from_token(token: &str) -> Result<Self, EngineError> {
        let bytes = URL_SAFE_NO_PAD
            .decode(token.trim())
            .map_err(|e| EngineError::InvalidSavedState(format!("token is not base64url: {e}")))?;
        let text = String::from_utf8(bytes).map_err(|_| EngineError::InvalidSavedState("token is not UTF-8".into()))?;
        Self::from_json(&text)
    }
}
