//! Star, path and snowflake BGPs instantiated from random walks over the data.
//!
//! Every query is built around a witness subgraph taken from the dataset, so
//! it has at least one answer. Constants are kept at some positions to vary
//! selectivity.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use bgp_core::{Bgp, Dataset, PatternTerm, Term, TermId, TriplePattern};
use bgp_oracle::Oracle;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Star,
    Path,
    Snowflake,
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shape::Star => "star",
            Shape::Path => "path",
            Shape::Snowflake => "snowflake",
        })
    }
}

/// Number of queries wanted per shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeMix {
    pub star: usize,
    pub path: usize,
    pub snowflake: usize,
}

impl ShapeMix {
    /// Splits `n` queries 2:2:1 between stars, paths and snowflakes.
    pub fn balanced(n: usize) -> Self {
        let snowflake = n / 5;
        let star = (n - snowflake).div_ceil(2);
        ShapeMix { star, path: n - snowflake - star, snowflake }
    }

    pub fn total(&self) -> usize {
        self.star + self.path + self.snowflake
    }

    fn shapes(&self) -> Vec<Shape> {
        let mut out = vec![Shape::Star; self.star];
        out.extend(vec![Shape::Path; self.path]);
        out.extend(vec![Shape::Snowflake; self.snowflake]);
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct WorkloadOptions {
    pub mix: ShapeMix,
    /// Queries with more answers are rejected.
    pub max_answers: usize,
    /// Oracle evaluations whose intermediate results exceed this are rejected.
    pub max_intermediate: usize,
    /// Candidates tried per query before it is skipped.
    pub attempts: usize,
}

impl WorkloadOptions {
    pub fn new(queries: usize) -> Self {
        Self { mix: ShapeMix::balanced(queries), max_answers: 20_000, max_intermediate: 200_000, attempts: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadQuery {
    pub id: String,
    pub shape: Shape,
    pub bgp: Bgp,
    /// Size of the answer bag according to the oracle.
    pub expected_answers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub shape: Shape,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workload {
    pub seed: u64,
    /// Digest of the dataset the queries and expected counts refer to.
    pub dataset_digest: String,
    pub queries: Vec<WorkloadQuery>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
}

impl Workload {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn bgps(&self) -> Vec<Bgp> {
        self.queries.iter().map(|q| q.bgp.clone()).collect()
    }

    pub fn shape_counts(&self) -> BTreeMap<Shape, usize> {
        let mut counts = BTreeMap::new();
        for q in &self.queries {
            *counts.entry(q.shape).or_default() += 1;
        }
        counts
    }

    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> anyhow::Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Out-edges of every subject, in index order.
struct Graph<'a> {
    dataset: &'a Dataset,
    subjects: Vec<TermId>,
    edges: HashMap<TermId, Vec<(TermId, TermId)>>,
}

impl<'a> Graph<'a> {
    fn new(dataset: &'a Dataset) -> Self {
        let mut edges: HashMap<TermId, Vec<(TermId, TermId)>> = HashMap::new();
        let mut subjects = Vec::new();
        for t in dataset.triples() {
            let out = edges.entry(t.subject).or_default();
            if out.is_empty() {
                subjects.push(t.subject);
            }
            out.push((t.predicate, t.object));
        }
        Self { dataset, subjects, edges }
    }

    fn out(&self, s: TermId) -> &[(TermId, TermId)] {
        self.edges.get(&s).map_or(&[], Vec::as_slice)
    }

    fn term(&self, id: TermId) -> PatternTerm {
        PatternTerm::Term(self.dataset.term(id).clone())
    }

    /// `k` out-edges of `s` with distinct predicates, if it has that many.
    fn distinct_edges(&self, rng: &mut ChaCha8Rng, s: TermId, k: usize) -> Option<Vec<(TermId, TermId)>> {
        let mut edges = self.out(s).to_vec();
        edges.shuffle(rng);
        let mut seen = HashSet::new();
        edges.retain(|(p, _)| seen.insert(*p));
        (edges.len() >= k).then(|| edges.into_iter().take(k).collect())
    }
}

struct Vars(usize);

impl Vars {
    fn fresh(&mut self) -> PatternTerm {
        self.0 += 1;
        PatternTerm::var(&format!("v{}", self.0 - 1))
    }
}

fn is_iri(g: &Graph, id: TermId) -> bool {
    g.dataset.term(id).is_iri()
}

fn star(g: &Graph, rng: &mut ChaCha8Rng) -> Option<Vec<TriplePattern>> {
    let k = rng.gen_range(2..=4);
    let center = *g.subjects.choose(rng)?;
    let edges = g.distinct_edges(rng, center, k)?;
    let mut vars = Vars(0);
    let c = vars.fresh();
    let mut patterns: Vec<TriplePattern> = edges
        .into_iter()
        .map(|(p, o)| {
            let object = if rng.gen_bool(0.7) { vars.fresh() } else { g.term(o) };
            TriplePattern::new(c.clone(), g.term(p), object)
        })
        .collect();
    // lead with a bound object when there is one, as a selective entry point
    patterns.sort_by_key(|tp| tp.object.as_variable().is_some());
    Some(patterns)
}

fn path(g: &Graph, rng: &mut ChaCha8Rng) -> Option<Vec<TriplePattern>> {
    let len = rng.gen_range(2..=4);
    let mut node = *g.subjects.choose(rng)?;
    let mut hops = Vec::new();
    for _ in 0..len {
        let next: Vec<&(TermId, TermId)> =
            g.out(node).iter().filter(|(_, o)| is_iri(g, *o) && !g.out(*o).is_empty()).collect();
        let &&(p, o) = next.choose(rng)?;
        hops.push((node, p, o));
        node = o;
    }
    let mut vars = Vars(0);
    let bind_end = rng.gen_bool(0.5);
    let mut subject = if !bind_end && rng.gen_bool(0.3) { g.term(hops[0].0) } else { vars.fresh() };
    let mut patterns = Vec::new();
    for (i, &(_, p, o)) in hops.iter().enumerate() {
        let object = if i + 1 == hops.len() && bind_end { g.term(o) } else { vars.fresh() };
        patterns.push(TriplePattern::new(subject, g.term(p), object.clone()));
        subject = object;
    }
    Some(patterns)
}

fn snowflake(g: &Graph, rng: &mut ChaCha8Rng) -> Option<Vec<TriplePattern>> {
    let first = *g.subjects.choose(rng)?;
    let bridges: Vec<&(TermId, TermId)> =
        g.out(first).iter().filter(|(_, o)| is_iri(g, *o) && g.out(*o).len() >= 2).collect();
    let &&(bridge_p, second) = bridges.choose(rng)?;
    let mut vars = Vars(0);
    let c1 = vars.fresh();
    let c2 = vars.fresh();
    let mut patterns = vec![TriplePattern::new(c1.clone(), g.term(bridge_p), c2.clone())];
    for (center, node, k) in [(&c1, first, rng.gen_range(1..=2)), (&c2, second, rng.gen_range(1..=2))] {
        let edges = g.distinct_edges(rng, node, k + 1)?;
        for (p, o) in edges.into_iter().filter(|&(p, o)| !(node == first && p == bridge_p && o == second)).take(k) {
            let object = if rng.gen_bool(0.6) { vars.fresh() } else { g.term(o) };
            patterns.push(TriplePattern::new(center.clone(), g.term(p), object));
        }
    }
    Some(patterns)
}

/// Generates a workload for `dataset`, deterministic in `seed`.
pub fn generate_workload(seed: u64, dataset: &Dataset, oracle: &Oracle, options: &WorkloadOptions) -> Workload {
    let g = Graph::new(dataset);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queries = Vec::new();
    let mut skipped = Vec::new();
    let mut seen: HashSet<Bgp> = HashSet::new();
    for shape in options.mix.shapes() {
        let mut found = None;
        for _ in 0..options.attempts {
            let candidate = match shape {
                Shape::Star => star(&g, &mut rng),
                Shape::Path => path(&g, &mut rng),
                Shape::Snowflake => snowflake(&g, &mut rng),
            };
            let Some(patterns) = candidate else { continue };
            let Ok(bgp) = Bgp::new(patterns) else { continue };
            if seen.contains(&bgp) {
                continue;
            }
            let Some(answers) = oracle.evaluate_bounded(&bgp, options.max_intermediate) else { continue };
            if answers.is_empty() || answers.len() > options.max_answers {
                continue;
            }
            found = Some((bgp, answers.len()));
            break;
        }
        match found {
            Some((bgp, expected_answers)) => {
                seen.insert(bgp.clone());
                let id = format!("{shape}-{}", queries.len());
                queries.push(WorkloadQuery { id, shape, bgp, expected_answers });
            }
            None => skipped.push(Skipped {
                shape,
                reason: format!("no {shape} instance within limits after {} attempts", options.attempts),
            }),
        }
    }
    Workload { seed, dataset_digest: dataset.digest().to_owned(), queries, skipped }
}

/// Every constant of a query, for tests that need to know a term exists.
pub fn constants(bgp: &Bgp) -> Vec<&Term> {
    bgp.patterns().iter().flat_map(|tp| tp.positions()).filter_map(PatternTerm::as_term).collect()
}
