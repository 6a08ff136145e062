//! Seeded synthetic e-commerce/social graph with skewed degree and predicate
//! distributions, standing in for a WatDiv-style dataset at desk scale.

use std::io::{self, Write};

use bgp_core::Term;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const NS: &str = "http://bench.example/";
const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
const XSD_DECIMAL: &str = "http://www.w3.org/2001/XMLSchema#decimal";

/// Predicates in the generated graph.
pub const PREDICATES: &[&str] = &[
    "follows",
    "friendOf",
    "likes",
    "livesIn",
    "nationality",
    "age",
    "hasGenre",
    "tag",
    "title",
    "contentSize",
    "includes",
    "price",
    "eligibleRegion",
    "offers",
    "reviewFor",
    "reviewer",
    "rating",
    "locatedIn",
];

pub fn iri(local: &str) -> Term {
    Term::iri(format!("{NS}{local}")).expect("valid IRI")
}

pub fn predicate(name: &str) -> Term {
    iri(name)
}

/// Zipf-like sampler over `0..n`.
struct Skewed(WeightedIndex<f64>);

impl Skewed {
    fn new(n: usize, exponent: f64) -> Self {
        let weights: Vec<f64> = (0..n.max(1)).map(|i| 1.0 / ((i + 1) as f64).powf(exponent)).collect();
        Skewed(WeightedIndex::new(weights).expect("positive weights"))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        self.0.sample(rng)
    }
}

/// Entity counts derived from a target size.
#[derive(Debug, Clone, Copy)]
struct Scale {
    users: usize,
    products: usize,
    offers: usize,
    retailers: usize,
    reviews: usize,
    cities: usize,
    countries: usize,
    genres: usize,
    topics: usize,
}

impl Scale {
    fn for_triples(target: usize) -> Self {
        let users = (target / 22).max(10);
        Scale {
            users,
            products: (users / 2).max(5),
            offers: users,
            retailers: (users / 50).max(2),
            reviews: users / 2,
            cities: (users / 20).max(5),
            countries: 25,
            genres: 20,
            topics: 100,
        }
    }
}

/// Generates roughly `target` distinct triples, deterministically in `seed`.
pub fn generate(seed: u64, target: usize) -> Vec<[Term; 3]> {
    let scale = Scale::for_triples(target);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(target + target / 10);
    let p = |name: &str| predicate(name);
    let entity = |kind: &str, i: usize| iri(&format!("{kind}{i}"));
    let int = |v: u64| Term::typed_literal(&v.to_string(), XSD_INTEGER).expect("valid literal");

    let popular_user = Skewed::new(scale.users, 1.1);
    let popular_product = Skewed::new(scale.products, 1.0);
    let city = Skewed::new(scale.cities, 0.8);
    let country = Skewed::new(scale.countries, 1.2);
    let genre = Skewed::new(scale.genres, 1.0);
    let topic = Skewed::new(scale.topics, 0.9);
    let retailer = Skewed::new(scale.retailers, 1.0);

    for u in 0..scale.users {
        let me = entity("User", u);
        // every user follows someone, so paths of any length exist
        let follows = 1 + geometric(&mut rng, 0.25);
        for _ in 0..follows {
            let mut v = popular_user.sample(&mut rng);
            if v == u {
                v = (u + 1) % scale.users;
            }
            out.push([me.clone(), p("follows"), entity("User", v)]);
        }
        for _ in 0..rng.gen_range(1..=3) {
            out.push([me.clone(), p("friendOf"), entity("User", rng.gen_range(0..scale.users))]);
        }
        for _ in 0..1 + geometric(&mut rng, 0.4) {
            out.push([me.clone(), p("likes"), entity("Product", popular_product.sample(&mut rng))]);
        }
        out.push([me.clone(), p("livesIn"), entity("City", city.sample(&mut rng))]);
        out.push([me.clone(), p("nationality"), entity("Country", country.sample(&mut rng))]);
        out.push([me, p("age"), int(rng.gen_range(18..80))]);
    }
    for i in 0..scale.products {
        let me = entity("Product", i);
        for _ in 0..rng.gen_range(1..=2) {
            out.push([me.clone(), p("hasGenre"), entity("Genre", genre.sample(&mut rng))]);
        }
        for _ in 0..rng.gen_range(1..=3) {
            out.push([me.clone(), p("tag"), entity("Topic", topic.sample(&mut rng))]);
        }
        let title = Term::lang_literal(&format!("Product {i}"), "en").expect("valid literal");
        out.push([me.clone(), p("title"), title]);
        out.push([me, p("contentSize"), int(rng.gen_range(100..10_000))]);
    }
    for i in 0..scale.offers {
        let me = entity("Offer", i);
        out.push([me.clone(), p("includes"), entity("Product", popular_product.sample(&mut rng))]);
        let price = format!("{}.{:02}", rng.gen_range(1..500), rng.gen_range(0..100));
        out.push([me.clone(), p("price"), Term::typed_literal(&price, XSD_DECIMAL).expect("valid literal")]);
        for _ in 0..rng.gen_range(1..=3) {
            out.push([me.clone(), p("eligibleRegion"), entity("Country", country.sample(&mut rng))]);
        }
        out.push([entity("Retailer", retailer.sample(&mut rng)), p("offers"), me]);
    }
    for i in 0..scale.reviews {
        let me = entity("Review", i);
        out.push([me.clone(), p("reviewFor"), entity("Product", popular_product.sample(&mut rng))]);
        out.push([me.clone(), p("reviewer"), entity("User", popular_user.sample(&mut rng))]);
        out.push([me, p("rating"), int(rng.gen_range(1..=5))]);
    }
    for c in 0..scale.cities {
        out.push([entity("City", c), p("locatedIn"), entity("Country", country.sample(&mut rng))]);
    }
    out.sort();
    out.dedup();
    out
}

/// Number of failures before the first success, capped at 40.
fn geometric(rng: &mut ChaCha8Rng, p: f64) -> usize {
    let mut n = 0;
    while n < 40 && !rng.gen_bool(p) {
        n += 1;
    }
    n
}

pub fn write_ntriples(triples: &[[Term; 3]], mut out: impl Write) -> io::Result<()> {
    for [s, p, o] in triples {
        writeln!(out, "{s} {p} {o} .")?;
    }
    Ok(())
}
