mod common;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use scholarlens::query::{aggregate, federate_search, seed_terms, SearchRequest};
use scholarlens::serialize::to_json;
use scholarlens::sources::FetchContext;

fn random_request(rng: &mut StdRng, ids: &[String]) -> SearchRequest {
    let mut q = common::QUERIES[rng.gen_range(0..common::QUERIES.len())].to_string();
    if rng.gen_bool(0.3) {
        q.push_str(", ");
        q.push_str(common::QUERIES[rng.gen_range(0..common::QUERIES.len())]);
    }
    let mut req = SearchRequest::new(q);
    req.depth = rng.gen_range(0..4);
    req.gamma = [0.25, 0.5, 0.7, 1.0][rng.gen_range(0..4)];
    req.limit = rng.gen_range(1..60);
    if rng.gen_bool(0.5) {
        req.sources = ids.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    }
    req
}

#[test]
fn output_ignores_source_and_completion_order() {
    let o = common::ontology();
    let reg = common::registry();
    let ids: Vec<String> = reg.ids().map(str::to_string).collect();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    for _ in 0..10 {
        let req = random_request(&mut rng, &ids);
        let expanded = o.expand_query(&seed_terms(&req.raw_query), req.depth, req.gamma).unwrap();
        let wanted = |id: &str| req.sources.is_empty() || req.sources.iter().any(|s| s == id);
        let outcomes: Vec<_> = common::outcomes(&reg, &req.raw_query)
            .into_iter()
            .filter(|(id, _)| wanted(id))
            .collect();
        let reference = to_json(&aggregate(&req, expanded.clone(), outcomes.clone()));
        assert_eq!(reference, to_json(&federate_search(&req, &o, &reg, &FetchContext::default()).unwrap()));

        for _ in 0..100 {
            let mut req2 = req.clone();
            req2.sources.shuffle(&mut rng);
            let mut shuffled = outcomes.clone();
            shuffled.shuffle(&mut rng);
            let got = to_json(&aggregate(&req2, expanded.clone(), shuffled));
            assert_eq!(got, reference, "{}", req.raw_query);
        }
    }
}

#[test]
fn threaded_runs_agree() {
    let o = common::ontology();
    let reg = common::registry();
    let mut req = SearchRequest::new("Reverse Engineering");
    let first = to_json(&federate_search(&req, &o, &reg, &FetchContext::default()).unwrap());
    req.sources = vec!["ieee_xplore".into(), "fixture_corpus".into(), "academic_graph".into()];
    for _ in 0..20 {
        req.sources.rotate_left(1);
        assert_eq!(to_json(&federate_search(&req, &o, &reg, &FetchContext::default()).unwrap()), first);
    }
}
