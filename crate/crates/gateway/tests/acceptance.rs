//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are fixed in each check; the summary line repeats them.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use common::*;
use scholarlib::conformance::Conformance;
use scholarlib::connector::DlClient;
use scholarlib::mock_dl::MockDl;
use scholarlib::{ConnectorError, Db, GatewayConfig, SearchPage};
use scholarlib_core::rng::SplitMix64;
use scholarlib_core::{
    Annotation, AnnotationBody, DcRecord, DlStatus, RankWeights, SearchQuery, SocialSummary, Store, Timestamp,
    UserProfile,
};
use serde_json::{json, Value};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if $cond {
        } else {
            return Err(format!($($msg)*));
        }
    };
}

fn page_of(v: Value) -> Result<SearchPage, String> {
    serde_json::from_value(v).map_err(|e| format!("search page does not parse: {e}"))
}

async fn search_page(app: &axum::Router, q: &str) -> Result<SearchPage, String> {
    let (status, body) = get_json(app, &format!("/search?q={}", enc(q))).await;
    ensure!(status == StatusCode::OK, "search {q:?} returned {status}: {body}");
    page_of(body)
}

/// Reciprocal rank plus lambda times the weighted social score, written out
/// independently of the ranking module.
fn score_oracle(base_rank: u32, s: &SocialSummary, w: &RankWeights) -> f64 {
    let lg = |n: u64| ((1 + n) as f64).log2();
    let rating = s.avg_rating.map_or(0.0, |a| ((a - 3.0) / 2.0).max(0.0));
    let social = w.alpha * lg(s.forward_count) + w.beta * rating + w.gamma * lg(s.comment_count) + w.delta * lg(s.library_count);
    1.0 / f64::from(base_rank) + w.lambda * social
}

const SCORE_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------

async fn search_and_file() -> Outcome {
    let started = Instant::now();
    let (gw, _, _) = seeded(2012, GatewayConfig::default()).await;
    let app = app(&gw);
    let page = search_page(&app, "violence").await?;
    ensure!(!page.results.is_empty(), "no results for \"violence\"");
    let hit = page.results[0].clone();
    let (status, body) =
        post_json(&app, &format!("/items/{}/library", hit.item_id), json!({ "user": "u5", "folder": "men" })).await;
    ensure!(status == StatusCode::CREATED, "filing into \"men\" returned {status}: {body}");
    let again = search_page(&app, "violence").await?;
    let entry = again.results.iter().find(|r| r.item_id == hit.item_id).ok_or("filed item vanished from results")?;
    ensure!(entry.summary.library_count >= 1, "library_count is {}", entry.summary.library_count);
    ensure!(entry.summary.folders.iter().any(|f| f.folder == "men"), "folder \"men\" missing from summary");
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?} (limit 5 s)");
    Ok(format!(
        "{} results, library_count {} -> {}, {:.3} s (limit 5 s)",
        page.results.len(),
        hit.summary.library_count,
        entry.summary.library_count,
        elapsed.as_secs_f64()
    ))
}

async fn feedback_loop() -> Outcome {
    let weights = RankWeights::default();
    ensure!(weights.lambda == 0.25, "default lambda is {}", weights.lambda);

    // part 1: annotations show up exactly in the next search response
    let (gw, _, _) = seeded(77, GatewayConfig::default()).await;
    let app = app(&gw);
    let page = search_page(&app, "violence").await?;
    ensure!(page.results.len() >= 3, "need three results, got {}", page.results.len());
    let target = page.results[2].clone();
    let rater = (10..20)
        .map(|i| format!("u{i}"))
        .find(|u| {
            gw.annotations(&target.item_id).unwrap().iter().all(|a| {
                !(a.author == *u && matches!(a.body, AnnotationBody::Rating { .. }))
            })
        })
        .ok_or("no user without a rating")?;
    let item = &target.item_id;
    let (s1, _) = post_json(&app, &format!("/items/{item}/comments"), json!({ "user": rater, "text": "solid method" })).await;
    let (s2, _) = post_json(&app, &format!("/items/{item}/ratings"), json!({ "user": rater, "value": 5 })).await;
    ensure!(s1 == StatusCode::CREATED && s2 == StatusCode::CREATED, "annotation requests returned {s1} / {s2}");
    let after = search_page(&app, "violence").await?;
    let entry = after.results.iter().find(|r| &r.item_id == item).ok_or("annotated item missing")?;
    let (_, anns) = get_json(&app, &format!("/items/{item}/annotations")).await;
    let anns: Vec<Annotation> = serde_json::from_value(anns).map_err(|e| e.to_string())?;
    let expected = recount(&anns, item);
    ensure!(entry.summary == expected, "summary {:?} != recount {:?}", entry.summary, expected);
    ensure!(
        entry.summary.comment_count == target.summary.comment_count + 1
            && entry.summary.rating_count == target.summary.rating_count + 1,
        "counts did not move by exactly one"
    );
    for r in &after.results {
        let want = score_oracle(r.base_rank, &r.summary, &weights);
        ensure!((r.final_score - want).abs() <= SCORE_TOL, "final_score {} != oracle {want}", r.final_score);
    }

    // part 2: eight forwards lift an item over the forward-free item one rank ahead
    let (_, url) = mock_dl(vec![
        record("doc-a", "Violence in schools", &["Gewalt"]),
        record("doc-b", "Violence at work", &["Gewalt"]),
    ])
    .await;
    let gw = gateway(GatewayConfig::default());
    register(&gw, "dl", &url).await;
    let app = common::app(&gw);
    let before = search_page(&app, "violence").await?;
    let ids: Vec<_> = before.results.iter().map(|r| r.record.identifier.as_str()).collect();
    ensure!(ids == ["doc-a", "doc-b"], "unexpected base order {ids:?}");
    let (a, b) = (before.results[0].item_id.clone(), before.results[1].item_id.clone());
    post_json(&app, "/users", json!({ "user_id": "hub" })).await;
    for i in 0..8 {
        let friend = format!("f{i}");
        post_json(&app, "/users", json!({ "user_id": friend })).await;
        post_json(&app, "/contacts", json!({ "u": "hub", "v": friend })).await;
        let (s, body) = post_json(&app, &format!("/items/{b}/forwards"), json!({ "from": "hub", "to": friend })).await;
        ensure!(s == StatusCode::CREATED, "forward {i} returned {s}: {body}");
    }
    let lifted = search_page(&app, "violence").await?;
    let order: Vec<_> = lifted.results.iter().map(|r| r.item_id.clone()).collect();
    ensure!(order == [b.clone(), a.clone()], "8 forwards did not lift the second item");
    let fb = &lifted.results[0];
    ensure!(fb.summary.forward_count == 8, "forward_count {}", fb.summary.forward_count);
    let (want_b, want_a) = (score_oracle(2, &fb.summary, &weights), score_oracle(1, &lifted.results[1].summary, &weights));
    ensure!((fb.final_score - want_b).abs() <= SCORE_TOL, "lifted score {} != oracle {want_b}", fb.final_score);
    ensure!(want_b > want_a, "oracle disagrees: {want_b} <= {want_a}");
    Ok(format!(
        "summary equals recount; scores match oracle within {SCORE_TOL:e}; 8 forwards: {:.6} > {:.6}",
        fb.final_score, lifted.results[1].final_score
    ))
}

async fn connector_conformance() -> Outcome {
    let fixture = scholarlib::fixture::Fixture::generate(5);
    let (_, url) = mock_dl(fixture.corpus.clone()).await;
    let report = Conformance::new(&url).run("violence", "zzqxnomatch").await;
    ensure!(report.passed(), "mock fails conformance: {:?}", report.failures().collect::<Vec<_>>());

    let (seen, cap) = capturing_dl().await;
    let mut q = SearchQuery::new("Männer & Gewalt").with_limit(7);
    q.offset = 14;
    DlClient::default().search("cap", &cap, &q).await.map_err(|e| e.to_string())?;
    let got = seen.lock().unwrap().clone();
    ensure!(got == ["/search?q=M%C3%A4nner+%26+Gewalt&offset=14&limit=7"], "request line {got:?}");

    let client = DlClient::default();
    for query in ["violence", "youth violence", "migration germany", "health inequality berlin", "Gewalt"] {
        let want = ordering_oracle(&fixture.corpus, query);
        let mut got = Vec::new();
        let mut offset = 0;
        loop {
            let mut q = SearchQuery::new(query).with_limit(9);
            q.offset = offset;
            let p = client.search("m", &url, &q).await.map_err(|e| e.to_string())?;
            ensure!(p.total == want.len() as u64, "total {} != {} for {query:?}", p.total, want.len());
            if p.items.is_empty() {
                break;
            }
            got.extend(p.items.into_iter().map(|r| r.identifier));
            offset += 9;
        }
        ensure!(got == want, "ordering differs from scan oracle for {query:?}");
    }

    let broken = malformed_dl().await;
    let err = client.search("broken", &broken, &SearchQuery::new("violence")).await;
    ensure!(matches!(err, Err(ConnectorError::MalformedResponse(_))), "malformed dl gave {err:?}");
    let gw = gateway(GatewayConfig::default());
    register(&gw, "mock", &url).await;
    register(&gw, "broken", &broken).await;
    let r = send(&common::app(&gw), "GET", "/search?q=violence", None, None).await;
    ensure!(r.status == StatusCode::OK, "partial federation returned {}", r.status);
    let page = page_of(r.json())?;
    ensure!(!page.results.is_empty(), "healthy source not answered");
    ensure!(
        page.source_errors.len() == 1
            && page.source_errors[0].source == "broken"
            && page.source_errors[0].error == "malformed_response",
        "source_errors {:?}",
        page.source_errors
    );
    Ok(format!(
        "{} protocol checks, 5 ordering queries, malformed dl -> 200 with {} results + source_errors",
        report.checks.len(),
        page.results.len()
    ))
}

// ---- spread ---------------------------------------------------------------

/// Random store with up to `max_forwards` valid forwards over a mock graph.
fn random_forward_store(seed: u64, max_forwards: u64) -> Store {
    let mut rng = SplitMix64::new(seed);
    let mut s = Store::new();
    s.register_dl("dl", "http://127.0.0.1:9", DlStatus::Active, Timestamp(0)).unwrap();
    let n_users = 10 + rng.below(40) as u32;
    s.generate_mock_graph(n_users, 0.05 + rng.next_f64() * 0.25, seed).unwrap();
    let users: Vec<String> = s.users().filter(|u| !u.contacts.is_empty()).map(|u| u.user_id.clone()).collect();
    let items: Vec<String> = (0..1 + rng.below(8))
        .map(|i| s.intern_item(DcRecord::new(format!("d{i}"), format!("Doc {i}")), "dl").unwrap().item_id)
        .collect();
    if users.is_empty() {
        return s;
    }
    let target = 1 + rng.below(max_forwards);
    let mut forwards: HashMap<String, Vec<(String, String)>> = HashMap::new();
    for n in 0..target {
        let item = &items[rng.below(items.len() as u64) as usize];
        let known = forwards.entry(item.clone()).or_default();
        let (from, parent) = if !known.is_empty() && rng.chance(0.7) {
            let (id, recipient) = known[rng.below(known.len() as u64) as usize].clone();
            (recipient, Some(id))
        } else {
            (users[rng.below(users.len() as u64) as usize].clone(), None)
        };
        let contacts: Vec<String> = s.contacts(&from).unwrap().iter().cloned().collect();
        let to = contacts[rng.below(contacts.len() as u64) as usize].clone();
        let a = s.forward_item(&from, &to, item, parent.as_deref(), Timestamp(n as i64)).unwrap();
        known.push((a.annotation_id, to));
    }
    s
}

/// Breadth-first traversal from the roots over the raw forward annotations.
fn spread_oracle(anns: &[&Annotation]) -> (Vec<String>, Vec<(String, String)>, u64, u64) {
    let mut roots = Vec::new();
    let mut edges = Vec::new();
    let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut people = HashSet::new();
    for a in anns {
        let AnnotationBody::Forward { recipient, parent } = &a.body else { continue };
        people.insert(a.author.as_str());
        people.insert(recipient.as_str());
        match parent {
            None => roots.push(a.annotation_id.clone()),
            Some(p) => {
                edges.push((p.clone(), a.annotation_id.clone()));
                children.entry(p.as_str()).or_default().push(a.annotation_id.as_str());
            }
        }
    }
    let mut max_depth = 0;
    let mut frontier: Vec<&str> = roots.iter().map(String::as_str).collect();
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        max_depth = depth;
        frontier = frontier.iter().flat_map(|f| children.get(f).cloned().unwrap_or_default()).collect();
    }
    (roots, edges, people.len() as u64, max_depth)
}

fn spread_stores() -> Outcome {
    let mut forwards = 0;
    let mut deepest = 0;
    for seed in 0..50 {
        let s = random_forward_store(1000 + seed, 1000);
        let fw = s.annotations().filter(|a| matches!(a.body, AnnotationBody::Forward { .. })).count();
        ensure!(fw <= 1000, "store {seed} has {fw} forwards");
        forwards += fw;
        for item in s.items() {
            let anns: Vec<&Annotation> = s.annotations().filter(|a| a.item == item.item_id).collect();
            let (roots, edges, reach, max_depth) = spread_oracle(&anns);
            let t = s.trace_spread(&item.item_id).map_err(|e| e.to_string())?;
            ensure!(t.reach == reach, "seed {seed}: reach {} != oracle {reach}", t.reach);
            ensure!(t.max_depth == max_depth, "seed {seed}: max_depth {} != oracle {max_depth}", t.max_depth);
            ensure!(t.roots == roots && t.edges == edges, "seed {seed}: forest differs from oracle");
            deepest = deepest.max(max_depth);
        }
    }
    Ok(format!("50 stores, {forwards} forwards, deepest chain {deepest}, zero mismatches"))
}

// ---- federation merge -----------------------------------------------------

async fn merge_property() -> Outcome {
    let pool: Vec<(Arc<MockDl>, String)> = {
        let mut v = Vec::new();
        for _ in 0..5 {
            v.push(mock_dl(Vec::new()).await);
        }
        v
    };
    let client = DlClient::default();
    let words = ["violence", "youth", "school", "family", "migration"];
    let mut merged_total = 0;
    for set in 0..100u64 {
        let mut rng = SplitMix64::new(set * 7 + 1);
        let k = 2 + rng.below(4) as usize;
        let gw = gateway(GatewayConfig {
            weights: RankWeights { lambda: 0.0, ..Default::default() },
            ..Default::default()
        });
        gw.upsert_user(UserProfile::new("x")).map_err(|e| e.to_string())?;
        gw.upsert_user(UserProfile::new("y")).map_err(|e| e.to_string())?;
        gw.add_contact("x", "y").map_err(|e| e.to_string())?;
        for (i, (dl, url)) in pool.iter().take(k).enumerate() {
            let docs = (0..rng.below(16))
                .map(|d| {
                    let extra = words[rng.below(words.len() as u64) as usize];
                    record(&format!("s{i}-{d:02}"), &format!("violence {extra}"), &[])
                })
                .collect();
            dl.replace(docs);
            register(&gw, &format!("dl{i}"), url).await;
        }
        let query = SearchQuery::new(format!("violence {}", words[rng.below(5) as usize])).with_limit(20);
        let mut pages = Vec::new();
        for (i, (_, url)) in pool.iter().take(k).enumerate() {
            let p = client.search(&format!("dl{i}"), url, &query).await.map_err(|e| e.to_string())?;
            pages.push(p.items.into_iter().map(|r| (format!("dl{i}"), r.identifier)).collect::<Vec<_>>());
        }
        let mut expected = Vec::new();
        for round in 0..pages.iter().map(Vec::len).max().unwrap_or(0) {
            expected.extend(pages.iter().filter_map(|p| p.get(round).cloned()));
        }

        let first = gw.search(&query, None).await.map_err(|e| e.to_string())?;
        // social signals on random items must not matter when lambda is 0
        for r in &first.results {
            match rng.below(4) {
                0 => drop(gw.comment(&r.item_id, "x", "note")),
                1 => drop(gw.rate(&r.item_id, "y", 1 + rng.below(5) as i64)),
                2 => drop(gw.forward(&r.item_id, "x", "y", None)),
                _ => {}
            }
        }
        let page = gw.search(&query, None).await.map_err(|e| e.to_string())?;
        let got: Vec<(String, String)> =
            page.results.iter().map(|r| (r.source.clone(), r.record.identifier.clone())).collect();
        ensure!(got == expected, "set {set}: merge order differs from per-source interleaving");
        for (pos, r) in page.results.iter().enumerate() {
            ensure!(r.base_rank == pos as u32 + 1, "set {set}: rerank(lambda=0) moved rank {}", r.base_rank);
            ensure!(r.final_score == 1.0 / f64::from(r.base_rank), "set {set}: score not reciprocal rank");
        }
        for (i, p) in pages.iter().enumerate() {
            let sub: Vec<_> = got.iter().filter(|(s, _)| *s == format!("dl{i}")).cloned().collect();
            ensure!(&sub == p, "set {set}: source dl{i} order not preserved");
        }
        merged_total += got.len();
    }
    Ok(format!("100 sets over live libraries, {merged_total} merged hits, order and identity exact"))
}

// ---- recommendation and alerts ---------------------------------------------

fn recommend_oracle(corpus: &[DcRecord], term: &str, k: usize) -> Vec<(String, u64)> {
    let q = words(term);
    let own = term.trim().to_lowercase();
    let mut df: BTreeMap<String, u64> = BTreeMap::new();
    for r in corpus {
        let mut text = vec![r.title.clone()];
        text.extend(r.subjects.iter().cloned());
        text.extend(r.description.clone());
        let toks: BTreeSet<String> = text.iter().flat_map(|t| words(t)).collect();
        if q.is_disjoint(&toks) {
            continue;
        }
        let subjects: BTreeSet<&String> = r.subjects.iter().collect();
        for s in subjects {
            if s.trim().to_lowercase() != own {
                *df.entry(s.clone()).or_default() += 1;
            }
        }
    }
    let mut v: Vec<_> = df.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

async fn recommend_and_alerts() -> Outcome {
    let title_words = ["violence", "youth", "school", "family", "labour", "health", "media", "Gewalt", "city"];
    let subjects = ["Gewalt", "Jugend", "Schule", "Familie", "Arbeit", "Gesundheit", "Medien", "violence", "Stadt"];
    let mut compared = 0;
    for c in 0..100u64 {
        let mut rng = SplitMix64::new(5000 + c);
        let mut s = Store::new();
        s.register_dl("dl", "http://127.0.0.1:9", DlStatus::Active, Timestamp(0)).unwrap();
        let mut corpus = Vec::new();
        for d in 0..100 {
            let n = 1 + rng.below(4);
            let title: Vec<&str> = (0..n).map(|_| title_words[rng.below(9) as usize]).collect();
            let mut r = DcRecord::new(format!("c{c}-{d}"), title.join(" "));
            r.subjects = (0..rng.below(4)).map(|_| subjects[rng.below(9) as usize].to_string()).collect();
            if rng.chance(0.3) {
                r.description = Some(format!("about {}", title_words[rng.below(9) as usize]));
            }
            let item = s.intern_item(scholarlib_core::validate_record(r.into()).unwrap(), "dl").unwrap();
            corpus.push(item.record);
        }
        for _ in 0..5 {
            let term = match rng.below(3) {
                0 => title_words[rng.below(9) as usize].to_string(),
                1 => subjects[rng.below(9) as usize].to_string(),
                _ => format!("{} {}", title_words[rng.below(9) as usize], title_words[rng.below(9) as usize]),
            };
            let k = 1 + rng.below(10) as usize;
            let got: Vec<(String, u64)> =
                s.recommend_terms(&term, k).map_err(|e| e.to_string())?.into_iter().map(|t| (t.term, t.count)).collect();
            let want = recommend_oracle(&corpus, &term, k);
            ensure!(got == want, "corpus {c}, term {term:?}, k {k}: {got:?} != {want:?}");
            compared += 1;
        }
    }

    let (gw, _, _) = seeded(31, GatewayConfig::default()).await;
    let app = app(&gw);
    let (status, body) = post_json(&app, "/alerts", json!({ "user": "u0" })).await;
    ensure!(status == StatusCode::CREATED, "alert creation returned {status}: {body}");
    let (s1, first) = post_json(&app, "/alerts/run", json!({})).await;
    let (s2, second) = post_json(&app, "/alerts/run", json!({})).await;
    ensure!(s1 == StatusCode::OK && s2 == StatusCode::OK, "alert runs returned {s1} / {s2}");
    let n_first = first.as_array().map_or(0, Vec::len);
    ensure!(n_first > 0, "first run produced no notifications");
    ensure!(second == json!([]), "second run was not empty: {second}");
    Ok(format!("{compared} term queries on 100 corpora equal oracle; alert runs: {n_first} then 0"))
}

// ---- persistence -----------------------------------------------------------

struct Ops {
    rng: SplitMix64,
    items: Vec<String>,
    users: Vec<String>,
    next_user: usize,
}

impl Ops {
    fn pick<'a>(&mut self, v: &'a [String]) -> &'a String {
        &v[self.rng.below(v.len() as u64) as usize]
    }
}

/// One random request that is valid in the current state.
fn random_op(ops: &mut Ops, gw: &scholarlib::Gateway) -> (String, String, Option<Value>) {
    let folders = ["men", "thesis", "later", "teaching"];
    let vocab = ["violence", "youth", "migration", "family", "health", "labour market", "religion"];
    loop {
        let roll = ops.rng.below(100);
        let item = ops.pick(&ops.items.clone()).clone();
        let user = ops.pick(&ops.users.clone()).clone();
        let contacts: Vec<String> = gw.db().read(|s| s.contacts(&user).map(|c| c.iter().cloned().collect()).unwrap_or_default());
        return match roll {
            0..=4 => {
                let id = if ops.rng.chance(0.5) {
                    ops.next_user += 1;
                    let id = format!("n{}", ops.next_user);
                    ops.users.push(id.clone());
                    id
                } else {
                    user
                };
                let interest = vocab[ops.rng.below(vocab.len() as u64) as usize];
                ("POST".into(), "/users".into(), Some(json!({ "user_id": id, "interests": [interest] })))
            }
            5..=12 => {
                let other = ops.pick(&ops.users.clone()).clone();
                if other == user {
                    continue;
                }
                ("POST".into(), "/contacts".into(), Some(json!({ "u": user, "v": other })))
            }
            13..=32 => (
                "POST".into(),
                format!("/items/{item}/comments"),
                Some(json!({ "user": user, "text": format!("comment {}", ops.rng.next_u64() % 1000) })),
            ),
            33..=47 => (
                "POST".into(),
                format!("/items/{item}/ratings"),
                Some(json!({ "user": user, "value": 1 + ops.rng.below(5) })),
            ),
            48..=57 => {
                let folder = folders[ops.rng.below(4) as usize];
                ("POST".into(), format!("/items/{item}/library"), Some(json!({ "user": user, "folder": folder })))
            }
            58..=77 => {
                // continue an existing chain when one reaches a user with contacts
                let chains: Vec<(String, String)> = gw.db().read(|s| {
                    s.annotations_for(&item)
                        .filter_map(|a| match &a.body {
                            AnnotationBody::Forward { recipient, .. } => Some((a.annotation_id.clone(), recipient.clone())),
                            _ => None,
                        })
                        .collect()
                });
                let (from, parent) = match chains.get(ops.rng.below(chains.len().max(1) as u64) as usize) {
                    Some((id, r)) if ops.rng.chance(0.6) => (r.clone(), Some(id.clone())),
                    _ => (user, None),
                };
                let to: Vec<String> =
                    gw.db().read(|s| s.contacts(&from).map(|c| c.iter().cloned().collect()).unwrap_or_default());
                if to.is_empty() {
                    continue;
                }
                let to = ops.pick(&to).clone();
                ("POST".into(), format!("/items/{item}/forwards"), Some(json!({ "from": from, "to": to, "parent": parent })))
            }
            78..=82 => {
                if contacts.is_empty() {
                    continue;
                }
                let recipients = ops.rng.chance(0.5).then(|| vec![contacts[0].clone()]);
                ("POST".into(), "/posts".into(), Some(json!({ "user": user, "item": item, "message": "see", "recipients": recipients })))
            }
            83..=84 => {
                let term = vocab[ops.rng.below(vocab.len() as u64) as usize];
                ("POST".into(), "/alerts".into(), Some(json!({ "user": user, "terms": [term] })))
            }
            85..=92 => {
                let q = vocab[ops.rng.below(vocab.len() as u64) as usize];
                ("GET".into(), format!("/search?q={}&user={user}", enc(q)), None)
            }
            93..=95 => ("GET".into(), format!("/items/{item}/spread"), None),
            96..=97 => ("GET".into(), format!("/social/search?q={}", vocab[ops.rng.below(7) as usize].replace(' ', "+")), None),
            _ => ("GET".into(), format!("/users/{user}/library"), None),
        };
    }
}

async fn persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("store.db");
    let fixture = scholarlib::fixture::Fixture::generate(99);
    let (_, url) = mock_dl(fixture.corpus.clone()).await;
    let db = Arc::new(Db::open(&path).map_err(|e| e.to_string())?.with_compaction_threshold(4_000));
    let gw = gateway_on(db.clone(), GatewayConfig::default());
    register(&gw, "mock-dl", &url).await;
    db.write(|s| fixture.apply(s, "mock-dl", Timestamp(10_000))).map_err(|e| e.to_string())?;
    let app = common::app(&gw);
    for q in ["violence", "migration", "family", "health"] {
        search_page(&app, q).await?;
    }
    let mut ops = Ops {
        rng: SplitMix64::new(4242),
        items: db.read(|s| s.items().map(|i| i.item_id.clone()).collect()),
        users: db.read(|s| s.users().map(|u| u.user_id.clone()).collect()),
        next_user: 0,
    };
    const OPS: usize = 10_000;
    for n in 0..OPS {
        let (method, uri, body) = random_op(&mut ops, &gw);
        let r = send(&app, &method, &uri, body.as_ref().map(Value::to_string), None).await;
        ensure!(r.status.is_success(), "op {n} {method} {uri} returned {}: {}", r.status, r.text);
        if uri.starts_with("/search") {
            ops.items = db.read(|s| s.items().map(|i| i.item_id.clone()).collect());
        }
    }
    db.read(|s| s.check_integrity()).map_err(|e| format!("integrity after {OPS} ops: {e}"))?;
    let all: Vec<Annotation> = db.read(|s| s.annotations().cloned().collect());
    let n_items = db.read(|s| {
        for it in s.items() {
            if s.summary_for(&it.item_id).unwrap() != recount(&all, &it.item_id) {
                return Err(format!("summary of {} differs from recount", it.item_id));
            }
        }
        Ok(s.items().count())
    })?;

    let exported = send(&app, "GET", "/admin/export", None, None).await.text;
    drop((app, gw));
    drop(db);
    let reopened = Db::open(&path).map_err(|e| e.to_string())?.export();
    ensure!(reopened == exported, "store file replay differs from the live export");

    std::fs::remove_file(&path).map_err(|e| e.to_string())?;
    let fresh = Arc::new(Db::open(&path).map_err(|e| e.to_string())?);
    let gw = gateway_on(fresh.clone(), GatewayConfig::default());
    let app = common::app(&gw);
    let empty = send(&app, "GET", "/admin/export", None, None).await.text;
    ensure!(empty != exported, "wipe left data behind");
    let r = send(&app, "POST", "/admin/import", Some(exported.clone()), None).await;
    ensure!(r.status == StatusCode::OK, "import returned {}: {}", r.status, r.text);
    let again = send(&app, "GET", "/admin/export", None, None).await.text;
    ensure!(again == exported, "re-export differs from the original dump");
    fresh.read(|s| s.check_integrity()).map_err(|e| e.to_string())?;
    drop((app, gw, fresh));
    ensure!(Db::open(&path).map_err(|e| e.to_string())?.export() == exported, "imported store did not persist");
    Ok(format!(
        "{OPS} random operations, {} annotations on {n_items} items, integrity and recount hold; {} byte dump identical after wipe+import",
        all.len(),
        exported.len()
    ))
}

// ---------------------------------------------------------------------------

fn guarded(rt: &tokio::runtime::Runtime, f: impl std::future::Future<Output = Outcome>) -> Outcome {
    catch_unwind(AssertUnwindSafe(|| rt.block_on(f))).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().expect("runtime");
    let results: Vec<(&str, Outcome)> = vec![
        ("search-and-file scenario", guarded(&rt, search_and_file())),
        ("annotation feedback loop", guarded(&rt, feedback_loop())),
        ("connector conformance", guarded(&rt, connector_conformance())),
        ("spread oracle", guarded(&rt, async { spread_stores() })),
        ("federation merge property", guarded(&rt, merge_property())),
        ("term recommendation and alert idempotence", guarded(&rt, recommend_and_alerts())),
        ("persistence round trip", guarded(&rt, persistence())),
    ];
    let total = results.len();
    let mut failed = 0;
    for (i, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS [{}/{total}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}/{total}] {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{total} passed", total - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
