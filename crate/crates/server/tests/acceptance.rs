//! Acceptance suite: runs every criterion and prints one PASS/FAIL line each.
//! Built with `harness = false` so the lines always reach the output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use chrono::Duration as ChronoDuration;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sma_core::activity::{
    activity_to_value, parse_activity, serialize_activity, validate_activity,
};
use sma_core::adapters::{
    default_capabilities, map_native, BudgetConfig, FixtureAdapter, NativeItem, PlatformAdapter,
    QuotaLedger,
};
use sma_core::clock::ManualClock;
use sma_core::enrichment::{extract_entities, shannon_entropy, Enricher, EnrichmentResources};
use sma_core::fixtures::{
    default_corpus, fixture_path, synthetic_activities, CorpusGenerator, CORPUS_SPAN_SECS,
    CORPUS_START, DEFAULT_SEED, VOCABULARY,
};
use sma_core::gathering::{rank_collection, CrawlJobSpec, GatheringService, SearchRequest};
use sma_core::geo::TimeWindow;
use sma_core::quality::{methods, WeightProfile};
use sma_core::query::{evaluate_match, parse_query, to_dnf, PlatformCapabilities};
use sma_core::storage::{JobKind, JobRecord, Store};
use sma_core::{Activity, Platform};

const REFERENCE_DOC: &str = include_str!("../../../fixtures/golden/reference_activity.json");
const SHIPPED_FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures");

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- harness

fn service(
    corpora: Vec<(Platform, Vec<NativeItem>)>,
    caps: &BTreeMap<Platform, PlatformCapabilities>,
    budget: u64,
) -> (GatheringService, Arc<ManualClock>) {
    let clock = Arc::new(ManualClock::at_unix(CORPUS_START + 40 * 86_400));
    let budgets: BTreeMap<_, _> = Platform::ALL
        .iter()
        .map(|p| {
            (
                *p,
                BudgetConfig {
                    capacity: budget,
                    window_seconds: 900,
                },
            )
        })
        .collect();
    let adapters: Vec<Arc<dyn PlatformAdapter>> = corpora
        .into_iter()
        .map(|(p, items)| {
            let c = caps
                .get(&p)
                .cloned()
                .unwrap_or_else(|| default_capabilities(p));
            Arc::new(FixtureAdapter::new(p, c, items)) as Arc<dyn PlatformAdapter>
        })
        .collect();
    let svc = GatheringService::new(
        adapters,
        Arc::new(QuotaLedger::new(clock.clone(), &budgets)),
        Arc::new(Store::in_memory()),
        Arc::new(Enricher::new(EnrichmentResources::builtin())),
        clock.clone(),
    );
    (svc, clock)
}

/// Random query over the vocabulary with at most `max_literals` literals.
fn random_query(rng: &mut ChaCha8Rng, max_literals: usize) -> String {
    let mut left = rng.random_range(1..=max_literals);
    node(rng, &mut left, 3)
}

fn literal(rng: &mut ChaCha8Rng) -> String {
    let words = &VOCABULARY[..12];
    let w = |rng: &mut ChaCha8Rng| {
        let w = words.choose(rng).unwrap().to_string();
        if rng.random_bool(0.1) {
            w.to_uppercase()
        } else {
            w
        }
    };
    if rng.random_bool(0.15) {
        format!("\"{} {}\"", w(rng), w(rng))
    } else {
        w(rng)
    }
}

fn node(rng: &mut ChaCha8Rng, left: &mut usize, depth: u32) -> String {
    if *left <= 1 || depth == 0 || rng.random_bool(0.2) {
        *left = left.saturating_sub(1);
        let lit = literal(rng);
        return if rng.random_bool(0.2) {
            format!("NOT {lit}")
        } else {
            lit
        };
    }
    let total = *left;
    let mut l = rng.random_range(1..total);
    let mut r = total - l;
    let a = node(rng, &mut l, depth - 1);
    let b = node(rng, &mut r, depth - 1);
    *left = l + r;
    match rng.random_range(0..4) {
        0 => format!("({a} AND {b})"),
        1 => format!("({a} OR {b})"),
        2 => format!("{a} {b}"),
        _ => format!("NOT ({a} OR {b})"),
    }
}

fn brute_force(p: Platform, items: &[NativeItem], q: &str, window: TimeWindow) -> BTreeSet<String> {
    let ast = parse_query(q).expect("query parses");
    items
        .iter()
        .map(|it| map_native(p, it).expect("fixture maps"))
        .filter(|a| {
            evaluate_match(&ast, &a.object.content) && window.contains(&a.object.start_time)
        })
        .map(|a| a.object.id)
        .collect()
}

fn gather_ids(
    svc: &GatheringService,
    p: Platform,
    req: &SearchRequest,
) -> Result<BTreeSet<String>, String> {
    let dnf = req.plan_query().map_err(|e| e.to_string())?;
    let run = svc.gather_platform(p, &dnf, &req.scope());
    if run.truncated {
        return Err(format!("{p}: unexpected truncation"));
    }
    Ok(run.activities.into_iter().map(|a| a.object.id).collect())
}

// ---------------------------------------------------------------- criteria

fn c1_crawl_wire_format() -> Outcome {
    let started = Instant::now();
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| e.to_string())?;
    rt.block_on(async {
        let t = common::builder().corpus(Platform::Twitter, default_corpus(Platform::Twitter, 50, 1)).build();
        let payload = json!({ "gathering": { "keyword": "berlin", "platforms": ["facebook","instagram","twitter","youtube"], "waitBetweenRequests": 10000 } });
        let r = t.post_json("/SocialMediaAPI/crawlService", &payload).await;
        check(r.status == StatusCode::CREATED, || format!("status {}", r.status))?;
        let obj = r.body.as_object().ok_or("body is not an object")?;
        let keys: Vec<_> = obj.keys().collect();
        check(keys == ["crawljobId"], || format!("keys {keys:?}"))?;
        let id = obj["crawljobId"].as_str().ok_or("id is not a string")?;
        check(id.len() == 40 && id.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)), || {
            format!("id {id:?} is not 40 lowercase hex")
        })?;
        let mut missing = payload.clone();
        missing["gathering"].as_object_mut().unwrap().remove("keyword");
        let r = t.post_json("/SocialMediaAPI/crawlService", &missing).await;
        check(r.status == StatusCode::BAD_REQUEST, || format!("missing keyword gave {}", r.status))?;
        check(r.body["fields"]["keyword"] == "required", || format!("body {}", r.body))?;
        Ok::<_, String>(())
    })?;
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "201 with one 40-hex crawljobId, missing keyword -> 400, {elapsed:.2?}"
    ))
}

fn c2_reference_round_trip() -> Outcome {
    let original: Value = serde_json::from_str(REFERENCE_DOC).map_err(|e| e.to_string())?;
    let a = parse_activity(REFERENCE_DOC).map_err(|e| e.to_string())?;
    validate_activity(&a).map_err(|v| format!("{v:?}"))?;
    let text = serialize_activity(&a).map_err(|e| e.to_string())?;
    let back: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    check(back == original, || {
        format!("round trip differs:\n{back:#}\nvs\n{original:#}")
    })?;
    check(activity_to_value(&a) == original, || {
        "value conversion differs".into()
    })?;
    let e = extract_entities(&a.object.content);
    check(e.embedded_urls == ["https://t.co/UNlq698PIJ"], || {
        format!("urls {:?}", e.embedded_urls)
    })?;
    check(e.mentions == ["bzberlin", "SERCWildWings"], || {
        format!("mentions {:?}", e.mentions)
    })?;
    check(e.tags == ["Debüt"], || format!("tags {:?}", e.tags))?;
    Ok("parse, validate, re-serialize identical; entities exact".into())
}

fn c3_plan_soundness() -> Outcome {
    let started = Instant::now();
    let corpora: Vec<_> = Platform::ALL
        .iter()
        .map(|&p| (p, default_corpus(p, 500, DEFAULT_SEED)))
        .collect();
    let (svc, _) = service(corpora.clone(), &BTreeMap::new(), u64::MAX / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut accepted, mut rejected, mut nonempty) = (0, 0, 0);
    while accepted < 200 {
        let q = random_query(&mut rng, 6);
        let mut req = SearchRequest::new(q.clone(), Platform::ALL);
        if rng.random_bool(0.5) {
            let a = CORPUS_START + rng.random_range(0..CORPUS_SPAN_SECS);
            let b = CORPUS_START + rng.random_range(0..CORPUS_SPAN_SECS);
            req.since = Some(a.min(b));
            req.until = Some(a.max(b) + 1);
        }
        if req.plan_query().is_err() {
            rejected += 1;
            check(rejected < 2000, || {
                "generator produces too few valid queries".into()
            })?;
            continue;
        }
        accepted += 1;
        let window = TimeWindow::new(req.since, req.until);
        for (p, items) in &corpora {
            let want = brute_force(*p, items, &q, window);
            let got = gather_ids(&svc, *p, &req)?;
            check(got == want, || {
                format!(
                    "{p} on {q:?}: got {} want {}, missing {:?}, extra {:?}",
                    got.len(),
                    want.len(),
                    want.difference(&got).take(3).collect::<Vec<_>>(),
                    got.difference(&want).take(3).collect::<Vec<_>>()
                )
            })?;
            nonempty += usize::from(!want.is_empty());
        }
    }
    let elapsed = started.elapsed();
    check(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{accepted} queries x 5 profiles equal brute force ({nonempty} non-empty, {rejected} rejected as unsupported), {elapsed:.1?}"
    ))
}

fn c4_quota_multiplication() -> Outcome {
    let mut lines = Vec::new();
    // (page size override, pages per native request)
    for (page_size, pages) in [(None, 1u64), (Some(10usize), 2), (Some(10), 3)] {
        for k in [1usize, 2, 3, 5] {
            let kws: Vec<String> = (0..k).map(|i| format!("kw{i}")).collect();
            let per_page = page_size.unwrap_or(25) as u64;
            let matching = (pages * per_page - 3) as usize;
            let mut fb = CorpusGenerator::new(Platform::Facebook, 40)
                .vocabulary::<&str>(&[])
                .requiring(&kws)
                .generate(matching);
            fb.extend(
                CorpusGenerator::new(Platform::Facebook, 41)
                    .ids_from(10_000)
                    .vocabulary::<&str>(&[])
                    .generate(200),
            );
            let mut tw = CorpusGenerator::new(Platform::Twitter, 40)
                .vocabulary::<&str>(&[])
                .requiring(&kws)
                .generate(matching);
            tw.extend(
                CorpusGenerator::new(Platform::Twitter, 41)
                    .ids_from(10_000)
                    .vocabulary::<&str>(&[])
                    .generate(200),
            );
            let mut caps = BTreeMap::new();
            if let Some(n) = page_size {
                for p in [Platform::Facebook, Platform::Twitter] {
                    let mut c = default_capabilities(p);
                    c.max_results_per_request = n;
                    caps.insert(p, c);
                }
            }
            let (svc, _) = service(
                vec![(Platform::Facebook, fb), (Platform::Twitter, tw)],
                &caps,
                10_000,
            );
            let q = kws.join(" OR ");
            let out = svc
                .run_search(&SearchRequest::new(
                    q.clone(),
                    [Platform::Facebook, Platform::Twitter],
                ))
                .map_err(|e| e.to_string())?;
            let (f, t) = (
                svc.ledger().used(Platform::Facebook),
                svc.ledger().used(Platform::Twitter),
            );
            check(f == k as u64 * pages, || {
                format!(
                    "{q:?} pages={pages}: facebook used {f}, want {}",
                    k as u64 * pages
                )
            })?;
            check(t == pages, || {
                format!("{q:?} pages={pages}: twitter used {t}, want {pages}")
            })?;
            check(out.request_units(Platform::Facebook) == f, || {
                "outcome disagrees with ledger".into()
            })?;
            check(out.collection.total_items() == 2 * matching, || {
                "wrong result size".into()
            })?;
        }
        lines.push(format!("pages={pages}"));
    }
    Ok(format!(
        "facebook k*pages vs twitter pages units for k in 1,2,3,5 at {}",
        lines.join(", ")
    ))
}

fn c5_not_subsetting() -> Outcome {
    let corpora: Vec<_> = Platform::ALL
        .iter()
        .map(|&p| (p, default_corpus(p, 300, 11)))
        .collect();
    let (svc, _) = service(corpora, &BTreeMap::new(), u64::MAX / 2);
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 100,
            failure_persistence: None,
            ..PropConfig::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let strategy = (any::<u64>(), 0..12usize);
    runner
        .run(&strategy, |(seed, t_idx)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut q = random_query(&mut rng, 5);
            while SearchRequest::new(q.clone(), Platform::ALL)
                .plan_query()
                .is_err()
            {
                q = random_query(&mut rng, 5);
            }
            let t = VOCABULARY[t_idx];
            let q2 = format!("({q}) AND NOT {t}");
            let t_ast = parse_query(t).unwrap();
            for p in Platform::ALL {
                let base = svc.gather_platform(
                    p,
                    &to_dnf(&parse_query(&q).unwrap()).unwrap(),
                    &Default::default(),
                );
                let narrowed = svc.gather_platform(
                    p,
                    &to_dnf(&parse_query(&q2).unwrap()).unwrap(),
                    &Default::default(),
                );
                let base_ids: BTreeSet<_> = base.activities.iter().map(|a| &a.object.id).collect();
                for a in &narrowed.activities {
                    prop_assert!(
                        base_ids.contains(&a.object.id),
                        "{p}: {} in q' but not q ({q:?})",
                        a.object.id
                    );
                    prop_assert!(
                        !evaluate_match(&t_ast, &a.object.content),
                        "{p}: {} matches {t}",
                        a.object.id
                    );
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok("results(q AND NOT t) within results(q), none match t, 100 cases x 5 profiles".into())
}

fn c6_dedup() -> Outcome {
    let corpus = default_corpus(Platform::Twitter, 300, DEFAULT_SEED);
    let (svc, clock) = service(vec![(Platform::Twitter, corpus)], &BTreeMap::new(), 10_000);
    let spec = CrawlJobSpec::from_json(&json!({"keyword": "berlin OR fire", "platforms": ["twitter"], "waitBetweenRequests": 1000}))
        .map_err(|e| e.to_string())?;
    let id = svc.start_crawl(&spec).map_err(|e| e.to_string())?;
    let first = svc.crawl_tick(&id).map_err(|e| e.to_string())?;
    clock.advance(ChronoDuration::seconds(2));
    let second = svc.crawl_tick(&id).map_err(|e| e.to_string())?;
    check(first.inserted > 0, || "first tick inserted nothing".into())?;
    check(second.inserted == 0, || {
        format!("second tick inserted {}", second.inserted)
    })?;
    let before = svc.store().len();
    let batch = svc
        .store()
        .load_all(&id)
        .map_err(|e| e.to_string())?
        .into_items();
    let again = svc
        .store()
        .insert_activities(&id, &batch)
        .map_err(|e| e.to_string())?;
    check(again.inserted == 0 && svc.store().len() == before, || {
        "re-insert added items".into()
    })?;

    // Eight jobs insert overlapping random subsets of one pool concurrently.
    let pool = synthetic_activities(4000, 6);
    let store = Arc::new(Store::in_memory());
    let now = chrono::Utc::now();
    let handles: Vec<_> = (0..8u64)
        .map(|j| {
            let store = store.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(100 + j);
            let mine: Vec<Activity> = pool
                .iter()
                .filter(|_| rng.random_bool(0.4))
                .cloned()
                .collect();
            let job = format!("job{j}");
            store
                .create_job(JobRecord::new(&job, JobKind::Crawl, Value::Null, now))
                .unwrap();
            std::thread::spawn(move || {
                for chunk in mine.chunks(37) {
                    store.insert_activities(&job, chunk).unwrap();
                    store
                        .insert_activities(&job, &chunk[..chunk.len() / 2])
                        .unwrap();
                }
                (job, mine)
            })
        })
        .collect();
    let mut distinct = BTreeSet::new();
    for h in handles {
        let (job, mine) = h
            .join()
            .map_err(|_| "inserting thread panicked".to_string())?;
        let keys: BTreeSet<_> = mine.iter().map(|a| a.key().unwrap()).collect();
        let len = store.job_len(&job).map_err(|e| e.to_string())?;
        check(len == keys.len(), || {
            format!("{job} holds {len}, expected {}", keys.len())
        })?;
        distinct.extend(keys);
    }
    check(store.len() == distinct.len(), || {
        format!("store {} vs distinct {}", store.len(), distinct.len())
    })?;
    Ok(format!(
        "second tick inserted 0; 8 concurrent jobs -> store size {} == distinct keys",
        store.len()
    ))
}

fn c7_paging() -> Outcome {
    let store = Store::in_memory();
    store
        .create_job(JobRecord::new(
            "p",
            JobKind::Crawl,
            Value::Null,
            chrono::Utc::now(),
        ))
        .map_err(|e| e.to_string())?;
    let items = synthetic_activities(1000, 7);
    store
        .insert_activities("p", &items)
        .map_err(|e| e.to_string())?;
    let full: Vec<String> = store
        .load_all("p")
        .map_err(|e| e.to_string())?
        .items()
        .iter()
        .map(|a| a.object.id.clone())
        .collect();
    check(full.len() == 1000, || format!("job holds {}", full.len()))?;
    for size in [1usize, 7, 100] {
        let mut got = Vec::new();
        let mut offset = 0;
        loop {
            let page = store
                .load_page("p", size, offset)
                .map_err(|e| e.to_string())?;
            check(page.total_items() == page.items().len(), || {
                "totalItems mismatch".into()
            })?;
            if page.is_empty() {
                break;
            }
            check(page.total_items() <= size, || "page too long".into())?;
            offset += page.total_items();
            got.extend(page.items().iter().map(|a| a.object.id.clone()));
        }
        let unique: BTreeSet<_> = got.iter().collect();
        check(unique.len() == got.len(), || {
            format!("size {size}: pages overlap")
        })?;
        check(got == full, || {
            format!("size {size}: concatenation differs from full load")
        })?;
    }
    Ok("page sizes 1, 7, 100 concatenate to the full 1000-item load".into())
}

fn c8_ranking_invariance() -> Outcome {
    let enricher = Enricher::new(EnrichmentResources::builtin());
    let ids: Vec<&str> = methods().iter().map(|m| m.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        let p = *Platform::ALL.choose(&mut rng).unwrap();
        let n = rng.random_range(2..40);
        let items: Vec<Activity> = CorpusGenerator::new(p, rng.random())
            .generate(n)
            .iter()
            .map(|it| enricher.enrich_activity(&map_native(p, it).unwrap()))
            .collect();
        let q = random_query(&mut rng, 3);
        let Ok(dnf) = parse_query(&q)
            .map_err(|e| e.to_string())
            .and_then(|a| to_dnf(&a).map_err(|e| e.to_string()))
        else {
            continue;
        };
        let mut chosen: Vec<&str> = ids
            .iter()
            .copied()
            .filter(|_| rng.random_bool(0.4))
            .collect();
        if chosen.is_empty() {
            chosen.push(ids.choose(&mut rng).unwrap());
        }
        let profile =
            WeightProfile::new(chosen.iter().map(|id| (*id, rng.random_range(0.05..5.0))));
        let order = |prof: &WeightProfile| -> Result<Vec<String>, String> {
            Ok(rank_collection(&items, prof, &dnf)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|a| a.object.id)
                .collect())
        };
        let base = order(&profile)?;
        let factor = [1e-3, 0.5, 3.0, 1e3][rng.random_range(0..4)];
        check(order(&profile.scaled(factor))? == base, || {
            format!("case {case}: scaling by {factor} changed order")
        })?;
        let mut padded = profile.clone();
        for id in &ids {
            padded.weights.entry(id.to_string()).or_insert(0.0);
        }
        check(order(&padded)? == base, || {
            format!("case {case}: zero-weight methods changed order")
        })?;
    }
    Ok("100 corpora: scaled and zero-padded profiles keep the order".into())
}

fn c9_enrichment() -> Outcome {
    check(shannon_entropy("aaaa") == 0.0, || {
        format!("entropy(aaaa) = {}", shannon_entropy("aaaa"))
    })?;
    let ab = shannon_entropy("ab");
    check((ab - 1.0).abs() <= 1e-9, || format!("entropy(ab) = {ab}"))?;
    let alphabet: Vec<char> = "abcdefghij XYZ0123äöüß😀#@.".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..1000 {
        let len = rng.random_range(1..80);
        let s: String = (0..len)
            .map(|_| *alphabet.choose(&mut rng).unwrap())
            .collect();
        let h = shannon_entropy(&s);
        let distinct = s.chars().collect::<BTreeSet<_>>().len() as f64;
        check(h >= 0.0 && h <= distinct.log2() + 1e-9, || {
            format!("entropy({s:?}) = {h}")
        })?;
    }
    let enricher = Enricher::new(EnrichmentResources::builtin());
    let mut total = 0;
    for p in Platform::ALL {
        let adapter = FixtureAdapter::load_jsonl(
            p,
            default_capabilities(p),
            &fixture_path(SHIPPED_FIXTURES.as_ref(), p),
        )
        .map_err(|e| e.to_string())?;
        for item in adapter.items() {
            let once = enricher.enrich_activity(&map_native(p, &item).map_err(|e| e.to_string())?);
            let twice = enricher.enrich_activity(&once);
            check(once == twice, || {
                format!("enrichment not idempotent on {}", once.object.id)
            })?;
            total += 1;
        }
    }
    check(total > 0, || "no shipped fixtures found".into())?;
    Ok(format!(
        "entropy bounds hold on 1000 strings; enrichment idempotent on {total} fixture items"
    ))
}

fn c10_performance() -> Outcome {
    let items = synthetic_activities(100_000, 10);
    let store = Store::in_memory();
    store
        .create_job(JobRecord::new(
            "perf",
            JobKind::Crawl,
            Value::Null,
            chrono::Utc::now(),
        ))
        .map_err(|e| e.to_string())?;
    let mut chunk_times = Vec::new();
    for chunk in items.chunks(1000) {
        let t = Instant::now();
        store
            .insert_activities("perf", chunk)
            .map_err(|e| e.to_string())?;
        chunk_times.push(t.elapsed());
    }
    check(store.len() == 100_000, || {
        format!("store holds {}", store.len())
    })?;
    let first: Duration = chunk_times[..10].iter().sum();
    let last: Duration = chunk_times[chunk_times.len() - 10..].iter().sum();
    let ratio = last.as_secs_f64() / first.as_secs_f64();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut lat: Vec<Duration> = (0..200)
        .map(|_| {
            let offset = rng.random_range(0..100_000);
            let t = Instant::now();
            let page = store.load_page("perf", 100, offset).unwrap();
            let d = t.elapsed();
            assert!(page.total_items() == 100.min(100_000 - offset));
            d
        })
        .collect();
    lat.sort();
    let p95 = lat[lat.len() * 95 / 100];
    check(p95 < Duration::from_millis(100), || {
        format!("p95 load_page {p95:?}")
    })?;
    check(ratio <= 2.0, || {
        format!("last 10k took {ratio:.2}x the first 10k ({first:?} vs {last:?})")
    })?;
    Ok(format!(
        "p95 load_page(100) {p95:.2?}; last/first 10k insert time {ratio:.2}"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("crawl creation wire format", c1_crawl_wire_format),
        ("reference activity round trip", c2_reference_round_trip),
        ("query plan soundness", c3_plan_soundness),
        ("quota multiplication", c4_quota_multiplication),
        ("NOT post-filter subsetting", c5_not_subsetting),
        ("dedup idempotence", c6_dedup),
        ("paging consistency", c7_paging),
        ("ranking invariance", c8_ranking_invariance),
        ("enrichment checks", c9_enrichment),
        ("desk-scale performance", c10_performance),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {:>2} {name} ({secs:.2}s): {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name} ({secs:.2}s): {why}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
