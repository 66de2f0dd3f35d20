//! Acceptance runner: one PASS/FAIL line per criterion with its time budget.
//! Exits non-zero when any criterion fails or overruns.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use kgrec_core::docs::{chunk_text, load_documents, reassemble, LocalEmbedder, VectorStore};
use kgrec_core::graph::{export_graph, import_graph, ExportFormat, ExportedGraph, Graph};
use kgrec_core::nl::{chat_turn, extract_keywords, AgentMode, ChatConfig, ChatContext, Gazetteer, GraphContext, MockLlm};
use kgrec_core::query::{assert_readonly, execute_query, keyword_template_ast, keyword_template_query, parse_query};
use kgrec_core::recommend::{recommend_for, validate_config, Configuration};
use kgrec_core::rules::{ingest, load_records, parse_records, Cardinality, InputFormat, Polarity, Rule, Target};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn parser_coverage() -> Outcome {
    let loaded = load_records(std::fs::File::open(fixture("t3_rules.tsv")).unwrap(), InputFormat::Tsv)
        .map_err(|e| e.to_string())?;
    let (asts, rejected) = parse_records(&loaded.records);
    ensure!(asts.len() + rejected.len() == loaded.records.len(), "a record vanished");
    let all_q = loaded.quarantined.iter().chain(&rejected);
    ensure!(all_q.clone().all(|q| !q.reason.trim().is_empty()), "quarantine without a reason");
    let rows = loaded.records.len() + loaded.quarantined.len();

    let find = |summary: &str| asts.iter().find(|a| a.source.summary == summary).map(|a| &a.rule);
    ensure!(
        matches!(find("MB must select one"), Some(Rule::Select(s)) if s.cardinality == Cardinality::ExactlyOne && s.members.len() == 1),
        "\"Group -- One from\" shape"
    );
    ensure!(
        matches!(find("smart cable is optional."), Some(Rule::Select(s)) if s.cardinality == Cardinality::ZeroOrOne && s.members[0].part_id.as_deref() == Some("SBB1K34458")),
        "\"Group -- 0-1 from\" shape"
    );
    ensure!(
        matches!(find("YF Package 8.2L1 is must select one"), Some(Rule::Derive(d)) if d.consequent.display_name == "YF Package 8.2L1" && d.antecedents.len() == 2 && d.antecedents.iter().all(|c| c.len() == 1)),
        "checkmark derive shape"
    );
    ensure!(
        matches!(find("CPU cooler 65W is must select one"), Some(Rule::Derive(d)) if d.antecedents.len() == 3),
        "compound || derive shape"
    );
    match find("If win11 are selected, then can't select HDD only.") {
        Some(Rule::Text(t)) => {
            let leaves = t.condition.leaves();
            ensure!(t.polarity == Polarity::ShouldNot, "win11 rule polarity");
            ensure!(leaves.len() == 1 && leaves[0].attribute == "Preload OS", "win11 rule condition");
            ensure!(
                matches!(&t.targets[..], [Target::Component(c)] if c.display_name == "1TB HD 7200RPM"),
                "win11 rule target"
            );
        }
        _ => return Err("IF/THEN text rule did not parse".into()),
    }
    Ok(format!(
        "{rows} rows: {} parsed, {} quarantined at load, {} at parse",
        asts.len(),
        loaded.quarantined.len(),
        rejected.len()
    ))
}

fn compile_oracle() -> Outcome {
    for (name, c) in [("t3_rules.tsv", T3_COUNTS), ("fig10.tsv", FIG10_COUNTS), ("table1.tsv", TABLE1_COUNTS)] {
        let g = fixture_graph(name);
        let s = g.stats();
        ensure!(
            (s.node_count, s.edge_count) == (c.nodes, c.edges),
            "{name}: got {}/{} nodes/edges, oracle {}/{}",
            s.node_count,
            s.edge_count,
            c.nodes,
            c.edges
        );
    }
    let g = fixture_graph("table1.tsv");
    let named = |id| g.node(id).map(|n| n.name.as_str()).unwrap_or("?");
    let mut edges: Vec<(&str, &str, Polarity)> = g.edges().iter().map(|e| (named(e.src), named(e.dst), e.polarity)).collect();
    edges.sort();
    let want = vec![
        ("PCI Card Holder Kit for RTX3050 8G", "RTX3050 8GB G6 128b H+3DP HP", Polarity::Should),
        ("SATA 2TB 7200 RPM/6Gb", "Optional 3.5HDD screw and grommet kit", Polarity::ShouldNot),
    ];
    ensure!(edges == want, "Table 1 edges: {edges:?}");
    Ok(format!("fixture {} nodes / {} edges; Table 1 edges exact", T3_COUNTS.nodes, T3_COUNTS.edges))
}

fn query_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let pairs = 600;
    let mut non_empty = 0;
    for i in 0..pairs {
        let g = random_graph(&mut rng, 200, 300);
        let ast = random_query(&mut rng, &g);
        let text = ast.to_string();
        let parsed = parse_query(&text).map_err(|e| format!("pair {i}: {text}: {e}"))?;
        ensure!(parsed == ast, "pair {i}: print/parse changed the query: {text}");
        let got = execute_query(&parsed, &g);
        let (columns, rows) = brute_query(&ast, &g);
        ensure!(got.columns == columns && got.rows == rows, "pair {i} differs: {text}");
        if !rows.is_empty() {
            non_empty += 1;
        }
    }
    Ok(format!("{pairs}/{pairs} pairs identical ({non_empty} with rows)"))
}

fn keyword_pipeline() -> Outcome {
    let g = fixture_graph("t3_rules.tsv");
    let keys = extract_keywords("Tell me the GFX3050 T3 rule about M70t Gen5.", &Gazetteer::from_graph(&g));
    ensure!(keys.name_keys == ["3050"], "name keys {:?}", keys.name_keys);
    ensure!(keys.project_keys == ["M70t Gen5"], "project keys {:?}", keys.project_keys);
    let text = keyword_template_query(&keys).map_err(|e| e.to_string())?;
    assert_readonly(&text).map_err(|e| e.to_string())?;
    let table = execute_query(&keyword_template_ast(&keys).map_err(|e| e.to_string())?, &g);
    let got: BTreeSet<&str> = table.rows.iter().map(|r| r[0].as_str()).collect();
    let want: BTreeSet<&str> = g
        .nodes()
        .iter()
        .filter(|n| n.name.to_lowercase().contains("3050") && n.project_name.to_lowercase().contains("m70t gen5"))
        .map(|n| n.name.as_str())
        .collect();
    ensure!(got == want && table.rows.len() == want.len(), "rows {got:?}, expected {want:?}");
    ensure!(!want.is_empty(), "fixture has no matching node");
    Ok(format!("keys {{'3050'}} / {{'M70t Gen5'}}, {} row(s)", table.rows.len()))
}

fn recommender() -> Outcome {
    let g = fixture_graph("fig10.tsv");
    let project = "ThinkCentre M70T Gen5";
    let gpu = g.lookup("RTX3050 6GB G6 96b DVI++DP", project).ok_or("GPU node missing")?.id;
    let psu180 = g.lookup("180W PSU", project).ok_or("180W node missing")?.id;
    let config = Configuration::new(&g, [gpu]).map_err(|e| e.to_string())?;
    for cat in [Some("PSU"), None] {
        let recs = recommend_for(&g, &config, cat).map_err(|e| e.to_string())?;
        ensure!(recs.iter().all(|r| r.candidate.id != psu180), "180W PSU recommended");
        ensure!(!recs.is_empty(), "nothing recommended");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let mut checked = 0;
    for _ in 0..400 {
        let g = random_rule_graph(&mut rng, 15);
        for _ in 0..12 {
            let k = rng.random_range(0..=g.nodes().len().min(6));
            let sel: BTreeSet<_> = g.nodes().iter().map(|n| n.id).choose_multiple(&mut rng, k).into_iter().collect();
            let config = Configuration::new(&g, sel.iter().copied()).map_err(|e| e.to_string())?.with_project("P");
            for cat in [None, Some("PSU")] {
                let got: Vec<_> = recommend_for(&g, &config, cat)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(|r| (r.candidate.id, r.supporting_rules))
                    .collect();
                ensure!(got == oracle_recommend(&g, &sel, cat), "recommend_for differs from the oracle");
            }
            let mut got: Vec<_> = validate_config(&g, &config).into_iter().map(|v| (v.rule_index, v.kind, v.involved)).collect();
            got.sort();
            ensure!(got == oracle_validate(&g, &config), "validate_config differs from the oracle");
            checked += 1;
        }
    }
    Ok(format!("180W PSU excluded; {checked} random configurations match"))
}

fn determinism() -> Outcome {
    let run = || -> Result<Vec<String>, String> {
        let graph = GraphContext::new(fixture_graph("t3_rules.tsv"));
        let docs = load_documents(&fixture("docs")).map_err(|e| e.to_string())?;
        let embedder = LocalEmbedder::default();
        let store = VectorStore::build(&docs, &embedder, 256, 32).map_err(|e| e.to_string())?;
        let script = std::fs::File::open(fixture("mock_llm.jsonl")).map_err(|e| e.to_string())?;
        let llm = MockLlm::from_jsonl(std::io::BufReader::new(script)).map_err(|e| e.to_string())?;
        let config = ChatConfig::default();
        let ctx = ChatContext {
            graph: Some(&graph),
            store: Some(&store),
            embedder: &embedder,
            llm: &llm,
            config: &config,
        };
        let questions = [
            ("Tell me the GFX3050 T3 rule about M70t Gen5.", AgentMode::GraphAgent),
            ("Please recommend me the power supply about GFX 3050.", AgentMode::GraphAgent),
            ("What cannot be used with the RTX3050 6GB G6 96b DVI++DP?", AgentMode::GraphAgent),
            ("wipe the 180W PSU rules", AgentMode::GraphAgent),
            ("garbled note on the 260W PSU", AgentMode::GraphAgent),
            ("list derive rules for YTM400RR", AgentMode::GraphAgent),
            ("anything about the Front Audio Port", AgentMode::GraphAgent),
            ("how should dual channel kits be labelled", AgentMode::GraphAgent),
            ("why is the 180W supply not offered in Canada", AgentMode::DocAgent),
            ("which holder does the RTX3050 8GB card need", AgentMode::DocAgent),
        ];
        let mut out = Vec::new();
        for i in 0..100 {
            let (q, mode) = questions[i % questions.len()];
            let turn = chat_turn(q, mode, &ctx).map_err(|e| e.to_string())?;
            if let Some(text) = &turn.trace.generated_query {
                assert_readonly(text).map_err(|e| format!("turn {i}: {e}"))?;
            }
            out.push(serde_json::to_string(&turn).map_err(|e| e.to_string())?);
        }
        Ok(out)
    };
    let a = run()?;
    let b = run()?;
    ensure!(a.len() == 100, "ran {} turns", a.len());
    ensure!(a == b, "serialized turns differ between runs");
    Ok("100 turns byte-identical across two runs; all queries read-only".into())
}

fn retrieval() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0C5);
    let stores = 120;
    for s in 0..stores {
        let d = rng.random_range(2..=64);
        let n = rng.random_range(1..=1000);
        let mut store = VectorStore::new(d);
        let mut raw = Vec::with_capacity(n);
        for i in 0..n {
            let doc = format!("doc{}", rng.random_range(0..25));
            let v = random_unit_vector(&mut rng, d);
            let chunk = kgrec_core::docs::Chunk {
                doc_id: doc.clone(),
                seq: i as u64,
                char_start: 0,
                char_end: 0,
                text: String::new(),
            };
            store.insert(chunk, v.clone()).map_err(|e| e.to_string())?;
            raw.push((doc, i as u64, v));
        }
        for e in &store.entries {
            let norm = e.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
            ensure!((norm - 1.0).abs() < 1e-6, "store {s}: norm {norm}");
        }
        let q = random_unit_vector(&mut rng, d);
        let k = rng.random_range(1..=25);
        let got: Vec<(String, u64)> = store
            .search_topk(&q, k)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|h| (h.chunk.doc_id, h.chunk.seq))
            .collect();
        let want: Vec<(String, u64)> = brute_topk(&raw, &q, k).into_iter().map(|(d, s, _)| (d, s)).collect();
        ensure!(got == want, "store {s}: ranking differs");
    }
    let mut texts: Vec<(String, String)> = load_documents(&fixture("docs")).map_err(|e| e.to_string())?;
    for i in 0..50 {
        let words: Vec<String> = (0..rng.random_range(0..400))
            .map(|_| ["psu", "ünï", "RTX3050", "\n", "  ", "kit"][rng.random_range(0..6)].to_string())
            .collect();
        texts.push((format!("random{i}"), words.join(" ")));
    }
    for (id, text) in &texts {
        for (size, overlap) in [(512, 64), (64, 8), (16, 15)] {
            let chunks = chunk_text(id, text, size, overlap).map_err(|e| e.to_string())?;
            ensure!(reassemble(&chunks) == *text, "{id}: reassembly differs at size {size}");
        }
    }
    Ok(format!("{stores} stores ranked identically; {} documents reassembled", texts.len()))
}

fn round_trips() -> Outcome {
    for name in ["t3_rules.tsv", "fig10.tsv", "table1.tsv"] {
        let g = fixture_graph(name);
        let ExportedGraph::Single(bytes) = export_graph(&g, ExportFormat::Json) else {
            return Err("JSON export is not a single document".into());
        };
        let back = import_graph(&bytes, ExportFormat::Json).map_err(|e| e.to_string())?;
        ensure!(back == g, "{name}: JSON import differs");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xA57);
    for _ in 0..200 {
        let g: Graph = random_rule_graph(&mut rng, 15);
        let ExportedGraph::Single(bytes) = export_graph(&g, ExportFormat::Json) else { unreachable!() };
        ensure!(import_graph(&bytes, ExportFormat::Json).map_err(|e| e.to_string())? == g, "random graph JSON differs");
        let ast = random_query(&mut rng, &g);
        let text = ast.to_string();
        let back = parse_query(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure!(back == ast && back.to_string() == text, "AST print/parse differs: {text}");
    }
    let f = std::fs::File::open(fixture("t3_rules.tsv")).unwrap();
    let ing = ingest(f, InputFormat::Tsv).map_err(|e| e.to_string())?;
    for ast in &ing.asts {
        let json = serde_json::to_string(ast).map_err(|e| e.to_string())?;
        let back: kgrec_core::rules::RuleAst = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        ensure!(back == *ast, "rule AST JSON differs");
    }
    Ok("3 fixture graphs, 200 random graphs and queries, all rule ASTs".into())
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "parser coverage", limit: Some(Duration::from_secs(5)), run: parser_coverage },
        Criterion { name: "graph compile oracle", limit: Some(Duration::from_secs(5)), run: compile_oracle },
        Criterion { name: "query-engine equivalence", limit: Some(Duration::from_secs(60)), run: query_equivalence },
        Criterion { name: "keyword pipeline", limit: None, run: keyword_pipeline },
        Criterion { name: "recommender soundness", limit: Some(Duration::from_secs(30)), run: recommender },
        Criterion { name: "end-to-end determinism", limit: Some(Duration::from_secs(30)), run: determinism },
        Criterion { name: "retrieval correctness", limit: Some(Duration::from_secs(30)), run: retrieval },
        Criterion { name: "round-trips", limit: None, run: round_trips },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let limit = c.limit.map_or("no limit".to_string(), |l| format!("limit {}s", l.as_secs()));
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {:.2}s", elapsed.as_secs_f64())),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {} ({limit}, {:.2}s): {detail}", c.name, elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {} ({limit}, {:.2}s): {why}", c.name, elapsed.as_secs_f64());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
