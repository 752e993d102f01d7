//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::time::{Duration, Instant};

use groupevo::baseline_asur::{asur_anomaly_audit, asur_detect, AsurConfig, AsurKind};
use groupevo::centrality::{compute_sp, SpConfig};
use groupevo::cli::{run_pipeline, sweep, RunConfig, ARTIFACTS};
use groupevo::evolution::{build_chains, summarize, trace_lineage, KindCounts};
use groupevo::ged::{classify_pair, detect_events, inclusion, EventKind, EvolutionAnalysis, Thresholds};
use groupevo::grouping::{detect_groups_cpm, detect_groups_labelprop, Detector, Group, GroupSet, DEFAULT_K};
use groupevo::synthetic::{node_name, planted_evolution, SyntheticConfig, SyntheticNetwork};
use groupevo::temporal_network::{build_frames, InteractionRecord, NodeId, TemporalNetwork, TimeUnit, WindowPlan};

fn report(criterion: u32, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion}: {verdict} - {detail}\n");
    // bypass the harness capture so the line always shows
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn synthetic() -> (SyntheticNetwork, TemporalNetwork) {
    let syn = planted_evolution(&SyntheticConfig::default());
    let net = build_frames(&syn.records, WindowPlan::default_days(0.0, TimeUnit::Days)).unwrap();
    (syn, net)
}

/// Planted communities of the epoch a frame starts in, cut down to the
/// frame's active nodes.
fn planted_groupsets(syn: &SyntheticNetwork, net: &TemporalNetwork) -> Vec<GroupSet> {
    net.frames()
        .iter()
        .enumerate()
        .map(|(k, snap)| {
            let groups = syn.epochs[k]
                .iter()
                .enumerate()
                .filter_map(|(i, c)| {
                    let members: Vec<NodeId> = c
                        .iter()
                        .filter_map(|&v| net.registry().lookup(&node_name(v)))
                        .filter(|&n| snap.contains(n))
                        .collect();
                    Group::new(format!("P{i}"), members).ok()
                })
                .collect();
            GroupSet::new(snap.frame_index(), groups, Detector::External)
        })
        .collect()
}

#[test]
fn criterion_1_story_event_sequence() {
    let start = Instant::now();
    let (net, sets) = common::story();
    let events = detect_events(&net, &sets, &Thresholds::default(), &SpConfig::default()).unwrap();
    let chains = build_chains(&events, &sets).unwrap();
    let lineage = trace_lineage(&events, &sets, 2, 0).unwrap();
    let elapsed = start.elapsed();

    use EventKind::*;
    let story: Vec<EventKind> = lineage.iter().map(|s| s.kind).collect();
    let want_story = vec![Forming, Growing, Splitting, Shrinking, Continuing, Merging, Dissolving];
    let table = summarize(&events).total;
    let want_table = KindCounts {
        form: 2,
        dissolve: 1,
        shrink: 1,
        growth: 1,
        continuing: 3,
        split: 1,
        merge: 1,
    };
    let ok = story == want_story && table == want_table && chains.len() == 5 && elapsed < Duration::from_secs(1);
    report(
        1,
        ok,
        &format!("summary {:?}, {} chains, {:.1} ms", table.row(), chains.len(), elapsed.as_secs_f64() * 1e3),
    );
    assert_eq!(story, want_story);
    assert_eq!(table, want_table);
    assert!(elapsed < Duration::from_secs(1));
}

#[test]
fn criterion_2_sp_oracle() {
    let mut rng = common::rng(2);
    let cfg = SpConfig::default();
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for i in 0..200 {
        let (n, mut edges) = common::random_digraph(&mut rng, 6);
        if i % 2 == 1 {
            for a in 0..n {
                edges.push((a, (a + 1) % n, 0.5));
            }
        }
        let s = common::snapshot(n, &edges);
        let sp = compute_sp(&s, &cfg).unwrap();
        assert!(sp.converged);
        let exact = common::sp_linear_solve(&s, cfg.epsilon);
        for (&a, &b) in sp.values().iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
        if (0..s.node_count()).all(|u| !s.out_edges(u).is_empty()) {
            let sum: f64 = sp.values().iter().sum();
            worst_sum = worst_sum.max((sum - n as f64).abs() / n as f64);
        }
    }
    let ok = worst <= 1e-8 && worst_sum <= 1e-7;
    report(2, ok, &format!("200 graphs, max error {worst:.2e}, max sum error per node {worst_sum:.2e}"));
    assert!(worst <= 1e-8);
    assert!(worst_sum <= 1e-7);
}

#[test]
fn criterion_3_inclusion_identities() {
    let mut rng = common::rng(3);
    use rand::Rng;
    let mut failures = Vec::new();
    for _ in 0..500 {
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<NodeId> {
            (0..16).filter(|_| rng.random_bool(0.5)).map(NodeId).collect()
        };
        let (a, b) = (pick(&mut rng), pick(&mut rng));
        let (Ok(g1), Ok(g2)) = (Group::new("a", a), Group::new("b", b)) else {
            continue;
        };
        let sp: Vec<f64> = (0..16).map(|_| rng.random_range(0.15..5.0)).collect();
        let sp1 = groupevo::centrality::SpVector::from_values(g1.members().iter().map(|&n| (n, sp[n.index()])));
        if inclusion(&g1, &g1, &sp1).unwrap() != 1.0 {
            failures.push("identity");
        }
        let i = inclusion(&g1, &g2, &sp1).unwrap();
        let scale = rng.random_range(1e-3..1e3);
        if (inclusion(&g1, &g2, &sp1.scaled(scale)).unwrap() - i).abs() > 1e-12 {
            failures.push("scale");
        }
        let level = sp[0];
        let uniform = groupevo::centrality::SpVector::from_values(g1.members().iter().map(|&n| (n, level)));
        let share = g1.intersection_size(&g2) as f64 / g1.len() as f64;
        if (inclusion(&g1, &g2, &uniform).unwrap() - share * share).abs() > 1e-12 {
            failures.push("uniform");
        }
        let disjoint = Group::new("d", (16..20).map(NodeId)).unwrap();
        if inclusion(&g1, &disjoint, &sp1).unwrap() != 0.0 {
            failures.push("disjoint");
        }
    }
    report(3, failures.is_empty(), &format!("500 random pairs, failures {failures:?}"));
    assert!(failures.is_empty());
}

#[test]
fn criterion_4_classifier_exclusivity() {
    let grid = [0.0, 0.05, 0.1, 0.3, 0.49, 0.5, 0.51, 0.7, 0.89, 0.9, 0.99, 1.0];
    let sizes = [(5usize, 5usize), (7, 5), (5, 7)];
    let mut checked = 0usize;
    let mut clashes = 0usize;
    let mut disagreements = 0usize;
    for th in [Thresholds::default(), Thresholds::new(0.7, 0.9), Thresholds::new(1.0, 1.0)] {
        for &f in &grid {
            for &b in &grid {
                for &(s1, s2) in &sizes {
                    for mf in 0..4 {
                        for mb in 0..4 {
                            let (fa, bb) = (f >= th.alpha, b >= th.beta);
                            let cases = [
                                (EventKind::Continuing, fa && bb && s1 == s2),
                                (
                                    EventKind::Shrinking,
                                    (fa && bb && s1 > s2) || (!fa && bb && s1 >= s2 && mf == 1),
                                ),
                                (
                                    EventKind::Growing,
                                    (fa && bb && s1 < s2) || (fa && !bb && s1 <= s2 && mb == 1),
                                ),
                                (EventKind::Splitting, !fa && bb && s1 >= s2 && mf > 1),
                                (EventKind::Merging, fa && !bb && s1 <= s2 && mb > 1),
                            ];
                            let hits: Vec<EventKind> = cases.iter().filter(|c| c.1).map(|c| c.0).collect();
                            if hits.len() > 1 {
                                clashes += 1;
                            }
                            if classify_pair(s1, s2, f, b, mf, mb, &th) != hits.first().copied() {
                                disagreements += 1;
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    let ok = clashes == 0 && disagreements == 0;
    report(
        4,
        ok,
        &format!("{checked} inputs, {clashes} with two kinds, {disagreements} classifier disagreements"),
    );
    assert_eq!(clashes, 0);
    assert_eq!(disagreements, 0);
}

#[test]
fn criterion_5_threshold_structure_on_synthetic_data() {
    let (_, net) = synthetic();
    assert_eq!(net.frame_count(), 14);
    let start = Instant::now();
    let sets: Vec<GroupSet> = net.frames().iter().map(|s| detect_groups_labelprop(s, 1)).collect();
    let analysis = EvolutionAnalysis::new(&net, &sets, &SpConfig::default()).unwrap();
    let grid: Vec<f64> = (5..=10).map(|p| f64::from(p) / 10.0).collect();
    let rows = sweep(&analysis, &Thresholds::default(), &grid, &grid).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(rows.len(), 36);

    let forms: Vec<usize> = rows.iter().map(|r| r.counts.form).collect();
    let dissolves: Vec<usize> = rows.iter().map(|r| r.counts.dissolve).collect();
    let constant = forms.iter().all(|&x| x == forms[0]) && dissolves.iter().all(|&x| x == dissolves[0]);
    let cell: BTreeMap<(usize, usize), usize> = rows
        .iter()
        .map(|r| (((r.alpha * 10.0).round() as usize, (r.beta * 10.0).round() as usize), r.passing_pairs))
        .collect();
    let mut monotone = true;
    for a in 5..=10 {
        for b in 5..=10 {
            if a > 5 && cell[&(a, b)] > cell[&(a - 1, b)] {
                monotone = false;
            }
            if b > 5 && cell[&(a, b)] > cell[&(a, b - 1)] {
                monotone = false;
            }
        }
    }
    let groups: usize = sets.iter().map(GroupSet::len).sum();
    let fast = elapsed < Duration::from_secs(60);
    let ok = constant && monotone && fast;
    report(
        5,
        ok,
        &format!(
            "{} frames, {groups} groups, form {} dissolve {}, passing pairs {}..{}, {:.2} s",
            net.frame_count(),
            forms[0],
            dissolves[0],
            cell[&(10, 10)],
            cell[&(5, 5)],
            elapsed.as_secs_f64()
        ),
    );
    assert!(constant, "form {forms:?} dissolve {dissolves:?}");
    assert!(monotone, "{cell:?}");
    assert!(fast);
}

#[test]
fn criterion_6_ged_continuing_equals_asur_continue() {
    let (syn, net) = synthetic();
    let groupings: Vec<(&str, Vec<GroupSet>)> = vec![
        ("label_prop", net.frames().iter().map(|s| detect_groups_labelprop(s, 1)).collect()),
        ("cpm k=6", net.frames().iter().map(|s| detect_groups_cpm(s, DEFAULT_K)).collect()),
        ("planted", planted_groupsets(&syn, &net)),
    ];
    let strict = Thresholds::new(1.0, 1.0);
    let mut details = Vec::new();
    let mut ok = true;
    let mut planted_continues = 0;
    for (name, sets) in &groupings {
        let events = detect_events(&net, sets, &strict, &SpConfig::default()).unwrap();
        let ged = events.iter().filter(|e| e.kind == EventKind::Continuing).count();
        let asur = asur_detect(sets, &net, &AsurConfig::default())
            .unwrap()
            .iter()
            .filter(|e| e.kind == AsurKind::Continue)
            .count();
        ok &= ged == asur;
        if *name == "planted" {
            planted_continues = ged;
        }
        details.push(format!("{name} {ged}={asur}"));
    }
    ok &= planted_continues > 0;
    report(6, ok, &details.join(", "));
    assert!(ok, "{details:?}");
}

#[test]
fn criterion_7_cpm_oracle() {
    let mut rng = common::rng(7);
    let mut mismatches = Vec::new();
    let rounds = 60;
    for round in 0..rounds {
        let (n, edges) = common::random_graph(&mut rng, 30);
        let snap = common::graph_snapshot(n, &edges);
        for k in 3..=6 {
            let got = common::group_members(&detect_groups_cpm(&snap, k));
            if got != common::cpm_bruteforce(n, &edges, k) {
                mismatches.push((round, k));
            }
        }
    }
    report(
        7,
        mismatches.is_empty(),
        &format!("{rounds} graphs x k=3..6, mismatches {mismatches:?}"),
    );
    assert!(mismatches.is_empty());
}

#[test]
fn criterion_8_asur_anomaly_audit() {
    // A continues unchanged into C, while A and B together also pass the merge test.
    let a: Vec<String> = (0..6).map(common::name).collect();
    let b: Vec<String> = (4..7).map(common::name).collect();
    let mut recs = Vec::new();
    for (t, names) in [(0.5, (0..7).collect::<Vec<u32>>()), (1.5, (0..7).collect())] {
        for w in names.windows(2) {
            recs.push(InteractionRecord::new(common::name(w[0]), common::name(w[1]), t));
        }
    }
    let net = build_frames(&recs, WindowPlan::new(1.0, 1.0, 0.0).unwrap()).unwrap();
    let group = |id: &str, names: &[String]| {
        Group::new(id, names.iter().map(|n| net.registry().lookup(n).unwrap())).unwrap()
    };
    let sets = vec![
        GroupSet::new(1, vec![group("A", &a), group("B", &b)], Detector::External),
        GroupSet::new(2, vec![group("C", &a)], Detector::External),
    ];
    let events = asur_detect(&sets, &net, &AsurConfig::default()).unwrap();
    let audit = asur_anomaly_audit(&events);
    let flagged = audit.anomalous_pairs.iter().any(|p| {
        p.source.as_deref() == Some("A")
            && p.target.as_deref() == Some("C")
            && p.kinds.contains(&AsurKind::Continue)
            && p.kinds.contains(&AsurKind::KMerge)
    });
    let arithmetic = audit.distinct == audit.total - audit.duplicates && audit.duplicates >= 1;
    let ok = flagged && arithmetic;
    report(
        8,
        ok,
        &format!(
            "{} anomalous pairs, total {} duplicates {} distinct {}",
            audit.anomaly_count, audit.total, audit.duplicates, audit.distinct
        ),
    );
    assert!(flagged, "{audit:?}");
    assert!(arithmetic, "{audit:?}");
}

#[test]
fn criterion_9_pipeline_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let syn = planted_evolution(&SyntheticConfig::default());
    let edges = tmp.path().join("edges.csv");
    let mut text = String::new();
    for r in &syn.records {
        text.push_str(&format!("{},{},{},{}\n", r.source, r.target, r.timestamp, r.weight));
    }
    fs::write(&edges, text).unwrap();

    let run = |dir: &str| {
        let mut cfg = RunConfig::default();
        cfg.apply("edges", &edges.display().to_string()).unwrap();
        cfg.apply("origin", "0").unwrap();
        cfg.apply("detector", "label_prop").unwrap();
        cfg.output_dir = tmp.path().join(dir);
        run_pipeline(&cfg).unwrap();
        cfg.output_dir
    };
    let (first, second) = (run("a"), run("b"));
    let mut differing = Vec::new();
    let mut bytes = 0;
    for name in ARTIFACTS {
        let x = fs::read(first.join(name)).unwrap();
        let y = fs::read(second.join(name)).unwrap();
        bytes += x.len();
        if x != y {
            differing.push(name);
        }
    }
    report(
        9,
        differing.is_empty(),
        &format!("{} artifacts, {bytes} bytes, differing {differing:?}", ARTIFACTS.len()),
    );
    assert!(differing.is_empty());
}
