//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use common::*;
use price_audit::pipeline::{to_jsonl, BatchItem, Pipeline};
use price_audit_core::{
    agreement_rate, classify_zone, cost_time, decide, decide_veto, decide_voting, f1_score, outlier_rate, round2, Catalog, CostProfile, Decision, Label,
    OutlierVerdict, PaddingConfig, QuadrantPoint, Strategy, Zone, ZoneCounts,
};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

const F1_TOLERANCE: f64 = 0.01;
const SEED: u64 = 0x5eed_2024;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. F1 from reported precision and recall.
fn c1() -> Outcome {
    let rows = [(1.00, 0.38, 0.55), (0.67, 0.75, 0.71), (0.54, 0.88, 0.67)];
    let mut got = Vec::new();
    for (p, r, want) in rows {
        let f = f1_score(p, r);
        ensure((f - want).abs() <= F1_TOLERANCE, || format!("F1({p}, {r}) = {f:.4}, expected {want}"))?;
        got.push(format!("F1({p:.2},{r:.2})={f:.4}"));
    }
    Ok(got.join(" "))
}

// 2. Reference cost rows at two-decimal precision.
fn c2() -> Outcome {
    // (n, agent hours, human hours, agent cost, human cost)
    let table = [
        (10.0, 0.27, 3.33, 1.05, 33.33),
        (1_000.0, 27.03, 333.33, 105.30, 3_333.33),
        (400_000_000.0, 10_810_810.81, 133_333_333.33, 42_120_000.00, 1_333_333_333.33),
    ];
    for (n, ah, hh, ac, hc) in table {
        let a = cost_time(n, &CostProfile::AGENT).map_err(|e| e.to_string())?;
        let h = cost_time(n, &CostProfile::HUMAN).map_err(|e| e.to_string())?;
        let got = [round2(a.hours), round2(h.hours), round2(a.cost), round2(h.cost)];
        ensure(got == [ah, hh, ac, hc], || format!("n={n}: got {got:?}, expected {:?}", [ah, hh, ac, hc]))?;
    }
    Ok("3 rows x 2 profiles exact; 400M agent cost $42,120,000.00".into())
}

/// Rule oracle written from the zone definitions, independent of the library.
fn zone_oracle(gap: f64, nu: i64, price_padding: f64, utility_padding: i64) -> Zone {
    let better = nu > utility_padding;
    let worse = nu < -utility_padding;
    let similar = !better && !worse;
    let cheaper_enough = gap >= price_padding;
    if (better || similar) && cheaper_enough {
        Zone::Ap
    } else if worse && gap <= 0.0 {
        Zone::NotAp
    } else if similar && gap.abs() < price_padding {
        Zone::Tradeoff
    } else {
        Zone::Uninformative
    }
}

// 3. Exhaustive zone grid against the oracle.
fn c3() -> Outcome {
    let mut cells = 0;
    let mut seen = BTreeMap::new();
    for step in 0..40 {
        let gap = (f64::from(step) - 20.0) / 20.0;
        for nu in -4..=4 {
            for pp in [0.3, 0.5, 0.75] {
                for up in [0u32, 1] {
                    let padding = PaddingConfig::fixed(pp, up);
                    let got = classify_zone(gap, nu, &padding);
                    let want = zone_oracle(gap, nu, pp, i64::from(up));
                    ensure(got == want, || format!("gap {gap} nu {nu} pad ({pp},{up}): {got:?} vs oracle {want:?}"))?;
                    *seen.entry(want.as_str()).or_insert(0) += 1;
                    cells += 1;
                }
            }
        }
    }
    ensure(cells == 40 * 9 * 3 * 2, || format!("grid has {cells} cells"))?;
    ensure(seen.len() == 4, || format!("grid does not exercise every zone: {seen:?}"))?;
    Ok(format!("{cells}/{cells} cells agree; zone mix {seen:?}"))
}

fn point_in(zone: Zone, i: usize) -> QuadrantPoint {
    let (gap, nu) = match zone {
        Zone::Ap => (0.6, 2),
        Zone::NotAp => (-0.2, -2),
        Zone::Tradeoff => (0.1, 0),
        Zone::Uninformative => (0.2, -1),
    };
    let padding = PaddingConfig::fixed(0.5, 0);
    QuadrantPoint { neighbor_id: format!("n{i}"), rel_gap: gap, net_utility: nu, zone: classify_zone(gap, nu, &padding) }
}

fn veto_oracle(c: &ZoneCounts) -> OutlierVerdict {
    if c.not_ap >= 1 {
        OutlierVerdict::No
    } else if c.ap >= 1 {
        OutlierVerdict::Yes
    } else {
        OutlierVerdict::Unsure
    }
}

fn voting_oracle(c: &ZoneCounts) -> OutlierVerdict {
    if c.ap >= 1 && c.ap >= c.not_ap {
        OutlierVerdict::Yes
    } else if c.not_ap >= 1 {
        OutlierVerdict::No
    } else {
        OutlierVerdict::Unsure
    }
}

// 4. Randomized zone multisets.
fn c4() -> Outcome {
    let zones = [Zone::Ap, Zone::NotAp, Zone::Tradeoff, Zone::Uninformative];
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut veto_yes = 0;
    for case in 0..1000 {
        let size = rng.random_range(0..=12usize);
        let picked: Vec<Zone> = (0..size).map(|_| zones[rng.random_range(0..4usize)]).collect();
        let points: Vec<QuadrantPoint> = picked.iter().enumerate().map(|(i, &z)| point_in(z, i)).collect();
        ensure(points.iter().zip(&picked).all(|(p, z)| p.zone == *z), || format!("case {case}: fixture point misclassified"))?;
        let veto = decide_veto(&points);
        let voting = decide_voting(&points);
        if veto.verdict == OutlierVerdict::Yes {
            veto_yes += 1;
            ensure(voting.verdict == OutlierVerdict::Yes, || format!("case {case}: veto Yes but voting {:?} on {picked:?}", voting.verdict))?;
        }
        for d in [veto, voting] {
            let stored: Decision = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
            let expect = match stored.strategy {
                Strategy::Veto => veto_oracle(&stored.evidence),
                Strategy::Voting => voting_oracle(&stored.evidence),
            };
            ensure(stored.verdict == expect && stored.is_consistent(), || format!("case {case}: {:?} not recomputable from {:?}", stored.verdict, stored.evidence))?;
            ensure(stored.evidence == ZoneCounts::tally(&picked), || format!("case {case}: evidence counts wrong"))?;
        }
    }
    Ok(format!("1000 multisets, {veto_yes} veto-Yes all voting-Yes, verdicts recomputed from stored counts"))
}

fn all_ids(catalog: &Catalog) -> Vec<String> {
    catalog.products().iter().map(|p| p.id.clone()).collect()
}

fn yes_ids(items: &[BatchItem]) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for item in items {
        let r = item.record().ok_or_else(|| format!("{} failed", item.target_id()))?;
        if r.verdict() == OutlierVerdict::Yes {
            out.push(r.target_id.clone());
        }
    }
    Ok(out)
}

fn run_batch(scale: f64, padding: f64, strategy: Strategy) -> Result<Vec<BatchItem>, String> {
    let catalog = Catalog::new(synthetic_products(scale)).map_err(|e| e.to_string())?;
    let p = Pipeline::new(mock_config(padding, strategy)).map_err(|e| e.to_string())?;
    Ok(p.assess_batch(&catalog, &all_ids(&catalog)))
}

// 5. Padding monotonicity on the 60-product catalog.
fn c5() -> Outcome {
    let mut report = Vec::new();
    for strategy in [Strategy::Veto, Strategy::Voting] {
        let mut counts = Vec::new();
        for padding in [0.3, 0.5, 0.75] {
            counts.push(yes_ids(&run_batch(1.0, padding, strategy)?)?.len());
        }
        ensure(counts.windows(2).all(|w| w[0] >= w[1]), || format!("{}: counts {counts:?} increase", strategy.as_str()))?;
        ensure(counts == EXPECTED_PLANTED_YES, || format!("{}: counts {counts:?}, hand trace {EXPECTED_PLANTED_YES:?}", strategy.as_str()))?;
        report.push(format!("{} {counts:?}", strategy.as_str()));
    }
    Ok(format!("Yes counts at padding 0.30/0.50/0.75: {}", report.join(", ")))
}

// Fixture premise for criterion 6.
fn check_premise() -> Result<(), String> {
    let products = synthetic_products(1.0);
    let spec = |p: &price_audit_core::Product| p.attributes["capacity"].parse::<f64>().unwrap();
    for id in planted_ids() {
        let t = products.iter().find(|p| p.id == id).unwrap();
        let cheap_better = products
            .iter()
            .filter(|n| n.id != t.id && n.category == t.category && spec(n) >= spec(t) && t.price >= 2.0 * n.price)
            .count();
        ensure(cheap_better >= 3, || format!("{id}: only {cheap_better} qualifying neighbors"))?;
    }
    Ok(())
}

// 6. Planted-outlier recovery.
fn c6() -> Outcome {
    check_premise()?;
    let yes = yes_ids(&run_batch(1.0, 0.30, Strategy::Veto)?)?;
    let planted = planted_ids();
    let missed: Vec<_> = planted.iter().filter(|id| !yes.contains(id)).collect();
    let false_pos: Vec<_> = yes.iter().filter(|id| !planted.contains(id)).collect();
    ensure(missed.is_empty(), || format!("planted not flagged: {missed:?}"))?;
    ensure(false_pos.len() <= 1, || format!("normal targets flagged: {false_pos:?}"))?;
    Ok(format!("10/10 planted flagged, {} of 50 normal flagged", false_pos.len()))
}

// 7. Byte-identical traces across runs.
fn c7() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut files = Vec::new();
    for run in 0..2 {
        let path = dir.path().join(format!("run{run}.jsonl"));
        std::fs::write(&path, to_jsonl(&run_batch(1.0, 0.30, Strategy::Veto)?)).map_err(|e| e.to_string())?;
        files.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(files[0] == files[1], || "trace files differ".into())?;
    Ok(format!("2 runs, {} bytes each, identical", files[0].len()))
}

// 8. Worked mouse examples, both through the rules and the full pipeline.
fn c8() -> Outcome {
    let pad50 = PaddingConfig::fixed(0.5, 0);
    let veto_pts = [QuadrantPoint::new("mouse-180", 150.0, 180.0, -2, &pad50)];
    ensure(decide(Strategy::Veto, &veto_pts).verdict == OutlierVerdict::No, || "rule veto example not No".into())?;
    let pad30 = PaddingConfig::fixed(0.3, 0);
    let mut vote_pts: Vec<_> = (0..3).map(|i| QuadrantPoint::new(format!("b{i}"), 150.0, 100.0, 2, &pad30)).collect();
    vote_pts.extend((0..2).map(|i| QuadrantPoint::new(format!("w{i}"), 150.0, 200.0, -2, &pad30)));
    ensure(decide(Strategy::Voting, &vote_pts).verdict == OutlierVerdict::Yes, || "rule voting example not Yes".into())?;

    let veto_cat = Catalog::new(mouse_veto_products()).map_err(|e| e.to_string())?;
    let r = Pipeline::new(mock_config(0.5, Strategy::Veto)).unwrap().assess_target(&veto_cat, "mouse-150").map_err(|e| e.to_string())?;
    ensure(r.verdict() == OutlierVerdict::No, || format!("pipeline veto example gave {:?}", r.verdict()))?;
    let vote_cat = Catalog::new(mouse_voting_products()).map_err(|e| e.to_string())?;
    let r = Pipeline::new(mock_config(0.3, Strategy::Voting)).unwrap().assess_target(&vote_cat, "mouse-150").map_err(|e| e.to_string())?;
    ensure(r.verdict() == OutlierVerdict::Yes, || format!("pipeline voting example gave {:?}", r.verdict()))?;
    Ok("$150 vs $180 veto -> No; 3x$100 / 2x$200 voting at 0.30 -> Yes (rules and pipeline)".into())
}

// 9. One-sided identity.
fn c9() -> Outcome {
    let verdicts = [OutlierVerdict::Yes, OutlierVerdict::No, OutlierVerdict::Unsure];
    let mut rng = StdRng::seed_from_u64(SEED + 9);
    for case in 0..100 {
        let n = rng.random_range(1..=500usize);
        let preds: Vec<_> = (0..n).map(|_| verdicts[rng.random_range(0..3usize)]).collect();
        let labels = vec![Label::NotOutlier; n];
        let a = agreement_rate(&preds, &labels).map_err(|e| e.to_string())?;
        let o = outlier_rate(&preds).map_err(|e| e.to_string())?;
        ensure(a + o == 1.0, || format!("case {case}: {a} + {o} != 1"))?;
    }
    Ok("100 vectors, agreement + outlier_rate == 1 exactly".into())
}

// 10. Scale invariance of every verdict.
fn c10() -> Outcome {
    let base = run_batch(1.0, 0.30, Strategy::Veto)?;
    let scaled = run_batch(100.0, 0.30, Strategy::Veto)?;
    let mut changed = Vec::new();
    for (a, b) in base.iter().zip(&scaled) {
        let (a, b) = (a.record().ok_or("failed record")?, b.record().ok_or("failed record")?);
        if a.verdict() != b.verdict() {
            changed.push(a.target_id.clone());
        }
    }
    ensure(changed.is_empty(), || format!("verdicts changed: {changed:?}"))?;
    Ok(format!("{} verdicts unchanged at 100x prices", base.len()))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome, Duration); 10] = [
        (1, "F1 arithmetic on reported precision/recall", c1, Duration::from_secs(1)),
        (2, "cost model reference rows", c2, Duration::from_secs(1)),
        (3, "zone classification matches brute-force oracle", c3, Duration::from_secs(5)),
        (4, "strategy properties on random zone multisets", c4, Duration::from_secs(5)),
        (5, "padding monotonicity on 60-product catalog", c5, Duration::from_secs(30)),
        (6, "planted-outlier recovery", c6, Duration::from_secs(60)),
        (7, "deterministic trace files", c7, Duration::from_secs(60)),
        (8, "worked mouse examples", c8, Duration::from_secs(5)),
        (9, "one-sided agreement identity", c9, Duration::from_secs(5)),
        (10, "price scale invariance", c10, Duration::from_secs(60)),
    ];
    let mut failed = 0;
    for (n, name, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {n:>2}: {name} | {detail} | {} ms", elapsed.as_millis()),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {n:>2}: {name} | {detail} | {} ms", elapsed.as_millis());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
