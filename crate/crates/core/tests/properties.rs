use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use fuzzloc::dedup::{merge_group, Matcher, Role, Strategy as Grouping, SubscriberRecord};
use fuzzloc::fuzzy::{
    clip, defuzzify_centroid, Degree, DiscreteFuzzySet, FuzzySet, LinguisticVariable,
    MembershipFunction, Universe,
};
use fuzzloc::knowledge::{
    infer, infer_in_order, load_kb, load_manifest, parse_rule, Atom, Connective, InferError,
    KnowledgeBase, Rule, RuleKind,
};
use fuzzloc::location::{build_network, select_cell, signal_strength, CellConfig, NetworkConfig, Position};
use fuzzloc::query::{execute, parse_query, CmpOp, Expr, FuzzificationCatalog, Literal, Projection, Query};
use fuzzloc::store::SubscriberStore;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

// fuzzy core

fn ordered(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, n).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

fn any_mf() -> impl Strategy<Value = MembershipFunction> {
    prop_oneof![
        ordered(3).prop_map(|p| MembershipFunction::triangular(p[0], p[1], p[2]).unwrap()),
        ordered(4).prop_map(|p| MembershipFunction::trapezoidal(p[0], p[1], p[2], p[3]).unwrap()),
    ]
}

fn degree() -> impl Strategy<Value = Degree> {
    (0.0..=1.0f64).prop_map(|v| Degree::new(v).unwrap())
}

proptest! {
    #[test]
    fn membership_in_unit_interval(mf in any_mf(), x in -150.0..150.0f64) {
        let m = mf.membership(x).value();
        prop_assert!((0.0..=1.0).contains(&m));
    }

    #[test]
    fn triangular_flanks(p in ordered(3), s in 0.0..=1.0f64, t in 0.0..=1.0f64) {
        let mf = MembershipFunction::triangular(p[0], p[1], p[2]).unwrap();
        let (lo, hi) = (s.min(t), s.max(t));
        let up = |f: f64| p[0] + f * (p[1] - p[0]);
        let down = |f: f64| p[1] + f * (p[2] - p[1]);
        prop_assert!(mf.membership(up(lo)).value() <= mf.membership(up(hi)).value());
        prop_assert!(mf.membership(down(lo)).value() >= mf.membership(down(hi)).value());
    }

    #[test]
    fn connective_laws(a in degree(), b in degree(), c in degree()) {
        prop_assert_eq!(a.and(b), b.and(a));
        prop_assert_eq!(a.or(b), b.or(a));
        prop_assert_eq!(a.and(b).and(c), a.and(b.and(c)));
        prop_assert_eq!(a.or(b).or(c), a.or(b.or(c)));
        prop_assert_eq!(a.and(a), a);
        prop_assert_eq!(a.or(a), a);
        prop_assert!(a.and(b).value() <= a.value().min(b.value()));
        prop_assert!(a.or(b).value() >= a.value().max(b.value()));
    }

    #[test]
    fn centroid_within_support(points in prop::collection::vec(0.0..=1.0f64, 2..60)) {
        let pairs: Vec<(f64, f64)> = points.iter().enumerate().map(|(i, &m)| (i as f64, m)).collect();
        let set = DiscreteFuzzySet::from_pairs(&pairs).unwrap();
        match defuzzify_centroid(&set) {
            Ok(c) => {
                let lo = pairs.iter().find(|p| p.1 > 0.0).unwrap().0;
                let hi = pairs.iter().rev().find(|p| p.1 > 0.0).unwrap().0;
                prop_assert!(lo <= c && c <= hi);
            }
            Err(_) => prop_assert!(points.iter().all(|&m| m == 0.0)),
        }
    }

    #[test]
    fn symmetric_peak_recovered(center in 10.0..90.0f64, half in 1.0..10.0f64) {
        let mf = MembershipFunction::triangular(center - half, center, center + half).unwrap();
        let set = clip(&FuzzySet::new("t", mf), Universe::new(0.0, 100.0).unwrap(), Degree::ONE, 1001).unwrap();
        // grid spacing is 0.1
        prop_assert!((defuzzify_centroid(&set).unwrap() - center).abs() <= 0.1);
    }
}

// knowledge base

fn metric_kb() -> KnowledgeBase {
    load_kb(&data("kb/schedule_risk/manifest.json")).unwrap()
}

const METRIC_INPUTS: [&str; 6] = [
    "Volatility_index",
    "Requirements_quality",
    "Manpower",
    "Design_approaches",
    "Effort_deviation",
    "Customer_involvement",
];

fn metric_inputs() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::array::uniform6(0.0..=10.0f64).prop_map(|v| {
        METRIC_INPUTS.iter().zip(v).map(|(k, x)| (k.to_string(), x)).collect()
    })
}

fn ident() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z_][A-Za-z0-9_]{0,8}",
        "[a-z]{1,5} [a-z]{1,5}",
        Just("then".to_string()),
        Just("a\"b".to_string()),
        Just("9x".to_string()),
    ]
}

fn atom() -> impl Strategy<Value = Atom> {
    (ident(), ident()).prop_map(|(v, t)| Atom::new(v, t))
}

fn rule() -> impl Strategy<Value = Rule> {
    (
        prop_oneof![Just(String::new()), ident()],
        atom(),
        prop::collection::vec((prop::bool::ANY, atom()), 0..4),
        atom(),
    )
        .prop_map(|(id, first, rest, consequent)| Rule {
            id,
            first,
            rest: rest
                .into_iter()
                .map(|(and, a)| (if and { Connective::And } else { Connective::Or }, a))
                .collect(),
            consequent,
            kind: RuleKind::Ground,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn infer_is_deterministic(x in metric_inputs()) {
        let kb = metric_kb();
        prop_assert_eq!(infer(&kb, &x).unwrap(), infer(&kb, &x).unwrap());
    }

    #[test]
    fn rule_one_monotone(x in metric_inputs(), v1 in 5.0..=10.0f64, v2 in 5.0..=10.0f64) {
        let kb = metric_kb();
        let mut lo = x.clone();
        let mut hi = x;
        lo.insert("Volatility_index".into(), v1.min(v2));
        hi.insert("Volatility_index".into(), v1.max(v2));
        if let (Some(a), Some(b)) = (infer(&kb, &lo).unwrap().score, infer(&kb, &hi).unwrap().score) {
            prop_assert!(a <= b + 1e-9, "score fell from {} to {}", a, b);
        }
    }

    #[test]
    fn dead_rule_changes_nothing(x in metric_inputs()) {
        let mut draft = load_manifest(&data("kb/schedule_risk/manifest.json")).unwrap();
        // LOW and HIGH have disjoint supports apart from x = 5, where both are 0
        draft.rules.push(parse_rule(
            "dead: IF Manpower IS LOW AND Manpower IS HIGH THEN Schedule_Risk IS LOW",
        ).unwrap());
        let with_dead = KnowledgeBase::build(draft).unwrap();
        prop_assert_eq!(infer(&with_dead, &x).unwrap(), infer(&metric_kb(), &x).unwrap());
    }

    #[test]
    fn any_topological_order_agrees(x in metric_inputs(), m in 0.0..=10.0f64, p in 0.0..=10.0f64) {
        let kb = metric_kb();
        let base = infer(&kb, &x).unwrap();
        for order in [["Schedule_Risk", "Product_Service"], ["Product_Service", "Schedule_Risk"]] {
            prop_assert_eq!(&infer_in_order(&kb, &x, &order).unwrap(), &base);
        }
        let meta = load_kb(&data("kb/project_risk/manifest.json")).unwrap();
        let y = BTreeMap::from([
            ("Module_size".to_string(), m),
            ("Productivity".to_string(), p),
            ("Effort_deviation".to_string(), x["Effort_deviation"]),
        ]);
        let r = infer(&meta, &y).unwrap();
        prop_assert_eq!(&infer_in_order(&meta, &y, &["Process_Strain", "Project_Risk"]).unwrap(), &r);
        let bad = infer_in_order(&meta, &y, &["Project_Risk", "Process_Strain"]);
        prop_assert!(matches!(bad, Err(InferError::BadOrder(_))));
    }

    #[test]
    fn rule_round_trip(r in rule()) {
        let text = r.to_string();
        let back = parse_rule(&text).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(back.to_string(), text);
    }
}

// fuzzy query

fn bill_var() -> LinguisticVariable {
    serde_json::from_str(&std::fs::read_to_string(data("catalog/bill_payment.json")).unwrap()).unwrap()
}

fn store() -> impl Strategy<Value = SubscriberStore> {
    prop::collection::vec((prop::option::of(0u32..=10_000), 1u32..=4), 0..40).prop_map(|rows| {
        SubscriberStore::new(
            "SUBSCRIBER_PROFILE",
            vec!["subscriber_name".into(), "bill_payment".into(), "La".into()],
            rows.into_iter()
                .enumerate()
                .map(|(i, (bill, la))| {
                    vec![format!("s{i}"), bill.map(|b| b.to_string()).unwrap_or_default(), la.to_string()]
                })
                .collect(),
        )
        .unwrap()
    })
}

fn predicate() -> impl Strategy<Value = Expr> {
    let ops = prop::sample::select(vec![CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge]);
    prop_oneof![
        prop::sample::select(vec!["HIGH", "LOW"]).prop_map(|t| Expr::Is {
            column: "bill_payment".into(),
            term: t.into(),
        }),
        (ops.clone(), 0u32..=10_000).prop_map(|(op, n)| Expr::Compare {
            column: "bill_payment".into(),
            op,
            literal: Literal::Number(n.into()),
        }),
        (ops, 1u32..=4).prop_map(|(op, n)| Expr::Compare {
            column: "La".into(),
            op,
            literal: Literal::Number(n.into()),
        }),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    predicate().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Or(Box::new(a), Box::new(b))),
        ]
    })
}

fn query(filter: Expr) -> Query {
    Query {
        projection: Projection::All,
        table: "SUBSCRIBER_PROFILE".into(),
        filter: Some(filter),
    }
}

fn catalog(s: &SubscriberStore, materialize: bool) -> FuzzificationCatalog {
    let mut c = FuzzificationCatalog::new();
    c.fuzzify_column(s, "bill_payment", bill_var(), materialize).unwrap();
    c
}

fn degrees(q: &Query, s: &SubscriberStore, c: &FuzzificationCatalog) -> Vec<(usize, f64)> {
    execute(q, s, c, 0.0).unwrap().rows.iter().map(|r| (r.row_id, r.degree)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn alpha_cuts_nest(s in store(), e in expr(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let c = catalog(&s, false);
        let q = query(e);
        let ids = |alpha: f64| -> Vec<usize> {
            execute(&q, &s, &c, alpha).unwrap().rows.iter().map(|r| r.row_id).collect()
        };
        let (lo, hi) = (ids(a.min(b)), ids(a.max(b)));
        prop_assert!(hi.iter().all(|r| lo.contains(r)));
        let zero = execute(&q, &s, &c, 0.0).unwrap();
        prop_assert!(zero.rows.iter().all(|r| r.degree > 0.0));
    }

    #[test]
    fn not_not_is_identity(s in store(), e in expr()) {
        let c = catalog(&s, false);
        let twice = query(Expr::Not(Box::new(Expr::Not(Box::new(e.clone())))));
        prop_assert_eq!(degrees(&twice, &s, &c), degrees(&query(e), &s, &c));
    }

    #[test]
    fn materialized_degrees_are_coherent(s in store(), e in expr()) {
        let cached = catalog(&s, true);
        prop_assert!(cached.incoherent(&s).is_empty());
        let q = query(e);
        prop_assert_eq!(degrees(&q, &s, &cached), degrees(&q, &s, &catalog(&s, false)));
    }

    #[test]
    fn results_ordered_by_degree_then_row(s in store(), e in expr()) {
        let rows = degrees(&query(e), &s, &catalog(&s, false));
        prop_assert!(rows.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
    }

    #[test]
    fn query_round_trip(e in expr(), all in prop::bool::ANY) {
        let mut q = query(e);
        if !all {
            q.projection = Projection::Columns(vec!["subscriber_name".into(), "La".into()]);
        }
        let back = parse_query(&q.to_string()).unwrap();
        prop_assert_eq!(back, q);
    }
}

// dedup

const NAMES: [&str; 12] = [
    "Robert Smith", "Bob Smith", "Rob Smyth", "Smith Robert", "Elizabeth Jones", "Liz Jones",
    "Elisabeth Jones", "William Brown", "Bill Brown", "Ravi Kumar", "Ravi Kumaar", "",
];
const EMAILS: [&str; 6] = ["rsmith@mail.com", "bob.smith@post.net", "liz@mail.com", "wbrown@mail.com", "ravi.k@mail.com", ""];
const PHONES: [&str; 5] = ["(408) 555-0101", "408-555-0101", "4085550199", "9848012345", ""];
const COMPANIES: [&str; 4] = ["Acme Inc.", "Acme Incorporated", "Globex Ltd", ""];

fn record_fields() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (0..NAMES.len(), 0..EMAILS.len(), 0..PHONES.len(), 0..COMPANIES.len())
}

fn make(id: usize, (n, e, p, c): (usize, usize, usize, usize)) -> SubscriberRecord {
    SubscriberRecord::new(id)
        .with(Role::Name, NAMES[n])
        .with(Role::Email, EMAILS[e])
        .with(Role::Phone, PHONES[p])
        .with(Role::Company, COMPANIES[c])
}

fn corpus(max: usize) -> impl Strategy<Value = Vec<SubscriberRecord>> {
    prop::collection::vec(record_fields(), 0..max)
        .prop_map(|v| v.into_iter().enumerate().map(|(i, f)| make(i, f)).collect())
}

fn members(records: &[SubscriberRecord], t: f64, how: Grouping) -> Vec<Vec<usize>> {
    Matcher::default()
        .find_duplicate_groups_with(records, t, how)
        .unwrap()
        .into_iter()
        .map(|g| g.members)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn similarity_symmetric_and_reflexive(a in record_fields(), b in record_fields()) {
        let m = Matcher::default();
        let (ra, rb) = (make(0, a), make(1, b));
        match (m.compare(&ra, &rb), m.compare(&rb, &ra)) {
            (Ok(x), Ok(y)) => {
                prop_assert_eq!(x.combined, y.combined);
                prop_assert!((0.0..=1.0).contains(&x.combined));
            }
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
        if !ra.is_blank() {
            prop_assert_eq!(m.compare(&ra, &ra).unwrap().combined, 1.0);
        }
    }

    #[test]
    fn raising_threshold_only_splits(records in corpus(30), t1 in 0.5..1.0f64, t2 in 0.5..1.0f64) {
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let coarse = members(&records, lo, Grouping::BruteForce);
        for g in members(&records, hi, Grouping::BruteForce) {
            prop_assert!(coarse.iter().any(|c| g.iter().all(|m| c.contains(m))));
        }
    }

    #[test]
    fn blocking_matches_brute_force(records in corpus(120), t in 0.76..1.0f64) {
        prop_assert_eq!(
            members(&records, t, Grouping::Blocking),
            members(&records, t, Grouping::BruteForce)
        );
    }

    #[test]
    fn merge_draws_from_sources(records in corpus(30)) {
        let groups = Matcher::default().find_duplicate_groups(&records, 0.8).unwrap();
        for g in &groups {
            let merged = merge_group(g, &records).unwrap();
            for (field, value) in merged.merged.fields() {
                if value.is_empty() {
                    continue;
                }
                prop_assert!(g.members.iter().any(|&id| records[id].field(&field) == Some(value)));
            }
        }
    }
}

// location

fn cells() -> impl Strategy<Value = Vec<CellConfig>> {
    prop::collection::vec((1u32..4, -5.0..5.0f64, -5.0..5.0f64, 20.0..50.0f64), 1..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (lac, x, y, tx))| CellConfig {
                mnc: 1,
                lac,
                cid: i as u32 + 1,
                x,
                y,
                tx_power: tx,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn selected_cell_is_strongest(cells in cells(), x in -8.0..8.0f64, y in -8.0..8.0f64) {
        let net = build_network(&NetworkConfig {
            cells,
            drop_threshold_dbm: -110.0,
            pathloss: Default::default(),
            tx_power_bounds: [0.0, 60.0],
        })
        .unwrap();
        let pos = Position::new(x, y);
        let (id, rx) = select_cell(pos, &net);
        for c in net.cells() {
            let other = signal_strength(c, pos, net.pathloss());
            prop_assert!(rx >= other, "{} beats chosen {}", c.id, id);
        }
    }
}
