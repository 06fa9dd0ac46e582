//! IF-THEN knowledge bases and Mamdani risk inference.
//!
//! A knowledge base is assembled from a JSON manifest that lists variable
//! definition files, rule files and the risk classification thresholds:
//!
//! ```json
//! { "inputs": ["inputs.json"], "outputs": ["risk.json"],
//!   "rules": ["metric.rules"], "risk_variable": "Schedule_Risk",
//!   "thresholds": [33, 66], "grid": 101 }
//! ```
//!
//! Paths are resolved relative to the manifest.

mod engine;
mod rule;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

pub use engine::{
    classify, evaluate_antecedent, infer, infer_in_order, validate_kb, DegreeTable, Diagnostic,
    DiagnosticKind, InferError, KbDraft, KbError, KnowledgeBase, OutputActivation, RiskAssessment,
    RiskLevel, TermActivation, Thresholds, DEFAULT_THRESHOLDS, NO_FIRE_LEVEL,
};
pub use rule::{
    parse_rule, parse_rule_file, quote_ident, Atom, Connective, Rule, RuleKind, RuleParseError,
};

use crate::fuzzy::{LinguisticVariable, DEFAULT_GRID};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbManifest {
    #[serde(default)]
    pub name: Option<String>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub rules: Vec<PathBuf>,
    #[serde(default)]
    pub risk_variable: Option<String>,
    #[serde(default)]
    pub thresholds: Option<[f64; 2]>,
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Parse(#[from] RuleParseError),
    #[error("{}: {source}", path.display())]
    Invalid { path: PathBuf, source: KbError },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VariableFile {
    One(LinguisticVariable),
    Many(Vec<LinguisticVariable>),
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a file holding one linguistic variable or a JSON array of them.
pub fn load_variables(path: &Path) -> Result<Vec<LinguisticVariable>, LoadError> {
    let text = read(path)?;
    // Parse twice so a malformed single object reports its own error
    // rather than the untagged-enum catch-all.
    let parsed: VariableFile = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(_) => {
            let source = if text.trim_start().starts_with('[') {
                serde_json::from_str::<Vec<LinguisticVariable>>(&text).unwrap_err()
            } else {
                serde_json::from_str::<LinguisticVariable>(&text).unwrap_err()
            };
            return Err(LoadError::Json {
                path: path.to_path_buf(),
                source,
            });
        }
    };
    Ok(match parsed {
        VariableFile::One(v) => vec![v],
        VariableFile::Many(vs) => vs,
    })
}

pub fn load_manifest(path: &Path) -> Result<KbDraft, LoadError> {
    let manifest: KbManifest =
        serde_json::from_str(&read(path)?).map_err(|source| LoadError::Json {
            path: path.to_path_buf(),
            source,
        })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut inputs = Vec::new();
    for p in &manifest.inputs {
        inputs.extend(load_variables(&base.join(p))?);
    }
    let mut outputs = Vec::new();
    for p in &manifest.outputs {
        outputs.extend(load_variables(&base.join(p))?);
    }
    let mut rules = Vec::new();
    for p in &manifest.rules {
        let full = base.join(p);
        let source = p
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string());
        rules.extend(parse_rule_file(&read(&full)?, &source)?);
    }
    let mut draft = KbDraft::new(inputs, outputs, rules);
    draft.risk_variable = manifest.risk_variable;
    if let Some([low, high]) = manifest.thresholds {
        draft.thresholds = Thresholds { low, high };
    }
    draft.grid = manifest.grid.unwrap_or(DEFAULT_GRID);
    Ok(draft)
}

/// Loads and validates a knowledge base from its manifest.
pub fn load_kb(path: &Path) -> Result<KnowledgeBase, LoadError> {
    let draft = load_manifest(path)?;
    KnowledgeBase::build(draft).map_err(|source| LoadError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::fuzzy::{Degree, FuzzySet, MembershipFunction, Universe};

    fn var(name: &str, lo: f64, hi: f64, terms: &[(&str, [f64; 4])]) -> LinguisticVariable {
        LinguisticVariable::new(
            name,
            Universe::new(lo, hi).unwrap(),
            terms
                .iter()
                .map(|(l, p)| {
                    FuzzySet::new(
                        *l,
                        MembershipFunction::trapezoidal(p[0], p[1], p[2], p[3]).unwrap(),
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    fn level(name: &str) -> LinguisticVariable {
        var(
            name,
            0.0,
            10.0,
            &[("LOW", [0.0, 0.0, 2.0, 5.0]), ("HIGH", [5.0, 8.0, 10.0, 10.0])],
        )
    }

    fn risk(name: &str) -> LinguisticVariable {
        var(
            name,
            0.0,
            100.0,
            &[
                ("LOW", [0.0, 0.0, 20.0, 40.0]),
                ("STANDARD", [25.0, 50.0, 50.0, 75.0]),
                ("HIGH", [55.0, 75.0, 75.0, 90.0]),
                ("VERY_HIGH", [80.0, 92.0, 100.0, 100.0]),
            ],
        )
    }

    fn rules(lines: &[&str]) -> Vec<Rule> {
        parse_rule_file(&lines.join("\n"), "t").unwrap()
    }

    fn table(entries: &[(&str, &[(&str, f64)])]) -> DegreeTable {
        entries
            .iter()
            .map(|(v, ts)| {
                (
                    v.to_string(),
                    ts.iter()
                        .map(|(t, d)| (t.to_string(), Degree::new(*d).unwrap()))
                        .collect(),
                )
            })
            .collect()
    }

    fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn metric_draft() -> KbDraft {
        let mut d = KbDraft::new(
            [
                "Volatility_index",
                "Requirements_quality",
                "Manpower",
                "Design_approaches",
                "Effort_deviation",
                "Customer_involvement",
            ]
            .iter()
            .map(|n| level(n))
            .collect(),
            vec![risk("Schedule_Risk"), level("Product_Service")],
            rules(&[
                "IF Volatility_index IS HIGH AND Requirements_quality IS LOW THEN Schedule_Risk IS VERY_HIGH",
                "IF Manpower IS HIGH AND Design_approaches IS HIGH THEN Product_Service IS HIGH",
                "IF Effort_deviation IS HIGH AND Customer_involvement IS HIGH THEN Schedule_Risk IS VERY_HIGH",
            ]),
        );
        d.risk_variable = Some("Schedule_Risk".into());
        d
    }

    #[test]
    fn classify_boundaries() {
        let t = Thresholds {
            low: 33.0,
            high: 66.0,
        };
        assert_eq!(classify(33.0, t), RiskLevel::SR);
        assert_eq!(classify(-5.0, t), RiskLevel::LR);
        assert_eq!(classify(50.0, t), RiskLevel::SR);
        assert_eq!(classify(66.0, t), RiskLevel::HR);
        assert_eq!(classify(32.999, t), RiskLevel::LR);
    }

    #[test]
    fn antecedent_folds_left() {
        let r = &rules(&["IF a IS X AND b IS Y THEN o IS LOW"])[0];
        let t = table(&[("a", &[("X", 1.0)]), ("b", &[("Y", 1.0)])]);
        assert_eq!(evaluate_antecedent(r, &t).unwrap(), Degree::ONE);
        let t = table(&[("a", &[("X", 0.6)]), ("b", &[("Y", 0.3)])]);
        assert_eq!(evaluate_antecedent(r, &t).unwrap().value(), 0.3);

        let r = &rules(&["IF a IS X OR b IS Y AND c IS Z THEN o IS LOW"])[0];
        let t = table(&[("a", &[("X", 0.2)]), ("b", &[("Y", 0.9)]), ("c", &[("Z", 0.5)])]);
        assert_eq!(evaluate_antecedent(r, &t).unwrap().value(), 0.5);

        let t = table(&[("a", &[("X", 0.2)])]);
        assert_eq!(
            evaluate_antecedent(r, &t),
            Err(InferError::MissingVariable("b".into()))
        );
    }

    #[test]
    fn schedule_risk_validate() {
        assert_eq!(validate_kb(&metric_draft()), Ok(()));
    }

    #[test]
    fn unknown_variable_and_term_diagnostics() {
        let mut d = metric_draft();
        d.rules.extend(rules(&[
            "x1: IF Ghost IS HIGH THEN Schedule_Risk IS LOW",
            "x2: IF Manpower IS ENORMOUS THEN Schedule_Risk IS LOW",
            "x3: IF Manpower IS HIGH THEN Manpower IS LOW",
        ]));
        let diags = validate_kb(&d).unwrap_err();
        assert!(diags.iter().any(|g| g.rule_id.as_deref() == Some("x1")
            && g.kind == DiagnosticKind::UnknownVariable("Ghost".into())));
        assert!(diags.iter().any(|g| g.rule_id.as_deref() == Some("x2")
            && matches!(&g.kind, DiagnosticKind::UnknownTerm { term, .. } if term == "ENORMOUS")));
        assert!(diags.iter().any(|g| g.rule_id.as_deref() == Some("x3")
            && g.kind == DiagnosticKind::ConsequentNotOutput("Manpower".into())));
        assert!(diags[0].to_string().contains("unknown variable"));
    }

    #[test]
    fn meta_rule_cycle_is_reported() {
        let mut d = KbDraft::new(
            vec![level("a")],
            vec![level("A"), level("B")],
            rules(&[
                "g: IF a IS HIGH THEN A IS HIGH",
                "m1: IF A IS HIGH THEN B IS HIGH",
                "m2: IF B IS HIGH THEN A IS LOW",
            ]),
        );
        d.thresholds = Thresholds { low: 3.0, high: 6.0 };
        let diags = validate_kb(&d).unwrap_err();
        let cycle = diags
            .iter()
            .find_map(|g| match &g.kind {
                DiagnosticKind::Cycle(p) => Some(p.clone()),
                _ => None,
            })
            .expect("cycle diagnostic");
        assert_eq!(cycle.first(), cycle.last());
        assert!(cycle.contains(&"A".to_string()) && cycle.contains(&"B".to_string()));
        assert!(diags.iter().any(|g| g.to_string().contains("cycle")));
    }

    #[test]
    fn structural_diagnostics() {
        let mut d = metric_draft();
        d.outputs.push(level("Unused"));
        d.thresholds = Thresholds {
            low: 70.0,
            high: 40.0,
        };
        d.rules[1].id = d.rules[0].id.clone();
        let diags = validate_kb(&d).unwrap_err();
        let kinds: Vec<_> = diags.iter().map(|g| &g.kind).collect();
        assert!(kinds.contains(&&DiagnosticKind::UnusedOutput("Unused".into())));
        assert!(kinds.iter().any(|k| matches!(k, DiagnosticKind::BadThresholds(_))));
        assert!(kinds.contains(&&DiagnosticKind::DuplicateRuleId));

        let empty = KbDraft::new(vec![level("a")], vec![], vec![]);
        assert!(validate_kb(&empty)
            .unwrap_err()
            .iter()
            .any(|g| g.kind == DiagnosticKind::NoOutputVariables));
    }

    #[test]
    fn rule_one_full_membership_is_high_risk() {
        let kb = KnowledgeBase::build(metric_draft()).unwrap();
        let a = infer(
            &kb,
            &inputs(&[
                ("Volatility_index", 10.0),
                ("Requirements_quality", 0.0),
                ("Manpower", 0.0),
                ("Design_approaches", 0.0),
                ("Effort_deviation", 0.0),
                ("Customer_involvement", 0.0),
            ]),
        )
        .unwrap();
        assert_eq!(a.activation("Schedule_Risk", "VERY_HIGH"), Some(Degree::ONE));
        assert_eq!(a.level, RiskLevel::HR);
        assert!(!a.no_fire);
        assert_eq!(a.fired_rules, vec!["t:1".to_string()]);
        assert_eq!(a.outputs[1].score, None);
    }

    #[test]
    fn nothing_fires_gives_standard_with_flag() {
        let kb = KnowledgeBase::build(metric_draft()).unwrap();
        let a = infer(
            &kb,
            &inputs(&[
                ("Volatility_index", 0.0),
                ("Requirements_quality", 10.0),
                ("Manpower", 0.0),
                ("Design_approaches", 0.0),
                ("Effort_deviation", 0.0),
                ("Customer_involvement", 0.0),
            ]),
        )
        .unwrap();
        assert!(a.no_fire);
        assert_eq!(a.level, RiskLevel::SR);
        assert_eq!(a.score, None);
        assert!(a.fired_rules.is_empty());
    }

    #[test]
    fn missing_input_names_requirements() {
        let kb = KnowledgeBase::build(metric_draft()).unwrap();
        match infer(&kb, &inputs(&[("Volatility_index", 3.0)])) {
            Err(InferError::MissingInput { missing, required }) => {
                assert_eq!(missing, "Requirements_quality");
                assert_eq!(required.len(), 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clamped_inputs_are_reported() {
        let kb = KnowledgeBase::build(metric_draft()).unwrap();
        let a = infer(
            &kb,
            &inputs(&[
                ("Volatility_index", 42.0),
                ("Requirements_quality", -1.0),
                ("Manpower", 0.0),
                ("Design_approaches", 0.0),
                ("Effort_deviation", 0.0),
                ("Customer_involvement", 0.0),
            ]),
        )
        .unwrap();
        assert_eq!(a.clamped_inputs, vec!["Volatility_index", "Requirements_quality"]);
        assert_eq!(a.level, RiskLevel::HR);
    }

    fn chained_draft() -> KbDraft {
        let mut d = KbDraft::new(
            vec![level("a"), level("b")],
            vec![risk("Total"), level("Mid1"), level("Mid2")],
            rules(&[
                "IF a IS HIGH THEN Mid1 IS HIGH",
                "IF a IS LOW THEN Mid1 IS LOW",
                "IF b IS HIGH THEN Mid2 IS HIGH",
                "IF b IS LOW OR a IS LOW THEN Mid2 IS LOW",
                "IF Mid1 IS HIGH AND Mid2 IS HIGH THEN Total IS VERY_HIGH",
                "IF Mid1 IS LOW OR Mid2 IS LOW THEN Total IS LOW",
                "IF Mid1 IS HIGH AND Mid2 IS LOW THEN Total IS STANDARD",
            ]),
        );
        d.risk_variable = Some("Total".into());
        d
    }

    #[test]
    fn meta_rules_chain_through_outputs() {
        let kb = KnowledgeBase::build(chained_draft()).unwrap();
        assert_eq!(kb.evaluation_order(), vec!["Mid1", "Mid2", "Total"]);
        assert_eq!(kb.rules()[0].kind, RuleKind::Ground);
        assert_eq!(kb.rules()[4].kind, RuleKind::Meta);

        let a = infer(&kb, &inputs(&[("a", 10.0), ("b", 10.0)])).unwrap();
        assert_eq!(a.activation("Total", "VERY_HIGH"), Some(Degree::ONE));
        assert_eq!(a.level, RiskLevel::HR);

        let a = infer(&kb, &inputs(&[("a", 0.0), ("b", 10.0)])).unwrap();
        assert_eq!(a.activation("Total", "LOW"), Some(Degree::ONE));
        assert_eq!(a.level, RiskLevel::LR);
    }

    #[test]
    fn any_topological_order_gives_same_assessment() {
        let kb = KnowledgeBase::build(chained_draft()).unwrap();
        for (a, b) in [(6.5, 7.0), (3.0, 9.0), (5.5, 4.0), (9.0, 2.5)] {
            let x = inputs(&[("a", a), ("b", b)]);
            let base = infer(&kb, &x).unwrap();
            let alt = infer_in_order(&kb, &x, &["Mid2", "Mid1", "Total"]).unwrap();
            assert_eq!(base, alt);
        }
        assert!(matches!(
            infer_in_order(&kb, &inputs(&[("a", 1.0), ("b", 1.0)]), &["Total", "Mid1", "Mid2"]),
            Err(InferError::BadOrder(_))
        ));
    }

    #[test]
    fn manifest_loads_relative_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path();
        fs::write(
            p.join("in.json"),
            serde_json::to_string(&vec![level("a"), level("b")]).unwrap(),
        )
        .unwrap();
        fs::write(p.join("out.json"), serde_json::to_string(&risk("R")).unwrap()).unwrap();
        fs::write(
            p.join("r.rules"),
            "# demo\nIF a IS HIGH AND b IS HIGH THEN R IS VERY_HIGH\nIF a IS LOW THEN R IS LOW\n",
        )
        .unwrap();
        fs::write(
            p.join("kb.json"),
            r#"{"inputs":["in.json"],"outputs":["out.json"],"rules":["r.rules"],"thresholds":[30,70]}"#,
        )
        .unwrap();
        let kb = load_kb(&p.join("kb.json")).unwrap();
        assert_eq!(kb.rules().len(), 2);
        assert_eq!(kb.rules()[1].id, "r.rules:3");
        assert_eq!(kb.thresholds(), Thresholds { low: 30.0, high: 70.0 });

        fs::write(p.join("bad.rules"), "IF a IS\n").unwrap();
        fs::write(
            p.join("bad.json"),
            r#"{"inputs":["in.json"],"outputs":["out.json"],"rules":["bad.rules"]}"#,
        )
        .unwrap();
        assert!(matches!(load_kb(&p.join("bad.json")), Err(LoadError::Parse(_))));
        assert!(matches!(load_kb(&p.join("nope.json")), Err(LoadError::Io { .. })));
    }
}
