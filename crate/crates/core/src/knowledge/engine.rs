use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::rule::{Connective, Rule, RuleKind};
use crate::fuzzy::{
    and_degree, or_degree, Degree, DiscreteFuzzySet, FuzzyError, LinguisticVariable,
    DEFAULT_GRID,
};

/// Default risk classification thresholds on a `[0, 100]` risk universe.
pub const DEFAULT_THRESHOLDS: Thresholds = Thresholds {
    low: 33.0,
    high: 66.0,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RiskLevel {
    LR,
    SR,
    HR,
}

impl RiskLevel {
    pub fn description(self) -> &'static str {
        match self {
            RiskLevel::LR => "low risk",
            RiskLevel::SR => "standard risk",
            RiskLevel::HR => "high risk",
        }
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// `score < low` → LR, `low <= score < high` → SR, otherwise HR.
pub fn classify(score: f64, thresholds: Thresholds) -> RiskLevel {
    if score < thresholds.low {
        RiskLevel::LR
    } else if score < thresholds.high {
        RiskLevel::SR
    } else {
        RiskLevel::HR
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticKind {
    UnknownVariable(String),
    UnknownTerm { variable: String, term: String },
    ConsequentNotOutput(String),
    DuplicateVariable(String),
    DuplicateRuleId,
    MissingRuleId,
    NoOutputVariables,
    UnusedOutput(String),
    Cycle(Vec<String>),
    UnknownRiskVariable(String),
    BadThresholds(Thresholds),
    GridTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub rule_id: Option<String>,
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(id) = &self.rule_id {
            write!(f, "rule {id}: ")?;
        }
        match &self.kind {
            DiagnosticKind::UnknownVariable(v) => write!(f, "unknown variable {v:?}"),
            DiagnosticKind::UnknownTerm { variable, term } => {
                write!(f, "unknown term {term:?} for variable {variable:?}")
            }
            DiagnosticKind::ConsequentNotOutput(v) => {
                write!(f, "consequent variable {v:?} is not an output variable")
            }
            DiagnosticKind::DuplicateVariable(v) => write!(f, "variable {v:?} declared twice"),
            DiagnosticKind::DuplicateRuleId => write!(f, "duplicate rule id"),
            DiagnosticKind::MissingRuleId => write!(f, "rule has no id"),
            DiagnosticKind::NoOutputVariables => write!(f, "no output variable declared"),
            DiagnosticKind::UnusedOutput(v) => {
                write!(f, "output variable {v:?} is never concluded by a rule")
            }
            DiagnosticKind::Cycle(path) => {
                write!(f, "cycle among meta-rules: {}", path.join(" -> "))
            }
            DiagnosticKind::UnknownRiskVariable(v) => {
                write!(f, "risk variable {v:?} is not an output variable")
            }
            DiagnosticKind::BadThresholds(t) => write!(
                f,
                "thresholds ({}, {}) must be increasing and inside the risk universe",
                t.low, t.high
            ),
            DiagnosticKind::GridTooSmall(n) => write!(f, "defuzzification grid {n} < 2"),
        }
    }
}

/// Unvalidated knowledge base contents, as assembled from files.
#[derive(Debug, Clone)]
pub struct KbDraft {
    pub inputs: Vec<LinguisticVariable>,
    pub outputs: Vec<LinguisticVariable>,
    pub rules: Vec<Rule>,
    /// Output variable whose centroid is classified; defaults to the first output.
    pub risk_variable: Option<String>,
    pub thresholds: Thresholds,
    pub grid: usize,
}

impl KbDraft {
    pub fn new(
        inputs: Vec<LinguisticVariable>,
        outputs: Vec<LinguisticVariable>,
        rules: Vec<Rule>,
    ) -> Self {
        Self {
            inputs,
            outputs,
            rules,
            risk_variable: None,
            thresholds: DEFAULT_THRESHOLDS,
            grid: DEFAULT_GRID,
        }
    }

    fn input(&self, name: &str) -> Option<&LinguisticVariable> {
        self.inputs.iter().find(|v| v.name() == name)
    }

    fn output(&self, name: &str) -> Option<&LinguisticVariable> {
        self.outputs.iter().find(|v| v.name() == name)
    }
}

/// Checks term resolution, output usage, thresholds and meta-rule
/// acyclicity. Never fails; problems come back as diagnostics.
pub fn validate_kb(draft: &KbDraft) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut push = |rule_id: Option<&str>, kind| {
        diags.push(Diagnostic {
            rule_id: rule_id.map(str::to_string),
            kind,
        })
    };

    if draft.outputs.is_empty() {
        push(None, DiagnosticKind::NoOutputVariables);
    }
    let mut seen = BTreeSet::new();
    for v in draft.inputs.iter().chain(&draft.outputs) {
        if !seen.insert(v.name()) {
            push(None, DiagnosticKind::DuplicateVariable(v.name().to_string()));
        }
    }
    let mut ids = BTreeSet::new();
    for rule in &draft.rules {
        let id = Some(rule.id.as_str());
        if rule.id.is_empty() {
            push(None, DiagnosticKind::MissingRuleId);
        } else if !ids.insert(rule.id.as_str()) {
            push(id, DiagnosticKind::DuplicateRuleId);
        }
        for atom in rule.atoms() {
            match draft.input(&atom.variable).or(draft.output(&atom.variable)) {
                None => push(id, DiagnosticKind::UnknownVariable(atom.variable.clone())),
                Some(var) if var.term(&atom.term).is_none() => push(
                    id,
                    DiagnosticKind::UnknownTerm {
                        variable: atom.variable.clone(),
                        term: atom.term.clone(),
                    },
                ),
                Some(_) => {}
            }
        }
        match draft.output(&rule.consequent.variable) {
            None if draft.input(&rule.consequent.variable).is_some() => push(
                id,
                DiagnosticKind::ConsequentNotOutput(rule.consequent.variable.clone()),
            ),
            None => push(
                id,
                DiagnosticKind::UnknownVariable(rule.consequent.variable.clone()),
            ),
            Some(var) if var.term(&rule.consequent.term).is_none() => push(
                id,
                DiagnosticKind::UnknownTerm {
                    variable: rule.consequent.variable.clone(),
                    term: rule.consequent.term.clone(),
                },
            ),
            Some(_) => {}
        }
    }
    for out in &draft.outputs {
        if !draft
            .rules
            .iter()
            .any(|r| r.consequent.variable == out.name())
        {
            push(None, DiagnosticKind::UnusedOutput(out.name().to_string()));
        }
    }

    let risk = draft
        .risk_variable
        .clone()
        .or_else(|| draft.outputs.first().map(|v| v.name().to_string()));
    if let Some(risk) = risk {
        match draft.output(&risk) {
            None => push(None, DiagnosticKind::UnknownRiskVariable(risk)),
            Some(var) => {
                let t = draft.thresholds;
                let u = var.universe();
                if !(t.low < t.high && t.low >= u.lo() && t.high <= u.hi()) {
                    push(None, DiagnosticKind::BadThresholds(t));
                }
            }
        }
    }
    if draft.grid < 2 {
        push(None, DiagnosticKind::GridTooSmall(draft.grid));
    }

    if let Err((rule_id, path)) = output_order(draft) {
        push(Some(&rule_id), DiagnosticKind::Cycle(path));
    }

    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// Dependency edges between output variables: `reads -> concluded`.
fn output_edges(draft: &KbDraft) -> Vec<(usize, usize, &str)> {
    let index = |name: &str| draft.outputs.iter().position(|v| v.name() == name);
    let mut edges = Vec::new();
    for rule in &draft.rules {
        let Some(to) = index(&rule.consequent.variable) else {
            continue;
        };
        for atom in rule.atoms() {
            if let Some(from) = index(&atom.variable) {
                edges.push((from, to, rule.id.as_str()));
            }
        }
    }
    edges
}

/// Topological order of output variables (declaration order among peers).
/// On a cycle, returns a rule on it and the variable path.
fn output_order(draft: &KbDraft) -> Result<Vec<usize>, (String, Vec<String>)> {
    let n = draft.outputs.len();
    let edges = output_edges(draft);
    let mut indegree = vec![0usize; n];
    for &(_, to, _) in &edges {
        indegree[to] += 1;
    }
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    while order.len() < n {
        let Some(next) = (0..n).find(|&i| !done[i] && indegree[i] == 0) else {
            break;
        };
        done[next] = true;
        order.push(next);
        for &(from, to, _) in &edges {
            if from == next {
                indegree[to] -= 1;
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Walk backwards along unresolved edges until a variable repeats.
    let start = (0..n).find(|&i| !done[i]).unwrap();
    let mut path = vec![start];
    let mut current = start;
    let rule_id = loop {
        let &(from, _, id) = edges
            .iter()
            .find(|&&(from, to, _)| to == current && !done[from])
            .expect("unresolved variable has an unresolved predecessor");
        if let Some(pos) = path.iter().position(|&p| p == from) {
            path.drain(..pos);
            break id.to_string();
        }
        path.push(from);
        current = from;
    };
    path.reverse();
    path.push(path[0]);
    Err((
        rule_id,
        path.into_iter()
            .map(|i| draft.outputs[i].name().to_string())
            .collect(),
    ))
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("knowledge base failed validation:\n{}", render_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  - {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A validated, immutable knowledge base.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    inputs: Vec<LinguisticVariable>,
    outputs: Vec<LinguisticVariable>,
    rules: Vec<Rule>,
    risk_variable: usize,
    thresholds: Thresholds,
    grid: usize,
    order: Vec<usize>,
}

impl KnowledgeBase {
    pub fn build(mut draft: KbDraft) -> Result<Self, KbError> {
        validate_kb(&draft).map_err(KbError::Invalid)?;
        let order = output_order(&draft).expect("validated");
        for rule in &mut draft.rules {
            rule.kind = if rule
                .atoms()
                .any(|a| draft.outputs.iter().any(|v| v.name() == a.variable))
            {
                RuleKind::Meta
            } else {
                RuleKind::Ground
            };
        }
        let risk_variable = match &draft.risk_variable {
            Some(name) => draft
                .outputs
                .iter()
                .position(|v| v.name() == name)
                .expect("validated"),
            None => 0,
        };
        Ok(Self {
            inputs: draft.inputs,
            outputs: draft.outputs,
            rules: draft.rules,
            risk_variable,
            thresholds: draft.thresholds,
            grid: draft.grid,
            order,
        })
    }

    pub fn inputs(&self) -> &[LinguisticVariable] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[LinguisticVariable] {
        &self.outputs
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn risk_variable(&self) -> &LinguisticVariable {
        &self.outputs[self.risk_variable]
    }

    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn input_names(&self) -> Vec<&str> {
        self.inputs.iter().map(|v| v.name()).collect()
    }

    /// Output variables in the order inference evaluates them.
    pub fn evaluation_order(&self) -> Vec<&str> {
        self.order.iter().map(|&i| self.outputs[i].name()).collect()
    }
}

/// Degrees per variable and term, as consumed by rule antecedents.
pub type DegreeTable = HashMap<String, HashMap<String, Degree>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferError {
    #[error("missing input variable {missing:?}; required inputs: {}", required.join(", "))]
    MissingInput {
        missing: String,
        required: Vec<String>,
    },
    #[error("no degrees available for variable {0:?}")]
    MissingVariable(String),
    #[error("variable {variable:?} has no degree for term {term:?}")]
    MissingTerm { variable: String, term: String },
    #[error("{0:?} is not a topological order of the output variables")]
    BadOrder(Vec<String>),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Left-associative fold of the antecedent with min/max; no precedence.
pub fn evaluate_antecedent(rule: &Rule, degrees: &DegreeTable) -> Result<Degree, InferError> {
    let lookup = |variable: &str, term: &str| -> Result<Degree, InferError> {
        let terms = degrees
            .get(variable)
            .ok_or_else(|| InferError::MissingVariable(variable.to_string()))?;
        terms
            .get(term)
            .copied()
            .ok_or_else(|| InferError::MissingTerm {
                variable: variable.to_string(),
                term: term.to_string(),
            })
    };
    let mut acc = lookup(&rule.first.variable, &rule.first.term)?;
    for (conn, atom) in &rule.rest {
        let d = lookup(&atom.variable, &atom.term)?;
        acc = match conn {
            Connective::And => and_degree(acc, d),
            Connective::Or => or_degree(acc, d),
        };
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermActivation {
    pub term: String,
    pub degree: Degree,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputActivation {
    pub variable: String,
    /// Max activation of the rules concluding each term, in term order.
    pub terms: Vec<TermActivation>,
    /// Centroid of the aggregated set; `None` when nothing fired.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskAssessment {
    pub risk_variable: String,
    /// Centroid of the risk variable; `None` when no rule fired.
    pub score: Option<f64>,
    pub level: RiskLevel,
    pub no_fire: bool,
    pub fired_rules: Vec<String>,
    pub outputs: Vec<OutputActivation>,
    /// Input variables whose crisp value was clamped into the universe.
    pub clamped_inputs: Vec<String>,
}

impl RiskAssessment {
    pub fn activation(&self, variable: &str, term: &str) -> Option<Degree> {
        self.outputs
            .iter()
            .find(|o| o.variable == variable)?
            .terms
            .iter()
            .find(|t| t.term == term)
            .map(|t| t.degree)
    }
}

/// Level reported when no rule reaches the risk variable.
pub const NO_FIRE_LEVEL: RiskLevel = RiskLevel::SR;

/// Mamdani inference over crisp inputs.
pub fn infer(kb: &KnowledgeBase, inputs: &BTreeMap<String, f64>) -> Result<RiskAssessment, InferError> {
    infer_with_order(kb, inputs, &kb.order)
}

/// Like [`infer`], but evaluates output variables in a caller-chosen
/// order, which must be topological with respect to meta-rule reads.
pub fn infer_in_order(
    kb: &KnowledgeBase,
    inputs: &BTreeMap<String, f64>,
    order: &[&str],
) -> Result<RiskAssessment, InferError> {
    let bad = || InferError::BadOrder(order.iter().map(|s| s.to_string()).collect());
    let mut idx = Vec::with_capacity(order.len());
    for name in order {
        let i = kb
            .outputs
            .iter()
            .position(|v| v.name() == *name)
            .ok_or_else(bad)?;
        if idx.contains(&i) {
            return Err(bad());
        }
        idx.push(i);
    }
    if idx.len() != kb.outputs.len() {
        return Err(bad());
    }
    for rule in &kb.rules {
        let to = idx
            .iter()
            .position(|&i| kb.outputs[i].name() == rule.consequent.variable)
            .expect("validated");
        for atom in rule.atoms() {
            if let Some(from) = idx
                .iter()
                .position(|&i| kb.outputs[i].name() == atom.variable)
            {
                if from >= to {
                    return Err(bad());
                }
            }
        }
    }
    infer_with_order(kb, inputs, &idx)
}

fn infer_with_order(
    kb: &KnowledgeBase,
    inputs: &BTreeMap<String, f64>,
    order: &[usize],
) -> Result<RiskAssessment, InferError> {
    let mut table: DegreeTable = HashMap::new();
    let mut clamped_inputs = Vec::new();
    for var in &kb.inputs {
        let x = *inputs
            .get(var.name())
            .ok_or_else(|| InferError::MissingInput {
                missing: var.name().to_string(),
                required: kb.input_names().iter().map(|s| s.to_string()).collect(),
            })?;
        let f = var.fuzzify(x);
        if f.clamped {
            clamped_inputs.push(var.name().to_string());
        }
        table.insert(var.name().to_string(), f.degrees.into_iter().collect());
    }

    let mut activations = vec![Vec::new(); kb.outputs.len()];
    let mut scores = vec![None; kb.outputs.len()];
    let mut fired = vec![false; kb.rules.len()];
    for &oi in order {
        let var = &kb.outputs[oi];
        let grid = var.universe().grid(kb.grid)?;
        let mut aggregate = DiscreteFuzzySet::zeros(&grid)?;
        let mut per_term: Vec<Degree> = vec![Degree::ZERO; var.terms().len()];
        for (ri, rule) in kb.rules.iter().enumerate() {
            if rule.consequent.variable != var.name() {
                continue;
            }
            let alpha = evaluate_antecedent(rule, &table)?;
            if alpha.value() <= 0.0 {
                continue;
            }
            fired[ri] = true;
            let ti = var
                .terms()
                .iter()
                .position(|t| t.label == rule.consequent.term)
                .expect("validated");
            per_term[ti] = or_degree(per_term[ti], alpha);
            let clipped = var.clip_term(&rule.consequent.term, alpha, kb.grid).expect("validated")?;
            aggregate = aggregate.union(&clipped)?;
        }
        scores[oi] = match aggregate.centroid() {
            Ok(score) => Some(score),
            Err(FuzzyError::EmptyAggregate) => None,
            Err(e) => return Err(e.into()),
        };
        table.insert(
            var.name().to_string(),
            var.terms()
                .iter()
                .zip(&per_term)
                .map(|(t, &d)| (t.label.clone(), d))
                .collect(),
        );
        activations[oi] = var
            .terms()
            .iter()
            .zip(per_term)
            .map(|(t, degree)| TermActivation {
                term: t.label.clone(),
                degree,
            })
            .collect();
    }

    let score = scores[kb.risk_variable];
    let level = score.map_or(NO_FIRE_LEVEL, |s| classify(s, kb.thresholds));
    Ok(RiskAssessment {
        risk_variable: kb.risk_variable().name().to_string(),
        score,
        level,
        no_fire: score.is_none(),
        fired_rules: kb
            .rules
            .iter()
            .zip(&fired)
            .filter(|(_, &f)| f)
            .map(|(r, _)| r.id.clone())
            .collect(),
        outputs: kb
            .outputs
            .iter()
            .zip(activations)
            .zip(scores)
            .map(|((v, terms), score)| OutputActivation {
                variable: v.name().to_string(),
                terms,
                score,
            })
            .collect(),
        clamped_inputs,
    })
}
