use std::fmt;

use serde::Serialize;

use super::ast::{CmpOp, Expr, Literal, Projection, Query};
use super::catalog::{cell_degree, FuzzificationCatalog};
use super::QueryError;
use crate::fuzzy::LinguisticVariable;
use crate::store::{parse_number, SubscriberStore};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedRow {
    pub row_id: usize,
    pub values: Vec<String>,
    pub degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub alpha: f64,
    pub rows: Vec<RankedRow>,
}

enum Bound<'a> {
    Compare {
        col: usize,
        op: CmpOp,
        literal: &'a Literal,
    },
    Is {
        col: usize,
        var: &'a LinguisticVariable,
        term: &'a str,
        cache: Option<&'a [Option<f64>]>,
    },
    Not(Box<Bound<'a>>),
    And(Box<Bound<'a>>, Box<Bound<'a>>),
    Or(Box<Bound<'a>>, Box<Bound<'a>>),
}

fn bind<'a>(
    e: &'a Expr,
    store: &'a SubscriberStore,
    catalog: &'a FuzzificationCatalog,
) -> Result<Bound<'a>, QueryError> {
    let resolve = |name: &str| {
        store
            .column_index(name)
            .ok_or_else(|| QueryError::UnknownColumn(name.to_string()))
    };
    Ok(match e {
        Expr::Compare {
            column,
            op,
            literal,
        } => Bound::Compare {
            col: resolve(column)?,
            op: *op,
            literal,
        },
        Expr::Is { column, term } => {
            let col = resolve(column)?;
            let entry = catalog
                .lookup(store.table(), &store.columns()[col])
                .ok_or_else(|| QueryError::NotFuzzified(column.clone()))?;
            if entry.variable.term(term).is_none() {
                return Err(QueryError::UnknownTerm {
                    column: column.clone(),
                    term: term.clone(),
                    available: entry
                        .variable
                        .term_labels()
                        .into_iter()
                        .map(String::from)
                        .collect(),
                });
            }
            Bound::Is {
                col,
                var: &entry.variable,
                term,
                cache: entry.cached(store, col, term),
            }
        }
        Expr::Not(a) => Bound::Not(Box::new(bind(a, store, catalog)?)),
        Expr::And(a, b) => Bound::And(
            Box::new(bind(a, store, catalog)?),
            Box::new(bind(b, store, catalog)?),
        ),
        Expr::Or(a, b) => Bound::Or(
            Box::new(bind(a, store, catalog)?),
            Box::new(bind(b, store, catalog)?),
        ),
    })
}

/// Crisp comparison of one cell. Empty cells and type mismatches are false.
pub fn compare_cell(cell: &str, op: CmpOp, literal: &Literal) -> bool {
    match literal {
        Literal::Number(n) => parse_number(cell).is_some_and(|v| op.holds(&v, n)),
        Literal::Text(s) => {
            let c = cell.trim();
            !c.is_empty() && op.holds(c, s.as_str())
        }
    }
}

impl Bound<'_> {
    fn degree(&self, store: &SubscriberStore, row: usize) -> f64 {
        self.eval(store, row, false)
    }

    // NOT is pushed to the leaves (De Morgan), so `NOT NOT p` is exactly `p`
    // rather than `1 - (1 - p)` with its rounding.
    fn eval(&self, store: &SubscriberStore, row: usize, negated: bool) -> f64 {
        let leaf = |d: f64| if negated { 1.0 - d } else { d };
        match self {
            Bound::Compare { col, op, literal } => {
                leaf(if compare_cell(store.cell(row, *col), *op, literal) {
                    1.0
                } else {
                    0.0
                })
            }
            Bound::Is {
                col,
                var,
                term,
                cache,
            } => leaf(
                match cache {
                    Some(values) => values[row],
                    None => cell_degree(var, term, store.cell(row, *col)),
                }
                .unwrap_or(0.0),
            ),
            Bound::Not(a) => a.eval(store, row, !negated),
            Bound::And(a, b) | Bound::Or(a, b) => {
                let (x, y) = (a.eval(store, row, negated), b.eval(store, row, negated));
                if matches!(self, Bound::And(..)) != negated {
                    x.min(y)
                } else {
                    x.max(y)
                }
            }
        }
    }
}

/// Evaluates `q` against the store. Rows with degree zero are never
/// returned; otherwise a row is kept when its degree is at least `alpha`.
/// Results are ordered by degree descending, then row id ascending.
pub fn execute(
    q: &Query,
    store: &SubscriberStore,
    catalog: &FuzzificationCatalog,
    alpha: f64,
) -> Result<QueryResult, QueryError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(QueryError::BadAlpha(alpha));
    }
    if !q.table.eq_ignore_ascii_case(store.table()) {
        return Err(QueryError::UnknownTable(q.table.clone()));
    }
    let projected: Vec<usize> = match &q.projection {
        Projection::All => (0..store.columns().len()).collect(),
        Projection::Columns(cols) => cols
            .iter()
            .map(|c| {
                store
                    .column_index(c)
                    .ok_or_else(|| QueryError::UnknownColumn(c.clone()))
            })
            .collect::<Result<_, _>>()?,
    };
    let filter = q
        .filter
        .as_ref()
        .map(|e| bind(e, store, catalog))
        .transpose()?;

    let mut rows: Vec<RankedRow> = (0..store.len())
        .filter_map(|row| {
            let degree = filter.as_ref().map_or(1.0, |f| f.degree(store, row));
            (degree > 0.0 && degree >= alpha).then(|| RankedRow {
                row_id: row,
                values: projected
                    .iter()
                    .map(|&c| store.cell(row, c).to_string())
                    .collect(),
                degree,
            })
        })
        .collect();
    rows.sort_by(|a, b| b.degree.total_cmp(&a.degree).then(a.row_id.cmp(&b.row_id)));
    Ok(QueryResult {
        columns: projected
            .iter()
            .map(|&c| store.columns()[c].clone())
            .collect(),
        alpha,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Binding {
    Bound {
        table: String,
        column: String,
        terms: Vec<String>,
    },
    Missing,
    UnknownTerm {
        terms: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum PlanNode {
    Crisp { predicate: String },
    Fuzzy { predicate: String, binding: Binding },
    Not { input: Box<PlanNode> },
    And { inputs: Vec<PlanNode> },
    Or { inputs: Vec<PlanNode> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub query: String,
    pub filter: Option<PlanNode>,
}

impl Plan {
    fn walk<'a>(&'a self, out: &mut Vec<&'a PlanNode>) {
        fn go<'a>(n: &'a PlanNode, out: &mut Vec<&'a PlanNode>) {
            out.push(n);
            match n {
                PlanNode::Not { input } => go(input, out),
                PlanNode::And { inputs } | PlanNode::Or { inputs } => {
                    inputs.iter().for_each(|i| go(i, out))
                }
                _ => {}
            }
        }
        if let Some(f) = &self.filter {
            go(f, out);
        }
    }

    /// Fuzzy predicates resolved to a catalog entry.
    pub fn bindings(&self) -> usize {
        let mut nodes = Vec::new();
        self.walk(&mut nodes);
        nodes
            .iter()
            .filter(|n| {
                matches!(
                    n,
                    PlanNode::Fuzzy {
                        binding: Binding::Bound { .. },
                        ..
                    }
                )
            })
            .count()
    }

    pub fn missing(&self) -> usize {
        let mut nodes = Vec::new();
        self.walk(&mut nodes);
        nodes
            .iter()
            .filter(|n| {
                matches!(
                    n,
                    PlanNode::Fuzzy {
                        binding: Binding::Missing | Binding::UnknownTerm { .. },
                        ..
                    }
                )
            })
            .count()
    }

    pub fn crisp_predicates(&self) -> usize {
        let mut nodes = Vec::new();
        self.walk(&mut nodes);
        nodes
            .iter()
            .filter(|n| matches!(n, PlanNode::Crisp { .. }))
            .count()
    }
}

fn plan_node(e: &Expr, table: &str, catalog: &FuzzificationCatalog) -> PlanNode {
    // Flatten chains of the same connective into one n-ary node.
    fn collect<'a>(e: &'a Expr, and: bool, out: &mut Vec<&'a Expr>) {
        match (e, and) {
            (Expr::And(a, b), true) | (Expr::Or(a, b), false) => {
                collect(a, and, out);
                collect(b, and, out);
            }
            _ => out.push(e),
        }
    }
    match e {
        Expr::Compare { .. } => PlanNode::Crisp {
            predicate: e.to_string(),
        },
        Expr::Is { column, term } => PlanNode::Fuzzy {
            predicate: e.to_string(),
            binding: match catalog.lookup(table, column) {
                None => Binding::Missing,
                Some(entry) => {
                    let terms = entry
                        .variable
                        .term_labels()
                        .into_iter()
                        .map(String::from)
                        .collect();
                    if entry.variable.term(term).is_some() {
                        Binding::Bound {
                            table: entry.table.clone(),
                            column: entry.column.clone(),
                            terms,
                        }
                    } else {
                        Binding::UnknownTerm { terms }
                    }
                }
            },
        },
        Expr::Not(a) => PlanNode::Not {
            input: Box::new(plan_node(a, table, catalog)),
        },
        Expr::And(..) | Expr::Or(..) => {
            let and = matches!(e, Expr::And(..));
            let mut parts = Vec::new();
            collect(e, and, &mut parts);
            let inputs = parts
                .into_iter()
                .map(|p| plan_node(p, table, catalog))
                .collect();
            if and {
                PlanNode::And { inputs }
            } else {
                PlanNode::Or { inputs }
            }
        }
    }
}

/// Describes how each predicate of `q` would be evaluated.
pub fn explain(q: &Query, catalog: &FuzzificationCatalog) -> Plan {
    Plan {
        query: q.to_string(),
        filter: q.filter.as_ref().map(|e| plan_node(e, &q.table, catalog)),
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn node(f: &mut fmt::Formatter<'_>, n: &PlanNode, depth: usize) -> fmt::Result {
            let pad = "  ".repeat(depth);
            match n {
                PlanNode::Crisp { predicate } => {
                    writeln!(f, "{pad}crisp  {predicate}  [indicator 0/1]")
                }
                PlanNode::Fuzzy { predicate, binding } => match binding {
                    Binding::Bound {
                        table,
                        column,
                        terms,
                    } => writeln!(
                        f,
                        "{pad}fuzzy  {predicate}  [catalog {table}.{column}: {}]",
                        terms.join(", ")
                    ),
                    Binding::Missing => writeln!(f, "{pad}fuzzy  {predicate}  [MISSING]"),
                    Binding::UnknownTerm { terms } => writeln!(
                        f,
                        "{pad}fuzzy  {predicate}  [UNKNOWN TERM; available: {}]",
                        terms.join(", ")
                    ),
                },
                PlanNode::Not { input } => {
                    writeln!(f, "{pad}NOT  [1 - d]")?;
                    node(f, input, depth + 1)
                }
                PlanNode::And { inputs } => {
                    writeln!(f, "{pad}AND  [min over {} branches]", inputs.len())?;
                    inputs.iter().try_for_each(|i| node(f, i, depth + 1))
                }
                PlanNode::Or { inputs } => {
                    writeln!(f, "{pad}OR  [max over {} branches]", inputs.len())?;
                    inputs.iter().try_for_each(|i| node(f, i, depth + 1))
                }
            }
        }
        writeln!(f, "{}", self.query)?;
        match &self.filter {
            None => writeln!(f, "no filter: every row at degree 1")?,
            Some(n) => node(f, n, 1)?,
        }
        write!(
            f,
            "crisp predicates: {}, catalog bindings: {}, missing: {}",
            self.crisp_predicates(),
            self.bindings(),
            self.missing()
        )
    }
}
