//! Membership functions, linguistic variables and the Mamdani numeric substrate.
//!
//! Everything here is immutable after construction. Malformed shapes are
//! rejected by the constructors, so evaluation never fails.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of samples used when a fuzzy set is discretized.
pub const DEFAULT_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("membership parameters must be finite")]
    NonFinite,
    #[error("{shape} parameters out of order: {params:?}")]
    Unordered { shape: &'static str, params: Vec<f64> },
    #[error("degree {0} outside [0, 1]")]
    DegreeOutOfRange(f64),
    #[error("universe [{lo}, {hi}] is empty or not finite")]
    BadUniverse { lo: f64, hi: f64 },
    #[error("variable {0:?} needs at least two terms")]
    TooFewTerms(String),
    #[error("variable {variable:?}: duplicate term {label:?}")]
    DuplicateTerm { variable: String, label: String },
    #[error("empty term label in variable {0:?}")]
    EmptyLabel(String),
    #[error("variable {variable:?}: term {label:?} support leaves the universe")]
    SupportOutsideUniverse { variable: String, label: String },
    #[error("unknown shape {0:?}")]
    UnknownShape(String),
    #[error("shape {shape} expects {expected} parameters, got {got}")]
    ParamCount {
        shape: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown threshold operator {0:?}")]
    UnknownOperator(String),
    #[error("sample grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("discrete set abscissae must be finite and strictly increasing")]
    UnorderedSamples,
    #[error("discrete sets sampled on different grids")]
    GridMismatch,
    #[error("empty aggregate: no membership mass to defuzzify")]
    EmptyAggregate,
}

/// A membership degree, always within `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Degree(f64);

impl Degree {
    pub const ZERO: Degree = Degree(0.0);
    pub const ONE: Degree = Degree(1.0);

    pub fn new(value: f64) -> Result<Self, FuzzyError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Degree(value))
        } else {
            Err(FuzzyError::DegreeOutOfRange(value))
        }
    }

    /// Saturating constructor; NaN maps to zero.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Degree(0.0)
        } else {
            Degree(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn and(self, other: Degree) -> Degree {
        and_degree(self, other)
    }

    pub fn or(self, other: Degree) -> Degree {
        or_degree(self, other)
    }

    pub fn complement(self) -> Degree {
        Degree(1.0 - self.0)
    }
}

impl TryFrom<f64> for Degree {
    type Error = FuzzyError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Degree::new(value)
    }
}

impl From<Degree> for f64 {
    fn from(d: Degree) -> f64 {
        d.0
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Fuzzy conjunction (minimum t-norm).
pub fn and_degree(a: Degree, b: Degree) -> Degree {
    if b.0 < a.0 {
        b
    } else {
        a
    }
}

/// Fuzzy disjunction (maximum s-norm).
pub fn or_degree(a: Degree, b: Degree) -> Degree {
    if b.0 > a.0 {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdOp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl ThresholdOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ThresholdOp::Lt => "<",
            ThresholdOp::Le => "<=",
            ThresholdOp::Gt => ">",
            ThresholdOp::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Result<Self, FuzzyError> {
        match s {
            "<" => Ok(ThresholdOp::Lt),
            "<=" => Ok(ThresholdOp::Le),
            ">" => Ok(ThresholdOp::Gt),
            ">=" => Ok(ThresholdOp::Ge),
            other => Err(FuzzyError::UnknownOperator(other.to_string())),
        }
    }

    fn holds(self, x: f64, bound: f64) -> bool {
        match self {
            ThresholdOp::Lt => x < bound,
            ThresholdOp::Le => x <= bound,
            ThresholdOp::Gt => x > bound,
            ThresholdOp::Ge => x >= bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Triangular { a: f64, b: f64, c: f64 },
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
    CrispThreshold { op: ThresholdOp, bound: f64 },
}

/// A validated membership function. Use the constructors; the parameter
/// ordering is checked once so evaluation is total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipFunction {
    shape: Shape,
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        check_finite(&[a, b, c])?;
        if !(a <= b && b <= c) {
            return Err(FuzzyError::Unordered {
                shape: "triangular",
                params: vec![a, b, c],
            });
        }
        Ok(Self {
            shape: Shape::Triangular { a, b, c },
        })
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        check_finite(&[a, b, c, d])?;
        if !(a <= b && b <= c && c <= d) {
            return Err(FuzzyError::Unordered {
                shape: "trapezoidal",
                params: vec![a, b, c, d],
            });
        }
        Ok(Self {
            shape: Shape::Trapezoidal { a, b, c, d },
        })
    }

    pub fn crisp_threshold(op: ThresholdOp, bound: f64) -> Result<Self, FuzzyError> {
        check_finite(&[bound])?;
        Ok(Self {
            shape: Shape::CrispThreshold { op, bound },
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Evaluates μ(x). Non-finite inputs have zero membership.
    pub fn membership(&self, x: f64) -> Degree {
        if x.is_nan() {
            return Degree::ZERO;
        }
        let v = match self.shape {
            Shape::Triangular { a, b, c } => {
                if x < a || x > c {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x == b {
                    1.0
                } else {
                    (c - x) / (c - b)
                }
            }
            Shape::Trapezoidal { a, b, c, d } => {
                if x < a || x > d {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x <= c {
                    1.0
                } else {
                    (d - x) / (d - c)
                }
            }
            Shape::CrispThreshold { op, bound } => {
                if op.holds(x, bound) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        Degree::saturating(v)
    }

    /// Closed support interval; thresholds extend to infinity on one side.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            Shape::Triangular { a, c, .. } => (a, c),
            Shape::Trapezoidal { a, d, .. } => (a, d),
            Shape::CrispThreshold { op, bound } => match op {
                ThresholdOp::Lt | ThresholdOp::Le => (f64::NEG_INFINITY, bound),
                ThresholdOp::Gt | ThresholdOp::Ge => (bound, f64::INFINITY),
            },
        }
    }

    fn shape_name(&self) -> &'static str {
        match self.shape {
            Shape::Triangular { .. } => "triangular",
            Shape::Trapezoidal { .. } => "trapezoidal",
            Shape::CrispThreshold { .. } => "crisp_threshold",
        }
    }
}

/// Free-function form of [`MembershipFunction::membership`].
pub fn membership(mf: &MembershipFunction, x: f64) -> Degree {
    mf.membership(x)
}

fn check_finite(params: &[f64]) -> Result<(), FuzzyError> {
    if params.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(FuzzyError::NonFinite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzySet {
    pub label: String,
    pub mf: MembershipFunction,
}

impl FuzzySet {
    pub fn new(label: impl Into<String>, mf: MembershipFunction) -> Self {
        Self {
            label: label.into(),
            mf,
        }
    }
}

/// Closed real interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Universe {
    lo: f64,
    hi: f64,
}

impl Universe {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(FuzzyError::BadUniverse { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `n` evenly spaced abscissae covering the universe, endpoints included.
    pub fn grid(&self, n: usize) -> Result<Vec<f64>, FuzzyError> {
        if n < 2 {
            return Err(FuzzyError::GridTooSmall(n));
        }
        let step = (self.hi - self.lo) / (n - 1) as f64;
        Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    self.hi
                } else {
                    self.lo + step * i as f64
                }
            })
            .collect())
    }

    /// Clamps into the universe; the flag reports whether clamping happened.
    pub fn clamp(&self, x: f64) -> (f64, bool) {
        if x < self.lo {
            (self.lo, true)
        } else if x > self.hi {
            (self.hi, true)
        } else if x.is_nan() {
            (self.lo, true)
        } else {
            (x, false)
        }
    }
}

/// Samples `(x_i, μ_i)` of a fuzzy set over a finite grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFuzzySet {
    points: Vec<(f64, Degree)>,
}

impl DiscreteFuzzySet {
    pub fn new(points: Vec<(f64, Degree)>) -> Result<Self, FuzzyError> {
        let ordered = points.iter().all(|(x, _)| x.is_finite())
            && points.windows(2).all(|w| w[0].0 < w[1].0);
        if !ordered {
            return Err(FuzzyError::UnorderedSamples);
        }
        Ok(Self { points })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, FuzzyError> {
        let points = pairs
            .iter()
            .map(|&(x, m)| Ok((x, Degree::new(m)?)))
            .collect::<Result<Vec<_>, FuzzyError>>()?;
        Self::new(points)
    }

    /// All-zero set on the given grid.
    pub fn zeros(grid: &[f64]) -> Result<Self, FuzzyError> {
        Self::new(grid.iter().map(|&x| (x, Degree::ZERO)).collect())
    }

    pub fn points(&self) -> &[(f64, Degree)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest sampled membership.
    pub fn height(&self) -> Degree {
        self.points
            .iter()
            .fold(Degree::ZERO, |acc, &(_, m)| or_degree(acc, m))
    }

    /// Pointwise maximum with another set sampled on the same grid.
    pub fn union(&self, other: &DiscreteFuzzySet) -> Result<DiscreteFuzzySet, FuzzyError> {
        if self.points.len() != other.points.len()
            || self
                .points
                .iter()
                .zip(&other.points)
                .any(|(p, q)| p.0 != q.0)
        {
            return Err(FuzzyError::GridMismatch);
        }
        Ok(DiscreteFuzzySet {
            points: self
                .points
                .iter()
                .zip(&other.points)
                .map(|(&(x, a), &(_, b))| (x, or_degree(a, b)))
                .collect(),
        })
    }

    /// Centroid `Σ x·μ / Σ μ` over the samples.
    pub fn centroid(&self) -> Result<f64, FuzzyError> {
        defuzzify_centroid(self)
    }
}

/// Centroid defuzzification of a sampled set.
pub fn defuzzify_centroid(set: &DiscreteFuzzySet) -> Result<f64, FuzzyError> {
    let (num, den) = set
        .points
        .iter()
        .fold((0.0, 0.0), |(n, d), &(x, m)| (n + x * m.0, d + m.0));
    if den <= 0.0 {
        return Err(FuzzyError::EmptyAggregate);
    }
    let lo = set
        .points
        .iter()
        .find(|(_, m)| m.0 > 0.0)
        .map(|p| p.0)
        .unwrap_or(f64::NEG_INFINITY);
    let hi = set
        .points
        .iter()
        .rev()
        .find(|(_, m)| m.0 > 0.0)
        .map(|p| p.0)
        .unwrap_or(f64::INFINITY);
    // rounding can push the ratio a hair past the outermost support sample
    Ok((num / den).clamp(lo, hi))
}

/// Mamdani implication: samples `min(μ(x), alpha)` over `universe`.
pub fn clip(
    set: &FuzzySet,
    universe: Universe,
    alpha: Degree,
    grid: usize,
) -> Result<DiscreteFuzzySet, FuzzyError> {
    let xs = universe.grid(grid)?;
    DiscreteFuzzySet::new(
        xs.into_iter()
            .map(|x| (x, and_degree(set.mf.membership(x), alpha)))
            .collect(),
    )
}

/// Result of fuzzifying one crisp value.
#[derive(Debug, Clone, PartialEq)]
pub struct Fuzzified {
    /// One entry per term, in term order.
    pub degrees: Vec<(String, Degree)>,
    /// The value actually evaluated, after clamping.
    pub value: f64,
    pub clamped: bool,
}

impl Fuzzified {
    pub fn degree(&self, label: &str) -> Option<Degree> {
        self.degrees
            .iter()
            .find(|(l, _)| l == label)
            .map(|&(_, d)| d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VariableDoc", into = "VariableDoc")]
pub struct LinguisticVariable {
    name: String,
    universe: Universe,
    terms: Vec<FuzzySet>,
}

impl LinguisticVariable {
    pub fn new(
        name: impl Into<String>,
        universe: Universe,
        terms: Vec<FuzzySet>,
    ) -> Result<Self, FuzzyError> {
        let name = name.into();
        if terms.len() < 2 {
            return Err(FuzzyError::TooFewTerms(name));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.label.is_empty() {
                return Err(FuzzyError::EmptyLabel(name));
            }
            if terms[..i].iter().any(|o| o.label == t.label) {
                return Err(FuzzyError::DuplicateTerm {
                    variable: name,
                    label: t.label.clone(),
                });
            }
            let inside = match *t.mf.shape() {
                Shape::CrispThreshold { bound, .. } => {
                    bound >= universe.lo && bound <= universe.hi
                }
                _ => {
                    let (lo, hi) = t.mf.support();
                    lo >= universe.lo && hi <= universe.hi
                }
            };
            if !inside {
                return Err(FuzzyError::SupportOutsideUniverse {
                    variable: name,
                    label: t.label.clone(),
                });
            }
        }
        Ok(Self {
            name,
            universe,
            terms,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn universe(&self) -> Universe {
        self.universe
    }

    pub fn terms(&self) -> &[FuzzySet] {
        &self.terms
    }

    pub fn term(&self, label: &str) -> Option<&FuzzySet> {
        self.terms.iter().find(|t| t.label == label)
    }

    pub fn term_labels(&self) -> Vec<&str> {
        self.terms.iter().map(|t| t.label.as_str()).collect()
    }

    /// Degree of every term at `x`, clamping `x` into the universe first.
    pub fn fuzzify(&self, x: f64) -> Fuzzified {
        let (value, clamped) = self.universe.clamp(x);
        Fuzzified {
            degrees: self
                .terms
                .iter()
                .map(|t| (t.label.clone(), t.mf.membership(value)))
                .collect(),
            value,
            clamped,
        }
    }

    /// Clips the named term at `alpha` over this variable's universe.
    pub fn clip_term(
        &self,
        label: &str,
        alpha: Degree,
        grid: usize,
    ) -> Option<Result<DiscreteFuzzySet, FuzzyError>> {
        self.term(label)
            .map(|t| clip(t, self.universe, alpha, grid))
    }
}

/// Free-function form of [`LinguisticVariable::fuzzify`].
pub fn fuzzify(var: &LinguisticVariable, x: f64) -> Fuzzified {
    var.fuzzify(x)
}

// On-disk form: {name, universe:[lo,hi], terms:[{label, shape, params:[..], op?}]}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VariableDoc {
    name: String,
    universe: [f64; 2],
    terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermDoc {
    label: String,
    shape: String,
    params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    op: Option<String>,
}

impl TryFrom<TermDoc> for FuzzySet {
    type Error = FuzzyError;

    fn try_from(doc: TermDoc) -> Result<Self, Self::Error> {
        let want = |shape: &'static str, n: usize| {
            if doc.params.len() == n {
                Ok(())
            } else {
                Err(FuzzyError::ParamCount {
                    shape,
                    expected: n,
                    got: doc.params.len(),
                })
            }
        };
        let p = &doc.params;
        let mf = match doc.shape.as_str() {
            "triangular" => {
                want("triangular", 3)?;
                MembershipFunction::triangular(p[0], p[1], p[2])?
            }
            "trapezoidal" => {
                want("trapezoidal", 4)?;
                MembershipFunction::trapezoidal(p[0], p[1], p[2], p[3])?
            }
            "crisp_threshold" => {
                want("crisp_threshold", 1)?;
                let op = ThresholdOp::parse(doc.op.as_deref().unwrap_or(">="))?;
                MembershipFunction::crisp_threshold(op, p[0])?
            }
            other => return Err(FuzzyError::UnknownShape(other.to_string())),
        };
        Ok(FuzzySet::new(doc.label, mf))
    }
}

impl From<&FuzzySet> for TermDoc {
    fn from(set: &FuzzySet) -> Self {
        let (params, op) = match *set.mf.shape() {
            Shape::Triangular { a, b, c } => (vec![a, b, c], None),
            Shape::Trapezoidal { a, b, c, d } => (vec![a, b, c, d], None),
            Shape::CrispThreshold { op, bound } => (vec![bound], Some(op.symbol().to_string())),
        };
        TermDoc {
            label: set.label.clone(),
            shape: set.mf.shape_name().to_string(),
            params,
            op,
        }
    }
}

impl TryFrom<VariableDoc> for LinguisticVariable {
    type Error = FuzzyError;

    fn try_from(doc: VariableDoc) -> Result<Self, Self::Error> {
        let universe = Universe::new(doc.universe[0], doc.universe[1])?;
        let terms = doc
            .terms
            .into_iter()
            .map(FuzzySet::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        LinguisticVariable::new(doc.name, universe, terms)
    }
}

impl From<LinguisticVariable> for VariableDoc {
    fn from(v: LinguisticVariable) -> Self {
        VariableDoc {
            name: v.name.clone(),
            universe: [v.universe.lo, v.universe.hi],
            terms: v.terms.iter().map(TermDoc::from).collect(),
        }
    }
}
