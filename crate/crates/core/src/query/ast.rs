use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "<>",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds<T: PartialOrd + ?Sized>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// `column op literal`, a 0/1 indicator.
    Compare {
        column: String,
        op: CmpOp,
        literal: Literal,
    },
    /// `column IS term`, the term's membership degree.
    Is { column: String, term: String },
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn is_crisp(&self) -> bool {
        match self {
            Expr::Compare { .. } => true,
            Expr::Is { .. } => false,
            Expr::Not(e) => e.is_crisp(),
            Expr::And(a, b) | Expr::Or(a, b) => a.is_crisp() && b.is_crisp(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::Compare { .. } | Expr::Is { .. } => 4,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Compare {
                column,
                op,
                literal,
            } => write!(f, "{column} {} {literal}", op.symbol()),
            Expr::Is { column, term } => write!(f, "{column} IS {term}"),
            Expr::Not(e) => {
                write!(f, "NOT ")?;
                e.write_at(f, 3)
            }
            // Both connectives fold left, so a right operand of equal
            // precedence needs parentheses.
            Expr::And(a, b) => {
                a.write_at(f, 2)?;
                write!(f, " AND ")?;
                b.write_at(f, 3)
            }
            Expr::Or(a, b) => {
                a.write_at(f, 1)?;
                write!(f, " OR ")?;
                b.write_at(f, 2)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    All,
    Columns(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub projection: Projection,
    pub table: String,
    pub filter: Option<Expr>,
}

impl Query {
    pub fn is_crisp(&self) -> bool {
        self.filter.as_ref().is_none_or(Expr::is_crisp)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SELECT ")?;
        match &self.projection {
            Projection::All => write!(f, "*")?,
            Projection::Columns(cols) => write!(f, "{}", cols.join(", "))?,
        }
        write!(f, " FROM {}", self.table)?;
        if let Some(e) = &self.filter {
            write!(f, " WHERE {e}")?;
        }
        Ok(())
    }
}
