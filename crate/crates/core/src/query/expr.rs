use std::fmt;

/// A Boolean combination of natural-language atomic queries.
///
/// `Not(l, r)` is a binary difference: results for `l` that are not results
/// for `r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BooleanExpr {
    Atom(String),
    And(Box<BooleanExpr>, Box<BooleanExpr>),
    Or(Box<BooleanExpr>, Box<BooleanExpr>),
    Not(Box<BooleanExpr>, Box<BooleanExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
    Not,
}

impl BoolOp {
    pub fn keyword(self) -> &'static str {
        match self {
            BoolOp::And => "AND",
            BoolOp::Or => "OR",
            BoolOp::Not => "NOT",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BoolOp::Or => 1,
            BoolOp::And | BoolOp::Not => 2,
        }
    }
}

impl BooleanExpr {
    pub fn atom(text: impl Into<String>) -> Self {
        BooleanExpr::Atom(text.into())
    }

    pub fn and(l: BooleanExpr, r: BooleanExpr) -> Self {
        BooleanExpr::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: BooleanExpr, r: BooleanExpr) -> Self {
        BooleanExpr::Or(Box::new(l), Box::new(r))
    }

    pub fn not(l: BooleanExpr, r: BooleanExpr) -> Self {
        BooleanExpr::Not(Box::new(l), Box::new(r))
    }

    pub fn binary(op: BoolOp, l: BooleanExpr, r: BooleanExpr) -> Self {
        match op {
            BoolOp::And => Self::and(l, r),
            BoolOp::Or => Self::or(l, r),
            BoolOp::Not => Self::not(l, r),
        }
    }

    /// Operator and children of an internal node.
    pub fn as_binary(&self) -> Option<(BoolOp, &BooleanExpr, &BooleanExpr)> {
        match self {
            BooleanExpr::Atom(_) => None,
            BooleanExpr::And(l, r) => Some((BoolOp::And, l, r)),
            BooleanExpr::Or(l, r) => Some((BoolOp::Or, l, r)),
            BooleanExpr::Not(l, r) => Some((BoolOp::Not, l, r)),
        }
    }

    /// Atom texts in left-to-right order, duplicates included.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            BooleanExpr::Atom(t) => out.push(t),
            _ => {
                let (_, l, r) = self.as_binary().expect("internal node");
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self.as_binary() {
            None => 1,
            Some((_, l, r)) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Renders in the query grammar with the minimum parentheses needed for
    /// the text to parse back to this exact tree.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&mut s);
        s
    }

    fn render_into(&self, out: &mut String) {
        match self.as_binary() {
            None => {
                let BooleanExpr::Atom(text) = self else {
                    unreachable!()
                };
                out.push('"');
                for c in text.chars() {
                    if c == '"' || c == '\\' {
                        out.push('\\');
                    }
                    out.push(c);
                }
                out.push('"');
            }
            Some((op, l, r)) => {
                // left-associative: a left child of equal precedence needs no
                // parens, a right child of equal precedence does
                let lp = l
                    .as_binary()
                    .is_some_and(|(o, _, _)| o.precedence() < op.precedence());
                let rp = r
                    .as_binary()
                    .is_some_and(|(o, _, _)| o.precedence() <= op.precedence());
                render_child(l, lp, out);
                out.push(' ');
                out.push_str(op.keyword());
                out.push(' ');
                render_child(r, rp, out);
            }
        }
    }
}

fn render_child(e: &BooleanExpr, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        e.render_into(out);
        out.push(')');
    } else {
        e.render_into(out);
    }
}

impl fmt::Display for BooleanExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
