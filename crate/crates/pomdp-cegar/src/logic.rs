//! The safety fragment of PCTL restricted to finite-horizon bounded until.
//!
//! The full grammar parses; checkable specifications are a single outermost
//! probabilistic operator with propositional operands. Surface syntax:
//!
//! ```text
//! P<=0.45 [ true U<=20 "fail" ]
//! P<0.5 [ "a" U<=3 ("b" | "c") ]
//! ```
//!
//! Atomic propositions are quoted strings; connectives are `&`, `|`, `!`.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Path, Waz};
use crate::rational::{frac_string, in_unit_interval, parse_rational, Rational};

/// Threshold comparison of the probabilistic operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Lt,
}

impl Cmp {
    /// `value ⊴ threshold`.
    pub fn holds(self, value: &Rational, threshold: &Rational) -> bool {
        match self {
            Cmp::Le => value <= threshold,
            Cmp::Lt => value < threshold,
        }
    }

    /// `value ⋬ threshold` — the violation direction.
    pub fn violated_by(self, value: &Rational, threshold: &Rational) -> bool {
        !self.holds(value, threshold)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Le => "<=",
            Cmp::Lt => "<",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    BoundedUntil {
        cmp: Cmp,
        threshold: Rational,
        horizon: usize,
        left: Box<Formula>,
        right: Box<Formula>,
    },
}

impl Formula {
    pub fn contains_probabilistic(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => false,
            Formula::Not(f) => f.contains_probabilistic(),
            Formula::And(l, r) | Formula::Or(l, r) => {
                l.contains_probabilistic() || r.contains_probabilistic()
            }
            Formula::BoundedUntil { .. } => true,
        }
    }

    /// Evaluates a propositional formula against a label set.
    pub fn eval(&self, labels: &BTreeSet<String>) -> Result<bool> {
        match self {
            Formula::True => Ok(true),
            Formula::Atom(a) => Ok(labels.contains(a)),
            Formula::Not(f) => Ok(!f.eval(labels)?),
            Formula::And(l, r) => Ok(l.eval(labels)? && r.eval(labels)?),
            Formula::Or(l, r) => Ok(l.eval(labels)? || r.eval(labels)?),
            Formula::BoundedUntil { .. } => Err(Error::UnsupportedFragment(
                "probabilistic operator inside a propositional formula".into(),
            )),
        }
    }

    /// Extracts the checkable bounded-until form. Rejects nested
    /// probabilistic operators and non-probabilistic outer formulas.
    pub fn as_bounded_until(&self) -> Result<BoundedUntilSpec> {
        match self {
            Formula::BoundedUntil { cmp, threshold, horizon, left, right } => {
                if left.contains_probabilistic() || right.contains_probabilistic() {
                    return Err(Error::UnsupportedFragment(
                        "nested probabilistic operators are not checkable".into(),
                    ));
                }
                Ok(BoundedUntilSpec {
                    cmp: *cmp,
                    threshold: threshold.clone(),
                    horizon: *horizon,
                    phi1: (**left).clone(),
                    phi2: (**right).clone(),
                })
            }
            _ => Err(Error::UnsupportedFragment(
                "checkable specifications must be a single bounded-until operator".into(),
            )),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Atom(a) => write!(f, "\"{a}\""),
            Formula::Not(inner) => write!(f, "!({inner})"),
            Formula::And(l, r) => write!(f, "({l} & {r})"),
            Formula::Or(l, r) => write!(f, "({l} | {r})"),
            Formula::BoundedUntil { cmp, threshold, horizon, left, right } => {
                write!(f, "P{}{} [ {left} U<={horizon} {right} ]", cmp.symbol(), decimal_frac(threshold))
            }
        }
    }
}

fn decimal_frac(r: &Rational) -> String {
    // prefer the exact fraction unless it is an integer; re-parses exactly
    frac_string(r)
}

/// The operational specification: `P cmp p [ phi1 U<=k phi2 ]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedUntilSpec {
    pub cmp: Cmp,
    pub threshold: Rational,
    pub horizon: usize,
    pub phi1: Formula,
    pub phi2: Formula,
}

impl fmt::Display for BoundedUntilSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "P{}{} [ {} U<={} {} ]",
            self.cmp.symbol(),
            frac_string(&self.threshold),
            self.phi1,
            self.horizon,
            self.phi2
        )
    }
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { text, pos: 0 }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax { position: self.pos, message: message.into() }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn parse_formula(&mut self) -> Result<Formula> {
        let mut left = self.parse_conjunction()?;
        while self.eat("|") {
            let right = self.parse_conjunction()?;
            left = Formula::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_conjunction(&mut self) -> Result<Formula> {
        let mut left = self.parse_unary()?;
        while self.eat("&") {
            let right = self.parse_unary()?;
            left = Formula::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Formula> {
        self.skip_ws();
        if self.eat("!") {
            return Ok(Formula::Not(Box::new(self.parse_unary()?)));
        }
        if self.eat("(") {
            let inner = self.parse_formula()?;
            self.expect(")")?;
            return Ok(inner);
        }
        if self.rest().starts_with('"') {
            return self.parse_atom();
        }
        if self.rest().starts_with('P') && !self.rest().starts_with("true") {
            return self.parse_probabilistic();
        }
        if self.eat("true") {
            return Ok(Formula::True);
        }
        Err(self.error("expected a formula"))
    }

    fn parse_atom(&mut self) -> Result<Formula> {
        self.expect("\"")?;
        let rest = self.rest();
        let end = rest.find('"').ok_or_else(|| self.error("unterminated atom"))?;
        let name = &rest[..end];
        if name.is_empty() {
            return Err(self.error("empty atomic proposition"));
        }
        self.pos += end + 1;
        Ok(Formula::Atom(name.to_string()))
    }

    fn parse_probabilistic(&mut self) -> Result<Formula> {
        self.expect("P")?;
        let cmp = if self.eat("<=") {
            Cmp::Le
        } else if self.eat("<") {
            Cmp::Lt
        } else {
            return Err(self.error("expected `<=` or `<` after `P`"));
        };
        let threshold = self.parse_number()?;
        if !in_unit_interval(&threshold) {
            return Err(self.error("threshold must lie in [0,1]"));
        }
        self.expect("[")?;
        let left = self.parse_formula()?;
        self.expect("U<=")?;
        let horizon = self.parse_natural()?;
        let right = self.parse_formula()?;
        self.expect("]")?;
        Ok(Formula::BoundedUntil {
            cmp,
            threshold,
            horizon,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn parse_number(&mut self) -> Result<Rational> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '/'))
            .unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error("expected a number"));
        }
        let value = parse_rational(&rest[..end])
            .map_err(|_| self.error(format!("invalid number `{}`", &rest[..end])))?;
        self.pos += end;
        Ok(value)
    }

    fn parse_natural(&mut self) -> Result<usize> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if end == 0 {
            return Err(self.error("expected a horizon bound"));
        }
        let value = rest[..end]
            .parse()
            .map_err(|_| self.error("horizon bound does not fit in usize"))?;
        self.pos += end;
        Ok(value)
    }
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    let mut parser = Parser::new(text);
    let formula = parser.parse_formula()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(parser.error("trailing input after formula"));
    }
    Ok(formula)
}

/// Parses a checkable specification directly.
pub fn parse_spec(text: &str) -> Result<BoundedUntilSpec> {
    parse_formula(text)?.as_bounded_until()
}

/// States of `system` whose label sets satisfy the propositional `phi`.
pub fn satisfying_states(system: &Waz, phi: &Formula) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for (i, st) in system.states.iter().enumerate() {
        if phi.eval(&st.labels)? {
            out.insert(i);
        }
    }
    Ok(out)
}

/// Bounded-until path satisfaction: some index `i <= min(k, |path|)` where
/// `phi2` holds and `phi1` holds strictly before it.
pub fn path_satisfies(system: &Waz, path: &Path, spec: &BoundedUntilSpec) -> bool {
    let limit = spec.horizon.min(path.len());
    for i in 0..=limit {
        let labels = &system.states[path.state(i)].labels;
        if spec.phi2.eval(labels).unwrap_or(false) {
            return true;
        }
        if !spec.phi1.eval(labels).unwrap_or(false) {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::chain_pomdp;
    use crate::model::{corresponding_waz, Path};
    use crate::rational::ratio;

    #[test]
    fn parses_running_specification() {
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        assert_eq!(spec.cmp, Cmp::Le);
        assert_eq!(spec.threshold, ratio(9, 20));
        assert_eq!(spec.horizon, 20);
        assert_eq!(spec.phi1, Formula::True);
        assert_eq!(spec.phi2, Formula::Atom("fail".into()));
    }

    #[test]
    fn parses_boolean_operands() {
        let spec = parse_spec("P<0.5 [ \"a\" U<=3 (\"b\" | \"c\") ]").unwrap();
        assert_eq!(spec.cmp, Cmp::Lt);
        assert_eq!(spec.threshold, ratio(1, 2));
        assert_eq!(spec.horizon, 3);
        assert_eq!(
            spec.phi2,
            Formula::Or(Box::new(Formula::Atom("b".into())), Box::new(Formula::Atom("c".into())))
        );
    }

    #[test]
    fn trivially_true_formula() {
        assert_eq!(parse_formula("true").unwrap(), Formula::True);
    }

    #[test]
    fn nested_probabilistic_operator_is_rejected() {
        let formula = parse_formula("P<=0.5 [ true U<=2 P<0.1 [ true U<=1 \"x\" ] ]").unwrap();
        assert!(matches!(formula.as_bounded_until(), Err(Error::UnsupportedFragment(_))));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_formula("P<=0.45 [ true U<=20 fail ]") {
            Err(Error::Syntax { position, .. }) => assert!(position >= 21),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn satisfying_states_on_chain() {
        let waz = corresponding_waz(&chain_pomdp(2));
        let fail = satisfying_states(&waz, &Formula::Atom("fail".into())).unwrap();
        assert_eq!(fail.len(), 1);
        assert!(fail.contains(&waz.state_index("s_f@z_f").unwrap()));
        let all = satisfying_states(&waz, &Formula::True).unwrap();
        assert_eq!(all.len(), waz.states.len());
        let not_fail =
            satisfying_states(&waz, &Formula::Not(Box::new(Formula::Atom("fail".into())))).unwrap();
        assert_eq!(not_fail.len(), waz.states.len() - 1);
    }

    #[test]
    fn sat_distributes_over_conjunction() {
        let waz = corresponding_waz(&chain_pomdp(2));
        let phi1 = Formula::Atom("fail".into());
        let phi2 = Formula::True;
        let conj = Formula::And(Box::new(phi1.clone()), Box::new(phi2.clone()));
        let lhs = satisfying_states(&waz, &conj).unwrap();
        let rhs: BTreeSet<usize> = satisfying_states(&waz, &phi1)
            .unwrap()
            .intersection(&satisfying_states(&waz, &phi2).unwrap())
            .copied()
            .collect();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn path_satisfaction_respects_horizon() {
        let waz = corresponding_waz(&chain_pomdp(2));
        let a = waz.action_index("a").unwrap();
        let s1 = waz.state_index("s1@z_odd").unwrap();
        let sf = waz.state_index("s_f@z_f").unwrap();
        let spec = parse_spec("P<=0.45 [ true U<=20 \"fail\" ]").unwrap();
        let hit = Path::new(vec![waz.initial, s1, sf], vec![a, a]);
        assert!(path_satisfies(&waz, &hit, &spec));
        let miss = Path::new(vec![waz.initial, s1], vec![a]);
        assert!(!path_satisfies(&waz, &miss, &spec));
        let short = parse_spec("P<=0.45 [ true U<=1 \"fail\" ]").unwrap();
        assert!(!path_satisfies(&waz, &hit, &short));
    }

    #[test]
    fn pretty_print_round_trips() {
        for text in [
            "P<=0.45 [ true U<=20 \"fail\" ]",
            "P<0.5 [ \"a\" U<=3 (\"b\" | \"c\") ]",
            "(\"x\" & !\"y\") | true",
        ] {
            let parsed = parse_formula(text).unwrap();
            let reparsed = parse_formula(&parsed.to_string()).unwrap();
            assert_eq!(parsed, reparsed, "round-trip failed for {text}");
        }
    }
}
