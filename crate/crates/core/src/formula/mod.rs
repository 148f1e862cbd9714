//! STL abstract syntax, concrete syntax and structural queries.

mod parser;

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::trace::Bounds;

pub use parser::parse;

/// Comparison direction of an atomic predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `var >= threshold`
    Geq,
    /// `var <= threshold`
    Leq,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::Geq => ">=",
            Direction::Leq => "<=",
        }
    }
}

/// Closed time interval `[lower, upper]` in seconds, relative to the evaluation instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Interval {
                lower,
                upper,
                reason: "bounds must be finite",
            });
        }
        if lower < 0.0 || upper < 0.0 {
            return Err(Error::Interval {
                lower,
                upper,
                reason: "bounds must be non-negative",
            });
        }
        if lower > upper {
            return Err(Error::Interval {
                lower,
                upper,
                reason: "lower bound exceeds upper bound",
            });
        }
        Ok(Interval { lower, upper })
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lower, self.upper)
    }
}

/// An STL formula. `And`/`Or` keep their children in source order and always
/// have at least two of them; nested groups written with parentheses stay
/// nested because the arity enters the AGIM combination.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    Predicate {
        var: String,
        direction: Direction,
        threshold: f64,
    },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Eventually(Interval, Box<Formula>),
    Globally(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn predicate(var: impl Into<String>, direction: Direction, threshold: f64) -> Self {
        Formula::Predicate {
            var: var.into(),
            direction,
            threshold,
        }
    }

    /// `var >= threshold`
    pub fn geq(var: impl Into<String>, threshold: f64) -> Self {
        Self::predicate(var, Direction::Geq, threshold)
    }

    /// `var <= threshold`
    pub fn leq(var: impl Into<String>, threshold: f64) -> Self {
        Self::predicate(var, Direction::Leq, threshold)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: Formula) -> Self {
        Formula::Not(Box::new(child))
    }

    /// Conjunction of `children`. A single child is returned unchanged.
    ///
    /// Panics on an empty list.
    pub fn and(mut children: Vec<Formula>) -> Self {
        assert!(!children.is_empty(), "conjunction needs at least one child");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::And(children)
        }
    }

    /// Disjunction of `children`. A single child is returned unchanged.
    ///
    /// Panics on an empty list.
    pub fn or(mut children: Vec<Formula>) -> Self {
        assert!(!children.is_empty(), "disjunction needs at least one child");
        if children.len() == 1 {
            children.pop().unwrap()
        } else {
            Formula::Or(children)
        }
    }

    pub fn eventually(lower: f64, upper: f64, child: Formula) -> Result<Self> {
        Ok(Formula::Eventually(
            Interval::new(lower, upper)?,
            Box::new(child),
        ))
    }

    pub fn globally(lower: f64, upper: f64, child: Formula) -> Result<Self> {
        Ok(Formula::Globally(Interval::new(lower, upper)?, Box::new(child)))
    }

    pub fn until(lower: f64, upper: f64, left: Formula, right: Formula) -> Result<Self> {
        Ok(Formula::Until(
            Interval::new(lower, upper)?,
            Box::new(left),
            Box::new(right),
        ))
    }

    /// Membership of the point `(x, y)` in the axis-aligned box
    /// `[x_lo, x_hi] x [y_lo, y_hi]`, as a conjunction of four predicates.
    pub fn in_box(x: &str, y: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Formula::And(vec![
            Formula::geq(x, x_range.0),
            Formula::leq(x, x_range.1),
            Formula::geq(y, y_range.0),
            Formula::leq(y, y_range.1),
        ])
    }

    /// Trace duration needed beyond the evaluation instant.
    pub fn horizon(&self) -> f64 {
        match self {
            Formula::True | Formula::Predicate { .. } => 0.0,
            Formula::Not(child) => child.horizon(),
            Formula::And(children) | Formula::Or(children) => children
                .iter()
                .map(Formula::horizon)
                .fold(0.0, f64::max),
            Formula::Eventually(interval, child) | Formula::Globally(interval, child) => {
                interval.upper + child.horizon()
            }
            Formula::Until(interval, left, right) => {
                interval.upper + left.horizon().max(right.horizon())
            }
        }
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::Predicate { .. } => Vec::new(),
            Formula::Not(child) | Formula::Eventually(_, child) | Formula::Globally(_, child) => {
                vec![child]
            }
            Formula::And(children) | Formula::Or(children) => children.iter().collect(),
            Formula::Until(_, left, right) => vec![left, right],
        }
    }

    /// Pre-order list of all subformulae, starting with `self`.
    pub fn subformulae(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            out.push(f);
            stack.extend(f.children().into_iter().rev());
        }
        out
    }

    /// Names of all signal components referenced by predicates.
    pub fn variables(&self) -> BTreeSet<&str> {
        self.subformulae()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Predicate { var, .. } => Some(var.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn contains_until(&self) -> bool {
        self.subformulae()
            .iter()
            .any(|f| matches!(f, Formula::Until(..)))
    }

    /// Maps every predicate threshold through the same affine normalization
    /// that [`crate::trace::Trace::normalize`] applies to the matching component.
    /// Components without bounds keep their thresholds.
    pub fn normalize_thresholds(&self, bounds: &Bounds) -> Result<Formula> {
        Ok(match self {
            Formula::True => Formula::True,
            Formula::Predicate {
                var,
                direction,
                threshold,
            } => {
                let threshold = match bounds.get(var) {
                    Some(range) => {
                        let mapped = range.normalize(*threshold);
                        if !(-1.0..=1.0).contains(&mapped) {
                            return Err(Error::NotNormalized(format!(
                                "threshold {threshold} of `{var}` lies outside [{}, {}]",
                                range.lower, range.upper
                            )));
                        }
                        mapped
                    }
                    None => *threshold,
                };
                Formula::Predicate {
                    var: var.clone(),
                    direction: *direction,
                    threshold,
                }
            }
            Formula::Not(c) => Formula::Not(Box::new(c.normalize_thresholds(bounds)?)),
            Formula::And(cs) => Formula::And(
                cs.iter()
                    .map(|c| c.normalize_thresholds(bounds))
                    .collect::<Result<_>>()?,
            ),
            Formula::Or(cs) => Formula::Or(
                cs.iter()
                    .map(|c| c.normalize_thresholds(bounds))
                    .collect::<Result<_>>()?,
            ),
            Formula::Eventually(i, c) => {
                Formula::Eventually(*i, Box::new(c.normalize_thresholds(bounds)?))
            }
            Formula::Globally(i, c) => {
                Formula::Globally(*i, Box::new(c.normalize_thresholds(bounds)?))
            }
            Formula::Until(i, l, r) => Formula::Until(
                *i,
                Box::new(l.normalize_thresholds(bounds)?),
                Box::new(r.normalize_thresholds(bounds)?),
            ),
        })
    }

    fn needs_parens_as_operand(&self) -> bool {
        matches!(
            self,
            Formula::And(_) | Formula::Or(_) | Formula::Until(..) | Formula::Predicate { .. }
        )
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.needs_parens_as_operand() {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Predicate {
                var,
                direction,
                threshold,
            } => write!(f, "{var} {} {threshold}", direction.symbol()),
            Formula::Not(child) => {
                write!(f, "!")?;
                child.fmt_operand(f)
            }
            Formula::And(children) | Formula::Or(children) => {
                let sep = if matches!(self, Formula::And(_)) {
                    " & "
                } else {
                    " | "
                };
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    match child {
                        Formula::And(_) | Formula::Or(_) | Formula::Until(..) => {
                            write!(f, "({child})")?
                        }
                        _ => write!(f, "{child}")?,
                    }
                }
                Ok(())
            }
            Formula::Eventually(interval, child) => {
                write!(f, "F{interval} ")?;
                child.fmt_operand(f)
            }
            Formula::Globally(interval, child) => {
                write!(f, "G{interval} ")?;
                child.fmt_operand(f)
            }
            Formula::Until(interval, left, right) => {
                left.fmt_operand(f)?;
                write!(f, " U{interval} ")?;
                right.fmt_operand(f)
            }
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_of_nested_temporal_operators_adds_upper_bounds() {
        let f = parse("F[35,40] G[0,5] (x >= 0)").unwrap();
        assert_eq!(f.horizon(), 45.0);
    }

    #[test]
    fn horizon_of_predicate_is_zero() {
        assert_eq!(Formula::geq("x", 0.0).horizon(), 0.0);
    }

    #[test]
    fn horizon_of_conjunction_is_max_of_children() {
        let f = parse("G[0,30] (p >= 0) & G[0,30] (q >= 0)").unwrap();
        assert_eq!(f.horizon(), 30.0);
        let g = parse("G[0,3] (p >= 0) & F[1,7] (q >= 0)").unwrap();
        assert_eq!(g.horizon(), 7.0);
    }

    #[test]
    fn subformulae_are_pre_order() {
        let p = Formula::geq("p", 0.0);
        let not_p = Formula::not(p.clone());
        assert_eq!(not_p.subformulae(), vec![&not_p, &p]);

        let q = Formula::leq("q", 0.0);
        let and = Formula::And(vec![p.clone(), q.clone()]);
        assert_eq!(and.subformulae(), vec![&and, &p, &q]);

        let nested = parse("G[0,1] F[0,1] (p >= 0)").unwrap();
        assert_eq!(nested.subformulae().len(), 3);
    }

    #[test]
    fn box_membership_is_four_predicates() {
        let green = Formula::in_box("x2", "y2", (6.0, 8.0), (5.0, 7.0));
        assert_eq!(
            green.to_string(),
            "x2 >= 6 & x2 <= 8 & y2 >= 5 & y2 <= 7"
        );
    }

    #[test]
    fn thresholds_follow_component_normalization() {
        let f = parse("G[0,30] (speed <= 100)").unwrap();
        let bounds: Bounds = "speed=0:160".parse().unwrap();
        let g = f.normalize_thresholds(&bounds).unwrap();
        assert_eq!(g, parse("G[0,30] (speed <= 0.25)").unwrap());

        let outside = parse("speed >= 200").unwrap();
        assert!(outside.normalize_thresholds(&bounds).is_err());
    }

    #[test]
    fn degenerate_interval_is_valid_syntax() {
        let i = Interval::new(2.0, 2.0).unwrap();
        assert!(i.is_degenerate());
        assert!(Interval::new(-1.0, 2.0).is_err());
    }
}
