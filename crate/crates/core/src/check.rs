//! Outcome record for a single inequality or identity evaluated on an instance.

use serde::{Deserialize, Serialize};

/// Slack allowed on inequality checks before they count as failures.
pub const INEQUALITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "relation")]
pub enum Relation {
    /// `lhs <= rhs` up to [`INEQUALITY_SLACK`].
    AtMost,
    /// `|lhs - rhs| <= tolerance`.
    Equal { tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub context: String,
    pub x: Option<usize>,
    pub t: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    pub relation: Relation,
    /// Report-only comparisons (prior-art bounds, unspecified constants)
    /// never decide the exit status.
    pub gating: bool,
}

impl BoundCheck {
    pub fn at_most(name: &str, context: &str, lhs: f64, rhs: f64) -> Self {
        Self::new(name, context, lhs, rhs, Relation::AtMost)
    }

    pub fn equal(name: &str, context: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::new(name, context, lhs, rhs, Relation::Equal { tolerance })
    }

    fn new(name: &str, context: &str, lhs: f64, rhs: f64, relation: Relation) -> Self {
        let margin = rhs - lhs;
        let pass = match relation {
            Relation::AtMost => margin >= -INEQUALITY_SLACK,
            Relation::Equal { tolerance } => margin.abs() <= tolerance,
        };
        Self {
            name: name.to_string(),
            context: context.to_string(),
            x: None,
            t: None,
            lhs,
            rhs,
            margin,
            pass,
            relation,
            gating: true,
        }
    }

    pub fn at(mut self, x: usize) -> Self {
        self.x = Some(x);
        self
    }

    pub fn when(mut self, t: u64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn report_only(mut self) -> Self {
        self.gating = false;
        self
    }

    /// True when this check is gating and failed.
    pub fn is_failure(&self) -> bool {
        self.gating && !self.pass
    }
}
