use std::fmt;

use crate::query::{atoms_index, Query, Var};

/// Which half of the q-hierarchical condition a variable pair breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    /// `atoms(x)` and `atoms(y)` overlap without either containing the other.
    Hierarchy,
    /// `atoms(x) ⊊ atoms(y)` with `x` free but `y` quantified.
    Quantifier,
}

/// A variable pair that witnesses a query is not q-hierarchical.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub x: Var,
    pub y: Var,
    pub condition: Condition,
}

impl Violation {
    pub fn describe(&self, q: &Query) -> String {
        let (x, y) = (q.var_name(self.x), q.var_name(self.y));
        match self.condition {
            Condition::Hierarchy => {
                format!("atoms({x}) and atoms({y}) overlap but neither contains the other")
            }
            Condition::Quantifier => format!(
                "atoms({x}) is strictly contained in atoms({y}), {x} is free but {y} is quantified"
            ),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Hierarchy => "hierarchy",
            Condition::Quantifier => "quantifier",
        })
    }
}

/// The first violating pair in variable order, or `None` when `q` is
/// q-hierarchical.
pub fn hierarchy_violation(q: &Query) -> Option<Violation> {
    let index = atoms_index(q);
    let vars: Vec<Var> = q.vars().collect();
    for (i, &x) in vars.iter().enumerate() {
        for &y in &vars[i + 1..] {
            let (ax, ay) = (&index[&x], &index[&y]);
            let x_in_y = ax.is_subset(ay);
            let y_in_x = ay.is_subset(ax);
            if !x_in_y && !y_in_x && !ax.is_disjoint(ay) {
                return Some(Violation {
                    x,
                    y,
                    condition: Condition::Hierarchy,
                });
            }
            if x_in_y && !y_in_x && q.is_free(x) && !q.is_free(y) {
                return Some(Violation {
                    x,
                    y,
                    condition: Condition::Quantifier,
                });
            }
            if y_in_x && !x_in_y && q.is_free(y) && !q.is_free(x) {
                return Some(Violation {
                    x: y,
                    y: x,
                    condition: Condition::Quantifier,
                });
            }
        }
    }
    None
}

pub fn is_q_hierarchical(q: &Query) -> bool {
    hierarchy_violation(q).is_none()
}
