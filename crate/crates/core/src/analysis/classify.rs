use std::fmt;

use super::core::homomorphic_core;
use super::hierarchy::{hierarchy_violation, Violation};
use crate::query::Query;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Constant update time and constant answer/count time or delay.
    Tractable,
    /// No sublinear dynamic algorithm unless OMv (or OV for counting) fails.
    ConditionallyHard,
    /// Not settled: non-q-hierarchical queries with self-joins.
    Open,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Tractable => "Tractable",
            Verdict::ConditionallyHard => "ConditionallyHard",
            Verdict::Open => "Open",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub query: Query,
    pub is_q_hierarchical: bool,
    /// A violating variable pair of `query`, when it is not q-hierarchical.
    pub witness: Option<Violation>,
    pub core: Query,
    pub core_is_q_hierarchical: bool,
    /// Core of the existential closure, which decides Boolean answering.
    pub boolean_core: Query,
    pub boolean_verdict: Verdict,
    pub counting_verdict: Verdict,
    pub enumeration_verdict: Verdict,
}

pub fn classify(q: &Query) -> Classification {
    let witness = hierarchy_violation(q);
    let core = homomorphic_core(q);
    let core_qh = hierarchy_violation(&core).is_none();
    let boolean_core = homomorphic_core(&q.existential_closure());
    let boolean_qh = hierarchy_violation(&boolean_core).is_none();

    let verdict = |ok: bool| {
        if ok {
            Verdict::Tractable
        } else {
            Verdict::ConditionallyHard
        }
    };
    let enumeration_verdict = if core_qh {
        Verdict::Tractable
    } else if q.is_self_join_free() {
        Verdict::ConditionallyHard
    } else {
        Verdict::Open
    };

    Classification {
        query: q.clone(),
        is_q_hierarchical: witness.is_none(),
        witness,
        core,
        core_is_q_hierarchical: core_qh,
        boolean_core,
        boolean_verdict: verdict(boolean_qh),
        counting_verdict: verdict(core_qh),
        enumeration_verdict,
    }
}

impl Classification {
    /// The machine-readable summary line.
    pub fn verdict_line(&self) -> String {
        format!(
            "verdicts boolean={} counting={} enumeration={}",
            self.boolean_verdict, self.counting_verdict, self.enumeration_verdict
        )
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "query: {}", self.query)?;
        match &self.witness {
            None => writeln!(f, "q-hierarchical: yes")?,
            Some(w) => writeln!(
                f,
                "q-hierarchical: no ({} condition on {}, {}: {})",
                w.condition,
                self.query.var_name(w.x),
                self.query.var_name(w.y),
                w.describe(&self.query)
            )?,
        }
        writeln!(
            f,
            "self-join free: {}",
            yes_no(self.query.is_self_join_free())
        )?;
        writeln!(f, "core: {}", self.core)?;
        writeln!(
            f,
            "core q-hierarchical: {}",
            yes_no(self.core_is_q_hierarchical)
        )?;
        writeln!(f, "core of Boolean closure: {}", self.boolean_core)?;
        writeln!(f, "boolean answering: {}", self.boolean_verdict)?;
        writeln!(f, "counting: {}", self.counting_verdict)?;
        writeln!(f, "enumeration: {}", self.enumeration_verdict)?;
        write!(f, "{}", self.verdict_line())
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}
