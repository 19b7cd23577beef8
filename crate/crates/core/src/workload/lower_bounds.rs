//! Update streams that encode online matrix-vector products and orthogonal
//! vector search into query evaluation.
//!
//! For a query with variables `x`, `y` and atoms `ψx` (containing `x` but
//! not `y`), `ψxy` (both) and `ψy` (`y` but not `x`), a matrix `M` and
//! vectors `u`, `v` define a database over the domain `a1..an`, `b1..bn`,
//! `c1..cl`: each atom receives its image under `x -> ai`, `y -> bj`,
//! `z_s -> cs` for those `i, j` with `ui = 1` (for `ψx`), `vj = 1` (for
//! `ψy`), `Mij = 1` (for `ψxy`), and all `i, j` for the remaining atoms.
//! For self-join free queries the query is then satisfied iff `uᵀMv = 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Probe, ProbeAnswer, Stream};
use crate::database::UpdateCommand;
use crate::parse::parse_query;
use crate::query::{Atom, Query, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorkloadError {
    #[error("query has no variables x, y with atoms on x alone, on both, and on y alone")]
    MissingPattern,
}

/// `Q() :- S(x), E(x, y), T(y).`
pub fn oumv_query() -> Query {
    parse_query("Q() :- S(x), E(x, y), T(y).", None).expect("well-formed")
}

/// `Q(x) :- E(x, y), T(y).`
pub fn ov_query() -> Query {
    parse_query("Q(x) :- E(x, y), T(y).", None).expect("well-formed")
}

fn random_bits(rng: &mut ChaCha8Rng, len: usize) -> Vec<bool> {
    (0..len).map(|_| rng.gen_bool(0.5)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OuMvInstance {
    pub n: usize,
    pub matrix: Vec<Vec<bool>>,
    /// `(u, v)` per round.
    pub rounds: Vec<(Vec<bool>, Vec<bool>)>,
}

impl OuMvInstance {
    pub fn random(n: usize, rounds: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = (0..n).map(|_| random_bits(&mut rng, n)).collect();
        let rounds = (0..rounds)
            .map(|_| (random_bits(&mut rng, n), random_bits(&mut rng, n)))
            .collect();
        OuMvInstance { n, matrix, rounds }
    }

    /// `uᵀMv` per round.
    pub fn expected_bits(&self) -> Vec<bool> {
        self.rounds
            .iter()
            .map(|(u, v)| {
                (0..self.n).any(|i| u[i] && (0..self.n).any(|j| self.matrix[i][j] && v[j]))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OvInstance {
    pub n: usize,
    pub d: usize,
    pub u: Vec<Vec<bool>>,
    pub v: Vec<Vec<bool>>,
}

impl OvInstance {
    pub fn random(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        OvInstance {
            n,
            d,
            u: (0..n).map(|_| random_bits(&mut rng, d)).collect(),
            v: (0..n).map(|_| random_bits(&mut rng, d)).collect(),
        }
    }

    /// Per vector of `V`, the number of vectors of `U` it is not orthogonal
    /// to.
    pub fn expected_counts(&self) -> Vec<usize> {
        self.v
            .iter()
            .map(|v| {
                self.u
                    .iter()
                    .filter(|u| (0..self.d).any(|j| u[j] && v[j]))
                    .count()
            })
            .collect()
    }
}

struct Pattern {
    x: Var,
    y: Var,
    psi_x: usize,
    psi_xy: usize,
    psi_y: usize,
}

fn find_pattern(q: &Query) -> Option<Pattern> {
    let atoms = q.atoms();
    let find = |pred: &dyn Fn(&Atom) -> bool| atoms.iter().position(pred);
    for x in q.vars() {
        for y in q.vars().filter(|&y| y != x) {
            let psi_x = find(&|a| a.contains(x) && !a.contains(y));
            let psi_xy = find(&|a| a.contains(x) && a.contains(y));
            let psi_y = find(&|a| a.contains(y) && !a.contains(x));
            if let (Some(psi_x), Some(psi_xy), Some(psi_y)) = (psi_x, psi_xy, psi_y) {
                return Some(Pattern {
                    x,
                    y,
                    psi_x,
                    psi_xy,
                    psi_y,
                });
            }
        }
    }
    None
}

/// The fact contributed by atom `id` for the pair `(i, j)`, 1-based.
fn image(q: &Query, p: &Pattern, id: usize, i: usize, j: usize) -> UpdateCommand {
    let others: Vec<Var> = q.vars().filter(|&v| v != p.x && v != p.y).collect();
    let atom = &q.atoms()[id];
    let tuple: Vec<String> = atom
        .args
        .iter()
        .map(|&v| {
            if v == p.x {
                format!("a{i}")
            } else if v == p.y {
                format!("b{j}")
            } else {
                let s = others.iter().position(|&o| o == v).expect("other variable");
                format!("c{}", s + 1)
            }
        })
        .collect();
    UpdateCommand::insert(&atom.relation, &tuple)
}

/// Builds `D(q, M, 0, 0)`, then per round switches the encodings of `u`
/// and `v` (at most `2n` updates) and probes for a Boolean answer. The
/// expected answers are the bits `uᵀMv`.
pub fn gen_oumv(
    q: &Query,
    inst: &OuMvInstance,
) -> Result<(Stream, Vec<ProbeAnswer>), WorkloadError> {
    let p = find_pattern(q).ok_or(WorkloadError::MissingPattern)?;
    let n = inst.n;
    let mut stream = Stream::new();
    let mut seen = std::collections::HashSet::new();
    for id in 0..q.atoms().len() {
        if id == p.psi_x || id == p.psi_y {
            continue;
        }
        for i in 1..=n {
            for j in 1..=n {
                if id == p.psi_xy && !inst.matrix[i - 1][j - 1] {
                    continue;
                }
                let cmd = image(q, &p, id, i, j);
                if seen.insert(cmd.clone()) {
                    stream.update(cmd);
                }
            }
        }
    }

    let mut u_cur = vec![false; n];
    let mut v_cur = vec![false; n];
    for (u, v) in &inst.rounds {
        for i in 0..n {
            if u[i] != u_cur[i] {
                let cmd = image(q, &p, p.psi_x, i + 1, 1);
                stream.update(if u[i] { cmd } else { cmd.inverse() });
            }
            if v[i] != v_cur[i] {
                let cmd = image(q, &p, p.psi_y, 1, i + 1);
                stream.update(if v[i] { cmd } else { cmd.inverse() });
            }
        }
        u_cur.clone_from(u);
        v_cur.clone_from(v);
        stream.probe(Probe::Answer);
    }
    let expected = inst
        .expected_bits()
        .into_iter()
        .map(ProbeAnswer::Answer)
        .collect();
    Ok((stream, expected))
}

/// Encodes `U` as `E(ai, bj)` for `u^i_j = 1`, then per `v ∈ V` sets `T` to
/// the support of `v` and probes the count of [`ov_query`]. A count below
/// `n` reveals a vector of `U` orthogonal to `v`.
pub fn gen_ov(inst: &OvInstance) -> (Stream, Vec<ProbeAnswer>) {
    let mut stream = Stream::new();
    for (i, u) in inst.u.iter().enumerate() {
        for (j, &bit) in u.iter().enumerate() {
            if bit {
                stream.update(UpdateCommand::insert(
                    "E",
                    &[format!("a{}", i + 1), format!("b{}", j + 1)],
                ));
            }
        }
    }
    let mut t_cur = vec![false; inst.d];
    for v in &inst.v {
        for j in 0..inst.d {
            if v[j] != t_cur[j] {
                let cmd = UpdateCommand::insert("T", &[format!("b{}", j + 1)]);
                stream.update(if v[j] { cmd } else { cmd.inverse() });
            }
        }
        t_cur.clone_from(v);
        stream.probe(Probe::Count);
    }
    let expected = inst
        .expected_counts()
        .into_iter()
        .map(|c| ProbeAnswer::Count(c as u128))
        .collect();
    (stream, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::database::Database;
    use crate::workload::replay_oracle;

    #[test]
    fn single_entry_product() {
        let inst = OuMvInstance {
            n: 1,
            matrix: vec![vec![true]],
            rounds: vec![(vec![true], vec![true])],
        };
        let (stream, expected) = gen_oumv(&oumv_query(), &inst).unwrap();
        let text = crate::workload::serialize_stream(&stream);
        assert_eq!(text, "+ E a1 b1\n+ S a1\n+ T b1\n? answer\n");
        assert_eq!(expected, vec![ProbeAnswer::Answer(true)]);
    }

    #[test]
    fn identity_matrix_rounds() {
        let inst = OuMvInstance {
            n: 2,
            matrix: vec![vec![true, false], vec![false, true]],
            rounds: vec![
                (vec![true, false], vec![false, true]),
                (vec![true, false], vec![true, false]),
            ],
        };
        assert_eq!(inst.expected_bits(), vec![false, true]);
        let (stream, expected) = gen_oumv(&oumv_query(), &inst).unwrap();
        let got = replay_oracle(&oumv_query(), &mut Database::new(), &stream).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn rejects_queries_without_the_pattern() {
        let q = parse_query("Q() :- E(x, y), T(y).", None).unwrap();
        assert!(matches!(
            gen_oumv(&q, &OuMvInstance::random(2, 1, 0)),
            Err(WorkloadError::MissingPattern)
        ));
    }

    #[test]
    fn orthogonality_counts() {
        let inst = OvInstance {
            n: 2,
            d: 2,
            u: vec![vec![true, false], vec![false, true]],
            v: vec![vec![true, true], vec![false, true]],
        };
        assert_eq!(inst.expected_counts(), vec![2, 1]);
        let (stream, expected) = gen_ov(&inst);
        let got = replay_oracle(&ov_query(), &mut Database::new(), &stream).unwrap();
        assert_eq!(got, expected);
    }
}
