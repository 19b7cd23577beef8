//! Dynamic evaluation of queries whose homomorphic core is q-hierarchical.
//!
//! The core is split into connected components, each with a q-tree. For
//! every node `v` of a q-tree and every assignment of the path from the root
//! to `v` that is supported by some stored fact, there is an item holding:
//! one counter per atom containing `v`, the weight (number of satisfying
//! extensions below `v`), the free weight (the same, projected to free
//! variables), and per child node a doubly linked list of the fit child
//! items together with the sums of their weights. Fit root items hang off a
//! per-component start list.
//!
//! An update touches at most one item per node on the path of each matching
//! atom, bottom-up, so its cost does not depend on the database. Counting is
//! a product of start-list registers, and enumeration walks the lists of the
//! free nodes like an odometer.

mod audit;
mod cursor;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use indexmap::IndexSet;
use thiserror::Error;

use crate::analysis::{build_qtree, classify, Classification, QTree};
use crate::database::{Const, Database, Interner, UpdateCommand, UpdateKind};
use crate::query::{connected_components, AtomId, Query, Var};
use crate::weight::{product, Weight};

pub use audit::{ComponentState, EngineState, ItemInfo, ItemKey, ItemState, ListState};
pub use cursor::{Cursor, Tuples};

type ItemId = u32;

/// Index key component standing in for "no parent" at root nodes.
const ROOT_PARENT: ItemId = ItemId::MAX;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("the core `{}` is not q-hierarchical", .0.core)]
    CoreNotQHierarchical(Box<Classification>),
    #[error("relation `{0}` does not occur in the query")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected}, got a tuple of length {found}")]
    Arity {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("`{0}` is not a variable of the maintained core")]
    UnknownVariable(String),
    #[error("item keys of `{var}` have {expected} values, got {found}")]
    KeyLength {
        var: String,
        expected: usize,
        found: usize,
    },
}

/// Returned by [`DynamicEngine::next`] once an update has been applied after
/// the cursor was opened.
#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("cursor invalidated by an update")]
pub struct StaleCursor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChangeSummary {
    /// False for inserts of present facts and deletes of absent ones.
    pub applied: bool,
}

#[derive(Clone, Debug)]
struct ChildList<W> {
    head: Option<ItemId>,
    /// Sum of the weights of the listed items.
    sum: W,
    /// Sum of their free weights; only maintained for free child nodes.
    free_sum: W,
}

impl<W: Weight> ChildList<W> {
    fn new() -> Self {
        ChildList {
            head: None,
            sum: W::zero(),
            free_sum: W::zero(),
        }
    }
}

#[derive(Clone, Debug)]
struct Item<W> {
    node: usize,
    parent: Option<ItemId>,
    value: Const,
    counters: Box<[u64]>,
    weight: W,
    free_weight: W,
    lists: Box<[ChildList<W>]>,
    prev: Option<ItemId>,
    next: Option<ItemId>,
    linked: bool,
}

#[derive(Clone, Debug)]
struct Node {
    name: String,
    parent: Option<usize>,
    /// Position among the parent's children.
    slot: usize,
    children: Vec<usize>,
    free: bool,
    /// Atoms containing the variable; counters are indexed like this list.
    atoms: Vec<AtomId>,
    /// Counter slots of the atoms represented at this node.
    atm_slots: Vec<usize>,
    /// Child slots of the free children.
    free_child_slots: Vec<usize>,
    path: Vec<usize>,
}

/// How a fact of one relation reaches the items of one atom.
#[derive(Clone, Debug)]
struct AtomPlan {
    /// Nodes from the root to the representing node.
    path: Vec<usize>,
    /// Tuple position holding the value of each path node.
    positions: Vec<usize>,
    /// Counter slot of this atom at each path node.
    counter_slots: Vec<usize>,
    /// Positions that must carry equal constants (repeated variables).
    guard: Vec<(usize, usize)>,
}

impl AtomPlan {
    fn matches(&self, tuple: &[Const]) -> bool {
        self.guard.iter().all(|&(s, t)| tuple[s] == tuple[t])
    }
}

#[derive(Clone, Debug)]
struct Component<W> {
    tree: QTree,
    nodes: Vec<Node>,
    /// Per node: (parent item, own constant) -> item.
    index: Vec<HashMap<(ItemId, Const), ItemId>>,
    plans: Vec<AtomPlan>,
    start: ChildList<W>,
    has_free: bool,
}

#[derive(Clone, Debug, Default)]
struct Arena<W> {
    items: Vec<Item<W>>,
    vacant: Vec<ItemId>,
}

impl<W> Arena<W> {
    fn alloc(&mut self, item: Item<W>) -> ItemId {
        match self.vacant.pop() {
            Some(id) => {
                self.items[id as usize] = item;
                id
            }
            None => {
                self.items.push(item);
                (self.items.len() - 1) as ItemId
            }
        }
    }

    fn get(&self, id: ItemId) -> &Item<W> {
        &self.items[id as usize]
    }

    fn get_mut(&mut self, id: ItemId) -> &mut Item<W> {
        &mut self.items[id as usize]
    }
}

/// The list an item of `node` belongs to: its parent's child list, or the
/// start list for root items.
fn owner_list<'a, W>(
    items: &'a mut [Item<W>],
    start: &'a mut ChildList<W>,
    parent: Option<ItemId>,
    slot: usize,
) -> &'a mut ChildList<W> {
    match parent {
        Some(p) => &mut items[p as usize].lists[slot],
        None => start,
    }
}

/// Dynamic query evaluation with weights of type `W`.
#[derive(Debug)]
pub struct DynamicEngine<W> {
    query: Query,
    classification: Classification,
    relations: HashMap<String, usize>,
    relation_names: Vec<String>,
    arities: Vec<usize>,
    facts: Vec<IndexSet<Box<[Const]>>>,
    /// Per relation: (component, atom) pairs to update.
    plans_by_relation: Vec<Vec<(usize, usize)>>,
    components: Vec<Component<W>>,
    arena: Arena<W>,
    interner: Interner,
    node_by_name: HashMap<String, (usize, usize)>,
    /// Enumeration slots, the document orders of all components concatenated.
    slots: Vec<(usize, usize)>,
    /// Slot of the parent node, `None` for component roots.
    slot_parent: Vec<Option<usize>>,
    /// Slot holding each head variable, in head order.
    head_slots: Vec<usize>,
    /// Components without free variables.
    gates: Vec<usize>,
    version: u64,
    steps: AtomicU64,
    scratch: Vec<ItemId>,
}

impl<W: Weight> DynamicEngine<W> {
    /// Sets up an empty structure for the core of `q`.
    pub fn create(q: &Query) -> Result<Self, EngineError> {
        let classification = classify(q);
        if !classification.core_is_q_hierarchical {
            return Err(EngineError::CoreNotQHierarchical(Box::new(classification)));
        }
        let core = classification.core.clone();

        let mut relations = HashMap::new();
        let mut relation_names = Vec::new();
        let mut arities = Vec::new();
        for (name, arity) in q.schema().relations() {
            relations.insert(name.to_string(), relation_names.len());
            relation_names.push(name.to_string());
            arities.push(arity);
        }
        let mut plans_by_relation = vec![Vec::new(); relation_names.len()];

        let mut components = Vec::new();
        let mut node_by_name = HashMap::new();
        for (ci, comp_query) in connected_components(&core).into_iter().enumerate() {
            let tree =
                build_qtree(&comp_query).expect("components of a q-hierarchical core have q-trees");
            let component = Self::build_component(tree);
            for (ni, node) in component.nodes.iter().enumerate() {
                node_by_name.insert(node.name.clone(), (ci, ni));
            }
            for (ai, atom) in component.tree.component().atoms().iter().enumerate() {
                plans_by_relation[relations[&atom.relation]].push((ci, ai));
            }
            components.push(component);
        }

        let mut slots = Vec::new();
        let mut slot_parent = Vec::new();
        let mut gates = Vec::new();
        for (ci, comp) in components.iter().enumerate() {
            if !comp.has_free {
                gates.push(ci);
                continue;
            }
            let base = slots.len();
            let order: Vec<usize> = comp.tree.doc_order().iter().map(|v| v.index()).collect();
            for &ni in &order {
                slots.push((ci, ni));
                slot_parent.push(
                    comp.nodes[ni]
                        .parent
                        .map(|p| base + order.iter().position(|&o| o == p).expect("free parent")),
                );
            }
        }
        let head_slots = q
            .head()
            .iter()
            .map(|&h| {
                let target = node_by_name[q.var_name(h)];
                slots
                    .iter()
                    .position(|&s| s == target)
                    .expect("head variable has a slot")
            })
            .collect();

        Ok(DynamicEngine {
            query: q.clone(),
            classification,
            relations,
            relation_names,
            facts: arities.iter().map(|_| IndexSet::new()).collect(),
            arities,
            plans_by_relation,
            components,
            arena: Arena {
                items: Vec::new(),
                vacant: Vec::new(),
            },
            interner: Interner::new(),
            node_by_name,
            slots,
            slot_parent,
            head_slots,
            gates,
            version: 0,
            steps: AtomicU64::new(0),
            scratch: Vec::new(),
        })
    }

    fn build_component(tree: QTree) -> Component<W> {
        let q = tree.component();
        let n = q.var_count();
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            let v = Var::from_index(i);
            let parent = tree.parent(v);
            let children: Vec<usize> = tree.children(v).iter().map(|c| c.index()).collect();
            let atoms = tree.atoms_of(v);
            let slot_of = |a: &AtomId| {
                atoms
                    .iter()
                    .position(|b| b == a)
                    .expect("atm(v) within atoms(v)")
            };
            nodes.push(Node {
                name: q.var_name(v).to_string(),
                parent: parent.map(|p| p.index()),
                slot: parent.map_or(0, |p| {
                    tree.children(p)
                        .iter()
                        .position(|&c| c == v)
                        .expect("child of parent")
                }),
                free: q.is_free(v),
                atm_slots: tree.atm(v).iter().map(slot_of).collect(),
                free_child_slots: (0..children.len())
                    .filter(|&s| q.is_free(Var::from_index(children[s])))
                    .collect(),
                path: tree.path(v).iter().map(|p| p.index()).collect(),
                children,
                atoms,
            });
        }

        let plans = q
            .atoms()
            .iter()
            .enumerate()
            .map(|(ai, atom)| {
                let node = tree.representing_node(ai);
                let path = nodes[node.index()].path.clone();
                let first_pos = |v: Var| {
                    atom.args
                        .iter()
                        .position(|&a| a == v)
                        .expect("path variable in atom")
                };
                AtomPlan {
                    positions: path
                        .iter()
                        .map(|&p| first_pos(Var::from_index(p)))
                        .collect(),
                    counter_slots: path
                        .iter()
                        .map(|&p| {
                            nodes[p]
                                .atoms
                                .iter()
                                .position(|&b| b == ai)
                                .expect("atom on path")
                        })
                        .collect(),
                    guard: atom
                        .args
                        .iter()
                        .enumerate()
                        .filter_map(|(s, &v)| {
                            let t = first_pos(v);
                            (t != s).then_some((s, t))
                        })
                        .collect(),
                    path,
                }
            })
            .collect();

        let has_free = !q.head().is_empty();
        Component {
            index: vec![HashMap::new(); n],
            nodes,
            plans,
            start: ChildList::new(),
            has_free,
            tree,
        }
    }

    pub fn query(&self) -> &Query {
        &self.query
    }

    /// The maintained core of the query.
    pub fn core(&self) -> &Query {
        &self.classification.core
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    /// One q-tree per connected component of the core.
    pub fn qtrees(&self) -> impl Iterator<Item = &QTree> {
        self.components.iter().map(|c| &c.tree)
    }

    pub fn interner(&self) -> &Interner {
        &self.interner
    }

    pub fn resolve(&self, c: Const) -> &str {
        self.interner.resolve(c)
    }

    pub fn tokens(&self, tuple: &[Const]) -> Vec<String> {
        tuple.iter().map(|&c| self.resolve(c).to_string()).collect()
    }

    /// Number of applied updates so far.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Item accesses and list-link operations performed so far.
    pub fn steps(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }

    fn step(&self, n: u64) {
        self.steps.fetch_add(n, Ordering::Relaxed);
    }

    /// Number of stored facts.
    pub fn fact_count(&self) -> usize {
        self.facts.iter().map(|f| f.len()).sum()
    }

    /// The stored facts as a database, relation by relation.
    pub fn database(&self) -> Database {
        let mut d = Database::new();
        for (r, facts) in self.facts.iter().enumerate() {
            for tuple in facts {
                let tokens = self.tokens(tuple);
                d.insert(&self.relation_names[r], &tokens)
                    .expect("stored facts respect the query's arities");
            }
        }
        d
    }

    /// Inserts every fact of `d`, in the database's order.
    pub fn load(&mut self, d: &Database) -> Result<(), EngineError> {
        for fact in d.facts() {
            let tokens: Vec<&str> = fact.tuple.iter().map(|&c| d.resolve(c)).collect();
            self.update(UpdateKind::Insert, &fact.relation, &tokens)?;
        }
        Ok(())
    }

    pub fn apply(&mut self, cmd: &UpdateCommand) -> Result<ChangeSummary, EngineError> {
        self.update(cmd.kind, &cmd.relation, &cmd.tuple)
    }

    pub fn insert<S: AsRef<str>>(
        &mut self,
        relation: &str,
        tuple: &[S],
    ) -> Result<ChangeSummary, EngineError> {
        self.update(UpdateKind::Insert, relation, tuple)
    }

    pub fn delete<S: AsRef<str>>(
        &mut self,
        relation: &str,
        tuple: &[S],
    ) -> Result<ChangeSummary, EngineError> {
        self.update(UpdateKind::Delete, relation, tuple)
    }

    fn update<S: AsRef<str>>(
        &mut self,
        kind: UpdateKind,
        relation: &str,
        tuple: &[S],
    ) -> Result<ChangeSummary, EngineError> {
        let r = *self
            .relations
            .get(relation)
            .ok_or_else(|| EngineError::UnknownRelation(relation.to_string()))?;
        if tuple.len() != self.arities[r] {
            return Err(EngineError::Arity {
                relation: relation.to_string(),
                expected: self.arities[r],
                found: tuple.len(),
            });
        }
        let insert = kind == UpdateKind::Insert;
        let consts: Box<[Const]> = if insert {
            tuple
                .iter()
                .map(|t| self.interner.intern(t.as_ref()))
                .collect()
        } else {
            match tuple
                .iter()
                .map(|t| self.interner.get(t.as_ref()))
                .collect::<Option<_>>()
            {
                Some(c) => c,
                None => return Ok(ChangeSummary { applied: false }),
            }
        };
        let changed = if insert {
            self.facts[r].insert(consts.clone())
        } else {
            self.facts[r].swap_remove(&consts)
        };
        if !changed {
            return Ok(ChangeSummary { applied: false });
        }
        for i in 0..self.plans_by_relation[r].len() {
            let (ci, ai) = self.plans_by_relation[r][i];
            if self.components[ci].plans[ai].matches(&consts) {
                self.apply_atom(ci, ai, &consts, insert);
            }
        }
        self.version += 1;
        Ok(ChangeSummary { applied: true })
    }

    /// Propagates one fact matching one atom through the items on the
    /// atom's path, from the representing node up to the root.
    fn apply_atom(&mut self, ci: usize, ai: usize, tuple: &[Const], insert: bool) {
        let comp = &mut self.components[ci];
        let arena = &mut self.arena;
        let plan = &comp.plans[ai];
        let mut ids = std::mem::take(&mut self.scratch);
        ids.clear();
        let mut steps = 0u64;

        let mut parent = ROOT_PARENT;
        for (j, &ni) in plan.path.iter().enumerate() {
            let value = tuple[plan.positions[j]];
            steps += 1;
            let id = match comp.index[ni].get(&(parent, value)) {
                Some(&id) => id,
                None => {
                    debug_assert!(insert, "deleted facts have their items");
                    let node = &comp.nodes[ni];
                    let id = arena.alloc(Item {
                        node: ni,
                        parent: (parent != ROOT_PARENT).then_some(parent),
                        value,
                        counters: vec![0; node.atoms.len()].into_boxed_slice(),
                        weight: W::zero(),
                        free_weight: W::zero(),
                        lists: node.children.iter().map(|_| ChildList::new()).collect(),
                        prev: None,
                        next: None,
                        linked: false,
                    });
                    comp.index[ni].insert((parent, value), id);
                    id
                }
            };
            ids.push(id);
            parent = id;
        }

        for j in (0..plan.path.len()).rev() {
            let id = ids[j];
            let node = &comp.nodes[plan.path[j]];
            steps += 1;
            let item = arena.get_mut(id);
            let counter = &mut item.counters[plan.counter_slots[j]];
            if insert {
                *counter += 1;
            } else {
                *counter -= 1;
            }

            // counters of represented atoms are 0 or 1: the path fixes the fact
            let weight = if node.atm_slots.iter().any(|&s| item.counters[s] == 0) {
                W::zero()
            } else {
                product(item.lists.iter().map(|l| l.sum.clone()))
            };
            let free_weight = if node.free && !weight.is_zero() {
                product(
                    node.free_child_slots
                        .iter()
                        .map(|&s| item.lists[s].free_sum.clone()),
                )
            } else {
                W::zero()
            };
            let old_weight = std::mem::replace(&mut item.weight, weight.clone());
            let old_free = std::mem::replace(&mut item.free_weight, free_weight.clone());
            let fit = !weight.is_zero();
            let linked = item.linked;
            let vacated = item.counters.iter().all(|&c| c == 0);
            let (parent, value) = (item.parent, item.value);

            let list = owner_list(&mut arena.items, &mut comp.start, parent, node.slot);
            list.sum = list.sum.clone() + weight - old_weight;
            if node.free {
                list.free_sum = list.free_sum.clone() + free_weight - old_free;
            }

            if fit && !linked {
                steps += link_front(arena, &mut comp.start, parent, node.slot, id);
            } else if !fit && linked {
                steps += unlink(arena, &mut comp.start, parent, node.slot, id);
            }
            if vacated {
                comp.index[plan.path[j]].remove(&(parent.unwrap_or(ROOT_PARENT), value));
                arena.vacant.push(id);
            }
        }

        self.scratch = ids;
        self.step(steps);
    }

    /// `|q(D)|`.
    pub fn count(&self) -> W {
        self.step(self.components.len() as u64);
        product(self.components.iter().map(|c| {
            if c.has_free {
                c.start.free_sum.clone()
            } else if c.start.sum.is_zero() {
                W::zero()
            } else {
                W::one()
            }
        }))
    }

    /// Whether `q(D)` is nonempty.
    pub fn answer(&self) -> bool {
        self.step(self.components.len() as u64);
        self.components.iter().all(|c| !c.start.sum.is_zero())
    }
}

/// Puts a newly fit item at the front of its list. Returns the step count.
fn link_front<W>(
    arena: &mut Arena<W>,
    start: &mut ChildList<W>,
    parent: Option<ItemId>,
    slot: usize,
    id: ItemId,
) -> u64 {
    let list = owner_list(&mut arena.items, start, parent, slot);
    let old_head = list.head.replace(id);
    let item = arena.get_mut(id);
    item.prev = None;
    item.next = old_head;
    item.linked = true;
    match old_head {
        Some(h) => {
            arena.get_mut(h).prev = Some(id);
            2
        }
        None => 1,
    }
}

/// Removes an item that stopped being fit from its list. Returns the step
/// count.
fn unlink<W>(
    arena: &mut Arena<W>,
    start: &mut ChildList<W>,
    parent: Option<ItemId>,
    slot: usize,
    id: ItemId,
) -> u64 {
    let (prev, next) = {
        let item = arena.get_mut(id);
        item.linked = false;
        (item.prev.take(), item.next.take())
    };
    match prev {
        Some(p) => arena.get_mut(p).next = next,
        None => owner_list(&mut arena.items, start, parent, slot).head = next,
    }
    if let Some(n) = next {
        arena.get_mut(n).prev = prev;
    }
    1 + u64::from(next.is_some())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::parse::parse_query;

    type E = DynamicEngine<u64>;

    const EXAMPLE: &str =
        "Q(x, y, z, y2, z2) :- R(x, y, z), R(x, y, z2), E(x, y), E(x, y2), S(x, y, z).";

    fn example_engine() -> E {
        let mut e = E::create(&parse_query(EXAMPLE, None).unwrap()).unwrap();
        let s = [
            ["a", "e", "a"],
            ["a", "e", "b"],
            ["a", "f", "c"],
            ["b", "g", "b"],
            ["b", "p", "a"],
        ];
        let extra = [
            ["a", "e", "c"],
            ["b", "g", "a"],
            ["b", "g", "c"],
            ["b", "p", "b"],
            ["b", "p", "c"],
        ];
        for t in [["a", "e"], ["a", "f"], ["b", "d"], ["b", "g"], ["b", "h"]] {
            e.insert("E", &t).unwrap();
        }
        for t in s {
            e.insert("S", &t).unwrap();
            e.insert("R", &t).unwrap();
        }
        for t in extra {
            e.insert("R", &t).unwrap();
        }
        e
    }

    fn results(e: &E) -> BTreeSet<Vec<String>> {
        e.tuples().map(|t| e.tokens(&t)).collect()
    }

    /// Result listed by hand: (x, y, z, y2, z2).
    fn expected_example() -> BTreeSet<Vec<String>> {
        let mut out = BTreeSet::new();
        let mut add = |x: &str, y: &str, zs: &[&str], y2s: &[&str], z2s: &[&str]| {
            for z in zs {
                for y2 in y2s {
                    for z2 in z2s {
                        out.insert([x, y, z, y2, z2].map(String::from).to_vec());
                    }
                }
            }
        };
        add("a", "e", &["a", "b"], &["e", "f"], &["a", "b", "c"]);
        add("a", "f", &["c"], &["e", "f"], &["c"]);
        add("b", "g", &["b"], &["d", "g", "h"], &["a", "b", "c"]);
        out
    }

    #[test]
    fn example_counts_weights_and_results() {
        let mut e = example_engine();
        assert_eq!(e.count(), 23);
        assert!(e.answer());
        assert_eq!(e.inspect("x", &["a"]).unwrap().weight, 14);
        assert_eq!(e.inspect("x", &["b"]).unwrap().weight, 9);
        let unfit = e.inspect("y", &["b", "p"]).unwrap();
        assert!(unfit.exists);
        assert_eq!(unfit.weight, 0);
        assert_eq!(results(&e), expected_example());
        e.check_invariants().unwrap();

        assert!(e.insert("E", &["b", "p"]).unwrap().applied);
        assert_eq!(e.count(), 38);
        assert_eq!(e.inspect("x", &["b"]).unwrap().weight, 24);
        assert_eq!(results(&e).len(), 38);
        e.check_invariants().unwrap();

        assert!(!e.insert("E", &["b", "p"]).unwrap().applied);
        assert!(e.delete("E", &["b", "p"]).unwrap().applied);
        assert_eq!(e.count(), 23);
        assert_eq!(e.inspect("x", &["b"]).unwrap().weight, 9);
        assert_eq!(results(&e), expected_example());
        e.check_invariants().unwrap();
    }

    #[test]
    fn inspect_reports_absent_items_and_bad_keys() {
        let e = example_engine();
        assert!(!e.inspect("x", &["zz"]).unwrap().exists);
        assert!(matches!(
            e.inspect("w", &["a"]),
            Err(EngineError::UnknownVariable(_))
        ));
        assert!(matches!(
            e.inspect("y", &["a"]),
            Err(EngineError::KeyLength { .. })
        ));
        let x = e.inspect("x", &["a"]).unwrap();
        assert_eq!(x.counters.len(), 5);
        assert_eq!(x.free_weight, Some(14));
    }

    #[test]
    fn maintains_the_core_of_self_joins() {
        let q = parse_query("Q() :- E(x, x), E(x, y), E(y, y).", None).unwrap();
        let mut e = E::create(&q).unwrap();
        assert_eq!(e.core().atoms().len(), 1);
        e.insert("E", &["1", "2"]).unwrap();
        assert!(!e.answer());
        assert_eq!(e.tuples().count(), 0);
        e.insert("E", &["2", "2"]).unwrap();
        assert!(e.answer());
        assert_eq!(e.count(), 1);
        assert_eq!(results(&e), BTreeSet::from([vec![]]));
    }

    #[test]
    fn rejects_hard_queries() {
        let q = parse_query("Q() :- S(x), E(x, y), T(y).", None).unwrap();
        assert!(matches!(
            E::create(&q),
            Err(EngineError::CoreNotQHierarchical(_))
        ));
    }

    #[test]
    fn empty_database_and_projection() {
        let q = parse_query("Q(x) :- E(x, y).", None).unwrap();
        let mut e = E::create(&q).unwrap();
        assert_eq!(e.count(), 0);
        assert!(!e.answer());
        assert_eq!(e.tuples().count(), 0);
        for t in [["1", "2"], ["1", "3"], ["2", "2"]] {
            e.insert("E", &t).unwrap();
        }
        assert_eq!(e.count(), 2);
    }

    #[test]
    fn cross_product_of_components() {
        let q = parse_query("Q(y, x) :- E(x), F(y), G(z).", None).unwrap();
        let mut e = E::create(&q).unwrap();
        for t in ["1", "2"] {
            e.insert("E", &[t]).unwrap();
        }
        e.insert("F", &["a"]).unwrap();
        assert_eq!(e.count(), 0);
        e.insert("G", &["g"]).unwrap();
        assert_eq!(e.count(), 2);
        let expect: BTreeSet<Vec<String>> = [["a", "1"], ["a", "2"]]
            .iter()
            .map(|r| r.map(String::from).to_vec())
            .collect();
        assert_eq!(results(&e), expect);
    }

    #[test]
    fn updates_invalidate_cursors() {
        let mut e = example_engine();
        let mut c = e.open_cursor();
        assert!(e.next(&mut c).unwrap().is_some());
        e.insert("E", &["b", "p"]).unwrap();
        assert_eq!(e.next(&mut c), Err(StaleCursor));
        // no-op updates leave cursors valid
        let mut c = e.open_cursor();
        e.insert("E", &["b", "p"]).unwrap();
        assert!(e.next(&mut c).is_ok());
    }

    #[test]
    fn update_errors() {
        let mut e = example_engine();
        assert!(matches!(
            e.insert("T", &["a"]),
            Err(EngineError::UnknownRelation(_))
        ));
        assert!(matches!(
            e.insert("E", &["a"]),
            Err(EngineError::Arity { .. })
        ));
        assert!(!e.delete("E", &["unseen", "a"]).unwrap().applied);
    }

    #[test]
    fn repeated_variables_are_guarded() {
        let q = parse_query("Q(x) :- E(x, x), F(x).", None).unwrap();
        let mut e = E::create(&q).unwrap();
        e.insert("E", &["1", "2"]).unwrap();
        e.insert("F", &["1"]).unwrap();
        assert_eq!(e.count(), 0);
        e.insert("E", &["1", "1"]).unwrap();
        assert_eq!(e.count(), 1);
        e.check_invariants().unwrap();
    }

    #[test]
    fn rebuilding_from_facts_gives_the_same_state() {
        let mut e = example_engine();
        e.insert("E", &["b", "p"]).unwrap();
        e.delete("S", &["a", "e", "a"]).unwrap();
        let mut fresh = E::create(e.query()).unwrap();
        fresh.load(&e.database()).unwrap();
        assert_eq!(fresh.state(), e.state());
    }
}
