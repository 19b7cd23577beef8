//! White-box access to the stored items, for tests and diagnostics.

use std::collections::{BTreeMap, BTreeSet};

use super::{ChildList, Component, DynamicEngine, EngineError, ItemId, ROOT_PARENT};
use crate::analysis::QTree;
use crate::weight::{product, Weight};

/// Stored values of one item.
#[derive(Clone, Debug, PartialEq)]
pub struct ItemInfo<W> {
    pub exists: bool,
    /// Counter per atom containing the variable, keyed by the atom's text.
    pub counters: BTreeMap<String, u64>,
    pub weight: W,
    /// Present for free variables only.
    pub free_weight: Option<W>,
}

/// A q-tree node and the constants of its root path, root first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemKey {
    pub var: String,
    pub path: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ListState<W> {
    /// Own constants of the listed items.
    pub members: BTreeSet<String>,
    pub sum: W,
    /// Present when the listed node is free.
    pub free_sum: Option<W>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemState<W> {
    pub counters: BTreeMap<String, u64>,
    pub weight: W,
    pub free_weight: Option<W>,
    pub linked: bool,
    /// Child lists keyed by child variable.
    pub lists: BTreeMap<String, ListState<W>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentState<W> {
    pub root: String,
    pub start: ListState<W>,
    pub items: BTreeMap<ItemKey, ItemState<W>>,
}

/// Every counter, weight, list and register of an engine, independent of
/// list order and arena layout.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineState<W> {
    pub components: Vec<ComponentState<W>>,
}

fn atom_label(tree: &QTree, atom: usize) -> String {
    crate::analysis::atom_text(tree.component(), atom)
}

impl<W: Weight> DynamicEngine<W> {
    /// Looks up the item of `var` whose root path carries `path` (root
    /// first, `var`'s own constant last).
    pub fn inspect<S: AsRef<str>>(
        &self,
        var: &str,
        path: &[S],
    ) -> Result<ItemInfo<W>, EngineError> {
        let &(ci, ni) = self
            .node_by_name
            .get(var)
            .ok_or_else(|| EngineError::UnknownVariable(var.to_string()))?;
        let comp = &self.components[ci];
        let node = &comp.nodes[ni];
        if path.len() != node.path.len() {
            return Err(EngineError::KeyLength {
                var: var.to_string(),
                expected: node.path.len(),
                found: path.len(),
            });
        }
        let absent = ItemInfo {
            exists: false,
            counters: BTreeMap::new(),
            weight: W::zero(),
            free_weight: None,
        };
        let mut parent = ROOT_PARENT;
        for (&p, token) in node.path.iter().zip(path) {
            let Some(c) = self.interner.get(token.as_ref()) else {
                return Ok(absent);
            };
            match comp.index[p].get(&(parent, c)) {
                Some(&id) => parent = id,
                None => return Ok(absent),
            }
        }
        let item = self.arena.get(parent);
        Ok(ItemInfo {
            exists: true,
            counters: node
                .atoms
                .iter()
                .zip(item.counters.iter())
                .map(|(&a, &c)| (atom_label(&comp.tree, a), c))
                .collect(),
            weight: item.weight.clone(),
            free_weight: node.free.then(|| item.free_weight.clone()),
        })
    }

    fn walk_list(&self, list: &ChildList<W>) -> Vec<ItemId> {
        let mut out = Vec::new();
        let mut cur = list.head;
        while let Some(id) = cur {
            out.push(id);
            cur = self.arena.get(id).next;
        }
        out
    }

    fn list_state(&self, comp: &Component<W>, list: &ChildList<W>, node: usize) -> ListState<W> {
        ListState {
            members: self
                .walk_list(list)
                .into_iter()
                .map(|id| self.resolve(self.arena.get(id).value).to_string())
                .collect(),
            sum: list.sum.clone(),
            free_sum: comp.nodes[node].free.then(|| list.free_sum.clone()),
        }
    }

    fn item_key(&self, comp: &Component<W>, mut id: ItemId) -> ItemKey {
        let var = comp.nodes[self.arena.get(id).node].name.clone();
        let mut path = Vec::new();
        loop {
            let item = self.arena.get(id);
            path.push(self.resolve(item.value).to_string());
            match item.parent {
                Some(p) => id = p,
                None => break,
            }
        }
        path.reverse();
        ItemKey { var, path }
    }

    pub fn state(&self) -> EngineState<W> {
        let components = self
            .components
            .iter()
            .map(|comp| {
                let root = comp.tree.root().index();
                let mut items = BTreeMap::new();
                for (ni, index) in comp.index.iter().enumerate() {
                    let node = &comp.nodes[ni];
                    for &id in index.values() {
                        let item = self.arena.get(id);
                        let lists = node
                            .children
                            .iter()
                            .zip(item.lists.iter())
                            .map(|(&c, l)| {
                                (comp.nodes[c].name.clone(), self.list_state(comp, l, c))
                            })
                            .collect();
                        items.insert(
                            self.item_key(comp, id),
                            ItemState {
                                counters: node
                                    .atoms
                                    .iter()
                                    .zip(item.counters.iter())
                                    .map(|(&a, &c)| (atom_label(&comp.tree, a), c))
                                    .collect(),
                                weight: item.weight.clone(),
                                free_weight: node.free.then(|| item.free_weight.clone()),
                                linked: item.linked,
                                lists,
                            },
                        );
                    }
                }
                ComponentState {
                    root: comp.nodes[root].name.clone(),
                    start: self.list_state(comp, &comp.start, root),
                    items,
                }
            })
            .collect();
        EngineState { components }
    }

    /// Checks the structural invariants: link consistency, lists holding
    /// exactly the fit items, registers equal to list sums, and weights
    /// agreeing with the product formulas over counters and registers.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (ci, comp) in self.components.iter().enumerate() {
            let root = comp.tree.root().index();
            self.check_list(comp, &comp.start, None, root)
                .map_err(|e| format!("component {ci} start list: {e}"))?;
            for (ni, index) in comp.index.iter().enumerate() {
                let node = &comp.nodes[ni];
                for (&(parent, value), &id) in index {
                    let item = self.arena.get(id);
                    let key = self.item_key(comp, id);
                    let fail = |msg: String| format!("item {key:?}: {msg}");
                    if item.node != ni
                        || item.value != value
                        || item.parent.unwrap_or(ROOT_PARENT) != parent
                    {
                        return Err(fail("index entry disagrees with the item".into()));
                    }
                    if item.counters.iter().all(|&c| c == 0) {
                        return Err(fail("present with all counters zero".into()));
                    }
                    let weight = if node.atm_slots.iter().any(|&s| item.counters[s] == 0) {
                        W::zero()
                    } else {
                        product(item.lists.iter().map(|l| l.sum.clone()))
                    };
                    if weight != item.weight {
                        return Err(fail(format!(
                            "weight {} but formula gives {weight}",
                            item.weight
                        )));
                    }
                    let free_weight = if node.free && !weight.is_zero() {
                        product(
                            node.free_child_slots
                                .iter()
                                .map(|&s| item.lists[s].free_sum.clone()),
                        )
                    } else {
                        W::zero()
                    };
                    if free_weight != item.free_weight {
                        return Err(fail(format!(
                            "free weight {} but formula gives {free_weight}",
                            item.free_weight
                        )));
                    }
                    if item.linked == item.weight.is_zero() {
                        return Err(fail("list membership disagrees with fitness".into()));
                    }
                    for (s, &c) in node.children.iter().enumerate() {
                        self.check_list(comp, &item.lists[s], Some(id), c)
                            .map_err(|e| fail(format!("list of {}: {e}", comp.nodes[c].name)))?;
                    }
                }
            }
        }
        Ok(())
    }

    fn check_list(
        &self,
        comp: &Component<W>,
        list: &ChildList<W>,
        owner: Option<ItemId>,
        node: usize,
    ) -> Result<(), String> {
        let members = self.walk_list(list);
        let mut prev = None;
        let mut sum = W::zero();
        let mut free_sum = W::zero();
        for &id in &members {
            let item = self.arena.get(id);
            if item.prev != prev || !item.linked || item.node != node || item.parent != owner {
                return Err("broken links".into());
            }
            if item.weight.is_zero() {
                return Err("contains an unfit item".into());
            }
            sum = sum + item.weight.clone();
            free_sum = free_sum + item.free_weight.clone();
            prev = Some(id);
        }
        let fit = comp.index[node]
            .iter()
            .filter(|(&(p, _), &id)| {
                p == owner.unwrap_or(ROOT_PARENT) && !self.arena.get(id).weight.is_zero()
            })
            .count();
        if fit != members.len() {
            return Err(format!("{} members but {fit} fit items", members.len()));
        }
        if sum != list.sum {
            return Err(format!(
                "sum register {} but members sum to {sum}",
                list.sum
            ));
        }
        if comp.nodes[node].free && free_sum != list.free_sum {
            return Err(format!(
                "free sum register {} but members sum to {free_sum}",
                list.free_sum
            ));
        }
        Ok(())
    }
}
