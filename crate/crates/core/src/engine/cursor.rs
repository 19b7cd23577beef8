//! Enumeration without repetition, one odometer step per tuple.
//!
//! Every free node of every component owns a slot holding an item; the slots
//! follow the document order of each component's free subtree, components
//! one after another. A slot's candidates are the fit items in the list its
//! parent slot's item keeps for it (the start list for roots). Since every
//! listed item is fit, every list reached this way is nonempty, so each
//! advance costs at most one step per slot.

use super::{DynamicEngine, ItemId, StaleCursor};
use crate::database::Const;
use crate::weight::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Fresh,
    Running,
    Finished,
}

/// Position of an enumeration. Holds no borrow of the engine; any applied
/// update makes it stale.
#[derive(Clone, Debug)]
pub struct Cursor {
    version: u64,
    current: Vec<ItemId>,
    phase: Phase,
}

impl Cursor {
    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Finished
    }
}

impl<W: Weight> DynamicEngine<W> {
    pub fn open_cursor(&self) -> Cursor {
        Cursor {
            version: self.version,
            current: Vec::with_capacity(self.slots.len()),
            phase: Phase::Fresh,
        }
    }

    /// The next result tuple in head order, `Ok(None)` at the end.
    pub fn next(&self, cursor: &mut Cursor) -> Result<Option<Vec<Const>>, StaleCursor> {
        if cursor.version != self.version {
            return Err(StaleCursor);
        }
        let found = match cursor.phase {
            Phase::Finished => false,
            Phase::Fresh => self.first(cursor),
            Phase::Running => self.advance(cursor),
        };
        if !found {
            cursor.phase = Phase::Finished;
            return Ok(None);
        }
        cursor.phase = Phase::Running;
        Ok(Some(
            self.head_slots
                .iter()
                .map(|&s| self.arena.get(cursor.current[s]).value)
                .collect(),
        ))
    }

    /// Like [`next`](Self::next), with constants rendered as tokens.
    pub fn next_tokens(&self, cursor: &mut Cursor) -> Result<Option<Vec<String>>, StaleCursor> {
        Ok(self.next(cursor)?.map(|t| self.tokens(&t)))
    }

    /// Iterates over `q(D)`; the borrow rules out interleaved updates.
    pub fn tuples(&self) -> Tuples<'_, W> {
        Tuples {
            engine: self,
            cursor: self.open_cursor(),
        }
    }

    fn list_head(&self, cursor: &Cursor, slot: usize) -> Option<ItemId> {
        let (ci, ni) = self.slots[slot];
        match self.slot_parent[slot] {
            None => self.components[ci].start.head,
            Some(p) => {
                let node = &self.components[ci].nodes[ni];
                self.arena.get(cursor.current[p]).lists[node.slot].head
            }
        }
    }

    fn first(&self, cursor: &mut Cursor) -> bool {
        self.step(self.gates.len() as u64);
        if self
            .gates
            .iter()
            .any(|&ci| self.components[ci].start.sum.is_zero())
        {
            return false;
        }
        if self.slots.is_empty() {
            // Boolean query whose gates are all open: the empty tuple
            return true;
        }
        cursor.current.clear();
        for s in 0..self.slots.len() {
            self.step(1);
            match self.list_head(cursor, s) {
                Some(id) => cursor.current.push(id),
                None => return false,
            }
        }
        true
    }

    fn advance(&self, cursor: &mut Cursor) -> bool {
        for s in (0..self.slots.len()).rev() {
            self.step(1);
            if let Some(next) = self.arena.get(cursor.current[s]).next {
                cursor.current[s] = next;
                for t in s + 1..self.slots.len() {
                    self.step(1);
                    cursor.current[t] = self
                        .list_head(cursor, t)
                        .expect("lists below fit items are nonempty");
                }
                return true;
            }
        }
        false
    }
}

pub struct Tuples<'e, W> {
    engine: &'e DynamicEngine<W>,
    cursor: Cursor,
}

impl<W: Weight> Iterator for Tuples<'_, W> {
    type Item = Vec<Const>;

    fn next(&mut self) -> Option<Vec<Const>> {
        self.engine
            .next(&mut self.cursor)
            .expect("a borrowed engine cannot change")
    }
}
