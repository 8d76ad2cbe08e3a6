//! Reference longest-prefix-match trie.
//!
//! A plain, path-uncompressed binary trie. It is the ground truth for every
//! equivalence check in this crate and the off-set oracle that guards cube
//! expansion, so clarity beats speed throughout.

use crate::cube::{word_mask, TernaryCube};
use crate::table::{Prefix, RoutingTable};
use thiserror::Error;

#[derive(Clone, Default, Debug)]
struct Node {
    port: Option<u32>,
    child: [Option<Box<Node>>; 2],
}

/// Binary trie keyed by address bits, MSB first.
#[derive(Clone, Debug)]
pub struct LpmTrie {
    root: Node,
    width: u32,
}

#[derive(Debug, Error)]
pub enum TrieError {
    #[error("prefix not present in trie")]
    NotPresent,
}

impl LpmTrie {
    pub fn new(width: u32) -> Self {
        LpmTrie {
            root: Node::default(),
            width,
        }
    }

    /// Builds a trie holding every entry of the table.
    pub fn build(table: &RoutingTable) -> Self {
        let mut trie = LpmTrie::new(table.width());
        for e in table.entries() {
            trie.insert(e);
        }
        trie
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Inserts a prefix, overwriting any port already stored at that node.
    pub fn insert(&mut self, prefix: &Prefix) {
        assert!(prefix.length() <= self.width);
        let mut node = &mut self.root;
        for i in (0..prefix.length()).rev() {
            let b = (prefix.pattern() >> i & 1) as usize;
            node = node.child[b].get_or_insert_with(Default::default);
        }
        node.port = Some(prefix.port());
    }

    /// Removes the stored prefix with the given pattern and length.
    pub fn remove(&mut self, pattern: u64, length: u32) -> Result<(), TrieError> {
        let mut node = &mut self.root;
        for i in (0..length).rev() {
            let b = (pattern >> i & 1) as usize;
            node = node.child[b].as_deref_mut().ok_or(TrieError::NotPresent)?;
        }
        if node.port.take().is_none() {
            return Err(TrieError::NotPresent);
        }
        // dangling chains are left in place; they only cost memory
        Ok(())
    }

    /// Longest-prefix-match lookup.
    pub fn lookup(&self, address: u64) -> Option<u32> {
        debug_assert!(address <= word_mask(self.width));
        let mut best = self.root.port;
        let mut node = &self.root;
        for i in (0..self.width).rev() {
            let b = (address >> i & 1) as usize;
            match &node.child[b] {
                Some(next) => {
                    node = next;
                    if node.port.is_some() {
                        best = node.port;
                    }
                }
                None => break,
            }
        }
        best
    }

    /// Port of the longest stored proper ancestor of (pattern, length),
    /// i.e. the parent entry in the overlap-elimination sense.
    pub fn longest_proper_ancestor_port(&self, pattern: u64, length: u32) -> Option<u32> {
        if length == 0 {
            return None;
        }
        let mut node = &self.root;
        let mut best = node.port;
        // stop one bit short so the entry itself is excluded
        for j in 0..length - 1 {
            let b = (pattern >> (length - 1 - j) & 1) as usize;
            match &node.child[b] {
                Some(child) => {
                    node = child;
                    if node.port.is_some() {
                        best = node.port;
                    }
                }
                None => break,
            }
        }
        best
    }

    /// True iff some address in `cube` has a defined LPM result that is not
    /// `port`. Walks only the part of the trie the cube intersects.
    pub fn cube_port_conflict(&self, cube: &TernaryCube, port: u32) -> bool {
        debug_assert_eq!(cube.width(), self.width);
        self.walk_conflict(&self.root, 0, cube, port, self.root.port)
    }

    fn walk_conflict(
        &self,
        node: &Node,
        depth: u32,
        cube: &TernaryCube,
        port: u32,
        inherited: Option<u32>,
    ) -> bool {
        if depth == self.width {
            return matches!(inherited, Some(p) if p != port);
        }
        let bit = 1u64 << (self.width - 1 - depth);
        for b in 0..2u64 {
            if cube.care() & bit != 0 && (cube.value() & bit != 0) != (b == 1) {
                continue;
            }
            match &node.child[b as usize] {
                Some(child) => {
                    let inherited = child.port.or(inherited);
                    if self.walk_conflict(child, depth + 1, cube, port, inherited) {
                        return true;
                    }
                }
                None => {
                    // whole absent subtree resolves to the inherited port,
                    // and the cube is non-empty there by construction
                    if matches!(inherited, Some(p) if p != port) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// True iff some address in `cube` has no LPM result.
    pub fn covers_unrouted(&self, cube: &TernaryCube) -> bool {
        self.walk_unrouted(&self.root, 0, cube, self.root.port)
    }

    fn walk_unrouted(
        &self,
        node: &Node,
        depth: u32,
        cube: &TernaryCube,
        inherited: Option<u32>,
    ) -> bool {
        if depth == self.width {
            return inherited.is_none();
        }
        let bit = 1u64 << (self.width - 1 - depth);
        for b in 0..2u64 {
            if cube.care() & bit != 0 && (cube.value() & bit != 0) != (b == 1) {
                continue;
            }
            match &node.child[b as usize] {
                Some(child) => {
                    let inherited = child.port.or(inherited);
                    if self.walk_unrouted(child, depth + 1, cube, inherited) {
                        return true;
                    }
                }
                None => {
                    if inherited.is_none() {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Partitions the addresses of `constraint` into maximal prefix-shaped
    /// cells with a constant LPM result (`None` = unrouted). Cells are
    /// emitted in address order and are pairwise disjoint; their union is
    /// exactly the constraint cube.
    pub fn regions_within(&self, constraint: &TernaryCube) -> Vec<(TernaryCube, Option<u32>)> {
        debug_assert_eq!(constraint.width(), self.width);
        let mut out = Vec::new();
        self.walk_regions(&self.root, 0, 0, constraint, self.root.port, &mut out);
        out
    }

    fn walk_regions(
        &self,
        node: &Node,
        depth: u32,
        path_value: u64,
        constraint: &TernaryCube,
        inherited: Option<u32>,
        out: &mut Vec<(TernaryCube, Option<u32>)>,
    ) {
        if depth == self.width {
            out.push((
                TernaryCube::new(path_value, word_mask(self.width), self.width),
                inherited,
            ));
            return;
        }
        let bit = 1u64 << (self.width - 1 - depth);
        for b in 0..2u64 {
            if constraint.care() & bit != 0 && (constraint.value() & bit != 0) != (b == 1) {
                continue;
            }
            let value = path_value | if b == 1 { bit } else { 0 };
            match &node.child[b as usize] {
                Some(child) => {
                    let inherited = child.port.or(inherited);
                    self.walk_regions(child, depth + 1, value, constraint, inherited, out);
                }
                None => {
                    // fixed path bits down to this depth, remaining bits
                    // free except where the constraint pins them
                    let top = high_mask(self.width, depth + 1);
                    let care = top | constraint.care();
                    let cell_value = value | (constraint.value() & !top);
                    out.push((TernaryCube::new(cell_value, care, self.width), inherited));
                }
            }
        }
    }
}

/// Mask of the `n` most significant bits of a `width`-bit word.
fn high_mask(width: u32, n: u32) -> u64 {
    debug_assert!(n <= width);
    if n == 0 {
        0
    } else {
        word_mask(n) << (width - n)
    }
}

/// Naive scan-all-prefixes LPM, used as an independent cross-check.
pub fn naive_lookup(table: &RoutingTable, address: u64) -> Option<u32> {
    let mut best: Option<&Prefix> = None;
    for e in table.entries() {
        if e.to_cube(table.width()).matches(address) {
            match best {
                Some(b) if b.length() >= e.length() => {}
                _ => best = Some(e),
            }
        }
    }
    best.map(|p| p.port())
}
