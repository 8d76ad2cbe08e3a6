//! Behavioral model of the multi-stage TCAM array.
//!
//! Rows hold minimized ternary cubes segmented into stages. During a
//! lookup, stage 1 of every row is enabled; stage i+1 of a row is enabled
//! only if stage i was enabled and matched its slice of the address. Power
//! is charged as one unit per enabled ternary cell, whether or not the
//! cell is a don't-care: the hardware powers the whole stage.
//!
//! The engine keeps shadow state (the original table, the post-elimination
//! source prefixes per port, and the oracle trie) so that incremental
//! insert and withdrawal can re-minimize only the affected partial tables.

use crate::compact::{
    compact, eliminate_overlaps, emu_minimize, merge_prts, minimize_prt, partition_prts,
    MinimizedTable, PartialRoutingTable,
};
use crate::cube::TernaryCube;
use crate::table::{Prefix, RoutingTable};
use crate::trie::LpmTrie;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Ordered stage widths W_1..W_k; they must sum to the word width.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StageConfig {
    widths: Vec<u32>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("stage widths {widths:?} do not satisfy sum == {word_width} with positive stages")]
    InvalidStageConfig { widths: Vec<u32>, word_width: u32 },
    #[error("width mismatch: {a} vs {b}")]
    WidthMismatch { a: u32, b: u32 },
    #[error("prefix already present with conflicting port {existing}")]
    DuplicateConflict { existing: u32 },
    #[error("prefix not present in table")]
    PrefixNotPresent,
    #[error("invalid minimized table: {0}")]
    BadMinimized(String),
    #[error("bad stage list: {0}")]
    BadStageList(String),
}

impl StageConfig {
    pub fn new(widths: Vec<u32>, word_width: u32) -> Result<Self, EngineError> {
        let ok = !widths.is_empty()
            && widths.iter().all(|&w| w >= 1)
            && widths.iter().sum::<u32>() == word_width;
        if !ok {
            return Err(EngineError::InvalidStageConfig {
                widths,
                word_width,
            });
        }
        Ok(StageConfig { widths })
    }

    /// Single-stage reference configuration.
    pub fn reference(word_width: u32) -> Self {
        StageConfig {
            widths: vec![word_width],
        }
    }

    /// Equal split into `k` stages; `k` must divide the word width.
    pub fn equal_split(word_width: u32, k: u32) -> Result<Self, EngineError> {
        if k == 0 || word_width % k != 0 {
            return Err(EngineError::InvalidStageConfig {
                widths: vec![word_width / k.max(1); k as usize],
                word_width,
            });
        }
        StageConfig::new(vec![word_width / k; k as usize], word_width)
    }

    /// Parses a `w1,w2,...` list.
    pub fn parse(s: &str, word_width: u32) -> Result<Self, EngineError> {
        let widths: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse()).collect();
        let widths = widths.map_err(|_| EngineError::BadStageList(s.to_string()))?;
        StageConfig::new(widths, word_width)
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn stage_count(&self) -> usize {
        self.widths.len()
    }

    pub fn word_width(&self) -> u32 {
        self.widths.iter().sum()
    }

    /// Bit mask of each stage's positions within the word, stage 1 first
    /// (most significant bits).
    pub fn stage_masks(&self) -> Vec<u64> {
        let width = self.word_width();
        let mut masks = Vec::with_capacity(self.widths.len());
        let mut consumed = 0;
        for &w in &self.widths {
            let mask = (crate::cube::word_mask(w)) << (width - consumed - w);
            masks.push(mask);
            consumed += w;
        }
        masks
    }

    /// True iff `self` splits some of `other`'s stages while keeping all of
    /// `other`'s boundaries intact.
    pub fn refines(&self, other: &StageConfig) -> bool {
        if self.word_width() != other.word_width() {
            return false;
        }
        let boundaries = |c: &StageConfig| -> BTreeSet<u32> {
            c.widths
                .iter()
                .scan(0u32, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect()
        };
        boundaries(self).is_superset(&boundaries(other))
    }

    /// Renders as `w1+w2+...`.
    pub fn render(&self) -> String {
        self.widths
            .iter()
            .map(|w| w.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Splits an address into per-stage sub-words, most significant bits in
/// part 1. Each part is returned LSB-aligned.
pub fn split_address(address: u64, config: &StageConfig) -> Vec<u64> {
    let width = config.word_width();
    let mut parts = Vec::with_capacity(config.stage_count());
    let mut consumed = 0;
    for &w in config.widths() {
        let shift = width - consumed - w;
        parts.push((address >> shift) & crate::cube::word_mask(w));
        consumed += w;
    }
    parts
}

/// Outcome of one search: the matched port (if any) and the number of
/// ternary cells enabled while searching.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LookupResult {
    pub port: Option<u32>,
    pub eps: u64,
    pub matched_row: Option<usize>,
}

/// Picks the matching row with the most specified bits; ties break toward
/// the lowest row index. `matches` holds (row index, specified bits).
pub fn select_lpm(matches: &[(usize, u32)]) -> Option<usize> {
    matches
        .iter()
        .copied()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(idx, _)| idx)
}

#[derive(Clone, Debug)]
struct Row {
    cube: TernaryCube,
    port: u32,
    spec_bits: u32,
}

/// Behavioral MSTCAM lookup engine with incremental update support.
#[derive(Clone, Debug)]
pub struct MstcamEngine {
    width: u32,
    strict: bool,
    config: StageConfig,
    rows: Vec<Row>,
    ranges: BTreeMap<u32, (usize, usize)>,
    covers: BTreeMap<u32, Vec<TernaryCube>>,
    original: RoutingTable,
    sources: BTreeMap<u32, Vec<Prefix>>,
    oracle: LpmTrie,
}

impl MstcamEngine {
    /// Builds an engine from a minimized table plus the raw table it was
    /// minimized from (the shadow state for updates).
    pub fn build(
        minimized: &MinimizedTable,
        config: StageConfig,
        table: RoutingTable,
        strict: bool,
    ) -> Result<Self, EngineError> {
        if config.word_width() != minimized.width {
            return Err(EngineError::InvalidStageConfig {
                widths: config.widths().to_vec(),
                word_width: minimized.width,
            });
        }
        if table.width() != minimized.width {
            return Err(EngineError::WidthMismatch {
                a: table.width(),
                b: minimized.width,
            });
        }
        minimized.validate().map_err(EngineError::BadMinimized)?;
        let mut covers: BTreeMap<u32, Vec<TernaryCube>> = BTreeMap::new();
        for (port, (begin, end)) in &minimized.ranges {
            covers.insert(
                *port,
                minimized.rows[*begin..*end].iter().map(|(c, _)| *c).collect(),
            );
        }
        let eliminated = eliminate_overlaps(&table);
        let sources: BTreeMap<u32, Vec<Prefix>> = partition_prts(&eliminated)
            .into_iter()
            .map(|p| (p.port, p.source_prefixes))
            .collect();
        let oracle = LpmTrie::build(&eliminated);
        let mut engine = MstcamEngine {
            width: minimized.width,
            strict,
            config,
            rows: Vec::new(),
            ranges: BTreeMap::new(),
            covers,
            original: table,
            sources,
            oracle,
        };
        engine.rebuild_rows();
        Ok(engine)
    }

    /// Compacts a raw table and builds the engine in one step.
    pub fn from_table(
        table: RoutingTable,
        config: StageConfig,
        strict: bool,
    ) -> Result<Self, EngineError> {
        let minimized = compact(&table, strict);
        MstcamEngine::build(&minimized, config, table, strict)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn config(&self) -> &StageConfig {
        &self.config
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn ranges(&self) -> &BTreeMap<u32, (usize, usize)> {
        &self.ranges
    }

    pub fn shadow_table(&self) -> &RoutingTable {
        &self.original
    }

    pub fn oracle(&self) -> &LpmTrie {
        &self.oracle
    }

    /// Worst-case enabled cells per search: rows times word width.
    pub fn eps_max(&self) -> u64 {
        self.rows.len() as u64 * self.width as u64
    }

    /// The current rows as a serializable minimized table.
    pub fn minimized_table(&self) -> MinimizedTable {
        MinimizedTable {
            width: self.width,
            rows: self.rows.iter().map(|r| (r.cube, r.port)).collect(),
            ranges: self.ranges.clone(),
        }
    }

    /// One search with stage-by-stage enabling and per-cell power
    /// accounting. Pure with respect to engine state.
    pub fn lookup(&self, address: u64) -> LookupResult {
        let masks = self.config.stage_masks();
        let widths = self.config.widths();
        let mut eps: u64 = 0;
        let mut matches: Vec<(usize, u32)> = Vec::new();
        for (idx, row) in self.rows.iter().enumerate() {
            let mut all_matched = true;
            for (i, (&mask, &w)) in masks.iter().zip(widths).enumerate() {
                // this stage is enabled: stage 1 unconditionally, later
                // stages because every earlier stage matched
                eps += w as u64;
                let segment_matched =
                    (address ^ row.cube.value()) & row.cube.care() & mask == 0;
                if !segment_matched {
                    all_matched = false;
                    break;
                }
                let _ = i;
            }
            if all_matched {
                matches.push((idx, row.spec_bits));
            }
        }
        let matched_row = select_lpm(&matches);
        LookupResult {
            port: matched_row.map(|idx| self.rows[idx].port),
            eps,
            matched_row,
        }
    }

    /// Inserts a route. A prefix whose parent already routes identically is
    /// recorded in the shadow table but produces no row change; otherwise
    /// the affected partial tables are re-minimized.
    pub fn insert(&mut self, prefix: Prefix) -> Result<(), EngineError> {
        if prefix.length() > self.width {
            return Err(EngineError::WidthMismatch {
                a: prefix.length(),
                b: self.width,
            });
        }
        if let Some(existing) = self.original.find(prefix.pattern(), prefix.length()) {
            if existing.port() != prefix.port() {
                return Err(EngineError::DuplicateConflict {
                    existing: existing.port(),
                });
            }
            return Ok(());
        }
        let parent_port = longest_proper_ancestor(&self.original, &prefix);
        self.original
            .push(prefix)
            .map_err(|_| EngineError::DuplicateConflict {
                existing: prefix.port(),
            })?;
        if parent_port == Some(prefix.port()) {
            // identical parent: redundant entry, no LPM change anywhere
            return Ok(());
        }
        let changed = prefix.to_cube(self.width);
        let mut dirty = self.dirty_ports(&changed);
        dirty.insert(prefix.port());
        self.refresh_shadow();
        dirty.extend(self.region_ports(&changed));
        self.reminimize(&dirty);
        Ok(())
    }

    /// Withdraws a route. Cubes covering the prefix are dropped, uncovered
    /// source prefixes of its port are re-covered, and any other partial
    /// table whose cubes or on-set touch the freed region is re-minimized.
    pub fn withdraw(&mut self, pattern: u64, length: u32) -> Result<(), EngineError> {
        let entry = *self
            .original
            .find(pattern, length)
            .ok_or(EngineError::PrefixNotPresent)?;
        let port = entry.port();
        let live = self
            .sources
            .get(&port)
            .map(|v| v.contains(&entry))
            .unwrap_or(false);
        self.original.remove(pattern, length);
        if !live {
            // was redundant (identical parent): no LPM change anywhere
            return Ok(());
        }
        let changed = entry.to_cube(self.width);
        let mut dirty = self.dirty_ports(&changed);
        self.refresh_shadow();
        dirty.extend(self.region_ports(&changed));
        dirty.remove(&port); // handled incrementally below

        // Fig-6-style incremental re-cover within the withdrawn prefix's
        // own partial table.
        let old_cover = self.covers.remove(&port).unwrap_or_default();
        let mut remaining: Vec<TernaryCube> = Vec::new();
        for c in old_cover {
            let drop = c.contains(&changed)
                || (c.intersects(&changed)
                    && (self.oracle.cube_port_conflict(&c, port)
                        || (self.strict && self.oracle.covers_unrouted(&c))));
            if !drop {
                remaining.push(c);
            }
        }
        let mut new_cells: Vec<TernaryCube> = Vec::new();
        if let Some(prefixes) = self.sources.get(&port) {
            for p in prefixes {
                for cell in crate::compact::on_set_cells_of(&self.oracle, p, port) {
                    if !remaining.iter().any(|c| c.contains(&cell))
                        && !new_cells.contains(&cell)
                    {
                        new_cells.push(cell);
                    }
                }
            }
        }
        if !new_cells.is_empty() || !remaining.is_empty() {
            let mut cover = remaining;
            cover.extend(emu_minimize(new_cells, port, &self.oracle, self.strict));
            crate::compact::absorb_contained(&mut cover);
            if !cover.is_empty() {
                self.covers.insert(port, cover);
            }
        }
        self.reminimize(&dirty);
        Ok(())
    }

    /// Ports whose current cover touches the changed cube.
    fn dirty_ports(&self, changed: &TernaryCube) -> BTreeSet<u32> {
        self.covers
            .iter()
            .filter(|(_, cubes)| cubes.iter().any(|c| c.intersects(changed)))
            .map(|(port, _)| *port)
            .collect()
    }

    /// Ports owning address space inside the changed cube under the
    /// current oracle.
    fn region_ports(&self, changed: &TernaryCube) -> BTreeSet<u32> {
        self.oracle
            .regions_within(changed)
            .into_iter()
            .filter_map(|(_, p)| p)
            .collect()
    }

    /// Recomputes elimination, source sets, and the oracle from the
    /// original table.
    fn refresh_shadow(&mut self) {
        let eliminated = eliminate_overlaps(&self.original);
        self.sources = partition_prts(&eliminated)
            .into_iter()
            .map(|p| (p.port, p.source_prefixes))
            .collect();
        self.oracle = LpmTrie::build(&eliminated);
    }

    /// Re-runs the minimizer for each dirty port and rebuilds the rows.
    fn reminimize(&mut self, dirty: &BTreeSet<u32>) {
        for &port in dirty {
            match self.sources.get(&port) {
                Some(prefixes) => {
                    let prt = PartialRoutingTable {
                        port,
                        source_prefixes: prefixes.clone(),
                        cubes: Vec::new(),
                    };
                    let minimized = minimize_prt(&prt, &self.oracle, self.strict);
                    if minimized.cubes.is_empty() {
                        self.covers.remove(&port);
                    } else {
                        self.covers.insert(port, minimized.cubes);
                    }
                }
                None => {
                    self.covers.remove(&port);
                }
            }
        }
        self.rebuild_rows();
    }

    fn rebuild_rows(&mut self) {
        self.rows.clear();
        self.ranges.clear();
        for (port, cubes) in &self.covers {
            let begin = self.rows.len();
            self.rows.extend(cubes.iter().map(|c| Row {
                cube: *c,
                port: *port,
                spec_bits: c.specified_bits(),
            }));
            self.ranges.insert(*port, (begin, self.rows.len()));
        }
    }

    /// Rebuilds an equivalent engine from scratch from the shadow table.
    pub fn rebuild_from_shadow(&self) -> Result<MstcamEngine, EngineError> {
        MstcamEngine::from_table(self.original.clone(), self.config.clone(), self.strict)
    }
}

fn longest_proper_ancestor(table: &RoutingTable, prefix: &Prefix) -> Option<u32> {
    table
        .entries()
        .iter()
        .filter(|e| e.is_proper_prefix_of(prefix))
        .max_by_key(|e| e.length())
        .map(|e| e.port())
}

/// Reassembles the per-port covers of a set of PRTs into a minimized
/// table; convenience for tests and tools.
pub fn assemble(prts: &[PartialRoutingTable], width: u32) -> MinimizedTable {
    merge_prts(prts, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::word_mask;
    use rand::{Rng, SeedableRng};

    fn table(entries: &[(&str, u32)], width: u32) -> RoutingTable {
        let text: String = entries
            .iter()
            .map(|(p, q)| format!("{p} {q}\n"))
            .collect();
        RoutingTable::parse(&text, width).unwrap()
    }

    #[test]
    fn stage_config_validation() {
        assert!(StageConfig::new(vec![4, 4], 8).is_ok());
        assert!(StageConfig::new(vec![8], 8).is_ok());
        assert!(StageConfig::new(vec![5, 4], 8).is_err());
        assert!(StageConfig::new(vec![4, 0, 4], 8).is_err());
        assert!(StageConfig::new(vec![], 8).is_err());
        assert_eq!(StageConfig::parse("4,2,2", 8).unwrap().widths(), &[4, 2, 2]);
        assert!(StageConfig::parse("16,15", 32).is_err());
    }

    #[test]
    fn address_splitting() {
        let c = StageConfig::new(vec![16, 16], 32).unwrap();
        assert_eq!(split_address(0xDEAD_BEEF, &c), vec![0xDEAD, 0xBEEF]);
        let c = StageConfig::new(vec![32], 32).unwrap();
        assert_eq!(split_address(0xDEAD_BEEF, &c), vec![0xDEAD_BEEF]);
        let c = StageConfig::new(vec![4, 2, 2], 8).unwrap();
        assert_eq!(split_address(0b0100_1101, &c), vec![0b0100, 0b11, 0b01]);
    }

    #[test]
    fn refinement_relation() {
        let a = StageConfig::new(vec![16, 16], 32).unwrap();
        let b = StageConfig::new(vec![8, 8, 8, 8], 32).unwrap();
        let c = StageConfig::new(vec![12, 20], 32).unwrap();
        assert!(b.refines(&a));
        assert!(!a.refines(&b));
        assert!(!c.refines(&a));
        assert!(a.refines(&a));
    }

    #[test]
    fn select_lpm_tie_break() {
        assert_eq!(select_lpm(&[(3, 7), (9, 5)]), Some(3));
        assert_eq!(select_lpm(&[(4, 6)]), Some(4));
        assert_eq!(select_lpm(&[(2, 5), (5, 5)]), Some(2));
        assert_eq!(select_lpm(&[]), None);
    }

    fn engine(entries: &[(&str, u32)], width: u32, stages: &[u32], strict: bool) -> MstcamEngine {
        let t = table(entries, width);
        let config = StageConfig::new(stages.to_vec(), width).unwrap();
        MstcamEngine::from_table(t, config, strict).unwrap()
    }

    #[test]
    fn eps_accounting_matches_stated_pattern() {
        // three rows, config (4,4): the address fully matches one row and
        // misses the other two in stage 1
        let e = engine(&[("0000", 0), ("1100", 1), ("1110", 2)], 8, &[4, 4], true);
        assert_eq!(e.row_count(), 3);
        let r = e.lookup(0b0000_0101);
        assert_eq!(r.port, Some(0));
        assert_eq!(r.eps, 3 * 4 + 4);
    }

    #[test]
    fn reference_config_charges_full_array() {
        let e = engine(&[("0000", 0), ("1100", 1), ("1110", 2)], 8, &[8], true);
        for a in 0..256u64 {
            assert_eq!(e.lookup(a).eps, e.eps_max());
        }
    }

    #[test]
    fn miss_charges_first_stage_only() {
        let e = engine(&[("0000", 0), ("0001", 1)], 8, &[4, 4], true);
        let r = e.lookup(0b1111_0000);
        assert_eq!(r.port, None);
        assert_eq!(r.eps, e.row_count() as u64 * 4);
    }

    #[test]
    fn eps_bounds_hold() {
        let e = engine(&[("01", 0), ("0101", 1), ("1", 2)], 8, &[2, 3, 3], false);
        let s = e.row_count() as u64;
        for a in 0..256u64 {
            let r = e.lookup(a);
            assert!(r.eps >= s * 2 && r.eps <= s * 8);
        }
    }

    #[test]
    fn oracle_equivalence_across_configs() {
        let entries = [("01", 0), ("0101", 1), ("1", 2), ("0010", 0), ("00", 2)];
        let t = table(&entries, 8);
        let oracle = LpmTrie::build(&t);
        for strict in [false, true] {
            for stages in [vec![8], vec![4, 4], vec![2, 3, 3], vec![1; 8]] {
                let e = engine(&entries, 8, &stages, strict);
                for a in 0..256u64 {
                    let r = e.lookup(a);
                    match oracle.lookup(a) {
                        Some(k) => assert_eq!(r.port, Some(k), "addr {a:#b} stages {stages:?}"),
                        None if strict => assert_eq!(r.port, None),
                        None => {}
                    }
                }
            }
        }
    }

    #[test]
    fn insert_into_empty_engine() {
        let t = RoutingTable::new(8);
        let config = StageConfig::new(vec![4, 4], 8).unwrap();
        let mut e = MstcamEngine::from_table(t, config, false).unwrap();
        assert_eq!(e.row_count(), 0);
        e.insert(Prefix::new(0b0101, 4, 3)).unwrap();
        assert_eq!(e.row_count(), 1);
        assert_eq!(e.ranges()[&3], (0, 1));
        assert_eq!(e.lookup(0b0101_1111).port, Some(3));
    }

    #[test]
    fn insert_redundant_child_changes_nothing() {
        let mut e = engine(&[("010", 0)], 8, &[4, 4], false);
        let rows_before = e.minimized_table();
        e.insert(Prefix::new(0b0101, 4, 0)).unwrap();
        assert_eq!(e.minimized_table(), rows_before);
        assert_eq!(e.shadow_table().len(), 2);
    }

    #[test]
    fn insert_conflicting_duplicate_is_error() {
        let mut e = engine(&[("010", 0)], 8, &[4, 4], false);
        assert!(matches!(
            e.insert(Prefix::new(0b010, 3, 1)),
            Err(EngineError::DuplicateConflict { existing: 0 })
        ));
    }

    #[test]
    fn insert_cross_port_child_equals_rebuild() {
        for strict in [false, true] {
            let mut e = engine(&[("010", 0)], 8, &[4, 4], strict);
            e.insert(Prefix::new(0b0101, 4, 1)).unwrap();
            let rebuilt = e.rebuild_from_shadow().unwrap();
            let oracle = e.oracle();
            for a in 0..256u64 {
                let lpm = oracle.lookup(a);
                if lpm.is_some() {
                    assert_eq!(e.lookup(a).port, lpm);
                    assert_eq!(rebuilt.lookup(a).port, lpm);
                } else if strict {
                    assert_eq!(e.lookup(a).port, None);
                    assert_eq!(rebuilt.lookup(a).port, None);
                }
            }
        }
    }

    #[test]
    fn withdraw_only_prefix_collapses_range() {
        let mut e = engine(&[("010", 0), ("1", 1)], 8, &[4, 4], true);
        e.withdraw(0b010, 3).unwrap();
        assert!(!e.ranges().contains_key(&0));
        assert_eq!(e.lookup(0b0101_0000).port, None);
        assert_eq!(e.lookup(0b1000_0000).port, Some(1));
    }

    #[test]
    fn withdraw_parent_revives_eliminated_child() {
        for strict in [false, true] {
            let mut e = engine(&[("01", 0), ("0101", 0), ("1", 1)], 8, &[4, 4], strict);
            // the child 0101->0 was overlap-eliminated
            assert_eq!(e.oracle().lookup(0b0101_0000), Some(0));
            e.withdraw(0b01, 2).unwrap();
            for a in 0..256u64 {
                let lpm = e.oracle().lookup(a);
                if lpm.is_some() {
                    assert_eq!(e.lookup(a).port, lpm, "strict {strict} addr {a:#b}");
                } else if strict {
                    assert_eq!(e.lookup(a).port, None);
                }
            }
            assert_eq!(e.lookup(0b0101_0000).port, Some(0));
            assert_eq!(e.lookup(0b0110_0000).port, if strict { None } else { e.lookup(0b0110_0000).port });
        }
    }

    #[test]
    fn withdraw_absent_is_error() {
        let mut e = engine(&[("010", 0)], 8, &[4, 4], false);
        assert!(matches!(
            e.withdraw(0b011, 3),
            Err(EngineError::PrefixNotPresent)
        ));
    }

    #[test]
    fn lookup_is_read_only() {
        let e = engine(&[("01", 0), ("0101", 1)], 8, &[4, 4], false);
        let before = e.minimized_table();
        for a in 0..256u64 {
            e.lookup(a);
        }
        assert_eq!(e.minimized_table(), before);
    }

    #[test]
    fn random_update_sequence_stays_oracle_equivalent() {
        let width = 8;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for strict in [false, true] {
            let mut t = RoutingTable::new(width);
            for _ in 0..20 {
                let len = rng.gen_range(1..=width);
                let pat = rng.gen::<u64>() & word_mask(len);
                let _ = t.push(Prefix::new(pat, len, rng.gen_range(0..3)));
            }
            let config = StageConfig::new(vec![4, 2, 2], width).unwrap();
            let mut e = MstcamEngine::from_table(t, config, strict).unwrap();
            for _ in 0..120 {
                if rng.gen_bool(0.5) || e.shadow_table().is_empty() {
                    let len = rng.gen_range(1..=width);
                    let pat = rng.gen::<u64>() & word_mask(len);
                    let _ = e.insert(Prefix::new(pat, len, rng.gen_range(0..3)));
                } else {
                    let idx = rng.gen_range(0..e.shadow_table().len());
                    let victim = e.shadow_table().entries()[idx];
                    e.withdraw(victim.pattern(), victim.length()).unwrap();
                }
                for a in 0..1u64 << width {
                    let lpm = e.oracle().lookup(a);
                    if lpm.is_some() {
                        assert_eq!(e.lookup(a).port, lpm);
                    } else if strict {
                        assert_eq!(e.lookup(a).port, None);
                    }
                }
            }
        }
    }
}
