//! Synthetic routing tables and address traces.
//!
//! Substitute inputs for real router dumps: tables with nested same-port
//! runs (overlap-elimination fodder) and cross-port nesting (off-set
//! pressure for the expansion guard), plus traces with a controllable
//! fraction of addresses that hit the table.

use crate::cube::word_mask;
use crate::table::{Prefix, RoutingTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// Knobs for [`generate_table`]. All generation is a pure function of
/// (params, seed).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableParams {
    pub width: u32,
    pub entries: usize,
    pub ports: u32,
    /// Fraction of entries drawn as fresh, pairwise non-nested parents;
    /// the rest extend an existing entry.
    pub parent_fraction: f64,
    /// Probability that a child inherits its parent entry's port (1.0
    /// makes every child redundant under overlap elimination).
    pub child_same_port: f64,
    /// Parent length range, inclusive.
    pub parent_len_min: u32,
    pub parent_len_max: u32,
    /// Maximum number of extra bits a child appends to its parent.
    pub child_extra_max: u32,
}

impl TableParams {
    /// Sensible defaults for a given word width.
    pub fn default_for(width: u32) -> TableParams {
        let parent_len_max = (width * 3 / 4).max(1);
        TableParams {
            width,
            entries: 100,
            ports: 4,
            parent_fraction: 0.4,
            child_same_port: 0.5,
            parent_len_min: (width / 4).max(1),
            parent_len_max,
            child_extra_max: (width / 4).max(1),
        }
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible parameters: {0}")]
    Infeasible(String),
    #[error("hit ratio {0} requires a non-empty table")]
    EmptyTableHits(f64),
}

/// Generates a table deterministically from (params, seed).
pub fn generate_table(params: &TableParams, seed: u64) -> Result<RoutingTable, SynthError> {
    if params.width == 0 || params.width > 64 {
        return Err(SynthError::Infeasible("width must be in 1..=64".into()));
    }
    if params.ports == 0 {
        return Err(SynthError::Infeasible("need at least one port".into()));
    }
    if params.parent_len_min == 0
        || params.parent_len_min > params.parent_len_max
        || params.parent_len_max > params.width
    {
        return Err(SynthError::Infeasible("bad parent length range".into()));
    }
    if params.width < 64 && params.entries as u128 > 1u128 << params.width {
        return Err(SynthError::Infeasible(
            "more entries than addresses".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = RoutingTable::new(params.width);
    let mut seen: HashSet<(u64, u32)> = HashSet::new();
    let mut entries: Vec<Prefix> = Vec::new();
    let mut misses = 0usize;
    let budget = params.entries * 200 + 1000;
    while entries.len() < params.entries {
        if misses > budget {
            return Err(SynthError::Infeasible(format!(
                "could not place {} entries at width {}",
                params.entries, params.width
            )));
        }
        let make_parent = entries.is_empty() || rng.gen_bool(params.parent_fraction);
        let candidate = if make_parent {
            let len = rng.gen_range(params.parent_len_min..=params.parent_len_max);
            let pat = rng.gen::<u64>() & word_mask(len);
            let p = Prefix::new(pat, len, rng.gen_range(0..params.ports));
            // parents stay pairwise non-nested so port runs form clean trees
            let nested = entries
                .iter()
                .any(|e| e.is_proper_prefix_of(&p) || p.is_proper_prefix_of(e));
            if nested {
                misses += 1;
                continue;
            }
            p
        } else {
            let base = entries[rng.gen_range(0..entries.len())];
            let extra = rng.gen_range(1..=params.child_extra_max.max(1));
            let len = (base.length() + extra).min(params.width);
            if len == base.length() {
                misses += 1;
                continue;
            }
            let ext = rng.gen::<u64>() & word_mask(len - base.length());
            let pat = base.pattern() << (len - base.length()) | ext;
            let port = if rng.gen_bool(params.child_same_port) {
                base.port()
            } else {
                rng.gen_range(0..params.ports)
            };
            Prefix::new(pat, len, port)
        };
        if !seen.insert((candidate.pattern(), candidate.length())) {
            misses += 1;
            continue;
        }
        entries.push(candidate);
    }
    for e in entries {
        table.push(e).expect("duplicates filtered during generation");
    }
    Ok(table)
}

/// Crafted family for compaction exactness checks: `parents` pairwise
/// disjoint prefixes on distinct ports, each with `children_per_parent`
/// longer prefixes routing identically. Overlap elimination removes every
/// child, and with one prefix per port nothing can merge, so compaction
/// yields exactly `parents` rows.
pub fn every_child_duplicates_parent(
    width: u32,
    parents: u32,
    children_per_parent: u32,
) -> Result<RoutingTable, SynthError> {
    let parent_len = (32 - (parents.max(1) - 1).leading_zeros()).max(1);
    if parent_len > width {
        return Err(SynthError::Infeasible("too many parents for width".into()));
    }
    let child_len = parent_len + (32 - children_per_parent.max(1).leading_zeros());
    if child_len > width {
        return Err(SynthError::Infeasible(
            "too many children for width".into(),
        ));
    }
    let mut table = RoutingTable::new(width);
    for p in 0..parents {
        table
            .push(Prefix::new(p as u64, parent_len, p))
            .expect("distinct parents");
        for c in 0..children_per_parent {
            let extra = child_len - parent_len;
            let pat = (p as u64) << extra | c as u64;
            table
                .push(Prefix::new(pat, child_len, p))
                .expect("distinct children");
        }
    }
    Ok(table)
}

/// Generates `m` addresses; a `hit_ratio` fraction are drawn uniformly
/// from under random table prefixes, the rest uniformly from the whole
/// address space. Pure function of its arguments.
pub fn generate_trace(
    table: &RoutingTable,
    m: usize,
    hit_ratio: f64,
    seed: u64,
) -> Result<Vec<u64>, SynthError> {
    if !(0.0..=1.0).contains(&hit_ratio) {
        return Err(SynthError::Infeasible("hit ratio must be in [0, 1]".into()));
    }
    if hit_ratio > 0.0 && table.is_empty() {
        return Err(SynthError::EmptyTableHits(hit_ratio));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = table.width();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let addr = if hit_ratio > 0.0 && rng.gen_bool(hit_ratio) {
            let e = table.entries()[rng.gen_range(0..table.len())];
            let free = width - e.length();
            let tail = if free == 0 {
                0
            } else {
                rng.gen::<u64>() & word_mask(free)
            };
            if e.length() == 0 {
                tail
            } else {
                e.pattern() << free | tail
            }
        } else {
            rng.gen::<u64>() & word_mask(width)
        };
        out.push(addr);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::{compact, eliminate_overlaps};
    use crate::trie::LpmTrie;

    #[test]
    fn generation_is_deterministic() {
        let params = TableParams::default_for(10);
        let a = generate_table(&params, 9).unwrap();
        let b = generate_table(&params, 9).unwrap();
        assert_eq!(a.entries(), b.entries());
        let c = generate_table(&params, 10).unwrap();
        assert_ne!(a.entries(), c.entries());
    }

    #[test]
    fn full_child_duplication_eliminates_all_children() {
        let params = TableParams {
            child_same_port: 1.0,
            parent_fraction: 0.3,
            entries: 80,
            ..TableParams::default_for(12)
        };
        let t = generate_table(&params, 4).unwrap();
        let out = eliminate_overlaps(&t);
        // survivors are exactly the entries with no same-port ancestor;
        // with ratio 1.0 every child inherits its chain root's port
        for e in out.entries() {
            let has_parent = t
                .entries()
                .iter()
                .any(|p| p.is_proper_prefix_of(e));
            assert!(!has_parent, "child {:?} survived elimination", e);
        }
    }

    #[test]
    fn crafted_family_compacts_to_parent_count() {
        for (parents, children) in [(4u32, 4u32), (7, 3), (1, 8)] {
            let t = every_child_duplicates_parent(16, parents, children).unwrap();
            assert_eq!(t.len() as u32, parents * (children + 1));
            for strict in [false, true] {
                let m = compact(&t, strict);
                assert_eq!(m.rows.len() as u32, parents);
            }
        }
    }

    #[test]
    fn infeasible_params_rejected() {
        let mut p = TableParams::default_for(4);
        p.entries = 1000;
        assert!(generate_table(&p, 0).is_err());
        assert!(every_child_duplicates_parent(4, 200, 2).is_err());
    }

    #[test]
    fn trace_hit_ratio_one_always_resolves() {
        let params = TableParams::default_for(10);
        let t = generate_table(&params, 2).unwrap();
        let trie = LpmTrie::build(&t);
        let trace = generate_trace(&t, 500, 1.0, 3).unwrap();
        assert_eq!(trace.len(), 500);
        for a in &trace {
            assert!(trie.lookup(*a).is_some());
        }
        assert_eq!(generate_trace(&t, 0, 0.5, 3).unwrap(), Vec::<u64>::new());
        assert_eq!(
            generate_trace(&t, 100, 0.5, 3).unwrap(),
            generate_trace(&t, 100, 0.5, 3).unwrap()
        );
        assert!(generate_trace(&RoutingTable::new(10), 5, 0.5, 3).is_err());
    }

    #[test]
    fn default_params_compact_at_width_32() {
        let params = TableParams {
            entries: 2000,
            ..TableParams::default_for(32)
        };
        let t = generate_table(&params, 1).unwrap();
        let m = compact(&t, false);
        // cross-port children fragment their parents' covers, so the row
        // count is bounded by the constant-LPM cell count rather than the
        // entry count
        let budget: usize = t
            .entries()
            .iter()
            .map(|e| e.length() as usize)
            .sum::<usize>()
            * 2
            + 2;
        assert!(m.rows.len() <= budget);
        assert!(!m.rows.is_empty());
    }
}
