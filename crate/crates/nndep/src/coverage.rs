//! Neuron and scenario k-projection coverage.
//!
//! Neuron coverage counts how many (neuron k-subset, on/off valuation) cells
//! are realized by at least one observed pattern; the denominator is
//! `C(n,k) * 2^k`. Cell occupancy lives in one flat bitmap indexed by
//! `subset_rank * 2^k + valuation`, and counting is a popcount sweep, so the
//! numbers are exact at full layer width.
//!
//! The fill walks neuron columns (patterns transposed into per-neuron
//! bitsets) rather than pattern rows: for a pair of columns one AND/ANDNOT
//! word scan decides which of the four valuations occur, with an early exit
//! once all are seen. That keeps k=2 at width 2048 in the millisecond range
//! for thousands of patterns.
//!
//! Scenario coverage is the categorical analog over a catalog of labeled
//! dimensions, with a greedy suggestion of the next scenario to label.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nap::Pattern;

/// Refuse cell bitmaps beyond this size instead of thrashing.
const MAX_BITMAP_BYTES: usize = 256 << 20;

/// Covered/total cell counts for one group (class, pooled set, catalog).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    pub group_label: String,
    pub k: usize,
    pub covered: u64,
    pub total: u64,
}

impl CoverageReport {
    pub fn ratio(&self) -> f64 {
        self.covered as f64 / self.total as f64
    }

    /// Ratio truncated (not rounded) to six decimals, computed in integer
    /// arithmetic: 3959/4096 renders as "0.966552".
    pub fn display_ratio(&self) -> String {
        let whole = self.covered / self.total;
        let rem = u128::from(self.covered % self.total);
        let frac = rem * 1_000_000 / u128::from(self.total);
        format!("{whole}.{frac:06}")
    }

    /// Percentage truncated to two decimals: 32893/129540 renders as "25.39".
    pub fn display_percent(&self) -> String {
        let scaled = u128::from(self.covered) * 10_000 / u128::from(self.total);
        format!("{}.{:02}", scaled / 100, scaled % 100)
    }
}

/// Exact `C(n,k) * 2^k` in u64, or an overflow error.
pub fn neuron_kproj_total(n: usize, k: usize) -> Result<u64> {
    if k == 0 || k > n {
        return Err(Error::InvalidParam(format!("k={k} outside 1..={n}")));
    }
    let mut binom: u64 = 1;
    for i in 0..k as u64 {
        binom = binom
            .checked_mul(n as u64 - i)
            .ok_or_else(|| Error::Overflow(format!("C({n},{k})")))?
            / (i + 1);
    }
    binom
        .checked_mul(1u64 << k)
        .ok_or_else(|| Error::Overflow(format!("C({n},{k})*2^{k}")))
}

/// Accumulates realized cells for neuron k-projection coverage.
///
/// Accumulation is a commutative monoid: chunks of patterns may be added on
/// separate accumulators and OR-merged; the result is independent of the
/// partition.
#[derive(Debug, Clone)]
pub struct NeuronCoverage {
    n: usize,
    k: usize,
    total: u64,
    cells: Vec<u64>,
}

impl NeuronCoverage {
    pub fn new(n: usize, k: usize) -> Result<NeuronCoverage> {
        if !(1..=3).contains(&k) {
            return Err(Error::InvalidParam(format!("k={k} not in supported range 1..=3")));
        }
        if k > n {
            return Err(Error::InvalidParam(format!("k={k} exceeds pattern width {n}")));
        }
        if k == 3 && n > 512 {
            return Err(Error::InvalidParam(format!(
                "k=3 supported only for n <= 512 (n={n} would need a {} MiB bitmap)",
                neuron_kproj_total(n, 3).map(|t| t / 8 / (1 << 20)).unwrap_or(u64::MAX)
            )));
        }
        let total = neuron_kproj_total(n, k)?;
        let words = usize::try_from(total.div_ceil(64))
            .map_err(|_| Error::Overflow(format!("bitmap for n={n}, k={k}")))?;
        if words * 8 > MAX_BITMAP_BYTES {
            return Err(Error::Overflow(format!(
                "cell bitmap for n={n}, k={k} exceeds {} MiB",
                MAX_BITMAP_BYTES >> 20
            )));
        }
        Ok(NeuronCoverage {
            n,
            k,
            total,
            cells: vec![0; words],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Bytes held by the cell bitmap.
    pub fn memory_bytes(&self) -> usize {
        self.cells.len() * 8
    }

    #[inline]
    fn set_cell(&mut self, cell: u64) {
        self.cells[(cell >> 6) as usize] |= 1u64 << (cell & 63);
    }

    // indexed loops: the pair/triple scans walk several parallel arrays
    #[allow(clippy::needless_range_loop)]
    /// Marks every cell realized by one pattern.
    pub fn add_pattern(&mut self, p: &Pattern) -> Result<()> {
        if p.len() != self.n {
            return Err(Error::Dimension(format!(
                "pattern length {} != accumulator width {}",
                p.len(),
                self.n
            )));
        }
        let bits: Vec<bool> = (0..self.n).map(|i| p.get(i)).collect();
        match self.k {
            1 => {
                for (i, &b) in bits.iter().enumerate() {
                    self.set_cell((i as u64) * 2 + u64::from(b));
                }
            }
            2 => {
                let mut base = 0u64;
                for i in 0..self.n {
                    let vi = u64::from(bits[i]) << 1;
                    for j in i + 1..self.n {
                        self.set_cell(base + vi + u64::from(bits[j]));
                        base += 4;
                    }
                }
            }
            3 => {
                let mut base = 0u64;
                for i in 0..self.n {
                    let vi = u64::from(bits[i]) << 2;
                    for j in i + 1..self.n {
                        let vj = vi | (u64::from(bits[j]) << 1);
                        for l in j + 1..self.n {
                            self.set_cell(base + vj + u64::from(bits[l]));
                            base += 8;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    #[allow(clippy::needless_range_loop)]
    /// Bulk path: transposes the patterns into per-neuron columns and decides
    /// each subset's realized valuations with early-exit word scans.
    pub fn add_patterns(&mut self, patterns: &[Pattern]) -> Result<()> {
        if patterns.is_empty() {
            return Ok(());
        }
        for p in patterns {
            if p.len() != self.n {
                return Err(Error::Dimension(format!(
                    "pattern length {} != accumulator width {}",
                    p.len(),
                    self.n
                )));
            }
        }
        let m = patterns.len();
        let words = m.div_ceil(64);
        let mut cols: Vec<Vec<u64>> = vec![vec![0u64; words]; self.n];
        for (s, p) in patterns.iter().enumerate() {
            let (word, bit) = (s >> 6, s & 63);
            for (i, col) in cols.iter_mut().enumerate() {
                if p.get(i) {
                    col[word] |= 1u64 << bit;
                }
            }
        }
        let tail = if m.is_multiple_of(64) { !0u64 } else { (1u64 << (m % 64)) - 1 };
        let full = |w: usize| if w + 1 == words { tail } else { !0u64 };

        match self.k {
            1 => {
                for i in 0..self.n {
                    let mut seen = 0u8;
                    for (w, &a) in cols[i].iter().enumerate() {
                        if a != 0 {
                            seen |= 0b10;
                        }
                        if !a & full(w) != 0 {
                            seen |= 0b01;
                        }
                        if seen == 0b11 {
                            break;
                        }
                    }
                    for v in 0..2u64 {
                        if seen & (1 << v) != 0 {
                            self.set_cell((i as u64) * 2 + v);
                        }
                    }
                }
            }
            2 => {
                let mut base = 0u64;
                for i in 0..self.n {
                    for j in i + 1..self.n {
                        let mut seen = 0u8;
                        for w in 0..words {
                            let (a, b) = (cols[i][w], cols[j][w]);
                            if a & b != 0 {
                                seen |= 1 << 3;
                            }
                            if a & !b != 0 {
                                seen |= 1 << 2;
                            }
                            if !a & b != 0 {
                                seen |= 1 << 1;
                            }
                            if !a & !b & full(w) != 0 {
                                seen |= 1;
                            }
                            if seen == 0b1111 {
                                break;
                            }
                        }
                        for v in 0..4u64 {
                            if seen & (1 << v) != 0 {
                                self.set_cell(base + v);
                            }
                        }
                        base += 4;
                    }
                }
            }
            3 => {
                let mut base = 0u64;
                for i in 0..self.n {
                    for j in i + 1..self.n {
                        for l in j + 1..self.n {
                            let mut seen = 0u16;
                            for w in 0..words {
                                let (a, b, c) = (cols[i][w], cols[j][w], cols[l][w]);
                                let f = full(w);
                                for v in 0..8u16 {
                                    if seen & (1 << v) != 0 {
                                        continue;
                                    }
                                    let x = if v & 4 != 0 { a } else { !a };
                                    let y = if v & 2 != 0 { b } else { !b };
                                    let z = if v & 1 != 0 { c } else { !c };
                                    if x & y & z & f != 0 {
                                        seen |= 1 << v;
                                    }
                                }
                                if seen == 0xFF {
                                    break;
                                }
                            }
                            for v in 0..8u64 {
                                if seen & (1 << v) != 0 {
                                    self.set_cell(base + v);
                                }
                            }
                            base += 8;
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    /// OR-merges another accumulator over the same (n, k).
    pub fn merge(&mut self, other: &NeuronCoverage) -> Result<()> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::Dimension(format!(
                "cannot merge coverage over (n={}, k={}) with (n={}, k={})",
                self.n, self.k, other.n, other.k
            )));
        }
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a |= b;
        }
        Ok(())
    }

    /// Popcount sweep over the cell bitmap.
    pub fn covered(&self) -> u64 {
        self.cells.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn report(&self, group_label: impl Into<String>) -> CoverageReport {
        CoverageReport {
            group_label: group_label.into(),
            k: self.k,
            covered: self.covered(),
            total: self.total,
        }
    }
}

/// Coverage of a non-empty, uniform-length pattern set.
pub fn neuron_kproj_coverage(patterns: &[Pattern], k: usize) -> Result<CoverageReport> {
    let n = patterns
        .first()
        .ok_or_else(|| Error::InvalidData("empty pattern set".into()))?
        .len();
    let mut acc = NeuronCoverage::new(n, k)?;
    acc.add_patterns(patterns)?;
    Ok(acc.report("all"))
}

// === scenario coverage ===

/// One categorical attribute and its finite value list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioDimension {
    pub name: String,
    pub values: Vec<String>,
}

/// An ordered list of scenario dimensions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioCatalog {
    pub dimensions: Vec<ScenarioDimension>,
}

impl ScenarioCatalog {
    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::InvalidData("catalog has no dimensions".into()));
        }
        let mut names = HashSet::new();
        for d in &self.dimensions {
            if !names.insert(d.name.as_str()) {
                return Err(Error::InvalidData(format!("duplicate dimension {}", d.name)));
            }
            if d.values.is_empty() {
                return Err(Error::InvalidData(format!("dimension {} has no values", d.name)));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<ScenarioCatalog> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let catalog: ScenarioCatalog = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.line(), e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    /// Resolves one CSV line of value names (one per dimension) to indices.
    pub fn parse_scenario(&self, line: &str) -> Result<Scenario> {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != self.dimensions.len() {
            return Err(Error::InvalidData(format!(
                "scenario has {} fields, catalog has {} dimensions",
                fields.len(),
                self.dimensions.len()
            )));
        }
        let assignment = fields
            .iter()
            .zip(&self.dimensions)
            .map(|(f, d)| {
                d.values.iter().position(|v| v == f).ok_or_else(|| {
                    Error::InvalidData(format!("unknown value {f} for dimension {}", d.name))
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(Scenario { assignment })
    }

    /// Renders a scenario back to value names.
    pub fn scenario_names(&self, s: &Scenario) -> Vec<(String, String)> {
        self.dimensions
            .iter()
            .zip(&s.assignment)
            .map(|(d, &v)| (d.name.clone(), d.values[v].clone()))
            .collect()
    }
}

/// One value index per catalog dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scenario {
    pub assignment: Vec<usize>,
}

fn validate_scenarios(catalog: &ScenarioCatalog, scenarios: &[Scenario]) -> Result<()> {
    for (i, s) in scenarios.iter().enumerate() {
        if s.assignment.len() != catalog.dimensions.len() {
            return Err(Error::Dimension(format!(
                "scenario {i} has {} entries for {} dimensions",
                s.assignment.len(),
                catalog.dimensions.len()
            )));
        }
        for (d, (&v, dim)) in s.assignment.iter().zip(&catalog.dimensions).enumerate() {
            if v >= dim.values.len() {
                return Err(Error::InvalidData(format!(
                    "scenario {i}: value index {v} out of range for dimension {d} ({})",
                    dim.name
                )));
            }
        }
    }
    Ok(())
}

/// Calls `f` with every k-subset of {0..n} in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Mixed-radix code of a scenario restricted to `subset`.
fn tuple_code(assignment: &[usize], subset: &[usize], sizes: &[usize]) -> u64 {
    let mut code = 0u64;
    for &d in subset {
        code = code * sizes[d] as u64 + assignment[d] as u64;
    }
    code
}

/// Total cells `Σ over k-subsets Π |domain|`.
pub fn scenario_kproj_total(catalog: &ScenarioCatalog, k: usize) -> Result<u64> {
    catalog.validate()?;
    let dims = catalog.dimensions.len();
    if k == 0 || k > dims {
        return Err(Error::InvalidParam(format!(
            "k={k} outside 1..={dims} catalog dimensions"
        )));
    }
    let sizes: Vec<usize> = catalog.dimensions.iter().map(|d| d.values.len()).collect();
    let mut total: u64 = 0;
    let mut overflow = false;
    for_each_combination(dims, k, |subset| {
        let mut prod: u64 = 1;
        for &d in subset {
            match prod.checked_mul(sizes[d] as u64) {
                Some(p) => prod = p,
                None => overflow = true,
            }
        }
        match total.checked_add(prod) {
            Some(t) => total = t,
            None => overflow = true,
        }
    });
    if overflow {
        return Err(Error::Overflow(format!("scenario cells at k={k}")));
    }
    Ok(total)
}

/// Fraction of k-wise value combinations present in the scenario set.
pub fn scenario_kproj_coverage(
    catalog: &ScenarioCatalog,
    scenarios: &[Scenario],
    k: usize,
) -> Result<CoverageReport> {
    let total = scenario_kproj_total(catalog, k)?;
    validate_scenarios(catalog, scenarios)?;
    let sizes: Vec<usize> = catalog.dimensions.iter().map(|d| d.values.len()).collect();
    let dims = catalog.dimensions.len();
    let mut covered: u64 = 0;
    for_each_combination(dims, k, |subset| {
        let mut seen: HashSet<u64> = HashSet::new();
        for s in scenarios {
            seen.insert(tuple_code(&s.assignment, subset, &sizes));
        }
        covered += seen.len() as u64;
    });
    Ok(CoverageReport {
        group_label: "all".into(),
        k,
        covered,
        total,
    })
}

/// Greedy suggestion of one new scenario: dimensions are fixed in catalog
/// order, each to the value that maximizes the number of still-uncovered
/// cells consistent with the partial assignment, ties broken by the lowest
/// value index. The returned gain (its exact count of newly covered cells)
/// is always at least 1.
pub fn suggest_scenario(
    catalog: &ScenarioCatalog,
    scenarios: &[Scenario],
    k: usize,
) -> Result<(Scenario, u64)> {
    let report = scenario_kproj_coverage(catalog, scenarios, k)?;
    if report.covered == report.total {
        return Err(Error::InvalidData("scenario coverage is already complete".into()));
    }
    let sizes: Vec<usize> = catalog.dimensions.iter().map(|d| d.values.len()).collect();
    let dims = catalog.dimensions.len();

    // collect uncovered cells as (subset, tuple values per subset position)
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for_each_combination(dims, k, |s| subsets.push(s.to_vec()));
    let mut uncovered: Vec<(usize, Vec<usize>)> = Vec::new();
    for (si, subset) in subsets.iter().enumerate() {
        let mut seen: HashSet<u64> = HashSet::new();
        for s in scenarios {
            seen.insert(tuple_code(&s.assignment, subset, &sizes));
        }
        // enumerate every tuple of this subset
        let mut tuple = vec![0usize; subset.len()];
        loop {
            let mut code = 0u64;
            for (pos, &d) in subset.iter().enumerate() {
                code = code * sizes[d] as u64 + tuple[pos] as u64;
            }
            if !seen.contains(&code) {
                uncovered.push((si, tuple.clone()));
            }
            // advance mixed-radix counter
            let mut pos = subset.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < sizes[subset[pos]] {
                    break;
                }
                tuple[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || (pos == 0 && tuple.iter().all(|&t| t == 0)) {
                break;
            }
        }
    }

    let consistent = |cell: &(usize, Vec<usize>), fixed: &[Option<usize>]| -> bool {
        let subset = &subsets[cell.0];
        subset
            .iter()
            .zip(&cell.1)
            .all(|(&d, &v)| fixed[d].is_none_or(|fv| fv == v))
    };

    let mut fixed: Vec<Option<usize>> = vec![None; dims];
    for d in 0..dims {
        let mut best_v = 0usize;
        let mut best_count = -1i64;
        for v in 0..sizes[d] {
            fixed[d] = Some(v);
            let count = uncovered
                .iter()
                .filter(|cell| subsets[cell.0].contains(&d) && consistent(cell, &fixed))
                .count() as i64;
            if count > best_count {
                best_count = count;
                best_v = v;
            }
        }
        fixed[d] = Some(best_v);
        uncovered.retain(|cell| consistent(cell, &fixed));
    }

    let assignment: Vec<usize> = fixed.into_iter().map(Option::unwrap).collect();
    // everything still in `uncovered` matches the final assignment on its subset
    let gain = uncovered.len() as u64;
    debug_assert!(gain >= 1);
    Ok((Scenario { assignment }, gain))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_patterns(rng: &mut Rng, count: usize, n: usize) -> Vec<Pattern> {
        (0..count)
            .map(|_| Pattern::from_bits(&(0..n).map(|_| rng.next_f64() < 0.5).collect::<Vec<_>>()))
            .collect()
    }

    /// Exhaustive oracle: enumerate every k-subset via bitmasks and every
    /// valuation, test each pattern directly.
    fn oracle_covered(patterns: &[Pattern], k: usize) -> u64 {
        let n = patterns[0].len();
        let mut covered = 0u64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let neurons: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            for valuation in 0..(1u32 << k) {
                let hit = patterns.iter().any(|p| {
                    neurons
                        .iter()
                        .enumerate()
                        .all(|(pos, &i)| p.get(i) == (valuation & (1 << (k - 1 - pos)) != 0))
                });
                if hit {
                    covered += 1;
                }
            }
        }
        covered
    }

    #[test]
    fn totals_match_published_table_values() {
        assert_eq!(neuron_kproj_total(2048, 1).unwrap(), 4096);
        assert_eq!(neuron_kproj_total(2048, 2).unwrap(), 8_384_512);
        assert_eq!(neuron_kproj_total(512, 1).unwrap(), 1024);
        assert_eq!(neuron_kproj_total(512, 2).unwrap(), 523_264);
        assert_eq!(neuron_kproj_total(255, 2).unwrap(), 129_540);
        assert_eq!(neuron_kproj_total(3, 2).unwrap(), 12);
    }

    #[test]
    fn single_pattern_k1_covers_half() {
        let mut rng = Rng::new(1);
        let patterns = random_patterns(&mut rng, 1, 9);
        let report = neuron_kproj_coverage(&patterns, 1).unwrap();
        assert_eq!(report.covered, 9);
        assert_eq!(report.total, 18);
        assert!((report.ratio() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_complementary_patterns_k2() {
        let patterns = vec![
            Pattern::from_bits(&[false, false]),
            Pattern::from_bits(&[true, true]),
        ];
        let report = neuron_kproj_coverage(&patterns, 2).unwrap();
        assert_eq!(report.covered, 2);
        assert_eq!(report.total, 4);
    }

    #[test]
    fn bulk_path_matches_exhaustive_oracle() {
        let mut rng = Rng::new(2024);
        for trial in 0..60 {
            let n = 2 + rng.next_index(9); // 2..=10
            let count = 1 + rng.next_index(20);
            let patterns = random_patterns(&mut rng, count, n);
            for k in 1..=3.min(n) {
                let report = neuron_kproj_coverage(&patterns, k).unwrap();
                assert_eq!(
                    report.covered,
                    oracle_covered(&patterns, k),
                    "trial {trial} n={n} k={k}"
                );
                assert_eq!(report.total, neuron_kproj_total(n, k).unwrap());
            }
        }
    }

    #[test]
    fn per_pattern_path_and_merge_match_bulk() {
        let mut rng = Rng::new(55);
        let n = 12;
        let patterns = random_patterns(&mut rng, 17, n);
        for k in 1..=3 {
            let mut bulk = NeuronCoverage::new(n, k).unwrap();
            bulk.add_patterns(&patterns).unwrap();

            let mut left = NeuronCoverage::new(n, k).unwrap();
            for p in &patterns[..8] {
                left.add_pattern(p).unwrap();
            }
            let mut right = NeuronCoverage::new(n, k).unwrap();
            right.add_patterns(&patterns[8..]).unwrap();
            left.merge(&right).unwrap();

            assert_eq!(left.covered(), bulk.covered(), "k={k}");
        }
    }

    #[test]
    fn adding_patterns_never_decreases_covered() {
        let mut rng = Rng::new(9);
        let patterns = random_patterns(&mut rng, 30, 8);
        let mut acc = NeuronCoverage::new(8, 2).unwrap();
        let mut last = 0;
        for p in &patterns {
            acc.add_pattern(p).unwrap();
            let now = acc.covered();
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn covered_bounded_by_pattern_count_times_subsets() {
        let mut rng = Rng::new(33);
        for _ in 0..20 {
            let n = 3 + rng.next_index(8);
            let m = 1 + rng.next_index(10);
            let patterns = random_patterns(&mut rng, m, n);
            for k in 1..=3.min(n) {
                let report = neuron_kproj_coverage(&patterns, k).unwrap();
                let mut binom = 1u64;
                for i in 0..k as u64 {
                    binom = binom * (n as u64 - i) / (i + 1);
                }
                assert!(report.covered <= report.total.min(m as u64 * binom));
            }
        }
    }

    #[test]
    fn coverage_invariant_under_neuron_permutation() {
        let mut rng = Rng::new(88);
        let n = 10;
        let patterns = random_patterns(&mut rng, 12, n);
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let permuted: Vec<Pattern> = patterns
            .iter()
            .map(|p| Pattern::from_bits(&perm.iter().map(|&i| p.get(i)).collect::<Vec<_>>()))
            .collect();
        for k in 1..=3 {
            let a = neuron_kproj_coverage(&patterns, k).unwrap();
            let b = neuron_kproj_coverage(&permuted, k).unwrap();
            assert_eq!(a.covered, b.covered, "k={k}");
        }
    }

    #[test]
    fn union_bound_holds() {
        let mut rng = Rng::new(66);
        let a = random_patterns(&mut rng, 10, 9);
        let b = random_patterns(&mut rng, 10, 9);
        let both: Vec<Pattern> = a.iter().chain(&b).cloned().collect();
        for k in 1..=3 {
            let ca = neuron_kproj_coverage(&a, k).unwrap().covered;
            let cb = neuron_kproj_coverage(&b, k).unwrap().covered;
            let cu = neuron_kproj_coverage(&both, k).unwrap().covered;
            assert!(cu <= ca + cb);
            assert!(cu >= ca.max(cb));
        }
    }

    #[test]
    fn mixed_lengths_rejected() {
        let patterns = vec![Pattern::zeros(4), Pattern::zeros(5)];
        assert!(neuron_kproj_coverage(&patterns, 1).is_err());
    }

    #[test]
    fn k3_memory_guard_refuses_wide_layers() {
        let err = NeuronCoverage::new(2048, 3).unwrap_err();
        assert!(err.to_string().contains("n <= 512"), "{err}");
        assert!(NeuronCoverage::new(512, 3).is_ok());
    }

    #[test]
    fn display_ratio_truncates() {
        let r = CoverageReport {
            group_label: "pos".into(),
            k: 1,
            covered: 3959,
            total: 4096,
        };
        // 3959/4096 = 0.96655273..; rounding would give 0.966553
        assert_eq!(r.display_ratio(), "0.966552");
        let r2 = CoverageReport {
            group_label: "pos".into(),
            k: 1,
            covered: 3976,
            total: 4096,
        };
        assert_eq!(r2.display_ratio(), "0.970703");
        let full = CoverageReport {
            group_label: "x".into(),
            k: 1,
            covered: 7,
            total: 7,
        };
        assert_eq!(full.display_ratio(), "1.000000");
    }

    #[test]
    fn display_percent_truncates() {
        let r = CoverageReport {
            group_label: "all".into(),
            k: 2,
            covered: 32893,
            total: 129_540,
        };
        assert_eq!(r.display_percent(), "25.39");
    }

    // --- scenarios ---

    fn catalog(sizes: &[usize]) -> ScenarioCatalog {
        ScenarioCatalog {
            dimensions: sizes
                .iter()
                .enumerate()
                .map(|(i, &s)| ScenarioDimension {
                    name: format!("d{i}"),
                    values: (0..s).map(|v| format!("v{v}")).collect(),
                })
                .collect(),
        }
    }

    /// Brute-force scenario oracle over explicit subsets and tuples.
    fn scenario_oracle(cat: &ScenarioCatalog, scenarios: &[Scenario], k: usize) -> (u64, u64) {
        let dims = cat.dimensions.len();
        let sizes: Vec<usize> = cat.dimensions.iter().map(|d| d.values.len()).collect();
        let mut covered = 0u64;
        let mut total = 0u64;
        for mask in 0u32..(1 << dims) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let subset: Vec<usize> = (0..dims).filter(|&d| mask & (1 << d) != 0).collect();
            let prod: usize = subset.iter().map(|&d| sizes[d]).product();
            total += prod as u64;
            for code in 0..prod {
                let mut rem = code;
                let mut tuple = vec![0usize; subset.len()];
                for pos in (0..subset.len()).rev() {
                    tuple[pos] = rem % sizes[subset[pos]];
                    rem /= sizes[subset[pos]];
                }
                let hit = scenarios.iter().any(|s| {
                    subset
                        .iter()
                        .zip(&tuple)
                        .all(|(&d, &v)| s.assignment[d] == v)
                });
                if hit {
                    covered += 1;
                }
            }
        }
        (covered, total)
    }

    #[test]
    fn scenario_single_k1() {
        let cat = catalog(&[2, 3]);
        let scenarios = vec![Scenario { assignment: vec![0, 0] }];
        let report = scenario_kproj_coverage(&cat, &scenarios, 1).unwrap();
        assert_eq!(report.covered, 2);
        assert_eq!(report.total, 5);
        assert!((report.ratio() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn full_cartesian_product_is_complete() {
        let cat = catalog(&[2, 3, 2]);
        let mut scenarios = Vec::new();
        for a in 0..2 {
            for b in 0..3 {
                for c in 0..2 {
                    scenarios.push(Scenario { assignment: vec![a, b, c] });
                }
            }
        }
        for k in 1..=3 {
            let report = scenario_kproj_coverage(&cat, &scenarios, k).unwrap();
            assert_eq!(report.covered, report.total, "k={k}");
        }
    }

    #[test]
    fn scenario_coverage_matches_oracle() {
        let mut rng = Rng::new(3030);
        for trial in 0..60 {
            let dims = 2 + rng.next_index(3); // 2..=4
            let sizes: Vec<usize> = (0..dims).map(|_| 2 + rng.next_index(3)).collect();
            let cat = catalog(&sizes);
            let count = 1 + rng.next_index(6);
            let scenarios: Vec<Scenario> = (0..count)
                .map(|_| Scenario {
                    assignment: sizes.iter().map(|&s| rng.next_index(s)).collect(),
                })
                .collect();
            for k in 1..=dims.min(3) {
                let report = scenario_kproj_coverage(&cat, &scenarios, k).unwrap();
                let (want_cov, want_total) = scenario_oracle(&cat, &scenarios, k);
                assert_eq!(report.covered, want_cov, "trial {trial} k={k}");
                assert_eq!(report.total, want_total, "trial {trial} k={k}");
            }
        }
    }

    #[test]
    fn scenario_unknown_value_index_rejected() {
        let cat = catalog(&[2, 2]);
        let bad = vec![Scenario { assignment: vec![0, 5] }];
        assert!(scenario_kproj_coverage(&cat, &bad, 1).is_err());
    }

    #[test]
    fn suggest_fills_uncovered_values_k1() {
        let cat = catalog(&[2, 2]);
        let scenarios = vec![Scenario { assignment: vec![0, 0] }];
        let (s, gain) = suggest_scenario(&cat, &scenarios, 1).unwrap();
        assert_eq!(s.assignment, vec![1, 1]);
        assert_eq!(gain, 2);
    }

    #[test]
    fn suggest_k1_is_globally_optimal() {
        let mut rng = Rng::new(404);
        for _ in 0..40 {
            let dims = 2 + rng.next_index(3);
            let sizes: Vec<usize> = (0..dims).map(|_| 2 + rng.next_index(3)).collect();
            let cat = catalog(&sizes);
            let count = 1 + rng.next_index(4);
            let scenarios: Vec<Scenario> = (0..count)
                .map(|_| Scenario {
                    assignment: sizes.iter().map(|&s| rng.next_index(s)).collect(),
                })
                .collect();
            let before = scenario_kproj_coverage(&cat, &scenarios, 1).unwrap();
            if before.covered == before.total {
                continue;
            }
            let (_, gain) = suggest_scenario(&cat, &scenarios, 1).unwrap();
            // optimum for k=1: one new value per dimension that has any uncovered value
            let mut optimal = 0u64;
            for (d, size) in sizes.iter().enumerate() {
                let covered_values: HashSet<usize> =
                    scenarios.iter().map(|s| s.assignment[d]).collect();
                if covered_values.len() < *size {
                    optimal += 1;
                }
            }
            assert_eq!(gain, optimal);
        }
    }

    #[test]
    fn suggest_gain_matches_recount_and_is_positive() {
        let mut rng = Rng::new(505);
        for _ in 0..40 {
            let dims = 2 + rng.next_index(2); // 2..=3
            let sizes: Vec<usize> = (0..dims).map(|_| 2 + rng.next_index(2)).collect();
            let cat = catalog(&sizes);
            let count = 1 + rng.next_index(4);
            let scenarios: Vec<Scenario> = (0..count)
                .map(|_| Scenario {
                    assignment: sizes.iter().map(|&s| rng.next_index(s)).collect(),
                })
                .collect();
            for k in 1..=dims {
                let before = scenario_kproj_coverage(&cat, &scenarios, k).unwrap();
                if before.covered == before.total {
                    assert!(suggest_scenario(&cat, &scenarios, k).is_err());
                    continue;
                }
                let (s, gain) = suggest_scenario(&cat, &scenarios, k).unwrap();
                assert!(gain >= 1);
                assert!(!scenarios.contains(&s), "suggestion must be new");
                let mut extended = scenarios.clone();
                extended.push(s);
                let after = scenario_kproj_coverage(&cat, &extended, k).unwrap();
                assert_eq!(after.covered - before.covered, gain);
            }
        }
    }

    #[test]
    fn suggest_k2_greedy_at_least_half_of_optimal() {
        let mut rng = Rng::new(606);
        for _ in 0..30 {
            let dims = 3;
            let sizes: Vec<usize> = (0..dims).map(|_| 2 + rng.next_index(2)).collect(); // 2..=3
            let cat = catalog(&sizes);
            let count = 1 + rng.next_index(5);
            let scenarios: Vec<Scenario> = (0..count)
                .map(|_| Scenario {
                    assignment: sizes.iter().map(|&s| rng.next_index(s)).collect(),
                })
                .collect();
            let before = scenario_kproj_coverage(&cat, &scenarios, 2).unwrap();
            if before.covered == before.total {
                continue;
            }
            let (_, gain) = suggest_scenario(&cat, &scenarios, 2).unwrap();

            // exhaustive optimum over all candidate scenarios
            let mut optimal = 0u64;
            for a in 0..sizes[0] {
                for b in 0..sizes[1] {
                    for c in 0..sizes[2] {
                        let mut extended = scenarios.clone();
                        extended.push(Scenario { assignment: vec![a, b, c] });
                        let after = scenario_kproj_coverage(&cat, &extended, 2).unwrap();
                        optimal = optimal.max(after.covered - before.covered);
                    }
                }
            }
            assert!(
                2 * gain >= optimal,
                "greedy gain {gain} below half of optimal {optimal}"
            );
        }
    }
}
