//! Exhibit inputs: uniform random strings, linear de Bruijn sequences
//! (random via Eulerian circuits, or exhaustively enumerated), and digit
//! streams of the Champernowne and Copeland-Erdos constants.

use crate::entropy::{empirical_entropy, EntropyError};
use crate::sequence::Sequence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("n must be >= 2 and order >= 1 for de Bruijn sequences")]
    InvalidDeBruijnParams,
    #[error("enumeration needs about {work} steps, above the cap {cap}; use random_de_bruijn")]
    EnumerationCapExceeded { work: u64, cap: u64 },
    #[error("de Bruijn graph with n^order = {edges} edges exceeds the memory budget")]
    GraphTooLarge { edges: u64 },
    #[error("base must be >= 2")]
    InvalidBase,
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

/// Default total-work cap for exhaustive de Bruijn enumeration.
pub const ENUMERATION_CAP: u64 = 1 << 20;
const MAX_GRAPH_EDGES: u64 = 1 << 26;

/// The graph whose Eulerian circuits are the de Bruijn sequences: vertices
/// are `(order-1)`-tuples, edges are `order`-tuples.
pub struct DeBruijnGraph {
    n: u32,
    order: usize,
}

impl DeBruijnGraph {
    pub fn new(n: u32, order: usize) -> Result<Self, GeneratorError> {
        if n < 2 || order < 1 {
            return Err(GeneratorError::InvalidDeBruijnParams);
        }
        let edges = (u64::from(n)).checked_pow(order as u32);
        match edges {
            Some(e) if e <= MAX_GRAPH_EDGES => Ok(Self { n, order }),
            _ => Err(GeneratorError::GraphTooLarge { edges: edges.unwrap_or(u64::MAX) }),
        }
    }

    pub fn vertex_count(&self) -> u64 {
        u64::from(self.n).pow(self.order as u32 - 1)
    }

    pub fn edge_count(&self) -> u64 {
        u64::from(self.n).pow(self.order as u32)
    }

    /// Out-degree (equals in-degree) of every vertex.
    pub fn degree(&self) -> u32 {
        self.n
    }

    fn step(&self, vertex: u64, symbol: u32) -> u64 {
        (vertex * u64::from(self.n) + u64::from(symbol)) % self.vertex_count()
    }

    /// The `(order-1)` symbols of a vertex, most significant first.
    fn vertex_symbols(&self, mut vertex: u64) -> Vec<u32> {
        let mut symbols = vec![0u32; self.order - 1];
        for slot in symbols.iter_mut().rev() {
            *slot = (vertex % u64::from(self.n)) as u32;
            vertex /= u64::from(self.n);
        }
        symbols
    }
}

/// `m` i.i.d. uniform symbols over `{0, .., n-1}`, deterministic in the seed.
pub fn random_string(n: u32, m: usize, seed: u64) -> Sequence {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = (0..m).map(|_| rng.gen_range(0..n)).collect();
    Sequence::new(symbols, n).expect("sampled symbols are in range")
}

/// All n-ary linear de Bruijn sequences of the given order, by backtracking
/// over the edge set from every start vertex. There are `(n!)^(n^(order-1))`.
pub fn enumerate_de_bruijn(n: u32, order: usize) -> Result<Vec<Sequence>, GeneratorError> {
    enumerate_de_bruijn_capped(n, order, ENUMERATION_CAP)
}

pub fn enumerate_de_bruijn_capped(
    n: u32,
    order: usize,
    cap: u64,
) -> Result<Vec<Sequence>, GeneratorError> {
    let graph = DeBruijnGraph::new(n, order)?;
    let edges = graph.edge_count();
    if edges + order as u64 - 1 > cap {
        return Err(GeneratorError::EnumerationCapExceeded { work: edges, cap });
    }
    let vcount = graph.vertex_count();
    let mut results = Vec::new();
    let mut work: u64 = 0;
    for start in 0..vcount {
        // Iterative backtracking over unused out-edges.
        let mut used = vec![false; (vcount * u64::from(n)) as usize];
        let mut trail: Vec<(u64, u32)> = vec![(start, 0)]; // (vertex, next symbol to try)
        let mut path: Vec<u32> = Vec::with_capacity(edges as usize);
        while let Some(&(vertex, next_symbol)) = trail.last() {
            work += 1;
            if work > cap * 64 {
                return Err(GeneratorError::EnumerationCapExceeded { work, cap });
            }
            if path.len() as u64 == edges && next_symbol == 0 {
                // Balanced graph: a trail using every edge closes at the start.
                debug_assert_eq!(vertex, start);
                let mut symbols = graph.vertex_symbols(start);
                symbols.extend_from_slice(&path);
                results.push(Sequence::new(symbols, n).expect("symbols in range"));
            }
            if path.len() as u64 == edges || next_symbol == n {
                trail.pop();
                if let Some(last) = path.pop() {
                    let parent = trail.last().expect("path nonempty implies a parent").0;
                    used[(parent * u64::from(n) + u64::from(last)) as usize] = false;
                }
                continue;
            }
            trail.last_mut().expect("just observed").1 += 1;
            let edge = (vertex * u64::from(n) + u64::from(next_symbol)) as usize;
            if !used[edge] {
                used[edge] = true;
                path.push(next_symbol);
                trail.push((graph.step(vertex, next_symbol), 0));
            }
        }
    }
    Ok(results)
}

/// One linear de Bruijn sequence from a random Eulerian circuit (random
/// out-edge order per vertex, Hierholzer walk from a random start vertex).
/// Valid but not claimed uniform over all sequences.
pub fn random_de_bruijn(n: u32, order: usize, seed: u64) -> Result<Sequence, GeneratorError> {
    let graph = DeBruijnGraph::new(n, order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vcount = graph.vertex_count() as usize;
    let adjacency: Vec<Vec<u32>> = (0..vcount)
        .map(|_| {
            let mut symbols: Vec<u32> = (0..n).collect();
            symbols.shuffle(&mut rng);
            symbols
        })
        .collect();
    let start = rng.gen_range(0..vcount as u64);

    // Hierholzer: walk until stuck, splice detours as the stack unwinds.
    let mut cursor = vec![0usize; vcount];
    let mut stack: Vec<(u64, u32)> = vec![(start, u32::MAX)];
    let mut circuit: Vec<u32> = Vec::with_capacity(graph.edge_count() as usize);
    while let Some(&(vertex, arrived_by)) = stack.last() {
        let next = cursor[vertex as usize];
        if next < n as usize {
            cursor[vertex as usize] += 1;
            let symbol = adjacency[vertex as usize][next];
            stack.push((graph.step(vertex, symbol), symbol));
        } else {
            stack.pop();
            if !stack.is_empty() {
                circuit.push(arrived_by);
            }
        }
    }
    circuit.reverse();
    debug_assert_eq!(circuit.len() as u64, graph.edge_count());
    let mut symbols = graph.vertex_symbols(start);
    symbols.extend_from_slice(&circuit);
    Ok(Sequence::new(symbols, n).expect("symbols in range"))
}

fn digits_in_base(mut value: u64, base: u32) -> Vec<u32> {
    let mut digits = Vec::new();
    while value > 0 {
        digits.push((value % u64::from(base)) as u32);
        value /= u64::from(base);
    }
    digits.reverse();
    digits
}

/// First `m` digits after the point of the base-`base` Champernowne number
/// (1, 2, 3, ... concatenated in that base).
pub fn champernowne_digits(base: u32, m: usize) -> Result<Sequence, GeneratorError> {
    if base < 2 {
        return Err(GeneratorError::InvalidBase);
    }
    let mut symbols = Vec::with_capacity(m);
    let mut value = 1u64;
    while symbols.len() < m {
        symbols.extend(digits_in_base(value, base));
        value += 1;
    }
    symbols.truncate(m);
    Ok(Sequence::new(symbols, base).expect("digits below base"))
}

/// First `m` digits of the primes 2, 3, 5, 7, 11, ... concatenated in the
/// given base.
pub fn copeland_erdos_digits(base: u32, m: usize) -> Result<Sequence, GeneratorError> {
    if base < 2 {
        return Err(GeneratorError::InvalidBase);
    }
    let mut symbols = Vec::with_capacity(m);
    let mut primes: Vec<u64> = Vec::new();
    let mut candidate = 2u64;
    while symbols.len() < m {
        let is_prime = primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0);
        if is_prime {
            primes.push(candidate);
            symbols.extend(digits_in_base(candidate, base));
        }
        candidate += 1;
    }
    symbols.truncate(m);
    Ok(Sequence::new(symbols, base).expect("digits below base"))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NormalityRow {
    pub order: usize,
    pub entropy: f64,
    /// `log2 n - H_order`; tends to 0 for prefixes of normal numbers.
    pub gap: f64,
}

/// Per-order entropy gaps `log2(n) - H_l` for a digit stream. Finite-m
/// measurements only; no convergence is asserted.
pub fn normality_report(
    digits: &Sequence,
    l_max: usize,
) -> Result<Vec<NormalityRow>, GeneratorError> {
    let log_n = f64::from(digits.n()).log2();
    (0..=l_max)
        .map(|order| {
            let entropy = empirical_entropy(digits, order)?;
            Ok(NormalityRow { order, entropy, gap: log_n - entropy })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Scan oracle: every `order`-tuple occurs exactly once.
    fn is_linear_de_bruijn(seq: &Sequence, order: usize) -> bool {
        let n = seq.n() as u64;
        let expect = n.pow(order as u32);
        if seq.m() as u64 != expect + order as u64 - 1 {
            return false;
        }
        let mut seen = BTreeSet::new();
        for window in seq.symbols().windows(order) {
            if !seen.insert(window.to_vec()) {
                return false;
            }
        }
        seen.len() as u64 == expect
    }

    #[test]
    fn random_string_edges() {
        assert_eq!(random_string(1, 5, 3).symbols(), &[0; 5]);
        assert_eq!(random_string(7, 0, 3).m(), 0);
        assert_eq!(random_string(4, 100, 9), random_string(4, 100, 9));
    }

    #[test]
    fn random_string_frequencies_are_balanced() {
        let seq = random_string(2, 1_000_000, 12345);
        let ones: usize = seq.symbols().iter().map(|&s| s as usize).sum();
        // 4 sigma around m/2 with sigma = sqrt(m)/2.
        let sigma = (1_000_000f64).sqrt() / 2.0;
        assert!((ones as f64 - 500_000.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn enumerate_counts_match_rosenfeld() {
        // (n!)^(n^(order-1))
        for (n, order, expect) in [(2, 1, 2), (2, 2, 4), (2, 3, 16), (3, 1, 6), (3, 2, 216)] {
            let all = enumerate_de_bruijn(n, order).unwrap();
            assert_eq!(all.len(), expect, "n={n} order={order}");
            for seq in &all {
                assert!(is_linear_de_bruijn(seq, order));
            }
            let distinct: BTreeSet<_> = all.iter().map(|s| s.symbols().to_vec()).collect();
            assert_eq!(distinct.len(), expect);
        }
    }

    #[test]
    fn enumerate_2_3_contains_known_sequence() {
        let all = enumerate_de_bruijn(2, 3).unwrap();
        let example = vec![0, 0, 0, 1, 0, 1, 1, 1, 0, 0];
        assert!(all.iter().any(|s| s.symbols() == example));
        assert!(all.iter().all(|s| s.m() == 10));
    }

    #[test]
    fn enumerate_2_2_matches_exhaustive_search() {
        // Oracle: scan all 2^5 binary strings of length 5.
        let mut brute = Vec::new();
        for bits in 0u32..32 {
            let symbols: Vec<u32> = (0..5).rev().map(|i| bits >> i & 1).collect();
            let seq = Sequence::new(symbols, 2).unwrap();
            if is_linear_de_bruijn(&seq, 2) {
                brute.push(seq.symbols().to_vec());
            }
        }
        let mut enumerated: Vec<Vec<u32>> =
            enumerate_de_bruijn(2, 2).unwrap().iter().map(|s| s.symbols().to_vec()).collect();
        brute.sort();
        enumerated.sort();
        assert_eq!(enumerated, brute);
    }

    #[test]
    fn enumerate_order_1_is_permutations() {
        let all = enumerate_de_bruijn(2, 1).unwrap();
        let mut seqs: Vec<Vec<u32>> = all.iter().map(|s| s.symbols().to_vec()).collect();
        seqs.sort();
        assert_eq!(seqs, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        assert!(matches!(
            enumerate_de_bruijn(2, 21),
            Err(GeneratorError::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn random_de_bruijn_is_member_of_enumeration() {
        let all: BTreeSet<Vec<u32>> =
            enumerate_de_bruijn(2, 3).unwrap().iter().map(|s| s.symbols().to_vec()).collect();
        for seed in 0..10 {
            let seq = random_de_bruijn(2, 3, seed).unwrap();
            assert!(all.contains(seq.symbols()));
        }
    }

    #[test]
    fn random_de_bruijn_entropies() {
        for (n, order, seed) in [(2u32, 3usize, 1u64), (3, 3, 2), (4, 2, 3), (2, 8, 4)] {
            let seq = random_de_bruijn(n, order, seed).unwrap();
            assert!(is_linear_de_bruijn(&seq, order));
            assert_eq!(empirical_entropy(&seq, order).unwrap(), 0.0);
            // (l-1)st-order entropy: every length-(l-1) context has exactly n
            // uniform followers (one per l-tuple starting with it), so
            // n^l log2(n) / (n^l + l - 1).
            let edges = f64::from(n).powi(order as i32);
            let expect = edges * f64::from(n).log2() / (edges + order as f64 - 1.0);
            let h = empirical_entropy(&seq, order - 1).unwrap();
            assert!((h - expect).abs() < 1e-9, "n={n} order={order}: {h} vs {expect}");
        }
    }

    #[test]
    fn random_de_bruijn_2_3_second_order_entropy() {
        // Direct hand count on any 10-bit sequence: each of the 4 contexts
        // sees followers {0, 1} once each, 8 samples over length 10.
        let seq = random_de_bruijn(2, 3, 99).unwrap();
        assert!((empirical_entropy(&seq, 2).unwrap() - 0.8).abs() < 1e-9);
    }

    #[test]
    fn champernowne_base_10_and_2() {
        let seq = champernowne_digits(10, 12).unwrap();
        assert_eq!(seq.symbols(), &[1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1]);
        // 1, 10, 11, 100 -> 1 1 0 1 1 1 0
        let seq = champernowne_digits(2, 7).unwrap();
        assert_eq!(seq.symbols(), &[1, 1, 0, 1, 1, 1, 0]);
        assert_eq!(champernowne_digits(10, 1).unwrap().symbols(), &[1]);
        assert!(champernowne_digits(1, 5).is_err());
    }

    #[test]
    fn copeland_erdos_base_10_and_2() {
        let seq = copeland_erdos_digits(10, 9).unwrap();
        assert_eq!(seq.symbols(), &[2, 3, 5, 7, 1, 1, 1, 3, 1]);
        assert_eq!(copeland_erdos_digits(10, 1).unwrap().symbols(), &[2]);
        // 10, 11, 101 (truncated)
        let seq = copeland_erdos_digits(2, 5).unwrap();
        assert_eq!(seq.symbols(), &[1, 0, 1, 1, 1]);
    }

    #[test]
    fn normality_gap_shrinks_for_champernowne() {
        // Independently recomputed from digit counts of 1..185185:
        // {0: 83528, 1: 179810, ..., 9: 83528} gives gap 0.04373030930787.
        let digits = champernowne_digits(10, 1_000_000).unwrap();
        let report = normality_report(&digits, 0).unwrap();
        assert!((report[0].gap - 0.0437303093078687).abs() < 1e-12);
        let coarse = normality_report(&champernowne_digits(10, 1000).unwrap(), 0).unwrap();
        assert!(report[0].gap < coarse[0].gap);
    }

    #[test]
    fn normality_gap_for_constant_and_random() {
        let constant = Sequence::new(vec![0; 1000], 10).unwrap();
        let report = normality_report(&constant, 0).unwrap();
        assert!((report[0].gap - 10f64.log2()).abs() < 1e-12);

        let random = random_string(10, 1_000_000, 5);
        let report = normality_report(&random, 0).unwrap();
        assert!(report[0].gap < 0.001);
    }
}
