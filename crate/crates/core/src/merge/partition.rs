use crate::config::PartitionRule;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Positions (ascending) of the source set `P` and destination set `Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub sources: Vec<usize>,
    pub destinations: Vec<usize>,
}

impl Partition {
    /// Builds the partition with the given source positions; the rest are destinations.
    pub fn from_sources(len: usize, mut sources: Vec<usize>) -> Result<Self> {
        sources.sort_unstable();
        sources.dedup();
        if sources.is_empty() || sources.len() >= len || sources.last().is_some_and(|&p| p >= len) {
            return Err(Error::Precondition(format!(
                "invalid source set of {} positions over {len} tokens",
                sources.len()
            )));
        }
        let mut is_source = vec![false; len];
        for &p in &sources {
            is_source[p] = true;
        }
        let destinations = (0..len).filter(|&i| !is_source[i]).collect();
        Ok(Self { sources, destinations })
    }
}

/// Splits `len` tokens into `r` sources and `len − r` destinations.
///
/// `Alternating` takes even positions first and, once those run out, odd
/// positions in ascending order. `SeededRandom(seed)` draws the subset with a
/// partial Fisher–Yates shuffle of a generator seeded with `seed` directly;
/// callers derive per-step seeds.
pub fn bipartition(len: usize, r: usize, rule: &PartitionRule) -> Result<Partition> {
    if r == 0 || r >= len {
        return Err(Error::Precondition(format!("need 1 <= r < R, got r={r}, R={len}")));
    }
    let sources = match rule {
        PartitionRule::Alternating => (0..len).step_by(2).chain((1..len).step_by(2)).take(r).collect(),
        PartitionRule::SeededRandom(seed) => Rng::new(*seed).sample_indices(len, r),
    };
    Partition::from_sources(len, sources)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_takes_even_positions() {
        let p = bipartition(4, 2, &PartitionRule::Alternating).unwrap();
        assert_eq!(p.sources, [0, 2]);
        assert_eq!(p.destinations, [1, 3]);
        let p = bipartition(5, 2, &PartitionRule::Alternating).unwrap();
        assert_eq!(p.sources, [0, 2]);
        assert_eq!(p.destinations, [1, 3, 4]);
    }

    #[test]
    fn alternating_spills_into_odd_positions() {
        let p = bipartition(6, 4, &PartitionRule::Alternating).unwrap();
        assert_eq!(p.sources, [0, 1, 2, 4]);
        assert_eq!(p.destinations, [3, 5]);
    }

    #[test]
    fn smallest_split() {
        let p = bipartition(2, 1, &PartitionRule::Alternating).unwrap();
        assert_eq!((p.sources, p.destinations), (vec![0], vec![1]));
        let p = bipartition(2, 1, &PartitionRule::SeededRandom(4)).unwrap();
        assert_eq!(p.sources.len(), 1);
    }

    #[test]
    fn seeded_partition_is_deterministic() {
        let rule = PartitionRule::SeededRandom(1234);
        let a = bipartition(50, 20, &rule).unwrap();
        assert_eq!(a, bipartition(50, 20, &rule).unwrap());
        assert_eq!(a.sources.len(), 20);
        assert_eq!(a.destinations.len(), 30);
        assert_ne!(a, bipartition(50, 20, &PartitionRule::SeededRandom(1235)).unwrap());
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(bipartition(3, 0, &PartitionRule::Alternating).is_err());
        assert!(bipartition(3, 3, &PartitionRule::Alternating).is_err());
        assert!(Partition::from_sources(3, vec![3]).is_err());
    }
}
