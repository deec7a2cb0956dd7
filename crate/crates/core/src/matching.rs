//! Maximum bipartite matching by augmenting paths.

/// Maximum matching between `left` vertices `0..adj.len()` and right
/// vertices `0..right`. Left vertices are processed in index order and their
/// neighbours in the order given, so the result is deterministic.
///
/// Returns `(left, right)` pairs sorted by left vertex.
pub fn max_matching(adj: &[Vec<usize>], right: usize) -> Vec<(usize, usize)> {
    let mut owner: Vec<Option<usize>> = vec![None; right];
    for u in 0..adj.len() {
        let mut seen = vec![false; right];
        augment(u, adj, &mut owner, &mut seen);
    }
    let mut pairs: Vec<(usize, usize)> = owner
        .iter()
        .enumerate()
        .filter_map(|(v, o)| o.map(|u| (u, v)))
        .collect();
    pairs.sort_unstable();
    pairs
}

fn augment(u: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let free = match owner[v] {
            None => true,
            Some(w) => augment(w, adj, owner, seen),
        };
        if free {
            owner[v] = Some(u);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive oracle: largest set of disjoint edges.
    fn brute_force(adj: &[Vec<usize>], right: usize) -> usize {
        fn go(u: usize, adj: &[Vec<usize>], used: &mut Vec<bool>) -> usize {
            if u == adj.len() {
                return 0;
            }
            let mut best = go(u + 1, adj, used);
            for &v in &adj[u] {
                if !used[v] {
                    used[v] = true;
                    best = best.max(1 + go(u + 1, adj, used));
                    used[v] = false;
                }
            }
            best
        }
        go(0, adj, &mut vec![false; right])
    }

    #[test]
    fn needs_augmenting_path() {
        // greedy would match 0-0 and leave 1 unmatched
        let adj = vec![vec![0, 1], vec![0]];
        assert_eq!(max_matching(&adj, 2), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn empty_graph() {
        assert!(max_matching(&[vec![], vec![]], 3).is_empty());
    }

    #[test]
    fn agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let (l, r) = (rng.gen_range(1..6), rng.gen_range(1..6));
            let adj: Vec<Vec<usize>> = (0..l)
                .map(|_| (0..r).filter(|_| rng.gen_bool(0.4)).collect())
                .collect();
            let m = max_matching(&adj, r);
            assert_eq!(m.len(), brute_force(&adj, r));
            for &(u, v) in &m {
                assert!(adj[u].contains(&v));
            }
        }
    }
}
