use fixedbitset::FixedBitSet;
use rayon::prelude::*;

/// Simple undirected graph with bitset rows.
#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    adj: Vec<FixedBitSet>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { n, adj: vec![FixedBitSet::with_capacity(n); n] }
    }

    /// Edge `{i, j}` for every `i != j` with `edge(i, j)`; `edge` must be
    /// symmetric and is only queried with `i < j`.
    pub fn from_predicate<F>(n: usize, edge: F) -> Self
    where
        F: Fn(usize, usize) -> bool + Sync,
    {
        let lists: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).filter(|&j| edge(i, j)).map(|j| j as u32).collect())
            .collect();
        let mut g = Graph::empty(n);
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                g.add_edge(i, j as usize);
            }
        }
        g
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        if i != j {
            self.adj[i].insert(j);
            self.adj[j].insert(i);
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(j)
    }

    pub fn neighbors(&self, i: usize) -> &FixedBitSet {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].count_ones(..)
    }

    /// Connected components, each sorted, listed by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = FixedBitSet::with_capacity(self.n);
        let mut out = Vec::new();
        for s in 0..self.n {
            if seen.contains(s) {
                continue;
            }
            seen.insert(s);
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let v = comp[head];
                head += 1;
                for w in self.adj[v].ones() {
                    if !seen.contains(w) {
                        seen.insert(w);
                        comp.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `verts` (local indices follow `verts` order).
    pub fn induced(&self, verts: &[usize]) -> Graph {
        let k = verts.len();
        let mut g = Graph::empty(k);
        for a in 0..k {
            for b in (a + 1)..k {
                if self.adj[verts[a]].contains(verts[b]) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    pub fn complement(&self) -> Graph {
        let mut g = Graph::empty(self.n);
        for i in 0..self.n {
            let mut row = self.adj[i].clone();
            row.toggle_range(..);
            row.set(i, false);
            g.adj[i] = row;
        }
        g
    }

    pub fn is_complete(&self) -> bool {
        (0..self.n).all(|i| self.degree(i) + 1 == self.n)
    }

    /// Greedy maximal independent set scanning vertices in `order`.
    pub fn greedy_independent(&self, order: &[usize]) -> Vec<usize> {
        let mut blocked = FixedBitSet::with_capacity(self.n);
        let mut out = Vec::new();
        for &v in order {
            if !blocked.contains(v) {
                out.push(v);
                blocked.insert(v);
                blocked.union_with(&self.adj[v]);
            }
        }
        out
    }

    /// First-fit partition into cliques, scanning vertices in `order`.
    pub fn greedy_clique_partition(&self, order: &[usize]) -> Vec<Vec<usize>> {
        // Each clique keeps the intersection of its members' neighborhoods.
        let mut cliques: Vec<(Vec<usize>, FixedBitSet)> = Vec::new();
        for &v in order {
            match cliques.iter_mut().find(|(_, common)| common.contains(v)) {
                Some((members, common)) => {
                    members.push(v);
                    common.intersect_with(&self.adj[v]);
                }
                None => cliques.push((vec![v], self.adj[v].clone())),
            }
        }
        cliques.into_iter().map(|(m, _)| m).collect()
    }

    /// Maximum clique by branch and bound with a greedy colouring bound.
    ///
    /// Returns the best clique found and whether the search finished inside
    /// `budget` node expansions (decremented in place).
    pub fn max_clique(&self, initial: &[usize], budget: &mut u64) -> (Vec<usize>, bool) {
        let mut best: Vec<usize> = initial.to_vec();
        if self.n == 0 {
            return (best, true);
        }
        // Degree-descending relabelling tightens the colouring bound.
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(self.degree(v)), v));
        let mut pos = vec![0usize; self.n];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let mut adj = vec![FixedBitSet::with_capacity(self.n); self.n];
        for v in 0..self.n {
            for w in self.adj[v].ones() {
                adj[pos[v]].insert(pos[w]);
            }
        }
        let mut r = Vec::new();
        let mut p = FixedBitSet::with_capacity(self.n);
        p.insert_range(..);
        let mut best_local: Vec<usize> = best.iter().map(|&v| pos[v]).collect();
        let done = expand(&adj, &mut r, p, &mut best_local, budget);
        if best_local.len() > best.len() || best.is_empty() {
            best = best_local.iter().map(|&p| order[p]).collect();
        }
        best.sort_unstable();
        (best, done)
    }

    /// All maximal cliques (Bron–Kerbosch with pivoting); `None` past `cap`.
    pub fn maximal_cliques(&self, cap: usize) -> Option<Vec<FixedBitSet>> {
        let mut out = Vec::new();
        let mut r = FixedBitSet::with_capacity(self.n);
        let mut p = FixedBitSet::with_capacity(self.n);
        p.insert_range(..);
        let x = FixedBitSet::with_capacity(self.n);
        if bron_kerbosch(&self.adj, &mut r, p, x, &mut out, cap) {
            Some(out)
        } else {
            None
        }
    }
}

fn colour_sort(adj: &[FixedBitSet], p: &FixedBitSet) -> (Vec<usize>, Vec<usize>) {
    let mut order = Vec::with_capacity(p.count_ones(..));
    let mut colours = Vec::with_capacity(order.capacity());
    let mut uncoloured = p.clone();
    let mut colour = 0;
    while !uncoloured.is_clear() {
        colour += 1;
        let mut q = uncoloured.clone();
        while let Some(v) = q.ones().next() {
            q.set(v, false);
            uncoloured.set(v, false);
            q.difference_with(&adj[v]);
            order.push(v);
            colours.push(colour);
        }
    }
    (order, colours)
}

fn expand(
    adj: &[FixedBitSet],
    r: &mut Vec<usize>,
    mut p: FixedBitSet,
    best: &mut Vec<usize>,
    budget: &mut u64,
) -> bool {
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let (order, colours) = colour_sort(adj, &p);
    for idx in (0..order.len()).rev() {
        if r.len() + colours[idx] <= best.len() {
            return true;
        }
        let v = order[idx];
        r.push(v);
        let mut np = p.clone();
        np.intersect_with(&adj[v]);
        if np.is_clear() {
            if r.len() > best.len() {
                *best = r.clone();
            }
        } else if !expand(adj, r, np, best, budget) {
            r.pop();
            return false;
        }
        r.pop();
        p.set(v, false);
    }
    true
}

fn bron_kerbosch(
    adj: &[FixedBitSet],
    r: &mut FixedBitSet,
    mut p: FixedBitSet,
    mut x: FixedBitSet,
    out: &mut Vec<FixedBitSet>,
    cap: usize,
) -> bool {
    if p.is_clear() {
        if x.is_clear() {
            if out.len() >= cap {
                return false;
            }
            out.push(r.clone());
        }
        return true;
    }
    let mut px = p.clone();
    px.union_with(&x);
    let pivot = px
        .ones()
        .max_by_key(|&u| {
            let mut t = p.clone();
            t.intersect_with(&adj[u]);
            (t.count_ones(..), std::cmp::Reverse(u))
        })
        .unwrap();
    let mut cand = p.clone();
    cand.difference_with(&adj[pivot]);
    for v in cand.ones().collect::<Vec<_>>() {
        r.insert(v);
        let mut np = p.clone();
        np.intersect_with(&adj[v]);
        let mut nx = x.clone();
        nx.intersect_with(&adj[v]);
        if !bron_kerbosch(adj, r, np, nx, out, cap) {
            return false;
        }
        r.set(v, false);
        p.set(v, false);
        x.insert(v);
    }
    true
}

/// Set cover instance over elements `0..n_elems`.
#[derive(Clone, Debug)]
pub struct CoverProblem {
    n_elems: usize,
    sets: Vec<FixedBitSet>,
    elem_sets: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct CoverSolution {
    /// Chosen set indices of the best cover found.
    pub chosen: Vec<usize>,
    /// Certified lower bound on the optimum.
    pub lower: usize,
    pub exact: bool,
}

impl CoverProblem {
    pub fn new(n_elems: usize, sets: Vec<FixedBitSet>) -> Self {
        let mut elem_sets = vec![Vec::new(); n_elems];
        for (s, b) in sets.iter().enumerate() {
            for e in b.ones() {
                elem_sets[e].push(s);
            }
        }
        CoverProblem { n_elems, sets, elem_sets }
    }

    pub fn sets(&self) -> &[FixedBitSet] {
        &self.sets
    }

    /// Every element is covered by some set.
    pub fn feasible(&self) -> bool {
        self.elem_sets.iter().all(|s| !s.is_empty())
    }

    /// Greedy cover: largest number of newly covered elements, lowest index on ties.
    pub fn greedy(&self) -> Vec<usize> {
        let mut uncovered = FixedBitSet::with_capacity(self.n_elems);
        uncovered.insert_range(..);
        let mut chosen = Vec::new();
        while !uncovered.is_clear() {
            let (s, gain) = self
                .sets
                .iter()
                .enumerate()
                .map(|(s, b)| (s, b.intersection_count(&uncovered)))
                .max_by_key(|&(s, g)| (g, std::cmp::Reverse(s)))
                .unwrap();
            if gain == 0 {
                break;
            }
            chosen.push(s);
            uncovered.difference_with(&self.sets[s]);
        }
        chosen
    }

    /// Elements no two of which share a set: a lower bound on any cover of them.
    fn packing(&self, uncovered: &FixedBitSet, blocked: &mut FixedBitSet) -> usize {
        blocked.clear();
        let mut count = 0;
        for e in uncovered.ones() {
            if self.elem_sets[e].iter().all(|&s| !blocked.contains(s)) {
                count += 1;
                for &s in &self.elem_sets[e] {
                    blocked.insert(s);
                }
            }
        }
        count
    }

    pub fn solve(&self, budget: &mut u64) -> CoverSolution {
        let greedy = self.greedy();
        let mut all = FixedBitSet::with_capacity(self.n_elems);
        all.insert_range(..);
        let mut blocked = FixedBitSet::with_capacity(self.sets.len());
        let root_lower = self.packing(&all, &mut blocked);
        if root_lower >= greedy.len() {
            return CoverSolution { chosen: greedy, lower: root_lower, exact: true };
        }
        let mut best = greedy;
        let mut chosen = Vec::new();
        let done = self.branch(all, &mut chosen, &mut best, &mut blocked, budget);
        let lower = if done { best.len() } else { root_lower };
        CoverSolution { chosen: best, lower, exact: done }
    }

    fn branch(
        &self,
        uncovered: FixedBitSet,
        chosen: &mut Vec<usize>,
        best: &mut Vec<usize>,
        blocked: &mut FixedBitSet,
        budget: &mut u64,
    ) -> bool {
        if uncovered.is_clear() {
            if chosen.len() < best.len() {
                *best = chosen.clone();
            }
            return true;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        if chosen.len() + self.packing(&uncovered, blocked) >= best.len() {
            return true;
        }
        let e = uncovered
            .ones()
            .min_by_key(|&e| (self.elem_sets[e].len(), e))
            .unwrap();
        let mut options: Vec<(usize, usize)> = self.elem_sets[e]
            .iter()
            .map(|&s| (s, self.sets[s].intersection_count(&uncovered)))
            .collect();
        options.sort_by_key(|&(s, g)| (std::cmp::Reverse(g), s));
        for (s, _) in options {
            let mut next = uncovered.clone();
            next.difference_with(&self.sets[s]);
            chosen.push(s);
            let ok = self.branch(next, chosen, best, blocked, budget);
            chosen.pop();
            if !ok {
                return false;
            }
            if chosen.len() + 1 >= best.len() {
                break;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Graph {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(p) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    fn brute_max_clique(g: &Graph) -> usize {
        let n = g.len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            if vs.len() > best
                && vs.iter().enumerate().all(|(a, &x)| vs[a + 1..].iter().all(|&y| g.has_edge(x, y)))
            {
                best = vs.len();
            }
        }
        best
    }

    #[test]
    fn max_clique_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let g = random_graph(n, rng.gen_range(0.1..0.9), &mut rng);
            let mut budget = 1_000_000;
            let (c, done) = g.max_clique(&[], &mut budget);
            assert!(done);
            assert_eq!(c.len(), brute_max_clique(&g));
            for (a, &x) in c.iter().enumerate() {
                for &y in &c[a + 1..] {
                    assert!(g.has_edge(x, y));
                }
            }
        }
    }

    #[test]
    fn maximal_cliques_cover_all_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let n = rng.gen_range(1..=10);
            let g = random_graph(n, 0.5, &mut rng);
            let cl = g.maximal_cliques(10_000).unwrap();
            for i in 0..n {
                for j in (i + 1)..n {
                    if g.has_edge(i, j) {
                        assert!(cl.iter().any(|c| c.contains(i) && c.contains(j)));
                    }
                }
            }
            assert!(g.maximal_cliques(0).is_none() || cl.is_empty());
        }
    }

    #[test]
    fn cover_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=8);
            let mut sets: Vec<FixedBitSet> = (0..m)
                .map(|_| {
                    let mut b = FixedBitSet::with_capacity(n);
                    for e in 0..n {
                        if rng.gen_bool(0.35) {
                            b.insert(e);
                        }
                    }
                    b
                })
                .collect();
            for e in 0..n {
                let mut b = FixedBitSet::with_capacity(n);
                b.insert(e);
                if rng.gen_bool(0.5) {
                    sets.push(b);
                } else {
                    let s = rng.gen_range(0..sets.len());
                    sets[s].insert(e);
                }
            }
            let p = CoverProblem::new(n, sets.clone());
            let mut budget = 1_000_000;
            let sol = p.solve(&mut budget);
            assert!(sol.exact);
            let mut best = usize::MAX;
            for mask in 0u32..(1 << sets.len()) {
                let mut u = FixedBitSet::with_capacity(n);
                for (s, b) in sets.iter().enumerate() {
                    if mask >> s & 1 == 1 {
                        u.union_with(b);
                    }
                }
                if u.count_ones(..) == n {
                    best = best.min(mask.count_ones() as usize);
                }
            }
            assert_eq!(sol.chosen.len(), best);
            assert_eq!(sol.lower, best);
        }
    }

    #[test]
    fn components_and_clique_partition() {
        let mut g = Graph::empty(6);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(4, 5);
        assert_eq!(g.components(), vec![vec![0, 1, 2], vec![3], vec![4, 5]]);
        let order: Vec<usize> = (0..6).collect();
        assert_eq!(g.greedy_clique_partition(&order).len(), 4);
        assert_eq!(g.greedy_independent(&order), vec![0, 2, 3, 4]);
    }
}
