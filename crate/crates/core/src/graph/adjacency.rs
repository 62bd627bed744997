/// Source-major compressed adjacency of one relation.
///
/// `offsets` has `num_sources + 1` entries; the out-neighbors of `u` are
/// `targets[offsets[u]..offsets[u + 1]]`, sorted ascending and unique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Adjacency {
    pub fn empty(num_sources: usize) -> Self {
        Self {
            offsets: vec![0; num_sources + 1],
            targets: Vec::new(),
        }
    }

    /// Builds from pairs that are already sorted by `(src, dst)` and free of
    /// duplicates. Sources must be `< num_sources`.
    pub fn from_sorted_unique(num_sources: usize, pairs: Vec<(u32, u32)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        let mut offsets = vec![0usize; num_sources + 1];
        for &(u, _) in &pairs {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..num_sources {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, v)| v).collect();
        Self { offsets, targets }
    }

    /// Sorts and deduplicates, returning the adjacency and the number of
    /// duplicates removed.
    pub fn from_pairs(num_sources: usize, mut pairs: Vec<(u32, u32)>) -> (Self, usize) {
        pairs.sort_unstable();
        let before = pairs.len();
        pairs.dedup();
        let dups = before - pairs.len();
        (Self::from_sorted_unique(num_sources, pairs), dups)
    }

    /// Builds from raw parts. No invariant is checked.
    pub fn from_raw_parts(offsets: Vec<usize>, targets: Vec<u32>) -> Self {
        Self { offsets, targets }
    }

    pub fn num_sources(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn num_edges(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn contains(&self, u: usize, v: u32) -> bool {
        u < self.num_sources() && self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Edges in canonical `(src, dst)` order. Edge `e` of this iterator is
    /// the `e`-th entry of `targets`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.num_sources()).flat_map(move |u| {
            self.neighbors(u).iter().map(move |&v| (u as u32, v))
        })
    }

    /// Source index of every stored edge, aligned with `targets`.
    pub fn sources(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_sources() {
            out.extend(std::iter::repeat_n(u as u32, self.out_degree(u)));
        }
        out
    }

    /// Transposed adjacency; `num_dst` becomes the new source count.
    pub fn transpose(&self, num_dst: usize) -> Adjacency {
        let mut offsets = vec![0usize; num_dst + 1];
        for &v in &self.targets {
            offsets[v as usize + 1] += 1;
        }
        for i in 0..num_dst {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0u32; self.targets.len()];
        // sources visited in ascending order, so each row ends up sorted
        for u in 0..self.num_sources() {
            for &v in self.neighbors(u) {
                let slot = &mut cursor[v as usize];
                targets[*slot] = u as u32;
                *slot += 1;
            }
        }
        Adjacency { offsets, targets }
    }

    /// Keeps the edges whose canonical index has `mask[e] == true`.
    pub fn filter_mask(&self, mask: &[bool]) -> Adjacency {
        assert_eq!(mask.len(), self.num_edges());
        let mut offsets = Vec::with_capacity(self.offsets.len());
        let mut targets = Vec::with_capacity(mask.iter().filter(|&&k| k).count());
        offsets.push(0);
        for u in 0..self.num_sources() {
            for e in self.offsets[u]..self.offsets[u + 1] {
                if mask[e] {
                    targets.push(self.targets[e]);
                }
            }
            offsets.push(targets.len());
        }
        Adjacency { offsets, targets }
    }

    /// In-degree of every destination node.
    pub fn in_degrees(&self, num_dst: usize) -> Vec<usize> {
        let mut deg = vec![0usize; num_dst];
        for &v in &self.targets {
            deg[v as usize] += 1;
        }
        deg
    }
}
