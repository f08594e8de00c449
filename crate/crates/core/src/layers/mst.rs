/// Degree pairs `(l1, l2)`, `l1 <= l2`, feeding each output degree of the
/// efficient tensor product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MstPairSet {
    pub l_in_max: usize,
    /// `pairs[l3]`, sorted lexicographically.
    pub pairs: Vec<Vec<(usize, usize)>>,
}

impl MstPairSet {
    pub fn get(&self, l3: usize) -> &[(usize, usize)] {
        self.pairs.get(l3).map_or(&[], |p| p.as_slice())
    }

    pub fn total(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// For each `l3 <= l_out_max`: a minimum spanning forest (Kruskal) of the
/// graph on degrees `0..=l_in_max` whose edges are the admissible pairs
/// `l1 < l2` weighted by `(2l1+1)(2l2+1)`, then augmented with every
/// same-degree pair `(l, l)` with `l3 <= 2l`. Ties are broken by `(l1, l2)`.
pub fn mst_pair_set(l_in_max: usize, l_out_max: usize) -> MstPairSet {
    let mut pairs = Vec::with_capacity(l_out_max + 1);
    for l3 in 0..=l_out_max {
        let mut edges = Vec::new();
        for l1 in 0..=l_in_max {
            for l2 in l1 + 1..=l_in_max {
                if l2 - l1 <= l3 && l3 <= l1 + l2 {
                    edges.push(((2 * l1 + 1) * (2 * l2 + 1), l1, l2));
                }
            }
        }
        edges.sort_unstable();
        let mut parent: Vec<usize> = (0..=l_in_max).collect();
        let mut chosen = Vec::new();
        for (_, a, b) in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                chosen.push((a, b));
            }
        }
        for l in 0..=l_in_max {
            if l3 <= 2 * l {
                chosen.push((l, l));
            }
        }
        chosen.sort_unstable();
        pairs.push(chosen);
    }
    MstPairSet { l_in_max, pairs }
}
