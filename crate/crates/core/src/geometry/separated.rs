use super::{LatticePoint, PointSet};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest input accepted by the exhaustive search of [`max_separated_subset`].
pub const EXACT_SEPARATION_CAP: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeparationMode {
    Exact,
    Greedy,
}

#[derive(Clone, Debug)]
pub struct SeparatedSet {
    pub points: PointSet,
    pub gap: Rational,
    pub mode: SeparationMode,
}

/// A largest (exact) or maximal (greedy) subset whose pairwise sup-distances
/// are all `>= gap`.
pub fn max_separated_subset(
    set: &PointSet,
    gap: Rational,
    mode: SeparationMode,
) -> Result<SeparatedSet> {
    let idx = match mode {
        SeparationMode::Greedy => greedy_separated_indices(set.numerators(), set.denom(), gap),
        SeparationMode::Exact => {
            if set.len() > EXACT_SEPARATION_CAP {
                return Err(Error::Capacity {
                    what: "exact separated subset",
                    size: set.len() as u128,
                    cap: EXACT_SEPARATION_CAP as u128,
                });
            }
            exact_separated_indices(set.numerators(), set.denom(), gap, None)
                .expect("unbudgeted search always completes")
        }
    };
    Ok(SeparatedSet {
        points: set.subset(&idx),
        gap,
        mode,
    })
}

/// `dist_num / denom >= gap`, decided in integers.
fn far_enough(d: i64, denom: i64, gap: Rational) -> bool {
    d as i128 * *gap.denom() as i128 >= *gap.numer() as i128 * denom as i128
}

/// Lexicographic greedy pass; the result cannot be extended.
pub(crate) fn greedy_separated_indices(
    pts: &[LatticePoint],
    denom: i64,
    gap: Rational,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        if chosen
            .iter()
            .all(|&j| far_enough(p.sup_dist(&pts[j]), denom, gap))
        {
            chosen.push(i);
        }
    }
    chosen
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let t = word.trailing_zeros() as usize;
                word &= word - 1;
                Some(w * 64 + t)
            })
        })
    }
}

struct CliqueSearch<'a> {
    adj: &'a [Bits],
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
    budget: Option<u64>,
    exhausted: bool,
}

impl CliqueSearch<'_> {
    /// Greedy sequential colouring; returns vertices in colour order with
    /// the colour count used as an upper bound.
    fn colour(&self, p: &Bits) -> Vec<(usize, usize)> {
        let mut uncoloured = p.clone();
        let mut order = Vec::new();
        let mut colour = 0;
        while !uncoloured.is_empty() {
            colour += 1;
            let mut q = uncoloured.clone();
            loop {
                let Some(v) = q.iter().next() else { break };
                q.clear(v);
                uncoloured.clear(v);
                order.push((v, colour));
                // drop neighbours of v from this colour class
                for (w, a) in q.0.iter_mut().zip(&self.adj[v].0) {
                    *w &= !a;
                }
            }
        }
        order
    }

    fn expand(&mut self, mut p: Bits) {
        if self.exhausted {
            return;
        }
        self.nodes += 1;
        if let Some(b) = self.budget {
            if self.nodes > b {
                self.exhausted = true;
                return;
            }
        }
        let order = self.colour(&p);
        for &(v, c) in order.iter().rev() {
            if self.current.len() + c <= self.best.len() {
                return;
            }
            self.current.push(v);
            let next = p.and(&self.adj[v]);
            if next.is_empty() {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next);
            }
            self.current.pop();
            p.clear(v);
            if self.exhausted {
                return;
            }
        }
    }
}

/// Maximum separated subset by branch and bound (maximum clique in the
/// "far enough" graph with colouring bounds). `budget` caps search nodes;
/// `None` is returned when it runs out.
pub(crate) fn exact_separated_indices(
    pts: &[LatticePoint],
    denom: i64,
    gap: Rational,
    budget: Option<u64>,
) -> Option<Vec<usize>> {
    let n = pts.len();
    if n <= 1 {
        return Some((0..n).collect());
    }
    let mut adj = vec![Bits::empty(n); n];
    let mut any_edge = false;
    for i in 0..n {
        for j in (i + 1)..n {
            if far_enough(pts[i].sup_dist(&pts[j]), denom, gap) {
                adj[i].set(j);
                adj[j].set(i);
                any_edge = true;
            }
        }
    }
    if !any_edge {
        return Some(vec![0]);
    }
    let mut all = Bits::empty(n);
    for i in 0..n {
        all.set(i);
    }
    let mut search = CliqueSearch {
        adj: &adj,
        best: greedy_separated_indices(pts, denom, gap),
        current: Vec::new(),
        nodes: 0,
        budget,
        exhausted: false,
    };
    search.expand(all);
    if search.exhausted {
        return None;
    }
    let mut best = search.best;
    best.sort_unstable();
    Some(best)
}
