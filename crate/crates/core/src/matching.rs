//! Minimal-Lipschitz matchings between finite point sets.
//!
//! The objective of an assignment is its largest pairwise distance ratio
//! (a bottleneck over pairs). It only takes values among the finitely many
//! ratios `d_T(u, v) / d_S(x, y)`, so the exact optimum is found by binary
//! search over those candidates with a backtracking feasibility oracle.

use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distortion::{BijectionTable, Frac};
use crate::error::{Error, Result};
use crate::geometry::{LatticePoint, PointSet, ScaledPoint};
use crate::rational::Rational;

/// Largest number of injections `brute_force_min` will enumerate.
pub const BRUTE_FORCE_CAP: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Minimise `L` with `d_T(f x, f y) <= L·d_S(x, y)`.
    #[default]
    Lipschitz,
    /// Minimise `L` with `d_S/L <= d_T <= L·d_S`.
    Bilipschitz,
}

#[derive(Clone, Debug)]
pub struct MatchInstance {
    pub source: PointSet,
    pub target: PointSet,
    pub mode: MatchMode,
    /// Allow `|source| < |target|`; otherwise sizes must agree.
    pub injective: bool,
}

impl MatchInstance {
    pub fn new(source: PointSet, target: PointSet, mode: MatchMode, injective: bool) -> Result<Self> {
        let (n, m) = (source.len(), target.len());
        if n == 0 {
            return Err(Error::Shape("empty source".into()));
        }
        if injective && n > m {
            return Err(Error::Shape(format!("cannot inject {n} points into {m}")));
        }
        if !injective && n != m {
            return Err(Error::Shape(format!(
                "bijection needs equal sizes, got {n} and {m}"
            )));
        }
        Ok(Self {
            source,
            target,
            mode,
            injective,
        })
    }

    pub fn bijection(source: PointSet, target: PointSet, mode: MatchMode) -> Result<Self> {
        Self::new(source, target, mode, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Heuristic { seed: u64, iters: usize, restarts: usize },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct MatchStats {
    pub nodes: u64,
    pub candidates: usize,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    pub assignment: BijectionTable,
    pub l_star: Rational,
    pub optimal: bool,
    pub stats: MatchStats,
}

#[derive(Serialize)]
struct MatchResultJson<'a> {
    assignment: Vec<[ScaledPoint; 2]>,
    #[serde(rename = "L_star")]
    l_star: String,
    optimal: bool,
    stats: &'a MatchStats,
}

impl MatchResult {
    pub fn to_json(&self) -> serde_json::Value {
        let f = &self.assignment;
        let view = MatchResultJson {
            assignment: f
                .pairs()
                .map(|(x, u)| [x.scaled(f.source().denom()), u.scaled(f.target().denom())])
                .collect(),
            l_star: crate::rational::fmt_rational(&self.l_star),
            optimal: self.optimal,
            stats: &self.stats,
        };
        serde_json::to_value(view).expect("plain data serializes")
    }
}

/// Distance tables in numerator units.
struct Problem {
    n: usize,
    m: usize,
    ds: Vec<i64>,
    dt: Vec<i64>,
    den_s: i128,
    den_t: i128,
    mode: MatchMode,
}

impl Problem {
    fn new(inst: &MatchInstance) -> Self {
        let (s, t) = (inst.source.numerators(), inst.target.numerators());
        let table = |p: &[LatticePoint]| {
            let k = p.len();
            let mut d = vec![0; k * k];
            for i in 0..k {
                for j in 0..k {
                    d[i * k + j] = p[i].sup_dist(&p[j]);
                }
            }
            d
        };
        Self {
            n: s.len(),
            m: t.len(),
            ds: table(s),
            dt: table(t),
            den_s: inst.source.denom() as i128,
            den_t: inst.target.denom() as i128,
            mode: inst.mode,
        }
    }

    fn ds(&self, i: usize, j: usize) -> i128 {
        self.ds[i * self.n + j] as i128
    }

    fn dt(&self, u: usize, v: usize) -> i128 {
        self.dt[u * self.m + v] as i128
    }

    /// Pair `(i -> u, j -> v)` respects threshold `c`.
    fn allowed(&self, c: Frac, i: usize, u: usize, j: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        let lhs = self.dt(u, v) * self.den_s;
        let rhs = self.ds(i, j) * self.den_t;
        if lhs * c.den > c.num * rhs {
            return false;
        }
        match self.mode {
            MatchMode::Lipschitz => true,
            MatchMode::Bilipschitz => lhs * c.num >= c.den * rhs,
        }
    }

    /// Objective of a full assignment; `1` when there are no pairs.
    fn objective(&self, a: &[usize]) -> Frac {
        let mut best: Option<Frac> = None;
        let mut raise = |r: Frac| {
            if best.is_none_or(|b| r.cmp(&b) == Ordering::Greater) {
                best = Some(r);
            }
        };
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let r = Frac::new(self.dt(a[i], a[j]) * self.den_s, self.ds(i, j) * self.den_t);
                raise(r);
                if self.mode == MatchMode::Bilipschitz {
                    raise(Frac::new(r.den, r.num));
                }
            }
        }
        best.unwrap_or(Frac::new(1, 1))
    }

    /// Objective plus the number of pairs attaining it, for local search.
    fn score(&self, a: &[usize]) -> (Frac, usize) {
        let best = self.objective(a);
        let mut count = 0;
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                let r = Frac::new(self.dt(a[i], a[j]) * self.den_s, self.ds(i, j) * self.den_t);
                let hit = r.cmp(&best) == Ordering::Equal
                    || (self.mode == MatchMode::Bilipschitz
                        && Frac::new(r.den, r.num).cmp(&best) == Ordering::Equal);
                count += hit as usize;
            }
        }
        (best, count)
    }

    fn candidates(&self) -> Vec<Frac> {
        let mut c = vec![Frac::new(1, 1)];
        for i in 0..self.n {
            for j in i + 1..self.n {
                for u in 0..self.m {
                    for v in u + 1..self.m {
                        let r = Frac::new(self.dt(u, v) * self.den_s, self.ds(i, j) * self.den_t);
                        c.push(r);
                        if self.mode == MatchMode::Bilipschitz {
                            c.push(Frac::new(r.den, r.num));
                        }
                    }
                }
            }
        }
        c.sort_by(|a, b| a.cmp(b));
        c.dedup_by(|a, b| a.cmp(b) == Ordering::Equal);
        c
    }
}

fn to_table(inst: &MatchInstance, a: &[usize]) -> BijectionTable {
    let (s, t) = (inst.source.numerators(), inst.target.numerators());
    BijectionTable::new(
        inst.source.denom(),
        inst.target.denom(),
        a.iter().enumerate().map(|(i, &u)| (s[i], t[u])).collect(),
    )
    .expect("assignments are injective")
}

/// Source order by decreasing constraint degree, and for each source point
/// the targets sorted by distance to its image under the centroid map.
fn orders(inst: &MatchInstance, p: &Problem) -> (Vec<usize>, Vec<Vec<usize>>) {
    let s: Vec<(f64, f64)> = inst.source.iter().map(|q| q.to_f64()).collect();
    let t: Vec<(f64, f64)> = inst.target.iter().map(|q| q.to_f64()).collect();
    let centroid = |v: &[(f64, f64)]| {
        let k = v.len() as f64;
        (v.iter().map(|q| q.0).sum::<f64>() / k, v.iter().map(|q| q.1).sum::<f64>() / k)
    };
    let spread = |v: &[(f64, f64)], c: (f64, f64)| {
        v.iter()
            .map(|q| (q.0 - c.0).abs().max((q.1 - c.1).abs()))
            .fold(0.0, f64::max)
    };
    let (cs, ct) = (centroid(&s), centroid(&t));
    let (rs, rt) = (spread(&s, cs), spread(&t, ct));
    let scale = if rs > 0.0 { rt / rs } else { 1.0 };

    // tighter (closer) neighbours constrain more
    let degree: Vec<f64> = (0..p.n)
        .map(|i| {
            (0..p.n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / p.ds(i, j) as f64)
                .sum()
        })
        .collect();
    let mut var_order: Vec<usize> = (0..p.n).collect();
    var_order.sort_by(|&a, &b| degree[b].total_cmp(&degree[a]).then(a.cmp(&b)));

    let values = s
        .iter()
        .map(|q| {
            let guess = (ct.0 + (q.0 - cs.0) * scale, ct.1 + (q.1 - cs.1) * scale);
            let mut idx: Vec<usize> = (0..p.m).collect();
            let key = |u: usize| (t[u].0 - guess.0).abs().max((t[u].1 - guess.1).abs());
            idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
            idx
        })
        .collect();
    (var_order, values)
}

struct Search<'a> {
    p: &'a Problem,
    c: Frac,
    var_order: &'a [usize],
    values: &'a [Vec<usize>],
    assign: Vec<usize>,
    nodes: u64,
}

const UNSET: usize = usize::MAX;

impl Search<'_> {
    /// `domains[x]` lists the targets still open for source point `x`.
    fn run(&mut self, depth: usize, domains: &[Vec<bool>]) -> bool {
        if depth == self.var_order.len() {
            return true;
        }
        let x = self.var_order[depth];
        for &u in &self.values[x] {
            if !domains[x][u] {
                continue;
            }
            self.nodes += 1;
            self.assign[x] = u;
            let mut next = domains.to_vec();
            let mut wiped = false;
            for &y in &self.var_order[depth + 1..] {
                let dom = &mut next[y];
                let mut any = false;
                for (v, open) in dom.iter_mut().enumerate() {
                    if *open && !self.p.allowed(self.c, x, u, y, v) {
                        *open = false;
                    }
                    any |= *open;
                }
                if !any {
                    wiped = true;
                    break;
                }
            }
            if !wiped && self.run(depth + 1, &next) {
                return true;
            }
            self.assign[x] = UNSET;
        }
        false
    }
}

fn feasible_inner(
    p: &Problem,
    c: Frac,
    var_order: &[usize],
    values: &[Vec<usize>],
    nodes: &mut u64,
) -> Option<Vec<usize>> {
    let mut s = Search {
        p,
        c,
        var_order,
        values,
        assign: vec![UNSET; p.n],
        nodes: 0,
    };
    let domains = vec![vec![true; p.m]; p.n];
    let ok = s.run(0, &domains);
    *nodes += s.nodes;
    ok.then_some(s.assign)
}

/// An assignment meeting `d_T <= L·d_S` on every pair (and `d_T >= b·d_S`
/// when `b` is given), or `None` once the search space is exhausted.
pub fn feasible(inst: &MatchInstance, l: Rational, b: Option<Rational>) -> Result<Option<BijectionTable>> {
    if l <= Rational::from_integer(0) {
        return Err(Error::Domain("L must be positive".into()));
    }
    if matches!(b, Some(b) if b > l) {
        return Err(Error::Domain("b must not exceed L".into()));
    }
    let p = Problem::new(inst);
    let c = Frac::new(*l.numer() as i128, *l.denom() as i128);
    let (var_order, values) = orders(inst, &p);
    // bounds are explicit here, so the instance mode plays no role
    let lower = match b {
        Some(b) if b > Rational::from_integer(0) => Frac::new(*b.denom() as i128, *b.numer() as i128),
        _ => Frac { num: 1, den: 0 },
    };
    let found = feasible_two_sided(&p, c, lower, &var_order, &values);
    Ok(found.map(|a| to_table(inst, &a)))
}

/// Feasibility with separate upper ratio `c` and lower ratio `1/lower`.
fn feasible_two_sided(
    p: &Problem,
    c: Frac,
    lower: Frac,
    var_order: &[usize],
    values: &[Vec<usize>],
) -> Option<Vec<usize>> {
    struct Two<'a> {
        p: &'a Problem,
        c: Frac,
        lower: Frac,
    }
    impl Two<'_> {
        fn ok(&self, i: usize, u: usize, j: usize, v: usize) -> bool {
            if u == v {
                return false;
            }
            let lhs = self.p.dt(u, v) * self.p.den_s;
            let rhs = self.p.ds(i, j) * self.p.den_t;
            lhs * self.c.den <= self.c.num * rhs && lhs * self.lower.num >= self.lower.den * rhs
        }
        fn run(
            &self,
            order: &[usize],
            values: &[Vec<usize>],
            assign: &mut [usize],
            domains: &[Vec<bool>],
        ) -> bool {
            let Some((&x, rest)) = order.split_first() else {
                return true;
            };
            for &u in &values[x] {
                if !domains[x][u] {
                    continue;
                }
                assign[x] = u;
                let mut next = domains.to_vec();
                let mut wiped = false;
                for &y in rest {
                    let mut any = false;
                    for v in 0..next[y].len() {
                        if next[y][v] && !self.ok(x, u, y, v) {
                            next[y][v] = false;
                        }
                        any |= next[y][v];
                    }
                    if !any {
                        wiped = true;
                        break;
                    }
                }
                if !wiped && self.run(rest, values, assign, &next) {
                    return true;
                }
            }
            false
        }
    }
    let two = Two { p, c, lower };
    let mut assign = vec![UNSET; p.n];
    let domains = vec![vec![true; p.m]; p.n];
    two.run(var_order, values, &mut assign, &domains).then_some(assign)
}

/// Minimal `L` over all admissible assignments (exact), or the best found by
/// swap local search (heuristic).
pub fn min_lipschitz(inst: &MatchInstance, method: Method) -> Result<MatchResult> {
    let start = Instant::now();
    let p = Problem::new(inst);
    if p.n == 0 {
        return Err(Error::Shape("empty instance".into()));
    }
    let (var_order, values) = orders(inst, &p);
    let mut stats = MatchStats::default();
    let (assign, optimal) = match method {
        Method::Exact => {
            let cands = p.candidates();
            stats.candidates = cands.len();
            // the largest candidate admits every assignment
            let (mut lo, mut hi) = (0usize, cands.len() - 1);
            let mut best = feasible_inner(&p, cands[hi], &var_order, &values, &mut stats.nodes)
                .expect("largest candidate is always feasible");
            while lo < hi {
                let mid = (lo + hi) / 2;
                match feasible_inner(&p, cands[mid], &var_order, &values, &mut stats.nodes) {
                    Some(a) => {
                        best = a;
                        hi = mid;
                    }
                    None => lo = mid + 1,
                }
            }
            (best, true)
        }
        Method::Heuristic {
            seed,
            iters,
            restarts,
        } => (local_search(&p, &values, seed, iters, restarts, &mut stats), false),
    };
    let l_star = p.objective(&assign).to_rational();
    stats.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(MatchResult {
        assignment: to_table(inst, &assign),
        l_star,
        optimal,
        stats,
    })
}

fn local_search(
    p: &Problem,
    values: &[Vec<usize>],
    seed: u64,
    iters: usize,
    restarts: usize,
    stats: &mut MatchStats,
) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let better = |a: (Frac, usize), b: (Frac, usize)| match a.0.cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Equal => a.1 < b.1,
        Ordering::Greater => false,
    };
    // greedy start following the value order
    let mut start = Vec::with_capacity(p.n);
    let mut used = vec![false; p.m];
    for vals in values {
        let u = *vals.iter().find(|&&u| !used[u]).expect("enough targets");
        used[u] = true;
        start.push(u);
    }
    let mut best = start.clone();
    let mut best_score = p.score(&best);
    for round in 0..=restarts {
        let mut cur = if round == 0 {
            start.clone()
        } else {
            let mut pool: Vec<usize> = (0..p.m).collect();
            pool.shuffle(&mut rng);
            pool.truncate(p.n);
            pool
        };
        let mut score = p.score(&cur);
        for _ in 0..iters {
            stats.nodes += 1;
            let mut improved = false;
            let mut moves: Vec<(usize, usize)> = Vec::new();
            for i in 0..p.n {
                for j in i + 1..p.n {
                    moves.push((i, j));
                }
                if p.m > p.n {
                    for u in 0..p.m {
                        if !cur.contains(&u) {
                            moves.push((i, p.n + u));
                        }
                    }
                }
            }
            moves.shuffle(&mut rng);
            for (i, j) in moves {
                let mut next = cur.clone();
                if j < p.n {
                    next.swap(i, j);
                } else {
                    next[i] = j - p.n;
                }
                let s = p.score(&next);
                if better(s, score) {
                    cur = next;
                    score = s;
                    improved = true;
                    break;
                }
            }
            if !improved {
                // stalled: random kick, keep going
                if p.n >= 2 && rng.gen_bool(0.5) {
                    let (a, b) = (rng.gen_range(0..p.n), rng.gen_range(0..p.n));
                    cur.swap(a, b);
                    score = p.score(&cur);
                } else {
                    break;
                }
            }
            if better(score, best_score) {
                best = cur.clone();
                best_score = score;
            }
        }
        if better(score, best_score) {
            best = cur.clone();
            best_score = score;
        }
    }
    best
}

/// Exhaustive minimum over all injections; a test oracle.
pub fn brute_force_min(inst: &MatchInstance) -> Result<MatchResult> {
    let start = Instant::now();
    let p = Problem::new(inst);
    if p.n == 0 {
        return Err(Error::Shape("empty instance".into()));
    }
    let mut count: u128 = 1;
    for k in 0..p.n {
        count = count.saturating_mul((p.m - k) as u128);
        if count > BRUTE_FORCE_CAP {
            return Err(Error::Capacity {
                what: "brute-force injections",
                size: count,
                cap: BRUTE_FORCE_CAP,
            });
        }
    }
    fn rec(
        p: &Problem,
        cur: &mut Vec<usize>,
        used: &mut [bool],
        best: &mut Option<(Frac, Vec<usize>)>,
        nodes: &mut u64,
    ) {
        if cur.len() == p.n {
            *nodes += 1;
            let v = p.objective(cur);
            if best.as_ref().is_none_or(|(b, _)| v.cmp(b) == Ordering::Less) {
                *best = Some((v, cur.clone()));
            }
            return;
        }
        for u in 0..p.m {
            if !used[u] {
                used[u] = true;
                cur.push(u);
                rec(p, cur, used, best, nodes);
                cur.pop();
                used[u] = false;
            }
        }
    }
    let mut best = None;
    let mut nodes = 0;
    rec(&p, &mut Vec::new(), &mut vec![false; p.m], &mut best, &mut nodes);
    let (v, a) = best.expect("at least one injection");
    Ok(MatchResult {
        assignment: to_table(inst, &a),
        l_star: v.to_rational(),
        optimal: true,
        stats: MatchStats {
            nodes,
            candidates: count as usize,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    })
}

/// Objective of an arbitrary table under `mode`, recomputed from scratch.
pub fn assignment_cost(f: &BijectionTable, mode: MatchMode) -> Rational {
    let pairs: Vec<_> = f.pairs().collect();
    let (ds, dt) = (f.source().denom(), f.target().denom());
    let mut best: Option<Rational> = None;
    for a in 0..pairs.len() {
        for b in a + 1..pairs.len() {
            let r = Rational::new(pairs[a].1.sup_dist(&pairs[b].1), dt)
                / Rational::new(pairs[a].0.sup_dist(&pairs[b].0), ds);
            let r = match mode {
                MatchMode::Lipschitz => r,
                MatchMode::Bilipschitz => r.max(r.recip()),
            };
            best = Some(best.map_or(r, |b| b.max(r)));
        }
    }
    best.unwrap_or(Rational::from_integer(1))
}
