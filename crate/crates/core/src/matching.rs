//! Minimum-cost matchings with a prescribed number of pairs.
//!
//! [`max_weight_matching`] is a port of the O(n^3) primal-dual blossom
//! algorithm for general graphs (Galil's formulation, following Joris van
//! Rantwijk's reference implementation). It runs on integer weights so every
//! dual update is exact. [`min_cost_pairs`] reduces "exactly q pairs of
//! minimum total cost" to a maximum-weight perfect matching by padding the
//! graph with dummy vertices that absorb the unpaired packets.

use std::collections::HashMap;

/// Maximum-weight matching of an undirected graph on vertices `0..n`.
/// With `max_cardinality` the result is a maximum-weight matching among the
/// matchings of maximum size. Returns `mate[v]`, or `None` for unmatched.
pub fn max_weight_matching(n: usize, edges: &[(usize, usize, i64)], max_cardinality: bool) -> Vec<Option<usize>> {
    if edges.is_empty() || n == 0 {
        return vec![None; n];
    }
    let mut m = Blossom::new(n, edges);
    m.solve(max_cardinality);
    m.mate
        .iter()
        .map(|&p| if p == NONE { None } else { Some(m.endpoint[p as usize]) })
        .collect()
}

const NONE: isize = -1;

struct Blossom<'a> {
    nv: usize,
    edges: &'a [(usize, usize, i64)],
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    /// Remote endpoint index of the matched edge, or `NONE`.
    mate: Vec<isize>,
    label: Vec<u8>,
    labelend: Vec<isize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<isize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<isize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<isize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<i64>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl<'a> Blossom<'a> {
    fn new(n: usize, edges: &'a [(usize, usize, i64)]) -> Self {
        let maxweight = edges.iter().map(|e| e.2).max().unwrap_or(0).max(0);
        let mut endpoint = Vec::with_capacity(2 * edges.len());
        let mut neighbend = vec![Vec::new(); n];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            assert!(i != j && i < n && j < n, "invalid edge ({i}, {j})");
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut dualvar = vec![maxweight; n];
        dualvar.extend(std::iter::repeat_n(0, n));
        let mut blossombase: Vec<isize> = (0..n as isize).collect();
        blossombase.extend(std::iter::repeat_n(NONE, n));
        Self {
            nv: n,
            edges,
            endpoint,
            neighbend,
            mate: vec![NONE; n],
            label: vec![0; 2 * n],
            labelend: vec![NONE; 2 * n],
            inblossom: (0..n).collect(),
            blossomparent: vec![NONE; 2 * n],
            blossomchilds: vec![Vec::new(); 2 * n],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * n],
            bestedge: vec![NONE; 2 * n],
            blossombestedges: vec![None; 2 * n],
            unusedblossoms: (n..2 * n).collect(),
            dualvar,
            allowedge: vec![false; edges.len()],
            queue: Vec::new(),
        }
    }

    fn slack(&self, k: usize) -> i64 {
        let (i, j, w) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - 2 * w
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nv {
                out.push(t);
            } else {
                stack.extend(self.blossomchilds[t].iter().rev());
            }
        }
        out
    }

    fn assign_label(&mut self, w: usize, t: u8, p: isize) {
        let b = self.inblossom[w];
        debug_assert!(self.label[w] == 0 && self.label[b] == 0);
        self.label[w] = t;
        self.label[b] = t;
        self.labelend[w] = p;
        self.labelend[b] = p;
        self.bestedge[w] = NONE;
        self.bestedge[b] = NONE;
        if t == 1 {
            let leaves = self.leaves(b);
            self.queue.extend(leaves);
        } else {
            let base = self.blossombase[b] as usize;
            let mb = self.mate[base];
            debug_assert!(mb >= 0);
            self.assign_label(self.endpoint[mb as usize], 1, mb ^ 1);
        }
    }

    /// Traces back from `v` and `w` to find a new blossom's base or an
    /// augmenting path (returns `NONE`).
    fn scan_blossom(&mut self, v: usize, w: usize) -> isize {
        let mut path = Vec::new();
        let mut base = NONE;
        let (mut v, mut w) = (v as isize, w as isize);
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v as usize];
            if self.label[b] & 4 != 0 {
                base = self.blossombase[b];
                break;
            }
            path.push(b);
            self.label[b] = 5;
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b] as usize] as isize;
                b = self.inblossom[v as usize];
                v = self.endpoint[self.labelend[b] as usize] as isize;
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = 1;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom pool exhausted");
        self.blossombase[b] = base as isize;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b as isize;
        let mut path = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b as isize;
            path.push(bv);
            endps.push(self.labelend[bv] as usize);
            v = self.endpoint[self.labelend[bv] as usize];
            bv = self.inblossom[v];
        }
        path.push(bb);
        path.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b as isize;
            path.push(bw);
            endps.push((self.labelend[bw] ^ 1) as usize);
            w = self.endpoint[self.labelend[bw] as usize];
            bw = self.inblossom[w];
        }
        self.label[b] = 1;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = 0;
        self.blossomchilds[b] = path.clone();
        self.blossomendps[b] = endps;
        for v in self.leaves(b) {
            if self.label[self.inblossom[v]] == 2 {
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }
        let mut bestedgeto = vec![NONE; 2 * self.nv];
        for &bv in &path {
            let nblists: Vec<Vec<usize>> = match self.blossombestedges[bv].take() {
                Some(list) => vec![list],
                None => self
                    .leaves(bv)
                    .into_iter()
                    .map(|v| self.neighbend[v].iter().map(|p| p / 2).collect())
                    .collect(),
            };
            for nblist in nblists {
                for k in nblist {
                    let (mut i, mut j, _) = self.edges[k];
                    if self.inblossom[j] == b {
                        std::mem::swap(&mut i, &mut j);
                    }
                    let _ = i;
                    let bj = self.inblossom[j];
                    if bj != b
                        && self.label[bj] == 1
                        && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj] as usize))
                    {
                        bestedgeto[bj] = k as isize;
                    }
                }
            }
            self.bestedge[bv] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).map(|k| k as usize).collect();
        self.bestedge[b] = NONE;
        for &k in &list {
            if self.bestedge[b] == NONE || self.slack(k) < self.slack(self.bestedge[b] as usize) {
                self.bestedge[b] = k as isize;
            }
        }
        self.blossombestedges[b] = Some(list);
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        let childs = self.blossomchilds[b].clone();
        for &s in &childs {
            self.blossomparent[s] = NONE;
            if s < self.nv {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == 0 {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }
        if !endstage && self.label[b] == 2 {
            let len = childs.len() as isize;
            let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
            let entrychild = self.inblossom[self.endpoint[(self.labelend[b] ^ 1) as usize]];
            let mut j = childs.iter().position(|&c| c == entrychild).unwrap() as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
                j -= len;
                (1, 0)
            } else {
                (-1, 1)
            };
            let endps = self.blossomendps[b].clone();
            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[(p ^ 1) as usize]] = 0;
                let q = endps[at(j - endptrick as isize)];
                self.label[self.endpoint[q ^ endptrick ^ 1]] = 0;
                self.assign_label(self.endpoint[(p ^ 1) as usize], 2, p);
                self.allowedge[q / 2] = true;
                j += jstep;
                p = (endps[at(j - endptrick as isize)] ^ endptrick) as isize;
                self.allowedge[(p / 2) as usize] = true;
                j += jstep;
            }
            let bv = childs[at(j)];
            let ep = self.endpoint[(p ^ 1) as usize];
            self.label[ep] = 2;
            self.label[bv] = 2;
            self.labelend[ep] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while childs[at(j)] != entrychild {
                let bv = childs[at(j)];
                if self.label[bv] == 1 {
                    j += jstep;
                    continue;
                }
                if let Some(v) = self.leaves(bv).into_iter().find(|&v| self.label[v] != 0) {
                    debug_assert!(self.label[v] == 2 && self.inblossom[v] == bv);
                    self.label[v] = 0;
                    let mb = self.mate[self.blossombase[bv] as usize];
                    self.label[self.endpoint[mb as usize]] = 0;
                    self.assign_label(v, 2, self.labelend[v]);
                }
                j += jstep;
            }
        }
        self.label[b] = 0;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    /// Swaps matched and unmatched edges along the even path from `v` to the
    /// base of blossom `b`, making `v` the new base.
    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b as isize {
            t = self.blossomparent[t] as usize;
        }
        if t >= self.nv {
            self.augment_blossom(t, v);
        }
        let len = self.blossomchilds[b].len() as isize;
        let at = |j: isize| -> usize { j.rem_euclid(len) as usize };
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap();
        let mut j = i as isize;
        let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
            j -= len;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            let p = self.blossomendps[b][at(j - endptrick as isize)] ^ endptrick;
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][at(j)];
            if t >= self.nv {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = (p ^ 1) as isize;
            self.mate[self.endpoint[p ^ 1]] = p as isize;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v as isize);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (mut s, mut p) in [(v, 2 * k + 1), (w, 2 * k)] {
            loop {
                let bs = self.inblossom[s];
                if bs >= self.nv {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p as isize;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs] as usize];
                let bt = self.inblossom[t];
                s = self.endpoint[self.labelend[bt] as usize];
                let j = self.endpoint[(self.labelend[bt] ^ 1) as usize];
                if bt >= self.nv {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = (self.labelend[bt] ^ 1) as usize;
            }
        }
    }

    fn solve(&mut self, max_cardinality: bool) {
        let n = self.nv;
        for _ in 0..n {
            self.label.fill(0);
            self.bestedge.fill(NONE);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.fill(false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == 0 {
                    self.assign_label(v, 1, NONE);
                }
            }
            let mut augmented = false;
            loop {
                while !augmented {
                    let Some(v) = self.queue.pop() else { break };
                    for idx in 0..self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = 0;
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= 0 {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == 0 {
                                self.assign_label(w, 2, (p ^ 1) as isize);
                            } else if self.label[self.inblossom[w]] == 1 {
                                let base = self.scan_blossom(v, w);
                                if base >= 0 {
                                    self.add_blossom(base as usize, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == 0 {
                                self.label[w] = 2;
                                self.labelend[w] = (p ^ 1) as isize;
                            }
                        } else if self.label[self.inblossom[w]] == 1 {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b] as usize) {
                                self.bestedge[b] = k as isize;
                            }
                        } else if self.label[w] == 0
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w] as usize))
                        {
                            self.bestedge[w] = k as isize;
                        }
                    }
                }
                if augmented {
                    break;
                }
                // dual update
                let mut deltatype = 0u8;
                let mut delta = 0i64;
                let mut deltaedge = 0usize;
                let mut deltablossom = 0usize;
                if !max_cardinality {
                    deltatype = 1;
                    delta = *self.dualvar[..n].iter().min().unwrap();
                }
                for v in 0..n {
                    if self.label[self.inblossom[v]] == 0 && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v] as usize);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v] as usize;
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.blossomparent[b] == NONE && self.label[b] == 1 && self.bestedge[b] != NONE {
                        let kslack = self.slack(self.bestedge[b] as usize);
                        debug_assert!(kslack % 2 == 0);
                        let d = kslack / 2;
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b] as usize;
                        }
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] >= 0
                        && self.blossomparent[b] == NONE
                        && self.label[b] == 2
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    deltatype = 1;
                    delta = (*self.dualvar[..n].iter().min().unwrap()).max(0);
                }
                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        1 => self.dualvar[v] -= delta,
                        2 => self.dualvar[v] += delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] >= 0 && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            1 => self.dualvar[b] += delta,
                            2 => self.dualvar[b] -= delta,
                            _ => {}
                        }
                    }
                }
                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == 0 {
                            i = j;
                        }
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        self.queue.push(i);
                    }
                    _ => self.expand_blossom(deltablossom, false),
                }
            }
            if !augmented {
                break;
            }
            for b in n..2 * n {
                if self.blossomparent[b] == NONE
                    && self.blossombase[b] >= 0
                    && self.label[b] == 1
                    && self.dualvar[b] == 0
                {
                    self.expand_blossom(b, true);
                }
            }
        }
    }
}

/// Result of [`min_cost_pairs`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairSelection {
    /// Selected pairs `(i, j)` with `i < j`, sorted.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    /// Requested pairs that could not be formed.
    pub shortfall: usize,
}

/// Resolution of the integer weights handed to the blossom solver.
const WEIGHT_STEPS: f64 = (1u64 << 40) as f64;

/// Selects exactly `q` disjoint pairs of minimum total cost among the
/// eligible pairs `costs` over vertices `0..n`. When no such matching exists
/// the largest feasible number of pairs is selected and the rest reported as
/// shortfall.
pub fn min_cost_pairs(n: usize, costs: &HashMap<(usize, usize), f64>, q: usize) -> PairSelection {
    let q = q.min(n / 2);
    let mut eligible: Vec<((usize, usize), f64)> = costs
        .iter()
        .filter(|(&(i, j), c)| i != j && i < n && j < n && c.is_finite())
        .map(|(&(i, j), &c)| ((i.min(j), i.max(j)), c))
        .collect();
    eligible.sort_by_key(|e| e.0);
    eligible.dedup_by(|a, b| a.0 == b.0);
    if q == 0 || eligible.is_empty() {
        return PairSelection {
            pairs: Vec::new(),
            total_cost: 0.0,
            shortfall: q,
        };
    }
    let lo = eligible.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let hi = eligible.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { WEIGHT_STEPS / (hi - lo) } else { 1.0 };
    // every weight lies in [big - 2^40, big]; dummy edges weigh `big`
    let big = 2 * WEIGHT_STEPS as i64;
    let weight = |c: f64| big - ((c - lo) * scale).round() as i64;

    for target in (1..=q).rev() {
        let dummies = n - 2 * target;
        let mut edges: Vec<(usize, usize, i64)> = eligible.iter().map(|&((i, j), c)| (i, j, weight(c))).collect();
        for d in 0..dummies {
            for v in 0..n {
                edges.push((v, n + d, big));
            }
        }
        let mate = max_weight_matching(n + dummies, &edges, true);
        if mate.iter().any(Option::is_none) {
            continue;
        }
        let mut pairs: Vec<(usize, usize)> = (0..n)
            .filter_map(|v| match mate[v] {
                Some(u) if u < n && v < u => Some((v, u)),
                _ => None,
            })
            .collect();
        pairs.sort_unstable();
        let total_cost = pairs.iter().map(|p| costs.get(p).or_else(|| costs.get(&(p.1, p.0))).unwrap()).sum();
        return PairSelection {
            pairs,
            total_cost,
            shortfall: q - target,
        };
    }
    PairSelection {
        pairs: Vec::new(),
        total_cost: 0.0,
        shortfall: q,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn weight_of(edges: &[(usize, usize, i64)], mate: &[Option<usize>]) -> i64 {
        edges
            .iter()
            .filter(|&&(i, j, _)| mate[i] == Some(j))
            .map(|e| e.2)
            .sum()
    }

    /// Every matching of the graph, as edge subsets.
    fn all_matchings(n: usize, edges: &[(usize, usize, i64)]) -> Vec<Vec<usize>> {
        fn rec(k: usize, used: u32, cur: &mut Vec<usize>, edges: &[(usize, usize, i64)], out: &mut Vec<Vec<usize>>) {
            if k == edges.len() {
                out.push(cur.clone());
                return;
            }
            rec(k + 1, used, cur, edges, out);
            let (i, j, _) = edges[k];
            if used & (1 << i) == 0 && used & (1 << j) == 0 {
                cur.push(k);
                rec(k + 1, used | (1 << i) | (1 << j), cur, edges, out);
                cur.pop();
            }
        }
        let _ = n;
        let mut out = Vec::new();
        rec(0, 0, &mut Vec::new(), edges, &mut out);
        out
    }

    #[test]
    fn small_known_graphs() {
        assert_eq!(max_weight_matching(2, &[(0, 1, 1)], false), vec![Some(1), Some(0)]);
        // path a-b-c-d with heavy middle
        let m = max_weight_matching(4, &[(0, 1, 5), (1, 2, 11), (2, 3, 5)], false);
        assert_eq!(m, vec![None, Some(2), Some(1), None]);
        let m = max_weight_matching(4, &[(0, 1, 5), (1, 2, 11), (2, 3, 5)], true);
        assert_eq!(m, vec![Some(1), Some(0), Some(3), Some(2)]);
        // blossom: odd cycle with a pendant edge
        let m = max_weight_matching(4, &[(0, 1, 8), (0, 2, 9), (1, 2, 10), (2, 3, 7)], false);
        assert_eq!(m, vec![Some(1), Some(0), Some(3), Some(2)]);
    }

    #[test]
    fn nested_blossoms_and_expansion() {
        // graphs exercising blossom creation, relabeling and expansion
        type Case = (usize, Vec<(usize, usize, i64)>, Vec<Option<usize>>);
        let cases: Vec<Case> = vec![
            (
                6,
                vec![(0, 1, 9), (0, 2, 9), (1, 2, 10), (1, 3, 8), (2, 4, 8), (3, 4, 10), (4, 5, 6)],
                vec![Some(2), Some(3), Some(0), Some(1), Some(5), Some(4)],
            ),
            (
                8,
                vec![
                    (0, 1, 23),
                    (0, 4, 22),
                    (0, 5, 15),
                    (1, 2, 25),
                    (2, 3, 22),
                    (3, 4, 25),
                    (3, 7, 14),
                    (4, 6, 13),
                ],
                vec![Some(5), Some(2), Some(1), Some(7), Some(6), Some(0), Some(4), Some(3)],
            ),
        ];
        for (n, edges, expected) in cases {
            let got = max_weight_matching(n, &edges, false);
            assert_eq!(weight_of(&edges, &got), weight_of(&edges, &expected));
        }
    }

    #[test]
    fn random_graphs_match_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1500 {
            let n = rng.random_range(2..=9);
            let mut edges = Vec::new();
            let density = rng.random_range(0.2..1.0);
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(density) {
                        edges.push((i, j, rng.random_range(-5..30)));
                    }
                }
            }
            for maxcard in [false, true] {
                let mate = max_weight_matching(n, &edges, maxcard);
                for v in 0..n {
                    if let Some(u) = mate[v] {
                        assert_eq!(mate[u], Some(v));
                        assert!(edges.iter().any(|&(i, j, _)| (i, j) == (v.min(u), v.max(u))));
                    }
                }
                let got_size = mate.iter().flatten().count() / 2;
                let got = weight_of(&edges, &mate);
                let best = all_matchings(n, &edges)
                    .into_iter()
                    .map(|m| (m.len(), m.iter().map(|&k| edges[k].2).sum::<i64>()))
                    .max_by_key(|&(len, w)| if maxcard { (len as i64, w) } else { (0, w) })
                    .unwrap();
                if maxcard {
                    assert_eq!((got_size, got), best, "{edges:?}");
                } else {
                    assert_eq!(got, best.1, "{edges:?}");
                }
            }
        }
    }

    #[test]
    fn triangle_prefers_cheap_edges() {
        let costs = HashMap::from([((0, 1), 1.0), ((1, 2), 1.0), ((0, 2), 10.0)]);
        let sel = min_cost_pairs(3, &costs, 1);
        assert_eq!(sel.total_cost, 1.0);
        assert_ne!(sel.pairs, vec![(0, 2)]);
    }

    #[test]
    fn single_eligible_pair() {
        let costs = HashMap::from([((1, 0), 0.5)]);
        let sel = min_cost_pairs(2, &costs, 1);
        assert_eq!(sel.pairs, vec![(0, 1)]);
        assert_eq!(sel.shortfall, 0);
    }

    #[test]
    fn shortfall_when_graph_is_too_sparse() {
        // star: at most one disjoint pair
        let costs = HashMap::from([((0, 1), 1.0), ((0, 2), 2.0), ((0, 3), 3.0)]);
        let sel = min_cost_pairs(4, &costs, 2);
        assert_eq!(sel.pairs, vec![(0, 1)]);
        assert_eq!(sel.shortfall, 1);
        let none = min_cost_pairs(4, &HashMap::new(), 2);
        assert_eq!(none.shortfall, 2);
    }

    #[test]
    fn exactly_q_pairs_even_when_more_are_cheaper() {
        // negative costs would favour two pairs; q = 1 must still give one
        let costs = HashMap::from([((0, 1), -1.0), ((2, 3), -2.0), ((0, 2), 5.0)]);
        let sel = min_cost_pairs(4, &costs, 1);
        assert_eq!(sel.pairs, vec![(2, 3)]);
    }
}
