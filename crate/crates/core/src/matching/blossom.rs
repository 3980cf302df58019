//! Weighted matching in general graphs by Edmonds' blossom algorithm.
//!
//! This is the primal-dual formulation with the O(n^3) bookkeeping of
//! Galil's survey, following the structure of Joris van Rantwijk's
//! reference implementation. Vertex duals are stored doubled so that integer
//! weights never leave the integers.
//!
//! Only [`min_weight_perfect_matching`] is exported from the crate; the
//! maximum-weight solver is kept public within the module for tests.

use crate::scalar::Weight;

const NONE: usize = usize::MAX;

const FREE: u8 = 0;
const S_LABEL: u8 = 1;
const T_LABEL: u8 = 2;
const BREADCRUMB: u8 = 4;

struct Solver<W: Weight> {
    nvertex: usize,
    edges: Vec<(usize, usize, W)>,
    max_cardinality: bool,
    endpoint: Vec<usize>,
    neighbend: Vec<Vec<usize>>,
    mate: Vec<usize>,
    label: Vec<u8>,
    labelend: Vec<usize>,
    inblossom: Vec<usize>,
    blossomparent: Vec<usize>,
    blossomchilds: Vec<Vec<usize>>,
    blossombase: Vec<usize>,
    blossomendps: Vec<Vec<usize>>,
    bestedge: Vec<usize>,
    blossombestedges: Vec<Option<Vec<usize>>>,
    unusedblossoms: Vec<usize>,
    dualvar: Vec<W>,
    allowedge: Vec<bool>,
    queue: Vec<usize>,
}

impl<W: Weight> Solver<W> {
    fn new(nvertex: usize, edges: Vec<(usize, usize, W)>, max_cardinality: bool) -> Self {
        let nedge = edges.len();
        let maxweight = edges.iter().fold(W::zero(), |m, e| m.max_of(e.2));
        let mut endpoint = Vec::with_capacity(2 * nedge);
        let mut neighbend = vec![Vec::new(); nvertex];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            assert!(i != j && i < nvertex && j < nvertex, "invalid matching edge ({i}, {j})");
            endpoint.push(i);
            endpoint.push(j);
            neighbend[i].push(2 * k + 1);
            neighbend[j].push(2 * k);
        }
        let mut blossombase: Vec<usize> = (0..nvertex).collect();
        blossombase.extend(std::iter::repeat_n(NONE, nvertex));
        let mut dualvar = vec![maxweight; nvertex];
        dualvar.extend(std::iter::repeat_n(W::zero(), nvertex));
        Solver {
            nvertex,
            edges,
            max_cardinality,
            endpoint,
            neighbend,
            mate: vec![NONE; nvertex],
            label: vec![FREE; 2 * nvertex],
            labelend: vec![NONE; 2 * nvertex],
            inblossom: (0..nvertex).collect(),
            blossomparent: vec![NONE; 2 * nvertex],
            blossomchilds: vec![Vec::new(); 2 * nvertex],
            blossombase,
            blossomendps: vec![Vec::new(); 2 * nvertex],
            bestedge: vec![NONE; 2 * nvertex],
            blossombestedges: vec![None; 2 * nvertex],
            unusedblossoms: (nvertex..2 * nvertex).rev().collect(),
            dualvar,
            allowedge: vec![false; nedge],
            queue: Vec::new(),
        }
    }

    /// Twice the slack of edge `k`; only valid between top-level blossoms.
    fn slack(&self, k: usize) -> W {
        let (i, j, wt) = self.edges[k];
        self.dualvar[i] + self.dualvar[j] - W::two() * wt
    }

    fn leaves_into(&self, b: usize, out: &mut Vec<usize>) {
        if b < self.nvertex {
            out.push(b);
            return;
        }
        let mut stack = vec![b];
        while let Some(t) = stack.pop() {
            if t < self.nvertex {
                out.push(t);
            } else {
                // reverse so leaves come out in child order
                stack.extend(self.blossomchilds[t].iter().rev().copied());
            }
        }
    }

    fn leaves(&self, b: usize) -> Vec<usize> {
        let mut v = Vec::new();
        self.leaves_into(b, &mut v);
        v
    }

    fn assign_label(&mut self, w: usize, t: u8, p: usize) {
        let mut w = w;
        let mut t = t;
        let mut p = p;
        loop {
            let b = self.inblossom[w];
            debug_assert!(self.label[w] == FREE && self.label[b] == FREE);
            self.label[w] = t;
            self.label[b] = t;
            self.labelend[w] = p;
            self.labelend[b] = p;
            self.bestedge[w] = NONE;
            self.bestedge[b] = NONE;
            if t == S_LABEL {
                let mut leaves = Vec::new();
                self.leaves_into(b, &mut leaves);
                self.queue.extend(leaves);
                return;
            }
            // T-blossom: its base has an external mate, which becomes S.
            let base = self.blossombase[b];
            let mbase = self.mate[base];
            debug_assert!(mbase != NONE);
            w = self.endpoint[mbase];
            t = S_LABEL;
            p = mbase ^ 1;
        }
    }

    /// Trace back from `v` and `w` to find a new blossom base, or `NONE`
    /// if the two paths end at distinct single vertices.
    fn scan_blossom(&mut self, v: usize, w: usize) -> usize {
        let mut path = Vec::new();
        let mut base = NONE;
        let mut v = v;
        let mut w = w;
        while v != NONE || w != NONE {
            let mut b = self.inblossom[v];
            if self.label[b] & BREADCRUMB != 0 {
                base = self.blossombase[b];
                break;
            }
            debug_assert_eq!(self.label[b], S_LABEL);
            path.push(b);
            self.label[b] = S_LABEL | BREADCRUMB;
            debug_assert_eq!(self.labelend[b], self.mate[self.blossombase[b]]);
            if self.labelend[b] == NONE {
                v = NONE;
            } else {
                v = self.endpoint[self.labelend[b]];
                b = self.inblossom[v];
                debug_assert_eq!(self.label[b], T_LABEL);
                v = self.endpoint[self.labelend[b]];
            }
            if w != NONE {
                std::mem::swap(&mut v, &mut w);
            }
        }
        for b in path {
            self.label[b] = S_LABEL;
        }
        base
    }

    fn add_blossom(&mut self, base: usize, k: usize) {
        let (mut v, mut w, _) = self.edges[k];
        let bb = self.inblossom[base];
        let mut bv = self.inblossom[v];
        let mut bw = self.inblossom[w];
        let b = self.unusedblossoms.pop().expect("blossom pool exhausted");
        self.blossombase[b] = base;
        self.blossomparent[b] = NONE;
        self.blossomparent[bb] = b;
        let mut childs = Vec::new();
        let mut endps = Vec::new();
        while bv != bb {
            self.blossomparent[bv] = b;
            childs.push(bv);
            endps.push(self.labelend[bv]);
            v = self.endpoint[self.labelend[bv]];
            bv = self.inblossom[v];
        }
        childs.push(bb);
        childs.reverse();
        endps.reverse();
        endps.push(2 * k);
        while bw != bb {
            self.blossomparent[bw] = b;
            childs.push(bw);
            endps.push(self.labelend[bw] ^ 1);
            w = self.endpoint[self.labelend[bw]];
            bw = self.inblossom[w];
        }
        debug_assert_eq!(self.label[bb], S_LABEL);
        self.label[b] = S_LABEL;
        self.labelend[b] = self.labelend[bb];
        self.dualvar[b] = W::zero();
        self.blossomchilds[b] = childs;
        self.blossomendps[b] = endps;

        for v in self.leaves(b) {
            if self.label[self.inblossom[v]] == T_LABEL {
                // T-vertices become S-vertices inside the new S-blossom.
                self.queue.push(v);
            }
            self.inblossom[v] = b;
        }

        // Least-slack edges from the new blossom to neighbouring S-blossoms.
        let mut bestedgeto = vec![NONE; 2 * self.nvertex];
        for &bv in &self.blossomchilds[b].clone() {
            let candidates: Vec<usize> = match self.blossombestedges[bv].take() {
                Some(list) => list,
                None => self.leaves(bv).iter().flat_map(|&v| self.neighbend[v].iter().map(|p| p / 2)).collect(),
            };
            for k in candidates {
                let (mut i, mut j, _) = self.edges[k];
                if self.inblossom[j] == b {
                    std::mem::swap(&mut i, &mut j);
                }
                let _ = i;
                let bj = self.inblossom[j];
                if bj != b
                    && self.label[bj] == S_LABEL
                    && (bestedgeto[bj] == NONE || self.slack(k) < self.slack(bestedgeto[bj]))
                {
                    bestedgeto[bj] = k;
                }
            }
            self.bestedge[bv] = NONE;
        }
        let list: Vec<usize> = bestedgeto.into_iter().filter(|&k| k != NONE).collect();
        let mut best = NONE;
        for &k in &list {
            if best == NONE || self.slack(k) < self.slack(best) {
                best = k;
            }
        }
        self.blossombestedges[b] = Some(list);
        self.bestedge[b] = best;
    }

    fn expand_blossom(&mut self, b: usize, endstage: bool) {
        for s in self.blossomchilds[b].clone() {
            self.blossomparent[s] = NONE;
            if s < self.nvertex {
                self.inblossom[s] = s;
            } else if endstage && self.dualvar[s] == W::zero() {
                self.expand_blossom(s, endstage);
            } else {
                for v in self.leaves(s) {
                    self.inblossom[v] = s;
                }
            }
        }

        if !endstage && self.label[b] == T_LABEL {
            // Relabel the sub-blossoms along the even-length path from the
            // entry child to the base.
            let entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]];
            let nchild = self.blossomchilds[b].len() as isize;
            let childs = self.blossomchilds[b].clone();
            let endps = self.blossomendps[b].clone();
            let at = |v: &Vec<usize>, j: isize| -> usize { v[j.rem_euclid(nchild) as usize] };
            let mut j = childs.iter().position(|&c| c == entrychild).unwrap() as isize;
            let (jstep, endptrick): (isize, usize) = if j & 1 != 0 {
                j -= nchild;
                (1, 0)
            } else {
                (-1, 1)
            };
            let mut p = self.labelend[b];
            while j != 0 {
                self.label[self.endpoint[p ^ 1]] = FREE;
                let q = at(&endps, j - endptrick as isize) ^ endptrick ^ 1;
                self.label[self.endpoint[q]] = FREE;
                self.assign_label(self.endpoint[p ^ 1], T_LABEL, p);
                self.allowedge[at(&endps, j - endptrick as isize) / 2] = true;
                j += jstep;
                p = at(&endps, j - endptrick as isize) ^ endptrick;
                self.allowedge[p / 2] = true;
                j += jstep;
            }
            let bv = at(&childs, j);
            let ep = self.endpoint[p ^ 1];
            self.label[ep] = T_LABEL;
            self.label[bv] = T_LABEL;
            self.labelend[ep] = p;
            self.labelend[bv] = p;
            self.bestedge[bv] = NONE;
            j += jstep;
            while at(&childs, j) != entrychild {
                let bv = at(&childs, j);
                if self.label[bv] == S_LABEL {
                    j += jstep;
                    continue;
                }
                let leaves = self.leaves(bv);
                let v = leaves.iter().copied().find(|&v| self.label[v] != FREE).unwrap_or(*leaves.last().unwrap());
                if self.label[v] != FREE {
                    debug_assert_eq!(self.label[v], T_LABEL);
                    debug_assert_eq!(self.inblossom[v], bv);
                    self.label[v] = FREE;
                    let m = self.endpoint[self.mate[self.blossombase[bv]]];
                    self.label[m] = FREE;
                    let le = self.labelend[v];
                    self.assign_label(v, T_LABEL, le);
                }
                j += jstep;
            }
        }

        self.label[b] = FREE;
        self.labelend[b] = NONE;
        self.blossomchilds[b].clear();
        self.blossomendps[b].clear();
        self.blossombase[b] = NONE;
        self.blossombestedges[b] = None;
        self.bestedge[b] = NONE;
        self.unusedblossoms.push(b);
    }

    fn augment_blossom(&mut self, b: usize, v: usize) {
        let mut t = v;
        while self.blossomparent[t] != b {
            t = self.blossomparent[t];
        }
        if t >= self.nvertex {
            self.augment_blossom(t, v);
        }
        let nchild = self.blossomchilds[b].len() as isize;
        let i = self.blossomchilds[b].iter().position(|&c| c == t).unwrap();
        let mut j = i as isize;
        let (jstep, endptrick): (isize, usize) = if i & 1 != 0 {
            j -= nchild;
            (1, 0)
        } else {
            (-1, 1)
        };
        while j != 0 {
            j += jstep;
            let t = self.blossomchilds[b][j.rem_euclid(nchild) as usize];
            let p = self.blossomendps[b][(j - endptrick as isize).rem_euclid(nchild) as usize] ^ endptrick;
            if t >= self.nvertex {
                self.augment_blossom(t, self.endpoint[p]);
            }
            j += jstep;
            let t = self.blossomchilds[b][j.rem_euclid(nchild) as usize];
            if t >= self.nvertex {
                self.augment_blossom(t, self.endpoint[p ^ 1]);
            }
            self.mate[self.endpoint[p]] = p ^ 1;
            self.mate[self.endpoint[p ^ 1]] = p;
        }
        self.blossomchilds[b].rotate_left(i);
        self.blossomendps[b].rotate_left(i);
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]];
        debug_assert_eq!(self.blossombase[b], v);
    }

    fn augment_matching(&mut self, k: usize) {
        let (v, w, _) = self.edges[k];
        for (s0, p0) in [(v, 2 * k + 1), (w, 2 * k)] {
            let mut s = s0;
            let mut p = p0;
            loop {
                let bs = self.inblossom[s];
                debug_assert_eq!(self.label[bs], S_LABEL);
                if bs >= self.nvertex {
                    self.augment_blossom(bs, s);
                }
                self.mate[s] = p;
                if self.labelend[bs] == NONE {
                    break;
                }
                let t = self.endpoint[self.labelend[bs]];
                let bt = self.inblossom[t];
                debug_assert_eq!(self.label[bt], T_LABEL);
                s = self.endpoint[self.labelend[bt]];
                let j = self.endpoint[self.labelend[bt] ^ 1];
                debug_assert_eq!(self.blossombase[bt], t);
                if bt >= self.nvertex {
                    self.augment_blossom(bt, j);
                }
                self.mate[j] = self.labelend[bt];
                p = self.labelend[bt] ^ 1;
            }
        }
    }

    fn solve(mut self) -> Vec<usize> {
        if self.edges.is_empty() {
            return vec![NONE; self.nvertex];
        }
        let n = self.nvertex;
        for _ in 0..n {
            self.label.iter_mut().for_each(|l| *l = FREE);
            self.bestedge.iter_mut().for_each(|e| *e = NONE);
            for b in n..2 * n {
                self.blossombestedges[b] = None;
            }
            self.allowedge.iter_mut().for_each(|a| *a = false);
            self.queue.clear();
            for v in 0..n {
                if self.mate[v] == NONE && self.label[self.inblossom[v]] == FREE {
                    self.assign_label(v, S_LABEL, NONE);
                }
            }

            let mut augmented = false;
            loop {
                while let Some(v) = self.queue.pop() {
                    debug_assert_eq!(self.label[self.inblossom[v]], S_LABEL);
                    let mut idx = 0;
                    while idx < self.neighbend[v].len() {
                        let p = self.neighbend[v][idx];
                        idx += 1;
                        let k = p / 2;
                        let w = self.endpoint[p];
                        if self.inblossom[v] == self.inblossom[w] {
                            continue;
                        }
                        let mut kslack = W::zero();
                        if !self.allowedge[k] {
                            kslack = self.slack(k);
                            if kslack <= W::zero() {
                                self.allowedge[k] = true;
                            }
                        }
                        if self.allowedge[k] {
                            if self.label[self.inblossom[w]] == FREE {
                                self.assign_label(w, T_LABEL, p ^ 1);
                            } else if self.label[self.inblossom[w]] == S_LABEL {
                                let base = self.scan_blossom(v, w);
                                if base != NONE {
                                    self.add_blossom(base, k);
                                } else {
                                    self.augment_matching(k);
                                    augmented = true;
                                    break;
                                }
                            } else if self.label[w] == FREE {
                                debug_assert_eq!(self.label[self.inblossom[w]], T_LABEL);
                                self.label[w] = T_LABEL;
                                self.labelend[w] = p ^ 1;
                            }
                        } else if self.label[self.inblossom[w]] == S_LABEL {
                            let b = self.inblossom[v];
                            if self.bestedge[b] == NONE || kslack < self.slack(self.bestedge[b]) {
                                self.bestedge[b] = k;
                            }
                        } else if self.label[w] == FREE
                            && (self.bestedge[w] == NONE || kslack < self.slack(self.bestedge[w]))
                        {
                            self.bestedge[w] = k;
                        }
                    }
                    if augmented {
                        break;
                    }
                }
                if augmented {
                    break;
                }

                // No augmenting path under the current duals: find the
                // largest admissible dual step.
                let mut deltatype = 0u8;
                let mut delta = W::zero();
                let mut deltaedge = NONE;
                let mut deltablossom = NONE;
                if !self.max_cardinality {
                    deltatype = 1;
                    delta = self.dualvar[..n].iter().fold(self.dualvar[0], |m, &d| m.min_of(d));
                }
                for v in 0..n {
                    if self.label[self.inblossom[v]] == FREE && self.bestedge[v] != NONE {
                        let d = self.slack(self.bestedge[v]);
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 2;
                            deltaedge = self.bestedge[v];
                        }
                    }
                }
                for b in 0..2 * n {
                    if self.blossomparent[b] == NONE && self.label[b] == S_LABEL && self.bestedge[b] != NONE {
                        let d = self.slack(self.bestedge[b]) / W::two();
                        if deltatype == 0 || d < delta {
                            delta = d;
                            deltatype = 3;
                            deltaedge = self.bestedge[b];
                        }
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE
                        && self.blossomparent[b] == NONE
                        && self.label[b] == T_LABEL
                        && (deltatype == 0 || self.dualvar[b] < delta)
                    {
                        delta = self.dualvar[b];
                        deltatype = 4;
                        deltablossom = b;
                    }
                }
                if deltatype == 0 {
                    debug_assert!(self.max_cardinality);
                    deltatype = 1;
                    let m = self.dualvar[..n].iter().fold(self.dualvar[0], |m, &d| m.min_of(d));
                    delta = W::zero().max_of(m);
                }

                for v in 0..n {
                    match self.label[self.inblossom[v]] {
                        S_LABEL => self.dualvar[v] = self.dualvar[v] - delta,
                        T_LABEL => self.dualvar[v] = self.dualvar[v] + delta,
                        _ => {}
                    }
                }
                for b in n..2 * n {
                    if self.blossombase[b] != NONE && self.blossomparent[b] == NONE {
                        match self.label[b] {
                            S_LABEL => self.dualvar[b] = self.dualvar[b] + delta,
                            T_LABEL => self.dualvar[b] = self.dualvar[b] - delta,
                            _ => {}
                        }
                    }
                }

                match deltatype {
                    1 => break,
                    2 => {
                        self.allowedge[deltaedge] = true;
                        let (mut i, j, _) = self.edges[deltaedge];
                        if self.label[self.inblossom[i]] == FREE {
                            i = j;
                        }
                        debug_assert_eq!(self.label[self.inblossom[i]], S_LABEL);
                        self.queue.push(i);
                    }
                    3 => {
                        self.allowedge[deltaedge] = true;
                        let (i, _, _) = self.edges[deltaedge];
                        debug_assert_eq!(self.label[self.inblossom[i]], S_LABEL);
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
                    && self.blossombase[b] != NONE
                    && self.label[b] == S_LABEL
                    && self.dualvar[b] == W::zero()
                {
                    self.expand_blossom(b, true);
                }
            }
        }

        let mut mate = self.mate.clone();
        for m in mate.iter_mut() {
            if *m != NONE {
                *m = self.endpoint[*m];
            }
        }
        mate
    }
}

/// Maximum-weight matching; with `max_cardinality` only maximum-cardinality
/// matchings are considered. Returns `mate[v]`, `None` for single vertices.
pub fn max_weight_matching<W: Weight>(
    nvertex: usize,
    edges: &[(usize, usize, W)],
    max_cardinality: bool,
) -> Vec<Option<usize>> {
    Solver::new(nvertex, edges.to_vec(), max_cardinality)
        .solve()
        .into_iter()
        .map(|m| (m != NONE).then_some(m))
        .collect()
}

/// Minimum-weight perfect matching on `nvertex` vertices. Returns `None`
/// when the graph has no perfect matching.
pub fn min_weight_perfect_matching<W: Weight>(nvertex: usize, edges: &[(usize, usize, W)]) -> Option<Vec<usize>> {
    if nvertex == 0 {
        return Some(Vec::new());
    }
    if nvertex % 2 == 1 {
        return None;
    }
    let maxw = edges.iter().fold(W::zero(), |m, e| m.max_of(e.2));
    let offset = maxw + W::one();
    let flipped: Vec<(usize, usize, W)> = edges.iter().map(|&(i, j, w)| (i, j, offset - w)).collect();
    let mate = Solver::new(nvertex, flipped, true).solve();
    if mate.iter().any(|&m| m == NONE) {
        return None;
    }
    Some(mate)
}
