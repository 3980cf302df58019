#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use macromux::dicing::{ErrorPattern, Face, HalfEdge, TypeView, ViewEdge};
use macromux::gap::GapValue;
use macromux::lattice::{OutcomeType, CHECK_WEIGHT};
use macromux::matching::DecodingGraph;
use rand::Rng;

pub const INF: i64 = i64::MAX / 4;

/// `cols × rows` grid of unit-weight checks. Boundary nodes in order top,
/// bottom, left, right; `sides` controls whether left/right exist.
pub fn grid(cols: usize, rows: usize, sides: bool) -> DecodingGraph<i64> {
    let n = cols * rows;
    let mut g = DecodingGraph::new(n, if sides { 4 } else { 2 });
    let id = |r: usize, c: usize| r * cols + c;
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                g.add_edge(id(r, c), id(r, c + 1), 1).unwrap();
            }
            if r + 1 < rows {
                g.add_edge(id(r, c), id(r + 1, c), 1).unwrap();
            }
        }
    }
    for c in 0..cols {
        g.add_edge(id(0, c), n, 1).unwrap();
        g.add_edge(id(rows - 1, c), n + 1, 1).unwrap();
    }
    if sides {
        for r in 0..rows {
            g.add_edge(id(r, 0), n + 2, 1).unwrap();
            g.add_edge(id(r, cols - 1), n + 3, 1).unwrap();
        }
    }
    g
}

/// Exhaustive minimum weight of an edge subset whose parity at node `v` is
/// `want[v]` (`None` leaves the node unconstrained). Only edges with
/// `keep[e]` may be used.
pub fn brute_min(g: &DecodingGraph<i64>, keep: &[bool], want: &[Option<bool>]) -> Option<i64> {
    let edges: Vec<usize> = (0..g.num_edges()).filter(|&e| keep[e]).collect();
    let m = edges.len();
    assert!(m <= 26, "brute force over {m} edges");
    let n = g.num_nodes();
    assert!(n <= 64);
    let mask: Vec<u64> = edges.iter().map(|&e| g.edge(e).iter().fold(0u64, |a, &v| a ^ (1 << v))).collect();
    let weight: Vec<i64> = edges.iter().map(|&e| g.effective_weight(e)).collect();
    let care = (0..n).filter(|&v| want[v].is_some()).fold(0u64, |a, v| a | 1 << v);
    let target = (0..n).filter(|&v| want[v] == Some(true)).fold(0u64, |a, v| a | 1 << v);
    let mut best: Option<i64> = None;
    let (mut parity, mut w) = (0u64, 0i64);
    let mut on = vec![false; m];
    for step in 0u64..(1u64 << m) {
        if step > 0 {
            let i = step.trailing_zeros() as usize;
            on[i] = !on[i];
            parity ^= mask[i];
            w += if on[i] { weight[i] } else { -weight[i] };
        }
        if parity & care == target && best.is_none_or(|b| w < b) {
            best = Some(w);
        }
    }
    best
}

/// Shortest distances with only check nodes as intermediates.
pub fn check_metric(g: &DecodingGraph<i64>) -> Vec<Vec<i64>> {
    let n = g.num_nodes();
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for e in 0..g.num_edges() {
        let [u, v] = g.edge(e);
        let w = g.effective_weight(e);
        if w < d[u][v] {
            d[u][v] = w;
            d[v][u] = w;
        }
    }
    for k in 0..n {
        if g.is_boundary(k) {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Exhaustive frozen gap: the freezing weight of every lexicographically
/// optimal (total, freezing) match and the set of gaps those matches lead to.
/// `None` when no match exists.
pub struct FrozenOracle {
    pub freeze_weight: i64,
    pub deltas: HashSet<Result<GapValue<i64>, ()>>,
}

pub fn frozen_oracle(g: &DecodingGraph<i64>, defects: &[usize], gap_nodes: [usize; 2]) -> Option<FrozenOracle> {
    let d = check_metric(g);
    let k = defects.len();
    assert!(k <= 20);
    let freeze_nodes: Vec<usize> = (0..g.num_nodes()).filter(|&v| g.is_boundary(v) && !gap_nodes.contains(&v)).collect();
    let to_gap: Vec<i64> = defects.iter().map(|&x| gap_nodes.iter().map(|&b| d[x][b]).min().unwrap()).collect();
    let to_freeze: Vec<i64> = defects.iter().map(|&x| freeze_nodes.iter().map(|&b| d[x][b]).min().unwrap_or(INF)).collect();

    // best[mask] = lexicographic minimum (total, w) for the defects in mask
    let full = (1usize << k) - 1;
    let mut best: Vec<Option<(i64, i64)>> = vec![None; 1 << k];
    best[0] = Some((0, 0));
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut cand: Option<(i64, i64)> = None;
        let mut offer = |c: Option<(i64, i64)>| {
            if let Some(c) = c {
                if cand.is_none_or(|b| c < b) {
                    cand = Some(c);
                }
            }
        };
        for j in 0..k {
            if rest >> j & 1 == 1 && d[defects[i]][defects[j]] < INF {
                offer(best[rest & !(1 << j)].map(|(t, w)| (t + d[defects[i]][defects[j]], w)));
            }
        }
        if to_gap[i] < INF {
            offer(best[rest].map(|(t, w)| (t + to_gap[i], w)));
        }
        if to_freeze[i] < INF {
            offer(best[rest].map(|(t, w)| (t + to_freeze[i], w + to_freeze[i])));
        }
        best[mask] = cand;
    }
    let (_, freeze_weight) = best[full]?;

    // every set of frozen defects reachable along optimal transitions
    let mut memo: HashMap<usize, HashSet<usize>> = HashMap::new();
    fn removals(
        mask: usize,
        best: &[Option<(i64, i64)>],
        pair: &dyn Fn(usize, usize) -> i64,
        to_gap: &[i64],
        to_freeze: &[i64],
        memo: &mut HashMap<usize, HashSet<usize>>,
    ) -> HashSet<usize> {
        if mask == 0 {
            return HashSet::from([0]);
        }
        if let Some(s) = memo.get(&mask) {
            return s.clone();
        }
        let target = best[mask].unwrap();
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut out = HashSet::new();
        for j in 0..to_gap.len() {
            if rest >> j & 1 == 1 {
                let sub = rest & !(1 << j);
                let p = pair(i, j);
                if p < INF && best[sub].map(|(t, w)| (t + p, w)) == Some(target) {
                    out.extend(removals(sub, best, pair, to_gap, to_freeze, memo));
                }
            }
        }
        if to_gap[i] < INF && best[rest].map(|(t, w)| (t + to_gap[i], w)) == Some(target) {
            out.extend(removals(rest, best, pair, to_gap, to_freeze, memo));
        }
        if to_freeze[i] < INF && best[rest].map(|(t, w)| (t + to_freeze[i], w + to_freeze[i])) == Some(target) {
            out.extend(removals(rest, best, pair, to_gap, to_freeze, memo).into_iter().map(|r| r | 1 << i));
        }
        memo.insert(mask, out.clone());
        out
    }
    let pair = |i: usize, j: usize| d[defects[i]][defects[j]];
    let sets = removals(full, &best, &pair, &to_gap, &to_freeze, &mut memo);

    let keep: Vec<bool> = (0..g.num_edges()).map(|e| g.edge(e).iter().all(|v| !freeze_nodes.contains(v))).collect();
    let mut deltas = HashSet::new();
    for removed in sets {
        let mut want: Vec<Option<bool>> = (0..g.num_nodes()).map(|v| (!g.is_boundary(v)).then_some(false)).collect();
        for (i, &x) in defects.iter().enumerate() {
            if removed >> i & 1 == 0 {
                want[x] = Some(true);
            }
        }
        let mut sector = [None, None];
        for (s, slot) in sector.iter_mut().enumerate() {
            want[gap_nodes[0]] = Some(s == 1);
            *slot = brute_min(g, &keep, &want);
        }
        deltas.insert(match sector {
            [Some(a), Some(b)] => Ok(GapValue::Finite((a - b).abs())),
            [None, None] => Err(()),
            _ => Ok(GapValue::Infinite),
        });
    }
    Some(FrozenOracle { freeze_weight, deltas })
}

/// Random small connected-ish graph on `checks` checks and the given
/// boundary count, at most `max_edges` edges, weights in 1..=3.
pub fn random_graph<R: Rng>(rng: &mut R, checks: usize, boundaries: usize, max_edges: usize, p_erase: f64) -> DecodingGraph<i64> {
    let n = checks + boundaries;
    let mut g = DecodingGraph::new(checks, boundaries);
    let m = rng.random_range(checks.max(1)..=max_edges);
    for _ in 0..m {
        let u = rng.random_range(0..checks);
        let mut v = rng.random_range(0..n - 1);
        if v >= u {
            v += 1;
        }
        let e = g.add_edge(u, v, rng.random_range(1..=3)).unwrap();
        g.set_erased(e, rng.random_bool(p_erase));
    }
    g
}

/// Random check subset.
pub fn random_defects<R: Rng>(rng: &mut R, checks: usize, p: f64) -> Vec<usize> {
    (0..checks).filter(|_| rng.random_bool(p)).collect()
}

/// Hand-built view on outcomes `base..`: random checks, edges, half-edges
/// and untracked outcomes. Check outcome lists are padded with outcomes
/// from `pad..` that never carry errors. Returns the view and the next
/// free outcome index.
pub fn random_view<R: Rng>(rng: &mut R, kind: OutcomeType, base: usize, pad: usize, max_edges: usize) -> (TypeView, usize) {
    let n = rng.random_range(0..=4);
    let mut next = base;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    let mut half_edges = Vec::new();
    let total = if n == 0 { 0 } else { rng.random_range(0..=max_edges) };
    for _ in 0..total {
        let u = rng.random_range(0..n);
        if incident[u].len() >= CHECK_WEIGHT {
            continue;
        }
        if n > 1 && rng.random_bool(0.5) {
            let mut v = rng.random_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            if incident[v].len() >= CHECK_WEIGHT {
                continue;
            }
            edges.push(ViewEdge { outcome: next, nodes: [u, v] });
            incident[u].push(next);
            incident[v].push(next);
        } else {
            half_edges.push(HalfEdge { outcome: next, node: u, face: Face::from_index(rng.random_range(0..6)) });
            incident[u].push(next);
        }
        next += 1;
    }
    let untracked: Vec<usize> = (0..rng.random_range(0..3)).map(|i| next + i).collect();
    next += untracked.len();
    let check_outcomes = incident
        .iter()
        .enumerate()
        .map(|(c, outs)| {
            let mut a = [0; CHECK_WEIGHT];
            for (i, slot) in a.iter_mut().enumerate() {
                *slot = outs.get(i).copied().unwrap_or(pad + c * CHECK_WEIGHT + i);
            }
            a
        })
        .collect();
    let outcomes = (base..next).collect();
    let view = TypeView {
        kind,
        complete_checks: (0..n).collect(),
        check_outcomes,
        edges,
        half_edges,
        untracked,
        outcomes,
    };
    (view, next)
}

/// Random errors on `0..live` inside a pattern of length `len`.
pub fn random_errors<R: Rng>(rng: &mut R, len: usize, live: usize, p_erase: f64, p_flip: f64) -> ErrorPattern {
    let mut p = ErrorPattern::clean(len);
    for o in 0..live {
        if rng.random_bool(p_erase) {
            p.erased[o] = true;
        } else if rng.random_bool(p_flip) {
            p.flipped[o] = true;
        }
    }
    p
}

/// Count tallies by flood fill: erased internal outcomes, and connected
/// clusters over erased edges that have odd syndrome and no erased half-edge.
pub fn naive_tallies(view: &TypeView, errors: &ErrorPattern) -> (usize, usize) {
    let erased = view.outcomes.iter().filter(|&&o| errors.erased[o]).count();
    let n = view.num_checks();
    let lit: Vec<bool> = view.check_outcomes.iter().map(|outs| outs.iter().filter(|&&o| errors.flipped[o]).count() % 2 == 1).collect();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut members = Vec::new();
        while let Some(u) = queue.pop_front() {
            members.push(u);
            for e in &view.edges {
                if errors.erased[e.outcome] && e.nodes.contains(&u) {
                    let v = if e.nodes[0] == u { e.nodes[1] } else { e.nodes[0] };
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        let open = view.half_edges.iter().any(|h| errors.erased[h.outcome] && members.contains(&h.node));
        let odd = members.iter().filter(|&&m| lit[m]).count() % 2 == 1;
        if odd && !open {
            count += 1;
        }
    }
    (erased, count)
}

/// Distance in units of the spacing of `f64` values near `b`.
pub fn ulps(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let spacing = f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    (a - b).abs() / spacing
}

/// Real brick views whose syndrome sub-graph has at most `max_edges` edges.
pub fn small_brick_views(max_edges: usize) -> Vec<(TypeView, usize)> {
    use macromux::dicing::{brick_view, build_cuboidal_dicing};
    use macromux::lattice::FusionNetwork;
    let net = FusionNetwork::new(8).unwrap();
    let mut out = Vec::new();
    for dims in [[2, 2, 2], [4, 2, 2], [2, 4, 2], [2, 2, 4], [4, 4, 2], [2, 2, 1], [4, 2, 1], [4, 4, 1]] {
        for offset in [0, 1] {
            let scheme = build_cuboidal_dicing(&net, dims, offset).unwrap();
            for brick in scheme.max_bricks().iter().take(4) {
                let view = brick_view(&scheme, brick);
                for kind in OutcomeType::ALL {
                    let v = view.of(kind);
                    if v.edges.len() + v.half_edges.len() <= max_edges && v.num_checks() > 0 {
                        out.push((v.clone(), brick.num_outcomes()));
                    }
                }
            }
        }
    }
    out
}

/// Compare the frozen-gap solver against [`frozen_oracle`] on one instance.
pub fn compare_frozen(g: &DecodingGraph<i64>, defects: &[usize], gap_nodes: [usize; 2], phi: f64) -> Result<(), String> {
    use macromux::gap::{apply_freeze_penalty, frozen_gap_on_graph};
    let got = frozen_gap_on_graph::<i64, f64>(g, defects, gap_nodes, phi);
    match (frozen_oracle(g, defects, gap_nodes), got) {
        (None, Err(_)) => Ok(()),
        (None, Ok(r)) => Err(format!("oracle has no freezing match, solver gave {r:?}")),
        (Some(_), Err(e)) => Err(format!("solver failed ({e}) where the oracle has a match")),
        (Some(o), Ok(r)) => {
            if r.freeze_weight != o.freeze_weight {
                return Err(format!("freezing weight {} vs oracle {}", r.freeze_weight, o.freeze_weight));
            }
            if !o.deltas.contains(&Ok(r.delta)) {
                return Err(format!("gap {:?} not among oracle gaps {:?}", r.delta, o.deltas));
            }
            if r.frozen_delta != apply_freeze_penalty(r.delta, r.freeze_weight, phi) {
                return Err(format!("frozen gap {:?} inconsistent with ({:?}, {})", r.frozen_delta, r.delta, r.freeze_weight));
            }
            Ok(())
        }
    }
}

/// Frozen-gap solver against exhaustive search on `count` random
/// configurations, alternating synthetic brick-shaped graphs and random
/// errors on real brick views.
pub fn frozen_gap_oracle_suite(count: usize, seed: u64) -> Result<String, String> {
    use macromux::gap::{view_graph, GapBoundarySpec};
    use macromux::lattice::Axis;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let views = small_brick_views(24);
    if views.is_empty() {
        return Err("no brick view small enough".into());
    }
    let mut max_edges = 0;
    for i in 0..count {
        let phi = [0.0, 0.5, 1.0][i % 3];
        if i % 2 == 0 {
            let checks = rng.random_range(1..=10);
            let g = random_graph(&mut rng, checks, 6, 24, 0.15);
            let defects = random_defects(&mut rng, checks, 0.4);
            let a = rng.random_range(0..3);
            max_edges = max_edges.max(g.num_edges());
            compare_frozen(&g, &defects, [checks + 2 * a, checks + 2 * a + 1], phi).map_err(|e| format!("config {i}: {e}"))?;
        } else {
            let (view, len) = &views[rng.random_range(0..views.len())];
            let (pe, pf) = (rng.random_range(0.0..0.3), rng.random_range(0.0..0.3));
            let errors = random_errors(&mut rng, *len, *len, pe, pf);
            let spec = GapBoundarySpec::new(Axis::from_index(rng.random_range(0..3)));
            let g = view_graph::<i64>(view, &errors);
            let n = view.num_checks();
            let syndrome = view.syndrome(&errors.flipped);
            let defects: Vec<usize> = (0..n).filter(|&c| syndrome[c]).collect();
            max_edges = max_edges.max(g.num_edges());
            let gap_nodes = [n + spec.gap_faces[0].index(), n + spec.gap_faces[1].index()];
            compare_frozen(&g, &defects, gap_nodes, phi).map_err(|e| format!("config {i}: {e}"))?;
        }
    }
    Ok(format!("{count} configurations, up to {max_edges} edges"))
}

/// Sector gaps against per-membrane logical gaps over every syndrome of
/// `graphs` random toy codes with at most `max_edges` outcomes.
pub fn sector_gap_suite(graphs: usize, max_edges: usize, seed: u64) -> Result<String, String> {
    use macromux::gap::{logical_gap, sector_gap, sector_weights, AugmentedTannerGraph};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut syndromes = 0;
    for i in 0..graphs {
        let checks = rng.random_range(1..=6);
        let g = random_graph(&mut rng, checks, 3, max_edges, 0.1);
        for k in 1..=2 {
            let sector_nodes: Vec<usize> = (0..k).map(|b| checks + b).collect();
            let atg = AugmentedTannerGraph::from_graph(&g, &sector_nodes);
            for s in 0u32..1 << checks {
                let syndrome: Vec<bool> = (0..checks).map(|c| s >> c & 1 == 1).collect();
                let defects: Vec<usize> = (0..checks).filter(|&c| syndrome[c]).collect();
                let sw = sector_weights(&atg, &syndrome).map_err(|e| e.to_string())?;
                syndromes += 1;
                for (j, &b) in sector_nodes.iter().enumerate() {
                    match logical_gap(&g, &defects, b) {
                        Ok(d) if sector_gap(&sw, j) == d => {}
                        Ok(d) => return Err(format!("graph {i}, k={k}, syndrome {s:b}: sector gap {:?} vs logical gap {d:?}", sector_gap(&sw, j))),
                        Err(_) if sw.weights.iter().all(Option::is_none) => {}
                        Err(e) => return Err(format!("graph {i}: logical gap failed ({e}) with feasible sectors")),
                    }
                }
            }
        }
    }
    Ok(format!("{graphs} toy codes, {syndromes} (code, k, syndrome) cases"))
}

/// Decoding graph of a view built directly from its edge lists.
fn oracle_view_graph(view: &TypeView, errors: &ErrorPattern) -> DecodingGraph<i64> {
    let n = view.num_checks();
    let mut g = DecodingGraph::new(n, 6);
    for e in &view.edges {
        let id = g.add_edge(e.nodes[0], e.nodes[1], 1).unwrap();
        g.set_erased(id, errors.erased[e.outcome]);
    }
    for h in &view.half_edges {
        let id = g.add_edge(h.node, n + h.face.index(), 1).unwrap();
        g.set_erased(id, errors.erased[h.outcome]);
    }
    g
}

/// Count and gap scores against direct evaluation on `count` random
/// hand-built views. Returns the largest deviation in ulps.
pub fn scorer_exactness_suite(count: usize, seed: u64) -> Result<String, String> {
    use macromux::dicing::BrickView;
    use macromux::gap::GapBoundarySpec;
    use macromux::lattice::Axis;
    use macromux::scoring::{count_score, frozen_gaps, gap_score, CountParams, GapParams};
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut capped, mut ambiguous) = (0.0f64, 0, 0);
    for i in 0..count {
        let (primal, next) = random_view(&mut rng, OutcomeType::Primal, 0, 10_000, 14);
        let (dual, live) = random_view(&mut rng, OutcomeType::Dual, next, 20_000, 14);
        let view = BrickView { primal, dual };
        let (pe, pf) = (rng.random_range(0.0..0.4), rng.random_range(0.0..0.4));
        let errors = random_errors(&mut rng, 30_000, live, pe, pf);

        let big = i % 5 == 0;
        let alpha = if big { rng.random_range(100.0..400.0) } else { rng.random_range(0.0..4.0) };
        let beta = if big { rng.random_range(100.0..400.0) } else { rng.random_range(0.0..4.0) };
        let params = CountParams::new(alpha, beta);
        let got = count_score(&view, &errors, &params);
        let x: Vec<f64> = OutcomeType::ALL
            .iter()
            .map(|&k| {
                let (e, c) = naive_tallies(view.of(k), &errors);
                alpha * e as f64 + beta * c as f64
            })
            .collect();
        let (hi, lo) = (x[0].max(x[1]), x[0].min(x[1]));
        if hi <= params.exp_cap {
            let value = -(x[0].exp() + x[1].exp());
            let d = ulps(got.value, value).max(ulps(got.key, -(-value).ln()));
            worst = worst.max(d);
            if d > 4.0 {
                return Err(format!("view {i}: count score {got:?} vs direct {value}"));
            }
        } else {
            capped += 1;
            let key = -(hi + (lo - hi).exp().ln_1p());
            let d = ulps(got.key, key);
            worst = worst.max(d);
            if d > 4.0 {
                return Err(format!("view {i}: count key {} vs direct {key}", got.key));
            }
        }

        let gp = GapParams { delta_coef: rng.random_range(0.0..3.0), phi: rng.random_range(0.0..1.5) };
        let solver = frozen_gaps::<i64, f64>(&view, &errors, gp.phi);
        let mut terms = Vec::new();
        for kind in OutcomeType::ALL {
            let v = view.of(kind);
            let g = oracle_view_graph(v, &errors);
            let n = v.num_checks();
            let syndrome = v.syndrome(&errors.flipped);
            let defects: Vec<usize> = (0..n).filter(|&c| syndrome[c]).collect();
            for axis in Axis::ALL {
                let spec = GapBoundarySpec::new(axis);
                let gap_nodes = [n + spec.gap_faces[0].index(), n + spec.gap_faces[1].index()];
                let solved = solver[kind.index()][axis.index()];
                let delta_f = match frozen_oracle(&g, &defects, gap_nodes) {
                    None => Some(0.0),
                    Some(o) => {
                        let delta = if o.deltas.len() == 1 {
                            o.deltas.iter().next().unwrap().clone()
                        } else {
                            ambiguous += 1;
                            if !o.deltas.contains(&Ok(solved.delta)) {
                                return Err(format!("view {i}: gap {:?} not among {:?}", solved.delta, o.deltas));
                            }
                            Ok(solved.delta)
                        };
                        match delta {
                            Err(()) => Some(0.0),
                            Ok(GapValue::Infinite) => None,
                            Ok(GapValue::Finite(d)) => Some((d as f64 - gp.phi * o.freeze_weight as f64).max(0.0)),
                        }
                    }
                };
                if let Some(df) = delta_f {
                    terms.push((-gp.delta_coef * df).exp());
                }
            }
        }
        let value = -terms.iter().sum::<f64>();
        let got = gap_score::<i64, f64>(&view, &errors, &gp);
        let d = ulps(got.value, value);
        worst = worst.max(d);
        if d > 4.0 {
            return Err(format!("view {i}: gap score {} vs direct {value}", got.value));
        }
    }
    Ok(format!("{count} views ({capped} on the log-sum-exp path, {ambiguous} tied freezing matches), max deviation {worst} ulp"))
}

/// Check counts, degrees and outcome–check incidence of both syndrome
/// graphs against a direct enumeration of cube edges, for each `L`.
pub fn structure_suite(sizes: &[usize]) -> Result<String, String> {
    use macromux::lattice::{build_syndrome_graphs, FusionNetwork};
    for &l in sizes {
        let net = FusionNetwork::new(l).map_err(|e| e.to_string())?;
        let (primal, dual) = build_syndrome_graphs(&net);
        for (g, kind) in [(&primal, OutcomeType::Primal), (&dual, OutcomeType::Dual)] {
            let want_parity = kind.index();
            if g.num_checks() != l * l * l / 2 {
                return Err(format!("L={l} {kind:?}: {} checks", g.num_checks()));
            }
            if g.num_edges() != 3 * l * l * l {
                return Err(format!("L={l} {kind:?}: {} edges", g.num_edges()));
            }
            // cells of this class containing each fusion, from cube geometry
            let mut cells_of = vec![Vec::new(); 3 * l * l * l];
            for x in 0..l {
                for y in 0..l {
                    for z in 0..l {
                        if (x + y + z) % 2 != want_parity {
                            continue;
                        }
                        let cell = (x * l + y) * l + z;
                        for axis in 0..3 {
                            for (da, db) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                                let mut c = [x, y, z];
                                c[(axis + 1) % 3] = (c[(axis + 1) % 3] + da) % l;
                                c[(axis + 2) % 3] = (c[(axis + 2) % 3] + db) % l;
                                let site = (c[0] * l + c[1]) * l + c[2];
                                cells_of[3 * site + axis].push(cell);
                            }
                        }
                    }
                }
            }
            let mut degree = vec![0usize; g.num_checks()];
            for (f, cells) in cells_of.iter().enumerate() {
                if cells.len() != 2 {
                    return Err(format!("L={l} {kind:?}: fusion {f} in {} checks", cells.len()));
                }
                let mut got: Vec<usize> = g.edge(f).iter().map(|&n| g.check_cell(n)).collect();
                let mut want = cells.clone();
                got.sort_unstable();
                want.sort_unstable();
                if got != want {
                    return Err(format!("L={l} {kind:?}: fusion {f} joins {got:?}, expected {want:?}"));
                }
                for &n in &g.edge(f) {
                    degree[n] += 1;
                }
            }
            if let Some(bad) = degree.iter().position(|&d| d != 12) {
                return Err(format!("L={l} {kind:?}: check {bad} has degree {}", degree[bad]));
            }
        }
    }
    Ok(format!("L in {sizes:?}: L^3/2 checks, 3L^3 edges, degree 12, every outcome in 2 checks"))
}

/// Primal/dual coverage balance with and without offsets.
pub fn balance_suite() -> Result<String, String> {
    use macromux::dicing::{build_cuboidal_dicing, check_offset_balance};
    use macromux::lattice::FusionNetwork;
    let net = FusionNetwork::new(8).map_err(|e| e.to_string())?;
    let offset = check_offset_balance(&build_cuboidal_dicing(&net, [4, 4, 4], 1).map_err(|e| e.to_string())?);
    let plain = check_offset_balance(&build_cuboidal_dicing(&net, [2, 2, 2], 0).map_err(|e| e.to_string())?);
    if offset.0 != offset.1 {
        return Err(format!("offset 4x4x4 dicing unbalanced: {offset:?}"));
    }
    if plain.0 == plain.1 {
        return Err(format!("unoffset 2x2x2 dicing balanced: {plain:?}"));
    }
    Ok(format!("offset 4x4x4 covers {offset:?}, unoffset 2x2x2 covers {plain:?}"))
}

/// The 5 × 5 frozen-gap example and the height-11 strip logical-gap example.
pub fn worked_examples() -> Result<String, String> {
    use macromux::gap::{frozen_gap_on_graph, logical_gap, GapResult};
    // 5 × 5 patch, gap boundaries top/bottom, freezing boundaries left/right.
    let g = grid(5, 5, true);
    let defects = [3, 2 * 5 + 1];
    for phi in [0.0, 0.5, 1.0, 2.0, 3.0] {
        let r: GapResult<i64, f64> = frozen_gap_on_graph(&g, &defects, [25, 26], phi).map_err(|e| e.to_string())?;
        let want = (4.0 - 2.0 * phi).max(0.0);
        if r.freeze_weight != 2 || r.delta != GapValue::Finite(4) || r.frozen_delta != GapValue::Finite(want) {
            return Err(format!("frozen example at phi={phi}: got {r:?}"));
        }
    }
    // height-11 strip with boundaries only above and below
    let g = grid(3, 11, false);
    let defects = [2 * 3 + 1, 6 * 3 + 1];
    for b in [33, 34] {
        let d = logical_gap(&g, &defects, b).map_err(|e| e.to_string())?;
        if d != GapValue::Finite(4) {
            return Err(format!("strip example at boundary {b}: got {d:?}"));
        }
    }
    Ok("w=2, delta=4, delta_f=max(4-2phi,0); strip delta=4".into())
}
