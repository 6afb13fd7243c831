//! Exact discrete optimal transport.
//!
//! Balanced transportation problems with integer supplies are solved by a
//! primal network simplex on the complete bipartite graph, started from an
//! artificial-root spanning tree and priced by block search. All arcs are
//! uncapacitated, so non-tree arcs carry zero flow and only tree flows are
//! stored.

use crate::error::{numeric, validation, MagError, Result};
use crate::kmap::sq_dist;

/// Combined point count accepted by [`wasserstein_discrete`].
pub const MAX_UNIFORM_POINTS: usize = 2000;
/// Arc count accepted by [`wasserstein_weighted`].
pub const MAX_ARCS: usize = 4_000_000;

/// Exact `W_p` between two uniform point clouds.
pub fn wasserstein_discrete<P: AsRef<[f64]>>(mu: &[P], nu: &[P], p: f64) -> Result<f64> {
    let (n1, n2) = (mu.len(), nu.len());
    if n1 == 0 || n2 == 0 {
        return validation("wasserstein_discrete needs nonempty clouds");
    }
    if n1 + n2 > MAX_UNIFORM_POINTS {
        return Err(MagError::Capability(format!(
            "clouds of sizes {n1} + {n2} exceed the exact solver cap {MAX_UNIFORM_POINTS}"
        )));
    }
    let a = vec![n2 as i64; n1];
    let b = vec![n1 as i64; n2];
    let total = transport_cost(&a, &b, &cost_matrix(mu, nu, p)?)?;
    Ok((total / (n1 * n2) as f64).powf(1.0 / p))
}

/// Exact `W_p` between `Σ a_i δ_{x_i} / Σa` and `Σ b_j δ_{y_j} / Σb`.
pub fn wasserstein_weighted<P: AsRef<[f64]>>(
    xs: &[P],
    a: &[u64],
    ys: &[P],
    b: &[u64],
    p: f64,
) -> Result<f64> {
    if xs.len() != a.len() || ys.len() != b.len() {
        return validation("weights and points differ in length");
    }
    if xs.len() * ys.len() > MAX_ARCS {
        return Err(MagError::Capability(format!(
            "{} × {} transport exceeds {MAX_ARCS} arcs",
            xs.len(),
            ys.len()
        )));
    }
    let sa: u64 = a.iter().sum();
    let sb: u64 = b.iter().sum();
    if sa == 0 || sb == 0 {
        return validation("weights must have positive total");
    }
    let (sa_i, sb_i) = (sa as i64, sb as i64);
    let supply: Vec<i64> = a.iter().map(|&w| w as i64 * sb_i).collect();
    let demand: Vec<i64> = b.iter().map(|&w| w as i64 * sa_i).collect();
    let total = transport_cost(&supply, &demand, &cost_matrix(xs, ys, p)?)?;
    Ok((total / (sa as f64 * sb as f64)).powf(1.0 / p))
}

fn cost_matrix<P: AsRef<[f64]>>(xs: &[P], ys: &[P], p: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0 && p.is_finite()) {
        return validation(format!("Wasserstein order must be ≥ 1, got {p}"));
    }
    let dim = xs.first().map(|x| x.as_ref().len()).unwrap_or(0);
    if xs.iter().chain(ys).any(|x| x.as_ref().len() != dim) {
        return validation("transport points have different dimensions");
    }
    let mut cost = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            let d2 = sq_dist(x.as_ref(), y.as_ref());
            cost.push(if p == 2.0 {
                d2
            } else if p == 1.0 {
                d2.sqrt()
            } else {
                d2.powf(0.5 * p)
            });
        }
    }
    Ok(cost)
}

/// Minimal `Σ f_ij c_ij` subject to `Σ_j f_ij = supply_i`, `Σ_i f_ij = demand_j`, `f ≥ 0`.
///
/// `cost` is row-major `supply.len() × demand.len()`; totals must agree.
pub fn transport_cost(supply: &[i64], demand: &[i64], cost: &[f64]) -> Result<f64> {
    let (n1, n2) = (supply.len(), demand.len());
    if cost.len() != n1 * n2 {
        return validation("cost matrix has the wrong size");
    }
    if supply.iter().chain(demand).any(|&s| s < 0) {
        return validation("supplies and demands must be nonnegative");
    }
    if supply.iter().sum::<i64>() != demand.iter().sum::<i64>() {
        return validation("unbalanced transport problem");
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(numeric("transport", "non-finite cost"));
    }
    let mut ns = NetworkSimplex::new(supply, demand, cost);
    ns.run()?;
    Ok(ns.total_cost())
}

struct NetworkSimplex<'a> {
    n1: usize,
    n2: usize,
    root: usize,
    cost: &'a [f64],
    art_cost: f64,
    /// Supply-side artificial arcs point towards the root.
    art_up: Vec<bool>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_up: Vec<bool>,
    pred_flow: Vec<i64>,
    pi: Vec<f64>,
    tree_adj: Vec<Vec<usize>>,
    stamp: Vec<u32>,
    stamp_now: u32,
    next_arc: usize,
    block: usize,
    eps: f64,
}

impl<'a> NetworkSimplex<'a> {
    fn new(supply: &[i64], demand: &[i64], cost: &'a [f64]) -> Self {
        let (n1, n2) = (supply.len(), demand.len());
        let n = n1 + n2;
        let root = n;
        let max_cost = cost.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let art_cost = (max_cost + 1.0) * (n as f64 + 1.0);
        let mut ns = Self {
            n1,
            n2,
            root,
            cost,
            art_cost,
            art_up: vec![false; n],
            parent: vec![root; n + 1],
            pred: vec![0; n + 1],
            pred_up: vec![false; n + 1],
            pred_flow: vec![0; n + 1],
            pi: vec![0.0; n + 1],
            tree_adj: vec![Vec::new(); n + 1],
            stamp: vec![0; n + 1],
            stamp_now: 0,
            next_arc: 0,
            block: ((n1 * n2 + n) as f64).sqrt().ceil().max(10.0) as usize,
            eps: 1e-13 * art_cost,
        };
        for u in 0..n {
            let s = if u < n1 { supply[u] } else { -demand[u - n1] };
            let arc = n1 * n2 + u;
            ns.art_up[u] = s >= 0;
            ns.pred[u] = arc;
            ns.pred_up[u] = s >= 0;
            ns.pred_flow[u] = s.abs();
            ns.pi[u] = if s >= 0 { -art_cost } else { art_cost };
            ns.tree_adj[u].push(arc);
            ns.tree_adj[root].push(arc);
        }
        ns
    }

    fn num_arcs(&self) -> usize {
        self.n1 * self.n2 + self.n1 + self.n2
    }

    fn ends(&self, arc: usize) -> (usize, usize) {
        let real = self.n1 * self.n2;
        if arc < real {
            (arc / self.n2, self.n1 + arc % self.n2)
        } else {
            let u = arc - real;
            if self.art_up[u] {
                (u, self.root)
            } else {
                (self.root, u)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.cost.len() {
            self.cost[arc]
        } else {
            self.art_cost
        }
    }

    fn reduced(&self, arc: usize) -> f64 {
        let (s, t) = self.ends(arc);
        self.arc_cost(arc) + self.pi[s] - self.pi[t]
    }

    /// Block search for an arc with negative reduced cost.
    fn entering(&mut self) -> Option<usize> {
        let m = self.num_arcs();
        let mut best = None;
        let mut best_rc = -self.eps;
        let mut scanned_in_block = 0;
        for step in 0..m {
            let arc = (self.next_arc + step) % m;
            let rc = self.reduced(arc);
            if rc < best_rc {
                best_rc = rc;
                best = Some(arc);
            }
            scanned_in_block += 1;
            if scanned_in_block == self.block {
                if let Some(found) = best {
                    self.next_arc = (arc + 1) % m;
                    return Some(found);
                }
                scanned_in_block = 0;
            }
        }
        if let Some(found) = best {
            self.next_arc = (found + 1) % m;
        }
        best
    }

    fn run(&mut self) -> Result<()> {
        let max_iter = 50 * self.num_arcs() + 1000;
        for _ in 0..max_iter {
            let Some(arc) = self.entering() else {
                return self.check_feasible();
            };
            self.pivot(arc);
        }
        Err(numeric("transport", "network simplex iteration limit reached"))
    }

    fn check_feasible(&self) -> Result<()> {
        let real = self.n1 * self.n2;
        for u in 0..self.root {
            if self.pred[u] >= real && self.pred_flow[u] != 0 {
                return Err(numeric("transport", "infeasible transport problem"));
            }
        }
        Ok(())
    }

    fn pivot(&mut self, in_arc: usize) {
        let (first, second) = self.ends(in_arc);

        // common ancestor of both endpoints
        self.stamp_now = self.stamp_now.wrapping_add(1);
        if self.stamp_now == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.stamp_now = 1;
        }
        let mut u = first;
        loop {
            self.stamp[u] = self.stamp_now;
            if u == self.root {
                break;
            }
            u = self.parent[u];
        }
        let mut join = second;
        while self.stamp[join] != self.stamp_now {
            join = self.parent[join];
        }

        // leaving arc: first side decreases upward arcs, second side downward arcs
        let mut delta = i64::MAX;
        let mut u_out = usize::MAX;
        let mut out_on_first = true;
        let mut u = first;
        while u != join {
            let d = if self.pred_up[u] { self.pred_flow[u] } else { i64::MAX };
            if d < delta {
                delta = d;
                u_out = u;
                out_on_first = true;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            let d = if self.pred_up[u] { i64::MAX } else { self.pred_flow[u] };
            if d <= delta {
                delta = d;
                u_out = u;
                out_on_first = false;
            }
            u = self.parent[u];
        }
        debug_assert!(u_out != usize::MAX, "unbounded transport cycle");

        if delta > 0 {
            let mut u = first;
            while u != join {
                self.pred_flow[u] += if self.pred_up[u] { -delta } else { delta };
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                self.pred_flow[u] += if self.pred_up[u] { delta } else { -delta };
                u = self.parent[u];
            }
        }

        // re-hang the subtree below the leaving arc from the entering arc
        let out_arc = self.pred[u_out];
        let out_parent = self.parent[u_out];
        remove_arc(&mut self.tree_adj[u_out], out_arc);
        remove_arc(&mut self.tree_adj[out_parent], out_arc);
        let (u_in, v_in) = if out_on_first { (first, second) } else { (second, first) };
        self.tree_adj[first].push(in_arc);
        self.tree_adj[second].push(in_arc);

        let mut u = u_in;
        let mut new_parent = v_in;
        let mut new_pred = in_arc;
        let mut new_flow = delta;
        loop {
            let old_parent = self.parent[u];
            let old_pred = self.pred[u];
            let old_flow = self.pred_flow[u];
            self.parent[u] = new_parent;
            self.pred[u] = new_pred;
            self.pred_flow[u] = new_flow;
            self.pred_up[u] = self.ends(new_pred).0 == u;
            if u == u_out {
                break;
            }
            new_parent = u;
            new_pred = old_pred;
            new_flow = old_flow;
            u = old_parent;
        }

        let rc = self.reduced(in_arc);
        let shift = if u_in == first { -rc } else { rc };
        let mut stack = vec![u_in];
        while let Some(w) = stack.pop() {
            self.pi[w] += shift;
            for &arc in &self.tree_adj[w] {
                let (s, t) = self.ends(arc);
                let other = if s == w { t } else { s };
                if other != self.root && self.parent[other] == w && self.pred[other] == arc {
                    stack.push(other);
                }
            }
        }
    }

    fn total_cost(&self) -> f64 {
        (0..self.root)
            .filter(|&u| self.pred[u] < self.cost.len())
            .map(|u| self.pred_flow[u] as f64 * self.cost[self.pred[u]])
            .sum()
    }
}

fn remove_arc(list: &mut Vec<usize>, arc: usize) {
    if let Some(pos) = list.iter().position(|&a| a == arc) {
        list.swap_remove(pos);
    }
}
