//! TSP instances, tours, tour metrics and the exact/heuristic baselines used
//! as gap references.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::matrix::EdgeMatrix;
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Largest instance accepted by [`exact_solve`].
pub const EXACT_MAX_NODES: usize = 18;
/// Largest instance accepted by [`brute_force_solve`].
pub const BRUTE_FORCE_MAX_NODES: usize = 10;

/// Euclidean TSP instance with coordinates in the unit square.
#[derive(Debug, Clone, PartialEq)]
pub struct TspInstance<F> {
    coords: Vec<[F; 2]>,
}

impl<F: Scalar> TspInstance<F> {
    pub fn new(coords: Vec<[F; 2]>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(invalid(format!("instance needs at least 3 nodes, got {}", coords.len())));
        }
        for (k, p) in coords.iter().enumerate() {
            for &c in p {
                if !(c >= F::zero() && c <= F::one()) {
                    return Err(invalid(format!("coordinate {c} of node {k} outside [0, 1]")));
                }
            }
        }
        Ok(Self { coords })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[F; 2]] {
        &self.coords
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> F {
        let [xi, yi] = self.coords[i];
        let [xj, yj] = self.coords[j];
        (xi - xj).hypot(yi - yj)
    }

    /// Dense row-major distance matrix.
    pub fn distance_matrix(&self) -> Vec<F> {
        let n = self.n();
        let mut d = vec![F::zero(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.dist(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        d
    }

    /// Copy with nodes relabelled so that new node `k` is old node `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Tour::new(perm.to_vec())?;
        if perm.len() != self.n() {
            return Err(invalid("permutation length differs from node count"));
        }
        Self::new(perm.iter().map(|&k| self.coords[k]).collect())
    }
}

/// `n` points drawn i.i.d. uniformly from the unit square.
pub fn generate_random<F: Scalar>(n: usize, seed: u64) -> Result<TspInstance<F>> {
    if n < 3 {
        return Err(invalid(format!("instance needs at least 3 nodes, got {n}")));
    }
    let mut rng = seeded(seed);
    let coords = (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            [F::lit(x), F::lit(y)]
        })
        .collect();
    TspInstance::new(coords)
}

/// A Hamiltonian cycle stored as a node permutation; the closing edge is implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    /// Checks that `order` is a permutation of `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n < 3 {
            return Err(Error::InvalidTour(format!("tour must visit at least 3 nodes, got {n}")));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n {
                return Err(Error::InvalidTour(format!("node {v} out of range for n = {n}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidTour(format!("node {v} visited twice")));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new((0..n).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.order.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// Consecutive node pairs including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |k| (self.order[k], self.order[(k + 1) % n]))
    }

    pub fn reversed(&self) -> Tour {
        Tour { order: self.order.iter().rev().copied().collect() }
    }

    /// Rotation starting at node 0, oriented so that `order[1] < order[n - 1]`.
    pub fn canonical(&self) -> Tour {
        let n = self.order.len();
        let start = self.order.iter().position(|&v| v == 0).expect("permutation contains 0");
        let mut order: Vec<usize> = (0..n).map(|k| self.order[(start + k) % n]).collect();
        if order[1] > order[n - 1] {
            order[1..].reverse();
        }
        Tour { order }
    }

    pub(crate) fn check_size(&self, n: usize) -> Result<()> {
        if self.order.len() != n {
            return Err(Error::InvalidTour(format!(
                "tour has {} nodes, instance has {n}",
                self.order.len()
            )));
        }
        Ok(())
    }
}

pub fn tour_length<F: Scalar>(instance: &TspInstance<F>, tour: &Tour) -> Result<F> {
    tour.check_size(instance.n())?;
    Ok(tour.edges().map(|(a, b)| instance.dist(a, b)).sum())
}

/// Adjacency matrix of the tour: every row sums to 2.
pub fn tour_to_edge_matrix(tour: &Tour) -> EdgeMatrix {
    let mut m = EdgeMatrix::zeros(tour.len());
    for (a, b) in tour.edges() {
        m.set(a, b, true);
    }
    m
}

/// `100 · (length / opt_length − 1)`.
pub fn optimality_gap<F: Scalar>(length: F, opt_length: F) -> Result<F> {
    if !(opt_length > F::zero()) {
        return Err(invalid(format!("reference length must be positive, got {opt_length}")));
    }
    Ok(F::lit(100.0) * (length / opt_length - F::one()))
}

fn tie_tolerance<F: Scalar>(scale: F) -> F {
    scale.abs() * F::lit(1e-9).max(F::epsilon() * F::lit(64.0))
}

/// Held–Karp dynamic program. Among optimal tours (within a relative 1e-9
/// tolerance) the lexicographically smallest order starting at node 0 wins.
pub fn exact_solve<F: Scalar>(instance: &TspInstance<F>) -> Result<Tour> {
    let n = instance.n();
    if n > EXACT_MAX_NODES {
        return Err(Error::InstanceTooLarge { n, max: EXACT_MAX_NODES });
    }
    let d = instance.distance_matrix();
    let dist = |a: usize, b: usize| d[a * n + b];

    // g[mask * m + e]: shortest path leaving node 0, visiting exactly the
    // nodes in `mask` (bit b is node b + 1) and ending at node e + 1.
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut g = vec![F::infinity(); (full + 1) * m];
    for e in 0..m {
        g[(1 << e) * m + e] = dist(0, e + 1);
    }
    for mask in 1..=full {
        for e in 0..m {
            if mask & (1 << e) == 0 {
                continue;
            }
            let cur = g[mask * m + e];
            if !cur.is_finite() {
                continue;
            }
            for f in 0..m {
                if mask & (1 << f) != 0 {
                    continue;
                }
                let next = mask | (1 << f);
                let cand = cur + dist(e + 1, f + 1);
                let slot = &mut g[next * m + f];
                if cand < *slot {
                    *slot = cand;
                }
            }
        }
    }

    let best = (0..m)
        .map(|e| g[full * m + e] + dist(e + 1, 0))
        .fold(F::infinity(), F::min);
    let tol = tie_tolerance(best);

    // Walk forward from node 0, taking the smallest next node that still
    // admits an optimal completion. The completion from node j through the
    // unvisited set U back to 0 is the reverse of the path g(U, j).
    let mut order = Vec::with_capacity(n);
    order.push(0);
    let mut current = 0usize;
    let mut unvisited = full;
    let mut remaining = best;
    while unvisited != 0 {
        let next = (0..m)
            .filter(|&j| unvisited & (1 << j) != 0)
            .find(|&j| dist(current, j + 1) + g[unvisited * m + j] <= remaining + tol)
            .expect("held-karp table admits a completion");
        remaining = g[unvisited * m + next];
        current = next + 1;
        unvisited &= !(1 << next);
        order.push(current);
    }
    Tour::new(order)
}

/// In-place lexicographic successor; returns false after the last permutation.
fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Exhaustive search with node 0 fixed first; returns the lexicographically
/// smallest optimal order, which is also the canonical orientation.
pub fn brute_force_solve<F: Scalar>(instance: &TspInstance<F>) -> Result<Tour> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::InstanceTooLarge { n, max: BRUTE_FORCE_MAX_NODES });
    }
    let d = instance.distance_matrix();
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best_len = F::infinity();
    let mut best = Vec::new();
    loop {
        let mut len = d[rest[0]] + d[rest[n - 2] * n];
        for w in rest.windows(2) {
            len = len + d[w[0] * n + w[1]];
        }
        if len < best_len - tie_tolerance(best_len.min(len)) || best.is_empty() {
            best_len = len;
            best = rest.clone();
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    let mut order = vec![0];
    order.extend(best);
    Tour::new(order)
}

/// Greedy nearest-unvisited construction; ties go to the lowest index.
pub fn nearest_neighbor<F: Scalar>(instance: &TspInstance<F>, start: usize) -> Result<Tour> {
    let n = instance.n();
    if start >= n {
        return Err(invalid(format!("start node {start} out of range for n = {n}")));
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = start;
    visited[start] = true;
    order.push(start);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = F::infinity();
        for (j, &seen) in visited.iter().enumerate() {
            if seen {
                continue;
            }
            let dj = instance.dist(current, j);
            if next == usize::MAX || dj < next_d {
                next = j;
                next_d = dj;
            }
        }
        visited[next] = true;
        order.push(next);
        current = next;
    }
    Tour::new(order)
}

/// Renders the instance file: `n`, then one `x y` line per node.
pub fn format_instance<F: Scalar>(instance: &TspInstance<F>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", instance.n());
    for [x, y] in instance.coords() {
        let _ = writeln!(out, "{} {}", x.as_f64(), y.as_f64());
    }
    out
}

pub fn parse_instance<F: Scalar>(text: &str) -> Result<TspInstance<F>> {
    let lines: Vec<&str> = text.split('\n').collect();
    let err = |line: usize, msg: String| Error::Parse { line, msg };

    let header = lines.first().copied().unwrap_or("").trim();
    let n: usize = header
        .parse()
        .map_err(|_| err(1, format!("expected node count, found {header:?}")))?;
    if n < 3 {
        return Err(err(1, format!("node count must be at least 3, got {n}")));
    }

    let mut coords = Vec::with_capacity(n);
    for k in 0..n {
        let line_no = k + 2;
        let line = match lines.get(k + 1) {
            Some(l) if !l.trim().is_empty() => l.trim_end_matches('\r'),
            _ => return Err(err(line_no, format!("expected {n} coordinate lines, found {k}"))),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(line_no, format!("expected two coordinates, found {}", fields.len())));
        }
        let mut p = [F::zero(); 2];
        for (slot, field) in p.iter_mut().zip(&fields) {
            let v: f64 = field
                .parse()
                .map_err(|_| err(line_no, format!("malformed coordinate {field:?}")))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(err(line_no, format!("coordinate {v} outside [0, 1]")));
            }
            *slot = F::lit(v);
        }
        coords.push(p);
    }
    for (k, extra) in lines.iter().enumerate().skip(n + 1) {
        if !extra.trim().is_empty() {
            return Err(err(k + 1, "unexpected content after the last coordinate line".into()));
        }
    }
    TspInstance::new(coords).map_err(|e| err(1, e.to_string()))
}

pub fn read_instance<F: Scalar>(path: impl AsRef<Path>) -> Result<TspInstance<F>> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_instance<F: Scalar>(instance: &TspInstance<F>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_instance(instance))?;
    Ok(())
}

/// Tour file: one line of space-separated node indices.
pub fn format_tour(tour: &Tour) -> String {
    let parts: Vec<String> = tour.order().iter().map(|v| v.to_string()).collect();
    format!("{}\n", parts.join(" "))
}

pub fn parse_tour(text: &str) -> Result<Tour> {
    let order = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| Error::Parse { line: 1, msg: format!("malformed node index {tok:?}") })
        })
        .collect::<Result<Vec<_>>>()?;
    Tour::new(order)
}

pub fn read_tour(path: impl AsRef<Path>) -> Result<Tour> {
    parse_tour(&std::fs::read_to_string(path)?)
}

pub fn write_tour(tour: &Tour, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_tour(tour))?;
    Ok(())
}
