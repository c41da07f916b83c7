//! Sparse symmetric linear algebra for the interior-point KKT systems.
//!
//! The KKT matrices produced by collocation transcriptions are near-banded
//! with a handful of dense columns (phase time variables). A fill-reducing
//! permutation (reverse Cuthill-McKee with dense columns deferred to the
//! end) followed by an up-looking LDL^T factorization handles them well.
//! The factorization is unpivoted: the interior-point loop regularizes the
//! matrix until it is quasi-definite, and reads the inertia straight off
//! the diagonal of D.

/// Symmetric matrix given as upper-triangle entries `(row, col, value)` with
/// `row <= col`. Duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct SymTriplets {
    pub n: usize,
    pub entries: Vec<(usize, usize)>,
}

impl SymTriplets {
    pub fn new(n: usize) -> Self {
        SymTriplets {
            n,
            entries: Vec::new(),
        }
    }

    /// Record an upper-triangle entry; returns its slot in the value vector.
    pub fn push(&mut self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(j < self.n);
        self.entries.push((i, j));
        self.entries.len() - 1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compressed sparse column, upper triangle only, rows sorted per column.
#[derive(Debug, Clone)]
pub struct SymCsc {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    /// Maps each source triplet slot to its position in `row_idx`/values.
    pub slot_of_entry: Vec<usize>,
}

impl SymCsc {
    /// Build the CSC pattern of `P A P^T` (upper triangle) from triplets,
    /// merging duplicates. `perm[k]` is the original index placed at
    /// position `k`; `inv_perm` is its inverse.
    pub fn from_triplets(t: &SymTriplets, inv_perm: &[usize]) -> SymCsc {
        let n = t.n;
        // Permuted coordinates, re-folded into the upper triangle.
        let mut coords: Vec<(usize, usize, usize)> = t
            .entries
            .iter()
            .enumerate()
            .map(|(slot, &(i, j))| {
                let (pi, pj) = (inv_perm[i], inv_perm[j]);
                let (pi, pj) = if pi <= pj { (pi, pj) } else { (pj, pi) };
                (pj, pi, slot) // column-major sort key
            })
            .collect();
        coords.sort_unstable_by_key(|&(c, r, _)| (c, r));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(coords.len());
        let mut slot_of_entry = vec![0usize; t.entries.len()];
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, src) in &coords {
            if last != Some((c, r)) {
                row_idx.push(r);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
            slot_of_entry[src] = row_idx.len() - 1;
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        SymCsc {
            n,
            col_ptr,
            row_idx,
            slot_of_entry,
        }
    }

    /// Scatter per-triplet values into merged CSC value storage.
    pub fn fill_values(&self, entry_vals: &[f64], out: &mut [f64]) {
        debug_assert_eq!(entry_vals.len(), self.slot_of_entry.len());
        for v in out.iter_mut() {
            *v = 0.0;
        }
        for (src, &slot) in self.slot_of_entry.iter().enumerate() {
            out[slot] += entry_vals[src];
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// y += A x with A the full symmetric matrix (mirroring the upper triangle).
    pub fn sym_mul_add(&self, vals: &[f64], x: &[f64], y: &mut [f64]) {
        for c in 0..self.n {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let a = vals[p];
                y[r] += a * x[c];
                if r != c {
                    y[c] += a * x[r];
                }
            }
        }
    }
}

/// Symbolic data for the LDL^T factorization of a fixed pattern.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    parent: Vec<isize>,
    l_col_ptr: Vec<usize>,
    l_nnz: usize,
}

/// Numeric LDL^T factors.
#[derive(Debug, Clone)]
pub struct LdlFactors {
    n: usize,
    l_col_ptr: Vec<usize>,
    l_row_idx: Vec<usize>,
    l_vals: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Elimination tree and column counts (Davis, "Direct Methods for Sparse
/// Linear Systems", algorithm LDL). Expects upper-triangular CSC.
pub fn ldl_symbolic(a: &SymCsc) -> LdlSymbolic {
    let n = a.n;
    let mut parent = vec![-1isize; n];
    let mut flag = vec![usize::MAX; n];
    let mut l_counts = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let mut i = a.row_idx[p];
            if i >= k {
                continue;
            }
            // Walk from i up to the root of the current etree.
            while flag[i] != k {
                if parent[i] == -1 {
                    parent[i] = k as isize;
                }
                l_counts[i] += 1;
                flag[i] = k;
                i = parent[i] as usize;
            }
        }
    }
    let mut l_col_ptr = vec![0usize; n + 1];
    for i in 0..n {
        l_col_ptr[i + 1] = l_col_ptr[i] + l_counts[i];
    }
    let l_nnz = l_col_ptr[n];
    LdlSymbolic {
        parent,
        l_col_ptr,
        l_nnz,
    }
}

/// Up-looking numeric LDL^T. Returns `None` when a pivot is exactly zero or
/// non-finite (caller regularizes and retries).
pub fn ldl_numeric(a: &SymCsc, vals: &[f64], sym: &LdlSymbolic) -> Option<LdlFactors> {
    let n = a.n;
    let mut l_row_idx = vec![0usize; sym.l_nnz];
    let mut l_vals = vec![0.0f64; sym.l_nnz];
    let mut d = vec![0.0f64; n];
    let mut y = vec![0.0f64; n];
    let mut pattern = vec![0usize; n];
    let mut flag = vec![usize::MAX; n];
    let mut l_next = sym.l_col_ptr[..n].to_vec();

    for k in 0..n {
        let mut top = n;
        flag[k] = k;
        y[k] = 0.0;
        for p in a.col_ptr[k]..a.col_ptr[k + 1] {
            let i = a.row_idx[p];
            if i > k {
                continue;
            }
            y[i] += vals[p];
            let mut len = 0usize;
            let mut ii = i;
            while flag[ii] != k {
                pattern[len] = ii;
                len += 1;
                flag[ii] = k;
                ii = sym.parent[ii] as usize;
            }
            while len > 0 {
                len -= 1;
                top -= 1;
                pattern[top] = pattern[len];
            }
        }
        d[k] = y[k];
        y[k] = 0.0;
        for t in top..n {
            let i = pattern[t];
            let yi = y[i];
            y[i] = 0.0;
            for p in sym.l_col_ptr[i]..l_next[i] {
                y[l_row_idx[p]] -= l_vals[p] * yi;
            }
            let di = d[i];
            if di == 0.0 || !di.is_finite() {
                return None;
            }
            let l_ki = yi / di;
            d[k] -= l_ki * yi;
            l_row_idx[l_next[i]] = k;
            l_vals[l_next[i]] = l_ki;
            l_next[i] += 1;
        }
        if d[k] == 0.0 || !d[k].is_finite() {
            return None;
        }
    }
    Some(LdlFactors {
        n,
        l_col_ptr: sym.l_col_ptr.clone(),
        l_row_idx,
        l_vals,
        d,
    })
}

impl LdlFactors {
    pub fn inertia(&self, zero_tol: f64) -> Inertia {
        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for &dk in &self.d {
            if dk > zero_tol {
                inertia.positive += 1;
            } else if dk < -zero_tol {
                inertia.negative += 1;
            } else {
                inertia.zero += 1;
            }
        }
        inertia
    }

    /// Solve (L D L^T) x = b in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let xj = x[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                x[self.l_row_idx[p]] -= self.l_vals[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut xj = x[j];
            for p in self.l_col_ptr[j]..self.l_col_ptr[j + 1] {
                xj -= self.l_vals[p] * x[self.l_row_idx[p]];
            }
            x[j] = xj;
        }
    }
}

/// Fill-reducing ordering: reverse Cuthill-McKee over the sparsity graph,
/// with high-degree (dense) columns deferred to the end of the ordering so
/// their fill stays confined to a border block.
///
/// Returns `perm` with `perm[k]` = original index at permuted position `k`.
pub fn rcm_ordering(t: &SymTriplets) -> Vec<usize> {
    let n = t.n;
    if n == 0 {
        return Vec::new();
    }
    // Adjacency (without self loops), deduplicated.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &t.entries {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degrees: Vec<usize> = adj.iter().map(|l| l.len()).collect();
    let mean_deg = degrees.iter().sum::<usize>() as f64 / n.max(1) as f64;
    let dense_cut = ((4.0 * mean_deg) as usize).max(48);
    let dense: Vec<usize> = (0..n).filter(|&i| degrees[i] > dense_cut).collect();
    let is_dense: Vec<bool> = {
        let mut v = vec![false; n];
        for &i in &dense {
            v[i] = true;
        }
        v
    };

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for &i in &dense {
        visited[i] = true;
    }
    let mut queue = std::collections::VecDeque::new();
    loop {
        // Start each component from an unvisited vertex of minimum degree.
        let start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degrees[i], i));
        let Some(start) = start else { break };
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v]
                .iter()
                .copied()
                .filter(|&u| !visited[u] && !is_dense[u])
                .collect();
            nbrs.sort_unstable_by_key(|&u| (degrees[u], u));
            for u in nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order.extend_from_slice(&dense);
    debug_assert_eq!(order.len(), n);
    order
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve_check(n: usize, entries: &[(usize, usize, f64)], b: &[f64]) -> Vec<f64> {
        // Dense Gaussian elimination as the oracle.
        let mut a = vec![vec![0.0; n]; n];
        for &(i, j, v) in entries {
            a[i][j] += v;
            if i != j {
                a[j][i] += v;
            }
        }
        let mut aug: Vec<Vec<f64>> = a
            .iter()
            .zip(b.iter())
            .map(|(row, &bi)| {
                let mut r = row.clone();
                r.push(bi);
                r
            })
            .collect();
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs())).unwrap();
            aug.swap(c, piv);
            let p = aug[c][c];
            for r in 0..n {
                if r != c && aug[r][c] != 0.0 {
                    let f = aug[r][c] / p;
                    for k in c..=n {
                        aug[r][k] -= f * aug[c][k];
                    }
                }
            }
        }
        (0..n).map(|i| aug[i][n] / aug[i][i]).collect()
    }

    #[test]
    fn ldl_solves_indefinite_kkt_like_system() {
        // [ 2 0 1 ]
        // [ 0 3 1 ]
        // [ 1 1 -1 ]
        let mut t = SymTriplets::new(3);
        let raw = [
            (0, 0, 2.0),
            (1, 1, 3.0),
            (0, 2, 1.0),
            (1, 2, 1.0),
            (2, 2, -1.0),
        ];
        let mut vals = Vec::new();
        for &(i, j, v) in &raw {
            t.push(i, j);
            vals.push(v);
        }
        let perm = rcm_ordering(&t);
        let inv = invert_permutation(&perm);
        let csc = SymCsc::from_triplets(&t, &inv);
        let mut merged = vec![0.0; csc.nnz()];
        csc.fill_values(&vals, &mut merged);
        let sym = ldl_symbolic(&csc);
        let f = ldl_numeric(&csc, &merged, &sym).unwrap();
        let inertia = f.inertia(0.0);
        assert_eq!(inertia.positive, 2);
        assert_eq!(inertia.negative, 1);

        let b = vec![1.0, 2.0, 3.0];
        let mut pb: Vec<f64> = (0..3).map(|k| b[perm[k]]).collect();
        f.solve_in_place(&mut pb);
        let x: Vec<f64> = (0..3).map(|i| pb[inv[i]]).collect();
        let oracle = dense_solve_check(3, &raw, &b);
        for (xi, oi) in x.iter().zip(oracle.iter()) {
            assert!((xi - oi).abs() < 1e-12, "{xi} vs {oi}");
        }
    }

    #[test]
    fn ldl_matches_dense_on_random_banded_system() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 60;
        let mut t = SymTriplets::new(n);
        let mut raw = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            let diag = if i % 3 == 2 { -(2.0 + rng.gen::<f64>()) } else { 5.0 + rng.gen::<f64>() };
            t.push(i, i);
            raw.push((i, i, diag));
            vals.push(diag);
            for off in 1..4usize {
                if i + off < n {
                    let v = rng.gen::<f64>() - 0.5;
                    t.push(i, i + off);
                    raw.push((i, i + off, v));
                    vals.push(v);
                }
            }
        }
        let perm = rcm_ordering(&t);
        let inv = invert_permutation(&perm);
        let csc = SymCsc::from_triplets(&t, &inv);
        let mut merged = vec![0.0; csc.nnz()];
        csc.fill_values(&vals, &mut merged);
        let sym = ldl_symbolic(&csc);
        let f = ldl_numeric(&csc, &merged, &sym).expect("factorization");
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.13).sin()).collect();
        let mut pb: Vec<f64> = (0..n).map(|k| b[perm[k]]).collect();
        f.solve_in_place(&mut pb);
        let x: Vec<f64> = (0..n).map(|i| pb[inv[i]]).collect();
        let oracle = dense_solve_check(n, &raw, &b);
        for (xi, oi) in x.iter().zip(oracle.iter()) {
            assert!((xi - oi).abs() < 1e-8 * (1.0 + oi.abs()), "{xi} vs {oi}");
        }
    }
}
