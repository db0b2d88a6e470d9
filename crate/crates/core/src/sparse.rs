//! Complex sparse matrices and direct factorization.
//!
//! Small systems use dense LU with partial pivoting. Larger systems are
//! reordered with reverse Cuthill-McKee and factored as a banded LU with
//! partial pivoting. Nodes of unusually high degree (substrate contacts that
//! tie hundreds of mesh cells together) would wreck the bandwidth, so they
//! are pulled out into a dense border and eliminated through a Schur
//! complement.

use std::collections::VecDeque;

use num_complex::Complex64;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Systems at or below this size are factored densely.
pub const DENSE_LIMIT: usize = 300;

/// Zero pivot encountered while factoring; `position` is the original
/// (unpermuted) row/column index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroPivot {
    pub position: usize,
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

/// Triplet accumulator; duplicates are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder {
            n,
            entries: Vec::new(),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: Complex64) {
        debug_assert!(row < self.n && col < self.n);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .unwrap_or(C0)
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![C0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] += v;
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Row has no stored entries.
    pub fn row_is_empty(&self, i: usize) -> bool {
        self.row_ptr[i] == self.row_ptr[i + 1]
    }

    /// Symmetric adjacency (off-diagonal structure of A + Aᵀ).
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// Reverse Cuthill-McKee ordering restricted to the `active` vertices.
/// Returns the vertices in their new order.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>], active: &[bool]) -> Vec<usize> {
    let n = adj.len();
    let degree = |v: usize| adj[v].iter().filter(|&&w| active[w]).count();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited_outer: &[bool]| -> (Vec<usize>, usize) {
        // Returns (last level, eccentricity).
        let mut level = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        level[start] = 0;
        queue.push_back(start);
        let mut max_level = 0;
        let mut last = vec![start];
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if active[w] && !visited_outer[w] && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    if level[w] > max_level {
                        max_level = level[w];
                        last.clear();
                    }
                    if level[w] == max_level {
                        last.push(w);
                    }
                    queue.push_back(w);
                }
            }
        }
        (last, max_level)
    };

    loop {
        // Lowest-degree unvisited vertex seeds the next component.
        let seed = (0..n)
            .filter(|&v| active[v] && !visited[v])
            .min_by_key(|&v| (degree(v), v));
        let Some(mut start) = seed else { break };

        // Pseudo-peripheral vertex search.
        let (mut last, mut ecc) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let candidate = *last
                .iter()
                .min_by_key(|&&v| (degree(v), v))
                .expect("nonempty level");
            let (next_last, next_ecc) = bfs_levels(candidate, &visited);
            if next_ecc > ecc {
                start = candidate;
                last = next_last;
                ecc = next_ecc;
            } else {
                break;
            }
        }

        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v]
                .iter()
                .copied()
                .filter(|&w| active[w] && !visited[w])
                .collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Dense LU with partial pivoting, row-major storage.
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<Complex64>,
    piv: Vec<usize>,
}

impl DenseLu {
    /// Factor a dense row-major matrix. `ZeroPivot::position` is the column
    /// index where elimination broke down.
    pub fn factor(n: usize, mut a: Vec<Complex64>) -> Result<Self, ZeroPivot> {
        assert_eq!(a.len(), n * n);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let m = a[i * n + k].norm();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(ZeroPivot { position: k });
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let inv = 1.0 / a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] * inv;
                if l == C0 {
                    continue;
                }
                a[i * n + k] = l;
                let (upper, lower) = a.split_at_mut(i * n);
                let row_k = &upper[k * n..k * n + n];
                let row_i = &mut lower[..n];
                for j in k + 1..n {
                    row_i[j] -= l * row_k[j];
                }
            }
        }
        Ok(DenseLu { n, lu: a, piv })
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }
}

/// Banded LU with partial pivoting in LAPACK `gbtrf` layout: column-major,
/// `ldab = 2*kl + ku + 1` rows, entry (i, j) stored at row `kl + ku + i - j`.
#[derive(Debug, Clone)]
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandLu {
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab() + (self.kl + self.ku + i - j)
    }

    /// `entries` are (row, col, value) in band coordinates.
    fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: impl Iterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self, usize> {
        let ldab = 2 * kl + ku + 1;
        let mut lu = BandLu {
            n,
            kl,
            ku,
            ab: vec![C0; ldab * n],
            piv: vec![0; n],
        };
        for (i, j, v) in entries {
            let k = lu.idx(i, j);
            lu.ab[k] += v;
        }
        let kv = kl + ku;
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let base = j * ldab + kv;
            let mut jp = 0;
            let mut best = lu.ab[base].norm();
            for r in 1..=km {
                let m = lu.ab[base + r].norm();
                if m > best {
                    best = m;
                    jp = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(j);
            }
            lu.piv[j] = j + jp;
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let a = c * ldab + kv + j - c;
                    let b = c * ldab + kv + j + jp - c;
                    lu.ab.swap(a, b);
                }
            }
            let inv = 1.0 / lu.ab[base];
            for r in 1..=km {
                lu.ab[base + r] *= inv;
            }
            for c in j + 1..=ju {
                let u = lu.ab[c * ldab + kv + j - c];
                if u == C0 {
                    continue;
                }
                let col = c * ldab + kv - c;
                for r in 1..=km {
                    let l = lu.ab[base + r];
                    lu.ab[col + j + r] -= l * u;
                }
            }
        }
        Ok(lu)
    }

    fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        let ldab = self.ldab();
        let kv = self.kl + self.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != C0 {
                let base = j * ldab + kv;
                for r in 1..=km {
                    b[j + r] -= self.ab[base + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= self.ab[col];
            let bj = b[j];
            if bj != C0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= self.ab[col + i - j] * bj;
                }
            }
        }
    }
}

/// RCM-ordered band LU with a dense border for high-degree vertices.
#[derive(Debug, Clone)]
pub struct BorderedLu {
    /// perm[new] = old, interior first then border.
    perm: Vec<usize>,
    n_interior: usize,
    band: BandLu,
    /// Border columns of A restricted to interior rows, after solving with B:
    /// z[k] = B⁻¹ C[:, k].
    z: Vec<Vec<Complex64>>,
    /// Border rows restricted to interior columns: sparse (col, value).
    d_rows: Vec<Vec<(usize, Complex64)>>,
    schur: Option<DenseLu>,
}

impl BorderedLu {
    fn factor(a: &CsrMatrix, border_threshold: Option<usize>) -> Result<Self, ZeroPivot> {
        let n = a.dim();
        let adj = a.adjacency();
        let mut is_border = vec![false; n];
        if let Some(threshold) = border_threshold {
            let mut candidates: Vec<usize> = (0..n).filter(|&v| adj[v].len() > threshold).collect();
            candidates.sort_by_key(|&v| (std::cmp::Reverse(adj[v].len()), v));
            candidates.truncate(256.min(n / 4));
            for v in candidates {
                is_border[v] = true;
            }
        }
        let active: Vec<bool> = is_border.iter().map(|b| !b).collect();
        let interior = reverse_cuthill_mckee(&adj, &active);
        let border: Vec<usize> = (0..n).filter(|&v| is_border[v]).collect();
        let n1 = interior.len();
        let mut perm = interior;
        perm.extend(border.iter().copied());
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let mut kl = 0usize;
        let mut ku = 0usize;
        let mut band_entries = Vec::new();
        let mut c_cols: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n - n1];
        let mut d_rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n - n1];
        let mut e = vec![C0; (n - n1) * (n - n1)];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                match (i < n1, j < n1) {
                    (true, true) => {
                        if i > j {
                            kl = kl.max(i - j);
                        } else {
                            ku = ku.max(j - i);
                        }
                        band_entries.push((i, j, v));
                    }
                    (true, false) => c_cols[j - n1].push((i, v)),
                    (false, true) => d_rows[i - n1].push((j, v)),
                    (false, false) => e[(i - n1) * (n - n1) + (j - n1)] += v,
                }
            }
        }
        let band = BandLu::factor(n1, kl, ku, band_entries.into_iter())
            .map_err(|j| ZeroPivot { position: perm[j] })?;

        let nb = n - n1;
        let mut z = Vec::with_capacity(nb);
        for col in &c_cols {
            let mut x = vec![C0; n1];
            for &(i, v) in col {
                x[i] += v;
            }
            band.solve_in_place(&mut x);
            z.push(x);
        }
        let schur = if nb > 0 {
            for (r, drow) in d_rows.iter().enumerate() {
                for (k, zk) in z.iter().enumerate() {
                    let s: Complex64 = drow.iter().map(|&(j, v)| v * zk[j]).sum();
                    e[r * nb + k] -= s;
                }
            }
            Some(DenseLu::factor(nb, e).map_err(|p| ZeroPivot {
                position: perm[n1 + p.position],
            })?)
        } else {
            None
        };
        Ok(BorderedLu {
            perm,
            n_interior: n1,
            band,
            z,
            d_rows,
            schur,
        })
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.perm.len();
        let n1 = self.n_interior;
        let mut y: Vec<Complex64> = self.perm[..n1].iter().map(|&o| b[o]).collect();
        self.band.solve_in_place(&mut y);
        let mut x2: Vec<Complex64> = self.perm[n1..].iter().map(|&o| b[o]).collect();
        if let Some(schur) = &self.schur {
            for (r, drow) in self.d_rows.iter().enumerate() {
                let s: Complex64 = drow.iter().map(|&(j, v)| v * y[j]).sum();
                x2[r] -= s;
            }
            schur.solve_in_place(&mut x2);
            for (k, zk) in self.z.iter().enumerate() {
                let xk = x2[k];
                if xk != C0 {
                    for (yi, zi) in y.iter_mut().zip(zk) {
                        *yi -= zi * xk;
                    }
                }
            }
        }
        let mut out = vec![C0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = if new < n1 { y[new] } else { x2[new - n1] };
        }
        out
    }
}

/// A factored square system ready for repeated solves.
#[derive(Debug, Clone)]
pub enum Factorization {
    Dense(DenseLu),
    Bordered(Box<BorderedLu>),
}

impl Factorization {
    pub fn new(a: &CsrMatrix) -> Result<Self, ZeroPivot> {
        let n = a.dim();
        if n <= DENSE_LIMIT {
            let dense: Vec<Complex64> = a.to_dense().into_iter().flatten().collect();
            return DenseLu::factor(n, dense).map(Factorization::Dense);
        }
        let mut degrees: Vec<usize> = (0..n).map(|i| a.row(i).count()).collect();
        degrees.sort_unstable();
        let median = degrees[n / 2];
        let threshold = (6 * median).max(24);
        match BorderedLu::factor(a, Some(threshold)) {
            Ok(f) => Ok(Factorization::Bordered(Box::new(f))),
            // The interior block can be singular even when the full matrix is
            // not; retry with everything in the band.
            Err(_) => BorderedLu::factor(a, None).map(|f| Factorization::Bordered(Box::new(f))),
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        match self {
            Factorization::Dense(lu) => {
                let mut x = b.to_vec();
                lu.solve_in_place(&mut x);
                x
            }
            Factorization::Bordered(lu) => lu.solve(b),
        }
    }

    /// Solve with iterative refinement against the original matrix until the
    /// residual drops below `rel_tol * |b|` (at most three steps). Returns the
    /// solution and the final relative residual.
    pub fn solve_refined(
        &self,
        a: &CsrMatrix,
        b: &[Complex64],
        rel_tol: f64,
    ) -> (Vec<Complex64>, f64) {
        let bnorm = norm(b).max(f64::MIN_POSITIVE);
        let mut x = self.solve(b);
        let mut rel = f64::INFINITY;
        for step in 0..4 {
            let ax = a.mul_vec(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm(&r) / bnorm;
            if rel <= rel_tol || step == 3 || !rel.is_finite() {
                break;
            }
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        (x, rel)
    }
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Reference Gaussian elimination with full pivoting.
    fn gauss_full_pivot(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Vec<Complex64> {
        let n = b.len();
        let mut cols: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, 0.0);
            for i in k..n {
                for j in k..n {
                    if a[i][j].norm() > best {
                        best = a[i][j].norm();
                        pi = i;
                        pj = j;
                    }
                }
            }
            a.swap(k, pi);
            b.swap(k, pi);
            for row in a.iter_mut() {
                row.swap(k, pj);
            }
            cols.swap(k, pj);
            for i in k + 1..n {
                let l = a[i][k] / a[k][k];
                for j in k..n {
                    let t = a[k][j];
                    a[i][j] -= l * t;
                }
                let t = b[k];
                b[i] -= l * t;
            }
        }
        let mut y = vec![C0; n];
        for i in (0..n).rev() {
            let s: Complex64 = (i + 1..n).map(|j| a[i][j] * y[j]).sum();
            y[i] = (b[i] - s) / a[i][i];
        }
        let mut x = vec![C0; n];
        for (k, &col) in cols.iter().enumerate() {
            x[col] = y[k];
        }
        x
    }

    /// 3D grid Laplacian plus a few hub vertices tied to many cells and a
    /// branch-style row with a zero diagonal.
    fn grid_with_hubs(nx: usize, ny: usize, nz: usize) -> CsrMatrix {
        let cells = nx * ny * nz;
        let hubs = 2;
        let n = cells + hubs + 1;
        let id = |x: usize, y: usize, z: usize| (x * ny + y) * nz + z;
        let mut t = TripletBuilder::new(n);
        let couple = |t: &mut TripletBuilder, a: usize, b: usize, g: Complex64| {
            t.add(a, a, g);
            t.add(b, b, g);
            t.add(a, b, -g);
            t.add(b, a, -g);
        };
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let g = Complex64::new(1.0 + 0.01 * z as f64, 1e-3 * x as f64);
                    if x + 1 < nx {
                        couple(&mut t, id(x, y, z), id(x + 1, y, z), g);
                    }
                    if y + 1 < ny {
                        couple(&mut t, id(x, y, z), id(x, y + 1, z), g);
                    }
                    if z + 1 < nz {
                        couple(&mut t, id(x, y, z), id(x, y, z + 1), g);
                    }
                }
            }
        }
        // Hub 0 covers the whole top layer, hub 1 a strip.
        for x in 0..nx {
            for y in 0..ny {
                couple(&mut t, cells, id(x, y, 0), c(5.0));
                if y == 0 {
                    couple(&mut t, cells + 1, id(x, y, nz - 1), c(3.0));
                }
            }
        }
        // Hub 0 to ground.
        t.add(cells, cells, c(0.5));
        // Voltage-source style branch between hub 1 and ground.
        let br = cells + 2;
        t.add(cells + 1, br, c(1.0));
        t.add(br, cells + 1, c(1.0));
        t.build()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let mut t = TripletBuilder::new(2);
        t.add(0, 0, c(1.0));
        t.add(0, 0, c(2.0));
        t.add(1, 0, c(-1.0));
        let m = t.build();
        assert_eq!(m.get(0, 0), c(3.0));
        assert_eq!(m.get(1, 0), c(-1.0));
        assert_eq!(m.get(0, 1), C0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn dense_lu_matches_reference() {
        let a = vec![
            vec![c(0.0), c(2.0), Complex64::new(1.0, 1.0)],
            vec![c(1.0), c(-1.0), c(0.0)],
            vec![Complex64::new(0.0, 3.0), c(1.0), c(4.0)],
        ];
        let b = vec![c(1.0), Complex64::new(0.0, 2.0), c(-1.0)];
        let lu = DenseLu::factor(3, a.iter().flatten().copied().collect()).unwrap();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let r = gauss_full_pivot(a, b);
        for (xi, ri) in x.iter().zip(&r) {
            assert!((xi - ri).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_dense_reports_position() {
        let a = vec![c(1.0), c(0.0), c(0.0), c(0.0)];
        assert_eq!(
            DenseLu::factor(2, a).unwrap_err(),
            ZeroPivot { position: 1 }
        );
    }

    #[test]
    fn bordered_band_matches_dense_reference() {
        let a = grid_with_hubs(9, 7, 5);
        assert!(a.dim() > DENSE_LIMIT);
        let n = a.dim();
        let b: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new((i % 7) as f64 - 3.0, (i % 3) as f64))
            .collect();
        let f = Factorization::new(&a).unwrap();
        assert!(matches!(f, Factorization::Bordered(ref lu) if lu.schur.is_some()));
        let (x, rel) = f.solve_refined(&a, &b, 1e-12);
        assert!(rel < 1e-12, "residual {rel}");
        let reference = gauss_full_pivot(a.to_dense(), b);
        let scale = norm(&reference);
        let err: Vec<Complex64> = x.iter().zip(&reference).map(|(p, q)| p - q).collect();
        assert!(norm(&err) / scale < 1e-10);
    }

    #[test]
    fn rcm_visits_every_vertex_once() {
        let a = grid_with_hubs(4, 3, 2);
        let adj = a.adjacency();
        let order = reverse_cuthill_mckee(&adj, &vec![true; a.dim()]);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..a.dim()).collect::<Vec<_>>());
    }

    #[test]
    fn rcm_keeps_grid_bandwidth_near_cross_section() {
        let (nx, ny, nz) = (20, 6, 4);
        let mut t = TripletBuilder::new(nx * ny * nz);
        let id = |x: usize, y: usize, z: usize| (x * ny + y) * nz + z;
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    t.add(id(x, y, z), id(x, y, z), c(6.0));
                    for (dx, dy, dz) in [(1, 0, 0), (0, 1, 0), (0, 0, 1)] {
                        let (x2, y2, z2) = (x + dx, y + dy, z + dz);
                        if x2 < nx && y2 < ny && z2 < nz {
                            t.add(id(x, y, z), id(x2, y2, z2), c(-1.0));
                            t.add(id(x2, y2, z2), id(x, y, z), c(-1.0));
                        }
                    }
                }
            }
        }
        let a = t.build();
        let order = reverse_cuthill_mckee(&a.adjacency(), &vec![true; a.dim()]);
        let mut pos = vec![0; a.dim()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mut bw = 0;
        for i in 0..a.dim() {
            for (j, _) in a.row(i) {
                bw = bw.max(pos[i].abs_diff(pos[j]));
            }
        }
        assert!(bw <= 2 * ny * nz, "bandwidth {bw}");
    }
}
