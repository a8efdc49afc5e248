//! Dense complex kernels shared by the state, Schmidt and envariance code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Amplitudes below this magnitude do not count as "first nonzero" entries
/// for phase conventions and ordering.
pub const SIGNIFICANT: f64 = 1e-10;

/// Reshapes a flat amplitude vector into the `left x right` matrix of a
/// bipartition, `m[(i, j)] = amps[left_off[i] + right_off[j]]`.
pub fn bipartite_matrix(amps: &[C64], left_off: &[usize], right_off: &[usize]) -> DMatrix<C64> {
    DMatrix::from_fn(left_off.len(), right_off.len(), |i, j| amps[left_off[i] + right_off[j]])
}

fn density(m: &DMatrix<C64>) -> f64 {
    let nnz = m.iter().filter(|z| **z != C64::new(0.0, 0.0)).count();
    nnz as f64 / (m.len().max(1)) as f64
}

/// `a * b`, skipping exact zeros of `a` when it is sparse.
pub fn mul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    if density(a) > 0.25 {
        return a * b;
    }
    let mut out = DMatrix::zeros(a.nrows(), b.ncols());
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            let x = a[(i, k)];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..b.ncols() {
                out[(i, j)] += x * b[(k, j)];
            }
        }
    }
    out
}

/// `m m^†`, the reduced operator of the row factor.
pub fn gram_rows(m: &DMatrix<C64>) -> DMatrix<C64> {
    mul(m, &m.adjoint())
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() == 0.0));
    let mut vals: Vec<f64> = if diagonal {
        (0..n).map(|i| m[(i, i)].re).collect()
    } else {
        m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
    };
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Trace distance `½‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    0.5 * hermitian_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Largest entrywise deviation of `m m^†` from the identity.
pub fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    let p = m * m.adjoint();
    let mut dev: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - target).norm());
        }
    }
    dev
}

/// Index of the first entry with magnitude above [`SIGNIFICANT`].
pub fn first_significant(v: &DVector<C64>) -> Option<usize> {
    v.iter().position(|z| z.norm() > SIGNIFICANT)
}

/// Unit phase that makes the first significant entry real and positive when
/// the vector is multiplied by its conjugate.
pub fn leading_phase(v: &DVector<C64>) -> C64 {
    match first_significant(v) {
        Some(i) => v[i] / v[i].norm(),
        None => C64::new(1.0, 0.0),
    }
}

/// Checks that `basis` is an orthonormal basis of a `dim`-dimensional space.
pub fn check_orthonormal_basis(basis: &[DVector<C64>], dim: usize, tol: f64) -> Result<(), String> {
    if basis.len() != dim {
        return Err(format!("{} vectors for a {dim}-dimensional factor", basis.len()));
    }
    for (i, v) in basis.iter().enumerate() {
        if v.len() != dim {
            return Err(format!("vector {i} has length {}, expected {dim}", v.len()));
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let ip = basis[i].dotc(&basis[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            if (ip - target).norm() > tol {
                return Err(format!("<v{i}|v{j}> = {ip}"));
            }
        }
    }
    Ok(())
}

/// Extends an orthonormal set to an orthonormal basis of `C^dim` by
/// Gram–Schmidt over the standard basis vectors.
pub fn complete_basis(vectors: &[DVector<C64>], dim: usize) -> Vec<DVector<C64>> {
    let mut basis: Vec<DVector<C64>> = vectors.to_vec();
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w = DVector::<C64>::zeros(dim);
        w[e] = C64::new(1.0, 0.0);
        // two passes keep the completion orthogonal to working precision
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w -= b * c;
            }
        }
        let n = w.norm();
        if n > 1e-8 {
            basis.push(w / C64::new(n, 0.0));
        }
    }
    basis
}

/// Unitary `U` on `C^dim` with `U from[k] = to[k]` for each k. Both lists
/// must be orthonormal and of equal length; the orthogonal complements are
/// matched by their Gram–Schmidt completions.
pub fn unitary_mapping(from: &[DVector<C64>], to: &[DVector<C64>], dim: usize) -> DMatrix<C64> {
    let f = complete_basis(from, dim);
    let t = complete_basis(to, dim);
    let mut u = DMatrix::<C64>::zeros(dim, dim);
    for (fk, tk) in f.iter().zip(t.iter()) {
        u += tk * fk.adjoint();
    }
    u
}

/// One term `σ |l⟩|r⟩` of a singular value (Schmidt) decomposition
/// `m = Σ σ l r^T`.
pub struct SvdTerm {
    pub sigma: f64,
    pub left: DVector<C64>,
    pub right: DVector<C64>,
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Rows and columns of each connected block of the nonzero pattern of `m`.
fn blocks(m: &DMatrix<C64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (r, c) = m.shape();
    let mut sets = DisjointSets((0..r + c).collect());
    let mut touched = vec![false; r + c];
    for j in 0..c {
        for i in 0..r {
            if m[(i, j)] != C64::new(0.0, 0.0) {
                sets.union(i, r + j);
                touched[i] = true;
                touched[r + j] = true;
            }
        }
    }
    let mut slot: Vec<Option<usize>> = vec![None; r + c];
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for node in 0..r + c {
        if !touched[node] {
            continue;
        }
        let root = sets.find(node);
        let g = *slot[root].get_or_insert_with(|| {
            groups.push((Vec::new(), Vec::new()));
            groups.len() - 1
        });
        if node < r {
            groups[g].0.push(node);
        } else {
            groups[g].1.push(node - r);
        }
    }
    groups
}

/// Singular value decomposition of `m` as a list of terms with `σ > floor`.
///
/// The nonzero pattern is split into independent blocks first, so direct
/// sums (record states, fine-grained branches) cost one small SVD per block.
/// Terms are returned in no particular order.
pub fn block_svd(m: &DMatrix<C64>, floor: f64) -> Vec<SvdTerm> {
    let (r, c) = m.shape();
    let mut terms = Vec::new();
    for (rows, cols) in blocks(m) {
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
        if rows.len() == 1 || cols.len() == 1 {
            let sigma = sub.norm();
            if sigma <= floor {
                continue;
            }
            let mut left = DVector::zeros(r);
            let mut right = DVector::zeros(c);
            if rows.len() == 1 {
                left[rows[0]] = C64::new(1.0, 0.0);
                for (j, &col) in cols.iter().enumerate() {
                    right[col] = sub[(0, j)] / sigma;
                }
            } else {
                right[cols[0]] = C64::new(1.0, 0.0);
                for (i, &row) in rows.iter().enumerate() {
                    left[row] = sub[(i, 0)] / sigma;
                }
            }
            terms.push(SvdTerm { sigma, left, right });
            continue;
        }
        for (sigma, l, rv) in jacobi_svd(&sub) {
            if sigma <= floor {
                continue;
            }
            let mut left = DVector::zeros(r);
            let mut right = DVector::zeros(c);
            for (i, &row) in rows.iter().enumerate() {
                left[row] = l[i];
            }
            for (j, &col) in cols.iter().enumerate() {
                right[col] = rv[j];
            }
            terms.push(SvdTerm { sigma, left, right });
        }
    }
    terms
}

/// Columns of `b` orthogonalised in place by one-sided (Hestenes) Jacobi
/// rotations; the same rotations are accumulated into `v` when given.
///
/// nalgebra's bidiagonal SVD loses the factorisation for a small fraction
/// of complex rank-deficient inputs, so complex SVDs go through here.
fn hestenes(b: &mut DMatrix<C64>, mut v: Option<&mut DMatrix<C64>>) {
    let n = b.ncols();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = b.column(p).norm_squared();
                let beta = b.column(q).norm_squared();
                let gamma = b.column(p).dotc(&b.column(q));
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g < 1e-300 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(b, p, q, c, s, phase);
                if let Some(v) = v.as_deref_mut() {
                    rotate(v, p, q, c, s, phase);
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

/// `(x_p, x_q) ← (c x_p − s e^{−iφ} x_q, s x_p + c e^{−iφ} x_q)`.
fn rotate(m: &mut DMatrix<C64>, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let back = phase.conj();
    for i in 0..m.nrows() {
        let (xp, xq) = (m[(i, p)], m[(i, q)] * back);
        m[(i, p)] = xp * c - xq * s;
        m[(i, q)] = xp * s + xq * c;
    }
}

/// Terms `(σ, l, r)` with `m = Σ σ l r^T`, unordered, including `σ = 0`.
fn jacobi_svd(m: &DMatrix<C64>) -> Vec<(f64, DVector<C64>, DVector<C64>)> {
    let wide = m.nrows() < m.ncols();
    let mut b = if wide { m.adjoint() } else { m.clone() };
    let n = b.ncols();
    let mut v = DMatrix::<C64>::identity(n, n);
    hestenes(&mut b, Some(&mut v));
    (0..n)
        .map(|k| {
            let sigma = b.column(k).norm();
            let u: DVector<C64> = if sigma > 0.0 { b.column(k) / C64::new(sigma, 0.0) } else { b.column(k).into() };
            let w: DVector<C64> = v.column(k).into();
            // b = u σ, m' = b v^†; for a wide input m = v σ u^†
            if wide {
                (sigma, w, u.map(|z| z.conj()))
            } else {
                (sigma, u, w.map(|z| z.conj()))
            }
        })
        .collect()
}

fn jacobi_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let mut b = if m.nrows() < m.ncols() { m.adjoint() } else { m.clone() };
    hestenes(&mut b, None);
    (0..b.ncols()).map(|k| b.column(k).norm()).collect()
}

/// Squared singular values of `m` (the spectrum of either reduced operator),
/// descending, including values below any floor.
pub fn schmidt_spectrum(m: &DMatrix<C64>) -> Vec<f64> {
    let mut out = Vec::new();
    for (rows, cols) in blocks(m) {
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
        if rows.len() == 1 || cols.len() == 1 {
            out.push(sub.norm_squared());
        } else {
            out.extend(jacobi_singular_values(&sub).iter().map(|s| s * s));
        }
    }
    out.sort_by(|a, b| b.total_cmp(a));
    out
}
