//! Multifrontal sparse LU for matrices with a (nearly) symmetric pattern.
//!
//! The fill-reducing order and the supernode tree come from a symbolic
//! Cholesky analysis of `A + A^T` with approximate minimum degree. Each front
//! is factored densely with partial pivoting restricted to its fully summed
//! rows, so the factor keeps the Cholesky structure. Pivot quality is not
//! guaranteed by this scheme; callers check the backward error.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::{lu_in_place, lu_in_place_scratch};
use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::{SparseColMat, SymbolicSparseColMatRef};
use faer::{Accum, Mat, Par, Side};

use crate::error::{Error, Result};

struct Supernode {
    begin: usize,
    end: usize,
    /// Off-diagonal row indices (permuted numbering).
    rows: Vec<usize>,
    /// `(nc + nr) x nc`: `L11 \ U11` on top, `L21` below.
    lower: Mat<f64>,
    /// `nc x nr`: `U12`.
    upper: Mat<f64>,
    /// Row `i` of the pivoted block is row `perm[i]` of the assembled one.
    perm: Vec<usize>,
}

/// `P_r (Q A Q^T) = L U` with `Q` the fill-reducing order and `P_r` a
/// row permutation acting within supernodes.
pub struct MultifrontalLu {
    n: usize,
    /// `fwd[i]` is the original index of permuted index `i`.
    fwd: Vec<usize>,
    nodes: Vec<Supernode>,
}

fn internal(msg: impl Into<String>) -> Error {
    Error::Internal(msg.into())
}

/// Pattern of `A + A^T` plus the diagonal, column by column.
fn symmetric_pattern(a: &SparseColMat<usize, f64>) -> (Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let m = a.as_ref();
    let (cp, ri) = (m.col_ptr(), m.row_idx());
    let mut count = vec![1usize; n];
    for j in 0..n {
        for &i in &ri[cp[j]..cp[j + 1]] {
            if i != j {
                count[j] += 1;
                count[i] += 1;
            }
        }
    }
    let mut ptr = vec![0usize; n + 1];
    for j in 0..n {
        ptr[j + 1] = ptr[j] + count[j];
    }
    let mut idx = vec![0usize; ptr[n]];
    let mut fill = ptr[..n].to_vec();
    for j in 0..n {
        idx[fill[j]] = j;
        fill[j] += 1;
        for &i in &ri[cp[j]..cp[j + 1]] {
            if i != j {
                idx[fill[j]] = i;
                fill[j] += 1;
                idx[fill[i]] = j;
                fill[i] += 1;
            }
        }
    }
    // Sort and deduplicate each column, then compact.
    let mut out_ptr = vec![0usize; n + 1];
    let mut w = 0;
    for j in 0..n {
        let (s, e) = (ptr[j], ptr[j + 1]);
        idx[s..e].sort_unstable();
        let start = w;
        let mut last = usize::MAX;
        for t in s..e {
            let v = idx[t];
            if v != last {
                idx[w] = v;
                w += 1;
                last = v;
            }
        }
        out_ptr[j] = start;
        out_ptr[j + 1] = w;
    }
    idx.truncate(w);
    (out_ptr, idx)
}

/// Peak bytes of the numeric factorization, replaying its allocation
/// order: finished factors, pending contribution blocks and the current
/// front, on top of the bucketed matrix entries.
fn factor_bytes(begin: &[usize], end: &[usize], patterns: &[Vec<usize>], nnz: usize) -> u64 {
    let n = end.last().copied().unwrap_or(0);
    let mut owner = vec![0usize; n];
    for (s, (b, e)) in begin.iter().zip(end).enumerate() {
        owner[*b..*e].fill(s);
    }
    let mut waiting = vec![0u64; begin.len()];
    let (mut factors, mut pending, mut peak) = (0u64, 0u64, 0u64);
    for (s, ((b, e), rows)) in begin.iter().zip(end).zip(patterns).enumerate() {
        let (nc, nr) = ((e - b) as u64, rows.len() as u64);
        let front = (nc + nr) * (nc + nr);
        peak = peak.max(factors + pending + front + nr * nr);
        pending -= waiting[s];
        factors += nc * (nc + 2 * nr);
        if let Some(&r) = rows.first() {
            waiting[owner[r]] += nr * nr;
            pending += nr * nr;
        }
    }
    8 * peak + 16 * nnz as u64
}

/// `MemAvailable` from `/proc/meminfo`, if the platform provides it.
pub(crate) fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn check_memory(begin: &[usize], end: &[usize], patterns: &[Vec<usize>], nnz: usize) -> Result<()> {
    let required = factor_bytes(begin, end, patterns, nnz);
    match available_memory() {
        Some(available) if required > available => Err(Error::InsufficientMemory { required, available }),
        _ => Ok(()),
    }
}

impl MultifrontalLu {
    pub fn factorize(a: &SparseColMat<usize, f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(internal("matrix is not square"));
        }
        if n == 0 {
            return Ok(Self { n, fwd: Vec::new(), nodes: Vec::new() });
        }
        let (ptr, idx) = symmetric_pattern(a);
        let pattern = SymbolicSparseColMatRef::new_checked(n, n, &ptr, None, &idx);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let symbolic = factorize_symbolic_cholesky(pattern, Side::Lower, SymmetricOrdering::Amd, params)
            .map_err(|e| internal(format!("symbolic analysis failed: {e:?}")))?;
        drop((ptr, idx));
        let (fwd, inv) = {
            let p = symbolic.perm().ok_or_else(|| internal("missing fill-reducing permutation"))?;
            let (f, i) = p.arrays();
            (f.to_vec(), i.to_vec())
        };
        // Column ranges and their off-diagonal row patterns, children first.
        let (begin, end, mut patterns): (Vec<usize>, Vec<usize>, Vec<Vec<usize>>) = match symbolic.raw() {
            SymbolicCholeskyRaw::Supernodal(sn) => {
                let ns = sn.n_supernodes();
                (
                    sn.supernode_begin()[..ns].to_vec(),
                    sn.supernode_end()[..ns].to_vec(),
                    (0..ns).map(|s| sn.supernode(s).pattern().to_vec()).collect(),
                )
            }
            SymbolicCholeskyRaw::Simplicial(sm) => {
                let (cp, ri) = (sm.col_ptr(), sm.row_idx());
                (
                    (0..n).collect(),
                    (1..=n).collect(),
                    (0..n).map(|j| ri[cp[j]..cp[j + 1]].iter().copied().filter(|&r| r > j).collect()).collect(),
                )
            }
        };
        drop(symbolic);
        let ns = begin.len();
        check_memory(&begin, &end, &patterns, a.compute_nnz())?;
        let mut owner = vec![0usize; n];
        for s in 0..ns {
            for c in begin[s]..end[s] {
                owner[c] = s;
            }
        }

        // Bucket the permuted entries by the supernode of min(row, col).
        let m = a.as_ref();
        let (cp, ri, val) = (m.col_ptr(), m.row_idx(), m.val());
        let mut bucket_ptr = vec![0usize; ns + 1];
        for j in 0..n {
            for &i in &ri[cp[j]..cp[j + 1]] {
                bucket_ptr[owner[inv[i].min(inv[j])] + 1] += 1;
            }
        }
        for s in 0..ns {
            bucket_ptr[s + 1] += bucket_ptr[s];
        }
        let mut entries = vec![(0u32, 0u32, 0.0f64); bucket_ptr[ns]];
        let mut fill = bucket_ptr[..ns].to_vec();
        for j in 0..n {
            for p in cp[j]..cp[j + 1] {
                let (pi, pj) = (inv[ri[p]], inv[j]);
                let s = owner[pi.min(pj)];
                entries[fill[s]] = (pi as u32, pj as u32, val[p]);
                fill[s] += 1;
            }
        }

        let mut pending: Vec<Vec<(Vec<usize>, Mat<f64>)>> = (0..ns).map(|_| Vec::new()).collect();
        let mut pos = vec![usize::MAX; n];
        let mut nodes = Vec::with_capacity(ns);
        for s in 0..ns {
            let (b, e) = (begin[s], end[s]);
            let nc = e - b;
            let rows = std::mem::take(&mut patterns[s]);
            let nr = rows.len();
            let mf = nc + nr;
            for (t, c) in (b..e).enumerate() {
                pos[c] = t;
            }
            for (t, &r) in rows.iter().enumerate() {
                pos[r] = nc + t;
            }
            let mut front = Mat::<f64>::zeros(mf, mf);
            for &(pi, pj, v) in &entries[bucket_ptr[s]..bucket_ptr[s + 1]] {
                let (a_, b_) = (pos[pi as usize], pos[pj as usize]);
                if a_ >= mf || b_ >= mf {
                    return Err(internal("entry outside the symbolic structure"));
                }
                front[(a_, b_)] += v;
            }
            for (crows, cb) in pending[s].drain(..) {
                let p: Vec<usize> = crows.iter().map(|r| pos[*r]).collect();
                for (cj, &pj) in p.iter().enumerate() {
                    for (ci, &pi) in p.iter().enumerate() {
                        front[(pi, pj)] += cb[(ci, cj)];
                    }
                }
            }
            let mut perm = vec![0usize; nc];
            {
                let (mut f11, mut f12, mut f21, mut f22) = front.as_mut().split_at_mut(nc, nc);
                let mut perm_inv = vec![0usize; nc];
                let mut buf = MemBuffer::new(lu_in_place_scratch::<usize, f64>(nc, nc, Par::Seq, Default::default()));
                let stack = MemStack::new(&mut buf);
                lu_in_place(f11.as_mut(), &mut perm, &mut perm_inv, Par::Seq, stack, Default::default());
                if nr > 0 {
                    let old = f12.to_owned();
                    for i in 0..nc {
                        for j in 0..nr {
                            f12[(i, j)] = old[(perm[i], j)];
                        }
                    }
                    solve_unit_lower_triangular_in_place(f11.as_ref(), f12.as_mut(), Par::Seq);
                    solve_lower_triangular_in_place(f11.as_ref().transpose(), f21.as_mut().transpose_mut(), Par::Seq);
                    matmul(f22.as_mut(), Accum::Add, f21.as_ref(), f12.as_ref(), -1.0, Par::Seq);
                }
            }
            let lower = front.as_ref().subcols(0, nc).to_owned();
            let upper = front.as_ref().submatrix(0, nc, nc, nr).to_owned();
            if nr > 0 {
                let cb = front.as_ref().submatrix(nc, nc, nr, nr).to_owned();
                let parent = owner[rows[0]];
                if parent <= s {
                    return Err(internal("supernode tree is not topologically ordered"));
                }
                pending[parent].push((rows.clone(), cb));
            }
            drop(front);
            nodes.push(Supernode { begin: b, end: e, rows, lower, upper, perm });
        }
        Ok(Self { n, fwd, nodes })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.fwd.iter().map(|&i| b[i]).collect();
        for s in &self.nodes {
            let nc = s.end - s.begin;
            let z: Vec<f64> = s.perm.iter().map(|&p| y[s.begin + p]).collect();
            let mut z = z;
            for j in 0..nc {
                let zj = z[j];
                if zj != 0.0 {
                    for i in j + 1..nc {
                        z[i] -= s.lower[(i, j)] * zj;
                    }
                }
            }
            for j in 0..nc {
                let zj = z[j];
                if zj != 0.0 {
                    for (t, &r) in s.rows.iter().enumerate() {
                        y[r] -= s.lower[(nc + t, j)] * zj;
                    }
                }
            }
            y[s.begin..s.end].copy_from_slice(&z);
        }
        for s in self.nodes.iter().rev() {
            let nc = s.end - s.begin;
            let mut z = y[s.begin..s.end].to_vec();
            for (t, &r) in s.rows.iter().enumerate() {
                let xr = y[r];
                if xr != 0.0 {
                    for i in 0..nc {
                        z[i] -= s.upper[(i, t)] * xr;
                    }
                }
            }
            for j in (0..nc).rev() {
                z[j] /= s.lower[(j, j)];
                let zj = z[j];
                for i in 0..j {
                    z[i] -= s.lower[(i, j)] * zj;
                }
            }
            y[s.begin..s.end].copy_from_slice(&z);
        }
        let mut x = vec![0.0; self.n];
        for (i, &f) in self.fwd.iter().enumerate() {
            x[f] = y[i];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.fwd.iter().map(|&i| b[i]).collect();
        // U^T w = b
        for s in &self.nodes {
            let nc = s.end - s.begin;
            let mut z = y[s.begin..s.end].to_vec();
            for j in 0..nc {
                let mut acc = z[j];
                for i in 0..j {
                    acc -= s.lower[(i, j)] * z[i];
                }
                z[j] = acc / s.lower[(j, j)];
            }
            for (t, &r) in s.rows.iter().enumerate() {
                let mut acc = 0.0;
                for i in 0..nc {
                    acc += s.upper[(i, t)] * z[i];
                }
                y[r] -= acc;
            }
            y[s.begin..s.end].copy_from_slice(&z);
        }
        // L^T v = w, then undo the row pivoting.
        for s in self.nodes.iter().rev() {
            let nc = s.end - s.begin;
            let mut z = y[s.begin..s.end].to_vec();
            for j in 0..nc {
                let mut acc = 0.0;
                for (t, &r) in s.rows.iter().enumerate() {
                    acc += s.lower[(nc + t, j)] * y[r];
                }
                z[j] -= acc;
            }
            for j in (0..nc).rev() {
                let zj = z[j];
                for i in 0..j {
                    z[i] -= s.lower[(j, i)] * zj;
                }
            }
            for (i, &p) in s.perm.iter().enumerate() {
                y[s.begin + p] = z[i];
            }
        }
        let mut x = vec![0.0; self.n];
        for (i, &f) in self.fwd.iter().enumerate() {
            x[f] = y[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::sparse::Triplet;
    use rand::{Rng, SeedableRng};

    fn random_fe_like(n: usize, seed: u64) -> (SparseColMat<usize, f64>, Vec<(usize, usize, f64)>) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0 + rng.gen::<f64>()));
            for _ in 0..if n > 1 { 3 } else { 0 } {
                let j = (i + rng.gen_range(1..n.min(12).max(2))) % n;
                t.push((i, j, rng.gen::<f64>() - 0.5));
                t.push((j, i, rng.gen::<f64>() - 0.5));
            }
        }
        let trip: Vec<_> = t.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        (SparseColMat::try_new_from_triplets(n, n, &trip).unwrap(), t)
    }

    fn apply(t: &[(usize, usize, f64)], x: &[f64], transpose: bool) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for &(r, c, v) in t {
            if transpose {
                y[c] += v * x[r];
            } else {
                y[r] += v * x[c];
            }
        }
        y
    }

    #[test]
    fn solves_match_products() {
        for (n, seed) in [(1, 1), (7, 2), (60, 3), (400, 4)] {
            let (a, t) = random_fe_like(n, seed);
            let lu = MultifrontalLu::factorize(&a).unwrap();
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b = apply(&t, &x, false);
            let y = lu.solve(&b);
            let bt = apply(&t, &x, true);
            let yt = lu.solve_transpose(&bt);
            for i in 0..n {
                assert!((y[i] - x[i]).abs() < 1e-10, "n={n} i={i}");
                assert!((yt[i] - x[i]).abs() < 1e-10, "transpose n={n} i={i}");
            }
        }
    }

    #[test]
    fn memory_estimate_counts_factors_and_pending_blocks() {
        // One dense node: the front itself is the peak.
        assert_eq!(factor_bytes(&[0], &[3], &[vec![]], 9), 8 * 9 + 16 * 9);
        // Two leaves feeding a root: the second front is built while the
        // first leaf's factor and contribution block are alive.
        let pats = vec![vec![2], vec![2], vec![]];
        let peak = (1 + 2) + 1 + 4 + 1;
        assert_eq!(factor_bytes(&[0, 1, 2], &[1, 2, 3], &pats, 0), 8 * peak);
    }

    #[test]
    fn zero_diagonal_needs_pivoting() {
        // [[0, 1], [1, 0]] with a coupled third unknown.
        let t = vec![(0, 1, 1.0), (1, 0, 1.0), (2, 2, 2.0), (0, 2, 0.5), (2, 0, 0.5)];
        let trip: Vec<_> = t.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
        let a = SparseColMat::try_new_from_triplets(3, 3, &trip).unwrap();
        let lu = MultifrontalLu::factorize(&a).unwrap();
        let x = [1.0, -2.0, 3.0];
        let y = lu.solve(&apply(&t, &x, false));
        for i in 0..3 {
            assert!((y[i] - x[i]).abs() < 1e-12);
        }
    }
}
