use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Sweep budget is `MAX_SWEEPS_PER_DIM2 * r * r`.
pub const MAX_SWEEPS_PER_DIM2: usize = 30;

/// `H = U · diag(sigma) · V^H` with `sigma` sorted descending.
///
/// Each column of `V` is phase-normalized so that its largest-magnitude
/// entry is real and positive; `U` carries the matching phase.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let r = self.rank();
        let mut out = ComplexMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..r {
                    acc += self.u[(i, k)] * self.sigma[k] * self.v[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

#[inline]
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x.conj() * y)
}

#[inline]
fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies the unitary 2x2 rotation `[[c, s·e^{iφ}], [−s·e^{−iφ}, c]]`
/// to the column pair `(p, q)`.
#[inline]
fn rotate(p: &mut [Complex64], q: &mut [Complex64], c: f64, s: f64, phase: Complex64) {
    let sp = phase * s;
    let sp_conj = phase.conj() * s;
    for (x, y) in p.iter_mut().zip(q.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = a * c - sp_conj * b;
        *y = sp * a + b * c;
    }
}

fn pair_mut<T>(cols: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = cols.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Singular value decomposition of a square complex matrix by one-sided
/// (Hestenes) Jacobi rotations.
///
/// Column pairs of a working copy `A ← H·V` are rotated until every pair is
/// orthogonal to machine precision; the column norms are then the singular
/// values and the normalized columns are `U`. Fails with
/// [`Error::Convergence`] if the sweep budget runs out or the factored
/// product misses `h` by more than `tol·‖h‖_F`.
pub fn svd(h: &ComplexMatrix, tol: f64) -> Result<SvdFactors> {
    let r = h.rows();
    if r != h.cols() {
        return Err(Error::shape(format!(
            "SVD needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    if r == 0 {
        return Err(Error::shape("SVD of an empty matrix"));
    }

    let mut a: Vec<Vec<Complex64>> = (0..r).map(|j| h.column(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..r)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); r];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    let threshold = f64::EPSILON * r as f64;
    let max_sweeps = MAX_SWEEPS_PER_DIM2 * r * r;
    let mut converged = r == 1;
    let mut sweeps = 0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..r - 1 {
            for q in p + 1..r {
                let alpha = norm_sqr(&a[p]);
                let beta = norm_sqr(&a[q]);
                let gamma = dot(&a[p], &a[q]);
                let g = gamma.norm();
                if g == 0.0 || g <= threshold * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = gamma / g;
                let (ap, aq) = pair_mut(&mut a, p, q);
                rotate(ap, aq, c, s, phase);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s, phase);
            }
        }
        converged = !rotated;
    }

    let norms: Vec<f64> = a.iter().map(|col| norm_sqr(col).sqrt()).collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let sigma_max = sigma[0];
    let null_floor = sigma_max * f64::EPSILON * r as f64;

    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(r);
    let mut v_cols: Vec<Vec<Complex64>> = Vec::with_capacity(r);
    let mut null_slots = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if sigma[slot] > null_floor && sigma[slot] > 0.0 {
            u_cols.push(a[j].iter().map(|z| z / sigma[slot]).collect());
        } else {
            u_cols.push(Vec::new());
            null_slots.push(slot);
        }
        v_cols.push(std::mem::take(&mut v[j]));
    }
    complete_basis(&mut u_cols, &null_slots, r);

    for (uc, vc) in u_cols.iter_mut().zip(v_cols.iter_mut()) {
        let (pivot, _) = vc
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bm), (i, z)| {
                let m = z.norm();
                if m > bm {
                    (i, m)
                } else {
                    (bi, bm)
                }
            });
        let mag = vc[pivot].norm();
        if mag > 0.0 {
            let unphase = (vc[pivot] / mag).conj();
            vc.iter_mut().for_each(|z| *z *= unphase);
            uc.iter_mut().for_each(|z| *z *= unphase);
        }
    }

    let to_matrix = |cols: &[Vec<Complex64>]| {
        let mut m = ComplexMatrix::zeros(r, r);
        for (j, col) in cols.iter().enumerate() {
            for (i, &z) in col.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        m
    };
    let factors = SvdFactors {
        u: to_matrix(&u_cols),
        sigma,
        v: to_matrix(&v_cols),
    };

    let h_norm = h.frobenius_norm();
    let residual = factors
        .reconstruct()
        .sub(h)
        .expect("same shape")
        .frobenius_norm();
    let relative = if h_norm > 0.0 { residual / h_norm } else { residual };
    if !converged || residual > tol * h_norm {
        return Err(Error::Convergence {
            sweeps,
            residual: relative,
        });
    }
    Ok(factors)
}

/// Fills the empty columns listed in `slots` with unit vectors orthogonal
/// to every other column (modified Gram-Schmidt with one reorthogonalization
/// pass over the canonical basis).
fn complete_basis(cols: &mut [Vec<Complex64>], slots: &[usize], r: usize) {
    let mut candidate = 0;
    for &slot in slots {
        loop {
            assert!(candidate < r, "canonical basis exhausted while completing U");
            let mut e = vec![Complex64::new(0.0, 0.0); r];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for col in cols.iter().filter(|c| !c.is_empty()) {
                    let proj = dot(col, &e);
                    for (x, y) in e.iter_mut().zip(col) {
                        *x -= proj * y;
                    }
                }
            }
            let n = norm_sqr(&e).sqrt();
            if n > 0.5 {
                e.iter_mut().for_each(|z| *z /= n);
                cols[slot] = e;
                break;
            }
        }
    }
}
