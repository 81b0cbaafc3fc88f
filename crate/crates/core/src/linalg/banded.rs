//! Banded Hermitian storage with an LDL^* inertia count and a partially
//! pivoted banded LU for shift-invert solves.

use super::CMat;
use ndarray::Array2;
use num_complex::Complex64;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Hermitian matrix with half-bandwidth `hb`, lower band stored:
/// `data[(d, j)] = A(j + d, j)` for `d = 0..=hb`, `j + d < n`.
#[derive(Debug, Clone)]
pub struct HermitianBanded {
    pub n: usize,
    pub hb: usize,
    pub data: Array2<Complex64>,
}

impl HermitianBanded {
    pub fn zeros(n: usize, hb: usize) -> Self {
        HermitianBanded {
            n,
            hb,
            data: Array2::from_elem((hb + 1, n), C_ZERO),
        }
    }

    pub fn from_dense(a: &CMat, hb: usize) -> Self {
        let n = a.nrows();
        let mut b = Self::zeros(n, hb);
        for j in 0..n {
            for d in 0..=hb.min(n - 1 - j) {
                b.data[(d, j)] = a[(j + d, j)];
            }
        }
        b
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i >= j {
            if i - j <= self.hb {
                self.data[(i - j, j)]
            } else {
                C_ZERO
            }
        } else if j - i <= self.hb {
            self.data[(j - i, i)].conj()
        } else {
            C_ZERO
        }
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: Complex64) {
        if i >= j {
            assert!(i - j <= self.hb, "entry outside band");
            self.data[(i - j, j)] = v;
        } else {
            assert!(j - i <= self.hb, "entry outside band");
            self.data[(j - i, i)] = v.conj();
        }
    }

    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        let hb = self.hb;
        for v in y.iter_mut() {
            *v = C_ZERO;
        }
        for j in 0..n {
            let xj = x[j];
            y[j] += self.data[(0, j)] * xj;
            let dmax = hb.min(n - 1 - j);
            for d in 1..=dmax {
                let a = self.data[(d, j)];
                y[j + d] += a * xj;
                y[j] += a.conj() * x[j + d];
            }
        }
    }

    /// Number of eigenvalues strictly below `shift`, via the inertia of the
    /// LDL^* factorization of `A - shift I`. Fails when a pivot collapses
    /// (shift too close to an eigenvalue); callers retry with a nudged shift.
    pub fn inertia_below(&self, shift: f64) -> Result<usize, String> {
        let n = self.n;
        let hb = self.hb;
        let mut l = Array2::from_elem((hb + 1, n), C_ZERO);
        let mut d = vec![0.0f64; n];
        let scale: f64 = (0..n)
            .map(|j| self.data[(0, j)].re.abs())
            .fold(0.0, f64::max)
            .max(shift.abs())
            .max(1e-300);
        let mut negatives = 0usize;
        for j in 0..n {
            let mut djj = self.data[(0, j)].re - shift;
            let kmin = j.saturating_sub(hb);
            for k in kmin..j {
                let ljk = l[(j - k, k)];
                djj -= ljk.norm_sqr() * d[k];
            }
            if djj.abs() < 1e-13 * scale {
                return Err(format!(
                    "pivot {djj:.3e} collapsed at column {j} for shift {shift}"
                ));
            }
            d[j] = djj;
            if djj < 0.0 {
                negatives += 1;
            }
            let imax = (j + hb).min(n - 1);
            for i in (j + 1)..=imax {
                let mut acc = self.get(i, j);
                let kmin_i = i.saturating_sub(hb).max(kmin);
                for k in kmin_i..j {
                    let lik = l[(i - k, k)];
                    let ljk = l[(j - k, k)];
                    acc -= lik * ljk.conj() * d[k];
                }
                l[(i - j, j)] = acc / djj;
            }
        }
        Ok(negatives)
    }
}

/// Partially pivoted LU of a banded matrix (LAPACK gbtrf layout).
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Array2<Complex64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factor `A - shift I` where `A` is Hermitian banded.
    pub fn factor_shifted(a: &HermitianBanded, shift: Complex64) -> Self {
        let n = a.n;
        let kl = a.hb;
        let ku = a.hb;
        let ldab = 2 * kl + ku + 1;
        let mut ab = Array2::from_elem((ldab, n), C_ZERO);
        for j in 0..n {
            let ilo = j.saturating_sub(ku);
            let ihi = (j + kl).min(n - 1);
            for i in ilo..=ihi {
                let mut v = a.get(i, j);
                if i == j {
                    v -= shift;
                }
                ab[(kl + ku + i - j, j)] = v;
            }
        }
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0usize;
            let mut best = ab[(kl + ku, j)].norm();
            for p in 1..=km {
                let m = ab[(kl + ku + p, j)].norm();
                if m > best {
                    best = m;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                continue;
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let r1 = kl + ku + j - c;
                    let r2 = r1 + jp;
                    let t = ab[(r1, c)];
                    ab[(r1, c)] = ab[(r2, c)];
                    ab[(r2, c)] = t;
                }
            }
            let piv = ab[(kl + ku, j)];
            for p in 1..=km {
                let v = ab[(kl + ku + p, j)] / piv;
                ab[(kl + ku + p, j)] = v;
            }
            for c in (j + 1)..=ju {
                let alpha = ab[(kl + ku + j - c, c)];
                if alpha != C_ZERO {
                    for p in 1..=km {
                        let lv = ab[(kl + ku + p, j)];
                        ab[(kl + ku + j + p - c, c)] -= lv * alpha;
                    }
                }
            }
        }
        BandedLu { n, kl, ku, ab, ipiv }
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != C_ZERO {
                let km = kl.min(n - 1 - j);
                for q in 1..=km {
                    let lv = self.ab[(kl + ku + q, j)];
                    b[j + q] -= lv * bj;
                }
            }
        }
        let bw = ku + kl;
        for j in (0..n).rev() {
            let piv = self.ab[(kl + ku, j)];
            b[j] /= piv;
            let bj = b[j];
            let ilo = j.saturating_sub(bw);
            for i in ilo..j {
                b[i] -= self.ab[(kl + ku + i - j, j)] * bj;
            }
        }
    }
}
