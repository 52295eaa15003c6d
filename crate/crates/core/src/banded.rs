//! Banded Gaussian elimination with partial pivoting.

use num_complex::Complex64;

/// Square matrix with `kl` sub-diagonals and `ku` super-diagonals, stored
/// row-wise with room for the fill-in produced by row interchanges.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![Complex64::new(0.0, 0.0); n * width] }
    }

    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i}, {j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    pub fn set(&mut self, i: usize, j: usize, v: impl Into<Complex64>) {
        let k = self.index(i, j);
        self.data[k] = v.into();
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[self.index(i, j)]
    }

    /// Solves A x = b in place; `None` when a pivot column is entirely zero.
    pub fn solve(mut self, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let pivot = (k..=last_row).max_by(|&p, &q| self.get(p, k).norm().total_cmp(&self.get(q, k).norm()))?;
            let pv = self.get(pivot, k);
            if pv.norm() == 0.0 {
                return None;
            }
            let last_col = (k + reach).min(n - 1);
            if pivot != k {
                for j in k..=last_col {
                    let (a, c) = (self.index(k, j), self.index(pivot, j));
                    self.data.swap(a, c);
                }
                b.swap(k, pivot);
            }
            for i in k + 1..=last_row {
                let factor = self.get(i, k) / pv;
                if factor.norm() == 0.0 {
                    continue;
                }
                for j in k + 1..=last_col {
                    let sub = factor * self.get(k, j);
                    let at = self.index(i, j);
                    self.data[at] -= sub;
                }
                let sub = factor * b[k];
                b[i] -= sub;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                acc -= self.get(i, j) * b[j];
            }
            b[i] = acc / self.get(i, i);
        }
        Some(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_with_pivoting() {
        // zero on the first diagonal entry forces a row swap
        let mut m = BandMatrix::new(3, 1, 1);
        m.set(0, 0, 0.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 2.0);
        m.set(1, 1, 1.0);
        m.set(1, 2, 1.0);
        m.set(2, 1, 1.0);
        m.set(2, 2, 3.0);
        let x = [1.0, -2.0, 0.5];
        let b = vec![
            Complex64::from(x[1]),
            Complex64::from(2.0 * x[0] + x[1] + x[2]),
            Complex64::from(x[1] + 3.0 * x[2]),
        ];
        let got = m.solve(b).unwrap();
        for (g, w) in got.iter().zip(x) {
            assert!((g - w).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut m = BandMatrix::new(2, 1, 1);
        m.set(0, 0, 1.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 1.0);
        assert!(m.solve(vec![Complex64::from(1.0); 2]).is_none());
    }
}
