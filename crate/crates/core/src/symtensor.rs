//! Packed symmetric matrix and rank-3 array storage.
//!
//! One canonical slot per unordered index tuple, so symmetry of the stored
//! object is structural rather than a numerical property to maintain.

/// Symmetric n x n matrix stored as the upper triangle in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        debug_assert!(hi < self.n);
        // Upper-triangle row-major: row lo starts after lo rows of
        // shrinking length.
        lo * self.n - lo * (lo + 1) / 2 + lo + (hi - lo)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    /// Expand into a dense row-major matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                out[i * self.n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }
}

/// Totally symmetric n x n x n array stored with one slot per sorted triple.
#[derive(Debug, Clone, PartialEq)]
pub struct SymCube {
    n: usize,
    data: Vec<f64>,
}

impl SymCube {
    pub fn zeros(n: usize) -> Self {
        SymCube {
            n,
            data: vec![0.0; n * (n + 1) * (n + 2) / 6],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        // Sort the triple: a <= b <= c.
        let (mut a, mut b, mut c) = (i, j, k);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        if b > c {
            std::mem::swap(&mut b, &mut c);
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        debug_assert!(c < self.n);
        // Tetrahedral layout: triples ordered by c, then b, then a.
        c * (c + 1) * (c + 2) / 6 + b * (b + 1) / 2 + a
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let t = self.idx(i, j, k);
        self.data[t] = value;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let t = self.idx(i, j, k);
        self.data[t] += value;
    }

    /// Expand into a dense row-major cube (index i*n*n + j*n + k).
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    out[(i * self.n + j) * self.n + k] = self.get(i, j, k);
                }
            }
        }
        out
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }
}
