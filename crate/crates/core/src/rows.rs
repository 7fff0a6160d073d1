use nalgebra::DMatrix;

/// Dense row-major copy of a matrix for row-oriented inner loops.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Rows {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl Rows {
    pub fn from_matrix(x: &DMatrix<f64>) -> Self {
        let (n, d) = x.shape();
        let mut data = Vec::with_capacity(n * d);
        for i in 0..n {
            data.extend(x.row(i).iter());
        }
        Self { data, n, d }
    }

    pub fn from_vec(data: Vec<f64>, n: usize, d: usize) -> Self {
        debug_assert_eq!(data.len(), n * d);
        Self { data, n, d }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.d, &self.data)
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
