/// Dense row-major matrix, just enough for the encoder's forward and
/// backward passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · other`
    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let o = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in o.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · other`, accumulated into `out`.
    pub fn matmul_tn_into(&self, other: &Mat, out: &mut Mat) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!((out.rows, out.cols), (self.cols, other.cols));
        for k in 0..self.rows {
            let b = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, b) in out.row_mut(i).iter_mut().zip(b) {
                    *o += a * b;
                }
            }
        }
    }

    pub fn matmul_tn(&self, other: &Mat) -> Mat {
        let mut out = Mat::zeros(self.cols, other.cols);
        self.matmul_tn_into(other, &mut out);
        out
    }

    /// `self · otherᵀ`
    pub fn matmul_nt(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.cols);
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..other.rows {
                out.data[i * other.rows + j] = dot(a, other.row(j));
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Mat) {
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
    }

    pub fn add_row_vector(&mut self, v: &[f64]) {
        for i in 0..self.rows {
            self.row_mut(i).iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
    }

    /// Column sums accumulated into `out`.
    pub fn col_sums_into(&self, out: &mut [f64]) {
        for i in 0..self.rows {
            out.iter_mut().zip(self.row(i)).for_each(|(o, v)| *o += v);
        }
    }

    /// Columns `[start, start + width)` as a new matrix.
    pub fn col_block(&self, start: usize, width: usize) -> Mat {
        let mut out = Mat::zeros(self.rows, width);
        for i in 0..self.rows {
            out.row_mut(i)
                .copy_from_slice(&self.row(i)[start..start + width]);
        }
        out
    }

    pub fn set_col_block(&mut self, start: usize, block: &Mat) {
        for i in 0..self.rows {
            let w = block.cols;
            self.row_mut(i)[start..start + w].copy_from_slice(block.row(i));
        }
    }

    pub fn mean_rows(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.col_sums_into(&mut out);
        out.iter_mut().for_each(|v| *v /= self.rows as f64);
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Mat {
        Mat::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn products_agree() {
        let a = m(&[&[1.0, 2.0, 0.0], &[-1.0, 0.5, 3.0]]);
        let b = m(&[&[2.0, 1.0], &[0.0, -1.0], &[4.0, 0.25]]);
        assert_eq!(a.matmul(&b), m(&[&[2.0, -1.0], &[10.0, -0.75]]));
        // aᵀ·a and a·aᵀ
        assert_eq!(
            a.matmul_tn(&a),
            m(&[&[2.0, 1.5, -3.0], &[1.5, 4.25, 1.5], &[-3.0, 1.5, 9.0]])
        );
        assert_eq!(a.matmul_nt(&a), m(&[&[5.0, 0.0], &[0.0, 10.25]]));
    }

    #[test]
    fn column_blocks() {
        let mut a = m(&[&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0, 7.0, 8.0]]);
        let b = a.col_block(1, 2);
        assert_eq!(b, m(&[&[2.0, 3.0], &[6.0, 7.0]]));
        a.set_col_block(2, &b);
        assert_eq!(a, m(&[&[1.0, 2.0, 2.0, 3.0], &[5.0, 6.0, 6.0, 7.0]]));
        assert_eq!(a.mean_rows(), vec![3.0, 4.0, 4.0, 5.0]);
    }
}
