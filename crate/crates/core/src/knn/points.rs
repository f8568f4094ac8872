use super::KnnError;

/// Row-major store of `len` points in `dims` dimensions.
///
/// A zero-dimensional set is allowed; every pairwise distance in it is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    len: usize,
    dims: usize,
}

impl PointSet {
    pub fn new(data: Vec<f64>, dims: usize) -> Result<Self, KnnError> {
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(KnnError::NonFinite(pos));
        }
        if dims == 0 {
            if !data.is_empty() {
                return Err(KnnError::DimensionMismatch { expected: 0, found: data.len() });
            }
            return Err(KnnError::ZeroDimNeedsLen);
        }
        if !data.len().is_multiple_of(dims) {
            return Err(KnnError::DimensionMismatch { expected: dims, found: data.len() % dims });
        }
        let len = data.len() / dims;
        if len == 0 {
            return Err(KnnError::Empty);
        }
        Ok(Self { data, len, dims })
    }

    /// `len` points with no coordinates.
    pub fn zero_dim(len: usize) -> Result<Self, KnnError> {
        if len == 0 {
            return Err(KnnError::Empty);
        }
        Ok(Self { data: Vec::new(), len, dims: 0 })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, KnnError> {
        let first = rows.first().ok_or(KnnError::Empty)?;
        let dims = first.as_ref().len();
        if dims == 0 {
            if let Some(r) = rows.iter().find(|r| !r.as_ref().is_empty()) {
                return Err(KnnError::DimensionMismatch { expected: 0, found: r.as_ref().len() });
            }
            return Self::zero_dim(rows.len());
        }
        let mut data = Vec::with_capacity(rows.len() * dims);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(KnnError::DimensionMismatch { expected: dims, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dims)
    }

    /// Concatenates the coordinates of equally long point sets column-wise.
    pub fn hstack(parts: &[&PointSet]) -> Result<Self, KnnError> {
        let len = parts.first().ok_or(KnnError::Empty)?.len;
        if let Some(p) = parts.iter().find(|p| p.len != len) {
            return Err(KnnError::LengthMismatch { expected: len, found: p.len });
        }
        let dims: usize = parts.iter().map(|p| p.dims).sum();
        if dims == 0 {
            return Self::zero_dim(len);
        }
        let mut data = Vec::with_capacity(len * dims);
        for i in 0..len {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(Self { data, len, dims })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    #[inline]
    pub fn get(&self, i: usize, d: usize) -> f64 {
        self.data[i * self.dims + d]
    }

    /// Returns a copy with rows reordered so that row `i` of the result is row `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        Self { data, len: order.len(), dims: self.dims }
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { data: self.data.iter().map(|v| v * factor).collect(), len: self.len, dims: self.dims }
    }
}

/// Max-norm (Chebyshev) distance.
#[inline]
pub fn max_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}
