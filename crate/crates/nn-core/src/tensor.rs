use crate::error::{NnError, Result};
use crate::scalar::Scalar;

/// Dense rank-5 tensor in `(N, C, T, H, W)` layout, row-major with W
/// fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor5<T = f32> {
    shape: [usize; 5],
    data: Vec<T>,
}

impl<T: Scalar> Tensor5<T> {
    pub fn zeros(shape: [usize; 5]) -> Self {
        Tensor5 {
            shape,
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn full(shape: [usize; 5], value: T) -> Self {
        Tensor5 {
            shape,
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: [usize; 5], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(NnError::ShapeMismatch(format!(
                "data length {} does not match shape {:?} ({} elements)",
                data.len(),
                shape,
                n
            )));
        }
        Ok(Tensor5 { shape, data })
    }

    pub fn shape(&self) -> [usize; 5] {
        self.shape
    }

    /// `(N, C, T, H, W)` as a tuple.
    pub fn dims(&self) -> (usize, usize, usize, usize, usize) {
        let [n, c, t, h, w] = self.shape;
        (n, c, t, h, w)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn idx(&self, n: usize, c: usize, t: usize, h: usize, w: usize) -> usize {
        (((n * self.shape[1] + c) * self.shape[2] + t) * self.shape[3] + h) * self.shape[4] + w
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, t: usize, h: usize, w: usize) -> T {
        self.data[self.idx(n, c, t, h, w)]
    }

    #[inline]
    pub fn at_mut(&mut self, n: usize, c: usize, t: usize, h: usize, w: usize) -> &mut T {
        let i = self.idx(n, c, t, h, w);
        &mut self.data[i]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Elementwise conversion, used to lift f32 tensors into f64 for
    /// gradient verification.
    pub fn cast<U: Scalar>(&self) -> Tensor5<U> {
        Tensor5 {
            shape: self.shape,
            data: self.data.iter().map(|v| U::from_f64_s(v.to_f64_s())).collect(),
        }
    }
}
