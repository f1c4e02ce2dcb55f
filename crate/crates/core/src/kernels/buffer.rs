use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

/// Element type of a [`PixelBuffer`].
pub trait PixelValue: Copy + Default + Send + Sync + PartialOrd + std::fmt::Debug + 'static {
    const PRECISION: Precision;

    fn to_f64(self) -> f64;
    fn is_finite(self) -> bool;
}

impl PixelValue for f32 {
    const PRECISION: Precision = Precision::F32;

    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

impl PixelValue for f64 {
    const PRECISION: Precision = Precision::F64;

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Flat image, row-major with the slow index outermost.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelBuffer<T> {
    data: Vec<T>,
    dims: (usize, usize),
}

impl<T: PixelValue> PixelBuffer<T> {
    pub fn zeros(slow: usize, fast: usize) -> Self {
        PixelBuffer {
            data: vec![T::default(); slow * fast],
            dims: (slow, fast),
        }
    }

    pub fn from_vec(slow: usize, fast: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != slow * fast {
            return Err(Error::InvalidArgument(format!(
                "buffer of {} elements cannot have dims {slow}x{fast}",
                data.len()
            )));
        }
        Ok(PixelBuffer {
            data,
            dims: (slow, fast),
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn precision(&self) -> Precision {
        T::PRECISION
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, slow: usize, fast: usize) -> Option<T> {
        (slow < self.dims.0 && fast < self.dims.1).then(|| self.data[slow * self.dims.1 + fast])
    }

    pub(crate) fn expect_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims != dims {
            return Err(Error::Shape {
                expected: dims,
                actual: self.dims,
            });
        }
        Ok(())
    }

    /// Index of the first non-finite element, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_slow_outermost() {
        let b = PixelBuffer::from_vec(2, 3, vec![0.0f32, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(b.get(1, 0), Some(3.0));
        assert_eq!(b.get(0, 2), Some(2.0));
        assert_eq!(b.get(2, 0), None);
        assert_eq!(b.precision(), Precision::F32);
        assert_eq!(PixelBuffer::<f64>::zeros(1, 1).precision(), Precision::F64);
    }

    #[test]
    fn length_must_match_dims() {
        assert!(PixelBuffer::from_vec(2, 2, vec![0.0f64; 3]).is_err());
    }
}
