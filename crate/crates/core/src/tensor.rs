//! Dense tensors with runtime shape.
//!
//! The entry type carries the encoding: `Tensor<FixedPoint>` is digitally
//! encoded data the arithmetic module operates on, `Tensor<f64>` is
//! real-valued data destined for amplitude encoding or classical reference
//! math.

use crate::error::{Error, Result};
use crate::fixed::{FixedPoint, FixedPointFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

/// Digitally encoded tensor (fixed-point registers).
pub type DigitalTensor = Tensor<FixedPoint>;
/// Real-valued tensor (amplitude source / classical reference).
pub type RealTensor = Tensor<f64>;

impl<T: Clone> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::InvalidDimension(format!(
                "tensor shape {shape:?} has a zero extent"
            )));
        }
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "shape {shape:?} wants {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: T) -> Result<Self> {
        let n: usize = shape.iter().product();
        Self::new(shape, vec![value; n])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
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

    /// Flat offset of a multi-index (row-major).
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (i, &extent) in idx.iter().zip(self.shape.iter()) {
            debug_assert!(*i < extent);
            off = off * extent + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: T) {
        let off = self.offset(idx);
        self.data[off] = value;
    }

    pub fn same_shape<U>(&self, other: &Tensor<U>) -> bool {
        self.shape == other.shape
    }
}

impl Tensor<f64> {
    /// Quantizes every entry into the given fixed-point format.
    pub fn encode(&self, format: FixedPointFormat) -> Result<DigitalTensor> {
        let data = self
            .data
            .iter()
            .map(|&x| FixedPoint::encode(x, format))
            .collect::<Result<Vec<_>>>()?;
        Tensor::new(self.shape.clone(), data)
    }
}

impl Tensor<FixedPoint> {
    /// Decodes every entry to its exact real value.
    pub fn decode(&self) -> RealTensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|x| x.decode()).collect(),
        }
    }

    pub fn format(&self) -> FixedPointFormat {
        self.data[0].format()
    }
}
