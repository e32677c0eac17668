use crate::error::{Error, Result};

/// A multi-channel graph signal: one row of `channels` values per node,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSignal {
    rows: usize,
    channels: usize,
    data: Vec<f64>,
}

impl GraphSignal {
    pub fn new(rows: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * channels {
            return Err(Error::Shape {
                expected: rows * channels,
                got: data.len(),
            });
        }
        Ok(Self {
            rows,
            channels,
            data,
        })
    }

    pub fn zeros(rows: usize, channels: usize) -> Self {
        Self {
            rows,
            channels,
            data: vec![0.0; rows * channels],
        }
    }

    /// Three-channel signal of primitive centers.
    pub fn from_points(points: &[[f64; 3]]) -> Self {
        Self {
            rows: points.len(),
            channels: 3,
            data: points.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    /// Elementwise `self + scale * other`.
    pub fn axpy(&self, scale: f64, other: &GraphSignal) -> Result<GraphSignal> {
        if other.rows != self.rows || other.channels != self.channels {
            return Err(Error::Shape {
                expected: self.rows,
                got: other.rows,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        Ok(GraphSignal {
            rows: self.rows,
            channels: self.channels,
            data,
        })
    }
}
