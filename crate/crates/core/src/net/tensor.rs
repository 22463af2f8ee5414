//! Minimal dense tensor for (channels, height, width) activations.

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Tensor {
        Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Tensor> {
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}x{} = {}", channels, height, width, channels * height * width),
                got: format!("{} values", data.len()),
            });
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn idx(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.idx(c, y, x)]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f64 {
        let i = self.idx(c, y, x);
        &mut self.data[i]
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Element-wise max(x, 0); returns the activated copy.
pub fn relu(t: &Tensor) -> Tensor {
    Tensor {
        channels: t.channels,
        height: t.height,
        width: t.width,
        data: t.data.iter().map(|&v| v.max(0.0)).collect(),
    }
}

/// Route `grad` through a ReLU that saw `pre` on the way forward.
pub fn relu_backward(pre: &Tensor, grad: &Tensor) -> Tensor {
    let data = pre
        .data
        .iter()
        .zip(grad.data.iter())
        .map(|(&p, &g)| if p > 0.0 { g } else { 0.0 })
        .collect();
    Tensor {
        channels: grad.channels,
        height: grad.height,
        width: grad.width,
        data,
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
