//! Convolution and fully-connected layers with hand-written backward passes.
//! Backward methods accumulate parameter gradients into a same-shaped
//! instance, so a zeroed layer doubles as its own gradient buffer.

use rand::Rng;

use super::tensor::Tensor;
use crate::error::Error;
use crate::Result;

/// 2D cross-correlation, stride 1, zero padding chosen to preserve the
/// spatial size. No activation; callers apply one where the architecture
/// places it.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    /// Row-major [out][in][ky][kx].
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize) -> Conv2d {
        Conv2d {
            in_channels,
            out_channels,
            kernel,
            weight: vec![0.0; out_channels * in_channels * kernel * kernel],
            bias: vec![0.0; out_channels],
        }
    }

    /// Uniform init in [-k, k] with k = 1/sqrt(fan_in).
    pub fn init(in_channels: usize, out_channels: usize, kernel: usize, rng: &mut impl Rng) -> Conv2d {
        let mut layer = Conv2d::zeros(in_channels, out_channels, kernel);
        let k = 1.0 / ((in_channels * kernel * kernel) as f64).sqrt();
        for w in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
            *w = rng.gen_range(-k..k);
        }
        layer
    }

    #[inline]
    fn w_idx(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + i) * self.kernel + ky) * self.kernel + kx
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        if input.channels != self.in_channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} input channels", self.in_channels),
                got: format!("{}", input.channels),
            });
        }
        let (h, w) = (input.height, input.width);
        let pad = self.kernel / 2;
        let mut out = Tensor::zeros(self.out_channels, h, w);
        for o in 0..self.out_channels {
            for y in 0..h {
                for x in 0..w {
                    let mut acc = self.bias[o];
                    for i in 0..self.in_channels {
                        for ky in 0..self.kernel {
                            let sy = y + ky;
                            if sy < pad || sy - pad >= h {
                                continue;
                            }
                            for kx in 0..self.kernel {
                                let sx = x + kx;
                                if sx < pad || sx - pad >= w {
                                    continue;
                                }
                                acc += self.weight[self.w_idx(o, i, ky, kx)]
                                    * input.at(i, sy - pad, sx - pad);
                            }
                        }
                    }
                    *out.at_mut(o, y, x) = acc;
                }
            }
        }
        Ok(out)
    }

    /// Accumulate parameter gradients into `grads` and return the gradient
    /// with respect to the input.
    pub fn backward(&self, input: &Tensor, gout: &Tensor, grads: &mut Conv2d) -> Tensor {
        let (h, w) = (input.height, input.width);
        let pad = self.kernel / 2;
        let mut gin = Tensor::zeros(self.in_channels, h, w);
        for o in 0..self.out_channels {
            for y in 0..h {
                for x in 0..w {
                    let g = gout.at(o, y, x);
                    if g == 0.0 {
                        continue;
                    }
                    grads.bias[o] += g;
                    for i in 0..self.in_channels {
                        for ky in 0..self.kernel {
                            let sy = y + ky;
                            if sy < pad || sy - pad >= h {
                                continue;
                            }
                            for kx in 0..self.kernel {
                                let sx = x + kx;
                                if sx < pad || sx - pad >= w {
                                    continue;
                                }
                                let wi = self.w_idx(o, i, ky, kx);
                                grads.weight[wi] += g * input.at(i, sy - pad, sx - pad);
                                *gin.at_mut(i, sy - pad, sx - pad) += g * self.weight[wi];
                            }
                        }
                    }
                }
            }
        }
        gin
    }
}

/// Dense layer: out = W x + b.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major [out][in].
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Linear {
        Linear {
            in_dim,
            out_dim,
            weight: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    pub fn init(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Linear {
        let mut layer = Linear::zeros(in_dim, out_dim);
        let k = 1.0 / (in_dim as f64).sqrt();
        for w in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
            *w = rng.gen_range(-k..k);
        }
        layer
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        let mut out = self.bias.clone();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weight[j * self.in_dim..(j + 1) * self.in_dim];
            *o += row.iter().zip(x.iter()).map(|(w, v)| w * v).sum::<f64>();
        }
        out
    }

    pub fn backward(&self, x: &[f64], gout: &[f64], grads: &mut Linear) -> Vec<f64> {
        let mut gin = vec![0.0; self.in_dim];
        for (j, &g) in gout.iter().enumerate() {
            grads.bias[j] += g;
            let row = &self.weight[j * self.in_dim..(j + 1) * self.in_dim];
            let grow = &mut grads.weight[j * self.in_dim..(j + 1) * self.in_dim];
            for i in 0..self.in_dim {
                grow[i] += g * x[i];
                gin[i] += g * row[i];
            }
        }
        gin
    }
}
