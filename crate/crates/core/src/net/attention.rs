//! Channel and spatial attention blocks.
//!
//! Channel attention squeezes the feature map into per-channel max/average
//! descriptors, runs both through a shared two-layer perceptron, feeds the sum
//! to the recurrent cell together with the carried state, and turns a linear
//! readout of the new state into per-channel sigmoid weights. Spatial
//! attention stacks channel-wise max and mean maps, pushes them through two
//! convolutions, and applies the resulting sigmoid mask position-wise.

use rand::Rng;

use super::gru::{GruCache, GruCell};
use super::layers::{Conv2d, Linear};
use super::tensor::{relu_backward, sigmoid, Tensor};
use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAttention {
    pub channels: usize,
    pub hidden_dim: usize,
    /// Shared perceptron applied to both pooled descriptors.
    pub mlp1: Linear,
    pub mlp2: Linear,
    pub gru: GruCell,
    /// Maps the recurrent state to per-channel attention logits.
    pub readout: Linear,
}

#[derive(Debug, Clone)]
pub struct ChannelAttnCache {
    input: Tensor,
    max_idx: Vec<usize>,
    d_max: Vec<f64>,
    d_avg: Vec<f64>,
    max_pre1: Vec<f64>,
    max_h1: Vec<f64>,
    avg_pre1: Vec<f64>,
    avg_h1: Vec<f64>,
    s: Vec<f64>,
    gru: GruCache,
    weights: Vec<f64>,
}

impl ChannelAttention {
    pub fn zeros(channels: usize, mlp_hidden: usize, hidden_dim: usize) -> ChannelAttention {
        ChannelAttention {
            channels,
            hidden_dim,
            mlp1: Linear::zeros(channels, mlp_hidden),
            mlp2: Linear::zeros(mlp_hidden, channels),
            gru: GruCell::zeros(channels, hidden_dim),
            readout: Linear::zeros(hidden_dim, channels),
        }
    }

    pub fn init(
        channels: usize,
        mlp_hidden: usize,
        hidden_dim: usize,
        rng: &mut impl Rng,
    ) -> ChannelAttention {
        ChannelAttention {
            channels,
            hidden_dim,
            mlp1: Linear::init(channels, mlp_hidden, rng),
            mlp2: Linear::init(mlp_hidden, channels, rng),
            gru: GruCell::init(channels, hidden_dim, rng),
            readout: Linear::init(hidden_dim, channels, rng),
        }
    }

    fn mlp_forward(&self, d: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let pre1 = self.mlp1.forward(d);
        let h1: Vec<f64> = pre1.iter().map(|&v| v.max(0.0)).collect();
        let out = self.mlp2.forward(&h1);
        (pre1, h1, out)
    }

    /// Returns (scaled features, new recurrent state, cache).
    pub fn forward(
        &self,
        input: &Tensor,
        h_prev: &[f64],
    ) -> Result<(Tensor, Vec<f64>, ChannelAttnCache)> {
        if input.channels != self.channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channels", self.channels),
                got: format!("{}", input.channels),
            });
        }
        if h_prev.len() != self.hidden_dim {
            return Err(Error::StateMismatch {
                expected: self.hidden_dim,
                got: h_prev.len(),
            });
        }
        let plane = input.plane();
        let mut d_max = vec![f64::NEG_INFINITY; self.channels];
        let mut max_idx = vec![0usize; self.channels];
        let mut d_avg = vec![0.0; self.channels];
        for c in 0..self.channels {
            let slice = &input.data[c * plane..(c + 1) * plane];
            let mut best = f64::NEG_INFINITY;
            let mut best_i = 0;
            let mut sum = 0.0;
            for (i, &v) in slice.iter().enumerate() {
                sum += v;
                if v > best {
                    best = v;
                    best_i = i;
                }
            }
            d_max[c] = best;
            max_idx[c] = best_i;
            d_avg[c] = sum / plane as f64;
        }

        let (max_pre1, max_h1, max_out) = self.mlp_forward(&d_max);
        let (avg_pre1, avg_h1, avg_out) = self.mlp_forward(&d_avg);
        let s: Vec<f64> = max_out
            .iter()
            .zip(avg_out.iter())
            .map(|(a, b)| a + b)
            .collect();

        let (h_new, gru_cache) = self.gru.forward(&s, h_prev);
        let logits = self.readout.forward(&h_new);
        let weights: Vec<f64> = logits.iter().map(|&v| sigmoid(v)).collect();

        let mut out = input.clone();
        for c in 0..self.channels {
            for v in out.data[c * plane..(c + 1) * plane].iter_mut() {
                *v *= weights[c];
            }
        }
        let cache = ChannelAttnCache {
            input: input.clone(),
            max_idx,
            d_max,
            d_avg,
            max_pre1,
            max_h1,
            avg_pre1,
            avg_h1,
            s,
            gru: gru_cache,
            weights,
        };
        Ok((out, h_new, cache))
    }

    pub fn backward(
        &self,
        cache: &ChannelAttnCache,
        gout: &Tensor,
        grads: &mut ChannelAttention,
    ) -> Tensor {
        let plane = cache.input.plane();
        let c_count = self.channels;

        // Scale path: out = in * w (per channel).
        let mut gin = Tensor::zeros(c_count, cache.input.height, cache.input.width);
        let mut gweights = vec![0.0; c_count];
        for c in 0..c_count {
            let w = cache.weights[c];
            let go = &gout.data[c * plane..(c + 1) * plane];
            let inp = &cache.input.data[c * plane..(c + 1) * plane];
            let gi = &mut gin.data[c * plane..(c + 1) * plane];
            let mut acc = 0.0;
            for i in 0..plane {
                gi[i] = go[i] * w;
                acc += go[i] * inp[i];
            }
            gweights[c] = acc;
        }

        // Sigmoid readout.
        let glogits: Vec<f64> = (0..c_count)
            .map(|c| gweights[c] * cache.weights[c] * (1.0 - cache.weights[c]))
            .collect();
        let gh_new = self
            .readout
            .backward(&cache.gru.h_new, &glogits, &mut grads.readout);

        // Recurrent cell down to its input s.
        let gs = self.gru.backward(&cache.gru, &gh_new, &mut grads.gru);

        // Both perceptron paths share parameters.
        let mut gd = |pre1: &[f64], h1: &[f64], d: &[f64], gs: &[f64]| -> Vec<f64> {
            let gh1 = self.mlp2.backward(h1, gs, &mut grads.mlp2);
            let gpre1: Vec<f64> = gh1
                .iter()
                .zip(pre1.iter())
                .map(|(&g, &p)| if p > 0.0 { g } else { 0.0 })
                .collect();
            self.mlp1.backward(d, &gpre1, &mut grads.mlp1)
        };
        let gd_max = gd(&cache.max_pre1, &cache.max_h1, &cache.d_max, &gs);
        let gd_avg = gd(&cache.avg_pre1, &cache.avg_h1, &cache.d_avg, &gs);

        // Pooling: max routes to the argmax cell, average spreads evenly.
        for c in 0..c_count {
            gin.data[c * plane + cache.max_idx[c]] += gd_max[c];
            let spread = gd_avg[c] / plane as f64;
            for v in gin.data[c * plane..(c + 1) * plane].iter_mut() {
                *v += spread;
            }
        }
        gin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAttention {
    pub conv_a: Conv2d,
    pub conv_b: Conv2d,
}

#[derive(Debug, Clone)]
pub struct SpatialAttnCache {
    input: Tensor,
    max_c_idx: Vec<usize>,
    stack: Tensor,
    a_pre: Tensor,
    a: Tensor,
    mask: Vec<f64>,
}

impl SpatialAttention {
    pub fn zeros(hidden_channels: usize, kernel: usize) -> SpatialAttention {
        SpatialAttention {
            conv_a: Conv2d::zeros(2, hidden_channels, kernel),
            conv_b: Conv2d::zeros(hidden_channels, 1, kernel),
        }
    }

    pub fn init(hidden_channels: usize, kernel: usize, rng: &mut impl Rng) -> SpatialAttention {
        SpatialAttention {
            conv_a: Conv2d::init(2, hidden_channels, kernel, rng),
            conv_b: Conv2d::init(hidden_channels, 1, kernel, rng),
        }
    }

    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, SpatialAttnCache)> {
        let plane = input.plane();
        let mut stack = Tensor::zeros(2, input.height, input.width);
        let mut max_c_idx = vec![0usize; plane];
        for i in 0..plane {
            let mut best = f64::NEG_INFINITY;
            let mut best_c = 0;
            let mut sum = 0.0;
            for c in 0..input.channels {
                let v = input.data[c * plane + i];
                sum += v;
                if v > best {
                    best = v;
                    best_c = c;
                }
            }
            stack.data[i] = best;
            stack.data[plane + i] = sum / input.channels as f64;
            max_c_idx[i] = best_c;
        }

        let a_pre = self.conv_a.forward(&stack)?;
        let a = super::tensor::relu(&a_pre);
        let mask_pre = self.conv_b.forward(&a)?;
        let mask: Vec<f64> = mask_pre.data.iter().map(|&v| sigmoid(v)).collect();

        let mut out = input.clone();
        for c in 0..input.channels {
            for i in 0..plane {
                out.data[c * plane + i] *= mask[i];
            }
        }
        let cache = SpatialAttnCache {
            input: input.clone(),
            max_c_idx,
            stack,
            a_pre,
            a,
            mask,
        };
        Ok((out, cache))
    }

    pub fn backward(
        &self,
        cache: &SpatialAttnCache,
        gout: &Tensor,
        grads: &mut SpatialAttention,
    ) -> Tensor {
        let plane = cache.input.plane();
        let channels = cache.input.channels;

        let mut gin = Tensor::zeros(channels, cache.input.height, cache.input.width);
        let mut gmask = vec![0.0; plane];
        for c in 0..channels {
            for i in 0..plane {
                let go = gout.data[c * plane + i];
                gin.data[c * plane + i] = go * cache.mask[i];
                gmask[i] += go * cache.input.data[c * plane + i];
            }
        }

        // Sigmoid, then the two convolutions.
        let gmask_pre = Tensor {
            channels: 1,
            height: cache.input.height,
            width: cache.input.width,
            data: (0..plane)
                .map(|i| gmask[i] * cache.mask[i] * (1.0 - cache.mask[i]))
                .collect(),
        };
        let ga = self.conv_b.backward(&cache.a, &gmask_pre, &mut grads.conv_b);
        let ga_pre = relu_backward(&cache.a_pre, &ga);
        let gstack = self.conv_a.backward(&cache.stack, &ga_pre, &mut grads.conv_a);

        // Channel pooling: max map routes to the argmax channel, mean map
        // spreads across channels.
        for i in 0..plane {
            gin.data[cache.max_c_idx[i] * plane + i] += gstack.data[i];
            let spread = gstack.data[plane + i] / channels as f64;
            for c in 0..channels {
                gin.data[c * plane + i] += spread;
            }
        }
        gin
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_tensor(c: usize, h: usize, w: usize, rng: &mut impl Rng) -> Tensor {
        Tensor {
            channels: c,
            height: h,
            width: w,
            data: (0..c * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    #[test]
    fn constant_channels_make_pools_agree() {
        let attn = ChannelAttention::zeros(2, 2, 3);
        let mut input = Tensor::zeros(2, 3, 3);
        for i in 0..9 {
            input.data[i] = 0.7;
            input.data[9 + i] = -0.2;
        }
        let (_, _, cache) = attn.forward(&input, &[0.0; 3]).unwrap();
        assert_eq!(cache.d_max, cache.d_avg);
    }

    #[test]
    fn zero_weights_scale_features_by_half() {
        let attn = ChannelAttention::zeros(3, 2, 4);
        let mut rng = crate::seeds::stream(60, "chan-zero");
        let input = random_tensor(3, 4, 4, &mut rng);
        let (out, h_new, cache) = attn.forward(&input, &[0.0; 4]).unwrap();
        for (o, i) in out.data.iter().zip(input.data.iter()) {
            assert!((o - 0.5 * i).abs() < 1e-15);
        }
        assert!(cache.weights.iter().all(|&w| w == 0.5));
        // Zero GRU weights halve a zero state into zero.
        assert!(h_new.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn channel_attention_matches_straight_line_reimplementation() {
        let mut rng = crate::seeds::stream(61, "chan-oracle");
        let attn = ChannelAttention::init(4, 3, 5, &mut rng);
        let input = random_tensor(4, 6, 6, &mut rng);
        let h_prev: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (out, h_new, _) = attn.forward(&input, &h_prev).unwrap();

        // Independent re-derivation of the same dataflow, written linearly.
        let plane = 36;
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let lin = |l: &Linear, x: &[f64]| -> Vec<f64> {
            (0..l.out_dim)
                .map(|j| {
                    l.bias[j]
                        + (0..l.in_dim).map(|i| l.weight[j * l.in_dim + i] * x[i]).sum::<f64>()
                })
                .collect()
        };
        let mut dmax = vec![0.0; 4];
        let mut davg = vec![0.0; 4];
        for c in 0..4 {
            let sl = &input.data[c * plane..(c + 1) * plane];
            dmax[c] = sl.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            davg[c] = sl.iter().sum::<f64>() / plane as f64;
        }
        let mlp = |d: &[f64]| -> Vec<f64> {
            let h1: Vec<f64> = lin(&attn.mlp1, d).iter().map(|&v| v.max(0.0)).collect();
            lin(&attn.mlp2, &h1)
        };
        let m = mlp(&dmax);
        let a = mlp(&davg);
        let s: Vec<f64> = m.iter().zip(a.iter()).map(|(x, y)| x + y).collect();
        // GRU.
        let g = &attn.gru;
        let aff = |w: &[f64], x: &[f64], u: &[f64], h: &[f64], b: &[f64]| -> Vec<f64> {
            (0..b.len())
                .map(|j| {
                    b[j] + (0..x.len()).map(|i| w[j * x.len() + i] * x[i]).sum::<f64>()
                        + (0..h.len()).map(|i| u[j * h.len() + i] * h[i]).sum::<f64>()
                })
                .collect()
        };
        let z: Vec<f64> = aff(&g.wz, &s, &g.uz, &h_prev, &g.bz).iter().map(|&v| sig(v)).collect();
        let r: Vec<f64> = aff(&g.wr, &s, &g.ur, &h_prev, &g.br).iter().map(|&v| sig(v)).collect();
        let rh: Vec<f64> = r.iter().zip(h_prev.iter()).map(|(a, b)| a * b).collect();
        let gcand: Vec<f64> = aff(&g.wc, &s, &g.uc, &rh, &g.bc).iter().map(|&v| v.tanh()).collect();
        let h_ref: Vec<f64> = (0..5).map(|j| (1.0 - z[j]) * h_prev[j] + z[j] * gcand[j]).collect();
        let weights: Vec<f64> = lin(&attn.readout, &h_ref).iter().map(|&v| sig(v)).collect();

        for j in 0..5 {
            assert!((h_new[j] - h_ref[j]).abs() < 1e-12);
        }
        for c in 0..4 {
            for i in 0..plane {
                let expected = input.data[c * plane + i] * weights[c];
                assert!((out.data[c * plane + i] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn channel_attention_rejects_bad_state_size() {
        let attn = ChannelAttention::zeros(2, 2, 4);
        let input = Tensor::zeros(2, 3, 3);
        assert!(matches!(
            attn.forward(&input, &[0.0; 3]),
            Err(crate::error::Error::StateMismatch { .. })
        ));
    }

    #[test]
    fn channel_attention_gradcheck() {
        let mut rng = crate::seeds::stream(62, "chan-fd");
        let attn = ChannelAttention::init(3, 2, 4, &mut rng);
        let input = random_tensor(3, 4, 4, &mut rng);
        let h_prev: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gout = random_tensor(3, 4, 4, &mut rng);

        let (_, _, cache) = attn.forward(&input, &h_prev).unwrap();
        let mut grads = ChannelAttention::zeros(3, 2, 4);
        let gin = attn.backward(&cache, &gout, &mut grads);

        let loss = |a: &ChannelAttention, input: &Tensor| {
            let (out, _, _) = a.forward(input, &h_prev).unwrap();
            out.data.iter().zip(gout.data.iter()).map(|(o, g)| o * g).sum::<f64>()
        };
        let h = 1e-6;
        // Spot-check every parameter family through a mutable clone.
        let mut probe = attn.clone();
        macro_rules! check_vec {
            ($get:expr, $grad:expr, $name:expr) => {
                for i in 0..$grad.len() {
                    let orig = $get[i];
                    $get[i] = orig + h;
                    let plus = loss(&probe, &input);
                    $get[i] = orig - h;
                    let minus = loss(&probe, &input);
                    $get[i] = orig;
                    let fd = (plus - minus) / (2.0 * h);
                    assert!(
                        (fd - $grad[i]).abs() < 1e-6,
                        "{} [{}]: fd {} vs {}",
                        $name,
                        i,
                        fd,
                        $grad[i]
                    );
                }
            };
        }
        check_vec!(probe.mlp1.weight, grads.mlp1.weight, "mlp1.w");
        check_vec!(probe.mlp1.bias, grads.mlp1.bias, "mlp1.b");
        check_vec!(probe.mlp2.weight, grads.mlp2.weight, "mlp2.w");
        check_vec!(probe.mlp2.bias, grads.mlp2.bias, "mlp2.b");
        check_vec!(probe.gru.wz, grads.gru.wz, "gru.wz");
        check_vec!(probe.gru.uc, grads.gru.uc, "gru.uc");
        check_vec!(probe.readout.weight, grads.readout.weight, "readout.w");
        check_vec!(probe.readout.bias, grads.readout.bias, "readout.b");

        // Input gradient on a sample of elements.
        let mut iv = input.clone();
        for i in [0usize, 5, 17, 33, 47] {
            let orig = iv.data[i];
            iv.data[i] = orig + h;
            let plus = loss(&attn, &iv);
            iv.data[i] = orig - h;
            let minus = loss(&attn, &iv);
            iv.data[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            assert!((fd - gin.data[i]).abs() < 1e-6, "input [{i}]");
        }
    }

    #[test]
    fn single_channel_spatial_maps_equal_input() {
        let attn = SpatialAttention::zeros(2, 3);
        let mut rng = crate::seeds::stream(63, "spat-single");
        let input = random_tensor(1, 4, 4, &mut rng);
        let (_, cache) = attn.forward(&input).unwrap();
        for i in 0..16 {
            assert_eq!(cache.stack.data[i], input.data[i]);
            assert_eq!(cache.stack.data[16 + i], input.data[i]);
        }
    }

    #[test]
    fn zero_spatial_weights_mask_half() {
        let attn = SpatialAttention::zeros(2, 3);
        let mut rng = crate::seeds::stream(64, "spat-zero");
        let input = random_tensor(3, 4, 4, &mut rng);
        let (out, cache) = attn.forward(&input).unwrap();
        assert!(cache.mask.iter().all(|&m| m == 0.5));
        for (o, i) in out.data.iter().zip(input.data.iter()) {
            assert!((o - 0.5 * i).abs() < 1e-15);
        }
    }

    #[test]
    fn spatial_attention_matches_straight_line_reimplementation() {
        let mut rng = crate::seeds::stream(65, "spat-oracle");
        let attn = SpatialAttention::init(3, 3, &mut rng);
        let input = random_tensor(4, 5, 5, &mut rng);
        let (out, _) = attn.forward(&input).unwrap();

        let plane = 25;
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut stack = Tensor::zeros(2, 5, 5);
        for i in 0..plane {
            let vals: Vec<f64> = (0..4).map(|c| input.data[c * plane + i]).collect();
            stack.data[i] = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            stack.data[plane + i] = vals.iter().sum::<f64>() / 4.0;
        }
        let a: Vec<f64> = attn
            .conv_a
            .forward(&stack)
            .unwrap()
            .data
            .iter()
            .map(|&v| v.max(0.0))
            .collect();
        let a_t = Tensor::from_vec(3, 5, 5, a).unwrap();
        let mask: Vec<f64> = attn
            .conv_b
            .forward(&a_t)
            .unwrap()
            .data
            .iter()
            .map(|&v| sig(v))
            .collect();
        for c in 0..4 {
            for i in 0..plane {
                let expected = input.data[c * plane + i] * mask[i];
                assert!((out.data[c * plane + i] - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spatial_attention_gradcheck() {
        let mut rng = crate::seeds::stream(66, "spat-fd");
        let attn = SpatialAttention::init(2, 3, &mut rng);
        let input = random_tensor(3, 4, 4, &mut rng);
        let gout = random_tensor(3, 4, 4, &mut rng);

        let (_, cache) = attn.forward(&input).unwrap();
        let mut grads = SpatialAttention::zeros(2, 3);
        let gin = attn.backward(&cache, &gout, &mut grads);

        let loss = |a: &SpatialAttention, input: &Tensor| {
            let (out, _) = a.forward(input).unwrap();
            out.data.iter().zip(gout.data.iter()).map(|(o, g)| o * g).sum::<f64>()
        };
        let h = 1e-6;
        let mut probe = attn.clone();
        for wi in 0..probe.conv_a.weight.len() {
            let orig = probe.conv_a.weight[wi];
            probe.conv_a.weight[wi] = orig + h;
            let plus = loss(&probe, &input);
            probe.conv_a.weight[wi] = orig - h;
            let minus = loss(&probe, &input);
            probe.conv_a.weight[wi] = orig;
            let fd = (plus - minus) / (2.0 * h);
            assert!((fd - grads.conv_a.weight[wi]).abs() < 1e-6, "conv_a.w [{wi}]");
        }
        for wi in 0..probe.conv_b.weight.len() {
            let orig = probe.conv_b.weight[wi];
            probe.conv_b.weight[wi] = orig + h;
            let plus = loss(&probe, &input);
            probe.conv_b.weight[wi] = orig - h;
            let minus = loss(&probe, &input);
            probe.conv_b.weight[wi] = orig;
            let fd = (plus - minus) / (2.0 * h);
            assert!((fd - grads.conv_b.weight[wi]).abs() < 1e-6, "conv_b.w [{wi}]");
        }
        let mut iv = input.clone();
        for i in [0usize, 9, 21, 40] {
            let orig = iv.data[i];
            iv.data[i] = orig + h;
            let plus = loss(&attn, &iv);
            iv.data[i] = orig - h;
            let minus = loss(&attn, &iv);
            iv.data[i] = orig;
            let fd = (plus - minus) / (2.0 * h);
            assert!((fd - gin.data[i]).abs() < 1e-6, "input [{i}]");
        }
    }

    #[test]
    fn attention_weights_lie_strictly_inside_unit_interval() {
        let mut rng = crate::seeds::stream(67, "attn-range");
        for _ in 0..50 {
            let chan = ChannelAttention::init(3, 2, 4, &mut rng);
            let spat = SpatialAttention::init(2, 3, &mut rng);
            let input = random_tensor(3, 4, 4, &mut rng);
            let h_prev: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (mid, _, cache) = chan.forward(&input, &h_prev).unwrap();
            assert!(cache.weights.iter().all(|&w| w > 0.0 && w < 1.0));
            let (_, scache) = spat.forward(&mid).unwrap();
            assert!(scache.mask.iter().all(|&m| m > 0.0 && m < 1.0));
        }
    }

    #[test]
    fn attention_never_amplifies_features() {
        let mut rng = crate::seeds::stream(68, "attn-bound");
        for _ in 0..50 {
            let chan = ChannelAttention::init(4, 2, 4, &mut rng);
            let spat = SpatialAttention::init(2, 3, &mut rng);
            let input = random_tensor(4, 4, 4, &mut rng);
            let h_prev: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (mid, _, _) = chan.forward(&input, &h_prev).unwrap();
            for (o, i) in mid.data.iter().zip(input.data.iter()) {
                assert!(o.abs() <= i.abs() + 1e-15);
            }
            let (out, _) = spat.forward(&mid).unwrap();
            for (o, i) in out.data.iter().zip(mid.data.iter()) {
                assert!(o.abs() <= i.abs() + 1e-15);
            }
        }
    }
}
