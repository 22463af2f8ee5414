//! Single gated-recurrent cell. One hidden vector carries temporal context
//! across environment steps within an episode; gradients are truncated at the
//! incoming state, which rollout storage treats as a per-step input.

use rand::Rng;

use super::tensor::sigmoid;

#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    // Update gate.
    pub wz: Vec<f64>,
    pub uz: Vec<f64>,
    pub bz: Vec<f64>,
    // Reset gate.
    pub wr: Vec<f64>,
    pub ur: Vec<f64>,
    pub br: Vec<f64>,
    // Candidate.
    pub wc: Vec<f64>,
    pub uc: Vec<f64>,
    pub bc: Vec<f64>,
}

/// Forward intermediates needed by the backward pass.
#[derive(Debug, Clone)]
pub struct GruCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub rh: Vec<f64>,
    pub g: Vec<f64>,
    pub h_new: Vec<f64>,
}

impl GruCell {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> GruCell {
        let wlen = hidden_dim * input_dim;
        let ulen = hidden_dim * hidden_dim;
        GruCell {
            input_dim,
            hidden_dim,
            wz: vec![0.0; wlen],
            uz: vec![0.0; ulen],
            bz: vec![0.0; hidden_dim],
            wr: vec![0.0; wlen],
            ur: vec![0.0; ulen],
            br: vec![0.0; hidden_dim],
            wc: vec![0.0; wlen],
            uc: vec![0.0; ulen],
            bc: vec![0.0; hidden_dim],
        }
    }

    pub fn init(input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> GruCell {
        let mut cell = GruCell::zeros(input_dim, hidden_dim);
        let kw = 1.0 / (input_dim as f64).sqrt();
        let ku = 1.0 / (hidden_dim as f64).sqrt();
        for w in cell.wz.iter_mut().chain(cell.wr.iter_mut()).chain(cell.wc.iter_mut()) {
            *w = rng.gen_range(-kw..kw);
        }
        for u in cell.uz.iter_mut().chain(cell.ur.iter_mut()).chain(cell.uc.iter_mut()) {
            *u = rng.gen_range(-ku..ku);
        }
        for b in cell.bz.iter_mut().chain(cell.br.iter_mut()).chain(cell.bc.iter_mut()) {
            *b = rng.gen_range(-ku..ku);
        }
        cell
    }

    fn affine(w: &[f64], x: &[f64], u: &[f64], h: &[f64], b: &[f64], out: &mut [f64]) {
        let (nx, nh) = (x.len(), h.len());
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = b[j];
            let wrow = &w[j * nx..(j + 1) * nx];
            for i in 0..nx {
                acc += wrow[i] * x[i];
            }
            let urow = &u[j * nh..(j + 1) * nh];
            for i in 0..nh {
                acc += urow[i] * h[i];
            }
            *o = acc;
        }
    }

    pub fn forward(&self, x: &[f64], h_prev: &[f64]) -> (Vec<f64>, GruCache) {
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(h_prev.len(), self.hidden_dim);
        let n = self.hidden_dim;
        let mut z = vec![0.0; n];
        let mut r = vec![0.0; n];
        Self::affine(&self.wz, x, &self.uz, h_prev, &self.bz, &mut z);
        Self::affine(&self.wr, x, &self.ur, h_prev, &self.br, &mut r);
        for v in z.iter_mut() {
            *v = sigmoid(*v);
        }
        for v in r.iter_mut() {
            *v = sigmoid(*v);
        }
        let rh: Vec<f64> = r.iter().zip(h_prev.iter()).map(|(a, b)| a * b).collect();
        let mut g = vec![0.0; n];
        Self::affine(&self.wc, x, &self.uc, &rh, &self.bc, &mut g);
        for v in g.iter_mut() {
            *v = v.tanh();
        }
        let h_new: Vec<f64> = (0..n).map(|j| (1.0 - z[j]) * h_prev[j] + z[j] * g[j]).collect();
        let cache = GruCache {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            z,
            r,
            rh,
            g,
            h_new: h_new.clone(),
        };
        (h_new, cache)
    }

    /// Accumulate parameter gradients into `grads` and return the gradient
    /// with respect to the cell input. The incoming-state gradient is
    /// dropped: state is an input at rollout-segment granularity.
    pub fn backward(&self, cache: &GruCache, gh_new: &[f64], grads: &mut GruCell) -> Vec<f64> {
        let n = self.hidden_dim;
        let nx = self.input_dim;
        let mut gx = vec![0.0; nx];

        // Through h' = (1-z) h + z g.
        let gz: Vec<f64> = (0..n)
            .map(|j| gh_new[j] * (cache.g[j] - cache.h_prev[j]))
            .collect();
        let gg: Vec<f64> = (0..n).map(|j| gh_new[j] * cache.z[j]).collect();

        // Candidate path: g = tanh(Wc x + Uc (r h) + bc).
        let gag: Vec<f64> = (0..n).map(|j| gg[j] * (1.0 - cache.g[j] * cache.g[j])).collect();
        let mut grh = vec![0.0; n];
        for j in 0..n {
            let ga = gag[j];
            grads.bc[j] += ga;
            for i in 0..nx {
                grads.wc[j * nx + i] += ga * cache.x[i];
                gx[i] += ga * self.wc[j * nx + i];
            }
            for i in 0..n {
                grads.uc[j * n + i] += ga * cache.rh[i];
                grh[i] += ga * self.uc[j * n + i];
            }
        }
        let gr: Vec<f64> = (0..n).map(|j| grh[j] * cache.h_prev[j]).collect();

        // Reset gate: r = sigmoid(ar).
        let gar: Vec<f64> = (0..n).map(|j| gr[j] * cache.r[j] * (1.0 - cache.r[j])).collect();
        for j in 0..n {
            let ga = gar[j];
            grads.br[j] += ga;
            for i in 0..nx {
                grads.wr[j * nx + i] += ga * cache.x[i];
                gx[i] += ga * self.wr[j * nx + i];
            }
            for i in 0..n {
                grads.ur[j * n + i] += ga * cache.h_prev[i];
            }
        }

        // Update gate: z = sigmoid(az).
        let gaz: Vec<f64> = (0..n).map(|j| gz[j] * cache.z[j] * (1.0 - cache.z[j])).collect();
        for j in 0..n {
            let ga = gaz[j];
            grads.bz[j] += ga;
            for i in 0..nx {
                grads.wz[j * nx + i] += ga * cache.x[i];
                gx[i] += ga * self.wz[j * nx + i];
            }
            for i in 0..n {
                grads.uz[j * n + i] += ga * cache.h_prev[i];
            }
        }

        gx
    }
}
