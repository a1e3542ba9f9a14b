use rayon::prelude::*;

use crate::graph::{Graph, TensorId};
use crate::kernels::{col2im, gemm, im2col, mean_var};
use crate::Scalar;

fn transpose<S: Scalar>(src: &[S], rows: usize, cols: usize) -> Vec<S> {
    let mut out = vec![S::zero(); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

impl<S: Scalar> Graph<S> {
    fn assert_same_shape(&self, a: TensorId, b: TensorId, op: &str) {
        assert_eq!(self.shape(a), self.shape(b), "{op}: shape mismatch");
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.assert_same_shape(a, b, "add");
        let data: Vec<S> =
            self.data(a).iter().zip(self.data(b)).map(|(x, y)| *x + *y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    grads.accumulate(a, dy);
                }
                if g.requires_grad(b) {
                    grads.accumulate(b, dy);
                }
            })),
        )
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.assert_same_shape(a, b, "sub");
        let data: Vec<S> =
            self.data(a).iter().zip(self.data(b)).map(|(x, y)| *x - *y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    grads.accumulate(a, dy);
                }
                if g.requires_grad(b) {
                    let buf = grads.entry(b, dy.len());
                    for (gv, d) in buf.iter_mut().zip(dy) {
                        *gv -= *d;
                    }
                }
            })),
        )
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.assert_same_shape(a, b, "mul");
        let data: Vec<S> =
            self.data(a).iter().zip(self.data(b)).map(|(x, y)| *x * *y).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let bd = g.data(b);
                    let buf = grads.entry(a, dy.len());
                    for i in 0..dy.len() {
                        buf[i] += dy[i] * bd[i];
                    }
                }
                if g.requires_grad(b) {
                    let ad = g.data(a);
                    let buf = grads.entry(b, dy.len());
                    for i in 0..dy.len() {
                        buf[i] += dy[i] * ad[i];
                    }
                }
            })),
        )
    }

    pub fn scale(&mut self, a: TensorId, c: S) -> TensorId {
        let data: Vec<S> = self.data(a).iter().map(|x| *x * c).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let buf = grads.entry(a, dy.len());
                    for i in 0..dy.len() {
                        buf[i] += dy[i] * c;
                    }
                }
            })),
        )
    }

    pub fn square(&mut self, a: TensorId) -> TensorId {
        let data: Vec<S> = self.data(a).iter().map(|x| *x * *x).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let ad = g.data(a);
                    let two = S::from_f64(2.0);
                    let buf = grads.entry(a, dy.len());
                    for i in 0..dy.len() {
                        buf[i] += two * ad[i] * dy[i];
                    }
                }
            })),
        )
    }

    pub fn abs(&mut self, a: TensorId) -> TensorId {
        let data: Vec<S> = self.data(a).iter().map(|x| x.abs()).collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let ad = g.data(a);
                    let buf = grads.entry(a, dy.len());
                    for i in 0..dy.len() {
                        let s = if ad[i] > S::zero() {
                            S::one()
                        } else if ad[i] < S::zero() {
                            -S::one()
                        } else {
                            S::zero()
                        };
                        buf[i] += dy[i] * s;
                    }
                }
            })),
        )
    }

    pub fn silu(&mut self, a: TensorId) -> TensorId {
        let data: Vec<S> = self
            .data(a)
            .iter()
            .map(|x| {
                let sig = S::one() / (S::one() + (-*x).exp());
                *x * sig
            })
            .collect();
        let shape = self.shape(a).to_vec();
        let rg = self.requires_grad(a);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let ad = g.data(a);
                    let buf = grads.entry(a, dy.len());
                    for i in 0..dy.len() {
                        let x = ad[i];
                        let sig = S::one() / (S::one() + (-x).exp());
                        let d = sig * (S::one() + x * (S::one() - sig));
                        buf[i] += dy[i] * d;
                    }
                }
            })),
        )
    }

    /// x[.., d] + b[d], broadcasting over all leading dims.
    pub fn add_row(&mut self, x: TensorId, b: TensorId) -> TensorId {
        let d = *self.shape(x).last().expect("add_row: x must have rank >= 1");
        assert_eq!(self.shape(b), &[d], "add_row: bias shape mismatch");
        let bd = self.data(b).to_vec();
        let data: Vec<S> = self
            .data(x)
            .iter()
            .enumerate()
            .map(|(i, v)| *v + bd[i % d])
            .collect();
        let shape = self.shape(x).to_vec();
        let rg = self.requires_grad(x) || self.requires_grad(b);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(x) {
                    grads.accumulate(x, dy);
                }
                if g.requires_grad(b) {
                    let buf = grads.entry(b, d);
                    for (i, v) in dy.iter().enumerate() {
                        buf[i % d] += *v;
                    }
                }
            })),
        )
    }

    /// x[f, c, h, w] + v[c], broadcast over frames and spatial dims.
    pub fn add_chan(&mut self, x: TensorId, v: TensorId) -> TensorId {
        let sh = self.shape(x).to_vec();
        assert_eq!(sh.len(), 4, "add_chan: x must be 4-d");
        let (c, hw) = (sh[1], sh[2] * sh[3]);
        assert_eq!(self.shape(v), &[c], "add_chan: channel vector mismatch");
        let vd = self.data(v).to_vec();
        let data: Vec<S> = self
            .data(x)
            .iter()
            .enumerate()
            .map(|(i, val)| *val + vd[(i / hw) % c])
            .collect();
        let rg = self.requires_grad(x) || self.requires_grad(v);
        self.push(
            data,
            sh,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(x) {
                    grads.accumulate(x, dy);
                }
                if g.requires_grad(v) {
                    let buf = grads.entry(v, c);
                    for (i, d) in dy.iter().enumerate() {
                        buf[(i / hw) % c] += *d;
                    }
                }
            })),
        )
    }

    /// a[m,k] * b[k,n] -> [m,n]
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        assert_eq!(sa.len(), 2, "matmul: a must be 2-d");
        assert_eq!(sb.len(), 2, "matmul: b must be 2-d");
        assert_eq!(sa[1], sb[0], "matmul: inner dims differ");
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut data = vec![S::zero(); m * n];
        gemm(m, k, n, self.data(a), self.data(b), &mut data, false);
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            data,
            vec![m, n],
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let bt = transpose(g.data(b), k, n);
                    let mut da = vec![S::zero(); m * k];
                    gemm(m, n, k, dy, &bt, &mut da, false);
                    grads.accumulate(a, &da);
                }
                if g.requires_grad(b) {
                    let at = transpose(g.data(a), m, k);
                    let mut db = vec![S::zero(); k * n];
                    gemm(k, m, n, &at, dy, &mut db, false);
                    grads.accumulate(b, &db);
                }
            })),
        )
    }

    /// a[bn,m,k] * b[bn,k,n] -> [bn,m,n]
    pub fn bmm(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        assert_eq!(sa.len(), 3, "bmm: a must be 3-d");
        assert_eq!(sb.len(), 3, "bmm: b must be 3-d");
        assert_eq!(sa[0], sb[0], "bmm: batch dims differ");
        assert_eq!(sa[2], sb[1], "bmm: inner dims differ");
        let (bn, m, k, n) = (sa[0], sa[1], sa[2], sb[2]);
        let mut data = vec![S::zero(); bn * m * n];
        {
            let ad = self.data(a);
            let bd = self.data(b);
            data.par_chunks_mut(m * n).enumerate().for_each(|(i, chunk)| {
                gemm(m, k, n, &ad[i * m * k..(i + 1) * m * k], &bd[i * k * n..(i + 1) * k * n], chunk, false);
            });
        }
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            data,
            vec![bn, m, n],
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let bd = g.data(b);
                    let mut da = vec![S::zero(); bn * m * k];
                    da.par_chunks_mut(m * k).enumerate().for_each(|(i, chunk)| {
                        let bt = transpose(&bd[i * k * n..(i + 1) * k * n], k, n);
                        gemm(m, n, k, &dy[i * m * n..(i + 1) * m * n], &bt, chunk, false);
                    });
                    grads.accumulate(a, &da);
                }
                if g.requires_grad(b) {
                    let ad = g.data(a);
                    let mut db = vec![S::zero(); bn * k * n];
                    db.par_chunks_mut(k * n).enumerate().for_each(|(i, chunk)| {
                        let at = transpose(&ad[i * m * k..(i + 1) * m * k], m, k);
                        gemm(k, m, n, &at, &dy[i * m * n..(i + 1) * m * n], chunk, false);
                    });
                    grads.accumulate(b, &db);
                }
            })),
        )
    }

    /// conv2d on x[f, ic, h, w] with weight[oc, ic, kh, kw] and bias[oc].
    pub fn conv2d(
        &mut self,
        x: TensorId,
        weight: TensorId,
        bias: TensorId,
        stride: usize,
        pad: usize,
    ) -> TensorId {
        let sx = self.shape(x).to_vec();
        let sw = self.shape(weight).to_vec();
        assert_eq!(sx.len(), 4, "conv2d: x must be 4-d");
        assert_eq!(sw.len(), 4, "conv2d: weight must be 4-d");
        assert_eq!(sx[1], sw[1], "conv2d: channel mismatch");
        let (f, ic, h, w) = (sx[0], sx[1], sx[2], sx[3]);
        let (oc, kh, kw) = (sw[0], sw[2], sw[3]);
        assert_eq!(self.shape(bias), &[oc], "conv2d: bias mismatch");
        let oh = (h + 2 * pad - kh) / stride + 1;
        let ow = (w + 2 * pad - kw) / stride + 1;
        let kdim = ic * kh * kw;
        let mut data = vec![S::zero(); f * oc * oh * ow];
        {
            let xd = self.data(x);
            let wd = self.data(weight);
            let bd = self.data(bias);
            data.par_chunks_mut(oc * oh * ow).enumerate().for_each(|(fi, out)| {
                let mut cols = vec![S::zero(); kdim * oh * ow];
                im2col(&xd[fi * ic * h * w..(fi + 1) * ic * h * w], ic, h, w, kh, kw, stride, pad, &mut cols);
                gemm(oc, kdim, oh * ow, wd, &cols, out, false);
                for c in 0..oc {
                    let b = bd[c];
                    for v in &mut out[c * oh * ow..(c + 1) * oh * ow] {
                        *v += b;
                    }
                }
            });
        }
        let rg = self.requires_grad(x) || self.requires_grad(weight) || self.requires_grad(bias);
        self.push(
            data,
            vec![f, oc, oh, ow],
            rg,
            Some(Box::new(move |g, grads, dy| {
                let xd = g.data(x);
                let wd = g.data(weight);
                let need_x = g.requires_grad(x);
                let need_w = g.requires_grad(weight);
                let need_b = g.requires_grad(bias);
                let mut dx = if need_x { vec![S::zero(); f * ic * h * w] } else { Vec::new() };
                // per-frame partials, reduced in frame order for determinism
                let partials: Vec<(Vec<S>, Vec<S>)> = if need_x {
                    dx.par_chunks_mut(ic * h * w)
                        .enumerate()
                        .map(|(fi, dxf)| {
                            let dyf = &dy[fi * oc * oh * ow..(fi + 1) * oc * oh * ow];
                            let (dw, db) = conv_frame_param_grads(
                                need_w, need_b, xd, wd, dyf, fi, ic, h, w, oc, kh, kw, stride, pad,
                            );
                            let wt = transpose(wd, oc, kdim);
                            let mut dcols = vec![S::zero(); kdim * oh * ow];
                            gemm(kdim, oc, oh * ow, &wt, dyf, &mut dcols, false);
                            col2im(&dcols, ic, h, w, kh, kw, stride, pad, dxf);
                            (dw, db)
                        })
                        .collect()
                } else {
                    (0..f)
                        .into_par_iter()
                        .map(|fi| {
                            let dyf = &dy[fi * oc * oh * ow..(fi + 1) * oc * oh * ow];
                            conv_frame_param_grads(
                                need_w, need_b, xd, wd, dyf, fi, ic, h, w, oc, kh, kw, stride, pad,
                            )
                        })
                        .collect()
                };
                if need_x {
                    grads.accumulate(x, &dx);
                }
                if need_w {
                    let buf = grads.entry(weight, oc * kdim);
                    for (dw, _) in &partials {
                        for (gv, d) in buf.iter_mut().zip(dw) {
                            *gv += *d;
                        }
                    }
                }
                if need_b {
                    let buf = grads.entry(bias, oc);
                    for (_, db) in &partials {
                        for (gv, d) in buf.iter_mut().zip(db) {
                            *gv += *d;
                        }
                    }
                }
            })),
        )
    }

    /// Nearest-neighbour 2x spatial upsampling of x[f, c, h, w].
    pub fn upsample_nearest_2x(&mut self, x: TensorId) -> TensorId {
        let sx = self.shape(x).to_vec();
        assert_eq!(sx.len(), 4, "upsample: x must be 4-d");
        let (f, c, h, w) = (sx[0], sx[1], sx[2], sx[3]);
        let (oh, ow) = (2 * h, 2 * w);
        let xd = self.data(x);
        let mut data = vec![S::zero(); f * c * oh * ow];
        for fc in 0..f * c {
            let src = &xd[fc * h * w..(fc + 1) * h * w];
            let dst = &mut data[fc * oh * ow..(fc + 1) * oh * ow];
            for y in 0..oh {
                for xcol in 0..ow {
                    dst[y * ow + xcol] = src[(y / 2) * w + xcol / 2];
                }
            }
        }
        let rg = self.requires_grad(x);
        self.push(
            data,
            vec![f, c, oh, ow],
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(x) {
                    let buf = grads.entry(x, f * c * h * w);
                    for fc in 0..f * c {
                        let dsrc = &dy[fc * oh * ow..(fc + 1) * oh * ow];
                        let dbuf = &mut buf[fc * h * w..(fc + 1) * h * w];
                        for y in 0..oh {
                            for xcol in 0..ow {
                                dbuf[(y / 2) * w + xcol / 2] += dsrc[y * ow + xcol];
                            }
                        }
                    }
                }
            })),
        )
    }

    /// GroupNorm over x[f, c, h, w] with affine gamma[c], beta[c].
    pub fn group_norm(
        &mut self,
        x: TensorId,
        groups: usize,
        gamma: TensorId,
        beta: TensorId,
        eps: f64,
    ) -> TensorId {
        let sx = self.shape(x).to_vec();
        assert_eq!(sx.len(), 4, "group_norm: x must be 4-d");
        let (f, c, h, w) = (sx[0], sx[1], sx[2], sx[3]);
        assert_eq!(c % groups, 0, "group_norm: groups must divide channels");
        assert_eq!(self.shape(gamma), &[c]);
        assert_eq!(self.shape(beta), &[c]);
        let cg = c / groups;
        let gsize = cg * h * w;
        let xd = self.data(x);
        let gd = self.data(gamma).to_vec();
        let bd = self.data(beta).to_vec();
        let mut stats = vec![(0.0f64, 0.0f64); f * groups];
        let mut data = vec![S::zero(); xd.len()];
        for fg in 0..f * groups {
            let base = fg * gsize;
            let (mean, var) = mean_var(&xd[base..base + gsize]);
            let inv = 1.0 / (var + eps).sqrt();
            stats[fg] = (mean, inv);
            let ch0 = (fg % groups) * cg;
            for i in 0..gsize {
                let ch = ch0 + i / (h * w);
                let xn = S::from_f64((xd[base + i].as_f64() - mean) * inv);
                data[base + i] = gd[ch] * xn + bd[ch];
            }
        }
        let rg = self.requires_grad(x) || self.requires_grad(gamma) || self.requires_grad(beta);
        self.push(
            data,
            sx,
            rg,
            Some(Box::new(move |g, grads, dy| {
                let xd = g.data(x);
                let gd = g.data(gamma);
                let need_x = g.requires_grad(x);
                let mut dgamma = vec![0.0f64; c];
                let mut dbeta = vec![0.0f64; c];
                let mut dx = if need_x { vec![S::zero(); xd.len()] } else { Vec::new() };
                for fg in 0..f * groups {
                    let base = fg * gsize;
                    let (mean, inv) = stats[fg];
                    let ch0 = (fg % groups) * cg;
                    let mut s1 = 0.0f64;
                    let mut s2 = 0.0f64;
                    for i in 0..gsize {
                        let ch = ch0 + i / (h * w);
                        let xn = (xd[base + i].as_f64() - mean) * inv;
                        let d = dy[base + i].as_f64();
                        dgamma[ch] += d * xn;
                        dbeta[ch] += d;
                        let dxn = d * gd[ch].as_f64();
                        s1 += dxn;
                        s2 += dxn * xn;
                    }
                    if need_x {
                        let n = gsize as f64;
                        for i in 0..gsize {
                            let ch = ch0 + i / (h * w);
                            let xn = (xd[base + i].as_f64() - mean) * inv;
                            let dxn = dy[base + i].as_f64() * gd[ch].as_f64();
                            let v = inv * (dxn - s1 / n - xn * s2 / n);
                            dx[base + i] = S::from_f64(v);
                        }
                    }
                }
                if need_x {
                    grads.accumulate(x, &dx);
                }
                if g.requires_grad(gamma) {
                    let buf = grads.entry(gamma, c);
                    for i in 0..c {
                        buf[i] += S::from_f64(dgamma[i]);
                    }
                }
                if g.requires_grad(beta) {
                    let buf = grads.entry(beta, c);
                    for i in 0..c {
                        buf[i] += S::from_f64(dbeta[i]);
                    }
                }
            })),
        )
    }

    /// LayerNorm over the last dim of x[.., d] with affine gamma[d], beta[d].
    pub fn layer_norm(&mut self, x: TensorId, gamma: TensorId, beta: TensorId, eps: f64) -> TensorId {
        let sx = self.shape(x).to_vec();
        let d = *sx.last().expect("layer_norm: rank >= 1");
        assert_eq!(self.shape(gamma), &[d]);
        assert_eq!(self.shape(beta), &[d]);
        let rows = self.numel(x) / d;
        let xd = self.data(x);
        let gd = self.data(gamma).to_vec();
        let bd = self.data(beta).to_vec();
        let mut stats = vec![(0.0f64, 0.0f64); rows];
        let mut data = vec![S::zero(); xd.len()];
        for r in 0..rows {
            let base = r * d;
            let (mean, var) = mean_var(&xd[base..base + d]);
            let inv = 1.0 / (var + eps).sqrt();
            stats[r] = (mean, inv);
            for i in 0..d {
                let xn = S::from_f64((xd[base + i].as_f64() - mean) * inv);
                data[base + i] = gd[i] * xn + bd[i];
            }
        }
        let rg = self.requires_grad(x) || self.requires_grad(gamma) || self.requires_grad(beta);
        self.push(
            data,
            sx,
            rg,
            Some(Box::new(move |g, grads, dy| {
                let xd = g.data(x);
                let gd = g.data(gamma);
                let need_x = g.requires_grad(x);
                let mut dgamma = vec![0.0f64; d];
                let mut dbeta = vec![0.0f64; d];
                let mut dx = if need_x { vec![S::zero(); xd.len()] } else { Vec::new() };
                for r in 0..rows {
                    let base = r * d;
                    let (mean, inv) = stats[r];
                    let mut s1 = 0.0f64;
                    let mut s2 = 0.0f64;
                    for i in 0..d {
                        let xn = (xd[base + i].as_f64() - mean) * inv;
                        let dv = dy[base + i].as_f64();
                        dgamma[i] += dv * xn;
                        dbeta[i] += dv;
                        let dxn = dv * gd[i].as_f64();
                        s1 += dxn;
                        s2 += dxn * xn;
                    }
                    if need_x {
                        let n = d as f64;
                        for i in 0..d {
                            let xn = (xd[base + i].as_f64() - mean) * inv;
                            let dxn = dy[base + i].as_f64() * gd[i].as_f64();
                            dx[base + i] = S::from_f64(inv * (dxn - s1 / n - xn * s2 / n));
                        }
                    }
                }
                if need_x {
                    grads.accumulate(x, &dx);
                }
                if g.requires_grad(gamma) {
                    let buf = grads.entry(gamma, d);
                    for i in 0..d {
                        buf[i] += S::from_f64(dgamma[i]);
                    }
                }
                if g.requires_grad(beta) {
                    let buf = grads.entry(beta, d);
                    for i in 0..d {
                        buf[i] += S::from_f64(dbeta[i]);
                    }
                }
            })),
        )
    }

    /// Softmax over the last dim.
    pub fn softmax_lastdim(&mut self, x: TensorId) -> TensorId {
        let sx = self.shape(x).to_vec();
        let d = *sx.last().expect("softmax: rank >= 1");
        let rows = self.numel(x) / d;
        let xd = self.data(x);
        let mut data = vec![S::zero(); xd.len()];
        for r in 0..rows {
            let base = r * d;
            let row = &xd[base..base + d];
            let mut mx = row[0];
            for v in row {
                if *v > mx {
                    mx = *v;
                }
            }
            let mut sum = S::zero();
            for i in 0..d {
                let e = (row[i] - mx).exp();
                data[base + i] = e;
                sum += e;
            }
            for i in 0..d {
                data[base + i] /= sum;
            }
        }
        let rg = self.requires_grad(x);
        let out = self.push(
            data,
            sx,
            rg,
            None,
        );
        if rg {
            let y = out;
            self.set_backward(
                out,
                Box::new(move |g, grads, dy| {
                    let yd = g.data(y);
                    let buf = grads.entry(x, yd.len());
                    for r in 0..rows {
                        let base = r * d;
                        let mut dot = S::zero();
                        for i in 0..d {
                            dot += dy[base + i] * yd[base + i];
                        }
                        for i in 0..d {
                            buf[base + i] += yd[base + i] * (dy[base + i] - dot);
                        }
                    }
                }),
            );
        }
        out
    }

    /// Concatenate two tensors along `axis`; all other dims must match.
    pub fn concat(&mut self, a: TensorId, b: TensorId, axis: usize) -> TensorId {
        let sa = self.shape(a).to_vec();
        let sb = self.shape(b).to_vec();
        assert_eq!(sa.len(), sb.len(), "concat: rank mismatch");
        for (i, (da, db)) in sa.iter().zip(&sb).enumerate() {
            if i != axis {
                assert_eq!(da, db, "concat: non-axis dim {i} mismatch");
            }
        }
        let outer: usize = sa[..axis].iter().product();
        let inner: usize = sa[axis + 1..].iter().product();
        let (la, lb) = (sa[axis], sb[axis]);
        let mut shape = sa.clone();
        shape[axis] = la + lb;
        let ad = self.data(a);
        let bd = self.data(b);
        let mut data = vec![S::zero(); ad.len() + bd.len()];
        let stride_a = la * inner;
        let stride_b = lb * inner;
        let stride_o = (la + lb) * inner;
        for o in 0..outer {
            data[o * stride_o..o * stride_o + stride_a]
                .copy_from_slice(&ad[o * stride_a..(o + 1) * stride_a]);
            data[o * stride_o + stride_a..(o + 1) * stride_o]
                .copy_from_slice(&bd[o * stride_b..(o + 1) * stride_b]);
        }
        let rg = self.requires_grad(a) || self.requires_grad(b);
        self.push(
            data,
            shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(a) {
                    let buf = grads.entry(a, outer * stride_a);
                    for o in 0..outer {
                        for i in 0..stride_a {
                            buf[o * stride_a + i] += dy[o * stride_o + i];
                        }
                    }
                }
                if g.requires_grad(b) {
                    let buf = grads.entry(b, outer * stride_b);
                    for o in 0..outer {
                        for i in 0..stride_b {
                            buf[o * stride_b + i] += dy[o * stride_o + stride_a + i];
                        }
                    }
                }
            })),
        )
    }

    /// Reorder dims by `axes` (a permutation of 0..rank).
    pub fn permute(&mut self, x: TensorId, axes: &[usize]) -> TensorId {
        let sx = self.shape(x).to_vec();
        let rank = sx.len();
        assert_eq!(axes.len(), rank, "permute: axes rank mismatch");
        let mut seen = vec![false; rank];
        for &a in axes {
            assert!(a < rank && !seen[a], "permute: invalid axes");
            seen[a] = true;
        }
        let out_shape: Vec<usize> = axes.iter().map(|&a| sx[a]).collect();
        let fwd = build_permute_map(&sx, axes);
        let xd = self.data(x);
        let mut data = vec![S::zero(); xd.len()];
        for (dst, &src) in fwd.iter().enumerate() {
            data[dst] = xd[src];
        }
        let rg = self.requires_grad(x);
        self.push(
            data,
            out_shape,
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(x) {
                    let buf = grads.entry(x, dy.len());
                    for (dst, &src) in fwd.iter().enumerate() {
                        buf[src] += dy[dst];
                    }
                }
            })),
        )
    }

    /// Same data, new shape (copies; tensors are small here).
    pub fn reshape(&mut self, x: TensorId, shape: &[usize]) -> TensorId {
        let numel: usize = shape.iter().product();
        assert_eq!(numel, self.numel(x), "reshape: numel mismatch");
        let data = self.data(x).to_vec();
        let rg = self.requires_grad(x);
        self.push(
            data,
            shape.to_vec(),
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(x) {
                    grads.accumulate(x, dy);
                }
            })),
        )
    }

    /// Mean over all elements -> shape [1].
    pub fn mean_all(&mut self, x: TensorId) -> TensorId {
        let n = self.numel(x);
        let mut acc = 0.0f64;
        for v in self.data(x) {
            acc += v.as_f64();
        }
        let data = vec![S::from_f64(acc / n as f64)];
        let rg = self.requires_grad(x);
        self.push(
            data,
            vec![1],
            rg,
            Some(Box::new(move |g, grads, dy| {
                if g.requires_grad(x) {
                    let d = dy[0] / S::from_f64(n as f64);
                    let buf = grads.entry(x, n);
                    for v in buf.iter_mut() {
                        *v += d;
                    }
                }
            })),
        )
    }

    fn set_backward(&mut self, id: TensorId, f: crate::graph::BackFn<S>) {
        self.nodes[id.0].backward = Some(f);
    }
}

fn build_permute_map(in_shape: &[usize], axes: &[usize]) -> Vec<usize> {
    let rank = in_shape.len();
    let numel: usize = in_shape.iter().product();
    let mut in_strides = vec![1usize; rank];
    for i in (0..rank.saturating_sub(1)).rev() {
        in_strides[i] = in_strides[i + 1] * in_shape[i + 1];
    }
    let out_shape: Vec<usize> = axes.iter().map(|&a| in_shape[a]).collect();
    let mut map = vec![0usize; numel];
    let mut idx = vec![0usize; rank];
    for (dst, m) in map.iter_mut().enumerate() {
        let mut src = 0usize;
        for (i, &ax) in axes.iter().enumerate() {
            src += idx[i] * in_strides[ax];
        }
        *m = src;
        let _ = dst;
        // increment multi-index over out_shape
        for i in (0..rank).rev() {
            idx[i] += 1;
            if idx[i] < out_shape[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    map
}

#[allow(clippy::too_many_arguments)]
fn conv_frame_param_grads<S: Scalar>(
    need_w: bool,
    need_b: bool,
    xd: &[S],
    _wd: &[S],
    dyf: &[S],
    fi: usize,
    ic: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
) -> (Vec<S>, Vec<S>) {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    let kdim = ic * kh * kw;
    let mut dw = Vec::new();
    let mut db = Vec::new();
    if need_w {
        let mut cols = vec![S::zero(); kdim * oh * ow];
        im2col(&xd[fi * ic * h * w..(fi + 1) * ic * h * w], ic, h, w, kh, kw, stride, pad, &mut cols);
        let colst = transpose(&cols, kdim, oh * ow);
        dw = vec![S::zero(); oc * kdim];
        gemm(oc, oh * ow, kdim, dyf, &colst, &mut dw, false);
    }
    if need_b {
        db = vec![S::zero(); oc];
        for c in 0..oc {
            let mut acc = 0.0f64;
            for v in &dyf[c * oh * ow..(c + 1) * oh * ow] {
                acc += v.as_f64();
            }
            db[c] = S::from_f64(acc);
        }
    }
    (dw, db)
}
