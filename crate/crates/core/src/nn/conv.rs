//! 2-D convolution (cross-correlation) with zero padding, as one fused op.
//!
//! `y[b, c, i, j] = bias[c] + Σ_{c', u, v} w[c, c', u, v] · x[b, c', i·s + u − p, j·s + v − p]`
//! with 0-based `u, v`. Each batch item is unfolded into a column matrix
//! (im2col); the pullbacks reuse the same unfolding.

use crate::autograd::record;
use crate::error::{shape_err, Error, Result};
use crate::parallel::for_each_block;
use crate::shape::Shape;
use crate::tensor::Tensor;

use super::{init_param, Layer, Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// (K_h, K_w)
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: usize,
}

impl ConvSpec {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: usize,
    ) -> Self {
        ConvSpec {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        }
    }

    /// Output spatial extents for an `h × w` input, or `None` when no output position fits.
    pub fn output_size(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (kh, kw) = self.kernel;
        if self.stride == 0 || kh == 0 || kw == 0 {
            return None;
        }
        let (ph, pw) = (h + 2 * self.padding, w + 2 * self.padding);
        if ph < kh || pw < kw {
            return None;
        }
        Some(((ph - kh) / self.stride + 1, (pw - kw) / self.stride + 1))
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [
            self.out_channels,
            self.in_channels,
            self.kernel.0,
            self.kernel.1,
        ]
    }
}

#[derive(Clone, Copy)]
struct Geometry {
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn k(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn p(&self) -> usize {
        self.ho * self.wo
    }

    /// Input row/column feeding output index `o` at kernel tap `t`, if inside the image.
    fn source(&self, o: usize, t: usize, extent: usize) -> Option<usize> {
        (o * self.stride + t).checked_sub(self.pad).filter(|&r| r < extent)
    }

    /// Unfold one batch item `x (cin×h×w)` into `cols (K×P)`.
    fn im2col(&self, x: &[f32], cols: &mut [f32]) {
        let p_len = self.p();
        for c in 0..self.cin {
            for u in 0..self.kh {
                for v in 0..self.kw {
                    let k = (c * self.kh + u) * self.kw + v;
                    let row_out = &mut cols[k * p_len..(k + 1) * p_len];
                    for i in 0..self.ho {
                        let src_row = self.source(i, u, self.h);
                        for j in 0..self.wo {
                            row_out[i * self.wo + j] = match (src_row, self.source(j, v, self.w)) {
                                (Some(r), Some(q)) => x[(c * self.h + r) * self.w + q],
                                _ => 0.0,
                            };
                        }
                    }
                }
            }
        }
    }

    /// Scatter-add `cols (K×P)` back onto `x (cin×h×w)`.
    fn col2im(&self, cols: &[f32], x: &mut [f32]) {
        let p_len = self.p();
        for c in 0..self.cin {
            for u in 0..self.kh {
                for v in 0..self.kw {
                    let k = (c * self.kh + u) * self.kw + v;
                    for i in 0..self.ho {
                        let Some(r) = self.source(i, u, self.h) else {
                            continue;
                        };
                        for j in 0..self.wo {
                            if let Some(q) = self.source(j, v, self.w) {
                                x[(c * self.h + r) * self.w + q] += cols[k * p_len + i * self.wo + j];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn validate(x: &Tensor, spec: &ConvSpec, w: &Tensor, bias: Option<&Tensor>) -> Result<Geometry> {
    if x.rank() != 4 {
        return Err(Error::Rank {
            op: "conv2d",
            expected: 4,
            got: x.rank(),
        });
    }
    let d = x.dims();
    if d[1] != spec.in_channels {
        return Err(shape_err(
            "conv2d",
            format!("input has {} channels, spec expects {}", d[1], spec.in_channels),
        ));
    }
    if w.dims() != spec.weight_shape() {
        return Err(shape_err(
            "conv2d",
            format!("weight {} does not match spec {:?}", w.shape(), spec.weight_shape()),
        ));
    }
    if let Some(b) = bias {
        if b.dims() != [spec.out_channels] {
            return Err(shape_err(
                "conv2d",
                format!("bias {} for {} output channels", b.shape(), spec.out_channels),
            ));
        }
    }
    let (ho, wo) = spec.output_size(d[2], d[3]).ok_or_else(|| {
        shape_err(
            "conv2d",
            format!(
                "kernel {:?} with stride {} and padding {} does not fit input {}x{}",
                spec.kernel, spec.stride, spec.padding, d[2], d[3]
            ),
        )
    })?;
    Ok(Geometry {
        cin: d[1],
        h: d[2],
        w: d[3],
        cout: spec.out_channels,
        kh: spec.kernel.0,
        kw: spec.kernel.1,
        stride: spec.stride,
        pad: spec.padding,
        ho,
        wo,
    })
}

/// Convolve `x (B×C_in×H×W)` with `w (C_out×C_in×K_h×K_w)` plus an optional
/// per-output-channel bias, giving `B×C_out×H'×W'`.
pub fn conv2d(x: &Tensor, w: &Tensor, bias: Option<&Tensor>, spec: ConvSpec) -> Result<Tensor> {
    let geo = validate(x, &spec, w, bias)?;
    let batch = x.dims()[0];
    let (k_len, p_len) = (geo.k(), geo.p());
    let xv = x.to_vec();
    let wv = w.to_vec();
    let bv = bias.map(|b| b.to_vec());
    let item_in = geo.cin * geo.h * geo.w;
    let item_out = geo.cout * p_len;

    let mut out = vec![0.0f32; batch * item_out];
    for_each_block(&mut out, item_out, batch * item_out * k_len, |bi, y| {
        let mut cols = vec![0.0f32; k_len * p_len];
        geo.im2col(&xv[bi * item_in..(bi + 1) * item_in], &mut cols);
        for co in 0..geo.cout {
            let acc = &mut y[co * p_len..(co + 1) * p_len];
            acc.fill(bv.as_ref().map_or(0.0, |b| b[co]));
            for k in 0..k_len {
                let wk = wv[co * k_len + k];
                for (a, &c) in acc.iter_mut().zip(&cols[k * p_len..(k + 1) * p_len]) {
                    *a += wk * c;
                }
            }
        }
    });
    let out = Tensor::from_parts(out, Shape::new(vec![batch, geo.cout, geo.ho, geo.wo]));

    let mut inputs = vec![x, w];
    if let Some(b) = bias {
        inputs.push(b);
    }
    let (need_x, need_w) = (x.requires_grad(), w.requires_grad());
    let has_bias = bias.is_some();
    let (x_shape, w_shape) = (x.shape().clone(), w.shape().clone());
    Ok(record("conv2d", &inputs, out, move |g| {
        let gv = g.to_vec();
        let mut gx = vec![0.0f32; xv.len()];
        let mut gw = vec![0.0f32; wv.len()];
        let mut gb = vec![0.0f32; geo.cout];
        let mut cols = vec![0.0f32; k_len * p_len];
        let mut gcols = vec![0.0f32; k_len * p_len];
        for bi in 0..batch {
            let gy = &gv[bi * item_out..(bi + 1) * item_out];
            if need_w {
                geo.im2col(&xv[bi * item_in..(bi + 1) * item_in], &mut cols);
            }
            if need_x {
                gcols.fill(0.0);
            }
            for co in 0..geo.cout {
                let gyc = &gy[co * p_len..(co + 1) * p_len];
                gb[co] += gyc.iter().fold(0.0f32, |a, &v| a + v);
                for k in 0..k_len {
                    if need_w {
                        let c = &cols[k * p_len..(k + 1) * p_len];
                        gw[co * k_len + k] += gyc.iter().zip(c).fold(0.0f32, |a, (&g, &c)| a + g * c);
                    }
                    if need_x {
                        let wk = wv[co * k_len + k];
                        for (gc, &g) in gcols[k * p_len..(k + 1) * p_len].iter_mut().zip(gyc) {
                            *gc += wk * g;
                        }
                    }
                }
            }
            if need_x {
                geo.col2im(&gcols, &mut gx[bi * item_in..(bi + 1) * item_in]);
            }
        }
        let mut cts = vec![
            need_x.then(|| Tensor::from_parts(gx, x_shape.clone())),
            need_w.then(|| Tensor::from_parts(gw, w_shape.clone())),
        ];
        if has_bias {
            cts.push(Some(Tensor::from_parts(gb, Shape::new(vec![geo.cout]))));
        }
        Ok(cts)
    }))
}

/// Convolution layer. Bias is on by default.
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub spec: ConvSpec,
    pub weight: Tensor,
    pub bias: Option<Tensor>,
    mode: Mode,
}

impl Conv2d {
    pub fn new(spec: ConvSpec, bias: bool, seed: u64) -> Self {
        let fan_in = spec.in_channels * spec.kernel.0 * spec.kernel.1;
        Conv2d {
            spec,
            weight: init_param(&spec.weight_shape(), fan_in, seed),
            bias: bias.then(|| init_param(&[spec.out_channels], fan_in, seed ^ 0x5bd1_e995)),
            mode: Mode::Train,
        }
    }
}

impl Layer for Conv2d {
    fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        conv2d(x, &self.weight, self.bias.as_ref(), self.spec)
    }

    fn parameters(&self) -> Vec<(String, Tensor)> {
        let mut p = vec![("weight".to_string(), self.weight.clone())];
        if let Some(b) = &self.bias {
            p.push(("bias".into(), b.clone()));
        }
        p
    }

    fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    fn mode(&self) -> Mode {
        self.mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct summation of the convolution definition.
    fn direct(x: &Tensor, w: &Tensor, spec: ConvSpec) -> Vec<f32> {
        let d = x.dims();
        let (ho, wo) = spec.output_size(d[2], d[3]).unwrap();
        let mut out = Vec::new();
        for b in 0..d[0] {
            for c in 0..spec.out_channels {
                for i in 0..ho {
                    for j in 0..wo {
                        let mut acc = 0.0f64;
                        for c2 in 0..spec.in_channels {
                            for u in 0..spec.kernel.0 {
                                for v in 0..spec.kernel.1 {
                                    let r = (i * spec.stride + u) as isize - spec.padding as isize;
                                    let q = (j * spec.stride + v) as isize - spec.padding as isize;
                                    if r < 0 || q < 0 || r >= d[2] as isize || q >= d[3] as isize {
                                        continue;
                                    }
                                    acc += (w.get(&[c, c2, u, v]).unwrap()
                                        * x.get(&[b, c2, r as usize, q as usize]).unwrap())
                                        as f64;
                                }
                            }
                        }
                        out.push(acc as f32);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn ones_kernel_on_ones() {
        let spec = ConvSpec::new(1, 1, (2, 2), 1, 0);
        let y = conv2d(&Tensor::ones([1, 1, 3, 3]), &Tensor::ones([1, 1, 2, 2]), None, spec).unwrap();
        assert_eq!(y.dims(), &[1, 1, 2, 2]);
        assert_eq!(y.to_vec(), vec![4.0; 4]);
    }

    #[test]
    fn delta_kernel_is_identity() {
        let x = Tensor::uniform([2, 3, 4, 5], -3.0, 3.0, 8);
        let mut w = vec![0.0; 9];
        for c in 0..3 {
            w[c * 3 + c] = 1.0;
        }
        let w = Tensor::from_vec(w, [3, 3, 1, 1]).unwrap();
        let spec = ConvSpec::new(3, 3, (1, 1), 1, 0);
        let y = conv2d(&x, &w, Some(&Tensor::zeros([3])), spec).unwrap();
        let bits = |v: Vec<f32>| v.into_iter().map(f32::to_bits).collect::<Vec<_>>();
        assert_eq!(bits(y.to_vec()), bits(x.to_vec()));
    }

    #[test]
    fn matches_direct_summation() {
        for (seed, spec, hw) in [
            (1, ConvSpec::new(2, 3, (3, 3), 2, 1), (5, 5)),
            (2, ConvSpec::new(1, 2, (2, 3), 1, 0), (4, 6)),
            (3, ConvSpec::new(3, 1, (3, 2), 3, 2), (7, 5)),
        ] {
            let x = Tensor::uniform([2, spec.in_channels, hw.0, hw.1], -1.0, 1.0, seed);
            let w = Tensor::uniform(spec.weight_shape(), -1.0, 1.0, seed + 10);
            let y = conv2d(&x, &w, None, spec).unwrap();
            for (a, e) in y.to_vec().iter().zip(direct(&x, &w, spec)) {
                assert!((a - e).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let spec = ConvSpec::new(1, 1, (4, 4), 1, 0);
        let w = Tensor::ones([1, 1, 4, 4]);
        assert!(conv2d(&Tensor::ones([1, 1, 3, 3]), &w, None, spec).is_err());
        assert!(conv2d(&Tensor::ones([1, 2, 5, 5]), &w, None, spec).is_err());
        assert!(conv2d(&Tensor::ones([1, 5, 5]), &w, None, spec).is_err());
        let ok = ConvSpec::new(1, 1, (4, 4), 1, 1);
        assert!(conv2d(&Tensor::ones([1, 1, 3, 3]), &w, None, ok).is_ok());
    }

    #[test]
    fn output_extent_formula() {
        let spec = ConvSpec::new(1, 1, (3, 3), 2, 1);
        assert_eq!(spec.output_size(5, 5), Some((3, 3)));
        assert_eq!(spec.output_size(1, 1), Some((1, 1)));
        assert_eq!(ConvSpec::new(1, 1, (3, 3), 0, 0).output_size(5, 5), None);
    }
}
