//! 3x3 convolution and transposed convolution with "same" zero padding.
//!
//! Both layer kinds share one geometry: a *large* grid of size `(H, W)` and a
//! *small* grid of size `(ceil(H/s), ceil(W/s))`. Small position `o` and
//! kernel tap `k` touch large position `o * s + k - pad`. A forward
//! convolution reads the large grid and writes the small one; the transposed
//! layer scatters from the small grid into the large one, which makes it the
//! exact adjoint of the forward layer with the same geometry.

use ndarray::{Array2, Array4};

pub const KERNEL: usize = 3;

/// `(channels, height, width)` of a feature map.
pub type MapShape = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    /// `(out_channels, in_channels, 3, 3)`.
    pub kernels: Array4<f64>,
    pub stride: usize,
    pub transposed: bool,
    pub in_shape: MapShape,
    pub out_shape: MapShape,
}

/// Padding placed before the first row/column so the output covers
/// `ceil(large / stride)` positions. Any odd remainder goes after.
pub fn same_padding(large: usize, small: usize, stride: usize) -> usize {
    let needed = ((small.saturating_sub(1)) * stride + KERNEL).saturating_sub(large);
    needed / 2
}

pub fn same_output(large: usize, stride: usize) -> usize {
    large.div_ceil(stride)
}

impl ConvLayer {
    /// Strided convolution mapping `in_shape` to `(out_channels, ceil(h/s), ceil(w/s))`.
    pub fn conv(in_shape: MapShape, out_channels: usize, stride: usize) -> Self {
        let (c, h, w) = in_shape;
        Self {
            kernels: Array4::zeros((out_channels, c, KERNEL, KERNEL)),
            stride,
            transposed: false,
            in_shape,
            out_shape: (out_channels, same_output(h, stride), same_output(w, stride)),
        }
    }

    /// Transposed convolution mapping `in_shape` back up to `out_shape`,
    /// where `in_shape`'s spatial size must equal `ceil(out/s)`.
    pub fn transposed(in_shape: MapShape, out_shape: MapShape, stride: usize) -> Self {
        debug_assert_eq!(in_shape.1, same_output(out_shape.1, stride));
        debug_assert_eq!(in_shape.2, same_output(out_shape.2, stride));
        Self {
            kernels: Array4::zeros((out_shape.0, in_shape.0, KERNEL, KERNEL)),
            stride,
            transposed: true,
            in_shape,
            out_shape,
        }
    }

    pub fn fan_in(&self) -> usize {
        KERNEL * KERNEL * self.in_shape.0
    }

    fn large(&self) -> MapShape {
        if self.transposed {
            self.out_shape
        } else {
            self.in_shape
        }
    }

    fn small(&self) -> MapShape {
        if self.transposed {
            self.in_shape
        } else {
            self.out_shape
        }
    }

    /// Calls `f(small_offset, large_offset, ky, kx)` for every in-bounds
    /// pairing of a small-grid pixel with a large-grid pixel (spatial only).
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, usize, usize)) {
        let (_, lh, lw) = self.large();
        let (_, sh, sw) = self.small();
        let pt = same_padding(lh, sh, self.stride) as isize;
        let pl = same_padding(lw, sw, self.stride) as isize;
        let s = self.stride as isize;
        for oy in 0..sh {
            for ox in 0..sw {
                for ky in 0..KERNEL {
                    let y = oy as isize * s + ky as isize - pt;
                    if y < 0 || y >= lh as isize {
                        continue;
                    }
                    for kx in 0..KERNEL {
                        let x = ox as isize * s + kx as isize - pl;
                        if x < 0 || x >= lw as isize {
                            continue;
                        }
                        f(oy * sw + ox, y as usize * lw + x as usize, ky, kx);
                    }
                }
            }
        }
    }

    /// `input` is `(in_c*h*w) x n`; returns `(out_c*h'*w') x n`.
    pub fn forward(&self, input: &Array2<f64>) -> Array2<f64> {
        let n = input.ncols();
        let x = input.t().as_standard_layout().into_owned();
        let (ci_n, ih, iw) = self.in_shape;
        let (co_n, oh, ow) = self.out_shape;
        let (in_plane, out_plane) = (ih * iw, oh * ow);
        let mut y = Array2::<f64>::zeros((n, co_n * out_plane));
        let k = &self.kernels;
        let transposed = self.transposed;
        for s in 0..n {
            let xs = x.row(s);
            let xs = xs.as_slice().expect("standard layout");
            let mut ys = y.row_mut(s);
            let ys = ys.as_slice_mut().expect("standard layout");
            self.for_each_tap(|small, large, ky, kx| {
                let (src, dst) = if transposed { (small, large) } else { (large, small) };
                for co in 0..co_n {
                    let mut acc = 0.0;
                    for ci in 0..ci_n {
                        acc += k[[co, ci, ky, kx]] * xs[ci * in_plane + src];
                    }
                    ys[co * out_plane + dst] += acc;
                }
            });
        }
        y.t().as_standard_layout().into_owned()
    }

    /// Returns `(dL/dkernels, dL/dinput)` given the layer input and `dL/doutput`.
    pub fn backward(&self, input: &Array2<f64>, grad_out: &Array2<f64>) -> (Array4<f64>, Array2<f64>) {
        let n = input.ncols();
        let x = input.t().as_standard_layout().into_owned();
        let g = grad_out.t().as_standard_layout().into_owned();
        let (ci_n, ih, iw) = self.in_shape;
        let (co_n, oh, ow) = self.out_shape;
        let (in_plane, out_plane) = (ih * iw, oh * ow);
        let mut gk = Array4::<f64>::zeros(self.kernels.dim());
        let mut gx = Array2::<f64>::zeros((n, ci_n * in_plane));
        let k = &self.kernels;
        let transposed = self.transposed;
        for s in 0..n {
            let xs = x.row(s);
            let xs = xs.as_slice().expect("standard layout");
            let gs = g.row(s);
            let gs = gs.as_slice().expect("standard layout");
            let mut gxs = gx.row_mut(s);
            let gxs = gxs.as_slice_mut().expect("standard layout");
            self.for_each_tap(|small, large, ky, kx| {
                let (src, dst) = if transposed { (small, large) } else { (large, small) };
                for co in 0..co_n {
                    let go = gs[co * out_plane + dst];
                    if go == 0.0 {
                        continue;
                    }
                    for ci in 0..ci_n {
                        gk[[co, ci, ky, kx]] += go * xs[ci * in_plane + src];
                        gxs[ci * in_plane + src] += go * k[[co, ci, ky, kx]];
                    }
                }
            });
        }
        (gk, gx.t().as_standard_layout().into_owned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_matches_same_scheme() {
        assert_eq!(same_output(4, 2), 2);
        assert_eq!(same_output(5, 2), 3);
        assert_eq!(same_output(1, 2), 1);
        assert_eq!(same_padding(4, 4, 1), 1);
        assert_eq!(same_padding(4, 2, 2), 0);
        assert_eq!(same_padding(5, 3, 2), 1);
        assert_eq!(same_padding(1, 1, 2), 1);
    }

    #[test]
    fn identity_kernel_reproduces_input() {
        for transposed in [false, true] {
            let mut layer = if transposed {
                ConvLayer::transposed((1, 4, 4), (1, 4, 4), 1)
            } else {
                ConvLayer::conv((1, 4, 4), 1, 1)
            };
            layer.kernels[[0, 0, 1, 1]] = 1.0;
            let x = Array2::from_shape_fn((16, 2), |(i, j)| (i as f64) - 3.0 * j as f64);
            assert_eq!(layer.forward(&x), x);
        }
    }

    #[test]
    fn transposed_is_adjoint_of_forward() {
        let mut fwd = ConvLayer::conv((2, 5, 4), 3, 2);
        let mut adj = ConvLayer::transposed((3, 3, 2), (2, 5, 4), 2);
        for (i, v) in fwd.kernels.iter_mut().enumerate() {
            *v = ((i * 7) % 11) as f64 - 5.0;
        }
        // Adjoint of y = K x is x = K^T y: swap the channel axes.
        for co in 0..3 {
            for ci in 0..2 {
                for ky in 0..3 {
                    for kx in 0..3 {
                        adj.kernels[[ci, co, ky, kx]] = fwd.kernels[[co, ci, ky, kx]];
                    }
                }
            }
        }
        let x = Array2::from_shape_fn((40, 1), |(i, _)| (i as f64 * 0.37).sin());
        let y = Array2::from_shape_fn((18, 1), |(i, _)| (i as f64 * 0.91).cos());
        let lhs = (&fwd.forward(&x) * &y).sum();
        let rhs = (&x * &adj.forward(&y)).sum();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }
}
