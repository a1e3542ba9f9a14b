use crate::Scalar;

/// C[m,n] = A[m,k] * B[k,n] (+ C when `accumulate`), row-major.
pub fn gemm<S: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[S],
    b: &[S],
    c: &mut [S],
    accumulate: bool,
) {
    assert_eq!(a.len(), m * k);
    assert_eq!(b.len(), k * n);
    assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        if !accumulate {
            c.fill(S::zero());
        }
        return;
    }
    let beta = if accumulate { S::one() } else { S::zero() };
    unsafe {
        S::gemm(m, k, n, S::one(), a.as_ptr(), b.as_ptr(), beta, c.as_mut_ptr());
    }
}

/// Lower one CHW image into convolution columns: out[ic*kh*kw, oh*ow].
#[allow(clippy::too_many_arguments)]
pub fn im2col<S: Scalar>(
    x: &[S],
    ic: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    out: &mut [S],
) {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    assert_eq!(out.len(), ic * kh * kw * oh * ow);
    let mut row = 0usize;
    for c in 0..ic {
        let xc = &x[c * h * w..(c + 1) * h * w];
        for ky in 0..kh {
            for kx in 0..kw {
                let dst = &mut out[row * oh * ow..(row + 1) * oh * ow];
                row += 1;
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    let drow = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        drow.fill(S::zero());
                        continue;
                    }
                    let xrow = &xc[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, d) in drow.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        *d = if ix < 0 || ix >= w as isize {
                            S::zero()
                        } else {
                            xrow[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter columns back into a CHW gradient image.
#[allow(clippy::too_many_arguments)]
pub fn col2im<S: Scalar>(
    cols: &[S],
    ic: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    out: &mut [S],
) {
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (w + 2 * pad - kw) / stride + 1;
    assert_eq!(cols.len(), ic * kh * kw * oh * ow);
    assert_eq!(out.len(), ic * h * w);
    out.fill(S::zero());
    let mut row = 0usize;
    for c in 0..ic {
        for ky in 0..kh {
            for kx in 0..kw {
                let src = &cols[row * oh * ow..(row + 1) * oh * ow];
                row += 1;
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let base = c * h * w + iy as usize * w;
                    for ox in 0..ow {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        out[base + ix as usize] += src[oy * ow + ox];
                    }
                }
            }
        }
    }
}

/// Mean and variance with an f64 accumulator (population variance).
pub fn mean_var<S: Scalar>(x: &[S]) -> (f64, f64) {
    let n = x.len() as f64;
    let mut sum = 0.0f64;
    for v in x {
        sum += v.as_f64();
    }
    let mean = sum / n;
    let mut ss = 0.0f64;
    for v in x {
        let d = v.as_f64() - mean;
        ss += d * d;
    }
    (mean, ss / n)
}
