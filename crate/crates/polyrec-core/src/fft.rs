//! Deterministic radix-2 complex FFT (iterative, allocation-free in place).

use num_complex::Complex64;

/// Smallest power of two >= `n` (and >= 1).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// In-place FFT on a power-of-two buffer.
///
/// Forward uses kernel `e^(-2πi jk/n)`; `inverse` conjugates the kernel and
/// divides by `n`. Twiddles come from fresh `sincos` calls per butterfly
/// group, so outputs are bit-identical across runs and platforms.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "FFT length must be a power of two");
    if n <= 1 {
        return;
    }
    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        for j in 0..half {
            let angle = sign * core::f64::consts::TAU * j as f64 / len as f64;
            let (s, c) = libm::sincos(angle);
            let w = Complex64::new(c, s);
            let mut i = j;
            while i < n {
                let lo = buf[i];
                let hi = buf[i + half] * w;
                buf[i] = lo + hi;
                buf[i + half] = lo - hi;
                i += len;
            }
        }
        len *= 2;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// In-place multidimensional FFT; `dims[0]` is the fastest-varying axis and
/// every dimension must be a power of two.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "buffer does not match dimensions");
    let mut scratch = alloc::vec![Complex64::new(0.0, 0.0); dims.iter().copied().max().unwrap_or(1)];
    let mut stride = 1usize;
    for &dim in dims {
        let line = &mut scratch[..dim];
        // Lines along this axis: iterate all index tuples with this axis at 0.
        let blocks = total / (dim * stride);
        for block in 0..blocks {
            for offset in 0..stride {
                let base = block * dim * stride + offset;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + t * stride];
                }
                fft_in_place(line, inverse);
                for (t, slot) in line.iter().enumerate() {
                    data[base + t * stride] = *slot;
                }
            }
        }
        stride *= dim;
    }
}
