//! Complex discrete Fourier transform on `(re, im)` pairs.
//!
//! Radix-2 iterative Cooley–Tukey for power-of-two lengths, direct summation
//! otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

type C = (f64, f64);

#[inline]
fn mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

#[derive(Debug, Clone)]
pub(crate) struct Fft {
    len: usize,
    /// `e^{−2πik/len}` for `k = 0..len`.
    twiddles: Vec<C>,
    bitrev: Option<Vec<usize>>,
}

impl Fft {
    pub(crate) fn new(len: usize) -> Self {
        let twiddles = (0..len)
            .map(|k| {
                let (s, c) = libm::sincos(-2.0 * PI * k as f64 / len as f64);
                (c, s)
            })
            .collect();
        let bitrev = len.is_power_of_two().then(|| {
            let bits = len.trailing_zeros();
            (0..len)
                .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
                .collect()
        });
        Self { len, twiddles, bitrev }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    /// `X_k = Σ_j x_j e^{−2πijk/n}`.
    pub(crate) fn forward(&self, data: &mut [C]) {
        self.transform(data, false);
    }

    /// `x_j = Σ_k X_k e^{+2πijk/n}` (no `1/n` factor).
    pub(crate) fn inverse_unnormalized(&self, data: &mut [C]) {
        self.transform(data, true);
    }

    fn twiddle(&self, k: usize, inverse: bool) -> C {
        let t = self.twiddles[k];
        if inverse {
            (t.0, -t.1)
        } else {
            t
        }
    }

    fn transform(&self, data: &mut [C], inverse: bool) {
        assert_eq!(data.len(), self.len);
        match &self.bitrev {
            Some(rev) => {
                for (i, &j) in rev.iter().enumerate() {
                    if i < j {
                        data.swap(i, j);
                    }
                }
                let mut half = 1;
                while half < self.len {
                    let stride = self.len / (2 * half);
                    for start in (0..self.len).step_by(2 * half) {
                        for k in 0..half {
                            let w = self.twiddle(k * stride, inverse);
                            let u = data[start + k];
                            let v = mul(data[start + k + half], w);
                            data[start + k] = (u.0 + v.0, u.1 + v.1);
                            data[start + k + half] = (u.0 - v.0, u.1 - v.1);
                        }
                    }
                    half *= 2;
                }
            }
            None => {
                let mut out = vec![(0.0, 0.0); self.len];
                for (k, slot) in out.iter_mut().enumerate() {
                    let mut acc = (0.0, 0.0);
                    for (j, &x) in data.iter().enumerate() {
                        let w = self.twiddle((j * k) % self.len, inverse);
                        let p = mul(x, w);
                        acc.0 += p.0;
                        acc.1 += p.1;
                    }
                    *slot = acc;
                }
                data.copy_from_slice(&out);
            }
        }
    }
}
