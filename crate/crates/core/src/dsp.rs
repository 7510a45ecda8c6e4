//! Small signal-processing kernels shared by the feature extractors.

use std::f64::consts::PI;

/// In-place iterative radix-2 FFT. `re.len()` must be a power of two.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n <= 1 {
        return;
    }

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = -2.0 * PI / len as f64;
        for k in 0..half {
            // Twiddles computed directly rather than by recurrence to keep error at O(eps log n).
            let (w_im, w_re) = (step * k as f64).sin_cos();
            for start in (0..n).step_by(len) {
                let a = start + k;
                let b = a + half;
                let t_re = re[b] * w_re - im[b] * w_im;
                let t_im = re[b] * w_im + im[b] * w_re;
                re[b] = re[a] - t_re;
                im[b] = im[a] - t_im;
                re[a] += t_re;
                im[a] += t_im;
            }
        }
        len *= 2;
    }
}

/// Zero-pad `block` to `n_fft` (power of two, at least `block.len()`) and return
/// `|X[k]|^2` for `k = 0..=n_fft/2`.
pub fn power_spectrum(block: &[f64], n_fft: usize) -> Vec<f64> {
    assert!(n_fft >= block.len());
    let mut re = vec![0.0; n_fft];
    re[..block.len()].copy_from_slice(block);
    let mut im = vec![0.0; n_fft];
    fft_in_place(&mut re, &mut im);
    (0..=n_fft / 2).map(|k| re[k] * re[k] + im[k] * im[k]).collect()
}

pub fn fft_size(len: usize) -> usize {
    len.max(2).next_power_of_two()
}

/// Periodic-free (symmetric) Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Biased autocorrelation `r[k] = sum_n x[n] x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                0.0
            } else {
                x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Linear predictor `A(z) = 1 + sum_k a[k] z^-k` from autocorrelation lags.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    /// `a[1..=order]`; index 0 of the polynomial (always 1) is not stored.
    pub coeffs: Vec<f64>,
    /// Final prediction error power.
    pub error: f64,
}

/// Levinson-Durbin recursion. Returns `None` when `r[0]` is not positive.
/// If the error power collapses before `order` is reached the remaining
/// coefficients stay zero.
pub fn levinson_durbin(r: &[f64], order: usize) -> Option<Lpc> {
    assert!(r.len() > order);
    if !(r[0] > 0.0) || !r[0].is_finite() {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            break;
        }
        prev.copy_from_slice(&a);
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= r[0] * 1e-15 {
            break;
        }
    }
    Some(Lpc {
        coeffs: a[1..].to_vec(),
        error: err,
    })
}

/// Cepstrum `c[1..=n_ceps]` of the all-pole model `1 / A(z)`.
pub fn lpc_to_cepstrum(a: &[f64], n_ceps: usize) -> Vec<f64> {
    let p = a.len();
    let mut c = vec![0.0; n_ceps + 1];
    for n in 1..=n_ceps {
        let mut acc = if n <= p { -a[n - 1] } else { 0.0 };
        for k in 1..n {
            if n - k <= p {
                acc -= (k as f64 / n as f64) * c[k] * a[n - k - 1];
            }
        }
        c[n] = acc;
    }
    c.split_off(1)
}

/// `|A(e^{jw})|^2` for the predictor polynomial.
pub fn lpc_response_power(a: &[f64], omega: f64) -> f64 {
    let mut re = 1.0;
    let mut im = 0.0;
    for (k, &ak) in a.iter().enumerate() {
        let (s, c) = (omega * (k + 1) as f64).sin_cos();
        re += ak * c;
        im -= ak * s;
    }
    re * re + im * im
}

/// Vertex offset of the parabola through three equally spaced samples, in `(-0.5, 0.5)`
/// for a strict local maximum at the centre.
pub fn parabolic_offset(left: f64, centre: f64, right: f64) -> f64 {
    let denom = left - 2.0 * centre + right;
    if denom.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
    }
}
