//! Straight-line reference implementations used as test oracles. None of these
//! call into the library's numerical code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sine(freq: f64, sr: f64, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / sr).sin()).collect()
}

pub fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

pub fn next_pow2(n: usize) -> usize {
    let mut p = 2;
    while p < n {
        p *= 2;
    }
    p
}

/// O(n^2) DFT of a real block zero-padded to `n`.
pub fn naive_dft(x: &[f64], n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in x.iter().enumerate() {
                let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re, im)
        })
        .collect()
}

pub fn naive_power(x: &[f64]) -> Vec<f64> {
    let n = next_pow2(x.len());
    naive_dft(x, n)[..=n / 2].iter().map(|(r, i)| r * r + i * i).collect()
}

fn mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn inv_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// 26 triangular filter responses over the magnitude spectrum.
pub fn ref_mel_energies(x: &[f64], sr: f64) -> Vec<f64> {
    let n = next_pow2(x.len());
    let mag: Vec<f64> = naive_power(x).iter().map(|p| p.sqrt()).collect();
    let top = mel(sr / 2.0);
    let pts: Vec<f64> = (0..28).map(|i| inv_mel(top * i as f64 / 27.0)).collect();
    (0..26)
        .map(|j| {
            let (a, b, c) = (pts[j], pts[j + 1], pts[j + 2]);
            let mut s = 0.0;
            for (k, m) in mag.iter().enumerate() {
                let f = k as f64 * sr / n as f64;
                let w = if f > a && f <= b {
                    (f - a) / (b - a)
                } else if f > b && f < c {
                    (c - f) / (c - b)
                } else {
                    0.0
                };
                s += m * w;
            }
            s
        })
        .collect()
}

pub fn mel_centre(j: usize, sr: f64) -> f64 {
    inv_mel(mel(sr / 2.0) * (j + 1) as f64 / 27.0)
}

pub fn ref_mfcc(x: &[f64], sr: f64) -> Vec<f64> {
    let logs: Vec<f64> = ref_mel_energies(x, sr).iter().map(|e| e.max(1e-10).ln()).collect();
    let m = logs.len() as f64;
    (1..=12)
        .map(|k| {
            let s: f64 = logs
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * m)).cos())
                .sum();
            s * (2.0 / m).sqrt()
        })
        .collect()
}

/// Solve the Toeplitz normal equations by Gaussian elimination with partial pivoting.
pub fn ref_predictor(r: &[f64], p: usize) -> Vec<f64> {
    let mut a: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut row: Vec<f64> = (0..p).map(|j| r[i.abs_diff(j)]).collect();
            row.push(r[i + 1]);
            row
        })
        .collect();
    for col in 0..p {
        let piv = (col..p).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for row in col + 1..p {
            let f = a[row][col] / a[col][col];
            for k in col..=p {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    let mut alpha = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| a[i][k] * alpha[k]).sum();
        alpha[i] = (a[i][p] - s) / a[i][i];
    }
    alpha
}

/// Cepstrum of `1 / (1 - sum alpha_k z^-k)`, coefficients 1..=n.
pub fn ref_cepstrum(alpha: &[f64], n: usize) -> Vec<f64> {
    let p = alpha.len();
    let mut c = vec![0.0; n + 1];
    for m in 1..=n {
        let mut s = if m <= p { alpha[m - 1] } else { 0.0 };
        for k in 1..m {
            if m - k <= p {
                s += k as f64 / m as f64 * c[k] * alpha[m - k - 1];
            }
        }
        c[m] = s;
    }
    c[1..].to_vec()
}

pub fn ref_plp(x: &[f64], sr: f64) -> Vec<f64> {
    let n = next_pow2(x.len());
    let power = naive_power(x);
    let bark = |f: f64| 6.0 * ((f / 600.0) + ((f / 600.0).powi(2) + 1.0).sqrt()).ln();
    let zmax = bark(sr / 2.0);
    let mut bands = Vec::new();
    for j in 0..17 {
        let zc = zmax * j as f64 / 16.0;
        let mut s = 0.0;
        for (k, p) in power.iter().enumerate() {
            let dz = bark(k as f64 * sr / n as f64) - zc;
            let w = if (-1.3..-0.5).contains(&dz) {
                10f64.powf(2.5 * (dz + 0.5))
            } else if (-0.5..=0.5).contains(&dz) {
                1.0
            } else if dz > 0.5 && dz <= 2.5 {
                10f64.powf(0.5 - dz)
            } else {
                0.0
            };
            s += p * w;
        }
        let fc = 600.0 * (zc / 6.0).sinh();
        let w2 = (2.0 * PI * fc).powi(2);
        let eql = (w2 + 56.8e6) * w2.powi(2) / ((w2 + 6.3e6).powi(2) * (w2 + 0.38e9));
        bands.push((s * eql).powf(1.0 / 3.0));
    }
    bands[0] = bands[1];
    bands[16] = bands[15];
    // Full symmetric spectrum of length 32, then a real inverse DFT.
    let full: Vec<f64> = (0..32).map(|i| if i <= 16 { bands[i] } else { bands[32 - i] }).collect();
    let r: Vec<f64> = (0..=8)
        .map(|k| full.iter().enumerate().map(|(i, v)| v * (2.0 * PI * (i * k) as f64 / 32.0).cos()).sum::<f64>() / 32.0)
        .collect();
    ref_cepstrum(&ref_predictor(&r, 8), 8)
}

/// Exhaustive full-search block matching residual, area weighted.
pub fn ref_motion(prev: &[u8], cur: &[u8], w: usize, h: usize) -> f64 {
    let mut total = 0.0;
    let mut by = 0;
    while by < h {
        let mut bx = 0;
        while bx < w {
            let bw = 16.min(w - bx);
            let bh = 16.min(h - by);
            let mut best = f64::INFINITY;
            for dy in -8i64..=8 {
                for dx in -8i64..=8 {
                    let (x0, y0) = (bx as i64 + dx, by as i64 + dy);
                    if x0 < 0 || y0 < 0 || x0 as usize + bw > w || y0 as usize + bh > h {
                        continue;
                    }
                    let mut sad = 0.0;
                    for yy in 0..bh {
                        for xx in 0..bw {
                            let c = cur[(by + yy) * w + bx + xx] as f64;
                            let p = prev[(y0 as usize + yy) * w + x0 as usize + xx] as f64;
                            sad += (c - p).abs();
                        }
                    }
                    best = best.min(sad);
                }
            }
            total += best;
            bx += 16;
        }
        by += 16;
    }
    total / (w * h) as f64
}

pub fn sign_changes(x: &[f64]) -> usize {
    let mut count = 0;
    for i in 1..x.len() {
        if x[i - 1] * x[i] < 0.0 {
            count += 1;
        }
    }
    count
}

// Metrics, written from the textbook definitions.

pub fn ref_r2(p: &[f64], t: &[f64]) -> f64 {
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..t.len() {
        sse += (t[i] - p[i]) * (t[i] - p[i]);
        sst += (t[i] - mt) * (t[i] - mt);
    }
    1.0 - sse / sst
}

pub fn ref_cc(p: &[f64], t: &[f64]) -> f64 {
    let n = p.len() as f64;
    let (sp, st): (f64, f64) = (p.iter().sum(), t.iter().sum());
    let spt: f64 = p.iter().zip(t).map(|(a, b)| a * b).sum();
    let spp: f64 = p.iter().map(|a| a * a).sum();
    let stt: f64 = t.iter().map(|a| a * a).sum();
    (n * spt - sp * st) / ((n * spp - sp * sp).sqrt() * (n * stt - st * st).sqrt())
}

pub fn ref_mle(p: &[f64], t: &[f64]) -> f64 {
    p.iter().zip(t).map(|(a, b)| (a - b).abs()).sum::<f64>() / p.len() as f64
}

pub fn ref_bd(p: &[f64], t: &[f64]) -> f64 {
    let edges: Vec<f64> = (0..=10).map(|i| -2.25 + 0.45 * i as f64).collect();
    let hist = |v: &[f64]| {
        let mut h = [0.0; 10];
        for &x in v {
            let x = x.clamp(-2.25, 2.25);
            let mut bin = 9;
            for b in 0..10 {
                if x < edges[b + 1] {
                    bin = b;
                    break;
                }
            }
            h[bin] += 1.0 / v.len() as f64;
        }
        h
    };
    let (hp, ht) = (hist(p), hist(t));
    let bc: f64 = (0..10).map(|i| (hp[i] * ht[i]).sqrt()).sum();
    -(bc.max(1e-12)).ln().min(0.0)
}

// CFS.

pub fn ref_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

pub fn ref_merit(subset: &[usize], r_fc: &[f64], r_ff: &[Vec<f64>]) -> f64 {
    let k = subset.len() as f64;
    let cf: f64 = subset.iter().map(|&i| r_fc[i]).sum::<f64>() / k;
    let mut ff = 0.0;
    let mut pairs = 0.0;
    for a in 0..subset.len() {
        for b in 0..subset.len() {
            if a != b {
                ff += r_ff[subset[a]][subset[b]].abs();
                pairs += 1.0;
            }
        }
    }
    let ff = if pairs > 0.0 { ff / pairs } else { 0.0 };
    k * cf / (k + k * (k - 1.0) * ff).max(1e-12).sqrt()
}

// SVR.

pub fn rbf(x: &[f64], z: &[f64], gamma: f64) -> f64 {
    (-gamma * x.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).exp()
}

/// Dual objective (maximization form) in terms of alpha and alpha*.
pub fn svr_dual(alpha: &[f64], alpha_star: &[f64], x: &[Vec<f64>], y: &[f64], eps: f64, gamma: f64) -> f64 {
    let n = y.len();
    let beta: Vec<f64> = (0..n).map(|i| alpha[i] - alpha_star[i]).collect();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += beta[i] * beta[j] * rbf(&x[i], &x[j], gamma);
        }
    }
    -0.5 * quad - eps * (0..n).map(|i| alpha[i] + alpha_star[i]).sum::<f64>() + (0..n).map(|i| y[i] * beta[i]).sum::<f64>()
}

/// Projected gradient ascent over the box-and-hyperplane feasible set. The
/// projection finds the hyperplane multiplier by bisection.
pub fn svr_projected_gradient(x: &[Vec<f64>], y: &[f64], c: f64, eps: f64, gamma: f64) -> f64 {
    let n = y.len();
    let k: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| rbf(&x[i], &x[j], gamma)).collect()).collect();
    // z = [alpha; alpha*], constraint sum(alpha) - sum(alpha*) = 0.
    let sign = |i: usize| if i < n { 1.0 } else { -1.0 };
    let project = |v: &[f64]| -> Vec<f64> {
        let at = |lambda: f64| -> (Vec<f64>, f64) {
            let z: Vec<f64> = (0..2 * n).map(|i| (v[i] - lambda * sign(i)).clamp(0.0, c)).collect();
            let s = (0..2 * n).map(|i| sign(i) * z[i]).sum();
            (z, s)
        };
        let (mut lo, mut hi) = (-1e6, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid).1 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        at(0.5 * (lo + hi)).0
    };
    let step = 1.0 / (2.0 * n as f64);
    let mut z = vec![0.0; 2 * n];
    for _ in 0..20_000 {
        let beta: Vec<f64> = (0..n).map(|i| z[i] - z[n + i]).collect();
        let kb: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * beta[j]).sum()).collect();
        let grad: Vec<f64> = (0..2 * n)
            .map(|i| {
                let m = i % n;
                sign(i) * (y[m] - kb[m]) - eps
            })
            .collect();
        let moved: Vec<f64> = (0..2 * n).map(|i| z[i] + step * grad[i]).collect();
        z = project(&moved);
    }
    svr_dual(&z[..n], &z[n..], x, y, eps, gamma)
}

pub mod lstm_fixtures;

/// Smooth nonlinear regression problem with inputs uniform in [-1, 1]^d.
pub fn svr_problem(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let y = x
        .iter()
        .map(|row| (row.iter().sum::<f64>()).sin() + 0.5 * row[0] * row[0] + r.random_range(-0.1..0.1))
        .collect();
    (x, y)
}
