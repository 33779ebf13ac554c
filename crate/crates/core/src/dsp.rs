//! Signal-processing primitives shared by the resampler, the RIR engine and
//! the scene renderer.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Zeroth-order modified Bessel function of the first kind.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Kaiser window evaluated at `x` in [-1, 1]; zero outside.
pub fn kaiser(x: f64, beta: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - x * x).sqrt()) / bessel_i0(beta)
}

/// Half-width (in samples) of the fractional-delay interpolator. The kernel
/// spans `2 * FRACTIONAL_DELAY_HALF_TAPS` = 32 taps.
pub const FRACTIONAL_DELAY_HALF_TAPS: i64 = 16;
const FRACTIONAL_DELAY_BETA: f64 = 6.0;

/// Adds `amplitude * delta(t - delay)` into `out` using a 32-tap
/// Kaiser-windowed sinc interpolator. Taps falling outside `out` are dropped.
pub fn add_fractional_impulse(out: &mut [f64], delay: f64, amplitude: f64) {
    if amplitude == 0.0 {
        return;
    }
    let base = delay.floor() as i64;
    let frac = delay - base as f64;
    let half = FRACTIONAL_DELAY_HALF_TAPS;
    for k in (base - half + 1)..=(base + half) {
        if k < 0 || k as usize >= out.len() {
            continue;
        }
        if frac == 0.0 {
            if k == base {
                out[k as usize] += amplitude;
            }
            continue;
        }
        let x = k as f64 - delay;
        let w = kaiser(x / half as f64, FRACTIONAL_DELAY_BETA);
        out[k as usize] += amplitude * sinc(x) * w;
    }
}

/// Linear-phase lowpass FIR (Kaiser-windowed sinc) with odd length and unit
/// DC gain. `cutoff` is in cycles per sample (0..0.5).
pub fn lowpass_fir(len: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    assert!(len % 2 == 1, "linear-phase FIR length must be odd");
    let mid = (len / 2) as f64;
    let mut h: Vec<f64> = (0..len)
        .map(|n| {
            let x = n as f64 - mid;
            2.0 * cutoff * sinc(2.0 * cutoff * x) * kaiser(x / (mid + 1.0), beta)
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= dc);
    h
}

/// Complementary linear-phase filterbank: band filters sum exactly to a
/// centered unit impulse.
#[derive(Debug, Clone)]
pub struct Filterbank {
    bands: Vec<Vec<f64>>,
}

impl Filterbank {
    /// Builds `edges.len() + 1` bands split at the given crossover
    /// frequencies (Hz).
    pub fn new(sample_rate: u32, edges: &[f64], len: usize) -> Self {
        let fs = sample_rate as f64;
        let lowpasses: Vec<Vec<f64>> = edges
            .iter()
            .map(|&f| lowpass_fir(len, f / fs, 6.0))
            .collect();
        let mid = len / 2;
        let mut bands = Vec::with_capacity(edges.len() + 1);
        for b in 0..=edges.len() {
            let band: Vec<f64> = (0..len)
                .map(|n| {
                    let upper = if b < edges.len() {
                        lowpasses[b][n]
                    } else if n == mid {
                        1.0
                    } else {
                        0.0
                    };
                    let lower = if b > 0 { lowpasses[b - 1][n] } else { 0.0 };
                    upper - lower
                })
                .collect();
            bands.push(band);
        }
        Self { bands }
    }

    pub fn bands(&self) -> &[Vec<f64>] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Group delay of every band, in samples.
    pub fn delay(&self) -> usize {
        self.len() / 2
    }
}

/// FFT-based linear convolution helper that caches plans per size.
pub struct Convolver {
    planner: FftPlanner<f64>,
}

impl Default for Convolver {
    fn default() -> Self {
        Self::new()
    }
}

impl Convolver {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
        }
    }

    pub fn plans(&mut self, size: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        (
            self.planner.plan_fft_forward(size),
            self.planner.plan_fft_inverse(size),
        )
    }

    /// Full linear convolution of `a` and `b` (length `a.len() + b.len() - 1`).
    pub fn convolve(&mut self, a: &[f64], b: &[f64]) -> Vec<f64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let out_len = a.len() + b.len() - 1;
        if a.len().min(b.len()) <= 32 {
            return direct_convolve(a, b);
        }
        let size = out_len.next_power_of_two();
        let (fwd, inv) = self.plans(size);
        let mut fa = to_complex(a, size);
        let mut fb = to_complex(b, size);
        fwd.process(&mut fa);
        fwd.process(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x *= y;
        }
        inv.process(&mut fa);
        let scale = 1.0 / size as f64;
        fa[..out_len].iter().map(|c| c.re * scale).collect()
    }

    /// Sum over `(signal_i, kernel_i)` of `signal_i * kernel_i`, computed with
    /// one inverse transform. All signals share the same length.
    pub fn convolve_sum(&mut self, pairs: &[(&[f64], &[f64])]) -> Vec<f64> {
        let Some(max_len) = pairs
            .iter()
            .filter(|(a, b)| !a.is_empty() && !b.is_empty())
            .map(|(a, b)| a.len() + b.len() - 1)
            .max()
        else {
            return Vec::new();
        };
        let size = max_len.next_power_of_two();
        let (fwd, inv) = self.plans(size);
        let mut acc = vec![Complex64::new(0.0, 0.0); size];
        for (a, b) in pairs {
            if a.is_empty() || b.is_empty() {
                continue;
            }
            let mut fa = to_complex(a, size);
            let mut fb = to_complex(b, size);
            fwd.process(&mut fa);
            fwd.process(&mut fb);
            for ((s, x), y) in acc.iter_mut().zip(&fa).zip(&fb) {
                *s += x * y;
            }
        }
        inv.process(&mut acc);
        let scale = 1.0 / size as f64;
        acc[..max_len].iter().map(|c| c.re * scale).collect()
    }

    /// Convolution of a long signal with a kernel by overlap-add in blocks,
    /// keeping memory bounded by the block size.
    pub fn convolve_long(&mut self, signal: &[f64], kernel: &[f64], block: usize) -> Vec<f64> {
        if signal.is_empty() || kernel.is_empty() {
            return Vec::new();
        }
        if signal.len() <= block {
            return self.convolve(signal, kernel);
        }
        let out_len = signal.len() + kernel.len() - 1;
        let size = (block + kernel.len() - 1).next_power_of_two();
        let (fwd, inv) = self.plans(size);
        let mut fk = to_complex(kernel, size);
        fwd.process(&mut fk);
        let scale = 1.0 / size as f64;
        let mut out = vec![0.0; out_len];
        for (i, chunk) in signal.chunks(block).enumerate() {
            if chunk.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut fx = to_complex(chunk, size);
            fwd.process(&mut fx);
            for (x, k) in fx.iter_mut().zip(&fk) {
                *x *= k;
            }
            inv.process(&mut fx);
            let start = i * block;
            let n = (chunk.len() + kernel.len() - 1).min(out_len - start);
            for (o, c) in out[start..start + n].iter_mut().zip(&fx) {
                *o += c.re * scale;
            }
        }
        out
    }
}

fn to_complex(x: &[f64], size: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); size];
    for (c, &r) in v.iter_mut().zip(x) {
        c.re = r;
    }
    v
}

pub fn direct_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Equal-power fade-in gain for `u` in [0, 1].
pub fn fade_in(u: f64) -> f64 {
    (u.clamp(0.0, 1.0) * PI / 2.0).sin()
}

/// Equal-power fade-out gain for `u` in [0, 1].
pub fn fade_out(u: f64) -> f64 {
    (u.clamp(0.0, 1.0) * PI / 2.0).cos()
}

pub fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_matches_known_values() {
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.266_065_877_752_008_4).abs() < 1e-13);
        assert!((bessel_i0(5.0) - 27.239_871_823_604_44).abs() < 1e-10);
    }

    #[test]
    fn integer_delay_is_a_single_tap() {
        let mut out = vec![0.0; 64];
        add_fractional_impulse(&mut out, 20.0, 0.7);
        assert_eq!(out[20], 0.7);
        assert_eq!(out.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn fractional_delay_has_unit_dc_gain_and_peaks_nearby() {
        let mut out = vec![0.0; 128];
        add_fractional_impulse(&mut out, 50.3, 1.0);
        let sum: f64 = out.iter().sum();
        assert!((sum - 1.0).abs() < 1e-3, "{sum}");
        let peak = out
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert_eq!(peak, 50);
    }

    #[test]
    fn filterbank_is_complementary() {
        let fb = Filterbank::new(16000, &[177.0, 354.0, 707.0, 1414.0, 2828.0], 511);
        let mid = fb.delay();
        for n in 0..fb.len() {
            let s: f64 = fb.bands().iter().map(|b| b[n]).sum();
            let expect = if n == mid { 1.0 } else { 0.0 };
            assert!((s - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_convolution_matches_direct() {
        let a: Vec<f64> = (0..300).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        let b: Vec<f64> = (0..90).map(|i| ((i * 13 % 7) as f64 - 3.0) / 5.0).collect();
        let mut c = Convolver::new();
        let fast = c.convolve(&a, &b);
        let slow = direct_convolve(&a, &b);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-10);
        }
        let long = c.convolve_long(&a, &b, 64);
        for (x, y) in long.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-10);
        }
        let summed = c.convolve_sum(&[(&a, &b), (&b, &a)]);
        for (x, y) in summed.iter().zip(&slow) {
            assert!((x - 2.0 * y).abs() < 1e-10);
        }
    }
}
