use crate::dsp::{kaiser, sinc};

use super::{AudioBuffer, AudioError};

/// Zero crossings of the interpolation kernel on each side, measured at the
/// lower of the two rates. 32 per side gives a 64-tap kernel when upsampling.
const HALF_ZERO_CROSSINGS: f64 = 32.0;
/// Passband as a fraction of the lower Nyquist frequency.
const PASSBAND: f64 = 0.92;
/// Kaiser beta for roughly 85 dB of sidelobe rejection.
const KAISER_BETA: f64 = 8.6;
/// Above this many polyphase branches the kernel is evaluated on the fly.
const MAX_TABLE_PHASES: u64 = 4096;

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
///
/// The output holds `round(len * target / source)` samples. Samples outside
/// the input are treated as zeros, so the operation is linear.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    let source_rate = buffer.sample_rate();
    if source_rate == target_rate {
        return Ok(buffer.clone());
    }

    let g = gcd(source_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = source_rate as u64 / g;
    let len = buffer.len() as u128;
    let out_len = ((2 * len * target_rate as u128 + source_rate as u128)
        / (2 * source_rate as u128)) as usize;

    let scale = (target_rate as f64 / source_rate as f64).min(1.0);
    let cutoff = 0.5 * scale * PASSBAND;
    let half_width = HALF_ZERO_CROSSINGS / scale;
    let taps_each_side = half_width.ceil() as i64;
    let kernel = Kernel {
        cutoff,
        half_width,
        taps_each_side,
    };
    let table = (up <= MAX_TABLE_PHASES).then(|| {
        (0..up)
            .map(|p| kernel.phase_taps(p as f64 / up as f64))
            .collect::<Vec<_>>()
    });

    let input = buffer.samples();
    let mut out = Vec::with_capacity(out_len);
    let mut scratch;
    for n in 0..out_len as u64 {
        let pos = n * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                scratch = kernel.phase_taps(phase as f64 / up as f64);
                &scratch
            }
        };
        let first = base - taps_each_side + 1;
        let mut acc = 0.0;
        for (j, &w) in taps.iter().enumerate() {
            let k = first + j as i64;
            if k >= 0 && (k as usize) < input.len() {
                acc += w * input[k as usize];
            }
        }
        out.push(acc);
    }
    AudioBuffer::new(out, target_rate)
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    taps_each_side: i64,
}

impl Kernel {
    /// Taps for input offsets `-taps_each_side + 1 ..= taps_each_side`
    /// relative to the integer part of the output position, normalized to
    /// unit DC gain.
    fn phase_taps(&self, frac: f64) -> Vec<f64> {
        let mut taps: Vec<f64> = ((-self.taps_each_side + 1)..=self.taps_each_side)
            .map(|j| {
                let x = j as f64 - frac;
                2.0 * self.cutoff * sinc(2.0 * self.cutoff * x) * kaiser(x / self.half_width, KAISER_BETA)
            })
            .collect();
        let sum: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|t| *t /= sum);
        taps
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, rate: u32, len: usize) -> AudioBuffer {
        AudioBuffer::new(
            (0..len)
                .map(|n| (2.0 * PI * freq * n as f64 / rate as f64).sin())
                .collect(),
            rate,
        )
        .unwrap()
    }

    #[test]
    fn identity_when_rates_match() {
        let b = sine(440.0, 16000, 1000);
        assert_eq!(resample(&b, 16000).unwrap(), b);
    }

    #[test]
    fn zero_target_rate_is_invalid() {
        let b = sine(440.0, 16000, 10);
        assert!(matches!(resample(&b, 0), Err(AudioError::InvalidRate(0))));
    }

    #[test]
    fn output_length_follows_rate_ratio() {
        let b = AudioBuffer::silence(48000, 48000).unwrap();
        let r = resample(&b, 16000).unwrap();
        assert_eq!(r.len(), 16000);
        assert_eq!(r.sample_rate(), 16000);
        let odd = AudioBuffer::silence(1001, 44100).unwrap();
        // 1001 * 16000 / 44100 = 363.17
        assert_eq!(resample(&odd, 16000).unwrap().len(), 363);
    }

    #[test]
    fn sine_survives_downsampling() {
        let b = sine(1000.0, 48000, 48000);
        let r = resample(&b, 16000).unwrap();
        let expected = sine(1000.0, 16000, 16000);
        let trim = 100;
        let max_err = r.samples()[trim..r.len() - trim]
            .iter()
            .zip(&expected.samples()[trim..expected.len() - trim])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn sine_survives_upsampling_with_irrational_ratio() {
        let b = sine(700.0, 44100, 44100);
        let r = resample(&b, 16000).unwrap();
        let expected = sine(700.0, 16000, 16000);
        let max_err = r.samples()[100..15900]
            .iter()
            .zip(&expected.samples()[100..15900])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err < 1e-3, "max error {max_err}");
    }

    #[test]
    fn stopband_rejects_aliases_by_60_db() {
        // 7.8 kHz at 48 kHz lies beyond the 8 kHz-Nyquist passband edge of
        // the 16 kHz output; 9 kHz would alias to 7 kHz.
        let b = sine(9000.0, 48000, 48000);
        let r = resample(&b, 16000).unwrap();
        let rms = (r.samples()[200..15800].iter().map(|v| v * v).sum::<f64>() / 15600.0).sqrt();
        let db = 20.0 * (rms / (0.5f64).sqrt()).log10();
        assert!(db < -60.0, "alias level {db} dB");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn resampling_is_linear(
            raw in prop::collection::vec(-1.0f64..1.0, 50..400),
            a in -3.0f64..3.0,
            target in prop::sample::select(vec![8000u32, 22050, 32000, 44100]),
        ) {
            let x = AudioBuffer::new(raw, 16000).unwrap();
            let lhs = resample(&x.scaled(a).unwrap(), target).unwrap();
            let rhs = resample(&x, target).unwrap().scaled(a).unwrap();
            let norm = rhs.samples().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
            for (l, r) in lhs.samples().iter().zip(rhs.samples()) {
                prop_assert!((l - r).abs() <= 1e-9 * norm);
            }
        }
    }
}
