use crate::audio::AudioBuffer;

use super::RirError;

/// Envelope block length for noise-floor detection.
const BLOCK_S: f64 = 0.010;
/// Minimum peak-to-floor range before a decay is considered present.
const MIN_DYNAMIC_RANGE_DB: f64 = 10.0;
/// Integration stops once the envelope settles within this margin of the
/// noise floor.
const FLOOR_MARGIN_DB: f64 = 5.0;
const FIT_START_DB: f64 = -5.0;
const FIT_END_DB: f64 = -25.0;

/// Reverberation time by Schroeder backward integration.
///
/// The squared response is integrated backwards from the point where its
/// 10 ms envelope meets the noise floor (estimated from the final 10% of the
/// signal), a least-squares line is fitted to the decay curve between -5 dB
/// and -25 dB, and the 20 dB fall time is extrapolated threefold.
pub fn estimate_rt60(rir: &AudioBuffer) -> Result<f64, RirError> {
    let x = rir.samples();
    if x.is_empty() {
        return Err(RirError::InsufficientRange);
    }
    let fs = rir.sample_rate() as f64;
    let end = integration_end(x, fs)?;

    let energy: Vec<f64> = x[..end].iter().map(|v| v * v).collect();
    let mut edc = vec![0.0; end];
    let mut acc = 0.0;
    for i in (0..end).rev() {
        acc += energy[i];
        edc[i] = acc;
    }
    let total = edc[0];
    if total <= 0.0 {
        return Err(RirError::InsufficientRange);
    }
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * (e / total).log10()).collect();

    let start = db.iter().position(|&v| v <= FIT_START_DB);
    let stop = db.iter().position(|&v| v <= FIT_END_DB);
    let (Some(start), Some(stop)) = (start, stop) else {
        return Err(RirError::InsufficientRange);
    };
    // Points inside the fit range proper; a decay curve that jumps straight
    // past it (a lone impulse) carries no slope information.
    let inside = db[start..stop]
        .iter()
        .filter(|v| v.is_finite() && **v >= FIT_END_DB)
        .count();
    if stop <= start + 1 || inside < 2 {
        return Err(RirError::InsufficientRange);
    }

    let n = (stop - start + 1) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (i, &y) in db.iter().enumerate().take(stop + 1).skip(start) {
        let y = if y.is_finite() { y } else { FIT_END_DB };
        let t = i as f64 / fs;
        sx += t;
        sy += y;
        sxx += t * t;
        sxy += t * y;
    }
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if !(slope < 0.0) {
        return Err(RirError::NoDecay);
    }
    Ok(3.0 * (FIT_END_DB - FIT_START_DB) / slope)
}

/// Sample index at which backward integration starts.
fn integration_end(x: &[f64], fs: f64) -> Result<usize, RirError> {
    let block = ((BLOCK_S * fs).round() as usize).max(1);
    let levels: Vec<f64> = x
        .chunks(block)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64)
        .collect();
    let tail_from = x.len() - x.len() / 10;
    let tail = &x[tail_from.min(x.len() - 1)..];
    let floor = tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64;
    let (peak_block, peak) = levels
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    if peak <= 0.0 {
        return Err(RirError::InsufficientRange);
    }
    if floor <= 0.0 {
        return Ok(x.len());
    }
    let range_db = 10.0 * (peak / floor).log10();
    if range_db < MIN_DYNAMIC_RANGE_DB {
        return Err(RirError::NoDecay);
    }
    let threshold = floor * 10f64.powf(FLOOR_MARGIN_DB / 10.0);
    let crossing = levels[peak_block..]
        .iter()
        .position(|&l| l <= threshold)
        .map_or(levels.len(), |p| peak_block + p);
    Ok((crossing * block).clamp(1, x.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn decaying_noise(rt60: f64, seconds: f64, seed: u64) -> AudioBuffer {
        let fs = 16000.0;
        let mut rng = crate::seed::rng(seed);
        let n = (seconds * fs) as usize;
        AudioBuffer::new(
            (0..n)
                .map(|i| {
                    let t = i as f64 / fs;
                    (-6.91 * t / rt60).exp() * rng.sample::<f64, _>(StandardNormal)
                })
                .collect(),
            16000,
        )
        .unwrap()
    }

    #[test]
    fn recovers_known_decay() {
        for (rt, seed) in [(0.5, 1), (0.3, 2), (1.0, 3)] {
            let est = estimate_rt60(&decaying_noise(rt, 2.0 * rt.max(0.5), seed)).unwrap();
            assert!((est - rt).abs() / rt < 0.05, "rt {rt} -> {est}");
        }
    }

    #[test]
    fn decay_into_noise_floor_is_truncated() {
        let clean = decaying_noise(0.4, 1.5, 9);
        let mut rng = crate::seed::rng(99);
        let noisy: Vec<f64> = clean
            .samples()
            .iter()
            .map(|v| v + 1e-3 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let est = estimate_rt60(&AudioBuffer::new(noisy, 16000).unwrap()).unwrap();
        assert!((est - 0.4).abs() / 0.4 < 0.1, "{est}");
    }

    #[test]
    fn stationary_noise_has_no_decay() {
        let mut rng = crate::seed::rng(5);
        let x: Vec<f64> = (0..16000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        assert_eq!(
            estimate_rt60(&AudioBuffer::new(x, 16000).unwrap()),
            Err(RirError::NoDecay)
        );
    }

    #[test]
    fn lone_impulse_lacks_range() {
        let mut x = vec![0.0; 4000];
        x[10] = 1.0;
        assert_eq!(
            estimate_rt60(&AudioBuffer::new(x, 16000).unwrap()),
            Err(RirError::InsufficientRange)
        );
    }
}
