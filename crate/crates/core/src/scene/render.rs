use std::sync::Arc;

use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::dsp::{fade_in, fade_out, mean_square, Convolver};
use crate::geometry::Vec3;
use crate::rir::{RirComponents, RirEngine, SourceSpec, TailTemplate};
use crate::seed::derive_seed;

use super::{listener_position, plan_schedule, EventSchedule, SceneConfig, SceneError};

/// Overlap-add block for the once-per-source tail convolution.
const TAIL_FFT_BLOCK: usize = 1 << 15;

#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// Spatial mix plus ambient bed, before peak normalization.
    pub mix: AudioBuffer,
    /// Gain that brings the mix peak to the configured level; 1 when the
    /// mix is silent and normalization is skipped.
    pub normalization_gain: f64,
    pub normalization_skipped: bool,
    /// Linear gain applied to the ambient bed.
    pub ambient_gain: f64,
    pub schedule: EventSchedule,
}

impl RenderOutput {
    pub fn normalized(&self) -> AudioBuffer {
        self.mix
            .scaled(self.normalization_gain)
            .expect("finite gain on a finite buffer")
    }
}

/// One spatial emitter: a talker or a chair event.
struct Emitter {
    spec: SourceSpec,
    /// `(start_sample, audio)` placements, sorted by start.
    segments: Vec<(u64, Arc<AudioBuffer>)>,
    /// First sample and one past the last sample carrying signal.
    span: (u64, u64),
    tail_seed: u64,
}

impl Emitter {
    /// Copies the emitted signal for samples `[base, base + out.len())`.
    fn fill(&self, base: i64, out: &mut [f64]) {
        let end = base + out.len() as i64;
        for (start, audio) in &self.segments {
            let s0 = *start as i64;
            let s1 = s0 + audio.len() as i64;
            let (lo, hi) = (s0.max(base), s1.min(end));
            if lo >= hi {
                continue;
            }
            let src = &audio.samples()[(lo - s0) as usize..(hi - s0) as usize];
            for (o, v) in out[(lo - base) as usize..(hi - base) as usize].iter_mut().zip(src) {
                *o += v;
            }
        }
    }
}

/// Hop grid with equal-power crossfades at each boundary.
struct Hops {
    hop: usize,
    fade: usize,
    total: usize,
    count: usize,
}

impl Hops {
    fn bounds(&self, h: usize) -> (usize, usize) {
        (h * self.hop, ((h + 1) * self.hop).min(self.total))
    }

    fn ramp_start(&self, boundary: usize) -> i64 {
        boundary as i64 - (self.fade / 2) as i64
    }

    /// Output samples receiving any weight from hop `h`.
    fn window(&self, h: usize) -> (usize, usize) {
        let (b0, b1) = self.bounds(h);
        let w0 = if h == 0 { 0 } else { self.ramp_start(b0).max(0) as usize };
        let w1 = if h + 1 == self.count {
            self.total
        } else {
            ((self.ramp_start(b1) + self.fade as i64).max(0) as usize).min(self.total)
        };
        (w0, w1)
    }

    fn weight(&self, h: usize, t: usize) -> f64 {
        let (b0, b1) = self.bounds(h);
        let u = |b: usize| (t as f64 + 0.5 - self.ramp_start(b) as f64) / self.fade as f64;
        if h > 0 && (t as i64) < self.ramp_start(b0) + self.fade as i64 {
            fade_in(u(b0))
        } else if h + 1 < self.count && (t as i64) >= self.ramp_start(b1) {
            fade_out(u(b1))
        } else {
            1.0
        }
    }
}

/// Renders the classroom noise scene.
///
/// The listener is frozen at its position at the middle of each hop and
/// every emitter is convolved with the RIR for that position; hops are joined
/// with equal-power crossfades. The stochastic tail is shared by all hops of
/// an emitter, so it is convolved once and rescaled per hop. The ambient bed
/// is added dry, relative to the RMS of the spatial mix.
pub fn render_noise(config: &SceneConfig) -> Result<RenderOutput, SceneError> {
    config.validate()?;
    let source_seconds = config.duration_s * config.babble_sources.len().max(1) as f64;
    if source_seconds > config.render.max_source_seconds {
        return Err(SceneError::OutOfMemoryGuard {
            source_seconds,
            budget: config.render.max_source_seconds,
        });
    }
    let schedule = plan_schedule(config)?;
    let fs = config.sample_rate();
    let n = config.output_len();
    let engine = RirEngine::new(&config.room, config.rir_params)?;
    let max_len = engine.max_len();

    let mut emitters = Vec::new();
    for (i, tl) in schedule.babble.iter().enumerate() {
        let segments: Vec<(u64, Arc<AudioBuffer>)> = tl
            .utterances
            .iter()
            .map(|u| (u.start_sample, config.babble_pool[u.clip].audio.clone()))
            .collect();
        let span = span_of(&segments);
        emitters.push(Emitter {
            spec: config.babble_sources[i],
            segments,
            span,
            tail_seed: derive_seed(config.seed, "source", i as u64),
        });
    }
    for (k, ev) in schedule.chairs.iter().enumerate() {
        let segments = vec![(ev.start_sample, config.chair_pool[ev.clip].audio.clone())];
        emitters.push(Emitter {
            spec: SourceSpec::omni(ev.position),
            span: span_of(&segments),
            segments,
            tail_seed: derive_seed(config.seed, "chair", k as u64),
        });
    }

    let hop = ((config.render.hop_s * fs as f64).round() as usize).max(1);
    let hops = Hops {
        hop,
        fade: ((config.render.crossfade_s * fs as f64).round() as usize).min(hop),
        total: n,
        count: n.div_ceil(hop),
    };
    let listeners: Vec<Vec3> = (0..hops.count)
        .map(|h| {
            let (b0, b1) = hops.bounds(h);
            listener_position(&config.listener_path, (b0 + b1) as f64 / 2.0 / fs as f64)
        })
        .collect();

    let tails: Vec<Option<TailTemplate>> = emitters
        .par_iter()
        .map(|e| {
            config
                .rir_params
                .tail_enabled
                .then(|| engine.tail_template(e.tail_seed, &mut Convolver::new()))
        })
        .collect();

    let block = ((config.render.block_s * fs as f64).round() as usize).max(hop);
    let mut spatial = vec![0.0; n];
    for b0 in (0..n).step_by(block) {
        let b1 = (b0 + block).min(n);
        let parts: Vec<Option<Vec<f64>>> = emitters
            .par_iter()
            .zip(&tails)
            .map(|(e, tail)| {
                render_block(e, tail.as_ref(), &engine, &hops, &listeners, (b0, b1), max_len)
            })
            .collect::<Result<_, SceneError>>()?;
        // Fixed summation order keeps the mix independent of thread count.
        for part in parts.into_iter().flatten() {
            for (o, v) in spatial[b0..b1].iter_mut().zip(&part) {
                *o += v;
            }
        }
    }

    let mut ambient_gain = 0.0;
    if !schedule.ambient.is_empty() {
        let mut bed = vec![0.0; n];
        for seg in &schedule.ambient {
            let audio = &config.ambient_pool[seg.clip].audio;
            let start = seg.start_sample as usize;
            let len = audio.len().min(n - start);
            bed[start..start + len].copy_from_slice(&audio.samples()[..len]);
        }
        let bed_ms = mean_square(&bed);
        if bed_ms > 0.0 {
            ambient_gain = (mean_square(&spatial) / bed_ms).sqrt()
                * 10f64.powf(config.ambient_gain_db / 20.0);
        }
        if ambient_gain != 0.0 {
            for (o, v) in spatial.iter_mut().zip(&bed) {
                *o += ambient_gain * v;
            }
        }
    }

    let peak = spatial.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (normalization_gain, normalization_skipped) = if peak > 0.0 {
        (10f64.powf(config.render.peak_dbfs / 20.0) / peak, false)
    } else {
        (1.0, true)
    };
    Ok(RenderOutput {
        mix: AudioBuffer::new(spatial, fs)?,
        normalization_gain,
        normalization_skipped,
        ambient_gain,
        schedule,
    })
}

fn span_of(segments: &[(u64, Arc<AudioBuffer>)]) -> (u64, u64) {
    let start = segments.iter().map(|s| s.0).min().unwrap_or(0);
    let end = segments
        .iter()
        .map(|(s, a)| s + a.len() as u64)
        .max()
        .unwrap_or(0);
    (start, end)
}

/// One emitter's contribution to output samples `[b0, b1)`, or `None` when
/// it is silent there.
fn render_block(
    e: &Emitter,
    tail: Option<&TailTemplate>,
    engine: &RirEngine<'_>,
    hops: &Hops,
    listeners: &[Vec3],
    (b0, b1): (usize, usize),
    max_len: usize,
) -> Result<Option<Vec<f64>>, SceneError> {
    let (s0, s1) = (e.span.0 as usize, e.span.1 as usize);
    // Output samples this emitter can reach.
    let (r0, r1) = (s0, s1.saturating_add(max_len));
    if s0 >= s1 || r1 <= b0 || r0 >= b1 {
        return Ok(None);
    }
    let lo = b0.max(r0);
    let hi = b1.min(r1);

    let mut conv = Convolver::new();
    // Windows reach half a crossfade into the neighbouring hops.
    let first = (lo / hops.hop).saturating_sub(1);
    let last = (hi.div_ceil(hops.hop) + 1).min(hops.count);
    let active: Vec<(usize, RirComponents)> = (first..last)
        .filter(|&h| {
            let (w0, w1) = hops.window(h);
            w0.max(lo) < w1.min(hi)
        })
        .map(|h| Ok((h, engine.components(&e.spec, listeners[h], tail, &mut conv)?)))
        .collect::<Result<_, SceneError>>()?;

    // Input history: the longest kernel reaches back `max_len - 1` samples.
    let base = lo as i64 - max_len as i64 + 1;
    let mut x = vec![0.0; (hi as i64 - base) as usize];
    e.fill(base, &mut x);

    let mut out = vec![0.0; b1 - b0];
    let z = tail.map(|t| conv.convolve_long(&x, t.samples(), TAIL_FFT_BLOCK));

    for (h, c) in &active {
        let (w0, w1) = hops.window(*h);
        let (w0, w1) = (w0.max(lo), w1.min(hi));
        let elen = c.early.len();
        let mut early_part = None;
        if elen > 0 {
            // x over [w0 - elen + 1, w1)
            let xs = (w0 as i64 - elen as i64 + 1 - base) as usize;
            let xe = (w1 as i64 - base) as usize;
            let seg = &x[xs..xe];
            if seg.iter().any(|v| *v != 0.0) {
                early_part = Some(conv.convolve(seg, &c.early));
            }
        }
        for t in w0..w1 {
            let mut v = 0.0;
            if let Some(y) = &early_part {
                v += y[t - w0 + elen - 1];
            }
            if let Some(z) = &z {
                v += c.tail_scale * z[(t as i64 - base) as usize];
            }
            out[t - b0] += hops.weight(*h, t) * v;
        }
    }
    Ok(Some(out))
}
