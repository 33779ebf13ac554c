use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::audio::AudioBuffer;
use crate::dsp::{
    add_fractional_impulse, fade_in, fade_out, mean_square, Convolver, Filterbank,
    FRACTIONAL_DELAY_HALF_TAPS,
};
use crate::geometry::Vec3;
use crate::room::{sabine_rt60, BandRt60, RoomModel, BAND_CENTERS_HZ, NUM_BANDS};

use super::images::image_sources;
use super::propagation::{gain_for_direction, occlusion_factor};
use super::{RirError, RirParams, SourceSpec};

/// Distance floor for the 1/d spreading law.
const MIN_DISTANCE_M: f64 = 0.1;
/// Equal-power crossfade between the early part and the tail.
const CROSSFADE_S: f64 = 0.010;
/// Window before (early) and after (tail) the splice used for level matching.
const MATCH_WINDOW_S: f64 = 0.020;
/// The splice never starts before the direct sound has fully arrived.
const DIRECT_MARGIN_S: f64 = 0.010;
/// Tail length beyond the mixing time, in units of the longest band RT60.
const TAIL_RT60_SPAN: f64 = 1.2;
/// Filterbank length in seconds (511 taps at 16 kHz).
const FILTERBANK_SECONDS: f64 = 0.032;

fn band_edges() -> [f64; NUM_BANDS - 1] {
    std::array::from_fn(|b| (BAND_CENTERS_HZ[b] * BAND_CENTERS_HZ[b + 1]).sqrt())
}

/// Stochastic late-reverberation waveform for one source, before level
/// matching. Depends only on the room, the parameters and the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTemplate {
    samples: Vec<f64>,
}

impl TailTemplate {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// An RIR split so that the tail can be convolved once per source and
/// rescaled per listener position: `rir = early + tail_scale * tail`.
#[derive(Debug, Clone, PartialEq)]
pub struct RirComponents {
    /// Faded early reflections, minus the part of the tail template that
    /// precedes the crossfade. May be shorter than the full response.
    pub early: Vec<f64>,
    pub tail_scale: f64,
    pub mixing_time_s: f64,
    pub direct_delay_s: f64,
    pub len: usize,
}

impl RirComponents {
    pub fn assemble(&self, tail: Option<&TailTemplate>) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for (o, e) in out.iter_mut().zip(&self.early) {
            *o += e;
        }
        if let Some(t) = tail {
            if self.tail_scale != 0.0 {
                for (o, v) in out.iter_mut().zip(&t.samples) {
                    *o += self.tail_scale * v;
                }
            }
        }
        out
    }
}

/// Precomputed per-room state for synthesizing many RIRs.
#[derive(Debug, Clone)]
pub struct RirEngine<'a> {
    room: &'a RoomModel,
    params: RirParams,
    rt60: Option<BandRt60>,
    filterbank: Filterbank,
    nominal_mixing_s: f64,
    tail_len: usize,
}

impl<'a> RirEngine<'a> {
    pub fn new(room: &'a RoomModel, params: RirParams) -> Result<Self, RirError> {
        params.validate()?;
        let rt60 = match sabine_rt60(room) {
            Ok(rt) => Some(rt),
            Err(e) if params.tail_enabled => return Err(e.into()),
            Err(_) => None,
        };
        let fs = params.sample_rate as f64;
        let fb_len = ((FILTERBANK_SECONDS * fs).round() as usize) | 1;
        let filterbank = Filterbank::new(params.sample_rate, &band_edges(), fb_len);
        let nominal_mixing_s = params.mixing_time_s(room.volume());

        let diagonal = room.dimensions().norm();
        let latest_mix = nominal_mixing_s.max(diagonal / params.speed_of_sound + DIRECT_MARGIN_S);
        let decay = rt60
            .and_then(|r| r.max_finite())
            .map_or(params.max_length_s, |s| TAIL_RT60_SPAN * s);
        let seconds = (latest_mix + CROSSFADE_S + decay).min(params.max_length_s);
        let tail_len = ((seconds * fs).ceil() as usize).max(1);

        Ok(Self {
            room,
            params,
            rt60,
            filterbank,
            nominal_mixing_s,
            tail_len,
        })
    }

    pub fn params(&self) -> &RirParams {
        &self.params
    }

    pub fn room(&self) -> &RoomModel {
        self.room
    }

    pub fn rt60(&self) -> Option<&BandRt60> {
        self.rt60.as_ref()
    }

    /// Length of every tail-enabled RIR from this engine.
    pub fn tail_len(&self) -> usize {
        self.tail_len
    }

    /// Upper bound on the length of any response from this engine, for any
    /// source and listener inside the room.
    pub fn max_len(&self) -> usize {
        let p = &self.params;
        let fs = p.sample_rate as f64;
        let diagonal = self.room.dimensions().norm();
        if p.tail_enabled {
            let latest_mix = self
                .nominal_mixing_s
                .max(diagonal / p.speed_of_sound + DIRECT_MARGIN_S);
            let horizon = ((latest_mix + CROSSFADE_S / 2.0) * fs).ceil() as usize + 1;
            self.tail_len.max(horizon)
        } else {
            // Along each axis an image of index |n| <= N sits within
            // (N + 1) room lengths of any point in the room.
            let reach = (p.max_order + 1) as f64 * diagonal;
            (reach / p.speed_of_sound * fs).ceil() as usize + FRACTIONAL_DELAY_HALF_TAPS as usize + 1
        }
    }

    /// Gaussian noise split into octave bands, each band decaying as
    /// `exp(-6.91 t / RT60_band)`.
    pub fn tail_template(&self, seed: u64, conv: &mut Convolver) -> TailTemplate {
        let Some(rt60) = self.rt60 else {
            return TailTemplate {
                samples: vec![0.0; self.tail_len],
            };
        };
        let fs = self.params.sample_rate as f64;
        let mut rng = crate::seed::rng(seed);
        let noise: Vec<f64> = (0..self.tail_len)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();

        // Bands sharing an RT60 share an envelope, so their filters can be
        // summed first. A group covering every band is an identity filter.
        let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
        for (b, &rt) in rt60.seconds.iter().enumerate() {
            match groups.iter_mut().find(|(g, _)| *g == rt) {
                Some((_, members)) => members.push(b),
                None => groups.push((rt, vec![b])),
            }
        }
        let delay = self.filterbank.delay();
        let mut samples = vec![0.0; self.tail_len];
        for (rt, members) in groups {
            let decay_rate = if rt.is_finite() { 6.91 / rt } else { 0.0 };
            let filtered: Vec<f64> = if members.len() == NUM_BANDS {
                noise.clone()
            } else {
                let mut kernel = vec![0.0; self.filterbank.len()];
                for &b in &members {
                    for (k, h) in kernel.iter_mut().zip(&self.filterbank.bands()[b]) {
                        *k += h;
                    }
                }
                let full = conv.convolve(&noise, &kernel);
                full[delay..delay + self.tail_len].to_vec()
            };
            for (t, (s, v)) in samples.iter_mut().zip(&filtered).enumerate() {
                *s += v * (-decay_rate * t as f64 / fs).exp();
            }
        }
        TailTemplate { samples }
    }

    /// Early reflections and tail scale for one source/listener placement.
    pub fn components(
        &self,
        source: &SourceSpec,
        listener: Vec3,
        tail: Option<&TailTemplate>,
        conv: &mut Convolver,
    ) -> Result<RirComponents, RirError> {
        source.validate()?;
        if !self.room.contains(listener) {
            return Err(RirError::ListenerOutsideRoom(listener.to_array()));
        }
        let p = &self.params;
        let fs = p.sample_rate as f64;
        let images = image_sources(self.room, source, p.max_order, p.scattering_loss)?;
        let direct_delay_s = source.position.distance(listener) / p.speed_of_sound;
        let tail = if p.tail_enabled { tail } else { None };

        let mixing_time_s = if tail.is_some() {
            self.nominal_mixing_s.max(direct_delay_s + DIRECT_MARGIN_S)
        } else {
            f64::INFINITY
        };
        let fade_start = mixing_time_s - CROSSFADE_S / 2.0;
        let half_taps = FRACTIONAL_DELAY_HALF_TAPS as usize;
        let fb_delay = self.filterbank.delay();

        let horizon = if tail.is_some() {
            ((mixing_time_s + CROSSFADE_S / 2.0) * fs).ceil() as usize + 1
        } else {
            let latest = images
                .iter()
                .map(|img| img.position.distance(listener) / p.speed_of_sound * fs)
                .fold(0.0, f64::max);
            latest.ceil() as usize + half_taps + 1
        };
        // Taps past the horizon still ring back into it through the
        // filterbank.
        let tap_limit = (horizon + fb_delay + half_taps) as f64;

        let occlusion = if listener == source.position {
            None
        } else {
            Some(occlusion_factor(self.room, source.position, listener)?)
        };

        let mut broadband = vec![0.0; horizon];
        let mut deviations: [Option<Vec<f64>>; NUM_BANDS] = Default::default();
        for img in &images {
            let offset = listener - img.position;
            let d = offset.norm();
            let delay = d / p.speed_of_sound * fs;
            if delay >= tap_limit {
                continue;
            }
            let directivity = match offset.normalized() {
                Some(dir) => gain_for_direction(source, img.unmirror(dir)),
                None => 1.0,
            };
            let common = source.gain * directivity / d.max(MIN_DISTANCE_M);
            if common == 0.0 {
                continue;
            }
            let amps: [f64; NUM_BANDS] = std::array::from_fn(|b| {
                let occl = match (&occlusion, img.order) {
                    (Some(o), 0) => o.get(b),
                    _ => 1.0,
                };
                common * img.band_gains.get(b).sqrt() * occl
            });
            let mean = amps.iter().sum::<f64>() / NUM_BANDS as f64;
            add_fractional_impulse(&mut broadband, delay, mean);
            for (b, amp) in amps.iter().enumerate() {
                let dev = amp - mean;
                if dev.abs() > 1e-15 * common.abs() {
                    let buf = deviations[b].get_or_insert_with(|| vec![0.0; horizon + fb_delay]);
                    add_fractional_impulse(buf, delay, dev);
                }
            }
        }

        let pairs: Vec<(&[f64], &[f64])> = deviations
            .iter()
            .enumerate()
            .filter_map(|(b, d)| {
                d.as_deref()
                    .map(|d| (d, self.filterbank.bands()[b].as_slice()))
            })
            .collect();
        let mut early = broadband;
        if !pairs.is_empty() {
            let banded = conv.convolve_sum(&pairs);
            for (t, e) in early.iter_mut().enumerate() {
                if let Some(v) = banded.get(t + fb_delay) {
                    *e += v;
                }
            }
        }

        let Some(tail) = tail else {
            let len = early.len();
            return Ok(RirComponents {
                early,
                tail_scale: 0.0,
                mixing_time_s,
                direct_delay_s,
                len,
            });
        };

        let at = |s: f64| ((s * fs).round().max(0.0) as usize).min(early.len());
        let early_power = mean_square(&early[at(mixing_time_s - MATCH_WINDOW_S)..at(mixing_time_s)]);
        let t = tail.samples();
        let t0 = ((mixing_time_s * fs).round() as usize).min(t.len());
        let t1 = (((mixing_time_s + MATCH_WINDOW_S) * fs).round() as usize).min(t.len());
        let tail_power = mean_square(&t[t0..t1]);
        let tail_scale = if tail_power > 0.0 {
            (early_power / tail_power).sqrt()
        } else {
            0.0
        };

        for (i, e) in early.iter_mut().enumerate() {
            let u = (i as f64 / fs - fade_start) / CROSSFADE_S;
            let tv = t.get(i).copied().unwrap_or(0.0);
            *e = *e * fade_out(u) - tail_scale * tv * (1.0 - fade_in(u));
        }
        Ok(RirComponents {
            early,
            tail_scale,
            mixing_time_s,
            direct_delay_s,
            len: self.tail_len.max(horizon),
        })
    }

    /// Full RIR using the tail seed from the engine parameters.
    pub fn synthesize(
        &self,
        source: &SourceSpec,
        listener: Vec3,
        conv: &mut Convolver,
    ) -> Result<AudioBuffer, RirError> {
        let tail = self
            .params
            .tail_enabled
            .then(|| self.tail_template(self.params.seed, conv));
        let c = self.components(source, listener, tail.as_ref(), conv)?;
        Ok(AudioBuffer::new(c.assemble(tail.as_ref()), self.params.sample_rate)
            .expect("finite RIR at a valid rate"))
    }
}

/// Synthesizes the impulse response from `source` to an omnidirectional
/// listener.
///
/// Every image source up to `max_order` contributes a fractionally delayed
/// tap with amplitude `gain * directivity / max(d, 0.1)` scaled per band by
/// the square root of its accumulated energy reflection; the direct path is
/// additionally attenuated by furniture transmission. Band gains are realized
/// with a complementary linear-phase filterbank. With the tail enabled, the
/// response past the mixing time is replaced by band-wise decaying Gaussian
/// noise whose level matches the last 20 ms of the early part.
pub fn synthesize_rir(
    room: &RoomModel,
    source: &SourceSpec,
    listener: Vec3,
    params: &RirParams,
) -> Result<AudioBuffer, RirError> {
    if !room.contains(source.position) {
        return Err(RirError::SourceOutsideRoom(source.position.to_array()));
    }
    if !room.contains(listener) {
        return Err(RirError::ListenerOutsideRoom(listener.to_array()));
    }
    let engine = RirEngine::new(room, *params)?;
    engine.synthesize(source, listener, &mut Convolver::new())
}
