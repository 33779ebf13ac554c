use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;

use super::MetricsError;

/// Infinite SI-SDR values are shown as ±100 dB in tables.
pub const DISPLAY_CAP_DB: f64 = 100.0;

/// Scale-invariant signal-to-distortion ratio in dB.
///
/// The estimate is projected onto the reference; the ratio is the energy of
/// the projection over the energy of what is left. Returns `+inf` for a zero
/// residual and `-inf` when estimate and reference are orthogonal.
pub fn si_sdr(
    estimate: &AudioBuffer,
    reference: &AudioBuffer,
    zero_mean: bool,
) -> Result<f64, MetricsError> {
    si_sdr_slices(estimate.samples(), reference.samples(), zero_mean)
}

pub(crate) fn si_sdr_slices(est: &[f64], refr: &[f64], zero_mean: bool) -> Result<f64, MetricsError> {
    if est.len() != refr.len() {
        return Err(MetricsError::LengthMismatch {
            estimate: est.len(),
            reference: refr.len(),
        });
    }
    if est.is_empty() {
        return Err(MetricsError::Empty);
    }
    let centered = |x: &[f64]| -> Vec<f64> {
        if zero_mean {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| v - m).collect()
        } else {
            x.to_vec()
        }
    };
    let (est, refr) = (centered(est), centered(refr));
    let rr: f64 = refr.iter().map(|r| r * r).sum();
    if rr == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let dot: f64 = est.iter().zip(&refr).map(|(e, r)| e * r).sum();
    if dot == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let scale = dot / rr;
    let (mut target, mut resid) = (0.0, 0.0);
    for (e, r) in est.iter().zip(&refr) {
        let t = scale * r;
        target += t * t;
        resid += (e - t) * (e - t);
    }
    if resid == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (target / resid).log10())
}

/// Clamps to `±DISPLAY_CAP_DB` for reports.
pub fn display_db(v: f64) -> f64 {
    v.clamp(-DISPLAY_CAP_DB, DISPLAY_CAP_DB)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SisdrRow {
    pub id: String,
    pub snr_label: Option<String>,
    pub si_sdr_db: f64,
}

/// Writes `id,snr_label,si_sdr_db` with values capped for display.
pub fn write_sisdr_csv(rows: &[SisdrRow], path: &Path) -> Result<(), MetricsError> {
    let err = |e: &dyn std::fmt::Display| MetricsError::Write {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    w.write_record(["id", "snr_label", "si_sdr_db"]).map_err(|e| err(&e))?;
    for r in rows {
        w.write_record([
            r.id.as_str(),
            r.snr_label.as_deref().unwrap_or(""),
            &format!("{:.4}", display_db(r.si_sdr_db)),
        ])
        .map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}
