//! 12-lead derivation and P-wave onset/offset detection.

use crate::error::EpError;
use crate::forward::ElectrodeTraces;

pub const LEAD_NAMES: [&str; 12] = [
    "I", "II", "III", "aVR", "aVL", "aVF", "V1", "V2", "V3", "V4", "V5", "V6",
];

/// The 12 standard leads, equal length and sampling.
#[derive(Debug, Clone)]
pub struct EcgTraceSet {
    pub dt: f64,
    /// In [`LEAD_NAMES`] order.
    pub leads: Vec<(String, Vec<f64>)>,
}

impl EcgTraceSet {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.leads
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s.as_slice())
    }

    pub fn len(&self) -> usize {
        self.leads.first().map_or(0, |(_, s)| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Einthoven, Goldberger and Wilson combinations of the 9 electrode series.
pub fn derive_12_leads(traces: &ElectrodeTraces) -> Result<EcgTraceSet, EpError> {
    let series = |name: &str| -> Result<&[f64], EpError> {
        traces
            .get(name)
            .ok_or_else(|| EpError::MissingElectrode(name.to_string()))
    };
    let ra = series("RA")?;
    let la = series("LA")?;
    let ll = series("LL")?;
    let precordial = ["V1", "V2", "V3", "V4", "V5", "V6"];
    let n = ra.len();
    for name in ["LA", "LL"].iter().chain(&precordial) {
        if series(name)?.len() != n {
            return Err(EpError::LeadLengthMismatch);
        }
    }

    let combine = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { (0..n).map(f).collect() };
    let mut leads: Vec<(String, Vec<f64>)> = vec![
        ("I".into(), combine(&|i| la[i] - ra[i])),
        ("II".into(), combine(&|i| ll[i] - ra[i])),
        ("III".into(), combine(&|i| ll[i] - la[i])),
        ("aVR".into(), combine(&|i| ra[i] - (la[i] + ll[i]) / 2.0)),
        ("aVL".into(), combine(&|i| la[i] - (ra[i] + ll[i]) / 2.0)),
        ("aVF".into(), combine(&|i| ll[i] - (ra[i] + la[i]) / 2.0)),
    ];
    for name in precordial {
        let v = series(name)?;
        leads.push((
            name.into(),
            combine(&|i| v[i] - (ra[i] + la[i] + ll[i]) / 3.0),
        ));
    }
    Ok(EcgTraceSet {
        dt: traces.dt,
        leads,
    })
}

/// Onset/offset per lead and the global P-wave window.
#[derive(Debug, Clone)]
pub struct PWaveAnnotation {
    /// (lead, onset ms, offset ms); leads with zero signal are skipped.
    pub per_lead: Vec<(String, f64, f64)>,
    /// Earliest onset across leads, ms.
    pub onset: f64,
    /// Latest offset across leads, ms.
    pub offset: f64,
    /// `offset − onset`, ms.
    pub duration: f64,
}

/// Threshold detection: per lead, onset is the first and offset the last time
/// |signal| exceeds `threshold_frac` of that lead's peak |signal|.
pub fn detect_p_wave(traces: &EcgTraceSet, threshold_frac: f64) -> Result<PWaveAnnotation, EpError> {
    let mut per_lead = Vec::new();
    for (name, series) in &traces.leads {
        let peak = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak <= 0.0 {
            continue;
        }
        let threshold = threshold_frac * peak;
        let mut onset = None;
        let mut offset = None;
        for (i, v) in series.iter().enumerate() {
            if v.abs() > threshold {
                if onset.is_none() {
                    onset = Some(i as f64 * traces.dt);
                }
                offset = Some(i as f64 * traces.dt);
            }
        }
        if let (Some(on), Some(off)) = (onset, offset) {
            per_lead.push((name.clone(), on, off));
        }
    }
    if per_lead.is_empty() {
        return Err(EpError::AllZeroTraces);
    }
    let onset = per_lead.iter().map(|(_, on, _)| *on).fold(f64::INFINITY, f64::min);
    let offset = per_lead
        .iter()
        .map(|(_, _, off)| *off)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PWaveAnnotation {
        per_lead,
        onset,
        offset,
        duration: offset - onset,
    })
}

/// P-wave duration in ms: latest offset minus earliest onset across leads.
pub fn p_wave_duration(traces: &EcgTraceSet, threshold_frac: f64) -> Result<f64, EpError> {
    Ok(detect_p_wave(traces, threshold_frac)?.duration)
}
