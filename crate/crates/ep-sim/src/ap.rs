//! Action-potential template and the transmembrane-voltage movie obtained by
//! shifting it in time by each vertex's activation time.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::eikonal::ActivationMap;
use crate::error::EpError;

/// Sampled transmembrane voltage waveform (mV) at a fixed step.
#[derive(Debug, Clone)]
pub struct ApTemplate {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub resting: f64,
    /// Sample index of the upstroke peak; the segment up to it is monotone.
    pub upstroke_index: usize,
}

impl ApTemplate {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<ApTemplate, EpError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(EpError::BadTemplate(format!("dt {dt} must be positive")));
        }
        if samples.len() < 2 {
            return Err(EpError::BadTemplate("need at least 2 samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(EpError::BadTemplate("non-finite sample".into()));
        }
        let resting = samples[0];
        let (upstroke_index, _) = samples
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        for w in samples[..=upstroke_index].windows(2) {
            if w[1] < w[0] - 1e-9 {
                return Err(EpError::BadTemplate(
                    "upstroke segment is not monotone".into(),
                ));
            }
        }
        Ok(ApTemplate {
            dt,
            samples,
            resting,
            upstroke_index,
        })
    }

    /// Piecewise analytic atrial waveform: resting −81 mV, peak +24 mV
    /// (amplitude 105 mV), sub-2 ms upstroke, APD90 ≈ 280 ms.
    pub fn default_atrial(dt: f64) -> ApTemplate {
        let duration = 360.0;
        let steps = (duration / dt).ceil() as usize + 1;
        let rest = -81.0;
        let peak = 24.0;
        let notch = 2.0;
        let plateau_end = -12.0;
        let samples: Vec<f64> = (0..steps)
            .map(|i| {
                let t = i as f64 * dt;
                if t <= 0.0 {
                    rest
                } else if t < 1.5 {
                    // upstroke
                    let s = t / 1.5;
                    rest + (peak - rest) * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
                } else if t < 12.0 {
                    // early repolarization spike
                    let s = (t - 1.5) / 10.5;
                    notch + (peak - notch) * 0.5 * (1.0 + (std::f64::consts::PI * s).cos())
                } else if t < 120.0 {
                    // plateau drift
                    let s = (t - 12.0) / 108.0;
                    notch + (plateau_end - notch) * s
                } else if t < 340.0 {
                    // final repolarization
                    let s = (t - 120.0) / 220.0;
                    plateau_end + (rest - plateau_end) * 0.5 * (1.0 - (std::f64::consts::PI * s).cos())
                } else {
                    rest
                }
            })
            .collect();
        ApTemplate::new(dt, samples).expect("analytic template is valid")
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }

    pub fn amplitude(&self) -> f64 {
        self.samples[self.upstroke_index] - self.resting
    }

    /// Linear interpolation; resting before time zero, last sample after the
    /// end.
    pub fn value_at(&self, t: f64) -> f64 {
        if t < 0.0 {
            return self.resting;
        }
        let x = t / self.dt;
        let i = x.floor() as usize;
        if i + 1 >= self.samples.len() {
            return *self.samples.last().expect("non-empty");
        }
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    /// Duration from upstroke start until 90% repolarization.
    pub fn apd90(&self) -> f64 {
        let threshold = self.resting + 0.1 * self.amplitude();
        let mut last = 0.0;
        for (i, &v) in self.samples.iter().enumerate() {
            if v > threshold {
                last = i as f64 * self.dt;
            }
        }
        last
    }

    pub fn to_csv<P: AsRef<Path>>(&self, path: P) -> Result<(), EpError> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "time_ms,voltage_mv")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(w, "{},{v:.16e}", i as f64 * self.dt)?;
        }
        Ok(())
    }

    /// Reads a `time_ms,voltage_mv` CSV with a uniform time step.
    pub fn from_csv<P: AsRef<Path>>(path: P) -> Result<ApTemplate, EpError> {
        let display = path.as_ref().display().to_string();
        let reader = BufReader::new(File::open(path.as_ref())?);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') || (i == 0 && t.starts_with("time")) {
                continue;
            }
            let parts: Vec<&str> = t.split(',').collect();
            if parts.len() != 2 {
                return Err(EpError::Parse {
                    path: display,
                    line: i + 1,
                    msg: "expected 'time,voltage'".into(),
                });
            }
            let parse = |s: &str| -> Result<f64, EpError> {
                s.trim().parse().map_err(|_| EpError::Parse {
                    path: display.clone(),
                    line: i + 1,
                    msg: format!("bad number '{s}'"),
                })
            };
            times.push(parse(parts[0])?);
            values.push(parse(parts[1])?);
        }
        if times.len() < 2 {
            return Err(EpError::BadTemplate("need at least 2 samples".into()));
        }
        let dt = times[1] - times[0];
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 {
                return Err(EpError::BadTemplate("non-uniform time step".into()));
            }
        }
        ApTemplate::new(dt, values)
    }
}

/// Lazy per-vertex voltage time series: `Vm(m, t) = template(t − lat_m)`.
#[derive(Debug, Clone)]
pub struct VmMovie {
    pub dt: f64,
    pub steps: usize,
    lat: Vec<f64>,
    template: ApTemplate,
}

/// Builds the movie, checking that every activation time is finite and the
/// template covers the requested duration.
pub fn vm_movie(
    lat: &ActivationMap,
    template: &ApTemplate,
    duration: f64,
    dt: f64,
) -> Result<VmMovie, EpError> {
    if let Some(vertex) = lat.lat.iter().position(|t| !t.is_finite()) {
        return Err(EpError::NonFiniteLat { vertex });
    }
    if template.duration() < duration {
        return Err(EpError::TemplateTooShort {
            span: template.duration(),
            needed: duration,
        });
    }
    let steps = (duration / dt).floor() as usize + 1;
    Ok(VmMovie {
        dt,
        steps,
        lat: lat.lat.clone(),
        template: template.clone(),
    })
}

impl VmMovie {
    pub fn vertex_count(&self) -> usize {
        self.lat.len()
    }

    pub fn value(&self, vertex: usize, step: usize) -> f64 {
        self.template.value_at(step as f64 * self.dt - self.lat[vertex])
    }

    pub fn frame(&self, step: usize) -> Vec<f64> {
        let t = step as f64 * self.dt;
        self.lat.iter().map(|l| self.template.value_at(t - l)).collect()
    }

    pub fn series(&self, vertex: usize) -> Vec<f64> {
        (0..self.steps).map(|s| self.value(vertex, s)).collect()
    }
}
