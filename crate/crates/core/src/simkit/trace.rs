use std::f64::consts::PI;
use std::io::{Read, Write};

use chrono::{DateTime, Duration, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{SimConfig, SyntheticTrace, TraceSource};
use crate::error::{Error, Result};

/// Per-tenant utilization, as a fraction of each tenant's service capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadTrace {
    pub timestamps: Vec<DateTime<Utc>>,
    /// `loads[t][n]` is tenant `n`'s utilization at step `t`.
    pub loads: Vec<Vec<f64>>,
}

impl WorkloadTrace {
    pub fn tenants(&self) -> usize {
        self.loads.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Mean utilization of tenant `n` over the whole trace.
    pub fn mean(&self, n: usize) -> f64 {
        self.loads.iter().map(|row| row[n]).sum::<f64>() / self.len() as f64
    }

    /// Loads in effect at `t`: the last sample at or before `t`. Times past
    /// the final sample are accepted for one more step.
    pub fn loads_at(&self, t: DateTime<Utc>) -> Result<&[f64]> {
        let first = *self.timestamps.first().ok_or_else(|| Error::Trace {
            line: 0,
            message: "empty trace".into(),
        })?;
        let last = *self.timestamps.last().unwrap();
        let step = if self.len() >= 2 {
            last - self.timestamps[self.len() - 2]
        } else {
            Duration::zero()
        };
        if t < first || t > last + step {
            return Err(Error::Trace {
                line: 0,
                message: format!("time {t} outside trace span {first} .. {}", last + step),
            });
        }
        let i = self.timestamps.partition_point(|&x| x <= t) - 1;
        Ok(&self.loads[i])
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<WorkloadTrace> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("timestamp") || headers.len() < 2 {
            return Err(Error::Trace {
                line: 1,
                message: "header must be `timestamp,tenant_1,...`".into(),
            });
        }
        for (k, h) in headers.iter().enumerate().skip(1) {
            if h != format!("tenant_{k}") {
                return Err(Error::Trace {
                    line: 1,
                    message: format!("column {} must be named tenant_{k}, found `{h}`", k + 1),
                });
            }
        }
        let n = headers.len() - 1;
        let mut trace = WorkloadTrace {
            timestamps: Vec::new(),
            loads: Vec::new(),
        };
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Trace {
                line,
                message: e.to_string(),
            })?;
            let err = |message: String| Error::Trace { line, message };
            if rec.len() != n + 1 {
                return Err(err(format!("expected {} fields, found {}", n + 1, rec.len())));
            }
            let ts = DateTime::parse_from_rfc3339(&rec[0])
                .map_err(|e| err(format!("bad timestamp `{}`: {e}", &rec[0])))?
                .with_timezone(&Utc);
            if trace.timestamps.last().is_some_and(|&prev| ts <= prev) {
                return Err(err("timestamps must be strictly increasing".into()));
            }
            let mut row = Vec::with_capacity(n);
            for field in rec.iter().skip(1) {
                let v: f64 = field.parse().map_err(|_| err(format!("bad load `{field}`")))?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(err(format!("load {v} outside [0, 1]")));
                }
                row.push(v);
            }
            trace.timestamps.push(ts);
            trace.loads.push(row);
        }
        if trace.is_empty() {
            return Err(Error::Trace {
                line: 2,
                message: "trace has no rows".into(),
            });
        }
        Ok(trace)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string()];
        header.extend((1..=self.tenants()).map(|k| format!("tenant_{k}")));
        w.write_record(&header)?;
        for (ts, row) in self.timestamps.iter().zip(&self.loads) {
            let mut rec = vec![ts.to_rfc3339_opts(chrono::SecondsFormat::Secs, true)];
            rec.extend(row.iter().map(|v| format!("{v:.6}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Daily sinusoid peaking mid-afternoon plus Gaussian noise, clamped to
    /// `[0, 1]`. Tenant `k` is shifted by `k` hours.
    pub fn synthetic(params: &SyntheticTrace, tenants: usize) -> Result<WorkloadTrace> {
        let noise = Normal::new(0.0, params.noise_sd)
            .map_err(|e| Error::InvalidScenario(format!("noise_sd: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let step = Duration::minutes(params.step_minutes as i64);
        let mut trace = WorkloadTrace {
            timestamps: Vec::with_capacity(params.steps),
            loads: Vec::with_capacity(params.steps),
        };
        for t in 0..params.steps {
            let ts = params.start + step * t as i32;
            let hour = (t as f64 * params.step_minutes as f64) / 60.0;
            let row = (0..tenants)
                .map(|k| {
                    let phase = 2.0 * PI * (hour - 9.0 - k as f64) / 24.0;
                    let v = params.mean_utilization + params.amplitude * phase.sin() + noise.sample(&mut rng);
                    v.clamp(0.0, 1.0)
                })
                .collect();
            trace.timestamps.push(ts);
            trace.loads.push(row);
        }
        Ok(trace)
    }
}

/// Reads or generates the workload trace the config points at.
pub fn acquire_trace(cfg: &SimConfig) -> Result<WorkloadTrace> {
    let trace = match &cfg.trace {
        TraceSource::Synthetic(p) => WorkloadTrace::synthetic(p, cfg.tenants.len())?,
        TraceSource::File { path } => WorkloadTrace::from_csv(std::fs::File::open(path)?)?,
    };
    if trace.tenants() != cfg.tenants.len() {
        return Err(Error::Trace {
            line: 1,
            message: format!(
                "trace has {} tenant columns but the config has {} tenants",
                trace.tenants(),
                cfg.tenants.len()
            ),
        });
    }
    Ok(trace)
}
