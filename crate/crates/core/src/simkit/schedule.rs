use std::io::{Read, Write};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Mandatory,
    Voluntary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdrEvent {
    pub start: DateTime<Utc>,
    pub duration_h: f64,
    /// Facility-level reduction target.
    pub target_kwh: f64,
    /// Grid reward rate; present only for voluntary events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_per_kwh: Option<f64>,
}

impl EdrEvent {
    pub fn kind(&self) -> EventKind {
        match self.u_per_kwh {
            Some(_) => EventKind::Voluntary,
            None => EventKind::Mandatory,
        }
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.start + Duration::milliseconds((self.duration_h * 3.6e6).round() as i64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdrSchedule {
    pub events: Vec<EdrEvent>,
}

impl EdrSchedule {
    pub fn new(events: Vec<EdrEvent>) -> Result<Self> {
        let s = EdrSchedule { events };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Positive targets, durations and rates; events in start order without overlap.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            let err = |message: String| Error::Schedule { line: i + 2, message };
            if !(e.target_kwh.is_finite() && e.target_kwh > 0.0) {
                return Err(err(format!("target_kwh must be positive, got {}", e.target_kwh)));
            }
            if !(e.duration_h.is_finite() && e.duration_h > 0.0) {
                return Err(err(format!("duration_h must be positive, got {}", e.duration_h)));
            }
            if let Some(u) = e.u_per_kwh {
                if !(u.is_finite() && u > 0.0) {
                    return Err(err(format!("u_per_kwh must be positive, got {u}")));
                }
            }
            if i > 0 && self.events[i - 1].end() > e.start {
                return Err(err(format!("event starting {} overlaps the previous one", e.start)));
            }
        }
        Ok(())
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<EdrSchedule> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        let with_rate = match cols.as_slice() {
            ["start", "duration_h", "target_kwh"] => false,
            ["start", "duration_h", "target_kwh", "u_per_kwh"] => true,
            _ => {
                return Err(Error::Schedule {
                    line: 1,
                    message: "header must be `start,duration_h,target_kwh[,u_per_kwh]`".into(),
                })
            }
        };
        let mut events = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let err = |message: String| Error::Schedule { line, message };
            let rec = rec.map_err(|e| err(e.to_string()))?;
            if rec.len() != cols.len() && !(with_rate && rec.len() == 3) {
                return Err(err(format!("expected {} fields, found {}", cols.len(), rec.len())));
            }
            let num = |k: usize, name: &str| -> Result<f64> {
                rec[k].parse().map_err(|_| err(format!("bad {name} `{}`", &rec[k])))
            };
            let start = DateTime::parse_from_rfc3339(&rec[0])
                .map_err(|e| err(format!("bad start `{}`: {e}", &rec[0])))?
                .with_timezone(&Utc);
            let u_per_kwh = match rec.get(3) {
                Some(f) if !f.is_empty() => Some(num(3, "u_per_kwh")?),
                _ => None,
            };
            events.push(EdrEvent {
                start,
                duration_h: num(1, "duration_h")?,
                target_kwh: num(2, "target_kwh")?,
                u_per_kwh,
            });
        }
        EdrSchedule::new(events)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let with_rate = self.events.iter().any(|e| e.u_per_kwh.is_some());
        let mut header = vec!["start", "duration_h", "target_kwh"];
        if with_rate {
            header.push("u_per_kwh");
        }
        w.write_record(&header)?;
        for e in &self.events {
            let mut rec = vec![
                e.start.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                e.duration_h.to_string(),
                e.target_kwh.to_string(),
            ];
            if with_rate {
                rec.push(e.u_per_kwh.map(|u| u.to_string()).unwrap_or_default());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Hourly shape of a winter day's emergency demand response, as a fraction
/// of the daily peak: a morning ramp and a higher early-evening peak.
const WINTER_DAY_SHAPE: [f64; 24] = [
    0.30, 0.26, 0.24, 0.24, 0.28, 0.40, 0.62, 0.84, 0.92, 0.86, 0.74, 0.64, 0.58, 0.55, 0.55, 0.60, 0.74, 0.92, 1.00,
    0.96, 0.84, 0.68, 0.50, 0.38,
];

/// Twenty-four back-to-back one-hour mandatory events on `date`, scaled so
/// the largest target equals `peak_kwh`.
pub fn winter_event_day(date: NaiveDate, peak_kwh: f64) -> EdrSchedule {
    let midnight = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap());
    let events = WINTER_DAY_SHAPE
        .iter()
        .enumerate()
        .map(|(h, &f)| EdrEvent {
            start: midnight + Duration::hours(h as i64),
            duration_h: 1.0,
            target_kwh: peak_kwh * f,
            u_per_kwh: None,
        })
        .collect();
    EdrSchedule { events }
}
