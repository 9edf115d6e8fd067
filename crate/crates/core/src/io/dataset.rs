//! Placement datasets: a CSV index `path,location,action,trial` whose rows
//! reference WAV (3-channel) or CSV (`timestamp,x,y,z`) recordings.
//!
//! Besides the sensor-placement actions (`rotation`, `motion`, `contact`,
//! `idle`), the actions `actuator_source` and `actuator_handle` pair the
//! drive and handle-side recordings of one actuator trial by
//! (location, trial).

use std::collections::BTreeMap;
use std::path::Path;

use super::csv_series::{read_tri_csv, ACCEL_COLUMNS};
use super::wav::read_tri_wav;
use crate::error::{Error, Result};
use crate::placement::{Action, ActuatorTrial, LabeledRecording};
use crate::signal::{SignalKind, TriAxisSeries};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub recordings: Vec<LabeledRecording>,
    pub actuator: Vec<ActuatorTrial>,
}

fn read_recording(path: &Path) -> Result<TriAxisSeries> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("wav") => read_tri_wav(path, SignalKind::Acceleration),
        Some("csv") => Ok(read_tri_csv(path, ACCEL_COLUMNS, SignalKind::Acceleration)?.series),
        _ => Err(Error::schema(path, "recordings must be .wav or .csv")),
    }
}

pub fn load_dataset(index: &Path) -> Result<Dataset> {
    let base = index.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(index)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_ascii_lowercase).collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(index, format!("missing column {name:?}")))
    };
    let (c_path, c_loc, c_act, c_trial) = (col("path")?, col("location")?, col("action")?, col("trial")?);

    let mut dataset = Dataset::default();
    let mut sources: BTreeMap<(String, u32), TriAxisSeries> = BTreeMap::new();
    let mut handles: BTreeMap<(String, u32), TriAxisSeries> = BTreeMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let get = |c: usize| record.get(c).unwrap_or("").to_string();
        let trial: u32 = get(c_trial)
            .parse()
            .map_err(|_| Error::schema(index, format!("row {}: trial must be an integer", row + 2)))?;
        let location = get(c_loc);
        let series = read_recording(&base.join(get(c_path)))?;
        match get(c_act).to_ascii_lowercase().as_str() {
            "actuator_source" => {
                sources.insert((location, trial), series);
            }
            "actuator_handle" => {
                handles.insert((location, trial), series);
            }
            other => {
                let action: Action = other
                    .parse()
                    .map_err(|e| Error::schema(index, format!("row {}: {e}", row + 2)))?;
                dataset
                    .recordings
                    .push(LabeledRecording::new(series, location, action, trial));
            }
        }
    }
    for (key, handle) in handles {
        let source = sources
            .remove(&key)
            .ok_or_else(|| Error::schema(index, format!("actuator handle {key:?} has no source")))?;
        dataset.actuator.push(ActuatorTrial {
            location: key.0,
            trial: key.1,
            handle,
            source,
        });
    }
    if let Some(key) = sources.keys().next() {
        return Err(Error::schema(index, format!("actuator source {key:?} has no handle")));
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::wav::write_tri_wav;

    #[test]
    fn loads_recordings_and_pairs_actuator_trials() {
        let dir = tempfile::tempdir().unwrap();
        let s = TriAxisSeries::from_fn(100, 8000.0, SignalKind::Acceleration, |n| [n as f64 * 0.01, 0.0, 0.0]);
        for name in ["idle.wav", "contact.wav", "src.wav", "hnd.wav"] {
            write_tri_wav(&s, &dir.path().join(name)).unwrap();
        }
        std::fs::write(dir.path().join("x.csv"), "timestamp,x,y,z\n0,1,2,3\n0.000125,1,2,3\n").unwrap();
        let index = dir.path().join("ds.csv");
        std::fs::write(
            &index,
            "path,location,action,trial\n\
             idle.wav,lower,idle,0\n\
             contact.wav,lower,contact,0\n\
             x.csv,lower,motion,1\n\
             src.wav,a,actuator_source,0\n\
             hnd.wav,a,actuator_handle,0\n",
        )
        .unwrap();
        let ds = load_dataset(&index).unwrap();
        assert_eq!(ds.recordings.len(), 3);
        assert_eq!(ds.recordings[2].series.rate(), 8000.0);
        assert_eq!(ds.actuator.len(), 1);
        assert_eq!(ds.actuator[0].location, "a");
    }

    #[test]
    fn unpaired_source_and_bad_action_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = TriAxisSeries::zeros(10, 8000.0, SignalKind::Acceleration);
        write_tri_wav(&s, &dir.path().join("a.wav")).unwrap();
        let index = dir.path().join("ds.csv");
        std::fs::write(&index, "path,location,action,trial\na.wav,x,actuator_source,0\n").unwrap();
        assert!(load_dataset(&index).is_err());
        std::fs::write(&index, "path,location,action,trial\na.wav,x,wiggle,0\n").unwrap();
        assert!(load_dataset(&index).is_err());
    }
}
