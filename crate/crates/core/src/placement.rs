//! Sensor-placement SNR and actuator-placement energy-ratio analysis.
//!
//! The signal of a recording is the RMS of its three acceleration axes; the
//! noise is the same quantity measured on an idle tool at the same
//! location. Actuator placements are compared by the ratio of handle-side
//! to source-side acceleration signal energy (ASE), where the ASE of one
//! axis is the discrete integral `Σ a[n]² · Δt`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SampleBlock, TriAxisSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Rotation,
    Motion,
    Contact,
    Idle,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Rotation => "rotation",
            Action::Motion => "motion",
            Action::Contact => "contact",
            Action::Idle => "idle",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rotation" => Ok(Action::Rotation),
            "motion" => Ok(Action::Motion),
            "contact" => Ok(Action::Contact),
            "idle" => Ok(Action::Idle),
            other => Err(Error::Config(format!("unknown action {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecording {
    pub series: TriAxisSeries,
    pub location: String,
    pub action: Action,
    pub trial: u32,
}

impl LabeledRecording {
    pub fn new(series: TriAxisSeries, location: impl Into<String>, action: Action, trial: u32) -> Self {
        Self {
            series,
            location: location.into(),
            action,
            trial,
        }
    }
}

/// `sqrt(mean(x² + y² + z²))`.
pub fn rms3(series: &TriAxisSeries) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Degenerate("RMS of an empty recording".into()));
    }
    Ok((sum_squares3(series) / series.len() as f64).sqrt())
}

fn sum_squares3(series: &TriAxisSeries) -> f64 {
    series
        .axes()
        .iter()
        .map(|axis| axis.iter().map(|v| v * v).sum::<f64>())
        .sum()
}

pub fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Degenerate("RMS of an empty signal".into()));
    }
    Ok((samples.iter().map(|v| v * v).sum::<f64>() / samples.len() as f64).sqrt())
}

/// Which RMS the SNR compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrBasis {
    ThreeAxis,
    /// Single axis: 0 = x, 1 = y, 2 = z.
    Axis(usize),
}

fn signal_power(series: &TriAxisSeries, basis: SnrBasis) -> Result<f64> {
    match basis {
        SnrBasis::ThreeAxis => rms3(series).map(|r| r * r),
        SnrBasis::Axis(i) if i < 3 => rms(series.axes()[i]).map(|r| r * r),
        SnrBasis::Axis(i) => Err(Error::Contract(format!("axis index {i} out of range"))),
    }
}

fn power_ratio_db(signal: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::Degenerate("noise recording has zero power".into()));
    }
    Ok(10.0 * (signal / noise).log10())
}

/// SNR in dB (power convention) of an action recording against an idle
/// recording taken at the same location.
pub fn snr(signal: &LabeledRecording, noise: &LabeledRecording, basis: SnrBasis) -> Result<f64> {
    if signal.location != noise.location {
        return Err(Error::Contract(format!(
            "signal at {:?} compared with noise at {:?}",
            signal.location, noise.location
        )));
    }
    if noise.action != Action::Idle {
        return Err(Error::Contract(format!(
            "noise recording must be idle, got {}",
            noise.action
        )));
    }
    power_ratio_db(
        signal_power(&signal.series, basis)?,
        signal_power(&noise.series, basis)?,
    )
}

/// Acceleration signal energy per axis, in unit²·s.
pub fn ase(series: &TriAxisSeries) -> [f64; 3] {
    let dt = 1.0 / series.rate();
    series.axes().map(|axis| axis.iter().map(|v| v * v).sum::<f64>() * dt)
}

/// Single-channel ASE.
pub fn ase_block(block: &SampleBlock) -> f64 {
    block.samples.iter().map(|v| v * v).sum::<f64>() / block.rate
}

/// Handle-side ASE sum over source-side ASE sum.
pub fn e_ratio(handle: &TriAxisSeries, source: &TriAxisSeries) -> Result<f64> {
    if handle.rate() != source.rate() || handle.len() != source.len() {
        return Err(Error::Contract(format!(
            "handle ({} samples @ {} Hz) and source ({} samples @ {} Hz) differ",
            handle.len(),
            handle.rate(),
            source.len(),
            source.rate()
        )));
    }
    let source_energy: f64 = ase(source).iter().sum();
    if !(source_energy > 0.0) {
        return Err(Error::Degenerate("source recording has zero energy".into()));
    }
    Ok(ase(handle).iter().sum::<f64>() / source_energy)
}

/// Mean and sample standard deviation over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std, n })
    }
}

/// Constraint on rotation SNR when picking a sensor location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RotationCeiling {
    /// Rotation SNR may not exceed contact SNR plus `margin_db`.
    RelativeToContact { margin_db: f64 },
    /// Rotation SNR may not exceed `db`.
    Absolute { db: f64 },
}

impl Default for RotationCeiling {
    fn default() -> Self {
        RotationCeiling::RelativeToContact { margin_db: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "locations", rename_all = "snake_case")]
pub enum Selection {
    /// Fewer than two locations with contact data.
    NotApplicable,
    Selected(String),
    Tie(Vec<String>),
    /// Every location violated the rotation ceiling.
    NoneEligible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationSnr {
    pub location: String,
    pub actions: BTreeMap<Action, Stat>,
    /// Per-axis (x, y, z) contact SNR.
    pub contact_axes: Option<[Stat; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmittedCell {
    pub location: String,
    pub action: Option<Action>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrReport {
    pub locations: Vec<LocationSnr>,
    pub omitted: Vec<OmittedCell>,
    pub selection: Selection,
    pub ceiling: RotationCeiling,
}

/// Builds the SNR table and picks the sensor location with the highest
/// contact SNR among those whose rotation SNR stays under `ceiling`.
///
/// Every action trial is compared against the pooled idle power of its
/// location (mean of the idle trials' mean-square values).
pub fn placement_report(dataset: &[LabeledRecording], ceiling: RotationCeiling) -> Result<SnrReport> {
    let mut by_location: BTreeMap<&str, Vec<&LabeledRecording>> = BTreeMap::new();
    for rec in dataset {
        by_location.entry(rec.location.as_str()).or_default().push(rec);
    }

    let mut locations = Vec::new();
    let mut omitted = Vec::new();
    for (location, recs) in by_location {
        let idle: Vec<_> = recs.iter().filter(|r| r.action == Action::Idle).collect();
        if idle.is_empty() {
            omitted.push(OmittedCell {
                location: location.to_string(),
                action: None,
                reason: "no idle (noise) recording".into(),
            });
            continue;
        }
        let noise_power = |basis: SnrBasis| -> Result<f64> {
            let powers = idle
                .iter()
                .map(|r| signal_power(&r.series, basis))
                .collect::<Result<Vec<_>>>()?;
            Ok(powers.iter().sum::<f64>() / powers.len() as f64)
        };
        let noise3 = noise_power(SnrBasis::ThreeAxis)?;
        if !(noise3 > 0.0) {
            omitted.push(OmittedCell {
                location: location.to_string(),
                action: None,
                reason: "idle recording has zero power".into(),
            });
            continue;
        }

        let mut actions = BTreeMap::new();
        for action in [Action::Rotation, Action::Motion, Action::Contact] {
            let trials: Vec<_> = recs.iter().filter(|r| r.action == action).collect();
            let values = trials
                .iter()
                .map(|r| power_ratio_db(signal_power(&r.series, SnrBasis::ThreeAxis)?, noise3))
                .collect::<Result<Vec<_>>>()?;
            match Stat::from_values(&values) {
                Some(stat) => {
                    actions.insert(action, stat);
                }
                None => omitted.push(OmittedCell {
                    location: location.to_string(),
                    action: Some(action),
                    reason: "no recordings".into(),
                }),
            }
        }

        let contact: Vec<_> = recs.iter().filter(|r| r.action == Action::Contact).collect();
        let contact_axes = if contact.is_empty() {
            None
        } else {
            let mut axes = Vec::with_capacity(3);
            for axis in 0..3 {
                let basis = SnrBasis::Axis(axis);
                let noise = noise_power(basis)?;
                let values = contact
                    .iter()
                    .map(|r| power_ratio_db(signal_power(&r.series, basis)?, noise))
                    .collect::<Result<Vec<_>>>();
                match values {
                    Ok(v) => axes.push(Stat::from_values(&v).expect("contact trials present")),
                    Err(_) => break,
                }
            }
            <[Stat; 3]>::try_from(axes).ok()
        };
        if !contact.is_empty() && contact_axes.is_none() {
            omitted.push(OmittedCell {
                location: location.to_string(),
                action: Some(Action::Contact),
                reason: "per-axis SNR undefined (an idle axis has zero power)".into(),
            });
        }

        locations.push(LocationSnr {
            location: location.to_string(),
            actions,
            contact_axes,
        });
    }

    let selection = select_location(&locations, ceiling);
    Ok(SnrReport {
        locations,
        omitted,
        selection,
        ceiling,
    })
}

fn select_location(locations: &[LocationSnr], ceiling: RotationCeiling) -> Selection {
    let candidates: Vec<(&str, f64, Option<f64>)> = locations
        .iter()
        .filter_map(|l| {
            let contact = l.actions.get(&Action::Contact)?.mean;
            Some((
                l.location.as_str(),
                contact,
                l.actions.get(&Action::Rotation).map(|s| s.mean),
            ))
        })
        .collect();
    if candidates.len() < 2 {
        return Selection::NotApplicable;
    }
    let eligible: Vec<_> = candidates
        .into_iter()
        .filter(|&(_, contact, rotation)| match (rotation, ceiling) {
            (None, _) => true,
            (Some(r), RotationCeiling::RelativeToContact { margin_db }) => r <= contact + margin_db,
            (Some(r), RotationCeiling::Absolute { db }) => r <= db,
        })
        .collect();
    let Some(best) = eligible.iter().map(|c| c.1).reduce(f64::max) else {
        return Selection::NoneEligible;
    };
    let winners: Vec<String> = eligible
        .iter()
        .filter(|c| c.1 == best)
        .map(|c| c.0.to_string())
        .collect();
    if winners.len() == 1 {
        Selection::Selected(winners.into_iter().next().unwrap())
    } else {
        Selection::Tie(winners)
    }
}

/// One actuator-placement trial: what the handle felt and what was fed in.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorTrial {
    pub location: String,
    pub trial: u32,
    pub handle: TriAxisSeries,
    pub source: TriAxisSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRatioRow {
    pub location: String,
    pub e_ratio: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRatioReport {
    pub rows: Vec<EnergyRatioRow>,
    /// Location(s) with the highest mean E_ratio.
    pub best: Vec<String>,
}

pub fn actuator_report(trials: &[ActuatorTrial]) -> Result<EnergyRatioReport> {
    let mut by_location: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for t in trials {
        by_location
            .entry(t.location.as_str())
            .or_default()
            .push(e_ratio(&t.handle, &t.source)?);
    }
    let rows: Vec<EnergyRatioRow> = by_location
        .into_iter()
        .map(|(location, values)| EnergyRatioRow {
            location: location.to_string(),
            e_ratio: Stat::from_values(&values).expect("non-empty group"),
        })
        .collect();
    let top = rows.iter().map(|r| r.e_ratio.mean).reduce(f64::max);
    let best = match top {
        Some(top) => rows
            .iter()
            .filter(|r| r.e_ratio.mean == top)
            .map(|r| r.location.clone())
            .collect(),
        None => Vec::new(),
    };
    Ok(EnergyRatioReport { rows, best })
}

impl SnrReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,action,mean_db,std_db,n\n");
        for l in &self.locations {
            for (action, s) in &l.actions {
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{}\n",
                    l.location, action, s.mean, s.std, s.n
                ));
            }
        }
        out
    }

    pub fn axes_csv(&self) -> String {
        let mut out = String::from("location,axis,mean_db,std_db,n\n");
        for l in &self.locations {
            if let Some(axes) = &l.contact_axes {
                for (name, s) in ["x", "y", "z"].iter().zip(axes) {
                    out.push_str(&format!("{},{},{:.6},{:.6},{}\n", l.location, name, s.mean, s.std, s.n));
                }
            }
        }
        out
    }
}

impl fmt::Display for SnrReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Sensor placement SNR (dB, mean ± std over trials)")?;
        for l in &self.locations {
            write!(f, "  {:<10}", l.location)?;
            for (action, s) in &l.actions {
                write!(f, "  {action}: {:7.2} ± {:5.2}", s.mean, s.std)?;
            }
            writeln!(f)?;
        }
        for o in &self.omitted {
            match o.action {
                Some(a) => writeln!(f, "  omitted {}/{}: {}", o.location, a, o.reason)?,
                None => writeln!(f, "  omitted {}: {}", o.location, o.reason)?,
            }
        }
        match &self.selection {
            Selection::NotApplicable => writeln!(f, "selection: not applicable"),
            Selection::Selected(l) => writeln!(f, "selection: {l}"),
            Selection::Tie(ls) => writeln!(f, "selection: tie between {}", ls.join(", ")),
            Selection::NoneEligible => writeln!(f, "selection: no location within the rotation ceiling"),
        }
    }
}

impl EnergyRatioReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("location,e_ratio_mean,e_ratio_std,n\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                r.location, r.e_ratio.mean, r.e_ratio.std, r.e_ratio.n
            ));
        }
        out
    }
}

impl fmt::Display for EnergyRatioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Actuator placement E_ratio (mean ± std)")?;
        for r in &self.rows {
            writeln!(f, "  {:<12} {:.4} ± {:.4}", r.location, r.e_ratio.mean, r.e_ratio.std)?;
        }
        writeln!(f, "best: {}", self.best.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SignalKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn noise(seed: u64, len: usize, level: f64) -> TriAxisSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TriAxisSeries::from_fn(len, 8000.0, SignalKind::Acceleration, |_| {
            [
                level * rng.random_range(-1.0..1.0),
                level * rng.random_range(-1.0..1.0),
                level * rng.random_range(-1.0..1.0),
            ]
        })
    }

    #[test]
    fn rms3_cases() {
        let ones = TriAxisSeries::from_fn(10, 100.0, SignalKind::Acceleration, |_| [1.0, 1.0, 1.0]);
        assert!((rms3(&ones).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            rms3(&TriAxisSeries::zeros(10, 100.0, SignalKind::Acceleration)).unwrap(),
            0.0
        );
        assert!(rms3(&TriAxisSeries::zeros(0, 100.0, SignalKind::Acceleration)).is_err());
    }

    #[test]
    fn rms3_matches_brute_force() {
        let s = noise(3, 777, 2.0);
        let mut acc = 0.0;
        for n in 0..s.len() {
            let [a, b, c] = s.sample(n);
            acc += a * a + b * b + c * c;
        }
        assert!((rms3(&s).unwrap() - (acc / 777.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn snr_decade_and_identity() {
        let n = noise(1, 4000, 0.1);
        let idle = LabeledRecording::new(n.clone(), "lower", Action::Idle, 0);
        let loud = LabeledRecording::new(n.scaled(10.0), "lower", Action::Contact, 0);
        assert!((snr(&loud, &idle, SnrBasis::ThreeAxis).unwrap() - 20.0).abs() < 1e-9);
        let same = LabeledRecording::new(n, "lower", Action::Contact, 0);
        assert!(snr(&same, &idle, SnrBasis::ThreeAxis).unwrap().abs() < 1e-12);
        assert!((snr(&loud, &idle, SnrBasis::Axis(1)).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn snr_rejects_degenerate_and_mismatched() {
        let z = TriAxisSeries::zeros(100, 8000.0, SignalKind::Acceleration);
        let idle = LabeledRecording::new(z, "upper", Action::Idle, 0);
        let sig = LabeledRecording::new(noise(2, 100, 1.0), "upper", Action::Contact, 0);
        assert!(matches!(
            snr(&sig, &idle, SnrBasis::ThreeAxis),
            Err(Error::Degenerate(_))
        ));
        let other = LabeledRecording::new(noise(2, 100, 1.0), "lower", Action::Idle, 0);
        assert!(snr(&sig, &other, SnrBasis::ThreeAxis).is_err());
        let not_idle = LabeledRecording::new(noise(2, 100, 1.0), "upper", Action::Motion, 0);
        assert!(snr(&sig, &not_idle, SnrBasis::ThreeAxis).is_err());
    }

    #[test]
    fn ase_of_unit_sine_is_half_duration() {
        let rate = 8000.0;
        let t = 2.0;
        let s = TriAxisSeries::from_fn((rate * t) as usize, rate, SignalKind::Acceleration, |n| {
            [(2.0 * PI * 250.0 * n as f64 / rate).sin(), 0.0, 0.0]
        });
        let e = ase(&s);
        assert!((e[0] - t / 2.0).abs() <= 0.01 * t / 2.0);
        assert_eq!(e[1], 0.0);
    }

    #[test]
    fn ase_of_decaying_sinusoid_matches_trapezoid() {
        let rate = 8000.0;
        let (f, tau) = (250.0, 0.02);
        let a = |t: f64| (-t / tau).exp() * (2.0 * PI * f * t).sin();
        let len = (5.0 * tau * rate) as usize;
        let s = SampleBlock::new((0..len).map(|n| a(n as f64 / rate)).collect(), rate);
        // fine trapezoidal quadrature of a(t)² on [0, 5τ]
        let steps = 200_000;
        let h = 5.0 * tau / steps as f64;
        let mut integral = 0.5 * (a(0.0).powi(2) + a(5.0 * tau).powi(2));
        for k in 1..steps {
            integral += a(k as f64 * h).powi(2);
        }
        integral *= h;
        let got = ase_block(&s);
        assert!((got - integral).abs() <= 0.005 * integral, "{got} vs {integral}");
    }

    #[test]
    fn e_ratio_identities() {
        let s = noise(9, 2000, 1.0);
        assert!((e_ratio(&s, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!((e_ratio(&s.scaled(0.5), &s).unwrap() - 0.25).abs() < 1e-12);
        let z = TriAxisSeries::zeros(2000, 8000.0, SignalKind::Acceleration);
        assert!(matches!(e_ratio(&s, &z), Err(Error::Degenerate(_))));
        assert!(e_ratio(&s.slice_samples(0, 10), &s).is_err());
    }

    #[test]
    fn e_ratio_invariant_under_rotation() {
        let s = noise(11, 4000, 1.0);
        let (a, b) = (0.7f64, -1.3f64);
        // Rz(a) · Rx(b)
        let rz = [[a.cos(), -a.sin(), 0.0], [a.sin(), a.cos(), 0.0], [0.0, 0.0, 1.0]];
        let rx = [[1.0, 0.0, 0.0], [0.0, b.cos(), -b.sin()], [0.0, b.sin(), b.cos()]];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| rz[i][k] * rx[k][j]).sum();
            }
        }
        let r = e_ratio(&s.transformed(&m), &s).unwrap();
        assert!((r - 1.0).abs() < 1e-6, "{r}");
    }

    fn cell(location: &str, action: Action, gain: f64, seed: u64) -> LabeledRecording {
        let base = noise(seed, 2000, 0.05);
        let sig = if action == Action::Idle {
            base
        } else {
            base.add(&noise(seed + 1000, 2000, gain)).unwrap()
        };
        LabeledRecording::new(sig, location, action, seed as u32)
    }

    #[test]
    fn single_location_has_no_selection() {
        let data = vec![
            cell("upper", Action::Idle, 0.0, 1),
            cell("upper", Action::Contact, 1.0, 2),
        ];
        let r = placement_report(&data, RotationCeiling::default()).unwrap();
        assert_eq!(r.locations.len(), 1);
        assert_eq!(r.selection, Selection::NotApplicable);
    }

    #[test]
    fn identical_locations_tie() {
        let mut data = Vec::new();
        for loc in ["a", "b"] {
            data.push(cell(loc, Action::Idle, 0.0, 1));
            data.push(cell(loc, Action::Contact, 1.0, 2));
        }
        let r = placement_report(&data, RotationCeiling::default()).unwrap();
        assert_eq!(r.selection, Selection::Tie(vec!["a".into(), "b".into()]));
    }

    #[test]
    fn missing_idle_omits_location() {
        let data = vec![
            cell("a", Action::Contact, 1.0, 2),
            cell("b", Action::Idle, 0.0, 3),
            cell("b", Action::Contact, 1.0, 4),
        ];
        let r = placement_report(&data, RotationCeiling::default()).unwrap();
        assert_eq!(r.locations.len(), 1);
        assert!(r.omitted.iter().any(|o| o.location == "a" && o.action.is_none()));
    }

    #[test]
    fn rotation_ceiling_excludes_noisy_location() {
        let data = vec![
            cell("a", Action::Idle, 0.0, 1),
            cell("a", Action::Contact, 0.5, 2),
            cell("a", Action::Rotation, 0.1, 3),
            cell("b", Action::Idle, 0.0, 4),
            cell("b", Action::Contact, 1.0, 5),
            cell("b", Action::Rotation, 3.0, 6),
        ];
        let r = placement_report(&data, RotationCeiling::default()).unwrap();
        assert_eq!(r.selection, Selection::Selected("a".into()));
        let r = placement_report(&data, RotationCeiling::Absolute { db: 100.0 }).unwrap();
        assert_eq!(r.selection, Selection::Selected("b".into()));
        let r = placement_report(&data, RotationCeiling::Absolute { db: -100.0 }).unwrap();
        assert_eq!(r.selection, Selection::NoneEligible);
    }

    #[test]
    fn actuator_report_picks_highest_ratio() {
        let src = noise(21, 1000, 1.0);
        let trials = vec![
            ActuatorTrial {
                location: "a".into(),
                trial: 0,
                handle: src.scaled(0.5),
                source: src.clone(),
            },
            ActuatorTrial {
                location: "b".into(),
                trial: 0,
                handle: src.scaled(0.8),
                source: src.clone(),
            },
            ActuatorTrial {
                location: "b".into(),
                trial: 1,
                handle: src.scaled(0.6),
                source: src.clone(),
            },
        ];
        let r = actuator_report(&trials).unwrap();
        assert_eq!(r.best, vec!["b".to_string()]);
        assert!((r.rows[0].e_ratio.mean - 0.25).abs() < 1e-12);
        assert_eq!(r.rows[1].e_ratio.n, 2);
        assert!(r.to_csv().starts_with("location,e_ratio_mean"));
    }

    proptest! {
        #[test]
        fn snr_is_scale_invariant(seed in 0u64..1000, k in 0.01f64..100.0) {
            let sig = LabeledRecording::new(noise(seed, 256, 1.0), "m", Action::Contact, 0);
            let idle = LabeledRecording::new(noise(seed + 1, 256, 0.1), "m", Action::Idle, 0);
            let base = snr(&sig, &idle, SnrBasis::ThreeAxis).unwrap();
            let sig_k = LabeledRecording { series: sig.series.scaled(k), ..sig.clone() };
            let idle_k = LabeledRecording { series: idle.series.scaled(k), ..idle.clone() };
            let scaled = snr(&sig_k, &idle_k, SnrBasis::ThreeAxis).unwrap();
            prop_assert!((base - scaled).abs() < 1e-9);
        }

        #[test]
        fn ase_is_additive_over_segments(seed in 0u64..1000, cut in 1usize..511) {
            let s = noise(seed, 512, 1.0);
            let whole = ase(&s);
            let a = ase(&s.slice_samples(0, cut));
            let b = ase(&s.slice_samples(cut, 512));
            for i in 0..3 {
                prop_assert!((whole[i] - (a[i] + b[i])).abs() <= 1e-12 * whole[i].max(1e-300));
            }
        }

        #[test]
        fn e_ratio_scales_quadratically(seed in 0u64..1000, k in 0.001f64..1000.0) {
            let s = noise(seed, 256, 1.0);
            let r = e_ratio(&s.scaled(k), &s).unwrap();
            prop_assert!((r - k * k).abs() <= 1e-6 * k * k);
        }
    }
}
