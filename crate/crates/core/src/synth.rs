//! Synthetic ground truth for rotation, motion and contact actions.
//!
//! Contacts are exponentially decaying sinusoids projected on a direction;
//! motion is band-limited Gaussian noise; rotation is a low tone with two
//! harmonics concentrated on the x (shaft) axis. Scenarios superpose timed
//! events per tool, optionally pass them through a per-tool 3×3 mixing
//! matrix (sensor location: attenuation and crosstalk) and add a seeded
//! noise floor.
//!
//! Samples are taken at interval midpoints, `t = (n + ½) / rate`, so an
//! event's first sample is already non-zero.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{design_bandpass, FilterSpec};
use crate::error::{Error, Result};
use crate::signal::{SignalKind, TriAxisSeries};

pub const DEFAULT_CONTACT_FREQUENCY: f64 = 250.0;
pub const DEFAULT_CONTACT_DECAY: f64 = 0.02;
pub const DEFAULT_FORCE_RATE: f64 = 1000.0;
pub const DEFAULT_FORCE_DURATION: f64 = 0.25;
/// Contact envelope length in decay constants.
pub const CONTACT_LENGTH_TAUS: f64 = 5.0;

const ROTATION_HARMONICS: [f64; 3] = [1.0, 0.5, 0.25];
const ROTATION_CROSSTALK: f64 = 0.05;
const MOTION_WARMUP_S: f64 = 0.5;

#[inline]
fn midpoint(n: usize, rate: f64) -> f64 {
    (n as f64 + 0.5) / rate
}

fn check_direction(dir: [f64; 3]) -> Result<()> {
    let norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Config(format!(
            "direction {dir:?} is not unit length (|d| = {norm})"
        )));
    }
    Ok(())
}

/// `dirᵢ · A · e^(−t/τ) · sin(2πft)` on each axis, `5τ` long.
pub fn contact_transient(
    amplitude: f64,
    frequency: f64,
    decay: f64,
    direction: [f64; 3],
    rate: f64,
) -> Result<TriAxisSeries> {
    if !(amplitude > 0.0) || !(decay > 0.0) || !(frequency > 0.0) || !(rate > 0.0) {
        return Err(Error::Config(format!(
            "contact needs A > 0, f > 0, τ > 0 (got A={amplitude}, f={frequency}, τ={decay})"
        )));
    }
    check_direction(direction)?;
    if !(80.0..=1000.0).contains(&frequency) {
        warn!("contact frequency {frequency} Hz outside the 80-1000 Hz feedback band");
    }
    let len = (CONTACT_LENGTH_TAUS * decay * rate).round() as usize;
    Ok(TriAxisSeries::from_fn(len, rate, SignalKind::Acceleration, |n| {
        let t = midpoint(n, rate);
        let v = amplitude * (-t / decay).exp() * (2.0 * PI * frequency * t).sin();
        [direction[0] * v, direction[1] * v, direction[2] * v]
    }))
}

/// Stationary band-limited Gaussian noise whose expected three-axis RMS
/// (`sqrt(mean(x²+y²+z²))`) is `level`.
pub fn motion_noise(level: f64, band: (f64, f64), duration: f64, rate: f64, seed: u64) -> Result<TriAxisSeries> {
    if !(level >= 0.0) {
        return Err(Error::Config(format!("motion level {level} must be non-negative")));
    }
    let len = (duration * rate).round() as usize;
    if level == 0.0 {
        return Ok(TriAxisSeries::zeros(len, rate, SignalKind::Acceleration));
    }
    let design = design_bandpass(&FilterSpec::new(band.0, band.1, 2), rate)?;

    // output variance of unit white noise through the filter is Σh²
    let mut probe = design.clone();
    let mut energy = 0.0;
    let mut quiet = 0usize;
    for n in 0..(rate as usize * 20) {
        let h = probe.tick(if n == 0 { 1.0 } else { 0.0 });
        energy += h * h;
        quiet = if h.abs() < 1e-12 { quiet + 1 } else { 0 };
        if quiet > 1000 {
            break;
        }
    }
    let scale = level / 3f64.sqrt() / energy.sqrt();

    let warmup = (MOTION_WARMUP_S * rate) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut axes: [Vec<f64>; 3] = Default::default();
    for axis in axes.iter_mut() {
        let mut f = design.clone();
        *axis = (0..warmup + len)
            .map(|_| f.tick(StandardNormal.sample(&mut rng)) * scale)
            .skip(warmup)
            .collect();
    }
    let [x, y, z] = axes;
    TriAxisSeries::new(x, y, z, rate, SignalKind::Acceleration)
}

/// Rotation vibration: fundamental `f_rot` plus 2nd and 3rd harmonics on x,
/// with 5 % crosstalk onto y and z. Three-axis RMS is `level`.
pub fn rotation_tone(level: f64, f_rot: f64, duration: f64, rate: f64) -> Result<TriAxisSeries> {
    if !(level >= 0.0) {
        return Err(Error::Config(format!("rotation level {level} must be non-negative")));
    }
    if !(f_rot > 0.0) || 3.0 * f_rot >= rate / 2.0 {
        return Err(Error::Config(format!(
            "rotation frequency {f_rot} Hz needs its 3rd harmonic below Nyquist"
        )));
    }
    let harmonic_power: f64 = ROTATION_HARMONICS.iter().map(|a| a * a / 2.0).sum();
    let amp = level / (harmonic_power * (1.0 + 2.0 * ROTATION_CROSSTALK.powi(2))).sqrt();
    let len = (duration * rate).round() as usize;
    Ok(TriAxisSeries::from_fn(len, rate, SignalKind::Acceleration, |n| {
        let t = midpoint(n, rate);
        let (mut x, mut y) = (0.0, 0.0);
        for (k, a) in ROTATION_HARMONICS.iter().enumerate() {
            let phase = 2.0 * PI * f_rot * (k + 1) as f64 * t;
            x += a * phase.sin();
            y += a * phase.cos();
        }
        let c = ROTATION_CROSSTALK * amp;
        [amp * x, c * y, -c * y]
    }))
}

/// Attenuation with symmetric crosstalk, `g · [[1,c,c],[c,1,c],[c,c,1]]`.
pub fn location_matrix(gain: f64, crosstalk: f64) -> [[f64; 3]; 3] {
    let c = gain * crosstalk;
    [[gain, c, c], [c, gain, c], [c, c, gain]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventAction {
    Contact {
        amplitude: f64,
        #[serde(default = "default_contact_frequency")]
        frequency: f64,
        #[serde(default = "default_contact_decay")]
        decay: f64,
        #[serde(default = "default_direction")]
        direction: [f64; 3],
        /// Peak baseplate force (N) of the accompanying half-sine pulse.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        force: Option<f64>,
    },
    Motion {
        level: f64,
        #[serde(default = "default_motion_low")]
        low: f64,
        #[serde(default = "default_motion_high")]
        high: f64,
        duration: f64,
    },
    Rotation {
        level: f64,
        frequency: f64,
        duration: f64,
    },
}

fn default_contact_frequency() -> f64 {
    DEFAULT_CONTACT_FREQUENCY
}
fn default_contact_decay() -> f64 {
    DEFAULT_CONTACT_DECAY
}
fn default_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}
fn default_motion_low() -> f64 {
    20.0
}
fn default_motion_high() -> f64 {
    400.0
}
fn default_tool() -> String {
    "left".into()
}

impl EventAction {
    pub fn kind(&self) -> &'static str {
        match self {
            EventAction::Contact { .. } => "contact",
            EventAction::Motion { .. } => "motion",
            EventAction::Rotation { .. } => "rotation",
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            EventAction::Contact { decay, .. } => CONTACT_LENGTH_TAUS * decay,
            EventAction::Motion { duration, .. } | EventAction::Rotation { duration, .. } => duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptEvent {
    /// Onset, seconds.
    pub t0: f64,
    #[serde(default = "default_tool")]
    pub tool: String,
    #[serde(flatten)]
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptMarker {
    pub name: String,
    pub t: f64,
}

/// A timed list of synthetic events. Serialized as JSON; see
/// `docs/scenario.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    #[serde(default = "default_rate")]
    pub rate: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Tools to render even if no event targets them.
    #[serde(default)]
    pub tools: Vec<String>,
    /// Per-axis RMS of the white sensor noise floor added to every tool.
    #[serde(default)]
    pub noise_floor: f64,
    /// Per-tool sensor-location mixing matrix applied to event signals.
    #[serde(default)]
    pub mixing: BTreeMap<String, [[f64; 3]; 3]>,
    #[serde(default = "default_force_rate")]
    pub force_rate: f64,
    #[serde(default)]
    pub markers: Vec<ScriptMarker>,
    #[serde(default)]
    pub events: Vec<ScriptEvent>,
}

fn default_rate() -> f64 {
    crate::signal::DEFAULT_RATE
}
fn default_force_rate() -> f64 {
    DEFAULT_FORCE_RATE
}

impl ScenarioScript {
    pub fn new(rate: f64, duration: f64) -> Self {
        Self {
            rate,
            duration,
            seed: 0,
            tools: Vec::new(),
            noise_floor: 0.0,
            mixing: BTreeMap::new(),
            force_rate: DEFAULT_FORCE_RATE,
            markers: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn with_event(mut self, t0: f64, tool: &str, action: EventAction) -> Self {
        self.events.push(ScriptEvent {
            t0,
            tool: tool.into(),
            action,
        });
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let script: Self = serde_json::from_str(text)?;
        script.validate()?;
        Ok(script)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate > 0.0) || !(self.duration >= 0.0) || !(self.force_rate > 0.0) {
            return Err(Error::Config(
                "rate, force_rate must be positive and duration non-negative".into(),
            ));
        }
        if !(self.noise_floor >= 0.0) {
            return Err(Error::Config("noise floor must be non-negative".into()));
        }
        for pair in self.events.windows(2) {
            if pair[1].t0 < pair[0].t0 {
                return Err(Error::Config(format!(
                    "events not time-sorted: {} after {}",
                    pair[1].t0, pair[0].t0
                )));
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if !(e.t0 >= 0.0) {
                return Err(Error::Config(format!("event {i} starts before 0")));
            }
            if e.t0 + e.action.duration() > self.duration + 1e-9 {
                return Err(Error::Config(format!(
                    "event {i} ({}) ends at {} s, past the {} s scenario",
                    e.action.kind(),
                    e.t0 + e.action.duration(),
                    self.duration
                )));
            }
            if let EventAction::Contact { direction, .. } = e.action {
                check_direction(direction).map_err(|err| Error::Config(format!("event {i}: {err}")))?;
            }
        }
        Ok(())
    }

    /// Every tool named by `tools`, an event, or a mixing entry, sorted.
    pub fn tool_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .tools
            .iter()
            .cloned()
            .chain(self.events.iter().map(|e| e.tool.clone()))
            .chain(self.mixing.keys().cloned())
            .collect();
        if ids.is_empty() {
            ids.push(default_tool());
        }
        ids.sort();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub index: usize,
    pub tool: String,
    pub kind: String,
    pub t0: f64,
    pub onset_sample: u64,
    /// One past the last sample of the event's support.
    pub end_sample: u64,
    /// Three-axis ASE of the event as rendered (after mixing), unit²·s.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedScenario {
    pub rate: f64,
    pub tools: BTreeMap<String, TriAxisSeries>,
    pub force: Option<TriAxisSeries>,
    pub events: Vec<EventRecord>,
    pub markers: Vec<(String, u64)>,
}

impl RenderedScenario {
    pub fn events_csv(&self) -> String {
        let mut out = String::from("index,tool,kind,t0,onset_sample,end_sample,energy\n");
        for e in &self.events {
            out.push_str(&format!(
                "{},{},{},{:.6},{},{},{:.9}\n",
                e.index, e.tool, e.kind, e.t0, e.onset_sample, e.end_sample, e.energy
            ));
        }
        out
    }
}

fn event_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn render_event(action: &EventAction, rate: f64, seed: u64) -> Result<TriAxisSeries> {
    match *action {
        EventAction::Contact {
            amplitude,
            frequency,
            decay,
            direction,
            ..
        } => contact_transient(amplitude, frequency, decay, direction, rate),
        EventAction::Motion {
            level,
            low,
            high,
            duration,
        } => motion_noise(level, (low, high), duration, rate, seed),
        EventAction::Rotation {
            level,
            frequency,
            duration,
        } => rotation_tone(level, frequency, duration, rate),
    }
}

/// Renders every tool's tri-axis stream, the baseplate force (if any
/// contact carries one) and the ground-truth event table.
pub fn render_scenario(script: &ScenarioScript) -> Result<RenderedScenario> {
    script.validate()?;
    let len = (script.duration * script.rate).round() as usize;
    let mut tools: BTreeMap<String, TriAxisSeries> = script
        .tool_ids()
        .into_iter()
        .map(|id| (id, TriAxisSeries::zeros(len, script.rate, SignalKind::Acceleration)))
        .collect();

    let force_len = (script.duration * script.force_rate).round() as usize;
    let mut force: Option<TriAxisSeries> = None;
    let mut events = Vec::with_capacity(script.events.len());

    for (index, event) in script.events.iter().enumerate() {
        let mut signal = render_event(&event.action, script.rate, event_seed(script.seed, index))?;
        if let Some(m) = script.mixing.get(&event.tool) {
            signal = signal.transformed(m);
        }
        let onset = (event.t0 * script.rate).round() as usize;
        let energy: f64 = crate::placement::ase(&signal).iter().sum();
        let target = tools.get_mut(&event.tool).expect("tool ids cover events");
        target.add_at(&signal, onset);
        events.push(EventRecord {
            index,
            tool: event.tool.clone(),
            kind: event.action.kind().into(),
            t0: event.t0,
            onset_sample: onset as u64,
            end_sample: (onset + signal.len()).min(len) as u64,
            energy,
        });

        if let EventAction::Contact {
            direction,
            force: Some(peak),
            ..
        } = event.action
        {
            let fr = script.force_rate;
            let pulse_len = (DEFAULT_FORCE_DURATION * fr).round() as usize;
            let pulse = TriAxisSeries::from_fn(pulse_len, fr, SignalKind::Force, |n| {
                let v = peak * (PI * midpoint(n, fr) / DEFAULT_FORCE_DURATION).sin();
                [direction[0] * v, direction[1] * v, direction[2] * v]
            });
            force
                .get_or_insert_with(|| TriAxisSeries::zeros(force_len, fr, SignalKind::Force))
                .add_at(&pulse, (event.t0 * fr).round() as usize);
        }
    }

    if script.noise_floor > 0.0 {
        for (k, series) in tools.values_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(script.seed.wrapping_add(0xF100 + k as u64));
            let sigma = script.noise_floor;
            let noise = TriAxisSeries::from_fn(len, script.rate, SignalKind::Acceleration, |_| {
                let mut s = || -> f64 { sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng) };
                [s(), s(), s()]
            });
            *series = series.add(&noise)?;
        }
    }

    let markers = script
        .markers
        .iter()
        .map(|m| (m.name.clone(), (m.t * script.rate).round() as u64))
        .collect();

    Ok(RenderedScenario {
        rate: script.rate,
        tools,
        force,
        events,
        markers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{ase, rms3};

    fn contact(amplitude: f64) -> EventAction {
        EventAction::Contact {
            amplitude,
            frequency: 250.0,
            decay: 0.02,
            direction: [1.0, 0.0, 0.0],
            force: None,
        }
    }

    #[test]
    fn contact_along_x_leaves_y_z_silent() {
        let c = contact_transient(1.0, 250.0, 0.02, [1.0, 0.0, 0.0], 8000.0).unwrap();
        assert_eq!(c.len(), 800);
        assert!(c.y().iter().chain(c.z()).all(|&v| v == 0.0));
        assert!(c.x()[0] != 0.0);
    }

    #[test]
    fn contact_stays_under_its_envelope() {
        let s = 1.0 / 3f64.sqrt();
        let c = contact_transient(2.5, 600.0, 0.01, [s, s, -s], 8000.0).unwrap();
        for axis in c.axes() {
            assert!(axis.iter().all(|v| v.abs() <= 2.5));
        }
    }

    #[test]
    fn contact_energy_matches_trapezoidal_integration() {
        let (a, f, tau, rate) = (3.0, 250.0, 0.02, 8000.0);
        let d = [0.6, 0.8, 0.0];
        let c = contact_transient(a, f, tau, d, rate).unwrap();
        let g = |t: f64| (a * (-t / tau).exp() * (2.0 * PI * f * t).sin()).powi(2);
        let end = 5.0 * tau;
        let steps = 400_000;
        let h = end / steps as f64;
        let mut integral = 0.5 * (g(0.0) + g(end));
        for k in 1..steps {
            integral += g(k as f64 * h);
        }
        integral *= h;
        let e = ase(&c);
        for i in 0..3 {
            let expected = d[i] * d[i] * integral;
            assert!(
                (e[i] - expected).abs() <= 0.005 * integral,
                "axis {i}: {} vs {expected}",
                e[i]
            );
        }
    }

    #[test]
    fn contact_rejects_bad_parameters() {
        assert!(contact_transient(0.0, 250.0, 0.02, [1.0, 0.0, 0.0], 8000.0).is_err());
        assert!(contact_transient(1.0, 250.0, -1.0, [1.0, 0.0, 0.0], 8000.0).is_err());
        assert!(contact_transient(1.0, 250.0, 0.02, [1.0, 1.0, 0.0], 8000.0).is_err());
        // out of band only warns
        assert!(contact_transient(1.0, 40.0, 0.02, [1.0, 0.0, 0.0], 8000.0).is_ok());
    }

    #[test]
    fn motion_noise_level() {
        assert!(motion_noise(0.0, (20.0, 400.0), 1.0, 8000.0, 1)
            .unwrap()
            .axes()
            .iter()
            .all(|a| a.iter().all(|&v| v == 0.0)));
        for seed in 0..5 {
            let m = motion_noise(0.5, (20.0, 400.0), 4.0, 8000.0, seed).unwrap();
            let r = rms3(&m).unwrap();
            assert!((0.475..=0.525).contains(&r), "seed {seed}: {r}");
        }
    }

    #[test]
    fn rotation_tone_level_and_axis_concentration() {
        let r = rotation_tone(0.3, 30.0, 2.0, 8000.0).unwrap();
        let level = rms3(&r).unwrap();
        assert!((level - 0.3).abs() <= 0.015, "{level}");
        let e = ase(&r);
        assert!(e[0] >= 10.0 * (e[1] + e[2]));
        assert!(rotation_tone(0.0, 30.0, 1.0, 8000.0)
            .unwrap()
            .x()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn empty_script_renders_silence() {
        let out = render_scenario(&ScenarioScript::new(8000.0, 2.0)).unwrap();
        assert_eq!(out.tools.len(), 1);
        let s = &out.tools["left"];
        assert_eq!(s.len(), 16_000);
        assert!(s.axes().iter().all(|a| a.iter().all(|&v| v == 0.0)));
        assert!(out.force.is_none());
    }

    #[test]
    fn onset_is_exact() {
        let script = ScenarioScript::new(8000.0, 2.0).with_event(1.0, "left", contact(1.0));
        let out = render_scenario(&script).unwrap();
        let first = out.tools["left"].x().iter().position(|&v| v != 0.0);
        assert_eq!(first, Some(8000));
        assert_eq!(out.events[0].onset_sample, 8000);
        assert_eq!(out.events[0].end_sample, 8800);
    }

    #[test]
    fn disjoint_events_superpose_exactly() {
        let a = ScenarioScript::new(8000.0, 3.0).with_event(0.5, "left", contact(1.0));
        let b = ScenarioScript::new(8000.0, 3.0).with_event(2.0, "left", contact(2.0));
        let both = ScenarioScript::new(8000.0, 3.0)
            .with_event(0.5, "left", contact(1.0))
            .with_event(2.0, "left", contact(2.0));
        let ra = render_scenario(&a).unwrap();
        let rb = render_scenario(&b).unwrap();
        let rab = render_scenario(&both).unwrap();
        let sum = ra.tools["left"].add(&rb.tools["left"]).unwrap();
        assert_eq!(rab.tools["left"], sum);
        let e = |r: &RenderedScenario| ase(&r.tools["left"]).iter().sum::<f64>();
        assert!((e(&rab) - (e(&ra) + e(&rb))).abs() <= 1e-12 * e(&rab));
    }

    #[test]
    fn overlapping_identical_events_sum() {
        let one = ScenarioScript::new(8000.0, 1.0).with_event(0.2, "left", contact(1.0));
        let two = one.clone().with_event(0.2, "left", contact(1.0));
        let r1 = render_scenario(&one).unwrap();
        let r2 = render_scenario(&two).unwrap();
        assert_eq!(r2.tools["left"], r1.tools["left"].scaled(2.0));
    }

    #[test]
    fn rendering_is_seed_deterministic() {
        let mut s = ScenarioScript::new(8000.0, 2.0).with_event(
            0.1,
            "right",
            EventAction::Motion {
                level: 0.4,
                low: 20.0,
                high: 400.0,
                duration: 1.5,
            },
        );
        s.noise_floor = 0.01;
        s.seed = 42;
        assert_eq!(render_scenario(&s).unwrap(), render_scenario(&s).unwrap());
        let mut other = s.clone();
        other.seed = 43;
        assert_ne!(
            render_scenario(&s).unwrap().tools,
            render_scenario(&other).unwrap().tools
        );
    }

    #[test]
    fn validation_errors() {
        let unsorted = ScenarioScript::new(8000.0, 5.0)
            .with_event(2.0, "left", contact(1.0))
            .with_event(1.0, "left", contact(1.0));
        assert!(unsorted.validate().is_err());
        let overrun = ScenarioScript::new(8000.0, 1.0).with_event(0.95, "left", contact(1.0));
        assert!(overrun.validate().is_err());
    }

    #[test]
    fn contact_force_pulse_and_mixing() {
        let mut s = ScenarioScript::new(8000.0, 2.0).with_event(
            0.5,
            "left",
            EventAction::Contact {
                amplitude: 1.0,
                frequency: 250.0,
                decay: 0.02,
                direction: [0.0, 0.0, 1.0],
                force: Some(2.0),
            },
        );
        s.mixing.insert("left".into(), location_matrix(0.5, 0.0));
        let r = render_scenario(&s).unwrap();
        let f = r.force.unwrap();
        assert_eq!(f.rate(), DEFAULT_FORCE_RATE);
        let peak = f.z().iter().fold(0.0f64, |m, v| m.max(*v));
        assert!((peak - 2.0).abs() < 1e-3);
        let left = &r.tools["left"];
        let peak_acc = left.z().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak_acc <= 0.5);
    }

    #[test]
    fn script_json_round_trip() {
        let text = r#"{
            "rate": 8000, "duration": 3, "seed": 9,
            "markers": [{"name": "start", "t": 0.1}],
            "events": [
                {"t0": 0.5, "kind": "contact", "amplitude": 2.0, "force": 1.5},
                {"t0": 1.0, "tool": "right", "kind": "rotation", "level": 0.2, "frequency": 25, "duration": 1}
            ]
        }"#;
        let s = ScenarioScript::from_json(text).unwrap();
        assert_eq!(s.events[0].tool, "left");
        assert_eq!(s.tool_ids(), vec!["left".to_string(), "right".to_string()]);
        let again = ScenarioScript::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(again, s);
    }
}
