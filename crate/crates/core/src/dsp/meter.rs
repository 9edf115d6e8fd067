use std::collections::VecDeque;

use crate::signal::SampleBlock;

/// Telemetry emission rate of the level meters, in Hz.
pub const METER_EMIT_HZ: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterReading {
    /// Stream index of the last sample included in the window.
    pub sample_index: u64,
    pub level: f64,
}

/// Sliding-window RMS meter that emits a reading every 1/10 s of input.
#[derive(Debug, Clone)]
pub struct RmsMeter {
    squares: VecDeque<f64>,
    window: usize,
    emit_every: usize,
    since_emit: usize,
    position: u64,
}

impl RmsMeter {
    pub fn new(window_ms: f64, rate: f64) -> Self {
        assert!(window_ms > 0.0, "meter window must be positive");
        let window = ((window_ms / 1000.0) * rate).round().max(1.0) as usize;
        Self {
            squares: VecDeque::with_capacity(window),
            window,
            emit_every: (rate / METER_EMIT_HZ).round().max(1.0) as usize,
            since_emit: 0,
            position: 0,
        }
    }

    pub fn window_len(&self) -> usize {
        self.window
    }

    /// RMS over the window, or over what has been seen while it fills.
    pub fn level(&self) -> f64 {
        if self.squares.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.squares.iter().sum();
        (sum / self.squares.len() as f64).sqrt()
    }

    pub fn push(&mut self, sample: f64) -> Option<MeterReading> {
        if self.squares.len() == self.window {
            self.squares.pop_front();
        }
        self.squares.push_back(sample * sample);
        self.position += 1;
        self.since_emit += 1;
        if self.since_emit == self.emit_every {
            self.since_emit = 0;
            Some(MeterReading {
                sample_index: self.position - 1,
                level: self.level(),
            })
        } else {
            None
        }
    }

    pub fn process(&mut self, samples: &[f64]) -> Vec<MeterReading> {
        samples.iter().filter_map(|&s| self.push(s)).collect()
    }
}

/// Meters a whole block; one reading per 100 ms of input.
pub fn meter_rms(block: &SampleBlock, window_ms: f64) -> Vec<MeterReading> {
    RmsMeter::new(window_ms, block.rate).process(&block.samples)
}
