use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Streaming max/mean/RMS accumulator. Feeding the same values in the same
/// order always yields bit-identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub max_abs: f64,
}

impl Accumulator {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
        self.max_abs = self.max_abs.max(v.abs());
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.max_abs = self.max_abs.max(other.max_abs);
    }

    pub fn summary(&self) -> Summary {
        let n = self.count.max(1) as f64;
        Summary {
            count: self.count,
            max_abs: self.max_abs,
            mean: self.sum / n,
            rms: (self.sum_sq / n).sqrt(),
        }
    }
}

/// Statistics of one channel over one window. RMS includes the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: u64,
    pub max_abs: f64,
    pub mean: f64,
    pub rms: f64,
}

/// Pearson correlation accumulator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Correlation {
    n: u64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl Correlation {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    /// `None` with fewer than two samples or a constant series.
    pub fn value(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        let cov = self.sxy - self.sx * self.sy / n;
        let vx = self.sxx - self.sx * self.sx / n;
        let vy = self.syy - self.sy * self.sy / n;
        (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Full,
    /// Reference at rest, from the configured start time on.
    ZeroReference,
    Slew,
}

impl Window {
    pub const ALL: [Window; 3] = [Window::Full, Window::ZeroReference, Window::Slew];
}

/// Step-index bounds of the statistics windows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowBounds {
    pub zero_reference_from: usize,
    pub slew: [usize; 2],
}

impl WindowBounds {
    pub fn new(step: f64, zero_reference_from_s: f64, slew_s: [f64; 2]) -> Self {
        let idx = |t: f64| (t / step).round().max(0.0) as usize;
        Self { zero_reference_from: idx(zero_reference_from_s), slew: [idx(slew_s[0]), idx(slew_s[1])] }
    }

    pub fn contains(&self, w: Window, i: usize) -> bool {
        match w {
            Window::Full => true,
            Window::ZeroReference => i >= self.zero_reference_from,
            Window::Slew => i >= self.slew[0] && i < self.slew[1],
        }
    }
}

/// Accumulators keyed by channel name and window.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsBook {
    acc: BTreeMap<(String, Window), Accumulator>,
}

impl StatsBook {
    pub fn push(&mut self, bounds: &WindowBounds, i: usize, channel: &str, v: f64) {
        for w in Window::ALL {
            if bounds.contains(w, i) {
                self.acc.entry((channel.to_string(), w)).or_default().push(v);
            }
        }
    }

    pub fn summaries(&self) -> BTreeMap<String, BTreeMap<Window, Summary>> {
        let mut out: BTreeMap<String, BTreeMap<Window, Summary>> = BTreeMap::new();
        for ((ch, w), a) in &self.acc {
            out.entry(ch.clone()).or_default().insert(*w, a.summary());
        }
        out
    }
}

/// Linear-interpolated quantile of unsorted data (NaNs ignored).
pub fn quantile(data: &[f64], p: f64) -> Option<f64> {
    let mut v: Vec<f64> = data.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}
