//! Density analytics for return sets.
//!
//! All asymptotic notions are replaced by finite-horizon surrogates over an
//! explicit grid of window lengths. The grid is dyadic and anchored at the
//! horizon, `N_i = ceil(horizon / 2^i)`, so the largest windows always use the
//! whole observation interval.

use std::collections::HashSet;
use std::io::{self, Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of octaves below the horizon used for the upper/lower density surrogates.
pub const DEFAULT_TAIL_OCTAVES: u32 = 2;

/// Hit times of an orbit into a set, observed on `[1, horizon]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReturnSet {
    times: Vec<u128>,
    horizon: u128,
}

impl ReturnSet {
    /// `times` must be strictly increasing, each in `[1, horizon]`.
    pub fn new(times: Vec<u128>, horizon: u128) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidReturnSet("horizon must be at least 1".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidReturnSet(format!(
                "times not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        match (times.first(), times.last()) {
            (Some(&0), _) => Err(Error::InvalidReturnSet("times start at 1".into())),
            (_, Some(&last)) if last > horizon => Err(Error::InvalidReturnSet(format!(
                "time {last} beyond horizon {horizon}"
            ))),
            _ => Ok(Self { times, horizon }),
        }
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut times: Vec<u128>, horizon: u128) -> Result<Self> {
        times.sort_unstable();
        times.dedup();
        Self::new(times, horizon)
    }

    pub fn times(&self) -> &[u128] {
        &self.times
    }

    pub fn horizon(&self) -> u128 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `#(s ∩ [1, n])`.
    pub fn count_upto(&self, n: u128) -> u64 {
        self.times.partition_point(|&t| t <= n) as u64
    }

    /// `#(s ∩ [lo, hi])`.
    pub fn count_between(&self, lo: u128, hi: u128) -> u64 {
        if hi < lo {
            return 0;
        }
        let a = self.times.partition_point(|&t| t < lo);
        let b = self.times.partition_point(|&t| t <= hi);
        (b - a) as u64
    }

    /// Reads a CSV with an `n` column, one return time per row.
    ///
    /// The horizon defaults to the last time when not given.
    pub fn read_csv<R: Read>(reader: R, horizon: Option<u128>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
        let col = headers
            .iter()
            .position(|h| h.trim() == "n")
            .ok_or_else(|| parse_err(format!("no `n` column in header {:?}", headers)))?;
        let mut times = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_err(e.to_string()))?;
            let field = rec.get(col).unwrap_or("").trim();
            times.push(
                field
                    .parse::<u128>()
                    .map_err(|_| parse_err(field.to_string()))?,
            );
        }
        times.sort_unstable();
        times.dedup();
        let horizon = horizon.or(times.last().copied()).unwrap_or(1);
        Self::new(times, horizon)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["n"])?;
        for t in &self.times {
            w.write_record([t.to_string()])?;
        }
        w.flush()
    }
}

fn parse_err(input: String) -> Error {
    Error::Parse {
        what: "return-set CSV",
        input,
    }
}

/// Largest number of hits in a window of `window` consecutive integers inside `[1, horizon]`.
pub fn max_window_count(s: &ReturnSet, window: u128) -> Result<u64> {
    if window == 0 || window > s.horizon {
        return Err(Error::WindowRange {
            window,
            horizon: s.horizon,
        });
    }
    // An optimal window can be slid right until its left end is a hit time,
    // unless that pushes it past the horizon, in which case the rightmost
    // admissible window contains at least as many hits.
    let last_start = s.horizon - window + 1;
    let mut best = s.count_between(last_start, s.horizon);
    let times = &s.times;
    let mut hi = 0usize;
    for (lo, &t) in times.iter().enumerate() {
        if t > last_start {
            break;
        }
        let end = t + window - 1;
        if hi < lo {
            hi = lo;
        }
        while hi < times.len() && times[hi] <= end {
            hi += 1;
        }
        best = best.max((hi - lo) as u64);
    }
    Ok(best)
}

/// `max_m #(s ∩ [m+1, m+window]) / window` over windows inside `[1, horizon]`.
pub fn upper_banach_window(s: &ReturnSet, window: u128) -> Result<f64> {
    Ok(max_window_count(s, window)? as f64 / window as f64)
}

/// Dyadic window grid `ceil(horizon / 2^i)`, ascending, without duplicates.
pub fn density_grid(horizon: u128) -> Vec<u128> {
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let n = if i >= 128 {
            1
        } else {
            horizon.div_ceil(1u128 << i)
        };
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        if n == 1 {
            break;
        }
        i += 1;
    }
    grid.reverse();
    grid
}

/// An extremal density value and the window length achieving it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DensityPoint {
    pub value: f64,
    pub at: u128,
}

fn tail_points(horizon: u128, octaves: u32) -> impl Iterator<Item = u128> {
    (0..=octaves.min(127))
        .map(move |i| horizon.div_ceil(1u128 << i))
        .filter(|&n| n >= 1)
}

fn density_extreme(s: &ReturnSet, octaves: u32, upper: bool) -> DensityPoint {
    let mut best: Option<DensityPoint> = None;
    for n in tail_points(s.horizon, octaves) {
        let value = s.count_upto(n) as f64 / n as f64;
        let better = match best {
            None => true,
            Some(b) if upper => value > b.value,
            Some(b) => value < b.value,
        };
        if better {
            best = Some(DensityPoint { value, at: n });
        }
    }
    best.expect("tail grid is never empty")
}

/// Finite-horizon upper density: the largest `#(s ∩ [1,N])/N` over the top
/// `octaves + 1` grid points.
pub fn upper_density_with(s: &ReturnSet, octaves: u32) -> DensityPoint {
    density_extreme(s, octaves, true)
}

/// Finite-horizon lower density, the minimum over the same grid points.
pub fn lower_density_with(s: &ReturnSet, octaves: u32) -> DensityPoint {
    density_extreme(s, octaves, false)
}

pub fn upper_density(s: &ReturnSet) -> DensityPoint {
    upper_density_with(s, DEFAULT_TAIL_OCTAVES)
}

pub fn lower_density(s: &ReturnSet) -> DensityPoint {
    lower_density_with(s, DEFAULT_TAIL_OCTAVES)
}

/// Largest of: the first time, successive differences, and `horizon - last`.
pub fn max_gap(s: &ReturnSet) -> Result<u128> {
    let (&first, &last) = match (s.times.first(), s.times.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EmptyReturnSet),
    };
    let inner = s.times.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0);
    Ok(first.max(inner).max(s.horizon - last))
}

/// Length of the longest arithmetic progression (difference >= 1) inside `s`.
pub fn longest_ap(s: &ReturnSet) -> usize {
    let times = &s.times;
    match times.len() {
        0 | 1 => return times.len(),
        _ => {}
    }
    let set: HashSet<u128> = times.iter().copied().collect();
    let last = *times.last().unwrap();
    let mut best = 2usize;
    for i in 0..times.len() {
        let a = times[i];
        for &b in &times[i + 1..] {
            let d = b - a;
            // no room left to beat the current best
            if ((last - a) / d + 1) as usize <= best {
                break;
            }
            // only start from the first term of a maximal progression
            if a > d && set.contains(&(a - d)) {
                continue;
            }
            let mut len = 2usize;
            let mut next = b + d;
            while set.contains(&next) {
                len += 1;
                next += d;
            }
            best = best.max(len);
        }
    }
    best
}

/// One row of the windowed upper-Banach-density profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub window: u128,
    pub max_count: u64,
    pub ratio: f64,
}

/// Summary of one return set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport {
    pub horizon: u128,
    pub upper_density: DensityPoint,
    pub lower_density: DensityPoint,
    pub banach_profile: Vec<ProfilePoint>,
    /// `None` for an empty set.
    pub max_gap: Option<u128>,
    pub longest_ap: usize,
}

impl DensityReport {
    pub fn compute(s: &ReturnSet) -> Self {
        let banach_profile = density_grid(s.horizon)
            .into_iter()
            .map(|window| {
                let max_count = max_window_count(s, window).expect("grid windows lie in range");
                ProfilePoint {
                    window,
                    max_count,
                    ratio: max_count as f64 / window as f64,
                }
            })
            .collect();
        Self {
            horizon: s.horizon,
            upper_density: upper_density(s),
            lower_density: lower_density(s),
            banach_profile,
            max_gap: max_gap(s).ok(),
            longest_ap: longest_ap(s),
        }
    }

    /// Profile rows (`window,max_count,ratio`), a blank line, then the summary row.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> io::Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut writer);
            w.write_record(["window", "max_count", "ratio"])?;
            for p in &self.banach_profile {
                w.write_record([
                    p.window.to_string(),
                    p.max_count.to_string(),
                    p.ratio.to_string(),
                ])?;
            }
            w.flush()?;
        }
        writeln!(writer)?;
        let mut w = csv::Writer::from_writer(&mut writer);
        w.write_record([
            "horizon",
            "upper_density",
            "upper_at",
            "lower_density",
            "lower_at",
            "max_gap",
            "longest_ap",
        ])?;
        w.write_record([
            self.horizon.to_string(),
            self.upper_density.value.to_string(),
            self.upper_density.at.to_string(),
            self.lower_density.value.to_string(),
            self.lower_density.at.to_string(),
            self.max_gap.map(|g| g.to_string()).unwrap_or_default(),
            self.longest_ap.to_string(),
        ])?;
        w.flush()
    }
}
