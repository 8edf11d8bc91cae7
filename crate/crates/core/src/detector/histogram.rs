//! Start-stop delay histogram between two channels, peak integration and
//! accidental-floor estimation.
//!
//! Bins are centred on multiples of the bin width and half-open:
//! bin `k` holds delays in `[k w - w/2, k w - w/2 + w)`, so a delay on a bin
//! edge goes to the higher bin.

use std::io::Write;

use super::{DetectorError, TimeTagStream, PS_PER_S};

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceHistogram {
    bin_width_ps: i64,
    delay_range_ps: i64,
    k_min: i64,
    counts: Vec<u64>,
}

impl CoincidenceHistogram {
    fn new(bin_width_ps: i64, delay_range_ps: i64) -> Self {
        let half = bin_width_ps / 2;
        let k_min = (-delay_range_ps + half).div_euclid(bin_width_ps);
        let k_max = (delay_range_ps + half).div_euclid(bin_width_ps);
        Self {
            bin_width_ps,
            delay_range_ps,
            k_min,
            counts: vec![0; (k_max - k_min + 1) as usize],
        }
    }

    pub fn bin_width_ps(&self) -> i64 {
        self.bin_width_ps
    }

    pub fn delay_range_ps(&self) -> i64 {
        self.delay_range_ps
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Signed bin index of a delay.
    pub fn bin_index(&self, delay_ps: i64) -> i64 {
        (delay_ps + self.bin_width_ps / 2).div_euclid(self.bin_width_ps)
    }

    /// `(bin index, bin-centre delay in ps, count)` for every bin.
    pub fn bins(&self) -> impl Iterator<Item = (i64, i64, u64)> + '_ {
        self.counts.iter().enumerate().map(move |(i, &c)| {
            let k = self.k_min + i as i64;
            (k, k * self.bin_width_ps, c)
        })
    }

    pub fn count_at(&self, k: i64) -> u64 {
        let i = k - self.k_min;
        if i < 0 {
            return 0;
        }
        self.counts.get(i as usize).copied().unwrap_or(0)
    }

    fn add(&mut self, delay_ps: i64) {
        let i = (self.bin_index(delay_ps) - self.k_min) as usize;
        self.counts[i] += 1;
    }

    /// CSV with columns `delay_ps,counts` (delay at the bin centre).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "delay_ps,counts")?;
        for (_, delay, c) in self.bins() {
            writeln!(w, "{delay},{c}")?;
        }
        Ok(())
    }
}

fn seconds_to_ps(s: f64) -> i64 {
    (s * PS_PER_S).round() as i64
}

/// Histograms `t_B - t_A` for every tag pair with `|t_B - t_A| <= delay_range`.
pub fn histogram(
    a: &TimeTagStream,
    b: &TimeTagStream,
    bin_width: f64,
    delay_range: f64,
) -> Result<CoincidenceHistogram, DetectorError> {
    histogram_tags(a.tags_ps(), b.tags_ps(), bin_width, delay_range)
}

/// [`histogram`] over raw picosecond tag slices, which must be sorted.
pub fn histogram_tags(
    a: &[i64],
    b: &[i64],
    bin_width: f64,
    delay_range: f64,
) -> Result<CoincidenceHistogram, DetectorError> {
    let w = seconds_to_ps(bin_width);
    let range = seconds_to_ps(delay_range);
    if !(bin_width.is_finite() && delay_range.is_finite()) || w <= 0 {
        return Err(DetectorError::InvalidHistogram(format!(
            "bin width {bin_width} s must be at least 1 ps"
        )));
    }
    if range < w {
        return Err(DetectorError::InvalidHistogram(format!(
            "delay range {delay_range} s is below the bin width {bin_width} s"
        )));
    }
    if a.windows(2).any(|p| p[1] < p[0]) {
        return Err(DetectorError::UnsortedStream(super::Channel::A));
    }
    if b.windows(2).any(|p| p[1] < p[0]) {
        return Err(DetectorError::UnsortedStream(super::Channel::B));
    }

    let mut hist = CoincidenceHistogram::new(w, range);
    let mut start = 0;
    for &ta in a {
        while start < b.len() && b[start] < ta - range {
            start += 1;
        }
        for &tb in &b[start..] {
            let d = tb - ta;
            if d > range {
                break;
            }
            hist.add(d);
        }
    }
    Ok(hist)
}

/// Bins whose centres lie strictly within `+-window/2` of zero delay.
fn peak_half_width_bins(hist: &CoincidenceHistogram, window_ps: i64) -> i64 {
    // |k| w < window / 2  <=>  2 |k| w < window
    (window_ps - 1).div_euclid(2 * hist.bin_width_ps)
}

/// Counts in the coincidence window around zero delay.
pub fn integrate_peak(hist: &CoincidenceHistogram, window: f64) -> Result<u64, DetectorError> {
    let window_ps = seconds_to_ps(window);
    if window_ps < hist.bin_width_ps {
        return Err(DetectorError::InvalidHistogram(format!(
            "window {window} s is narrower than one bin"
        )));
    }
    if window_ps > 2 * hist.delay_range_ps {
        return Err(DetectorError::WindowExceedsRange {
            window,
            range: hist.delay_range_ps as f64 / PS_PER_S,
        });
    }
    let half = peak_half_width_bins(hist, window_ps);
    Ok((-half..=half).map(|k| hist.count_at(k)).sum())
}

/// Accidental floor from disjoint windows tiled away from the peak.
#[derive(Debug, Clone, PartialEq)]
pub struct AccidentalEstimate {
    /// Mean counts per integration window.
    pub mean: f64,
    /// Sample standard deviation of the window counts.
    pub std: f64,
    /// Counts of every tiled window, negative side first.
    pub window_counts: Vec<u64>,
    /// Bins per window.
    pub bins_per_window: usize,
}

/// Tiles windows of `window` over `[offset, offset + span]` on both sides of
/// zero delay and returns the mean and spread of their counts.
pub fn estimate_accidentals(
    hist: &CoincidenceHistogram,
    offset: f64,
    span: f64,
    window: f64,
) -> Result<AccidentalEstimate, DetectorError> {
    let w = hist.bin_width_ps;
    let offset_ps = seconds_to_ps(offset);
    let span_ps = seconds_to_ps(span);
    let window_ps = seconds_to_ps(window);
    if window_ps < w {
        return Err(DetectorError::InvalidHistogram(format!(
            "window {window} s is narrower than one bin"
        )));
    }
    if 2 * offset_ps <= window_ps {
        return Err(DetectorError::InsufficientBins(format!(
            "offset {offset} s does not clear the peak window {window} s"
        )));
    }
    if span_ps < 10 * w {
        return Err(DetectorError::InsufficientBins(format!(
            "span {span} s is shorter than ten bins"
        )));
    }
    if offset_ps + span_ps > hist.delay_range_ps {
        return Err(DetectorError::InsufficientBins(format!(
            "offset + span ({} s) exceeds the delay range",
            offset + span
        )));
    }

    let per_window = ((window_ps as f64 / w as f64).round() as i64).max(1);
    // first bin whose centre is at or beyond the offset, last bin centre inside the span
    let first = (offset_ps + w - 1).div_euclid(w);
    let last = (offset_ps + span_ps).div_euclid(w);
    let n_windows = (last - first + 1).div_euclid(per_window);
    if n_windows < 2 {
        return Err(DetectorError::InsufficientBins(format!(
            "only {n_windows} accidental window(s) fit in the span"
        )));
    }

    let mut window_counts = Vec::with_capacity(2 * n_windows as usize);
    for side in [-1_i64, 1] {
        for j in 0..n_windows {
            let lo = first + j * per_window;
            let sum: u64 = (lo..lo + per_window).map(|k| hist.count_at(side * k)).sum();
            window_counts.push(sum);
        }
    }
    let n = window_counts.len() as f64;
    let mean = window_counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = window_counts
        .iter()
        .map(|&c| (c as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    Ok(AccidentalEstimate {
        mean,
        std: var.sqrt(),
        window_counts,
        bins_per_window: per_window as usize,
    })
}
