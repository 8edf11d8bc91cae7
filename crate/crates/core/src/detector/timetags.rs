//! Monte-Carlo time-tag generation and the plain-text tag format.
//!
//! Tags are integer picoseconds. The text format is one record per line,
//! `channel<TAB>timestamp_ps`, after a `# duration_ps=<N>` header line.

use std::fmt;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::{DetectorError, DetectorSpec, MAX_EXPECTED_EVENTS, PS_PER_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    A,
    B,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::A => f.write_str("A"),
            Channel::B => f.write_str("B"),
        }
    }
}

/// Detection events of one channel, strictly increasing, within `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeTagStream {
    channel: Channel,
    duration_ps: i64,
    tags_ps: Vec<i64>,
}

impl TimeTagStream {
    pub fn new(channel: Channel, duration_ps: i64, tags_ps: Vec<i64>) -> Result<Self, DetectorError> {
        if duration_ps <= 0 {
            return Err(DetectorError::InvalidDuration(duration_ps as f64 / PS_PER_S));
        }
        if tags_ps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DetectorError::UnsortedStream(channel));
        }
        if let Some(&tag) = tags_ps
            .first()
            .filter(|&&t| t < 0)
            .or_else(|| tags_ps.last().filter(|&&t| t > duration_ps))
        {
            return Err(DetectorError::TagOutOfRange {
                channel,
                tag,
                duration: duration_ps,
            });
        }
        Ok(Self {
            channel,
            duration_ps,
            tags_ps,
        })
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    pub fn tags_ps(&self) -> &[i64] {
        &self.tags_ps
    }

    pub fn duration_ps(&self) -> i64 {
        self.duration_ps
    }

    pub fn duration(&self) -> f64 {
        self.duration_ps as f64 / PS_PER_S
    }

    pub fn len(&self) -> usize {
        self.tags_ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags_ps.is_empty()
    }

    /// Mean recorded rate, Hz.
    pub fn rate(&self) -> f64 {
        self.tags_ps.len() as f64 / self.duration()
    }

    /// Smallest gap between consecutive tags, ps.
    pub fn min_separation_ps(&self) -> Option<i64> {
        self.tags_ps.windows(2).map(|w| w[1] - w[0]).min()
    }
}

fn to_ps(seconds: f64) -> i64 {
    (seconds * PS_PER_S).round() as i64
}

/// Arrival times (s) of a homogeneous Poisson process on `[0, duration)`.
fn poisson_arrivals(rng: &mut ChaCha8Rng, rate: f64, duration: f64) -> Vec<f64> {
    if rate <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate).expect("rate is positive and finite");
    let mut out = Vec::with_capacity((rate * duration * 1.05) as usize + 16);
    let mut t = exp.sample(rng);
    while t < duration {
        out.push(t);
        t += exp.sample(rng);
    }
    out
}

fn merge_sorted(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Insertion sort; linear on the nearly sorted output of jittering a sorted stream.
fn settle(tags: &mut [i64]) {
    for i in 1..tags.len() {
        let mut j = i;
        while j > 0 && tags[j - 1] > tags[j] {
            tags.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// Jitters, orders and dead-time filters the incident photons of one channel.
fn record_channel(
    rng: &mut ChaCha8Rng,
    channel: Channel,
    incident_ps: Vec<i64>,
    det: &DetectorSpec,
    duration_ps: i64,
) -> Result<TimeTagStream, DetectorError> {
    let mut tags = incident_ps;
    if det.jitter_sigma > 0.0 {
        let normal = Normal::new(0.0, det.jitter_sigma * PS_PER_S).expect("sigma is finite");
        for t in &mut tags {
            *t += normal.sample(rng).round() as i64;
        }
        settle(&mut tags);
    }
    let dead_ps = to_ps(det.dead_time).max(1);
    let mut kept = Vec::with_capacity(tags.len());
    let mut last: Option<i64> = None;
    for t in tags {
        if t < 0 || t > duration_ps {
            continue;
        }
        if last.is_none_or(|l| t - l >= dead_ps) {
            kept.push(t);
            last = Some(t);
        }
    }
    TimeTagStream::new(channel, duration_ps, kept)
}

/// Simulates two detector channels for `duration` seconds.
///
/// * `pair_rate`: Poisson rate of events sending one photon to each channel
///   at the same instant.
/// * `singles_rates`: rates of photons reaching channel A and B with no
///   partner on the other channel.
///
/// Each photon survives with its detector's efficiency; dark counts are added;
/// every surviving event is jittered; events within the dead time of the
/// previous recorded tag on the same channel are discarded. Identical inputs
/// and `seed` give identical streams.
pub fn generate_timetags(
    pair_rate: f64,
    singles_rates: (f64, f64),
    duration: f64,
    det_a: &DetectorSpec,
    det_b: &DetectorSpec,
    seed: u64,
) -> Result<(TimeTagStream, TimeTagStream), DetectorError> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(DetectorError::InvalidDuration(duration));
    }
    for (name, r) in [
        ("pair_rate", pair_rate),
        ("singles_a", singles_rates.0),
        ("singles_b", singles_rates.1),
    ] {
        if !(r.is_finite() && r >= 0.0) {
            return Err(DetectorError::InvalidRate(name, r));
        }
    }
    det_a.validate()?;
    det_b.validate()?;

    let background_a = det_a.efficiency * singles_rates.0 + det_a.dark_rate;
    let background_b = det_b.efficiency * singles_rates.1 + det_b.dark_rate;
    let expected = (pair_rate + background_a + background_b) * duration;
    if expected > MAX_EXPECTED_EVENTS {
        return Err(DetectorError::TooManyEvents(expected));
    }

    let duration_ps = to_ps(duration);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pair_a = Vec::new();
    let mut pair_b = Vec::new();
    for t in poisson_arrivals(&mut rng, pair_rate, duration) {
        let t = to_ps(t);
        if rng.random::<f64>() < det_a.efficiency {
            pair_a.push(t);
        }
        if rng.random::<f64>() < det_b.efficiency {
            pair_b.push(t);
        }
    }
    // thinned Poisson singles plus dark counts are again Poisson
    let single_a: Vec<i64> = poisson_arrivals(&mut rng, background_a, duration)
        .into_iter()
        .map(to_ps)
        .collect();
    let single_b: Vec<i64> = poisson_arrivals(&mut rng, background_b, duration)
        .into_iter()
        .map(to_ps)
        .collect();

    let a = record_channel(&mut rng, Channel::A, merge_sorted(&pair_a, &single_a), det_a, duration_ps)?;
    let b = record_channel(&mut rng, Channel::B, merge_sorted(&pair_b, &single_b), det_b, duration_ps)?;
    Ok((a, b))
}

/// Writes both channels, interleaved in time order.
pub fn write_timetags<W: Write>(
    mut w: W,
    a: &TimeTagStream,
    b: &TimeTagStream,
) -> Result<(), DetectorError> {
    let duration = a.duration_ps.max(b.duration_ps);
    writeln!(w, "# duration_ps={duration}")?;
    let (ta, tb) = (a.tags_ps(), b.tags_ps());
    let (mut i, mut j) = (0, 0);
    while i < ta.len() || j < tb.len() {
        if j >= tb.len() || (i < ta.len() && ta[i] <= tb[j]) {
            writeln!(w, "{}\t{}", a.channel, ta[i])?;
            i += 1;
        } else {
            writeln!(w, "{}\t{}", b.channel, tb[j])?;
            j += 1;
        }
    }
    Ok(())
}

/// Reads a tag file written by [`write_timetags`].
///
/// Blank lines and further `#` comment lines are ignored. Each channel must be
/// strictly increasing in file order.
pub fn read_timetags<R: BufRead>(r: R) -> Result<(TimeTagStream, TimeTagStream), DetectorError> {
    let mut duration: Option<i64> = None;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("duration_ps=") {
                let d = v.trim().parse::<i64>().map_err(|e| DetectorError::Parse {
                    line: lineno,
                    msg: format!("bad duration_ps `{v}`: {e}"),
                })?;
                duration = Some(d);
            }
            continue;
        }
        let (ch, ts) = line.split_once('\t').ok_or_else(|| DetectorError::Parse {
            line: lineno,
            msg: "expected `channel<TAB>timestamp_ps`".into(),
        })?;
        let t = ts.trim().parse::<i64>().map_err(|e| DetectorError::Parse {
            line: lineno,
            msg: format!("bad timestamp `{ts}`: {e}"),
        })?;
        match ch.trim() {
            "A" => a.push(t),
            "B" => b.push(t),
            other => {
                return Err(DetectorError::Parse {
                    line: lineno,
                    msg: format!("unknown channel `{other}`"),
                })
            }
        }
    }
    let duration = duration.ok_or_else(|| DetectorError::Parse {
        line: 1,
        msg: "missing `# duration_ps=<N>` header".into(),
    })?;
    Ok((
        TimeTagStream::new(Channel::A, duration, a)?,
        TimeTagStream::new(Channel::B, duration, b)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dark_only(dark_rate: f64, dead_time: f64) -> DetectorSpec {
        DetectorSpec {
            efficiency: 0.0,
            dark_rate,
            dead_time,
            jitter_sigma: 0.0,
        }
    }

    #[test]
    fn zero_rates_give_empty_streams() {
        let det = DetectorSpec { dark_rate: 0.0, ..DetectorSpec::id210() };
        let (a, b) = generate_timetags(0.0, (0.0, 0.0), 1.0, &det, &det, 1).unwrap();
        assert!(a.is_empty() && b.is_empty());
        assert_eq!(a.duration_ps(), 1_000_000_000_000);
    }

    #[test]
    fn dark_counts_with_small_dead_time() {
        let det = dark_only(2500.0, 1e-6);
        let duration = 20.0;
        let (a, _) = generate_timetags(0.0, (0.0, 0.0), duration, &det, &det, 7).unwrap();
        let expected = 2500.0 * duration * (1.0 - 2500.0 * 1e-6);
        let sigma = expected.sqrt();
        assert!((a.len() as f64 - expected).abs() < 5.0 * sigma, "{} vs {expected}", a.len());
    }

    #[test]
    fn half_lost_when_rate_times_dead_time_is_one() {
        let det = dark_only(20_000.0, 50e-6);
        let (a, _) = generate_timetags(0.0, (0.0, 0.0), 10.0, &det, &det, 3).unwrap();
        let loss = 1.0 - a.rate() / 20_000.0;
        assert!((loss - 0.5).abs() < 0.02, "loss={loss}");
    }

    #[test]
    fn deterministic_for_seed() {
        let da = DetectorSpec::id210();
        let db = DetectorSpec::id230();
        let run = |seed| generate_timetags(500.0, (1e4, 2e4), 0.5, &da, &db, seed).unwrap();
        assert_eq!(run(11), run(11));
        assert_ne!(run(11).0, run(12).0);
    }

    #[test]
    fn dead_time_contract_holds() {
        let da = DetectorSpec::id210();
        let db = DetectorSpec::id230();
        let (a, b) = generate_timetags(2000.0, (3e5, 3e5), 1.0, &da, &db, 5).unwrap();
        assert!(a.min_separation_ps().unwrap() >= 50_000_000);
        assert!(b.min_separation_ps().unwrap() >= 25_000_000);
    }

    #[test]
    fn ideal_detectors_never_duplicate_tags() {
        let det = DetectorSpec::ideal();
        let (a, b) = generate_timetags(1e4, (0.0, 0.0), 0.1, &det, &det, 9).unwrap();
        assert_eq!(a.tags_ps(), b.tags_ps());
        assert!(a.min_separation_ps().unwrap() >= 1);
    }

    #[test]
    fn invalid_inputs() {
        let det = DetectorSpec::id210();
        assert!(matches!(
            generate_timetags(0.0, (0.0, 0.0), 0.0, &det, &det, 0),
            Err(DetectorError::InvalidDuration(_))
        ));
        assert!(matches!(
            generate_timetags(-1.0, (0.0, 0.0), 1.0, &det, &det, 0),
            Err(DetectorError::InvalidRate(..))
        ));
        assert!(matches!(
            generate_timetags(1e9, (0.0, 0.0), 10.0, &det, &det, 0),
            Err(DetectorError::TooManyEvents(_))
        ));
    }

    #[test]
    fn stream_validation() {
        assert!(TimeTagStream::new(Channel::A, 100, vec![1, 5, 9]).is_ok());
        assert!(matches!(
            TimeTagStream::new(Channel::A, 100, vec![1, 5, 5]),
            Err(DetectorError::UnsortedStream(Channel::A))
        ));
        assert!(TimeTagStream::new(Channel::B, 100, vec![3, 2]).is_err());
        assert!(TimeTagStream::new(Channel::B, 100, vec![50, 101]).is_err());
        assert!(TimeTagStream::new(Channel::B, 100, vec![-1, 10]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let da = DetectorSpec::id210();
        let db = DetectorSpec::id230();
        let (a, b) = generate_timetags(800.0, (1e4, 1e4), 0.2, &da, &db, 21).unwrap();
        let mut buf = Vec::new();
        write_timetags(&mut buf, &a, &b).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# duration_ps=200000000000\n"));
        let (ra, rb) = read_timetags(buf.as_slice()).unwrap();
        assert_eq!((ra, rb), (a, b));
    }

    #[test]
    fn text_parse_errors() {
        let missing = "A\t10\n";
        assert!(matches!(read_timetags(missing.as_bytes()), Err(DetectorError::Parse { .. })));
        let bad_channel = "# duration_ps=100\nC\t10\n";
        assert!(matches!(read_timetags(bad_channel.as_bytes()), Err(DetectorError::Parse { line: 2, .. })));
        let unsorted = "# duration_ps=100\nA\t10\nA\t5\n";
        assert!(matches!(
            read_timetags(unsorted.as_bytes()),
            Err(DetectorError::UnsortedStream(Channel::A))
        ));
    }
}
