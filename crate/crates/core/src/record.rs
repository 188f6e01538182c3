//! Event records, sample batches, recorders and the JSONL sample format.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::ChainState;

/// JSONL writers flush after this many records.
pub const FLUSH_EVERY: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RwmAccept,
    RwmReject,
    SwapUpAccept,
    SwapUpReject,
    SwapDownAccept,
    SwapDownReject,
    LeapAccept,
    LeapReject,
}

impl EventKind {
    pub const ALL: [EventKind; 8] = [
        EventKind::RwmAccept,
        EventKind::RwmReject,
        EventKind::SwapUpAccept,
        EventKind::SwapUpReject,
        EventKind::SwapDownAccept,
        EventKind::SwapDownReject,
        EventKind::LeapAccept,
        EventKind::LeapReject,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RwmAccept => "rwm_accept",
            EventKind::RwmReject => "rwm_reject",
            EventKind::SwapUpAccept => "swap_up_accept",
            EventKind::SwapUpReject => "swap_up_reject",
            EventKind::SwapDownAccept => "swap_down_accept",
            EventKind::SwapDownReject => "swap_down_reject",
            EventKind::LeapAccept => "leap_accept",
            EventKind::LeapReject => "leap_reject",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        EventKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_accept(self) -> bool {
        matches!(
            self,
            EventKind::RwmAccept
                | EventKind::SwapUpAccept
                | EventKind::SwapDownAccept
                | EventKind::LeapAccept
        )
    }

    pub fn is_swap(self) -> bool {
        matches!(
            self,
            EventKind::SwapUpAccept
                | EventKind::SwapUpReject
                | EventKind::SwapDownAccept
                | EventKind::SwapDownReject
        )
    }

    pub fn is_leap(self) -> bool {
        matches!(self, EventKind::LeapAccept | EventKind::LeapReject)
    }

    pub fn is_local(self) -> bool {
        matches!(self, EventKind::RwmAccept | EventKind::RwmReject)
    }
}

/// One executed transition of the chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub clock: f64,
    pub kind: EventKind,
    pub level_before: usize,
    pub level_after: usize,
    pub mode_pair: Option<(usize, usize)>,
}

/// A retained chain state. `event` is the transition that produced it (None for the initial state).
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub level: usize,
    pub x: Vec<f64>,
    pub event: Option<EventKind>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleBatch {
    pub samples: Vec<Sample>,
    /// Seeds of the chains that produced the batch, in merge order.
    pub seeds: Vec<u64>,
}

impl SampleBatch {
    pub fn new(seed: u64) -> Self {
        SampleBatch {
            samples: Vec::new(),
            seeds: vec![seed],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn at_level(&self, level: usize) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.level == level)
    }

    pub fn level_counts(&self, levels: usize) -> Vec<usize> {
        let mut counts = vec![0; levels];
        for s in &self.samples {
            if s.level < levels {
                counts[s.level] += 1;
            }
        }
        counts
    }

    /// Concatenates batches in the given order.
    pub fn merge(batches: impl IntoIterator<Item = SampleBatch>) -> SampleBatch {
        let mut out = SampleBatch::default();
        for b in batches {
            out.samples.extend(b.samples);
            out.seeds.extend(b.seeds);
        }
        out
    }
}

/// Receives every executed transition of a simulation.
pub trait Recorder {
    fn start(&mut self, _state: &ChainState) {}
    fn record(&mut self, state: &ChainState, event: &EventRecord);
    fn finish(&mut self, _state: &ChainState) {}
}

impl<R: Recorder + ?Sized> Recorder for &mut R {
    fn start(&mut self, state: &ChainState) {
        (**self).start(state)
    }
    fn record(&mut self, state: &ChainState, event: &EventRecord) {
        (**self).record(state, event)
    }
    fn finish(&mut self, state: &ChainState) {
        (**self).finish(state)
    }
}

impl<A: Recorder, B: Recorder> Recorder for (A, B) {
    fn start(&mut self, state: &ChainState) {
        self.0.start(state);
        self.1.start(state);
    }
    fn record(&mut self, state: &ChainState, event: &EventRecord) {
        self.0.record(state, event);
        self.1.record(state, event);
    }
    fn finish(&mut self, state: &ChainState) {
        self.0.finish(state);
        self.1.finish(state);
    }
}

/// Discards everything.
#[derive(Debug, Default)]
pub struct NullRecorder;

impl Recorder for NullRecorder {
    fn record(&mut self, _: &ChainState, _: &EventRecord) {}
}

/// Keeps the full event stream.
#[derive(Debug, Default)]
pub struct EventLog {
    pub events: Vec<EventRecord>,
}

impl Recorder for EventLog {
    fn record(&mut self, _: &ChainState, event: &EventRecord) {
        self.events.push(event.clone());
    }
}

/// Counts events by kind.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EventCounts {
    pub counts: BTreeMap<EventKind, u64>,
}

impl EventCounts {
    pub fn get(&self, kind: EventKind) -> u64 {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    pub fn add(&mut self, other: &EventCounts) {
        for (k, v) in &other.counts {
            *self.counts.entry(*k).or_default() += v;
        }
    }

    fn rate(&self, accept: &[EventKind], reject: &[EventKind]) -> Option<f64> {
        let a: u64 = accept.iter().map(|k| self.get(*k)).sum();
        let r: u64 = reject.iter().map(|k| self.get(*k)).sum();
        (a + r > 0).then(|| a as f64 / (a + r) as f64)
    }

    pub fn rwm_acceptance(&self) -> Option<f64> {
        self.rate(&[EventKind::RwmAccept], &[EventKind::RwmReject])
    }

    pub fn swap_acceptance(&self) -> Option<f64> {
        self.rate(
            &[EventKind::SwapUpAccept, EventKind::SwapDownAccept],
            &[EventKind::SwapUpReject, EventKind::SwapDownReject],
        )
    }

    pub fn leap_acceptance(&self) -> Option<f64> {
        self.rate(&[EventKind::LeapAccept], &[EventKind::LeapReject])
    }

    pub fn swap_proposals(&self) -> u64 {
        EventKind::ALL
            .iter()
            .filter(|k| k.is_swap())
            .map(|k| self.get(*k))
            .sum()
    }
}

impl Recorder for EventCounts {
    fn record(&mut self, _: &ChainState, event: &EventRecord) {
        *self.counts.entry(event.kind).or_default() += 1;
    }
}

/// Keeps the state after every transition (plus the initial state).
#[derive(Debug)]
pub struct AllStates {
    pub batch: SampleBatch,
}

impl AllStates {
    pub fn new(seed: u64) -> Self {
        AllStates {
            batch: SampleBatch::new(seed),
        }
    }
}

impl Recorder for AllStates {
    fn start(&mut self, state: &ChainState) {
        self.batch.samples.push(state.to_sample(None));
    }
    fn record(&mut self, state: &ChainState, event: &EventRecord) {
        self.batch.samples.push(state.to_sample(Some(event.kind)));
    }
}

/// Retains post-transition states at one level, after a burn-in time, keeping every `thinning`-th.
#[derive(Debug)]
pub struct LevelSampler {
    pub level: usize,
    pub burn_in: f64,
    pub thinning: usize,
    seen: usize,
    pub batch: SampleBatch,
}

impl LevelSampler {
    pub fn new(level: usize, burn_in: f64, thinning: usize, seed: u64) -> Self {
        LevelSampler {
            level,
            burn_in,
            thinning: thinning.max(1),
            seen: 0,
            batch: SampleBatch::new(seed),
        }
    }

    fn offer(&mut self, state: &ChainState, event: Option<EventKind>) {
        if state.level != self.level || state.clock < self.burn_in {
            return;
        }
        if self.seen.is_multiple_of(self.thinning) {
            self.batch.samples.push(state.to_sample(event));
        }
        self.seen += 1;
    }
}

impl Recorder for LevelSampler {
    fn start(&mut self, state: &ChainState) {
        self.offer(state, None);
    }
    fn record(&mut self, state: &ChainState, event: &EventRecord) {
        self.offer(state, Some(event.kind));
    }
}

/// Records the chain state at equally spaced clock times `first, first + spacing, ...` (`count` of them).
#[derive(Debug)]
pub struct GridSampler {
    next: usize,
    first: f64,
    spacing: f64,
    count: usize,
    last: Option<Sample>,
    pub batch: SampleBatch,
}

impl GridSampler {
    pub fn new(first: f64, spacing: f64, count: usize, seed: u64) -> Self {
        GridSampler {
            next: 0,
            first,
            spacing,
            count,
            last: None,
            batch: SampleBatch::new(seed),
        }
    }

    fn time(&self, i: usize) -> f64 {
        self.first + i as f64 * self.spacing
    }

    /// Emits the held state for every grid time strictly before `until`.
    fn emit_before(&mut self, until: f64) {
        if let Some(last) = &self.last {
            while self.next < self.count && self.time(self.next) < until {
                let mut s = last.clone();
                s.t = self.time(self.next);
                self.batch.samples.push(s);
                self.next += 1;
            }
        }
    }
}

impl Recorder for GridSampler {
    fn start(&mut self, state: &ChainState) {
        self.last = Some(state.to_sample(None));
    }
    fn record(&mut self, state: &ChainState, event: &EventRecord) {
        self.emit_before(state.clock);
        self.last = Some(state.to_sample(Some(event.kind)));
    }
    fn finish(&mut self, _state: &ChainState) {
        self.emit_before(f64::INFINITY);
    }
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord<'a> {
    t: f64,
    level: usize,
    x: std::borrow::Cow<'a, [f64]>,
    event: std::borrow::Cow<'a, str>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scheme: Option<std::borrow::Cow<'a, str>>,
}

const INITIAL_EVENT: &str = "initial";

/// Writes one JSON object per sample: `{"t", "level", "x", "event", "scheme"}`.
///
/// `level` is written 1-based (1 = coldest, L = target level).
pub fn write_jsonl<W: Write>(
    out: W,
    batch: &SampleBatch,
    scheme: Option<&str>,
) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    for (i, s) in batch.samples.iter().enumerate() {
        let rec = JsonlRecord {
            t: s.t,
            level: s.level + 1,
            x: std::borrow::Cow::Borrowed(&s.x),
            event: std::borrow::Cow::Borrowed(s.event.map_or(INITIAL_EVENT, |e| e.as_str())),
            scheme: scheme.map(std::borrow::Cow::Borrowed),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
        if (i + 1) % FLUSH_EVERY == 0 {
            out.flush()?;
        }
    }
    out.flush()
}

pub fn write_jsonl_file(path: &Path, batch: &SampleBatch, scheme: Option<&str>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_jsonl(file, batch, scheme).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl_file(path: &Path) -> Result<SampleBatch> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut batch = SampleBatch::default();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::json(path, e))?;
        if rec.level == 0 {
            return Err(Error::Config(format!(
                "{}: levels are 1-based in sample files",
                path.display()
            )));
        }
        let event = if rec.event == INITIAL_EVENT {
            None
        } else {
            Some(EventKind::parse(&rec.event).ok_or_else(|| {
                Error::Config(format!(
                    "{}: unknown event kind {}",
                    path.display(),
                    rec.event
                ))
            })?)
        };
        batch.samples.push(Sample {
            t: rec.t,
            level: rec.level - 1,
            x: rec.x.into_owned(),
            event,
        });
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(level: usize, clock: f64, x: f64) -> ChainState {
        ChainState {
            x: vec![x],
            level,
            clock,
        }
    }

    fn ev(clock: f64) -> EventRecord {
        EventRecord {
            clock,
            kind: EventKind::RwmAccept,
            level_before: 0,
            level_after: 0,
            mode_pair: None,
        }
    }

    #[test]
    fn grid_sampler_holds_piecewise_constant_state() {
        let mut g = GridSampler::new(0.5, 1.0, 4, 0);
        g.start(&state(0, 0.0, 1.0));
        g.record(&state(0, 1.2, 2.0), &ev(1.2));
        g.record(&state(0, 1.4, 3.0), &ev(1.4));
        g.record(&state(0, 3.0, 4.0), &ev(3.0));
        g.finish(&state(0, 10.0, 4.0));
        let xs: Vec<f64> = g.batch.samples.iter().map(|s| s.x[0]).collect();
        let ts: Vec<f64> = g.batch.samples.iter().map(|s| s.t).collect();
        assert_eq!(xs, vec![1.0, 3.0, 3.0, 4.0]);
        assert_eq!(ts, vec![0.5, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn level_sampler_thins_and_burns_in() {
        let mut s = LevelSampler::new(1, 1.0, 2, 0);
        s.start(&state(1, 0.0, 0.0));
        for i in 1..=6 {
            s.record(&state(1, i as f64, i as f64), &ev(i as f64));
        }
        s.record(&state(0, 7.0, 7.0), &ev(7.0));
        let xs: Vec<f64> = s.batch.samples.iter().map(|s| s.x[0]).collect();
        assert_eq!(xs, vec![1.0, 3.0, 5.0]);
    }

    #[test]
    fn jsonl_round_trip() {
        let batch = SampleBatch {
            samples: vec![
                Sample {
                    t: 0.0,
                    level: 0,
                    x: vec![0.1, -2.5],
                    event: None,
                },
                Sample {
                    t: 1.0 / 3.0,
                    level: 2,
                    x: vec![1e-300, 7.0],
                    event: Some(EventKind::SwapDownReject),
                },
            ],
            seeds: vec![],
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &batch, Some("re_alps")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().contains("\"level\":1"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        std::fs::write(&path, &text).unwrap();
        let back = read_jsonl_file(&path).unwrap();
        assert_eq!(back.samples, batch.samples);
    }

    #[test]
    fn event_kind_names_round_trip() {
        for k in EventKind::ALL {
            assert_eq!(EventKind::parse(k.as_str()), Some(k));
            assert_eq!(
                serde_json::to_string(&k).unwrap(),
                format!("\"{}\"", k.as_str())
            );
        }
    }
}
