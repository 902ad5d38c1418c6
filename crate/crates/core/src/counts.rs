//! Count containers for binary-discrimination trials.
//!
//! Everything the estimators consume is one of two shapes: a 2x2 table of
//! (stimulus, response) tallies, or the 2x2xH tensor that adds a confidence
//! rating in 1..=H. Cells are stored as `f64` because two standard
//! adjustments (log-linear edge correction, 1/(2H) cell padding) and the
//! noise-free expected-count oracle all produce fractional cells; observed
//! data stays integral and the CSV format only accepts integers.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The two stimulus (and response) classes. By convention S2 is the
/// "signal" class whose correct detections are hits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StimulusClass {
    S1,
    S2,
}

impl StimulusClass {
    pub const BOTH: [StimulusClass; 2] = [StimulusClass::S1, StimulusClass::S2];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            StimulusClass::S1 => 0,
            StimulusClass::S2 => 1,
        }
    }

    /// Map a binary dataset label (0 or 1) onto a class; 1 is S2.
    pub fn from_binary_label(label: u8) -> Option<StimulusClass> {
        match label {
            0 => Some(StimulusClass::S1),
            1 => Some(StimulusClass::S2),
            _ => None,
        }
    }

    pub fn binary_label(self) -> u8 {
        self.index() as u8
    }
}

impl fmt::Display for StimulusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StimulusClass::S1 => write!(f, "S1"),
            StimulusClass::S2 => write!(f, "S2"),
        }
    }
}

impl FromStr for StimulusClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" | "s1" => Ok(StimulusClass::S1),
            "S2" | "s2" => Ok(StimulusClass::S2),
            other => Err(Error::InvalidCounts(format!(
                "unknown stimulus class {other:?} (expected S1 or S2)"
            ))),
        }
    }
}

/// Type 1 response tallies: how often each response was given to each
/// stimulus class, ignoring confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Type1Counts {
    pub n_s1_resp_s1: u64,
    pub n_s1_resp_s2: u64,
    pub n_s2_resp_s1: u64,
    pub n_s2_resp_s2: u64,
}

impl Type1Counts {
    pub fn new(n_s1_resp_s1: u64, n_s1_resp_s2: u64, n_s2_resp_s1: u64, n_s2_resp_s2: u64) -> Self {
        Type1Counts { n_s1_resp_s1, n_s1_resp_s2, n_s2_resp_s1, n_s2_resp_s2 }
    }

    /// Trials on which S1 was presented.
    pub fn n_s1(&self) -> u64 {
        self.n_s1_resp_s1 + self.n_s1_resp_s2
    }

    /// Trials on which S2 was presented.
    pub fn n_s2(&self) -> u64 {
        self.n_s2_resp_s1 + self.n_s2_resp_s2
    }

    pub fn total(&self) -> u64 {
        self.n_s1() + self.n_s2()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(COUNTS_HEADER);
        out.push('\n');
        for (stim, resp, n) in [
            (StimulusClass::S1, StimulusClass::S1, self.n_s1_resp_s1),
            (StimulusClass::S1, StimulusClass::S2, self.n_s1_resp_s2),
            (StimulusClass::S2, StimulusClass::S1, self.n_s2_resp_s1),
            (StimulusClass::S2, StimulusClass::S2, self.n_s2_resp_s2),
        ] {
            out.push_str(&format!("{stim},{resp},,{n}\n"));
        }
        out
    }
}

/// The 2x2xH tensor of (stimulus, response, confidence) tallies — the
/// universal input to the meta-d' estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingCounts {
    h: usize,
    cells: Vec<f64>,
}

impl RatingCounts {
    /// An all-zero tensor for a confidence scale with `h` levels (h >= 2).
    pub fn new(h: usize) -> Result<Self> {
        if h < 2 {
            return Err(Error::ScaleTooSmall(h));
        }
        Ok(RatingCounts { h, cells: vec![0.0; 4 * h] })
    }

    /// Build a tensor by evaluating `f` on every (stimulus, response,
    /// confidence) cell.
    pub fn from_fn(
        h: usize,
        mut f: impl FnMut(StimulusClass, StimulusClass, usize) -> f64,
    ) -> Result<Self> {
        let mut counts = RatingCounts::new(h)?;
        for stim in StimulusClass::BOTH {
            for resp in StimulusClass::BOTH {
                for conf in 1..=h {
                    counts.set(stim, resp, conf, f(stim, resp, conf));
                }
            }
        }
        Ok(counts)
    }

    pub fn h(&self) -> usize {
        self.h
    }

    #[inline]
    fn idx(&self, stim: StimulusClass, resp: StimulusClass, conf: usize) -> usize {
        assert!(conf >= 1 && conf <= self.h, "confidence {conf} outside 1..={}", self.h);
        (stim.index() * 2 + resp.index()) * self.h + (conf - 1)
    }

    #[inline]
    pub fn get(&self, stim: StimulusClass, resp: StimulusClass, conf: usize) -> f64 {
        self.cells[self.idx(stim, resp, conf)]
    }

    #[inline]
    pub fn set(&mut self, stim: StimulusClass, resp: StimulusClass, conf: usize, value: f64) {
        let i = self.idx(stim, resp, conf);
        self.cells[i] = value;
    }

    #[inline]
    pub fn add(&mut self, stim: StimulusClass, resp: StimulusClass, conf: usize, value: f64) {
        let i = self.idx(stim, resp, conf);
        self.cells[i] += value;
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Marginal (stimulus, response) sums over confidence, in the order
    /// (S1,S1), (S1,S2), (S2,S1), (S2,S2).
    pub fn type1_sums(&self) -> [f64; 4] {
        let mut sums = [0.0; 4];
        for (k, chunk) in self.cells.chunks(self.h).enumerate() {
            sums[k] = chunk.iter().sum();
        }
        sums
    }

    pub fn n_stimulus(&self, stim: StimulusClass) -> f64 {
        let sums = self.type1_sums();
        match stim {
            StimulusClass::S1 => sums[0] + sums[1],
            StimulusClass::S2 => sums[2] + sums[3],
        }
    }

    pub fn n_total(&self) -> f64 {
        self.cells.iter().sum()
    }

    pub fn is_integral(&self) -> bool {
        self.cells.iter().all(|&c| c.fract() == 0.0)
    }

    /// Collapse onto type 1 counts; errors if any cell is fractional.
    pub fn to_type1_counts(&self) -> Result<Type1Counts> {
        if !self.is_integral() {
            return Err(Error::InvalidCounts(
                "cannot collapse fractional cells to integer type 1 counts".into(),
            ));
        }
        let s = self.type1_sums();
        Ok(Type1Counts::new(s[0] as u64, s[1] as u64, s[2] as u64, s[3] as u64))
    }

    /// All cells finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        for (i, &c) in self.cells.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidCounts(format!("cell {i} has invalid count {c}")));
            }
        }
        Ok(())
    }

    /// Merge confidence levels into a coarser scale. `cutpoints` lists the
    /// last original level of each new group, ascending and ending at `h`;
    /// e.g. `[3, 5]` maps a 5-level scale onto 2 levels {1-3, 4-5}.
    pub fn coarsen(&self, cutpoints: &[usize]) -> Result<RatingCounts> {
        let new_h = cutpoints.len();
        if new_h < 2 {
            return Err(Error::ScaleTooSmall(new_h));
        }
        if cutpoints.last() != Some(&self.h)
            || cutpoints.windows(2).any(|w| w[0] >= w[1])
            || cutpoints[0] < 1
        {
            return Err(Error::InvalidCounts(format!(
                "cutpoints {cutpoints:?} must be strictly increasing and end at {}",
                self.h
            )));
        }
        let group_of = |conf: usize| cutpoints.iter().position(|&cut| conf <= cut).unwrap() + 1;
        let mut out = RatingCounts::new(new_h)?;
        for stim in StimulusClass::BOTH {
            for resp in StimulusClass::BOTH {
                for conf in 1..=self.h {
                    out.add(stim, resp, group_of(conf), self.get(stim, resp, conf));
                }
            }
        }
        Ok(out)
    }

    /// CSV per the counts-file interface; requires integral cells.
    pub fn to_csv_string(&self) -> Result<String> {
        if !self.is_integral() {
            return Err(Error::InvalidCounts(
                "counts CSV stores integer tallies; round fractional cells first".into(),
            ));
        }
        let mut out = String::from(COUNTS_HEADER);
        out.push('\n');
        for stim in StimulusClass::BOTH {
            for resp in StimulusClass::BOTH {
                for conf in 1..=self.h {
                    let n = self.get(stim, resp, conf) as u64;
                    out.push_str(&format!("{stim},{resp},{conf},{n}\n"));
                }
            }
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// Parsed contents of a counts CSV: rated data or type-1-only data.
#[derive(Debug, Clone, PartialEq)]
pub enum CountsData {
    Type1(Type1Counts),
    Rated(RatingCounts),
}

impl CountsData {
    pub fn into_rated(self) -> Result<RatingCounts> {
        match self {
            CountsData::Rated(r) => Ok(r),
            CountsData::Type1(_) => Err(Error::InvalidCounts(
                "counts file has no confidence column values; rated data required".into(),
            )),
        }
    }
}

const COUNTS_HEADER: &str = "stimulus,response,confidence,count";

/// Parse the `stimulus,response,confidence,count` CSV format. Confidence
/// must be present on every row or on none; counts are non-negative
/// integers; duplicate cells accumulate. Emit zero-count rows when writing
/// so the confidence scale is pinned by the file itself.
pub fn parse_counts_csv(text: &str) -> Result<CountsData> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::CountsParse { line: 1, msg: "empty file".into() })?;
    if header.trim() != COUNTS_HEADER {
        return Err(Error::CountsParse {
            line: 1,
            msg: format!("expected header {COUNTS_HEADER:?}, got {:?}", header.trim()),
        });
    }

    // (stim, resp, conf 0 = none) -> count
    let mut rows: Vec<(StimulusClass, StimulusClass, usize, u64)> = Vec::new();
    let mut max_conf = 0usize;
    let mut saw_unrated = false;

    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::CountsParse {
                line: line_no,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let stim: StimulusClass = fields[0]
            .trim()
            .parse()
            .map_err(|e| Error::CountsParse { line: line_no, msg: format!("{e}") })?;
        let resp: StimulusClass = fields[1]
            .trim()
            .parse()
            .map_err(|e| Error::CountsParse { line: line_no, msg: format!("{e}") })?;
        let conf_field = fields[2].trim();
        let conf = if conf_field.is_empty() {
            saw_unrated = true;
            0
        } else {
            let c: usize = conf_field.parse().map_err(|_| Error::CountsParse {
                line: line_no,
                msg: format!("confidence {conf_field:?} is not a positive integer"),
            })?;
            if c == 0 {
                return Err(Error::CountsParse {
                    line: line_no,
                    msg: "confidence levels start at 1".into(),
                });
            }
            max_conf = max_conf.max(c);
            c
        };
        let count: u64 = fields[3].trim().parse().map_err(|_| Error::CountsParse {
            line: line_no,
            msg: format!("count {:?} is not a non-negative integer", fields[3].trim()),
        })?;
        rows.push((stim, resp, conf, count));
    }

    if rows.is_empty() {
        return Err(Error::CountsParse { line: 1, msg: "no data rows".into() });
    }
    if saw_unrated && max_conf > 0 {
        return Err(Error::InvalidCounts(
            "file mixes rated and unrated rows; confidence must be present on all rows or none"
                .into(),
        ));
    }

    if saw_unrated {
        let mut t1 = Type1Counts::default();
        for (stim, resp, _, n) in rows {
            match (stim, resp) {
                (StimulusClass::S1, StimulusClass::S1) => t1.n_s1_resp_s1 += n,
                (StimulusClass::S1, StimulusClass::S2) => t1.n_s1_resp_s2 += n,
                (StimulusClass::S2, StimulusClass::S1) => t1.n_s2_resp_s1 += n,
                (StimulusClass::S2, StimulusClass::S2) => t1.n_s2_resp_s2 += n,
            }
        }
        Ok(CountsData::Type1(t1))
    } else {
        if max_conf < 2 {
            return Err(Error::ScaleTooSmall(max_conf));
        }
        let mut counts = RatingCounts::new(max_conf)?;
        for (stim, resp, conf, n) in rows {
            counts.add(stim, resp, conf, n as f64);
        }
        Ok(CountsData::Rated(counts))
    }
}

pub fn read_counts_csv(path: &Path) -> Result<CountsData> {
    let text = std::fs::read_to_string(path)?;
    parse_counts_csv(&text)
}
