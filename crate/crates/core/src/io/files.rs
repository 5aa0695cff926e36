//! Dataset descriptors, loss logs, per-frame score files, and metric reports.
//!
//! All formats are UTF-8, tab-separated where tabular. Floats use Rust's
//! shortest round-trip formatting so every file parses back exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::gig::VideoLabels;
use crate::inference::{FrameScoreSeries, MetricsReport};
use crate::io::{read_text, write_atomic};
use crate::objectives::{total_loss, Lambdas};
use crate::training::{AnomalySpan, DatasetSpec, EpochLog, VideoSpec};

const DATASET_TAG: &str = "gigvad-dataset";
pub const LOSS_LOG_HEADER: &str = "# epoch\tl_s\tl_s_star\tl_g_star\tl_sparse\ttotal";

fn parse_err(origin: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: origin.to_string(),
        line,
        message: message.into(),
    }
}

/// Header `gigvad-dataset N=<n> C=<c> seed=<s>`, then one line per video:
/// `id  frame_count  label_bits  spans` where spans are `class:start-end`
/// joined by commas, or `-` for none.
pub fn format_dataset(ds: &DatasetSpec) -> String {
    let mut out = format!("{DATASET_TAG} N={} C={} seed={}\n", ds.len(), ds.classes, ds.seed);
    for v in &ds.videos {
        let bits: String = v
            .labels
            .multi_hot()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        let spans = if v.spans.is_empty() {
            "-".to_string()
        } else {
            v.spans
                .iter()
                .map(|s| format!("{}:{}-{}", s.class, s.start, s.end))
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(out, "{}\t{}\t{bits}\t{spans}", v.id, v.frame_count).unwrap();
    }
    out
}

pub fn parse_dataset(text: &str, origin: &str) -> Result<DatasetSpec> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(origin, 1, "empty dataset file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some(DATASET_TAG) {
        return Err(parse_err(origin, 1, format!("expected `{DATASET_TAG}` header")));
    }
    let mut n = None;
    let mut classes = None;
    let mut seed = None;
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| parse_err(origin, 1, format!("bad header field `{f}`")))?;
        let bad = || parse_err(origin, 1, format!("bad value in `{f}`"));
        match k {
            "N" => n = Some(v.parse::<usize>().map_err(|_| bad())?),
            "C" => classes = Some(v.parse::<usize>().map_err(|_| bad())?),
            "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
            _ => return Err(parse_err(origin, 1, format!("unknown header field `{k}`"))),
        }
    }
    let (Some(n), Some(classes), Some(seed)) = (n, classes, seed) else {
        return Err(parse_err(origin, 1, "header needs N, C and seed"));
    };

    let mut videos = Vec::with_capacity(n);
    for (idx, line) in lines {
        let ln = idx + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(parse_err(origin, ln, format!("expected 4 columns, got {}", cols.len())));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| parse_err(origin, ln, "bad video id"))?;
        let frames: usize = cols[1]
            .parse()
            .map_err(|_| parse_err(origin, ln, "bad frame count"))?;
        if cols[2].len() != classes || !cols[2].chars().all(|c| c == '0' || c == '1') {
            return Err(parse_err(origin, ln, format!("label bits must be {classes} of 0/1")));
        }
        let y = cols[2].chars().map(|c| c == '1').collect();
        let labels = VideoLabels::new(y).map_err(|e| parse_err(origin, ln, e.to_string()))?;
        let mut spans = Vec::new();
        if cols[3] != "-" {
            for s in cols[3].split(',') {
                let span = parse_span(s).ok_or_else(|| parse_err(origin, ln, format!("bad span `{s}`")))?;
                spans.push(span);
            }
        }
        let v = VideoSpec::new(id, frames, labels, spans)
            .map_err(|e| parse_err(origin, ln, e.to_string()))?;
        videos.push(v);
    }
    if videos.len() != n {
        return Err(parse_err(
            origin,
            1,
            format!("header says N={n} but file lists {} videos", videos.len()),
        ));
    }
    DatasetSpec::new(classes, seed, videos)
}

fn parse_span(s: &str) -> Option<AnomalySpan> {
    let (class, range) = s.split_once(':')?;
    let (start, end) = range.split_once('-')?;
    Some(AnomalySpan {
        class: class.parse().ok()?,
        start: start.parse().ok()?,
        end: end.parse().ok()?,
    })
}

pub fn save_dataset(ds: &DatasetSpec, path: &Path) -> Result<()> {
    write_atomic(path, format_dataset(ds).as_bytes())
}

pub fn load_dataset(path: &Path) -> Result<DatasetSpec> {
    parse_dataset(&read_text(path)?, &path.display().to_string())
}

/// One line per epoch: `epoch  l_s  l_s*  l_g*  l_sparse  total`.
pub fn format_loss_log(log: &[EpochLog]) -> String {
    let mut out = String::from(LOSS_LOG_HEADER);
    out.push('\n');
    for e in log {
        let l = &e.losses;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.epoch, l.l_s, l.l_s_star, l.l_g_star, l.l_sparse, l.total
        )
        .unwrap();
    }
    out
}

/// Parses a loss log, recomputing the weighted total under `lambdas` and
/// checking epochs strictly increase.
pub fn parse_loss_log(text: &str, lambdas: Lambdas, origin: &str) -> Result<Vec<EpochLog>> {
    let mut out: Vec<EpochLog> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let ln = idx + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(parse_err(origin, ln, format!("expected 6 columns, got {}", cols.len())));
        }
        let epoch: usize = cols[0].parse().map_err(|_| parse_err(origin, ln, "bad epoch"))?;
        let mut v = [0.0f64; 5];
        for (slot, c) in v.iter_mut().zip(&cols[1..]) {
            *slot = c.parse().map_err(|_| parse_err(origin, ln, format!("bad number `{c}`")))?;
        }
        if out.last().is_some_and(|p| p.epoch >= epoch) {
            return Err(parse_err(origin, ln, "epochs must increase"));
        }
        let mut losses = total_loss(v[0], v[1], v[2], v[3], lambdas)?;
        losses.total = v[4];
        out.push(EpochLog { epoch, losses });
    }
    Ok(out)
}

/// One line per frame: `frame  overall  channel_0 … channel_C`.
pub fn format_scores(series: &FrameScoreSeries) -> String {
    let overall = series.overall();
    let mut out = String::new();
    for (f, o) in overall.iter().enumerate() {
        write!(out, "{f}\t{o}").unwrap();
        for v in series.frame(f) {
            write!(out, "\t{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_scores(text: &str, origin: &str) -> Result<FrameScoreSeries> {
    let mut channels = None;
    let mut scores = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let ln = idx + 1;
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(parse_err(origin, ln, "score line needs frame, overall and >= 2 channels"));
        }
        let frame: usize = cols[0].parse().map_err(|_| parse_err(origin, ln, "bad frame index"))?;
        if frame != idx {
            return Err(parse_err(origin, ln, format!("expected frame {idx}, got {frame}")));
        }
        let c = cols.len() - 2;
        if *channels.get_or_insert(c) != c {
            return Err(parse_err(origin, ln, "channel count changes between lines"));
        }
        for v in &cols[2..] {
            scores.push(v.parse::<f64>().map_err(|_| parse_err(origin, ln, format!("bad score `{v}`")))?);
        }
    }
    let channels = channels.ok_or_else(|| parse_err(origin, 1, "empty score file"))?;
    FrameScoreSeries::new(channels, scores)
}

pub fn format_report(r: &MetricsReport) -> String {
    let mut out = String::new();
    writeln!(out, "videos\t{}", r.videos).unwrap();
    writeln!(out, "frames\t{}", r.frames).unwrap();
    writeln!(out, "auc\t{}", r.auc).unwrap();
    for (i, f) in r.f1.per_class.iter().enumerate() {
        writeln!(out, "f1_class_{}\t{f}", i + 1).unwrap();
    }
    writeln!(out, "mf1\t{}", r.f1.mf1).unwrap();
    out
}
