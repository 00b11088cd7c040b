//! Long-run SKR logs: binning, downtime masks, failure detection and
//! per-user / per-scenario / full-network AE-SKR summaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{Aeskr, ScoreFunction, Selector};
use crate::topology::{Link, Scenario, User};

pub const DEFAULT_BIN_WIDTH: f64 = 600.0;
pub const SECONDS_PER_DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkrSample {
    /// Seconds since the epoch.
    pub timestamp: f64,
    pub link: String,
    pub skr_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskInterval {
    pub start: f64,
    pub end: f64,
    #[serde(default)]
    pub reason: String,
}

/// Parsed records plus the count of lines that could not be used.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Records {
    pub samples: Vec<SkrSample>,
    pub rejected: usize,
}

/// Reads JSON-lines (`{"timestamp":..,"link":..,"skr_bps":..}`) or CSV with a
/// `timestamp,link,skr_bps` header. Unusable lines are counted, not fatal.
pub fn parse_records(text: &str) -> Records {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    if first.starts_with('{') {
        parse_json_lines(text)
    } else {
        parse_csv_records(text)
    }
}

fn parse_json_lines(text: &str) -> Records {
    let mut out = Records::default();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match serde_json::from_str::<SkrSample>(line) {
            Ok(s) if sample_ok(&s) => out.samples.push(s),
            _ => out.rejected += 1,
        }
    }
    out
}

fn parse_csv_records(text: &str) -> Records {
    let mut out = Records::default();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(_) => {
            out.rejected += 1;
            return out;
        }
    };
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(ts), Some(link), Some(skr)) = (col("timestamp"), col("link"), col("skr_bps")) else {
        out.rejected += reader.records().count() + 1;
        return out;
    };
    for rec in reader.records() {
        let parsed = rec.ok().and_then(|r| {
            Some(SkrSample {
                timestamp: r.get(ts)?.parse().ok()?,
                link: r.get(link)?.to_string(),
                skr_bps: r.get(skr)?.parse().ok()?,
            })
        });
        match parsed {
            Some(s) if sample_ok(&s) => out.samples.push(s),
            _ => out.rejected += 1,
        }
    }
    out
}

fn sample_ok(s: &SkrSample) -> bool {
    s.timestamp.is_finite()
        && s.skr_bps.is_finite()
        && s.skr_bps >= 0.0
        && Link::parse(&s.link).is_ok()
}

/// JSON array of `{start, end, reason}` in epoch seconds.
pub fn parse_mask(text: &str) -> Result<Vec<MaskInterval>> {
    let masks: Vec<MaskInterval> = serde_json::from_str(text)?;
    for m in &masks {
        if !(m.start.is_finite() && m.end.is_finite() && m.end > m.start) {
            return Err(Error::Parse(format!(
                "mask interval {}..{} is invalid",
                m.start, m.end
            )));
        }
    }
    Ok(masks)
}

/// Per-link binned means on a common grid of fixed-width bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkrTrace {
    pub origin: f64,
    pub bin_width: f64,
    /// `None` where a link has no samples in a bin.
    pub links: BTreeMap<Link, Vec<Option<f64>>>,
    /// Bins overlapping any downtime interval.
    pub masked: Vec<bool>,
    pub mask_reasons: Vec<Option<String>>,
    /// Samples before the origin or with unusable link ids.
    pub rejected: usize,
}

impl SkrTrace {
    pub fn bins(&self) -> usize {
        self.masked.len()
    }

    pub fn bin_start(&self, bin: usize) -> f64 {
        self.origin + bin as f64 * self.bin_width
    }

    /// One sample per present bin, at the bin centre.
    pub fn to_samples(&self) -> Vec<SkrSample> {
        let mut out = Vec::new();
        for (link, bins) in &self.links {
            for (i, v) in bins.iter().enumerate() {
                if let Some(v) = v {
                    out.push(SkrSample {
                        timestamp: self.bin_start(i) + 0.5 * self.bin_width,
                        link: link.to_string(),
                        skr_bps: *v,
                    });
                }
            }
        }
        out
    }

    /// Present, unmasked `(link, value)` entries of one bin.
    pub fn bin_entries(&self, bin: usize) -> Vec<(Link, f64)> {
        if self.masked[bin] {
            return Vec::new();
        }
        self.links
            .iter()
            .filter_map(|(l, vals)| vals[bin].map(|v| (l.clone(), v)))
            .collect()
    }
}

/// Bins `samples` into windows of `bin_width` seconds starting at `origin`
/// (default: earliest sample). Bins overlapping a mask interval are masked.
pub fn ingest(
    samples: &[SkrSample],
    bin_width: f64,
    origin: Option<f64>,
    masks: &[MaskInterval],
) -> Result<SkrTrace> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::InvalidParameter(format!("bin width {bin_width}")));
    }
    let mut usable: Vec<(f64, Link, f64)> = Vec::with_capacity(samples.len());
    let mut rejected = 0;
    for s in samples {
        match Link::parse(&s.link) {
            Ok(l) if s.timestamp.is_finite() && s.skr_bps.is_finite() && s.skr_bps >= 0.0 => {
                usable.push((s.timestamp, l, s.skr_bps))
            }
            _ => rejected += 1,
        }
    }
    let origin = match origin {
        Some(o) if o.is_finite() => o,
        Some(o) => return Err(Error::InvalidParameter(format!("origin {o}"))),
        None => usable
            .iter()
            .map(|s| s.0)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
            .ok_or_else(|| Error::Domain("no usable samples".into()))?,
    };
    // a fixed order keeps per-bin sums independent of input order
    usable.sort_by(|a, b| {
        a.1.cmp(&b.1)
            .then(a.0.total_cmp(&b.0))
            .then(a.2.total_cmp(&b.2))
    });

    let mut sums: BTreeMap<Link, BTreeMap<usize, (f64, u32)>> = BTreeMap::new();
    let mut last_bin = 0usize;
    for (t, link, v) in usable {
        let offset = (t - origin) / bin_width;
        if !(0.0..=1e8).contains(&offset) {
            rejected += 1;
            continue;
        }
        let bin = offset.floor() as usize;
        last_bin = last_bin.max(bin);
        let e = sums.entry(link).or_default().entry(bin).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    if sums.is_empty() {
        return Err(Error::Domain(
            "no usable samples at or after the origin".into(),
        ));
    }
    let bins = last_bin + 1;
    let links = sums
        .into_iter()
        .map(|(l, per_bin)| {
            let mut vals = vec![None; bins];
            for (b, (s, c)) in per_bin {
                vals[b] = Some(s / c as f64);
            }
            (l, vals)
        })
        .collect();
    let mut masked = vec![false; bins];
    let mut mask_reasons = vec![None; bins];
    for (b, (m, reason)) in masked.iter_mut().zip(mask_reasons.iter_mut()).enumerate() {
        let (lo, hi) = (
            origin + b as f64 * bin_width,
            origin + (b + 1) as f64 * bin_width,
        );
        if let Some(iv) = masks.iter().find(|iv| iv.start < hi && iv.end > lo) {
            *m = true;
            *reason = Some(iv.reason.clone());
        }
    }
    Ok(SkrTrace {
        origin,
        bin_width,
        links,
        masked,
        mask_reasons,
        rejected,
    })
}

/// Index of the earliest unmasked bin in which any link's mean is below `threshold`.
pub fn detect_failure_bin(trace: &SkrTrace, threshold: f64) -> Option<usize> {
    (0..trace.bins()).find(|&b| {
        !trace.masked[b]
            && trace
                .links
                .values()
                .any(|vals| vals[b].is_some_and(|v| v < threshold))
    })
}

/// Start time (epoch seconds) of the failing bin.
pub fn detect_failure(trace: &SkrTrace, threshold: f64) -> Option<f64> {
    detect_failure_bin(trace, threshold).map(|b| trace.bin_start(b))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullPeriodMode {
    /// Score each link's time-averaged SKR, then combine.
    #[default]
    ScoringOfMeans,
    /// Average the per-bin network scores, then invert.
    MeanOfBinScores,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowGroup {
    User,
    Scenario,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: RowGroup,
    pub label: String,
    pub full: Aeskr,
    pub max: Aeskr,
    pub min: Aeskr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySummary {
    pub origin: f64,
    pub bin_width: f64,
    pub bins: usize,
    pub masked_bins: usize,
    /// Bins that went into the summary: unmasked, before failure.
    pub window_bins: usize,
    pub failure_time: Option<f64>,
    pub failure_elapsed_s: Option<f64>,
    pub rows: Vec<SummaryRow>,
}

impl StabilitySummary {
    pub fn failure_elapsed_days(&self) -> Option<f64> {
        self.failure_elapsed_s.map(|s| s / SECONDS_PER_DAY)
    }

    pub fn row(&self, label: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

/// Per-user rows (users in the given order that appear in the trace),
/// non-empty scenario rows, then the full network.
pub fn table_selectors(users: &[User], trace: &SkrTrace) -> Result<Vec<(RowGroup, Selector)>> {
    let mut out = Vec::new();
    for u in users {
        if trace.links.keys().any(|l| l.involves(&u.id)) {
            out.push((RowGroup::User, Selector::User(u.id.clone())));
        }
    }
    for s in Scenario::ALL {
        let sel = Selector::Scenario(s);
        let mut any = false;
        for l in trace.links.keys() {
            if sel.matches(users, l)? {
                any = true;
                break;
            }
        }
        if any {
            out.push((RowGroup::Scenario, sel));
        }
    }
    out.push((RowGroup::Full, Selector::All));
    Ok(out)
}

/// Per-bin AE-SKR for one selector; `None` for masked bins or bins with no matching data.
pub fn bin_series(
    trace: &SkrTrace,
    users: &[User],
    selector: &Selector,
    scoring: &ScoreFunction,
) -> Result<Vec<Option<Aeskr>>> {
    let members: Vec<(&Link, &Vec<Option<f64>>)> = trace
        .links
        .iter()
        .map(|(l, v)| selector.matches(users, l).map(|m| m.then_some((l, v))))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    (0..trace.bins())
        .map(|b| {
            if trace.masked[b] {
                return Ok(None);
            }
            let vals: Vec<f64> = members.iter().filter_map(|(_, v)| v[b]).collect();
            if vals.is_empty() {
                return Ok(None);
            }
            scoring.aeskr_of(&vals).map(Some)
        })
        .collect()
}

fn extreme(values: &[Aeskr], want_max: bool) -> Aeskr {
    let failed = values.iter().any(|a| a.is_failed());
    let rates = values.iter().filter_map(|a| a.rate());
    if want_max {
        rates
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
            .map_or(Aeskr::Failed, Aeskr::Rate)
    } else if failed {
        Aeskr::Failed
    } else {
        rates
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))))
            .map_or(Aeskr::Failed, Aeskr::Rate)
    }
}

/// Summary over the pre-failure window. Failure is detected at the score
/// function's fail threshold; bins from the failing one onward are excluded.
pub fn summarize(
    trace: &SkrTrace,
    users: &[User],
    selectors: &[(RowGroup, Selector)],
    scoring: &ScoreFunction,
    mode: FullPeriodMode,
) -> Result<StabilitySummary> {
    let failure = detect_failure_bin(trace, scoring.fail_threshold);
    let end = failure.unwrap_or(trace.bins());
    let window: Vec<usize> = (0..end).filter(|&b| !trace.masked[b]).collect();
    let mut rows = Vec::with_capacity(selectors.len());
    for (group, sel) in selectors {
        let series = bin_series(trace, users, sel, scoring)?;
        let in_window: Vec<Aeskr> = window.iter().filter_map(|&b| series[b]).collect();
        if in_window.is_empty() {
            return Err(Error::Domain(format!("no pre-failure data for {sel}")));
        }
        let full = match mode {
            FullPeriodMode::ScoringOfMeans => {
                let mut means = Vec::new();
                for (l, vals) in &trace.links {
                    if !sel.matches(users, l)? {
                        continue;
                    }
                    let present: Vec<f64> = window.iter().filter_map(|&b| vals[b]).collect();
                    if !present.is_empty() {
                        means.push(present.iter().sum::<f64>() / present.len() as f64);
                    }
                }
                scoring.aeskr_of(&means)?
            }
            FullPeriodMode::MeanOfBinScores => {
                let mut ws = Vec::new();
                for &b in &window {
                    let vals: Vec<f64> = trace
                        .links
                        .iter()
                        .filter(|(l, _)| sel.matches(users, l).unwrap_or(false))
                        .filter_map(|(_, v)| v[b])
                        .collect();
                    if !vals.is_empty() {
                        ws.push(scoring.network_score(&vals)?);
                    }
                }
                scoring.aeskr(ws.iter().sum::<f64>() / ws.len() as f64)?
            }
        };
        rows.push(SummaryRow {
            group: *group,
            label: sel.to_string(),
            full,
            max: extreme(&in_window, true),
            min: extreme(&in_window, false),
        });
    }
    Ok(StabilitySummary {
        origin: trace.origin,
        bin_width: trace.bin_width,
        bins: trace.bins(),
        masked_bins: trace.masked.iter().filter(|m| **m).count(),
        window_bins: window.len(),
        failure_time: failure.map(|b| trace.bin_start(b)),
        failure_elapsed_s: failure.map(|b| b as f64 * trace.bin_width),
        rows,
    })
}

/// Time series CSV: one row per bin, one column per selector. Masked or
/// empty bins are blank; the `masked` column carries the mask reason.
pub fn series_csv(
    trace: &SkrTrace,
    users: &[User],
    selectors: &[(RowGroup, Selector)],
    scoring: &ScoreFunction,
) -> Result<String> {
    let columns = selectors
        .iter()
        .map(|(_, s)| bin_series(trace, users, s, scoring))
        .collect::<Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "bin_start_s".to_string(),
        "elapsed_s".to_string(),
        "masked".to_string(),
    ];
    header.extend(selectors.iter().map(|(_, s)| s.to_string()));
    w.write_record(&header)?;
    for b in 0..trace.bins() {
        let mut row = vec![
            trace.bin_start(b).to_string(),
            (b as f64 * trace.bin_width).to_string(),
            trace.mask_reasons[b].clone().unwrap_or_default(),
        ];
        row.extend(
            columns
                .iter()
                .map(|c| c[b].map(|a| a.to_string()).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Parse(e.to_string()))?).expect("utf8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: f64, link: &str, v: f64) -> SkrSample {
        SkrSample {
            timestamp: t,
            link: link.into(),
            skr_bps: v,
        }
    }

    #[test]
    fn binning() {
        let tr = ingest(
            &[s(0.0, "A-B", 1.0), s(600.0, "A-B", 2.0)],
            600.0,
            None,
            &[],
        )
        .unwrap();
        assert_eq!(tr.links[&Link::new("A", "B")], vec![Some(1.0), Some(2.0)]);
        let tr = ingest(
            &[s(10.0, "A-B", 4.0), s(20.0, "B-A", 6.0)],
            600.0,
            None,
            &[],
        )
        .unwrap();
        assert_eq!(tr.links[&Link::new("A", "B")], vec![Some(5.0)]);
    }

    #[test]
    fn order_independent() {
        let mut v: Vec<SkrSample> = (0..500)
            .map(|i| s(i as f64 * 37.0, "A-B", (i as f64).sin().abs() + 0.3))
            .collect();
        let a = ingest(&v, 600.0, None, &[]).unwrap();
        v.reverse();
        v.swap(3, 70);
        let b = ingest(&v, 600.0, None, &[]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn absent_bins_and_rejects() {
        let tr = ingest(
            &[
                s(0.0, "A-B", 1.0),
                s(1300.0, "A-B", 1.0),
                s(10.0, "nonsense", 1.0),
                s(5.0, "A-C", -1.0),
            ],
            600.0,
            None,
            &[],
        )
        .unwrap();
        assert_eq!(
            tr.links[&Link::new("A", "B")],
            vec![Some(1.0), None, Some(1.0)]
        );
        assert_eq!(tr.rejected, 2);
    }

    #[test]
    fn failure_detection() {
        let ok = ingest(
            &[s(0.0, "A-B", 0.2), s(700.0, "A-B", 0.3)],
            600.0,
            None,
            &[],
        )
        .unwrap();
        assert_eq!(detect_failure(&ok, 0.1), None);
        let day = SECONDS_PER_DAY;
        let bad = ingest(
            &[s(0.0, "A-B", 2.0), s(10.8 * day, "A-B", 0.096)],
            600.0,
            Some(0.0),
            &[],
        )
        .unwrap();
        assert_eq!(detect_failure(&bad, 0.1), Some(1555.0 * 600.0));
        assert!((10.8 * day - 1555.0 * 600.0) < 600.0);
        let masked = ingest(
            &[
                s(0.0, "A-B", 2.0),
                s(650.0, "A-B", 0.01),
                s(1300.0, "A-B", 2.0),
            ],
            600.0,
            Some(0.0),
            &[MaskInterval {
                start: 620.0,
                end: 700.0,
                reason: "cryo".into(),
            }],
        )
        .unwrap();
        assert_eq!(masked.masked, vec![false, true, false]);
        assert_eq!(detect_failure(&masked, 0.1), None);
    }

    #[test]
    fn constant_trace_summary() {
        let users: Vec<User> = ["A", "B", "C"].iter().map(|u| User::local(*u)).collect();
        let mut samples = Vec::new();
        for b in 0..20 {
            for l in ["A-B", "A-C", "B-C"] {
                samples.push(s(b as f64 * 600.0, l, 3.0));
            }
        }
        let tr = ingest(&samples, 600.0, None, &[]).unwrap();
        let f = ScoreFunction::default();
        let sel = table_selectors(&users, &tr).unwrap();
        assert_eq!(sel.len(), 3 + 1 + 1);
        for mode in [
            FullPeriodMode::ScoringOfMeans,
            FullPeriodMode::MeanOfBinScores,
        ] {
            let sum = summarize(&tr, &users, &sel, &f, mode).unwrap();
            for row in &sum.rows {
                let full = row.full.rate().unwrap();
                assert!((full - 3.0).abs() < 1e-12);
                assert!((row.max.rate().unwrap() - 3.0).abs() < 1e-12);
                assert!((row.min.rate().unwrap() - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn post_failure_bins_are_excluded() {
        let users: Vec<User> = ["A", "B"].iter().map(|u| User::local(*u)).collect();
        let samples = vec![
            s(0.0, "A-B", 2.0),
            s(600.0, "A-B", 4.0),
            s(1200.0, "A-B", 0.05),
            s(1800.0, "A-B", 50.0),
        ];
        let tr = ingest(&samples, 600.0, None, &[]).unwrap();
        let f = ScoreFunction::default();
        let sel = vec![(RowGroup::Full, Selector::All)];
        let sum = summarize(&tr, &users, &sel, &f, FullPeriodMode::ScoringOfMeans).unwrap();
        assert_eq!(sum.failure_elapsed_s, Some(1200.0));
        assert_eq!(sum.window_bins, 2);
        assert!((sum.rows[0].max.rate().unwrap() - 4.0).abs() < 1e-9);
        assert!((sum.rows[0].full.rate().unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn empty_pre_failure_window_errors() {
        let users: Vec<User> = ["A", "B"].iter().map(|u| User::local(*u)).collect();
        let tr = ingest(&[s(0.0, "A-B", 0.01)], 600.0, None, &[]).unwrap();
        let sel = vec![(RowGroup::Full, Selector::All)];
        assert!(summarize(
            &tr,
            &users,
            &sel,
            &ScoreFunction::default(),
            FullPeriodMode::ScoringOfMeans
        )
        .is_err());
    }

    #[test]
    fn record_formats() {
        let json = "{\"timestamp\": 1.0, \"link\": \"A-B\", \"skr_bps\": 2.0}\nnot json\n{\"timestamp\": 2.0, \"link\": \"A-B\", \"skr_bps\": -1}\n";
        let r = parse_records(json);
        assert_eq!(r.samples.len(), 1);
        assert_eq!(r.rejected, 2);
        let csv = "timestamp,link,skr_bps\n1,A-B,2.5\n2,A-C,x\n3,B-C,1\n";
        let r = parse_records(csv);
        assert_eq!(r.samples.len(), 2);
        assert_eq!(r.rejected, 1);
        let r = parse_records("a,b\n1,2\n");
        assert!(r.samples.is_empty());
        assert!(r.rejected > 0);
    }

    #[test]
    fn mask_parsing() {
        let m = parse_mask(r#"[{"start": 0, "end": 10, "reason": "cryo"}]"#).unwrap();
        assert_eq!(m[0].reason, "cryo");
        assert!(parse_mask(r#"[{"start": 5, "end": 1}]"#).is_err());
        assert!(parse_mask("{").is_err());
    }

    #[test]
    fn series_csv_shape() {
        let users: Vec<User> = ["A", "B"].iter().map(|u| User::local(*u)).collect();
        let tr = ingest(
            &[s(0.0, "A-B", 2.0), s(600.0, "A-B", 2.0)],
            600.0,
            None,
            &[MaskInterval {
                start: 700.0,
                end: 800.0,
                reason: "cryo".into(),
            }],
        )
        .unwrap();
        let sel = vec![(RowGroup::Full, Selector::All)];
        let text = series_csv(&tr, &users, &sel, &ScoreFunction::default()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_start_s,elapsed_s,masked,Full Network");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].ends_with("cryo,"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn binning_is_idempotent(vals in prop::collection::vec(0.0f64..100.0, 1..200)) {
                let samples: Vec<SkrSample> = vals.iter().enumerate().map(|(i, v)| s(i as f64 * 97.0, "A-B", *v)).collect();
                let once = ingest(&samples, 600.0, Some(0.0), &[]).unwrap();
                let twice = ingest(&once.to_samples(), 600.0, Some(0.0), &[]).unwrap();
                prop_assert_eq!(once.links, twice.links);
            }

            #[test]
            fn larger_threshold_never_fails_later(vals in prop::collection::vec(0.0f64..1.0, 1..100), a in 0.0f64..1.0, b in 0.0f64..1.0) {
                let samples: Vec<SkrSample> = vals.iter().enumerate().map(|(i, v)| s(i as f64 * 600.0, "A-B", *v)).collect();
                let tr = ingest(&samples, 600.0, Some(0.0), &[]).unwrap();
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let t_lo = detect_failure(&tr, lo).unwrap_or(f64::INFINITY);
                let t_hi = detect_failure(&tr, hi).unwrap_or(f64::INFINITY);
                prop_assert!(t_hi <= t_lo);
            }
        }
    }
}
