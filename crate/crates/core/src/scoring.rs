//! Link scores, the geometric-mean network score and its inverse (AE-SKR).
//!
//! A link's secret-key rate maps through a piecewise interpolation `f` onto
//! a score in `[0, 1]`; rates below the failure threshold score zero. The
//! network score is the geometric mean of link scores and the AE-SKR is
//! `f⁻¹` of that score, so one failed link fails the whole network.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::topology::{scenario_of, Link, Scenario, User};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Straight segments in log10(SKR).
    #[default]
    LogLinear,
    /// Straight segments in SKR.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreFunction {
    /// `(skr, score)` knots, strictly increasing in both.
    pub breakpoints: Vec<(f64, f64)>,
    pub fail_threshold: f64,
    pub interpolation: Interpolation,
}

impl Default for ScoreFunction {
    fn default() -> Self {
        ScoreFunction {
            breakpoints: vec![
                (0.1, 0.25),
                (1.0, 0.75),
                (5.0, 0.875),
                (10.0, 0.925),
                (1e12, 1.0),
            ],
            fail_threshold: 0.1,
            interpolation: Interpolation::LogLinear,
        }
    }
}

/// Average-effective secret-key rate; `Failed` when any link scores zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aeskr {
    Rate(f64),
    Failed,
}

impl Aeskr {
    pub fn rate(self) -> Option<f64> {
        match self {
            Aeskr::Rate(r) => Some(r),
            Aeskr::Failed => None,
        }
    }

    pub fn is_failed(self) -> bool {
        matches!(self, Aeskr::Failed)
    }
}

impl fmt::Display for Aeskr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aeskr::Rate(r) => write!(f, "{r}"),
            Aeskr::Failed => f.write_str("FAILED"),
        }
    }
}

impl Serialize for Aeskr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Aeskr::Rate(r) => s.serialize_f64(*r),
            Aeskr::Failed => s.serialize_str("FAILED"),
        }
    }
}

impl<'de> Deserialize<'de> for Aeskr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(r) => Ok(Aeskr::Rate(r)),
            Raw::Text(t) if t == "FAILED" => Ok(Aeskr::Failed),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected number or FAILED, got `{t}`"
            ))),
        }
    }
}

impl ScoreFunction {
    pub fn validate(&self) -> Result<()> {
        let bp = &self.breakpoints;
        if bp.len() < 2 {
            return Err(Error::InvalidParameter(
                "score function needs at least two breakpoints".into(),
            ));
        }
        for &(x, y) in bp {
            if !(x > 0.0 && x.is_finite()) || !(0.0..=1.0).contains(&y) {
                return Err(Error::InvalidParameter(format!(
                    "bad breakpoint ({x}, {y})"
                )));
            }
        }
        if bp.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
            return Err(Error::InvalidParameter(
                "breakpoints must strictly increase in both coordinates".into(),
            ));
        }
        if !(self.fail_threshold >= 0.0 && self.fail_threshold <= bp[0].0) {
            return Err(Error::InvalidParameter(format!(
                "fail threshold {} must lie in [0, {}]",
                self.fail_threshold, bp[0].0
            )));
        }
        if bp[0].1 <= 0.0 {
            return Err(Error::InvalidParameter(
                "first breakpoint score must be positive".into(),
            ));
        }
        Ok(())
    }

    fn coord(&self, r: f64) -> f64 {
        match self.interpolation {
            Interpolation::LogLinear => r.log10(),
            Interpolation::Linear => r,
        }
    }

    fn uncoord(&self, c: f64) -> f64 {
        match self.interpolation {
            Interpolation::LogLinear => 10f64.powf(c),
            Interpolation::Linear => c,
        }
    }

    /// Score of a single link.
    pub fn score(&self, skr: f64) -> Result<f64> {
        if skr.is_nan() || skr < 0.0 {
            return Err(Error::Domain(format!("negative or NaN SKR {skr}")));
        }
        let bp = &self.breakpoints;
        if skr < self.fail_threshold {
            return Ok(0.0);
        }
        if skr <= bp[0].0 {
            return Ok(bp[0].1);
        }
        let last = bp[bp.len() - 1];
        if skr >= last.0 {
            return Ok(last.1);
        }
        let i = bp.partition_point(|&(x, _)| x < skr);
        let ((x0, y0), (x1, y1)) = (bp[i - 1], bp[i]);
        if skr == x1 {
            return Ok(y1);
        }
        let (c0, c1) = (self.coord(x0), self.coord(x1));
        let t = (self.coord(skr) - c0) / (c1 - c0);
        Ok(y0 * (1.0 - t) + y1 * t)
    }

    /// Geometric mean of the link scores.
    pub fn network_score(&self, skrs: &[f64]) -> Result<f64> {
        if skrs.is_empty() {
            return Err(Error::Domain("network score of zero links".into()));
        }
        let scores = skrs
            .iter()
            .map(|&r| self.score(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(geometric_mean(&scores))
    }

    /// Inverse of the score function applied to a network score.
    pub fn aeskr(&self, w: f64) -> Result<Aeskr> {
        let bp = &self.breakpoints;
        if w == 0.0 {
            return Ok(Aeskr::Failed);
        }
        let (first, last) = (bp[0], bp[bp.len() - 1]);
        if !(w >= first.1 && w <= 1.0) {
            return Err(Error::UnreachableScore(w));
        }
        if w >= last.1 {
            return Ok(Aeskr::Rate(last.0));
        }
        let i = bp.partition_point(|&(_, y)| y < w);
        if bp[i].1 == w {
            return Ok(Aeskr::Rate(bp[i].0));
        }
        let ((x0, y0), (x1, y1)) = (bp[i - 1], bp[i]);
        let t = (w - y0) / (y1 - y0);
        let (c0, c1) = (self.coord(x0), self.coord(x1));
        Ok(Aeskr::Rate(self.uncoord(c0 * (1.0 - t) + c1 * t)))
    }

    pub fn aeskr_of(&self, skrs: &[f64]) -> Result<Aeskr> {
        self.aeskr(self.network_score(skrs)?)
    }

    pub fn report(
        &self,
        label: impl Into<String>,
        entries: &[(String, f64)],
    ) -> Result<ScoreReport> {
        let links = entries
            .iter()
            .map(|(id, skr)| {
                Ok(LinkScore {
                    link: id.clone(),
                    skr: *skr,
                    score: self.score(*skr)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let skrs: Vec<f64> = entries.iter().map(|(_, r)| *r).collect();
        let w = self.network_score(&skrs)?;
        Ok(ScoreReport {
            label: label.into(),
            w,
            aeskr: self.aeskr(w)?,
            links,
        })
    }

    /// Report over the links matched by `selector`.
    pub fn subgroup_report(
        &self,
        users: &[User],
        entries: &[(Link, f64)],
        selector: &Selector,
    ) -> Result<ScoreReport> {
        let mut picked = Vec::new();
        for (link, skr) in entries {
            if selector.matches(users, link)? {
                picked.push((link.to_string(), *skr));
            }
        }
        if picked.is_empty() {
            return Err(Error::Domain(format!(
                "selector {selector} matches no links"
            )));
        }
        self.report(selector.to_string(), &picked)
    }

    /// Rows shaped like a per-user / per-scenario / full-network table.
    /// Empty scenario groups are omitted.
    pub fn breakdown(&self, users: &[User], entries: &[(Link, f64)]) -> Result<Breakdown> {
        let mut per_user = Vec::new();
        for u in users {
            if entries.iter().any(|(l, _)| l.involves(&u.id)) {
                per_user.push(self.subgroup_report(
                    users,
                    entries,
                    &Selector::User(u.id.clone()),
                )?);
            }
        }
        let mut per_scenario = Vec::new();
        for s in Scenario::ALL {
            match self.subgroup_report(users, entries, &Selector::Scenario(s)) {
                Ok(r) => per_scenario.push(r),
                Err(Error::Domain(_)) => {}
                Err(e) => return Err(e),
            }
        }
        let full = self.subgroup_report(users, entries, &Selector::All)?;
        Ok(Breakdown {
            per_user,
            per_scenario,
            full,
        })
    }
}

/// Geometric mean; exact for equal inputs and zero if any input is zero.
pub fn geometric_mean(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 0.0;
    };
    if values.iter().all(|&v| v == first) {
        return first;
    }
    if values.contains(&0.0) {
        return 0.0;
    }
    let mean_ln = values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64;
    mean_ln.exp()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    All,
    User(String),
    Scenario(Scenario),
}

impl Selector {
    pub fn matches(&self, users: &[User], link: &Link) -> Result<bool> {
        Ok(match self {
            Selector::All => true,
            Selector::User(u) => link.involves(u),
            Selector::Scenario(s) => scenario_of(users, link)? == *s,
        })
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => f.write_str("Full Network"),
            Selector::User(u) => f.write_str(u),
            Selector::Scenario(s) => f.write_str(s.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkScore {
    pub link: String,
    pub skr: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub label: String,
    pub w: f64,
    pub aeskr: Aeskr,
    pub links: Vec<LinkScore>,
}

impl ScoreReport {
    pub fn links_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["link", "skr_bps", "score"])
            .expect("in-memory write");
        for l in &self.links {
            w.write_record([l.link.clone(), l.skr.to_string(), l.score.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub per_user: Vec<ScoreReport>,
    pub per_scenario: Vec<ScoreReport>,
    pub full: ScoreReport,
}

/// Parses a list of link rates: one `skr` or `link,skr` per line, optional
/// header, `#` comments. Bare values get ids `L1`, `L2`, ... A header naming
/// `skr_bps` (or `skr`) selects that column and `link` if present, so rate
/// and score tables read back directly.
pub fn parse_skr_list(text: &str) -> Result<Vec<(String, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut columns: Option<(Option<usize>, usize)> = None;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if out.is_empty() && columns.is_none() {
            let names: Vec<&str> = record.iter().collect();
            let skr = names
                .iter()
                .position(|n| *n == "skr_bps")
                .or_else(|| names.iter().position(|n| *n == "skr"));
            if let Some(skr) = skr {
                columns = Some((names.iter().position(|n| *n == "link"), skr));
                continue;
            }
        }
        let (id, value) = match columns {
            Some((link, skr)) => {
                let value = record
                    .get(skr)
                    .ok_or_else(|| Error::Parse(format!("line {}: missing SKR column", row + 1)))?;
                (
                    link.and_then(|l| record.get(l)).filter(|s| !s.is_empty()),
                    value,
                )
            }
            None => {
                let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
                match fields.as_slice() {
                    [] => continue,
                    [v] => (None, *v),
                    [id, v] => (Some(*id), *v),
                    _ => {
                        return Err(Error::Parse(format!(
                            "line {}: expected `skr` or `link,skr`",
                            row + 1
                        )))
                    }
                }
            }
        };
        let skr: f64 = match value.parse() {
            Ok(v) => v,
            Err(_) if out.is_empty() && row == 0 => continue,
            Err(_) => {
                return Err(Error::Parse(format!(
                    "line {}: `{value}` is not a number",
                    row + 1
                )))
            }
        };
        if !(skr >= 0.0 && skr.is_finite()) {
            return Err(Error::Parse(format!(
                "line {}: SKR must be finite and non-negative",
                row + 1
            )));
        }
        let id = id.map_or_else(|| format!("L{}", out.len() + 1), str::to_string);
        out.push((id, skr));
    }
    if out.is_empty() {
        return Err(Error::Parse("no SKR values".into()));
    }
    Ok(out)
}
