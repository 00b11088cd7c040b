//! Per-link singles, coincidences, QBER and asymptotic BBM92 key rate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ConjugatePair, Grid, LogicalChannel};
use crate::topology::{find_user, served_links, Attachment, ChannelAssignment, Link, User};

pub fn db_to_transmission(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// How the 1-to-4 splitter attenuates each output port.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitterModel {
    /// Exactly one quarter of the light per port (6.02 dB).
    #[default]
    ExactQuarter,
    /// A literal 6.00 dB.
    Nominal6Db,
}

impl SplitterModel {
    pub fn transmission(self) -> f64 {
        match self {
            SplitterModel::ExactQuarter => 0.25,
            SplitterModel::Nominal6Db => db_to_transmission(6.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceModel {
    /// Pairs per second per conjugate pair at the source output, before splitting.
    pub pair_rate: f64,
    /// Optional per-pair brightness relative to `pair_rate`, keyed by `k`.
    pub relative_brightness: BTreeMap<u32, f64>,
}

impl Default for SourceModel {
    fn default() -> Self {
        SourceModel {
            pair_rate: 1e6,
            relative_brightness: BTreeMap::new(),
        }
    }
}

impl SourceModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.pair_rate >= 0.0 && self.pair_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "pair rate {}",
                self.pair_rate
            )));
        }
        if let Some((k, b)) = self
            .relative_brightness
            .iter()
            .find(|(_, b)| !(**b > 0.0 && b.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "relative brightness {b} for pair {k}"
            )));
        }
        Ok(())
    }

    pub fn rate(&self, pair: ConjugatePair) -> f64 {
        self.pair_rate
            * self
                .relative_brightness
                .get(&pair.0)
                .copied()
                .unwrap_or(1.0)
    }

    pub fn with_pair_rate(&self, pair_rate: f64) -> SourceModel {
        SourceModel {
            pair_rate,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverModel {
    pub detector_efficiency: f64,
    pub dark_count_rate: f64,
    pub internal_loss_db: f64,
    pub visibility: f64,
}

impl Default for ReceiverModel {
    fn default() -> Self {
        ReceiverModel {
            detector_efficiency: 1.0,
            dark_count_rate: 0.0,
            internal_loss_db: 0.0,
            visibility: 1.0,
        }
    }
}

impl ReceiverModel {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.detector_efficiency) {
            return Err(Error::InvalidParameter(format!(
                "detector efficiency {}",
                self.detector_efficiency
            )));
        }
        if !(self.dark_count_rate >= 0.0 && self.dark_count_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dark count rate {}",
                self.dark_count_rate
            )));
        }
        if !(self.internal_loss_db >= 0.0 && self.internal_loss_db.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "internal loss {}",
                self.internal_loss_db
            )));
        }
        if !unit(self.visibility) {
            return Err(Error::InvalidParameter(format!(
                "visibility {}",
                self.visibility
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolParams {
    pub sifting_factor: f64,
    pub ec_efficiency: f64,
    /// Coincidence window in seconds.
    pub coincidence_window: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            sifting_factor: 0.5,
            ec_efficiency: 1.1,
            coincidence_window: 5e-10,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sifting_factor > 0.0 && self.sifting_factor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sifting factor {}",
                self.sifting_factor
            )));
        }
        if !(self.ec_efficiency >= 1.0 && self.ec_efficiency.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "error-correction efficiency {}",
                self.ec_efficiency
            )));
        }
        if !(self.coincidence_window > 0.0 && self.coincidence_window.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coincidence window {}",
                self.coincidence_window
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRates {
    pub singles_a: f64,
    pub singles_b: f64,
    pub true_coincidences: f64,
    pub accidentals: f64,
    pub qber: f64,
    pub sifted_rate: f64,
    pub skr: f64,
}

/// Transmission from the source output to a click on `user`'s detector for one copy of `lc`.
pub fn channel_transmission(
    user: &User,
    lc: LogicalChannel,
    grid: &Grid,
    receiver: &ReceiverModel,
    splitter: SplitterModel,
) -> f64 {
    let split = if grid.is_split(lc) {
        splitter.transmission()
    } else {
        1.0
    };
    let fibre = match user.attachment {
        Attachment::Deployed => db_to_transmission(user.deployed_loss_db),
        Attachment::Local => 1.0,
    };
    split * fibre * db_to_transmission(receiver.internal_loss_db) * receiver.detector_efficiency
}

/// All parameters needed to turn an assignment into link rates.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub grid: Grid,
    pub splitter: SplitterModel,
    pub source: SourceModel,
    pub receivers: BTreeMap<String, ReceiverModel>,
    pub default_receiver: ReceiverModel,
    pub protocol: ProtocolParams,
}

impl NetworkModel {
    pub fn receiver(&self, user: &str) -> &ReceiverModel {
        self.receivers.get(user).unwrap_or(&self.default_receiver)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.source.validate()?;
        self.protocol.validate()?;
        self.default_receiver.validate()?;
        self.receivers
            .values()
            .try_for_each(ReceiverModel::validate)
    }

    pub fn transmission(&self, user: &User, lc: LogicalChannel) -> f64 {
        channel_transmission(user, lc, &self.grid, self.receiver(&user.id), self.splitter)
    }

    pub fn with_pair_rate(&self, pair_rate: f64) -> NetworkModel {
        NetworkModel {
            source: self.source.with_pair_rate(pair_rate),
            ..self.clone()
        }
    }
}

/// Detected counts per second on `user`'s detectors: every granted channel plus dark counts.
pub fn singles_rate(user: &User, assignment: &ChannelAssignment, model: &NetworkModel) -> f64 {
    let signal: f64 = assignment
        .grants
        .iter()
        .filter(|g| g.user == user.id)
        .filter_map(|g| {
            g.lc.pair()
                .map(|p| model.source.rate(p) * model.transmission(user, g.lc))
        })
        .sum();
    signal + model.receiver(&user.id).dark_count_rate
}

/// `(true coincidences, accidentals)` per second for one link.
pub fn coincidence_rates(
    users: &[User],
    link: &Link,
    assignment: &ChannelAssignment,
    model: &NetworkModel,
) -> Result<(f64, f64)> {
    let a = find_user(users, &link.a)?;
    let b = find_user(users, &link.b)?;
    let served = served_links(assignment);
    let pairs = served
        .links
        .get(link)
        .ok_or_else(|| Error::UnservedLink(link.a.clone(), link.b.clone()))?;
    let mut truec = 0.0;
    for pair in pairs {
        let mu = model.source.rate(*pair);
        for (x, y) in [(pair.plus(), pair.minus()), (pair.minus(), pair.plus())] {
            if assignment.holds(&a.id, x) && assignment.holds(&b.id, y) {
                truec += mu * model.transmission(a, x) * model.transmission(b, y);
            }
        }
    }
    let acc = singles_rate(a, assignment, model)
        * singles_rate(b, assignment, model)
        * model.protocol.coincidence_window;
    Ok((truec, acc))
}

pub fn visibility_to_qber(v: f64) -> f64 {
    (1.0 - v) / 2.0
}

/// Intrinsic error of a link from both users' visibilities; the correlations
/// contrast of the pair is the product of the two receivers' contrasts.
pub fn link_intrinsic_error(va: f64, vb: f64) -> f64 {
    visibility_to_qber(va * vb)
}

pub fn link_qber(true_c: f64, accidentals: f64, intrinsic_error: f64) -> Result<f64> {
    let total = true_c + accidentals;
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::UndefinedQber);
    }
    Ok((intrinsic_error * true_c + 0.5 * accidentals) / total)
}

pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    -q * q.log2() - (1.0 - q) * (1.0 - q).log2()
}

/// Asymptotic BBM92 key rate with error-correction inefficiency.
pub fn bbm92_skr(true_c: f64, accidentals: f64, qber: f64, params: &ProtocolParams) -> f64 {
    let sifted = params.sifting_factor * (true_c + accidentals);
    if qber >= 0.5 {
        return 0.0;
    }
    let h = binary_entropy(qber);
    let fraction = 1.0 - params.ec_efficiency * h - h;
    sifted * fraction.max(0.0)
}

pub fn link_rates(
    users: &[User],
    link: &Link,
    assignment: &ChannelAssignment,
    model: &NetworkModel,
) -> Result<LinkRates> {
    let a = find_user(users, &link.a)?;
    let b = find_user(users, &link.b)?;
    let (truec, acc) = coincidence_rates(users, link, assignment, model)?;
    let intrinsic = link_intrinsic_error(
        model.receiver(&a.id).visibility,
        model.receiver(&b.id).visibility,
    );
    let (qber, sifted, skr) = match link_qber(truec, acc, intrinsic) {
        Ok(q) => (
            q,
            model.protocol.sifting_factor * (truec + acc),
            bbm92_skr(truec, acc, q, &model.protocol),
        ),
        Err(_) => (0.5, 0.0, 0.0),
    };
    Ok(LinkRates {
        singles_a: singles_rate(a, assignment, model),
        singles_b: singles_rate(b, assignment, model),
        true_coincidences: truec,
        accidentals: acc,
        qber,
        sifted_rate: sifted,
        skr,
    })
}

/// Rates for every pair of `users`, in user order. Unserved pairs are an error.
pub fn network_rates(
    users: &[User],
    assignment: &ChannelAssignment,
    model: &NetworkModel,
) -> Result<Vec<(Link, LinkRates)>> {
    crate::topology::all_links(users)
        .into_iter()
        .map(|l| link_rates(users, &l, assignment, model).map(|r| (l, r)))
        .collect()
}

pub fn rates_csv(rates: &[(Link, LinkRates)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "link",
        "singles_a",
        "singles_b",
        "true_coincidences",
        "accidentals",
        "qber",
        "sifted_rate",
        "skr_bps",
    ])
    .expect("in-memory write");
    for (l, r) in rates {
        w.write_record([
            l.to_string(),
            r.singles_a.to_string(),
            r.singles_b.to_string(),
            r.true_coincidences.to_string(),
            r.accidentals.to_string(),
            r.qber.to_string(),
            r.sifted_rate.to_string(),
            r.skr.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Grant;

    fn ideal_model() -> NetworkModel {
        NetworkModel {
            grid: Grid::default(),
            splitter: SplitterModel::ExactQuarter,
            source: SourceModel::default(),
            receivers: BTreeMap::new(),
            default_receiver: ReceiverModel::default(),
            protocol: ProtocolParams::default(),
        }
    }

    fn grant(user: &str, lc: i32, port: u8) -> Grant {
        Grant {
            user: user.into(),
            lc: LogicalChannel(lc),
            port,
        }
    }

    #[test]
    fn transmissions() {
        let g = Grid::default();
        let rx = ReceiverModel::default();
        let u = User::local("u");
        let t = channel_transmission(&u, LogicalChannel(7), &g, &rx, SplitterModel::Nominal6Db);
        assert!((t - 0.251_188_643).abs() < 1e-8);
        assert_eq!(
            channel_transmission(&u, LogicalChannel(2), &g, &rx, SplitterModel::ExactQuarter),
            1.0
        );
        let alice = User::deployed_bounce_back("Alice", 1.45);
        let t = channel_transmission(
            &alice,
            LogicalChannel(2),
            &g,
            &rx,
            SplitterModel::ExactQuarter,
        );
        assert!((t - 0.846_252_57).abs() < 1e-8, "{t}");
        assert!((t - 10f64.powf(-0.0725)).abs() < 1e-15);
    }

    #[test]
    fn singles() {
        let mut m = ideal_model();
        m.default_receiver.dark_count_rate = 100.0;
        let u = User::local("u");
        assert_eq!(singles_rate(&u, &ChannelAssignment::default(), &m), 100.0);

        m.default_receiver.dark_count_rate = 0.0;
        m.default_receiver.detector_efficiency = 0.5;
        let a = ChannelAssignment {
            grants: vec![grant("u", 2, 0)],
        };
        assert_eq!(singles_rate(&u, &a, &m), 5e5);

        m.default_receiver.detector_efficiency = 1.0;
        m.splitter = SplitterModel::Nominal6Db;
        let a = ChannelAssignment {
            grants: vec![grant("u", 9, 0)],
        };
        assert!((singles_rate(&u, &a, &m) - 2.511_886e5).abs() < 1.0);
    }

    #[test]
    fn coincidences_product_form() {
        let mut m = ideal_model();
        m.default_receiver.detector_efficiency = 0.01;
        let users = vec![User::local("a"), User::local("b")];
        let a = ChannelAssignment {
            grants: vec![grant("a", 1, 0), grant("b", -1, 0)],
        };
        let (t, acc) = coincidence_rates(&users, &Link::new("a", "b"), &a, &m).unwrap();
        assert!((t - 100.0).abs() < 1e-9);
        assert!((acc - 1e4 * 1e4 * 5e-10).abs() < 1e-12);
    }

    #[test]
    fn accidentals_from_singles() {
        let p = ProtocolParams::default();
        assert!((4.5e5f64 * 4.5e5 * p.coincidence_window - 101.25).abs() < 1e-9);
    }

    #[test]
    fn split_link_is_one_sixteenth() {
        let m = ideal_model();
        let users = vec![User::local("a"), User::local("b")];
        let link = Link::new("a", "b");
        let unsplit = ChannelAssignment {
            grants: vec![grant("a", 2, 0), grant("b", -2, 0)],
        };
        let split = ChannelAssignment {
            grants: vec![grant("a", 7, 0), grant("b", -7, 0)],
        };
        let (tu, _) = coincidence_rates(&users, &link, &unsplit, &m).unwrap();
        let (ts, _) = coincidence_rates(&users, &link, &split, &m).unwrap();
        assert_eq!(ts / tu, 1.0 / 16.0);
    }

    #[test]
    fn unserved_link_errors() {
        let m = ideal_model();
        let users = vec![User::local("a"), User::local("b")];
        let a = ChannelAssignment {
            grants: vec![grant("a", 2, 0), grant("b", 2, 0)],
        };
        assert!(matches!(
            coincidence_rates(&users, &Link::new("a", "b"), &a, &m),
            Err(Error::UnservedLink(..))
        ));
    }

    #[test]
    fn qber_conversions() {
        assert_eq!(visibility_to_qber(1.0), 0.0);
        assert!((visibility_to_qber(0.99505) - 0.002475).abs() < 1e-12);
        assert_eq!(visibility_to_qber(0.0), 0.5);
        assert_eq!(link_qber(100.0, 0.0, 0.01).unwrap(), 0.01);
        assert_eq!(link_qber(0.0, 10.0, 0.01).unwrap(), 0.5);
        assert_eq!(link_qber(100.0, 100.0, 0.0).unwrap(), 0.25);
        assert_eq!(link_qber(0.0, 0.0, 0.0), Err(Error::UndefinedQber));
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89, evaluated independently
        let expected =
            0.11 * (1.0f64 / 0.11).ln() / 2f64.ln() + 0.89 * (1.0f64 / 0.89).ln() / 2f64.ln();
        assert!((binary_entropy(0.11) - expected).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.499_916).abs() < 1e-6);
    }

    #[test]
    fn key_rate() {
        let unit = ProtocolParams {
            ec_efficiency: 1.0,
            sifting_factor: 0.5,
            ..ProtocolParams::default()
        };
        assert_eq!(bbm92_skr(200.0, 0.0, 0.0, &unit), 100.0);
        assert_eq!(bbm92_skr(200.0, 0.0, 0.5, &unit), 0.0);
        assert_eq!(bbm92_skr(200.0, 0.0, 0.7, &unit), 0.0);
        assert_eq!(bbm92_skr(200.0, 0.0, 0.2, &unit), 0.0);
    }

    #[test]
    fn parameter_validation() {
        assert!(ReceiverModel {
            detector_efficiency: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ReceiverModel {
            visibility: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ProtocolParams {
            coincidence_window: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ProtocolParams {
            ec_efficiency: 0.9,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SourceModel {
            pair_rate: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
