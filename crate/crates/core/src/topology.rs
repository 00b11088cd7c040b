//! Users, channel grants and the link structure they induce.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ConjugatePair, Grid, LogicalChannel};

pub mod solver;

pub use solver::{solve_assignment, Objective, SolveOptions, SolveOutcome};

/// Ports on a split channel.
pub const SPLIT_FANOUT: u8 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attachment {
    Deployed,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub id: String,
    pub attachment: Attachment,
    /// One-way fibre loss; zero for local users.
    pub deployed_loss_db: f64,
}

impl User {
    pub fn local(id: impl Into<String>) -> Self {
        User {
            id: id.into(),
            attachment: Attachment::Local,
            deployed_loss_db: 0.0,
        }
    }

    /// A deployed user characterised by a round-trip (bounce-back) loss.
    /// The stored one-way loss is half of it.
    pub fn deployed_bounce_back(id: impl Into<String>, bounce_back_db: f64) -> Self {
        User {
            id: id.into(),
            attachment: Attachment::Deployed,
            deployed_loss_db: bounce_back_db / 2.0,
        }
    }
}

pub fn validate_users(users: &[User]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for u in users {
        if u.id.is_empty() || u.id.contains(['-', ',', ' ']) {
            return Err(Error::InvalidParameter(format!(
                "user id `{}` must be non-empty without '-', ',' or spaces",
                u.id
            )));
        }
        if !seen.insert(u.id.as_str()) {
            return Err(Error::DuplicateUser(u.id.clone()));
        }
        if !(u.deployed_loss_db >= 0.0 && u.deployed_loss_db.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "user `{}` has invalid loss {}",
                u.id, u.deployed_loss_db
            )));
        }
        if u.attachment == Attachment::Local && u.deployed_loss_db != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "local user `{}` cannot carry a deployed-fibre loss",
                u.id
            )));
        }
    }
    Ok(())
}

/// One copy of a logical channel delivered to a user through a port.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grant {
    pub user: String,
    pub lc: LogicalChannel,
    pub port: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelAssignment {
    pub grants: Vec<Grant>,
}

impl ChannelAssignment {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("assignment serialises")
    }

    /// Port capacity of a channel under `grid`'s splitter rule.
    pub fn capacity(grid: &Grid, lc: LogicalChannel) -> u8 {
        if grid.is_split(lc) {
            SPLIT_FANOUT
        } else {
            1
        }
    }

    /// Checks every structural invariant against the grid.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let mut ports = BTreeSet::new();
        let mut copies = BTreeSet::new();
        for g in &self.grants {
            if g.lc.0 == 0 {
                return Err(Error::InvalidAssignment("LC 0 cannot be granted".into()));
            }
            grid.conjugate(g.lc)
                .map_err(|e| Error::InvalidAssignment(format!("{}: {e}", g.lc)))?;
            let cap = Self::capacity(grid, g.lc);
            if g.port >= cap {
                return Err(Error::InvalidAssignment(format!(
                    "port {} on LC {} exceeds capacity {cap}",
                    g.port, g.lc
                )));
            }
            if !ports.insert((g.lc, g.port)) {
                return Err(Error::InvalidAssignment(format!(
                    "port {} on LC {} granted twice",
                    g.port, g.lc
                )));
            }
            if !copies.insert((g.user.as_str(), g.lc)) {
                return Err(Error::InvalidAssignment(format!(
                    "user `{}` holds two copies of LC {}",
                    g.user, g.lc
                )));
            }
        }
        Ok(())
    }

    pub fn validate_users(&self, users: &[User]) -> Result<()> {
        let known: BTreeSet<&str> = users.iter().map(|u| u.id.as_str()).collect();
        match self
            .grants
            .iter()
            .find(|g| !known.contains(g.user.as_str()))
        {
            Some(g) => Err(Error::UnknownUser(g.user.clone())),
            None => Ok(()),
        }
    }

    /// Channels held by each user.
    pub fn channels_by_user(&self) -> BTreeMap<&str, BTreeSet<LogicalChannel>> {
        let mut map: BTreeMap<&str, BTreeSet<LogicalChannel>> = BTreeMap::new();
        for g in &self.grants {
            map.entry(g.user.as_str()).or_default().insert(g.lc);
        }
        map
    }

    pub fn holds(&self, user: &str, lc: LogicalChannel) -> bool {
        self.grants.iter().any(|g| g.user == user && g.lc == lc)
    }

    pub fn pairs_used(&self) -> BTreeSet<ConjugatePair> {
        self.grants.iter().filter_map(|g| g.lc.pair()).collect()
    }

    /// The assignment restricted to the given users.
    pub fn restricted_to(&self, users: &[User]) -> ChannelAssignment {
        let keep: BTreeSet<&str> = users.iter().map(|u| u.id.as_str()).collect();
        ChannelAssignment {
            grants: self
                .grants
                .iter()
                .filter(|g| keep.contains(g.user.as_str()))
                .cloned()
                .collect(),
        }
    }

    /// Human-readable user/channel table.
    pub fn table(&self, users: &[User]) -> String {
        let by_user = self.channels_by_user();
        let width = users.iter().map(|u| u.id.len()).max().unwrap_or(4).max(4);
        let mut out = format!("{:<width$}  {:<8}  channels\n", "user", "fibre");
        for u in users {
            let chans: Vec<String> = by_user
                .get(u.id.as_str())
                .map(|s| s.iter().map(|lc| format!("LC{lc}")).collect())
                .unwrap_or_default();
            let fibre = match u.attachment {
                Attachment::Deployed => "deployed",
                Attachment::Local => "local",
            };
            out.push_str(&format!(
                "{:<width$}  {:<8}  {}\n",
                u.id,
                fibre,
                chans.join(" ")
            ));
        }
        out
    }
}

/// An unordered user pair, stored with the lexicographically smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub a: String,
    pub b: String,
}

impl Link {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        let (x, y) = (x.into(), y.into());
        if x <= y {
            Link { a: x, b: y }
        } else {
            Link { a: y, b: x }
        }
    }

    /// Parses `"A-B"` (either order).
    pub fn parse(id: &str) -> Result<Self> {
        let mut parts = id.trim().split('-');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() && a != b => {
                Ok(Link::new(a, b))
            }
            _ => Err(Error::Parse(format!(
                "bad link id `{id}`, expected `userA-userB`"
            ))),
        }
    }

    pub fn involves(&self, user: &str) -> bool {
        self.a == user || self.b == user
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Served links and the conjugate pairs serving each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkSet {
    pub links: BTreeMap<Link, BTreeSet<ConjugatePair>>,
}

impl LinkSet {
    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, link: &Link) -> bool {
        self.links.contains_key(link)
    }

    /// Number of links a given pair serves.
    pub fn served_by(&self, pair: ConjugatePair) -> usize {
        self.links.values().filter(|s| s.contains(&pair)).count()
    }
}

pub fn served_links(assignment: &ChannelAssignment) -> LinkSet {
    let mut plus: BTreeMap<ConjugatePair, BTreeSet<&str>> = BTreeMap::new();
    let mut minus: BTreeMap<ConjugatePair, BTreeSet<&str>> = BTreeMap::new();
    for g in &assignment.grants {
        let Some(pair) = g.lc.pair() else { continue };
        let side = if g.lc.0 > 0 { &mut plus } else { &mut minus };
        side.entry(pair).or_default().insert(g.user.as_str());
    }
    let mut set = LinkSet::default();
    for (pair, ps) in &plus {
        let Some(ms) = minus.get(pair) else { continue };
        for p in ps {
            for m in ms {
                if p != m {
                    set.links
                        .entry(Link::new(*p, *m))
                        .or_default()
                        .insert(*pair);
                }
            }
        }
    }
    set
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshReport {
    pub users: usize,
    pub required: usize,
    pub covered: usize,
    pub missing: Vec<Link>,
    pub channels_per_user: BTreeMap<String, usize>,
    pub pairs_used: usize,
    pub pass: bool,
}

impl MeshReport {
    pub fn max_channels_per_user(&self) -> usize {
        self.channels_per_user.values().copied().max().unwrap_or(0)
    }
}

pub fn verify_full_mesh(assignment: &ChannelAssignment, users: &[User]) -> MeshReport {
    let served = served_links(assignment);
    let mut missing = Vec::new();
    let mut covered = 0;
    for (i, u) in users.iter().enumerate() {
        for v in &users[i + 1..] {
            let link = Link::new(u.id.as_str(), v.id.as_str());
            if served.contains(&link) {
                covered += 1;
            } else {
                missing.push(link);
            }
        }
    }
    let by_user = assignment.channels_by_user();
    let channels_per_user = users
        .iter()
        .map(|u| {
            (
                u.id.clone(),
                by_user.get(u.id.as_str()).map_or(0, |s| s.len()),
            )
        })
        .collect();
    let n = users.len();
    MeshReport {
        users: n,
        required: n * n.saturating_sub(1) / 2,
        covered,
        pass: missing.is_empty() && n >= 2,
        missing,
        channels_per_user,
        pairs_used: assignment.pairs_used().len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "D-D")]
    DeployedDeployed,
    #[serde(rename = "D-L")]
    DeployedLocal,
    #[serde(rename = "L-L")]
    LocalLocal,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [
        Scenario::LocalLocal,
        Scenario::DeployedLocal,
        Scenario::DeployedDeployed,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scenario::DeployedDeployed => "D-D",
            Scenario::DeployedLocal => "D-L",
            Scenario::LocalLocal => "L-L",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn find_user<'a>(users: &'a [User], id: &str) -> Result<&'a User> {
    users
        .iter()
        .find(|u| u.id == id)
        .ok_or_else(|| Error::UnknownUser(id.to_string()))
}

pub fn scenario_of(users: &[User], link: &Link) -> Result<Scenario> {
    let a = find_user(users, &link.a)?.attachment;
    let b = find_user(users, &link.b)?.attachment;
    Ok(match (a, b) {
        (Attachment::Deployed, Attachment::Deployed) => Scenario::DeployedDeployed,
        (Attachment::Local, Attachment::Local) => Scenario::LocalLocal,
        _ => Scenario::DeployedLocal,
    })
}

/// All unordered pairs of `users`, in user order.
pub fn all_links(users: &[User]) -> Vec<Link> {
    let mut out = Vec::new();
    for (i, u) in users.iter().enumerate() {
        for v in &users[i + 1..] {
            out.push(Link::new(u.id.as_str(), v.id.as_str()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grant(user: &str, lc: i32, port: u8) -> Grant {
        Grant {
            user: user.into(),
            lc: LogicalChannel(lc),
            port,
        }
    }

    #[test]
    fn conjugate_holders_are_linked() {
        let a = ChannelAssignment {
            grants: vec![grant("u", 7, 0), grant("v", -7, 0)],
        };
        let s = served_links(&a);
        assert_eq!(s.len(), 1);
        assert!(s.links[&Link::new("u", "v")].contains(&ConjugatePair(7)));
    }

    #[test]
    fn same_side_copies_do_not_link() {
        let a = ChannelAssignment {
            grants: vec![grant("u", 7, 0), grant("v", 7, 1)],
        };
        assert!(served_links(&a).is_empty());
    }

    #[test]
    fn split_pair_serves_sixteen() {
        let mut grants = Vec::new();
        for (p, u) in ["a", "b", "c", "d"].iter().enumerate() {
            grants.push(grant(u, 7, p as u8));
        }
        for (p, u) in ["e", "f", "g", "h"].iter().enumerate() {
            grants.push(grant(u, -7, p as u8));
        }
        let a = ChannelAssignment { grants };
        a.validate(&Grid::default()).unwrap();
        let s = served_links(&a);
        assert_eq!(s.len(), 16);
        assert_eq!(s.served_by(ConjugatePair(7)), 16);
    }

    #[test]
    fn self_pairing_gives_no_link() {
        let a = ChannelAssignment {
            grants: vec![grant("u", 7, 0), grant("u", -7, 0)],
        };
        a.validate(&Grid::default()).unwrap();
        assert!(served_links(&a).is_empty());
    }

    #[test]
    fn assignment_invariants() {
        let g = Grid::default();
        let bad_port = ChannelAssignment {
            grants: vec![grant("u", 2, 1)],
        };
        assert!(bad_port.validate(&g).is_err());
        let double_book = ChannelAssignment {
            grants: vec![grant("u", 8, 1), grant("v", 8, 1)],
        };
        assert!(double_book.validate(&g).is_err());
        let two_copies = ChannelAssignment {
            grants: vec![grant("u", 8, 0), grant("u", 8, 1)],
        };
        assert!(two_copies.validate(&g).is_err());
        let centre = ChannelAssignment {
            grants: vec![grant("u", 0, 0)],
        };
        assert!(centre.validate(&g).is_err());
        let off_grid = ChannelAssignment {
            grants: vec![grant("u", 16, 0)],
        };
        assert!(off_grid.validate(&g).is_err());
    }

    #[test]
    fn mesh_verification() {
        let users = vec![User::local("u"), User::local("v")];
        let a = ChannelAssignment {
            grants: vec![grant("u", 1, 0), grant("v", -1, 0)],
        };
        let r = verify_full_mesh(&a, &users);
        assert!(r.pass);
        assert_eq!((r.covered, r.required), (1, 1));

        let twelve: Vec<User> = (0..12).map(|i| User::local(format!("U{i:02}"))).collect();
        let r = verify_full_mesh(&ChannelAssignment::default(), &twelve);
        assert!(!r.pass);
        assert_eq!((r.covered, r.required, r.missing.len()), (0, 66, 66));
    }

    #[test]
    fn scenarios() {
        let users = vec![
            User::deployed_bounce_back("Alice", 1.45),
            User::deployed_bounce_back("Bob", 1.8),
            User::local("Faye"),
            User::local("Gopi"),
        ];
        assert_eq!(users[0].deployed_loss_db, 0.725);
        let s = |a: &str, b: &str| scenario_of(&users, &Link::new(a, b)).unwrap();
        assert_eq!(s("Alice", "Bob"), Scenario::DeployedDeployed);
        assert_eq!(s("Alice", "Faye"), Scenario::DeployedLocal);
        assert_eq!(s("Faye", "Gopi"), Scenario::LocalLocal);
        assert!(matches!(
            scenario_of(&users, &Link::new("Alice", "Zed")),
            Err(Error::UnknownUser(_))
        ));
    }

    #[test]
    fn link_ids() {
        assert_eq!(Link::parse("Bob-Alice").unwrap(), Link::new("Alice", "Bob"));
        assert_eq!(Link::new("Alice", "Bob").to_string(), "Alice-Bob");
        assert!(Link::parse("Alice").is_err());
        assert!(Link::parse("Alice-Alice").is_err());
        assert!(Link::parse("a-b-c").is_err());
    }

    #[test]
    fn user_validation() {
        assert!(validate_users(&[User::local("a"), User::local("a")]).is_err());
        assert!(validate_users(&[User::local("a-b")]).is_err());
        assert!(validate_users(&[User::deployed_bounce_back("a", -1.0)]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_assignment() -> impl Strategy<Value = Vec<(u8, i32)>> {
            prop::collection::vec((0u8..6, -8i32..=8), 0..24)
        }

        proptest! {
            #[test]
            fn adding_a_grant_never_removes_links(raw in arb_assignment(), extra in (0u8..6, -8i32..=8)) {
                let mut a = ChannelAssignment::default();
                for (u, lc) in &raw {
                    if *lc != 0 {
                        a.grants.push(grant(&format!("u{u}"), *lc, 0));
                    }
                }
                let before = served_links(&a);
                if extra.1 != 0 {
                    a.grants.push(grant(&format!("u{}", extra.0), extra.1, 0));
                }
                let after = served_links(&a);
                for l in before.links.keys() {
                    prop_assert!(after.contains(l));
                }
            }
        }
    }
}
