//! JSON network configuration shared by every command.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ConjugatePair, Grid, LogicalChannel};
use crate::phys::{NetworkModel, ProtocolParams, ReceiverModel, SourceModel, SplitterModel};
use crate::scoring::ScoreFunction;
use crate::stability::{FullPeriodMode, DEFAULT_BIN_WIDTH};
use crate::topology::{validate_users, Attachment, SolveOptions, User};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserConfig {
    pub id: String,
    pub attachment: Attachment,
    /// Round-trip loss of the deployed fibre; the model uses half of it.
    #[serde(default)]
    pub bounce_back_loss_db: f64,
    /// Inactive users are planned for but left out of simulation and scoring.
    #[serde(default = "yes")]
    pub active: bool,
    /// Fields set here override the shared receiver for this user.
    #[serde(default)]
    pub receiver: Option<ReceiverOverride>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverOverride {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector_efficiency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dark_count_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub internal_loss_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
}

impl ReceiverOverride {
    pub fn apply(&self, base: &ReceiverModel) -> ReceiverModel {
        ReceiverModel {
            detector_efficiency: self.detector_efficiency.unwrap_or(base.detector_efficiency),
            dark_count_rate: self.dark_count_rate.unwrap_or(base.dark_count_rate),
            internal_loss_db: self.internal_loss_db.unwrap_or(base.internal_loss_db),
            visibility: self.visibility.unwrap_or(base.visibility),
        }
    }
}

impl UserConfig {
    pub fn to_user(&self) -> User {
        match self.attachment {
            Attachment::Local => User::local(&self.id),
            Attachment::Deployed => User::deployed_bounce_back(&self.id, self.bounce_back_loss_db),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min_itu: u32,
    pub max_itu: u32,
    pub center_itu: u32,
    pub split_threshold: u32,
    /// Logical channels that may not be granted.
    pub excluded: Vec<i32>,
    pub splitter: SplitterModel,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = Grid::default();
        GridConfig {
            min_itu: g.min_itu,
            max_itu: g.max_itu,
            center_itu: g.center_itu,
            split_threshold: g.split_threshold,
            excluded: vec![3, -3],
            splitter: SplitterModel::default(),
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Grid {
        Grid {
            min_itu: self.min_itu,
            max_itu: self.max_itu,
            center_itu: self.center_itu,
            split_threshold: self.split_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Pairs per second per conjugate pair. Mutually exclusive with `reference_singles`.
    pub pair_rate: Option<f64>,
    /// Corrected singles rate at the reference channel.
    pub reference_singles: Option<f64>,
    /// `pair_rate = reference_singles / reference_transmission`.
    pub reference_transmission: f64,
    pub relative_brightness: BTreeMap<u32, f64>,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            pair_rate: None,
            reference_singles: None,
            reference_transmission: 1.0,
            relative_brightness: BTreeMap::new(),
        }
    }
}

impl SourceConfig {
    pub fn pair_rate(&self) -> Result<f64> {
        if !(self.reference_transmission > 0.0 && self.reference_transmission.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reference transmission {}",
                self.reference_transmission
            )));
        }
        match (self.pair_rate, self.reference_singles) {
            (Some(_), Some(_)) => Err(Error::InvalidParameter(
                "give either pair_rate or reference_singles, not both".into(),
            )),
            (Some(mu), None) => Ok(mu),
            (None, Some(s)) => Ok(s / self.reference_transmission),
            (None, None) => Ok(SourceModel::default().pair_rate),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub seed: u64,
    pub restarts: u32,
    pub iterations: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolveOptions::default();
        SolverConfig {
            seed: o.seed,
            restarts: o.restarts,
            iterations: o.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub grid_min: f64,
    pub grid_max: f64,
    pub points_per_decade: u32,
    /// Relative band below the maximum used for plateau reporting.
    pub plateau_tolerance: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            grid_min: 1e4,
            grid_max: 1e7,
            points_per_decade: 31,
            plateau_tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    pub bin_width: f64,
    pub origin: Option<f64>,
    pub full_period: FullPeriodMode,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            bin_width: DEFAULT_BIN_WIDTH,
            origin: None,
            full_period: FullPeriodMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub users: Vec<UserConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    /// Conjugate pairs the source provides; defaults to every pair on the grid.
    #[serde(default)]
    pub available_pairs: Option<Vec<u32>>,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub receiver: ReceiverModel,
    #[serde(default)]
    pub protocol: ProtocolParams,
    #[serde(default)]
    pub scoring: ScoreFunction,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
}

impl NetworkConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: NetworkConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        for u in &self.users {
            if !(u.bounce_back_loss_db >= 0.0 && u.bounce_back_loss_db.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "loss {} for {}",
                    u.bounce_back_loss_db, u.id
                )));
            }
            if u.attachment == Attachment::Local && u.bounce_back_loss_db != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "local user {} has a fibre loss",
                    u.id
                )));
            }
        }
        validate_users(&self.planned_users())?;
        let grid = self.grid.grid();
        grid.validate()?;
        for &lc in &self.grid.excluded {
            if !grid.contains(LogicalChannel(lc)) {
                return Err(Error::LcOutOfGrid {
                    lc,
                    max: grid.max_k() as i32,
                });
            }
        }
        if let Some(pairs) = &self.available_pairs {
            let set: BTreeSet<u32> = pairs.iter().copied().collect();
            if set.len() != pairs.len() {
                return Err(Error::InvalidParameter(
                    "duplicate entry in available_pairs".into(),
                ));
            }
            if let Some(k) = pairs.iter().find(|&&k| k == 0 || k > grid.max_k()) {
                return Err(Error::LcOutOfGrid {
                    lc: *k as i32,
                    max: grid.max_k() as i32,
                });
            }
        }
        if let Some(k) = self
            .source
            .relative_brightness
            .keys()
            .find(|&&k| k == 0 || k > grid.max_k())
        {
            return Err(Error::LcOutOfGrid {
                lc: *k as i32,
                max: grid.max_k() as i32,
            });
        }
        self.scoring.validate()?;
        self.model()?.validate()?;
        let sw = &self.sweep;
        if !(sw.grid_min > 0.0 && sw.grid_max >= sw.grid_min && sw.grid_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sweep range {}..{}",
                sw.grid_min, sw.grid_max
            )));
        }
        if !(sw.plateau_tolerance >= 0.0 && sw.plateau_tolerance < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "plateau tolerance {}",
                sw.plateau_tolerance
            )));
        }
        if !(self.stability.bin_width > 0.0 && self.stability.bin_width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bin width {}",
                self.stability.bin_width
            )));
        }
        Ok(())
    }

    /// Every configured user, in file order.
    pub fn planned_users(&self) -> Vec<User> {
        self.users.iter().map(UserConfig::to_user).collect()
    }

    pub fn active_users(&self) -> Vec<User> {
        self.users
            .iter()
            .filter(|u| u.active)
            .map(UserConfig::to_user)
            .collect()
    }

    pub fn available_pairs(&self) -> Vec<ConjugatePair> {
        match &self.available_pairs {
            Some(p) => {
                let mut p: Vec<ConjugatePair> = p.iter().map(|&k| ConjugatePair(k)).collect();
                p.sort();
                p
            }
            None => self.grid.grid().pairs(),
        }
    }

    pub fn excluded(&self) -> BTreeSet<LogicalChannel> {
        self.grid
            .excluded
            .iter()
            .map(|&lc| LogicalChannel(lc))
            .collect()
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            seed: self.solver.seed,
            restarts: self.solver.restarts,
            iterations: self.solver.iterations,
        }
    }

    pub fn model(&self) -> Result<NetworkModel> {
        Ok(NetworkModel {
            grid: self.grid.grid(),
            splitter: self.grid.splitter,
            source: SourceModel {
                pair_rate: self.source.pair_rate()?,
                relative_brightness: self.source.relative_brightness.clone(),
            },
            receivers: self
                .users
                .iter()
                .filter_map(|u| u.receiver.map(|r| (u.id.clone(), r.apply(&self.receiver))))
                .collect(),
            default_receiver: self.receiver,
            protocol: self.protocol,
        })
    }
}
