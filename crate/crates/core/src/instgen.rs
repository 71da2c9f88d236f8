//! Instance acquisition: measurement files and seeded synthetic instances.
//!
//! Synthetic instances are drawn with `ChaCha8Rng::seed_from_u64(seed)`, so
//! a config and seed give the same instance on every platform. All integer
//! draws use `u64` ranges.
//!
//! Heterogeneity levels:
//! - level 1: the first two device and helper profiles, assigned round-robin,
//!   nominal durations and demands, nominal connectivity;
//! - level 2: every profile, picked at random, plus a random link class per
//!   client;
//! - level 3: level 2 with random cut scaling, which moves work between the
//!   client side (`r`, `r'`) and the helper side (`p`, `p'`);
//! - level 4: level 3 with durations, demands and helper capacities drawn
//!   uniformly within the profile ranges.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{read_instance, FormatError, Instance, InstanceError};

/// Inclusive integer range `[min, max]`.
pub type Span = [u64; 2];

fn nominal(span: Span) -> u64 {
    (span[0] + span[1]) / 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceProfile {
    pub name: String,
    pub t1: Span,
    /// Helper-side forward work on a speed-1.0 helper.
    pub t2: Span,
    pub t3: Span,
    /// Helper-side backward work on a speed-1.0 helper.
    pub t4: Span,
    pub t5: Span,
    pub demand: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelperProfile {
    pub name: String,
    pub speed: f64,
    /// Relative memory size; rescaled to the instance's total demand.
    pub capacity: Span,
    #[serde(default)]
    pub speed_by_device: std::collections::BTreeMap<String, f64>,
}

impl HelperProfile {
    pub fn speed_for(&self, device: &DeviceProfile) -> f64 {
        self.speed_by_device.get(&device.name).copied().unwrap_or(self.speed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkClass {
    pub name: String,
    pub weight: f64,
    /// Multiplier on `r`, `l` and `r'`.
    pub factor: f64,
}

#[derive(Deserialize)]
struct ConnectivityFile {
    class: Vec<LinkClass>,
}

const DEVICE_FILES: [&str; 4] = [
    include_str!("../profiles/devices/a_rpi4.toml"),
    include_str!("../profiles/devices/b_jetson_cpu.toml"),
    include_str!("../profiles/devices/c_rpi3.toml"),
    include_str!("../profiles/devices/d_jetson_gpu.toml"),
];
const HELPER_FILES: [&str; 2] = [
    include_str!("../profiles/helpers/a_laptop.toml"),
    include_str!("../profiles/helpers/b_vm.toml"),
];
const CONNECTIVITY_FILE: &str = include_str!("../profiles/connectivity.toml");

pub fn default_device_profiles() -> Vec<DeviceProfile> {
    DEVICE_FILES
        .iter()
        .map(|s| toml::from_str(s).expect("shipped device profile parses"))
        .collect()
}

pub fn default_helper_profiles() -> Vec<HelperProfile> {
    HELPER_FILES
        .iter()
        .map(|s| toml::from_str(s).expect("shipped helper profile parses"))
        .collect()
}

pub fn default_connectivity() -> Vec<LinkClass> {
    toml::from_str::<ConnectivityFile>(CONNECTIVITY_FILE)
        .expect("shipped connectivity parses")
        .class
}

fn default_headroom() -> f64 {
    1.25
}

fn default_cut_scaling() -> [f64; 2] {
    [0.6, 1.4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub level: u8,
    pub num_clients: usize,
    pub num_helpers: usize,
    pub seed: u64,
    /// Ratio of total capacity to total demand before the per-helper slack.
    #[serde(default = "default_headroom")]
    pub headroom: f64,
    /// Forces every demand to 1.
    #[serde(default)]
    pub unit_demand: bool,
    /// Keep each client-helper edge with this probability (complete if unset).
    #[serde(default)]
    pub edge_probability: Option<f64>,
    /// Fixed helper capacities, overriding the profile-derived ones.
    #[serde(default)]
    pub capacities: Option<Vec<u64>>,
    /// Range of the cut scaling factor used from level 3 on.
    #[serde(default = "default_cut_scaling")]
    pub cut_scaling: [f64; 2],
    #[serde(default = "default_device_profiles")]
    pub device_profiles: Vec<DeviceProfile>,
    #[serde(default = "default_helper_profiles")]
    pub helper_profiles: Vec<HelperProfile>,
    #[serde(default = "default_connectivity")]
    pub connectivity: Vec<LinkClass>,
}

impl GeneratorConfig {
    /// Config with the shipped profiles and default knobs.
    pub fn new(level: u8, num_clients: usize, num_helpers: usize, seed: u64) -> Self {
        GeneratorConfig {
            level,
            num_clients,
            num_helpers,
            seed,
            headroom: default_headroom(),
            unit_demand: false,
            edge_probability: None,
            capacities: None,
            cut_scaling: default_cut_scaling(),
            device_profiles: default_device_profiles(),
            helper_profiles: default_helper_profiles(),
            connectivity: default_connectivity(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, InstgenError> {
        let config: GeneratorConfig = toml::from_str(s).map_err(|e| InstgenError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), InstgenError> {
        let bad = |msg: String| Err(InstgenError::InvalidConfig(msg));
        if !(1..=4).contains(&self.level) {
            return bad(format!("level must be 1..=4, got {}", self.level));
        }
        if self.num_clients == 0 || self.num_helpers == 0 {
            return bad("num_clients and num_helpers must be positive".into());
        }
        let (min_devices, min_helpers) = if self.level == 1 { (2, 2) } else { (1, 1) };
        if self.device_profiles.len() < min_devices || self.helper_profiles.len() < min_helpers {
            return bad(format!(
                "level {} needs at least {min_devices} device and {min_helpers} helper profiles",
                self.level
            ));
        }
        for d in &self.device_profiles {
            for (field, span) in [
                ("t1", d.t1),
                ("t2", d.t2),
                ("t3", d.t3),
                ("t4", d.t4),
                ("t5", d.t5),
                ("demand", d.demand),
            ] {
                if span[0] == 0 || span[0] > span[1] {
                    return bad(format!("profile {:?}: `{field}` must satisfy 1 <= min <= max", d.name));
                }
            }
        }
        for h in &self.helper_profiles {
            let speeds = std::iter::once(h.speed).chain(h.speed_by_device.values().copied());
            if speeds.into_iter().any(|s| !(s.is_finite() && s > 0.0)) {
                return bad(format!("helper profile {:?}: speeds must be positive", h.name));
            }
            if h.capacity[0] == 0 || h.capacity[0] > h.capacity[1] {
                return bad(format!("helper profile {:?}: `capacity` must satisfy 1 <= min <= max", h.name));
            }
        }
        if self.level >= 2 {
            if self.connectivity.is_empty() {
                return bad("connectivity needs at least one link class".into());
            }
            if self.connectivity.iter().any(|c| !(c.weight >= 0.0 && c.factor > 0.0 && c.factor.is_finite()))
                || self.connectivity.iter().map(|c| c.weight).sum::<f64>() <= 0.0
            {
                return bad("link classes need non-negative weights (not all zero) and positive factors".into());
            }
        }
        let [lo, hi] = self.cut_scaling;
        if !(lo > 0.0 && lo <= hi && hi < 2.0) {
            return bad("cut_scaling must satisfy 0 < min <= max < 2".into());
        }
        if !(self.headroom.is_finite() && self.headroom > 0.0) {
            return bad("headroom must be positive".into());
        }
        if let Some(p) = self.edge_probability {
            if !(0.0..=1.0).contains(&p) {
                return bad("edge_probability must lie in [0, 1]".into());
            }
        }
        if let Some(caps) = &self.capacities {
            if caps.len() != self.num_helpers {
                return bad(format!("capacities has {} entries, expected {}", caps.len(), self.num_helpers));
            }
        }
        Ok(())
    }

    fn devices_in_play(&self) -> &[DeviceProfile] {
        if self.level == 1 {
            &self.device_profiles[..2]
        } else {
            &self.device_profiles
        }
    }

    fn helpers_in_play(&self) -> &[HelperProfile] {
        if self.level == 1 {
            &self.helper_profiles[..2]
        } else {
            &self.helper_profiles
        }
    }
}

#[derive(Debug, Error)]
pub enum InstgenError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("no assignment can be feasible: minimum total demand {min_demand} exceeds total capacity {capacity}")]
    Infeasible { min_demand: u64, capacity: u64 },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A generated instance plus the profile each client and helper was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: Instance,
    /// Index into the config's `device_profiles`.
    pub client_profile: Vec<usize>,
    /// Index into the config's `helper_profiles`.
    pub helper_profile: Vec<usize>,
}

/// Range of a helper-side duration on a helper with the given speed.
pub fn helper_span(span: Span, speed: f64) -> Span {
    let lo = scale(span[0], speed).max(1);
    [lo, scale(span[1], speed).max(lo)]
}

fn scale(v: u64, factor: f64) -> u64 {
    (v as f64 * factor).round() as u64
}

fn clamp(v: u64, span: Span) -> u64 {
    v.clamp(span[0], span[1])
}

fn draw(rng: &mut ChaCha8Rng, span: Span, uniform: bool) -> u64 {
    if uniform {
        rng.gen_range(span[0]..=span[1])
    } else {
        nominal(span)
    }
}

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    rng.gen_range(0..n as u64) as usize
}

fn pick_weighted(rng: &mut ChaCha8Rng, classes: &[LinkClass]) -> f64 {
    let total: f64 = classes.iter().map(|c| c.weight).sum();
    let mut u = rng.gen::<f64>() * total;
    for c in classes {
        if u < c.weight {
            return c.factor;
        }
        u -= c.weight;
    }
    classes.iter().rev().find(|c| c.weight > 0.0).map_or(1.0, |c| c.factor)
}

pub fn generate(config: &GeneratorConfig) -> Result<Instance, InstgenError> {
    generate_detailed(config).map(|g| g.instance)
}

pub fn generate_detailed(config: &GeneratorConfig) -> Result<Generated, InstgenError> {
    config.validate()?;
    let (nj, ni, level) = (config.num_clients, config.num_helpers, config.level);
    let devices = config.devices_in_play();
    let helpers = config.helpers_in_play();
    let uniform = level == 4;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let client_profile: Vec<usize> = (0..nj)
        .map(|j| if level == 1 { j % 2 } else { pick(&mut rng, devices.len()) })
        .collect();
    let helper_profile: Vec<usize> = (0..ni)
        .map(|i| if level == 1 { i % 2 } else { pick(&mut rng, helpers.len()) })
        .collect();

    let mut release = Vec::with_capacity(nj);
    let mut delay = Vec::with_capacity(nj);
    let mut tail = Vec::with_capacity(nj);
    let mut demand = Vec::with_capacity(nj);
    let mut t2 = vec![vec![0; ni]; nj];
    let mut t4 = vec![vec![0; ni]; nj];
    for j in 0..nj {
        let d = &devices[client_profile[j]];
        let link = if level >= 2 {
            pick_weighted(&mut rng, &config.connectivity)
        } else {
            1.0
        };
        let (cut1, cut2) = if level >= 3 {
            let [lo, hi] = config.cut_scaling;
            (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi))
        } else {
            (1.0, 1.0)
        };
        let base = [d.t1, d.t2, d.t3, d.t4, d.t5].map(|span| draw(&mut rng, span, uniform));
        let dem = draw(&mut rng, d.demand, uniform);
        release.push(clamp(scale(base[0], cut1 * link), d.t1));
        delay.push(clamp(scale(base[2], link), d.t3));
        tail.push(clamp(scale(base[4], cut2 * link), d.t5));
        demand.push(if config.unit_demand { 1 } else { dem });
        for i in 0..ni {
            let speed = helpers[helper_profile[i]].speed_for(d);
            t2[j][i] = clamp(scale(base[1], (2.0 - cut1) * speed), helper_span(d.t2, speed));
            t4[j][i] = clamp(scale(base[3], (2.0 - cut2) * speed), helper_span(d.t4, speed));
        }
    }

    let capacity = match &config.capacities {
        Some(caps) => caps.clone(),
        None => {
            let weights: Vec<u64> = helper_profile
                .iter()
                .map(|&h| draw(&mut rng, helpers[h].capacity, uniform))
                .collect();
            let total_weight: u64 = weights.iter().sum();
            let total_demand: u64 = demand.iter().sum();
            let slack = demand.iter().copied().max().unwrap_or(0);
            weights
                .iter()
                .map(|&w| {
                    let share = config.headroom * total_demand as f64 * w as f64 / total_weight as f64;
                    share.ceil() as u64 + slack
                })
                .collect()
        }
    };
    let min_demand: u64 = if config.unit_demand {
        nj as u64
    } else {
        client_profile.iter().map(|&p| devices[p].demand[0]).sum()
    };
    let total_capacity: u64 = capacity.iter().sum();
    if min_demand > total_capacity {
        return Err(InstgenError::Infeasible {
            min_demand,
            capacity: total_capacity,
        });
    }

    let mut builder = Instance::builder(nj, ni)
        .capacity(capacity)
        .demand(demand)
        .release(release)
        .t3_delay(delay)
        .t5_time(tail)
        .t2_time(t2)
        .t4_time(t4);
    if let Some(p) = config.edge_probability {
        let mut edges = Vec::new();
        for j in 0..nj {
            let before = edges.len();
            for i in 0..ni {
                if rng.gen_bool(p) {
                    edges.push((j, i));
                }
            }
            if edges.len() == before {
                edges.push((j, pick(&mut rng, ni)));
            }
        }
        builder = builder.edges(edges);
    }
    Ok(Generated {
        instance: builder.build()?,
        client_profile,
        helper_profile,
    })
}

/// Reads an instance file in the JSON instance format.
pub fn load_measurements(path: impl AsRef<Path>) -> Result<Instance, InstgenError> {
    Ok(read_instance(path)?)
}

/// A grid of generator configs: every (clients, helpers, level, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub clients: Vec<usize>,
    pub helpers: Vec<usize>,
    pub levels: Vec<u8>,
    /// Number of seeds per grid point.
    pub seeds: u64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_headroom")]
    pub headroom: f64,
    #[serde(default)]
    pub unit_demand: bool,
    #[serde(default)]
    pub edge_probability: Option<f64>,
    #[serde(default = "default_cut_scaling")]
    pub cut_scaling: [f64; 2],
}

/// One sweep point with its stable identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub instance_id: String,
    pub config: GeneratorConfig,
}

impl SweepConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, InstgenError> {
        let sweep: SweepConfig = toml::from_str(s).map_err(|e| InstgenError::Parse(e.to_string()))?;
        if sweep.clients.is_empty() || sweep.helpers.is_empty() || sweep.levels.is_empty() || sweep.seeds == 0 {
            return Err(InstgenError::InvalidConfig(
                "clients, helpers, levels and seeds must be non-empty".into(),
            ));
        }
        for point in sweep.points() {
            point.config.validate()?;
        }
        Ok(sweep)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, InstgenError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| InstgenError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Points in nested order clients, helpers, level, seed.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &nj in &self.clients {
            for &ni in &self.helpers {
                for &level in &self.levels {
                    for k in 0..self.seeds {
                        let seed = self.base_seed.wrapping_add(k);
                        let mut config = GeneratorConfig::new(level, nj, ni, seed);
                        config.headroom = self.headroom;
                        config.unit_demand = self.unit_demand;
                        config.edge_probability = self.edge_probability;
                        config.cut_scaling = self.cut_scaling;
                        out.push(SweepPoint {
                            instance_id: format!("L{level}-J{nj}-I{ni}-s{seed}"),
                            config,
                        });
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_profiles_are_valid() {
        for level in 1..=4 {
            GeneratorConfig::new(level, 3, 2, 0).validate().unwrap();
        }
        assert_eq!(default_device_profiles().len(), 4);
        assert_eq!(default_helper_profiles().len(), 2);
    }

    #[test]
    fn level_one_rows_repeat_per_profile() {
        let g = generate_detailed(&GeneratorConfig::new(1, 4, 2, 17)).unwrap();
        let inst = &g.instance;
        assert_eq!(g.client_profile, vec![0, 1, 0, 1]);
        let row = |j: usize| {
            (
                inst.release(j),
                inst.t3_delay(j),
                inst.t5(j),
                inst.demand(j),
                inst.helpers().map(|i| (inst.t2(j, i), inst.t4(j, i))).collect::<Vec<_>>(),
            )
        };
        assert_eq!(row(0), row(2));
        assert_eq!(row(1), row(3));
        assert_ne!(row(0), row(1));
    }

    #[test]
    fn same_seed_same_instance() {
        for level in 1..=4 {
            let c = GeneratorConfig::new(level, 12, 3, 99);
            assert_eq!(generate(&c).unwrap(), generate(&c).unwrap());
        }
        let a = generate(&GeneratorConfig::new(4, 12, 3, 1)).unwrap();
        let b = generate(&GeneratorConfig::new(4, 12, 3, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn explicit_capacities_can_be_rejected() {
        let mut c = GeneratorConfig::new(2, 5, 2, 0);
        c.unit_demand = true;
        c.capacities = Some(vec![2, 2]);
        assert!(matches!(
            generate(&c),
            Err(InstgenError::Infeasible {
                min_demand: 5,
                capacity: 4
            })
        ));
        c.capacities = Some(vec![2, 3]);
        assert!(generate(&c).is_ok());
    }

    #[test]
    fn invalid_configs() {
        let mut c = GeneratorConfig::new(5, 3, 2, 0);
        assert!(matches!(c.validate(), Err(InstgenError::InvalidConfig(_))));
        c.level = 1;
        c.device_profiles.truncate(1);
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::new(3, 3, 2, 0);
        c.cut_scaling = [1.5, 1.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn sparse_edges_keep_every_client_connected() {
        let mut c = GeneratorConfig::new(2, 20, 4, 5);
        c.edge_probability = Some(0.1);
        let inst = generate(&c).unwrap();
        assert!(!inst.is_complete());
        assert!(inst.clients().all(|j| inst.neighbors(j).count() >= 1));
    }

    #[test]
    fn config_parses_from_toml() {
        let c = GeneratorConfig::from_toml_str("level = 3\nnum_clients = 7\nnum_helpers = 2\nseed = 4\n").unwrap();
        assert_eq!(c, GeneratorConfig::new(3, 7, 2, 4));
        assert!(GeneratorConfig::from_toml_str("level = 3\nnum_clients = 7\nnum_helpers = 2\nseed = 4\nbogus = 1\n").is_err());
    }

    #[test]
    fn sweep_points_are_ordered() {
        let s = SweepConfig::from_toml_str("clients = [4, 6]\nhelpers = [2]\nlevels = [2]\nseeds = 3\n").unwrap();
        let ids: Vec<_> = s.points().into_iter().map(|p| p.instance_id).collect();
        assert_eq!(ids[0], "L2-J4-I2-s0");
        assert_eq!(ids[5], "L2-J6-I2-s2");
        assert_eq!(ids.len(), 6);
    }
}
