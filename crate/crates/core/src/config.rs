//! Experiment configuration: named presets refined by flat `key = value`
//! overrides.
//!
//! Keys mirror the benchmark parameter names in lower case (`nc`, `maxnref`,
//! `coldn`, `pset`, ...). `supclass` and `supref` accept the literals `nc`
//! and `no` to track the class and object counts. Distributions are written
//! `uniform`, `constant:V` or `special:REFZONE:PROBABILITY`; type sets as
//! comma-separated ids; per-class values as one number or a comma-separated
//! list of `nc` numbers.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generator::{DistributionKind, GeneratorParams, PerClass, RefType};
use crate::metrics::DEFAULT_GAIN_WINDOW;
use crate::policies::{DstcParams, PolicyKind};
use crate::storage::{Oversize, StorageParams};
use crate::workload::WorkloadParams;

/// Upper interval bound that either follows a count or is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `nc` for `supclass`, `no` for `supref`.
    Count,
    Fixed(u32),
}

impl Bound {
    fn resolve(self, count: u32) -> u32 {
        match self {
            Bound::Count => count,
            Bound::Fixed(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub preset: String,
    /// `supclass` and `supref` here are overwritten by the two bounds below.
    pub generator: GeneratorParams,
    pub supclass: Bound,
    pub supref: Bound,
    pub storage: StorageParams,
    pub workload: WorkloadParams,
    pub policy: PolicyKind,
    pub dstc: DstcParams,
    pub gain_window: usize,
    pub seed: u64,
    /// Generation seed when it should differ from `seed`.
    pub generator_seed: Option<u64>,
}

/// Presets known to [`ExperimentConfig::preset`].
pub const PRESETS: [(&str, &str); 2] = [
    ("default", "20 classes, 20000 objects, uniform distributions, mixed workload"),
    (
        "dstc-club",
        "2 classes, 20000 objects, local object links, one repeated depth-7 simple traversal",
    ),
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: "default".into(),
            generator: GeneratorParams::default(),
            supclass: Bound::Count,
            supref: Bound::Count,
            storage: StorageParams::default(),
            workload: WorkloadParams::default(),
            policy: PolicyKind::None,
            dstc: DstcParams::default(),
            gain_window: DEFAULT_GAIN_WINDOW,
            seed: 0,
            generator_seed: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_set(key: &str, value: &str) -> Result<BTreeSet<RefType>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_per_class(key: &str, value: &str) -> Result<PerClass> {
    let values: Vec<u32> = value
        .split(',')
        .map(|s| parse(key, s))
        .collect::<Result<_>>()?;
    Ok(match values.as_slice() {
        [one] => PerClass::All(*one),
        _ => PerClass::Each(values),
    })
}

fn parse_bound(key: &str, value: &str, count_name: &str) -> Result<Bound> {
    if value.trim() == count_name {
        Ok(Bound::Count)
    } else {
        parse(key, value).map(Bound::Fixed)
    }
}

fn join_set(set: &BTreeSet<RefType>) -> String {
    set.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn preset(name: &str) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig {
            preset: name.to_string(),
            ..Default::default()
        };
        match name {
            "default" => {}
            "dstc-club" => {
                let g = &mut c.generator;
                g.nc = 2;
                g.maxnref = PerClass::All(3);
                g.basesize = PerClass::All(50);
                g.no = 20_000;
                g.nreft = 3;
                g.infclass = 0;
                g.infref = 1;
                g.dist1 = DistributionKind::Constant(3);
                g.dist2 = DistributionKind::Constant(1);
                g.dist3 = DistributionKind::Constant(1);
                g.dist4 = DistributionKind::Special {
                    refzone: 200,
                    locality_probability: 0.9,
                };
                let w = &mut c.workload;
                w.pset = 0.0;
                w.psimple = 1.0;
                w.phier = 0.0;
                w.pstoch = 0.0;
                w.simdepth = 7;
                w.dist5 = DistributionKind::Constant(10_000);
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?} (known: default, dstc-club)"
                )))
            }
        }
        Ok(c)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        let g = &mut self.generator;
        let w = &mut self.workload;
        let s = &mut self.storage;
        let d = &mut self.dstc;
        match key {
            "preset" => {
                if value != self.preset {
                    return Err(Error::Config(
                        "preset must be chosen before any other key".into(),
                    ));
                }
            }
            "seed" => self.seed = parse(key, value)?,
            "generator_seed" => {
                self.generator_seed = match value {
                    "seed" => None,
                    _ => Some(parse(key, value)?),
                }
            }
            "nc" => g.nc = parse(key, value)?,
            "maxnref" => g.maxnref = parse_per_class(key, value)?,
            "basesize" => g.basesize = parse_per_class(key, value)?,
            "no" => g.no = parse(key, value)?,
            "nreft" => g.nreft = parse(key, value)?,
            "infclass" => g.infclass = parse(key, value)?,
            "supclass" => self.supclass = parse_bound(key, value, "nc")?,
            "infref" => g.infref = parse(key, value)?,
            "supref" => self.supref = parse_bound(key, value, "no")?,
            "dist1" => g.dist1 = value.parse()?,
            "dist2" => g.dist2 = value.parse()?,
            "dist3" => g.dist3 = value.parse()?,
            "dist4" => g.dist4 = value.parse()?,
            "acyclic_types" => g.acyclic_types = parse_set(key, value)?,
            "inheritance_types" => g.inheritance_types = parse_set(key, value)?,
            "setdepth" => w.setdepth = parse(key, value)?,
            "simdepth" => w.simdepth = parse(key, value)?,
            "hiedepth" => w.hiedepth = parse(key, value)?,
            "stodepth" => w.stodepth = parse(key, value)?,
            "coldn" => w.coldn = parse(key, value)?,
            "hotn" => w.hotn = parse(key, value)?,
            "think" => w.think = parse(key, value)?,
            "pset" => w.pset = parse(key, value)?,
            "psimple" => w.psimple = parse(key, value)?,
            "phier" => w.phier = parse(key, value)?,
            "pstoch" => w.pstoch = parse(key, value)?,
            "dist5" | "rand5" => w.dist5 = value.parse()?,
            "clientn" => w.clientn = parse(key, value)?,
            "reverse_probability" => w.reverse_probability = parse(key, value)?,
            "hierarchy_ref_type" => w.hierarchy_ref_type = parse(key, value)?,
            "page_size" => s.page_size = parse(key, value)?,
            "buffer_pages" => s.buffer_pages = parse(key, value)?,
            "io_cost" => s.io_cost = parse(key, value)?,
            "cpu_cost" => s.cpu_cost = parse(key, value)?,
            "oversize" => {
                s.oversize = match value {
                    "dedicated_run" => Oversize::DedicatedRun,
                    "reject" => Oversize::Reject,
                    _ => return Err(Error::Config(format!("oversize: unknown mode {value:?}"))),
                }
            }
            "policy" => self.policy = value.parse()?,
            "dstc.observation_period" => d.observation_period = parse(key, value)?,
            "dstc.selection_threshold" => d.selection_threshold = parse(key, value)?,
            "dstc.consolidation_weight" => d.consolidation_weight = parse(key, value)?,
            "dstc.unit_link_threshold" => d.unit_link_threshold = parse(key, value)?,
            "dstc.reorganize_trigger" => d.reorganize_trigger = parse(key, value)?,
            "gain_window" => self.gain_window = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Builds a config from a preset, then `key = value` lines (blank lines
    /// and `#` comments ignored), then explicit overrides. A `preset` line in
    /// the text, if any, replaces `preset`; `overrides` win over the text.
    pub fn resolve(preset: Option<&str>, text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = Vec::new();
        if let Some(text) = text {
            for (n, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or_default().trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Config(format!("line {}: expected key = value", n + 1))
                })?;
                pairs.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let named = overrides
            .iter()
            .chain(&pairs)
            .find(|(k, _)| k == "preset")
            .map(|(_, v)| v.as_str())
            .or(preset)
            .unwrap_or("default");
        let mut config = Self::preset(named)?;
        for (k, v) in pairs.iter().chain(overrides) {
            config.set(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn generator_params(&self) -> GeneratorParams {
        GeneratorParams {
            supclass: self.supclass.resolve(self.generator.nc),
            supref: self.supref.resolve(self.generator.no),
            seed: self.generator_seed.unwrap_or(self.seed),
            ..self.generator.clone()
        }
    }

    /// Takes over the generation settings of an already generated database.
    pub fn adopt_generator(&mut self, params: &GeneratorParams) {
        let bound = |v: u32, count: u32| {
            if v == count {
                Bound::Count
            } else {
                Bound::Fixed(v)
            }
        };
        self.supclass = bound(params.supclass, params.nc);
        self.supref = bound(params.supref, params.no);
        self.generator = params.clone();
        self.generator_seed = (params.seed != self.seed).then_some(params.seed);
    }

    pub fn workload_params(&self) -> WorkloadParams {
        WorkloadParams {
            seed: self.seed,
            ..self.workload.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator_params().validate()?;
        self.storage.validate()?;
        self.workload_params().validate()?;
        self.dstc.validate()?;
        if self.gain_window == 0 {
            return Err(Error::Param("gain_window must be at least 1".into()));
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order. Feeding these
    /// lines back through [`ExperimentConfig::resolve`] rebuilds this config.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let g = &self.generator;
        let w = &self.workload;
        let s = &self.storage;
        let d = &self.dstc;
        let bound = |b: Bound, count: &str| match b {
            Bound::Count => count.to_string(),
            Bound::Fixed(v) => v.to_string(),
        };
        let pairs: Vec<(&str, String)> = vec![
            ("preset", self.preset.clone()),
            ("seed", self.seed.to_string()),
            (
                "generator_seed",
                self.generator_seed.map_or_else(|| "seed".into(), |s| s.to_string()),
            ),
            ("nc", g.nc.to_string()),
            ("maxnref", g.maxnref.to_string()),
            ("basesize", g.basesize.to_string()),
            ("no", g.no.to_string()),
            ("nreft", g.nreft.to_string()),
            ("infclass", g.infclass.to_string()),
            ("supclass", bound(self.supclass, "nc")),
            ("infref", g.infref.to_string()),
            ("supref", bound(self.supref, "no")),
            ("dist1", g.dist1.to_string()),
            ("dist2", g.dist2.to_string()),
            ("dist3", g.dist3.to_string()),
            ("dist4", g.dist4.to_string()),
            ("acyclic_types", join_set(&g.acyclic_types)),
            ("inheritance_types", join_set(&g.inheritance_types)),
            ("setdepth", w.setdepth.to_string()),
            ("simdepth", w.simdepth.to_string()),
            ("hiedepth", w.hiedepth.to_string()),
            ("stodepth", w.stodepth.to_string()),
            ("coldn", w.coldn.to_string()),
            ("hotn", w.hotn.to_string()),
            ("think", w.think.to_string()),
            ("pset", w.pset.to_string()),
            ("psimple", w.psimple.to_string()),
            ("phier", w.phier.to_string()),
            ("pstoch", w.pstoch.to_string()),
            ("dist5", w.dist5.to_string()),
            ("clientn", w.clientn.to_string()),
            ("reverse_probability", w.reverse_probability.to_string()),
            ("hierarchy_ref_type", w.hierarchy_ref_type.to_string()),
            ("page_size", s.page_size.to_string()),
            ("buffer_pages", s.buffer_pages.to_string()),
            ("io_cost", s.io_cost.to_string()),
            ("cpu_cost", s.cpu_cost.to_string()),
            (
                "oversize",
                match s.oversize {
                    Oversize::DedicatedRun => "dedicated_run",
                    Oversize::Reject => "reject",
                }
                .to_string(),
            ),
            ("policy", self.policy.to_string()),
            ("dstc.observation_period", d.observation_period.to_string()),
            ("dstc.selection_threshold", d.selection_threshold.to_string()),
            ("dstc.consolidation_weight", d.consolidation_weight.to_string()),
            ("dstc.unit_link_threshold", d.unit_link_threshold.to_string()),
            ("dstc.reorganize_trigger", d.reorganize_trigger.to_string()),
            ("gain_window", self.gain_window.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.to_pairs().into_iter().collect()
    }

    /// SHA-256 over every setting except the policy, its parameters, the gain
    /// window and the preset label. Two runs with the same fingerprint execute
    /// the same transaction sequence.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.to_pairs() {
            if k == "policy" || k == "preset" || k == "gain_window" || k.starts_with("dstc.") {
                continue;
            }
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
