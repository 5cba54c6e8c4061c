//! Synthetic object-base generator.
//!
//! A database is produced in three steps: the schema (classes with typed
//! references to other classes), a consistency pass that removes cycles from
//! the graphs whose reference type forbids them and propagates inheritance
//! sizes, and finally the object instances with their inter-object and
//! reverse references.
//!
//! All identifiers are 1-based, so `ClassId(1)` is the first class and a
//! `None` reference slot is a NULL link.

mod dist;
mod format;
mod objects;
mod schema;

use std::collections::BTreeSet;
use std::fmt;
use std::num::NonZeroU32;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dist::DistributionKind;
pub use format::{load_database, read_database, save_database, write_database, MAGIC};
pub use objects::generate_objects;
pub use schema::{enforce_consistency, generate_schema};

macro_rules! one_based_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(NonZeroU32);

        impl $name {
            /// Returns `None` for 0, the NULL id.
            pub fn new(id: u32) -> Option<Self> {
                NonZeroU32::new(id).map(Self)
            }

            pub fn from_index(index: usize) -> Self {
                let id = u32::try_from(index + 1).expect("id overflows u32");
                Self(NonZeroU32::new(id).expect("index + 1 is non-zero"))
            }

            pub fn get(self) -> u32 {
                self.0.get()
            }

            /// Zero-based position, for indexing vectors.
            pub fn index(self) -> usize {
                self.0.get() as usize - 1
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self.0)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

one_based_id!(
    /// Index of a class in `[1, nc]`.
    ClassId
);
one_based_id!(
    /// Index of an object in `[1, no]`.
    ObjectId
);

/// Reference type id in `[1, nreft]`.
pub type RefType = u32;

/// A per-class integer parameter: either one value for every class or an
/// explicit list with one entry per class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerClass {
    All(u32),
    Each(Vec<u32>),
}

impl PerClass {
    pub fn get(&self, class: ClassId) -> u32 {
        match self {
            PerClass::All(v) => *v,
            PerClass::Each(values) => values[class.index()],
        }
    }

    fn check_len(&self, nc: u32, name: &str) -> Result<()> {
        match self {
            PerClass::Each(values) if values.len() != nc as usize => Err(Error::Param(format!(
                "{name} lists {} values but nc = {nc}",
                values.len()
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerClass::All(v) => write!(f, "{v}"),
            PerClass::Each(values) => {
                let parts: Vec<String> = values.iter().map(u32::to_string).collect();
                write!(f, "{}", parts.join(","))
            }
        }
    }
}

/// Database generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub nc: u32,
    pub maxnref: PerClass,
    pub basesize: PerClass,
    pub no: u32,
    pub nreft: u32,
    /// Lower class bound. 0 admits NULL class references.
    pub infclass: u32,
    pub supclass: u32,
    pub infref: u32,
    pub supref: u32,
    /// Reference types.
    pub dist1: DistributionKind,
    /// Class references.
    pub dist2: DistributionKind,
    /// Object-to-class assignment.
    pub dist3: DistributionKind,
    /// Object references.
    pub dist4: DistributionKind,
    pub seed: u64,
    pub acyclic_types: BTreeSet<RefType>,
    pub inheritance_types: BTreeSet<RefType>,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            nc: 20,
            maxnref: PerClass::All(10),
            basesize: PerClass::All(50),
            no: 20_000,
            nreft: 4,
            infclass: 1,
            supclass: 20,
            infref: 1,
            supref: 20_000,
            dist1: DistributionKind::Uniform,
            dist2: DistributionKind::Uniform,
            dist3: DistributionKind::Uniform,
            dist4: DistributionKind::Uniform,
            seed: 0,
            acyclic_types: BTreeSet::from([1, 2]),
            inheritance_types: BTreeSet::from([1]),
        }
    }
}

impl GeneratorParams {
    pub fn maxnref(&self, class: ClassId) -> u32 {
        self.maxnref.get(class)
    }

    pub fn basesize(&self, class: ClassId) -> u32 {
        self.basesize.get(class)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Param(msg));
        if self.nc == 0 {
            return bad("nc must be at least 1".into());
        }
        if self.nreft == 0 {
            return bad("nreft must be at least 1".into());
        }
        self.maxnref.check_len(self.nc, "maxnref")?;
        self.basesize.check_len(self.nc, "basesize")?;
        if self.supclass == 0 || self.infclass > self.supclass || self.supclass > self.nc {
            return bad(format!(
                "class interval [{}, {}] must satisfy 0 <= infclass <= supclass <= nc = {} with supclass >= 1",
                self.infclass, self.supclass, self.nc
            ));
        }
        if self.no > 0 && (self.infref > self.supref || self.supref == 0) {
            return bad(format!(
                "object interval [{}, {}] is empty",
                self.infref, self.supref
            ));
        }
        if !self.inheritance_types.is_subset(&self.acyclic_types) {
            return bad("inheritance_types must be a subset of acyclic_types".into());
        }
        if let Some(t) = self
            .acyclic_types
            .iter()
            .find(|&&t| t == 0 || t > self.nreft)
        {
            return bad(format!("reference type {t} outside [1, {}]", self.nreft));
        }
        self.dist1.validate_scalar("dist1", 1, self.nreft)?;
        self.dist2
            .validate_scalar("dist2", self.infclass, self.supclass)?;
        self.dist3.validate_scalar("dist3", 1, self.nc)?;
        self.dist4.validate_object_refs("dist4")?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassDescriptor {
    pub id: ClassId,
    /// Reference type per slot.
    pub tref: Vec<RefType>,
    /// Referenced class per slot, `None` once a slot is NULL.
    pub cref: Vec<Option<ClassId>>,
    pub basesize: u32,
    pub instance_size: u32,
    /// Member objects, in creation order.
    pub iterator: Vec<ObjectId>,
}

impl ClassDescriptor {
    pub fn maxnref(&self) -> usize {
        self.tref.len()
    }
}

/// Reverse link: `source.oref[slot]` points at the owning object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BackRef {
    pub source: ObjectId,
    pub slot: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub id: ObjectId,
    pub class_id: ClassId,
    pub oref: Vec<Option<ObjectId>>,
    pub backref: Vec<BackRef>,
    pub size: u32,
}

/// Counts of reference slots left NULL during generation, per cause.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    /// Class slots whose drawn target was 0 (only possible with `infclass = 0`).
    pub null_class_draws: u64,
    /// Class slots removed because they closed a cycle in an acyclic graph.
    pub cycle_suppressed: u64,
    /// Object slots whose target class had no instances.
    pub empty_target: u64,
    /// Object slots whose drawn position fell outside the target iterator.
    pub out_of_range: u64,
    /// Object links actually created.
    pub links: u64,
}

impl GenerationReport {
    pub fn nulled_slots(&self) -> u64 {
        self.null_class_draws + self.cycle_suppressed + self.empty_target + self.out_of_range
    }
}

/// A generated object base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Database {
    pub params: GeneratorParams,
    pub classes: Vec<ClassDescriptor>,
    pub objects: Vec<ObjectInstance>,
    pub report: GenerationReport,
}

impl Database {
    /// Runs the full generation procedure.
    pub fn generate(params: &GeneratorParams) -> Result<Database> {
        params.validate()?;
        let mut report = GenerationReport::default();
        let mut classes = generate_schema(params)?;
        report.null_class_draws = classes
            .iter()
            .flat_map(|c| &c.cref)
            .filter(|c| c.is_none())
            .count() as u64;
        report.cycle_suppressed = enforce_consistency(&mut classes, params) as u64;
        let objects = generate_objects(&mut classes, params, &mut report)?;
        Ok(Database {
            params: params.clone(),
            classes,
            objects,
            report,
        })
    }

    pub fn class(&self, id: ClassId) -> &ClassDescriptor {
        &self.classes[id.index()]
    }

    pub fn object(&self, id: ObjectId) -> &ObjectInstance {
        &self.objects[id.index()]
    }

    pub fn get_object(&self, id: ObjectId) -> Option<&ObjectInstance> {
        self.objects.get(id.index())
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Reference type of `object.oref[slot]`.
    pub fn slot_type(&self, object: ObjectId, slot: usize) -> RefType {
        let class = self.object(object).class_id;
        self.class(class).tref[slot]
    }

    pub fn total_size(&self) -> u64 {
        self.objects.iter().map(|o| u64::from(o.size)).sum()
    }
}
