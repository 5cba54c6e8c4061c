use rand::Rng;

use crate::error::Result;
use crate::rng;

use super::{
    BackRef, ClassDescriptor, ClassId, DistributionKind, GenerationReport, GeneratorParams,
    ObjectId, ObjectInstance,
};

/// Instantiates `no` objects and their references.
///
/// Each object's class comes from `dist3`, and the object is appended to that
/// class's iterator. Then, class by class and in iterator order, every non-NULL
/// slot picks a target position from `[infref, supref]` (clipped to the target
/// iterator) with `dist4`. Reverse references are recorded as links are made.
pub fn generate_objects(
    schema: &mut [ClassDescriptor],
    params: &GeneratorParams,
    report: &mut GenerationReport,
) -> Result<Vec<ObjectInstance>> {
    params.validate()?;
    let mut class_rng = rng::stream(params.seed, rng::OBJECT_CLASSES);
    let mut ref_rng = rng::stream(params.seed, rng::OBJECT_REFS);

    for class in schema.iter_mut() {
        class.iterator.clear();
    }
    let mut objects = Vec::with_capacity(params.no as usize);
    // 1-based position of each object in its class iterator
    let mut position = Vec::with_capacity(params.no as usize);
    for i in 0..params.no as usize {
        let class_id = ClassId::new(params.dist3.draw(&mut class_rng, 1, params.nc))
            .expect("dist3 validated to [1, nc]");
        let class = &mut schema[class_id.index()];
        let id = ObjectId::from_index(i);
        class.iterator.push(id);
        position.push(class.iterator.len() as u32);
        objects.push(ObjectInstance {
            id,
            class_id,
            oref: vec![None; class.maxnref()],
            backref: Vec::new(),
            size: class.instance_size,
        });
    }

    for class in schema.iter() {
        for &source in &class.iterator {
            let source_pos = position[source.index()];
            for (slot, target_class) in class.cref.iter().enumerate() {
                let Some(target_class) = target_class else {
                    continue;
                };
                let members = &schema[target_class.index()].iterator;
                if members.is_empty() {
                    report.empty_target += 1;
                    continue;
                }
                match pick_position(&params.dist4, &mut ref_rng, params, source_pos, members.len() as u32) {
                    Some(pos) => {
                        let target = members[pos as usize - 1];
                        objects[source.index()].oref[slot] = Some(target);
                        objects[target.index()].backref.push(BackRef {
                            source,
                            slot: slot as u32,
                        });
                        report.links += 1;
                    }
                    None => report.out_of_range += 1,
                }
            }
        }
    }
    Ok(objects)
}

/// 1-based target position in an iterator of `len` members, or `None` when the
/// reference interval does not intersect `[1, len]`.
fn pick_position<R: Rng>(
    dist: &DistributionKind,
    rng: &mut R,
    params: &GeneratorParams,
    source_pos: u32,
    len: u32,
) -> Option<u32> {
    let lo = params.infref.max(1);
    let hi = params.supref.min(len);
    let anywhere = |rng: &mut R| (lo <= hi).then(|| rng.gen_range(lo..=hi));
    match *dist {
        DistributionKind::Uniform => anywhere(rng),
        DistributionKind::Constant(v) => (v <= len).then_some(v),
        DistributionKind::Special {
            refzone,
            locality_probability,
        } => {
            let local = rng.gen::<f64>() < locality_probability;
            if local {
                let center = source_pos.min(len);
                let lo = center.saturating_sub(refzone).max(1);
                let hi = center.saturating_add(refzone).min(len);
                Some(rng.gen_range(lo..=hi))
            } else {
                anywhere(rng)
            }
        }
    }
}
