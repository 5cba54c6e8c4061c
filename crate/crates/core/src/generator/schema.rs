use crate::error::Result;
use crate::rng;

use super::{ClassDescriptor, ClassId, GeneratorParams, RefType};

/// Builds `nc` classes with typed references to other classes.
///
/// Reference types are drawn first for every class, then class references,
/// each from its own random stream. A class reference drawn as 0 (possible
/// when `infclass = 0`) is a NULL slot.
pub fn generate_schema(params: &GeneratorParams) -> Result<Vec<ClassDescriptor>> {
    params.validate()?;
    let mut type_rng = rng::stream(params.seed, rng::REF_TYPES);
    let mut class_rng = rng::stream(params.seed, rng::CLASS_REFS);

    let mut classes: Vec<ClassDescriptor> = (0..params.nc as usize)
        .map(|i| {
            let id = ClassId::from_index(i);
            let basesize = params.basesize(id);
            let tref = (0..params.maxnref(id))
                .map(|_| params.dist1.draw(&mut type_rng, 1, params.nreft))
                .collect();
            ClassDescriptor {
                id,
                tref,
                cref: Vec::new(),
                basesize,
                instance_size: basesize,
                iterator: Vec::new(),
            }
        })
        .collect();

    for class in &mut classes {
        class.cref = (0..class.tref.len())
            .map(|_| {
                ClassId::new(
                    params
                        .dist2
                        .draw(&mut class_rng, params.infclass, params.supclass),
                )
            })
            .collect();
    }
    Ok(classes)
}

/// Removes cycles from every graph whose reference type is acyclic, then
/// recomputes instance sizes over the inheritance graph. Returns the number of
/// slots set to NULL.
///
/// Slots are examined by ascending class id, then ascending slot index. A slot
/// `i -> t` of acyclic type `T` is nulled when the type-`T` graph reachable from
/// `t` contains `i` or any cycle. Running the pass twice changes nothing.
pub fn enforce_consistency(schema: &mut [ClassDescriptor], params: &GeneratorParams) -> usize {
    let mut nulled = 0;
    for i in 0..schema.len() {
        for slot in 0..schema[i].tref.len() {
            let ty = schema[i].tref[slot];
            if !params.acyclic_types.contains(&ty) {
                continue;
            }
            let Some(target) = schema[i].cref[slot] else {
                continue;
            };
            if reaches_or_cycles(schema, ty, target.index(), i) {
                schema[i].cref[slot] = None;
                nulled += 1;
            }
        }
    }
    propagate_sizes(schema, params);
    nulled
}

/// DFS over the type-`ty` graph from `start`; true if `forbidden` is reached or
/// a back edge is found.
fn reaches_or_cycles(schema: &[ClassDescriptor], ty: RefType, start: usize, forbidden: usize) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; schema.len()];
    // (node, next slot to examine)
    let mut stack = vec![(start, 0usize)];
    mark[start] = Mark::Open;
    if start == forbidden {
        return true;
    }
    while let Some((node, next)) = stack.last_mut() {
        let class = &schema[*node];
        let mut child = None;
        while *next < class.tref.len() {
            let slot = *next;
            *next += 1;
            if class.tref[slot] == ty {
                if let Some(t) = class.cref[slot] {
                    child = Some(t.index());
                    break;
                }
            }
        }
        match child {
            Some(c) if c == forbidden => return true,
            Some(c) => match mark[c] {
                Mark::Open => return true,
                Mark::Done => {}
                Mark::New => {
                    mark[c] = Mark::Open;
                    stack.push((c, 0));
                }
            },
            None => {
                mark[*node] = Mark::Done;
                stack.pop();
            }
        }
    }
    false
}

/// `instance_size(c) = basesize(c) + sum of basesize(a)` over every distinct
/// class `a != c` that reaches `c` through inheritance references. A reference
/// `a -> c` of an inheritance type makes `c` a subclass of `a`.
fn propagate_sizes(schema: &mut [ClassDescriptor], params: &GeneratorParams) {
    let n = schema.len();
    let children: Vec<Vec<usize>> = schema
        .iter()
        .map(|c| {
            c.tref
                .iter()
                .zip(&c.cref)
                .filter(|(t, _)| params.inheritance_types.contains(t))
                .filter_map(|(_, target)| target.map(ClassId::index))
                .collect()
        })
        .collect();

    let mut extra = vec![0u32; n];
    let mut seen = vec![usize::MAX; n];
    for ancestor in 0..n {
        let mut stack: Vec<usize> = children[ancestor].clone();
        seen[ancestor] = ancestor;
        while let Some(c) = stack.pop() {
            if seen[c] == ancestor {
                continue;
            }
            seen[c] = ancestor;
            extra[c] += schema[ancestor].basesize;
            stack.extend(children[c].iter().copied());
        }
    }
    for (class, add) in schema.iter_mut().zip(extra) {
        class.instance_size = class.basesize + add;
    }
}
