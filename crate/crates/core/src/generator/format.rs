//! Line-oriented database file.
//!
//! ```text
//! OCBDB1
//! params <GeneratorParams as one-line JSON>
//! report <GenerationReport as one-line JSON>
//! classes <nc>
//! c <id> <basesize> <instance_size> <n> <tref_1..tref_n> <cref_1..cref_n>
//! objects <no>
//! o <id> <class> <size> <n> <oref_1..oref_n> <m> <source:slot ...m entries>
//! end
//! ```
//!
//! Fields are separated by single spaces, ids are 1-based and 0 encodes a NULL
//! reference. Slots are 0-based. Class iterators are not stored; they are the
//! class members in ascending object id, which is how generation builds them.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::SplitWhitespace;

use crate::error::{Error, Result};

use super::{BackRef, ClassDescriptor, ClassId, Database, ObjectId, ObjectInstance};

pub const MAGIC: &str = "OCBDB1";

pub fn save_database(db: &Database, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_database(db, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_database(path: impl AsRef<Path>) -> Result<Database> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_database(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn id_or_zero<T: Copy>(id: Option<T>, get: impl Fn(T) -> u32) -> u32 {
    id.map_or(0, get)
}

pub fn write_database<W: Write>(db: &Database, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "params {}", to_json(&db.params))?;
    writeln!(out, "report {}", to_json(&db.report))?;
    writeln!(out, "classes {}", db.classes.len())?;
    let mut line = String::new();
    for c in &db.classes {
        line.clear();
        let _ = write!(line, "c {} {} {} {}", c.id, c.basesize, c.instance_size, c.tref.len());
        for t in &c.tref {
            let _ = write!(line, " {t}");
        }
        for r in &c.cref {
            let _ = write!(line, " {}", id_or_zero(*r, ClassId::get));
        }
        writeln!(out, "{line}")?;
    }
    writeln!(out, "objects {}", db.objects.len())?;
    for o in &db.objects {
        line.clear();
        let _ = write!(line, "o {} {} {} {}", o.id, o.class_id, o.size, o.oref.len());
        for r in &o.oref {
            let _ = write!(line, " {}", id_or_zero(*r, ObjectId::get));
        }
        let _ = write!(line, " {}", o.backref.len());
        for b in &o.backref {
            let _ = write!(line, " {}:{}", b.source, b.slot);
        }
        writeln!(out, "{line}")?;
    }
    writeln!(out, "end")
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String> {
        self.number += 1;
        match self.inner.next() {
            Some(Ok(line)) => Ok(line),
            Some(Err(e)) => Err(Error::io("<database>", e)),
            None => Err(self.error("unexpected end of file")),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Format {
            line: self.number,
            message: message.into(),
        }
    }

    /// Next line, which must start with `tag`; returns the remainder.
    fn tagged(&mut self, tag: &str) -> Result<String> {
        let line = self.next()?;
        match line.strip_prefix(tag).and_then(|r| r.strip_prefix(' ')) {
            Some(rest) => Ok(rest.to_string()),
            None => Err(self.error(format!("expected `{tag}` record"))),
        }
    }
}

struct Fields<'a, 'l, R> {
    it: SplitWhitespace<'a>,
    lines: &'l Lines<R>,
}

impl<R: BufRead> Fields<'_, '_, R> {
    fn num<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        self.it
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| self.lines.error(format!("bad or missing {what}")))
    }

    fn word(&mut self, what: &str) -> Result<&str> {
        self.it
            .next()
            .ok_or_else(|| self.lines.error(format!("missing {what}")))
    }

    fn finish(mut self) -> Result<()> {
        match self.it.next() {
            None => Ok(()),
            Some(extra) => Err(self.lines.error(format!("trailing field {extra:?}"))),
        }
    }
}

pub fn read_database<R: Read>(input: R) -> Result<Database> {
    let mut lines = Lines {
        inner: BufReader::new(input).lines(),
        number: 0,
    };
    let magic = lines.next()?;
    if magic != MAGIC {
        if magic.starts_with("OCBDB") {
            return Err(Error::Version {
                found: magic,
                expected: MAGIC,
            });
        }
        return Err(lines.error("missing OCBDB1 header"));
    }
    let params = lines.tagged("params")?;
    let params = serde_json::from_str(&params).map_err(|e| lines.error(format!("params: {e}")))?;
    let report = lines.tagged("report")?;
    let report = serde_json::from_str(&report).map_err(|e| lines.error(format!("report: {e}")))?;

    let nc: usize = lines
        .tagged("classes")?
        .parse()
        .map_err(|_| lines.error("bad class count"))?;
    let mut classes = Vec::with_capacity(nc);
    for i in 0..nc {
        let line = lines.tagged("c")?;
        let mut f = Fields {
            it: line.split_whitespace(),
            lines: &lines,
        };
        let id: u32 = f.num("class id")?;
        if id as usize != i + 1 {
            return Err(lines.error(format!("class id {id} out of sequence")));
        }
        let basesize = f.num("basesize")?;
        let instance_size = f.num("instance size")?;
        let n: usize = f.num("slot count")?;
        let tref = (0..n).map(|_| f.num("tref")).collect::<Result<Vec<u32>>>()?;
        let cref = (0..n)
            .map(|_| f.num::<u32>("cref").map(ClassId::new))
            .collect::<Result<Vec<_>>>()?;
        f.finish()?;
        if cref.iter().flatten().any(|c| c.index() >= nc) {
            return Err(lines.error("class reference out of range"));
        }
        classes.push(ClassDescriptor {
            id: ClassId::from_index(i),
            tref,
            cref,
            basesize,
            instance_size,
            iterator: Vec::new(),
        });
    }

    let no: usize = lines
        .tagged("objects")?
        .parse()
        .map_err(|_| lines.error("bad object count"))?;
    let mut objects = Vec::with_capacity(no);
    for i in 0..no {
        let line = lines.tagged("o")?;
        let mut f = Fields {
            it: line.split_whitespace(),
            lines: &lines,
        };
        let id: u32 = f.num("object id")?;
        if id as usize != i + 1 {
            return Err(lines.error(format!("object id {id} out of sequence")));
        }
        let class_id = ClassId::new(f.num("class")?)
            .filter(|c| c.index() < nc)
            .ok_or_else(|| lines.error("class out of range"))?;
        let size = f.num("size")?;
        let n: usize = f.num("slot count")?;
        let oref = (0..n)
            .map(|_| f.num::<u32>("oref").map(ObjectId::new))
            .collect::<Result<Vec<_>>>()?;
        let m: usize = f.num("backref count")?;
        let mut backref = Vec::with_capacity(m);
        for _ in 0..m {
            let entry = f.word("backref")?;
            let parsed = entry.split_once(':').and_then(|(s, k)| {
                Some(BackRef {
                    source: ObjectId::new(s.parse().ok()?)?,
                    slot: k.parse().ok()?,
                })
            });
            backref.push(parsed.ok_or_else(|| lines.error(format!("bad backref {entry:?}")))?);
        }
        f.finish()?;
        if oref.iter().flatten().any(|o| o.index() >= no)
            || backref.iter().any(|b| b.source.index() >= no)
        {
            return Err(lines.error("object reference out of range"));
        }
        if n != classes[class_id.index()].tref.len() {
            return Err(lines.error("slot count differs from class"));
        }
        classes[class_id.index()].iterator.push(ObjectId::from_index(i));
        objects.push(ObjectInstance {
            id: ObjectId::from_index(i),
            class_id,
            oref,
            backref,
            size,
        });
    }
    if lines.next()? != "end" {
        return Err(lines.error("expected `end`"));
    }
    Ok(Database {
        params,
        classes,
        objects,
        report,
    })
}
