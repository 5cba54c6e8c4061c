//! Aggregation of experiment logs into per-phase, per-type metrics and
//! before/after gain factors, plus the CSV, JSON and text exports.
//!
//! CSV columns, in order:
//!
//! ```text
//! seq,client,phase,type,direction,root,objects,distinct,faults,sim_time,reorganized,overhead_reads,overhead_writes
//! ```
//!
//! `phase` is `COLD` or `HOT`; `type` is `set`, `simple`, `hierarchy` or
//! `stochastic`; `direction` is `forward` or `reverse`; `reorganized` is 0 or
//! 1 and the two overhead columns hold the I/O of a reorganization run right
//! after that transaction. `sim_time` is written in shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::workload::{Direction, ExperimentLog, Phase, TransactionKind, TransactionRecord};

/// Default number of transactions in each gain window.
pub const DEFAULT_GAIN_WINDOW: usize = 500;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeStats {
    pub count: u64,
    pub total_objects: u64,
    pub total_distinct: u64,
    pub total_faults: u64,
    pub total_sim_time: f64,
    pub mean_objects: f64,
    pub mean_faults: f64,
    pub mean_sim_time: f64,
}

impl TypeStats {
    fn add(&mut self, r: &TransactionRecord) {
        self.count += 1;
        self.total_objects += r.objects;
        self.total_distinct += r.distinct;
        self.total_faults += r.faults;
        self.total_sim_time += r.sim_time;
    }

    fn finish(&mut self) {
        if self.count > 0 {
            let n = self.count as f64;
            self.mean_objects = self.total_objects as f64 / n;
            self.mean_faults = self.total_faults as f64 / n;
            self.mean_sim_time = self.total_sim_time / n;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub phase: Phase,
    pub all: TypeStats,
    pub by_type: BTreeMap<TransactionKind, TypeStats>,
}

/// Mean transaction faults before the first reorganization against the end of
/// the warm run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub window: usize,
    pub before_count: usize,
    pub after_count: usize,
    pub before_mean_faults: f64,
    pub after_mean_faults: f64,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub phases: Vec<PhaseStats>,
    pub overhead_reads: u64,
    pub overhead_writes: u64,
    pub reorganizations: u64,
    pub gain: Option<Gain>,
}

impl MetricsReport {
    pub fn phase(&self, phase: Phase) -> &PhaseStats {
        self.phases
            .iter()
            .find(|p| p.phase == phase)
            .expect("both phases are always reported")
    }
}

/// `before / after`, defined only when `after > 0`.
pub fn gain_factor(before_mean: f64, after_mean: f64) -> Option<f64> {
    (after_mean > 0.0).then(|| before_mean / after_mean)
}

fn mean_faults(records: &[&TransactionRecord]) -> f64 {
    records.iter().map(|r| r.faults).sum::<u64>() as f64 / records.len() as f64
}

/// Aggregates a log. Rows are put in `seq` order first, so the result does
/// not depend on the order rows arrive in.
///
/// The gain compares the last `window` transactions up to and including the
/// one after which the first reorganization ran, against the last `window`
/// HOT transactions.
pub fn aggregate(log: &ExperimentLog, window: usize) -> MetricsReport {
    let mut rows: Vec<&TransactionRecord> = log.records.iter().collect();
    rows.sort_by_key(|r| r.seq);

    let mut phases: Vec<PhaseStats> = [Phase::Cold, Phase::Hot]
        .into_iter()
        .map(|phase| PhaseStats {
            phase,
            all: TypeStats::default(),
            by_type: TransactionKind::ALL
                .into_iter()
                .map(|k| (k, TypeStats::default()))
                .collect(),
        })
        .collect();
    let mut report = MetricsReport {
        phases: Vec::new(),
        overhead_reads: 0,
        overhead_writes: 0,
        reorganizations: 0,
        gain: None,
    };
    for r in &rows {
        let stats = &mut phases[usize::from(r.phase == Phase::Hot)];
        stats.all.add(r);
        stats.by_type.get_mut(&r.kind).expect("all kinds present").add(r);
        report.overhead_reads += r.overhead_reads;
        report.overhead_writes += r.overhead_writes;
        report.reorganizations += u64::from(r.reorganized);
    }
    for p in &mut phases {
        p.all.finish();
        p.by_type.values_mut().for_each(TypeStats::finish);
    }
    report.phases = phases;

    if let Some(first) = rows.iter().position(|r| r.reorganized) {
        let before_all = &rows[..=first];
        let before = &before_all[before_all.len().saturating_sub(window)..];
        let hot: Vec<&TransactionRecord> = rows.iter().copied().filter(|r| r.phase == Phase::Hot).collect();
        let after = &hot[hot.len().saturating_sub(window)..];
        if !before.is_empty() && !after.is_empty() {
            let before_mean = mean_faults(before);
            let after_mean = mean_faults(after);
            if let Some(factor) = gain_factor(before_mean, after_mean) {
                report.gain = Some(Gain {
                    window,
                    before_count: before.len(),
                    after_count: after.len(),
                    before_mean_faults: before_mean,
                    after_mean_faults: after_mean,
                    factor,
                });
            }
        }
    }
    report
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    seq: u64,
    client: u32,
    phase: String,
    #[serde(rename = "type")]
    kind: String,
    direction: String,
    root: u32,
    objects: u64,
    distinct: u64,
    faults: u64,
    sim_time: f64,
    reorganized: u8,
    overhead_reads: u64,
    overhead_writes: u64,
}

pub fn write_csv<W: Write>(log: &ExperimentLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in &log.records {
        w.serialize(CsvRow {
            seq: r.seq,
            client: r.client,
            phase: r.phase.as_str().into(),
            kind: r.kind.as_str().into(),
            direction: r.direction.as_str().into(),
            root: r.root,
            objects: r.objects,
            distinct: r.distinct,
            faults: r.faults,
            sim_time: r.sim_time,
            reorganized: u8::from(r.reorganized),
            overhead_reads: r.overhead_reads,
            overhead_writes: r.overhead_writes,
        })
        .map_err(|e| Error::Report(e.to_string()))?;
    }
    if log.records.is_empty() {
        w.write_record([
            "seq", "client", "phase", "type", "direction", "root", "objects", "distinct", "faults",
            "sim_time", "reorganized", "overhead_reads", "overhead_writes",
        ])
        .map_err(|e| Error::Report(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Report(e.to_string()))
}

pub fn read_csv<R: Read>(input: R) -> Result<ExperimentLog> {
    let mut reader = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(|e| Error::Report(e.to_string()))?;
        records.push(TransactionRecord {
            seq: row.seq,
            client: row.client,
            phase: row.phase.parse()?,
            kind: row.kind.parse()?,
            direction: row.direction.parse::<Direction>()?,
            root: row.root,
            objects: row.objects,
            distinct: row.distinct,
            faults: row.faults,
            sim_time: row.sim_time,
            reorganized: match row.reorganized {
                0 => false,
                1 => true,
                v => return Err(Error::Report(format!("reorganized must be 0 or 1, got {v}"))),
            },
            overhead_reads: row.overhead_reads,
            overhead_writes: row.overhead_writes,
        });
    }
    Ok(ExperimentLog { records })
}

/// Everything a run writes to its JSON summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Digest of everything except the policy: runs with equal fingerprints
    /// execute the same transactions.
    pub fingerprint: String,
    pub policy: String,
    pub seed: u64,
    /// Fully resolved configuration as `key = value` pairs.
    pub config: BTreeMap<String, String>,
    pub metrics: MetricsReport,
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    if b != 0.0 {
        Some(a / b)
    } else if a == 0.0 {
        Some(1.0)
    } else {
        None
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub phase: Phase,
    /// Transaction type, or `all`.
    pub scope: String,
    pub metric: String,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    /// `a / b`; 1 when both are zero, absent when only `b` is.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub policy_a: String,
    pub policy_b: String,
    pub fingerprint_a: String,
    pub fingerprint_b: String,
    pub rows: Vec<ComparisonRow>,
    pub gain_a: Option<f64>,
    pub gain_b: Option<f64>,
}

impl Comparison {
    pub fn row(&self, phase: Phase, scope: &str, metric: &str) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.phase == phase && r.scope == scope && r.metric == metric)
    }
}

/// Side-by-side table of two runs. Runs of different workloads are refused
/// unless `force` is set.
pub fn compare(a: &RunSummary, b: &RunSummary, force: bool) -> Result<Comparison> {
    if a.fingerprint != b.fingerprint && !force {
        return Err(Error::Comparison(format!(
            "workload fingerprints differ ({} vs {}); pass --force to compare anyway",
            a.fingerprint, b.fingerprint
        )));
    }
    let mut rows = Vec::new();
    for phase in [Phase::Cold, Phase::Hot] {
        let (pa, pb) = (a.metrics.phase(phase), b.metrics.phase(phase));
        let scopes = std::iter::once(("all".to_string(), &pa.all, &pb.all)).chain(
            TransactionKind::ALL
                .into_iter()
                .map(|k| (k.as_str().to_string(), &pa.by_type[&k], &pb.by_type[&k])),
        );
        for (scope, sa, sb) in scopes {
            for (metric, x, y) in [
                ("count", sa.count as f64, sb.count as f64),
                ("mean_objects", sa.mean_objects, sb.mean_objects),
                ("mean_faults", sa.mean_faults, sb.mean_faults),
                ("mean_sim_time", sa.mean_sim_time, sb.mean_sim_time),
            ] {
                rows.push(ComparisonRow {
                    phase,
                    scope: scope.clone(),
                    metric: metric.into(),
                    a: x,
                    b: y,
                    delta: y - x,
                    ratio: ratio(x, y),
                });
            }
        }
    }
    Ok(Comparison {
        policy_a: a.policy.clone(),
        policy_b: b.policy.clone(),
        fingerprint_a: a.fingerprint.clone(),
        fingerprint_b: b.fingerprint.clone(),
        rows,
        gain_a: a.metrics.gain.as_ref().map(|g| g.factor),
        gain_b: b.metrics.gain.as_ref().map(|g| g.factor),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
}

/// Plain-text report: per-phase table plus the before/after I/O line.
pub fn render_report(label: &str, report: &MetricsReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<6} {:<11} {:>7} {:>13} {:>12} {:>14}",
        "phase", "type", "count", "mean objects", "mean faults", "mean sim time"
    );
    for p in &report.phases {
        let rows = std::iter::once(("all", &p.all))
            .chain(p.by_type.iter().map(|(k, v)| (k.as_str(), v)));
        for (scope, t) in rows {
            let _ = writeln!(
                s,
                "{:<6} {:<11} {:>7} {:>13.2} {:>12.3} {:>14.3}",
                p.phase.as_str(),
                scope,
                t.count,
                t.mean_objects,
                t.mean_faults,
                t.mean_sim_time
            );
        }
    }
    let _ = writeln!(
        s,
        "\noverhead I/O: {} reads, {} writes over {} reorganizations\n",
        report.overhead_reads, report.overhead_writes, report.reorganizations
    );
    let _ = writeln!(
        s,
        "{:<12} | {:>28} | {:>27} | {:>11}",
        "Benchmark", "Number of I/Os (before recl.)", "Number of I/Os (after recl.)", "Gain Factor"
    );
    match &report.gain {
        Some(g) => {
            let _ = writeln!(
                s,
                "{:<12} | {:>28.2} | {:>27.2} | {:>11.2}",
                label, g.before_mean_faults, g.after_mean_faults, g.factor
            );
        }
        None => {
            let _ = writeln!(s, "{:<12} | {:>28} | {:>27} | {:>11}", label, "-", "-", "-");
        }
    }
    s
}

pub fn render_comparison(c: &Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "a = {} ({})", c.policy_a, c.fingerprint_a);
    let _ = writeln!(s, "b = {} ({})\n", c.policy_b, c.fingerprint_b);
    let _ = writeln!(
        s,
        "{:<6} {:<11} {:<14} {:>12} {:>12} {:>12} {:>9}",
        "phase", "type", "metric", "a", "b", "b - a", "a / b"
    );
    for r in &c.rows {
        let _ = writeln!(
            s,
            "{:<6} {:<11} {:<14} {:>12.3} {:>12.3} {:>12.3} {:>9}",
            r.phase.as_str(),
            r.scope,
            r.metric,
            r.a,
            r.b,
            r.delta,
            opt(r.ratio)
        );
    }
    let _ = writeln!(s, "\ngain factor: a {}  b {}", opt(c.gain_a), opt(c.gain_b));
    s
}
