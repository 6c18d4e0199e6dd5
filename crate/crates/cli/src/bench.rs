//! Batch runs over an instance directory: one CSV row per (instance,
//! planner, repeat) plus aggregate statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use sirrt_core::io::{self, PathFile};

use crate::{load_instance, BenchArgs, Planner};

/// Columns that depend on wall-clock time; everything else is reproducible.
pub const TIMING_COLUMNS: [&str; 2] = ["runtime_s", "index_build_s"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub k: usize,
    pub planner: String,
    pub seed: u64,
    pub repeat: u32,
    pub success: bool,
    /// Why the run failed; empty on success.
    pub failure: String,
    pub runtime_s: f64,
    pub index_build_s: f64,
    pub t_arrival: Option<f64>,
    pub iterations: u64,
    pub nodes: usize,
    pub interval_queries: u64,
}

pub const CSV_HEADER: [&str; 13] = [
    "instance_id",
    "k",
    "planner",
    "seed",
    "repeat",
    "success",
    "failure",
    "runtime_s",
    "index_build_s",
    "t_arrival",
    "iterations",
    "nodes",
    "interval_queries",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    /// Linear-interpolation quartiles; `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Quantile of sorted data, interpolating between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub k: usize,
    pub planner: String,
    pub attempts: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Runtime over runs that every planner solved.
    pub mutual_runs: usize,
    pub mutual_runtime: Option<Quartiles>,
    /// Arrival time over this planner's successful runs.
    pub arrival: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
}

impl Machine {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub machine: Machine,
    pub groups: Vec<GroupSummary>,
}

impl BenchSummary {
    pub fn from_records(records: &[BenchRecord]) -> Self {
        let planners: BTreeSet<&str> = records.iter().map(|r| r.planner.as_str()).collect();
        // (instance, repeat) pairs solved by every planner that ran them.
        let mut solved: BTreeMap<(&str, u32), usize> = BTreeMap::new();
        for r in records.iter().filter(|r| r.success) {
            *solved.entry((&r.instance_id, r.repeat)).or_default() += 1;
        }
        let mutual = |r: &BenchRecord| solved.get(&(r.instance_id.as_str(), r.repeat)) == Some(&planners.len());

        let mut groups: BTreeMap<(usize, &str), Vec<&BenchRecord>> = BTreeMap::new();
        for r in records {
            groups.entry((r.k, &r.planner)).or_default().push(r);
        }
        let groups = groups
            .into_iter()
            .map(|((k, planner), rs)| {
                let successes = rs.iter().filter(|r| r.success).count();
                let mutual_rt: Vec<f64> = rs.iter().filter(|r| mutual(r)).map(|r| r.runtime_s).collect();
                let arrivals: Vec<f64> = rs.iter().filter_map(|r| r.t_arrival).collect();
                GroupSummary {
                    k,
                    planner: planner.to_string(),
                    attempts: rs.len(),
                    successes,
                    success_rate: successes as f64 / rs.len() as f64,
                    mutual_runs: mutual_rt.len(),
                    mutual_runtime: Quartiles::of(&mutual_rt),
                    arrival: Quartiles::of(&arrivals),
                }
            })
            .collect();
        Self { machine: Machine::current(), groups }
    }

    /// Plain-text table for the terminal.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>5} {:<12} {:>9} {:>8} {:>12} {:>12}",
            "K", "planner", "solved", "SR", "median rt", "median t_arr"
        );
        for g in &self.groups {
            let rt = g.mutual_runtime.map(|q| format!("{:.4}", q.median)).unwrap_or_else(|| "-".into());
            let arr = g.arrival.map(|q| format!("{:.3}", q.median)).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:>5} {:<12} {:>4}/{:<4} {:>7.1}% {:>12} {:>12}",
                g.k,
                g.planner,
                g.successes,
                g.attempts,
                100.0 * g.success_rate,
                rt,
                arr
            );
        }
        out
    }
}

/// Instance files in `dir`, sorted by name.
pub fn list_instances(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn summary_path(out_csv: &Path) -> PathBuf {
    let stem = out_csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "bench".into());
    out_csv.with_file_name(format!("{stem}.summary.json"))
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<BenchRecord>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    reader.deserialize().map(|r| r.map_err(anyhow::Error::from)).collect()
}

/// Runs every planner `repeats` times on every instance under `instances`.
pub fn cmd_bench(args: &BenchArgs) -> anyhow::Result<BenchSummary> {
    let files = list_instances(&args.instances)?;
    if let Some(dir) = &args.paths {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut writer = csv::Writer::from_path(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut records = Vec::new();
    for file in &files {
        let instance = load_instance(file)?;
        let id = file.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        for &planner in &args.planner {
            for repeat in 0..args.repeats {
                let seed = args.seed + repeat as u64;
                let params = args.planner_args.params(seed)?;
                let outcome = planner.run(&instance, &params);
                let s = &outcome.stats;
                let record = BenchRecord {
                    instance_id: id.clone(),
                    k: instance.scene.dynamics.len(),
                    planner: planner.name().to_string(),
                    seed,
                    repeat,
                    success: outcome.success(),
                    failure: outcome.failure.as_ref().map(|f| f.to_string()).unwrap_or_default(),
                    runtime_s: s.runtime_s,
                    index_build_s: s.index_build_s,
                    t_arrival: outcome.path.as_ref().map(|p| p.t_arrival),
                    iterations: s.iterations,
                    nodes: s.start_nodes + s.goal_nodes,
                    interval_queries: s.interval_queries,
                };
                if let (Some(dir), Some(path)) = (&args.paths, &outcome.path) {
                    let name = format!("{id}__{}__r{repeat:02}.json", planner_slug(planner));
                    io::save_json(&dir.join(name), &PathFile::new(planner.name(), path, &params, s))?;
                }
                writer.serialize(&record)?;
                writer.flush()?;
                records.push(record);
            }
        }
    }
    if records.is_empty() {
        writer.write_record(CSV_HEADER)?;
    }
    writer.flush()?;
    let summary = BenchSummary::from_records(&records);
    io::save_json(&summary_path(&args.out), &summary)?;
    Ok(summary)
}

fn planner_slug(p: Planner) -> &'static str {
    match p {
        Planner::SiRrt => "si",
        Planner::StBaseline => "st",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, planner: &str, success: bool, rt: f64, arr: Option<f64>) -> BenchRecord {
        BenchRecord {
            instance_id: id.into(),
            k: 20,
            planner: planner.into(),
            seed: 0,
            repeat: 0,
            success,
            failure: String::new(),
            runtime_s: rt,
            index_build_s: 0.0,
            t_arrival: arr,
            iterations: 1,
            nodes: 2,
            interval_queries: 3,
        }
    }

    #[test]
    fn quartiles_interpolate() {
        let q = Quartiles::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (1.0, 1.75, 2.5, 3.25, 4.0));
        assert!(Quartiles::of(&[]).is_none());
    }

    #[test]
    fn summary_counts_and_mutual_runs() {
        let records = vec![
            rec("a", "si-rrt", true, 1.0, Some(5.0)),
            rec("a", "st-baseline", true, 3.0, Some(9.0)),
            rec("b", "si-rrt", true, 2.0, Some(6.0)),
            rec("b", "st-baseline", false, 20.0, None),
        ];
        let s = BenchSummary::from_records(&records);
        assert_eq!(s.groups.len(), 2);
        let si = &s.groups[0];
        assert_eq!((si.planner.as_str(), si.attempts, si.successes, si.mutual_runs), ("si-rrt", 2, 2, 1));
        assert_eq!(si.success_rate, 1.0);
        assert_eq!(si.mutual_runtime.unwrap().median, 1.0);
        assert_eq!(si.arrival.unwrap().median, 5.5);
        let st = &s.groups[1];
        assert_eq!((st.successes, st.success_rate), (1, 0.5));
        assert_eq!(st.mutual_runtime.unwrap().median, 3.0);
    }

    #[test]
    fn header_matches_record_fields() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut w = csv::Writer::from_path(&p).unwrap();
        w.serialize(rec("a", "si-rrt", true, 1.0, Some(2.0))).unwrap();
        drop(w);
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(read_records(&p).unwrap(), vec![rec("a", "si-rrt", true, 1.0, Some(2.0))]);
    }

    #[test]
    fn summary_file_name() {
        assert_eq!(summary_path(Path::new("/x/runs.csv")), PathBuf::from("/x/runs.summary.json"));
    }
}
