//! Solution files. Line oriented, no timing data, so identical runs produce
//! identical bytes.
//!
//! ```text
//! driver-solution v1
//! mode eswo
//! seed 1
//! objective 4990
//! iterations 1042
//! S <shift id>          one line per chosen shift, ids ascending
//! ```
//!
//! ```text
//! nurse-solution v1
//! mode eswo
//! seed 1
//! objective 8
//! iterations 10001
//! cost 8
//! shortage 0
//! A <nurse id> <pattern>   pattern is the 1-based position in the instance file
//! ```

use std::fmt::Write as _;

use eswo::driver::{DriverInstance, DriverSchedule};
use eswo::nurse::{NurseInstance, NurseSchedule};
use eswo::Mode;

pub struct RunInfo {
    pub mode: Mode,
    pub seed: u64,
    pub objective: i64,
    pub iterations: u64,
}

fn header(out: &mut String, kind: &str, info: &RunInfo) {
    let _ = writeln!(out, "{kind}-solution v1");
    let _ = writeln!(out, "mode {}", info.mode);
    let _ = writeln!(out, "seed {}", info.seed);
    let _ = writeln!(out, "objective {}", info.objective);
    let _ = writeln!(out, "iterations {}", info.iterations);
}

pub fn format_driver(info: &RunInfo, schedule: &DriverSchedule, instance: &DriverInstance) -> String {
    let mut out = String::new();
    header(&mut out, "driver", info);
    let mut ids = schedule.shift_ids(instance);
    ids.sort_unstable();
    for id in ids {
        let _ = writeln!(out, "S {id}");
    }
    out
}

pub fn format_nurse(info: &RunInfo, schedule: &NurseSchedule, instance: &NurseInstance) -> String {
    let mut out = String::new();
    header(&mut out, "nurse", info);
    let _ = writeln!(out, "cost {}", schedule.preference_cost(instance));
    let _ = writeln!(out, "shortage {}", schedule.total_shortage(instance));
    for (nurse, pattern) in instance.nurses().iter().zip(schedule.assignment()) {
        if let Some(j) = pattern {
            let _ = writeln!(out, "A {} {}", nurse.id, j + 1);
        }
    }
    out
}
