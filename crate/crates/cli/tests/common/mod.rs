//! Synthetic data in the UJIIndoorLoc column layout.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N_WAPS: usize = 520;
pub const USED_WAPS: usize = 36;
pub const MISSING: i32 = 100;

pub fn header() -> String {
    let mut h: Vec<String> = (1..=N_WAPS).map(|i| format!("WAP{i:03}")).collect();
    for c in [
        "LONGITUDE",
        "LATITUDE",
        "FLOOR",
        "BUILDINGID",
        "SPACEID",
        "RELATIVEPOSITION",
        "USERID",
        "PHONEID",
        "TIMESTAMP",
    ] {
        h.push(c.to_owned());
    }
    h.join(",")
}

/// Three buildings of two floors; each building hosts twelve access points
/// spread over both floors.
pub struct Site {
    aps: Vec<(f64, f64, i64, i64)>,
}

pub const BUILDINGS: i64 = 3;
pub const FLOORS: i64 = 2;

impl Site {
    pub fn new() -> Self {
        let mut aps = Vec::new();
        for b in 0..BUILDINGS {
            for j in 0..12 {
                let x = b as f64 * 120.0 + 8.0 + 16.0 * (j % 4) as f64;
                let y = 10.0 + 15.0 * ((j / 4) % 3) as f64;
                aps.push((x, y, j as i64 % FLOORS, b));
            }
        }
        assert_eq!(aps.len(), USED_WAPS);
        Site { aps }
    }

    /// RSS readings (dBm, or the missing code) for a capture at a location.
    pub fn capture(&self, rng: &mut ChaCha8Rng, x: f64, y: f64, floor: i64, building: i64) -> Vec<i32> {
        let mut row = vec![MISSING; N_WAPS];
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (i, &(ax, ay, af, ab)) in self.aps.iter().enumerate() {
            let d = (x - ax).hypot(y - ay) + 1.0;
            let mut rss = -32.0 - 22.0 * d.log10() - 14.0 * (af - floor).abs() as f64;
            if ab != building {
                rss -= 35.0;
            }
            rss += rng.random_range(-3.0..3.0);
            if rss > best.0 {
                best = (rss, i);
            }
            if rss > -92.0 {
                row[i] = rss.round() as i32;
            }
        }
        if row.iter().all(|&v| v == MISSING) {
            row[best.1] = best.0.round().max(-99.0) as i32;
        }
        row
    }
}

pub struct Row {
    pub rss: Vec<i32>,
    pub x: f64,
    pub y: f64,
    pub floor: i64,
    pub building: i64,
    pub user: u32,
    pub phone: u32,
    pub timestamp: i64,
}

impl Row {
    fn write(&self, out: &mut String) {
        for v in &self.rss {
            write!(out, "{v},").unwrap();
        }
        writeln!(
            out,
            "{:.4},{:.4},{},{},101,2,{},{},{}",
            -7600.0 + self.x,
            4864900.0 + self.y,
            self.floor,
            self.building,
            self.user,
            self.phone,
            self.timestamp
        )
        .unwrap();
    }
}

/// Known composition of a generated training file.
pub struct TrainingCounts {
    pub n_rows: usize,
    pub n_invalid: usize,
    pub n_replica_groups: usize,
    pub n_kept: usize,
}

/// `points_per_floor` reference points per floor. Each point gets a burst of
/// three captures 10 s apart (one replica group) and a lone capture 1000 s
/// later. `n_invalid` all-missing rows are appended.
pub fn training_csv(seed: u64, points_per_floor: usize, n_invalid: usize) -> (String, TrainingCounts) {
    let site = Site::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = header();
    out.push('\n');
    let mut rows = Vec::new();
    let mut t = 1_371_700_000;
    for b in 0..BUILDINGS {
        for f in 0..FLOORS {
            for _ in 0..points_per_floor {
                let x = b as f64 * 120.0 + rng.random_range(0.0..60.0);
                let y = rng.random_range(0.0..40.0);
                let user = rng.random_range(1..=18);
                let phone = rng.random_range(1..=24);
                for dt in [0, 10, 20, 1000] {
                    rows.push(Row {
                        rss: site.capture(&mut rng, x, y, f, b),
                        x,
                        y,
                        floor: f,
                        building: b,
                        user,
                        phone,
                        timestamp: t + dt,
                    });
                }
                t += 5000;
            }
        }
    }
    for i in 0..n_invalid {
        rows.push(Row {
            rss: vec![MISSING; N_WAPS],
            x: i as f64,
            y: 0.0,
            floor: 0,
            building: 0,
            user: 1,
            phone: 1,
            timestamp: t + i as i64,
        });
    }
    let n_points = (BUILDINGS * FLOORS) as usize * points_per_floor;
    for r in &rows {
        r.write(&mut out);
    }
    let counts = TrainingCounts {
        n_rows: rows.len(),
        n_invalid,
        n_replica_groups: n_points,
        n_kept: 2 * n_points,
    };
    (out, counts)
}

/// One capture at each of `n` random locations.
pub fn validation_csv(seed: u64, n: usize) -> String {
    let site = Site::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = header();
    out.push('\n');
    for i in 0..n {
        let b = rng.random_range(0..BUILDINGS);
        let f = rng.random_range(0..FLOORS);
        let x = b as f64 * 120.0 + rng.random_range(0.0..60.0);
        let y = rng.random_range(0.0..40.0);
        Row {
            rss: site.capture(&mut rng, x, y, f, b),
            x,
            y,
            floor: f,
            building: b,
            user: 0,
            phone: 0,
            timestamp: 1_380_000_000 + i as i64,
        }
        .write(&mut out);
    }
    out
}

pub fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

pub fn cdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdm")).args(args).output().unwrap()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
