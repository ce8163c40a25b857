//! Synthetic station files in the UCI multi-site layout.
//!
//! Hourly rows run from 2013-03-01 00:00 to 2015-03-01 00:00 inclusive, so
//! each March-to-March window holds 8761 rows and the two windows share the
//! 2014-03-01 00:00 row. Missing cells are planted so that each window has
//! exactly the counts in [`MISSING_COUNTS`]; the shared row is never blanked.

#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use swarm_svr_cli::{ExperimentConfig, ModelKind};

pub const STATION: &str = "Aotizhongxin";
pub const ROWS_PER_WINDOW: usize = 8761;

/// Published missing counts: (column, 2013, 2014).
pub const MISSING_COUNTS: [(&str, usize, usize); 7] = [
    ("PM2.5", 37, 505),
    ("PM10", 30, 487),
    ("NO2", 101, 614),
    ("SO2", 138, 573),
    ("CO", 918, 585),
    ("O3", 617, 597),
    ("wd", 1, 2),
];

/// Published missing fractions: (column, 2013, 2014).
pub const MISSING_FRACTIONS: [(&str, f64, f64); 7] = [
    ("PM2.5", 0.004223, 0.057642),
    ("PM10", 0.003424, 0.055587),
    ("NO2", 0.011528, 0.070083),
    ("SO2", 0.015752, 0.065403),
    ("CO", 0.104783, 0.066773),
    ("O3", 0.070426, 0.068143),
    ("wd", 0.000114, 0.000228),
];

const HEADER: [&str; 18] = [
    "No", "year", "month", "day", "hour", "PM2.5", "PM10", "SO2", "NO2", "CO", "O3", "TEMP",
    "PRES", "DEWP", "RAIN", "wd", "WSPM", "station",
];

const COMPASS: [&str; 16] = [
    "N", "NNE", "NE", "ENE", "E", "ESE", "SE", "SSE", "S", "SSW", "SW", "WSW", "W", "WNW", "NW",
    "NNW",
];

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 31,
    }
}

/// `(year, month, day, hour)` for every hour of the generated span.
pub fn timeline() -> Vec<(i32, u32, u32, u32)> {
    let mut out = Vec::new();
    let (mut y, mut m, mut d) = (2013, 3, 1);
    while (y, m, d) < (2015, 3, 1) {
        for h in 0..24 {
            out.push((y, m, d, h));
        }
        d += 1;
        if d > days_in_month(y, m) {
            d = 1;
            m += 1;
            if m > 12 {
                m = 1;
                y += 1;
            }
        }
    }
    out.push((2015, 3, 1, 0));
    out
}

fn fmt1(v: f64) -> String {
    format!("{:.1}", v)
}

/// Writes the synthetic file and returns the number of data rows.
pub fn write_station_csv(path: &Path, seed: u64) -> usize {
    let hours = timeline();
    let n = hours.len();
    assert_eq!(n, 2 * ROWS_PER_WINDOW - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();

    // Column index in HEADER -> rows to blank.
    let mut blank = vec![vec![false; n]; HEADER.len()];
    let boundary = ROWS_PER_WINDOW - 1;
    for (name, c13, c14) in MISSING_COUNTS {
        let col = HEADER.iter().position(|h| *h == name).unwrap();
        for r in sample(&mut rng, boundary, c13) {
            blank[col][r] = true;
        }
        for r in sample(&mut rng, ROWS_PER_WINDOW - 1, c14) {
            blank[col][boundary + 1 + r] = true;
        }
    }

    let mut w = csv::Writer::from_path(path).unwrap();
    w.write_record(HEADER).unwrap();
    let mut level: f64 = 0.0;
    let tau = std::f64::consts::TAU;
    for (i, &(y, m, d, h)) in hours.iter().enumerate() {
        level = 0.97 * level + 0.22 * noise.sample(&mut rng);
        let season = tau * (i as f64 / 8760.0);
        let daily = tau * (h as f64 / 24.0);
        let pm25 =
            (45.0 * (level + 0.3 * season.cos()).exp() * (1.0 + 0.05 * noise.sample(&mut rng)))
                .max(3.0);
        let pm10 =
            (pm25 * rng.random_range(1.1..1.5) + 12.0 + 6.0 * noise.sample(&mut rng)).max(pm25);
        let so2 = (3.0 + 0.08 * pm25 + 2.0 * noise.sample(&mut rng)).max(2.0);
        let no2 = (15.0 + 3.5 * pm25.sqrt() + 6.0 * noise.sample(&mut rng)).max(2.0);
        let co = (200.0 + 11.0 * pm25 + 80.0 * noise.sample(&mut rng)).max(100.0);
        let temp =
            13.0 - 14.0 * season.cos() + 4.0 * (daily - 2.0).sin() + 1.5 * noise.sample(&mut rng);
        let o3 = (55.0 - 25.0 * season.cos() + 20.0 * (daily - 2.0).sin() - 0.12 * pm25
            + 8.0 * noise.sample(&mut rng))
        .max(2.0);
        let pres = 1012.0 - 0.7 * (temp - 13.0) + 3.0 * noise.sample(&mut rng);
        let dewp = temp - 12.0 + 0.04 * pm25 + 3.0 * noise.sample(&mut rng);
        let rain = if rng.random::<f64>() < 0.04 {
            rng.random_range(0.1..8.0)
        } else {
            0.0
        };
        let wspm = (2.4 - 0.9 * level + 0.7 * noise.sample(&mut rng)).max(0.0);
        let wd = COMPASS[rng.random_range(0..16)];

        let mut cells: Vec<String> = vec![
            (i + 1).to_string(),
            y.to_string(),
            m.to_string(),
            d.to_string(),
            h.to_string(),
            pm25.round().to_string(),
            pm10.round().to_string(),
            so2.round().to_string(),
            no2.round().to_string(),
            ((co / 10.0).round() * 10.0).to_string(),
            o3.round().to_string(),
            fmt1(temp),
            fmt1(pres),
            fmt1(dewp),
            fmt1(rain),
            wd.to_string(),
            fmt1(wspm),
            STATION.to_string(),
        ];
        for (col, cell) in cells.iter_mut().enumerate() {
            if blank[col][i] {
                *cell = "NA".into();
            }
        }
        w.write_record(&cells).unwrap();
    }
    w.flush().unwrap();
    n
}

/// Writes a config JSON next to the data and returns its path.
pub fn write_config(dir: &Path, cfg: &serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "{}", serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

/// Config for small, quick runs over a synthetic file in `dir`.
pub fn quick_config(data: &Path, out: &Path, subsample: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        data_path: data.to_path_buf(),
        output_dir: out.to_path_buf(),
        subsample: Some(subsample),
        seed: 7,
        ..ExperimentConfig::default()
    };
    cfg.pso.population = 6;
    cfg.pso.iterations = 3;
    cfg.gwo.population = 6;
    cfg.gwo.iterations = 3;
    cfg.optimizer = ModelKind::None;
    cfg
}
