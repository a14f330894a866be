//! Independent oracles and fixture helpers shared by the integration tests.
//!
//! The oracles deliberately avoid the library's own helpers: medians come
//! from a full sort, containment from even-odd ray casting, gradients from a
//! direct difference formula.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use aerocorpus::config::PipelineConfig;
use aerocorpus::geo::GeoPoint;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixture").canonicalize().expect("fixture directory")
}

/// Config over the bundled fixture inputs with all outputs under `work`.
pub fn fixture_config(work: &Path) -> PipelineConfig {
    let text = format!(
        "include = {}\norganized_root = organized\narchive_root = archives\nprocessed_root = processed\n\
         stats_root = stats\nreport_root = reports\n",
        fixture_dir().join("inputs.cfg").display()
    );
    let path = work.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    PipelineConfig::load(&path).expect("fixture config")
}

pub fn sorted_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Brute-force scaled-MAD mask with the zero-MAD floor rule.
pub fn mad_oracle(x: &[f64], k: f64, floor: f64) -> Vec<bool> {
    if x.len() < 3 {
        return vec![false; x.len()];
    }
    let m = sorted_median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    let mad = sorted_median(&dev);
    let bound = if mad == 0.0 { floor } else { k * 1.4826 * mad };
    dev.iter().map(|d| *d > bound).collect()
}

/// Even-odd ray casting in the (lon, lat) plane.
pub fn ray_cast(ring: &[GeoPoint], p: GeoPoint) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if p.lon < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance in degrees from `p` to segment `ab`, planar.
pub fn edge_distance(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    let (dx, dy) = (b.lon - a.lon, b.lat - a.lat);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2).clamp(0.0, 1.0) };
    let (qx, qy) = (a.lon + t * dx, a.lat + t * dy);
    ((p.lon - qx).powi(2) + (p.lat - qy).powi(2)).sqrt()
}

/// Central differences inside, forward and backward at the ends.
pub fn gradient_oracle(y: &[f64], t: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut g = vec![0.0; n];
    if n < 2 {
        return g;
    }
    g[0] = (y[1] - y[0]) / (t[1] - t[0]);
    g[n - 1] = (y[n - 1] - y[n - 2]) / (t[n - 1] - t[n - 2]);
    for i in 1..n - 1 {
        g[i] = (y[i + 1] - y[i - 1]) / (t[i + 1] - t[i - 1]);
    }
    g
}

/// Relative paths and contents of every file under `root`, sorted.
pub fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}
