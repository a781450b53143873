//! Success counting, convex-hull dispersion and per-bias aggregation.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{d_mag_linearized_sq, Pose};
use crate::rwmh::Bias;
use crate::targets::TargetDensity;

/// Poses closer than this (linearized distance, unit translation weight) count once.
pub const DEDUP_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub success_count: usize,
    pub unique_success_count: usize,
    pub acceptance_rate: f64,
    pub dispersion_area: f64,
    pub dispersion_degenerate: bool,
    pub c_value: f64,
    pub bias: Bias,
    pub seed: u64,
}

/// Successful poses among `chain` and the distinct ones among those.
pub fn successful_poses(chain: &[Pose], target: &dyn TargetDensity) -> (usize, Vec<Pose>) {
    let mut count = 0;
    let mut unique: Vec<Pose> = Vec::new();
    let tol = DEDUP_DISTANCE * DEDUP_DISTANCE;
    for g in chain.iter().filter(|g| target.is_success(g)) {
        count += 1;
        // Repeats from rejected proposals are usually the last unique entry.
        if !unique.iter().rev().any(|u| d_mag_linearized_sq(g, u, 1.0) <= tol) {
            unique.push(*g);
        }
    }
    (count, unique)
}

/// `(success_count, unique_success_count)`.
pub fn count_successes(chain: &[Pose], target: &dyn TargetDensity) -> (usize, usize) {
    let (n, unique) = successful_poses(chain, target);
    (n, unique.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullArea {
    pub area: f64,
    /// Fewer than 4 points, or all of them (nearly) coplanar.
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
    outside: Vec<usize>,
    alive: bool,
}

impl Face {
    fn new(pts: &[Vector3<f64>], v: [usize; 3]) -> Face {
        let n = (pts[v[1]] - pts[v[0]]).cross(&(pts[v[2]] - pts[v[0]]));
        let normal = n / n.norm();
        Face { v, normal, offset: normal.dot(&pts[v[0]]), outside: Vec::new(), alive: true }
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

fn farthest_by<F: Fn(&Vector3<f64>) -> f64>(pts: &[Vector3<f64>], f: F) -> (usize, f64) {
    pts.iter().enumerate().map(|(i, p)| (i, f(p))).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Surface area of the 3D convex hull (quickhull).
///
/// Coplanarity is judged relative to the extent of the point cloud, with
/// tolerance `1e-12 * extent`.
pub fn convex_hull_area(points: &[Vector3<f64>]) -> HullArea {
    let degenerate = HullArea { area: 0.0, degenerate: true };
    if points.len() < 4 || points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
        return degenerate;
    }
    let pts = points;
    let (i_min, _) = farthest_by(pts, |p| -p.x);
    let (i_max, _) = farthest_by(pts, |p| p.x);
    let (a, b) = {
        // Start from the most distant pair among the axis extremes.
        let mut ext = vec![i_min, i_max];
        for k in 1..3 {
            ext.push(farthest_by(pts, |p| p[k]).0);
            ext.push(farthest_by(pts, |p| -p[k]).0);
        }
        let mut best = (ext[0], ext[1], -1.0);
        for &i in &ext {
            for &j in &ext {
                let d = (pts[i] - pts[j]).norm_squared();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        (best.0, best.1)
    };
    let extent = (pts[a] - pts[b]).norm();
    if extent == 0.0 {
        return degenerate;
    }
    let eps = 1e-12 * extent;
    let dir = (pts[b] - pts[a]) / extent;
    let (c, dc) = farthest_by(pts, |p| {
        let r = p - pts[a];
        (r - dir * r.dot(&dir)).norm()
    });
    if dc <= eps {
        return degenerate;
    }
    let plane_n = (pts[b] - pts[a]).cross(&(pts[c] - pts[a])).normalize();
    let (d, dd) = farthest_by(pts, |p| plane_n.dot(&(p - pts[a])).abs());
    if dd <= eps {
        return degenerate;
    }

    let mut faces: Vec<Face> = Vec::new();
    let above = plane_n.dot(&(pts[d] - pts[a])) > 0.0;
    let base = if above { [a, c, b] } else { [a, b, c] };
    faces.push(Face::new(pts, base));
    for (x, y) in [(base[0], base[1]), (base[1], base[2]), (base[2], base[0])] {
        faces.push(Face::new(pts, [y, x, d]));
    }
    let assign = |faces: &mut Vec<Face>, ids: &[usize], candidates: &[usize]| {
        for &p in candidates {
            let mut best: Option<(usize, f64)> = None;
            for &f in ids {
                let dist = faces[f].distance(&pts[p]);
                if dist > eps && best.is_none_or(|b| dist > b.1) {
                    best = Some((f, dist));
                }
            }
            if let Some((f, _)) = best {
                faces[f].outside.push(p);
            }
        }
    };
    let all: Vec<usize> = (0..pts.len()).filter(|&i| i != a && i != b && i != c && i != d).collect();
    assign(&mut faces, &[0, 1, 2, 3], &all);

    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            edges.insert((f.v[k], f.v[(k + 1) % 3]), fi);
        }
    }

    while let Some(fi) = faces.iter().position(|f| f.alive && !f.outside.is_empty()) {
        let apex = *faces[fi]
            .outside
            .iter()
            .max_by(|&&p, &&q| faces[fi].distance(&pts[p]).total_cmp(&faces[fi].distance(&pts[q])))
            .expect("non-empty");
        // Visible faces reachable from fi across shared edges.
        let mut visible = vec![fi];
        let mut seen = std::collections::HashSet::from([fi]);
        let mut k = 0;
        while k < visible.len() {
            let f = visible[k];
            k += 1;
            let v = faces[f].v;
            for e in 0..3 {
                if let Some(&g) = edges.get(&(v[(e + 1) % 3], v[e])) {
                    if !seen.contains(&g) && faces[g].distance(&pts[apex]) > eps {
                        seen.insert(g);
                        visible.push(g);
                    }
                }
            }
        }
        let mut horizon = Vec::new();
        for &f in &visible {
            let v = faces[f].v;
            for e in 0..3 {
                let (x, y) = (v[e], v[(e + 1) % 3]);
                match edges.get(&(y, x)) {
                    Some(g) if seen.contains(g) => {}
                    _ => horizon.push((x, y)),
                }
            }
        }
        let mut orphans = Vec::new();
        for &f in &visible {
            faces[f].alive = false;
            orphans.append(&mut faces[f].outside);
            let v = faces[f].v;
            for e in 0..3 {
                edges.remove(&(v[e], v[(e + 1) % 3]));
            }
        }
        let mut new_ids = Vec::new();
        for (x, y) in horizon {
            let id = faces.len();
            faces.push(Face::new(pts, [x, y, apex]));
            for (p, q) in [(x, y), (y, apex), (apex, x)] {
                edges.insert((p, q), id);
            }
            new_ids.push(id);
        }
        orphans.retain(|&p| p != apex);
        assign(&mut faces, &new_ids, &orphans);
    }

    let area = faces
        .iter()
        .filter(|f| f.alive)
        .map(|f| 0.5 * (pts[f.v[1]] - pts[f.v[0]]).cross(&(pts[f.v[2]] - pts[f.v[0]])).norm())
        .sum();
    HullArea { area, degenerate: false }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub bias: Bias,
    pub runs: usize,
    pub mean_success: f64,
    pub std_success: f64,
    pub mean_unique: f64,
    pub std_unique: f64,
    pub mean_dispersion: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row per bias level present, in impartial, weak, strong order.
/// Standard deviations use the `n - 1` denominator.
pub fn aggregate(runs: &[RunMetrics]) -> Vec<AggregateRow> {
    Bias::ALL
        .iter()
        .filter_map(|&bias| {
            let group: Vec<&RunMetrics> = runs.iter().filter(|r| r.bias == bias).collect();
            if group.is_empty() {
                return None;
            }
            let succ: Vec<f64> = group.iter().map(|r| r.success_count as f64).collect();
            let uniq: Vec<f64> = group.iter().map(|r| r.unique_success_count as f64).collect();
            let disp: Vec<f64> = group.iter().map(|r| r.dispersion_area).collect();
            let (mean_success, std_success) = mean_std(&succ);
            let (mean_unique, std_unique) = mean_std(&uniq);
            Some(AggregateRow { bias, runs: group.len(), mean_success, std_success, mean_unique, std_unique, mean_dispersion: mean_std(&disp).0 })
        })
        .collect()
}

/// 17 significant digits.
pub fn full_precision(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("bias,runs,mean_success,std_success,mean_unique,std_unique,mean_dispersion\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.bias,
            r.runs,
            full_precision(r.mean_success),
            full_precision(r.std_success),
            full_precision(r.mean_unique),
            full_precision(r.std_unique),
            full_precision(r.mean_dispersion)
        );
    }
    out
}

/// Human-readable table, `mean (std)` per column as in the usual results layout.
pub fn aggregate_text(rows: &[AggregateRow]) -> String {
    let header = ["bias", "runs", "successes", "unique", "dispersion"];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.bias.to_string(),
                r.runs.to_string(),
                format!("{:.1} ({:.1})", r.mean_success, r.std_success),
                format!("{:.1} ({:.1})", r.mean_unique, r.std_unique),
                format!("{:.6}", r.mean_dispersion),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..5).map(|i| body.iter().map(|row| row[i].len()).chain([header[i].len()]).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>| cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string();
    out.push_str(&line(header.to_vec()));
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
