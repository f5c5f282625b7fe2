//! Exact triangle–triangle interpenetration test.
//!
//! Non-coplanar pairs use plane-side classification followed by an interval
//! overlap on the planes' intersection line. A pair counts only when each
//! triangle has vertices strictly on both sides of the other's plane and the
//! two intervals overlap by more than [`GEOM_TOLERANCE`]; touching at a point or
//! along an edge lying in the other plane does not count. Coplanar pairs count
//! when their 2D interiors overlap (separating-axis test with the same slack).

use nalgebra::{Vector2, Vector3};

/// Distance tolerance in meters.
pub const GEOM_TOLERANCE: f64 = 1e-9;

/// Area below which a triangle is treated as degenerate (m²).
pub const DEGENERATE_AREA: f64 = 1e-14;

pub type Triangle = [Vector3<f64>; 3];

pub fn triangle_area(tri: &Triangle) -> f64 {
    0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm()
}

fn unit_normal(tri: &Triangle) -> Option<Vector3<f64>> {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let len = n.norm();
    (0.5 * len > DEGENERATE_AREA).then(|| n / len)
}

/// Signed distances of `tri`'s vertices to the plane `(n, p)`, snapped to zero
/// inside the tolerance.
fn plane_distances(tri: &Triangle, n: &Vector3<f64>, p: &Vector3<f64>) -> [f64; 3] {
    tri.map(|v| {
        let d = n.dot(&(v - p));
        if d.abs() <= GEOM_TOLERANCE {
            0.0
        } else {
            d
        }
    })
}

fn straddles(d: &[f64; 3]) -> bool {
    d.iter().any(|x| *x > 0.0) && d.iter().any(|x| *x < 0.0)
}

/// Interval of `tri ∩ plane` projected on `dir`.
fn line_interval(tri: &Triangle, d: &[f64; 3], dir: &Vector3<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |x: f64| {
        lo = lo.min(x);
        hi = hi.max(x);
    };
    for i in 0..3 {
        let j = (i + 1) % 3;
        if d[i] == 0.0 {
            push(dir.dot(&tri[i]));
        }
        if d[i] * d[j] < 0.0 {
            let s = d[i] / (d[i] - d[j]);
            let x = tri[i] + (tri[j] - tri[i]) * s;
            push(dir.dot(&x));
        }
    }
    (lo, hi)
}

/// Do the two triangles interpenetrate? Symmetric in its arguments.
pub fn triangles_intersect(a: &Triangle, b: &Triangle) -> bool {
    let (Some(na), Some(nb)) = (unit_normal(a), unit_normal(b)) else {
        return false;
    };
    let da = plane_distances(a, &nb, &b[0]);
    if da.iter().all(|x| *x > 0.0) || da.iter().all(|x| *x < 0.0) {
        return false;
    }
    let db = plane_distances(b, &na, &a[0]);
    if db.iter().all(|x| *x > 0.0) || db.iter().all(|x| *x < 0.0) {
        return false;
    }
    if da.iter().all(|x| *x == 0.0) || db.iter().all(|x| *x == 0.0) {
        return coplanar_overlap(a, b, &na);
    }
    if !straddles(&da) || !straddles(&db) {
        return false;
    }
    let line = na.cross(&nb);
    let len = line.norm();
    if len < 1e-12 {
        // parallel planes that still straddle each other only within tolerance
        return false;
    }
    let dir = line / len;
    let (a_lo, a_hi) = line_interval(a, &da, &dir);
    let (b_lo, b_hi) = line_interval(b, &db, &dir);
    a_hi.min(b_hi) - a_lo.max(b_lo) > GEOM_TOLERANCE
}

fn project(tri: &Triangle, normal: &Vector3<f64>) -> [Vector2<f64>; 3] {
    let n = normal.abs();
    // drop the dominant axis
    let (u, v) = if n.x >= n.y && n.x >= n.z {
        (1, 2)
    } else if n.y >= n.z {
        (0, 2)
    } else {
        (0, 1)
    };
    tri.map(|p| Vector2::new(p[u], p[v]))
}

/// Separating-axis test on the edge normals of both triangles; touching
/// boundaries count as separated.
fn coplanar_overlap(a: &Triangle, b: &Triangle, normal: &Vector3<f64>) -> bool {
    let pa = project(a, normal);
    let pb = project(b, normal);
    for tri in [&pa, &pb] {
        for i in 0..3 {
            let e = tri[(i + 1) % 3] - tri[i];
            let len = e.norm();
            if len < 1e-15 {
                continue;
            }
            let axis = Vector2::new(-e.y, e.x) / len;
            let span = |t: &[Vector2<f64>; 3]| {
                t.iter().map(|p| axis.dot(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                })
            };
            let (alo, ahi) = span(&pa);
            let (blo, bhi) = span(&pb);
            if ahi.min(bhi) - alo.max(blo) <= GEOM_TOLERANCE {
                return false;
            }
        }
    }
    true
}
