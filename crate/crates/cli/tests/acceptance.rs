//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use t2m_core::collision::{count_colliding_pairs_brute_force, TriangleBvh};
use t2m_core::contact::ContactConfig;
use t2m_core::corpus::ClipRecord;
use t2m_core::finegrained::{evaluate_case, format_accuracy_csv, parse_latex_rows, DEFAULT_WINDOW};
use t2m_core::motion::{MotionClip, PoseDistanceSeries};
use t2m_core::physical::{
    dynamic_degree, foot_floating, foot_sliding, ground_penetration, jitter_degree, pose_quality, GROUND_TOLERANCE,
    POSE_QUALITY_SCALE, SLIDING_EPSILON,
};
use t2m_core::scoring::{
    names, physical_score, select_one, semantic_score, AttributeScorer, Candidate, MetricMatrix, ScoringError,
    WeightTable, WeightedScorer, LOG_EPSILON,
};
use t2m_core::targets::parse_target;
use t2m_judge::mock::{MockResponse, MockServer};
use t2m_judge::schema::{ALIGNED_MIN, PARTIAL_MIN};
use t2m_judge::{
    llm_selection_gap, parse_verdict, verdict_for, JudgeClient, JudgeConfig, JudgeError, JudgeRequest, RetryPolicy,
    Verdict,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- constants

fn hundredths(w: f64) -> Option<i64> {
    let k = (w * 100.0).round() as i64;
    (k as f64 / 100.0 == w).then_some(k)
}

fn constants() -> Outcome {
    ensure(GROUND_TOLERANCE == 0.005, || format!("ground tolerance {GROUND_TOLERANCE}"))?;
    ensure(LOG_EPSILON == 1e-6, || format!("log epsilon {LOG_EPSILON}"))?;
    ensure(DEFAULT_WINDOW == 30, || format!("window {DEFAULT_WINDOW}"))?;
    ensure(POSE_QUALITY_SCALE == 10.0, || format!("pose quality scale {POSE_QUALITY_SCALE}"))?;
    let pq = pose_quality(&PoseDistanceSeries::new(vec![0.25; 8]).unwrap()).unwrap();
    ensure(pq == 2.5, || format!("pose quality of constant 0.25 is {pq}"))?;

    let mut phys: Vec<i64> = Vec::new();
    for s in WeightTable::physical().specs() {
        phys.push(hundredths(s.weight).ok_or_else(|| format!("{} weight {} is not a hundredth", s.name, s.weight))?);
    }
    phys.sort_unstable();
    ensure(phys == [10, 10, 10, 10, 15, 15, 15, 15], || format!("physical weights {phys:?}"))?;
    ensure(phys.iter().sum::<i64>() == 100, || "physical weights do not sum to 1".into())?;
    let mut sem = 0;
    for s in WeightTable::semantic().specs() {
        sem += hundredths(s.weight).ok_or_else(|| format!("{} weight {} is not a hundredth", s.name, s.weight))?;
    }
    ensure(sem == 100, || format!("semantic weights sum to {sem}/100"))?;
    ensure(ALIGNED_MIN == 50 && PARTIAL_MIN == 30, || format!("bands {ALIGNED_MIN}/{PARTIAL_MIN}"))?;
    Ok("tolerance 0.005, epsilon 1e-6, window 30, PQ x10, weights 4x.15+4x.10 and semantic sum 1, bands 50/30".into())
}

// ---------------------------------------------------------------- kinematics

#[derive(Debug, Clone, Copy)]
struct Expected {
    jd: f64,
    gp: f64,
    gp_strict: f64,
    ff: f64,
    fs: f64,
    dd: f64,
}

struct Scripted {
    name: String,
    clip: MotionClip,
    expected: Expected,
}

fn build(frames: usize, pos: impl Fn(usize, usize, [f64; 3]) -> [f64; 3]) -> MotionClip {
    let tpl = template();
    let mut v = Vec::with_capacity(frames * JOINTS * 3);
    for t in 0..frames {
        for (j, p) in tpl.iter().enumerate() {
            v.extend(pos(t, j, *p));
        }
    }
    MotionClip::from_shape(&[frames, JOINTS, 3], v, 20.0).unwrap()
}

const FOOT: f64 = 1.0 / 64.0;
const CONTACT_H: f64 = 0.05;
const CONTACT_V: f64 = 0.01;
const FLOAT_H: f64 = 0.12;

/// Rigid constant-velocity translation: no acceleration anywhere, every
/// joint moves `|v|` per frame, the skeleton never moves relative to the root.
fn constant_velocity(frames: usize, v: [f64; 3], lift: f64) -> Scripted {
    let clip = build(frames, |t, _, p| [p[0] + v[0] * t as f64, p[1] + lift, p[2] + v[2] * t as f64]);
    let speed = (v[0] * v[0] + v[2] * v[2]).sqrt();
    let foot = FOOT + lift;
    let contact = foot < CONTACT_H && speed < CONTACT_V;
    let ff = if foot > FLOAT_H {
        1.0
    } else if foot > CONTACT_H {
        0.5
    } else if contact {
        0.0
    } else {
        // no contact, feet glide with the root: every frame invalid
        1.0
    };
    let fs = if contact { frames as f64 * speed / (frames as f64 + SLIDING_EPSILON) } else { 0.0 };
    Scripted {
        name: format!("constant velocity T={frames} v={v:?} lift={lift}"),
        clip,
        expected: Expected {
            jd: 0.0,
            gp: 0.0,
            gp_strict: 0.0,
            ff,
            fs,
            dd: speed,
        },
    }
}

/// Rigid jump `H(t) = a/2 · t · (T−1−t)` with optional forward drift.
///
/// Second difference of `H` is `−a`, so JD = a. First difference is
/// `a/2 · (T−2−2t)`. The soft band `(0.05, 0.12]` is crossed twice in runs of
/// equal length `L`, found from the roots of `H(t) = c − foot`. With no contact
/// on the ground frames every unclaimed frame is invalid, so
/// FF = 1 − L/T when `L ≥ 5`, else 1.
fn jump(frames: usize, a: f64, vx: f64) -> Scripted {
    let h = |t: usize| a / 2.0 * t as f64 * (frames - 1 - t) as f64;
    let clip = build(frames, |t, _, p| [p[0] + vx * t as f64, p[1] + h(t), p[2]]);
    let n = (frames - 1) as f64;
    let root = |c: f64| (n - (n * n - 8.0 * (c - FOOT) / a).sqrt()) / 2.0;
    let (s1, r1) = (root(CONTACT_H), root(FLOAT_H));
    assert!(s1.fract() != 0.0 && r1.fract() != 0.0, "band edge on a frame");
    assert!(n * n > 8.0 * (FLOAT_H - FOOT) / a, "apex below the float height");
    let soft = (r1.floor() - s1.floor()) as usize;
    let last_ground = s1.floor();
    let slowest = (vx * vx + (a / 2.0 * (n - 1.0 - 2.0 * last_ground)).powi(2)).sqrt();
    assert!(slowest >= CONTACT_V, "ground frames would register contact");
    let ff = 1.0 - if soft >= 5 { soft as f64 } else { 0.0 } / frames as f64;
    let dd = (0..frames - 1)
        .map(|t| (vx * vx + (a / 2.0 * (n - 1.0 - 2.0 * t as f64)).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    Scripted {
        name: format!("jump T={frames} a={a} vx={vx} soft run {soft}"),
        clip,
        expected: Expected {
            jd: a,
            gp: 0.0,
            gp_strict: 0.0,
            ff,
            fs: 0.0,
            dd,
        },
    }
}

/// Static pose with scripted heights; static feet on the ground are in
/// contact, so FF = FS = JD = DD = 0.
fn static_depths(name: &str, frames: usize, height: impl Fn(usize, f64) -> f64, gp: f64, gp_strict: f64) -> Scripted {
    let clip = build(frames, |_, j, p| [p[0], height(j, p[1]), p[2]]);
    Scripted {
        name: format!("penetration {name}"),
        clip,
        expected: Expected {
            jd: 0.0,
            gp,
            gp_strict,
            ff: 0.0,
            fs: 0.0,
            dd: 0.0,
        },
    }
}

fn penetration() -> Vec<Scripted> {
    let j = JOINTS as f64;
    let tpl_sum: f64 = template().iter().map(|p| p[1]).sum();
    vec![
        // ankles (6/64) and feet (1/64) end up below −δ
        static_depths("lowered 8/64", 30, |_, y| y - 0.125, (2.0 * 2.0 / 64.0 + 2.0 * 7.0 / 64.0) / j, (2.0 * 2.0 / 64.0 + 2.0 * 7.0 / 64.0) / j),
        // feet at −1/256, inside the tolerance; strict mode counts them
        static_depths("feet within tolerance", 30, |_, y| y - 5.0 / 256.0, 0.0, 2.0 / 256.0 / j),
        static_depths("left foot", 25, |jt, y| if jt == 10 { -1.0 / 16.0 } else { y }, 1.0 / 16.0 / j, 1.0 / 16.0 / j),
        static_depths("wrists", 25, |jt, y| if jt >= 20 { -1.0 / 32.0 } else { y }, 2.0 / 32.0 / j, 2.0 / 32.0 / j),
        static_depths("buried body", 20, |_, y| y - 2.0, 2.0 - tpl_sum / j, 2.0 - tpl_sum / j),
        oscillating_foot(40),
    ]
}

/// Left foot alternates between −1/16 and +1/64 (a 5/64 step); the root is
/// still, so the local step equals the global one. Second differences have
/// magnitude 10/64 for both.
fn oscillating_foot(frames: usize) -> Scripted {
    let clip = build(frames, |t, j, p| {
        if j == 10 && t % 2 == 0 {
            [p[0], -1.0 / 16.0, p[2]]
        } else {
            p
        }
    });
    let j = JOINTS as f64;
    let step = 5.0 / 64.0;
    Scripted {
        name: "penetration oscillating left foot".into(),
        clip,
        expected: Expected {
            jd: 2.0 * 2.0 * step / j,
            gp: (frames / 2) as f64 / 16.0 / (frames as f64 * j),
            gp_strict: (frames / 2) as f64 / 16.0 / (frames as f64 * j),
            ff: 0.0,
            fs: 0.0,
            dd: 2.0 * step / j,
        },
    }
}

/// Left foot pinned while the body slides at `v` per frame. Pinned foot:
/// contact, zero speed, local speed |v|. DD = ((J−1)|v| + |v|)/J = |v|.
fn pinned_slide(frames: usize, v: [f64; 3], right_lift: f64) -> Scripted {
    let clip = build(frames, |t, j, p| {
        if j == 10 {
            p
        } else {
            let y = if j == 11 { p[1] + right_lift } else { p[1] };
            [p[0] + v[0] * t as f64, y, p[2] + v[2] * t as f64]
        }
    });
    let speed = (v[0] * v[0] + v[2] * v[2]).sqrt();
    let right_contact = FOOT + right_lift < CONTACT_H && speed < CONTACT_V;
    let right = if right_contact { frames as f64 * speed / (frames as f64 + SLIDING_EPSILON) } else { 0.0 };
    Scripted {
        name: format!("pinned slide T={frames} v={v:?} right lift {right_lift}"),
        clip,
        expected: Expected {
            jd: 0.0,
            gp: 0.0,
            gp_strict: 0.0,
            ff: 0.0,
            fs: 0.5 * right,
            dd: speed,
        },
    }
}

/// Whole body raised by `lift(t)`, piecewise constant. Each jump of size `d`
/// between frames `k` and `k+1` adds `d` to one DD step and `d` to two JD
/// steps, for all joints alike.
fn hover(name: &str, frames: usize, lift: impl Fn(usize) -> f64, ff: f64) -> Scripted {
    let clip = build(frames, |t, _, p| [p[0], p[1] + lift(t), p[2]]);
    let jumps: f64 = (0..frames - 1).map(|t| (lift(t + 1) - lift(t)).abs()).sum();
    Scripted {
        name: format!("hover {name}"),
        clip,
        expected: Expected {
            jd: 2.0 * jumps / (frames - 2) as f64,
            gp: 0.0,
            gp_strict: 0.0,
            ff,
            fs: 0.0,
            dd: jumps / (frames - 1) as f64,
        },
    }
}

fn scripted_clips() -> Vec<Scripted> {
    let mut v = vec![
        constant_velocity(40, [1.0 / 256.0, 0.0, 0.0], 0.0),
        constant_velocity(50, [0.0, 0.0, 1.0 / 128.0], 0.0),
        constant_velocity(30, [3.0 / 512.0, 0.0, 1.0 / 256.0], 0.0),
        constant_velocity(40, [1.0 / 32.0, 0.0, 0.0], 0.0),
        constant_velocity(40, [1.0 / 256.0, 0.0, 0.0], 6.0 / 64.0),
        constant_velocity(40, [1.0 / 64.0, 0.0, 1.0 / 64.0], 10.0 / 64.0),
        jump(100, 1.0 / 4096.0, 0.0),
        jump(100, 1.0 / 4096.0, 1.0 / 256.0),
        jump(90, 1.0 / 4096.0, 0.0),
        jump(80, 1.0 / 2048.0, 0.0),
        jump(100, 1.0 / 2048.0, 1.0 / 128.0),
        jump(60, 1.0 / 1024.0, 0.0),
    ];
    v.extend(penetration());
    v.extend([
        pinned_slide(40, [1.0 / 256.0, 0.0, 0.0], 0.0),
        pinned_slide(40, [1.0 / 128.0, 0.0, 0.0], 0.0),
        pinned_slide(30, [3.0 / 512.0, 0.0, 1.0 / 256.0], 0.0),
        pinned_slide(30, [1.0 / 256.0, 0.0, 1.0 / 256.0], 0.0),
        pinned_slide(40, [1.0 / 64.0, 0.0, 0.0], 0.0),
        pinned_slide(40, [1.0 / 256.0, 0.0, 0.0], 6.0 / 64.0),
    ]);
    // soft band: feet at 5/64; hard band: 9/64; ground contact at 3/64
    v.extend([
        hover("soft", 30, |_| 4.0 / 64.0, 0.5),
        hover("hard", 30, |_| 8.0 / 64.0, 1.0),
        hover("near ground", 30, |_| 2.0 / 64.0, 0.0),
        // three soft frames, too short to be an interval: invalid instead
        hover("short soft", 40, |t| if t < 3 { 4.0 / 64.0 } else { 0.0 }, 3.0 / 40.0),
        hover("hard then ground", 40, |t| if t < 10 { 8.0 / 64.0 } else { 0.0 }, 10.0 / 40.0),
        hover("soft then hard", 30, |t| if t < 8 { 4.0 / 64.0 } else { 8.0 / 64.0 }, (0.5 * 8.0 + 22.0) / 30.0),
    ]);
    v
}

fn close(x: f64, expected: f64) -> bool {
    if expected == 0.0 {
        x.abs() <= 1e-12
    } else {
        ((x - expected) / expected).abs() <= 1e-9
    }
}

fn kinematics() -> Outcome {
    let start = Instant::now();
    let cfg = ContactConfig::default();
    let clips = scripted_clips();
    let mut failures = Vec::new();
    for s in &clips {
        let e = s.expected;
        let got = [
            ("JD", jitter_degree(&s.clip).unwrap(), e.jd),
            ("GP", ground_penetration(&s.clip, false), e.gp),
            ("GP strict", ground_penetration(&s.clip, true), e.gp_strict),
            ("FF", foot_floating(&s.clip, &cfg).unwrap(), e.ff),
            ("FS", foot_sliding(&s.clip, &cfg).unwrap(), e.fs),
            ("DD", dynamic_degree(&s.clip).unwrap(), e.dd),
        ];
        for (m, x, o) in got {
            if !close(x, o) {
                failures.push(format!("{}: {m} = {x:e}, expected {o:e}", s.name));
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(clips.len() == 30, || format!("{} scripted clips", clips.len()))?;
    ensure(failures.is_empty(), || failures.join("; "))?;
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))?;
    Ok(format!("30 clips, JD/GP/FF/FS/DD within 1e-9 relative, {:.3} s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- collision

fn area(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    (b - a).cross(&(c - a)).norm() / 2.0
}

fn random_point(rng: &mut ChaCha8Rng, flat: bool) -> Vector3<f64> {
    let z = if flat { 0.5 } else { rng.random_range(0.0..1.0) };
    Vector3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), z)
}

/// Soup kinds: separate small triangles, triangles over a shared vertex pool,
/// coplanar triangles, and a jittered height-field strip.
fn soup(rng: &mut ChaCha8Rng, kind: usize, faces: usize) -> (Vec<Vector3<f64>>, Vec<[usize; 3]>) {
    let mut verts = Vec::new();
    let mut tris = Vec::new();
    match kind {
        0 | 2 => {
            let flat = kind == 2;
            while tris.len() < faces {
                let c = random_point(rng, flat);
                let mut p = [c; 3];
                for q in &mut p {
                    q.x += rng.random_range(-0.15..0.15);
                    q.y += rng.random_range(-0.15..0.15);
                    if !flat {
                        q.z += rng.random_range(-0.15..0.15);
                    }
                }
                if area(&p[0], &p[1], &p[2]) > 1e-6 {
                    let base = verts.len();
                    verts.extend(p);
                    tris.push([base, base + 1, base + 2]);
                }
            }
        }
        1 => {
            let pool = (faces / 2).max(3);
            verts = (0..pool).map(|_| random_point(rng, false)).collect();
            while tris.len() < faces {
                let f = [rng.random_range(0..pool), rng.random_range(0..pool), rng.random_range(0..pool)];
                if f[0] != f[1] && f[1] != f[2] && f[0] != f[2] && area(&verts[f[0]], &verts[f[1]], &verts[f[2]]) > 1e-6 {
                    tris.push(f);
                }
            }
        }
        _ => {
            let cols = faces.div_ceil(2) + 1;
            for i in 0..cols {
                for r in 0..2 {
                    verts.push(Vector3::new(i as f64 * 0.05, r as f64 * 0.3, rng.random_range(-0.2..0.2)));
                }
            }
            // a second strip folded across the first
            for i in 0..cols {
                for r in 0..2 {
                    verts.push(Vector3::new(i as f64 * 0.05 + 0.02, 0.15 + rng.random_range(-0.2..0.2), r as f64 * 0.4 - 0.2));
                }
            }
            let mut all = Vec::new();
            for s in 0..2 {
                let off = s * 2 * cols;
                for i in 0..cols - 1 {
                    let a = off + 2 * i;
                    all.push([a, a + 1, a + 2]);
                    all.push([a + 1, a + 3, a + 2]);
                }
            }
            all.retain(|f| area(&verts[f[0]], &verts[f[1]], &verts[f[2]]) > 1e-6);
            all.shuffle(rng);
            all.truncate(faces);
            tris = all;
        }
    }
    (verts, tris)
}

fn collision() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut total_pairs = 0;
    for i in 0..1000 {
        let faces = rng.random_range(1..=200);
        let (verts, tris) = soup(&mut rng, i % 4, faces);
        let bvh = TriangleBvh::build(&verts, &tris, 1.0).map_err(|e| format!("soup {i}: {e}"))?;
        let fast = bvh.count_colliding_pairs();
        let slow = count_colliding_pairs_brute_force(&verts, &tris);
        ensure(fast == slow, || format!("soup {i} ({} faces): BVH {fast}, brute force {slow}", tris.len()))?;
        total_pairs += slow;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("1000 soups, {total_pairs} colliding pairs, exact agreement, {:.2} s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------- fine-grained

fn record(clip: MotionClip) -> ClipRecord {
    ClipRecord {
        clip_id: "c".into(),
        prompt_id: "p".into(),
        baseline_id: "B".into(),
        prompt_type: None,
        prompt_text: None,
        fps: 20.0,
        motion: Some(clip),
        features: None,
        mesh: None,
        pose_distances: None,
        strip: None,
        stride: None,
    }
}

/// Template turned by `yaw(t)` about the root and shifted by `root(t)`.
fn posed(frames: usize, yaw: impl Fn(usize) -> f64, root: impl Fn(usize) -> Vector3<f64>) -> MotionClip {
    build(frames, |t, _, p| {
        let (s, c) = yaw(t).sin_cos();
        let r = root(t);
        [r.x + c * p[0] + s * p[2], r.y + p[1], r.z - s * p[0] + c * p[2]]
    })
}

fn case_error(clip: MotionClip, target: Value) -> Result<f64, String> {
    let spec = parse_target(&target, 0).map_err(|e| e.to_string())?;
    evaluate_case(&record(clip), &spec, None, DEFAULT_WINDOW)
        .map(|r| r.error)
        .map_err(|e| e.to_string())
}

fn finegrained() -> Outcome {
    const T: usize = 60;
    let te = T - DEFAULT_WINDOW;
    let ramp = |total: f64| move |t: usize| total * t.min(te) as f64 / te as f64;
    let still = |_: usize| Vector3::zeros();
    let yaw_target = |a: f64| json!({"kind": "yaw_rotation", "angle": a});
    // direction +x at 1.5 m/s over 1.5 s = 30 steps
    let u = Vector3::new(1.0, 0.0, 0.0);
    let moving = |v: Vector3<f64>| move |t: usize| v * t as f64 / 20.0;
    let vel_target = json!({"kind": "directional_velocity", "speed": 1.5, "direction": [1, 0, 0], "duration": 1.5});
    let disp = Vector3::new(0.0, 0.0, -2.8);
    let trans_target = json!({"kind": "root_translation", "target": [0.0, 0.0, -2.8]});
    let walk = move |d: Vector3<f64>| move |t: usize| d * t.min(te) as f64 / te as f64;
    let body_target = json!({"kind": "body_part_offset", "base_joint": 0, "target_joint": 20, "target": [0.3, 0.5, 0.2]});
    let offset = Vector3::new(0.3, 0.5, 0.2);
    let body_clip = |frames: usize, extra: Vector3<f64>| {
        build(frames, move |t, j, p| {
            let root = Vector3::new(0.01 * t as f64, 58.0 / 64.0, 0.0);
            if j == 20 {
                let q = root + offset + if t + DEFAULT_WINDOW >= frames { extra } else { Vector3::new(0.7, 0.0, 0.0) };
                [q.x, q.y, q.z]
            } else if j == 0 {
                [root.x, root.y, root.z]
            } else {
                [p[0] + root.x, p[1], p[2]]
            }
        })
    };

    let cases: Vec<(&str, Result<f64, String>, f64, bool)> = vec![
        ("yaw exact", case_error(posed(T, ramp(1.0), still), yaw_target(1.0)), 0.0, true),
        ("yaw pi/2 vs 0", case_error(posed(T, ramp(FRAC_PI_2), still), yaw_target(0.0)), 2.0, false),
        ("yaw 0 vs pi", case_error(posed(T, ramp(0.0), still), yaw_target(PI)), 2.0 * SQRT_2, false),
        ("yaw pi/2 vs -pi/2", case_error(posed(T, ramp(FRAC_PI_2), still), yaw_target(-FRAC_PI_2)), 2.0 * SQRT_2, false),
        ("velocity exact", case_error(posed(T, |_| 0.0, moving(u * 1.5)), vel_target.clone()), 0.0, true),
        ("velocity 3.5 vs 1.5", case_error(posed(T, |_| 0.0, moving(u * 3.5)), vel_target.clone()), 2.0, false),
        ("velocity across", case_error(posed(T, |_| 0.0, moving(Vector3::new(0.0, 0.0, 1.5))), vel_target), 1.5, false),
        ("translation exact", case_error(posed(T, |_| 0.0, walk(disp)), trans_target.clone()), 0.0, true),
        ("translation off by 3 m in x", case_error(posed(T, |_| 0.0, walk(disp + Vector3::new(3.0, 0.0, 0.0))), trans_target), 3f64.sqrt(), false),
        ("body part exact", case_error(body_clip(T, Vector3::zeros()), body_target.clone()), 0.0, true),
        ("body part off by 0.1", case_error(body_clip(T, Vector3::new(0.0, 0.1, 0.0)), body_target.clone()), 0.1, false),
        ("body part short clip", case_error(body_clip(20, Vector3::new(0.0, 0.0, 0.1)), body_target), 0.1, false),
    ];
    let mut failures = Vec::new();
    for (name, got, expected, exact) in &cases {
        match got {
            Ok(x) if *exact && *x < 1e-9 => {}
            Ok(x) if !*exact && (x - expected).abs() <= 1e-9 => {}
            Ok(x) => failures.push(format!("{name}: {x:e}, expected {expected:e}")),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} cases over 4 target kinds, exact < 1e-9, perturbed within 1e-9", cases.len()))
}

// ---------------------------------------------------------------- table fixture

fn table_fixture() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/accuracy_table.tex");
    let src = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let rows = parse_latex_rows(&src);
    ensure(rows.len() == 15, || format!("{} rows parsed", rows.len()))?;
    let csv = format_accuracy_csv(&rows);
    let cell = |method: &str, col: usize| -> Option<String> {
        csv.lines()
            .find(|l| l.split(',').next() == Some(method))
            .and_then(|l| l.split(',').nth(col).map(str::to_string))
    };
    let hy = cell("HY", 1).unwrap_or_default();
    let mc = cell("MaskControl_with_JointControl", 4).unwrap_or_default();
    ensure(hy == "1.2818", || format!("HY root rotation cell {hy:?}"))?;
    ensure(mc == "0.1020", || format!("MaskControl_with_JointControl body-part cell {mc:?}"))?;
    Ok(format!("HY root_rotation {hy}, MaskControl_with_JointControl body_part_translation {mc}"))
}

// ---------------------------------------------------------------- determinism

const REPORTS: [(&str, &[&str]); 5] = [
    ("eval-physical", &["physical_report.csv", "physical_summary.csv", "physical_report.json"]),
    ("eval-semantic", &["semantic_report.csv", "semantic_summary.csv", "semantic_report.json"]),
    ("eval-finegrained", &["finegrained.csv", "finegrained.json"]),
    ("judge", &["judge_results.json", "judge_summary.csv", "judge_quarantine.json"]),
    ("score-select", &["selection.csv", "radar.csv", "selection.json"]),
];

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s = synth_corpus(
        dir.path(),
        &SynthOptions {
            baselines: 3,
            prompts: 8,
            ..SynthOptions::default()
        },
    );
    let server = MockServer::start(|req| MockResponse::chat(&judge_reply(body_key(&req.body)))).map_err(|e| e.to_string())?;
    let mut cfg = base_config(&s, "out");
    cfg["judge"] = judge_config(&server.url());
    let cfg = write_config(dir.path(), "run.json", cfg);
    let cfg = cfg.to_string_lossy().into_owned();
    let out = dir.path().join("out");
    let mut files = 0;
    for (command, reports) in REPORTS {
        let mut first: Option<Vec<Vec<u8>>> = None;
        for jobs in ["1", "8", "1", "8"] {
            let code = run_cli(&["--config", &cfg, "--jobs", jobs, command]);
            ensure(code == 0, || format!("{command} --jobs {jobs} exited {code}"))?;
            let bytes: Vec<Vec<u8>> = reports.iter().map(|r| fs::read(out.join(r)).unwrap_or_default()).collect();
            ensure(bytes.iter().all(|b| !b.is_empty()), || format!("{command}: missing report"))?;
            match &first {
                None => first = Some(bytes),
                Some(f) => {
                    for (i, r) in reports.iter().enumerate() {
                        ensure(f[i] == bytes[i], || format!("{command}: {r} differs at --jobs {jobs}"))?;
                    }
                }
            }
        }
        files += reports.len();
    }
    Ok(format!("5 subcommands x 4 runs (--jobs 1/8), {files} reports byte-identical"))
}

// ---------------------------------------------------------------- judge

fn reply(scores: [i64; 5], verdict: &str) -> String {
    json!({
        "video_name": "v", "prompt_name": "p",
        "scores": {
            "extra_non_instruction_actions": scores[0],
            "action_completeness": scores[1],
            "multi_stage_order_correctness": scores[2],
            "body_part_understanding": scores[3],
            "physical_plausibility": scores[4],
        },
        "overall_score": scores.iter().sum::<i64>(),
        "verdict": verdict,
        "frame_observation": "o", "prompt_overlap": "o", "issues_found": "",
    })
    .to_string()
}

fn client(url: String, concurrency: usize) -> JudgeClient {
    JudgeClient::new(JudgeConfig {
        endpoint: url,
        api_key: Some("k".into()),
        concurrency,
        timeout_secs: 10,
        retry: RetryPolicy {
            base_delay: Duration::from_millis(1),
            ..RetryPolicy::default()
        },
        ..JudgeConfig::default()
    })
}

fn judge_request(i: usize) -> JudgeRequest {
    JudgeRequest {
        clip_id: format!("clip_{i:03}"),
        video_name: format!("clip_{i:03}"),
        prompt_id: format!("p{i:03}"),
        prompt_text: "a person waves".into(),
        image: vec![0x89, b'P', b'N', b'G', i as u8],
        media_type: "image/png".into(),
    }
}

/// Scores for prompt `i` of the synthetic gap set and their absolute
/// differences: dimension `k` differs by `base_k` or `base_k + 1`, the latter
/// on the first `extra_k` prompts, alternating sign.
fn gap_set(sums: [usize; 5]) -> (Vec<(String, [f64; 5])>, Vec<(String, [f64; 5])>) {
    let mid = [5.0, 10.0, 5.0, 5.0, 5.0];
    let mut llm = Vec::new();
    let mut human = Vec::new();
    for i in 0..50 {
        let mut l = [0.0; 5];
        let mut h = [0.0; 5];
        for k in 0..5 {
            let d = (sums[k] / 50 + usize::from(i < sums[k] % 50)) as f64;
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            h[k] = mid[k] - sign * (d / 2.0).floor();
            l[k] = h[k] + sign * d;
        }
        llm.push((format!("p{i:02}"), l));
        human.push((format!("p{i:02}"), h));
    }
    human.reverse();
    (llm, human)
}

fn judge() -> Outcome {
    // schema: sub-score above its maximum
    let bad = reply([11, 10, 5, 5, 5], "partial");
    ensure(parse_verdict(&bad, true).is_err(), || "ENA 11 accepted".into())?;
    let server = MockServer::start(move |_| MockResponse::chat(&bad)).map_err(|e| e.to_string())?;
    let r = client(server.url(), 1).submit(&judge_request(0));
    ensure(matches!(&r, Err(e) if !e.is_network()), || format!("out-of-range reply gave {r:?}"))?;
    ensure(server.request_count() == 1, || "schema violation was retried".into())?;

    // bands
    ensure(verdict_for(55) == Ok(Verdict::Aligned), || "55".into())?;
    ensure(verdict_for(30) == Ok(Verdict::Partial), || "30".into())?;
    ensure(verdict_for(29) == Ok(Verdict::Mismatch), || "29".into())?;
    let mismatch = parse_verdict(&reply([8, 18, 9, 9, 10], "partial"), true);
    ensure(matches!(mismatch, Err(JudgeError::BandMismatch { expected: Verdict::Aligned, .. })), || format!("{mismatch:?}"))?;

    // concurrency
    let server = MockServer::start(|_| {
        std::thread::sleep(Duration::from_millis(20));
        MockResponse::chat(&reply([5, 10, 5, 5, 5], "partial"))
    })
    .map_err(|e| e.to_string())?;
    let requests: Vec<JudgeRequest> = (0..24).rev().map(judge_request).collect();
    let results = client(server.url(), 4).submit_all(&requests);
    ensure(results.iter().all(|(_, r)| r.is_ok()), || "concurrent batch had failures".into())?;
    let ids: Vec<&str> = results.iter().map(|(c, _)| c.as_str()).collect();
    ensure(ids.windows(2).all(|w| w[0] < w[1]), || "results not ordered by clip id".into())?;
    let peak = server.max_in_flight();
    ensure((1..=4).contains(&peak), || format!("{peak} requests in flight"))?;

    // retries: four transient failures then success; permanent 503 stops at five
    let server = MockServer::start(|req| match req.index {
        0 | 1 => MockResponse::status(503),
        2 => MockResponse::status(429),
        3 => MockResponse::status(502),
        _ => MockResponse::chat(&reply([5, 10, 5, 5, 5], "partial")),
    })
    .map_err(|e| e.to_string())?;
    let r = client(server.url(), 1).submit(&judge_request(1));
    ensure(r.is_ok() && server.request_count() == 5, || format!("{r:?} after {}", server.request_count()))?;
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let server = MockServer::start(move |_| {
        seen.fetch_add(1, Ordering::SeqCst);
        MockResponse::status(503)
    })
    .map_err(|e| e.to_string())?;
    let r = client(server.url(), 1).submit(&judge_request(2));
    ensure(r.is_err() && calls.load(Ordering::SeqCst) == 5, || format!("{r:?} after {}", calls.load(Ordering::SeqCst)))?;

    // selection gap on 50 prompts with known absolute differences
    let sums = [64, 158, 62, 72, 74];
    let (llm, human) = gap_set(sums);
    let gap = llm_selection_gap(&llm, &human).map_err(|e| e.to_string())?;
    let expected = [1.28, 3.16, 1.24, 1.44, 1.48];
    for k in 0..5 {
        ensure((gap[k] - expected[k]).abs() <= 1e-12, || format!("gap[{k}] = {} expected {}", gap[k], expected[k]))?;
    }
    Ok(format!("range check, bands 55/30/29, peak concurrency {peak}, retries within 5, gap {gap:?}"))
}

// ---------------------------------------------------------------- scoring

struct Transformed<'a> {
    inner: &'a dyn AttributeScorer,
    f: fn(f64) -> f64,
}

impl AttributeScorer for Transformed<'_> {
    fn score(&self, m: &MetricMatrix) -> Result<Vec<Result<f64, ScoringError>>, ScoringError> {
        Ok(self.inner.score(m)?.into_iter().map(|s| s.map(self.f)).collect())
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, weights: &[&WeightTable]) -> MetricMatrix {
    let n = rng.random_range(2..=14);
    let mut candidates: Vec<Candidate> = Vec::new();
    for b in 0..n {
        // about one in four rows duplicates an earlier row's values
        let values = if b > 0 && rng.random_bool(0.25) {
            candidates[rng.random_range(0..b)].values.clone()
        } else {
            let mut v = BTreeMap::new();
            for w in weights {
                for s in w.specs() {
                    let x = match s.normalization {
                        t2m_core::scoring::Normalization::ScaleMax(max) => rng.random_range(0..=max as i64) as f64,
                        _ => rng.random_range(0.0..1.0),
                    };
                    v.insert(s.name.clone(), x);
                }
            }
            v
        };
        candidates.push(Candidate {
            clip_id: format!("c{b:02}"),
            baseline_id: format!("B{:02}", (b * 7) % n),
            values,
        });
    }
    MetricMatrix { candidates }
}

fn scoring() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let phys = WeightTable::physical();
    let sem = WeightTable::semantic();

    let mut probe = 0;
    while probe < 1000 {
        let mut g: BTreeMap<String, f64> =
            phys.specs().iter().map(|s| (s.name.clone(), if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..1.0) })).collect();
        let name = phys.specs()[rng.random_range(0..phys.specs().len())].name.clone();
        let old = g[&name];
        let new = rng.random_range(old..=1.0);
        if new == old {
            continue;
        }
        let before = physical_score(&g, &phys).map_err(|e| e.to_string())?;
        g.insert(name.clone(), new);
        let after = physical_score(&g, &phys).map_err(|e| e.to_string())?;
        ensure(after > before, || format!("probe {probe}: raising {name} {old} -> {new} moved score {before} -> {after}"))?;
        probe += 1;
    }

    let physical = WeightedScorer::physical();
    let semantic = WeightedScorer::semantic();
    let transforms: [fn(f64) -> f64; 3] = [f64::exp, |x| x * x * x + x, |x| (1.0 + x).ln() * 5.0 - 3.0];
    for m in 0..300 {
        let matrix = random_matrix(&mut rng, &[&phys, &sem]);
        for scorer in [&physical as &dyn AttributeScorer, &semantic] {
            let base = select_one("p", &matrix, scorer).map_err(|e| e.to_string())?;
            for f in transforms {
                let t = select_one("p", &matrix, &Transformed { inner: scorer, f }).map_err(|e| e.to_string())?;
                ensure(t.clip_id == base.clip_id, || format!("matrix {m}: transform moved argmax {} -> {}", base.clip_id, t.clip_id))?;
            }
            let mut shuffled = matrix.clone();
            shuffled.candidates.shuffle(&mut rng);
            let p = select_one("p", &shuffled, scorer).map_err(|e| e.to_string())?;
            ensure(p.clip_id == base.clip_id, || format!("matrix {m}: permutation moved argmax {} -> {}", base.clip_id, p.clip_id))?;
        }
    }

    let mut g: BTreeMap<String, f64> = phys.specs().iter().map(|s| (s.name.clone(), 1.0)).collect();
    g.insert(names::GROUND_PENETRATION.into(), 0.0);
    let zero = physical_score(&g, &phys).map_err(|e| e.to_string())?;
    ensure((zero - 0.12589).abs() <= 1e-4, || format!("single-zero score {zero}"))?;
    let s = semantic_score(&sem.specs().iter().map(|s| (s.name.clone(), 1.0)).collect(), &sem).map_err(|e| e.to_string())?;
    ensure((s - 1.0).abs() < 1e-12, || format!("semantic score of all-ones {s}"))?;
    Ok(format!("1000 monotonicity probes, argmax stable on 300 matrices, single-zero score {zero:.5}"))
}

// ---------------------------------------------------------------- driver

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("constants fidelity", constants),
        ("kinematics oracle", kinematics),
        ("collision oracle", collision),
        ("fine-grained closed loop", finegrained),
        ("accuracy table fixture", table_fixture),
        ("determinism", determinism),
        ("judge client", judge),
        ("scoring properties", scoring),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
