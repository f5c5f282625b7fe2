//! Synthetic corpus shared by the CLI integration tests and the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use t2m_core::npy::{write_npy, write_npy_indices, NpyArray};

pub const JOINTS: usize = 22;

/// Rest pose in units of 1/64 m, facing +z. Left limbs sit on +x.
const TEMPLATE_64THS: [[i32; 3]; JOINTS] = [
    [0, 58, 0],
    [6, 54, 0],
    [-6, 54, 0],
    [0, 64, 0],
    [6, 32, 0],
    [-6, 32, 0],
    [0, 70, 0],
    [6, 6, 0],
    [-6, 6, 0],
    [0, 77, 0],
    [6, 1, 6],
    [-6, 1, 6],
    [0, 90, 0],
    [5, 86, 0],
    [-5, 86, 0],
    [0, 102, 0],
    [12, 86, 0],
    [-12, 86, 0],
    [19, 70, 0],
    [-19, 70, 0],
    [22, 54, 0],
    [-22, 54, 0],
];

pub fn template() -> Vec<[f64; 3]> {
    TEMPLATE_64THS
        .iter()
        .map(|p| [p[0] as f64 / 64.0, p[1] as f64 / 64.0, p[2] as f64 / 64.0])
        .collect()
}

pub fn run_cli(args: &[&str]) -> i32 {
    let mut full = vec!["t2m-eval"];
    full.extend_from_slice(args);
    t2m_cli::run(full)
}

pub fn write_json(path: &Path, value: &Value) {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).unwrap();
    }
    fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub baselines: usize,
    pub prompts: usize,
    pub frames: usize,
    pub seed: u64,
    pub mesh: bool,
    pub strips: bool,
    pub embeddings: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            baselines: 3,
            prompts: 6,
            frames: 60,
            seed: 11,
            mesh: true,
            strips: true,
            embeddings: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synth {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub targets: Vec<PathBuf>,
    pub clip_ids: Vec<String>,
}

pub fn clip_id(baseline: usize, prompt: usize) -> String {
    format!("b{baseline}_p{prompt:02}")
}

pub fn prompt_id(prompt: usize) -> String {
    format!("p{prompt:02}")
}

pub fn baseline_id(baseline: usize) -> String {
    format!("B{baseline}")
}

/// Walking skeleton with a yaw drift, vertical bob, alternating foot lift
/// and joint noise. Returns `(T, 22, 3)` row-major positions.
pub fn walking_clip(rng: &mut ChaCha8Rng, frames: usize) -> Vec<f64> {
    let tpl = template();
    let yaw_rate = rng.random_range(-0.03..0.03);
    let speed = rng.random_range(0.005..0.05);
    let bob = rng.random_range(0.0..0.02);
    let lift = rng.random_range(0.0..0.15);
    let phase = rng.random_range(0.0..2.0 * PI);
    let noise = rng.random_range(0.0..0.006);
    let mut out = Vec::with_capacity(frames * JOINTS * 3);
    let (mut x, mut z) = (0.0, 0.0);
    for t in 0..frames {
        let yaw = yaw_rate * t as f64;
        let (s, c) = yaw.sin_cos();
        x += speed * s;
        z += speed * c;
        let step = (0.3 * t as f64 + phase).sin();
        for (j, p) in tpl.iter().enumerate() {
            let mut y = p[1] + bob * (0.6 * t as f64).sin();
            if j == 7 || j == 10 {
                y += lift * step.max(0.0);
            } else if j == 8 || j == 11 {
                y += lift * (-step).max(0.0);
            }
            let rx = c * p[0] + s * p[2];
            let rz = -s * p[0] + c * p[2];
            out.push(x + rx + noise * rng.random_range(-1.0..1.0));
            out.push(y + noise * rng.random_range(-1.0..1.0));
            out.push(z + rz + noise * rng.random_range(-1.0..1.0));
        }
    }
    out
}

/// Four triangles per frame around the root; two of them cross when the
/// clip's offset is small.
fn mesh_frames(rng: &mut ChaCha8Rng, joints: &[f64], frames: usize) -> (Vec<f64>, Vec<usize>) {
    let gap = rng.random_range(-0.2..0.2);
    let mut verts = Vec::with_capacity(frames * 12 * 3);
    for t in 0..frames {
        let r = &joints[t * JOINTS * 3..t * JOINTS * 3 + 3];
        let local: [[f64; 3]; 12] = [
            [-0.2, 0.0, 0.0],
            [0.2, 0.0, 0.0],
            [0.0, 0.3, 0.0],
            [0.0, 0.1, -0.2 + gap],
            [0.0, 0.1, 0.2 + gap],
            [0.0, 0.4, gap],
            [0.5, 0.0, 0.0],
            [0.7, 0.0, 0.0],
            [0.6, 0.2, 0.0],
            [-0.7, 0.0, 0.1],
            [-0.5, 0.0, 0.1],
            [-0.6, 0.2, 0.1],
        ];
        for v in local {
            verts.extend([r[0] + v[0], r[1] + v[1], r[2] + v[2]]);
        }
    }
    let faces = vec![0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
    (verts, faces)
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn write_vec(path: &Path, v: &[f64]) {
    write_npy(path, &NpyArray::from_f64(vec![v.len()], v.to_vec()).unwrap()).unwrap();
}

/// Target prompts: p00 yaw, p01 velocity, p02 translation, p03 body part.
pub fn targets_json() -> (Value, Value) {
    let root = json!([
        {"prompt_id": "p00", "kind": "yaw_rotation", "angle": 1.0},
        {"prompt_id": "p01", "kind": "directional_velocity", "speed": 1.0, "direction": [0, 0, 1], "duration": 1.5},
        {"prompt_id": "p02", "kind": "root_translation", "target": [0.0, 0.0, 2.0]},
    ]);
    let body = json!([
        {"prompt_id": "p03", "kind": "body_part_offset", "base_joint": 0, "target_joint": 20, "target": [0.3, 0.5, 0.2]},
    ]);
    (root, body)
}

/// Writes joints, meshes, pose distances, strips, embeddings and targets
/// under `dir`.
pub fn synth_corpus(dir: &Path, opts: &SynthOptions) -> Synth {
    const DIM: usize = 16;
    for sub in ["joints", "mesh", "pq", "strips", "emb"] {
        fs::create_dir_all(dir.join(sub)).unwrap();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let texts: Vec<Vec<f64>> = (0..opts.prompts).map(|_| unit_vector(&mut rng, DIM)).collect();

    let mut manifest = Map::new();
    let mut emb_text = Map::new();
    let mut emb_motion = Map::new();
    let mut emb_pairs = Map::new();
    let mut clip_ids = Vec::new();
    for (p, text) in texts.iter().enumerate() {
        write_vec(&dir.join(format!("emb/text_{}.npy", prompt_id(p))), text);
        emb_text.insert(prompt_id(p), json!(format!("emb/text_{}.npy", prompt_id(p))));
    }
    for b in 0..opts.baselines {
        for p in 0..opts.prompts {
            let id = clip_id(b, p);
            let t = opts.frames;
            let joints = walking_clip(&mut rng, t);
            write_npy(
                dir.join(format!("joints/{id}.npy")),
                &NpyArray::from_f32(vec![t, JOINTS, 3], joints.iter().map(|&v| v as f32).collect()).unwrap(),
            )
            .unwrap();
            let pq: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..0.2)).collect();
            write_vec(&dir.join(format!("pq/{id}.npy")), &pq);

            let mut entry = json!({
                "prompt_id": prompt_id(p),
                "baseline_id": baseline_id(b),
                "fps": 20,
                "joints": format!("joints/{id}.npy"),
                "pose_distances": format!("pq/{id}.npy"),
                "prompt_type": if p % 2 == 0 { "dynamics_long" } else { "complexity_short" },
                "prompt_text": format!("a person performs motion number {p}"),
                "stride": 3,
            });
            if opts.mesh {
                let (verts, faces) = mesh_frames(&mut rng, &joints, t);
                write_npy(dir.join(format!("mesh/{id}.npy")), &NpyArray::from_f64(vec![t, 12, 3], verts).unwrap()).unwrap();
                write_npy_indices(dir.join(format!("mesh/{id}_faces.npy")), &[4, 3], &faces).unwrap();
                entry["vertices"] = json!(format!("mesh/{id}.npy"));
                entry["faces"] = json!(format!("mesh/{id}_faces.npy"));
            }
            if opts.strips {
                let mut bytes = vec![0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];
                bytes.extend(id.as_bytes());
                fs::write(dir.join(format!("strips/{id}.png")), bytes).unwrap();
                entry["strip"] = json!(format!("strips/{id}.png"));
            }
            manifest.insert(id.clone(), entry);

            // motion embedding drifts from its prompt's text vector with baseline index
            let scale = 0.2 + 0.3 * b as f64;
            let m: Vec<f64> = texts[p].iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect();
            write_vec(&dir.join(format!("emb/motion_{id}.npy")), &m);
            emb_motion.insert(id.clone(), json!(format!("emb/motion_{id}.npy")));
            let pairs: Vec<f64> = (0..3)
                .flat_map(|_| {
                    let a = unit_vector(&mut rng, DIM);
                    let bvec: Vec<f64> = a.iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect();
                    a.into_iter().chain(bvec)
                })
                .collect();
            write_npy(dir.join(format!("emb/pairs_{id}.npy")), &NpyArray::from_f64(vec![3, 2, DIM], pairs).unwrap()).unwrap();
            emb_pairs.insert(id.clone(), json!(format!("emb/pairs_{id}.npy")));
            clip_ids.push(id);
        }
    }
    let manifest_path = dir.join("manifest.json");
    write_json(&manifest_path, &Value::Object(manifest));
    let embeddings = opts.embeddings.then(|| {
        let p = dir.join("embeddings.json");
        write_json(&p, &json!({"text": emb_text, "motion": emb_motion, "atomic_pairs": emb_pairs}));
        p
    });
    let (root, body) = targets_json();
    let targets = vec![dir.join("root_move.json"), dir.join("body_part.json")];
    write_json(&targets[0], &root);
    write_json(&targets[1], &body);
    clip_ids.sort();
    Synth {
        root: dir.to_path_buf(),
        manifest: manifest_path,
        embeddings,
        targets,
        clip_ids,
    }
}

/// Writes a run configuration next to the corpus and returns its path.
pub fn write_config(dir: &Path, name: &str, value: Value) -> PathBuf {
    let path = dir.join(name);
    write_json(&path, &value);
    path
}

/// Base configuration covering every subcommand except the judge endpoint.
pub fn base_config(s: &Synth, out: &str) -> Value {
    json!({
        "corpus": s.manifest,
        "targets": s.targets,
        "embeddings": s.embeddings,
        "metric_reports": [
            s.root.join(out).join("physical_report.json"),
            s.root.join(out).join("semantic_report.json"),
            s.root.join(out).join("judge_results.json"),
        ],
        "replicates": 200,
        "seed": 5,
        "output_dir": out,
    })
}

/// Judge reply whose scores are a deterministic function of `key`.
pub fn judge_reply(key: usize) -> String {
    let scores = [key % 10 + 1, (key * 7) % 20 + 1, (key * 3) % 10, (key * 5) % 10 + 1, key % 9 + 1];
    let total: usize = scores.iter().sum();
    let verdict = match total {
        50.. => "aligned",
        30..=49 => "partial",
        _ => "mismatch",
    };
    json!({
        "video_name": "v",
        "prompt_name": "p",
        "scores": {
            "extra_non_instruction_actions": scores[0],
            "action_completeness": scores[1],
            "multi_stage_order_correctness": scores[2],
            "body_part_understanding": scores[3],
            "physical_plausibility": scores[4],
        },
        "overall_score": total,
        "verdict": verdict,
        "frame_observation": "frames show a person moving",
        "prompt_overlap": "motion",
        "issues_found": "",
    })
    .to_string()
}

/// Stable key derived from a chat request body: sum of its bytes.
pub fn body_key(body: &str) -> usize {
    body.bytes().map(|b| b as usize).sum()
}

pub fn judge_config(url: &str) -> Value {
    json!({
        "endpoint": url,
        "api_key": "test-key",
        "concurrency": 4,
        "timeout_secs": 10,
        "retry": {"base_delay": 1, "factor": 2.0, "max_attempts": 5},
    })
}
