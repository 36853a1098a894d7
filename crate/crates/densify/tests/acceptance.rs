//! End-to-end acceptance checks. Prints one PASS or FAIL line per criterion
//! and exits non-zero when any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use densify::config::{EngineConfig, Overrides};
use densify::dataset::{write_manifest, KeyframeEntry, Manifest};
use densify::formats::{read_rgb_png, write_rgb_png};
use densify::run::{depth_stem, write_outputs, CLOUD_FILE, DEPTH_DIR};
use densify::synth::{make_dataset, SynthOptions};
use densify::{load_config, run_offline, Dataset, RunOptions, RunOutput};
use densify_core::geometry::plane_depth_along_ray;
use densify_core::patchmatch::{run_patchmatch, DepthRange, PatchMatchParams, PatchSpec, PlaneMap};
use densify_core::pipeline::{
    consistency_filter, triangulation_angle_deg, view_filter_accept, ConsistencyConfig,
    ConsistencyStage, DepthStage, Keyframe, KeyframeGate, Rejection, ViewFilterConfig,
};
use densify_core::synth::{accuracy, render_scene, SyntheticScene};
use densify_core::{DepthPanorama, EquirectCamera, RgbImage, RigidPose};
use nalgebra::{Matrix3, Point2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn panorama() -> EquirectCamera {
    EquirectCamera::new(512, 256).unwrap()
}

fn synth(scene: &SyntheticScene, keyframes: usize, dir: &Path) -> Dataset {
    let options = SynthOptions::new(keyframes, panorama());
    make_dataset(scene, &options, dir).unwrap();
    Dataset::load(dir).unwrap()
}

fn run(ds: &Dataset, overrides: &Overrides, workers: Option<usize>) -> (EngineConfig, RunOutput) {
    let config = load_config(None, overrides).unwrap();
    let out = run_offline(ds, &config, &RunOptions { workers }).unwrap();
    (config, out)
}

fn brute_force() -> Outcome {
    let t = Instant::now();
    let camera = EquirectCamera::new(16, 8).unwrap();
    let (group, _) = support::two_level_group(camera, 0.8, 3);
    let range = DepthRange::new(1.0, 8.0).unwrap();
    let spec = PatchSpec {
        half_window: 1,
        sample_stride: 1,
        cost_truncation: 1.2,
    };
    let oracle = support::brute_force_costs(&group, &spec, &range, 512);
    let params = PatchMatchParams::new(spec, 6, range, 11);
    let (map, _) = run_patchmatch(&group, PlaneMap::invalid(camera), &params).unwrap();
    let share = support::within_five_percent(map.costs(), &oracle);
    let secs = t.elapsed().as_secs_f64();
    check(
        share >= 0.9 && secs < 60.0,
        format!("{:.1}% of pixels within 5% of the oracle, {secs:.1}s", share * 100.0),
    )
}

fn warp_ablation(dir: &Path) -> Outcome {
    let t = Instant::now();
    let ds = synth(&SyntheticScene::corridor(3), 30, dir);
    let (_, with) = run(&ds, &Overrides::default(), None);
    let (_, without) = run(&ds, &Overrides { no_warp: true, ..Default::default() }, None);
    let (cw, cn) = (with.metrics.mean_completeness, without.metrics.mean_completeness);
    let (pw, pn) = (with.metrics.points, without.metrics.points);
    let secs = t.elapsed().as_secs_f64();
    check(
        cw > cn && pw > pn && secs < 600.0,
        format!(
            "completeness {cw:.4} vs {cn:.4} (ratio {:.4}), points {pw} vs {pn} (ratio {:.4}), {secs:.0}s",
            cw / cn,
            pw as f64 / pn as f64
        ),
    )
}

/// Returns the run too, for the throughput figure.
fn depth_accuracy(dir: &Path) -> (Outcome, Option<RunOutput>) {
    let t = Instant::now();
    let scene = SyntheticScene::box_room(2);
    let ds = synth(&scene, 8, dir);
    let (_, out) = run(&ds, &Overrides::default(), None);
    let (mut n, mut rel, mut inliers) = (0usize, 0.0, 0.0);
    for f in &out.depth {
        let truth = render_scene(&scene, f.depth.camera(), &f.pose).unwrap().depth;
        let r = accuracy(&f.depth, &truth).unwrap();
        n += r.count;
        rel += r.mean_abs_rel * r.count as f64;
        inliers += r.inlier_fraction * r.count as f64;
    }
    let secs = t.elapsed().as_secs_f64();
    let (rel, inliers) = (rel / n.max(1) as f64, inliers / n.max(1) as f64);
    let outcome = check(
        n > 0 && rel <= 0.05 && inliers >= 0.70 && secs < 300.0,
        format!(
            "{} maps, {n} pixels, mean abs rel {:.2}%, inliers {:.1}%, {secs:.0}s",
            out.depth.len(),
            rel * 100.0,
            inliers * 100.0
        ),
    );
    (outcome, Some(out))
}

fn consistency(dir: &Path) -> Outcome {
    // mask monotonicity on real PatchMatch output
    let scene = SyntheticScene::box_room(5);
    let small = EquirectCamera::new(256, 128).unwrap();
    let options = SynthOptions::new(9, small);
    make_dataset(&scene, &options, dir).unwrap();
    let ds = Dataset::load(dir).unwrap();
    let pipeline = EngineConfig::default().pipeline_config().unwrap();
    let mut gate = KeyframeGate::new(small, pipeline.view_filter).unwrap();
    let mut depth = DepthStage::new(small, pipeline.depth).unwrap();
    let mut stage = ConsistencyStage::new(pipeline.consistency).unwrap();
    let mut raw = std::collections::BTreeMap::new();
    let mut filtered = Vec::new();
    for i in 0..ds.len() {
        if let Some(job) = gate.submit(ds.keyframe(i).unwrap()).unwrap().job {
            let frame = depth.compute(&job).unwrap();
            raw.insert(frame.id, frame.depth.clone());
            filtered.extend(stage.push(frame));
        }
    }
    filtered.extend(stage.finish());
    let monotone = filtered.len() == raw.len() && filtered.iter().all(|f| f.depth.mask_subset_of(&raw[&f.id]));

    // survival on exact and on random depths
    let camera = panorama();
    let maps: Vec<_> = (0..5)
        .map(|i| {
            let pose = RigidPose::from_translation(Vector3::new(0.2, -0.1, -0.6 + 0.3 * i as f64));
            (render_scene(&scene, &camera, &pose).unwrap().depth, pose)
        })
        .collect();
    let others: Vec<_> = [0, 1, 3, 4].iter().map(|&i| (&maps[i].0, &maps[i].1)).collect();
    let config = ConsistencyConfig::default();
    let exact = consistency_filter(&maps[2].0, &maps[2].1, &others, &config);
    let kept = exact.valid_count() as f64 / maps[2].0.valid_count() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let random = DepthPanorama::from_values(
        camera,
        (0..camera.pixel_count()).map(|_| Some(rng.random_range(0.3f32..30.0))).collect(),
    )
    .unwrap();
    let noise = consistency_filter(&random, &maps[2].1, &others, &config).valid_count() as f64
        / random.valid_count() as f64;
    check(
        monotone && kept >= 0.99 && noise <= 0.01,
        format!(
            "masks shrink on {} of {} maps, exact depths kept {:.2}%, random depths kept {:.3}%",
            filtered.iter().filter(|f| f.depth.mask_subset_of(&raw[&f.id])).count(),
            raw.len(),
            kept * 100.0,
            noise * 100.0
        ),
    )
}

fn outputs(ds: &Dataset, workers: usize, out: &Path) -> (Vec<u8>, Vec<Vec<u8>>) {
    let overrides = Overrides {
        save_depth: true,
        seed: Some(7),
        ..Default::default()
    };
    let (config, result) = run(ds, &overrides, Some(workers));
    write_outputs(out, ds, &config, &result).unwrap();
    let depth = result
        .depth
        .iter()
        .map(|f| fs::read(out.join(DEPTH_DIR).join(format!("{}.png", depth_stem(f.id)))).unwrap())
        .collect();
    (fs::read(out.join(CLOUD_FILE)).unwrap(), depth)
}

fn determinism(dir: &Path) -> Outcome {
    let ds = synth(&SyntheticScene::box_room(8), 6, &dir.join("ds"));
    let n = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let a = outputs(&ds, 1, &dir.join("a"));
    let b = outputs(&ds, n, &dir.join("b"));
    let c = outputs(&ds, 1, &dir.join("c"));
    check(
        a == b && a == c && !a.1.is_empty(),
        format!(
            "cloud {} bytes and {} depth maps identical at 1 and {n} workers",
            a.0.len(),
            a.1.len()
        ),
    )
}

/// Copies a dataset with every image rolled a quarter turn to the left
/// (longitude + 90 degrees) and the camera rotated to match.
fn rolled_copy(ds: &Dataset, out: &Path) -> Dataset {
    let quarter = (ds.camera.width() / 4) as i64;
    // v(lon + 90deg) = R_y(90deg) v(lon), so the new camera is R R_y(-90deg)
    let turn = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let mut keyframes = Vec::new();
    for (i, e) in ds.manifest.keyframes.iter().enumerate() {
        let img = read_rgb_png(&ds.root.join(&e.image)).unwrap().roll_columns(quarter);
        fs::create_dir_all(out.join("images")).unwrap();
        write_rgb_png(&out.join(&e.image), &img).unwrap();
        let p = &ds.poses[i];
        let pose = RigidPose::new(p.rotation() * turn, *p.translation()).unwrap();
        let points: Vec<_> = e.sparse_points.iter().map(|p| Vector3::from(*p)).collect();
        keyframes.push(KeyframeEntry::from_pose(e.id, e.image.clone(), &pose, &points));
    }
    write_manifest(out, &Manifest { camera: ds.manifest.camera, keyframes }).unwrap();
    Dataset::load(out).unwrap()
}

fn equivariance(dir: &Path) -> Outcome {
    let ds = synth(&SyntheticScene::box_room(6), 5, &dir.join("ds"));
    let rolled = rolled_copy(&ds, &dir.join("rolled"));
    let (_, a) = run(&ds, &Overrides::default(), None);
    let (_, b) = run(&rolled, &Overrides::default(), None);
    let quarter = (ds.camera.width() / 4) as i64;
    let (mut total, mut equal) = (0usize, 0usize);
    for (fa, fb) in a.depth.iter().zip(&b.depth) {
        let expected = fa.depth.roll_columns(quarter);
        for (x, y) in expected.values().iter().zip(fb.depth.values()) {
            if x.is_none() && y.is_none() {
                continue;
            }
            total += 1;
            if let (Some(x), Some(y)) = (x, y) {
                equal += ((x - y).abs() as f64 <= 1e-6) as usize;
            }
        }
    }
    let share = equal as f64 / total.max(1) as f64;
    check(
        a.depth.len() == b.depth.len() && total > 0 && share >= 0.999,
        format!(
            "{} maps, {equal} of {total} valid pixels equal to the rolled original ({:.4}%)",
            a.depth.len(),
            share * 100.0
        ),
    )
}

fn keyframe(id: u64, center: Vector3<f64>, points: &[Vector3<f64>]) -> Keyframe {
    Keyframe {
        id,
        image: RgbImage::new(16, 8),
        pose: RigidPose::from_translation(center),
        sparse_points: points.to_vec(),
    }
}

fn view_filter() -> Outcome {
    let config = ViewFilterConfig::default();
    let pts: Vec<_> = (0..50).map(|i| Vector3::new(2.0, 0.0, 0.1 * i as f64)).collect();
    let zero = view_filter_accept(&keyframe(1, Vector3::zeros(), &pts), &keyframe(0, Vector3::zeros(), &pts), &config);

    let (ca, cb) = (Vector3::new(-1.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
    let p = Vector3::new(0.0, 0.0, 2.0);
    let theta = triangulation_angle_deg(&p, &ca, &cb);
    let (u, v) = (ca - p, cb - p);
    let oracle = u.cross(&v).norm().atan2(u.dot(&v)).to_degrees();
    let near: Vec<_> = (0..10).map(|i| Vector3::new(0.0, 0.01 * i as f64, 2.0)).collect();
    let analytic = view_filter_accept(&keyframe(1, cb, &near), &keyframe(0, ca, &near), &config);

    let (ca, cb) = (Vector3::new(-0.5, 0.0, 0.0), Vector3::new(0.5, 0.0, 0.0));
    let boundary: Vec<_> = (0..100)
        .map(|i| Vector3::new(0.0, i as f64 * 1e-3, if i < 20 { 2.0 } else { 20.0 }))
        .collect();
    let edge = view_filter_accept(&keyframe(1, cb, &boundary), &keyframe(0, ca, &boundary), &config);
    let below: Vec<_> = boundary.iter().enumerate().map(|(i, p)| if i == 0 { Vector3::new(0.0, 0.0, 20.0) } else { *p }).collect();
    let under = view_filter_accept(&keyframe(1, cb, &below), &keyframe(0, ca, &below), &config);

    let ok = !zero.accepted
        && zero.rejection == Some(Rejection::BelowFraction)
        && (theta - oracle).abs() < 1e-9
        && (theta - 53.13).abs() < 0.01
        && analytic.accepted
        && edge.accepted
        && edge.passing == 20
        && !under.accepted;
    check(
        ok,
        format!(
            "zero baseline rejected: {}, angle {theta:.4} deg accepted: {}, 20/100 accepted: {}, 19/100 rejected: {}",
            !zero.accepted, analytic.accepted, edge.accepted, !under.accepted
        ),
    )
}

fn geometry() -> Outcome {
    let cam = EquirectCamera::new(1024, 512).unwrap();
    let mut worst = 0.0f64;
    for y in 0..512 {
        for x in (0..1024).step_by(7) {
            let p = Point2::new(x as f64 + 0.5, y as f64 + 0.5);
            if cam.latitude(p.y).abs() >= 80f64.to_radians() {
                continue;
            }
            let back = cam.ray_to_pixel(&cam.pixel_to_ray(p).unwrap()).unwrap();
            worst = worst.max((back - p).norm());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut unit = || loop {
        let v = Vector3::<f64>::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            break v.normalize();
        }
    };
    let (mut cases, mut max_rel) = (0, 0.0f64);
    while cases < 1000 {
        let (anchor, query) = (unit(), unit());
        let mut normal = unit();
        if normal.dot(&anchor) > 0.0 {
            normal = -normal;
        }
        if normal.dot(&query).abs() < 0.05 || normal.dot(&anchor).abs() < 0.05 {
            continue;
        }
        let depth = 0.3 + 29.7 * (cases as f64 / 1000.0);
        let got = plane_depth_along_ray(depth, &normal, &anchor, &query).unwrap();
        // point on the plane along the query ray: solve n . (t q - d a) = 0
        // through two in-plane directions instead
        let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = normal.cross(&helper).normalize();
        let v = normal.cross(&u);
        let m = Matrix3::from_columns(&[query, -u, -v]);
        let want = m.lu().solve(&(anchor * depth)).unwrap().x;
        max_rel = max_rel.max((got - want).abs() / want.abs());
        cases += 1;
    }
    check(
        worst < 0.5 && max_rel <= 1e-9,
        format!("round trip max {worst:.2e} px, plane-ray max relative error {max_rel:.2e} over {cases} cases"),
    )
}

fn throughput(run: Option<&RunOutput>) -> Outcome {
    let Some(out) = run else {
        return Err("no depth-accuracy run to time".into());
    };
    let m = &out.metrics;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    // 2 s on 8 cores, scaled to the cores at hand assuming linear speedup
    let budget = 2.0 * 8.0 / cores.min(8) as f64;
    let jobs = &m.runtime.depth_job_seconds;
    let mean_job = jobs.iter().sum::<f64>() / jobs.len().max(1) as f64;
    let per_keyframe = m.runtime.wall_seconds / m.depth_jobs.max(1) as f64;
    check(
        !jobs.is_empty() && per_keyframe <= budget,
        format!(
            "512x256: {per_keyframe:.2}s wall per depth map ({mean_job:.2}s PatchMatch) on {cores} core(s), budget {budget:.1}s"
        ),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn report(n: u32, name: &str, outcome: &Outcome) {
    use std::io::Write;
    match outcome {
        Ok(detail) => println!("PASS {n} {name}: {detail}"),
        Err(detail) => println!("FAIL {n} {name}: {detail}"),
    }
    let _ = std::io::stdout().flush();
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name);
    let mut all = true;
    let mut record = |n, name, outcome: Outcome| {
        report(n, name, &outcome);
        all &= outcome.is_ok();
    };
    record(1, "brute-force oracle", guarded(brute_force));
    record(2, "warping ablation", guarded(|| warp_ablation(&dir("corridor"))));
    let mut accuracy_run = None;
    let accuracy = guarded(|| {
        let (outcome, out) = depth_accuracy(&dir("room"));
        accuracy_run = out;
        outcome
    });
    record(3, "depth accuracy", accuracy);
    record(4, "consistency filter", guarded(|| consistency(&dir("consistency"))));
    record(5, "determinism", guarded(|| determinism(&dir("determinism"))));
    record(6, "wraparound equivariance", guarded(|| equivariance(&dir("roll"))));
    record(7, "view filter", guarded(view_filter));
    record(8, "geometry", guarded(geometry));
    record(9, "throughput", guarded(|| throughput(accuracy_run.as_ref())));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
