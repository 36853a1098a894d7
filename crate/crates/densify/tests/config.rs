use std::fs;

use densify::config::{load_config, parse_resolution, ConfigLoadError, EngineConfig, Overrides};
use densify_core::patchmatch::{PatchMatchParams, PatchSpec};
use densify_core::pipeline::{ConsistencyConfig, FusionConfig, MedianConfig, ViewFilterConfig};

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn empty_file_gives_paper_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "empty.toml", "");
    let c = load_config(Some(&path), &Overrides::default()).unwrap();
    assert_eq!(c, EngineConfig::default());
    assert_eq!((c.view_filter.theta_min, c.view_filter.theta_max), (6.0, 60.0));
    assert_eq!(c.view_filter.accept_fraction, 0.20);
    assert_eq!(c.consistency.window, 5);
    assert_eq!(c.fusion.buffer, 4);
}

#[test]
fn defaults_agree_with_the_engine() {
    let p = EngineConfig::default().pipeline_config().unwrap();
    assert_eq!(p.view_filter, ViewFilterConfig::default());
    assert_eq!(p.consistency, ConsistencyConfig::default());
    assert_eq!(p.fusion, FusionConfig::default());
    assert_eq!(p.depth.median, Some(MedianConfig::default()));
    let core = PatchMatchParams::new(PatchSpec::default(), 6, p.depth.params.depth, 0);
    assert_eq!(p.depth.params, core);
    assert!(p.depth.warp);
}

#[test]
fn inverted_theta_names_both_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(&dir, "c.toml", "[view_filter]\ntheta_min = 70\n");
    let err = load_config(Some(&path), &Overrides::default()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, ConfigLoadError::Invalid(_)));
    assert!(msg.contains("view_filter.theta_min") && msg.contains("view_filter.theta_max"), "{msg}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("a.toml", "[fusion]\nbuffr = 4\n"),
        ("b.toml", "[nonsense]\n"),
        ("c.json", r#"{"patchmatch": {"iteration": 3}}"#),
    ] {
        let path = write(&dir, name, text);
        let err = load_config(Some(&path), &Overrides::default()).unwrap_err();
        assert!(matches!(err, ConfigLoadError::Parse { .. }), "{name}: {err}");
    }
}

#[test]
fn invariant_violations_name_their_key() {
    let dir = tempfile::tempdir().unwrap();
    for (text, key) in [
        ("[consistency]\nmin_support = 0\n", "consistency.min_support"),
        ("[fusion]\nbuffer = 0\n", "fusion.buffer"),
        ("[patchmatch]\niterations = 0\n", "iterations"),
        ("[patchmatch]\ndepth_min = 5.0\ndepth_max = 1.0\n", "depth"),
        ("[processing]\nresolution = \"100x70\"\n", "processing.resolution"),
        ("[patchmatch]\nseed = 18446744073709551615\n", "patchmatch.seed"),
    ] {
        let path = write(&dir, "c.toml", text);
        let err = load_config(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains(key), "{text}: {err}");
    }
}

#[test]
fn no_warp_override_is_echoed() {
    let overrides = Overrides {
        no_warp: true,
        seed: Some(9),
        ..Default::default()
    };
    let c = load_config(None, &overrides).unwrap();
    assert!(!c.patchmatch.warp);
    let echoed = c.to_toml_string();
    assert!(echoed.contains("warp = false"), "{echoed}");
    assert!(echoed.contains("seed = 9"), "{echoed}");
}

#[test]
fn load_echo_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[view_filter]\ntheta_min = 4.5\n[patchmatch]\niterations = 3\ndepth_perturbation = 1.25\ncost_truncation = 1.1\n[processing]\nresolution = \"256x128\"\n[output]\nsave_depth = true\n";
    let path = write(&dir, "c.toml", text);
    let first = load_config(Some(&path), &Overrides { no_warp: true, ..Default::default() }).unwrap();
    let echo = write(&dir, "echo.toml", &first.to_toml_string());
    let second = load_config(Some(&echo), &Overrides::default()).unwrap();
    assert_eq!(first, second);
    let json = write(&dir, "echo.json", &serde_json::to_string(&first).unwrap());
    assert_eq!(load_config(Some(&json), &Overrides::default()).unwrap(), first);
}

#[test]
fn resolution_strings() {
    let c = parse_resolution("512x256").unwrap();
    assert_eq!((c.width(), c.height()), (512, 256));
    for bad in ["512", "ax256", "512x255", "0x0"] {
        assert!(parse_resolution(bad).is_err(), "{bad}");
    }
}

#[test]
fn missing_file_is_a_read_error() {
    let err = load_config(Some(std::path::Path::new("/nonexistent/c.toml")), &Overrides::default()).unwrap_err();
    assert!(matches!(err, ConfigLoadError::Read { .. }));
}
