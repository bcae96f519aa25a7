use std::path::PathBuf;

use longwave::bidirectional::Target;
use longwave::config::{load_config, parse_config};
use longwave::experiments::ErrorLaw;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn shipped_configs_load() {
    let ch = load_config(&shipped("ch_ib.toml"), &[]).unwrap();
    assert_eq!(ch.sweep.model.name, "ch");
    assert_eq!(ch.sweep.target, Target::ImprovedBoussinesq);
    assert_eq!(ch.sweep.grid.points(), 1024);

    let nl = load_config(&shipped("ch_nonlocal.toml"), &[]).unwrap();
    assert_eq!(nl.kernel().unwrap().name, "rational6");

    let kdv = load_config(&shipped("kdv_ib.toml"), &[]).unwrap();
    assert_eq!(kdv.law, ErrorLaw::EpsSq);
    assert_eq!(kdv.sweep.band, Some((1.0, 1.0)));
}

#[test]
fn kdv_band_is_enforced() {
    let err = load_config(&shipped("kdv_ib.toml"), &["path=[[0.1, 0.4]]".into()]).unwrap_err();
    assert!(err.to_string().contains("band"), "{err}");
    let err = parse_config(
        "model = \"kdv\"\npath = [[0.36, 0.6]]\nband = [1.0, 1.0]\n",
        &[],
    )
    .unwrap_err();
    assert!(err.to_string().contains("1/3"), "{err}");
}

#[test]
fn missing_file_names_the_path() {
    let err = load_config(&shipped("absent.toml"), &[]).unwrap_err();
    assert!(err.to_string().contains("absent.toml"));
}

#[test]
fn nonlocal_without_kernel_is_rejected() {
    let err = parse_config(
        "model = \"ch\"\ntarget = \"nonlocal\"\npath = [[0.1, 0.1]]\n",
        &[],
    )
    .unwrap_err();
    assert!(err.to_string().contains("kernel"));
}
