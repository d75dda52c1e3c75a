use std::path::Path;
use std::process::{Command, Output};

use minmax_core::catalog::{build_star, StarVariant};
use minmax_core::mesh::read_obj;
use minmax_core::ComplexVal;

fn minmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minmax")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn catalog_lists_every_family() {
    let o = minmax(&["catalog", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for id in ["star1:", "star2:", "sp:"] {
        assert!(s.contains(id), "{s}");
    }
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(minmax(&["verify", "--example", "star1:4:0.4", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(minmax(&["verify", "--example", "nowhere:1"]).status.code(), Some(2));
    assert_eq!(minmax(&["build", "--example", "star1:4:0.4", "--grid", "1x3", "--out", "/dev/null"]).status.code(), Some(2));
    assert_eq!(minmax(&["build", "--example", "star1:4:0.4", "--surface", "flat", "--out", "/dev/null"]).status.code(), Some(2));
    assert_eq!(minmax(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn all_plus_triangle_fails_closure() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "tri.json", r#"{"vertices":[[0,0],[1,0],[0,1]],"signs":["+","+","+"]}"#);
    let o = minmax(&["feasibility", "--domain", &path]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["js"]["violated_condition"]["kind"], "ClosureDefect");
    assert_eq!(v["lightlike"]["violated_condition"]["kind"], "ClosureDefect");

    let o = minmax(&["verify", "--example", &path, "--suite", "feasibility", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("ClosureDefect"));
}

#[test]
fn scherk_square_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "sq.json", r#"{"vertices":[[0,0],[1,0],[1,1],[0,1]],"signs":["+","-","+","-"]}"#);
    let o = minmax(&["feasibility", "--domain", &path]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["js"]["verdict"], "Feasible");
    assert!((v["js"]["margin"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn convex_flip_star_passes_the_corner_law() {
    let o = minmax(&["verify", "--example", "star2:4:0.4", "--suite", "corners", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["checks"][0]["id"], "corners");
}

#[test]
fn minimal_mesh_lies_over_the_star() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("min.obj");
    let o = minmax(&["build", "--example", "star1:4:0.4", "--surface", "min", "--grid", "32x128", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mesh = read_obj(&out).unwrap();
    assert_eq!(mesh.vertices.len(), 32 * 128 + 1);
    assert_eq!(mesh.metadata.surface, "min");
    assert_eq!(mesh.metadata.example, "star1:4:0.4");
    let star = build_star(4, 0.4, StarVariant::Alternating).unwrap();
    for v in &mesh.vertices {
        assert!(star.polygon.contains_closed(ComplexVal::new(v[0], v[1]), 1e-9), "{v:?}");
    }
}

#[test]
fn maximal_mesh_has_bounded_heights() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("max.obj");
    let o = minmax(&["build", "--example", "star1:4:0.4", "--surface", "max", "--grid", "16x64", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mesh = read_obj(&out).unwrap();
    let star = build_star(4, 0.4, StarVariant::Alternating).unwrap();
    let t = mesh.vertices.iter().map(|v| v[2].abs()).fold(0.0, f64::max);
    // |t*| is bounded by the diameter of the domain, 1-Lipschitz from the centre.
    let diam = star.polygon.vertices().iter().map(|z| z.norm()).fold(0.0, f64::max) * 2.0;
    assert!(t.is_finite() && t <= diam, "{t} > {diam}");
    for v in &mesh.vertices {
        assert!(star.polygon.contains_closed(ComplexVal::new(v[0], v[1]), 1e-9));
    }
}

#[test]
fn extended_and_level_set_meshes_build() {
    let dir = tempfile::tempdir().unwrap();
    let ext = dir.path().join("ext.obj");
    let o = minmax(&[
        "build", "--example", "star1:4:0.4", "--surface", "max-conj", "--grid", "8x32", "--extend-vertex", "0", "--out",
        ext.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_obj(&ext).unwrap().vertices.len(), 8 * 32 + 1);

    let sp = dir.path().join("sp.obj");
    let o = minmax(&["build", "--example", "sp:0.3333333333333333", "--grid", "12x3", "--out", sp.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mesh = read_obj(&sp).unwrap();
    assert!(!mesh.triangles.is_empty());
}

#[test]
fn report_goes_to_the_json_path() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let o = minmax(&["verify", "--example", "sp:0.7071067811865476", "--suite", "symmetry", "--seed", "2", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["seed"], 2);
    assert!(v["checks"].as_array().unwrap().iter().any(|c| c["id"] == "symmetry.swap" && c["pass"] == true));
}
