mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use sitewave::geometry::foliage_penetration;
use sitewave::scene::{FoliageModel, FoliageVolume, Scene, DENSE_FOLIAGE};
use sitewave::tracer::{
    diffraction_paths, exact_path_correction, find_los, image_paths, sbr_captures, sbr_paths,
    InteractionKind, PathSignature, PropagationPath, SignatureElement, TraceConfig, TraceError,
    Tracer,
};
use sitewave::{Vec3, VolumeShape};

fn box_scene(h: f64) -> Scene {
    Scene::from_footprints(
        &[rect(-10.0, -10.0, 10.0, 10.0, h)],
        None,
        sitewave::scene::Lod::Lod1,
        "Concrete",
        Vec::new(),
    )
    .unwrap()
}

fn signatures(paths: &[PropagationPath]) -> BTreeSet<PathSignature> {
    paths.iter().map(|p| p.signature.clone()).collect()
}

fn check_path_invariants(p: &PropagationPath) {
    assert_eq!(p.segments.len(), p.interactions.len() + 1);
    assert_eq!(p.segments[0].start, p.tx);
    assert_eq!(p.segments.last().unwrap().end, p.rx);
    for w in p.segments.windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
    let sum: f64 = p.segments.iter().map(|s| s.length).sum();
    assert!((sum - p.length).abs() <= 1e-12 * p.length);
}

/// Angle of incidence equals angle of reflection at every specular point.
fn check_specular(p: &PropagationPath) {
    for (i, inter) in p.interactions.iter().enumerate() {
        if let InteractionKind::Reflection { normal, .. } = inter.kind {
            let k_in = p.segments[i].direction();
            let k_out = p.segments[i + 1].direction();
            let a_in = (-k_in).dot(normal).clamp(-1.0, 1.0).acos();
            let a_out = k_out.dot(normal).clamp(-1.0, 1.0).acos();
            assert!((a_in - a_out).abs() < 1e-9, "{} vs {}", a_in, a_out);
            // Incident, normal and reflected directions are coplanar.
            assert!(k_in.cross(normal).dot(k_out).abs() < 1e-9);
        }
    }
}

#[test]
fn los_in_empty_scene() {
    let scene = Scene::empty();
    let p = find_los(&scene, v(0.0, 0.0, 10.0), v(30.0, 40.0, 10.0)).unwrap();
    assert_eq!(p.length, 50.0);
    assert!(p.signature.is_los());
    check_path_invariants(&p);
}

#[test]
fn building_blocks_los() {
    let scene = box_scene(20.0);
    assert!(find_los(&scene, v(-30.0, 0.0, 5.0), v(30.0, 0.0, 5.0)).is_none());
    assert!(find_los(&scene, v(-30.0, 0.0, 25.0), v(30.0, 0.0, 25.0)).is_some());
}

#[test]
fn foliage_does_not_block() {
    let shape = VolumeShape::Box {
        min: [-5.0, -5.0, 0.0],
        max: [5.0, 5.0, 20.0],
    };
    let scene = Scene::new(
        sitewave::scene::builtin_materials(),
        Vec::new(),
        None,
        vec![FoliageVolume::new(shape, DENSE_FOLIAGE, FoliageModel::Generic)],
        None,
        None,
    )
    .unwrap();
    let p = find_los(&scene, v(-30.0, 0.0, 5.0), v(30.0, 0.0, 5.0)).unwrap();
    assert_eq!(p.segments[0].foliage.len(), 1);
    assert!((p.foliage_depth() - 10.0).abs() < 1e-12);
}

#[test]
fn ground_reflection_point() {
    let scene = ground_scene();
    let paths = image_paths(&scene, v(0.0, 0.0, 10.0), v(100.0, 0.0, 2.0), 1);
    assert_eq!(paths.len(), 1);
    let p = &paths[0];
    assert!((p.interactions[0].point.x - 250.0 / 3.0).abs() < 1e-9);
    assert!(p.interactions[0].point.z.abs() < 1e-12);
    assert!((p.length - (100.0f64 * 100.0 + 12.0 * 12.0).sqrt()).abs() < 1e-9);
    assert!((p.length - 100.7174).abs() < 1e-4);
    check_specular(p);
}

#[test]
fn specular_point_outside_face_rejected() {
    // Ground patch that ends before the specular point at x = 83.3.
    let patch = quad(
        [v(-10.0, -10.0, 0.0), v(60.0, -10.0, 0.0), v(60.0, 10.0, 0.0), v(-10.0, 10.0, 0.0)],
        material_id("ITU Medium Dry Earth"),
        1,
    );
    let scene = Scene::new(sitewave::scene::builtin_materials(), vec![patch], None, Vec::new(), None, None).unwrap();
    assert!(image_paths(&scene, v(0.0, 0.0, 10.0), v(100.0, 0.0, 2.0), 1).is_empty());
    assert!(exact_path_correction(&scene, &[0], v(0.0, 0.0, 10.0), v(100.0, 0.0, 2.0)).is_none());
}

#[test]
fn canyon_order_two_matches_brute_force() {
    let scene = canyon_scene();
    let n = scene.facets().len() as u32;
    let mut rng = rng(11);
    for _ in 0..20 {
        let tx = v(rng_range(&mut rng, -80.0, 80.0), rng_range(&mut rng, -9.0, 9.0), rng_range(&mut rng, 1.0, 25.0));
        let rx = v(rng_range(&mut rng, -80.0, 80.0), rng_range(&mut rng, -9.0, 9.0), rng_range(&mut rng, 1.0, 25.0));
        let found = image_paths(&scene, tx, rx, 2);
        let mut brute = BTreeMap::new();
        for a in 0..n {
            if let Some(p) = exact_path_correction(&scene, &[a], tx, rx) {
                brute.insert(p.signature.clone(), p.length);
            }
            for b in 0..n {
                if a != b {
                    if let Some(p) = exact_path_correction(&scene, &[a, b], tx, rx) {
                        brute.insert(p.signature.clone(), p.length);
                    }
                }
            }
        }
        let got: BTreeMap<_, _> = found.iter().map(|p| (p.signature.clone(), p.length)).collect();
        assert_eq!(got, brute);
        // Wall-wall bounces exist inside the canyon.
        assert!(got.keys().any(|s| s.reflections() == 2));
        for p in &found {
            check_path_invariants(p);
            check_specular(p);
        }
    }
}

fn rng_range(rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng;
    rng.gen_range(lo..hi)
}

#[test]
fn sbr_agrees_with_image_method_in_canyon() {
    let scene = canyon_scene();
    let tx = v(-40.0, 3.0, 12.0);
    let rxs = vec![v(30.0, -4.0, 1.6), v(75.0, 6.0, 5.0), v(-5.0, -7.5, 20.0)];
    let cfg = TraceConfig {
        max_reflections: 2,
        max_diffractions: 0,
        diffraction_reflections: 0,
        sbr_subdivision: 5,
        ..TraceConfig::default()
    };
    let sbr = sbr_paths(&scene, tx, &rxs, &cfg).unwrap();
    for (rx, found) in rxs.iter().zip(&sbr) {
        let mut expected: BTreeMap<PathSignature, f64> =
            image_paths(&scene, tx, *rx, 2).into_iter().map(|p| (p.signature, p.length)).collect();
        if let Some(p) = find_los(&scene, tx, *rx) {
            expected.insert(p.signature, p.length);
        }
        assert_eq!(signatures(found), expected.keys().cloned().collect());
        for p in found {
            let l = expected[&p.signature];
            assert!((p.length - l).abs() <= 1e-9 * l);
        }
    }
}

#[test]
fn sbr_empty_scene_only_los() {
    let scene = Scene::empty();
    let tx = v(0.0, 0.0, 10.0);
    let rxs = vec![v(100.0, 0.0, 2.0), v(-3.0, 4.0, 10.0), v(0.0, 0.0, -50.0)];
    for s in 2..=5 {
        let cfg = TraceConfig {
            sbr_subdivision: s,
            ..TraceConfig::default()
        };
        let res = sbr_paths(&scene, tx, &rxs, &cfg).unwrap();
        for paths in &res {
            assert_eq!(paths.len(), 1);
            assert!(paths[0].signature.is_los());
        }
    }
}

#[test]
fn sbr_discovery_is_monotone() {
    let scene = courtyard_scene();
    let tx = v(10.0, -5.0, 8.0);
    let rxs = vec![v(40.0, 10.0, 1.6), v(-10.0, 12.0, 3.0), v(50.0, -14.0, 6.0)];
    let mut prev: Option<Vec<BTreeSet<PathSignature>>> = None;
    for s in 2..=5 {
        let cfg = TraceConfig {
            max_reflections: 4,
            sbr_subdivision: s,
            ..TraceConfig::default()
        };
        let sets: Vec<_> = sbr_paths(&scene, tx, &rxs, &cfg).unwrap().iter().map(|p| signatures(p)).collect();
        if let Some(prev) = &prev {
            for (a, b) in prev.iter().zip(&sets) {
                assert!(a.is_subset(b), "level {s} lost {:?}", a.difference(b).collect::<Vec<_>>());
            }
        }
        prev = Some(sets);
    }
    assert!(prev.unwrap().iter().all(|s| s.iter().any(|sig| sig.reflections() >= 3)));
}

#[test]
fn epc_recovers_exact_point_from_coarse_capture() {
    let scene = ground_scene();
    let tx = v(0.0, 0.0, 10.0);
    let rx = v(100.0, 0.0, 2.0);
    let cfg = TraceConfig {
        max_reflections: 1,
        max_diffractions: 0,
        diffraction_reflections: 0,
        sbr_subdivision: 2,
        ..TraceConfig::default()
    };
    let captures = sbr_captures(&scene, tx, &[rx], &cfg).unwrap();
    let ground: Vec<_> = captures.iter().filter(|c| c.sequence.len() == 1).collect();
    assert!(!ground.is_empty());
    for c in ground {
        let p = exact_path_correction(&scene, &c.sequence, tx, rx).unwrap();
        assert!((p.interactions[0].point.x - 250.0 / 3.0).abs() < 1e-9);
        let mut polyline: f64 = c.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        polyline += (c.point - *c.vertices.last().unwrap()).norm() + (rx - c.point).norm();
        assert!(p.length <= polyline + 2.0 * c.radius);
    }
}

#[test]
fn hybrid_trace_merges_without_duplicates() {
    let scene = ten_building_scene();
    let tracer = Tracer::new(&scene, TraceConfig::default()).unwrap();
    let mut rng = rng(5);
    let tx = random_open_point(&scene, &mut rng, 150.0, (5.0, 25.0));
    let rxs: Vec<Vec3> = (0..20).map(|_| random_open_point(&scene, &mut rng, 150.0, (1.0, 3.0))).collect();
    let res = tracer.trace_many(tx, &rxs);
    let mut total = 0;
    for paths in &res {
        let sigs = signatures(paths);
        assert_eq!(sigs.len(), paths.len());
        for p in paths {
            check_path_invariants(p);
            check_specular(p);
            assert!(p.signature.reflections() <= 4 && p.signature.diffractions() <= 1);
        }
        total += paths.len();
    }
    assert!(total > 20);
    // Tracing receivers one at a time gives the same answer.
    for (rx, paths) in rxs.iter().zip(&res).take(5) {
        assert_eq!(&tracer.trace(tx, *rx), paths);
    }
}

#[test]
fn geometric_reciprocity() {
    let scene = ten_building_scene();
    let cfg = TraceConfig {
        max_reflections: 2,
        max_diffractions: 2,
        ..TraceConfig::default()
    };
    let tracer = Tracer::new(&scene, cfg).unwrap();
    let mut rng = rng(9);
    for _ in 0..15 {
        let a = random_open_point(&scene, &mut rng, 150.0, (1.0, 30.0));
        let b = random_open_point(&scene, &mut rng, 150.0, (1.0, 30.0));
        let fwd = tracer.trace(a, b);
        let back = tracer.trace(b, a);
        let f: BTreeMap<_, _> = fwd.iter().map(|p| (p.signature.reversed(), p.length)).collect();
        let r: BTreeMap<_, _> = back.iter().map(|p| (p.signature.clone(), p.length)).collect();
        assert_eq!(f.keys().collect::<Vec<_>>(), r.keys().collect::<Vec<_>>());
        for (k, l) in &f {
            assert!((l - r[k]).abs() <= 1e-9 * l);
        }
    }
}

#[test]
fn foliage_per_segment_matches_geometry() {
    let shape = VolumeShape::Cylinder {
        center: [20.0, 0.0],
        radius: 6.0,
        z_min: 0.0,
        z_max: 15.0,
    };
    let scene = Scene::new(
        sitewave::scene::builtin_materials(),
        vec![ground_quad(500.0, 1)],
        None,
        vec![FoliageVolume::new(shape, DENSE_FOLIAGE, FoliageModel::Generic)],
        None,
        None,
    )
    .unwrap();
    let tracer = Tracer::new(&scene, TraceConfig::default()).unwrap();
    let paths = tracer.trace(v(0.0, 0.0, 10.0), v(50.0, 1.0, 2.0));
    assert!(paths.iter().any(|p| p.foliage_depth() > 0.0));
    for p in &paths {
        for s in &p.segments {
            let expect = foliage_penetration(s.start, s.end, scene.foliage().iter().map(|f| &f.shape));
            let got: Vec<_> = s.foliage.iter().map(|c| (c.volume, c.length)).collect();
            assert_eq!(got, expect);
        }
    }
}

fn edge_index(scene: &Scene, a: Vec3, b: Vec3) -> u32 {
    scene
        .edges()
        .iter()
        .position(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
        .unwrap() as u32
}

#[test]
fn symmetric_diffraction_point() {
    let scene = box_scene(20.0);
    let e = edge_index(&scene, v(10.0, -10.0, 20.0), v(10.0, 10.0, 20.0));
    let cfg = TraceConfig::default();
    let paths = diffraction_paths(&scene, v(30.0, -4.0, 12.0), v(30.0, 4.0, 12.0), &cfg).unwrap();
    let p = paths
        .iter()
        .find(|p| p.signature.0 == vec![SignatureElement::Diffraction(e)])
        .unwrap();
    let q = p.interactions[0].point;
    assert!((q - v(10.0, 0.0, 20.0)).norm() < 1e-9);
}

#[test]
fn diffraction_point_beats_grid_search() {
    let scene = box_scene(20.0);
    let cfg = TraceConfig {
        max_reflections: 0,
        diffraction_reflections: 0,
        ..TraceConfig::default()
    };
    let mut rng = rng(3);
    let mut checked = 0;
    for _ in 0..20 {
        let tx = random_open_point(&scene, &mut rng, 60.0, (1.0, 40.0));
        let rx = random_open_point(&scene, &mut rng, 60.0, (1.0, 40.0));
        for p in diffraction_paths(&scene, tx, rx, &cfg).unwrap() {
            let InteractionKind::Diffraction { edge, .. } = p.interactions[0].kind else {
                unreachable!()
            };
            let n = 100_000;
            let best = (0..=n)
                .map(|i| {
                    let q = edge.point_at(i as f64 / n as f64);
                    (q - tx).norm() + (rx - q).norm()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(p.length <= best + 1e-12);
            assert!(best - p.length <= 1e-6);
            checked += 1;
        }
    }
    assert!(checked > 10);
}

#[test]
fn lit_edge_still_diffracts() {
    let scene = box_scene(5.0);
    let tx = v(-40.0, 2.0, 30.0);
    let rx = v(40.0, -1.0, 30.0);
    assert!(find_los(&scene, tx, rx).is_some());
    let e = edge_index(&scene, v(-10.0, -10.0, 5.0), v(-10.0, 10.0, 5.0));
    let paths = diffraction_paths(&scene, tx, rx, &TraceConfig::default()).unwrap();
    let p = paths
        .iter()
        .find(|p| p.signature.0 == vec![SignatureElement::Diffraction(e)])
        .unwrap();
    assert!(matches!(p.interactions[0].kind, InteractionKind::Diffraction { lit: true, .. }));
}

#[test]
fn shadowed_rooftop_diffraction_is_not_lit() {
    let scene = box_scene(20.0);
    let tx = v(-40.0, 0.0, 10.0);
    let rx = v(40.0, 0.0, 10.0);
    let paths = diffraction_paths(
        &scene,
        tx,
        rx,
        &TraceConfig {
            max_diffractions: 2,
            ..TraceConfig::default()
        },
    )
    .unwrap();
    let doubles: Vec<_> = paths.iter().filter(|p| p.signature.diffractions() == 2).collect();
    assert!(!doubles.is_empty());
    // Over the roof: symmetric, the two points at y = 0 on opposite rooftop edges.
    let over = doubles
        .iter()
        .find(|p| p.interactions.iter().all(|i| (i.point.z - 20.0).abs() < 1e-9))
        .unwrap();
    assert!((over.interactions[0].point - v(-10.0, 0.0, 20.0)).norm() < 1e-6);
    assert!((over.interactions[1].point - v(10.0, 0.0, 20.0)).norm() < 1e-6);
    for i in &over.interactions {
        assert!(matches!(i.kind, InteractionKind::Diffraction { lit: false, .. }));
    }
}

#[test]
fn double_diffraction_is_stationary() {
    let scene = box_scene(20.0);
    let cfg = TraceConfig {
        max_diffractions: 2,
        max_reflections: 0,
        diffraction_reflections: 0,
        ..TraceConfig::default()
    };
    let tx = v(-35.0, -12.0, 6.0);
    let rx = v(30.0, 17.0, 9.0);
    let paths = diffraction_paths(&scene, tx, rx, &cfg).unwrap();
    let doubles: Vec<_> = paths.iter().filter(|p| p.signature.diffractions() == 2).collect();
    assert!(!doubles.is_empty());
    for p in doubles {
        let edges: Vec<_> = p
            .interactions
            .iter()
            .map(|i| match i.kind {
                InteractionKind::Diffraction { edge, t, .. } => (edge, t),
                _ => unreachable!(),
            })
            .collect();
        let len = |t1: f64, t2: f64| {
            let p1 = edges[0].0.point_at(t1);
            let p2 = edges[1].0.point_at(t2);
            (p1 - tx).norm() + (p2 - p1).norm() + (rx - p2).norm()
        };
        let (t1, t2) = (edges[0].1, edges[1].1);
        assert!((len(t1, t2) - p.length).abs() < 1e-9);
        for (d1, d2) in [(1e-4, 0.0), (-1e-4, 0.0), (0.0, 1e-4), (0.0, -1e-4), (1e-4, -1e-4)] {
            assert!(len(t1 + d1, t2 + d2) >= p.length - 1e-12);
        }
    }
}

#[test]
fn reflection_then_diffraction_unfolds_through_image() {
    let mut meshes = vec![ground_quad(500.0, 0)];
    meshes.extend(sitewave::scene::extrude(
        &[rect(-10.0, -10.0, 10.0, 10.0, 20.0)],
        None,
        sitewave::scene::Lod::Lod1,
        1,
        |_| material_id("Concrete"),
        &mut Vec::new(),
    ));
    let scene = Scene::new(sitewave::scene::builtin_materials(), meshes, None, Vec::new(), None, None).unwrap();
    // Ground bounce, then over the near rooftop edge to a point above the roof.
    let tx = v(-50.0, 0.0, 15.0);
    let rx = v(20.0, 0.0, 25.0);
    let paths = diffraction_paths(&scene, tx, rx, &TraceConfig::default()).unwrap();
    let rd: Vec<_> = paths
        .iter()
        .filter(|p| {
            p.signature.0.len() == 2
                && matches!(p.signature.0[0], SignatureElement::Reflection(_))
                && matches!(p.signature.0[1], SignatureElement::Diffraction(_))
        })
        .collect();
    assert!(rd.iter().any(|p| p.interactions[0].point.z.abs() < 1e-9));
    for p in rd {
        let q = p.interactions[1].point;
        let image = v(tx.x, tx.y, -tx.z);
        if p.interactions[0].point.z.abs() < 1e-9 {
            assert!(((image - q).norm() + (rx - q).norm() - p.length).abs() < 1e-9);
        }
        check_specular(p);
    }
}

#[test]
fn invalid_configs_rejected() {
    let scene = Scene::empty();
    let bad = [
        (TraceConfig { max_reflections: 31, ..TraceConfig::default() }, TraceError::Reflections(31)),
        (TraceConfig { max_diffractions: 3, ..TraceConfig::default() }, TraceError::Diffractions(3)),
        (TraceConfig { max_transmissions: 1, ..TraceConfig::default() }, TraceError::Transmissions(1)),
        (TraceConfig { sbr_subdivision: 1, ..TraceConfig::default() }, TraceError::Subdivision(1)),
    ];
    for (cfg, err) in bad {
        assert_eq!(Tracer::new(&scene, cfg).err(), Some(err));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn courtyard_paths_are_specular(
        tx in (-15.0f64..55.0, -14.0f64..14.0, 1.0f64..24.0),
        rx in (-15.0f64..55.0, -14.0f64..14.0, 1.0f64..24.0),
    ) {
        let scene = courtyard_scene();
        let tx = v(tx.0, tx.1, tx.2);
        let rx = v(rx.0, rx.1, rx.2);
        let paths = image_paths(&scene, tx, rx, 2);
        for p in &paths {
            check_path_invariants(p);
            check_specular(p);
        }
        // Each path is also found, reversed, from the other end.
        let back = signatures(&image_paths(&scene, rx, tx, 2));
        for p in &paths {
            prop_assert!(back.contains(&p.signature.reversed()));
        }
    }
}
