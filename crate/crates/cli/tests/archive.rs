use gauge_peps::archive::{Archive, Content, Payload};
use gauge_peps::config::{GroupKind, LoadedConfig, Matter, RunConfig};
use gauge_peps::pipeline;
use gauge_peps_core::group::GroupId;
use gauge_peps_core::linalg::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn u1_config(matter: Matter) -> RunConfig {
    let mut config = RunConfig::default();
    config.group.kind = GroupKind::U1;
    config.group.physical = vec!["0".into(), "1".into()];
    config.group.physical_odd = Some(vec!["0".into(), "-1".into()]);
    config.group.links = vec!["-1".into(), "0".into(), "1".into()];
    config.group.degeneracy = [("-1".to_string(), 1), ("0".to_string(), 1), ("1".to_string(), 1)].into_iter().collect();
    config.lattice.matter = matter;
    config
}

fn assert_round_trip(archive: &Archive) {
    let text = archive.to_text();
    let parsed = Archive::parse(&text).unwrap();
    assert_eq!(parsed.to_text(), text, "{} archive is not byte stable", archive.kind());
    assert_eq!(&parsed, archive);
}

#[test]
fn tensor_archives_round_trip() {
    let model = RunConfig::default().model().unwrap();
    let archives = pipeline::build_archives(&model, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    assert_eq!(archives.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(), ["vertex.txt", "link.txt", "unified.txt"]);
    for (_, archive) in &archives {
        assert_round_trip(archive);
    }
}

#[test]
fn state_and_operator_archives_round_trip() {
    let mut config = u1_config(Matter::Bosonic);
    config.lattice.width = 2;
    config.lattice.height = 1;
    let model = config.model().unwrap();
    let (layout, state) = pipeline::contract(&model, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    assert_round_trip(&Archive::state(model.geometry, &layout, &state));

    let model = u1_config(Matter::Fermionic).model().unwrap();
    for (_, archive) in pipeline::build_archives(&model, &mut ChaCha8Rng::seed_from_u64(7)).unwrap() {
        assert!(matches!(archive.content, Content::Operator { group: GroupId::U1, .. }));
        assert_round_trip(&archive);
    }
}

#[test]
fn values_keep_seventeen_digits() {
    let model = RunConfig::default().model().unwrap();
    let (_, mut archive) = pipeline::build_archives(&model, &mut ChaCha8Rng::seed_from_u64(8)).unwrap().remove(0);
    let Payload::Tensor(t) = &mut archive.payload else { panic!("vertex archives hold tensors") };
    let index = t.iter().next().unwrap().0.clone();
    let awkward = C64::new(0.1 + 0.2, -1.0 / 3.0);
    t.set(index.clone(), awkward);
    let back = Archive::parse(&archive.to_text()).unwrap();
    let Payload::Tensor(u) = back.payload else { unreachable!() };
    assert_eq!(u.get(&index), awkward);
}

#[test]
fn malformed_archives_are_rejected() {
    let model = RunConfig::default().model().unwrap();
    let (_, archive) = pipeline::build_archives(&model, &mut ChaCha8Rng::seed_from_u64(9)).unwrap().remove(0);
    let text = archive.to_text();
    assert!(Archive::parse(&text.replace("group SU2", "group SU3")).is_err());
    assert!(Archive::parse(&text.replace("dims 3 3 3 3 3", "dims 3 3 3 3 4")).is_err());
    assert!(Archive::parse(&text.replace("kind vertex", "kind matrix")).is_err());
    assert!(Archive::parse(&format!("{text}0 0 0 0 9 1.0 0.0\n")).is_err());
    assert!(Archive::parse(&text.replacen("gauge-peps-archive 1", "gauge-peps-archive 2", 1)).is_err());
}

#[test]
fn corrupted_amplitude_fails_the_named_check() {
    let model = RunConfig::default().model().unwrap();
    let (_, mut archive) = pipeline::build_archives(&model, &mut ChaCha8Rng::seed_from_u64(10)).unwrap().remove(0);
    let elements = GroupId::SU2.sample_elements(10, 1);
    assert!(archive.checks(&elements, 1e-12, 1e-10).unwrap().iter().all(|c| c.pass));
    let Payload::Tensor(t) = &mut archive.payload else { unreachable!() };
    // Physical singlet with a single spin-½ leg: no invariant tensor has this entry.
    t.add(vec![0, 1, 0, 0, 0], C64::new(0.1, 0.0));
    let checks = archive.checks(&elements, 1e-12, 1e-10).unwrap();
    assert_eq!(checks[0].name, "archive/vertex-gauss");
    assert!(!checks[0].pass);
}

#[test]
fn config_hash_tracks_input_bytes() {
    let a = LoadedConfig::from_text("seed = 1\n").unwrap();
    let b = LoadedConfig::from_text("seed = 1\n\n").unwrap();
    assert_eq!(a.config, b.config);
    assert_ne!(a.hash, b.hash);
    assert_eq!(a.hash, gauge_peps::config::digest(b"seed = 1\n"));
    assert_eq!(LoadedConfig::defaults().hash, LoadedConfig::defaults().hash);
}

#[test]
fn config_errors_name_the_key() {
    let unknown = LoadedConfig::from_text("[group]\nkind = \"U1\"\nphysical = [\"1/2\"]\n").unwrap().config.model().unwrap_err().to_string();
    assert!(unknown.contains("group.physical"), "{unknown}");
    let cyclic = LoadedConfig::from_text("[group]\nkind = \"Z\"\n").unwrap().config.model().unwrap_err().to_string();
    assert!(cyclic.contains("group.order"), "{cyclic}");
    assert!(LoadedConfig::from_text("[lattice]\nshape = 3\n").is_err());
    let order = LoadedConfig::from_text("[parameters]\norder = \"sideways\"\n").unwrap().config.model().unwrap_err().to_string();
    assert!(order.contains("parameters.order"), "{order}");
}

#[test]
fn explicit_parameters_are_used() {
    let text = r#"
[group]
kind = "SU2"
physical = ["1/2"]
links = ["0", "1/2"]
degeneracy = { "0" = 1, "1/2" = 1 }

[[parameters.alpha]]
physical = "1/2"
inner = ["1/2", "0"]
left = "1/2"
right = "0"
up = "0"
down = "0"
value = [2.0, 0.0]

[[parameters.beta]]
irrep = "1/2"
matrix = [[[1.0, 0.0]]]

[[parameters.beta]]
irrep = "0"
matrix = [[[1.0, 0.0]]]
"#;
    let model = LoadedConfig::from_text(text).unwrap().config.model().unwrap();
    assert!(!pipeline::needs_rng(&model));
    let t = pipeline::site_tensors(&model, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(t.vertex.params().len(), 1);
    // A physical spin-½ paired into a singlet with the left leg: two entries of equal size.
    let amplitudes = t.vertex.amplitudes();
    assert_eq!(amplitudes.nnz(), 2);
    let sizes: Vec<f64> = amplitudes.iter().map(|(_, v)| v.norm()).collect();
    assert!((sizes[0] - sizes[1]).abs() < 1e-14);
}
