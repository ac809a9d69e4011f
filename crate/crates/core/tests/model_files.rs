mod common;

use common::{fixture, load};
use gmrobust::fixtures;
use gmrobust::model_io::{load_model, load_tensor, read_model, save_model, save_tensor};
use gmrobust::{Error, Network, Tensor};

fn same_weights(a: &Network, b: &Network) -> bool {
    a.role() == b.role() && a.layers() == b.layers()
}

#[test]
fn checked_in_files_match_constructors() {
    let cases = [
        ("identity_generator_1d.nnw", fixtures::identity_generator(1)),
        ("identity_generator_2d.nnw", fixtures::identity_generator(2)),
        ("threshold_classifier.nnw", fixtures::threshold_classifier()),
        ("linear_boundary_classifier.nnw", fixtures::linear_boundary_classifier()),
        ("constant_classifier.nnw", fixtures::constant_classifier(2, 3, 1)),
        ("tiny_classifier.nnw", fixtures::tiny_classifier()),
    ];
    for (name, expected) in cases {
        assert!(same_weights(&load(name), &expected), "{name}");
    }
    for (i, (g, c)) in fixtures::planar_pairs().iter().enumerate() {
        let tag = (b'a' + i as u8) as char;
        assert_eq!(&load(&format!("planar_{tag}_generator.nnw")), g);
        assert_eq!(&load(&format!("planar_{tag}_classifier.nnw")), c);
    }
}

#[test]
fn save_load_is_a_normal_form() {
    let names = std::fs::read_dir(fixture(""))
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "nnw"))
        .collect::<Vec<_>>();
    assert!(names.len() >= 13);
    for path in names {
        let net = read_model(&path).unwrap();
        let text = save_model(&net).unwrap();
        let again = load_model(text.as_bytes()).unwrap();
        assert_eq!(again, net, "{}", path.display());
        assert_eq!(save_model(&again).unwrap(), text);
    }
}

#[test]
fn tiny_classifier_behaves_as_documented() {
    let c = load("tiny_classifier.nnw");
    let cat = |a: f64, b: f64| c.classify(&Tensor::vector(vec![a, b]).unwrap()).unwrap().category;
    assert_eq!(cat(2.0, 1.0), 0);
    assert_eq!(cat(1.0, 2.0), 1);
    assert_eq!(cat(-1.0, -1.0), 2);
    assert_eq!(cat(0.0, 0.0), 2);
}

enum Expect {
    Parse,
    Version(i64),
    Invariant(Option<usize>, &'static str),
}

#[test]
fn malformed_corpus_is_rejected_with_named_errors() {
    use Expect::*;
    let cases = [
        ("bad_version.nnw", Version(2)),
        ("missing_version.nnw", Parse),
        ("syntax_error.nnw", Parse),
        ("unknown_field.nnw", Parse),
        ("no_layers.nnw", Invariant(None, "no layers")),
        ("weights_length.nnw", Invariant(Some(0), "weights has 3 entries")),
        ("bias_length.nnw", Invariant(Some(1), "bias has 1 entries")),
        ("chain_mismatch.nnw", Invariant(Some(1), "does not chain with rows of layer 0")),
        ("input_dim_mismatch.nnw", Invariant(Some(0), "does not chain with input_dim")),
        ("output_dim_mismatch.nnw", Invariant(None, "output_dim = 5")),
        ("nonfinite_weight.nnw", Invariant(Some(0), "weights[1] is not finite")),
        ("nonfinite_bias.nnw", Invariant(Some(1), "bias[1] is not finite")),
        ("unknown_activation.nnw", Invariant(Some(0), "softmax")),
        ("composed_role.nnw", Invariant(None, "composed")),
        ("unknown_role.nnw", Invariant(None, "discriminator")),
        ("zero_dim.nnw", Invariant(None, "input_dim must be a positive integer")),
        ("negative_rows.nnw", Invariant(Some(0), "rows must be a positive integer")),
    ];
    let on_disk = std::fs::read_dir(fixture("malformed")).unwrap().count();
    assert_eq!(on_disk, cases.len(), "every malformed file has a case");
    for (name, expect) in cases {
        let bytes = std::fs::read(fixture("malformed").join(name)).unwrap();
        let err = load_model(&bytes).expect_err(name);
        match (&err, expect) {
            (Error::Parse(_), Parse) => {}
            (Error::Version { found }, Version(v)) => assert_eq!(*found, v, "{name}"),
            (Error::Invariant { layer, message }, Invariant(l, needle)) => {
                assert_eq!(*layer, l, "{name}: {err}");
                assert!(message.contains(needle), "{name}: {message}");
            }
            _ => panic!("{name}: unexpected error {err:?}"),
        }
        let via_path = read_model(fixture("malformed").join(name)).unwrap_err().to_string();
        assert!(via_path.contains(name), "{via_path}");
    }
}

#[test]
fn non_utf8_is_a_parse_error() {
    assert!(matches!(load_model(&[0xff, 0xfe, 0x00]), Err(Error::Parse(_))));
}

#[test]
fn composed_networks_are_not_saved() {
    assert!(matches!(save_model(&fixtures::threshold_model()), Err(Error::Role(_))));
}

#[test]
fn tensor_round_trip_is_bit_exact() {
    let t = Tensor::new(vec![2, 3], vec![0.1, -1e-300, 3.0, f64::MAX, -0.0, 1.0 / 3.0]).unwrap();
    let back = load_tensor(save_tensor(&t).as_bytes()).unwrap();
    assert_eq!(back.shape(), t.shape());
    for (a, b) in back.data().iter().zip(t.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
