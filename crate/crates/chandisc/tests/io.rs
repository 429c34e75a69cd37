use chandisc::channels::named_gate;
use chandisc::io::*;
use chandisc::sweep::haar_ensemble;

#[test]
fn names_document() {
    let e = parse_ensemble(r#"{"names": ["I", "sqrtX", "sqrtY", "sqrtZ"]}"#, None).unwrap();
    assert_eq!(e.len(), 4);
    assert_eq!(e.probs(), &[0.25; 4]);
    assert_eq!(e.gates()[1], named_gate("sqrtX").unwrap());
    assert_eq!(e.names().unwrap()[3], "sqrtZ");
}

#[test]
fn explicit_unitaries_with_fractions() {
    let text = r#"{
        "dim": 2,
        "probs": [{"num": 1, "den": 3}, {"num": 2, "den": 3}],
        "unitaries": [
            [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
            [[[{"num": 3, "den": 5}, 0], [{"num": -4, "den": 5}, 0]], [[{"num": 4, "den": 5}, 0], [{"num": 3, "den": 5}, 0]]]
        ]
    }"#;
    let e = parse_ensemble(text, None).unwrap();
    assert!((e.probs()[0] - 1.0 / 3.0).abs() < 1e-16);
    assert!((e.gates()[1].matrix()[(1, 0)].re - 0.8).abs() < 1e-16);
    assert!(e.names().is_none());
}

#[test]
fn probability_overrides() {
    let text = r#"{"names": ["I", "X", "Y", "Z", "H", "XH", "YH", "ZH"], "probs": "pi-digits"}"#;
    let e = parse_ensemble(text, None).unwrap();
    assert!((e.probs()[5] - 9.0 / 31.0).abs() < 1e-15);
    let u = parse_ensemble(text, Some(&ProbSpec::Uniform)).unwrap();
    assert_eq!(u.probs(), &[0.125; 8]);
    assert_eq!(pi_digit_probs(3).unwrap(), vec![3.0 / 8.0, 1.0 / 8.0, 4.0 / 8.0]);
    assert!(pi_digit_probs(0).is_err());
    assert_eq!(ProbSpec::parse_arg("uniform").unwrap(), ProbSpec::Uniform);
    assert!(ProbSpec::parse_arg("/nonexistent/probs.json").is_err());
    assert!(ProbSpec::Explicit(vec![0.5, 0.5]).resolve(3).is_err());
}

#[test]
fn malformed_documents() {
    let cases = [
        "not json",
        r#"{"probs": [1]}"#,
        r#"{"names": ["I", "Q"]}"#,
        r#"{"names": ["I", "X"], "probs": [0.5, 0.6]}"#,
        r#"{"names": ["I", "X"], "probs": "thirds"}"#,
        r#"{"names": ["I"], "dim": 3}"#,
        r#"{"unitaries": [[[[1, 0], [1, 0]], [[0, 0], [1, 0]]]]}"#,
        r#"{"unitaries": [[[[1, 0]], [[0, 0], [1, 0]]]]}"#,
        r#"{"unitaries": [], "names": []}"#,
        r#"{"names": ["I", "X"], "unitaries": [[[[1, 0]]]]}"#,
        r#"{"names": ["I", "X"], "probs": [{"num": 1, "den": 0}, 1]}"#,
    ];
    for text in cases {
        assert!(parse_ensemble(text, None).is_err(), "{text}");
    }
    assert!(matches!(parse_ensemble("{", None), Err(InputError::Json(_))));
    assert!(matches!(read_ensemble(std::path::Path::new("/nonexistent.json"), None), Err(InputError::Io { .. })));
}

#[test]
fn roundtrip_is_bit_exact() {
    let names = parse_ensemble(r#"{"names": ["I", "H", "sqrtHy"], "probs": [0.5, 0.25, 0.25]}"#, None).unwrap();
    for e in [names, haar_ensemble(3, 4, 9)] {
        let doc = ensemble_to_json(&e);
        let back = parse_ensemble(&doc.to_string(), None).unwrap();
        assert_eq!(back.probs(), e.probs());
        assert_eq!(back.gates(), e.gates());
        assert_eq!(back.names(), e.names());
    }
    let doc = ensemble_to_json(&parse_ensemble(r#"{"names": ["I", "X"]}"#, None).unwrap());
    assert_eq!(doc["probs"][0], serde_json::json!({"num": 1, "den": 2}));
}
