use std::path::Path;

use flexeig::fem::{mesh_notch_hinge, sweep_thickness, Analysis, NotchHingeParams};
use flexeig::io::*;
use flexeig::{Direction, DofEntry, DofMap, Error, NodeId};
use proptest::prelude::*;

fn p() -> &'static Path {
    Path::new("test.in")
}

#[test]
fn lower_triangle_expands_to_full() {
    let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 4.0\n2 1 -1.5\n2 2 3\n";
    let k = parse_matrix_market(text, p()).unwrap();
    let a = k.as_matrix();
    assert_eq!((a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]), (4.0, -1.5, -1.5, 3.0));
}

#[test]
fn asymmetric_entry_is_named() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 2 4\n1 1 1\n1 2 0.5\n2 1 0.7\n2 2 1\n";
    let err = parse_matrix_market(text, p()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, Error::Parse { line: 4, .. }), "{msg}");
    assert!(msg.contains("(1, 2)") && msg.contains("(2, 1)"), "{msg}");
}

#[test]
fn array_layouts() {
    let sym = "%%MatrixMarket matrix array real symmetric\n2 2\n2\n-1\n5\n";
    let k = parse_matrix_market(sym, p()).unwrap();
    assert_eq!(k.as_matrix()[(0, 1)], -1.0);
    assert_eq!(k.as_matrix()[(1, 1)], 5.0);
    let gen = "%%MatrixMarket matrix array real general\n2 2\n2 -1\n-1 5\n";
    assert_eq!(parse_matrix_market(gen, p()).unwrap(), k);
}

#[test]
fn malformed_matrix_files() {
    let cases = [
        ("", 1),
        ("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 1\n", 1),
        ("%%MatrixMarket matrix coordinate real symmetric\n2 3 1\n1 1 1\n", 2),
        (
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n1 2 1\n",
            4,
        ),
        (
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n3 1 1\n",
            4,
        ),
        (
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n1 1 2\n",
            4,
        ),
        (
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 x\n2 2 1\n",
            3,
        ),
        (
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 1\n2 2 1\n",
            2,
        ),
        ("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n", 2),
    ];
    for (text, line) in cases {
        match parse_matrix_market(text, p()) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
}

#[test]
fn hinge_matrix_round_trip_is_bitwise() {
    let an = Analysis::full_space(
        mesh_notch_hinge(&NotchHingeParams {
            n_notch: 8,
            ..Default::default()
        })
        .unwrap(),
    )
    .unwrap();
    let k = an.stiffness();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("k.mtx");
    write_matrix_market(k, &file).unwrap();
    let back = read_matrix_market(&file).unwrap();
    assert_eq!(back.n(), k.n());
    for (a, b) in back.as_matrix().iter().zip(k.as_matrix().iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

const MINIMAL: &str = r#"{
  "schema_version": 1,
  "nodes": [{"id": 1, "x": 0, "y": 0}, {"id": 2, "x": 10, "y": 0, "z": 0}],
  "elements": [{"n1": 1, "n2": 2, "b": 2, "h": 1}],
  "material": {"E": 200000, "nu": 0.3},
  "clamped_nodes": [1],
  "characteristic_length": 10
}"#;

#[test]
fn minimal_model_parses_and_assembles() {
    let parsed = parse_model(MINIMAL, p(), Strictness::Strict).unwrap();
    assert!(parsed.warnings.is_empty());
    let model = parsed.value.build().unwrap();
    let an = Analysis::new(model).unwrap();
    assert_eq!(an.n(), 6);
}

fn schema_pointer(err: Error) -> String {
    match err {
        Error::Schema { pointer, .. } => pointer,
        other => panic!("expected schema error, got {other}"),
    }
}

#[test]
fn missing_field_names_its_path() {
    let text = MINIMAL.replace(r#""id": 1, "x": 0, "y": 0"#, r#""id": 1, "y": 0"#);
    let err = parse_model(&text, p(), Strictness::Strict).unwrap_err();
    assert!(err.to_string().contains("missing field"));
    assert_eq!(schema_pointer(err), "/nodes/0/x");

    let text = MINIMAL.replace(r#""schema_version": 1,"#, "");
    assert_eq!(
        schema_pointer(parse_model(&text, p(), Strictness::Strict).unwrap_err()),
        "/schema_version"
    );

    let text = MINIMAL.replace(r#""schema_version": 1,"#, r#""schema_version": 2,"#);
    assert_eq!(
        schema_pointer(parse_model(&text, p(), Strictness::Strict).unwrap_err()),
        "/schema_version"
    );

    let text = MINIMAL.replace(r#""b": 2"#, r#""b": "wide""#);
    assert_eq!(
        schema_pointer(parse_model(&text, p(), Strictness::Strict).unwrap_err()),
        "/elements/0/b"
    );
}

#[test]
fn unknown_fields_strict_and_lenient() {
    let text = MINIMAL.replace(r#""nu": 0.3"#, r#""nu": 0.3, "density": 7.8"#);
    let err = parse_model(&text, p(), Strictness::Strict).unwrap_err();
    assert!(err.to_string().contains("unknown field"));
    assert_eq!(schema_pointer(err), "/material/density");
    let parsed = parse_model(&text, p(), Strictness::Lenient).unwrap();
    assert_eq!(parsed.warnings.len(), 1);
    assert!(parsed.warnings[0].contains("/material/density"));
}

#[test]
fn syntax_error_has_line() {
    let err = parse_model("{\n  \"schema_version\": 1,\n  oops\n}", p(), Strictness::Strict).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
}

#[test]
fn generator_documents() {
    let text = r#"{"schema_version": 1, "generator": "notch_hinge", "params": {"thickness": 0.3}}"#;
    let ModelSource::NotchHinge(params) = parse_model(text, p(), Strictness::Strict).unwrap().value else {
        panic!("expected notch hinge");
    };
    assert_eq!(params, NotchHingeParams::default().with_thickness(0.3));

    let text = r#"{"schema_version": 1, "generator": "parallel_guide"}"#;
    let source = parse_model(text, p(), Strictness::Strict).unwrap().value;
    assert!(matches!(source, ModelSource::ParallelGuide(_)));
    assert!(source.build().is_ok());

    let text = r#"{"schema_version": 1, "generator": "notch_hinge", "params": {"radius": 5, "thikness": 1}}"#;
    assert_eq!(
        schema_pointer(parse_model(text, p(), Strictness::Strict).unwrap_err()),
        "/params/thikness"
    );

    let text = r#"{"schema_version": 1, "generator": "cam"}"#;
    assert_eq!(
        schema_pointer(parse_model(text, p(), Strictness::Strict).unwrap_err()),
        "/generator"
    );
}

#[test]
fn model_round_trip() {
    let model = mesh_notch_hinge(&NotchHingeParams::default().with_thickness(0.37)).unwrap();
    let text = model_to_json(&model);
    let ModelSource::Explicit(back) = parse_model(&text, p(), Strictness::Strict).unwrap().value else {
        panic!("expected explicit model");
    };
    assert_eq!(back, model);
    assert_eq!(model_to_json(&back), text);
}

#[test]
fn dofmap_round_trip() {
    let entries = vec![
        DofEntry::new(NodeId(3), Direction::TX),
        DofEntry::new(NodeId(3), Direction::RZ),
        DofEntry::new(NodeId(4), Direction::TY),
    ];
    let map = DofMap::new(entries, [1]).unwrap();
    let text = dofmap_to_json(&map);
    assert_eq!(parse_dofmap(&text, p(), Strictness::Strict).unwrap().value, map);

    let bad = r#"{"schema_version": 1, "dofs": [{"node": 1, "dir": "TX", "kind": "rotation"}]}"#;
    assert_eq!(
        schema_pointer(parse_dofmap(bad, p(), Strictness::Strict).unwrap_err()),
        "/dofs"
    );
    let bad = r#"{"schema_version": 1, "dofs": [{"node": 1, "dir": "TW", "kind": "translation"}]}"#;
    assert_eq!(
        schema_pointer(parse_dofmap(bad, p(), Strictness::Strict).unwrap_err()),
        "/dofs/0/dir"
    );
}

#[test]
fn reference_round_trip() {
    let r = ReferenceFile {
        vectors: vec![vec![0.1, 1.0 / 3.0, -2e-300], vec![1.0, 0.0, 0.0]],
        description: Some("two vectors".into()),
    };
    let text = reference_to_json(&r);
    assert_eq!(parse_reference(&text, p(), Strictness::Strict).unwrap().value, r);
    let empty = r#"{"schema_version": 1, "vectors": []}"#;
    assert_eq!(
        schema_pointer(parse_reference(empty, p(), Strictness::Strict).unwrap_err()),
        "/vectors"
    );
}

#[test]
fn sweep_csv_has_header_plus_rows() {
    let rows = sweep_thickness(&NotchHingeParams::default(), &[0.2, 0.4, 0.6, 0.8, 1.0]);
    let csv = sweep_csv(&SweepTable::from_rows(&rows));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "l_mm,lambda1,lambda2,selectivity");
    for (line, row) in lines[1..].iter().zip(&rows) {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let v = row.result.as_ref().unwrap();
        assert_eq!(cells, vec![row.l, v.lambda1, v.lambda2, v.selectivity]);
    }
}

#[test]
fn failed_sweep_row_keeps_its_line() {
    let rows = sweep_thickness(&NotchHingeParams::default(), &[0.5, -0.5]);
    let table = SweepTable::from_rows(&rows);
    assert!(table.rows[1].error.is_some());
    let csv = sweep_csv(&table);
    assert_eq!(csv.lines().nth(2).unwrap(), "-5.0000000000000000e-1,,,");
}

#[test]
fn report_carries_run_info() {
    let report = Report {
        info: RunInfo {
            tool_version: "0.1.0".into(),
            input_digest: "ab".into(),
            seed: Some(7),
        },
        body: SweepTable { rows: vec![] },
    };
    let v: serde_json::Value = serde_json::from_str(&to_json_string(&report)).unwrap();
    assert_eq!(v["tool_version"], "0.1.0");
    assert_eq!(v["seed"], 7);
    assert!(v["rows"].is_array());
}

proptest! {
    #[test]
    fn floats_survive_json(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
        let text = to_json_string(&vec![v]);
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back[0].to_bits(), v.to_bits());
        prop_assert_eq!(format_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
