use std::path::PathBuf;

use qgspec::graph::library;
use qgspec::{parse_graph, Error, QuantumGraph};

fn shipped(name: &str) -> QuantumGraph {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../graphs").join(name);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_graph(&text).unwrap()
}

#[test]
fn shipped_files_match_library() {
    assert_eq!(shipped("star2.qg"), library::regular_star());
    assert_eq!(shipped("k4.qg"), library::standard_quadrangle());
    assert_eq!(shipped("single_bond.qg"), library::single_bond(1.0));
}

#[test]
fn text_round_trip() {
    for g in [library::regular_star(), library::standard_quadrangle(), library::single_bond(0.3)] {
        assert_eq!(parse_graph(&g.to_text()).unwrap(), g);
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let missing_version = "vertex a\n";
    assert!(matches!(parse_graph(missing_version), Err(Error::Parse { line: 1, .. })));
    let bad_length = "version 1\nvertex a\nvertex b\nbond x a b -1\n";
    assert!(parse_graph(bad_length).is_err());
    let bad_number = "version 1\nvertex a\n\n# comment\nbond x a c 1.o\n";
    assert!(matches!(parse_graph(bad_number), Err(Error::Parse { line: 5, .. })));
    let stray = "version 1\nbond x a b 1.0\nscattering q neumann\n";
    assert!(matches!(parse_graph(stray), Err(Error::Parse { line: 3, .. })));
    let junk = "version 1\nvertex a\nfrobnicate\n";
    assert!(matches!(parse_graph(junk), Err(Error::Parse { line: 3, .. })));
}

#[test]
fn rejects_non_unitary_and_disconnected() {
    let non_unitary = "version 1\nvertex c\nvertex e1\nvertex e2\nbond b1 c e1 1.0\nbond b2 c e2 1.5\n\
                       scattering c matrix 0.9 0 0.9 0 0.9 0 -0.9 0\n";
    assert!(matches!(parse_graph(non_unitary), Err(Error::Parse { line: 7, .. })));
    let split = "version 1\nvertex a\nvertex b\nvertex c\nvertex d\nbond x a b 1.0\nbond y c d 1.0\n";
    assert!(matches!(parse_graph(split), Err(Error::Parse { .. })));
}

#[test]
fn mean_spacing_is_pi_over_total_length() {
    let g = library::standard_quadrangle();
    let l0: f64 = library::quadrangle_lengths().iter().sum();
    assert!((g.total_length() - l0).abs() < 1e-14);
    assert!((g.mean_spacing() - std::f64::consts::PI / l0).abs() < 1e-15);
    assert!((g.omegas().iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn vertex_lines_are_optional() {
    let g = parse_graph("version 1\nbond b1 v1 v2 1.0\n").unwrap();
    assert_eq!(g, library::single_bond(1.0));
}

#[test]
fn classical_transition_matrix_is_stochastic() {
    for g in [library::regular_star(), library::standard_quadrangle()] {
        let t = qgspec::transition_matrix(&g);
        for col in 0..t.dim() {
            let p: f64 = t.column(col).iter().map(|(_, s, _)| s.norm_sqr()).sum();
            assert!((p - 1.0).abs() < 1e-12, "column {col}: {p}");
        }
    }
}
