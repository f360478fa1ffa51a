use std::fs;

use num_complex::Complex64;
use proptest::prelude::*;

use ssm_core::model::io::{load_manifest, load_system, read_matrix_market, read_tensor, write_first_order, write_mechanical};
use ssm_core::model::{build_first_order, lorenz_extended, oscillator_chain, NChoice, Variant};
use ssm_core::spectrum::all_eigenvalues;
use ssm_core::SsmError;

const F0: [f64; 10] = [-0.386, -0.587, -0.521, -0.243, 0.095, 0.335, 0.402, 0.323, 0.188, 0.075];

fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| (a.im, a.re).partial_cmp(&(b.im, b.re)).unwrap());
    v
}

#[test]
fn chain_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mech = oscillator_chain(10, 1.0, 1.0, 0.1, 0.3).unwrap().with_cosine_forcing(&F0, 0.1);
    let path = write_mechanical(dir.path(), "chain", &mech, Variant::L2, NChoice::MassM).unwrap();
    let original = build_first_order(&mech, Variant::L2, NChoice::MassM).unwrap();
    let loaded = load_system(&path).unwrap();
    assert_eq!(loaded.a.to_dense(), original.a.to_dense());
    assert_eq!(loaded.b.to_dense(), original.b.to_dense());
    assert_eq!(loaded.epsilon, original.epsilon);
    assert_eq!(loaded.forcing, original.forcing);
    let z: Vec<f64> = (0..20).map(|k| (k as f64 * 0.37).sin()).collect();
    assert_eq!(loaded.eval_nonlinearity(&z), original.eval_nonlinearity(&z));
}

#[test]
fn lorenz_manifest_is_four_dimensional() {
    let dir = tempfile::tempdir().unwrap();
    let sys = lorenz_extended(1.0, 1.0).unwrap();
    let path = write_first_order(dir.path(), "lorenz", &sys).unwrap();
    let loaded = load_system(&path).unwrap();
    assert_eq!(loaded.n, 4);
    assert_eq!(loaded.a.to_dense(), sys.a.to_dense());
    let z = [0.3, -0.2, 0.5, 0.1];
    assert_eq!(loaded.eval_nonlinearity(&z), sys.eval_nonlinearity(&z));
}

#[test]
fn tensor_index_zero_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.tns");
    fs::write(&path, "# cubic\n1 1 1 1 0.5\n2 0 1 1 1.0\n").unwrap();
    match read_tensor(&path, 2, 2) {
        Err(SsmError::Parse { line, msg, .. }) => {
            assert_eq!(line, 3);
            assert!(msg.contains("variable index 0"), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn missing_stiffness_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("M.mtx"), "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1.0\n").unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"kind": "mechanical", "dimension": 1, "mass": "M.mtx"}"#).unwrap();
    let err = load_manifest(&path).unwrap_err();
    assert!(matches!(err, SsmError::Validation(ref m) if m.contains("stiffness matrix required")), "{err}");
}

#[test]
fn unknown_manifest_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    fs::write(&path, r#"{"kind": "first_order", "dimension": 1, "a": "A.mtx", "colour": 3}"#).unwrap();
    assert!(matches!(load_manifest(&path), Err(SsmError::Parse { .. })));
}

#[test]
fn symmetric_matrix_market_is_expanded() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("K.mtx");
    fs::write(&path, "%%MatrixMarket matrix coordinate real symmetric\n% comment\n3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 3 1\n").unwrap();
    let k = read_matrix_market(&path).unwrap();
    assert_eq!(k.get(0, 1), -1.0);
    assert_eq!(k.get(1, 0), -1.0);
    assert_eq!(k.nnz(), 5);
}

#[test]
fn bad_matrix_market_entry_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("K.mtx");
    fs::write(&path, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n").unwrap();
    let err = read_matrix_market(&path).unwrap_err();
    assert!(err.to_string().contains("K.mtx:3:"), "{err}");
}

#[test]
fn first_order_forms_share_the_spectrum() {
    let mech = oscillator_chain(4, 1.3, 0.8, 0.05, 0.3).unwrap();
    let reference = sorted(all_eigenvalues(&build_first_order(&mech, Variant::L2, NChoice::MassM).unwrap()).unwrap());
    for (v, n) in [(Variant::L1, NChoice::MinusK), (Variant::L1, NChoice::Identity), (Variant::L2, NChoice::Identity)] {
        let ev = sorted(all_eigenvalues(&build_first_order(&mech, v, n).unwrap()).unwrap());
        for (a, b) in ev.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-12, "{v:?}/{n:?}: {a} vs {b}");
        }
    }
}

#[test]
fn symmetric_flag_follows_the_conversion() {
    let mech = oscillator_chain(3, 1.0, 1.0, 0.1, 0.3).unwrap();
    assert!(build_first_order(&mech, Variant::L1, NChoice::MinusK).unwrap().symmetric);
    assert!(build_first_order(&mech, Variant::L2, NChoice::MassM).unwrap().symmetric);
    assert!(!build_first_order(&mech, Variant::L1, NChoice::Identity).unwrap().symmetric);
}

proptest! {
    #[test]
    fn chain_force_is_odd(x in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let mech = oscillator_chain(6, 1.0, 1.0, 0.1, 0.3).unwrap();
        let plus = mech.eval_force(&x);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let minus = mech.eval_force(&neg);
        for (a, b) in plus.iter().zip(&minus) {
            prop_assert!((a + b).abs() <= 1e-14 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn chain_force_is_a_gradient(x in proptest::collection::vec(-1.0f64..1.0, 5)) {
        // The cubic springs derive from a potential, so the force Jacobian is symmetric.
        let mech = oscillator_chain(5, 1.0, 1.0, 0.0, 0.7).unwrap();
        let h = 1e-6;
        let mut jac = vec![vec![0.0; 5]; 5];
        for j in 0..5 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (mech.eval_force(&xp), mech.eval_force(&xm));
            for i in 0..5 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                prop_assert!((jac[i][j] - jac[j][i]).abs() <= 1e-7);
            }
        }
    }
}
