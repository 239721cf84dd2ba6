//! Built-in problems checked against independent reference computations.

mod common;

use common::{c, matched_distance, C};
use pevp::problems::{
    cubic_companion, cubic_residual, cubic_roots, delayed_heat, delayed_heat_mode_roots,
    load_split_form, toy_bifurcation, ToyBifurcation,
};
use pevp::{solve_nonparametric, BeynConfig, Contour, ParametricProblem};
use std::io::Write;

#[test]
fn toy_spectrum_is_sqrt_p() {
    let problem: ToyBifurcation<f64> = toy_bifurcation::<C>();
    let contour = Contour::new(c(0.0, 0.0), 3.0).unwrap();
    let config = BeynConfig {
        probe_columns: 2,
        quadrature_nodes: 64,
        ..BeynConfig::default()
    };
    for k in 0..10 {
        let p = 0.1 + 0.9 * k as f64 / 9.0;
        let snap = solve_nonparametric(&problem, p, &contour, &config).unwrap();
        let sqrt_p = p.sqrt();
        let err =
            matched_distance(snap.eigenvalues(), &[c(-sqrt_p, 0.0), c(sqrt_p, 0.0)]).unwrap();
        assert!(err < 1e-10, "p = {p}: {err:e}");
    }
}

#[test]
fn cubic_companion_matches_explicit_roots() {
    let problem = cubic_companion();
    let contour = Contour::new(c(0.0, 0.0), 4.0).unwrap();
    let config = BeynConfig {
        moment_blocks: 1,
        probe_columns: 5,
        quadrature_nodes: 64,
        ..BeynConfig::default()
    };
    // pseudo-random parameter values across the range
    let ps: Vec<f64> = (0..20)
        .map(|k| -50.0 + 100.0 * ((k as f64 * 0.618_033_988_749_894_8) % 1.0))
        .collect();
    for &p in &ps {
        let snap = solve_nonparametric(&problem, p, &contour, &config).unwrap();
        let oracle: Vec<C> = cubic_roots::<C>(p)
            .into_iter()
            .filter(|r| contour.contains(*r, 0.0))
            .collect();
        for root in &oracle {
            assert!(cubic_residual(*root, p) < 1e-10);
        }
        // skip the comparison when a root sits within quadrature noise of
        // the contour (counts may legitimately differ there)
        let near_boundary = cubic_roots::<C>(p)
            .iter()
            .any(|r| (r.norm() - 4.0).abs() < 1e-3);
        if near_boundary {
            continue;
        }
        let err = matched_distance(snap.eigenvalues(), &oracle)
            .unwrap_or_else(|| panic!("count mismatch at p = {p}: {:?} vs {oracle:?}", snap.eigenvalues()));
        assert!(err < 1e-8, "p = {p}: {err:e}");
    }
}

#[test]
fn delayed_heat_matches_mode_oracle() {
    // desk-scale variant: coarse space grid, fewer quadrature nodes
    let problem = delayed_heat::<C>(60);
    let contour = Contour::new(c(-1.0, 0.0), 1.0).unwrap();
    let config = BeynConfig {
        moment_blocks: 2,
        probe_columns: 12,
        quadrature_nodes: 400,
        ..BeynConfig::default()
    };
    for &p in &[-0.08, -0.03, 0.02, 0.07] {
        let snap = solve_nonparametric(&problem, p, &contour, &config).unwrap();
        let oracle = delayed_heat_mode_roots(&problem, &contour, p);
        assert!(!oracle.is_empty(), "oracle found no roots at p = {p}");
        // compare only away from the boundary where both sides agree on
        // membership
        let inside_margin =
            |vals: &[C]| -> Vec<C> {
                vals.iter()
                    .copied()
                    .filter(|l| contour.contains(*l, 0.02))
                    .collect()
            };
        let got = inside_margin(snap.eigenvalues());
        let want = inside_margin(&oracle);
        let err = matched_distance(&got, &want)
            .unwrap_or_else(|| panic!("count mismatch at p = {p}: {got:?} vs {want:?}"));
        assert!(err < 1e-8, "p = {p}: {err:e}");
    }
}

#[test]
fn split_form_reproduces_toy_problem() {
    // lambda * A1 + p * A2 + A3 assembles [[lambda, p], [1, lambda]]
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        let path = dir.path().join(name);
        std::fs::File::create(&path)
            .unwrap()
            .write_all(content.as_bytes())
            .unwrap();
        path
    };
    write(
        "a1.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n",
    );
    write(
        "a2.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 1.0\n",
    );
    write(
        "a3.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n2 1 1.0\n",
    );
    let manifest = write(
        "toy.manifest",
        "# split form of the 2x2 toy problem\n\
         range -1 1\n\
         lambda ; a1.mtx\n\
         p ; a2.mtx\n\
         1 ; a3.mtx\n",
    );
    let split = load_split_form::<C>(&manifest).unwrap();
    assert_eq!(split.term_count(), 3);
    assert_eq!(ParametricProblem::<C>::param_range(&split), (-1.0, 1.0));

    let toy: ToyBifurcation<f64> = toy_bifurcation::<C>();
    let contour = Contour::new(c(0.0, 0.0), 3.0).unwrap();
    let config = BeynConfig {
        probe_columns: 2,
        quadrature_nodes: 64,
        ..BeynConfig::default()
    };
    for k in 0..5 {
        let p = -0.9 + 1.8 * ((k as f64 * 0.618_033_988_749_894_8) % 1.0);
        let a = solve_nonparametric(&split, p, &contour, &config).unwrap();
        let b = solve_nonparametric(&toy, p, &contour, &config).unwrap();
        let err = matched_distance(a.eigenvalues(), b.eigenvalues())
            .unwrap_or_else(|| panic!("count mismatch at p = {p}"));
        assert!(err < 1e-9, "p = {p}: {err:e}");
    }
}

#[test]
fn gun_style_manifest_loads_and_assembles() {
    // same term structure as the radio-frequency gun problem, with small
    // stand-in matrices; alpha^2 = 108.8774^2
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        std::fs::File::create(dir.path().join(name))
            .unwrap()
            .write_all(content.as_bytes())
            .unwrap();
    };
    for (name, diag) in [("a0.mtx", 1.0), ("a1.mtx", 2.0), ("a2.mtx", 3.0), ("a3.mtx", 4.0)] {
        write(
            name,
            &format!(
                "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 {diag}\n2 2 {diag}\n"
            ),
        );
    }
    write(
        "gun.manifest",
        "range 1 1.4\n\
         1 ; a0.mtx\n\
         p^2 * lambda ; a1.mtx\n\
         i * p * sqrt(lambda) ; a2.mtx\n\
         i * p * sqrt(lambda - 11854.28787076) ; a3.mtx\n",
    );
    let split = load_split_form::<C>(&dir.path().join("gun.manifest")).unwrap();
    assert_eq!(split.term_count(), 4);

    let alpha_sq = 11854.28787076;
    let lambda = c(3.0e4, 2.0e3);
    let p = 1.2;
    let matrix = ParametricProblem::<C>::eval(&split, lambda, p);
    let expect = c(1.0, 0.0)
        + p * p * lambda * 2.0
        + c(0.0, 1.0) * p * lambda.sqrt() * 3.0
        + c(0.0, 1.0) * p * (lambda - alpha_sq).sqrt() * 4.0;
    assert!((matrix[(0, 0)] - expect).norm() < 1e-9 * expect.norm());
    assert_eq!(matrix[(0, 1)], c(0.0, 0.0));
}

#[test]
fn split_form_load_errors_are_descriptive() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, content: &str| {
        std::fs::File::create(dir.path().join(name))
            .unwrap()
            .write_all(content.as_bytes())
            .unwrap();
    };
    write(
        "a.mtx",
        "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n",
    );
    write(
        "b.mtx",
        "%%MatrixMarket matrix coordinate real general\n3 3 1\n1 1 1.0\n",
    );

    // size mismatch
    write("bad_size.manifest", "lambda ; a.mtx\n1 ; b.mtx\n");
    let err = load_split_form::<C>(&dir.path().join("bad_size.manifest")).unwrap_err();
    assert!(err.to_string().contains("expected square of size 2"), "{err}");

    // unknown scalar term
    write("bad_expr.manifest", "frob(lambda) ; a.mtx\n");
    let err = load_split_form::<C>(&dir.path().join("bad_expr.manifest")).unwrap_err();
    assert!(err.to_string().contains("bad scalar expression"), "{err}");

    // missing file
    write("bad_path.manifest", "lambda ; nope.mtx\n");
    let err = load_split_form::<C>(&dir.path().join("bad_path.manifest")).unwrap_err();
    assert!(err.to_string().contains("cannot read"), "{err}");
}
