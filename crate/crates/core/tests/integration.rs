use std::path::Path;

use num_complex::Complex64;
use proptest::prelude::*;

use nhdfem::driver::{manufactured_errors, solve_manufactured, ProblemKind, RunConfig};
use nhdfem::linsolve::SolverMethod;
use nhdfem::mesh::{generate_box_mesh, refine_uniform, BoxBounds};
use nhdfem::model::{drude_permittivity, nonlocal_permittivity, PhysicalParams};

fn shipped() -> Vec<(String, RunConfig)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut out: Vec<(String, RunConfig)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| (p.display().to_string(), RunConfig::load(&p).unwrap()))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn shipped_configs_round_trip() {
    let all = shipped();
    assert!(all.len() >= 6);
    for (name, cfg) in all {
        let text = cfg.to_toml_string().unwrap();
        let again = RunConfig::from_toml_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(again, cfg, "{name}");
        assert_eq!(again.to_toml_string().unwrap(), text, "{name}");
    }
}

#[test]
fn control_config_differs_only_in_plasma_frequency() {
    let all = shipped();
    let find = |s: &str| all.iter().find(|(n, _)| n.ends_with(s)).unwrap().1.clone();
    let metal = find("/scatter.toml");
    let control = find("/scatter_control.toml");
    assert_eq!(metal.problem.kind, ProblemKind::Scattering);
    assert_eq!(control.physics.omega_p, 0.0);
    assert_eq!(
        control.scattering.as_ref().unwrap().reference_omega_p,
        Some(metal.physics.omega_p)
    );
    assert_eq!(control.mesh, metal.mesh);
    assert_eq!(
        control.scattering.as_ref().unwrap().omega_over_omega_p,
        metal.scattering.as_ref().unwrap().omega_over_omega_p
    );
}

#[test]
fn direct_and_gmres_agree() {
    let direct = solve_manufactured(4, 1, &SolverMethod::DirectLu).unwrap();
    let gmres = SolverMethod::Gmres {
        restart: 50,
        max_iter: 5000,
        tol: 1e-10,
        ilu0: true,
    };
    let iterative = solve_manufactured(4, 1, &gmres).unwrap();
    assert!(iterative.report.relative_residual <= 1e-10);
    let diff: f64 = direct
        .solution
        .iter()
        .zip(&iterative.solution)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale: f64 = direct.solution.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    assert!(diff / scale < 1e-8, "relative difference {:e}", diff / scale);
    let (ed, jd) = manufactured_errors(&direct).unwrap();
    let (eg, jg) = manufactured_errors(&iterative).unwrap();
    assert!((ed.combined - eg.combined).abs() < 1e-8 * ed.combined);
    assert!((jd.combined - jg.combined).abs() < 1e-8 * jd.combined);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn refinement_keeps_volume_and_topology(nx in 1usize..3, ny in 1usize..3, nz in 1usize..3, s in 0.5f64..3.0) {
        let bounds = BoxBounds { lo: [0.0, -1.0, 2.0], hi: [s, -1.0 + 2.0 * s, 2.0 + 0.5 * s] };
        let m = generate_box_mesh([nx, ny, nz], bounds).unwrap();
        let f = refine_uniform(&m).unwrap();
        prop_assert_eq!(f.n_cells(), 8 * m.n_cells());
        prop_assert_eq!(f.euler_characteristic(), 1);
        prop_assert!((f.total_volume() - m.total_volume()).abs() < 1e-12 * m.total_volume());
        prop_assert_eq!(f.boundary_faces().count(), 4 * m.boundary_faces().count());
    }

    #[test]
    fn long_wavelength_limit_is_drude(
        omega in 0.05f64..3.0, omega_p in 0.0f64..3.0, gamma in 0.0f64..1.0, beta in 0.0f64..2.0,
    ) {
        let p = PhysicalParams { omega, omega_p, gamma, beta, ..PhysicalParams::unit() };
        let d = drude_permittivity(&p).unwrap();
        prop_assert!((nonlocal_permittivity(&p, 0.0).unwrap() - d).norm() <= 1e-14 * d.norm().max(1.0));
    }

    #[test]
    fn losses_give_positive_imaginary_part(
        omega in 0.05f64..3.0, omega_p in 0.1f64..3.0, gamma in 0.01f64..1.0, beta in 0.0f64..2.0, k in 0.0f64..3.0,
    ) {
        let p = PhysicalParams { omega, omega_p, gamma, beta, ..PhysicalParams::unit() };
        let e: Complex64 = nonlocal_permittivity(&p, k).unwrap();
        prop_assert!(e.im > 0.0);
    }
}
