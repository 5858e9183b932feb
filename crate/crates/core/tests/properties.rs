//! Property tests over randomized networks, operating points and solver
//! instances.

use gridflex::acpf::{ac_residual, solve_ac, solve_distflow, total_losses};
use gridflex::aggregation::{even_directions, project_support};
use gridflex::linear_models::{build_model, BasePoint, ModelKind, ModelOptions, StorageSplit, X_CHARGE};
use gridflex::network::{build_ybus, check_radial, generate_campus_like, DayProfile, Network, NetworkFile};
use gridflex::scheduling::{schedule_full_linear, ScheduleProblem, StackedModel};
use gridflex::solver::{solve_lp, solve_qp, Matrix, QpProblem};
use gridflex::verification::verify_schedule;
use proptest::prelude::*;

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Storage units share the charge pro rata, so fixing it pins every column.
fn pinned() -> ModelOptions {
    ModelOptions {
        split: StorageSplit::Proportional,
        ..ModelOptions::default()
    }
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn admittance_symmetric_with_zero_row_sums(seed in 0u64..1000) {
        let net = generate_campus_like(seed);
        let y = build_ybus(&net);
        let n = net.num_buses();
        for i in 0..n {
            let mut sum = num_complex::Complex64::new(0.0, 0.0);
            for j in 0..n {
                prop_assert_eq!(y.get(i, j), y.get(j, i));
                sum += y.get(i, j);
            }
            prop_assert!(sum.norm() < 1e-12);
        }
    }

    #[test]
    fn generator_is_radial_and_connected(seed in any::<u64>()) {
        let net = generate_campus_like(seed);
        prop_assert_eq!(net.num_buses(), 40);
        prop_assert_eq!(net.num_branches(), 39);
        prop_assert!(check_radial(&net));
        let buses: Vec<usize> = net.storage.iter().map(|s| s.bus).collect();
        prop_assert_eq!(buses, vec![13, 26, 39]);
    }

    #[test]
    fn per_unit_round_trip(seed in 0u64..1000) {
        let file = generate_campus_like(seed).to_file();
        let back = NetworkFile::from_json(&file.to_json().unwrap())
            .unwrap()
            .into_network()
            .unwrap()
            .to_file();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        for (a, b) in file.buses.iter().zip(&back.buses) {
            prop_assert!(rel(a.p_load, b.p_load) && rel(a.q_load, b.q_load));
        }
        for (a, b) in file.storage.iter().zip(&back.storage) {
            prop_assert!(rel(a.p_max, b.p_max) && rel(a.e_cap, b.e_cap));
        }
        for (a, b) in file.branches.iter().zip(&back.branches) {
            prop_assert!(rel(a.r, b.r) && rel(a.x, b.x));
        }
    }

    #[test]
    fn ac_solutions_meet_contract(seed in 0u64..200, load in 0.3f64..1.2, pv in 0.0f64..1.0) {
        let net = generate_campus_like(seed);
        let st = solve_ac(&net, &net.injections(load, pv)).unwrap();
        prop_assert!(max_abs(&ac_residual(&st, &net)) <= 1e-8);
        let losses = total_losses(&st, &net);
        prop_assert!(losses >= -1e-10);
        let balance: f64 = st.p.iter().sum();
        prop_assert!((balance - losses).abs() <= 1e-8);
    }

    #[test]
    fn distflow_matches_polar_on_radial(seed in 0u64..200, load in 0.3f64..1.2, pv in 0.0f64..1.0) {
        let net = generate_campus_like(seed);
        let inj = net.injections(load, pv);
        let ac = solve_ac(&net, &inj).unwrap();
        let df = solve_distflow(&net, &inj).unwrap();
        let gap = df.u.iter().zip(&ac.v).map(|(u, v)| (u - v * v).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-6, "gap {}", gap);
    }

    #[test]
    fn lossless_models_telescope(seed in 0u64..200, load in 0.3f64..1.2, charge in -0.05f64..0.05) {
        let net = generate_campus_like(seed);
        let inj = net.injections(load, 0.5);
        for kind in [ModelKind::Dc, ModelKind::LinDistFlow] {
            let m = build_model(kind, &net, None, &inj, pinned()).unwrap();
            let pt = m.complete(&[(X_CHARGE, charge)]).unwrap();
            prop_assert!(max_abs(&m.residual(&pt)) <= 1e-10);
            prop_assert!(m.injection_sum(&pt).abs() <= 1e-10);
        }
    }

    #[test]
    fn lindistflow_voltage_above_distflow_for_loads(seed in 0u64..200, load in 0.2f64..1.2) {
        let net = generate_campus_like(seed);
        let inj = net.injections(load, 0.0);
        let lin = build_model(ModelKind::LinDistFlow, &net, None, &inj, pinned()).unwrap();
        let pt = lin.complete(&[(X_CHARGE, 0.0)]).unwrap();
        let df = solve_distflow(&net, &inj).unwrap();
        for i in 0..net.num_buses() {
            let u_lin = pt[lin.column(&format!("u[{i}]")).unwrap()];
            prop_assert!(u_lin >= df.u[i] - 1e-12, "bus {}: {} < {}", i, u_lin, df.u[i]);
        }
    }

    #[test]
    fn linearized_models_exact_at_base(seed in 0u64..200, load in 0.3f64..1.2, pv in 0.0f64..1.0) {
        let net = generate_campus_like(seed);
        let inj = net.injections(load, pv);
        let base = BasePoint::solve(&net, &inj, "b").unwrap();
        let st = &base.state;
        for kind in [ModelKind::DcEnhanced, ModelKind::LinAc] {
            let m = build_model(kind, &net, Some(&base), &inj, pinned()).unwrap();
            let pt = m.complete(&[(X_CHARGE, 0.0)]).unwrap();
            let at = |name: String| pt[m.column(&name).unwrap()];
            for i in 0..net.num_buses() {
                let (p, q) = (at(format!("p[{i}]")), at(format!("q[{i}]")));
                prop_assert!((p - st.p[i]).abs() <= 1e-8 && (q - st.q[i]).abs() <= 1e-8);
            }
            for k in 0..net.num_branches() {
                let (p, q) = (at(format!("P[{k}]")), at(format!("Q[{k}]")));
                prop_assert!((p - st.branch_p[k]).abs() <= 1e-8 && (q - st.branch_q[k]).abs() <= 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn lp_duality_gap_closes(
        cost in prop::collection::vec(-1.0f64..1.0, 5),
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 2),
        x0 in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let mut lp = gridflex::solver::LpProblem::new(cost).with_bounds(vec![0.0; 5], vec![1.0; 5]);
        for r in &rows {
            let rhs: f64 = r.iter().zip(&x0).map(|(a, b)| a * b).sum();
            lp.add_equality(r, rhs);
        }
        let sol = solve_lp(&lp).unwrap().optimal().unwrap();
        prop_assert!((sol.objective - sol.dual_objective(&lp)).abs() <= 1e-7);
    }

    #[test]
    fn qp_projected_gradient_fixed_point(
        diag in prop::collection::vec(0.0f64..2.0, 4),
        lin in prop::collection::vec(-2.0f64..2.0, 4),
        row in prop::collection::vec(-1.0f64..1.0, 4),
        x0 in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let mut h = Matrix::zeros(4, 4);
        for (i, d) in diag.iter().enumerate() {
            h[(i, i)] = *d;
        }
        let mut qp = QpProblem::new(h, lin).with_bounds(vec![-1.0; 4], vec![1.0; 4]);
        let rhs: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
        qp.add_equality(&row, rhs);
        let first = solve_qp(&qp).unwrap().optimal().unwrap();
        let again = solve_qp(&qp).unwrap().optimal().unwrap();
        prop_assert_eq!(&first.x, &again.x);
        let g = qp.gradient(&first.x);
        let step: Vec<f64> = (0..4)
            .map(|i| {
                let y = first.x[i] - g[i] - row[i] * first.eq_multipliers[0];
                y.clamp(-1.0, 1.0)
            })
            .collect();
        let fp = first.x.iter().zip(&step).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(fp <= 1e-6, "fixed point residual {}", fp);
        prop_assert!(qp.max_violation(&first.x) <= 1e-9);
    }

    #[test]
    fn more_directions_never_enlarge_the_envelope(load in 0.3f64..1.2, extra in 1usize..12) {
        let net = Network::ieee33();
        let m = build_model(ModelKind::LinDistFlow, &net, None, &net.injections(load, 0.5), ModelOptions::default()).unwrap();
        let coarse = even_directions(8);
        let mut fine = coarse.clone();
        fine.extend(even_directions(8 + extra));
        let a = project_support(&m, &coarse).unwrap();
        let b = project_support(&m, &fine).unwrap();
        for d in &coarse {
            let sa = a.support(d).unwrap().unwrap();
            let sb = b.support(d).unwrap().unwrap();
            prop_assert!(sb <= sa + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(config(8))]

    #[test]
    fn schedules_respect_dynamics_and_endpoints(alpha in 0.1f64..2.0, beta in -0.5f64..0.5, steps in 2usize..8) {
        let net = Network::ieee33();
        let prob = ScheduleProblem::new(&DayProfile::workday(), steps, alpha, beta).unwrap();
        let s = schedule_full_linear(&net, &prob, ModelKind::Dc, None, ModelOptions::default()).unwrap();
        let cap = net.total_e_cap();
        for t in 0..steps {
            prop_assert!((s.e_agg[t + 1] - s.e_agg[t] - prob.dt * s.charge[t]).abs() <= 1e-12);
        }
        prop_assert!((s.e_agg[0] / cap - 0.5).abs() <= 1e-9);
        prop_assert!((s.e_agg[steps] / cap - 0.5).abs() <= 1e-9);

        let rep = verify_schedule(&net, &s, &prob.profile).unwrap();
        for t in 0..steps {
            prop_assert_eq!(rep.soc_agg[t + 1], rep.soc_agg[t] + rep.dt * rep.charge[t] / cap);
        }
        // lossless plan on a resistive feeder ends below its target
        prop_assert!(rep.final_soc() < s.soc(&net)[steps]);
    }

    #[test]
    fn stacked_points_fall_inside_envelope(seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let net = Network::ieee33();
        let prob = ScheduleProblem::new(&DayProfile::workday(), 3, 1.0, 0.0).unwrap();
        let models = (0..3)
            .map(|t| build_model(ModelKind::Dc, &net, None, &prob.profile.injections(&net, t), ModelOptions::default()))
            .collect::<Result<Vec<_>, _>>()
            .unwrap();
        let stacked = StackedModel::new(&net, &prob, models).unwrap();
        let env = gridflex::aggregation::build_envelope(
            &net, ModelKind::Dc, None, &prob.profile, 3, &Default::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pt = stacked.coupling_support(&d).unwrap().unwrap();
        prop_assert!(env.max_violation(&pt) <= 1e-7);
    }
}
