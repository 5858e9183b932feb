//! Acceptance gate. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero when any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridflex::acpf::{ac_residual, bus_power, polar_jacobian, solve_ac, solve_distflow};
use gridflex::aggregation::{build_envelope, project_fourier_motzkin, project_slice, EnvelopeOptions, FM_DEFAULT_CAP};
use gridflex::linear_models::{
    build_model, detect_negative_losses, feature_table, BasePoint, LinearModel, ModelKind, ModelOptions,
    ReducedModel, StorageSplit, X_CHARGE, X_PCC,
};
use gridflex::network::{build_ybus, generate_campus_like, DayProfile, Network, NetworkFile};
use gridflex::reporting::{run_campaign, CampaignConfig, CampaignRun};
use gridflex::scheduling::{schedule_full_linear, schedule_over_envelope, ScheduleProblem};
use gridflex::solver::{maximize, LpOutcome, LpProblem};
use gridflex::solver::linalg::norm_inf;
use gridflex::verification::NegativeLoss;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn pinned() -> ModelOptions {
    ModelOptions {
        split: StorageSplit::Proportional,
        ..ModelOptions::default()
    }
}

/// Radial equivalence on the 33-bus feeder and 100 random radial cases.
/// Also returns the residual of every converged AC case for criterion 2.
fn radial_cases() -> Result<(f64, f64), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases: Vec<(Network, f64, f64)> = vec![(Network::ieee33(), 1.0, 0.0)];
    for seed in 0..100 {
        cases.push((generate_campus_like(seed), rng.gen_range(0.2..1.3), rng.gen_range(0.0..1.0)));
    }
    let (mut gap, mut residual) = (0.0f64, 0.0f64);
    for (net, load, pv) in &cases {
        let inj = net.injections(*load, *pv);
        let ac = solve_ac(net, &inj).map_err(err)?;
        let df = solve_distflow(net, &inj).map_err(err)?;
        residual = residual.max(norm_inf(&ac_residual(&ac, net)));
        for (u, v) in df.u.iter().zip(&ac.v) {
            gap = gap.max((u - v * v).abs());
        }
    }
    Ok((gap, residual))
}

fn criterion_1() -> Check {
    let (gap, _) = radial_cases()?;
    ensure(gap <= 1e-6, format!("max |u - v²| = {gap:.2e}"))?;
    Ok(format!("101 radial cases, max |u - v²| = {gap:.2e}"))
}

fn criterion_2() -> Check {
    let (_, residual) = radial_cases()?;
    ensure(residual <= 1e-8, format!("residual {residual:.2e}"))?;
    let net = Network::ieee33();
    let y = build_ybus(&net);
    let n = net.num_buses();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.9..1.1)).collect();
        let th: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let jac = polar_jacobian(&y, &v, &th);
        for col in 0..2 * n {
            let (mut vp, mut vm, mut tp, mut tm) = (v.clone(), v.clone(), th.clone(), th.clone());
            if col < n {
                tp[col] += h;
                tm[col] -= h;
            } else {
                vp[col - n] += h;
                vm[col - n] -= h;
            }
            let (pp, qp) = bus_power(&y, &vp, &tp);
            let (pm, qm) = bus_power(&y, &vm, &tm);
            for row in 0..2 * n {
                let fd = if row < n {
                    (pp[row] - pm[row]) / (2.0 * h)
                } else {
                    (qp[row - n] - qm[row - n]) / (2.0 * h)
                };
                let a = jac[(row, col)];
                worst = worst.max((a - fd).abs() / a.abs().max(1.0));
            }
        }
    }
    ensure(worst <= 1e-6, format!("Jacobian relative error {worst:.2e}"))?;
    Ok(format!("residual ≤ {residual:.2e}, Jacobian relative error {worst:.2e}"))
}

/// Random feasible points of a model: LP vertices in random directions and
/// convex combinations of them.
fn feasible_points(model: &LinearModel, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>, String> {
    let red = ReducedModel::new(model).map_err(err)?;
    let mut vertices = Vec::new();
    for _ in 0..count.div_ceil(10) {
        let d: Vec<f64> = (0..red.nz()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, z) = red
            .support(&d)
            .map_err(err)?
            .ok_or("unbounded model direction")?;
        vertices.push(z);
    }
    let mut points: Vec<Vec<f64>> = vertices.iter().map(|z| red.recover(z)).collect();
    while points.len() < count {
        let w: Vec<f64> = (0..vertices.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = w.iter().sum();
        let z: Vec<f64> = (0..red.nz())
            .map(|k| vertices.iter().zip(&w).map(|(v, wi)| v[k] * wi / s).sum())
            .collect();
        points.push(red.recover(&z));
    }
    Ok(points)
}

fn criterion_3() -> Check {
    let net = generate_campus_like(0);
    let prof = DayProfile::workday();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut probes = 0;
    for kind in [ModelKind::Dc, ModelKind::LinDistFlow] {
        for t in [3, 12] {
            let m = build_model(kind, &net, None, &prof.injections(&net, t), ModelOptions::default()).map_err(err)?;
            for pt in feasible_points(&m, 250, &mut rng)? {
                ensure(
                    norm_inf(&m.residual(&pt)) <= 1e-9 && m.bound_violation(&pt) <= 1e-9,
                    "probe point is not feasible",
                )?;
                worst = worst.max(m.injection_sum(&pt).abs());
                probes += 1;
            }
        }
    }
    ensure(worst <= 1e-10, format!("max |Σ p_i| = {worst:.2e}"))?;
    Ok(format!("{probes} feasible points, max |Σ p_i| = {worst:.2e}"))
}

fn criterion_4() -> Check {
    let net = generate_campus_like(0);
    let (load, pv) = DayProfile::workday().mean();
    let inj = net.injections(load, pv);
    let base = BasePoint::solve(&net, &inj, "mean").map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = net.num_buses();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..20 {
        let dir: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                if i == net.slack {
                    (0.0, 0.0)
                } else {
                    (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                }
            })
            .collect();
        let error = |eps: f64| -> Result<f64, String> {
            let mut pert = inj.clone();
            for (i, (dp, dq)) in dir.iter().enumerate() {
                pert.p[i] += eps * dp;
                pert.q[i] += eps * dq;
            }
            let m = build_model(ModelKind::LinAc, &net, Some(&base), &pert, pinned()).map_err(err)?;
            let pt = m.complete(&[(X_CHARGE, 0.0)]).map_err(err)?;
            let ac = solve_ac(&net, &pert).map_err(err)?;
            let mut e = (pt[X_PCC] - ac.p[net.slack]).abs();
            for i in 0..n {
                e = e.max((pt[m.column(&format!("v[{i}]")).expect("column")] - ac.v[i]).abs());
                e = e.max((pt[m.column(&format!("theta[{i}]")).expect("column")] - ac.theta[i]).abs());
            }
            Ok(e)
        };
        let ratio = error(0.01)? / error(0.005)?;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    ensure(lo >= 3.5 && hi <= 4.5, format!("ratios in [{lo:.3}, {hi:.3}]"))?;
    Ok(format!("20 directions, error ratio in [{lo:.3}, {hi:.3}]"))
}

fn criterion_5() -> Check {
    let mut worst = 0.0f64;
    let cases = [(Network::ieee33(), 1.0, 0.0), (generate_campus_like(0), 0.8, 0.6), (generate_campus_like(7), 1.1, 0.0)];
    for (net, load, pv) in &cases {
        let inj = net.injections(*load, *pv);
        let base = BasePoint::solve(net, &inj, "b").map_err(err)?;
        let st = &base.state;
        for kind in [ModelKind::DcEnhanced, ModelKind::LinAc] {
            let m = build_model(kind, net, Some(&base), &inj, pinned()).map_err(err)?;
            let pt = m.complete(&[(X_CHARGE, 0.0)]).map_err(err)?;
            let col = |name: String| m.column(&name).ok_or(format!("missing column {name}"));
            for i in 0..net.num_buses() {
                worst = worst.max((pt[col(format!("p[{i}]"))?] - st.p[i]).abs());
                worst = worst.max((pt[col(format!("q[{i}]"))?] - st.q[i]).abs());
            }
            for k in 0..net.num_branches() {
                worst = worst.max((pt[col(format!("P[{k}]"))?] - st.branch_p[k]).abs());
                worst = worst.max((pt[col(format!("Q[{k}]"))?] - st.branch_q[k]).abs());
                worst = worst.max((pt[col(format!("P_to[{k}]"))?] - st.branch_p_to[k]).abs());
                worst = worst.max((pt[col(format!("Q_to[{k}]"))?] - st.branch_q_to[k]).abs());
            }
        }
    }
    ensure(worst <= 1e-8, format!("max deviation {worst:.2e}"))?;
    Ok(format!("enhanced dc and lin-ac on 3 bases, max deviation {worst:.2e}"))
}

/// Feasible day-long dispatches `(P_pcc[1..T], E[1..T])` of per-step models.
/// Each step's point is a convex combination of model vertices found in random
/// directions of the (P_pcc, C) plane, and the charge trajectory satisfies the
/// storage dynamics, energy bounds and final target.
fn random_dispatches(
    net: &Network,
    prob: &ScheduleProblem,
    models: &[LinearModel],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>, String> {
    let steps = models.len();
    let mut vertices = Vec::with_capacity(steps);
    for m in models {
        let red = ReducedModel::new(m).map_err(err)?;
        let mut pts = Vec::new();
        for k in 0..12 {
            let a = std::f64::consts::TAU * (k as f64 + rng.gen_range(0.0..1.0)) / 12.0;
            let mut d = vec![0.0; red.nz()];
            d[X_PCC] = a.cos();
            d[X_CHARGE] = a.sin();
            for v in d.iter_mut().skip(2) {
                *v = 1e-3 * rng.gen_range(-1.0..1.0);
            }
            let (_, z) = red.support(&d).map_err(err)?.ok_or("unbounded step direction")?;
            let x = red.recover(&z);
            ensure(
                norm_inf(&m.residual(&x)) <= 1e-9 && m.bound_violation(&x) <= 1e-9,
                "step vertex is not feasible",
            )?;
            pts.push(x);
        }
        vertices.push(pts);
    }
    let range = |t: usize| {
        let c = vertices[t].iter().map(|x| x[X_CHARGE]);
        (c.clone().fold(f64::INFINITY, f64::min), c.fold(f64::NEG_INFINITY, f64::max))
    };

    // charge trajectories: variables C[0..T] then E[0..T]
    let cap = net.total_e_cap();
    let (mut lower, mut upper) = (vec![0.0; 2 * steps], vec![cap; 2 * steps]);
    for t in 0..steps {
        (lower[t], upper[t]) = range(t);
    }
    let mut lp = LpProblem::new(vec![0.0; 2 * steps]).with_bounds(lower, upper);
    for t in 0..steps {
        let mut row = vec![0.0; 2 * steps];
        row[steps + t] = 1.0;
        row[t] = -prob.dt;
        if t > 0 {
            row[steps + t - 1] = -1.0;
        }
        lp.add_equality(&row, if t == 0 { net.initial_energy() } else { 0.0 });
    }
    let mut row = vec![0.0; 2 * steps];
    row[2 * steps - 1] = 1.0;
    lp.add_equality(&row, net.final_energy());
    let mut trajectories = Vec::new();
    for _ in 0..10 {
        let c: Vec<f64> = (0..2 * steps).map(|_| rng.gen_range(-1.0..1.0)).collect();
        match maximize(&lp, &c).map_err(err)? {
            LpOutcome::Optimal(s) => trajectories.push(s.x[..steps].to_vec()),
            _ => return Err("no feasible charge trajectory".into()),
        }
    }

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let w: Vec<f64> = (0..trajectories.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = w.iter().sum();
        let charge: Vec<f64> = (0..steps)
            .map(|t| trajectories.iter().zip(&w).map(|(c, wi)| c[t] * wi / s).sum())
            .collect();
        let mut p = Vec::with_capacity(steps);
        let mut e = Vec::with_capacity(steps);
        let mut energy = net.initial_energy();
        for (t, &c) in charge.iter().enumerate() {
            // interpolate between a vertex below and one above the target charge
            let below: Vec<&Vec<f64>> = vertices[t].iter().filter(|x| x[X_CHARGE] <= c).collect();
            let above: Vec<&Vec<f64>> = vertices[t].iter().filter(|x| x[X_CHARGE] >= c).collect();
            let lo = below[rng.gen_range(0..below.len())];
            let hi = above[rng.gen_range(0..above.len())];
            let span = hi[X_CHARGE] - lo[X_CHARGE];
            let lam = if span > 0.0 { (c - lo[X_CHARGE]) / span } else { 0.0 };
            let x: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + lam * (b - a)).collect();
            ensure(
                norm_inf(&models[t].residual(&x)) <= 1e-9 && models[t].bound_violation(&x) <= 1e-9,
                "interpolated dispatch is not feasible",
            )?;
            energy += prob.dt * x[X_CHARGE];
            p.push(x[X_PCC]);
            e.push(energy);
        }
        p.extend(e);
        out.push(p);
    }
    Ok(out)
}

/// Three-bus feeder small enough for exact elimination.
fn small_feeder() -> Network {
    let json = r#"{
        "base_mva": 1.0,
        "buses": [
            {"id": 0, "kind": "slack", "v_min": 0.9, "v_max": 1.1},
            {"id": 1, "kind": "pq", "v_min": 0.9, "v_max": 1.1, "p_load": 0.3, "q_load": 0.1},
            {"id": 2, "kind": "pq", "v_min": 0.9, "v_max": 1.1, "p_load": 0.2, "q_load": 0.05}
        ],
        "branches": [
            {"from": 0, "to": 1, "r": 0.02, "x": 0.06, "flow_limit": 1.0},
            {"from": 1, "to": 2, "r": 0.03, "x": 0.05, "flow_limit": 0.6}
        ],
        "storage": [{"bus": 2, "p_max": 0.25, "e_cap": 0.5, "soc_init": 0.5, "soc_final": 0.5}]
    }"#;
    NetworkFile::from_json(json).and_then(|f| f.into_network()).expect("valid small feeder")
}

fn criterion_6(prob: &ScheduleProblem, net: &Network, base: &BasePoint) -> Check {
    // soundness: feasible dispatches of the stacked models lie inside each envelope
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let steps = prob.steps();
    let mut worst_slack = f64::NEG_INFINITY;
    let mut probes = 0;
    let mut worst_gap = 0.0f64;
    for kind in ModelKind::ALL {
        let b = kind.needs_base().then_some(base);
        let env = build_envelope(net, kind, b, &prob.profile, steps, &EnvelopeOptions::default()).map_err(err)?;
        let models = (0..steps)
            .map(|t| build_model(kind, net, b, &prob.profile.injections(net, t), ModelOptions::default()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        for p in random_dispatches(net, prob, &models, 250, &mut rng)? {
            worst_slack = worst_slack.max(env.max_violation(&p));
            probes += 1;
        }
        // envelope and full-linear optima
        let a = schedule_over_envelope(net, prob, &env).map_err(err)?;
        let f = schedule_full_linear(net, prob, kind, b, ModelOptions::default()).map_err(err)?;
        worst_gap = worst_gap.max((a.objective - f.objective).abs());
    }
    ensure(worst_slack <= 1e-7, format!("envelope slack {worst_slack:.2e}"))?;
    ensure(worst_gap <= 1e-5, format!("objective gap {worst_gap:.2e}"))?;

    // exactness: elimination and dense support slices agree on small instances
    let small = small_feeder();
    let inj = small.injections(1.0, 0.0);
    let small_base = BasePoint::solve(&small, &inj, "small").map_err(err)?;
    let mut worst_fm = 0.0f64;
    let mut compared = Vec::new();
    for kind in ModelKind::ALL {
        let b = kind.needs_base().then_some(&small_base);
        let m = build_model(kind, &small, b, &inj, ModelOptions::default()).map_err(err)?;
        if m.num_cols() > FM_DEFAULT_CAP {
            continue;
        }
        let fm = project_fourier_motzkin(&m, FM_DEFAULT_CAP).map_err(err)?;
        let (hs, _) = project_slice(&m, 64, true).map_err(err)?;
        let slice = gridflex::aggregation::FlexibilityEnvelope {
            labels: fm.labels.clone(),
            halfspaces: hs,
            kind: fm.kind,
            provenance: "slice".into(),
            initial_energy: None,
            dt: None,
        };
        for k in 0..720 {
            let a = std::f64::consts::PI * k as f64 / 360.0;
            let d = [a.cos(), a.sin()];
            let s1 = fm.support(&d).map_err(err)?.ok_or("unbounded")?;
            let s2 = slice.support(&d).map_err(err)?.ok_or("unbounded")?;
            worst_fm = worst_fm.max((s1 - s2).abs());
        }
        compared.push(kind.name());
    }
    ensure(compared.len() >= 2, format!("only {compared:?} fit the elimination cap"))?;
    ensure(worst_fm <= 1e-6, format!("elimination vs support slice {worst_fm:.2e}"))?;
    Ok(format!(
        "{probes} dispatches, max slack {worst_slack:.2e}; objective gap {worst_gap:.2e}; \
         elimination vs slices ({}) {worst_fm:.2e}",
        compared.join(", ")
    ))
}

fn outcome<'a>(run: &'a CampaignRun, name: &str) -> Result<&'a gridflex::verification::CampaignOutcome, String> {
    let r = run.runs.iter().find(|r| r.name == name).ok_or(format!("{name} missing"))?;
    r.result.as_ref().map_err(|e| format!("{name}: {e}"))
}

fn criterion_7(run: &CampaignRun, net: &Network, prob: &ScheduleProblem) -> Check {
    let ac = outcome(run, "ac")?;
    let demand = prob.profile.net_demand(net);
    let ac_final = ac.report.final_soc_miss();
    ensure(ac_final.abs() <= 1e-3, format!("AC benchmark final SOC miss {:.4} pp", 100.0 * ac_final))?;
    let mut finals = Vec::new();
    for name in ["dc", "lindistflow"] {
        let o = outcome(run, name)?;
        for t in 0..prob.steps() {
            if demand[t] > 0.0 {
                ensure(
                    o.schedule.p_pcc[t] <= ac.schedule.p_pcc[t],
                    format!("{name} schedules more than AC at hour {t}"),
                )?;
            }
        }
        ensure(
            o.report.final_soc() < o.report.target_soc,
            format!("{name} final SOC {:.4} not below target", o.report.final_soc()),
        )?;
        let cum = &o.report.cumulative_loss_error;
        ensure(cum.windows(2).all(|w| w[1] >= w[0]), format!("{name} cumulative loss error decreases"))?;
        ensure(*cum.last().expect("non-empty") > 0.0, format!("{name} cumulative loss error not positive"))?;
        finals.push(format!("{name} {:.1} %", 100.0 * o.report.final_soc()));
    }
    Ok(format!(
        "final SOC {}, AC {:.3} %",
        finals.join(", "),
        100.0 * ac.report.final_soc()
    ))
}

fn criterion_8(run: &CampaignRun) -> Check {
    let rows: Vec<[&str; 6]> = feature_table()
        .iter()
        .map(|f| [f.model, f.topology, f.voltage, f.angle, f.reactive, f.loss])
        .collect();
    let expected = vec![
        ["LinDistFlow", "radial", "squared", "-", "standard", "-"],
        ["Classic DC PF", "meshed", "standard", "-", "-", "-"],
        ["Enhanced DC PF", "meshed", "squared", "standard", "standard", "linearized"],
        ["Linearized AC PF", "meshed", "standard", "standard", "standard", "linearized"],
    ];
    ensure(rows == expected, "feature rows differ from the reference table")?;
    let comparison = run.comparison.as_ref().ok_or("campaign produced no comparison")?;
    for r in comparison {
        if let Some(e) = expected.iter().find(|e| e[0] == r.model) {
            let got = [r.model.as_str(), &r.topology, &r.voltage, &r.angle, &r.reactive, &r.loss];
            ensure(got == *e, format!("comparison row for {} differs", r.model))?;
        }
    }
    for name in ["dc-enhanced", "lin-ac"] {
        let o = outcome(run, name)?;
        ensure(
            o.negative_loss == NegativeLoss::Occurred(false),
            format!("{name} reports negative losses: {}", o.negative_loss),
        )?;
    }

    // counterexample: heavy-load base, light reversed operating point
    let json = r#"{
        "base_mva": 1.0,
        "buses": [
            {"id": 0, "kind": "slack", "v_min": 0.8, "v_max": 1.2},
            {"id": 1, "kind": "pq", "v_min": 0.8, "v_max": 1.2, "p_load": 0.8}
        ],
        "branches": [{"from": 0, "to": 1, "r": 0.05, "x": 0.1}]
    }"#;
    let net = NetworkFile::from_json(json).and_then(|f| f.into_network()).map_err(err)?;
    let heavy = net.injections(1.0, 0.0);
    let base = BasePoint::solve(&net, &heavy, "heavy").map_err(err)?;
    let mut light = heavy.clone();
    light.p[1] = 0.3;
    let mut fired = Vec::new();
    for kind in [ModelKind::DcEnhanced, ModelKind::LinAc] {
        let m = build_model(kind, &net, Some(&base), &light, ModelOptions::default()).map_err(err)?;
        let pt = m.complete(&[]).map_err(err)?;
        if detect_negative_losses(&m, &pt).any_negative() {
            fired.push(kind.name());
        }
    }
    ensure(!fired.is_empty(), "detector did not fire on the far-from-base case")?;
    Ok(format!(
        "feature rows exact; campus campaign negative losses: none; detector fires for {}",
        fired.join(", ")
    ))
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).expect("readable output dir") {
            let p = entry.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("inside dir").display().to_string();
                out.push((rel, fs::read(&p).expect("readable output")));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9(first: &Path, cfg: &CampaignConfig) -> Check {
    run_campaign(cfg).map_err(err)?;
    let a = read_tree(first);
    let b = read_tree(&cfg.output);
    ensure(!a.is_empty(), "no outputs written")?;
    ensure(
        a.iter().map(|(n, _)| n).eq(b.iter().map(|(n, _)| n)),
        "output file sets differ",
    )?;
    for ((name, x), (_, y)) in a.iter().zip(&b) {
        ensure(x == y, format!("{name} differs between runs"))?;
    }
    Ok(format!("{} files byte-identical", a.len()))
}

fn report(results: &mut Vec<bool>, n: usize, title: &str, start: Instant, check: Check) {
    let secs = start.elapsed().as_secs_f64();
    match check {
        Ok(msg) => {
            println!("PASS criterion {n} ({title}): {msg} [{secs:.1} s]");
            results.push(true);
        }
        Err(msg) => {
            println!("FAIL criterion {n} ({title}): {msg} [{secs:.1} s]");
            results.push(false);
        }
    }
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let t = Instant::now();
    report(&mut results, 1, "radial equivalence", t, criterion_1());
    let t = Instant::now();
    report(&mut results, 2, "AC solver contract", t, criterion_2());
    let t = Instant::now();
    report(&mut results, 3, "losslessness", t, criterion_3());
    let t = Instant::now();
    report(&mut results, 4, "first-order accuracy", t, criterion_4());
    let t = Instant::now();
    report(&mut results, 5, "base-point exactness", t, criterion_5());

    let net = generate_campus_like(0);
    let prob = ScheduleProblem::new(&DayProfile::workday(), 24, 1.0, 0.0).expect("valid problem");
    let t = Instant::now();
    let c6 = BasePoint::from_profile(&net, &prob.profile)
        .map_err(err)
        .and_then(|base| criterion_6(&prob, &net, &base));
    report(&mut results, 6, "projection soundness and exactness", t, c6);

    let tmp = tempfile::tempdir().expect("temp dir");
    let cfg = |name: &str| CampaignConfig {
        network: None,
        profiles: None,
        models: ["dc", "lindistflow", "dc-enhanced", "lin-ac", "ac"].map(String::from).to_vec(),
        horizon: 24,
        directions: 64,
        alpha: 1.0,
        beta: 0.0,
        output: tmp.path().join(name),
        seed: 0,
    };
    let t = Instant::now();
    let first = cfg("first");
    let run = run_campaign(&first);
    let campaign_secs = t.elapsed().as_secs_f64();
    match &run {
        Ok(run) => {
            let t = Instant::now();
            report(&mut results, 7, "qualitative SOC drift", t, criterion_7(run, &net, &prob));
            report(&mut results, 8, "comparison matrix", t, criterion_8(run));
        }
        Err(e) => {
            for (n, title) in [(7, "qualitative SOC drift"), (8, "comparison matrix")] {
                report(&mut results, n, title, t, Err(format!("campaign failed: {e}")));
            }
        }
    }
    println!("(campaign on the campus network took {campaign_secs:.1} s)");
    let t = Instant::now();
    report(&mut results, 9, "determinism", t, criterion_9(&first.output, &cfg("second")));

    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
