use proptest::prelude::*;
use psps_core::fairness::build_opt_psps_fair;
use psps_core::ingest::{read_demand_csv, read_profile_csv, read_risk_csv};
use psps_core::metrics::{hamming, mad_normalized, parse_betas};
use psps_core::psps::{energized_risk, solve_opt_psps};
use psps_core::synthetic;
use psps_core::{
    build_opt_psps, parse_case, FairContext, FairnessMethod, ObjectiveContext, RiskRaster, ShedTally, SolverConfig,
};

fn exact() -> SolverConfig {
    SolverConfig::default().with_gap(1e-7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn all_off_plan_is_always_feasible(seed in 0u64..10_000) {
        let inst = synthetic::random_instance(seed, 7, 10, 4);
        let ctx = ObjectiveContext::new(inst.alpha, &inst.demand, &inst.risk).unwrap();
        let mut pm = build_opt_psps(&inst.network, &inst.demand, &inst.risk, &ctx).unwrap();
        pm.fix_switching(&vec![false; inst.network.n_lines()]);
        let sol = pm.solve(&exact()).unwrap();
        prop_assert!(sol.flow.iter().flatten().all(|f| f.abs() <= 1e-9));
    }

    #[test]
    fn more_weight_on_shed_never_sheds_more(seed in 0u64..10_000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let inst = synthetic::random_instance(seed, 5, 6, 2);
        let solve = |alpha: f64| {
            let ctx = ObjectiveContext::new(alpha, &inst.demand, &inst.risk).unwrap();
            solve_opt_psps(&inst.network, &inst.demand, &inst.risk, &ctx, &exact()).unwrap()
        };
        let (s_lo, s_hi) = (solve(lo), solve(hi));
        let tol = 1e-5 * inst.demand.total().max(1.0);
        prop_assert!(s_hi.total_shed() <= s_lo.total_shed() + tol);
        prop_assert!(s_hi.energized_risk(&inst.risk) + 1e-5 * inst.risk.iter().sum::<f64>().max(1.0)
            >= s_lo.energized_risk(&inst.risk));
    }

    #[test]
    fn fair_plans_respect_risk_cap(
        seed in 0u64..10_000,
        beta in 0.0f64..=1.0,
        method in prop::sample::select(FairnessMethod::ALL.to_vec()),
        shed in prop::collection::vec(0.0f64..3.0, 8),
    ) {
        let inst = synthetic::random_instance(seed, 6, 8, 3);
        let net = &inst.network;
        let ctx = ObjectiveContext::new(inst.alpha, &inst.demand, &inst.risk).unwrap();
        let base = solve_opt_psps(net, &inst.demand, &inst.risk, &ctx, &SolverConfig::default()).unwrap();
        let tally = ShedTally::new(net.n_buses(), 0.9).unwrap().update(&shed[..net.n_buses()]).unwrap();
        let fctx = FairContext { beta, zeta: 0.05, baseline_z: base.z.clone(), tally };
        let Ok(fm) = build_opt_psps_fair(net, &inst.demand, &inst.risk, &fctx, method) else {
            prop_assume!(false);
            unreachable!()
        };
        prop_assert!(fm.inner.model.is_well_formed());
        let sol = fm.inner.solve(&SolverConfig::default()).unwrap();
        let cap = 1.05 * energized_risk(&base.z, &inst.risk);
        prop_assert!(sol.energized_risk(&inst.risk) <= cap + 1e-6);
    }
}

proptest! {
    #[test]
    fn tally_decays_without_shed(eta in 0.0f64..=1.0, shed in prop::collection::vec(0.0f64..10.0, 1..6)) {
        let t = ShedTally::new(shed.len(), eta).unwrap().update(&shed).unwrap();
        let quiet = t.update(&vec![0.0; shed.len()]).unwrap();
        for (a, b) in quiet.values.iter().zip(&t.values) {
            prop_assert_eq!(*a, eta * b);
        }
        prop_assert!(t.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn tally_is_monotone_in_shed(
        eta in 0.0f64..=1.0,
        shed in prop::collection::vec(0.0f64..10.0, 4),
        extra in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        let t0 = ShedTally::new(4, eta).unwrap();
        let more: Vec<f64> = shed.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let (a, b) = (t0.update(&shed).unwrap(), t0.update(&more).unwrap());
        prop_assert!(a.values.iter().zip(&b.values).all(|(x, y)| x <= y));
    }

    #[test]
    fn hamming_is_a_metric(
        a in prop::collection::vec(any::<bool>(), 12),
        b in prop::collection::vec(any::<bool>(), 12),
        c in prop::collection::vec(any::<bool>(), 12),
    ) {
        let d = |x: &[bool], y: &[bool]| hamming(x, y).unwrap();
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b) == 0, a == b);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
    }

    #[test]
    fn mad_is_scale_free(values in prop::collection::vec(0.0f64..100.0, 1..20), k in 0.1f64..10.0) {
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        let (m, s) = (mad_normalized(&values), mad_normalized(&scaled));
        prop_assert!((m - s).abs() <= 1e-9 * m.max(1.0));
        prop_assert!(m >= 0.0 && m < 2.0);
    }

    #[test]
    fn case_parser_never_panics(text in ".{0,200}") {
        let _ = parse_case(&text);
    }

    #[test]
    fn case_parser_survives_mangled_cases(cut in 0usize..400, junk in "[{}\\[\\],:\"0-9a-z.-]{0,8}") {
        let (net, _) = synthetic::triangle();
        let mut text = net.to_json();
        let at = cut.min(text.len());
        let at = (0..=at).rev().find(|i| text.is_char_boundary(*i)).unwrap();
        text.insert_str(at, &junk);
        let _ = parse_case(&text);
    }

    #[test]
    fn raster_parser_never_panics(text in ".{0,200}") {
        let _ = RiskRaster::from_json(&text);
    }

    #[test]
    fn table_readers_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200), hour in "[-0-9]{1,3}") {
        let (net, _) = synthetic::triangle();
        let _ = read_demand_csv(&net, bytes.as_slice(), None);
        let _ = read_profile_csv(bytes.as_slice());
        let _ = read_risk_csv(&net, bytes.as_slice());
        let demand = format!("bus_id,hour,value_pu\n1,{hour},0.5\n");
        let _ = read_demand_csv(&net, demand.as_bytes(), Some(2));
    }

    #[test]
    fn beta_parser_never_panics(text in "[0-9.:, a-z-]{0,20}") {
        if let Ok(betas) = parse_betas(&text) {
            prop_assert!(betas.iter().all(|b| (0.0..=1.0).contains(b)));
        }
    }
}
