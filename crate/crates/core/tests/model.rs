use pfas_core::channel::{exact_channel, make_grid, project_scene_to_grid, ArrayGeometry, GridModel, SceneParams, ScatterScene};
use pfas_core::linalg::nmse;
use pfas_core::patterns::{Direction, PatternSet, Polarization};
use pfas_core::rng;
use pfas_core::sounding::{
    generate_observation, pilot_overhead_symbols, random_states, read_observation, write_observation, ChannelSource,
    PilotKind, SoundingPlan,
};
use proptest::prelude::*;

#[test]
fn pilot_overhead_comb_four() {
    for (k, want) in [(1, 0), (4, 4), (7, 4), (8, 8), (16, 16)] {
        assert_eq!(pilot_overhead_symbols(k, 4), want);
    }
}

#[test]
fn observation_file_round_trip() {
    let model = GridModel::new(ArrayGeometry::new(2, 2).unwrap(), make_grid(30.0).unwrap(), PatternSet::synthetic(1, 4, 3).unwrap());
    let scene = ScatterScene::sample(
        &mut rng::seeded(2),
        &SceneParams { n_users: 1, n_paths: 3, delay_span: 4, angle_spread_deg: 30.0, distinct_delays: false },
    )
    .unwrap();
    let mut g = rng::seeded(3);
    let plan = SoundingPlan::random(&mut g.clone(), &mut g, &model, 2, 8, PilotKind::Qpsk, 0.1).unwrap();
    let obs = generate_observation(ChannelSource::Exact { scene: &scene, user: 0 }, &model, &plan, &mut g).unwrap();
    let mut buf = Vec::new();
    write_observation(&obs, &mut buf).unwrap();
    let back = read_observation(buf.as_slice()).unwrap();
    let mut again = Vec::new();
    write_observation(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn on_grid_scene_matches_its_projection(seed in 0u64..10_000, step in prop::sample::select(vec![15.0, 30.0, 45.0])) {
        let grid = make_grid(step).unwrap();
        let model = GridModel::new(ArrayGeometry::new(2, 2).unwrap(), grid.clone(), PatternSet::synthetic(seed, 5, 3).unwrap());
        let params = SceneParams { n_users: 2, n_paths: 4, delay_span: 4, angle_spread_deg: 40.0, distinct_delays: false };
        let scene = ScatterScene::sample(&mut rng::seeded(seed), &params).unwrap().snapped(&grid);
        let states = random_states(&mut rng::seeded(seed + 1), 4, 5);
        for user in 0..2 {
            let h = exact_channel(&scene, model.geometry(), model.patterns(), &states, 16, user).unwrap();
            let coeffs = project_scene_to_grid(&scene, &grid, user).unwrap();
            let hg = model.approx_channel(&coeffs, &states, 16).unwrap();
            prop_assert!(nmse(&hg, &h) < 1e-20);
        }
    }

    #[test]
    fn wrapped_directions_are_canonical(phi in -20.0f64..20.0, theta in -10.0f64..10.0) {
        let d = Direction::wrapped(phi, theta);
        prop_assert!((0.0..std::f64::consts::TAU).contains(&d.phi()));
        prop_assert!((0.0..=std::f64::consts::PI).contains(&d.theta()));
        let u = d.unit_vector();
        prop_assert!(((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_patterns_are_reproducible(seed in 0u64..10_000, phi in 0.0..std::f64::consts::TAU, theta in 0.0..std::f64::consts::PI) {
        let a = PatternSet::synthetic(seed, 3, 4).unwrap();
        let b = PatternSet::synthetic(seed, 3, 4).unwrap();
        let d = Direction::new(phi, theta).unwrap();
        for s in 0..3 {
            for pol in Polarization::BOTH {
                prop_assert_eq!(a.eval(s, &d, pol), b.eval(s, &d, pol));
            }
        }
    }

    #[test]
    fn scene_text_round_trip(seed in 0u64..10_000) {
        let params = SceneParams { n_users: 3, n_paths: 5, delay_span: 6, angle_spread_deg: 15.0, distinct_delays: false };
        let scene = ScatterScene::sample(&mut rng::seeded(seed), &params).unwrap();
        let mut buf = Vec::new();
        scene.write_to(&mut buf).unwrap();
        let back = ScatterScene::read_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, scene);
    }
}
