//! Property: the canonical emission of any valid configuration reparses to
//! an equal configuration.

use proptest::prelude::*;
use villus_homog::config::*;
use villus_homog::macro1d::InflowLaw;
use villus_homog::model::absorption::{AxialMod, FastMod, TimeMod};
use villus_homog::model::pulse::{AmplitudeLaw, FrictionLaw, PeriodicShape};
use villus_homog::model::{Saturating, UnitScales};

fn finite_pos() -> impl Strategy<Value = f64> {
    (0.01f64..100.0).prop_map(|x| x)
}

fn shape_strategy() -> impl Strategy<Value = PeriodicShape> {
    prop_oneof![
        Just(PeriodicShape::RaisedSine),
        finite_pos().prop_map(|value| PeriodicShape::Constant { value }),
        (finite_pos(), 0.0f64..1.0)
            .prop_map(|(kappa, center)| PeriodicShape::VonMises { kappa, center }),
        proptest::collection::vec(0.0f64..10.0, 2..6).prop_map(PeriodicShape::Table),
    ]
}

fn friction_strategy() -> impl Strategy<Value = FrictionLaw> {
    prop_oneof![
        finite_pos().prop_map(|k| FrictionLaw::Constant { k }),
        (1.0f64..5.0, 0.0f64..0.9, finite_pos())
            .prop_map(|(base, amp, period)| FrictionLaw::Cosine { base, amp, period }),
    ]
}

fn saturating_strategy() -> impl Strategy<Value = Saturating> {
    prop_oneof![
        Just(Saturating::Zero),
        (finite_pos(), finite_pos())
            .prop_map(|(v_max, k_m)| Saturating::MichaelisMenten { v_max, k_m }),
        (finite_pos(), finite_pos()).prop_map(|(slope, cap)| Saturating::SatLinear { slope, cap }),
    ]
}

fn fast_strategy() -> impl Strategy<Value = FastMod> {
    prop_oneof![
        Just(FastMod::Const),
        (0.0f64..1.0, 1u32..4).prop_map(|(amp, freq)| FastMod::Harmonic { amp, freq }),
        (0.0f64..3.0, 1u32..4).prop_map(|(amp, freq)| FastMod::TipWeighted { amp, freq }),
        proptest::collection::vec(0.1f64..5.0, 2..5).prop_map(FastMod::Table),
    ]
}

fn axial_strategy() -> impl Strategy<Value = AxialMod> {
    prop_oneof![
        Just(AxialMod::Const),
        (0.0f64..2.0).prop_map(|rate| AxialMod::Decay { rate }),
        (finite_pos(), proptest::collection::vec(0.1f64..5.0, 2..5))
            .prop_map(|(dx, values)| AxialMod::Table { dx, values }),
    ]
}

fn time_strategy() -> impl Strategy<Value = TimeMod> {
    prop_oneof![
        Just(TimeMod::Const),
        (0.0f64..2.0, finite_pos()).prop_map(|(amp, period)| TimeMod::Sin2 { amp, period }),
    ]
}

fn inflow_strategy() -> impl Strategy<Value = InflowLaw> {
    prop_oneof![
        Just(InflowLaw::Zero),
        (finite_pos(), finite_pos())
            .prop_map(|(amp, t_ramp)| InflowLaw::Sin2Ramp { amp, t_ramp }),
        (finite_pos(), finite_pos())
            .prop_map(|(amp, t_pulse)| InflowLaw::Sin2Pulse { amp, t_pulse }),
        (finite_pos(), finite_pos()).prop_map(|(amp, period)| InflowLaw::HalfSine { amp, period }),
    ]
}

fn profile_strategy() -> impl Strategy<Value = ProfileSpec> {
    prop_oneof![
        Just(ProfileSpec::Flat),
        (0.0f64..0.3, 1u32..4).prop_map(|(amp, freq)| ProfileSpec::RaisedCosine { amp, freq }),
        (0.0f64..0.2, 1u32..3, 1u32..4, -0.9f64..0.9).prop_map(
            |(amp, freq_z, freq_theta, beta)| ProfileSpec::Bumpy { amp, freq_z, freq_theta, beta }
        ),
    ]
}

fn ode_config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        shape_strategy(),
        friction_strategy(),
        (0.5f64..3.0, 0.001f64..0.04),
        (0.0f64..0.4, 0.5f64..4.0),
        proptest::collection::vec(0.0f64..1.0, 1..4),
        any::<bool>(),
    )
        .prop_map(|(shape, friction, (c, eps), (v0_frac, t_final), rates, converge)| {
            let species = rates.len();
            let module = if converge { ModuleKind::OdeConverge } else { ModuleKind::OdeSim };
            ExperimentConfig {
                module,
                name: "generated".into(),
                out_dir: "out".into(),
                units: UnitScales::default(),
                pulse: Some(PulseSection {
                    wave_speed: c,
                    pulse_period: eps,
                    shape,
                    friction,
                    amplitude: AmplitudeLaw { c0: 1.0, c1: 0.5, a: 1.0, b: 0.25 },
                }),
                kinetics: Some(KineticsSection {
                    species,
                    law: KineticsSpec::LinearDecay(rates),
                    lipschitz_bound: 1.0,
                }),
                ode: Some(OdeSection {
                    v0: v0_frac * c,
                    y0: vec![1.0; species],
                    t_final,
                    dt: eps / 25.0,
                    record_points: 500,
                    quadrature_nodes: 65,
                    eps_list: if converge { vec![0.2, 0.1, 0.05] } else { Vec::new() },
                }),
                profile: None,
                velocity: None,
                absorption: None,
                homogenize: None,
                cell: None,
                transport: None,
                micro: None,
                inflow: None,
            }
        })
}

fn pde_config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        profile_strategy(),
        (0.1f64..3.0),
        (fast_strategy(), axial_strategy(), time_strategy()),
        (saturating_strategy(), saturating_strategy()),
        (0.05f64..1.0, 0.05f64..2.0),
        inflow_strategy(),
        prop_oneof![Just(ModuleKind::Homogenize), Just(ModuleKind::MacroSolve), Just(ModuleKind::Compare)],
    )
        .prop_map(|(shape, speed, (fast, axial, time), (g_a, phi), (alpha, omega), v0, module)| {
            // Built-in velocities need a theta-independent wall, so the
            // PDE configurations flatten the azimuthal modulation; the
            // geometry strategy below keeps it.
            let shape = match shape {
                ProfileSpec::Bumpy { amp, freq_z, freq_theta, .. } => {
                    ProfileSpec::Bumpy { amp, freq_z, freq_theta, beta: 0.0 }
                }
                other => other,
            };
            let absorption = AbsorptionSection {
                eta_p_base: 1.0,
                eta_p_fast: fast,
                eta_p_axial: axial,
                eta_a_base: 0.5,
                eta_a_fast: FastMod::Const,
                eta_a_time: time,
                rho_base: 0.7,
                rho_fast: FastMod::Const,
                g_a,
                alpha,
                omega,
                chi: omega * 2.0,
                zeta_base: 0.2,
                zeta_axial: AxialMod::Const,
                zeta_time: TimeMod::Const,
                phi,
                eta_lower_bound: 1e-6,
            };
            ExperimentConfig {
                module,
                name: "generated-pde".into(),
                out_dir: "out".into(),
                units: UnitScales { length: 1.0, time: 1.0, concentration: 1.0 },
                pulse: None,
                kinetics: None,
                ode: None,
                profile: Some(ProfileSection {
                    base_radius: 1.0,
                    shape,
                    n_z: 64,
                    n_theta: 8,
                    n_rho: 9,
                }),
                velocity: Some(VelocitySpec::Plug { mean_speed: speed }),
                absorption: Some(absorption),
                homogenize: if module == ModuleKind::Homogenize {
                    Some(HomogenizeSection { x1_samples: vec![0.0, 1.0], t_samples: vec![0.0] })
                } else {
                    None
                },
                cell: None,
                transport: if module != ModuleKind::Homogenize {
                    Some(TransportSection {
                        length: 1.0,
                        n_cells: 128,
                        t_final: 1.0,
                        cfl: 0.8,
                        snapshots: 4,
                    })
                } else {
                    None
                },
                micro: if module == ModuleKind::Compare {
                    Some(MicroSection {
                        eps_list: vec![0.25, 0.125, 0.0625],
                        n_z_per_period: 16,
                        n_rho: 16,
                    })
                } else {
                    None
                },
                inflow: if module != ModuleKind::Homogenize {
                    Some(InflowSection { u0: InflowLaw::Zero, v0 })
                } else {
                    None
                },
            }
        })
}

fn geometry_config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (profile_strategy(), 0.2f64..3.0).prop_map(|(shape, base_radius)| ExperimentConfig {
        module: ModuleKind::Geometry,
        name: "generated-geometry".into(),
        out_dir: "out".into(),
        units: UnitScales::default(),
        pulse: None,
        kinetics: None,
        ode: None,
        profile: Some(ProfileSection { base_radius, shape, n_z: 64, n_theta: 16, n_rho: 9 }),
        velocity: None,
        absorption: None,
        homogenize: None,
        cell: None,
        transport: None,
        micro: None,
        inflow: None,
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn ode_configs_roundtrip(cfg in ode_config_strategy()) {
        let emitted = emit_config(&cfg);
        let reparsed = parse_config(&emitted)
            .map_err(|e| TestCaseError::fail(format!("{e:?}\n{emitted}")))?;
        prop_assert_eq!(reparsed, cfg);
    }

    #[test]
    fn pde_configs_roundtrip(cfg in pde_config_strategy()) {
        let emitted = emit_config(&cfg);
        let reparsed = parse_config(&emitted)
            .map_err(|e| TestCaseError::fail(format!("{e:?}\n{emitted}")))?;
        prop_assert_eq!(reparsed, cfg);
    }

    #[test]
    fn geometry_configs_roundtrip(cfg in geometry_config_strategy()) {
        let emitted = emit_config(&cfg);
        let reparsed = parse_config(&emitted)
            .map_err(|e| TestCaseError::fail(format!("{e:?}\n{emitted}")))?;
        prop_assert_eq!(reparsed, cfg);
    }
}
