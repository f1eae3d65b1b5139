use proptest::prelude::*;

use semiclassical::algebra::{bracket_single_dof, truncate, weyl_bracket_oracle};
use semiclassical::chart::{bracket_at, hamiltonian_vector_field, poisson_bracket};
use semiclassical::dynamics::{integrate_until, IntegratorOptions};
use semiclassical::effective::{
    all_orders_potential, ground_state_estimate, taylor_effective_hamiltonian, EffectiveModel, Potential,
};
use semiclassical::effpot2::{
    effective_potential_2dof, low_energy_shift, minimize_moment_sector, Hessian2,
};
use semiclassical::reconstruction::{density_from_moments, impurity_candidates};
use semiclassical::thermo::{thermal_moments, thermo_tolerance};
use semiclassical::{CanonicalChart, ChartFunction, Exec, MomentIndex, Realization, RealizationKind};

fn chart() -> CanonicalChart {
    CanonicalChart::new(&[("x1", "p1"), ("x2", "p2")], &["C"]).unwrap()
}

/// `Σ c · Π coordinates` from `(c, factor indices)` terms.
fn polynomial(terms: &[(f64, Vec<usize>)]) -> ChartFunction {
    let c = chart();
    let names = c.names().iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut acc: Option<ChartFunction> = None;
    for (coef, factors) in terms {
        let mut m = ChartFunction::coordinate(&c, &names[factors[0]]).unwrap();
        for &i in &factors[1..] {
            m = m.mul(&ChartFunction::coordinate(&c, &names[i]).unwrap()).unwrap();
        }
        let m = m.scale(*coef);
        acc = Some(match acc {
            None => m,
            Some(a) => a.add(&m).unwrap(),
        });
    }
    acc.unwrap()
}

fn poly_strategy() -> impl Strategy<Value = Vec<(f64, Vec<usize>)>> {
    prop::collection::vec((-2.0..2.0f64, prop::collection::vec(0usize..5, 1..4)), 1..4)
}

fn point_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, 5)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bracket_is_antisymmetric(f in poly_strategy(), g in poly_strategy(), x in point_strategy()) {
        let (f, g) = (polynomial(&f), polynomial(&g));
        let a = bracket_at(&f, &g, &x).unwrap();
        let b = bracket_at(&g, &f, &x).unwrap();
        prop_assert!(rel(a, -b, a.abs()) < 1e-12);
    }

    #[test]
    fn jacobi_identity(f in poly_strategy(), g in poly_strategy(), h in poly_strategy(), x in point_strategy()) {
        let (f, g, h) = (polynomial(&f), polynomial(&g), polynomial(&h));
        let t1 = poisson_bracket(&f, &poisson_bracket(&g, &h).unwrap()).unwrap().eval(&x).unwrap();
        let t2 = poisson_bracket(&g, &poisson_bracket(&h, &f).unwrap()).unwrap().eval(&x).unwrap();
        let t3 = poisson_bracket(&h, &poisson_bracket(&f, &g).unwrap()).unwrap().eval(&x).unwrap();
        let scale = t1.abs() + t2.abs() + t3.abs();
        prop_assert!((t1 + t2 + t3).abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn leibniz_rule(f in poly_strategy(), g in poly_strategy(), h in poly_strategy(), x in point_strategy()) {
        let (f, g, h) = (polynomial(&f), polynomial(&g), polynomial(&h));
        let lhs = bracket_at(&f.mul(&g).unwrap(), &h, &x).unwrap();
        let rhs = f.eval(&x).unwrap() * bracket_at(&g, &h, &x).unwrap()
            + g.eval(&x).unwrap() * bracket_at(&f, &h, &x).unwrap();
        prop_assert!(rel(lhs, rhs, lhs.abs()) < 1e-12);
    }

    #[test]
    fn casimir_functions_commute(f in poly_strategy(), x in point_strategy(), k in 1usize..4) {
        let f = polynomial(&f);
        let c = polynomial(&[(1.0, vec![4; k])]);
        prop_assert_eq!(bracket_at(&f, &c, &x).unwrap(), 0.0);
    }

    #[test]
    fn single_dof_bracket_antisymmetric_and_matches_oracle(a in 0u32..5, b in 0u32..5, c in 0u32..5, d in 0u32..5) {
        prop_assume!(a + b >= 2 && a + b <= 4 && c + d >= 2 && c + d <= 4);
        let (x, y) = (MomentIndex::qp(a, b), MomentIndex::qp(c, d));
        let xy = bracket_single_dof(&x, &y, None).unwrap();
        let yx = bracket_single_dof(&y, &x, None).unwrap();
        prop_assert_eq!(&xy, &yx.scaled((-1).into()));
        prop_assert_eq!(&xy, &weyl_bracket_oracle(&x, &y).unwrap());
    }

    #[test]
    fn truncation_is_a_projection(a in 0u32..4, b in 0u32..4, c in 0u32..4, d in 0u32..4, s in 2u32..5) {
        prop_assume!(a + b >= 2 && c + d >= 2);
        let p = bracket_single_dof(&MomentIndex::qp(a, b), &MomentIndex::qp(c, d), None).unwrap();
        let t = truncate(&p, s);
        prop_assert_eq!(truncate(&t, s), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn realized_moments_leave_casimirs_fixed(seed in any::<u64>()) {
        use rand::SeedableRng;
        for kind in RealizationKind::ALL {
            let r = Realization::new(kind);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x = r.random_regular_point(&mut rng);
            let n = 2 * r.chart().n_pairs();
            for m in r.kind().closed_moments() {
                let f = r.moment(&m).unwrap();
                let v = hamiltonian_vector_field(&f, &x).unwrap();
                prop_assert!(v[n..].iter().all(|c| *c == 0.0));
            }
        }
    }

    #[test]
    fn heff_without_moments_is_classical(q in -1.0..1.0f64, pi in -1.0..1.0f64, c3 in -1.0..1.0f64, c4 in 0.0..1.0f64) {
        let v = Potential::Polynomial { coeffs: vec![0.0, 0.0, 0.5, c3, c4] };
        let model = EffectiveModel::new(v.clone(), RealizationKind::Order2, 2);
        let h = taylor_effective_hamiltonian(&model).unwrap();
        // Δ(q²) = s² → 0 and Δ(π²) = p² + U/s² → 0 with U = s⁴
        let s = 1e-7;
        let val = h.eval(&[q, pi, s, 0.0, s.powi(4)]).unwrap();
        prop_assert!((val - (0.5 * pi * pi + v.value(q))).abs() < 1e-12);
    }

    #[test]
    fn all_orders_potential_is_even_in_s(q in -2.0..2.0f64, s in 0.05..2.0f64, u in 0.0..1.0f64) {
        let v = Potential::quartic_barrier(1.0, 0.2).unwrap();
        let a = all_orders_potential(&v, q, s, u, 1.0).unwrap();
        let b = 0.5 * (v.value(q - s) + v.value(q + s)) + u / (2.0 * s * s);
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn harmonic_ground_state_saturates(omega in 0.3..3.0f64) {
        let g = ground_state_estimate(&Potential::Harmonic { omega }, 0.25, 1.0, Exec::Sequential).unwrap();
        prop_assert!((g.energy - 0.5 * omega).abs() < 1e-8);
        prop_assert!((g.s.powi(4) * omega * omega - 0.25).abs() < 1e-5);
    }

    #[test]
    fn low_energy_shift_symmetries(a in 0.2..4.0f64, b in 0.2..4.0f64, c in -1.0..1.0f64) {
        let v12 = c * (a * b).sqrt() * 0.95;
        let base = low_energy_shift(&Hessian2::new(a, b, v12), 1.0).unwrap();
        let swapped = low_energy_shift(&Hessian2::new(b, a, v12), 1.0).unwrap();
        let flipped = low_energy_shift(&Hessian2::new(a, b, -v12), 1.0).unwrap();
        prop_assert!((base - swapped).abs() < 1e-13);
        prop_assert!((base - flipped).abs() < 1e-13);
    }

    #[test]
    fn moment_sector_in_domain(a in 0.2..4.0f64, b in 0.2..4.0f64, c in -1.0..1.0f64) {
        let h = Hessian2::new(a, b, c * (a * b).sqrt() * 0.95);
        let m = minimize_moment_sector(&h, 1.0).unwrap();
        let sb2 = m.beta.sin().powi(2);
        prop_assert!(m.s1 > 0.0 && m.s2 > 0.0);
        prop_assert!(sb2 > 0.0 && sb2 <= 1.0 + 1e-15);
    }

    #[test]
    fn saturated_potential_is_alpha_independent(alpha in -3.0..3.0f64, s1 in 0.3..2.0f64, s2 in 0.3..2.0f64, beta in 0.2..2.9f64) {
        let v = semiclassical::effective::Potential2::CoupledHarmonic { omega: 1.0, gamma: 0.4 };
        let a = effective_potential_2dof(0.1, -0.2, s1, s2, alpha, beta, 0.5, 0.0, &v).unwrap();
        let b = effective_potential_2dof(0.1, -0.2, s1, s2, 0.0, beta, 0.5, 0.0, &v).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn density_exact_for_weighted_polynomials(c in prop::collection::vec(-0.3..0.3f64, 5)) {
        // ρ = e^{-q²}(1 + Σ c_k q^k)/√π normalised; moments ∫ q^n e^{-q²} q^k dq/√π
        let g = |n: usize| if n % 2 == 1 { 0.0 } else { (1..n).step_by(2).map(|j| j as f64 / 2.0).product::<f64>() };
        let poly = |k: usize| if k == 0 { 1.0 } else { c[k - 1] };
        let norm: f64 = (0..=5).map(|k| poly(k) * g(k)).sum();
        let n = 10;
        let a: Vec<f64> = (0..=n).map(|m| (0..=5).map(|k| poly(k) * g(m + k)).sum::<f64>() / norm).collect();
        let grid: Vec<f64> = (0..=80).map(|i| -2.0 + 0.05 * i as f64).collect();
        let d = density_from_moments(&a, n, &grid, 1.0, Exec::Sequential).unwrap();
        for (q, v) in grid.iter().zip(&d.density) {
            let p: f64 = (0..=5).map(|k| poly(k) * q.powi(k as i32)).sum();
            let want = (-q * q).exp() * p / (std::f64::consts::PI.sqrt() * norm);
            prop_assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn density_integrates_to_one(mean in -0.5..0.5f64, var in 0.4..0.6f64) {
        let central: Vec<f64> = (0..=12).map(|k| if k % 2 == 1 { 0.0 } else {
            (1..k).step_by(2).map(|j| j as f64).product::<f64>() * var.powi(k / 2)
        }).collect();
        let m = semiclassical::reconstruction::MomentInput::from_central(mean, 0.0, &central, &[0.0; 13], 1.0);
        let grid: Vec<f64> = (0..=400).map(|i| -5.0 + 0.025 * i as f64).collect();
        let d = density_from_moments(&m.a, 12, &grid, 1.0, Exec::Sequential).unwrap();
        let total: f64 = grid.windows(2).zip(d.density.windows(2)).map(|(q, v)| 0.5 * (v[0] + v[1]) * (q[1] - q[0])).sum();
        prop_assert!((total - 1.0).abs() < 1e-3);
    }

    #[test]
    fn impurity_scan_is_seed_independent(seed in any::<u64>()) {
        for kind in [RealizationKind::Order2, RealizationKind::Order3Systematic, RealizationKind::TwodofOrder2] {
            let r = Realization::new(kind);
            prop_assert_eq!(impurity_candidates(&r, 100, seed).unwrap(), impurity_candidates(&r, 100, 0).unwrap());
        }
    }

    #[test]
    fn thermal_energy_is_log_z_derivative(beta in 0.2..20.0f64, omega in 0.2..5.0f64) {
        let h = 1e-4 * beta;
        let tol = thermo_tolerance();
        let up = thermal_moments(beta + h, omega, 1.0, 0.25, tol).unwrap().log_z;
        let dn = thermal_moments(beta - h, omega, 1.0, 0.25, tol).unwrap().log_z;
        let e = thermal_moments(beta, omega, 1.0, 0.25, tol).unwrap().energy;
        prop_assert!((-(up - dn) / (2.0 * h) - e).abs() < 1e-5 * e.abs().max(1.0));
    }
}

#[test]
fn casimir_average_grows_with_temperature() {
    let betas = semiclassical::optimize::logspace(0.1, 1e3, 30);
    let u: Vec<f64> = betas
        .iter()
        .map(|&b| thermal_moments(b, 1.0, 1.0, 0.25, thermo_tolerance()).unwrap().casimir)
        .collect();
    // β ascending means T descending
    assert!(u.windows(2).all(|w| w[1] <= w[0]));
    assert!(u.iter().all(|v| *v > 0.25));
}

#[test]
fn zero_temperature_rates_are_first_order() {
    // (⟨E⟩ − ω/4)·β and (⟨U⟩ − 1/4)·β approach constants
    let at = |b: f64| thermal_moments(b, 1.0, 1.0, 0.25, thermo_tolerance()).unwrap();
    let (a, b) = (at(1e3), at(1e4));
    let re = ((a.energy - 0.25) * 1e3, (b.energy - 0.25) * 1e4);
    let ru = ((a.casimir - 0.25) * 1e3, (b.casimir - 0.25) * 1e4);
    assert!((re.0 / re.1 - 1.0).abs() < 0.01, "{re:?}");
    assert!((ru.0 / ru.1 - 1.0).abs() < 0.01, "{ru:?}");
}

#[test]
fn trajectories_reverse_and_keep_casimirs() {
    let model = EffectiveModel::new(Potential::Polynomial { coeffs: vec![0.0, 0.0, 0.5, 0.1, 0.05] }, RealizationKind::Order2, 2);
    let h = taylor_effective_hamiltonian(&model).unwrap();
    let opts = IntegratorOptions::with_tol(1e-10);
    let names: Vec<String> = ["q", "pi", "s", "p", "U"].iter().map(|s| s.to_string()).collect();
    let x0 = vec![0.05, 0.1, 0.3, 0.05, 0.25];
    let fwd = integrate_until(&h, &x0, names.clone(), 2.0, &opts, None).unwrap();
    assert_eq!(fwd.casimir_drift(3), 0.0);
    let mut back = fwd.last().to_vec();
    for i in [1, 3] {
        back[i] = -back[i];
    }
    let rev = integrate_until(&h, &back, names, 2.0, &opts, None).unwrap();
    let end = rev.last();
    for (i, want) in x0.iter().enumerate() {
        let got = if i == 1 || i == 3 { -end[i] } else { end[i] };
        assert!((got - want).abs() < 1e-6, "{i} {got} {want}");
    }
}
