use hetdiff::analysis::{
    self, exponent_curve, fit_power_law, linear_trend, log_grid, q_grid, run_sweep, Observable, Source,
    SweepSpec,
};
use hetdiff::model::InitialData;
use hetdiff::Error;

#[test]
fn strong_contrast_point_mass_exponent() {
    let spec = SweepSpec {
        eps: log_grid(1e-6, 1e-3, 31),
        init: InitialData::dirac(1.0).unwrap(),
        t_obs: 0.1,
        ..SweepSpec::new(0.9, Source::ClosedForm, Observable::BoundaryValue)
    };
    let fit = fit_power_law(&run_sweep(&spec).unwrap().points(), (1e-6, 1e-3)).unwrap();
    assert!((fit.k - 0.4).abs() <= 0.01, "{}", fit.k);
}

#[test]
fn near_half_exponent_in_the_narrow_window() {
    let spec = SweepSpec::new(0.6, Source::ClosedForm, Observable::BoundaryValue);
    let fit = fit_power_law(&run_sweep(&spec).unwrap().points(), analysis::NEAR_HALF_WINDOW).unwrap();
    assert!((fit.k - 0.082).abs() <= 0.03, "{}", fit.k);
}

#[test]
fn closed_form_and_fd_sweeps_agree() {
    for (q, obs) in [(0.8, Observable::BoundaryValue), (0.2, Observable::BoundarySlope)] {
        let eps = vec![1e-3, 1e-2, 1e-1];
        let cf = run_sweep(&SweepSpec { eps: eps.clone(), ..SweepSpec::new(q, Source::ClosedForm, obs) }).unwrap();
        let fd = run_sweep(&SweepSpec { eps, ..SweepSpec::new(q, Source::FdY, obs) }).unwrap();
        for (a, b) in cf.points().iter().zip(fd.points()) {
            assert!(((a.1 - b.1) / a.1).abs() < 5e-3, "q={q} eps={}: {} vs {}", a.0, a.1, b.1);
        }
    }
}

#[test]
fn walker_sweep_tracks_the_closed_form() {
    let eps = vec![0.02, 0.1, 0.5];
    let mut spec = SweepSpec { eps: eps.clone(), ..SweepSpec::new(0.8, Source::Walker, Observable::BoundaryValue) };
    spec.walker.particles = 100_000;
    let walk = run_sweep(&spec).unwrap();
    let cf = run_sweep(&SweepSpec { eps, ..SweepSpec::new(0.8, Source::ClosedForm, Observable::BoundaryValue) }).unwrap();
    // Step(1, 1) sampled on [-10 sqrt t, 10 sqrt t] carries mass 20 sqrt t
    let mass = 20.0 * spec.t_obs.sqrt();
    let w = spec.walker.bin_width;
    for (a, b) in cf.points().iter().zip(walk.points()) {
        let count = a.1 * w * spec.walker.particles as f64 / mass;
        let se = 2.5f64.sqrt() * a.1 / count.sqrt();
        assert!((a.1 - b.1).abs() < 4.0 * se + 0.01, "eps={}: {} vs {} (se {se})", a.0, a.1, b.1);
    }
}

#[test]
fn fitted_exponent_is_stable_under_window_halving() {
    for q in [0.75, 0.9] {
        let spec = SweepSpec {
            eps: log_grid(1e-6, 1e-3, 31),
            init: InitialData::dirac(1.0).unwrap(),
            t_obs: 0.1,
            ..SweepSpec::new(q, Source::ClosedForm, Observable::BoundaryValue)
        };
        let pts = run_sweep(&spec).unwrap().points();
        let full = fit_power_law(&pts, (1e-6, 1e-3)).unwrap();
        for half in [(1e-6, 10f64.powf(-4.5)), (10f64.powf(-4.5), 1e-3)] {
            let h = fit_power_law(&pts, half).unwrap();
            let shift = (full.k - h.k).abs();
            assert!(shift < 3.0 * full.residual, "q={q} {half:?}: shift {shift} vs residual {}", full.residual);
        }
    }
}

#[test]
fn exponent_grows_linearly_away_from_half() {
    let base = SweepSpec {
        eps: log_grid(1e-6, 1e-3, 16),
        init: InitialData::dirac(1.0).unwrap(),
        t_obs: 0.1,
        ..SweepSpec::new(0.75, Source::ClosedForm, Observable::BoundaryValue)
    };
    let qs = q_grid(0.7, 0.95, 6);
    let curve = exponent_curve(&qs, &base, (1e-6, 1e-3)).unwrap();
    let pts: Vec<(f64, f64)> = curve.iter().map(|c| (c.q, c.fit.as_ref().unwrap().k)).collect();
    let (slope, _) = linear_trend(&pts).unwrap();
    assert!(slope > 0.8 && slope < 1.2, "{slope}");
}

#[test]
fn invalid_sweeps_are_rejected() {
    let walker = SweepSpec { eps: vec![1e-3, 1e-1], ..SweepSpec::new(0.8, Source::Walker, Observable::BoundaryValue) };
    assert!(matches!(walker.validate(), Err(Error::InvalidParameter(_))));
    let unordered = SweepSpec { eps: vec![0.1, 0.01, 0.5], ..SweepSpec::new(0.8, Source::ClosedForm, Observable::BoundaryValue) };
    assert!(unordered.validate().is_err());
    let base = SweepSpec::new(0.8, Source::ClosedForm, Observable::BoundaryValue);
    assert!(exponent_curve(&[0.51], &base, (1e-4, 1e-2)).is_err());
    assert!(fit_power_law(&[(0.1, 1.0)], (1e-4, 1.0)).is_err());
}

#[test]
fn q_grid_keeps_clear_of_half() {
    let g = q_grid(0.5, 0.9, 5);
    assert!((g[0] - 0.52).abs() < 1e-15);
    assert!(g.iter().all(|q| (q - 0.5).abs() >= analysis::Q_GAP));
}

#[test]
fn non_decaying_observables_have_positive_limits() {
    let eps = log_grid(1e-6, 1e-2, 9);
    for (q, obs) in [(0.1, Observable::BoundaryValue), (0.9, Observable::BoundarySlope)] {
        let spec = SweepSpec {
            eps: eps.clone(),
            init: InitialData::dirac(1.0).unwrap(),
            t_obs: 0.1,
            ..SweepSpec::new(q, Source::ClosedForm, obs)
        };
        let pts = run_sweep(&spec).unwrap().points();
        let (small, next) = (pts[0].1.abs(), pts[1].1.abs());
        assert!(small > 0.1, "q={q}: {small}");
        assert!((small - next).abs() < 0.05 * small, "q={q}: {small} vs {next}");
    }
}
