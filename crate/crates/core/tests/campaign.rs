use waxsim::commands;
use waxsim::config::RunConfig;
use waxsim::decoherence::ChannelToggles;
use waxsim::materials::Environment;
use waxsim::protocol::{campaign_curve, run_campaign, sample_variance, CampaignConfig, Execution, Scenario};

fn quiet() -> Scenario {
    Scenario::reference(Environment::space(), ChannelToggles::NONE)
}

#[test]
fn sample_variance_converges_to_model() {
    let s = Scenario::reference(Environment::space(), ChannelToggles::ALL);
    let cfg = CampaignConfig::ideal(vec![0.0, 1.0, 30.0, 100.0], 100_000, 5);
    let out = run_campaign(&cfg, &s).unwrap();
    let model = s.x_vars(0.0, &cfg.time_grid).unwrap();
    for (ts, v) in out.times.iter().zip(model) {
        let var = sample_variance(&ts.positions).unwrap();
        let se = v * (2.0 / (cfg.runs_per_time as f64 - 1.0)).sqrt();
        assert!((var - v).abs() < 3.0 * se, "t = {}", ts.t);
        assert_eq!(ts.true_sigma, v.sqrt());
    }
}

#[test]
fn noise_and_drift_add_in_variance() {
    let s = quiet();
    let mut cfg = CampaignConfig::ideal(vec![0.5, 5.0, 50.0], 100_000, 9);
    cfg.measurement_noise = 3e-6;
    cfg.drift_velocity_std = 2e-7;
    let out = run_campaign(&cfg, &s).unwrap();
    let model = s.x_vars(0.0, &cfg.time_grid).unwrap();
    for (ts, v) in out.times.iter().zip(model) {
        let expect = v + (2e-7 * ts.t).powi(2) + 9e-12;
        let var = sample_variance(&ts.positions).unwrap();
        let se = expect * (2.0 / (cfg.runs_per_time as f64 - 1.0)).sqrt();
        assert!((var - expect).abs() < 3.0 * se, "t = {}", ts.t);
    }
}

#[test]
fn one_sigma_error_bars_cover_68_percent() {
    let s = quiet();
    let grid = vec![10.0, 100.0];
    let truth: Vec<f64> = s.x_vars(0.0, &grid).unwrap().into_iter().map(f64::sqrt).collect();
    let mut inside = 0usize;
    let mut total = 0usize;
    for seed in 0..10_000u64 {
        let cfg = CampaignConfig::ideal(grid.clone(), 100, seed);
        for (e, sigma) in campaign_curve(&cfg, &s).unwrap().iter().zip(&truth) {
            total += 1;
            if (e.sigma_hat - sigma).abs() <= e.standard_error {
                inside += 1;
            }
        }
    }
    let frac = inside as f64 / total as f64;
    assert!((frac - 0.68).abs() < 0.03, "coverage {frac}");
}

#[test]
fn ballistic_campaign_tracks_model() {
    let s = quiet();
    let cfg = CampaignConfig::ideal(vec![0.0, 20.0, 40.0, 60.0, 80.0, 100.0], 20_000, 3);
    let model = s.x_vars(0.0, &cfg.time_grid).unwrap();
    for (e, v) in campaign_curve(&cfg, &s).unwrap().iter().zip(model) {
        assert!((e.sigma_hat - v.sqrt()).abs() < 3.0 * e.standard_error);
    }
}

#[test]
fn csl_campaign_separates_from_null_model() {
    let s = quiet().with_csl_rate(1e-13).unwrap();
    let null = quiet().x_vars(0.0, &[100.0]).unwrap()[0].sqrt();
    let cfg = CampaignConfig::ideal(vec![100.0], 1000, 17);
    let e = campaign_curve(&cfg, &s).unwrap()[0];
    assert!(e.sigma_hat - null > 3.0 * e.standard_error);
}

#[test]
fn campaign_csv_is_byte_identical() {
    let cfg = RunConfig::from_pairs([("campaign.runs", "300"), ("campaign.seed", "99")]).unwrap();
    let a = commands::campaign(&cfg, Execution::Parallel, true).unwrap();
    let b = commands::campaign(&cfg, Execution::Serial, true).unwrap();
    assert_eq!(a.csv, b.csv);
    assert_eq!(a.samples_csv, b.samples_csv);
    let lines: Vec<&str> = a.samples_csv.as_deref().unwrap().lines().collect();
    assert_eq!(lines[0], "t_s,run_index,x_m");
    assert_eq!(lines.len(), 1 + 300 * 11);
}
