//! Discrete-event M/M/1 simulation as an independent oracle for the
//! analytic sojourn time used by the communication environment.

use rand::Rng;
use ranslice_core::comm::comm_delay;
use ranslice_core::rng;

fn exponential(rate: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

/// Mean sojourn time of an M/M/1 queue over `tasks` arrivals, by the
/// Lindley recursion: wait(n+1) = max(0, wait(n) + service(n) -
/// interarrival(n+1)), sojourn = wait + service.
fn simulate_mm1_mean_sojourn(arrival_rate: f64, service_rate: f64, tasks: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, "mm1");
    let mut wait = 0.0f64;
    let mut total = 0.0f64;
    for _ in 0..tasks {
        let service = exponential(service_rate, &mut rng);
        total += wait + service;
        let interarrival = exponential(arrival_rate, &mut rng);
        wait = (wait + service - interarrival).max(0.0);
    }
    total / tasks as f64
}

#[test]
fn analytic_sojourn_matches_the_event_simulation() {
    // mu = 10, lambda = 8: analytic mean sojourn 1 / (10 - 8) = 0.5 s.
    let analytic = comm_delay(10.0, 1.0, 8.0);
    assert!((analytic - 0.5).abs() < 1e-15);
    let simulated = simulate_mm1_mean_sojourn(8.0, 10.0, 100_000, 7);
    assert!(
        (simulated - analytic).abs() / analytic < 0.05,
        "simulated {simulated} vs analytic {analytic}"
    );
}

#[test]
fn agreement_holds_across_loads() {
    for (lambda, mu) in [(1.0, 2.0), (0.5, 4.0), (4.0, 10.0)] {
        let analytic = comm_delay(mu, 1.0, lambda);
        let simulated = simulate_mm1_mean_sojourn(lambda, mu, 100_000, 11);
        assert!(
            (simulated - analytic).abs() / analytic < 0.05,
            "lambda {lambda} mu {mu}: simulated {simulated} vs analytic {analytic}"
        );
    }
}
