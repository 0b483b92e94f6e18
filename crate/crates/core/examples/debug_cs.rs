// scratch: off-support oracle mass at n=4 vs n=6
use recallsurv_core::model::RecallStatus;
use recallsurv_core::nonparametric::brute::*;
use recallsurv_core::simulate::{generate, Scenario};

fn main() {
    for n in [4usize, 6] {
        let mut total_frac = 0.0;
        let mut done = 0;
        let mut seed = 0u64;
        while done < 50 {
            seed += 1;
            let sc = Scenario::preset("case_a", n, 31_000 + seed).unwrap();
            let data = generate(&sc).unwrap();
            let exacts: Vec<f64> = data
                .iter()
                .filter(|r| r.event_occurred && r.recall == RecallStatus::Exact)
                .map(|r| r.observed)
                .collect();
            if exacts.is_empty() {
                continue;
            }
            let fit = match brute_force_npmle(&data, &[0.0, 3.0], &BruteOptions::default()) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let off: f64 = fit
                .intervals
                .iter()
                .zip(&fit.masses)
                .filter(|(iv, _)| {
                    !(iv.len() == 1 && iv[0].0 == iv[0].1 && exacts.contains(&iv[0].0))
                })
                .map(|(_, m)| m)
                .sum();
            total_frac += off;
            done += 1;
        }
        println!("n={n}: mean off-support mass {:.4}", total_frac / 50.0);
    }
}
