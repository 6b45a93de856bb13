use moclab_core::forward_map::*;
use moclab_core::num::grid::log_grid;

fn main() {
    let pr = LpProfile::constant(1.0);
    let grid = log_grid(1e-8, 0.3, 8);
    let mu = mu_from_theta(&pr, &grid).unwrap();
    println!("domain_hi {}", mu.domain_hi());
    let flow = FlowFamily::from_mu(&mu);
    for &(t, x) in &[(0.25f64, 1e-4f64), (1.0, 1e-2), (1.0, 1e-6)] {
        match flow.gamma(t, x) {
            Ok(g) => {
                let exact = x.powf((-2.0 * std::f64::consts::E * t).exp());
                println!("t {t} x {x:e}: gamma {g:.12e} exact {exact:.12e}");
            }
            Err(e) => println!("t {t} x {x:e}: ERR {e}"),
        }
    }
}
