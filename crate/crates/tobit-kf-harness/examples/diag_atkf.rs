// Scratch diagnostic: step the adaptive censor-aware filter on the rotating
// two-state scenario and dump every internal quantity per step.
use tobit_kf::adaptive::AdaptiveFilter;
use tobit_kf::filter::FilterState;
use tobit_kf::scenarios;
use tobit_kf::system::simulate_stream;

fn main() {
    let cfg = scenarios::attitude();
    let traj = simulate_stream(&cfg.system, &cfg.x0_true, cfg.steps, 0, 0).unwrap();
    let mut filt = AdaptiveFilter::new(
        cfg.q0_hat.clone(),
        cfg.r0_hat.clone(),
        cfg.gamma,
        cfg.window_n,
    );
    let mut state = FilterState::new(cfg.x0_filter.clone(), cfg.psi0.clone());
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>2} {:>8} {:>8} {:>8} {:>8} {:>9} {:>8} {:>8} {:>9} {:>9} {:>8} {:>8}",
        "k", "x1", "x2", "y", "c", "xh1", "xh2", "eta", "ep", "innov", "k1", "k2", "rhat", "qtr", "trim", "sqerr"
    );
    for step in traj.iter() {
        match filt.step(
            &state,
            &cfg.system.transition,
            &cfg.system.meas,
            &step.y_obs,
            &cfg.system.censor,
            step.k - 1,
        ) {
            Ok((next, info)) => {
                let se = (step.x_true[0] - next.x[0]).powi(2)
                    + (step.x_true[1] - next.x[1]).powi(2);
                println!(
                    "{:>3} {:>8.3} {:>8.3} {:>8.3} {:>2} {:>8.3} {:>8.3} {:>8.3} {:>8.5} {:>9.4} {:>8.4} {:>8.4} {:>9.4} {:>9.5} {:>8.4} {:>8.3}",
                    step.k,
                    step.x_true[0],
                    step.x_true[1],
                    step.y_obs[0],
                    step.censored[0] as u8,
                    next.x[0],
                    next.x[1],
                    info.tobit.eta[0],
                    info.tobit.ep_diag[0],
                    info.tobit.innovation[0],
                    info.tobit.gain[(0, 0)],
                    info.tobit.gain[(1, 0)],
                    filt.r_hat_diag()[0],
                    filt.q_hat()[(0, 0)] + filt.q_hat()[(1, 1)],
                    info.trim[0],
                    se,
                );
                state = next;
            }
            Err(e) => {
                println!("step {} failed: {e:?}", step.k);
                break;
            }
        }
    }
}
