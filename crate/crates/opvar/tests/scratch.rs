use opvar::mle::fit_joint;
use opvar::simulate::{apply_threshold, replicate_seed, simulate_events, SimConfig};

#[test]
fn se_scaling() {
    for rep in 0..6u64 {
        let seed = replicate_seed(40, rep);
        let mut line = format!("rep {rep}:");
        for m in [5u32, 20] {
            let config = SimConfig::standard(m, seed);
            let data =
                apply_threshold(&simulate_events(&config).unwrap(), &config.schedule).unwrap();
            let fit = fit_joint(&data, None, 1e-10).unwrap();
            let se = fit.standard_errors().unwrap_or([f64::NAN; 3]);
            line += &format!(
                "  M={m}: ({:.1},{:.2},{:.2}) se=({:.1},{:.2},{:.2})",
                fit.params_hat.lambda(),
                fit.params_hat.alpha(),
                fit.params_hat.beta(),
                se[0],
                se[1],
                se[2]
            );
        }
        println!("{line}");
    }
}
