use nse_core::spatial::{class_covariances, csp_multiclass, DEFAULT_PATTERNS_PER_CLASS, DEFAULT_RIDGE};
use nse_core::synth::{generate, SynthSpec};

fn abs_cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}

#[test]
fn default_synth_top_filters_find_planted_directions() {
    let t0 = std::time::Instant::now();
    let data = generate(&SynthSpec::default()).unwrap();
    let t1 = t0.elapsed();
    let covs = class_covariances(&data.imagined, DEFAULT_RIDGE).unwrap();
    let bank = csp_multiclass(&covs, DEFAULT_PATTERNS_PER_CLASS).unwrap();
    eprintln!("generate {t1:?}, total {:?}", t0.elapsed());
    assert_eq!(bank.n_filters(), 104);
    for (c, dir) in data.truth.directions.iter().enumerate() {
        let top = bank.filter(c * DEFAULT_PATTERNS_PER_CLASS);
        let cos = abs_cos(&top, dir);
        assert!(cos > 0.95, "class {c}: |cos| = {cos}");
    }
}
