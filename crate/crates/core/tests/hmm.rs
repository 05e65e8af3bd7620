use asymdist::hmm::{
    baum_welch, fit_pipeline, forward_backward, mixture_init, state_entropy_report,
    transition_entropy, EmConfig, HmmModel, ObservationSeries, PosteriorSummary, MIXTURE_ITERS,
};
use asymdist::{AsymmetricDensity, AsymmetricNormal, Symmetry};
use asymdist_oracle::hmm::{enumerate, PathModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn random_model(rng: &mut ChaCha8Rng, k: usize) -> HmmModel {
    let pi = random_simplex(rng, k);
    let trans = (0..k).map(|_| random_simplex(rng, k)).collect();
    let emissions = (0..k)
        .map(|_| {
            AsymmetricNormal::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(0.3..2.0),
                rng.random_range(0.1..0.9),
            )
            .unwrap()
        })
        .collect();
    HmmModel::new(pi, trans, emissions).unwrap()
}

#[test]
fn forward_backward_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for _ in 0..300 {
        let k = rng.random_range(2..=3);
        let t = rng.random_range(1..=7);
        let model = random_model(&mut rng, k);
        let mut values: Vec<Option<f64>> = (0..t)
            .map(|_| (rng.random::<f64>() > 0.25).then(|| rng.random_range(-4.0..4.0)))
            .collect();
        if values.iter().all(Option::is_none) {
            values[0] = Some(0.5);
        }
        let obs = ObservationSeries::new(values.clone()).unwrap();
        let emission: Vec<Vec<f64>> = values
            .iter()
            .map(|v| {
                model
                    .emissions()
                    .iter()
                    .map(|e| v.map_or(1.0, |x| e.pdf(x).unwrap()))
                    .collect()
            })
            .collect();
        let (ll, marg) = enumerate(&PathModel {
            pi: model.pi(),
            trans: model.trans(),
            emission: &emission,
        });
        let fb = forward_backward(&model, &obs);
        assert!(
            (fb.log_likelihood - ll).abs() < 1e-9,
            "{} vs {ll}",
            fb.log_likelihood
        );
        for (a, b) in fb.state_marginals.iter().zip(&marg) {
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn three_state_six_step_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = random_model(&mut rng, 3);
    let xs: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
    let emission: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| {
            model
                .emissions()
                .iter()
                .map(|e| e.pdf(x).unwrap())
                .collect()
        })
        .collect();
    let (ll, _) = enumerate(&PathModel {
        pi: model.pi(),
        trans: model.trans(),
        emission: &emission,
    });
    let fb = forward_backward(&model, &ObservationSeries::from_values(&xs).unwrap());
    assert!((fb.log_likelihood - ll).abs() < 1e-9);
}

fn check_stochastic(m: &HmmModel) {
    assert!((m.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for row in m.trans() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn em_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let cfg = EmConfig {
        max_iters: 200,
        ..EmConfig::default()
    };
    for run in 0..50 {
        let k = 2 + run % 2;
        let truth = random_model(&mut rng, k);
        let (_, xs) = truth.simulate(150, &mut rng);
        let values: Vec<Option<f64>> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (i % 11 != 5).then_some(x))
            .collect();
        let obs = ObservationSeries::new(values).unwrap();
        let init = random_model(&mut rng, k);
        let family = if run % 3 == 0 {
            Symmetry::Symmetric
        } else {
            Symmetry::Asymmetric
        };
        let fit = baum_welch(&init, &obs, family, &cfg).unwrap();
        for w in fit.trace.windows(2) {
            assert!(
                w[1].log_likelihood >= w[0].log_likelihood - 1e-8,
                "run {run}: {w:?}"
            );
        }
        check_stochastic(&fit.model);
        let last = fit.trace.last().unwrap().log_likelihood;
        assert_eq!(fit.log_likelihood, last.max(fit.log_likelihood));
    }
}

#[test]
fn symmetric_two_state_recovery() {
    let em = |mu: f64| AsymmetricNormal::symmetric(mu, 0.5).unwrap();
    let truth = HmmModel::new(
        vec![0.5, 0.5],
        vec![vec![0.95, 0.05], vec![0.1, 0.9]],
        vec![em(-1.0), em(1.5)],
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2000);
    let (_, xs) = truth.simulate(2000, &mut rng);
    let obs = ObservationSeries::from_values(&xs).unwrap();
    let fit = fit_pipeline(&obs, 2, Symmetry::Symmetric, &mut rng, &EmConfig::default()).unwrap();
    let mus: Vec<f64> = fit.fit.model.emissions().iter().map(|e| e.mu()).collect();
    assert!(
        (mus[0] + 1.0).abs() < 0.1 && (mus[1] - 1.5).abs() < 0.1,
        "{mus:?}"
    );
    assert!(fit.fit.model.emissions().iter().all(|e| e.p() == 0.5));
}

#[test]
fn phase_one_equals_symmetric_run() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let truth = random_model(&mut rng, 3);
    let (_, xs) = truth.simulate(400, &mut rng);
    let obs = ObservationSeries::from_values(&xs).unwrap();
    let init = mixture_init(&obs, 3, Symmetry::Symmetric, &mut rng, MIXTURE_ITERS).unwrap();
    let cfg = EmConfig::default();
    let sym = baum_welch(&init, &obs, Symmetry::Symmetric, &cfg).unwrap();
    let asym = baum_welch(&init, &obs, Symmetry::Asymmetric, &cfg).unwrap();
    let phase1: Vec<f64> = asym
        .trace
        .iter()
        .filter(|s| s.phase == 1)
        .map(|s| s.log_likelihood)
        .collect();
    let plain: Vec<f64> = sym.trace.iter().map(|s| s.log_likelihood).collect();
    assert_eq!(phase1.len(), plain.len());
    assert!(phase1
        .iter()
        .zip(&plain)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(asym.log_likelihood >= sym.log_likelihood);
}

#[test]
fn asymmetric_fit_not_worse_for_each_k() {
    let truth = asymdist::ingest::synthetic_model();
    let mut rng = ChaCha8Rng::seed_from_u64(79);
    let (_, xs) = truth.simulate(1500, &mut rng);
    let obs = ObservationSeries::from_values(&xs).unwrap();
    for k in 2..=5 {
        let sym = fit_pipeline(
            &obs,
            k,
            Symmetry::Symmetric,
            &mut ChaCha8Rng::seed_from_u64(k as u64),
            &EmConfig::default(),
        )
        .unwrap();
        let asym = fit_pipeline(
            &obs,
            k,
            Symmetry::Asymmetric,
            &mut ChaCha8Rng::seed_from_u64(k as u64),
            &EmConfig::default(),
        )
        .unwrap();
        assert_eq!(sym.init, asym.init);
        assert!(asym.fit.log_likelihood >= sym.fit.log_likelihood, "K = {k}");
    }
}

#[test]
fn mixture_init_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let noise = AsymmetricNormal::symmetric(0.0, 0.1)
        .unwrap()
        .sample(&mut rng, 200);
    let xs: Vec<f64> = noise
        .iter()
        .enumerate()
        .map(|(i, e)| if i % 3 == 0 { e - 10.0 } else { e + 10.0 })
        .collect();
    let obs = ObservationSeries::from_values(&xs).unwrap();
    for family in [Symmetry::Symmetric, Symmetry::Asymmetric] {
        let m = mixture_init(&obs, 2, family, &mut rng, MIXTURE_ITERS).unwrap();
        let mut mus: Vec<f64> = m.emissions().iter().map(|e| e.mu()).collect();
        mus.sort_by(f64::total_cmp);
        assert!(
            (mus[0] + 10.0).abs() < 0.1 && (mus[1] - 10.0).abs() < 0.1,
            "{mus:?}"
        );
        assert!(m.trans().iter().all(|row| row.as_slice() == m.pi()));
        check_stochastic(&m);
    }
    assert!(mixture_init(&obs, 1, Symmetry::Symmetric, &mut rng, 10).is_err());
    let short = ObservationSeries::from_values(&xs[..15]).unwrap();
    assert!(mixture_init(&short, 2, Symmetry::Symmetric, &mut rng, 10).is_err());
}

#[test]
fn relabelling_permutes_entropies() {
    let mut rng = ChaCha8Rng::seed_from_u64(83);
    for _ in 0..20 {
        let m = random_model(&mut rng, 4);
        let order = [2, 0, 3, 1];
        let h = transition_entropy(&m);
        let hp = transition_entropy(&m.permuted(&order));
        for (i, &o) in order.iter().enumerate() {
            assert!((hp[i] - h[o]).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_row_entropy() {
    let em = |mu: f64| AsymmetricNormal::symmetric(mu, 1.0).unwrap();
    let m = HmmModel::new(
        vec![0.2; 5],
        vec![vec![0.2; 5]; 5],
        (0..5).map(|i| em(i as f64)).collect(),
    )
    .unwrap();
    for h in transition_entropy(&m) {
        assert!((h - 5f64.log2()).abs() < 1e-15);
        assert!((h - 2.321_928).abs() < 1e-6);
    }
}

#[test]
fn missing_slot_only_changes_chaining() {
    let em = |mu: f64, p: f64| AsymmetricNormal::new(mu, 1.0, p).unwrap();
    let trans = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
    let model = HmmModel::new(
        vec![0.6, 0.4],
        trans.clone(),
        vec![em(-1.0, 0.3), em(1.0, 0.6)],
    )
    .unwrap();
    let two_step: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            (0..2)
                .map(|j| (0..2).map(|m| trans[i][m] * trans[m][j]).sum())
                .collect()
        })
        .collect();
    let squared = HmmModel::new(vec![0.6, 0.4], two_step, model.emissions().to_vec()).unwrap();
    for (x1, x2) in [(0.3, -0.4), (-2.0, 1.5), (1.0, 1.0)] {
        let gapped = forward_backward(
            &model,
            &ObservationSeries::new(vec![Some(x1), None, Some(x2)]).unwrap(),
        );
        let direct = forward_backward(
            &squared,
            &ObservationSeries::from_values(&[x1, x2]).unwrap(),
        );
        assert!((gapped.log_likelihood - direct.log_likelihood).abs() < 1e-12);
        let e = model.emissions();
        let by_hand: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| {
                model.pi()[i]
                    * e[i].pdf(x1).unwrap()
                    * squared.trans()[i][j]
                    * e[j].pdf(x2).unwrap()
            })
            .sum();
        assert!((gapped.log_likelihood - by_hand.ln()).abs() < 1e-12);
    }
}

#[test]
fn entropy_quantiles_are_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(89);
    let marg: Vec<Vec<f64>> = (0..300).map(|_| random_simplex(&mut rng, 3)).collect();
    let summary = PosteriorSummary {
        state_marginals: marg,
        log_likelihood: 0.0,
        observed: (0..300).map(|i| i % 4 != 0).collect(),
    };
    for include in [true, false] {
        let r = state_entropy_report(&summary, 3, include);
        assert_eq!(r.quantiles.len(), 99);
        assert!(r.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
        assert_eq!(r.histogram.iter().sum::<usize>(), r.normalized.len());
        assert!(r.normalized.iter().all(|&h| (0.0..=1.0).contains(&h)));
    }
}

#[test]
fn model_json_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let m = random_model(&mut rng, 3);
    let text = serde_json::to_string(&m).unwrap();
    let back: HmmModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["K"], 3);
    assert!(v["emissions"][0].get("sigma").is_some());
}
