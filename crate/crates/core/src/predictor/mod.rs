//! Applying a trained network: next-position prediction, rollouts, stop
//! detection and error metrics.

mod infer;
mod metrics;
mod model;

pub use infer::{predict_next, predict_stops, rollout, trace_predictions, PredictionRequest, RolloutMode, StopPrediction};
pub use metrics::{evaluate, evaluate_stops, rmse, EvaluationReport, StopEvaluation, StopMatch};
pub use model::Model;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Block, BusStop, FeatureRange, FeatureTuple, ScalerParams};
    use crate::neuralnet::{samples_from_blocks, train, HeadMode, LstmParams, TrainConfig};
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn scaler() -> ScalerParams {
        ScalerParams {
            lat: FeatureRange::new("latitude", 42.30, 42.40).unwrap(),
            lon: FeatureRange::new("longitude", 13.30, 13.45).unwrap(),
            speed: FeatureRange::new("speed", 0.0, 60.0).unwrap(),
        }
    }

    fn zero_model(mode: HeadMode, k: usize) -> Model {
        let config = TrainConfig { hidden_size: 4, k, mode, ..Default::default() };
        Model::new(LstmParams::zeros(3, 4, mode.output_size()), scaler(), config)
    }

    fn point() -> FeatureTuple {
        FeatureTuple { lat: 42.3501, lon: 13.3952, sp: 12.0 }
    }

    #[test]
    fn rmse_oracles() {
        assert_eq!(rmse(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((rmse(&[3.0, 4.0]).unwrap() - 3.5355339059327378).abs() < 1e-15);
        assert_eq!(rmse(&[-2.0]).unwrap(), 2.0);
        assert!(rmse(&[]).is_err());
        let e = [3e-4, 4e-4];
        assert!((rmse(&e).unwrap() - 3.5355339059327378e-4).abs() < 1e-18);
    }

    proptest! {
        #[test]
        fn rmse_ignores_sign_and_order(mut v in proptest::collection::vec(-1e3f64..1e3, 1..40), flips in any::<u64>()) {
            let base = rmse(&v).unwrap();
            for (i, x) in v.iter_mut().enumerate() {
                if flips >> (i % 64) & 1 == 1 {
                    *x = -*x;
                }
            }
            v.reverse();
            prop_assert!((rmse(&v).unwrap() - base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn zero_model_predicts_inverse_scaled_head_bias() {
        let mut m = zero_model(HeadMode::Regression, 4);
        m.params.head_bias.assign(&ndarray::arr1(&[0.25, 0.5, 0.1]));
        let expect = m.scaler.inverse(FeatureTuple::from_array([0.25, 0.5, 0.1]));
        let far = FeatureTuple { lat: 42.39, lon: 13.44, sp: 50.0 };
        assert_eq!(predict_next(&[point(); 3], &m).unwrap(), expect);
        assert_eq!(predict_next(&[far; 3], &m).unwrap(), expect);
        assert!(predict_next(&[point(); 2], &m).is_err());
    }

    #[test]
    fn rollout_prefixes_agree() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let params = LstmParams::init_uniform(3, 5, 3, 0.5, &mut rng);
        let m = Model::new(params, scaler(), TrainConfig { hidden_size: 5, k: 4, ..Default::default() });
        let window = vec![point(), FeatureTuple { lat: 42.351, ..point() }, FeatureTuple { lat: 42.352, ..point() }];
        let one = rollout(&PredictionRequest::next(window.clone()), &m).unwrap();
        assert_eq!(one, vec![predict_next(&window, &m).unwrap()]);
        let long = rollout(&PredictionRequest { recent_window: window.clone(), steps_ahead: 12 }, &m).unwrap();
        let short = rollout(&PredictionRequest { recent_window: window.clone(), steps_ahead: 5 }, &m).unwrap();
        assert_eq!(&long[..5], &short[..]);
        assert!(rollout(&PredictionRequest { recent_window: window, steps_ahead: 0 }, &m).is_err());
    }

    #[test]
    fn symmetric_logits_tie_to_not_stop() {
        let m = zero_model(HeadMode::Stop, 4);
        let w = [point(); 3];
        let p = predict_stops(&[&w[..]], &m).unwrap();
        assert_eq!(p[0].probability, 0.5);
        assert!(!p[0].is_stop);
        assert!(matches!(predict_stops(&[&w[..]], &zero_model(HeadMode::Regression, 4)), Err(crate::Error::ModeMismatch(_))));
    }

    #[test]
    fn evaluate_perfect_and_toy() {
        let m = zero_model(HeadMode::Regression, 3);
        let out = predict_next(&[point(); 2], &m).unwrap();
        let t = NaiveDate::from_ymd_opt(2020, 10, 1).unwrap().and_hms_opt(8, 0, 0).unwrap();
        let block = |label| Block { features: vec![point(); 2], label, is_stop: None, unit_id: "u".into(), start_time: t, end_time: t };
        let r = evaluate(&[block(out), block(out)], &m).unwrap();
        assert_eq!((r.rmse_lat, r.rmse_lon), (0.0, 0.0));
        assert!(r.mean_latency_s > 0.0);
        let r = evaluate(&[block(FeatureTuple { lat: out.lat - 3e-4, ..out }), block(FeatureTuple { lat: out.lat - 4e-4, ..out })], &m).unwrap();
        assert!((r.rmse_lat - 3.5355339e-4).abs() < 1e-10);
        assert!(evaluate(&[], &m).is_err());
        let mut csv = Vec::new();
        r.write_pred_vs_real(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("real_lat,real_lon,pred_lat,pred_lon\n"));
    }

    #[test]
    fn stationary_unit_is_learned_as_fixed_point() {
        // A constant stream cannot be min-max scaled, so the range is set by hand.
        let fixed = point();
        let t = NaiveDate::from_ymd_opt(2020, 10, 1).unwrap().and_hms_opt(8, 0, 0).unwrap();
        let blocks: Vec<Block> =
            (0..60).map(|_| Block { features: vec![fixed; 4], label: fixed, is_stop: None, unit_id: "u".into(), start_time: t, end_time: t }).collect();
        let cfg = TrainConfig { hidden_size: 6, k: 5, epochs: 150, batch_size: 10, learning_rate: 1e-2, seed: 9, ..Default::default() };
        let samples = samples_from_blocks(&blocks, &scaler(), HeadMode::Regression).unwrap();
        let (params, _) = train(&samples, &samples[..10], &cfg).unwrap();
        let m = Model::new(params, scaler(), cfg);
        let p = predict_next(&[fixed; 4], &m).unwrap();
        assert!((p.lat - fixed.lat).abs() < 1e-3 && (p.lon - fixed.lon).abs() < 1e-3, "{p:?}");
        for q in rollout(&PredictionRequest { recent_window: vec![fixed; 4], steps_ahead: 20 }, &m).unwrap() {
            assert!((q.lat - fixed.lat).abs() < 1e-3 && (q.lon - fixed.lon).abs() < 1e-3, "{q:?}");
        }
    }

    #[test]
    fn stop_scoring_against_known_stops() {
        let stops = vec![BusStop::new("A", "a", 42.35, 13.39).unwrap(), BusStop::new("B", "b", 42.36, 13.40).unwrap()];
        let at = |lat, lon, is_stop| StopPrediction { location: FeatureTuple { lat, lon, sp: 0.5 }, probability: 0.9, is_stop };
        let preds = [at(42.35005, 13.39, true), at(42.36, 13.40, false), at(42.3501, 13.39, true)];
        let e = evaluate_stops(&preds, &stops, 30.0);
        assert_eq!(e.declared, 2);
        assert_eq!((e.covered_stops, e.total_stops), (1, 2));
        assert!((e.rmse_lat - ((0.00005f64.powi(2) + 0.0001f64.powi(2)) / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn blob_round_trip_through_model() {
        let m = zero_model(HeadMode::Stop, 6);
        assert_eq!(Model::from_bytes(&m.to_bytes()).unwrap(), m);
    }
}
