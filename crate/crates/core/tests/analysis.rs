use chrono::{Datelike, Duration, NaiveDate};
use dirank::analysis::{monthly_blocks, sliding_windows, BlockOutcome, WindowSpec};
use dirank::graph::{build_graph, estimate_alignment};
use dirank::ingest::PairAlignment;
use dirank::synth::{self, Network, SynthSpec};
use dirank::{EstimatorConfig, RawSeries, Region};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2008, 1, 1).unwrap()
}

fn priced(src: &[f64], dst: &[f64], step: Duration) -> (RawSeries, RawSeries) {
    (
        synth::as_price_series("src", src, Region::Other, start(), step),
        synth::as_price_series("dst", dst, Region::Other, start(), step),
    )
}

#[test]
fn stationary_windows_track_analytic_rate() {
    let spec = SynthSpec::new(10_000, 11, Network::GaussianLag { a: 1.0, sigma_w: 1.0 });
    let (s, d) = synth::gen_gaussian_lag(&spec).unwrap();
    let (a, b) = priced(&s, &d, Duration::days(1));
    let pair = PairAlignment::new(&a, &b).unwrap();
    let rows = sliding_windows(&pair, &WindowSpec { length: 2500, step: 2500 }, &EstimatorConfig::default()).unwrap();
    assert_eq!(rows.len(), 4);
    let truth = synth::analytic_gaussian_di(1.0, 1.0).unwrap();
    for r in &rows {
        let rel = (r.estimate.value - truth).abs() / truth;
        assert!(rel < 0.2, "window {} estimate {} vs {truth}", r.start, r.estimate.value);
    }
}

#[test]
fn ramped_coupling_raises_later_windows() {
    let n = 4000;
    let src = synth::noise(21, 0, n);
    let w = synth::noise(21, 1, n);
    let dst: Vec<f64> = (0..n)
        .map(|i| {
            let a = if i < n / 2 { 0.0 } else { 1.0 };
            w[i] + if i > 0 { a * src[i - 1] } else { 0.0 }
        })
        .collect();
    let (a, b) = priced(&src, &dst, Duration::days(1));
    let pair = PairAlignment::new(&a, &b).unwrap();
    let rows = sliding_windows(&pair, &WindowSpec { length: 1000, step: 500 }, &EstimatorConfig::default()).unwrap();
    assert_eq!(rows.len(), 7);
    let est: Vec<f64> = rows.iter().map(|r| r.estimate.value).collect();
    assert!(est[0] < 0.05 && est[1] < 0.05, "{est:?}");
    assert!(est[5] > 0.2 && est[6] > 0.2, "{est:?}");
    assert!(est.windows(2).filter(|w| w[1] >= w[0] - 0.03).count() == est.len() - 1, "{est:?}");
}

#[test]
fn full_length_window_equals_graph_edge() {
    let spec = SynthSpec::new(800, 4, Network::GaussianLag { a: 0.7, sigma_w: 1.0 });
    let (s, d) = synth::gen_gaussian_lag(&spec).unwrap();
    let (a, b) = priced(&s, &d, Duration::days(1));
    let cfg = EstimatorConfig::default();
    let pair = PairAlignment::new(&a, &b).unwrap();
    let rows = sliding_windows(&pair, &WindowSpec { length: pair.len(), step: 1 }, &cfg).unwrap();
    assert_eq!(rows.len(), 1);
    let g = build_graph(&[a, b], &cfg).unwrap();
    assert_eq!(rows[0].estimate.value.to_bits(), g.weights[0][1].to_bits());
    assert_eq!(rows[0].estimate, estimate_alignment(&pair, &cfg).unwrap());
}

#[test]
fn twelve_months_of_blocks_with_positive_driver() {
    // About 150 samples per month across 2008.
    let spec = SynthSpec::new(1799, 3, Network::GaussianLag { a: 1.0, sigma_w: 1.0 });
    let (s, d) = synth::gen_gaussian_lag(&spec).unwrap();
    let (a, b) = priced(&s, &d, Duration::minutes(292));
    let blocks = monthly_blocks(&[a, b], &EstimatorConfig::default(), 100);
    assert_eq!(blocks.len(), 12);
    let mut positive = 0;
    for blk in &blocks {
        let BlockOutcome::Ok { ranking, graph } = &blk.outcome else {
            panic!("{} not estimated: {:?}", blk.month, blk.outcome);
        };
        assert_eq!(ranking.scores.len(), 2);
        assert_eq!(graph.labels, ["src", "dst"]);
        if ranking.score_of("src").unwrap() > 0.0 {
            positive += 1;
        }
    }
    assert!(positive >= 10, "driver positive in {positive}/12 months");
}

#[test]
fn blocks_continue_past_short_months() {
    let spec = SynthSpec::new(400, 5, Network::IidPair);
    let (s, d) = synth::gen_iid_pair(&spec).unwrap();
    let (a, b) = priced(&s, &d, Duration::days(1));
    // Drop most of February from one series.
    let b = b.filter_keys(|t| !(t.year() == 2008 && t.month() == 2 && t.day() > 5));
    let blocks = monthly_blocks(&[a, b], &EstimatorConfig::with_fixed_order(1), 20);
    let flagged: Vec<String> = blocks
        .iter()
        .filter(|b| matches!(b.outcome, BlockOutcome::BlockTooShort { .. }))
        .map(|b| b.month.to_string())
        .collect();
    // February is cut to 5 days, and the final month only has a few samples.
    assert_eq!(flagged, ["2008-02", "2009-02"]);
    assert_eq!(blocks.len(), 14);
    assert_eq!(blocks.iter().filter(|b| matches!(b.outcome, BlockOutcome::Ok { .. })).count(), 12);
}
