//! Golden-file checks for the serialized formats.

use hplan::{
    AnchorRule, AnchorSpec, CompactSpace, Measure, Measure1D, PointedPartition, Segment,
};

#[test]
fn partition_json_matches_golden_file() {
    let space = CompactSpace::interval(0.0, 1.0).unwrap();
    let m = Measure::Line(
        Measure1D::new(
            vec![(0.0, 0.25)],
            vec![Segment { lo: 0.0, hi: 1.0, height: 0.75 }],
        )
        .unwrap(),
    );
    let p = PointedPartition::uniform_interval(&space, &m, 4, &AnchorSpec::Rule(AnchorRule::Center))
        .unwrap();
    let got = serde_json::to_string_pretty(&p).unwrap();
    let want = include_str!("fixtures/partition_k4.json");
    assert_eq!(got.trim(), want.trim());
    // and the serialized form deserializes back to an equivalent partition
    let back: PointedPartition = serde_json::from_str(&got).unwrap();
    assert_eq!(back.weights, p.weights);
    assert_eq!(back.h_bound, p.h_bound);
}
