use platoon_web::{headway_run_values, neutral_line_values, ov_curve_values};

#[test]
fn ov_curve_layout() {
    let v = ov_curve_values(7.0, 37.0, 20.0, 44.0, 88).unwrap();
    assert_eq!(v.len(), 4 * 88);
    // the 44th sample sits at h = 22
    let q = &v[4 * 43..4 * 44];
    assert_eq!(q[0], 22.0);
    assert!((q[1] - 10.0).abs() < 1e-12);
    assert!((q[3] - 10.0 / 22.0).abs() < 1e-12);
    assert!(ov_curve_values(37.0, 7.0, 20.0, 44.0, 88).is_err());
}

#[test]
fn neutral_line_marks_the_delay_band() {
    let v = neutral_line_values("two_way", 4, 0.3, 2.0, 301).unwrap();
    for pair in v.chunks(2) {
        assert_eq!(
            pair[1].is_nan(),
            (19.13..=24.87).contains(&pair[0]),
            "h = {}",
            pair[0]
        );
    }
    assert!(neutral_line_values("sideways", 4, 0.3, 0.0, 10).is_err());
}

#[test]
fn short_run_shapes_and_outcome() {
    let run = headway_run_values("none", 6, 0.6, 0.3, 0.0, 1, 300.0, 6).unwrap();
    assert_eq!(run.times().len(), 301);
    assert_eq!(run.vehicles(), 20);
    assert_eq!(run.headways().len(), 20 * 301);
    assert!(run.stabilized_at() < 300.0);
    assert!(run.oracle_max_real() < 0.0);
    assert!(headway_run_values("none", 7, 0.6, 0.3, 0.0, 1, 300.0, 6).is_err());
}
