use serde_json::Value;
use ssc_web::{circle_level_set, growth_contrast, kernel_profile};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn kernel_profile_tracks_the_closed_form() {
    let v = parse(kernel_profile(2.0, 0.01));
    let value = v["value"].as_array().unwrap();
    let exact = v["exact"].as_array().unwrap();
    assert_eq!(value.len(), 501);
    let err = value.iter().zip(exact).map(|(a, b)| (a.as_f64().unwrap() - b.as_f64().unwrap()).abs()).fold(0.0, f64::max);
    assert!(err < 2e-3, "{err}");
    assert!(parse(kernel_profile(1.0, 0.05))["exact"].is_null());
}

#[test]
fn circle_perimeter_is_accurate() {
    let v = parse(circle_level_set(129, 0.3));
    assert!(v["relative_error"].as_f64().unwrap() < 0.01);
    assert_eq!(v["centroids"].as_array().unwrap().len() as u64, v["facets"].as_u64().unwrap());
}

#[test]
fn growth_contrast_separates_the_norms() {
    let v = parse(growth_contrast(64, 1.0, 4.0 / 3.0, vec![0.2, 0.025]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let c = |i: usize, k: &str| rows[i][k].as_f64().unwrap();
    assert!(c(1, "c_dual") > 0.25 * c(0, "c_dual"));
    assert!(c(1, "c_l2") < 0.5 * c(0, "c_l2"));
}

#[test]
fn bad_input_is_reported_as_json() {
    for s in [kernel_profile(2.0, 0.0), circle_level_set(4, 0.3), circle_level_set(65, 0.7), growth_contrast(64, 0.1, 2.0, vec![0.1])] {
        assert!(parse(s)["error"].is_string());
    }
}
