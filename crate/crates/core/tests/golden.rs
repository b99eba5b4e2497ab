use motzkin_core::groundstate::build_ground_state;
use motzkin_core::ChainSpec;

const GOLDEN: &str = include_str!("data/gs_4_1_2.txt");

#[test]
fn dump_matches_golden_file() {
    let spec = ChainSpec::uniform(4, 1, 2.0).unwrap();
    let dump = build_ground_state(&spec).unwrap().dump().unwrap();
    assert_eq!(dump, GOLDEN);
}

#[test]
fn golden_file_agrees_with_hand_areas() {
    // areas counted by hand, in units of one unit-height triangle pair
    let areas = [
        ("0 0 0 0", 0.0),
        ("0 0 l r", 1.0),
        ("0 l 0 r", 2.0),
        ("0 l r 0", 1.0),
        ("l 0 0 r", 3.0),
        ("l 0 r 0", 2.0),
        ("l l r r", 4.0),
        ("l r 0 0", 1.0),
        ("l r l r", 2.0),
    ];
    let ln2 = 2f64.ln();
    let body: Vec<(&str, f64)> = GOLDEN
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let (w, v) = l.split_once('\t').unwrap();
            (w, v.parse().unwrap())
        })
        .collect();
    assert_eq!(body.len(), areas.len());
    for ((w, lw), (hw, area)) in body.iter().zip(areas) {
        assert_eq!(*w, hw);
        assert!((lw - area * ln2).abs() < 1e-14, "{w}");
    }
    let norm2: f64 = areas.iter().map(|(_, a)| 4f64.powf(*a)).sum();
    let header = GOLDEN
        .lines()
        .find_map(|l| l.strip_prefix("# log_norm = "))
        .unwrap();
    assert!((header.parse::<f64>().unwrap() - 0.5 * norm2.ln()).abs() < 1e-14);
}
