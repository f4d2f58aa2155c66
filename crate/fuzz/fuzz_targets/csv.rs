#![no_main]

use libfuzzer_sys::fuzz_target;
use refxplain::datasets::parse_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = parse_csv(data, "fuzz.csv", "target", "u") else { return };
    assert_eq!(ds.features().len(), ds.len() * ds.dim());
    assert_eq!(ds.targets().len(), ds.len());
    assert_eq!(ds.feature_names().len(), ds.dim());
    assert!(ds.features().iter().chain(ds.targets()).all(|v| v.is_finite()));
});
