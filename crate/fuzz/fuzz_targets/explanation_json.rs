#![no_main]

use libfuzzer_sys::fuzz_target;
use refxplain::attribution::Explanation;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(e) = Explanation::from_json(text) else { return };
    let json = e.to_json();
    let back = Explanation::from_json(&json).expect("re-parse of serialized explanation");
    assert_eq!(back.to_json(), json);
});
