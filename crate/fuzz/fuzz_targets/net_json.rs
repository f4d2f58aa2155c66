#![no_main]

use libfuzzer_sys::fuzz_target;
use refxplain::network::NetFile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(file) = NetFile::from_json(text) else { return };
    // anything accepted must survive a round trip and evaluate without panicking
    let back = NetFile::from_json(&file.to_json()).expect("re-parse of serialized net");
    assert_eq!(back, file);
    let x = vec![0.5; file.network.input_dim()];
    let _ = file.network.predict(&x);
});
