#![no_main]

use libfuzzer_sys::fuzz_target;
use refxplain::evaluation::BenchmarkConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = BenchmarkConfig::from_toml(text) else { return };
    cfg.validate().expect("from_toml only returns validated configs");
    let back = BenchmarkConfig::from_toml(&cfg.to_toml()).expect("re-parse of serialized config");
    assert_eq!(back.to_toml(), cfg.to_toml());
});
