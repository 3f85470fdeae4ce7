#![no_main]

use libfuzzer_sys::fuzz_target;
use mzqkd::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::from_toml(text) {
        cfg.link_params().validate().expect("accepted config yields valid link parameters");
        cfg.mz_config().validate().expect("accepted config yields valid shifters");
        let again = RunConfig::from_toml(&cfg.to_toml()).expect("serialized config parses");
        assert_eq!(again.to_toml(), cfg.to_toml());
    }
});
