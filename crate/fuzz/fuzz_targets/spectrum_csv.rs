#![no_main]

use libfuzzer_sys::fuzz_target;
use mzqkd::spectra::CurveSamples;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(samples) = CurveSamples::from_csv(text) {
        assert!(samples.x.len() >= 2);
        assert!(samples.x.windows(2).all(|w| w[0] < w[1]));
        assert!(samples.intensity_o.iter().chain(&samples.intensity_p).all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(CurveSamples::from_csv(&samples.to_csv()).unwrap(), samples);
    }
});
