#![no_main]

use libfuzzer_sys::fuzz_target;
use mzqkd::compensation::CompensationPlan;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = CompensationPlan::from_json(text) {
        assert!(plan.active_length <= plan.link_length);
        let again = CompensationPlan::from_json(&plan.to_json()).expect("serialized plan parses");
        assert_eq!(again.to_json(), plan.to_json());
        let _ = plan.to_text();
    }
});
