#![no_main]

use fsisplit::sweep::SweepPlan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(plan) = SweepPlan::from_toml_str(text) {
            let total: usize = plan.axes.iter().map(|a| a.values.len()).product();
            assert_eq!(plan.points().expect("validated").len(), total);
        }
    }
});
